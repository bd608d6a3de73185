/// Two-sided 97.5% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score 95% interval for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}
