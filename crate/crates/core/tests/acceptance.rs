//! End-to-end acceptance checks. Run with
//! `cargo test -p ia-core --test acceptance`; one `[PASS]`/`[FAIL]` line is
//! printed per criterion and the binary exits nonzero if any criterion fails.
//!
//! CSV and SVG artifacts of the SER sweeps land in
//! `target/tmp/acceptance/`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use ia_core::channel::ChannelModel;
use ia_core::cli::emit_plot;
use ia_core::constellation::{make_qam, make_sum_set, Constellation};
use ia_core::harness::{calibrate_noise_grid, run_sweep, run_sweep_with_threads, write_csv, SweepConfig, SweepResult, UserSel};
use ia_core::lattice::{residual_sq, SearchDomain, DEFAULT_NODE_BUDGET};
use ia_core::linalg::{embed_matrix, embed_vector, CMat, CVec};
use ia_core::mimo::{build_equivalent, transmit, EquivalentChannel, TransmitBlock};
use ia_core::precoding::{build_precoders, PrecoderSet};
use ia_core::receivers::{build_projector, glrt_metric, LatticeDecoder, ReceiverKind};
use ia_core::rng::{derive_seed, stream_rng};
use ia_core::C64;

const TRUNC_WIDE: ChannelModel = ChannelModel::TruncatedGaussian { lo: 0.8, hi: 1.4 };
const TRUNC_NARROW: ChannelModel = ChannelModel::TruncatedGaussian { lo: 0.8, hi: 1.2 };

struct Outcome {
    passed: bool,
    summary: String,
}

fn artifact_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).expect("create artifact dir");
    dir
}

fn qam4() -> Constellation {
    make_qam(4).unwrap()
}

struct Instance {
    h: [[Vec<C64>; 3]; 3],
    precoders: PrecoderSet,
    equivalent: [EquivalentChannel; 3],
    channel: ia_core::channel::ChannelRealization,
    redraws: u32,
}

/// Realization `index` of `model`, redrawing unusable channels.
fn instance(model: ChannelModel, n: usize, seed: u64, index: u64) -> Instance {
    let base = derive_seed(seed, index);
    for attempt in 0..1000u32 {
        let channel = model.sample(n, derive_seed(base, attempt as u64)).unwrap();
        let Ok(precoders) = build_precoders(&channel, 1e-9) else { continue };
        let eq: Result<Vec<_>, _> = (1..=3).map(|k| build_equivalent(&channel, &precoders, k)).collect();
        let Ok(eq) = eq else { continue };
        let h = std::array::from_fn(|r| std::array::from_fn(|t| channel.link(r + 1, t + 1).to_vec()));
        return Instance { h, precoders, equivalent: eq.try_into().unwrap(), channel, redraws: attempt };
    }
    panic!("no usable channel for instance {index}");
}

fn diag(d: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(d))
}

fn rel_fro(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

fn drop_first_col(m: &CMat) -> CMat {
    m.columns(1, m.ncols() - 1).into_owned()
}

fn drop_last_col(m: &CMat) -> CMat {
    m.columns(0, m.ncols() - 1).into_owned()
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let c = qam4();
    let mut worst_align = 0.0f64;
    let mut worst_equiv = 0.0f64;
    let mut redraws = 0u32;
    let mut count = 0u32;
    for model in [ChannelModel::UnitModulus, TRUNC_WIDE, TRUNC_NARROW] {
        for n in [1, 5, 10] {
            for i in 0..1000 {
                let inst = instance(model, n, 101, i);
                redraws += inst.redraws;
                count += 1;
                let h = &inst.h;
                let (v1, v2, v3) = (&inst.precoders.v1, &inst.precoders.v2, &inst.precoders.v3);
                let residuals = [
                    rel_fro(&(diag(&h[0][1]) * v2), &(diag(&h[0][2]) * v3)),
                    rel_fro(&(diag(&h[1][2]) * v3), &(diag(&h[1][0]) * drop_last_col(v1))),
                    rel_fro(&(diag(&h[2][1]) * v2), &(diag(&h[2][0]) * drop_first_col(v1))),
                ];
                worst_align = residuals.into_iter().fold(worst_align, f64::max);

                let blk = TransmitBlock::random(&c, n, &mut stream_rng(derive_seed(7, i), 1));
                let v = [v1, v2, v3];
                for k in 0..3 {
                    let direct = (0..3).fold(CVec::zeros(2 * n + 1), |acc, j| {
                        acc + diag(&h[k][j]) * v[j] * CVec::from_column_slice(&blk.x[j])
                    });
                    let equivalent = &inst.equivalent[k].g_full * blk.stacked(k + 1);
                    let scale = direct.norm().max(equivalent.norm());
                    worst_equiv = worst_equiv.max((direct - equivalent).norm() / scale);
                }
            }
        }
    }
    Outcome {
        passed: worst_align <= 1e-10 && worst_equiv <= 1e-10,
        summary: format!(
            "alignment exactness: {count} realizations (3 models x n in {{1,5,10}}), worst alignment residual {worst_align:.2e}, worst received-signal mismatch {worst_equiv:.2e} (tol 1e-10), {redraws} redraws"
        ),
    }
}

// ---------------------------------------------------------------------------

/// Exhaustive minimum over `C^(n+1) x C'^n` for receiver 1, evaluated with the
/// same residual routine as the decoder. Returns `(min distance, minimizer,
/// number of candidates attaining it)`.
fn exhaustive_receiver1(eq: &EquivalentChannel, y: &CVec, c: &Constellation, n: usize) -> (f64, Vec<f64>, usize) {
    let sums = make_sum_set(c);
    let single: Vec<C64> = (0..c.len()).map(|i| c.point(i)).collect();
    let sum: Vec<C64> = sums.points().iter().map(|p| C64::new(p.re as f64, p.im as f64)).collect();
    let sets: Vec<&[C64]> = (0..2 * n + 1).map(|col| if col <= n { &single[..] } else { &sum[..] }).collect();
    let basis = embed_matrix(&eq.g_full);
    let obs = embed_vector(y);
    let mut idx = vec![0usize; sets.len()];
    let mut best = (f64::INFINITY, vec![], 0usize);
    loop {
        let x = CVec::from_iterator(sets.len(), idx.iter().zip(&sets).map(|(&i, s)| s[i]));
        let s: Vec<f64> = embed_vector(&x).iter().copied().collect();
        let d = residual_sq(&basis, &obs, &s);
        if d < best.0 {
            best = (d, s, 1);
        } else if d == best.0 {
            best.2 += 1;
        }
        let mut pos = 0;
        loop {
            if pos == sets.len() {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] < sets[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn criterion_2() -> Outcome {
    let c = qam4();
    let cs = make_sum_set(&c);
    let mut distance_mismatches = 0;
    let mut decision_mismatches = 0;
    let mut ties = 0;
    let mut candidates = [0usize; 2];
    for (slot, n) in [1usize, 2].into_iter().enumerate() {
        for i in 0..1000 {
            let inst = instance(ChannelModel::UnitModulus, n, 202, i);
            let blk = TransmitBlock::random(&c, n, &mut stream_rng(derive_seed(203, i), 1));
            let sigma = [0.2, 0.6, 1.2][i as usize % 3];
            let y = transmit(&inst.channel, &inst.precoders, &blk, sigma, derive_seed(204, i));
            let eq = &inst.equivalent[0];
            let (d, s, count) = exhaustive_receiver1(eq, &y[0], &c, n);
            candidates[slot] = 4usize.pow(n as u32 + 1) * 9usize.pow(n as u32);
            let sd = LatticeDecoder::new(eq, &c, &cs, SearchDomain::Constrained, DEFAULT_NODE_BUDGET)
                .unwrap()
                .search(&y[0])
                .unwrap();
            if sd.sq_distance != d {
                distance_mismatches += 1;
            }
            if count == 1 && sd.solution != s {
                decision_mismatches += 1;
            }
            ties += (count > 1) as u32;
        }
    }
    Outcome {
        passed: distance_mismatches == 0 && decision_mismatches == 0,
        summary: format!(
            "oracle equivalence: 1000 instances at n=1 ({} candidates) and 1000 at n=2 ({} candidates), {distance_mismatches} distance mismatches, {decision_mismatches} decision mismatches among unique minimizers, {ties} ties",
            candidates[0], candidates[1]
        ),
    }
}

// ---------------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let c = qam4();
    let mut worst = 0.0f64;
    for i in 0..1000u64 {
        let n = [1usize, 2, 5][i as usize % 3];
        let k = (i / 3 % 3) as usize;
        let inst = instance(ChannelModel::UnitModulus, n, 303, i);
        let blk = TransmitBlock::random(&c, n, &mut stream_rng(derive_seed(304, i), 1));
        let y = transmit(&inst.channel, &inst.precoders, &blk, 0.5, derive_seed(305, i));
        let eq = &inst.equivalent[k];
        let candidate = TransmitBlock::random(&c, n, &mut stream_rng(derive_seed(306, i), 1));
        let x = &candidate.x[k];
        // inner step: unconstrained least squares for the interference, via SVD
        let r = &y[k] - eq.g_desired() * CVec::from_column_slice(x);
        let g2 = eq.g_interf();
        let z = g2.clone().svd(true, true).solve(&r, 0.0).unwrap();
        let two_stage = (&r - &g2 * z).norm_squared();
        let projected = glrt_metric(&y[k], eq, &build_projector(eq).unwrap(), x);
        worst = worst.max((two_stage - projected).abs() / two_stage.max(projected));
    }
    Outcome {
        passed: worst <= 1e-8,
        summary: format!("GLRT identity: 1000 (instance, candidate) pairs at n in {{1,2,5}}, worst relative gap {worst:.2e} (tol 1e-8)"),
    }
}

// ---------------------------------------------------------------------------

fn sweep(cfg: SweepConfig, targets: &[f64], name: &str) -> SweepResult {
    let mut cfg = cfg;
    cfg.noise_std = calibrate_noise_grid(&cfg, targets, cfg.trials_per_point).unwrap();
    cfg.target_snr_db = Some(targets.to_vec());
    let started = Instant::now();
    let res = run_sweep(&cfg).unwrap();
    let csv = artifact_dir().join(format!("{name}.csv"));
    write_csv(&res, &csv).unwrap();
    println!(
        "    ({name}: {} trials/point, {} grid points, {:.0?}, {} budget-limited decodes, {} redraws)",
        res.trials_completed,
        res.points.len(),
        started.elapsed(),
        res.budget_exceeded_count,
        res.resample_count
    );
    res
}

fn ser_at(res: &SweepResult, point: usize, r: ReceiverKind) -> f64 {
    res.points[point].cell(r, UserSel::All).unwrap().ser
}

fn grid(start: f64, step: f64, stop: f64) -> Vec<f64> {
    (0..).map(|i| start + step * i as f64).take_while(|&x| x <= stop + 1e-9).collect()
}

fn criterion_4(fig1: &SweepResult) -> Outcome {
    let ld = ReceiverKind::Ld;
    let lzf = ReceiverKind::LzfLinear;
    // (a) lowest grid SNR in [18, 28] dB where LD reaches 3e-3
    let hit = fig1
        .points
        .iter()
        .enumerate()
        .find(|(i, p)| (18.0..=28.0).contains(&p.measured_snr_db) && ser_at(fig1, *i, ld) <= 3e-3);
    let (a, b, at) = match hit {
        Some((i, p)) => {
            let (l, z) = (ser_at(fig1, i, ld), ser_at(fig1, i, lzf));
            (true, z >= 10.0 * l && z > 0.0, format!("at {:.2} dB LD {:.2e}, LZF {:.2e}", p.measured_snr_db, l, z))
        }
        None => (false, false, "LD never reaches 3e-3 in [18, 28] dB".to_string()),
    };

    // (c) n = 10 against n = 5 at the mid-range point of the grid
    let mid = fig1.points.len() / 2;
    let mid_snr = fig1.points[mid].measured_snr_db;
    let n10 = sweep(
        SweepConfig {
            n: 10,
            receivers: vec![lzf, ReceiverKind::LzfGlrt, ld],
            trials_per_point: 1000,
            base_seed: 4,
            node_budget: 1_000_000,
            ..Default::default()
        },
        &[mid_snr],
        "fig1_unit_n10_mid",
    );
    let _ = emit_plot(
        &[artifact_dir().join("fig1_unit_n5.csv"), artifact_dir().join("fig1_unit_n10_mid.csv")],
        &artifact_dir().join("fig1.svg"),
    );
    let cmp: Vec<(ReceiverKind, f64, f64)> =
        [lzf, ld].into_iter().map(|r| (r, ser_at(fig1, mid, r), ser_at(&n10, 0, r))).collect();
    let c = cmp.iter().all(|&(_, s5, s10)| s10 >= s5);
    let cmp_text: Vec<String> =
        cmp.iter().map(|(r, s5, s10)| format!("{} n=5 {:.2e} vs n=10 {:.2e}", r.name(), s5, s10)).collect();

    Outcome {
        passed: a && b && c,
        summary: format!(
            "unit-modulus reproduction: (a) {} (b) {} (c) {}; {at}; at {mid_snr:.2} dB {}",
            pf(a),
            pf(b),
            pf(c),
            cmp_text.join(", ")
        ),
    }
}

fn criterion_5() -> Outcome {
    let targets = grid(32.0, 1.0, 38.0);
    let cfg = |model| SweepConfig {
        n: 5,
        model,
        receivers: vec![ReceiverKind::LzfLinear, ReceiverKind::LzfGlrt, ReceiverKind::Ld],
        trials_per_point: 20_000,
        base_seed: 5,
        ..Default::default()
    };
    let wide = sweep(cfg(TRUNC_WIDE), &targets, "fig2_trunc_0.8_1.4_n5");
    let narrow = sweep(cfg(TRUNC_NARROW), &targets, "fig2_trunc_0.8_1.2_n5");
    let _ = emit_plot(
        &[artifact_dir().join("fig2_trunc_0.8_1.4_n5.csv"), artifact_dir().join("fig2_trunc_0.8_1.2_n5.csv")],
        &artifact_dir().join("fig2.svg"),
    );
    let mut lines = Vec::new();
    let mut any = false;
    for (i, p) in wide.points.iter().enumerate() {
        let (ld_w, lzf_w, ld_n) = (
            ser_at(&wide, i, ReceiverKind::Ld),
            ser_at(&wide, i, ReceiverKind::LzfLinear),
            ser_at(&narrow, i, ReceiverKind::Ld),
        );
        let ok = ld_w <= 3e-2 && lzf_w >= 0.1 && ld_n < ld_w;
        any |= ok;
        lines.push(format!(
            "{:.0} dB: LD {:.2e} / LZF {:.2e} / LD[0.8,1.2] {:.2e} {}",
            p.measured_snr_db,
            ld_w,
            lzf_w,
            ld_n,
            if ok { "ok" } else { "no" }
        ));
    }
    Outcome {
        passed: any,
        summary: format!("truncated-model reproduction at 35+-3 dB: {}", lines.join("; ")),
    }
}

fn criterion_6() -> Outcome {
    let mut cfg = SweepConfig {
        n: 2,
        model: TRUNC_WIDE,
        receivers: ReceiverKind::ALL.to_vec(),
        trials_per_point: 400,
        base_seed: 6,
        ..Default::default()
    };
    cfg.noise_std = calibrate_noise_grid(&cfg, &[5.0, 15.0, 25.0], cfg.trials_per_point).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, threads) in [1usize, 2, 4, 1].into_iter().enumerate() {
        let res = run_sweep_with_threads(&cfg, threads).unwrap();
        let path = dir.path().join(format!("run{i}.csv"));
        write_csv(&res, &path).unwrap();
        files.push(std::fs::read(&path).unwrap());
    }
    let identical = files.windows(2).all(|w| w[0] == w[1]);
    Outcome {
        passed: identical && !files[0].is_empty(),
        summary: format!(
            "determinism: 4 runs with 1, 2, 4 and 1 threads, CSVs {} ({} bytes)",
            if identical { "byte-identical" } else { "differ" },
            files[0].len()
        ),
    }
}

fn criterion_7(fig1: &SweepResult) -> Outcome {
    let mut violations = Vec::new();
    for r in fig1.config.receivers.iter().copied() {
        let curve = fig1.curve(r);
        for i in 0..curve.len() {
            for j in i + 1..curve.len() {
                let (lo_snr, a) = curve[i];
                let (hi_snr, b) = curve[j];
                if b.ser > a.ser && b.ci_low > a.ci_high {
                    violations.push(format!("{} {:.0}->{:.0} dB", r.name(), lo_snr, hi_snr));
                }
            }
        }
    }
    Outcome {
        passed: violations.is_empty(),
        summary: format!(
            "statistical sanity: {} receivers x {} grid points, {} significant SER increases{}",
            fig1.config.receivers.len(),
            fig1.points.len(),
            violations.len(),
            if violations.is_empty() { String::new() } else { format!(" ({})", violations.join(", ")) }
        ),
    }
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn report(number: usize, outcome: &Outcome) {
    println!("[{}] criterion {number}: {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.summary);
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let mut run = |number: usize, f: &mut dyn FnMut() -> Outcome| {
        let outcome = f();
        report(number, &outcome);
        results.push(outcome.passed);
    };

    run(1, &mut criterion_1);
    run(2, &mut criterion_2);
    run(3, &mut criterion_3);

    let fig1 = sweep(
        SweepConfig {
            n: 5,
            receivers: vec![ReceiverKind::LzfLinear, ReceiverKind::LzfGlrt, ReceiverKind::Ld],
            trials_per_point: 20_000,
            base_seed: 4,
            ..Default::default()
        },
        &grid(0.0, 2.0, 40.0),
        "fig1_unit_n5",
    );
    run(4, &mut || criterion_4(&fig1));
    run(5, &mut criterion_5);
    run(6, &mut criterion_6);
    run(7, &mut || criterion_7(&fig1));

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
