use crate::channel::{ChannelModel, DEFAULT_GAP_TOL};
use crate::lattice::{SearchDomain, DEFAULT_NODE_BUDGET};
use crate::receivers::ReceiverKind;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub model: ChannelModel,
    /// Square QAM order.
    pub constellation_order: usize,
    pub receivers: Vec<ReceiverKind>,
    /// Strictly decreasing noise standard deviations (per complex entry).
    pub noise_std: Vec<f64>,
    pub trials_per_point: u64,
    pub base_seed: u64,
    pub gap_tol: f64,
    pub node_budget: u64,
    pub max_resamples_per_trial: u32,
    pub search_domain: SearchDomain,
    /// Target SNRs the grid was calibrated from, if any.
    pub target_snr_db: Option<Vec<f64>>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n: 1,
            model: ChannelModel::UnitModulus,
            constellation_order: 4,
            receivers: vec![ReceiverKind::LzfLinear, ReceiverKind::Ld],
            noise_std: vec![1.0],
            trials_per_point: 1000,
            base_seed: 0,
            gap_tol: DEFAULT_GAP_TOL,
            node_budget: DEFAULT_NODE_BUDGET,
            max_resamples_per_trial: 100,
            search_domain: SearchDomain::Constrained,
            target_snr_db: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n < 1 {
            return fail("n must be at least 1");
        }
        if self.trials_per_point < 1 {
            return fail("trials_per_point must be at least 1");
        }
        if self.noise_std.is_empty() {
            return fail("noise_std grid is empty");
        }
        if self.noise_std.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return fail("noise_std values must be positive and finite");
        }
        if self.noise_std.windows(2).any(|w| w[1] >= w[0]) {
            return fail("noise_std grid must be strictly decreasing");
        }
        if !(self.gap_tol > 0.0) {
            return fail("gap_tol must be positive");
        }
        if self.node_budget < 1 || self.max_resamples_per_trial < 1 {
            return fail("node_budget and max_resamples_per_trial must be positive");
        }
        for (i, r) in self.receivers.iter().enumerate() {
            if self.receivers[..i].contains(r) {
                return fail("duplicate receiver");
            }
        }
        if let ChannelModel::TruncatedGaussian { lo, hi } = self.model {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return fail("truncation bounds need 0 < lo <= hi");
            }
        }
        crate::constellation::make_qam(self.constellation_order)?;
        Ok(())
    }

    pub fn constellation_tag(&self) -> String {
        format!("qam{}", self.constellation_order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        SweepConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_grids() {
        let mut cfg = SweepConfig { noise_std: vec![1.0, 1.0], ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.noise_std = vec![0.1, 1.0];
        assert!(cfg.validate().is_err());
        cfg.noise_std = vec![1.0, -0.1];
        assert!(cfg.validate().is_err());
        cfg.noise_std = vec![1.0, 0.1];
        cfg.validate().unwrap();
        cfg.trials_per_point = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_bad_model_and_order() {
        let cfg = SweepConfig { model: ChannelModel::TruncatedGaussian { lo: 1.2, hi: 0.8 }, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig { constellation_order: 8, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig { receivers: vec![ReceiverKind::Ld, ReceiverKind::Ld], ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
