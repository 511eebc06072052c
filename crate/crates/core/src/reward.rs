//! Reward of a path: a sigmoid accuracy term times the throughput gain.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PathSpec;
use crate::predictor::average_accuracy;
use crate::throughput::{BaselineMetrics, PathThroughput};

pub const DEFAULT_SLOPE: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("sigmoid slope k must be finite and > 0, got {0}")]
    Slope(f64),
    #[error("accuracy floor a_min must lie in (0, 1), got {0}")]
    Floor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Sigmoid slope per unit of accuracy fraction.
    pub k: f64,
    /// Accuracy floor set by the local operator.
    pub a_min: f64,
}

impl RewardConfig {
    pub fn new(k: f64, a_min: f64) -> Result<Self, RewardError> {
        let cfg = Self { k, a_min };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(RewardError::Slope(self.k));
        }
        if !(self.a_min > 0.0 && self.a_min < 1.0) {
            return Err(RewardError::Floor(self.a_min));
        }
        Ok(())
    }
}

/// Everything known about one evaluated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathMetrics {
    pub path: PathSpec,
    pub throughput: PathThroughput,
    pub a_p: f64,
    pub a_av: f64,
    pub accuracy_reward: f64,
    pub throughput_reward: f64,
    pub reward: f64,
}

pub fn accuracy_reward(a_av: f64, cfg: &RewardConfig) -> f64 {
    1.0 / (1.0 + (-cfg.k * (a_av - cfg.a_min)).exp())
}

pub fn throughput_reward(th_p: f64, th_0: f64) -> f64 {
    th_p - th_0
}

pub fn reward(
    path: PathSpec,
    tp: &PathThroughput,
    a_p: f64,
    baseline: &BaselineMetrics,
    cfg: &RewardConfig,
) -> PathMetrics {
    let a_av = average_accuracy(tp, baseline.a_0, a_p);
    let xi = accuracy_reward(a_av, cfg);
    let zeta = throughput_reward(tp.th_total, baseline.th_0);
    PathMetrics {
        path,
        throughput: *tp,
        a_p,
        a_av,
        accuracy_reward: xi,
        throughput_reward: zeta,
        reward: xi * zeta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::throughput::Bottleneck;

    fn cfg() -> RewardConfig {
        RewardConfig::new(100.0, 0.86).unwrap()
    }

    #[test]
    fn sigmoid_at_floor_is_half() {
        assert_eq!(accuracy_reward(0.86, &cfg()), 0.5);
    }

    #[test]
    fn sigmoid_two_units_above_floor() {
        let c = RewardConfig::new(100.0, 0.5).unwrap();
        // 0.52 - 0.5 is not exactly 0.02 in binary; compare at a loose bound
        let v = accuracy_reward(0.52, &c);
        assert!((v - 0.880_797_077_977_882_3).abs() < 1e-9, "{v}");
    }

    #[test]
    fn sigmoid_decays_towards_zero() {
        let c = RewardConfig::new(500.0, 0.86).unwrap();
        let vals: Vec<f64> = [0.8, 0.6, 0.4, 0.2, 0.0]
            .iter()
            .map(|&a| accuracy_reward(a, &c))
            .collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        assert!(vals[4] < 1e-100);
    }

    #[test]
    fn throughput_reward_examples() {
        assert_eq!(throughput_reward(10.0, 10.0), 0.0);
        assert!((throughput_reward(1.4 * 10.0, 10.0) - 4.0).abs() < 1e-12);
        assert!(throughput_reward(9.0, 10.0) < 0.0);
    }

    #[test]
    fn offload_free_path_uses_base_accuracy() {
        let tp = PathThroughput {
            th_local: 12.0,
            th_host: 0.0,
            th_total: 12.0,
            t_local_cycle: 1.0,
            t_host_cycle: 0.0,
            bottleneck: Bottleneck::Local,
            host_own_throughput: None,
        };
        let base = BaselineMetrics {
            th_0: 10.0,
            t_0: 1.2,
            a_0: 0.867,
        };
        let m = reward(PathSpec::skip(0, 2), &tp, 0.1, &base, &cfg());
        assert_eq!(m.a_av, 0.867);
        assert_eq!(m.reward, accuracy_reward(0.867, &cfg()) * 2.0);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(RewardConfig::new(0.0, 0.5).is_err());
        assert!(RewardConfig::new(1.0, 1.0).is_err());
        assert!(RewardConfig::new(1.0, 0.0).is_err());
    }
}
