use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{AccuracyOracle, CostHint, OracleError};
use crate::model::{PathSpec, Route, Scenario};

/// Closed-form stand-in for link training.
///
/// Accuracy falls with the share of local per-sample compute that the path
/// bypasses and recovers with the share of host per-sample compute it
/// traverses. Noise is drawn from a generator seeded by `(seed, path)`, so
/// the same path always receives the same perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticOracle {
    pub base: f64,
    pub skip_penalty_alpha: f64,
    pub host_recovery_beta: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticOracle {
    pub fn new(
        base: f64,
        alpha: f64,
        beta: f64,
        sigma: f64,
        seed: u64,
    ) -> Result<Self, OracleError> {
        if !(0.0..=1.0).contains(&base) {
            return Err(OracleError::Config(format!("base {base} outside [0, 1]")));
        }
        for (name, v) in [("alpha", alpha), ("beta", beta), ("sigma", sigma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(OracleError::Config(format!(
                    "{name} must be finite and >= 0"
                )));
            }
        }
        Ok(Self {
            base,
            skip_penalty_alpha: alpha,
            host_recovery_beta: beta,
            noise_sigma: sigma,
            seed,
        })
    }

    /// Share of the local service's per-sample cost inside the bypassed blocks.
    pub fn skipped_fraction(path: &PathSpec, scenario: &Scenario) -> f64 {
        let blocks = &scenario.local.blocks;
        let total: f64 = blocks.iter().map(|b| b.per_sample_cost).sum();
        let skipped: f64 = blocks[path.skipped_blocks()]
            .iter()
            .map(|b| b.per_sample_cost)
            .sum();
        skipped / total
    }

    /// Share of the host service's per-sample cost over `hin..=hout`; zero for skip paths.
    pub fn host_fraction(path: &PathSpec, scenario: &Scenario) -> f64 {
        match (path.route, &scenario.host) {
            (Route::Cross { hin, hout }, Some(host)) => {
                let total: f64 = host.blocks.iter().map(|b| b.per_sample_cost).sum();
                let used: f64 = host.blocks[hin..=hout]
                    .iter()
                    .map(|b| b.per_sample_cost)
                    .sum();
                used / total
            }
            _ => 0.0,
        }
    }

    fn noise(&self, path: &PathSpec, n_f: usize) -> f64 {
        if self.noise_sigma == 0.0 {
            return 0.0;
        }
        let mut state = self.seed;
        for v in path.vector(n_f) {
            state = splitmix64(state ^ v as u64);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(state);
        Normal::new(0.0, self.noise_sigma)
            .expect("sigma validated at construction")
            .sample(&mut rng)
    }

    pub fn accuracy(&self, path: &PathSpec, scenario: &Scenario) -> f64 {
        let raw = self.base - self.skip_penalty_alpha * Self::skipped_fraction(path, scenario)
            + self.host_recovery_beta * Self::host_fraction(path, scenario)
            + self.noise(path, scenario.n_f);
        raw.clamp(0.0, 1.0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl AccuracyOracle for SyntheticOracle {
    fn evaluate(&self, path: &PathSpec, scenario: &Scenario) -> Result<f64, OracleError> {
        Ok(self.accuracy(path, scenario))
    }

    fn cost_hint(&self) -> CostHint {
        CostHint::Cheap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_paths, ServiceProfile};

    fn scenario() -> Scenario {
        let local = ServiceProfile::from_costs(
            "l",
            &[(0.0, 1.0), (0.0, 2.0), (0.0, 3.0), (0.0, 1.5), (0.0, 0.5)],
            8,
            0.9,
        );
        let host = ServiceProfile::from_costs("h", &[(0.0, 1.0), (0.0, 1.0), (0.0, 2.0)], 8, 0.8);
        Scenario::new("syn", local, Some(host), 2)
    }

    #[test]
    fn constant_when_all_terms_vanish() {
        let o = SyntheticOracle::new(0.77, 0.0, 0.0, 0.0, 1).unwrap();
        let s = scenario();
        for p in enumerate_paths(&s) {
            assert_eq!(o.accuracy(&p, &s), 0.77);
        }
    }

    #[test]
    fn more_skipped_compute_never_helps() {
        let o = SyntheticOracle::new(0.9, 0.6, 0.0, 0.0, 1).unwrap();
        let s = scenario();
        for lout in 0..5 {
            for lin in (lout + 2)..5 {
                let shorter = o.accuracy(&PathSpec::skip(lout, lin - 1), &s);
                let longer = o.accuracy(&PathSpec::skip(lout, lin), &s);
                assert!(longer <= shorter);
            }
        }
    }

    #[test]
    fn host_blocks_recover_accuracy() {
        let o = SyntheticOracle::new(0.6, 0.5, 0.3, 0.0, 1).unwrap();
        let s = scenario();
        let one = o.accuracy(&PathSpec::cross(0, 0, 0, 4), &s);
        let all = o.accuracy(&PathSpec::cross(0, 0, 2, 4), &s);
        let skip = o.accuracy(&PathSpec::skip(0, 4), &s);
        assert!(skip < one && one < all);
    }

    #[test]
    fn noise_is_deterministic_and_bounded() {
        let o = SyntheticOracle::new(0.5, 0.2, 0.2, 0.3, 42).unwrap();
        let s = scenario();
        for p in enumerate_paths(&s) {
            let a = o.accuracy(&p, &s);
            assert_eq!(a.to_bits(), o.accuracy(&p, &s).to_bits());
            assert!((0.0..=1.0).contains(&a));
        }
        let other = SyntheticOracle { seed: 43, ..o };
        let p = PathSpec::cross(0, 1, 2, 3);
        assert_ne!(o.accuracy(&p, &s), other.accuracy(&p, &s));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SyntheticOracle::new(1.5, 0.0, 0.0, 0.0, 0).is_err());
        assert!(SyntheticOracle::new(0.5, -1.0, 0.0, 0.0, 0).is_err());
        assert!(SyntheticOracle::new(0.5, 0.0, 0.0, f64::NAN, 0).is_err());
    }
}
