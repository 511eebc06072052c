//! Inverse-distance-weighted accuracy surrogate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{path_distance, PathSpec};
use crate::throughput::{BaselineMetrics, PathThroughput};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error("cannot predict from an empty evaluated set")]
    EmptyKnownSet,
    #[error("path {0} is already in the evaluated set")]
    Duplicate(String),
    #[error("accuracy {0} outside [0, 1]")]
    Range(f64),
}

/// Paths whose true accuracy is known, in evaluation order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSet {
    entries: Vec<(PathSpec, f64)>,
}

impl EvaluatedSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, path: PathSpec, accuracy: f64) -> Result<(), PredictError> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(PredictError::Range(accuracy));
        }
        if self.contains(&path) {
            return Err(PredictError::Duplicate(path.to_string()));
        }
        self.entries.push((path, accuracy));
        Ok(())
    }

    pub fn contains(&self, path: &PathSpec) -> bool {
        self.entries.iter().any(|(p, _)| p == path)
    }

    pub fn get(&self, path: &PathSpec) -> Option<f64> {
        self.entries
            .iter()
            .find(|(p, _)| p == path)
            .map(|&(_, a)| a)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(PathSpec, f64)> {
        self.entries.iter()
    }
}

impl FromIterator<(PathSpec, f64)> for EvaluatedSet {
    /// Collects without validation; later duplicates are dropped.
    fn from_iter<I: IntoIterator<Item = (PathSpec, f64)>>(iter: I) -> Self {
        let mut set = Self::new();
        for (p, a) in iter {
            if !set.contains(&p) {
                set.entries.push((p, a));
            }
        }
        set
    }
}

/// `sum(a_i / d_i) / sum(1 / d_i)` over `(distance, accuracy)` pairs with positive distances.
///
/// The result is clamped to the hull of the inputs: rounding in the two
/// sums can otherwise land one ulp outside it.
pub fn inverse_distance_mean(points: &[(f64, f64)]) -> Option<f64> {
    if points.is_empty() {
        return None;
    }
    let (mut num, mut den) = (0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(d, a) in points {
        let w = 1.0 / d;
        num += w * a;
        den += w;
        lo = lo.min(a);
        hi = hi.max(a);
    }
    Some((num / den).clamp(lo, hi))
}

/// Predicted accuracy of `candidate`; a path already in `known` gets its stored value.
pub fn predict_accuracy(
    candidate: &PathSpec,
    known: &EvaluatedSet,
    n_f: usize,
) -> Result<f64, PredictError> {
    if known.is_empty() {
        return Err(PredictError::EmptyKnownSet);
    }
    let target = candidate.vector(n_f);
    let mut points = Vec::with_capacity(known.len());
    for (p, a) in known.iter() {
        if p.vector(n_f) == target {
            return Ok(*a);
        }
        points.push((path_distance(candidate, p, n_f), *a));
    }
    Ok(inverse_distance_mean(&points).expect("known set is non-empty"))
}

/// Throughput-weighted blend of the base accuracy and the path accuracy.
pub fn average_accuracy(tp: &PathThroughput, a_0: f64, a_p: f64) -> f64 {
    (tp.th_local * a_0 + tp.th_host * a_p) / tp.th_total
}

/// Predicted average accuracy for a candidate given its predicted path accuracy.
pub fn predict_average_accuracy(
    predicted_a: f64,
    tp: &PathThroughput,
    baseline: &BaselineMetrics,
) -> f64 {
    average_accuracy(tp, baseline.a_0, predicted_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::throughput::Bottleneck;

    fn tp(th_local: f64, th_host: f64) -> PathThroughput {
        PathThroughput {
            th_local,
            th_host,
            th_total: th_local + th_host,
            t_local_cycle: 1.0,
            t_host_cycle: 1.0,
            bottleneck: Bottleneck::Local,
            host_own_throughput: None,
        }
    }

    fn base(a_0: f64) -> BaselineMetrics {
        BaselineMetrics {
            th_0: 1.0,
            t_0: 1.0,
            a_0,
        }
    }

    #[test]
    fn single_known_point_predicts_everywhere() {
        let known: EvaluatedSet = [(PathSpec::cross(0, 1, 1, 5), 0.8)].into_iter().collect();
        for c in [
            PathSpec::cross(0, 1, 2, 5),
            PathSpec::skip(2, 3),
            PathSpec::cross(4, 0, 5, 5),
        ] {
            assert_eq!(predict_accuracy(&c, &known, 100).unwrap(), 0.8);
        }
    }

    #[test]
    fn equal_distances_average() {
        let known: EvaluatedSet = [
            (PathSpec::cross(0, 1, 1, 5), 0.8),
            (PathSpec::cross(0, 1, 3, 5), 0.9),
        ]
        .into_iter()
        .collect();
        let a = predict_accuracy(&PathSpec::cross(0, 1, 2, 5), &known, 100).unwrap();
        assert!((a - 0.85).abs() < 1e-12);
    }

    #[test]
    fn unequal_distances_weighted() {
        let known: EvaluatedSet = [
            (PathSpec::cross(0, 1, 1, 5), 0.8),
            (PathSpec::cross(0, 1, 5, 5), 0.9),
        ]
        .into_iter()
        .collect();
        let a = predict_accuracy(&PathSpec::cross(0, 1, 2, 5), &known, 100).unwrap();
        assert!((a - 0.825).abs() < 1e-12);
    }

    #[test]
    fn known_path_is_reproduced() {
        let known: EvaluatedSet = [
            (PathSpec::cross(0, 1, 1, 5), 0.8123456789),
            (PathSpec::skip(0, 5), 0.61),
        ]
        .into_iter()
        .collect();
        assert_eq!(
            predict_accuracy(&PathSpec::skip(0, 5), &known, 100).unwrap(),
            0.61
        );
    }

    #[test]
    fn empty_set_is_an_error() {
        assert_eq!(
            predict_accuracy(&PathSpec::skip(0, 1), &EvaluatedSet::new(), 100),
            Err(PredictError::EmptyKnownSet)
        );
    }

    #[test]
    fn evaluated_set_rejects_duplicates_and_range() {
        let mut set = EvaluatedSet::new();
        set.push(PathSpec::skip(0, 1), 0.5).unwrap();
        assert!(matches!(
            set.push(PathSpec::skip(0, 1), 0.6),
            Err(PredictError::Duplicate(_))
        ));
        assert!(matches!(
            set.push(PathSpec::skip(0, 2), 1.2),
            Err(PredictError::Range(_))
        ));
    }

    #[test]
    fn average_accuracy_examples() {
        assert!((predict_average_accuracy(0.7, &tp(3.0, 1.0), &base(0.9)) - 0.85).abs() < 1e-12);
        assert_eq!(
            predict_average_accuracy(0.1, &tp(2.0, 0.0), &base(0.9)),
            0.9
        );
        assert!((predict_average_accuracy(0.6, &tp(1.5, 1.5), &base(0.8)) - 0.7).abs() < 1e-12);
    }
}
