//! Stagewise surrogate-guided path search and its exhaustive baseline.
//!
//! Each stage predicts the accuracy of every admissible, not yet evaluated
//! path from the paths evaluated so far, scores the predictions with the
//! reward, and sends the highest-scoring path to the oracle. The search
//! stops once `c_stop` consecutive stages fail to improve the previous
//! stage's true reward by at least `epsilon`, or when nothing is left.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, PathSpec, Route, Scenario};
use crate::oracle::{AccuracyOracle, OracleError};
use crate::predictor::{predict_accuracy, EvaluatedSet};
use crate::reward::{reward, PathMetrics, RewardConfig, RewardError};
use crate::throughput::{admissible_paths, baseline_throughput, BaselineMetrics, PathThroughput};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no path improves on the baseline throughput")]
    NoAdmissiblePath,
    #[error("oracle failed on path {path}: {source}")]
    Oracle {
        path: PathSpec,
        #[source]
        source: OracleError,
    },
    #[error("exhaustive search needs {needed} evaluations, limit is {limit}")]
    EvaluationBudgetExceeded { needed: usize, limit: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error("invalid search configuration: {0}")]
    Config(String),
}

/// Which path the first stage evaluates, before any accuracy is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Bootstrap {
    /// First admissible path in enumeration order.
    #[default]
    FirstAdmissible,
    /// Admissible path adding the least compute for the offloaded samples.
    CheapestPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub reward: RewardConfig,
    pub epsilon: f64,
    pub c_stop: usize,
    pub bootstrap: Bootstrap,
    /// Stage cap; `None` means the number of admissible paths.
    pub max_stages: Option<usize>,
    /// Rebuild predicted rewards every stage (default) or keep the best
    /// prediction ever made for each path.
    pub rebuild_q: bool,
    /// Oracle call budget for the exhaustive search.
    pub max_evaluations: usize,
}

impl SearchConfig {
    pub fn new(reward: RewardConfig, epsilon: f64, c_stop: usize) -> Self {
        Self {
            reward,
            epsilon,
            c_stop,
            bootstrap: Bootstrap::default(),
            max_stages: None,
            rebuild_q: true,
            max_evaluations: 100_000,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        self.reward.validate()?;
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(SearchError::Config(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.c_stop == 0 {
            return Err(SearchError::Config("c_stop must be at least 1".into()));
        }
        if self.max_stages == Some(0) {
            return Err(SearchError::Config("max_stages must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub predicted_best: PathSpec,
    /// Absent for the bootstrap stage.
    pub predicted_reward: Option<f64>,
    pub true_accuracy: f64,
    pub true_reward: f64,
    pub c_after: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `c_stop` consecutive stages without an `epsilon` improvement.
    Converged,
    /// Every admissible path was evaluated.
    Exhausted,
    /// `max_stages` reached first.
    StageLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub baseline: BaselineMetrics,
    pub admissible_count: usize,
    pub best: PathMetrics,
    pub stages_run: usize,
    pub termination: Termination,
    pub trace: Vec<StageRecord>,
    /// Metrics of every evaluated path, in evaluation order.
    pub evaluated: Vec<PathMetrics>,
}

/// Highest true reward; ties go to the lexicographically smaller path.
pub fn best_of(metrics: &[PathMetrics]) -> Option<&PathMetrics> {
    metrics.iter().reduce(|best, m| {
        if m.reward > best.reward || (m.reward == best.reward && m.path < best.path) {
            m
        } else {
            best
        }
    })
}

fn offload_compute(scenario: &Scenario, path: &PathSpec) -> f64 {
    let s = scenario.offload_count;
    match (path.route, &scenario.host) {
        (Route::Cross { hin, hout }, Some(host)) => {
            let segment: f64 = host.blocks[hin..=hout]
                .iter()
                .map(|b| b.per_sample_cost * s as f64)
                .sum();
            segment + scenario.entry_link.time(s) + scenario.exit_link.time(s)
        }
        _ => scenario.skip_link_for(path.lout, path.lin).time(s),
    }
}

fn bootstrap_index(
    scenario: &Scenario,
    candidates: &[(PathSpec, PathThroughput)],
    rule: Bootstrap,
) -> usize {
    match rule {
        Bootstrap::FirstAdmissible => 0,
        Bootstrap::CheapestPath => {
            let mut best = 0;
            let mut best_cost = offload_compute(scenario, &candidates[0].0);
            for (i, (p, _)) in candidates.iter().enumerate().skip(1) {
                let cost = offload_compute(scenario, p);
                if cost < best_cost {
                    best = i;
                    best_cost = cost;
                }
            }
            best
        }
    }
}

fn prepare(
    scenario: &Scenario,
    cfg: &SearchConfig,
) -> Result<(BaselineMetrics, Vec<(PathSpec, PathThroughput)>), SearchError> {
    scenario.validate()?;
    cfg.validate()?;
    let candidates = admissible_paths(scenario);
    if candidates.is_empty() {
        return Err(SearchError::NoAdmissiblePath);
    }
    Ok((baseline_throughput(scenario), candidates))
}

fn evaluate<O: AccuracyOracle + ?Sized>(
    oracle: &O,
    scenario: &Scenario,
    path: &PathSpec,
) -> Result<f64, SearchError> {
    oracle
        .evaluate(path, scenario)
        .map_err(|source| SearchError::Oracle {
            path: *path,
            source,
        })
}

/// Surrogate-guided stagewise search.
pub fn code_search<O: AccuracyOracle + ?Sized>(
    scenario: &Scenario,
    oracle: &O,
    cfg: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let (baseline, candidates) = prepare(scenario, cfg)?;
    let max_stages = cfg.max_stages.unwrap_or(candidates.len());

    let mut known = EvaluatedSet::new();
    let mut done = vec![false; candidates.len()];
    let mut persisted: Vec<Option<f64>> = vec![None; candidates.len()];
    let mut evaluated = Vec::new();
    let mut trace = Vec::new();
    let (mut q_prv, mut c) = (-1.0_f64, 0_usize);

    let termination = loop {
        if c == cfg.c_stop {
            break Termination::Converged;
        }
        if evaluated.len() == candidates.len() {
            break Termination::Exhausted;
        }
        if trace.len() == max_stages {
            break Termination::StageLimit;
        }
        let stage = trace.len() + 1;

        let (pick, predicted_reward) = if known.is_empty() {
            (bootstrap_index(scenario, &candidates, cfg.bootstrap), None)
        } else {
            let mut pick: Option<(usize, f64)> = None;
            for (i, (path, tp)) in candidates.iter().enumerate() {
                if done[i] {
                    continue;
                }
                let a_hat =
                    predict_accuracy(path, &known, scenario.n_f).expect("known set is non-empty");
                let mut score = reward(*path, tp, a_hat, &baseline, &cfg.reward).reward;
                if !cfg.rebuild_q {
                    let kept = persisted[i].map_or(score, |old| old.max(score));
                    persisted[i] = Some(kept);
                    score = kept;
                }
                // candidates are in path order, so strict '>' keeps the smaller path on ties
                if pick.is_none_or(|(_, best)| score > best) {
                    pick = Some((i, score));
                }
            }
            let (i, score) = pick.expect("at least one candidate remains");
            (i, Some(score))
        };

        let (path, tp) = candidates[pick];
        let a_p = evaluate(oracle, scenario, &path)?;
        let metrics = reward(path, &tp, a_p, &baseline, &cfg.reward);
        let q = metrics.reward;
        if q - q_prv < cfg.epsilon {
            c += 1;
        } else {
            c = 0;
        }
        q_prv = q;

        known
            .push(path, a_p)
            .map_err(|e| SearchError::Config(e.to_string()))?;
        done[pick] = true;
        evaluated.push(metrics);
        trace.push(StageRecord {
            stage,
            predicted_best: path,
            predicted_reward,
            true_accuracy: a_p,
            true_reward: q,
            c_after: c,
        });
    };

    let best = *best_of(&evaluated).expect("at least one stage ran");
    Ok(SearchResult {
        baseline,
        admissible_count: candidates.len(),
        best,
        stages_run: trace.len(),
        termination,
        trace,
        evaluated,
    })
}

/// Evaluates every admissible path and returns the true-reward argmax.
pub fn brute_force<O: AccuracyOracle + ?Sized>(
    scenario: &Scenario,
    oracle: &O,
    cfg: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let (baseline, candidates) = prepare(scenario, cfg)?;
    if candidates.len() > cfg.max_evaluations {
        return Err(SearchError::EvaluationBudgetExceeded {
            needed: candidates.len(),
            limit: cfg.max_evaluations,
        });
    }
    let evaluated = candidates
        .iter()
        .map(|(path, tp)| {
            let a_p = evaluate(oracle, scenario, path)?;
            Ok(reward(*path, tp, a_p, &baseline, &cfg.reward))
        })
        .collect::<Result<Vec<_>, SearchError>>()?;
    let best = *best_of(&evaluated).expect("admissible set is non-empty");
    Ok(SearchResult {
        baseline,
        admissible_count: candidates.len(),
        best,
        stages_run: evaluated.len(),
        termination: Termination::Exhausted,
        trace: Vec::new(),
        evaluated,
    })
}
