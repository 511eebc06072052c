//! Domain types for block-partitioned services, links and inference paths.
//!
//! A local service of `N_l` blocks can reroute `s` samples of every batch
//! around its middle blocks, either through a contiguous segment of a host
//! service's blocks (a cross-connection) or through a single local link (a
//! skip-connection). Each route is identified by the vector
//! `[lout, hin, hout, lin]`; skip routes use the sentinel `n_f` for both
//! host coordinates so that every route lives in one metric space.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default value of the host-index sentinel used by skip paths.
pub const DEFAULT_N_F: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{service}: service has no blocks")]
    NoBlocks { service: String },
    #[error("{service}: block at position {position} carries index {index}")]
    BlockIndex {
        service: String,
        position: usize,
        index: usize,
    },
    #[error("{service}: block {index}: {reason}")]
    BlockCost {
        service: String,
        index: usize,
        reason: &'static str,
    },
    #[error("{service}: batch_size must be at least 1")]
    BatchSize { service: String },
    #[error("{service}: base_accuracy {value} is outside [0, 1]")]
    BaseAccuracy { service: String, value: f64 },
    #[error("{link} link: {reason}")]
    LinkCost { link: String, reason: &'static str },
    #[error("{link} link must be placed {expected:?}")]
    LinkPlacement {
        link: String,
        expected: LinkPlacement,
    },
    #[error("offload count s = {s} exceeds local batch size {batch_size}")]
    OffloadCount { s: usize, batch_size: usize },
    #[error("n_f = {n_f} must exceed both block counts (local {local}, host {host})")]
    Sentinel {
        n_f: usize,
        local: usize,
        host: usize,
    },
    #[error("illegal path {path}: {constraint}")]
    IllegalPath { path: String, constraint: String },
}

/// Timing of one frozen block: `tau(m) = fixed_cost + per_sample_cost * m` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockProfile {
    pub index: usize,
    pub fixed_cost: f64,
    pub per_sample_cost: f64,
}

impl BlockProfile {
    pub fn new(index: usize, fixed_cost: f64, per_sample_cost: f64) -> Self {
        Self {
            index,
            fixed_cost,
            per_sample_cost,
        }
    }

    /// Processing time for a batch of `samples`.
    #[inline]
    pub fn time(&self, samples: usize) -> f64 {
        self.fixed_cost + self.per_sample_cost * samples as f64
    }
}

/// A block-partitioned DNN service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceProfile {
    pub service_id: String,
    pub blocks: Vec<BlockProfile>,
    pub batch_size: usize,
    pub base_accuracy: f64,
}

impl ServiceProfile {
    /// Builds a service from `(fixed_cost, per_sample_cost)` pairs, indexing blocks in order.
    pub fn from_costs(
        service_id: impl Into<String>,
        costs: &[(f64, f64)],
        batch_size: usize,
        base_accuracy: f64,
    ) -> Self {
        Self {
            service_id: service_id.into(),
            blocks: costs
                .iter()
                .enumerate()
                .map(|(i, &(a, c))| BlockProfile::new(i, a, c))
                .collect(),
            batch_size,
            base_accuracy,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Time to push one full batch through every block.
    pub fn full_batch_time(&self) -> f64 {
        self.blocks.iter().map(|b| b.time(self.batch_size)).sum()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let service = || self.service_id.clone();
        if self.blocks.is_empty() {
            return Err(ModelError::NoBlocks { service: service() });
        }
        for (position, block) in self.blocks.iter().enumerate() {
            if block.index != position {
                return Err(ModelError::BlockIndex {
                    service: service(),
                    position,
                    index: block.index,
                });
            }
            if !(block.fixed_cost.is_finite() && block.fixed_cost >= 0.0) {
                return Err(ModelError::BlockCost {
                    service: service(),
                    index: position,
                    reason: "fixed cost a must be finite and >= 0",
                });
            }
            if !(block.per_sample_cost.is_finite() && block.per_sample_cost > 0.0) {
                return Err(ModelError::BlockCost {
                    service: service(),
                    index: position,
                    reason: "per-sample cost c must be finite and > 0",
                });
            }
        }
        if self.batch_size == 0 {
            return Err(ModelError::BatchSize { service: service() });
        }
        if !(0.0..=1.0).contains(&self.base_accuracy) {
            return Err(ModelError::BaseAccuracy {
                service: service(),
                value: self.base_accuracy,
            });
        }
        Ok(())
    }
}

/// Device a link executes on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkPlacement {
    OnHost,
    OnLocal,
}

/// Timing of a link module, affine in the number of samples it carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkProfile {
    pub fixed_cost: f64,
    pub per_sample_cost: f64,
    pub placement: LinkPlacement,
}

impl LinkProfile {
    pub fn on_host(fixed_cost: f64, per_sample_cost: f64) -> Self {
        Self {
            fixed_cost,
            per_sample_cost,
            placement: LinkPlacement::OnHost,
        }
    }

    pub fn on_local(fixed_cost: f64, per_sample_cost: f64) -> Self {
        Self {
            fixed_cost,
            per_sample_cost,
            placement: LinkPlacement::OnLocal,
        }
    }

    #[inline]
    pub fn time(&self, samples: usize) -> f64 {
        self.fixed_cost + self.per_sample_cost * samples as f64
    }

    fn validate(&self, link: &str, expected: LinkPlacement) -> Result<(), ModelError> {
        if !(self.fixed_cost.is_finite() && self.fixed_cost >= 0.0) {
            return Err(ModelError::LinkCost {
                link: link.to_string(),
                reason: "fixed cost a must be finite and >= 0",
            });
        }
        if !(self.per_sample_cost.is_finite() && self.per_sample_cost >= 0.0) {
            return Err(ModelError::LinkCost {
                link: link.to_string(),
                reason: "per-sample cost c must be finite and >= 0",
            });
        }
        if self.placement != expected {
            return Err(ModelError::LinkPlacement {
                link: link.to_string(),
                expected,
            });
        }
        Ok(())
    }
}

/// A skip link profile that replaces the scenario default for one `(lout, lin)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkipLinkOverride {
    pub lout: usize,
    pub lin: usize,
    pub link: LinkProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    Cross,
    Skip,
}

impl fmt::Display for ConnectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConnectionKind::Cross => "cross",
            ConnectionKind::Skip => "skip",
        })
    }
}

/// How the offloaded samples travel between `lout` and `lin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Route {
    /// Through host blocks `hin..=hout`.
    Cross { hin: usize, hout: usize },
    /// Through a single local link.
    Skip,
}

/// One alternative inference path.
///
/// Ordering is lexicographic on `(lout, hin, hout, lin)` with skip paths
/// treated as having host coordinates above every real host block. Any
/// legal `n_f` yields the same order, so it does not need to be known here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathSpec {
    pub lout: usize,
    #[serde(flatten)]
    pub route: Route,
    pub lin: usize,
}

impl PathSpec {
    pub fn cross(lout: usize, hin: usize, hout: usize, lin: usize) -> Self {
        Self {
            lout,
            route: Route::Cross { hin, hout },
            lin,
        }
    }

    pub fn skip(lout: usize, lin: usize) -> Self {
        Self {
            lout,
            route: Route::Skip,
            lin,
        }
    }

    /// Rebuilds a path from its vector. Skip paths ignore the host coordinates.
    pub fn from_vector(r: [usize; 4], kind: ConnectionKind) -> Self {
        match kind {
            ConnectionKind::Cross => Self::cross(r[0], r[1], r[2], r[3]),
            ConnectionKind::Skip => Self::skip(r[0], r[3]),
        }
    }

    pub fn kind(&self) -> ConnectionKind {
        match self.route {
            Route::Cross { .. } => ConnectionKind::Cross,
            Route::Skip => ConnectionKind::Skip,
        }
    }

    pub fn is_skip(&self) -> bool {
        matches!(self.route, Route::Skip)
    }

    /// Host segment `(hin, hout)` for cross paths.
    pub fn host_segment(&self) -> Option<(usize, usize)> {
        match self.route {
            Route::Cross { hin, hout } => Some((hin, hout)),
            Route::Skip => None,
        }
    }

    /// `[lout, hin, hout, lin]` with skip paths materialized using `n_f`.
    pub fn vector(&self, n_f: usize) -> [usize; 4] {
        let (hin, hout) = self.host_segment().unwrap_or((n_f, n_f));
        [self.lout, hin, hout, self.lin]
    }

    /// Local blocks bypassed by the offloaded samples.
    pub fn skipped_blocks(&self) -> std::ops::Range<usize> {
        (self.lout + 1)..self.lin
    }

    fn sort_key(&self) -> (usize, usize, usize, usize) {
        let (hin, hout) = self.host_segment().unwrap_or((usize::MAX, usize::MAX));
        (self.lout, hin, hout, self.lin)
    }

    /// Checks the path against the scenario's block counts.
    pub fn validate(&self, scenario: &Scenario) -> Result<(), ModelError> {
        let illegal = |constraint: String| ModelError::IllegalPath {
            path: self.to_string(),
            constraint,
        };
        let n_l = scenario.local.num_blocks();
        if self.lout >= self.lin {
            return Err(illegal(format!(
                "lout < lin violated ({} >= {})",
                self.lout, self.lin
            )));
        }
        if self.lin >= n_l {
            return Err(illegal(format!(
                "lin < N_l violated ({} >= {})",
                self.lin, n_l
            )));
        }
        if let Route::Cross { hin, hout } = self.route {
            let Some(host) = &scenario.host else {
                return Err(illegal("cross path requires a host service".into()));
            };
            let n_h = host.num_blocks();
            if hin > hout {
                return Err(illegal(format!("hin <= hout violated ({hin} > {hout})")));
            }
            if hout >= n_h {
                return Err(illegal(format!("hout < N_h violated ({hout} >= {n_h})")));
            }
        }
        Ok(())
    }
}

impl Ord for PathSpec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for PathSpec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.route {
            Route::Cross { hin, hout } => {
                write!(f, "[{},{},{},{}]", self.lout, hin, hout, self.lin)
            }
            Route::Skip => write!(f, "[{},f,f,{}]", self.lout, self.lin),
        }
    }
}

/// A local service, an optional host service, and the links between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub scenario_id: String,
    pub local: ServiceProfile,
    pub host: Option<ServiceProfile>,
    pub entry_link: LinkProfile,
    pub exit_link: LinkProfile,
    pub skip_link: LinkProfile,
    #[serde(default)]
    pub skip_overrides: Vec<SkipLinkOverride>,
    /// Samples of each local batch sent along the path (`s`).
    pub offload_count: usize,
    pub n_f: usize,
}

impl Scenario {
    /// Scenario with zero-cost links and the default sentinel.
    pub fn new(
        scenario_id: impl Into<String>,
        local: ServiceProfile,
        host: Option<ServiceProfile>,
        offload_count: usize,
    ) -> Self {
        Self {
            scenario_id: scenario_id.into(),
            local,
            host,
            entry_link: LinkProfile::on_host(0.0, 0.0),
            exit_link: LinkProfile::on_host(0.0, 0.0),
            skip_link: LinkProfile::on_local(0.0, 0.0),
            skip_overrides: Vec::new(),
            offload_count,
            n_f: DEFAULT_N_F,
        }
    }

    pub fn host_blocks(&self) -> usize {
        self.host.as_ref().map_or(0, ServiceProfile::num_blocks)
    }

    /// Skip link for the pair, honouring per-pair overrides.
    pub fn skip_link_for(&self, lout: usize, lin: usize) -> &LinkProfile {
        self.skip_overrides
            .iter()
            .find(|o| o.lout == lout && o.lin == lin)
            .map_or(&self.skip_link, |o| &o.link)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.local.validate()?;
        if let Some(host) = &self.host {
            host.validate()?;
        }
        self.entry_link.validate("entry", LinkPlacement::OnHost)?;
        self.exit_link.validate("exit", LinkPlacement::OnHost)?;
        self.skip_link.validate("skip", LinkPlacement::OnLocal)?;
        for o in &self.skip_overrides {
            let name = format!("skip override ({}, {})", o.lout, o.lin);
            o.link.validate(&name, LinkPlacement::OnLocal)?;
            PathSpec::skip(o.lout, o.lin)
                .validate(self)
                .map_err(|_| ModelError::LinkCost {
                    link: name,
                    reason: "override names an illegal (lout, lin) pair",
                })?;
        }
        if self.offload_count > self.local.batch_size {
            return Err(ModelError::OffloadCount {
                s: self.offload_count,
                batch_size: self.local.batch_size,
            });
        }
        let (local, host) = (self.local.num_blocks(), self.host_blocks());
        if self.n_f <= local || self.n_f <= host {
            return Err(ModelError::Sentinel {
                n_f: self.n_f,
                local,
                host,
            });
        }
        Ok(())
    }
}

/// Every legal path of the scenario in lexicographic `(lout, hin, hout, lin)` order.
pub fn enumerate_paths(scenario: &Scenario) -> Vec<PathSpec> {
    let n_l = scenario.local.num_blocks();
    let n_h = scenario.host_blocks();
    let mut paths = Vec::new();
    for lout in 0..n_l {
        for hin in 0..n_h {
            for hout in hin..n_h {
                for lin in (lout + 1)..n_l {
                    paths.push(PathSpec::cross(lout, hin, hout, lin));
                }
            }
        }
        for lin in (lout + 1)..n_l {
            paths.push(PathSpec::skip(lout, lin));
        }
    }
    paths
}

/// Euclidean distance between the two path vectors.
pub fn path_distance(a: &PathSpec, b: &PathSpec, n_f: usize) -> f64 {
    let (ra, rb) = (a.vector(n_f), b.vector(n_f));
    ra.iter()
        .zip(rb.iter())
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
