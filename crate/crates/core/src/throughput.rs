//! Steady-state throughput of the unmodified local model and of each path.
//!
//! Every cycle the local service admits one batch of `b_l` samples. `s` of
//! them leave after block `lout` and rejoin before block `lin`; the local
//! device runs the bypassed blocks on the remaining `b_l - s`. On a cross
//! path the host device carries the offloaded samples alongside its own
//! batch (`b_h + s`) over `hin..=hout` and also runs both links. The two
//! devices work concurrently and meet at a per-cycle barrier, so the cycle
//! length is the slower of the two.

use serde::{Deserialize, Serialize};

use crate::model::{PathSpec, Route, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bottleneck {
    Local,
    Host,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathThroughput {
    /// Main-stream rate (samples that never left the local device).
    pub th_local: f64,
    /// Offloaded-stream rate.
    pub th_host: f64,
    /// `b_l / cycle`; equals `th_local + th_host` exactly.
    pub th_total: f64,
    pub t_local_cycle: f64,
    /// Zero for skip paths.
    pub t_host_cycle: f64,
    pub bottleneck: Bottleneck,
    /// Diagnostic: the host's own samples per second while serving this path.
    pub host_own_throughput: Option<f64>,
}

impl PathThroughput {
    pub fn cycle(&self) -> f64 {
        self.t_local_cycle.max(self.t_host_cycle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineMetrics {
    pub th_0: f64,
    pub t_0: f64,
    pub a_0: f64,
}

pub fn baseline_throughput(scenario: &Scenario) -> BaselineMetrics {
    let t_0 = scenario.local.full_batch_time();
    BaselineMetrics {
        th_0: scenario.local.batch_size as f64 / t_0,
        t_0,
        a_0: scenario.local.base_accuracy,
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ThroughputError {
    #[error("offload count s = {s} exceeds local batch size {batch_size}")]
    OffloadExceedsBatch { s: usize, batch_size: usize },
}

/// Local-device time per cycle.
///
/// Blocks are summed in index order before the skip link is added, so a
/// path that bypasses nothing reproduces the baseline time bit for bit.
fn local_cycle(scenario: &Scenario, path: &PathSpec) -> f64 {
    let b_l = scenario.local.batch_size;
    let s = scenario.offload_count;
    let skipped = path.skipped_blocks();
    let blocks: f64 = scenario
        .local
        .blocks
        .iter()
        .map(|blk| {
            if skipped.contains(&blk.index) {
                blk.time(b_l - s)
            } else {
                blk.time(b_l)
            }
        })
        .sum();
    match path.route {
        Route::Skip => blocks + scenario.skip_link_for(path.lout, path.lin).time(s),
        Route::Cross { .. } => blocks,
    }
}

/// Host-device time per cycle; zero when the path does not touch the host.
fn host_cycle(scenario: &Scenario, path: &PathSpec) -> f64 {
    let (Route::Cross { hin, hout }, Some(host)) = (path.route, &scenario.host) else {
        return 0.0;
    };
    let s = scenario.offload_count;
    let b_h = host.batch_size;
    let blocks: f64 = host
        .blocks
        .iter()
        .map(|blk| {
            if (hin..=hout).contains(&blk.index) {
                blk.time(b_h + s)
            } else {
                blk.time(b_h)
            }
        })
        .sum();
    blocks + scenario.entry_link.time(s) + scenario.exit_link.time(s)
}

fn host_standalone(scenario: &Scenario) -> Option<f64> {
    scenario
        .host
        .as_ref()
        .map(|h| h.batch_size as f64 / h.full_batch_time())
}

/// Splits `total` into `(total - part, part')` with `part' ~= part` and an exact sum.
///
/// Whichever share is at least half of `total` is kept; the other is its
/// exact difference from `total` (Sterbenz), so the two add back to `total`
/// without rounding.
fn split_exact(total: f64, part: f64) -> (f64, f64) {
    if 2.0 * part >= total {
        (total - part, part)
    } else {
        let rest = total - part;
        (rest, total - rest)
    }
}

/// Throughput of `path`. With `s = 0` nothing is rerouted and the baseline is returned.
pub fn path_throughput(
    scenario: &Scenario,
    path: &PathSpec,
) -> Result<PathThroughput, ThroughputError> {
    let b_l = scenario.local.batch_size;
    let s = scenario.offload_count;
    if s > b_l {
        return Err(ThroughputError::OffloadExceedsBatch { s, batch_size: b_l });
    }
    if s == 0 {
        let base = baseline_throughput(scenario);
        return Ok(PathThroughput {
            th_local: base.th_0,
            th_host: 0.0,
            th_total: base.th_0,
            t_local_cycle: base.t_0,
            t_host_cycle: 0.0,
            bottleneck: Bottleneck::Local,
            host_own_throughput: host_standalone(scenario),
        });
    }

    let t_local_cycle = local_cycle(scenario, path);
    let t_host_cycle = host_cycle(scenario, path);
    let (cycle, bottleneck) = if t_host_cycle > t_local_cycle {
        (t_host_cycle, Bottleneck::Host)
    } else {
        (t_local_cycle, Bottleneck::Local)
    };
    let th_total = b_l as f64 / cycle;
    let (th_local, th_host) = split_exact(th_total, s as f64 / cycle);
    let host_own_throughput = match path.route {
        Route::Cross { .. } => scenario.host.as_ref().map(|h| h.batch_size as f64 / cycle),
        Route::Skip => host_standalone(scenario),
    };
    Ok(PathThroughput {
        th_local,
        th_host,
        th_total,
        t_local_cycle,
        t_host_cycle,
        bottleneck,
        host_own_throughput,
    })
}

/// Whether a path with throughput `tp` beats the baseline.
///
/// Admission is decided on cycle time (`cycle < t_0`), which is the same
/// condition as `th_total > th_0` without the rounding of two divisions.
pub fn is_admissible(scenario: &Scenario, tp: &PathThroughput) -> bool {
    let s = scenario.offload_count;
    s > 0 && s <= scenario.local.batch_size && tp.cycle() < scenario.local.full_batch_time()
}

/// Paths whose total throughput strictly beats the baseline, in enumeration order.
pub fn admissible_paths(scenario: &Scenario) -> Vec<(PathSpec, PathThroughput)> {
    if scenario.offload_count == 0 || scenario.offload_count > scenario.local.batch_size {
        return Vec::new();
    }
    crate::model::enumerate_paths(scenario)
        .into_iter()
        .filter_map(|p| {
            let tp = path_throughput(scenario, &p).ok()?;
            is_admissible(scenario, &tp).then_some((p, tp))
        })
        .collect()
}
