//! Discrete-event simulation of the local and host batch pipelines.
//!
//! Two devices, each running one task at a time. A task is one block (or
//! link) applied to one batch. The local device admits a new batch of
//! `b_l` whenever it would otherwise idle; on a path run `s` samples fork
//! after block `lout` and must be back before block `lin` of the same
//! batch. On a cross path host batch `j` carries the offloaded samples of
//! local batch `j` over `hin..=hout`. Ready tasks are served oldest batch
//! first, so the steady-state rate is set by whichever device has more
//! work per batch.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::model::{PathSpec, Route, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    /// `None` simulates the unmodified local model.
    pub path: Option<PathSpec>,
    pub n_batches: usize,
    pub warmup_batches: usize,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("n_batches must exceed warmup_batches ({n_batches} <= {warmup_batches})")]
    Window {
        n_batches: usize,
        warmup_batches: usize,
    },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub measured_th_total: f64,
    pub measured_th_local: f64,
    pub measured_th_host: f64,
    /// Busy share of each local block over the whole run.
    pub local_block_busy: Vec<f64>,
    pub host_block_busy: Vec<f64>,
    pub host_own_throughput: Option<f64>,
    pub completed_batches: usize,
    /// Batches inside the measurement window.
    pub measured_batches: usize,
    pub samples_admitted: u64,
    pub samples_completed: u64,
    pub makespan: f64,
    pub event_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Device {
    Local = 0,
    Host = 1,
}

/// Work item kinds in the order a device prefers them within one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Op {
    LocalBlock(usize),
    SkipLink,
    EntryLink,
    HostBlock(usize),
    ExitLink,
}

impl Op {
    fn device(self) -> Device {
        match self {
            Op::LocalBlock(_) | Op::SkipLink => Device::Local,
            Op::EntryLink | Op::HostBlock(_) | Op::ExitLink => Device::Host,
        }
    }

    /// Block index used for equal-time tie breaking; links sort after blocks.
    fn block_key(self) -> usize {
        match self {
            Op::LocalBlock(i) | Op::HostBlock(i) => i,
            Op::SkipLink | Op::EntryLink => usize::MAX - 1,
            Op::ExitLink => usize::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Task {
    batch: usize,
    op: Op,
}

#[derive(Debug, Clone, Copy)]
struct Completion {
    time: f64,
    task: Task,
}

impl Completion {
    fn key(&self) -> (Device, usize, usize) {
        (
            self.task.op.device(),
            self.task.op.block_key(),
            self.task.batch,
        )
    }
}

impl PartialEq for Completion {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Completion {}

impl Ord for Completion {
    // reversed: BinaryHeap is a max-heap and we want the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.key().cmp(&self.key()))
    }
}

impl PartialOrd for Completion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct LocalBatch {
    middle_done: bool,
    detour_done: bool,
}

#[derive(Debug, Default, Clone, Copy)]
struct HostBatch {
    prefix_done: bool,
    entry_done: bool,
}

struct DeviceState {
    ready: BTreeSet<Task>,
    busy: bool,
    admitted: usize,
    completions: Vec<f64>,
}

impl DeviceState {
    fn new() -> Self {
        Self {
            ready: BTreeSet::new(),
            busy: false,
            admitted: 0,
            completions: Vec::new(),
        }
    }
}

struct Sim<'a> {
    scenario: &'a Scenario,
    path: Option<PathSpec>,
    n_batches: usize,
    now: f64,
    events: BinaryHeap<Completion>,
    event_count: u64,
    local: DeviceState,
    host: DeviceState,
    local_batches: Vec<LocalBatch>,
    host_batches: Vec<HostBatch>,
    local_busy: Vec<f64>,
    host_busy: Vec<f64>,
    samples_completed: u64,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SimConfig) -> Self {
        let scenario = &cfg.scenario;
        // nothing is rerouted when s = 0
        let path = cfg.path.filter(|_| scenario.offload_count > 0);
        Self {
            scenario,
            path,
            n_batches: cfg.n_batches,
            now: 0.0,
            events: BinaryHeap::new(),
            event_count: 0,
            local: DeviceState::new(),
            host: DeviceState::new(),
            local_batches: vec![LocalBatch::default(); cfg.n_batches],
            host_batches: vec![HostBatch::default(); cfg.n_batches],
            local_busy: vec![0.0; scenario.local.num_blocks()],
            host_busy: vec![0.0; scenario.host_blocks()],
            samples_completed: 0,
        }
    }

    fn host_segment(&self) -> Option<(usize, usize)> {
        self.path.and_then(|p| p.host_segment())
    }

    fn duration(&self, task: Task) -> f64 {
        let sc = self.scenario;
        let s = sc.offload_count;
        let b_l = sc.local.batch_size;
        match task.op {
            Op::LocalBlock(i) => {
                let skipped = self.path.is_some_and(|p| p.skipped_blocks().contains(&i));
                sc.local.blocks[i].time(if skipped { b_l - s } else { b_l })
            }
            Op::SkipLink => {
                let p = self.path.expect("skip link only runs on a path");
                sc.skip_link_for(p.lout, p.lin).time(s)
            }
            Op::EntryLink => sc.entry_link.time(s),
            Op::ExitLink => sc.exit_link.time(s),
            Op::HostBlock(j) => {
                let host = sc.host.as_ref().expect("host block without host");
                let carried = self
                    .host_segment()
                    .is_some_and(|(hin, hout)| (hin..=hout).contains(&j));
                host.blocks[j].time(host.batch_size + if carried { s } else { 0 })
            }
        }
    }

    fn device(&mut self, d: Device) -> &mut DeviceState {
        match d {
            Device::Local => &mut self.local,
            Device::Host => &mut self.host,
        }
    }

    fn make_ready(&mut self, batch: usize, op: Op) {
        self.device(op.device()).ready.insert(Task { batch, op });
    }

    fn admit_local(&mut self) -> bool {
        if self.local.admitted == self.n_batches {
            return false;
        }
        let batch = self.local.admitted;
        self.local.admitted += 1;
        self.make_ready(batch, Op::LocalBlock(0));
        true
    }

    fn admit_host(&mut self) -> bool {
        if self.scenario.host.is_none() || self.host.admitted == self.n_batches {
            return false;
        }
        let segment = self.host_segment();
        // host batch j only starts once local batch j exists
        if segment.is_some() && self.host.admitted >= self.local.admitted {
            return false;
        }
        let batch = self.host.admitted;
        self.host.admitted += 1;
        match segment {
            Some((0, _)) => {
                self.host_batches[batch].prefix_done = true;
                self.try_enter_segment(batch);
            }
            _ => self.make_ready(batch, Op::HostBlock(0)),
        }
        true
    }

    fn dispatch(&mut self, d: Device) {
        if self.device(d).busy {
            return;
        }
        if self.device(d).ready.is_empty() {
            let admitted = match d {
                Device::Local => self.admit_local(),
                Device::Host => self.admit_host(),
            };
            if !admitted {
                return;
            }
            if self.device(d).ready.is_empty() {
                return;
            }
        }
        let task = self
            .device(d)
            .ready
            .pop_first()
            .expect("ready set non-empty");
        let dt = self.duration(task);
        match task.op {
            Op::LocalBlock(i) => self.local_busy[i] += dt,
            Op::HostBlock(j) => self.host_busy[j] += dt,
            _ => {}
        }
        self.device(d).busy = true;
        self.events.push(Completion {
            time: self.now + dt,
            task,
        });
    }

    fn try_join(&mut self, batch: usize) {
        let state = self.local_batches[batch];
        if state.middle_done && state.detour_done {
            let lin = self.path.expect("join only on a path").lin;
            self.make_ready(batch, Op::LocalBlock(lin));
        }
    }

    fn try_enter_segment(&mut self, batch: usize) {
        let state = self.host_batches[batch];
        if state.prefix_done && state.entry_done {
            let (hin, _) = self.host_segment().expect("segment on a cross path");
            self.make_ready(batch, Op::HostBlock(hin));
        }
    }

    fn finish_local(&mut self, batch: usize) {
        self.local.completions.push(self.now);
        self.samples_completed += self.scenario.local.batch_size as u64;
        let _ = batch;
    }

    fn on_local_block(&mut self, batch: usize, i: usize) {
        let n_l = self.scenario.local.num_blocks();
        let next_or_finish = |sim: &mut Self, next: usize| {
            if next < n_l {
                sim.make_ready(batch, Op::LocalBlock(next));
            } else {
                sim.finish_local(batch);
            }
        };
        let Some(path) = self.path else {
            return next_or_finish(self, i + 1);
        };
        if i < path.lout || i >= path.lin {
            return next_or_finish(self, i + 1);
        }
        if i == path.lout {
            match path.route {
                Route::Skip => self.make_ready(batch, Op::SkipLink),
                Route::Cross { .. } => self.make_ready(batch, Op::EntryLink),
            }
        }
        if i + 1 < path.lin {
            self.make_ready(batch, Op::LocalBlock(i + 1));
        } else {
            self.local_batches[batch].middle_done = true;
            self.try_join(batch);
        }
    }

    fn on_host_block(&mut self, batch: usize, j: usize) {
        let n_h = self.scenario.host_blocks();
        if let Some((hin, hout)) = self.host_segment() {
            if j + 1 == hin {
                self.host_batches[batch].prefix_done = true;
                self.try_enter_segment(batch);
                return;
            }
            if j == hout {
                self.make_ready(batch, Op::ExitLink);
            }
        }
        if j + 1 < n_h {
            self.make_ready(batch, Op::HostBlock(j + 1));
        } else {
            self.host.completions.push(self.now);
        }
    }

    fn complete(&mut self, task: Task) {
        self.device(task.op.device()).busy = false;
        match task.op {
            Op::LocalBlock(i) => self.on_local_block(task.batch, i),
            Op::HostBlock(j) => self.on_host_block(task.batch, j),
            Op::SkipLink | Op::ExitLink => {
                self.local_batches[task.batch].detour_done = true;
                self.try_join(task.batch);
            }
            Op::EntryLink => {
                self.host_batches[task.batch].entry_done = true;
                self.try_enter_segment(task.batch);
            }
        }
    }

    fn finished(&self) -> bool {
        let host_done =
            self.scenario.host.is_none() || self.host.completions.len() == self.n_batches;
        self.local.completions.len() == self.n_batches && host_done
    }

    fn run(&mut self) {
        self.dispatch(Device::Local);
        self.dispatch(Device::Host);
        while !self.finished() {
            let ev = self
                .events
                .pop()
                .expect("fork/join graph is acyclic, so some task is always in flight");
            self.event_count += 1;
            self.now = ev.time;
            self.complete(ev.task);
            self.dispatch(Device::Local);
            self.dispatch(Device::Host);
        }
    }
}

/// Rate over completions `warmup..n`: the window opens at completion `warmup`
/// (or time zero without warmup) and closes at the last completion.
fn windowed_rate(completions: &[f64], warmup: usize, per_batch: f64) -> f64 {
    let start = if warmup == 0 {
        0.0
    } else {
        completions[warmup - 1]
    };
    let end = *completions.last().expect("at least one completion");
    (completions.len() - warmup) as f64 * per_batch / (end - start)
}

pub fn simulate(cfg: &SimConfig) -> Result<SimReport, SimError> {
    if cfg.n_batches <= cfg.warmup_batches {
        return Err(SimError::Window {
            n_batches: cfg.n_batches,
            warmup_batches: cfg.warmup_batches,
        });
    }
    cfg.scenario.validate()?;
    if let Some(p) = &cfg.path {
        p.validate(&cfg.scenario)?;
    }

    let mut sim = Sim::new(cfg);
    sim.run();

    let sc = &cfg.scenario;
    let b_l = sc.local.batch_size as f64;
    let s = if sim.path.is_some() {
        sc.offload_count as f64
    } else {
        0.0
    };
    let window_batches = cfg.n_batches - cfg.warmup_batches;
    let rate = windowed_rate(&sim.local.completions, cfg.warmup_batches, 1.0);
    let measured_th_local = rate * (b_l - s);
    let measured_th_host = rate * s;
    let makespan = sim.now;
    let host_own_throughput = sc.host.as_ref().map(|h| {
        windowed_rate(
            &sim.host.completions,
            cfg.warmup_batches,
            h.batch_size as f64,
        )
    });
    Ok(SimReport {
        measured_th_total: measured_th_local + measured_th_host,
        measured_th_local,
        measured_th_host,
        local_block_busy: sim.local_busy.iter().map(|t| t / makespan).collect(),
        host_block_busy: sim.host_busy.iter().map(|t| t / makespan).collect(),
        host_own_throughput,
        completed_batches: sim.local.completions.len(),
        measured_batches: window_batches,
        samples_admitted: sim.local.admitted as u64 * sc.local.batch_size as u64,
        samples_completed: sim.samples_completed,
        makespan,
        event_count: sim.event_count,
    })
}
