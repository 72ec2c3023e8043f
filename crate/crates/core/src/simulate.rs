//! Seeded discrete-event simulation of a balanced serial line.
//!
//! Station 1 draws from an unlimited raw-material supply. Finished units
//! move on only when the downstream buffer has room (blocking after
//! service). Robot stations may fail and may need to recharge; any station
//! may pay a changeover when a new batch starts. Every random quantity is
//! drawn from its own stream keyed by (replication, station, purpose), so a
//! run is a pure function of the line, the config and the replication index.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Triangular};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::balance::LinePlan;
use crate::model::{Product, Resource, ShiftConfig, TaskId};

/// Resampling attempts before a truncated-normal draw is clamped.
pub const TRUNCATION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeModel {
    Deterministic,
    /// Normal around the nominal duration with the given coefficient of
    /// variation, truncated at zero by resampling.
    NormalTruncated {
        cv: f64,
    },
    /// Triangular on `[min_factor, max_factor] * nominal` with mode at nominal.
    Triangular {
        min_factor: f64,
        max_factor: f64,
    },
}

impl TimeModel {
    fn validate(&self) -> Result<(), SimError> {
        match *self {
            TimeModel::Deterministic => Ok(()),
            TimeModel::NormalTruncated { cv } => {
                if cv.is_finite() && cv >= 0.0 {
                    Ok(())
                } else {
                    Err(SimError::Config(format!("cv must be >= 0, got {cv}")))
                }
            }
            TimeModel::Triangular {
                min_factor,
                max_factor,
            } => {
                if min_factor.is_finite()
                    && max_factor.is_finite()
                    && (0.0..=1.0).contains(&min_factor)
                    && max_factor >= 1.0
                {
                    Ok(())
                } else {
                    Err(SimError::Config(format!(
                        "triangular factors need 0 <= min <= 1 <= max, got [{min_factor}, {max_factor}]"
                    )))
                }
            }
        }
    }

    fn is_random(&self) -> bool {
        match *self {
            TimeModel::Deterministic => false,
            TimeModel::NormalTruncated { cv } => cv > 0.0,
            TimeModel::Triangular {
                min_factor,
                max_factor,
            } => min_factor < max_factor,
        }
    }
}

/// Draws one task duration around `nominal` seconds.
pub fn sample_duration<R: Rng + ?Sized>(model: &TimeModel, nominal: f64, rng: &mut R) -> f64 {
    match *model {
        TimeModel::Deterministic => nominal,
        TimeModel::NormalTruncated { cv } => {
            if cv == 0.0 {
                return nominal;
            }
            let normal = Normal::new(nominal, cv * nominal).expect("validated cv");
            for _ in 0..TRUNCATION_ATTEMPTS {
                let x = normal.sample(rng);
                if x > 0.0 {
                    return x;
                }
            }
            0.01 * nominal
        }
        TimeModel::Triangular {
            min_factor,
            max_factor,
        } => {
            if min_factor >= max_factor {
                return nominal;
            }
            Triangular::new(min_factor * nominal, max_factor * nominal, nominal)
                .expect("validated factors")
                .sample(rng)
        }
    }
}

/// Exponential time to failure and time to repair. An infinite MTTF
/// disables failures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureModel {
    pub mttf_s: f64,
    pub mttr_s: f64,
}

impl FailureModel {
    fn enabled(&self) -> bool {
        self.mttf_s.is_finite()
    }
}

/// Robot stations recharge for `duration_s` after every `interval_s` of busy time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Charging {
    pub interval_s: f64,
    pub duration_s: f64,
}

/// Setup paid at every station before the first unit of each new batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Changeover {
    pub batch_size: u32,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    pub replications: u32,
    pub time_model: TimeModel,
    /// Per-task overrides of `time_model`.
    pub task_time_models: BTreeMap<TaskId, TimeModel>,
    /// Units each inter-station buffer holds; `None` is unbounded.
    pub buffer_capacity: Option<u32>,
    pub failures: Option<FailureModel>,
    pub changeover: Option<Changeover>,
    pub charging: Option<Charging>,
    pub shift: ShiftConfig,
    /// Keep the full event trace in the result.
    pub record_trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            replications: 1,
            time_model: TimeModel::Deterministic,
            task_time_models: BTreeMap::new(),
            buffer_capacity: Some(1),
            failures: None,
            changeover: None,
            charging: None,
            shift: ShiftConfig {
                duration_s: 27000,
                demand_units: 167,
            },
            record_trace: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.replications == 0 {
            return Err(SimError::Config("replications must be at least 1".into()));
        }
        if self.shift.duration_s == 0 {
            return Err(SimError::Config("shift duration must be positive".into()));
        }
        self.time_model.validate()?;
        for m in self.task_time_models.values() {
            m.validate()?;
        }
        if let Some(f) = &self.failures {
            if f.mttf_s.is_nan() || f.mttf_s <= 0.0 {
                return Err(SimError::Config("mttf_s must be positive".into()));
            }
            if !(f.mttr_s.is_finite() && f.mttr_s > 0.0) {
                return Err(SimError::Config(
                    "mttr_s must be positive and finite".into(),
                ));
            }
        }
        if let Some(c) = &self.charging {
            if !(c.interval_s.is_finite() && c.interval_s > 0.0)
                || !(c.duration_s.is_finite() && c.duration_s >= 0.0)
            {
                return Err(SimError::Config(
                    "charging needs interval > 0 and duration >= 0".into(),
                ));
            }
        }
        if let Some(c) = &self.changeover {
            if c.batch_size == 0 || !(c.duration_s.is_finite() && c.duration_s >= 0.0) {
                return Err(SimError::Config(
                    "changeover needs batch_size >= 1 and duration >= 0".into(),
                ));
            }
        }
        Ok(())
    }

    fn model_for(&self, id: TaskId) -> &TimeModel {
        self.task_time_models.get(&id).unwrap_or(&self.time_model)
    }

    /// True when some draw can differ between replications.
    pub fn is_stochastic(&self) -> bool {
        self.time_model.is_random()
            || self.task_time_models.values().any(TimeModel::is_random)
            || self.failures.is_some_and(|f| f.enabled())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_s: f64,
    /// 1-based station index.
    pub station: u32,
    pub event: &'static str,
    pub unit_id: Option<u64>,
}

pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("t_s,station,event,unit_id\n");
    for r in rows {
        out.push_str(&trace_line(r));
    }
    out
}

fn trace_line(r: &TraceRow) -> String {
    match r.unit_id {
        Some(u) => format!("{},{},{},{}\n", r.t_s, r.station, r.event, u),
        None => format!("{},{},{},\n", r.t_s, r.station, r.event),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub replication: u32,
    pub completed_units: u64,
    pub throughput_per_shift: f64,
    pub units_entered: u64,
    pub wip_at_horizon: u64,
    /// Processing time embodied in completed units, as a fraction of the shift.
    pub station_utilization: Vec<f64>,
    /// Raw processing time (including unfinished work), as a fraction of the shift.
    pub station_busy_fraction: Vec<f64>,
    pub station_busy_s: Vec<f64>,
    pub avg_wip: f64,
    pub avg_lead_time_s: f64,
    pub downtime_s: Vec<f64>,
    pub event_count: u64,
    /// SHA-256 of the event trace in CSV form.
    pub trace_hash: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty", skip_deserializing)]
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Purpose {
    Processing = 0,
    Failure = 1,
    Repair = 2,
}

/// Independent stream for one (replication, station, purpose) triple.
fn stream(seed: u64, replication: u32, station: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((replication as u64) << 32) | ((station as u64) << 8) | purpose as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Completion { version: u64 },
    Failure,
    Repaired,
    Charged,
}

#[derive(Debug)]
struct Scheduled {
    t: f64,
    seq: u64,
    station: usize,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    // Reversed: BinaryHeap pops the earliest (time, sequence) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Empty,
    Processing,
    Blocked,
}

struct StationRt {
    tasks: Vec<(TaskId, f64)>,
    robot: bool,
    phase: Phase,
    unit: Option<u64>,
    started_at: f64,
    end_at: f64,
    work_s: f64,
    version: u64,
    started: u64,
    failed: bool,
    charging: bool,
    busy_since_charge: f64,
    busy_s: f64,
    downtime_s: f64,
    rng_proc: ChaCha8Rng,
    rng_fail: ChaCha8Rng,
    rng_repair: ChaCha8Rng,
}

struct Unit {
    entered_at: f64,
    work: Vec<f64>,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    horizon: f64,
    now: f64,
    seq: u64,
    queue: BinaryHeap<Scheduled>,
    stations: Vec<StationRt>,
    buffers: Vec<VecDeque<u64>>,
    units: Vec<Unit>,
    completed: u64,
    lead_sum: f64,
    value_added: Vec<f64>,
    wip_area: f64,
    wip_since: f64,
    events: u64,
    hasher: Sha256,
    trace: Vec<TraceRow>,
}

impl<'a> Sim<'a> {
    fn schedule(&mut self, t: f64, station: usize, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Scheduled {
            t,
            seq: self.seq,
            station,
            kind,
        });
    }

    fn log(&mut self, station: usize, event: &'static str, unit_id: Option<u64>) {
        let row = TraceRow {
            t_s: self.now,
            station: station as u32 + 1,
            event,
            unit_id,
        };
        self.hasher.update(trace_line(&row).as_bytes());
        if self.cfg.record_trace {
            self.trace.push(row);
        }
    }

    fn wip(&self) -> u64 {
        self.units.len() as u64 - self.completed
    }

    fn advance_wip(&mut self, to: f64) {
        self.wip_area += self.wip() as f64 * (to - self.wip_since);
        self.wip_since = to;
    }

    fn available(&self, k: usize) -> bool {
        let s = &self.stations[k];
        s.phase == Phase::Empty && !s.failed && !s.charging
    }

    fn needs_charge(&self, k: usize) -> bool {
        let s = &self.stations[k];
        s.robot
            && self
                .cfg
                .charging
                .is_some_and(|c| s.busy_since_charge >= c.interval_s)
    }

    fn try_start(&mut self, k: usize) -> bool {
        if !self.available(k) {
            return false;
        }
        if self.needs_charge(k) {
            let c = self.cfg.charging.unwrap();
            let s = &mut self.stations[k];
            s.charging = true;
            s.busy_since_charge = 0.0;
            s.downtime_s += c.duration_s.min(self.horizon - self.now);
            self.log(k, "charge_start", None);
            self.schedule(self.now + c.duration_s, k, EventKind::Charged);
            return true;
        }
        let unit = if k == 0 {
            self.advance_wip(self.now);
            let id = self.units.len() as u64;
            self.units.push(Unit {
                entered_at: self.now,
                work: vec![0.0; self.stations.len()],
            });
            self.log(k, "enter", Some(id));
            id
        } else {
            match self.buffers[k].pop_front() {
                Some(u) => u,
                None => return false,
            }
        };

        let cfg = self.cfg;
        let s = &mut self.stations[k];
        let mut work = 0.0;
        for (id, nominal) in &s.tasks {
            work += sample_duration(cfg.model_for(*id), *nominal, &mut s.rng_proc);
        }
        if let Some(c) = cfg.changeover {
            if s.started > 0 && s.started.is_multiple_of(c.batch_size as u64) {
                work += c.duration_s;
            }
        }
        s.started += 1;
        s.phase = Phase::Processing;
        s.unit = Some(unit);
        s.started_at = self.now;
        s.end_at = self.now + work;
        s.work_s = work;
        s.version += 1;
        let (end, version) = (s.end_at, s.version);
        self.log(k, "start", Some(unit));
        self.schedule(end, k, EventKind::Completion { version });
        true
    }

    fn can_accept(&self, k: usize) -> bool {
        match self.cfg.buffer_capacity {
            None => true,
            Some(0) => self.buffers[k].is_empty() && self.available(k) && !self.needs_charge(k),
            Some(cap) => self.buffers[k].len() < cap as usize,
        }
    }

    fn try_push(&mut self, k: usize) -> bool {
        if self.stations[k].phase != Phase::Blocked {
            return false;
        }
        let unit = self.stations[k].unit.expect("blocked station holds a unit");
        let last = self.stations.len() - 1;
        if k == last {
            self.advance_wip(self.now);
            self.completed += 1;
            let u = &self.units[unit as usize];
            self.lead_sum += self.now - u.entered_at;
            for (acc, w) in self.value_added.iter_mut().zip(&u.work) {
                *acc += w;
            }
            self.log(k, "exit", Some(unit));
        } else if self.can_accept(k + 1) {
            self.buffers[k + 1].push_back(unit);
            self.log(k, "move", Some(unit));
        } else {
            return false;
        }
        let s = &mut self.stations[k];
        s.phase = Phase::Empty;
        s.unit = None;
        true
    }

    fn settle(&mut self) {
        loop {
            let mut changed = false;
            for k in (0..self.stations.len()).rev() {
                changed |= self.try_push(k);
                changed |= self.try_start(k);
            }
            if !changed {
                break;
            }
        }
    }

    fn handle(&mut self, ev: Scheduled) {
        let k = ev.station;
        match ev.kind {
            EventKind::Completion { version } => {
                if version != self.stations[k].version
                    || self.stations[k].phase != Phase::Processing
                {
                    return;
                }
                self.events += 1;
                let s = &mut self.stations[k];
                s.phase = Phase::Blocked;
                s.busy_s += s.work_s;
                s.busy_since_charge += s.work_s;
                let unit = s.unit.unwrap();
                self.units[unit as usize].work[k] = s.work_s;
                self.log(k, "finish", Some(unit));
            }
            EventKind::Failure => {
                self.events += 1;
                let f = self.cfg.failures.expect("failures configured");
                let s = &mut self.stations[k];
                let repair = Exp::new(1.0 / f.mttr_s)
                    .expect("validated mttr")
                    .sample(&mut s.rng_repair);
                s.failed = true;
                s.downtime_s += repair.min(self.horizon - self.now);
                let extended = if s.phase == Phase::Processing {
                    s.end_at += repair;
                    s.version += 1;
                    Some((s.end_at, s.version))
                } else {
                    None
                };
                let unit = s.unit;
                self.log(k, "fail", unit);
                if let Some((end, version)) = extended {
                    self.schedule(end, k, EventKind::Completion { version });
                }
                self.schedule(self.now + repair, k, EventKind::Repaired);
            }
            EventKind::Repaired => {
                self.events += 1;
                self.stations[k].failed = false;
                self.log(k, "repair", None);
                self.schedule_failure(k);
            }
            EventKind::Charged => {
                self.events += 1;
                self.stations[k].charging = false;
                self.log(k, "charge_end", None);
            }
        }
        self.settle();
    }

    fn schedule_failure(&mut self, k: usize) {
        let Some(f) = self.cfg.failures.filter(|f| f.enabled()) else {
            return;
        };
        if !self.stations[k].robot {
            return;
        }
        let ttf = Exp::new(1.0 / f.mttf_s)
            .expect("validated mttf")
            .sample(&mut self.stations[k].rng_fail);
        self.schedule(self.now + ttf, k, EventKind::Failure);
    }

    fn finish(mut self, replication: u32) -> SimResult {
        self.now = self.horizon;
        self.advance_wip(self.horizon);
        let h = self.horizon;
        let busy: Vec<f64> = self
            .stations
            .iter()
            .map(|s| {
                let partial = if s.phase == Phase::Processing {
                    (s.work_s - (s.end_at - h)).clamp(0.0, s.work_s)
                } else {
                    0.0
                };
                s.busy_s + partial
            })
            .collect();
        let wip = self.wip();
        SimResult {
            replication,
            completed_units: self.completed,
            throughput_per_shift: self.completed as f64,
            units_entered: self.units.len() as u64,
            wip_at_horizon: wip,
            station_utilization: self.value_added.iter().map(|v| v / h).collect(),
            station_busy_fraction: busy.iter().map(|b| b / h).collect(),
            station_busy_s: busy,
            avg_wip: self.wip_area / h,
            avg_lead_time_s: if self.completed == 0 {
                0.0
            } else {
                self.lead_sum / self.completed as f64
            },
            downtime_s: self.stations.iter().map(|s| s.downtime_s).collect(),
            event_count: self.events,
            trace_hash: hex::encode(self.hasher.finalize()),
            trace: self.trace,
        }
    }
}

/// Runs one replication over `[0, shift]`; events at exactly the horizon
/// still fire.
pub fn run_sim(
    product: &Product,
    line: &LinePlan,
    cfg: &SimConfig,
    replication: u32,
) -> Result<SimResult, SimError> {
    cfg.validate()?;
    if line.stations.is_empty() {
        return Err(SimError::Config("line has no stations".into()));
    }
    let durations = product.durations();
    let mut stations = Vec::with_capacity(line.stations.len());
    for (k, st) in line.stations.iter().enumerate() {
        let tasks =
            st.task_ids
                .iter()
                .map(|id| {
                    durations.get(id).map(|d| (*id, *d as f64)).ok_or_else(|| {
                        SimError::Config(format!("line references unknown task {id}"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
        stations.push(StationRt {
            tasks,
            robot: st.resource == Resource::Robot,
            phase: Phase::Empty,
            unit: None,
            started_at: 0.0,
            end_at: 0.0,
            work_s: 0.0,
            version: 0,
            started: 0,
            failed: false,
            charging: false,
            busy_since_charge: 0.0,
            busy_s: 0.0,
            downtime_s: 0.0,
            rng_proc: stream(cfg.seed, replication, k, Purpose::Processing),
            rng_fail: stream(cfg.seed, replication, k, Purpose::Failure),
            rng_repair: stream(cfg.seed, replication, k, Purpose::Repair),
        });
    }
    let n = stations.len();
    let mut sim = Sim {
        cfg,
        horizon: cfg.shift.duration_s as f64,
        now: 0.0,
        seq: 0,
        queue: BinaryHeap::new(),
        stations,
        buffers: vec![VecDeque::new(); n],
        units: Vec::new(),
        completed: 0,
        lead_sum: 0.0,
        value_added: vec![0.0; n],
        wip_area: 0.0,
        wip_since: 0.0,
        events: 0,
        hasher: Sha256::new(),
        trace: Vec::new(),
    };
    for k in 0..n {
        sim.schedule_failure(k);
    }
    sim.settle();
    while let Some(ev) = sim.queue.pop() {
        if ev.t > sim.horizon {
            break;
        }
        sim.now = ev.t;
        sim.handle(ev);
    }
    Ok(sim.finish(replication))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub mean: f64,
    /// Sample standard deviation; absent for a single replication.
    pub stddev: Option<f64>,
    /// Student-t 95% interval on the mean; absent for a single replication.
    pub ci95: Option<[f64; 2]>,
}

/// Mean, sample deviation and t-interval. Deviations are taken about the
/// first value so identical samples give exactly zero spread.
pub fn field_stats(xs: &[f64]) -> FieldStats {
    let n = xs.len();
    assert!(n > 0, "statistics need at least one sample");
    let x0 = xs[0];
    let shift_mean = xs.iter().map(|x| x - x0).sum::<f64>() / n as f64;
    let mean = x0 + shift_mean;
    if n == 1 {
        return FieldStats {
            mean,
            stddev: None,
            ci95: None,
        };
    }
    let ss: f64 = xs.iter().map(|x| (x - x0 - shift_mean).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    let half = t * sd / (n as f64).sqrt();
    FieldStats {
        mean,
        stddev: Some(sd),
        ci95: Some([mean - half, mean + half]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub replications: u32,
    pub seed: u64,
    pub completed_units: FieldStats,
    pub throughput_per_shift: FieldStats,
    pub avg_wip: FieldStats,
    pub avg_lead_time_s: FieldStats,
    pub event_count: FieldStats,
    pub station_utilization: Vec<FieldStats>,
    pub station_busy_fraction: Vec<FieldStats>,
    pub downtime_s: Vec<FieldStats>,
}

pub fn aggregate(runs: &[SimResult], seed: u64) -> Aggregate {
    let scalar = |f: fn(&SimResult) -> f64| field_stats(&runs.iter().map(f).collect::<Vec<_>>());
    let per_station = |f: fn(&SimResult) -> &Vec<f64>| {
        let k = runs.first().map_or(0, |r| f(r).len());
        (0..k)
            .map(|i| field_stats(&runs.iter().map(|r| f(r)[i]).collect::<Vec<_>>()))
            .collect()
    };
    Aggregate {
        replications: runs.len() as u32,
        seed,
        completed_units: scalar(|r| r.completed_units as f64),
        throughput_per_shift: scalar(|r| r.throughput_per_shift),
        avg_wip: scalar(|r| r.avg_wip),
        avg_lead_time_s: scalar(|r| r.avg_lead_time_s),
        event_count: scalar(|r| r.event_count as f64),
        station_utilization: per_station(|r| &r.station_utilization),
        station_busy_fraction: per_station(|r| &r.station_busy_fraction),
        downtime_s: per_station(|r| &r.downtime_s),
    }
}

/// Runs replications `0..cfg.replications` (in parallel on the current rayon
/// pool) and reduces them in index order.
pub fn run_replications(
    product: &Product,
    line: &LinePlan,
    cfg: &SimConfig,
) -> Result<(Aggregate, Vec<SimResult>), SimError> {
    cfg.validate()?;
    let runs = (0..cfg.replications)
        .into_par_iter()
        .map(|i| run_sim(product, line, cfg, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((aggregate(&runs, cfg.seed), runs))
}

/// One CSV row per replication.
pub fn replications_to_csv(runs: &[SimResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let stations = runs.first().map_or(0, |r| r.station_utilization.len());
    let mut header = vec![
        "replication".to_string(),
        "completed_units".into(),
        "avg_wip".into(),
        "avg_lead_time_s".into(),
        "event_count".into(),
    ];
    header.extend((1..=stations).map(|k| format!("utilization_{k}")));
    header.extend((1..=stations).map(|k| format!("downtime_s_{k}")));
    header.push("trace_hash".into());
    w.write_record(&header).unwrap();
    for r in runs {
        let mut row = vec![
            r.replication.to_string(),
            r.completed_units.to_string(),
            r.avg_wip.to_string(),
            r.avg_lead_time_s.to_string(),
            r.event_count.to_string(),
        ];
        row.extend(r.station_utilization.iter().map(|u| u.to_string()));
        row.extend(r.downtime_s.iter().map(|d| d.to_string()));
        row.push(r.trace_hash.clone());
        w.write_record(&row).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}
