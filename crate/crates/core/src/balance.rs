//! Takt time and line balancing onto resource-pure workstations.
//!
//! The production balancer is a ranked-positional-weight greedy. An exact
//! depth-first branch-and-bound is provided alongside it for verification.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocate::AllocationPlan;
use crate::model::{check_precedence, ModelError, Product, Resource, ShiftConfig, TaskId};

/// Largest instance the exhaustive oracle accepts.
pub const ORACLE_MAX_TASKS: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BalanceError {
    #[error("invalid value: {0}")]
    Value(String),
    #[error("task {task} takes {duration_s} s, longer than the takt of {takt_s} s")]
    Infeasible {
        task: TaskId,
        duration_s: u64,
        takt_s: u64,
    },
    #[error("allocation has no entry for task {0}")]
    Unallocated(TaskId),
    #[error("oracle accepts at most {limit} tasks, got {tasks}")]
    Budget { tasks: usize, limit: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Station {
    /// 1-based position along the line.
    pub index: u32,
    pub resource: Resource,
    pub task_ids: Vec<TaskId>,
    pub load_s: u64,
    pub idle_s: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinePlan {
    pub takt_s: u64,
    pub stations: Vec<Station>,
    pub total_time_s: u64,
    pub idle_total_s: u64,
}

impl LinePlan {
    pub fn bottleneck_s(&self) -> u64 {
        self.stations.iter().map(|s| s.load_s).max().unwrap_or(0)
    }

    /// Columns `station,resource,tasks,load_s,idle_s`; tasks joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["station", "resource", "tasks", "load_s", "idle_s"])
            .unwrap();
        for s in &self.stations {
            let tasks = s
                .task_ids
                .iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                s.index.to_string(),
                s.resource.to_string(),
                tasks,
                s.load_s.to_string(),
                s.idle_s.to_string(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Takt time in whole seconds, rounded down.
pub fn takt(shift: &ShiftConfig) -> Result<u64, BalanceError> {
    if shift.demand_units == 0 {
        return Err(BalanceError::Value(
            "demand_units must be at least 1".into(),
        ));
    }
    Ok(shift.duration_s / shift.demand_units as u64)
}

/// Unrounded takt, for display.
pub fn takt_exact(shift: &ShiftConfig) -> f64 {
    shift.duration_s as f64 / shift.demand_units as f64
}

/// Lower bound `ceil(total / takt)` on the station count.
pub fn min_stations(total_time_s: u64, takt_s: u64) -> Result<u64, BalanceError> {
    if takt_s == 0 {
        return Err(BalanceError::Value("takt must be positive".into()));
    }
    Ok(total_time_s.div_ceil(takt_s))
}

/// The first task (by id) that cannot fit in any station.
pub fn check_fits(product: &Product, takt_s: u64) -> Result<(), BalanceError> {
    let mut tasks: Vec<_> = product.tasks.iter().collect();
    tasks.sort_by_key(|t| t.id);
    match tasks.into_iter().find(|t| t.duration_s > takt_s) {
        Some(t) => Err(BalanceError::Infeasible {
            task: t.id,
            duration_s: t.duration_s,
            takt_s,
        }),
        None => Ok(()),
    }
}

/// [`min_stations`] for a product, rejecting tasks longer than the takt.
pub fn required_stations(product: &Product, takt_s: u64) -> Result<u64, BalanceError> {
    check_fits(product, takt_s)?;
    min_stations(product.total_time_s(), takt_s)
}

fn resources_of(
    product: &Product,
    plan: &AllocationPlan,
) -> Result<HashMap<TaskId, Resource>, BalanceError> {
    product
        .tasks
        .iter()
        .map(|t| {
            plan.resource_of(t.id)
                .map(|r| (t.id, r))
                .ok_or(BalanceError::Unallocated(t.id))
        })
        .collect()
}

/// Ranked positional weight: own duration plus all transitive successors'.
pub fn positional_weights(product: &Product) -> Result<BTreeMap<TaskId, u64>, BalanceError> {
    let durations = product.durations();
    let succ = product.all_successors()?;
    Ok(succ
        .iter()
        .map(|(id, s)| {
            (
                *id,
                durations[id] + s.iter().map(|x| durations[x]).sum::<u64>(),
            )
        })
        .collect())
}

/// Greedy station-oriented balancing. A task is eligible when its
/// predecessors are already placed, it fits the remaining takt and it
/// matches the station's resource (fixed by the first task placed). The
/// eligible task with the largest positional weight wins, ties to the
/// smaller id; with no eligible task a new station is opened.
pub fn balance_line(
    product: &Product,
    plan: &AllocationPlan,
    takt_s: u64,
) -> Result<LinePlan, BalanceError> {
    if takt_s == 0 {
        return Err(BalanceError::Value("takt must be positive".into()));
    }
    let resources = resources_of(product, plan)?;
    check_fits(product, takt_s)?;
    let weights = positional_weights(product)?;
    let durations = product.durations();
    let preds: HashMap<TaskId, &Vec<TaskId>> = product
        .tasks
        .iter()
        .map(|t| (t.id, &t.predecessors))
        .collect();

    let mut unassigned: BTreeSet<TaskId> = durations.keys().copied().collect();
    let mut placed: BTreeSet<TaskId> = BTreeSet::new();
    let mut stations: Vec<Station> = Vec::new();
    let mut current: Option<Station> = None;

    while !unassigned.is_empty() {
        let (load, resource) = match &current {
            Some(s) => (s.load_s, Some(s.resource)),
            None => (0, None),
        };
        let pick = unassigned
            .iter()
            .copied()
            .filter(|id| preds[id].iter().all(|p| placed.contains(p)))
            .filter(|id| load + durations[id] <= takt_s)
            .filter(|id| resource.is_none_or(|r| resources[id] == r))
            .max_by(|a, b| weights[a].cmp(&weights[b]).then(b.cmp(a)));

        match pick {
            Some(id) => {
                let st = current.get_or_insert_with(|| Station {
                    index: stations.len() as u32 + 1,
                    resource: resources[&id],
                    task_ids: Vec::new(),
                    load_s: 0,
                    idle_s: 0,
                });
                st.task_ids.push(id);
                st.load_s += durations[&id];
                unassigned.remove(&id);
                placed.insert(id);
            }
            None => {
                let mut st = current
                    .take()
                    .expect("an empty station always admits some ready task");
                st.idle_s = takt_s - st.load_s;
                stations.push(st);
            }
        }
    }
    if let Some(mut st) = current {
        st.idle_s = takt_s - st.load_s;
        stations.push(st);
    }

    let total = product.total_time_s();
    Ok(LinePlan {
        takt_s,
        idle_total_s: stations.len() as u64 * takt_s - total,
        stations,
        total_time_s: total,
    })
}

/// Independent structural check of a line plan. Returns every violation found.
pub fn verify_line_plan(
    product: &Product,
    plan: &AllocationPlan,
    line: &LinePlan,
) -> Result<(), Vec<String>> {
    let mut errors = Vec::new();
    let mut station_of: HashMap<TaskId, u32> = HashMap::new();
    for s in &line.stations {
        let mut load = 0;
        for id in &s.task_ids {
            if station_of.insert(*id, s.index).is_some() {
                errors.push(format!("task {id} appears in more than one station"));
            }
            match product.task(*id) {
                Some(t) => load += t.duration_s,
                None => errors.push(format!("station {} holds unknown task {id}", s.index)),
            }
            if plan.resource_of(*id) != Some(s.resource) {
                errors.push(format!(
                    "task {id} is not allocated to {} but sits at station {}",
                    s.resource, s.index
                ));
            }
        }
        if load != s.load_s {
            errors.push(format!("station {} load {} != {}", s.index, s.load_s, load));
        }
        if s.load_s > line.takt_s {
            errors.push(format!("station {} exceeds takt", s.index));
        }
        if s.load_s + s.idle_s != line.takt_s {
            errors.push(format!("station {} idle time is inconsistent", s.index));
        }
    }
    for (pos, s) in line.stations.iter().enumerate() {
        if s.index as usize != pos + 1 {
            errors.push(format!(
                "station at position {} has index {}",
                pos + 1,
                s.index
            ));
        }
    }
    for t in &product.tasks {
        let Some(&here) = station_of.get(&t.id) else {
            errors.push(format!("task {} is not assigned", t.id));
            continue;
        };
        for p in &t.predecessors {
            if let Some(&there) = station_of.get(p) {
                if there > here {
                    errors.push(format!(
                        "task {} at station {here} precedes its predecessor {p} at station {there}",
                        t.id
                    ));
                }
            }
        }
    }
    // Within a station the listed order must also respect precedence.
    for s in &line.stations {
        for (i, id) in s.task_ids.iter().enumerate() {
            if let Some(t) = product.task(*id) {
                for p in &t.predecessors {
                    if let Some(j) = s.task_ids.iter().position(|x| x == p) {
                        if j > i {
                            errors.push(format!(
                                "task {id} listed before predecessor {p} at station {}",
                                s.index
                            ));
                        }
                    }
                }
            }
        }
    }
    let loads: u64 = line.stations.iter().map(|s| s.load_s).sum();
    if loads != line.total_time_s || line.total_time_s != product.total_time_s() {
        errors.push("station loads do not sum to the total processing time".into());
    }
    if line.idle_total_s + line.total_time_s != line.stations.len() as u64 * line.takt_s {
        errors.push("idle total is inconsistent".into());
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub stations: u64,
    /// False when the deadline cut the search short.
    pub proven_optimal: bool,
    pub lower_bound: u64,
    pub nodes: u64,
}

struct Search {
    n: usize,
    durations: Vec<u64>,
    preds: Vec<u64>,
    resources: Vec<Resource>,
    takt: u64,
    best: u64,
    root_bound: u64,
    seen: HashMap<u64, u64>,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl Search {
    fn full(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }

    fn bound(&self, assigned: u64) -> u64 {
        let mut robot = 0;
        let mut human = 0;
        for i in 0..self.n {
            if assigned & (1 << i) == 0 {
                match self.resources[i] {
                    Resource::Robot => robot += self.durations[i],
                    Resource::Human => human += self.durations[i],
                }
            }
        }
        robot.div_ceil(self.takt) + human.div_ceil(self.takt)
    }

    fn done(&self) -> bool {
        self.timed_out || self.best <= self.root_bound
    }

    fn descend(&mut self, assigned: u64, used: u64) {
        if self.done() {
            return;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(4096) {
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    self.timed_out = true;
                    return;
                }
            }
        }
        if assigned == self.full() {
            self.best = self.best.min(used);
            return;
        }
        if used + self.bound(assigned) >= self.best {
            return;
        }
        match self.seen.get(&assigned) {
            Some(&u) if u <= used => return,
            _ => {
                self.seen.insert(assigned, used);
            }
        }
        for r in [Resource::Robot, Resource::Human] {
            self.fill(assigned, 0, 0, 0, r, used);
        }
    }

    fn eligible(&self, i: usize, closed: u64, load: u64, r: Resource) -> bool {
        closed & (1 << i) == 0
            && self.resources[i] == r
            && self.preds[i] & !closed == 0
            && load + self.durations[i] <= self.takt
    }

    // Tasks are indexed in topological order, so deciding include/exclude
    // in index order sees every predecessor's decision first. Only maximal
    // station loads are expanded.
    fn fill(&mut self, assigned: u64, station: u64, load: u64, i: usize, r: Resource, used: u64) {
        if self.done() {
            return;
        }
        if i == self.n {
            if station == 0 {
                return;
            }
            let closed = assigned | station;
            if (0..self.n).any(|j| self.eligible(j, closed, load, r)) {
                return;
            }
            self.descend(closed, used + 1);
            return;
        }
        if self.eligible(i, assigned | station, load, r) {
            self.fill(
                assigned,
                station | (1 << i),
                load + self.durations[i],
                i + 1,
                r,
                used,
            );
        }
        self.fill(assigned, station, load, i + 1, r, used);
    }
}

/// Exact minimum station count by depth-first branch-and-bound over
/// maximal station loads, with a per-resource load bound. The initial
/// incumbent is one task per station; `deadline` caps wall time.
pub fn branch_and_bound(
    product: &Product,
    plan: &AllocationPlan,
    takt_s: u64,
    budget: Option<Duration>,
) -> Result<SearchOutcome, BalanceError> {
    if takt_s == 0 {
        return Err(BalanceError::Value("takt must be positive".into()));
    }
    if product.tasks.len() > 64 {
        return Err(BalanceError::Budget {
            tasks: product.tasks.len(),
            limit: 64,
        });
    }
    let resources = resources_of(product, plan)?;
    check_fits(product, takt_s)?;
    let order = check_precedence(product)?;
    let index: HashMap<TaskId, usize> = order.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let n = order.len();
    let mut durations = vec![0; n];
    let mut preds = vec![0u64; n];
    let mut res = vec![Resource::Human; n];
    for t in &product.tasks {
        let i = index[&t.id];
        durations[i] = t.duration_s;
        res[i] = resources[&t.id];
        for p in &t.predecessors {
            preds[i] |= 1 << index[p];
        }
    }
    let mut s = Search {
        n,
        durations,
        preds,
        resources: res,
        takt: takt_s,
        best: n as u64,
        root_bound: 0,
        seen: HashMap::new(),
        nodes: 0,
        deadline: budget.map(|b| Instant::now() + b),
        timed_out: false,
    };
    s.root_bound = s.bound(0);
    s.descend(0, 0);
    Ok(SearchOutcome {
        stations: s.best,
        proven_optimal: !s.timed_out,
        lower_bound: s.root_bound,
        nodes: s.nodes,
    })
}

/// Exhaustive minimum station count for small instances (at most
/// [`ORACLE_MAX_TASKS`] tasks).
pub fn oracle_min_stations(
    product: &Product,
    plan: &AllocationPlan,
    takt_s: u64,
) -> Result<u64, BalanceError> {
    if product.tasks.len() > ORACLE_MAX_TASKS {
        return Err(BalanceError::Budget {
            tasks: product.tasks.len(),
            limit: ORACLE_MAX_TASKS,
        });
    }
    Ok(branch_and_bound(product, plan, takt_s, None)?.stations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocate::allocate_all;
    use crate::model::{Category, Criteria, Task};

    fn task(id: TaskId, d: u64, preds: &[TaskId], robot: bool) -> Task {
        let mut criteria = Criteria::ALL_PASS;
        criteria.safety = robot;
        Task {
            id,
            name: String::new(),
            duration_s: d,
            predecessors: preds.to_vec(),
            criteria,
            category: Category::Assembly,
            forced_assignment: None,
        }
    }

    fn product(tasks: Vec<Task>) -> Product {
        Product {
            name: "t".into(),
            tasks,
        }
    }

    #[test]
    fn takt_floor_division() {
        let s = |d, n| ShiftConfig {
            duration_s: d,
            demand_units: n,
        };
        assert_eq!(takt(&s(27000, 167)).unwrap(), 161);
        assert_eq!(takt(&s(100, 1)).unwrap(), 100);
        assert_eq!(takt(&s(27000, 224)).unwrap(), 120);
        assert!(takt(&s(100, 0)).is_err());
    }

    #[test]
    fn station_lower_bound() {
        assert_eq!(min_stations(803, 161).unwrap(), 5);
        assert_eq!(min_stations(161, 161).unwrap(), 1);
        assert_eq!(min_stations(804, 161).unwrap(), 5);
        assert!(min_stations(10, 0).is_err());
    }

    #[test]
    fn required_stations_rejects_long_task() {
        let p = product(vec![task(1, 100, &[], true), task(2, 200, &[1], true)]);
        assert_eq!(
            required_stations(&p, 161),
            Err(BalanceError::Infeasible {
                task: 2,
                duration_s: 200,
                takt_s: 161
            })
        );
        let p = product(vec![task(1, 100, &[], true), task(2, 61, &[1], true)]);
        assert_eq!(required_stations(&p, 161).unwrap(), 1);
    }

    #[test]
    fn single_task_line() {
        let p = product(vec![task(1, 50, &[], true)]);
        let line = balance_line(&p, &allocate_all(&p), 161).unwrap();
        assert_eq!(line.stations.len(), 1);
        assert_eq!(
            (line.stations[0].load_s, line.stations[0].idle_s),
            (50, 111)
        );
        assert_eq!(line.idle_total_s, 111);
    }

    #[test]
    fn chain_that_cannot_share() {
        let p = product(vec![
            task(1, 100, &[], true),
            task(2, 100, &[1], true),
            task(3, 100, &[2], true),
        ]);
        let plan = allocate_all(&p);
        let line = balance_line(&p, &plan, 100).unwrap();
        assert_eq!(line.stations.len(), 3);
        assert!(line.stations.iter().all(|s| s.load_s == 100));
        assert_eq!(oracle_min_stations(&p, &plan, 100).unwrap(), 3);
    }

    #[test]
    fn independent_pair_shares_one_station() {
        let p = product(vec![task(1, 80, &[], false), task(2, 80, &[], false)]);
        let plan = allocate_all(&p);
        assert_eq!(oracle_min_stations(&p, &plan, 161).unwrap(), 1);
        assert_eq!(balance_line(&p, &plan, 161).unwrap().stations.len(), 1);
    }

    #[test]
    fn resource_purity_forces_split() {
        let p = product(vec![task(1, 10, &[], true), task(2, 10, &[1], false)]);
        let plan = allocate_all(&p);
        let line = balance_line(&p, &plan, 161).unwrap();
        assert_eq!(line.stations.len(), 2);
        assert_eq!(line.stations[0].resource, Resource::Robot);
        assert_eq!(line.stations[1].resource, Resource::Human);
        verify_line_plan(&p, &plan, &line).unwrap();
        assert_eq!(oracle_min_stations(&p, &plan, 161).unwrap(), 2);
    }

    #[test]
    fn rpw_prefers_heavier_chain() {
        // 1 -> 3 carries more downstream work than 2, so 1 is placed first.
        let p = product(vec![
            task(1, 10, &[], true),
            task(2, 30, &[], true),
            task(3, 50, &[1], true),
        ]);
        let w = positional_weights(&p).unwrap();
        assert_eq!(w[&1], 60);
        let line = balance_line(&p, &allocate_all(&p), 60).unwrap();
        assert_eq!(line.stations[0].task_ids, vec![1, 3]);
        assert_eq!(line.stations[1].task_ids, vec![2]);
    }

    #[test]
    fn ties_go_to_smaller_id() {
        let p = product(vec![task(2, 40, &[], true), task(1, 40, &[], true)]);
        let line = balance_line(&p, &allocate_all(&p), 50).unwrap();
        assert_eq!(line.stations[0].task_ids, vec![1]);
    }

    #[test]
    fn infeasible_and_cycle_errors() {
        let p = product(vec![task(1, 200, &[], true)]);
        assert!(matches!(
            balance_line(&p, &allocate_all(&p), 161),
            Err(BalanceError::Infeasible { task: 1, .. })
        ));
        let p = product(vec![task(1, 10, &[2], true), task(2, 10, &[1], true)]);
        assert!(matches!(
            balance_line(&p, &allocate_all(&p), 161),
            Err(BalanceError::Model(ModelError::Cycle(_)))
        ));
    }

    #[test]
    fn oracle_budget() {
        let p = product((1..=15).map(|i| task(i, 1, &[], true)).collect());
        assert_eq!(
            oracle_min_stations(&p, &allocate_all(&p), 10),
            Err(BalanceError::Budget {
                tasks: 15,
                limit: ORACLE_MAX_TASKS
            })
        );
    }

    #[test]
    fn verify_flags_bad_plans() {
        let p = product(vec![task(1, 10, &[], true), task(2, 10, &[1], true)]);
        let plan = allocate_all(&p);
        let mut line = balance_line(&p, &plan, 15).unwrap();
        verify_line_plan(&p, &plan, &line).unwrap();
        line.stations.swap(0, 1);
        line.stations[0].index = 1;
        line.stations[1].index = 2;
        assert!(verify_line_plan(&p, &plan, &line).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = product(vec![task(1, 10, &[], true), task(2, 20, &[1], true)]);
        let line = balance_line(&p, &allocate_all(&p), 40).unwrap();
        assert_eq!(
            line.to_csv(),
            "station,resource,tasks,load_s,idle_s\n1,Robot,1;2,30,10\n"
        );
    }
}
