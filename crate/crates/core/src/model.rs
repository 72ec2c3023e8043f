//! Domain schema for an assembly cell: tasks, precedence, resources and the
//! shift. Datasets are parsed from JSON and fully validated before use.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type TaskId = u32;

/// Schema version accepted by [`parse_dataset`].
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("task {task} lists unknown predecessor {missing}")]
    Ref { task: TaskId, missing: TaskId },
    #[error("invalid value: {0}")]
    Value(String),
    #[error("precedence cycle: {}", join_ids(.0))]
    Cycle(Vec<TaskId>),
}

fn join_ids(ids: &[TaskId]) -> String {
    ids.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// One of the five automation criteria a task is rated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Part,
    Feeding,
    Joining,
    Mounting,
    Safety,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Part,
        Criterion::Feeding,
        Criterion::Joining,
        Criterion::Mounting,
        Criterion::Safety,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Part => "part",
            Criterion::Feeding => "feeding",
            Criterion::Joining => "joining",
            Criterion::Mounting => "mounting",
            Criterion::Safety => "safety",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pass/fail ratings. `true` means the robot can handle that aspect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criteria {
    pub part: bool,
    pub feeding: bool,
    pub joining: bool,
    pub mounting: bool,
    pub safety: bool,
}

impl Criteria {
    pub const ALL_PASS: Criteria = Criteria {
        part: true,
        feeding: true,
        joining: true,
        mounting: true,
        safety: true,
    };

    pub fn get(&self, c: Criterion) -> bool {
        match c {
            Criterion::Part => self.part,
            Criterion::Feeding => self.feeding,
            Criterion::Joining => self.joining,
            Criterion::Mounting => self.mounting,
            Criterion::Safety => self.safety,
        }
    }

    pub fn set(&mut self, c: Criterion, pass: bool) {
        match c {
            Criterion::Part => self.part = pass,
            Criterion::Feeding => self.feeding = pass,
            Criterion::Joining => self.joining = pass,
            Criterion::Mounting => self.mounting = pass,
            Criterion::Safety => self.safety = pass,
        }
    }

    /// Failing criteria in canonical order.
    pub fn failed(&self) -> Vec<Criterion> {
        Criterion::ALL
            .into_iter()
            .filter(|c| !self.get(*c))
            .collect()
    }

    /// Builds criteria from the 5-bit mask `part | feeding<<1 | joining<<2 | mounting<<3 | safety<<4`.
    pub fn from_bits(bits: u8) -> Self {
        Criteria {
            part: bits & 1 != 0,
            feeding: bits & 2 != 0,
            joining: bits & 4 != 0,
            mounting: bits & 8 != 0,
            safety: bits & 16 != 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Assembly,
    MaterialHandling,
    PickPlace,
    ScrewDriving,
    QualityTest,
}

/// Who performs a task or staffs a station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Resource {
    Robot,
    Human,
}

impl Resource {
    pub fn as_str(self) -> &'static str {
        match self {
            Resource::Robot => "Robot",
            Resource::Human => "Human",
        }
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    #[serde(default)]
    pub name: String,
    pub duration_s: u64,
    /// Sorted, deduplicated predecessor ids.
    pub predecessors: Vec<TaskId>,
    pub criteria: Criteria,
    pub category: Category,
    /// Overrides the rule-derived assignment when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_assignment: Option<Resource>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Product {
    pub name: String,
    pub tasks: Vec<Task>,
}

impl Product {
    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    /// Total processing time for one unit.
    pub fn total_time_s(&self) -> u64 {
        self.tasks.iter().map(|t| t.duration_s).sum()
    }

    pub fn max_task_s(&self) -> u64 {
        self.tasks.iter().map(|t| t.duration_s).max().unwrap_or(0)
    }

    pub fn durations(&self) -> HashMap<TaskId, u64> {
        self.tasks.iter().map(|t| (t.id, t.duration_s)).collect()
    }

    /// Direct successors of every task, each list sorted ascending.
    pub fn successors(&self) -> BTreeMap<TaskId, Vec<TaskId>> {
        let mut succ: BTreeMap<TaskId, Vec<TaskId>> =
            self.tasks.iter().map(|t| (t.id, Vec::new())).collect();
        for t in &self.tasks {
            for p in &t.predecessors {
                if let Some(list) = succ.get_mut(p) {
                    list.push(t.id);
                }
            }
        }
        for list in succ.values_mut() {
            list.sort_unstable();
        }
        succ
    }

    /// All transitive successors of every task. Requires an acyclic graph.
    pub fn all_successors(&self) -> Result<BTreeMap<TaskId, BTreeSet<TaskId>>, ModelError> {
        let order = check_precedence(self)?;
        let succ = self.successors();
        let mut out: BTreeMap<TaskId, BTreeSet<TaskId>> = BTreeMap::new();
        for id in order.iter().rev() {
            let mut set = BTreeSet::new();
            for s in &succ[id] {
                set.insert(*s);
                set.extend(out[s].iter().copied());
            }
            out.insert(*id, set);
        }
        Ok(out)
    }

    /// Sub-product over the given ids; edges to tasks outside the set are dropped.
    pub fn restrict(&self, keep: &BTreeSet<TaskId>) -> Product {
        let tasks = self
            .tasks
            .iter()
            .filter(|t| keep.contains(&t.id))
            .map(|t| {
                let mut t = t.clone();
                t.predecessors.retain(|p| keep.contains(p));
                t
            })
            .collect();
        Product {
            name: self.name.clone(),
            tasks,
        }
    }

    /// Sub-product made of the `n` smallest task ids.
    pub fn prefix(&self, n: usize) -> Product {
        let mut ids: Vec<TaskId> = self.tasks.iter().map(|t| t.id).collect();
        ids.sort_unstable();
        ids.truncate(n);
        self.restrict(&ids.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResourceKind {
    Human,
    Humanoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceSpec {
    pub kind: ResourceKind,
    pub payload_kg: f64,
    pub reach_mm: f64,
    pub max_speed_mm_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge_interval_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge_duration_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftConfig {
    pub duration_s: u64,
    pub demand_units: u32,
}

/// Externally published figures for the case, compared against computed
/// results in the report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceFigures {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub takt_s: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stations: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub automated_time_s: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_share: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub automatable_task_share: Option<f64>,
    /// Literal per-task labels as published, keyed by task id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub assignments: BTreeMap<TaskId, Resource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub format: u32,
    pub product: Product,
    pub resources: Vec<ResourceSpec>,
    pub shift: ShiftConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceFigures>,
}

impl Dataset {
    /// Pretty JSON in the canonical dataset schema.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn humanoid(&self) -> Option<&ResourceSpec> {
        self.resources
            .iter()
            .find(|r| r.kind == ResourceKind::Humanoid)
    }
}

// Wire-level mirror of the schema. Numbers that must be positive are read
// signed so that non-positive values surface as value errors rather than
// type errors.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    format: u32,
    product: RawProduct,
    resources: Vec<ResourceSpec>,
    shift: RawShift,
    #[serde(default)]
    reference: Option<ReferenceFigures>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProduct {
    name: String,
    tasks: Vec<RawTask>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    id: i64,
    #[serde(default)]
    name: String,
    duration_s: i64,
    predecessors: Vec<i64>,
    criteria: Criteria,
    category: Category,
    #[serde(default)]
    forced_assignment: Option<Resource>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShift {
    duration_s: i64,
    demand_units: i64,
}

fn task_id(raw: i64, what: &str) -> Result<TaskId, ModelError> {
    if raw <= 0 || raw > TaskId::MAX as i64 {
        return Err(ModelError::Value(format!(
            "{what} {raw} is not a positive task id"
        )));
    }
    Ok(raw as TaskId)
}

/// Parses and validates a dataset document. Either the whole dataset is
/// valid or an error is returned.
pub fn parse_dataset(text: &str) -> Result<Dataset, ModelError> {
    let raw: RawDataset =
        serde_json::from_str(text).map_err(|e| ModelError::Schema(e.to_string()))?;
    if raw.format != FORMAT_VERSION {
        return Err(ModelError::Schema(format!(
            "unsupported format {} (expected {FORMAT_VERSION})",
            raw.format
        )));
    }

    let mut tasks = Vec::with_capacity(raw.product.tasks.len());
    for rt in raw.product.tasks {
        let id = task_id(rt.id, "task id")?;
        if rt.duration_s <= 0 {
            return Err(ModelError::Value(format!(
                "task {id} has non-positive duration {}",
                rt.duration_s
            )));
        }
        let mut preds = rt
            .predecessors
            .iter()
            .map(|p| task_id(*p, "predecessor"))
            .collect::<Result<Vec<_>, _>>()?;
        preds.sort_unstable();
        preds.dedup();
        tasks.push(Task {
            id,
            name: rt.name,
            duration_s: rt.duration_s as u64,
            predecessors: preds,
            criteria: rt.criteria,
            category: rt.category,
            forced_assignment: rt.forced_assignment,
        });
    }

    if raw.shift.duration_s <= 0 {
        return Err(ModelError::Value(format!(
            "shift duration {} must be positive",
            raw.shift.duration_s
        )));
    }
    if raw.shift.demand_units < 1 || raw.shift.demand_units > u32::MAX as i64 {
        return Err(ModelError::Value(format!(
            "demand_units {} must be at least 1",
            raw.shift.demand_units
        )));
    }

    let dataset = Dataset {
        format: raw.format,
        product: Product {
            name: raw.product.name,
            tasks,
        },
        resources: raw.resources,
        shift: ShiftConfig {
            duration_s: raw.shift.duration_s as u64,
            demand_units: raw.shift.demand_units as u32,
        },
        reference: raw.reference,
    };
    validate(&dataset)?;
    Ok(dataset)
}

/// Checks every dataset invariant. Used by the parser and by generators
/// that build datasets in memory.
pub fn validate(dataset: &Dataset) -> Result<(), ModelError> {
    let product = &dataset.product;
    if product.tasks.is_empty() {
        return Err(ModelError::Value("product has no tasks".into()));
    }
    let mut seen = BTreeSet::new();
    for t in &product.tasks {
        if t.id == 0 {
            return Err(ModelError::Value("task id 0 is not positive".into()));
        }
        if !seen.insert(t.id) {
            return Err(ModelError::Value(format!("duplicate task id {}", t.id)));
        }
        if t.duration_s == 0 {
            return Err(ModelError::Value(format!(
                "task {} has non-positive duration 0",
                t.id
            )));
        }
    }
    for t in &product.tasks {
        if let Some(missing) = t.predecessors.iter().find(|p| !seen.contains(p)) {
            return Err(ModelError::Ref {
                task: t.id,
                missing: *missing,
            });
        }
    }
    check_precedence(product)?;

    for r in &dataset.resources {
        validate_resource(r)?;
    }
    if dataset.shift.duration_s == 0 {
        return Err(ModelError::Value("shift duration must be positive".into()));
    }
    if dataset.shift.demand_units == 0 {
        return Err(ModelError::Value("demand_units must be at least 1".into()));
    }
    Ok(())
}

fn validate_resource(r: &ResourceSpec) -> Result<(), ModelError> {
    let positive = |v: f64, what: &str| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(ModelError::Value(format!(
                "{what} must be positive, got {v}"
            )))
        }
    };
    positive(r.payload_kg, "payload_kg")?;
    positive(r.reach_mm, "reach_mm")?;
    positive(r.max_speed_mm_s, "max_speed_mm_s")?;
    match r.kind {
        ResourceKind::Human => {
            if r.charge_interval_s.is_some() || r.charge_duration_s.is_some() {
                return Err(ModelError::Schema(
                    "Human resources carry no charging fields".into(),
                ));
            }
        }
        ResourceKind::Humanoid => {
            if let Some(v) = r.charge_interval_s {
                positive(v, "charge_interval_s")?;
            }
            if let Some(v) = r.charge_duration_s {
                positive(v, "charge_duration_s")?;
            }
        }
    }
    Ok(())
}

/// Deterministic topological order: Kahn's algorithm with the smallest
/// ready id taken first. On failure the error carries one full cycle,
/// starting and ending at its smallest id.
pub fn check_precedence(product: &Product) -> Result<Vec<TaskId>, ModelError> {
    let ids: BTreeSet<TaskId> = product.tasks.iter().map(|t| t.id).collect();
    let mut indegree: BTreeMap<TaskId, usize> = ids.iter().map(|i| (*i, 0)).collect();
    let mut succ: BTreeMap<TaskId, Vec<TaskId>> = ids.iter().map(|i| (*i, Vec::new())).collect();
    for t in &product.tasks {
        for p in &t.predecessors {
            if let Some(list) = succ.get_mut(p) {
                list.push(t.id);
                *indegree.get_mut(&t.id).unwrap() += 1;
            }
        }
    }

    let mut ready: BinaryHeap<Reverse<TaskId>> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| Reverse(*id))
        .collect();
    let mut order = Vec::with_capacity(ids.len());
    while let Some(Reverse(id)) = ready.pop() {
        order.push(id);
        for s in &succ[&id] {
            let d = indegree.get_mut(s).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(Reverse(*s));
            }
        }
    }
    if order.len() == ids.len() {
        return Ok(order);
    }

    // Every unplaced task still has an unplaced predecessor, so walking
    // predecessors from any of them must revisit a task.
    let remaining: BTreeSet<TaskId> = indegree
        .iter()
        .filter(|(_, d)| **d > 0)
        .map(|(id, _)| *id)
        .collect();
    let preds: HashMap<TaskId, &Vec<TaskId>> = product
        .tasks
        .iter()
        .map(|t| (t.id, &t.predecessors))
        .collect();
    let mut walk = vec![*remaining.iter().next().unwrap()];
    let mut pos: HashMap<TaskId, usize> = HashMap::from([(walk[0], 0)]);
    loop {
        let cur = *walk.last().unwrap();
        let next = *preds[&cur]
            .iter()
            .find(|p| remaining.contains(p))
            .expect("unplaced task has an unplaced predecessor");
        if let Some(&start) = pos.get(&next) {
            let mut cycle: Vec<TaskId> = walk[start..].to_vec();
            cycle.reverse();
            let min_at = cycle
                .iter()
                .enumerate()
                .min_by_key(|(_, id)| **id)
                .map(|(i, _)| i)
                .unwrap();
            cycle.rotate_left(min_at);
            cycle.push(cycle[0]);
            return Err(ModelError::Cycle(cycle));
        }
        pos.insert(next, walk.len());
        walk.push(next);
    }
}
