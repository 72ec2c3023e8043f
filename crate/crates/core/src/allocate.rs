//! Rule-based task allocation: a task goes to the robot only when it passes
//! every automation criterion.

use serde::{Deserialize, Serialize};

use crate::model::{Criteria, Criterion, Product, Resource, TaskId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub task_id: TaskId,
    pub assignment: Resource,
    /// Criteria that kept the task from the robot. Empty iff rule says Robot.
    pub failed_criteria: Vec<Criterion>,
    /// Set when a dataset override replaced the rule outcome.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub forced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub entries: Vec<Allocation>,
}

impl AllocationPlan {
    pub fn resource_of(&self, id: TaskId) -> Option<Resource> {
        self.entries
            .iter()
            .find(|a| a.task_id == id)
            .map(|a| a.assignment)
    }

    pub fn count(&self, r: Resource) -> usize {
        self.entries.iter().filter(|a| a.assignment == r).count()
    }

    /// `task_id,assignment,failed_criteria` rows; failed criteria joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["task_id", "assignment", "failed_criteria"])
            .unwrap();
        for a in &self.entries {
            let failed = a
                .failed_criteria
                .iter()
                .map(|c| c.as_str())
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([a.task_id.to_string(), a.assignment.to_string(), failed])
                .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutomationMetrics {
    pub robot_tasks: usize,
    pub total_tasks: usize,
    pub task_share: f64,
    pub time_share: f64,
    pub automated_time_s: u64,
    pub manual_time_s: u64,
    pub total_time_s: u64,
}

pub fn rate_task(criteria: &Criteria) -> (Resource, Vec<Criterion>) {
    let failed = criteria.failed();
    if failed.is_empty() {
        (Resource::Robot, failed)
    } else {
        (Resource::Human, failed)
    }
}

/// One entry per task, ordered by task id.
pub fn allocate_all(product: &Product) -> AllocationPlan {
    let mut entries: Vec<Allocation> = product
        .tasks
        .iter()
        .map(|t| {
            let (rule, failed) = rate_task(&t.criteria);
            match t.forced_assignment {
                Some(forced) if forced != rule => Allocation {
                    task_id: t.id,
                    assignment: forced,
                    failed_criteria: failed,
                    forced: true,
                },
                _ => Allocation {
                    task_id: t.id,
                    assignment: rule,
                    failed_criteria: failed,
                    forced: false,
                },
            }
        })
        .collect();
    entries.sort_by_key(|a| a.task_id);
    AllocationPlan { entries }
}

pub fn automation_metrics(plan: &AllocationPlan, product: &Product) -> AutomationMetrics {
    let mut automated = 0u64;
    let mut manual = 0u64;
    let mut robot_tasks = 0usize;
    for t in &product.tasks {
        match plan.resource_of(t.id) {
            Some(Resource::Robot) => {
                automated += t.duration_s;
                robot_tasks += 1;
            }
            _ => manual += t.duration_s,
        }
    }
    let total = automated + manual;
    let n = product.tasks.len();
    AutomationMetrics {
        robot_tasks,
        total_tasks: n,
        task_share: if n == 0 {
            0.0
        } else {
            robot_tasks as f64 / n as f64
        },
        time_share: if total == 0 {
            0.0
        } else {
            automated as f64 / total as f64
        },
        automated_time_s: automated,
        manual_time_s: manual,
        total_time_s: total,
    }
}
