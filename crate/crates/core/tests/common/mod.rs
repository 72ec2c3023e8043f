#![allow(dead_code)]

use hhc_cell::model::{parse_dataset, Category, Criteria, Dataset, Product, Task, TaskId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PB560: &str = include_str!("../../data/pb560.json");

pub fn pb560() -> Dataset {
    parse_dataset(PB560).expect("bundled dataset parses")
}

pub fn task(id: TaskId, duration_s: u64, preds: &[TaskId], robot: bool) -> Task {
    let mut criteria = Criteria::ALL_PASS;
    criteria.safety = robot;
    Task {
        id,
        name: String::new(),
        duration_s,
        predecessors: preds.to_vec(),
        criteria,
        category: Category::Assembly,
        forced_assignment: None,
    }
}

/// Random DAG over ids 1..=n with edges only from smaller to larger ids.
pub fn random_product(rng: &mut ChaCha8Rng, n: usize, max_duration: u64, edge_p: f64) -> Product {
    let tasks = (1..=n as TaskId)
        .map(|id| {
            let preds: Vec<TaskId> = (1..id).filter(|_| rng.random_bool(edge_p)).collect();
            task(
                id,
                rng.random_range(1..=max_duration),
                &preds,
                rng.random_bool(0.5),
            )
        })
        .collect();
    Product {
        name: "random".into(),
        tasks,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Departure times from the last station of a deterministic serial line
/// with blocking after service, computed row by row from the recurrence
///   start(n,k)  = max(depart(n,k-1), depart(n-1,k))      (k > 0)
///   start(n,0)  = depart(n-1,0)
///   depart(n,k) = max(start(n,k) + p_k, start(n-b,k+1))  (buffer b >= 1)
///   depart(n,k) = max(start(n,k) + p_k, depart(n-1,k+1)) (buffer 0)
/// and `depart = finish` at the last station. Returns every departure at
/// or before `horizon`.
pub fn serial_line_departures(loads: &[f64], buffer: Option<usize>, horizon: f64) -> Vec<f64> {
    let k_n = loads.len();
    let mut start: Vec<Vec<f64>> = Vec::new();
    let mut depart: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    for n in 0.. {
        let mut s_row = vec![0.0; k_n];
        let mut d_row = vec![0.0; k_n];
        for k in 0..k_n {
            let prev_here = if n > 0 { depart[n - 1][k] } else { 0.0 };
            s_row[k] = if k == 0 {
                prev_here
            } else {
                f64::max(d_row[k - 1], prev_here)
            };
            let finish = s_row[k] + loads[k];
            d_row[k] = if k + 1 == k_n {
                finish
            } else {
                match buffer {
                    None => finish,
                    Some(0) => {
                        let freed = if n > 0 { depart[n - 1][k + 1] } else { 0.0 };
                        finish.max(freed)
                    }
                    Some(b) => {
                        let room = if n >= b { start[n - b][k + 1] } else { 0.0 };
                        finish.max(room)
                    }
                }
            };
        }
        let last = d_row[k_n - 1];
        start.push(s_row);
        depart.push(d_row);
        if last > horizon {
            break;
        }
        out.push(last);
    }
    out
}

/// Minimum resource-pure station count by dynamic programming over
/// precedence-closed task sets: the last station of an optimal line is a
/// single-resource set `T` within takt whose removal leaves a closed set.
/// Exponential in the task count; meant for small instances only.
pub fn exhaustive_min_stations(
    product: &Product,
    robot: &dyn Fn(TaskId) -> bool,
    takt_s: u64,
) -> u64 {
    let n = product.tasks.len();
    assert!(n <= 16, "exhaustive oracle is for small instances");
    let pos: std::collections::HashMap<TaskId, usize> = product
        .tasks
        .iter()
        .enumerate()
        .map(|(i, t)| (t.id, i))
        .collect();
    let preds: Vec<u32> = product
        .tasks
        .iter()
        .map(|t| t.predecessors.iter().fold(0, |m, p| m | 1 << pos[p]))
        .collect();
    let robot_mask: u32 = product
        .tasks
        .iter()
        .enumerate()
        .filter(|(_, t)| robot(t.id))
        .fold(0, |m, (i, _)| m | 1 << i);
    let full = 1u32 << n;
    let mut load = vec![0u64; full as usize];
    let mut closed = vec![false; full as usize];
    for s in 0..full {
        let members = (0..n).filter(|i| s & (1 << i) != 0);
        load[s as usize] = members.clone().map(|i| product.tasks[i].duration_s).sum();
        closed[s as usize] = members.into_iter().all(|i| preds[i] & !s == 0);
    }
    let mut best = vec![u64::MAX; full as usize];
    best[0] = 0;
    for s in 1..full {
        if !closed[s as usize] {
            continue;
        }
        let mut t = s;
        while t > 0 {
            let rest = s & !t;
            let pure = t & robot_mask == 0 || t & !robot_mask == 0;
            if pure
                && closed[rest as usize]
                && load[t as usize] <= takt_s
                && best[rest as usize] != u64::MAX
            {
                best[s as usize] = best[s as usize].min(best[rest as usize] + 1);
            }
            t = (t - 1) & s;
        }
    }
    best[(full - 1) as usize]
}
