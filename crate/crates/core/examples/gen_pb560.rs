//! Builds the bundled PB560 ventilator dataset and prints it as JSON.
//!
//! Criteria come from the published per-task challenge flags, inverted into
//! pass/fail (a flag of 1 marks a challenge, i.e. a failing criterion).
//! Durations and precedence edges are synthetic: robot-rated tasks sum to
//! 321 s, the rest to 482 s, and the graph admits a five-station balance at
//! a takt of 161 s. Stations are separated by precedence barriers so each
//! group below ends up on its own station.
//!
//!     cargo run --example gen_pb560 > data/pb560.json

use std::collections::BTreeMap;

use hhc_cell::model::{
    Category, Criteria, Dataset, Product, ReferenceFigures, Resource, ResourceKind, ResourceSpec,
    ShiftConfig, Task, FORMAT_VERSION,
};

// Challenge flags per task, rows P, F, J, M, S.
const PART: [u8; 20] = [0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
const FEEDING: [u8; 20] = [0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
const JOINING: [u8; 20] = [0; 20];
const MOUNTING: [u8; 20] = [0, 1, 0, 1, 0, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 1, 0, 1, 0, 0];
const SAFETY: [u8; 20] = [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0];
const LITERAL: &str = "RHRHRRRRRHHHHRRHHHRR";

// (id, name, duration_s, predecessors, category)
const TASKS: [(u32, &str, u64, &[u32], Category); 20] = [
    // station group 1, robot, 161 s
    (1, "Place base chassis", 25, &[], Category::PickPlace),
    (3, "Insert blower mount", 20, &[1], Category::PickPlace),
    (5, "Place battery tray", 22, &[1], Category::PickPlace),
    (6, "Screw blower mount", 18, &[3], Category::ScrewDriving),
    (7, "Screw battery tray", 30, &[5], Category::ScrewDriving),
    (8, "Place power board", 24, &[6, 7], Category::Assembly),
    (9, "Screw power board", 22, &[8], Category::ScrewDriving),
    // station group 2, human, 161 s
    (2, "Route blower harness", 55, &[9], Category::Assembly),
    (4, "Route battery harness", 48, &[9], Category::Assembly),
    (10, "Fit pneumatic block", 58, &[2, 4], Category::Assembly),
    // station group 3, human, 161 s
    (11, "Connect oxygen valve", 52, &[10], Category::Assembly),
    (
        12,
        "Fit patient circuit port",
        61,
        &[11],
        Category::Assembly,
    ),
    (
        13,
        "Calibrate pressure sensor",
        48,
        &[12],
        Category::QualityTest,
    ),
    // station group 4, robot, 160 s
    (14, "Place main board", 35, &[13], Category::PickPlace),
    (15, "Screw main board", 28, &[14], Category::ScrewDriving),
    (17, "Place display module", 32, &[15], Category::PickPlace),
    (19, "Place rear cover", 30, &[17], Category::PickPlace),
    (20, "Screw rear cover", 35, &[19], Category::ScrewDriving),
    // station group 5, human, 160 s
    (
        16,
        "Connect display flex cable",
        85,
        &[20],
        Category::Assembly,
    ),
    (
        18,
        "Functional test and label",
        75,
        &[16],
        Category::QualityTest,
    ),
];

fn main() {
    let mut tasks: Vec<Task> = TASKS
        .iter()
        .map(|(id, name, d, preds, cat)| {
            let i = *id as usize - 1;
            Task {
                id: *id,
                name: name.to_string(),
                duration_s: *d,
                predecessors: preds.to_vec(),
                criteria: Criteria {
                    part: PART[i] == 0,
                    feeding: FEEDING[i] == 0,
                    joining: JOINING[i] == 0,
                    mounting: MOUNTING[i] == 0,
                    safety: SAFETY[i] == 0,
                },
                category: *cat,
                forced_assignment: None,
            }
        })
        .collect();
    tasks.sort_by_key(|t| t.id);

    let assignments: BTreeMap<u32, Resource> = LITERAL
        .chars()
        .enumerate()
        .map(|(i, c)| {
            let r = if c == 'R' {
                Resource::Robot
            } else {
                Resource::Human
            };
            (i as u32 + 1, r)
        })
        .collect();

    let dataset = Dataset {
        format: FORMAT_VERSION,
        product: Product {
            name: "pb560".into(),
            tasks,
        },
        resources: vec![
            ResourceSpec {
                kind: ResourceKind::Humanoid,
                payload_kg: 10.0,
                reach_mm: 1000.0,
                max_speed_mm_s: 2222.0,
                charge_interval_s: Some(7200.0),
                charge_duration_s: Some(600.0),
            },
            ResourceSpec {
                kind: ResourceKind::Human,
                payload_kg: 15.0,
                reach_mm: 700.0,
                max_speed_mm_s: 1600.0,
                charge_interval_s: None,
                charge_duration_s: None,
            },
        ],
        shift: ShiftConfig {
            duration_s: 27000,
            demand_units: 167,
        },
        reference: Some(ReferenceFigures {
            takt_s: Some(161),
            stations: Some(5),
            automated_time_s: Some(321),
            task_share: Some(0.6),
            automatable_task_share: Some(0.7),
            assignments,
        }),
    };
    hhc_cell::model::validate(&dataset).expect("generated dataset is valid");
    println!("{}", dataset.to_json());
}
