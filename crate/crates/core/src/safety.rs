//! Speed-and-separation governor, interaction-mode classifier and the
//! per-station collaborative safety checklist.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::LinePlan;
use crate::model::Resource;

/// Resolution of the allowed-speed search, mm/s.
pub const SPEED_RESOLUTION_MM_S: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SafetyError {
    #[error("invalid safety config: {0}")]
    Config(String),
    #[error("inconsistent interaction query: {0}")]
    Invariant(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafetyConfig {
    /// Free-run speed cap of the robot.
    pub v_max_mm_s: f64,
    /// Speed cap inside a collaborative zone.
    pub v_collab_cap_mm_s: f64,
    /// Assumed human approach speed.
    pub v_h_mm_s: f64,
    /// Detection and reaction time.
    pub t_r_s: f64,
    /// Stopping actuation time.
    pub t_s_s: f64,
    pub a_brake_mm_s2: f64,
    pub clearance_mm: f64,
    pub uncertainty_mm: f64,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        SafetyConfig {
            v_max_mm_s: 2222.0,
            v_collab_cap_mm_s: 250.0,
            v_h_mm_s: 1600.0,
            t_r_s: 0.1,
            t_s_s: 0.3,
            a_brake_mm_s2: 500.0,
            clearance_mm: 200.0,
            uncertainty_mm: 60.0,
        }
    }
}

impl SafetyConfig {
    pub fn validate(&self) -> Result<(), SafetyError> {
        let positive = [
            ("v_max_mm_s", self.v_max_mm_s),
            ("v_collab_cap_mm_s", self.v_collab_cap_mm_s),
            ("v_h_mm_s", self.v_h_mm_s),
            ("t_r_s", self.t_r_s),
            ("t_s_s", self.t_s_s),
            ("a_brake_mm_s2", self.a_brake_mm_s2),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SafetyError::Config(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("clearance_mm", self.clearance_mm),
            ("uncertainty_mm", self.uncertainty_mm),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SafetyError::Config(format!("{name} must be non-negative")));
            }
        }
        if self.v_collab_cap_mm_s > self.v_max_mm_s {
            return Err(SafetyError::Config(
                "collaborative cap exceeds the free-run cap".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Open,
    Collaborative,
}

/// Protective separation distance in mm:
/// `v_h (t_r + t_s) + v_r t_r + v_r^2 / (2 a) + C + Z`.
pub fn protective_distance(v_r_mm_s: f64, v_h_mm_s: f64, cfg: &SafetyConfig) -> f64 {
    v_h_mm_s * (cfg.t_r_s + cfg.t_s_s)
        + v_r_mm_s * cfg.t_r_s
        + v_r_mm_s * v_r_mm_s / (2.0 * cfg.a_brake_mm_s2)
        + cfg.clearance_mm
        + cfg.uncertainty_mm
}

pub fn speed_cap(cfg: &SafetyConfig, zone: Zone) -> f64 {
    match zone {
        Zone::Open => cfg.v_max_mm_s,
        Zone::Collaborative => cfg.v_collab_cap_mm_s,
    }
}

/// Largest robot speed whose protective distance fits within `separation_mm`,
/// bisected to [`SPEED_RESOLUTION_MM_S`] and capped by the zone. Zero means
/// a monitored stop.
pub fn allowed_speed(separation_mm: f64, v_h_mm_s: f64, cfg: &SafetyConfig, zone: Zone) -> f64 {
    let cap = speed_cap(cfg, zone);
    let fits = |v: f64| protective_distance(v, v_h_mm_s, cfg) <= separation_mm;
    if !fits(0.0) {
        return 0.0;
    }
    if fits(cap) {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    while hi - lo > SPEED_RESOLUTION_MM_S {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionQuery {
    pub shares_cell: bool,
    pub zone_overlap: bool,
    pub time_overlap: bool,
    pub same_task: bool,
}

impl InteractionQuery {
    pub fn from_bits(bits: u8) -> Self {
        InteractionQuery {
            shares_cell: bits & 1 != 0,
            zone_overlap: bits & 2 != 0,
            time_overlap: bits & 4 != 0,
            same_task: bits & 8 != 0,
        }
    }
}

/// Interaction modes ordered by intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InteractionMode {
    Isolated,
    Coexistence,
    Synchronized,
    Cooperation,
    Collaboration,
}

pub fn classify_mode(q: &InteractionQuery) -> Result<InteractionMode, SafetyError> {
    if q.same_task && !q.zone_overlap {
        return Err(SafetyError::Invariant(
            "a shared task implies a shared zone",
        ));
    }
    if q.zone_overlap && !q.shares_cell {
        return Err(SafetyError::Invariant(
            "a shared zone implies a shared cell",
        ));
    }
    Ok(if !q.shares_cell {
        InteractionMode::Isolated
    } else if !q.zone_overlap {
        InteractionMode::Coexistence
    } else if !q.time_overlap {
        InteractionMode::Synchronized
    } else if !q.same_task {
        InteractionMode::Cooperation
    } else {
        InteractionMode::Collaboration
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyFeature {
    PowerForceLimiting,
    SafetyRatedStop,
    SpeedSeparationMonitoring,
    HandGuiding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationSafety {
    pub station: u32,
    pub zone: Zone,
    pub features: Vec<SafetyFeature>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyChecklist {
    /// Robot stations only; human stations need nothing.
    pub stations: Vec<StationSafety>,
    /// Mobile-manipulator class of the humanoid platform, when robots are present.
    pub imr_type: Option<String>,
}

impl SafetyChecklist {
    pub fn collaborative_stations(&self) -> Vec<u32> {
        self.stations
            .iter()
            .filter(|s| s.zone == Zone::Collaborative)
            .map(|s| s.station)
            .collect()
    }
}

/// Every robot station needs power and force limiting plus hand guiding;
/// robot stations next to a human station are collaborative and also need
/// speed-and-separation monitoring and a safety-rated stop.
pub fn safety_checklist(line: &LinePlan) -> SafetyChecklist {
    let human_at = |i: usize| {
        line.stations
            .get(i)
            .is_some_and(|s| s.resource == Resource::Human)
    };
    let stations: Vec<StationSafety> = line
        .stations
        .iter()
        .enumerate()
        .filter(|(_, s)| s.resource == Resource::Robot)
        .map(|(i, s)| {
            let adjacent = (i > 0 && human_at(i - 1)) || human_at(i + 1);
            let mut features = vec![
                SafetyFeature::PowerForceLimiting,
                SafetyFeature::HandGuiding,
            ];
            if adjacent {
                features.push(SafetyFeature::SpeedSeparationMonitoring);
                features.push(SafetyFeature::SafetyRatedStop);
            }
            features.sort();
            StationSafety {
                station: s.index,
                zone: if adjacent {
                    Zone::Collaborative
                } else {
                    Zone::Open
                },
                features,
            }
        })
        .collect();
    let imr_type = (!stations.is_empty()).then(|| "C".to_string());
    SafetyChecklist { stations, imr_type }
}
