use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SceneError;

/// Beacon period of every transmitter, in seconds.
pub const BEACON_PERIOD_S: f64 = 0.1;
/// Beacons per second; beacon `k` is emitted at `k / BEACON_RATE_HZ`.
pub const BEACON_RATE_HZ: f64 = 10.0;

const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }
}

/// A named transmitter location ("A", "B", ...) with the received power
/// measured at the receiver when its LOS path is clear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxPoint {
    pub name: String,
    pub position: Point2,
    pub baseline_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    pub point: String,
    pub from_s: f64,
    pub to_s: f64,
}

/// Placement schedule of one transmitter. Segments are half-open
/// `[from_s, to_s)` except the last, which also covers `duration_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxSchedule {
    pub id: String,
    pub schedule: Vec<ScheduleSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    /// Explicit piecewise-linear path. Outside `[first.t, last.t]` the
    /// obstacle is absent from the scene.
    Waypoints { points: Vec<Waypoint> },
    /// Back-and-forth sweep between `x_min` and `x_max` starting at `x_min`
    /// at `start_s`; each pass draws its speed uniformly from
    /// `[speed_min, speed_max]` and dwells `[dwell_min_s, dwell_max_s]` at
    /// the turning point.
    Sweep {
        x_min: f64,
        x_max: f64,
        speed_min: f64,
        speed_max: f64,
        #[serde(default)]
        dwell_min_s: f64,
        #[serde(default)]
        dwell_max_s: f64,
        #[serde(default)]
        start_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub width_m: f64,
    pub height_m: f64,
    /// The obstacle moves along the line `y = track_y_m`.
    pub track_y_m: f64,
    pub attenuation_db: f64,
    pub trajectory: Trajectory,
}

/// Side view seen by the camera: world x in `[x_min, x_max]` maps onto the
/// image columns, height `[0, z_max]` onto the rows (ground at the bottom).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraView {
    pub x_min: f64,
    pub x_max: f64,
    pub z_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub duration_s: f64,
    pub frame_rate: f64,
    pub image_width: u32,
    pub image_height: u32,
    pub tx_points: Vec<TxPoint>,
    pub rx_position: Point2,
    pub obstacle: ObstacleSpec,
    #[serde(rename = "tx")]
    pub tx_assignments: Vec<TxSchedule>,
    #[serde(default = "default_noise")]
    pub noise_stddev_db: f64,
    /// Width of the LOS corridor whose cross-section the obstacle covers.
    pub los_corridor_m: f64,
    pub camera: CameraView,
    pub rng_seed: u64,
}

pub const DEFAULT_NOISE_STDDEV_DB: f64 = 1.0;

fn default_noise() -> f64 {
    DEFAULT_NOISE_STDDEV_DB
}

fn invalid(field: &str, message: impl Into<String>) -> SceneError {
    SceneError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

impl SceneConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SceneError> {
        let cfg: SceneConfig =
            toml::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SceneError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            SceneError::Parse(msg) => SceneError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scene config serializes")
    }

    pub fn n_tx(&self) -> usize {
        self.tx_assignments.len()
    }

    pub fn point(&self, name: &str) -> Option<&TxPoint> {
        self.tx_points.iter().find(|p| p.name == name)
    }

    pub fn frame_period(&self) -> f64 {
        1.0 / self.frame_rate
    }

    /// Number of frames in `[0, duration_s)`.
    pub fn frame_count(&self) -> usize {
        let n = (self.duration_s * self.frame_rate).floor() as usize;
        if (n as f64) / self.frame_rate < self.duration_s - EDGE_EPS {
            n + 1
        } else {
            n
        }
    }

    /// Number of beacons per transmitter in `[0, duration_s)`.
    pub fn beacon_count(&self) -> usize {
        let n = (self.duration_s * BEACON_RATE_HZ).round() as usize;
        if (n as f64) / BEACON_RATE_HZ < self.duration_s - EDGE_EPS {
            n + 1
        } else {
            n
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(invalid("duration_s", "must be positive"));
        }
        if !(self.frame_rate > 0.0) || !self.frame_rate.is_finite() {
            return Err(invalid("frame_rate", "must be positive"));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(invalid("image_width", "image dimensions must be nonzero"));
        }
        if !(self.noise_stddev_db >= 0.0) {
            return Err(invalid("noise_stddev_db", "must be non-negative"));
        }
        if !(self.los_corridor_m > 0.0) {
            return Err(invalid("los_corridor_m", "must be positive"));
        }
        let cam = &self.camera;
        if !(cam.x_max > cam.x_min) || !(cam.z_max > 0.0) {
            return Err(invalid("camera", "need x_max > x_min and z_max > 0"));
        }
        if self.tx_points.is_empty() {
            return Err(invalid("tx_points", "at least one point required"));
        }
        let mut names = HashSet::new();
        for p in &self.tx_points {
            if !names.insert(p.name.as_str()) {
                return Err(invalid("tx_points", format!("duplicate point '{}'", p.name)));
            }
            if (p.position.y - self.rx_position.y).abs() < EDGE_EPS
                && (p.position.x - self.rx_position.x).abs() < EDGE_EPS
            {
                return Err(invalid("tx_points", format!("point '{}' coincides with rx", p.name)));
            }
        }
        self.validate_obstacle()?;
        self.validate_schedules(&names)
    }

    fn validate_obstacle(&self) -> Result<(), SceneError> {
        let ob = &self.obstacle;
        if !(ob.width_m > 0.0) || !(ob.height_m > 0.0) {
            return Err(invalid("obstacle", "width_m and height_m must be positive"));
        }
        if !(ob.attenuation_db >= 0.0) {
            return Err(invalid("obstacle.attenuation_db", "must be >= 0"));
        }
        match &ob.trajectory {
            Trajectory::Waypoints { points } => {
                if points.is_empty() {
                    return Err(invalid("obstacle.trajectory", "no waypoints"));
                }
                for w in points.windows(2) {
                    if !(w[1].t > w[0].t) {
                        return Err(invalid(
                            "obstacle.trajectory",
                            "waypoint timestamps must be strictly increasing",
                        ));
                    }
                }
                for p in points {
                    if p.t < 0.0 || p.t > self.duration_s {
                        return Err(invalid(
                            "obstacle.trajectory",
                            format!("waypoint t={} outside [0, duration_s]", p.t),
                        ));
                    }
                }
            }
            Trajectory::Sweep {
                x_min,
                x_max,
                speed_min,
                speed_max,
                dwell_min_s,
                dwell_max_s,
                start_s,
            } => {
                if !(x_max > x_min) {
                    return Err(invalid("obstacle.trajectory", "sweep needs x_max > x_min"));
                }
                if !(*speed_min > 0.0) || speed_max < speed_min {
                    return Err(invalid(
                        "obstacle.trajectory",
                        "sweep needs 0 < speed_min <= speed_max",
                    ));
                }
                if *dwell_min_s < 0.0 || dwell_max_s < dwell_min_s {
                    return Err(invalid(
                        "obstacle.trajectory",
                        "sweep needs 0 <= dwell_min_s <= dwell_max_s",
                    ));
                }
                if *start_s < 0.0 || *start_s > self.duration_s {
                    return Err(invalid("obstacle.trajectory", "start_s outside duration"));
                }
            }
        }
        Ok(())
    }

    fn validate_schedules(&self, names: &HashSet<&str>) -> Result<(), SceneError> {
        if self.tx_assignments.is_empty() {
            return Err(invalid("tx", "at least one transmitter required"));
        }
        let mut ids = HashSet::new();
        for tx in &self.tx_assignments {
            let field = format!("tx.{}", tx.id);
            if !ids.insert(tx.id.as_str()) {
                return Err(invalid(&field, "duplicate transmitter id"));
            }
            let Some(first) = tx.schedule.first() else {
                return Err(invalid(&field, "empty schedule"));
            };
            if first.from_s.abs() > EDGE_EPS {
                return Err(invalid(&field, "schedule must start at 0"));
            }
            for seg in &tx.schedule {
                if !names.contains(seg.point.as_str()) {
                    return Err(invalid(&field, format!("unknown point '{}'", seg.point)));
                }
                if !(seg.to_s > seg.from_s) {
                    return Err(invalid(&field, "segment must have to_s > from_s"));
                }
            }
            for w in tx.schedule.windows(2) {
                if (w[1].from_s - w[0].to_s).abs() > EDGE_EPS {
                    return Err(invalid(
                        &field,
                        format!("gap or overlap at {} s", w[0].to_s),
                    ));
                }
            }
            let last = tx.schedule.last().unwrap();
            if last.to_s < self.duration_s - EDGE_EPS {
                return Err(invalid(&field, "schedule does not reach duration_s"));
            }
        }
        Ok(())
    }

    /// Index of the point occupied by transmitter `tx` at time `t`.
    pub(crate) fn point_index_at(&self, tx: usize, t: f64) -> Option<usize> {
        let sched = &self.tx_assignments.get(tx)?.schedule;
        let seg = sched
            .iter()
            .find(|s| t >= s.from_s - EDGE_EPS && t < s.to_s - EDGE_EPS)
            .or_else(|| sched.last().filter(|s| t <= s.to_s + EDGE_EPS && t >= s.from_s))?;
        self.tx_points.iter().position(|p| p.name == seg.point)
    }
}
