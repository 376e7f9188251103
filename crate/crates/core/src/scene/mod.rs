//! Synthetic LOS-blockage testbed: a panel moving along a track between the
//! transmitters and the receiver, a side-view camera, and beacon power
//! measurements attenuated in proportion to the blocked LOS corridor.

mod config;
pub mod geometry;
pub mod io;
mod render;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::distr::Uniform;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

pub use config::{
    CameraView, ObstacleSpec, Point2, SceneConfig, ScheduleSegment, Trajectory, TxPoint, TxSchedule,
    Waypoint, BEACON_PERIOD_S, BEACON_RATE_HZ, DEFAULT_NOISE_STDDEV_DB,
};
pub use render::Frame;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid scene config field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("scene config parse error: {0}")]
    Parse(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("time {t} s outside scene duration [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("unknown transmitter index {0}")]
    UnknownTx(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSample {
    pub t: f64,
    pub tx: usize,
    pub power_dbm: f64,
}

#[derive(Debug, Clone)]
pub enum SceneEvent {
    Power(PowerSample),
    Frame(Frame),
}

const TRAJECTORY_SALT: u64 = 0x7452_414a_4543_5459;
const NOISE_SALT: u64 = 0x4e4f_4953_4500_0000;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A validated scene with its obstacle path resolved for the configured seed.
#[derive(Debug, Clone)]
pub struct Scene {
    config: SceneConfig,
    path: Vec<Waypoint>,
    /// Corridor cross-section on the track for each tx point.
    corridors: Vec<Option<(f64, f64)>>,
    background: Vec<u8>,
}

impl Scene {
    pub fn new(config: SceneConfig) -> Result<Self, SceneError> {
        config.validate()?;
        let path = resolve_trajectory(&config);
        let corridors = config
            .tx_points
            .iter()
            .map(|p| {
                geometry::corridor_on_track(
                    p.position,
                    config.rx_position,
                    config.obstacle.track_y_m,
                    config.los_corridor_m,
                )
            })
            .collect();
        let background = render::static_background(&config);
        Ok(Scene {
            config,
            path,
            corridors,
            background,
        })
    }

    /// Same scene with `rng_seed` replaced.
    pub fn with_seed(mut config: SceneConfig, seed: u64) -> Result<Self, SceneError> {
        config.rng_seed = seed;
        Self::new(config)
    }

    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    pub fn n_tx(&self) -> usize {
        self.config.n_tx()
    }

    pub fn obstacle_path(&self) -> &[Waypoint] {
        &self.path
    }

    pub fn frame_time(&self, index: usize) -> f64 {
        index as f64 / self.config.frame_rate
    }

    pub fn beacon_time(index: usize) -> f64 {
        index as f64 / BEACON_RATE_HZ
    }

    fn check_time(&self, t: f64) -> Result<(), SceneError> {
        if !(t >= 0.0 && t <= self.config.duration_s) {
            return Err(SceneError::TimeOutOfRange {
                t,
                duration: self.config.duration_s,
            });
        }
        Ok(())
    }

    /// Obstacle center on the track at `t`, or `None` when it is absent.
    pub fn obstacle_x(&self, t: f64) -> Option<f64> {
        let first = self.path.first()?;
        let last = self.path.last()?;
        if t < first.t || t > last.t {
            return None;
        }
        let i = self.path.partition_point(|w| w.t <= t);
        if i == 0 {
            return Some(first.x);
        }
        if i >= self.path.len() {
            return Some(last.x);
        }
        let (a, b) = (self.path[i - 1], self.path[i]);
        let s = (t - a.t) / (b.t - a.t);
        Some(a.x + s * (b.x - a.x))
    }

    /// Point currently occupied by transmitter `tx`.
    pub fn tx_point(&self, tx: usize, t: f64) -> Result<&TxPoint, SceneError> {
        self.check_time(t)?;
        let idx = self.config.point_index_at(tx, t).ok_or(SceneError::UnknownTx(tx))?;
        Ok(&self.config.tx_points[idx])
    }

    pub fn blockage_fraction(&self, tx: usize, t: f64) -> Result<f64, SceneError> {
        self.check_time(t)?;
        let idx = self.config.point_index_at(tx, t).ok_or(SceneError::UnknownTx(tx))?;
        Ok(self.fraction_at_point(idx, t))
    }

    fn fraction_at_point(&self, point: usize, t: f64) -> f64 {
        match (self.corridors[point], self.obstacle_x(t)) {
            (Some(corridor), Some(x)) => {
                geometry::covered_fraction(corridor, x, self.config.obstacle.width_m)
            }
            _ => 0.0,
        }
    }

    /// Noise-free received power of `tx` at `t`.
    pub fn clean_power(&self, tx: usize, t: f64) -> Result<f64, SceneError> {
        self.check_time(t)?;
        let idx = self.config.point_index_at(tx, t).ok_or(SceneError::UnknownTx(tx))?;
        let frac = self.fraction_at_point(idx, t);
        Ok(self.config.tx_points[idx].baseline_dbm - self.config.obstacle.attenuation_db * frac)
    }

    /// Received power of `tx` at `t`. The noise term is keyed on
    /// `(rng_seed, tx, beacon index)`, so repeated calls agree.
    pub fn measure_power(&self, tx: usize, t: f64) -> Result<PowerSample, SceneError> {
        let clean = self.clean_power(tx, t)?;
        let sigma = self.config.noise_stddev_db;
        let noise = if sigma > 0.0 {
            let beacon = (t * BEACON_RATE_HZ).round() as u64;
            let key = splitmix64(
                self.config.rng_seed ^ NOISE_SALT ^ splitmix64((tx as u64) << 40 ^ beacon),
            );
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            Normal::new(0.0, sigma).expect("sigma validated").sample(&mut rng)
        } else {
            0.0
        };
        Ok(PowerSample {
            t,
            tx,
            power_dbm: clean + noise,
        })
    }

    pub fn render_frame(&self, t: f64) -> Result<Frame, SceneError> {
        self.check_time(t)?;
        let mut frame = Frame {
            t,
            width: self.config.image_width,
            height: self.config.image_height,
            pixels: self.background.clone(),
        };
        render::draw_obstacle(&self.config, self.obstacle_x(t), &mut frame);
        Ok(frame)
    }

    /// Re-renders into an existing buffer of the right size.
    pub fn render_into(&self, t: f64, frame: &mut Frame) -> Result<(), SceneError> {
        self.check_time(t)?;
        frame.t = t;
        frame.width = self.config.image_width;
        frame.height = self.config.image_height;
        frame.pixels.clear();
        frame.pixels.extend_from_slice(&self.background);
        render::draw_obstacle(&self.config, self.obstacle_x(t), frame);
        Ok(())
    }

    pub fn static_background(&self) -> &[u8] {
        &self.background
    }

    /// All beacon samples in `[0, duration_s)`, ordered by time then tx.
    pub fn power_trace(&self) -> Vec<PowerSample> {
        let n_tx = self.n_tx();
        let mut out = Vec::with_capacity(self.config.beacon_count() * n_tx);
        for k in 0..self.config.beacon_count() {
            let t = Self::beacon_time(k);
            for tx in 0..n_tx {
                out.push(self.measure_power(tx, t).expect("beacon inside duration"));
            }
        }
        out
    }

    /// Time-ordered stream of power samples and frames. At equal timestamps
    /// power samples come first.
    pub fn events(&self) -> SceneEvents<'_> {
        SceneEvents {
            scene: self,
            next_frame: 0,
            next_beacon: 0,
            next_tx: 0,
            n_frames: self.config.frame_count(),
            n_beacons: self.config.beacon_count(),
            render: true,
        }
    }
}

pub struct SceneEvents<'a> {
    scene: &'a Scene,
    next_frame: usize,
    next_beacon: usize,
    next_tx: usize,
    n_frames: usize,
    n_beacons: usize,
    render: bool,
}

impl SceneEvents<'_> {
    /// Frames from `next_into` carry only their timestamp; for consumers that
    /// need the frame clock but no pixels.
    pub fn without_pixels(mut self) -> Self {
        self.render = false;
        self
    }

    /// Like `next`, but frames are rendered into `frame` and reported as
    /// `Some(None)`; avoids one 2.7 MB allocation per frame at 1280x720.
    pub fn next_into(&mut self, frame: &mut Frame) -> Option<Option<PowerSample>> {
        match self.peek_kind()? {
            Kind::Power => Some(Some(self.take_power())),
            Kind::Frame => {
                let t = self.scene.frame_time(self.next_frame);
                self.next_frame += 1;
                if self.render {
                    self.scene.render_into(t, frame).expect("frame inside duration");
                } else {
                    frame.t = t;
                    frame.pixels.clear();
                }
                Some(None)
            }
        }
    }

    fn peek_kind(&self) -> Option<Kind> {
        let beacon_left = self.next_beacon < self.n_beacons;
        let frame_left = self.next_frame < self.n_frames;
        match (beacon_left, frame_left) {
            (false, false) => None,
            (true, false) => Some(Kind::Power),
            (false, true) => Some(Kind::Frame),
            (true, true) => {
                let tb = Scene::beacon_time(self.next_beacon);
                let tf = self.scene.frame_time(self.next_frame);
                if tb <= tf + 1e-9 {
                    Some(Kind::Power)
                } else {
                    Some(Kind::Frame)
                }
            }
        }
    }

    fn take_power(&mut self) -> PowerSample {
        let t = Scene::beacon_time(self.next_beacon);
        let s = self
            .scene
            .measure_power(self.next_tx, t)
            .expect("beacon inside duration");
        self.next_tx += 1;
        if self.next_tx == self.scene.n_tx() {
            self.next_tx = 0;
            self.next_beacon += 1;
        }
        s
    }
}

enum Kind {
    Power,
    Frame,
}

impl Iterator for SceneEvents<'_> {
    type Item = SceneEvent;

    fn next(&mut self) -> Option<SceneEvent> {
        match self.peek_kind()? {
            Kind::Power => Some(SceneEvent::Power(self.take_power())),
            Kind::Frame => {
                let t = self.scene.frame_time(self.next_frame);
                self.next_frame += 1;
                Some(SceneEvent::Frame(
                    self.scene.render_frame(t).expect("frame inside duration"),
                ))
            }
        }
    }
}

fn resolve_trajectory(config: &SceneConfig) -> Vec<Waypoint> {
    match &config.obstacle.trajectory {
        Trajectory::Waypoints { points } => points.clone(),
        Trajectory::Sweep {
            x_min,
            x_max,
            speed_min,
            speed_max,
            dwell_min_s,
            dwell_max_s,
            start_s,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(config.rng_seed ^ TRAJECTORY_SALT));
            let speed = Uniform::new_inclusive(*speed_min, *speed_max).expect("validated range");
            let dwell = Uniform::new_inclusive(*dwell_min_s, *dwell_max_s).expect("validated range");
            let end = config.duration_s;
            let mut path = vec![Waypoint { t: *start_s, x: *x_min }];
            let mut at_min = true;
            let mut t = *start_s;
            while t < end {
                let target = if at_min { *x_max } else { *x_min };
                t += (x_max - x_min) / speed.sample(&mut rng);
                path.push(Waypoint { t, x: target });
                at_min = !at_min;
                if *dwell_max_s > 0.0 && t < end {
                    t += dwell.sample(&mut rng);
                    path.push(Waypoint { t, x: target });
                }
            }
            clip_path(path, end)
        }
    }
}

fn clip_path(mut path: Vec<Waypoint>, end: f64) -> Vec<Waypoint> {
    if let Some(i) = path.iter().position(|w| w.t > end) {
        let (a, b) = (path[i - 1], path[i]);
        let s = (end - a.t) / (b.t - a.t);
        path.truncate(i);
        if a.t < end {
            path.push(Waypoint {
                t: end,
                x: a.x + s * (b.x - a.x),
            });
        }
    }
    path
}
