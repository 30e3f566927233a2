//! Synthetic labeled trajectories with known behavior changes.
//!
//! Each trajectory alternates between two behaviors:
//! - `directed`: near-constant speed with Gaussian heading jitter per step;
//! - `wander`: isotropic Gaussian steps.
//!
//! Movement is simulated in a local east/north frame in meters and mapped
//! to degrees around a per-trajectory origin. Observed positions add
//! Gaussian noise to the simulated path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, TimedPoint, EARTH_RADIUS_M};
use crate::seeds;
use crate::trajectory::Trajectory;

pub const DIRECTED_LABEL: &str = "directed";
pub const WANDER_LABEL: &str = "wander";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_trajectories: usize,
    /// Inclusive range of points per segment.
    pub points_per_segment: (usize, usize),
    /// Inclusive range of segments per trajectory.
    pub segments_per_trajectory: (usize, usize),
    pub directed_speed_mps: f64,
    pub heading_jitter_deg: f64,
    pub wander_step_m: f64,
    pub gps_noise_m: f64,
    pub sample_interval_s: u32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 42,
            n_trajectories: 30,
            points_per_segment: (40, 80),
            segments_per_trajectory: (4, 8),
            directed_speed_mps: 8.0,
            heading_jitter_deg: 5.0,
            wander_step_m: 64.0,
            gps_noise_m: 5.0,
            sample_interval_s: 10,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let (p0, p1) = self.points_per_segment;
        let (s0, s1) = self.segments_per_trajectory;
        if p0 == 0 || p0 > p1 {
            return bad(format!("points per segment range {p0}..={p1} is empty"));
        }
        if s0 == 0 || s0 > s1 {
            return bad(format!("segments per trajectory range {s0}..={s1} is empty"));
        }
        for (name, v) in [
            ("gps noise", self.gps_noise_m),
            ("heading jitter", self.heading_jitter_deg),
            ("directed speed", self.directed_speed_mps),
            ("wander step", self.wander_step_m),
        ] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if self.sample_interval_s == 0 {
            return bad("sample interval must be >= 1 s".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Behavior {
    Directed,
    Wander,
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<Vec<Trajectory>> {
    spec.validate()?;
    (0..spec.n_trajectories)
        .map(|i| generate_one(spec, i))
        .collect()
}

fn generate_one(spec: &SynthSpec, index: usize) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive_indexed(spec.seed, "synth", index as u64));
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let n_segments = rng.random_range(spec.segments_per_trajectory.0..=spec.segments_per_trajectory.1);
    let mut behavior = if rng.random_bool(0.5) {
        Behavior::Directed
    } else {
        Behavior::Wander
    };
    let origin_lat: f64 = 44.0 + rng.random_range(-1.0..1.0);
    let origin_lon = -63.0 + rng.random_range(-1.0..1.0);
    let meters_per_deg_lat = EARTH_RADIUS_M.to_radians();
    let meters_per_deg_lon = meters_per_deg_lat * origin_lat.to_radians().cos();
    let t0 = 1_600_000_000i64 + 86_400 * index as i64;
    let dt = f64::from(spec.sample_interval_s);
    let jitter = spec.heading_jitter_deg.to_radians();

    let (mut x, mut y) = (0.0f64, 0.0f64);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n_segments {
        let len = rng.random_range(spec.points_per_segment.0..=spec.points_per_segment.1);
        let mut heading = rng.random_range(0.0..std::f64::consts::TAU);
        for _ in 0..len {
            if !points.is_empty() {
                match behavior {
                    Behavior::Directed => {
                        heading += jitter * unit.sample(&mut rng);
                        x += spec.directed_speed_mps * dt * heading.sin();
                        y += spec.directed_speed_mps * dt * heading.cos();
                    }
                    Behavior::Wander => {
                        x += spec.wander_step_m * unit.sample(&mut rng);
                        y += spec.wander_step_m * unit.sample(&mut rng);
                    }
                }
            }
            let ox = x + spec.gps_noise_m * unit.sample(&mut rng);
            let oy = y + spec.gps_noise_m * unit.sample(&mut rng);
            let pos = GeoPoint::normalized(origin_lat + oy / meters_per_deg_lat, origin_lon + ox / meters_per_deg_lon);
            let t = (t0 + points.len() as i64 * i64::from(spec.sample_interval_s)) as f64;
            points.push(TimedPoint { pos, t });
            labels.push(match behavior {
                Behavior::Directed => DIRECTED_LABEL.to_string(),
                Behavior::Wander => WANDER_LABEL.to_string(),
            });
        }
        behavior = match behavior {
            Behavior::Directed => Behavior::Wander,
            Behavior::Wander => Behavior::Directed,
        };
    }
    Trajectory::new(format!("obj{index:03}"), points, Some(labels))
}
