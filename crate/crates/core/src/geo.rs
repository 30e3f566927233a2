//! Geographic primitives and the motion kernels used to estimate where a
//! moving object should be at a given time.
//!
//! All kernels work per coordinate in degree space. Windows span tens to
//! hundreds of meters, where projection effects are far below GPS noise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Validating constructor. Rejects non-finite values and anything
    /// outside `[-90, 90] x [-180, 180]`.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::OutOfRange(format!("latitude {lat}")));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::OutOfRange(format!("longitude {lon}")));
        }
        Ok(Self { lat, lon })
    }

    /// Clamps latitude and wraps longitude into range. Used for kernel
    /// estimates, which may drift slightly past the poles or the
    /// antimeridian.
    pub fn normalized(lat: f64, lon: f64) -> Self {
        let lat = lat.clamp(-90.0, 90.0);
        let lon = if (-180.0..=180.0).contains(&lon) {
            lon
        } else {
            (lon + 180.0).rem_euclid(360.0) - 180.0
        };
        Self { lat, lon }
    }
}

/// A position with a timestamp in seconds since the epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPoint {
    pub pos: GeoPoint,
    pub t: f64,
}

impl TimedPoint {
    pub fn new(lat: f64, lon: f64, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::OutOfRange(format!("timestamp {t}")));
        }
        Ok(Self {
            pos: GeoPoint::new(lat, lon)?,
            t,
        })
    }
}

/// Motion model used to extrapolate a position from three support points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    RandomWalk,
    Kinematic,
    Linear,
    Cubic,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::RandomWalk,
        KernelKind::Kinematic,
        KernelKind::Linear,
        KernelKind::Cubic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::RandomWalk => "random-walk",
            KernelKind::Kinematic => "kinematic",
            KernelKind::Linear => "linear",
            KernelKind::Cubic => "cubic",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "random-walk" | "randomwalk" | "rw" => Ok(KernelKind::RandomWalk),
            "kinematic" => Ok(KernelKind::Kinematic),
            "linear" => Ok(KernelKind::Linear),
            "cubic" => Ok(KernelKind::Cubic),
            other => Err(Error::InvalidParameter(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Great-circle distance in meters.
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Arithmetic mean of two positions in degree space.
///
/// Pairs more than 180 degrees of longitude apart straddle the antimeridian
/// and are rejected.
pub fn geo_midpoint(a: GeoPoint, b: GeoPoint) -> Result<GeoPoint> {
    if (a.lon - b.lon).abs() > 180.0 {
        return Err(Error::AntimeridianStraddle(a.lon, b.lon));
    }
    Ok(GeoPoint {
        lat: (a.lat + b.lat) / 2.0,
        lon: (a.lon + b.lon) / 2.0,
    })
}

/// Estimates the position at `target_t` from three time-ordered support
/// points under `kernel`.
///
/// The target is expected to lie at or beyond one edge of the support span;
/// forward and backward extrapolation are handled by the same formulas.
pub fn extrapolate(points: &[TimedPoint; 3], target_t: f64, kernel: KernelKind) -> Result<GeoPoint> {
    let ts = [points[0].t, points[1].t, points[2].t];
    if !(ts[0] < ts[1] && ts[1] < ts[2]) {
        return Err(Error::Degenerate(format!(
            "support timestamps must be strictly increasing, got {ts:?}"
        )));
    }
    let lats = [points[0].pos.lat, points[1].pos.lat, points[2].pos.lat];
    let lons = [points[0].pos.lon, points[1].pos.lon, points[2].pos.lon];

    let est = |ys: &[f64; 3]| match kernel {
        KernelKind::RandomWalk => ys[nearest_index(&ts, target_t)],
        KernelKind::Linear => least_squares_line(&ts, ys, target_t),
        KernelKind::Kinematic => constant_acceleration(&ts, ys, target_t),
        KernelKind::Cubic => lagrange_quadratic(&ts, ys, target_t),
    };
    Ok(GeoPoint::normalized(est(&lats), est(&lons)))
}

fn nearest_index(ts: &[f64; 3], target: f64) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if (ts[i] - target).abs() < (ts[best] - target).abs() {
            best = i;
        }
    }
    best
}

fn least_squares_line(ts: &[f64; 3], ys: &[f64; 3], target: f64) -> f64 {
    // offsets from the first point keep constant tracks exact
    let t_mean = ((ts[1] - ts[0]) + (ts[2] - ts[0])) / 3.0;
    let y_mean = ((ys[1] - ys[0]) + (ys[2] - ys[0])) / 3.0;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for i in 0..3 {
        let dt = ts[i] - ts[0] - t_mean;
        sxy += dt * (ys[i] - ys[0] - y_mean);
        sxx += dt * dt;
    }
    ys[0] + y_mean + sxy / sxx * (target - ts[0] - t_mean)
}

/// p(target) = p0 + v*dt + a*dt^2/2, anchored at the support point nearest
/// the target. Velocity and acceleration come from divided differences.
fn constant_acceleration(ts: &[f64; 3], ys: &[f64; 3], target: f64) -> f64 {
    let d01 = (ys[1] - ys[0]) / (ts[1] - ts[0]);
    let d12 = (ys[2] - ys[1]) / (ts[2] - ts[1]);
    let half_accel = (d12 - d01) / (ts[2] - ts[0]);
    let accel = 2.0 * half_accel;
    // forward: anchor at the last point; backward: mirror from the first
    let (anchor, velocity) = if (target - ts[2]).abs() <= (target - ts[0]).abs() {
        (2, d12 + half_accel * (ts[2] - ts[1]))
    } else {
        (0, d01 + half_accel * (ts[0] - ts[1]))
    };
    let dt = target - ts[anchor];
    ys[anchor] + velocity * dt + 0.5 * accel * dt * dt
}

fn lagrange_quadratic(ts: &[f64; 3], ys: &[f64; 3], target: f64) -> f64 {
    let mut acc = ys[0];
    for i in 1..3 {
        let mut basis = 1.0;
        for j in 0..3 {
            if i != j {
                basis *= (target - ts[j]) / (ts[i] - ts[j]);
            }
        }
        acc += (ys[i] - ys[0]) * basis;
    }
    acc
}
