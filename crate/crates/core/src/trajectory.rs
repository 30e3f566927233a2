use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::TimedPoint;

/// Time-ordered points of one moving object, optionally with one semantic
/// label per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    id: String,
    points: Vec<TimedPoint>,
    labels: Option<Vec<String>>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, points: Vec<TimedPoint>, labels: Option<Vec<String>>) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: String| Error::InvalidTrajectory {
            id: id.clone(),
            reason,
        };
        if let Some(i) = points.windows(2).position(|w| w[0].t >= w[1].t) {
            return Err(invalid(format!(
                "timestamps not strictly increasing at index {} ({} -> {})",
                i + 1,
                points[i].t,
                points[i + 1].t
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != points.len() {
                return Err(invalid(format!(
                    "{} labels for {} points",
                    labels.len(),
                    points.len()
                )));
            }
        }
        Ok(Self { id, points, labels })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Moving-object key used to keep trajectories of the same object in the
    /// same fold: the part of the id before the first `#`.
    pub fn object_id(&self) -> &str {
        self.id.split('#').next().unwrap_or(&self.id)
    }

    pub fn points(&self) -> &[TimedPoint] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same trajectory with every timestamp shifted by `dt` seconds.
    pub fn time_shifted(&self, dt: f64) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| TimedPoint { pos: p.pos, t: p.t + dt })
            .collect();
        Self {
            id: self.id.clone(),
            points,
            labels: self.labels.clone(),
        }
    }

    pub fn without_labels(&self) -> Self {
        Self {
            id: self.id.clone(),
            points: self.points.clone(),
            labels: None,
        }
    }
}
