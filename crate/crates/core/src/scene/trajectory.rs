use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;

/// Sample times closer than this to a key time return the keypose itself.
pub const TIME_EPSILON: f64 = 1e-9;

/// Keyposes interpolated linearly in translation and by slerp in rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub keyposes: Vec<(f64, Pose)>,
    pub frame_rate: f64,
}

impl TrajectorySpec {
    pub fn new(keyposes: Vec<(f64, Pose)>, frame_rate: f64) -> Result<Self> {
        let spec = TrajectorySpec { keyposes, frame_rate };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.keyposes.len() < 2 {
            return Err(Error::Config("a trajectory needs at least two keyposes".into()));
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(Error::Config(format!("frame rate {} must be positive", self.frame_rate)));
        }
        for w in self.keyposes.windows(2) {
            if !(w[1].0 > w[0].0) || !w[0].0.is_finite() || !w[1].0.is_finite() {
                return Err(Error::Config(format!(
                    "keypose times must strictly increase ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(())
    }

    pub fn start_time(&self) -> f64 {
        self.keyposes[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.keyposes[self.keyposes.len() - 1].0
    }

    /// Pose at time `t`, clamped to the key time range.
    pub fn pose_at(&self, t: f64) -> Pose {
        let keys = &self.keyposes;
        if let Some((_, p)) = keys.iter().find(|(tk, _)| (t - tk).abs() <= TIME_EPSILON) {
            return *p;
        }
        if t <= keys[0].0 {
            return keys[0].1;
        }
        let i = keys.partition_point(|(tk, _)| *tk <= t);
        if i >= keys.len() {
            return keys[keys.len() - 1].1;
        }
        let ((t0, a), (t1, b)) = (keys[i - 1], keys[i]);
        let s = (t - t0) / (t1 - t0);
        Pose::new(
            a.rotation.slerp(b.rotation, s),
            a.translation + (b.translation - a.translation) * s,
        )
    }

    /// Poses every `1 / frame_rate` seconds from the first key time up to
    /// and including the last sample not past the final key time.
    pub fn sample(&self) -> Result<Vec<(f64, Pose)>> {
        self.validate()?;
        let t0 = self.start_time();
        let span = self.end_time() - t0;
        let n = (span * self.frame_rate + TIME_EPSILON).floor() as usize + 1;
        Ok((0..n)
            .map(|k| {
                let t = t0 + k as f64 / self.frame_rate;
                (t, self.pose_at(t))
            })
            .collect())
    }
}

pub fn sample_trajectory(spec: &TrajectorySpec) -> Result<Vec<(f64, Pose)>> {
    spec.sample()
}
