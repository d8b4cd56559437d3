//! Projective distance and the per-observation weight functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Which weight function feeds the voxel update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Constant,
    Quadratic,
    Confidence,
}

/// Band parameters shared by the weight functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub truncation: f64,
    pub eta: f64,
}

/// Distance from voxel center `v` to the surface point `q` measured along the
/// sensor ray from `c`: positive in front of the surface, negative behind.
#[inline]
pub fn projective_distance(v: Vec3, q: Vec3, c: Vec3) -> f64 {
    let qv = q - v;
    let side = qv.dot(q - c);
    let dist = qv.norm();
    if side > 0.0 {
        dist
    } else if side < 0.0 {
        -dist
    } else {
        0.0
    }
}

/// Unit weight inside the truncation band.
#[inline]
pub fn weight_constant(rho: f64, band: &Band) -> f64 {
    if rho > -band.truncation {
        1.0
    } else {
        0.0
    }
}

/// Inverse-square weight with a linear taper behind the surface. `z` is the
/// Euclidean distance from the sensor origin to the voxel center.
pub fn weight_quadratic(v: Vec3, q: Vec3, c: Vec3, band: &Band) -> Result<f64> {
    let z = (v - c).norm();
    if !(z > 0.0) {
        return Err(Error::DegenerateRay);
    }
    Ok(quadratic_from_parts(projective_distance(v, q, c), z, band))
}

#[inline]
pub(crate) fn quadratic_from_parts(rho: f64, z: f64, band: &Band) -> f64 {
    let inv_sq = 1.0 / (z * z);
    if rho > -band.eta {
        inv_sq
    } else if rho > -band.truncation {
        inv_sq * ((rho + band.truncation) / (band.truncation - band.eta))
    } else {
        0.0
    }
}

/// Confidence weight: `c1` (confidence where the voxel projects) in front of
/// the surface, `c2` (confidence of the ray's surface point) in the taper band.
#[inline]
pub fn weight_confidence(rho: f64, c1: f64, c2: f64, band: &Band) -> f64 {
    if rho > -band.eta {
        c1
    } else if rho > -band.truncation {
        c2
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(mu: f64) -> Band {
        Band {
            truncation: 4.0 * mu,
            eta: mu,
        }
    }

    #[test]
    fn projective_distance_examples() {
        let q = Vec3::new(0.0, 0.0, 1.0);
        let c = Vec3::new(0.0, 0.0, 3.0);
        assert_eq!(projective_distance(Vec3::new(0.0, 0.0, 2.0), q, c), 1.0);
        assert_eq!(projective_distance(Vec3::new(0.0, 0.0, 0.0), q, c), -1.0);
        assert_eq!(projective_distance(q, q, c), 0.0);
    }

    #[test]
    fn constant_examples() {
        let b = band(0.1);
        assert_eq!(weight_constant(0.0, &b), 1.0);
        assert_eq!(weight_constant(-0.2, &b), 1.0);
        assert_eq!(weight_constant(-0.5, &b), 0.0);
        assert_eq!(weight_constant(-0.4, &b), 0.0);
    }

    #[test]
    fn quadratic_examples() {
        let b = band(0.1);
        let c = Vec3::ZERO;
        let v = Vec3::new(0.0, 0.0, 2.0);
        // rho = 0
        assert!((weight_quadratic(v, v, c, &b).unwrap() - 0.25).abs() < 1e-12);
        // rho = -0.2: surface point 0.2 m closer than the voxel
        let q = Vec3::new(0.0, 0.0, 1.8);
        let w = weight_quadratic(v, q, c, &b).unwrap();
        assert!((w - 1.0 / 6.0).abs() < 1e-12, "{w}");
        let q = Vec3::new(0.0, 0.0, 1.5);
        assert_eq!(weight_quadratic(v, q, c, &b).unwrap(), 0.0);
        assert!(matches!(
            weight_quadratic(c, q, c, &b),
            Err(Error::DegenerateRay)
        ));
    }

    #[test]
    fn quadratic_branch_boundaries() {
        let b = band(0.1);
        // rho = -eta belongs to the taper branch, rho = -tau to the zero branch
        let at_eta = quadratic_from_parts(-0.1, 1.0, &b);
        assert!((at_eta - (0.4 - 0.1) / (0.4 - 0.1)).abs() < 1e-12);
        assert_eq!(quadratic_from_parts(-0.4, 1.0, &b), 0.0);
    }

    #[test]
    fn confidence_examples() {
        let b = band(0.1);
        assert_eq!(weight_confidence(0.05, 0.8, 0.6, &b), 0.8);
        assert_eq!(weight_confidence(-0.2, 0.8, 0.6, &b), 0.6);
        assert_eq!(weight_confidence(-0.5, 0.8, 0.6, &b), 0.0);
        assert_eq!(weight_confidence(-0.1, 0.8, 0.6, &b), 0.6);
        assert_eq!(weight_confidence(-0.4, 0.8, 0.6, &b), 0.0);
    }
}
