//! Stereo front end: disparity to depth, cosine-similarity confidence,
//! confidence filtering and the patch-feature surrogate matcher.
//!
//! Shift convention: a scene point at left column `x` appears at right
//! column `x - d`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Vec3};
use crate::image::{FeatureImage, ScalarImage};

/// Norm below which a feature vector is treated as undefined.
pub const MIN_FEATURE_NORM: f64 = 1e-12;
/// Patch variance below which a pixel is considered textureless.
pub const MIN_PATCH_VARIANCE: f64 = 1e-12;
pub const DEFAULT_C_MIN: f64 = 0.5;

/// A camera-frame point carrying the confidence of the pixel it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidencePoint {
    pub position: Vec3,
    pub confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfidencePointCloud {
    pub points: Vec<ConfidencePoint>,
}

impl ConfidencePointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `Z = alpha_x * B / d` per pixel; non-positive or invalid disparities give invalid depth.
pub fn disparity_to_depth(disp: &ScalarImage, intr: &CameraIntrinsics) -> ScalarImage {
    let fb = intr.alpha_x * intr.baseline;
    disp.map_valid(|d| if d > 0.0 { Some(fb / d) } else { None })
}

/// Resamples left features into the right view: output `(x, y)` takes the
/// left feature at `(x + d(x, y), y)`, nearest pixel.
pub fn shift_features(left: &FeatureImage, disp: &ScalarImage) -> Result<FeatureImage> {
    if left.width() != disp.width() || left.height() != disp.height() {
        return Err(Error::Shape(format!(
            "features {}x{} vs disparity {}x{}",
            left.width(),
            left.height(),
            disp.width(),
            disp.height()
        )));
    }
    let (w, h, dim) = (left.width(), left.height(), left.feature_dim());
    let mut out = FeatureImage::invalid(w, h, dim);
    for y in 0..h {
        for x in 0..w {
            let Some(d) = disp.get(x, y) else { continue };
            let src = (x as f64 + d + 0.5).floor();
            if src < 0.0 || src >= w as f64 {
                continue;
            }
            if let Some(f) = left.get(src as usize, y) {
                out.set(x, y, f)?;
            }
        }
    }
    Ok(out)
}

/// Cosine similarity, or `None` when either vector is (numerically) zero.
#[inline]
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let (na, nb) = (na.sqrt(), nb.sqrt());
    if na < MIN_FEATURE_NORM || nb < MIN_FEATURE_NORM {
        return None;
    }
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Maps a cosine similarity in [-1, 1] to a confidence in [0, 1].
#[inline]
pub fn similarity_to_confidence(cs: f64) -> f64 {
    ((cs + 1.0) * 0.5).clamp(0.0, 1.0)
}

pub fn cosine_confidence(a: &FeatureImage, b: &FeatureImage) -> Result<ScalarImage> {
    if a.width() != b.width() || a.height() != b.height() || a.feature_dim() != b.feature_dim() {
        return Err(Error::Shape(format!(
            "feature images {}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.feature_dim(),
            b.width(),
            b.height(),
            b.feature_dim()
        )));
    }
    let mut out = ScalarImage::invalid(a.width(), a.height());
    for y in 0..a.height() {
        for x in 0..a.width() {
            if let (Some(fa), Some(fb)) = (a.get(x, y), b.get(x, y)) {
                if let Some(cs) = cosine_similarity(fa, fb) {
                    out.set(x, y, similarity_to_confidence(cs));
                }
            }
        }
    }
    Ok(out)
}

/// Invalidates depth wherever confidence is below `c_min` or missing.
pub fn filter_by_confidence(
    depth: &ScalarImage,
    conf: &ScalarImage,
    c_min: f64,
) -> Result<ScalarImage> {
    depth.check_shape(conf, "depth vs confidence")?;
    let mut out = depth.clone();
    for i in 0..depth.len() {
        match conf.get_index(i) {
            Some(c) if c >= c_min => {}
            _ => out.invalidate_index(i),
        }
    }
    Ok(out)
}

pub fn depth_to_pointcloud(
    depth: &ScalarImage,
    conf: &ScalarImage,
    intr: &CameraIntrinsics,
) -> Result<ConfidencePointCloud> {
    depth.check_shape(conf, "depth vs confidence")?;
    let mut points = Vec::with_capacity(depth.valid_count());
    for y in 0..depth.height() {
        for x in 0..depth.width() {
            let (Some(z), Some(c)) = (depth.get(x, y), conf.get(x, y)) else {
                continue;
            };
            let Ok(position) = intr.backproject(x as f64, y as f64, z) else {
                continue;
            };
            points.push(ConfidencePoint {
                position,
                confidence: c.clamp(0.0, 1.0),
            });
        }
    }
    Ok(ConfidencePointCloud { points })
}

/// Zero-mean, unit-norm `(2r+1)^2` intensity patches.
///
/// Pixels whose patch leaves the image, touches an invalid pixel, or has
/// variance below [`MIN_PATCH_VARIANCE`] are invalid.
pub fn patch_featurize(image: &ScalarImage, patch_radius: usize) -> Result<FeatureImage> {
    if patch_radius < 1 {
        return Err(Error::Config("patch_radius must be at least 1".into()));
    }
    let (w, h) = (image.width(), image.height());
    let side = 2 * patch_radius + 1;
    let dim = side * side;
    let mut out = FeatureImage::invalid(w, h, dim);
    let r = patch_radius;
    let rows: Vec<(usize, Vec<f64>, Vec<bool>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut data = vec![0.0; w * dim];
            let mut valid = vec![false; w];
            if y < r || y + r >= h {
                return (y, data, valid);
            }
            let mut patch = vec![0.0; dim];
            'px: for x in r..w.saturating_sub(r) {
                let mut k = 0;
                for py in y - r..=y + r {
                    for px in x - r..=x + r {
                        match image.get(px, py) {
                            Some(v) => patch[k] = v,
                            None => continue 'px,
                        }
                        k += 1;
                    }
                }
                let mean = patch.iter().sum::<f64>() / dim as f64;
                let mut ss = 0.0;
                for v in patch.iter_mut() {
                    *v -= mean;
                    ss += *v * *v;
                }
                if ss / (dim as f64) < MIN_PATCH_VARIANCE {
                    continue;
                }
                let inv = 1.0 / ss.sqrt();
                for (d, v) in data[x * dim..(x + 1) * dim].iter_mut().zip(&patch) {
                    *d = v * inv;
                }
                valid[x] = true;
            }
            (y, data, valid)
        })
        .collect();
    for (y, data, valid) in rows {
        let (drow, vrow) = out.row_mut(y);
        drow.copy_from_slice(&data);
        vrow.copy_from_slice(&valid);
    }
    Ok(out)
}

/// Winner-take-all matching on patch features.
///
/// For each left pixel the disparity maximizing the cosine similarity to the
/// right pixel `(x - d, y)` over `d` in `0..=max_disp` wins; ties go to the
/// smaller disparity. Returns `(disparity, confidence)`.
pub fn block_match(
    left: &ScalarImage,
    right: &ScalarImage,
    intr: &CameraIntrinsics,
    max_disp: usize,
    patch_radius: usize,
) -> Result<(ScalarImage, ScalarImage)> {
    if max_disp < 1 {
        return Err(Error::Config("max_disp must be at least 1".into()));
    }
    left.check_shape(right, "left vs right image")?;
    if left.width() != intr.width || left.height() != intr.height {
        return Err(Error::Shape(format!(
            "images {}x{} vs intrinsics {}x{}",
            left.width(),
            left.height(),
            intr.width,
            intr.height
        )));
    }
    let fl = patch_featurize(left, patch_radius)?;
    let fr = patch_featurize(right, patch_radius)?;
    let (w, h) = (left.width(), left.height());
    let rows: Vec<Vec<Option<(f64, f64)>>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let a = fl.get(x, y)?;
                    let mut best: Option<(usize, f64)> = None;
                    for d in 0..=max_disp.min(x) {
                        let Some(b) = fr.get(x - d, y) else { continue };
                        let Some(cs) = cosine_similarity(a, b) else { continue };
                        if best.map_or(true, |(_, s)| cs > s) {
                            best = Some((d, cs));
                        }
                    }
                    best.map(|(d, cs)| (d as f64, similarity_to_confidence(cs)))
                })
                .collect()
        })
        .collect();
    let mut disp = ScalarImage::invalid(w, h);
    let mut conf = ScalarImage::invalid(w, h);
    for (y, row) in rows.into_iter().enumerate() {
        for (x, r) in row.into_iter().enumerate() {
            if let Some((d, c)) = r {
                disp.set(x, y, d);
                conf.set(x, y, c);
            }
        }
    }
    Ok((disp, conf))
}

/// Confidence of a given left-view disparity map: cosine similarity between
/// the left patch at `x` and the right patch at `x - d`.
pub fn disparity_confidence(
    left: &ScalarImage,
    right: &ScalarImage,
    disp: &ScalarImage,
    patch_radius: usize,
) -> Result<ScalarImage> {
    left.check_shape(right, "left vs right image")?;
    left.check_shape(disp, "image vs disparity")?;
    let fl = patch_featurize(left, patch_radius)?;
    let fr = patch_featurize(right, patch_radius)?;
    let back = disp.map_valid(|d| Some(-d));
    cosine_confidence(&fl, &shift_features(&fr, &back)?)
}
