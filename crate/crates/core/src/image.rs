//! Masked float images used for disparity, depth, confidence and features.
//!
//! Invalid pixels hold NaN in `data`, but the mask is authoritative.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    valid: Vec<bool>,
}

impl ScalarImage {
    /// All-invalid image.
    pub fn invalid(width: usize, height: usize) -> Self {
        ScalarImage {
            width,
            height,
            data: vec![f64::NAN; width * height],
            valid: vec![false; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        let mut img = Self::invalid(width, height);
        for i in 0..width * height {
            img.set_index(i, value);
        }
        img
    }

    /// Builds an image from row-major values; non-finite entries become invalid.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Shape(format!(
                "{} values for a {width}x{height} image",
                values.len()
            )));
        }
        let valid: Vec<bool> = values.iter().map(|v| v.is_finite()).collect();
        let data = values
            .into_iter()
            .zip(&valid)
            .map(|(v, &ok)| if ok { v } else { f64::NAN })
            .collect();
        Ok(ScalarImage {
            width,
            height,
            data,
            valid,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.get_index(y * self.width + x)
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> Option<f64> {
        if self.valid[i] {
            Some(self.data[i])
        } else {
            None
        }
    }

    /// Stores `value`; non-finite values mark the pixel invalid.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        let i = y * self.width + x;
        self.set_index(i, value);
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, value: f64) {
        if value.is_finite() {
            self.data[i] = value;
            self.valid[i] = true;
        } else {
            self.invalidate_index(i);
        }
    }

    #[inline]
    pub fn invalidate(&mut self, x: usize, y: usize) {
        let i = y * self.width + x;
        self.invalidate_index(i);
    }

    #[inline]
    pub fn invalidate_index(&mut self, i: usize) {
        self.data[i] = f64::NAN;
        self.valid[i] = false;
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Raw row-major values (NaN where invalid).
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn same_shape(&self, other: &ScalarImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &ScalarImage, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    /// Applies `f` to every valid pixel; results that are `None` or non-finite become invalid.
    pub fn map_valid(&self, mut f: impl FnMut(f64) -> Option<f64>) -> ScalarImage {
        let mut out = ScalarImage::invalid(self.width, self.height);
        for i in 0..self.len() {
            if let Some(v) = self.get_index(i).and_then(&mut f) {
                out.set_index(i, v);
            }
        }
        out
    }
}

/// Per-pixel feature vectors of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    width: usize,
    height: usize,
    dim: usize,
    data: Vec<f64>,
    valid: Vec<bool>,
}

impl FeatureImage {
    pub fn invalid(width: usize, height: usize, dim: usize) -> Self {
        FeatureImage {
            width,
            height,
            dim,
            data: vec![0.0; width * height * dim],
            valid: vec![false; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn feature_dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<&[f64]> {
        let i = y * self.width + x;
        if self.valid[i] {
            Some(&self.data[i * self.dim..(i + 1) * self.dim])
        } else {
            None
        }
    }

    /// Stores a feature vector; it is rejected (pixel invalid) unless all components are finite.
    pub fn set(&mut self, x: usize, y: usize, feature: &[f64]) -> Result<()> {
        if feature.len() != self.dim {
            return Err(Error::Shape(format!(
                "feature of length {} in a {}-dim image",
                feature.len(),
                self.dim
            )));
        }
        let i = y * self.width + x;
        if feature.iter().all(|v| v.is_finite()) {
            self.data[i * self.dim..(i + 1) * self.dim].copy_from_slice(feature);
            self.valid[i] = true;
        } else {
            self.invalidate(x, y);
        }
        Ok(())
    }

    pub fn invalidate(&mut self, x: usize, y: usize) {
        let i = y * self.width + x;
        self.data[i * self.dim..(i + 1) * self.dim].fill(0.0);
        self.valid[i] = false;
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub(crate) fn row_mut(&mut self, y: usize) -> (&mut [f64], &mut [bool]) {
        let w = self.width;
        let d = self.dim;
        (
            &mut self.data[y * w * d..(y + 1) * w * d],
            &mut self.valid[y * w..(y + 1) * w],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_values_are_invalid() {
        let img = ScalarImage::from_values(2, 1, vec![1.0, f64::INFINITY]).unwrap();
        assert_eq!(img.get(0, 0), Some(1.0));
        assert_eq!(img.get(1, 0), None);
        assert!(img.values()[1].is_nan());
        assert!(ScalarImage::from_values(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn feature_set_rejects_wrong_dim() {
        let mut f = FeatureImage::invalid(2, 2, 3);
        assert!(f.set(0, 0, &[1.0, 2.0]).is_err());
        f.set(1, 1, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.get(1, 1), Some(&[1.0, 2.0, 3.0][..]));
        f.set(1, 1, &[1.0, f64::NAN, 3.0]).unwrap();
        assert_eq!(f.get(1, 1), None);
    }
}
