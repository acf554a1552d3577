use std::ops::Index;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A row-major `height x width` grid of finite intensities.
///
/// Values are nominally in `[0, 1]` but intermediate filter results may leave
/// that interval; only [`save_image`](super::save_image) clamps.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> Plane<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::TooSmall {
                height,
                width,
                min_height: 1,
                min_width: 1,
            });
        }
        if data.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", height * width),
                actual: format!("{} values", data.len()),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Plane {
            height,
            width,
            data,
        })
    }

    /// Builds a plane without validation. Callers guarantee the invariants.
    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Plane {
            height,
            width,
            data,
        }
    }

    pub fn filled(height: usize, width: usize, value: T) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::filled(height, width, T::zero())
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`.
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Plane::from_raw(self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two planes of equal size.
    pub fn zip_map(&self, other: &Plane<T>, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_dims(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Plane::from_raw(self.height, self.width, data))
    }

    pub fn transpose(&self) -> Self {
        let (h, w) = self.dims();
        let mut data = vec![T::zero(); h * w];
        for r in 0..h {
            for c in 0..w {
                data[c * h + r] = self.data[r * w + c];
            }
        }
        Plane::from_raw(w, h, data)
    }

    pub fn mean(&self) -> T {
        self.data.iter().copied().sum::<T>() / T::from_count(self.len())
    }

    pub fn min_value(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn clamp(&self, lo: T, hi: T) -> Self {
        self.map(|v| v.max(lo).min(hi))
    }

    /// Largest absolute pointwise difference.
    pub fn max_abs_diff(&self, other: &Plane<T>) -> Result<T> {
        self.ensure_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max))
    }

    pub fn ensure_same_dims(&self, other: &Plane<T>) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }

    /// Fails unless the plane is at least `min_height x min_width`.
    pub fn require_min(&self, min_height: usize, min_width: usize) -> Result<()> {
        if self.height < min_height || self.width < min_width {
            return Err(Error::TooSmall {
                height: self.height,
                width: self.width,
                min_height,
                min_width,
            });
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> Plane<U> {
        Plane::from_raw(
            self.height,
            self.width,
            self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        )
    }
}

impl<T> Index<(usize, usize)> for Plane<T> {
    type Output = T;

    #[inline]
    fn index(&self, (row, col): (usize, usize)) -> &T {
        &self.data[row * self.width + col]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length_and_non_finite() {
        assert!(Plane::<f64>::new(2, 2, vec![0.0; 3]).is_err());
        assert!(matches!(
            Plane::new(1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite)
        ));
        assert!(Plane::<f64>::new(0, 3, vec![]).is_err());
    }

    #[test]
    fn transpose_swaps_indices() {
        let p = Plane::from_fn(2, 3, |r, c| (r * 10 + c) as f64).unwrap();
        let t = p.transpose();
        assert_eq!(t.dims(), (3, 2));
        assert_eq!(t[(2, 1)], 12.0);
        assert_eq!(t.transpose(), p);
    }
}
