use crate::error::{Error, Result};
use crate::raster::Plane;
use crate::scalar::Scalar;

/// Three aligned color planes.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage<T> {
    r: Plane<T>,
    g: Plane<T>,
    b: Plane<T>,
}

/// Plane selector used by the metrics and feature extraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Red,
    Green,
    Blue,
    /// Rec. 601 luma, `0.299 R + 0.587 G + 0.114 B`.
    Luminance,
}

impl<T: Scalar> RgbImage<T> {
    pub fn new(r: Plane<T>, g: Plane<T>, b: Plane<T>) -> Result<Self> {
        r.ensure_same_dims(&g)?;
        r.ensure_same_dims(&b)?;
        Ok(RgbImage { r, g, b })
    }

    /// Image with `r = g = b = plane`.
    pub fn gray(plane: Plane<T>) -> Self {
        RgbImage {
            r: plane.clone(),
            g: plane.clone(),
            b: plane,
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [T; 3]) -> Result<Self> {
        let n = height * width;
        let (mut r, mut g, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for row in 0..height {
            for col in 0..width {
                let [pr, pg, pb] = f(row, col);
                r.push(pr);
                g.push(pg);
                b.push(pb);
            }
        }
        Ok(RgbImage {
            r: Plane::new(height, width, r)?,
            g: Plane::new(height, width, g)?,
            b: Plane::new(height, width, b)?,
        })
    }

    pub fn red(&self) -> &Plane<T> {
        &self.r
    }

    pub fn green(&self) -> &Plane<T> {
        &self.g
    }

    pub fn blue(&self) -> &Plane<T> {
        &self.b
    }

    pub fn planes(&self) -> [&Plane<T>; 3] {
        [&self.r, &self.g, &self.b]
    }

    pub fn into_planes(self) -> [Plane<T>; 3] {
        [self.r, self.g, self.b]
    }

    pub fn dims(&self) -> (usize, usize) {
        self.r.dims()
    }

    pub fn height(&self) -> usize {
        self.r.height()
    }

    pub fn width(&self) -> usize {
        self.r.width()
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [T; 3] {
        [self.r.get(row, col), self.g.get(row, col), self.b.get(row, col)]
    }

    /// Applies `f` to each channel with the channel index `0..3`.
    pub fn map_channels(&self, mut f: impl FnMut(usize, &Plane<T>) -> Plane<T>) -> Self {
        RgbImage {
            r: f(0, &self.r),
            g: f(1, &self.g),
            b: f(2, &self.b),
        }
    }

    pub fn channel(&self, channel: Channel) -> Plane<T> {
        match channel {
            Channel::Red => self.r.clone(),
            Channel::Green => self.g.clone(),
            Channel::Blue => self.b.clone(),
            Channel::Luminance => {
                let (wr, wg, wb) = (T::lit(0.299), T::lit(0.587), T::lit(0.114));
                let data = (0..self.r.len())
                    .map(|i| wr * self.r.data()[i] + wg * self.g.data()[i] + wb * self.b.data()[i])
                    .collect();
                Plane::from_raw(self.height(), self.width(), data)
            }
        }
    }

    pub fn max_abs_diff(&self, other: &RgbImage<T>) -> Result<T> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        let mut worst = T::zero();
        for (a, b) in self.planes().into_iter().zip(other.planes()) {
            worst = worst.max(a.max_abs_diff(b)?);
        }
        Ok(worst)
    }

    pub fn cast<U: Scalar>(&self) -> RgbImage<U> {
        RgbImage {
            r: self.r.cast(),
            g: self.g.cast(),
            b: self.b.cast(),
        }
    }
}

/// Pointwise minimum over the three color channels.
pub fn min_of_channels<T: Scalar>(img: &RgbImage<T>) -> Plane<T> {
    let data = img
        .r
        .data()
        .iter()
        .zip(img.g.data())
        .zip(img.b.data())
        .map(|((&r, &g), &b)| r.min(g).min(b))
        .collect();
    Plane::from_raw(img.height(), img.width(), data)
}
