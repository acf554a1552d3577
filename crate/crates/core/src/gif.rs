//! The guided image filter: a local linear model `O = a G + b` fitted per
//! window, with the coefficients averaged over all windows covering a pixel.

use crate::error::{Error, Result};
use crate::raster::Plane;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GifParams<T> {
    /// Window half-size; windows are `(2r + 1) x (2r + 1)`.
    pub radius: usize,
    /// Regularization added to the window variance.
    pub eps: T,
}

impl<T: Scalar> Default for GifParams<T> {
    fn default() -> Self {
        GifParams {
            radius: 16,
            eps: T::lit(0.01),
        }
    }
}

impl<T: Scalar> GifParams<T> {
    pub fn validate(&self) -> Result<()> {
        validate_radius(self.radius)?;
        if !(self.eps >= T::zero() && self.eps.is_finite()) {
            return Err(Error::invalid("eps", format!("must be finite and >= 0, got {}", self.eps)));
        }
        Ok(())
    }
}

fn validate_radius(radius: usize) -> Result<()> {
    if radius == 0 {
        return Err(Error::invalid("radius", "must be >= 1"));
    }
    Ok(())
}

/// Mean over the `(2r + 1)^2` window around each pixel, truncated at the
/// borders, from a summed-area table.
pub fn box_mean<T: Scalar>(plane: &Plane<T>, radius: usize) -> Result<Plane<T>> {
    validate_radius(radius)?;
    Ok(box_mean_unchecked(plane, radius))
}

fn box_mean_unchecked<T: Scalar>(plane: &Plane<T>, radius: usize) -> Plane<T> {
    let (h, w) = plane.dims();
    let stride = w + 1;
    // sat[(r, c)] holds the sum over rows < r and columns < c
    let mut sat = vec![T::zero(); (h + 1) * stride];
    for r in 0..h {
        let mut run = T::zero();
        for (c, &v) in plane.row(r).iter().enumerate() {
            run = run + v;
            sat[(r + 1) * stride + c + 1] = sat[r * stride + c + 1] + run;
        }
    }
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        let (top, bottom) = (r.saturating_sub(radius), (r + radius + 1).min(h));
        for c in 0..w {
            let (left, right) = (c.saturating_sub(radius), (c + radius + 1).min(w));
            let sum = sat[bottom * stride + right] - sat[top * stride + right] - sat[bottom * stride + left]
                + sat[top * stride + left];
            out.push(sum / T::from_count((bottom - top) * (right - left)));
        }
    }
    Plane::from_raw(h, w, out)
}

/// Filters `input` with the local linear model of `guide`.
///
/// Per window: `a = (mean(G I) - mean(G) mean(I)) / (var(G) + eps)` and
/// `b = mean(I) - a mean(G)`; a window with `var(G) + eps = 0` gets `a = 0`.
/// The output is `mean(a) G + mean(b)`.
pub fn guided_filter<T: Scalar>(input: &Plane<T>, guide: &Plane<T>, params: &GifParams<T>) -> Result<Plane<T>> {
    params.validate()?;
    input.ensure_same_dims(guide)?;
    let r = params.radius;
    let mean_g = box_mean_unchecked(guide, r);
    let mean_i = box_mean_unchecked(input, r);
    let mean_gi = box_mean_unchecked(&guide.zip_map(input, |g, i| g * i)?, r);
    let mean_gg = box_mean_unchecked(&guide.map(|g| g * g), r);
    let n = input.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for k in 0..n {
        let (mg, mi) = (mean_g.data()[k], mean_i.data()[k]);
        let var = (mean_gg.data()[k] - mg * mg).max(T::zero());
        let cov = mean_gi.data()[k] - mg * mi;
        let denom = var + params.eps;
        let ak = if denom > T::zero() { cov / denom } else { T::zero() };
        a.push(ak);
        b.push(mi - ak * mg);
    }
    let (h, w) = input.dims();
    let mean_a = box_mean_unchecked(&Plane::from_raw(h, w, a), r);
    let mean_b = box_mean_unchecked(&Plane::from_raw(h, w, b), r);
    let data = guide
        .data()
        .iter()
        .zip(mean_a.data().iter().zip(mean_b.data()))
        .map(|(&g, (&a, &b))| a * g + b)
        .collect();
    Ok(Plane::from_raw(h, w, data))
}
