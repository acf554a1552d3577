//! The quadratic both global filters minimize:
//!
//! `sum (x - f)^2 + sum wx (Dx x - gx)^2 + sum wy (Dy x - gy)^2`
//!
//! with forward differences `Dx`, `Dy` that vanish on the last column/row.
//! Its normal equations are
//! `(I + Dx' Wx Dx + Dy' Wy Dy) x = f + Dx' Wx gx + Dy' Wy gy`.

use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub(crate) struct Problem<T> {
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
    /// Weight of the edge between `(m, n)` and `(m, n + 1)`; zero on the last column.
    pub wx: Vec<T>,
    /// Weight of the edge between `(m, n)` and `(m + 1, n)`; zero on the last row.
    pub wy: Vec<T>,
    /// `Dx' Wx gx`.
    pub div_x: Vec<T>,
    /// `Dy' Wy gy`.
    pub div_y: Vec<T>,
}

impl<T: Scalar> Problem<T> {
    /// `wx`/`wy` may carry values on the boundary; they are cleared here.
    pub fn new(
        height: usize,
        width: usize,
        data: Vec<T>,
        mut wx: Vec<T>,
        mut wy: Vec<T>,
        targets: Option<(&[T], &[T])>,
    ) -> Self {
        for m in 0..height {
            wx[m * width + width - 1] = T::zero();
        }
        for n in 0..width {
            wy[(height - 1) * width + n] = T::zero();
        }
        let mut div_x = vec![T::zero(); height * width];
        let mut div_y = vec![T::zero(); height * width];
        if let Some((gx, gy)) = targets {
            for m in 0..height {
                for n in 0..width.saturating_sub(1) {
                    let i = m * width + n;
                    let flux = wx[i] * gx[i];
                    div_x[i] = div_x[i] - flux;
                    div_x[i + 1] = div_x[i + 1] + flux;
                }
            }
            for m in 0..height.saturating_sub(1) {
                for n in 0..width {
                    let i = m * width + n;
                    let flux = wy[i] * gy[i];
                    div_y[i] = div_y[i] - flux;
                    div_y[i + width] = div_y[i + width] + flux;
                }
            }
        }
        Problem {
            height,
            width,
            data,
            wx,
            wy,
            div_x,
            div_y,
        }
    }

    #[cfg(test)]
    /// `(I + Dx' Wx Dx + Dy' Wy Dy) x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let (h, w) = (self.height, self.width);
        let mut out = x.to_vec();
        for m in 0..h {
            for n in 0..w {
                let i = m * w + n;
                if n + 1 < w {
                    let flow = self.wx[i] * (x[i] - x[i + 1]);
                    out[i] = out[i] + flow;
                    out[i + 1] = out[i + 1] - flow;
                }
                if m + 1 < h {
                    let flow = self.wy[i] * (x[i] - x[i + w]);
                    out[i] = out[i] + flow;
                    out[i + w] = out[i + w] - flow;
                }
            }
        }
        out
    }

    pub fn rhs(&self) -> Vec<T> {
        self.data
            .iter()
            .zip(&self.div_x)
            .zip(&self.div_y)
            .map(|((&f, &bx), &by)| f + bx + by)
            .collect()
    }

    pub fn transposed(&self) -> Self {
        let (h, w) = (self.height, self.width);
        let t = |v: &[T]| {
            let mut out = vec![T::zero(); h * w];
            for m in 0..h {
                for n in 0..w {
                    out[n * h + m] = v[m * w + n];
                }
            }
            out
        };
        Problem {
            height: w,
            width: h,
            data: t(&self.data),
            wx: t(&self.wy),
            wy: t(&self.wx),
            div_x: t(&self.div_y),
            div_y: t(&self.div_x),
        }
    }
}
