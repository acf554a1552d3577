//! Alternating-direction solver built from 1D tridiagonal passes.
//!
//! Pass pair 1 is a separable smoothing: a horizontal then a vertical
//! tridiagonal solve with the edge weights scaled by `c`, the gradient-target
//! term scaled alike. It is a cheap first approximation of the 2D solution.
//!
//! Every later pair is an alternating zebra line relaxation: each row, then
//! each column, is solved exactly with the neighbouring lines held fixed
//! (even lines first, then odd lines). Every line solve minimizes the
//! quadratic over that line's unknowns, so the energy-norm error never
//! increases and the iteration converges to the exact 2D solution.
//!
//! The exact solution is a fixed point of both kinds of pass.

use super::problem::Problem;
use super::tridiag::solve_in_place;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Weight scale of the initial separable pair.
const INITIAL_SCALE: f64 = 0.5;

pub(crate) fn solve<T: Scalar>(problem: &Problem<T>, passes: usize) -> Result<Vec<T>> {
    let (h, w) = (problem.height, problem.width);
    let mut u = problem.data.clone();
    // A single row or column is exactly tridiagonal.
    if h == 1 || w == 1 {
        if h == 1 {
            separable_rows(problem, &mut u, T::one())?;
        } else {
            separable_columns(problem, &mut u, T::one())?;
        }
        return Ok(u);
    }
    let c = T::lit(INITIAL_SCALE);
    separable_rows(problem, &mut u, c)?;
    separable_columns(problem, &mut u, c)?;
    let rhs = problem.rhs();
    for _ in 1..passes {
        relax_rows(problem, &rhs, &mut u)?;
        relax_columns(problem, &rhs, &mut u)?;
    }
    Ok(u)
}

/// `(I + s Lx) u' = u + s Dx' Wx gx`, one tridiagonal system per row.
fn separable_rows<T: Scalar>(p: &Problem<T>, u: &mut [T], s: T) -> Result<()> {
    let w = p.width;
    let mut sys = LineSystem::new(w);
    for m in 0..p.height {
        let base = m * w;
        let weights = &p.wx[base..base + w];
        for n in 0..w {
            let left = if n > 0 { s * weights[n - 1] } else { T::zero() };
            let right = s * weights[n];
            sys.lower[n] = -left;
            sys.upper[n] = -right;
            sys.diag[n] = T::one() + left + right;
        }
        let row = &mut u[base..base + w];
        for (x, &b) in row.iter_mut().zip(&p.div_x[base..base + w]) {
            *x = *x + s * b;
        }
        sys.solve(row)?;
    }
    Ok(())
}

/// `(I + s Ly) u' = u + s Dy' Wy gy`; all columns are swept together row by row.
fn separable_columns<T: Scalar>(p: &Problem<T>, u: &mut [T], s: T) -> Result<()> {
    let (h, w) = (p.height, p.width);
    for i in 0..h * w {
        u[i] = u[i] + s * p.div_y[i];
    }
    let mut cprime = vec![T::zero(); h * w];
    for m in 0..h {
        for n in 0..w {
            let i = m * w + n;
            let up = if m > 0 { s * p.wy[i - w] } else { T::zero() };
            let down = s * p.wy[i];
            let mut pivot = T::one() + up + down;
            let mut acc = u[i];
            if m > 0 {
                pivot = pivot + up * cprime[i - w];
                acc = acc + up * u[i - w];
            }
            if pivot == T::zero() {
                return Err(Error::ZeroPivot { row: m });
            }
            cprime[i] = -down / pivot;
            u[i] = acc / pivot;
        }
    }
    for m in (0..h - 1).rev() {
        for n in 0..w {
            let i = m * w + n;
            u[i] = u[i] - cprime[i] * u[i + w];
        }
    }
    Ok(())
}

/// Solves every row of one parity exactly, with the rows above and below fixed.
fn relax_rows<T: Scalar>(p: &Problem<T>, rhs: &[T], u: &mut [T]) -> Result<()> {
    let (h, w) = (p.height, p.width);
    let mut sys = LineSystem::new(w);
    let mut line = vec![T::zero(); w];
    for parity in 0..2 {
        for m in (parity..h).step_by(2) {
            let base = m * w;
            for n in 0..w {
                let i = base + n;
                let left = if n > 0 { p.wx[i - 1] } else { T::zero() };
                let right = p.wx[i];
                let mut diag = T::one() + left + right;
                let mut acc = rhs[i];
                if m > 0 {
                    diag = diag + p.wy[i - w];
                    acc = acc + p.wy[i - w] * u[i - w];
                }
                if m + 1 < h {
                    diag = diag + p.wy[i];
                    acc = acc + p.wy[i] * u[i + w];
                }
                sys.lower[n] = -left;
                sys.upper[n] = -right;
                sys.diag[n] = diag;
                line[n] = acc;
            }
            sys.solve(&mut line)?;
            u[base..base + w].copy_from_slice(&line);
        }
    }
    Ok(())
}

/// Column counterpart of [`relax_rows`], sweeping all columns of one parity
/// together so memory is walked row by row.
fn relax_columns<T: Scalar>(p: &Problem<T>, rhs: &[T], u: &mut [T]) -> Result<()> {
    let (h, w) = (p.height, p.width);
    let mut cprime = vec![T::zero(); h * w];
    let mut dprime = vec![T::zero(); h * w];
    for parity in 0..2 {
        for m in 0..h {
            for n in (parity..w).step_by(2) {
                let i = m * w + n;
                let up = if m > 0 { p.wy[i - w] } else { T::zero() };
                let down = p.wy[i];
                let mut diag = T::one() + up + down;
                let mut acc = rhs[i];
                if n > 0 {
                    diag = diag + p.wx[i - 1];
                    acc = acc + p.wx[i - 1] * u[i - 1];
                }
                if n + 1 < w {
                    diag = diag + p.wx[i];
                    acc = acc + p.wx[i] * u[i + 1];
                }
                if m > 0 {
                    diag = diag + up * cprime[i - w];
                    acc = acc + up * dprime[i - w];
                }
                if diag == T::zero() {
                    return Err(Error::ZeroPivot { row: m });
                }
                cprime[i] = -down / diag;
                dprime[i] = acc / diag;
            }
        }
        for n in (parity..w).step_by(2) {
            u[(h - 1) * w + n] = dprime[(h - 1) * w + n];
        }
        for m in (0..h - 1).rev() {
            for n in (parity..w).step_by(2) {
                let i = m * w + n;
                u[i] = dprime[i] - cprime[i] * u[i + w];
            }
        }
    }
    Ok(())
}

struct LineSystem<T> {
    lower: Vec<T>,
    diag: Vec<T>,
    upper: Vec<T>,
    scratch: Vec<T>,
}

impl<T: Scalar> LineSystem<T> {
    fn new(n: usize) -> Self {
        LineSystem {
            lower: vec![T::zero(); n],
            diag: vec![T::zero(); n],
            upper: vec![T::zero(); n],
            scratch: vec![T::zero(); n],
        }
    }

    fn solve(&mut self, rhs: &mut [T]) -> Result<()> {
        solve_in_place(&self.lower, &self.diag, &self.upper, rhs, &mut self.scratch)
    }
}
