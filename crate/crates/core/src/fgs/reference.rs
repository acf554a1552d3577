//! Direct solver for the assembled 2D system.
//!
//! The matrix is assembled into band storage (half bandwidth = the shorter
//! image side, after transposing if needed) and factored by Gaussian
//! elimination without pivoting, which is stable because the system is
//! symmetric positive definite and diagonally dominant.

use super::problem::Problem;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest system the reference solver accepts.
pub const REFERENCE_LIMIT: usize = 4096;

pub(crate) fn solve<T: Scalar>(problem: &Problem<T>) -> Result<Vec<T>> {
    let unknowns = problem.height * problem.width;
    if unknowns > REFERENCE_LIMIT {
        return Err(Error::TooLargeForReference {
            unknowns,
            limit: REFERENCE_LIMIT,
        });
    }
    if problem.width > problem.height {
        let t = problem.transposed();
        let x = solve_banded(&t)?;
        let (h, w) = (problem.height, problem.width);
        let mut out = vec![T::zero(); h * w];
        for m in 0..h {
            for n in 0..w {
                out[m * w + n] = x[n * h + m];
            }
        }
        return Ok(out);
    }
    solve_banded(problem)
}

fn solve_banded<T: Scalar>(p: &Problem<T>) -> Result<Vec<T>> {
    let (h, w) = (p.height, p.width);
    let n = h * w;
    let band = w;
    let stride = 2 * band + 1;
    // a[i * stride + (j + band - i)] holds A[i][j] for |i - j| <= band
    let mut a = vec![T::zero(); n * stride];
    let at = |i: usize, j: usize| i * stride + j + band - i;
    for m in 0..h {
        for c in 0..w {
            let i = m * w + c;
            a[at(i, i)] = a[at(i, i)] + T::one();
            if c + 1 < w {
                let wt = p.wx[i];
                a[at(i, i)] = a[at(i, i)] + wt;
                a[at(i + 1, i + 1)] = a[at(i + 1, i + 1)] + wt;
                a[at(i, i + 1)] = a[at(i, i + 1)] - wt;
                a[at(i + 1, i)] = a[at(i + 1, i)] - wt;
            }
            if m + 1 < h {
                let wt = p.wy[i];
                let j = i + w;
                a[at(i, i)] = a[at(i, i)] + wt;
                a[at(j, j)] = a[at(j, j)] + wt;
                a[at(i, j)] = a[at(i, j)] - wt;
                a[at(j, i)] = a[at(j, i)] - wt;
            }
        }
    }
    let mut x = p.rhs();
    for k in 0..n {
        let pivot = a[at(k, k)];
        if pivot == T::zero() {
            return Err(Error::ZeroPivot { row: k });
        }
        let last = (k + band).min(n - 1);
        for i in k + 1..=last {
            let factor = a[at(i, k)] / pivot;
            if factor == T::zero() {
                continue;
            }
            for j in k..=last {
                a[at(i, j)] = a[at(i, j)] - factor * a[at(k, j)];
            }
            x[i] = x[i] - factor * x[k];
        }
    }
    for k in (0..n).rev() {
        let last = (k + band).min(n - 1);
        let mut acc = x[k];
        for j in k + 1..=last {
            acc = acc - a[at(k, j)] * x[j];
        }
        x[k] = acc / a[at(k, k)];
    }
    Ok(x)
}
