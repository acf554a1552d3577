//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalSystem<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
    pub rhs: Vec<T>,
}

impl<T: Scalar> TridiagonalSystem<T> {
    pub fn new(lower: Vec<T>, diag: Vec<T>, upper: Vec<T>, rhs: Vec<T>) -> Result<Self> {
        let n = diag.len();
        for (name, len) in [("lower", lower.len()), ("upper", upper.len()), ("rhs", rhs.len())] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: format!("{name} of length {n}"),
                    actual: format!("length {len}"),
                });
            }
        }
        Ok(TridiagonalSystem {
            lower,
            diag,
            upper,
            rhs,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A x` for the matrix of this system.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc = acc + self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    acc = acc + self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }
}

/// Solves the system by forward elimination and back substitution.
pub fn thomas_solve<T: Scalar>(sys: &TridiagonalSystem<T>) -> Result<Vec<T>> {
    let n = sys.len();
    let mut x = sys.rhs.clone();
    let mut scratch = vec![T::zero(); n];
    solve_in_place(&sys.lower, &sys.diag, &sys.upper, &mut x, &mut scratch)?;
    Ok(x)
}

/// In-place Thomas sweep; `rhs` is overwritten by the solution.
pub(crate) fn solve_in_place<T: Scalar>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    rhs: &mut [T],
    scratch: &mut [T],
) -> Result<()> {
    let n = rhs.len();
    if n == 0 {
        return Ok(());
    }
    let mut pivot = diag[0];
    if pivot == T::zero() {
        return Err(Error::ZeroPivot { row: 0 });
    }
    scratch[0] = if n > 1 { upper[0] / pivot } else { T::zero() };
    rhs[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * scratch[i - 1];
        if pivot == T::zero() {
            return Err(Error::ZeroPivot { row: i });
        }
        scratch[i] = if i + 1 < n { upper[i] / pivot } else { T::zero() };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - scratch[i] * rhs[i + 1];
    }
    Ok(())
}
