//! Global structure-transfer and edge-preserving smoothing filters.
//!
//! Both filters minimize a screened quadratic over the whole image. The
//! structure-transfer filter solves
//!
//! ```text
//! (lambda I + Dx'Dx + Dy'Dy) O = lambda I_in + Dx' Vh + Dy' Vv
//! ```
//!
//! and the smoothing filter solves
//!
//! ```text
//! (I + gamma (Dx' Bx Dx + Dy' By Dy)) phi = O*,   B = diag(1 / (|V|^theta + eps))
//! ```
//!
//! where `Dx`, `Dy` are forward differences that vanish on the last
//! column/row. The production path approximates each system with `T`
//! alternating rows-then-columns tridiagonal passes; [`solve_dense_reference`]
//! solves the assembled system directly and serves as the accuracy oracle.

mod problem;
mod reference;
mod separable;
mod tridiag;

use problem::Problem;
pub use reference::REFERENCE_LIMIT;
pub use tridiag::{thomas_solve, TridiagonalSystem};

use crate::error::{Error, Result};
use crate::raster::Plane;
use crate::scalar::Scalar;

/// Guidance gradients `(Vh, Vv)`.
///
/// The last column of `vh` and the last row of `vv` are always zero.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    vh: Plane<T>,
    vv: Plane<T>,
}

impl<T: Scalar> VectorField<T> {
    /// Pairs two planes into a field, zeroing the boundary entries that have
    /// no forward neighbor.
    pub fn new(vh: Plane<T>, vv: Plane<T>) -> Result<Self> {
        vh.ensure_same_dims(&vv)?;
        let (h, w) = vh.dims();
        let mut hd = vh.into_vec();
        let mut vd = vv.into_vec();
        for m in 0..h {
            hd[m * w + w - 1] = T::zero();
        }
        for n in 0..w {
            vd[(h - 1) * w + n] = T::zero();
        }
        Ok(VectorField {
            vh: Plane::from_raw(h, w, hd),
            vv: Plane::from_raw(h, w, vd),
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        let z = Plane::zeros(height, width)?;
        Ok(VectorField { vh: z.clone(), vv: z })
    }

    /// Forward differences of `plane`.
    pub fn forward_gradient(plane: &Plane<T>) -> Self {
        let (h, w) = plane.dims();
        let vh = Plane::from_raw(
            h,
            w,
            (0..h * w)
                .map(|i| {
                    let (m, n) = (i / w, i % w);
                    if n + 1 < w {
                        plane.get(m, n + 1) - plane.get(m, n)
                    } else {
                        T::zero()
                    }
                })
                .collect(),
        );
        let vv = Plane::from_raw(
            h,
            w,
            (0..h * w)
                .map(|i| {
                    let (m, n) = (i / w, i % w);
                    if m + 1 < h {
                        plane.get(m + 1, n) - plane.get(m, n)
                    } else {
                        T::zero()
                    }
                })
                .collect(),
        );
        VectorField { vh, vv }
    }

    pub fn vh(&self) -> &Plane<T> {
        &self.vh
    }

    pub fn vv(&self) -> &Plane<T> {
        &self.vv
    }

    pub fn dims(&self) -> (usize, usize) {
        self.vh.dims()
    }

    /// The field of the transposed image: `(Vv', Vh')`.
    pub fn transposed(&self) -> Self {
        VectorField {
            vh: self.vv.transpose(),
            vv: self.vh.transpose(),
        }
    }
}

/// Parameters of the structure-transfer filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureTransferParams<T> {
    /// Data-fidelity weight.
    pub lambda: T,
    /// Number of alternating pass pairs.
    pub passes: usize,
}

impl<T: Scalar> Default for StructureTransferParams<T> {
    fn default() -> Self {
        StructureTransferParams {
            lambda: T::lit(64.0),
            passes: 3,
        }
    }
}

impl<T: Scalar> StructureTransferParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > T::zero() && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive, got {}", self.lambda)));
        }
        validate_passes(self.passes)
    }
}

/// Parameters of the edge-preserving smoothing filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeSmoothParams<T> {
    pub gamma: T,
    pub theta: T,
    pub eps: T,
    pub passes: usize,
}

impl<T: Scalar> Default for EdgeSmoothParams<T> {
    /// `gamma = 2048`, `theta = 13/8`, `eps = 1/64`, three passes.
    fn default() -> Self {
        EdgeSmoothParams {
            gamma: T::lit(2048.0),
            theta: T::lit(13.0 / 8.0),
            eps: T::lit(1.0 / 64.0),
            passes: 3,
        }
    }
}

impl<T: Scalar> EdgeSmoothParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > T::zero() && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("must be positive, got {}", self.gamma)));
        }
        self.validate_shape()?;
        validate_passes(self.passes)
    }

    fn validate_shape(&self) -> Result<()> {
        if !(self.eps > T::zero() && self.eps.is_finite()) {
            return Err(Error::invalid("eps", format!("must be positive, got {}", self.eps)));
        }
        if !self.theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite"));
        }
        Ok(())
    }
}

fn validate_passes(passes: usize) -> Result<()> {
    if passes == 0 {
        return Err(Error::invalid("passes", "must be at least 1"));
    }
    Ok(())
}

/// Which system [`solve_dense_reference`] assembles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceProblem<T> {
    Structure(StructureTransferParams<T>),
    Smooth(EdgeSmoothParams<T>),
}

/// Fits an output close to `input` whose forward differences follow `field`.
pub fn structure_transfer<T: Scalar>(
    input: &Plane<T>,
    field: &VectorField<T>,
    params: &StructureTransferParams<T>,
) -> Result<Plane<T>> {
    params.validate()?;
    let problem = structure_problem(input, field, params.lambda)?;
    let out = separable::solve(&problem, params.passes)?;
    Ok(Plane::from_raw(input.height(), input.width(), out))
}

/// Smooths `input` with edge weights that shrink across strong guidance gradients.
pub fn edge_preserving_smooth<T: Scalar>(
    input: &Plane<T>,
    field: &VectorField<T>,
    params: &EdgeSmoothParams<T>,
) -> Result<Plane<T>> {
    params.validate()?;
    let problem = smooth_problem(input, field, params)?;
    let out = separable::solve(&problem, params.passes)?;
    Ok(Plane::from_raw(input.height(), input.width(), out))
}

/// Solves either filter's system exactly by direct elimination.
///
/// Limited to [`REFERENCE_LIMIT`] pixels. Unlike the filters themselves this
/// accepts `gamma = 0`, which reduces the smoothing system to the identity.
pub fn solve_dense_reference<T: Scalar>(
    input: &Plane<T>,
    field: &VectorField<T>,
    which: ReferenceProblem<T>,
) -> Result<Plane<T>> {
    if input.len() > REFERENCE_LIMIT {
        return Err(Error::TooLargeForReference {
            unknowns: input.len(),
            limit: REFERENCE_LIMIT,
        });
    }
    let problem = match which {
        ReferenceProblem::Structure(params) => {
            params.validate()?;
            structure_problem(input, field, params.lambda)?
        }
        ReferenceProblem::Smooth(params) => {
            if !(params.gamma >= T::zero() && params.gamma.is_finite()) {
                return Err(Error::invalid("gamma", "must be non-negative"));
            }
            params.validate_shape()?;
            smooth_problem(input, field, &params)?
        }
    };
    let out = reference::solve(&problem)?;
    Ok(Plane::from_raw(input.height(), input.width(), out))
}

// Dividing the structure-transfer system by lambda gives unit data weight
// and uniform edge weights 1/lambda.
fn structure_problem<T: Scalar>(
    input: &Plane<T>,
    field: &VectorField<T>,
    lambda: T,
) -> Result<Problem<T>> {
    check_field(input, field)?;
    let (h, w) = input.dims();
    let weight = T::one() / lambda;
    Ok(Problem::new(
        h,
        w,
        input.data().to_vec(),
        vec![weight; h * w],
        vec![weight; h * w],
        Some((field.vh.data(), field.vv.data())),
    ))
}

fn smooth_problem<T: Scalar>(
    input: &Plane<T>,
    field: &VectorField<T>,
    params: &EdgeSmoothParams<T>,
) -> Result<Problem<T>> {
    check_field(input, field)?;
    let (h, w) = input.dims();
    let weights = |g: &Plane<T>| -> Vec<T> {
        g.data()
            .iter()
            .map(|&v| params.gamma / (v.abs().powf(params.theta) + params.eps))
            .collect()
    };
    Ok(Problem::new(
        h,
        w,
        input.data().to_vec(),
        weights(&field.vh),
        weights(&field.vv),
        None,
    ))
}

fn check_field<T: Scalar>(input: &Plane<T>, field: &VectorField<T>) -> Result<()> {
    if input.dims() != field.dims() {
        return Err(Error::dims(input.dims(), field.dims()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_plane(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Plane<f64> {
        Plane::from_fn(h, w, |_, _| rng.gen()).unwrap()
    }

    fn random_field(rng: &mut ChaCha8Rng, h: usize, w: usize) -> VectorField<f64> {
        VectorField::new(
            Plane::from_fn(h, w, |_, _| rng.gen_range(-0.3..0.3)).unwrap(),
            Plane::from_fn(h, w, |_, _| rng.gen_range(-0.3..0.3)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn field_boundaries_are_zeroed() {
        let f = VectorField::new(Plane::filled(3, 4, 1.0).unwrap(), Plane::filled(3, 4, 1.0).unwrap()).unwrap();
        for m in 0..3 {
            assert_eq!(f.vh()[(m, 3)], 0.0);
        }
        for n in 0..4 {
            assert_eq!(f.vv()[(2, n)], 0.0);
        }
        assert!(VectorField::new(Plane::filled(3, 4, 1.0).unwrap(), Plane::filled(4, 3, 1.0).unwrap()).is_err());
    }

    #[test]
    fn exact_gradient_is_a_fixed_point_of_both_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = random_plane(&mut rng, 12, 9);
        let field = VectorField::forward_gradient(&input);
        for lambda in [1.0, 64.0, 1024.0] {
            let params = StructureTransferParams { lambda, passes: 3 };
            let fast = structure_transfer(&input, &field, &params).unwrap();
            assert!(fast.max_abs_diff(&input).unwrap() < 1e-10);
            let exact = solve_dense_reference(&input, &field, ReferenceProblem::Structure(params)).unwrap();
            assert!(exact.max_abs_diff(&input).unwrap() < 1e-10);
        }
    }

    #[test]
    fn constants_are_preserved() {
        let input = Plane::filled(10, 7, 0.42).unwrap();
        let zero = VectorField::zeros(10, 7).unwrap();
        let st = structure_transfer(&input, &zero, &StructureTransferParams::default()).unwrap();
        assert!(st.max_abs_diff(&input).unwrap() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let field = random_field(&mut rng, 10, 7);
        let sm = edge_preserving_smooth(&input, &field, &EdgeSmoothParams::default()).unwrap();
        assert!(sm.max_abs_diff(&input).unwrap() < 1e-9);
        let exact = solve_dense_reference(&input, &field, ReferenceProblem::Smooth(EdgeSmoothParams::default())).unwrap();
        assert!(exact.max_abs_diff(&input).unwrap() < 1e-9);
    }

    #[test]
    fn vanishing_gamma_returns_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let input = random_plane(&mut rng, 8, 8);
        let field = random_field(&mut rng, 8, 8);
        let params = EdgeSmoothParams {
            gamma: 1e-12,
            ..EdgeSmoothParams::default()
        };
        let out = edge_preserving_smooth(&input, &field, &params).unwrap();
        assert!(out.max_abs_diff(&input).unwrap() < 1e-6);
        let zero = EdgeSmoothParams { gamma: 0.0, ..params };
        let exact = solve_dense_reference(&input, &field, ReferenceProblem::Smooth(zero)).unwrap();
        assert_eq!(exact, input);
    }

    #[test]
    fn single_row_reference_equals_one_thomas_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 9;
        let input = random_plane(&mut rng, 1, n);
        let field = random_field(&mut rng, 1, n);
        let lambda = 2.5;
        let exact = solve_dense_reference(
            &input,
            &field,
            ReferenceProblem::Structure(StructureTransferParams { lambda, passes: 1 }),
        )
        .unwrap();
        // (lambda + Dx'Dx) x = lambda f + Dx' vh, written out as a tridiagonal system
        let vh = field.vh().data();
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut diag = vec![lambda; n];
        let mut rhs: Vec<f64> = input.data().iter().map(|v| lambda * v).collect();
        for i in 0..n - 1 {
            diag[i] += 1.0;
            diag[i + 1] += 1.0;
            upper[i] = -1.0;
            lower[i + 1] = -1.0;
            rhs[i] -= vh[i];
            rhs[i + 1] += vh[i];
        }
        let x = thomas_solve(&TridiagonalSystem::new(lower, diag, upper, rhs).unwrap()).unwrap();
        for (a, b) in exact.data().iter().zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
        let fast = structure_transfer(&input, &field, &StructureTransferParams { lambda, passes: 1 }).unwrap();
        for (a, b) in fast.data().iter().zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
        // a single column goes through the vertical sweep
        let col = structure_transfer(
            &input.transpose(),
            &field.transposed(),
            &StructureTransferParams { lambda, passes: 1 },
        )
        .unwrap();
        for (a, b) in col.data().iter().zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_parameters_and_shapes() {
        let input = Plane::filled(4, 4, 0.5).unwrap();
        let field = VectorField::zeros(4, 4).unwrap();
        let bad = StructureTransferParams { lambda: 0.0, passes: 3 };
        assert!(structure_transfer(&input, &field, &bad).is_err());
        let bad = StructureTransferParams { lambda: 1.0, passes: 0 };
        assert!(structure_transfer(&input, &field, &bad).is_err());
        let bad = EdgeSmoothParams { gamma: -1.0, ..EdgeSmoothParams::default() };
        assert!(edge_preserving_smooth(&input, &field, &bad).is_err());
        let bad = EdgeSmoothParams { eps: 0.0, ..EdgeSmoothParams::default() };
        assert!(edge_preserving_smooth(&input, &field, &bad).is_err());
        let other = VectorField::zeros(4, 5).unwrap();
        assert!(matches!(
            structure_transfer(&input, &other, &StructureTransferParams::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let big = Plane::filled(65, 64, 0.5).unwrap();
        let big_field = VectorField::zeros(65, 64).unwrap();
        assert!(matches!(
            solve_dense_reference(&big, &big_field, ReferenceProblem::Structure(StructureTransferParams::default())),
            Err(Error::TooLargeForReference { .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let input = Plane::<f32>::from_fn(16, 16, |r, c| ((r * 16 + c) % 7) as f32 / 7.0).unwrap();
        let field = VectorField::forward_gradient(&input);
        let out = structure_transfer(&input, &field, &StructureTransferParams::default()).unwrap();
        assert!(out.max_abs_diff(&input).unwrap() < 1e-4);
    }
}
