//! Sparse dissimilarity-constrained coding and the cup-to-disc ratio
//! estimate built on it.
//!
//! A test feature `y` is coded over reference features `X` by minimizing
//! `|y - X w|^2 + lambda1 |d . w|^2 + lambda2 |w|_1`, where `d` holds the
//! distances from `y` to each reference, so dissimilar references are
//! expensive. The CDR estimate is the coefficient-weighted mean of the
//! references' CDRs.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::RgbImage;
use crate::scalar::Scalar;

/// Allowed deviation of a reference feature's norm from 1.
const UNIT_TOL: f64 = 1e-6;
const CDR_TABLE: &str = "cdrs.csv";

/// Reference discs with known CDRs.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSet<T> {
    ids: Vec<String>,
    features: Vec<Vec<T>>,
    cdrs: Vec<T>,
}

impl<T: Scalar> ReferenceSet<T> {
    /// Every feature must have the same length and unit L2 norm; every CDR
    /// must lie in `(0, 1)`.
    pub fn new(ids: Vec<String>, features: Vec<Vec<T>>, cdrs: Vec<T>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::invalid("features", "reference set is empty"));
        }
        if ids.len() != features.len() || cdrs.len() != features.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} ids and cdrs", features.len()),
                actual: format!("{} ids, {} cdrs", ids.len(), cdrs.len()),
            });
        }
        let m = features[0].len();
        if m == 0 {
            return Err(Error::invalid("features", "features are empty"));
        }
        for (id, x) in ids.iter().zip(&features) {
            if x.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: format!("{m} components"),
                    actual: format!("{} components in `{id}`", x.len()),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            let norm = dot(x, x).sqrt().as_f64();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::invalid("features", format!("`{id}` has norm {norm}, expected 1")));
            }
        }
        for (id, &r) in ids.iter().zip(&cdrs) {
            if !(r > T::zero() && r < T::one()) {
                return Err(Error::invalid("cdrs", format!("`{id}` has CDR {r}, expected (0, 1)")));
            }
        }
        for (i, id) in ids.iter().enumerate() {
            if id.is_empty() || id.contains([',', '/', '\\', '\n']) || ids[..i].contains(id) {
                return Err(Error::invalid("ids", format!("`{id}` is empty, duplicated or not a plain name")));
            }
        }
        Ok(ReferenceSet { ids, features, cdrs })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn features(&self) -> &[Vec<T>] {
        &self.features
    }

    pub fn cdrs(&self) -> &[T] {
        &self.cdrs
    }

    /// Writes `<id>.feat` (one component per line) for every reference and a
    /// `cdrs.csv` table with an `id,cdr` header.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut table = String::from("id,cdr\n");
        for ((id, x), r) in self.ids.iter().zip(&self.features).zip(&self.cdrs) {
            let text: String = x.iter().map(|v| format!("{:e}\n", v.as_f64())).collect();
            let path = dir.join(format!("{id}.feat"));
            fs::write(&path, text).map_err(io(&path))?;
            table.push_str(&format!("{id},{:e}\n", r.as_f64()));
        }
        let path = dir.join(CDR_TABLE);
        fs::write(&path, table).map_err(io(&path))
    }

    /// Reads a directory written by [`ReferenceSet::save`]. References are
    /// taken in the order of the CDR table.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |path: &Path| {
            fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })
        };
        let bad = |path: &Path, reason: String| Error::Decode {
            path: path.to_path_buf(),
            reason,
        };
        let table_path = dir.join(CDR_TABLE);
        let table = read(&table_path)?;
        let mut lines = table.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("id,cdr") {
            return Err(bad(&table_path, "missing `id,cdr` header".into()));
        }
        let (mut ids, mut features, mut cdrs) = (Vec::new(), Vec::new(), Vec::new());
        for line in lines {
            let (id, cdr) = line
                .split_once(',')
                .ok_or_else(|| bad(&table_path, format!("malformed row `{line}`")))?;
            let cdr: f64 = cdr
                .trim()
                .parse()
                .map_err(|_| bad(&table_path, format!("bad CDR in `{line}`")))?;
            let id = id.trim().to_string();
            let feat_path = dir.join(format!("{id}.feat"));
            let x = read(&feat_path)?
                .split_whitespace()
                .map(|s| s.parse::<f64>().map(T::lit))
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| bad(&feat_path, e.to_string()))?;
            ids.push(id);
            features.push(x);
            cdrs.push(T::lit(cdr));
        }
        ReferenceSet::new(ids, features, cdrs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdcParams<T> {
    /// Weight of the dissimilarity penalty.
    pub lambda1: T,
    /// Weight of the L1 penalty.
    pub lambda2: T,
    pub max_iter: usize,
    /// Stop once no coefficient moves by more than this in a sweep.
    pub tol: T,
}

impl<T: Scalar> Default for SdcParams<T> {
    fn default() -> Self {
        SdcParams {
            lambda1: T::lit(0.1),
            lambda2: T::lit(0.01),
            max_iter: 1000,
            tol: T::lit(1e-8),
        }
    }
}

impl<T: Scalar> SdcParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.tol > T::zero()) {
            return Err(Error::invalid("tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn check_dim<T: Scalar>(y: &[T], refs: &ReferenceSet<T>) -> Result<()> {
    if y.len() != refs.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} components", refs.dim()),
            actual: format!("{} components", y.len()),
        });
    }
    Ok(())
}

/// Euclidean distance from `y` to every reference.
pub fn similarity_cost<T: Scalar>(y: &[T], refs: &ReferenceSet<T>) -> Result<Vec<T>> {
    check_dim(y, refs)?;
    Ok(refs
        .features
        .iter()
        .map(|x| x.iter().zip(y).map(|(&a, &b)| (b - a) * (b - a)).sum::<T>().sqrt())
        .collect())
}

fn check_problem<T: Scalar>(y: &[T], refs: &ReferenceSet<T>, d: &[T], w: Option<&[T]>) -> Result<()> {
    check_dim(y, refs)?;
    for v in std::iter::once(d).chain(w) {
        if v.len() != refs.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} coefficients", refs.len()),
                actual: format!("{} coefficients", v.len()),
            });
        }
    }
    Ok(())
}

/// `|y - X w|^2 + lambda1 |d . w|^2 + lambda2 |w|_1`.
pub fn objective<T: Scalar>(y: &[T], refs: &ReferenceSet<T>, d: &[T], params: &SdcParams<T>, w: &[T]) -> Result<T> {
    check_problem(y, refs, d, Some(w))?;
    let r = residual(y, refs, w);
    let fit = dot(&r, &r);
    let penalty: T = d.iter().zip(w).map(|(&di, &wi)| di * di * wi * wi).sum();
    let l1: T = w.iter().map(|v| v.abs()).sum();
    Ok(fit + params.lambda1 * penalty + params.lambda2 * l1)
}

fn residual<T: Scalar>(y: &[T], refs: &ReferenceSet<T>, w: &[T]) -> Vec<T> {
    let mut r = y.to_vec();
    for (x, &wi) in refs.features.iter().zip(w) {
        if wi != T::zero() {
            for (rk, &xk) in r.iter_mut().zip(x) {
                *rk = *rk - wi * xk;
            }
        }
    }
    r
}

/// Largest violation of the subgradient optimality conditions at `w`.
///
/// With `g_i = 2 x_i'(X w - y) + 2 lambda1 d_i^2 w_i`, a zero coefficient
/// needs `|g_i| <= lambda2` and a nonzero one needs
/// `g_i = -sign(w_i) lambda2`.
pub fn optimality_residual<T: Scalar>(
    y: &[T],
    refs: &ReferenceSet<T>,
    d: &[T],
    params: &SdcParams<T>,
    w: &[T],
) -> Result<T> {
    check_problem(y, refs, d, Some(w))?;
    let r = residual(y, refs, w);
    let two = T::lit(2.0);
    let mut worst = T::zero();
    for ((x, &di), &wi) in refs.features.iter().zip(d).zip(w) {
        let g = -two * dot(x, &r) + two * params.lambda1 * di * di * wi;
        let violation = if wi == T::zero() {
            (g.abs() - params.lambda2).max(T::zero())
        } else {
            (g + wi.signum() * params.lambda2).abs()
        };
        worst = worst.max(violation);
    }
    Ok(worst)
}

fn soft_threshold<T: Scalar>(v: T, t: T) -> T {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        T::zero()
    }
}

/// One coordinate-descent sweep over all coefficients, in place. Returns the
/// largest coefficient change.
pub fn sdc_sweep<T: Scalar>(y: &[T], refs: &ReferenceSet<T>, d: &[T], params: &SdcParams<T>, w: &mut [T]) -> Result<T> {
    check_problem(y, refs, d, Some(w))?;
    let mut r = residual(y, refs, w);
    Ok(sweep(refs, d, params, w, &mut r))
}

fn sweep<T: Scalar>(refs: &ReferenceSet<T>, d: &[T], params: &SdcParams<T>, w: &mut [T], r: &mut [T]) -> T {
    let half = T::lit(0.5);
    let mut max_change = T::zero();
    for (i, x) in refs.features.iter().enumerate() {
        let norm2 = dot(x, x);
        // x_i' (y - sum_{j != i} x_j w_j)
        let rho = dot(x, r) + norm2 * w[i];
        let denom = norm2 + params.lambda1 * d[i] * d[i];
        let next = soft_threshold(rho, half * params.lambda2) / denom;
        let delta = w[i] - next;
        if delta != T::zero() {
            for (rk, &xk) in r.iter_mut().zip(x) {
                *rk = *rk + delta * xk;
            }
            w[i] = next;
        }
        max_change = max_change.max(delta.abs());
    }
    max_change
}

/// Coordinate descent from `w = 0` until no coefficient changes by more than
/// `tol` in a sweep.
pub fn solve_sdc<T: Scalar>(y: &[T], refs: &ReferenceSet<T>, d: &[T], params: &SdcParams<T>) -> Result<Vec<T>> {
    params.validate()?;
    check_problem(y, refs, d, None)?;
    if y.iter().chain(d).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if d.iter().any(|&v| v < T::zero()) {
        return Err(Error::invalid("d", "similarity costs must be >= 0"));
    }
    let mut w = vec![T::zero(); refs.len()];
    let mut r = y.to_vec();
    let mut change = T::infinity();
    for _ in 0..params.max_iter {
        change = sweep(refs, d, params, &mut w, &mut r);
        if change < params.tol {
            return Ok(w);
        }
    }
    Err(Error::NotConverged {
        iterations: params.max_iter,
        last_change: change.as_f64(),
    })
}

/// `r' w / 1' w`, clamped to `[0, 1]`.
pub fn estimate_cdr<T: Scalar>(w: &[T], refs: &ReferenceSet<T>) -> Result<T> {
    if w.len() != refs.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} coefficients", refs.len()),
            actual: format!("{} coefficients", w.len()),
        });
    }
    let total: T = w.iter().copied().sum();
    if total.abs() <= T::lit(1e-12) {
        return Err(Error::Degenerate(format!("coefficients sum to {total}; CDR undefined")));
    }
    Ok((dot(&refs.cdrs, w) / total).max(T::zero()).min(T::one()))
}

/// Green channel area-averaged to `side x side`, flattened row-major,
/// mean-subtracted and scaled to unit norm.
pub fn build_feature<T: Scalar>(disc: &RgbImage<T>, side: usize) -> Result<Vec<T>> {
    if side == 0 {
        return Err(Error::invalid("side", "must be >= 1"));
    }
    let green = disc.green();
    let (h, w) = green.dims();
    let rows = area_weights::<T>(h, side);
    let cols = area_weights::<T>(w, side);
    // resize columns first, then rows
    let mut narrow = vec![T::zero(); h * side];
    for r in 0..h {
        let src = green.row(r);
        for (o, taps) in cols.iter().enumerate() {
            narrow[r * side + o] = taps.iter().map(|&(k, wt)| wt * src[k]).sum();
        }
    }
    let mut out = vec![T::zero(); side * side];
    for (o, taps) in rows.iter().enumerate() {
        for c in 0..side {
            out[o * side + c] = taps.iter().map(|&(k, wt)| wt * narrow[k * side + c]).sum();
        }
    }
    let mean = out.iter().copied().sum::<T>() / T::from_count(out.len());
    let scale = out.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    for v in out.iter_mut() {
        *v = *v - mean;
    }
    let norm = dot(&out, &out).sqrt();
    if norm <= T::epsilon() * T::from_count(out.len()) * scale.max(T::min_positive_value()) {
        return Err(Error::Degenerate("disc crop has no contrast after mean removal".into()));
    }
    for v in out.iter_mut() {
        *v = *v / norm;
    }
    Ok(out)
}

/// For each of `n` output cells, the source samples it overlaps and their
/// overlap fractions (summing to 1).
fn area_weights<T: Scalar>(len: usize, n: usize) -> Vec<Vec<(usize, T)>> {
    (0..n)
        .map(|o| {
            // output cell o spans [o len / n, (o + 1) len / n) in source units,
            // scaled by n to stay in integers
            let (lo, hi) = (o * len, (o + 1) * len);
            let mut taps = Vec::new();
            for k in lo / n..hi.div_ceil(n).min(len) {
                let overlap = hi.min((k + 1) * n) - lo.max(k * n);
                if overlap > 0 {
                    taps.push((k, T::from_count(overlap) / T::from_count(len)));
                }
            }
            taps
        })
        .collect()
}
