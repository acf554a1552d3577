//! Independent dense oracles for the global filters.
//!
//! The difference operators are built as explicit sparse rows and the system
//! matrix is accumulated from their outer products, without sharing any code
//! with the library's stencil assembly.

#![allow(dead_code)]

pub struct DenseSystem {
    pub n: usize,
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
}

type SparseRow = Vec<(usize, f64)>;

/// Forward differences along rows; the row for the last column is empty.
pub fn dx_rows(h: usize, w: usize) -> Vec<SparseRow> {
    (0..h * w)
        .map(|i| {
            if i % w + 1 < w {
                vec![(i, -1.0), (i + 1, 1.0)]
            } else {
                Vec::new()
            }
        })
        .collect()
}

/// Forward differences along columns; the row for the last image row is empty.
pub fn dy_rows(h: usize, w: usize) -> Vec<SparseRow> {
    (0..h * w)
        .map(|i| {
            if i / w + 1 < h {
                vec![(i, -1.0), (i + w, 1.0)]
            } else {
                Vec::new()
            }
        })
        .collect()
}

fn add_weighted_gram(matrix: &mut [f64], n: usize, rows: &[SparseRow], weights: &[f64]) {
    for (row, &b) in rows.iter().zip(weights) {
        for &(i, vi) in row {
            for &(j, vj) in row {
                matrix[i * n + j] += b * vi * vj;
            }
        }
    }
}

fn add_transpose_product(out: &mut [f64], rows: &[SparseRow], v: &[f64]) {
    for (row, &vk) in rows.iter().zip(v) {
        for &(i, val) in row {
            out[i] += val * vk;
        }
    }
}

/// `(lambda I + Dx'Dx + Dy'Dy) O = lambda f + Dx' vh + Dy' vv`.
pub fn structure_system(h: usize, w: usize, f: &[f64], vh: &[f64], vv: &[f64], lambda: f64) -> DenseSystem {
    let n = h * w;
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        matrix[i * n + i] = lambda;
    }
    let ones = vec![1.0; n];
    add_weighted_gram(&mut matrix, n, &dx_rows(h, w), &ones);
    add_weighted_gram(&mut matrix, n, &dy_rows(h, w), &ones);
    let mut rhs: Vec<f64> = f.iter().map(|v| lambda * v).collect();
    add_transpose_product(&mut rhs, &dx_rows(h, w), vh);
    add_transpose_product(&mut rhs, &dy_rows(h, w), vv);
    DenseSystem { n, matrix, rhs }
}

/// `(I + gamma (Dx' Bx Dx + Dy' By Dy)) phi = f`.
#[allow(clippy::too_many_arguments)]
pub fn smooth_system(
    h: usize,
    w: usize,
    f: &[f64],
    vh: &[f64],
    vv: &[f64],
    gamma: f64,
    theta: f64,
    eps: f64,
) -> DenseSystem {
    let n = h * w;
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        matrix[i * n + i] = 1.0;
    }
    let bx: Vec<f64> = vh.iter().map(|v| gamma / (v.abs().powf(theta) + eps)).collect();
    let by: Vec<f64> = vv.iter().map(|v| gamma / (v.abs().powf(theta) + eps)).collect();
    add_weighted_gram(&mut matrix, n, &dx_rows(h, w), &bx);
    add_weighted_gram(&mut matrix, n, &dy_rows(h, w), &by);
    DenseSystem {
        n,
        matrix,
        rhs: f.to_vec(),
    }
}

impl DenseSystem {
    pub fn residual_inf(&self, x: &[f64]) -> f64 {
        let n = self.n;
        (0..n)
            .map(|i| {
                let row = &self.matrix[i * n..(i + 1) * n];
                let ax: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
                (ax - self.rhs[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Gaussian elimination with partial pivoting.
    pub fn solve(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = self.matrix.clone();
        let mut b = self.rhs.clone();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                .unwrap();
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                b.swap(k, p);
            }
            for i in k + 1..n {
                let f = a[i * n + k] / a[k * n + k];
                if f == 0.0 {
                    continue;
                }
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i * n + j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i * n + i];
        }
        x
    }
}

pub fn relative_l2(a: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(reference).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = reference.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
