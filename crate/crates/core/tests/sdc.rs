use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgrif::raster::RgbImage;
use sgrif::sdc::{
    build_feature, estimate_cdr, objective, optimality_residual, sdc_sweep, similarity_cost, solve_sdc, ReferenceSet,
    SdcParams,
};

fn unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ReferenceSet<f64> {
    let features = (0..n).map(|_| unit(rng, m)).collect();
    let cdrs = (0..n).map(|_| rng.gen_range(0.1..0.9)).collect();
    ReferenceSet::new((0..n).map(|i| format!("ref{i}")).collect(), features, cdrs).unwrap()
}

/// Exhaustive search over `[-2, 2]^3` at step 0.01.
fn grid_minimum(y: &[f64], refs: &ReferenceSet<f64>, d: &[f64], l1: f64, l2: f64) -> (f64, [f64; 3]) {
    let x = refs.features();
    let m = y.len();
    let steps: Vec<f64> = (0..=400).map(|k| -2.0 + 0.01 * k as f64).collect();
    let mut best = (f64::INFINITY, [0.0; 3]);
    let mut r = vec![0.0; m];
    for &a in &steps {
        for &b in &steps {
            for k in 0..m {
                r[k] = y[k] - a * x[0][k] - b * x[1][k];
            }
            let partial = l1 * (d[0] * d[0] * a * a + d[1] * d[1] * b * b) + l2 * (a.abs() + b.abs());
            for &c in &steps {
                let mut fit = 0.0;
                for k in 0..m {
                    let e = r[k] - c * x[2][k];
                    fit += e * e;
                }
                let f = fit + partial + l1 * d[2] * d[2] * c * c + l2 * c.abs();
                if f < best.0 {
                    best = (f, [a, b, c]);
                }
            }
        }
    }
    best
}

#[test]
fn distances_match_direct_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let refs = random_set(&mut rng, 5, 7);
    let y = unit(&mut rng, 7);
    let d = similarity_cost(&y, &refs).unwrap();
    for (x, di) in refs.features().iter().zip(d) {
        let mut s = 0.0;
        for k in 0..7 {
            s += (y[k] - x[k]) * (y[k] - x[k]);
        }
        assert!((s.sqrt() - di).abs() < 1e-14);
    }
}

#[test]
fn matches_grid_search_on_three_atoms() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let params = SdcParams { lambda1: 0.1, lambda2: 0.05, ..SdcParams::default() };
    let refs = random_set(&mut rng, 3, 4);
    let y = unit(&mut rng, 4);
    let d = similarity_cost(&y, &refs).unwrap();
    let w = solve_sdc(&y, &refs, &d, &params).unwrap();
    let f = objective(&y, &refs, &d, &params, &w).unwrap();
    let (grid, _) = grid_minimum(&y, &refs, &d, 0.1, 0.05);
    assert!(f <= grid * (1.0 + 1e-6), "solver {f} vs grid {grid}");

    // the CDR estimate is plain arithmetic on the code
    let refs = ReferenceSet::new(refs.ids().to_vec(), refs.features().to_vec(), vec![0.3, 0.5, 0.7]).unwrap();
    let sum: f64 = w.iter().sum();
    let direct = (0.3 * w[0] + 0.5 * w[1] + 0.7 * w[2]) / sum;
    assert!((estimate_cdr(&w, &refs).unwrap() - direct.clamp(0.0, 1.0)).abs() < 1e-14);
}

#[test]
fn certificate_holds_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..50 {
        let (n, m) = (rng.gen_range(2..12), rng.gen_range(3..20));
        let refs = random_set(&mut rng, n, m);
        let y = unit(&mut rng, m);
        let d = similarity_cost(&y, &refs).unwrap();
        let params = SdcParams {
            lambda1: rng.gen_range(0.0..1.0),
            lambda2: rng.gen_range(0.0..0.5),
            ..SdcParams::default()
        };
        let w = solve_sdc(&y, &refs, &d, &params).unwrap();
        let res = optimality_residual(&y, &refs, &d, &params, &w).unwrap();
        assert!(res <= 1e-6, "instance {k}: residual {res}");
    }
}

#[test]
fn objective_never_increases_across_sweeps() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let refs = random_set(&mut rng, 8, 6);
    let y = unit(&mut rng, 6);
    let d = similarity_cost(&y, &refs).unwrap();
    let params = SdcParams { lambda1: 0.1, lambda2: 0.02, ..SdcParams::default() };
    let mut w = vec![0.0; 8];
    let mut prev = objective(&y, &refs, &d, &params, &w).unwrap();
    for _ in 0..50 {
        sdc_sweep(&y, &refs, &d, &params, &mut w).unwrap();
        let f = objective(&y, &refs, &d, &params, &w).unwrap();
        assert!(f <= prev + 1e-15, "{f} > {prev}");
        prev = f;
    }
}

#[test]
fn sparsity_grows_with_l1_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let refs = random_set(&mut rng, 10, 12);
    let y = unit(&mut rng, 12);
    let d = similarity_cost(&y, &refs).unwrap();
    let mut prev = usize::MAX;
    for k in 0..=42 {
        let lambda2 = 0.05 * k as f64;
        let params = SdcParams { lambda1: 0.1, lambda2, ..SdcParams::default() };
        let w = solve_sdc(&y, &refs, &d, &params).unwrap();
        let nnz = w.iter().filter(|&&v| v != 0.0).count();
        assert!(nnz <= prev, "lambda2={lambda2}: {nnz} > {prev}");
        prev = nnz;
    }
    // unit columns and target: lambda2 >= 2 always zeroes the code
    assert_eq!(prev, 0);
}

#[test]
fn over_regularized_limit_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let refs = random_set(&mut rng, 6, 5);
    let y = unit(&mut rng, 5);
    let max_corr = refs
        .features()
        .iter()
        .map(|x| x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let params = SdcParams { lambda1: 0.0, lambda2: 2.0 * max_corr, ..SdcParams::default() };
    let d = similarity_cost(&y, &refs).unwrap();
    assert_eq!(solve_sdc(&y, &refs, &d, &params).unwrap(), vec![0.0; 6]);
}

#[test]
fn exact_match_recovers_its_cdr() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let refs = random_set(&mut rng, 6, 16);
    for j in 0..6 {
        let y = refs.features()[j].clone();
        let d = similarity_cost(&y, &refs).unwrap();
        assert_eq!(d[j], 0.0);
        let params = SdcParams { lambda1: 1.0, lambda2: 1e-3, ..SdcParams::default() };
        let w = solve_sdc(&y, &refs, &d, &params).unwrap();
        let top = w.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        assert_eq!(top, j);
        let r = estimate_cdr(&w, &refs).unwrap();
        assert!((r - refs.cdrs()[j]).abs() < 0.01, "{r} vs {}", refs.cdrs()[j]);
    }
}

#[test]
fn one_hot_code_gives_that_cdr() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let refs = random_set(&mut rng, 4, 3);
    for i in 0..4 {
        let mut w = vec![0.0; 4];
        w[i] = 0.7;
        assert!((estimate_cdr(&w, &refs).unwrap() - refs.cdrs()[i]).abs() < 1e-15);
    }
}

#[test]
fn block_constant_disc_resizes_to_block_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let blocks: Vec<f64> = (0..256).map(|_| rng.gen()).collect();
    let disc = RgbImage::from_fn(32, 32, |r, c| [0.0, blocks[(r / 2) * 16 + c / 2], 0.0]).unwrap();
    let f = build_feature(&disc, 16).unwrap();
    let mean = blocks.iter().sum::<f64>() / 256.0;
    let centred: Vec<f64> = blocks.iter().map(|b| b - mean).collect();
    let norm = centred.iter().map(|v| v * v).sum::<f64>().sqrt();
    for (a, b) in f.iter().zip(&centred) {
        assert!((a - b / norm).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn solutions_pass_the_certificate(seed in any::<u64>(), l1 in 0.0f64..2.0, l2 in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let refs = random_set(&mut rng, 5, 8);
        let y = unit(&mut rng, 8);
        let d = similarity_cost(&y, &refs).unwrap();
        let params = SdcParams { lambda1: l1, lambda2: l2, ..SdcParams::default() };
        let w = solve_sdc(&y, &refs, &d, &params).unwrap();
        prop_assert!(optimality_residual(&y, &refs, &d, &params, &w).unwrap() <= 1e-6);
    }
}
