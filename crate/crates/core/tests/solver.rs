use std::f64::consts::PI;

use acs_core::{objective, BlockSolver, Dct2, SensingMatrix, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Orthonormal DCT-II basis function `(u, v)` on a `b×b` tile, from the
/// textbook cosine formula.
fn dct_basis(b: usize, u: usize, v: usize) -> Vec<f64> {
    let alpha = |k: usize| {
        if k == 0 {
            (1.0 / b as f64).sqrt()
        } else {
            (2.0 / b as f64).sqrt()
        }
    };
    let mut out = vec![0.0; b * b];
    for r in 0..b {
        for c in 0..b {
            out[r * b + c] = alpha(u)
                * alpha(v)
                * (PI * (2 * r + 1) as f64 * u as f64 / (2 * b) as f64).cos()
                * (PI * (2 * c + 1) as f64 * v as f64 / (2 * b) as f64).cos();
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Plain ISTA written against an explicit basis matrix: gradient step, then
/// soft-threshold every non-DC coefficient.
fn scripted_ista(matrix: &SensingMatrix, y: &[f64], lambdas: &[f64]) -> Vec<f64> {
    let n = matrix.dim();
    let b = matrix.block_size();
    let basis: Vec<Vec<f64>> = (0..n).map(|k| dct_basis(b, k / b, k % b)).collect();
    let mut x = vec![0.0; n];
    for (i, yi) in y.iter().enumerate() {
        for (xj, aj) in x.iter_mut().zip(matrix.row(i)) {
            *xj += yi * aj;
        }
    }
    for &lambda in lambdas {
        let mut r = x.clone();
        for (i, yi) in y.iter().enumerate() {
            let row = matrix.row(i);
            let res = dot(row, &x) - yi;
            for (rj, aj) in r.iter_mut().zip(row) {
                *rj -= res * aj;
            }
        }
        let mut next = vec![0.0; n];
        for (idx, phi) in basis.iter().enumerate() {
            let c = dot(phi, &r);
            let c = if idx == 0 {
                c
            } else {
                c.signum() * (c.abs() - lambda).max(0.0)
            };
            for (xj, p) in next.iter_mut().zip(phi) {
                *xj += c * p;
            }
        }
        x = next;
    }
    x
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (num / dot(b, b)).sqrt()
}

#[test]
fn one_sparse_block_matches_scripted_ista() {
    let b = 32;
    let matrix = SensingMatrix::build(42, b).unwrap();
    let dc = dct_basis(b, 0, 0);
    let spike = dct_basis(b, 3, 5);
    let truth: Vec<f64> = dc
        .iter()
        .zip(&spike)
        .map(|(d, s)| 16.0 * d + 3.0 * s)
        .collect();
    assert!(truth.iter().all(|v| (0.0..=1.0).contains(v)));
    let y = matrix.measure(&truth, 0..b * b / 2).unwrap();

    let cfg = SolverConfig::full();
    let got = BlockSolver::new(&matrix).solve(&y, &cfg).unwrap();
    assert!(
        rel_err(&got, &truth) <= 1e-3,
        "vs truth {}",
        rel_err(&got, &truth)
    );

    // a long continuation run of the textbook iteration lands on the same block
    let lambdas: Vec<f64> = (0..600)
        .map(|k| 0.1 * 1e-4f64.powf(k as f64 / 599.0))
        .collect();
    let oracle = scripted_ista(&matrix, &y, &lambdas);
    assert!(
        rel_err(&oracle, &truth) <= 1e-3,
        "oracle {}",
        rel_err(&oracle, &truth)
    );
    assert!(
        rel_err(&got, &oracle) <= 1e-3,
        "vs oracle {}",
        rel_err(&got, &oracle)
    );
}

#[test]
fn objective_never_increases_with_constant_lambda() {
    let b = 16;
    let matrix = SensingMatrix::build(3, b).unwrap();
    let solver = BlockSolver::new(&matrix);
    let dct = Dct2::new(b);
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for trial in 0..20 {
        let block: Vec<f64> = (0..b * b).map(|_| rng.random()).collect();
        let m = rng.random_range(1..b * b);
        let lambda = rng.random_range(1e-4..0.2);
        let y = matrix.measure(&block, 0..m).unwrap();
        let mut values = Vec::new();
        solver
            .solve_observed(&y, &SolverConfig::constant(30, lambda), |_, x| {
                values.push(objective(x, &y, &matrix, &dct, lambda))
            })
            .unwrap();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "trial {trial}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn more_rows_never_hurt_on_average() {
    let b = 32;
    let matrix = SensingMatrix::build(42, b).unwrap();
    let solver = BlockSolver::new(&matrix);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let blocks: Vec<Vec<f64>> = (0..12)
        .map(|_| {
            // smooth ramp plus mild noise: the kind of content the prior suits
            let (a, gr, gc) = (
                rng.random_range(0.2..0.8),
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
            );
            (0..b * b)
                .map(|i| {
                    let (r, c) = ((i / b) as f64 / b as f64, (i % b) as f64 / b as f64);
                    (a + gr * (r - 0.5) + gc * (c - 0.5) + rng.random_range(-0.05..0.05))
                        .clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();
    let mut last = f64::INFINITY;
    for m in [128, 256, 512, 1024] {
        let mean: f64 = blocks
            .iter()
            .map(|blk| {
                let y = matrix.measure(blk, 0..m).unwrap();
                let x = solver.solve(&y, &SolverConfig::full()).unwrap();
                x.iter().zip(blk).map(|(p, q)| (p - q).powi(2)).sum::<f64>()
            })
            .sum::<f64>()
            / blocks.len() as f64;
        assert!(mean <= last, "M = {m}: {mean} > {last}");
        last = mean;
    }
    assert!(last < 1e-16);
}

#[test]
fn uniform_random_blocks_also_improve_with_rows() {
    let b = 16;
    let matrix = SensingMatrix::build(8, b).unwrap();
    let solver = BlockSolver::new(&matrix);
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let blocks: Vec<Vec<f64>> = (0..20)
        .map(|_| (0..b * b).map(|_| rng.random()).collect())
        .collect();
    let mut last = f64::INFINITY;
    for m in [32, 64, 128, 256] {
        let mean: f64 = blocks
            .iter()
            .map(|blk| {
                let y = matrix.measure(blk, 0..m).unwrap();
                let x = solver.solve(&y, &SolverConfig::full()).unwrap();
                x.iter().zip(blk).map(|(p, q)| (p - q).powi(2)).sum::<f64>()
            })
            .sum::<f64>()
            / blocks.len() as f64;
        assert!(mean <= last, "M = {m}: {mean} > {last}");
        last = mean;
    }
}
