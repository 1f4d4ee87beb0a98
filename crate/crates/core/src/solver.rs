//! Proximal-gradient block reconstruction.
//!
//! Each block is recovered independently by minimizing
//! `½‖Ax − y‖² + λ‖D x‖₁` where `D` keeps the non-DC coefficients of the
//! orthonormal 2-D DCT. Starting from `x⁰ = Aᵀy`, every iteration takes a
//! unit gradient step on the data term, soft-thresholds the non-DC DCT
//! coefficients and then re-fits the (unpenalized) DC coefficient exactly.
//! A last gradient step restores consistency with the measurements.

use rayon::prelude::*;

use crate::dct::Dct2;
use crate::error::{Error, Result};
use crate::image::{assemble_clamped, BlockLayout, Image};
use crate::linalg::{axpy, axpy2, dot};
use crate::sensing::{MeasurementSet, SensingMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub iterations: usize,
    /// Threshold at the first iteration, in intensity units.
    pub lambda_start: f64,
    pub lambda_end: f64,
    /// Geometric decay from `lambda_start` to `lambda_end`; otherwise
    /// `lambda_start` is used throughout.
    pub geometric: bool,
    /// Clamp block estimates into `[0, 1]`.
    pub clamp: bool,
}

impl SolverConfig {
    pub const DEFAULT_LAMBDA_START: f64 = 0.1;
    pub const DEFAULT_LAMBDA_END: f64 = 0.001;

    /// Final reconstruction: 24 iterations.
    pub fn full() -> Self {
        Self::with_iterations(24)
    }

    /// Innovation-estimation reconstruction: the first 6 iterations of
    /// [`SolverConfig::full`], thresholds included.
    pub fn lightweight() -> Self {
        Self::full().truncated(6)
    }

    /// Stop after `iterations` steps while keeping this schedule's thresholds
    /// for the steps that remain.
    pub fn truncated(&self, iterations: usize) -> Self {
        let iterations = iterations.min(self.iterations).max(1);
        Self {
            iterations,
            lambda_end: self.lambda(iterations - 1),
            ..*self
        }
    }

    pub fn with_iterations(iterations: usize) -> Self {
        Self {
            iterations,
            lambda_start: Self::DEFAULT_LAMBDA_START,
            lambda_end: Self::DEFAULT_LAMBDA_END,
            geometric: true,
            clamp: true,
        }
    }

    pub fn constant(iterations: usize, lambda: f64) -> Self {
        Self {
            iterations,
            lambda_start: lambda,
            lambda_end: lambda,
            geometric: false,
            clamp: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig(
                "solver needs at least one iteration".into(),
            ));
        }
        if !(self.lambda_end >= 0.0 && self.lambda_start >= self.lambda_end) {
            return Err(Error::InvalidConfig(format!(
                "thresholds must satisfy lambda_start >= lambda_end >= 0 (got {} and {})",
                self.lambda_start, self.lambda_end
            )));
        }
        if !self.lambda_start.is_finite() {
            return Err(Error::InvalidConfig("lambda_start must be finite".into()));
        }
        Ok(())
    }

    /// Threshold used at iteration `k` (0-based).
    pub fn lambda(&self, k: usize) -> f64 {
        if !self.geometric || self.iterations == 1 || self.lambda_start == 0.0 {
            return self.lambda_start;
        }
        let t = k as f64 / (self.iterations - 1) as f64;
        self.lambda_start * (self.lambda_end / self.lambda_start).powf(t)
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::full()
    }
}

/// `x − Aᵀ(Ax − y)` using the first `values.len()` rows of `matrix`.
pub fn gradient_step(x: &[f64], values: &[f64], matrix: &SensingMatrix) -> Result<Vec<f64>> {
    matrix.check_block(x)?;
    let data = DataTerm::new(values, matrix)?;
    Ok(data.step(x))
}

/// Soft-thresholds every non-DC orthonormal DCT coefficient of `tile` by
/// `lambda`. This is the exact proximal map of `lambda·‖non-DC coeffs‖₁`.
pub fn prox_dct(tile: &[f64], lambda: f64, dct: &Dct2) -> Vec<f64> {
    if lambda == 0.0 {
        return tile.to_vec();
    }
    let mut coeffs = dct.forward(tile);
    for c in &mut coeffs[1..] {
        *c = c.signum() * (c.abs() - lambda).max(0.0);
    }
    dct.inverse(&coeffs)
}

/// `½‖Ax − y‖² + lambda·Σ_{k≠DC} |(Dx)_k|`
pub fn objective(
    x: &[f64],
    values: &[f64],
    matrix: &SensingMatrix,
    dct: &Dct2,
    lambda: f64,
) -> f64 {
    let residual: f64 = values
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let r = dot(matrix.row(i), x) - y;
            r * r
        })
        .sum();
    let l1: f64 = dct.forward(x)[1..].iter().map(|c| c.abs()).sum();
    0.5 * residual + lambda * l1
}

/// Data-fidelity term for one block. Holds `x⁰ = Aᵀy` so the gradient step can
/// run through whichever of the sampled rows or their orthogonal complement is
/// smaller: `x − Aᵀ(Ax − y) = (I − AᵀA)x + Aᵀy`.
struct DataTerm<'a> {
    matrix: &'a SensingMatrix,
    values: &'a [f64],
    x0: Vec<f64>,
}

impl<'a> DataTerm<'a> {
    fn new(values: &'a [f64], matrix: &'a SensingMatrix) -> Result<Self> {
        let x0 = matrix.adjoint(values)?;
        Ok(Self { matrix, values, x0 })
    }

    /// Builds the data term and the DC refit in a single sweep over the rows.
    fn with_refit(values: &'a [f64], matrix: &'a SensingMatrix) -> Result<(Self, Option<DcRefit>)> {
        if values.len() > matrix.dim() {
            return Err(Error::LengthMismatch {
                expected: matrix.dim(),
                found: values.len(),
            });
        }
        let side = matrix.block_size() as f64;
        let mut x0 = vec![0.0; matrix.dim()];
        let mut proj_u = vec![0.0; matrix.dim()];
        let (mut y_dot_au, mut au_norm_sq) = (0.0, 0.0);
        for (i, &y) in values.iter().enumerate() {
            let row = matrix.row(i);
            let au = matrix.row_sum(i) / side;
            axpy2(y, au, row, &mut x0, &mut proj_u);
            y_dot_au += y * au;
            au_norm_sq += au * au;
        }
        let refit = (au_norm_sq > 1e-14).then(|| DcRefit {
            y_dot_au,
            proj_u,
            au_norm_sq,
            inv_side: 1.0 / side,
        });
        Ok((Self { matrix, values, x0 }, refit))
    }

    fn sampled(&self) -> usize {
        self.values.len()
    }

    fn step(&self, x: &[f64]) -> Vec<f64> {
        let m = self.sampled();
        let dim = self.matrix.dim();
        if 2 * m <= dim {
            let mut out = x.to_vec();
            for (i, y) in self.values.iter().enumerate() {
                let row = self.matrix.row(i);
                axpy(-(dot(row, x) - y), row, &mut out);
            }
            out
        } else {
            let mut out = self.x0.clone();
            for i in m..dim {
                let row = self.matrix.row(i);
                axpy(dot(row, x), row, &mut out);
            }
            out
        }
    }
}

/// Exact minimizer of the data term over the DC coefficient with the other
/// coefficients held fixed. With `u` the unit constant tile:
/// `d = (⟨y, Au⟩ − ⟨x', AᵀAu⟩) / ‖Au‖²` where `x'` is `x` with its mean removed.
struct DcRefit {
    y_dot_au: f64,
    proj_u: Vec<f64>,
    au_norm_sq: f64,
    inv_side: f64,
}

impl DcRefit {
    fn apply(&self, x: &mut [f64]) {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let dc = (self.y_dot_au - dot(x, &self.proj_u)) / self.au_norm_sq;
        let level = dc * self.inv_side;
        x.iter_mut().for_each(|v| *v += level);
    }
}

/// Per-block solver bound to one sensing matrix.
#[derive(Debug, Clone)]
pub struct BlockSolver<'a> {
    matrix: &'a SensingMatrix,
    dct: Dct2,
}

impl<'a> BlockSolver<'a> {
    pub fn new(matrix: &'a SensingMatrix) -> Self {
        Self {
            matrix,
            dct: Dct2::new(matrix.block_size()),
        }
    }

    pub fn matrix(&self) -> &SensingMatrix {
        self.matrix
    }

    pub fn dct(&self) -> &Dct2 {
        &self.dct
    }

    pub fn solve(&self, values: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
        self.solve_observed(values, cfg, |_, _| {})
    }

    /// Runs the solver, calling `observe(k, x)` with the starting point
    /// (`k = 0`) and after each of the `K` iterations, before the closing
    /// data-consistency step and clamp.
    pub fn solve_observed(
        &self,
        values: &[f64],
        cfg: &SolverConfig,
        mut observe: impl FnMut(usize, &[f64]),
    ) -> Result<Vec<f64>> {
        cfg.validate()?;
        let (data, refit) = DataTerm::with_refit(values, self.matrix)?;
        if data.sampled() == 0 {
            return Ok(vec![0.0; self.matrix.dim()]);
        }
        let mut x = data.x0.clone();
        observe(0, &x);
        for k in 0..cfg.iterations {
            // x⁰ already fits the measurements exactly, so its step is a no-op
            let r = if k == 0 {
                data.x0.clone()
            } else {
                data.step(&x)
            };
            x = prox_dct(&r, cfg.lambda(k), &self.dct);
            if let Some(refit) = &refit {
                refit.apply(&mut x);
            }
            observe(k + 1, &x);
        }
        let mut x = data.step(&x);
        if cfg.clamp {
            x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        }
        Ok(x)
    }

    /// Solves every block of `ms` (in parallel; results do not depend on
    /// scheduling).
    pub fn solve_all(&self, ms: &MeasurementSet, cfg: &SolverConfig) -> Result<Vec<Vec<f64>>> {
        if ms.capacity() != self.matrix.dim() {
            return Err(Error::LengthMismatch {
                expected: self.matrix.dim(),
                found: ms.capacity(),
            });
        }
        ms.all_values()
            .par_iter()
            .map(|values| self.solve(values, cfg))
            .collect()
    }

    pub fn reconstruct(
        &self,
        ms: &MeasurementSet,
        layout: &BlockLayout,
        cfg: &SolverConfig,
    ) -> Result<Image> {
        if ms.block_count() != layout.block_count() {
            return Err(Error::BlockCountMismatch {
                expected: layout.block_count(),
                found: ms.block_count(),
            });
        }
        if layout.block_size != self.matrix.block_size() {
            return Err(Error::LengthMismatch {
                expected: self.matrix.block_size(),
                found: layout.block_size,
            });
        }
        let blocks = self.solve_all(ms, cfg)?;
        assemble_clamped(layout, &blocks)
    }
}

/// Reconstructs an image from its block measurements.
pub fn reconstruct(
    ms: &MeasurementSet,
    matrix: &SensingMatrix,
    layout: &BlockLayout,
    cfg: &SolverConfig,
) -> Result<Image> {
    BlockSolver::new(matrix).reconstruct(ms, layout, cfg)
}
