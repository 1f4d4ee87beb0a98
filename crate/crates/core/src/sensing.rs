//! Nested row-orthonormal measurement operators and per-block measurement
//! bookkeeping.
//!
//! A single `B²×B²` orthogonal matrix is shared by every block. The operator
//! for `M` samples is always its first `M` rows, so raising a block's sample
//! count only ever appends measurements; earlier values never change.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sq};

/// Largest supported block size (`B² = 4096` rows).
pub const MAX_BLOCK_SIZE: usize = 64;

/// Redraw attempts allowed for a numerically dependent row.
pub const MAX_REDRAWS: usize = 8;

/// Relative residual norm below which a row counts as dependent.
const DEPENDENCE_TOL: f64 = 1e-8;

/// `B²×B²` orthogonal matrix generated from a seeded ChaCha20 stream.
///
/// Entries are drawn i.i.d. standard normal in row-major order, then rows are
/// orthonormalized in order by modified Gram-Schmidt (with a second pass when
/// a row loses more than half its norm). A row that collapses is replaced by
/// fresh normals taken from the same stream after the initial `B⁴` draws.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    block_size: usize,
    seed: u64,
    dim: usize,
    rows: Vec<f64>,
    row_sums: Vec<f64>,
}

impl SensingMatrix {
    pub fn build(seed: u64, block_size: usize) -> Result<Self> {
        if block_size == 0 || block_size > MAX_BLOCK_SIZE {
            return Err(Error::BlockSize(block_size));
        }
        let dim = block_size * block_size;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut rows: Vec<f64> = (0..dim * dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();

        for i in 0..dim {
            let (done, rest) = rows.split_at_mut(i * dim);
            let row = &mut rest[..dim];
            let mut attempts = 0;
            loop {
                let start = norm_sq(row).sqrt();
                let mut norm = orthogonalize(row, done, dim);
                if norm < 0.5 * start {
                    norm = orthogonalize(row, done, dim);
                }
                if norm > DEPENDENCE_TOL * start {
                    row.iter_mut().for_each(|v| *v /= norm);
                    break;
                }
                attempts += 1;
                if attempts > MAX_REDRAWS {
                    return Err(Error::DependentRow { row: i, attempts });
                }
                for v in row.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
        }

        let row_sums = rows.chunks_exact(dim).map(|r| r.iter().sum()).collect();
        Ok(Self {
            block_size,
            seed,
            dim,
            rows,
            row_sums,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Signal dimension `B²`, which is also the number of rows.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    /// The first `m` rows, row-major.
    pub fn prefix(&self, m: usize) -> &[f64] {
        &self.rows[..m * self.dim]
    }

    pub(crate) fn row_sum(&self, i: usize) -> f64 {
        self.row_sums[i]
    }

    /// `y_i = <row_i, block>` for `i` in `rows` (0-based, half-open).
    pub fn measure(&self, block: &[f64], rows: Range<usize>) -> Result<Vec<f64>> {
        self.check_block(block)?;
        if rows.start > rows.end || rows.end > self.dim {
            return Err(Error::RowRange {
                start: rows.start,
                end: rows.end,
                available: self.dim,
            });
        }
        Ok(rows.map(|i| dot(self.row(i), block)).collect())
    }

    /// `Aᵀy` using the first `values.len()` rows: the orthogonal projection of
    /// the measured block onto the sampled row span.
    pub fn adjoint(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() > self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                found: values.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        for (i, &y) in values.iter().enumerate() {
            axpy(y, self.row(i), &mut out);
        }
        Ok(out)
    }

    pub(crate) fn check_block(&self, block: &[f64]) -> Result<()> {
        if block.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                found: block.len(),
            });
        }
        Ok(())
    }
}

/// Subtracts the projections onto the (already orthonormal) rows in `basis`,
/// one at a time, and returns the remaining norm.
fn orthogonalize(row: &mut [f64], basis: &[f64], dim: usize) -> f64 {
    for q in basis.chunks_exact(dim) {
        let c = dot(row, q);
        axpy(-c, q, row);
    }
    norm_sq(row).sqrt()
}

/// Ordered measurements for every block of an image. Block `n` holds the
/// values of rows `0..M_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    seed: u64,
    capacity: usize,
    values: Vec<Vec<f64>>,
}

impl MeasurementSet {
    pub fn new(blocks: usize, matrix: &SensingMatrix) -> Self {
        Self {
            seed: matrix.seed(),
            capacity: matrix.dim(),
            values: vec![Vec::new(); blocks],
        }
    }

    /// Seed of the matrix these measurements were taken with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn block_count(&self) -> usize {
        self.values.len()
    }

    pub fn count(&self, block: usize) -> usize {
        self.values[block].len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.values.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn values(&self, block: usize) -> &[f64] {
        &self.values[block]
    }

    pub fn all_values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Concatenates `new_values` onto block `block`.
    pub fn append(&mut self, block: usize, new_values: &[f64]) -> Result<()> {
        let count = self.values.len();
        let slot = self.values.get_mut(block).ok_or(Error::BlockIndex {
            index: block,
            count,
        })?;
        if slot.len() + new_values.len() > self.capacity {
            return Err(Error::CapacityExceeded {
                block,
                requested: new_values.len(),
                capacity: self.capacity - slot.len(),
            });
        }
        slot.extend_from_slice(new_values);
        Ok(())
    }

    /// Measures the next `extra` rows of `pixels` for block `block`.
    pub fn sample_more(
        &mut self,
        block: usize,
        pixels: &[f64],
        matrix: &SensingMatrix,
        extra: usize,
    ) -> Result<()> {
        let have = self
            .values
            .get(block)
            .ok_or(Error::BlockIndex {
                index: block,
                count: self.values.len(),
            })?
            .len();
        let new_values = matrix.measure(pixels, have..have + extra)?;
        self.append(block, &new_values)
    }

    /// A copy keeping only the first `counts[n]` values of each block.
    pub fn truncated(&self, counts: &[usize]) -> Self {
        Self {
            seed: self.seed,
            capacity: self.capacity,
            values: self
                .values
                .iter()
                .zip(counts)
                .map(|(v, &m)| v[..m.min(v.len())].to_vec())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_block(dim: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..dim).map(|_| rng.random::<f64>()).collect()
    }

    fn max_gram_error(m: &SensingMatrix, rows: usize) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..rows {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(m.row(i), m.row(j)) - target).abs());
            }
        }
        worst
    }

    #[test]
    fn small_matrix_is_orthonormal() {
        let m = SensingMatrix::build(7, 8).unwrap();
        assert_eq!(m.dim(), 64);
        assert!(max_gram_error(&m, 64) <= 1e-12);
        assert!((norm_sq(m.row(0)).sqrt() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rejects_unsupported_block_sizes() {
        assert!(matches!(
            SensingMatrix::build(1, 0),
            Err(Error::BlockSize(0))
        ));
        assert!(matches!(
            SensingMatrix::build(1, 65),
            Err(Error::BlockSize(65))
        ));
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let a = SensingMatrix::build(99, 8).unwrap();
        let b = SensingMatrix::build(99, 8).unwrap();
        assert_eq!(a.prefix(64), b.prefix(64));
        let c = SensingMatrix::build(100, 8).unwrap();
        assert_ne!(a.row(0), c.row(0));
    }

    #[test]
    fn measure_edge_cases() {
        let m = SensingMatrix::build(3, 8).unwrap();
        let zero = vec![0.0; 64];
        assert!(m.measure(&zero, 0..64).unwrap().iter().all(|&v| v == 0.0));

        let k = 17;
        let y = m.measure(m.row(k), 0..64).unwrap();
        for (j, v) in y.iter().enumerate() {
            let want = if j == k { 1.0 } else { 0.0 };
            assert!((v - want).abs() <= 1e-10);
        }

        let block = random_block(64, 5);
        let y = m.measure(&block, 0..64).unwrap();
        assert!((norm_sq(&y).sqrt() - norm_sq(&block).sqrt()).abs() <= 1e-10);

        assert!(matches!(
            m.measure(&block, 60..65),
            Err(Error::RowRange { .. })
        ));
        assert!(matches!(
            m.measure(&block[..10], 0..1),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn adjoint_inverts_and_projects() {
        let m = SensingMatrix::build(11, 8).unwrap();
        let block = random_block(64, 6);
        let full = m.adjoint(&m.measure(&block, 0..64).unwrap()).unwrap();
        for (a, b) in full.iter().zip(&block) {
            assert!((a - b).abs() <= 1e-10);
        }
        assert!(m.adjoint(&[0.0; 10]).unwrap().iter().all(|&v| v == 0.0));
        for mcount in [1, 10, 32, 63] {
            let proj = m.adjoint(&m.measure(&block, 0..mcount).unwrap()).unwrap();
            assert!(norm_sq(&proj).sqrt() <= norm_sq(&block).sqrt() + 1e-10);
        }
        assert!(m.adjoint(&[0.0; 65]).is_err());
    }

    #[test]
    fn append_semantics() {
        let m = SensingMatrix::build(1, 4).unwrap();
        let mut set = MeasurementSet::new(2, &m);
        let before = set.clone();
        set.append(0, &[]).unwrap();
        assert_eq!(set, before);

        let block = random_block(16, 8);
        set.sample_more(1, &block, &m, 5).unwrap();
        let prefix = set.values(1).to_vec();
        set.sample_more(1, &block, &m, 11).unwrap();
        assert_eq!(&set.values(1)[..5], &prefix[..]);
        assert_eq!(set.values(1), &m.measure(&block, 0..16).unwrap()[..]);
        assert_eq!(set.count(1), 16);
        assert!(matches!(
            set.append(1, &[0.5]),
            Err(Error::CapacityExceeded { block: 1, .. })
        ));
        assert!(matches!(
            set.append(2, &[0.5]),
            Err(Error::BlockIndex { .. })
        ));
        assert_eq!(set.truncated(&[0, 3]).values(1), &prefix[..3]);
    }
}
