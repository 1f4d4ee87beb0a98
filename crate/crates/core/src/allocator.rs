//! Per-block allocation scores and integer apportionment of a stage budget.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::image::{partition, BlockLayout, Image};
use crate::sensing::{MeasurementSet, SensingMatrix};

/// Rule used to rank blocks for adaptive samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    /// Energy of the change between reconstructions before and after the
    /// innovation-sampling rows.
    Innovation,
    /// Residual of the pre-innovation reconstruction against the measurements.
    MeasurementError,
    /// High-frequency (Laplacian) energy of the current reconstruction.
    Saliency,
    Uniform,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::Innovation,
        Criterion::MeasurementError,
        Criterion::Saliency,
        Criterion::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Innovation => "innovation",
            Criterion::MeasurementError => "error",
            Criterion::Saliency => "saliency",
            Criterion::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCriterion(s.to_string()))
    }
}

/// Non-negative finite score per block, tagged with the criterion that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    criterion: Criterion,
    values: Vec<f64>,
}

impl ScoreVector {
    pub fn new(criterion: Criterion, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidScores("no blocks".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidScores(format!("block {i} has score {v}")));
        }
        Ok(Self { criterion, values })
    }

    pub fn uniform(blocks: usize) -> Self {
        Self {
            criterion: Criterion::Uniform,
            values: vec![1.0; blocks],
        }
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn check_layout(img: &Image, layout: &BlockLayout) -> Result<()> {
    if img.dims() != (layout.height, layout.width) {
        return Err(Error::DimensionMismatch {
            expected: (layout.height, layout.width),
            found: img.dims(),
        });
    }
    Ok(())
}

/// `α_n = Σ_{pixels of block n} (x_is − x_prev)²`
pub fn innovation_scores(
    x_prev: &Image,
    x_is: &Image,
    layout: &BlockLayout,
) -> Result<ScoreVector> {
    x_prev.ensure_same_dims(x_is)?;
    check_layout(x_prev, layout)?;
    let sq: Vec<f64> = x_prev
        .data()
        .iter()
        .zip(x_is.data())
        .map(|(a, b)| (b - a) * (b - a))
        .collect();
    ScoreVector::new(Criterion::Innovation, layout.sum_per_block(&sq))
}

/// `‖y_n − A_{1:M_n} vec(block_n of x_hat)‖²` per block.
pub fn measurement_error_scores(
    ms: &MeasurementSet,
    matrix: &SensingMatrix,
    x_hat: &Image,
) -> Result<ScoreVector> {
    let grid = partition(x_hat, matrix.block_size());
    if grid.len() != ms.block_count() {
        return Err(Error::BlockCountMismatch {
            expected: ms.block_count(),
            found: grid.len(),
        });
    }
    let scores = grid
        .blocks()
        .iter()
        .enumerate()
        .map(|(n, block)| {
            let y = ms.values(n);
            let ax = matrix.measure(block, 0..y.len())?;
            Ok(y.iter().zip(&ax).map(|(a, b)| (a - b) * (a - b)).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    ScoreVector::new(Criterion::MeasurementError, scores)
}

/// Per-block energy of the 5-point Laplacian of `x_hat`, taken over the whole
/// image with edge replication.
pub fn saliency_scores(x_hat: &Image, layout: &BlockLayout) -> Result<ScoreVector> {
    check_layout(x_hat, layout)?;
    let (h, w) = x_hat.dims();
    let at = |r: isize, c: isize| {
        x_hat.get(
            r.clamp(0, h as isize - 1) as usize,
            c.clamp(0, w as isize - 1) as usize,
        )
    };
    let mut energy = Vec::with_capacity(h * w);
    for r in 0..h as isize {
        for c in 0..w as isize {
            let lap = at(r - 1, c) + at(r + 1, c) + at(r, c - 1) + at(r, c + 1) - 4.0 * at(r, c);
            energy.push(lap * lap);
        }
    }
    ScoreVector::new(Criterion::Saliency, layout.sum_per_block(&energy))
}

/// Splits `budget` samples across blocks in proportion to `scores`.
///
/// Quotas `budget·s_n/Σs` are integerized by largest remainder (floor, then
/// one extra unit to the largest fractional parts, ties to the lowest block
/// index). A block pushed past its remaining capacity `room[n]` is clipped and
/// the overflow is apportioned again, by the same rule, among blocks that still
/// have room. Blocks with no room never take part. When every participating
/// score is zero the split is uniform.
///
/// Arithmetic is exact: scores are mapped to integers on a common binary
/// exponent, so the result does not depend on floating-point rounding and is
/// unchanged when all scores are scaled by a power of two.
pub fn apportion(scores: &ScoreVector, budget: usize, room: &[usize]) -> Result<Vec<usize>> {
    if room.len() != scores.len() {
        return Err(Error::LengthMismatch {
            expected: scores.len(),
            found: room.len(),
        });
    }
    let capacity: usize = room.iter().sum();
    if budget > capacity {
        return Err(Error::BudgetExceedsCapacity { budget, capacity });
    }
    let weights = exact_weights(scores.values());
    let mut alloc = vec![0usize; room.len()];
    let mut open: Vec<usize> = (0..room.len()).filter(|&n| room[n] > 0).collect();
    let mut remaining = budget;
    while remaining > 0 {
        let give = largest_remainder(&weights, &open, remaining);
        let mut overflow = 0;
        for (&n, g) in open.iter().zip(give) {
            alloc[n] += g;
            if alloc[n] > room[n] {
                overflow += alloc[n] - room[n];
                alloc[n] = room[n];
            }
        }
        open.retain(|&n| alloc[n] < room[n]);
        remaining = overflow;
    }
    Ok(alloc)
}

/// Largest-remainder split of `budget` over the blocks in `members`.
fn largest_remainder(weights: &[BigUint], members: &[usize], budget: usize) -> Vec<usize> {
    let zero = BigUint::ZERO;
    let one = BigUint::from(1u8);
    let mut total: BigUint = members.iter().map(|&n| &weights[n]).sum();
    let uniform = total == zero;
    if uniform {
        total = BigUint::from(members.len());
    }
    let budget_big = BigUint::from(budget);
    let mut floors = Vec::with_capacity(members.len());
    let mut rems = Vec::with_capacity(members.len());
    for &n in members {
        let w = if uniform { &one } else { &weights[n] };
        let num = &budget_big * w;
        floors.push(usize::try_from(&num / &total).expect("quota bounded by budget"));
        rems.push(num % &total);
    }
    let leftover = budget - floors.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..members.len()).collect();
    // stable sort keeps the lower block index first among equal remainders
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]));
    for &i in &order[..leftover] {
        floors[i] += 1;
    }
    floors
}

/// Exact integer images of non-negative finite scores on a common binary
/// exponent: `s_n = weights[n] · 2^e_min`.
fn exact_weights(scores: &[f64]) -> Vec<BigUint> {
    let parts: Vec<Option<(u64, i32)>> = scores.iter().map(|&s| decompose(s)).collect();
    let e_min = parts.iter().flatten().map(|&(_, e)| e).min().unwrap_or(0);
    parts
        .into_iter()
        .map(|p| match p {
            None => BigUint::ZERO,
            Some((m, e)) => BigUint::from(m) << (e - e_min) as u32,
        })
        .collect()
}

/// `s = mantissa · 2^exponent` for a positive finite `s`; `None` for zero.
fn decompose(s: f64) -> Option<(u64, i32)> {
    if s == 0.0 {
        return None;
    }
    let bits = s.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    Some(if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> ScoreVector {
        ScoreVector::new(Criterion::Innovation, v.to_vec()).unwrap()
    }

    const INF: usize = usize::MAX / 4;

    #[test]
    fn criterion_names_round_trip() {
        for c in Criterion::ALL {
            assert_eq!(c.name().parse::<Criterion>().unwrap(), c);
        }
        assert!(matches!(
            "entropy".parse::<Criterion>(),
            Err(Error::UnknownCriterion(_))
        ));
    }

    #[test]
    fn rejects_invalid_scores() {
        assert!(ScoreVector::new(Criterion::Saliency, vec![1.0, -0.5]).is_err());
        assert!(ScoreVector::new(Criterion::Saliency, vec![f64::NAN]).is_err());
        assert!(ScoreVector::new(Criterion::Saliency, vec![]).is_err());
    }

    #[test]
    fn apportion_examples() {
        assert_eq!(
            apportion(&scores(&[1.0; 4]), 100, &[INF; 4]).unwrap(),
            vec![25, 25, 25, 25]
        );
        assert_eq!(
            apportion(&scores(&[3.0, 1.0, 0.0, 0.0]), 100, &[INF; 4]).unwrap(),
            vec![75, 25, 0, 0]
        );
        assert_eq!(
            apportion(&scores(&[1.0, 1.0, 1.0]), 100, &[INF; 3]).unwrap(),
            vec![34, 33, 33]
        );
        assert_eq!(
            apportion(&scores(&[10.0, 1.0]), 100, &[50, INF]).unwrap(),
            vec![50, 50]
        );
    }

    #[test]
    fn zero_scores_fall_back_to_uniform() {
        assert_eq!(
            apportion(&scores(&[0.0; 3]), 10, &[INF, 0, INF]).unwrap(),
            vec![5, 0, 5]
        );
        // once the only scored block is full, the rest is shared uniformly
        assert_eq!(
            apportion(&scores(&[5.0, 0.0, 0.0]), 10, &[4, INF, INF]).unwrap(),
            vec![4, 3, 3]
        );
    }

    #[test]
    fn budget_over_capacity_is_an_error() {
        assert!(matches!(
            apportion(&scores(&[1.0, 1.0]), 11, &[5, 5]),
            Err(Error::BudgetExceedsCapacity {
                budget: 11,
                capacity: 10
            })
        ));
        assert!(apportion(&scores(&[1.0, 1.0]), 1, &[1]).is_err());
    }

    #[test]
    fn exact_weights_are_proportional() {
        let w = exact_weights(&[0.75, 3.0, 0.0, 1.5e-300]);
        assert_eq!(&w[1], &(&w[0] * BigUint::from(4u8)));
        assert_eq!(w[2], BigUint::ZERO);
        assert!(w[3] > BigUint::ZERO);
    }

    #[test]
    fn innovation_examples() {
        let layout = BlockLayout::new(64, 64, 32);
        let a = Image::filled(64, 64, 0.4).unwrap();
        let s = innovation_scores(&a, &a, &layout).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));

        let mut data = vec![0.4; 64 * 64];
        for r in 32..64 {
            for c in 0..32 {
                data[r * 64 + c] = 0.5;
            }
        }
        let b = Image::new(64, 64, data).unwrap();
        let s = innovation_scores(&a, &b, &layout).unwrap();
        assert!((s.values()[2] - 10.24).abs() < 1e-9);
        assert_eq!(s.values()[0], 0.0);
        assert_eq!(s.values()[1], 0.0);
        assert_eq!(s.values()[3], 0.0);
        assert_eq!(innovation_scores(&b, &a, &layout).unwrap(), s);

        let small = Image::filled(32, 64, 0.4).unwrap();
        assert!(innovation_scores(&a, &small, &layout).is_err());
    }

    #[test]
    fn measurement_error_examples() {
        let m = SensingMatrix::build(21, 8).unwrap();
        let data: Vec<f64> = (0..256)
            .map(|i| 0.2 + 0.6 * ((i * 7) % 13) as f64 / 13.0)
            .collect();
        let img = Image::new(16, 16, data).unwrap();
        let grid = partition(&img, 8);
        let mut ms = MeasurementSet::new(4, &m);
        for (n, count) in [(0, 10), (1, 0), (2, 64), (3, 30)] {
            ms.sample_more(n, grid.block(n), &m, count).unwrap();
        }
        let s = measurement_error_scores(&ms, &m, &img).unwrap();
        assert!(s.values().iter().all(|&v| v < 1e-24));

        // perturb block 3 by a vector inside its sampled row span
        let v: Vec<f64> = (0..64)
            .map(|j| 0.01 * m.row(2)[j] - 0.02 * m.row(17)[j])
            .collect();
        let mut perturbed = img.data().to_vec();
        for r in 0..8 {
            for c in 0..8 {
                perturbed[(8 + r) * 16 + 8 + c] += v[r * 8 + c];
            }
        }
        let pimg = Image::new(16, 16, perturbed).unwrap();
        let s = measurement_error_scores(&ms, &m, &pimg).unwrap();
        let v_norm: f64 = v.iter().map(|x| x * x).sum();
        assert!((s.values()[3] - v_norm).abs() <= 1e-10);
        assert_eq!(s.values()[1], 0.0);
    }

    #[test]
    fn saliency_examples() {
        let layout = BlockLayout::new(64, 64, 32);
        let flat = Image::filled(64, 64, 0.3).unwrap();
        let s = saliency_scores(&flat, &layout).unwrap();
        assert!(s.values().iter().all(|&v| v.abs() < 1e-20));

        let mut data = vec![0.3; 64 * 64];
        for r in 0..32 {
            for c in 32..64 {
                data[r * 64 + c] = if (r + c) % 2 == 0 { 0.1 } else { 0.9 };
            }
        }
        let img = Image::new(64, 64, data).unwrap();
        let s = saliency_scores(&img, &layout).unwrap();
        let v = s.values();
        assert!(v[1] > v[0] && v[1] > v[2] && v[1] > v[3]);
        assert!(v[1] > 100.0 * (v[0] + v[2] + v[3]));
    }
}
