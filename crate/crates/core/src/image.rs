//! Grayscale rasters and their decomposition into square blocks.
//!
//! Intensities live in `[0, 1]`. Images whose sides are not multiples of the
//! block size are padded by edge replication before tiling; [`assemble`]
//! crops the padding away again, so metrics never see padded pixels.

use crate::error::{Error, Result};

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::LengthMismatch {
                expected: height * width,
                found: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::IntensityOutOfRange { index, value });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Builds an image, saturating every value into `[0, 1]` (NaN maps to 0).
    pub fn from_clamped(height: usize, width: usize, mut data: Vec<f64>) -> Result<Self> {
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self::new(height, width, data)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub(crate) fn ensure_same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }
}

/// Geometry of a block tiling: block size, grid shape and the original
/// (unpadded) image size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub block_size: usize,
    pub rows: usize,
    pub cols: usize,
    pub height: usize,
    pub width: usize,
}

impl BlockLayout {
    pub fn new(height: usize, width: usize, block_size: usize) -> Self {
        assert!(block_size >= 1, "block size must be positive");
        Self {
            block_size,
            rows: height.div_ceil(block_size),
            cols: width.div_ceil(block_size),
            height,
            width,
        }
    }

    pub fn for_image(img: &Image, block_size: usize) -> Self {
        Self::new(img.height(), img.width(), block_size)
    }

    pub fn block_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Pixels per block (`B²`).
    pub fn block_area(&self) -> usize {
        self.block_size * self.block_size
    }

    /// Image pixel ranges `(rows, cols)` covered by block `index`, clipped to
    /// the unpadded image.
    pub fn block_bounds(&self, index: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let b = self.block_size;
        let (br, bc) = (index / self.cols, index % self.cols);
        let r0 = br * b;
        let c0 = bc * b;
        (r0..(r0 + b).min(self.height), c0..(c0 + b).min(self.width))
    }

    /// Sums `per_pixel` (a full-size, row-major map) over each block's
    /// unpadded footprint.
    pub fn sum_per_block(&self, per_pixel: &[f64]) -> Vec<f64> {
        debug_assert_eq!(per_pixel.len(), self.height * self.width);
        (0..self.block_count())
            .map(|n| {
                let (rows, cols) = self.block_bounds(n);
                rows.map(|r| {
                    per_pixel[r * self.width + cols.start..r * self.width + cols.end]
                        .iter()
                        .sum::<f64>()
                })
                .sum()
            })
            .collect()
    }
}

/// An image cut into `B×B` tiles, listed in row-major block order. Each tile
/// is stored row-major as a vector of length `B²`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    layout: BlockLayout,
    blocks: Vec<Vec<f64>>,
}

impl BlockGrid {
    pub fn new(layout: BlockLayout, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.len() != layout.block_count() {
            return Err(Error::BlockCountMismatch {
                expected: layout.block_count(),
                found: blocks.len(),
            });
        }
        if let Some(bad) = blocks.iter().find(|b| b.len() != layout.block_area()) {
            return Err(Error::LengthMismatch {
                expected: layout.block_area(),
                found: bad.len(),
            });
        }
        Ok(Self { layout, blocks })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn block(&self, index: usize) -> &[f64] {
        &self.blocks[index]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Tiles `img` into `block_size`-square blocks, padding by edge replication.
pub fn partition(img: &Image, block_size: usize) -> BlockGrid {
    let layout = BlockLayout::for_image(img, block_size);
    let b = block_size;
    let blocks = (0..layout.block_count())
        .map(|n| {
            let r0 = (n / layout.cols) * b;
            let c0 = (n % layout.cols) * b;
            let mut tile = Vec::with_capacity(b * b);
            for dr in 0..b {
                let r = (r0 + dr).min(img.height - 1);
                for dc in 0..b {
                    let c = (c0 + dc).min(img.width - 1);
                    tile.push(img.get(r, c));
                }
            }
            tile
        })
        .collect();
    BlockGrid { layout, blocks }
}

/// Inverse of [`partition`]: stitches tiles back together and crops padding.
pub fn assemble(grid: &BlockGrid) -> Result<Image> {
    let data = stitch(&grid.layout, &grid.blocks)?;
    Image::new(grid.layout.height, grid.layout.width, data)
}

/// Like [`assemble`] but works on raw block estimates, saturating the result
/// into `[0, 1]`.
pub fn assemble_clamped(layout: &BlockLayout, blocks: &[Vec<f64>]) -> Result<Image> {
    let data = stitch(layout, blocks)?;
    Image::from_clamped(layout.height, layout.width, data)
}

fn stitch(layout: &BlockLayout, blocks: &[Vec<f64>]) -> Result<Vec<f64>> {
    if blocks.len() != layout.block_count() {
        return Err(Error::BlockCountMismatch {
            expected: layout.block_count(),
            found: blocks.len(),
        });
    }
    let b = layout.block_size;
    let mut data = vec![0.0; layout.height * layout.width];
    for (n, tile) in blocks.iter().enumerate() {
        if tile.len() != b * b {
            return Err(Error::LengthMismatch {
                expected: b * b,
                found: tile.len(),
            });
        }
        let (rows, cols) = layout.block_bounds(n);
        let (r0, c0) = (rows.start, cols.start);
        for r in rows {
            let src = &tile[(r - r0) * b..(r - r0) * b + (cols.end - c0)];
            data[r * layout.width + c0..r * layout.width + cols.end].copy_from_slice(src);
        }
    }
    Ok(data)
}
