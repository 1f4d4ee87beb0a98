//! Seeded synthetic test images.

use acs_core::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

pub const CORPUS_NAMES: &[&str] = &["heterogeneous16"];

const HET_COUNT: usize = 16;
const HET_SIDE: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Texture {
    Checkerboard,
    Stripes,
    Noise,
}

/// One generated image plus how it was drawn.
#[derive(Debug, Clone)]
pub struct CorpusImage {
    pub name: String,
    pub image: Image,
    /// Quadrant holding the texture: 0 top-left, 1 top-right, 2 bottom-left,
    /// 3 bottom-right.
    pub textured_quadrant: usize,
    pub texture: Texture,
}

pub fn make_synthetic_corpus(name: &str, seed: u64) -> Result<Vec<CorpusImage>, CliError> {
    match name {
        "heterogeneous16" => Ok(heterogeneous(seed)),
        other => Err(CliError::UnknownCorpus(other.to_string())),
    }
}

/// Sixteen 96×96 images. Each has a smooth background (flat or a gentle
/// gradient) and one quadrant overlaid with a high-frequency texture.
fn heterogeneous(seed: u64) -> Vec<CorpusImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..HET_COUNT)
        .map(|i| {
            let texture = match i % 3 {
                0 => Texture::Checkerboard,
                1 => Texture::Stripes,
                _ => Texture::Noise,
            };
            let quadrant = rng.random_range(0..4);
            let background = Background::draw(&mut rng);
            let pattern = Pattern::draw(texture, &mut rng);
            let half = HET_SIDE / 2;
            let (qr, qc) = (quadrant / 2, quadrant % 2);
            let mut data = Vec::with_capacity(HET_SIDE * HET_SIDE);
            for r in 0..HET_SIDE {
                for c in 0..HET_SIDE {
                    let mut v = background.at(r, c);
                    if r / half == qr && c / half == qc {
                        v += pattern.at(r, c, &mut rng);
                    }
                    data.push(v.clamp(0.0, 1.0));
                }
            }
            CorpusImage {
                name: format!("het{i:02}"),
                image: Image::new(HET_SIDE, HET_SIDE, data).expect("clamped into range"),
                textured_quadrant: quadrant,
                texture,
            }
        })
        .collect()
}

struct Background {
    level: f64,
    slope_r: f64,
    slope_c: f64,
}

impl Background {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let level = rng.random_range(0.35..0.65);
        if rng.random_bool(0.5) {
            Self {
                level,
                slope_r: 0.0,
                slope_c: 0.0,
            }
        } else {
            Self {
                level,
                slope_r: rng.random_range(-0.15..0.15),
                slope_c: rng.random_range(-0.15..0.15),
            }
        }
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        let t = |x: usize| x as f64 / (HET_SIDE - 1) as f64 - 0.5;
        self.level + self.slope_r * t(r) + self.slope_c * t(c)
    }
}

enum Pattern {
    Checker {
        cell: usize,
        amp: f64,
    },
    Stripes {
        period: usize,
        orientation: u8,
        amp: f64,
    },
    Noise {
        amp: f64,
    },
}

impl Pattern {
    fn draw(texture: Texture, rng: &mut ChaCha8Rng) -> Self {
        let amp = rng.random_range(0.15..0.3);
        match texture {
            Texture::Checkerboard => Pattern::Checker {
                cell: rng.random_range(1..=4),
                amp,
            },
            Texture::Stripes => Pattern::Stripes {
                period: rng.random_range(2..=6),
                orientation: rng.random_range(0..3),
                amp,
            },
            Texture::Noise => Pattern::Noise { amp },
        }
    }

    fn at(&self, r: usize, c: usize, rng: &mut ChaCha8Rng) -> f64 {
        let square = |on: bool, amp: f64| if on { amp } else { -amp };
        match *self {
            Pattern::Checker { cell, amp } => square((r / cell + c / cell).is_multiple_of(2), amp),
            Pattern::Stripes {
                period,
                orientation,
                amp,
            } => {
                let coord = match orientation {
                    0 => r,
                    1 => c,
                    _ => r + c,
                };
                square(coord % period < period.div_ceil(2), amp)
            }
            Pattern::Noise { amp } => rng.random_range(-amp..=amp),
        }
    }
}
