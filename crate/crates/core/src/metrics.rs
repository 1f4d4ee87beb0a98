//! Fidelity metrics on `[0, 1]` images (peak value 1).

use crate::error::{Error, Result};
use crate::image::Image;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub psnr: f64,
    pub ssim: f64,
    pub mse: f64,
}

impl QualityReport {
    pub fn compare(reference: &Image, test: &Image) -> Result<Self> {
        Ok(Self {
            psnr: psnr(reference, test)?,
            ssim: ssim(reference, test)?,
            mse: mse(reference, test)?,
        })
    }
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// `10·log10(1/mse)`, or [`PSNR_CAP_DB`] when the images are identical.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let e = mse(a, b)?;
    Ok(if e == 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / e).log10()).min(PSNR_CAP_DB)
    })
}

/// Single-scale SSIM with an 11×11 Gaussian window (σ = 1.5), averaged over
/// every window position that fits inside the image.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            height: h,
            width: w,
            window: SSIM_WINDOW,
        });
    }
    let kernel = gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA);
    let (x, y) = (a.data(), b.data());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();

    let mu_x = filter_valid(x, h, w, &kernel);
    let mu_y = filter_valid(y, h, w, &kernel);
    let e_xx = filter_valid(&xx, h, w, &kernel);
    let e_yy = filter_valid(&yy, h, w, &kernel);
    let e_xy = filter_valid(&xy, h, w, &kernel);

    let count = mu_x.len();
    let mut total = 0.0;
    for i in 0..count {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((mx * mx + my * my + SSIM_C1) * (var_x + var_y + SSIM_C2));
    }
    Ok(total / count as f64)
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable 2-D filtering with the 1-D `kernel`, keeping only positions where
/// the window lies fully inside the image.
fn filter_valid(data: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let ow = w - k + 1;
    let oh = h - k + 1;
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = (0..k).map(|j| kernel[j] * data[r * w + c + j]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = (0..k).map(|i| kernel[i] * rows[(r + i) * ow + c]).sum();
        }
    }
    out
}
