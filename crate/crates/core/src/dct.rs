//! Orthonormal 2-D DCT-II on square tiles, computed separably with a
//! precomputed basis matrix.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct Dct2 {
    n: usize,
    /// `basis[k*n + i] = a_k cos(π(2i+1)k / 2n)`
    basis: Vec<f64>,
}

impl Dct2 {
    pub fn new(n: usize) -> Self {
        let mut basis = vec![0.0; n * n];
        for k in 0..n {
            let scale = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            for i in 0..n {
                basis[k * n + i] =
                    scale * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
            }
        }
        Self { n, basis }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Forward transform of a row-major `n×n` tile. Coefficient `(u, v)` lands
    /// at index `u*n + v`; index 0 is DC.
    pub fn forward(&self, tile: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut tmp = vec![0.0; n * n];
        // rows: tmp[r][v] = Σ_c tile[r][c] C[v][c]
        for r in 0..n {
            let row = &tile[r * n..(r + 1) * n];
            for v in 0..n {
                tmp[r * n + v] = crate::linalg::dot(row, &self.basis[v * n..(v + 1) * n]);
            }
        }
        // columns: out[u][v] = Σ_r C[u][r] tmp[r][v]
        let mut out = vec![0.0; n * n];
        for u in 0..n {
            let dst = &mut out[u * n..(u + 1) * n];
            for r in 0..n {
                crate::linalg::axpy(self.basis[u * n + r], &tmp[r * n..(r + 1) * n], dst);
            }
        }
        out
    }

    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.n;
        // columns: tmp[r][v] = Σ_u C[u][r] coeffs[u][v]
        let mut tmp = vec![0.0; n * n];
        for u in 0..n {
            let src = &coeffs[u * n..(u + 1) * n];
            for r in 0..n {
                crate::linalg::axpy(self.basis[u * n + r], src, &mut tmp[r * n..(r + 1) * n]);
            }
        }
        // rows: out[r][c] = Σ_v tmp[r][v] C[v][c]
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            let dst = &mut out[r * n..(r + 1) * n];
            for v in 0..n {
                crate::linalg::axpy(tmp[r * n + v], &self.basis[v * n..(v + 1) * n], dst);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct quadruple-sum definition.
    fn naive_forward(tile: &[f64], n: usize) -> Vec<f64> {
        let a = |k: usize| {
            if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            }
        };
        let mut out = vec![0.0; n * n];
        for u in 0..n {
            for v in 0..n {
                let mut s = 0.0;
                for x in 0..n {
                    for y in 0..n {
                        s += tile[x * n + y]
                            * (PI * (2 * x + 1) as f64 * u as f64 / (2 * n) as f64).cos()
                            * (PI * (2 * y + 1) as f64 * v as f64 / (2 * n) as f64).cos();
                    }
                }
                out[u * n + v] = a(u) * a(v) * s;
            }
        }
        out
    }

    #[test]
    fn matches_definition_and_inverts() {
        let n = 8;
        let tile: Vec<f64> = (0..n * n).map(|i| ((i * 37 % 11) as f64) / 10.0).collect();
        let dct = Dct2::new(n);
        let c = dct.forward(&tile);
        for (a, b) in c.iter().zip(naive_forward(&tile, n)) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in dct.inverse(&c).iter().zip(&tile) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_tile_is_pure_dc() {
        let dct = Dct2::new(32);
        let c = dct.forward(&vec![0.25; 1024]);
        assert!((c[0] - 0.25 * 32.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }
}
