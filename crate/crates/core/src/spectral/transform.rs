//! Pruned separable transforms between band-limited coefficients and the
//! collocation grid.
//!
//! Real fields that are even (cosine series) or odd (sine series) in `z` are
//! sampled on the half period `z_l = l·h/(2(Nz-1))`, `l = 0..Nz`; the other
//! half follows by parity. Two real fields of equal parity travel through a
//! single complex transform as `a + i b`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::SpectralField;
use crate::error::{Error, Result};
use crate::grid::{Band, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Cosine series in `z`.
    Even,
    /// Sine series in `z`.
    Odd,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Transform plans and vertical tables for one grid and one band.
pub struct Transform {
    grid: GridSpec,
    band: Band,
    levels: usize,
    fft_x_inv: Arc<dyn Fft<f64>>,
    fft_x_fwd: Arc<dyn Fft<f64>>,
    fft_y_inv: Arc<dyn Fft<f64>>,
    fft_y_fwd: Arc<dyn Fft<f64>>,
    // [k][l]
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
    cos_weights: Vec<f64>,
    sin_weights: Vec<f64>,
    // grid slot of band offset mi (resp. ni)
    wrap_m: Vec<usize>,
    wrap_n: Vec<usize>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform")
            .field("grid", &self.grid)
            .field("band", &self.band)
            .finish()
    }
}

impl Transform {
    pub fn new(grid: &GridSpec, band: Band) -> Self {
        let mut planner = FftPlanner::new();
        let levels = grid.nz;
        let half = (grid.nz - 1) as f64;
        let ng = grid.nz_grid() as f64;
        let nk = band.depth_k();
        let mut cos_table = vec![0.0; nk * levels];
        let mut sin_table = vec![0.0; nk * levels];
        let mut cos_weights = vec![0.0; nk * levels];
        let mut sin_weights = vec![0.0; nk * levels];
        for k in 0..nk {
            let ck = if k == 0 || k == grid.nz - 1 { 1.0 } else { 2.0 };
            for l in 0..levels {
                let arg = PI * (k * l) as f64 / half;
                cos_table[k * levels + l] = arg.cos();
                // exact zeros at the parity-fixed levels
                sin_table[k * levels + l] = if l == 0 || l == levels - 1 {
                    0.0
                } else {
                    arg.sin()
                };
                let el = if l == 0 || l == levels - 1 { 1.0 } else { 2.0 };
                cos_weights[k * levels + l] = ck * el * arg.cos() / ng;
                sin_weights[k * levels + l] = if l == 0 || l == levels - 1 || k == 0 {
                    0.0
                } else {
                    4.0 * arg.sin() / ng
                };
            }
        }
        Transform {
            grid: *grid,
            band,
            levels,
            fft_x_inv: planner.plan_fft_inverse(grid.nx),
            fft_x_fwd: planner.plan_fft_forward(grid.nx),
            fft_y_inv: planner.plan_fft_inverse(grid.ny),
            fft_y_fwd: planner.plan_fft_forward(grid.ny),
            cos_table,
            sin_table,
            cos_weights,
            sin_weights,
            wrap_m: (0..band.width_m())
                .map(|mi| (mi as i64 - band.mx).rem_euclid(grid.nx as i64) as usize)
                .collect(),
            wrap_n: (0..band.width_n())
                .map(|ni| (ni as i64 - band.ny).rem_euclid(grid.ny as i64) as usize)
                .collect(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn band(&self) -> &Band {
        &self.band
    }

    /// Number of physical samples on the half-period grid.
    pub fn physical_len(&self) -> usize {
        self.levels * self.grid.ny * self.grid.nx
    }

    /// Evaluates band coefficients on the half grid; output layout `[l][j][i]`.
    pub fn synthesize(&self, spec: &[Complex64], parity: Parity, out: &mut [Complex64]) {
        let b = self.band;
        let (nx, ny, lv) = (self.grid.nx, self.grid.ny, self.levels);
        debug_assert_eq!(spec.len(), b.len());
        debug_assert_eq!(out.len(), self.physical_len());
        let table = match parity {
            Parity::Even => &self.cos_table,
            Parity::Odd => &self.sin_table,
        };
        let nk = b.depth_k();
        let (wm, wn) = (b.width_m(), b.width_n());

        // z: cols[(m,n)][l]
        let mut cols = vec![ZERO; wm * wn * lv];
        for (src, dst) in spec.chunks_exact(nk).zip(cols.chunks_exact_mut(lv)) {
            for (k, c) in src.iter().enumerate() {
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                let row = &table[k * lv..(k + 1) * lv];
                for (d, t) in dst.iter_mut().zip(row) {
                    *d += c * *t;
                }
            }
        }

        // y: rows[l][m][j], all lines in one batch
        let mut rows = vec![ZERO; lv * wm * ny];
        for mi in 0..wm {
            for ni in 0..wn {
                let col = &cols[(mi * wn + ni) * lv..(mi * wn + ni + 1) * lv];
                let j = self.wrap_n[ni];
                for (l, v) in col.iter().enumerate() {
                    rows[(l * wm + mi) * ny + j] = *v;
                }
            }
        }
        self.fft_y_inv.process(&mut rows);

        // x
        out.iter_mut().for_each(|v| *v = ZERO);
        for l in 0..lv {
            for mi in 0..wm {
                let i = self.wrap_m[mi];
                let src = &rows[(l * wm + mi) * ny..(l * wm + mi + 1) * ny];
                for (j, v) in src.iter().enumerate() {
                    out[(l * ny + j) * nx + i] = *v;
                }
            }
        }
        self.fft_x_inv.process(out);
    }

    /// Projects half-grid samples (layout `[l][j][i]`) onto the band.
    /// `phys` is used as scratch.
    pub fn analyze(&self, phys: &mut [Complex64], parity: Parity, out: &mut [Complex64]) {
        let b = self.band;
        let (nx, ny, lv) = (self.grid.nx, self.grid.ny, self.levels);
        debug_assert_eq!(out.len(), b.len());
        let (wm, wn, nk) = (b.width_m(), b.width_n(), b.depth_k());
        let scale = 1.0 / (nx * ny) as f64;

        // x: rows[l][m][j]
        self.fft_x_fwd.process(phys);
        let mut rows = vec![ZERO; lv * wm * ny];
        for l in 0..lv {
            for j in 0..ny {
                let line = &phys[(l * ny + j) * nx..(l * ny + j + 1) * nx];
                for mi in 0..wm {
                    rows[(l * wm + mi) * ny + j] = line[self.wrap_m[mi]];
                }
            }
        }

        // y: cols[(m,n)][l]
        self.fft_y_fwd.process(&mut rows);
        let mut cols = vec![ZERO; wm * wn * lv];
        for l in 0..lv {
            for mi in 0..wm {
                let line = &rows[(l * wm + mi) * ny..(l * wm + mi + 1) * ny];
                for ni in 0..wn {
                    cols[(mi * wn + ni) * lv + l] = line[self.wrap_n[ni]] * scale;
                }
            }
        }

        // z
        let weights = match parity {
            Parity::Even => &self.cos_weights,
            Parity::Odd => &self.sin_weights,
        };
        for (src, dst) in cols.chunks_exact(lv).zip(out.chunks_exact_mut(nk)) {
            for (k, o) in dst.iter_mut().enumerate() {
                let w = &weights[k * lv..(k + 1) * lv];
                let mut acc = ZERO;
                for (s, wt) in src.iter().zip(w) {
                    acc += s * *wt;
                }
                *o = acc;
            }
        }
    }

    /// Copies component `c` of `f` into a band block.
    pub fn gather(&self, f: &SpectralField, c: usize) -> Vec<Complex64> {
        let b = self.band;
        let mut out = vec![ZERO; b.len()];
        for m in -b.mx..=b.mx {
            for n in -b.ny..=b.ny {
                for k in 0..=b.kz {
                    out[b.index(m, n, k)] = f.get(c, m, n, k);
                }
            }
        }
        out
    }

    /// Writes a band block into component `c` of `f` (other modes untouched).
    pub fn scatter(&self, block: &[Complex64], f: &mut SpectralField, c: usize) {
        let b = self.band;
        for m in -b.mx..=b.mx {
            for n in -b.ny..=b.ny {
                for k in 0..=b.kz {
                    f.set(c, m, n, k, block[b.index(m, n, k)]);
                }
            }
        }
    }

    /// Synthesizes two real band blocks of equal parity in one pass.
    /// Returns the samples of `a` in the real parts and of `b` in the
    /// imaginary parts.
    pub fn synthesize_pair(
        &self,
        a: &[Complex64],
        b: Option<&[Complex64]>,
        parity: Parity,
    ) -> Vec<Complex64> {
        let packed: Vec<Complex64> = match b {
            Some(b) => a
                .iter()
                .zip(b)
                .map(|(x, y)| x + Complex64::i() * y)
                .collect(),
            None => a.to_vec(),
        };
        let mut out = vec![ZERO; self.physical_len()];
        self.synthesize(&packed, parity, &mut out);
        out
    }

    /// Analyzes samples carrying two real fields (`re`, `im`) of equal
    /// parity and separates their band blocks.
    pub fn analyze_pair(
        &self,
        mut phys: Vec<Complex64>,
        parity: Parity,
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let b = self.band;
        let mut z = vec![ZERO; b.len()];
        self.analyze(&mut phys, parity, &mut z);
        let mut first = vec![ZERO; b.len()];
        let mut second = vec![ZERO; b.len()];
        for m in -b.mx..=b.mx {
            for n in -b.ny..=b.ny {
                for k in 0..=b.kz {
                    let p = z[b.index(m, n, k)];
                    let q = z[b.index(-m, -n, k)].conj();
                    first[b.index(m, n, k)] = (p + q) * 0.5;
                    second[b.index(m, n, k)] = (p - q) * Complex64::new(0.0, -0.5);
                }
            }
        }
        (first, second)
    }
}

/// Samples of both components on the full collocation grid,
/// `2 × Nx × Ny × 2(Nz-1)`, laid out `[c][i][j][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub grid: GridSpec,
    pub data: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(grid: &GridSpec) -> Self {
        PhysicalField {
            grid: *grid,
            data: vec![0.0; 2 * grid.nx * grid.ny * grid.nz_grid()],
        }
    }

    #[inline]
    pub fn index(&self, c: usize, i: usize, j: usize, l: usize) -> usize {
        let g = &self.grid;
        ((c * g.nx + i) * g.ny + j) * g.nz_grid() + l
    }

    pub fn get(&self, c: usize, i: usize, j: usize, l: usize) -> f64 {
        self.data[self.index(c, i, j, l)]
    }

    pub fn set(&mut self, c: usize, i: usize, j: usize, l: usize, v: f64) {
        let idx = self.index(c, i, j, l);
        self.data[idx] = v;
    }

    /// Collocation point `(x_i, y_j, z_l)`.
    pub fn point(&self, i: usize, j: usize, l: usize) -> (f64, f64, f64) {
        let g = &self.grid;
        (
            g.length * i as f64 / g.nx as f64,
            g.length * j as f64 / g.ny as f64,
            g.depth * l as f64 / g.nz_grid() as f64,
        )
    }

    /// Fills the samples from a closure of `(c, x, y, z)`.
    pub fn from_fn<F: Fn(usize, f64, f64, f64) -> f64>(grid: &GridSpec, f: F) -> Self {
        let mut p = PhysicalField::zeros(grid);
        for c in 0..2 {
            for i in 0..grid.nx {
                for j in 0..grid.ny {
                    for l in 0..grid.nz_grid() {
                        let (x, y, z) = p.point(i, j, l);
                        p.set(c, i, j, l, f(c, x, y, z));
                    }
                }
            }
        }
        p
    }
}

/// Evaluates the truncated series on the full collocation grid.
pub fn to_physical(f: &SpectralField) -> PhysicalField {
    let g = *f.grid();
    let t = Transform::new(&g, g.full_band());
    let a = t.gather(f, 0);
    let b = t.gather(f, 1);
    let half = t.synthesize_pair(&a, Some(&b), Parity::Even);
    let mut out = PhysicalField::zeros(&g);
    let ng = g.nz_grid();
    for l in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let v = half[(l * g.ny + j) * g.nx + i];
                out.set(0, i, j, l, v.re);
                out.set(1, i, j, l, v.im);
                if l > 0 && l < g.nz - 1 {
                    out.set(0, i, j, ng - l, v.re);
                    out.set(1, i, j, ng - l, v.im);
                }
            }
        }
    }
    out
}

/// Coefficients of the interpolating truncated series.
///
/// Hermitian symmetry is enforced exactly and content at the horizontal
/// Nyquist wavenumbers is discarded. The `(0,0,0)` mean is kept; `project`
/// removes it. Samples whose odd-in-`z` part exceeds `1e-10` of their
/// magnitude are rejected.
pub fn from_physical(p: &PhysicalField) -> Result<SpectralField> {
    let g = p.grid;
    let ng = g.nz_grid();
    let mut scale = 0.0f64;
    let mut odd = 0.0f64;
    for c in 0..2 {
        for i in 0..g.nx {
            for j in 0..g.ny {
                for l in 0..ng {
                    let v = p.get(c, i, j, l);
                    scale = scale.max(v.abs());
                    let mirror = p.get(c, i, j, (ng - l) % ng);
                    odd = odd.max((v - mirror).abs());
                }
            }
        }
    }
    if odd > 1e-10 * scale {
        return Err(Error::NotEven {
            oddness: odd / scale,
        });
    }
    let t = Transform::new(&g, g.full_band());
    let mut half = vec![ZERO; t.physical_len()];
    for l in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                half[(l * g.ny + j) * g.nx + i] =
                    Complex64::new(p.get(0, i, j, l), p.get(1, i, j, l));
            }
        }
    }
    let (a, b) = t.analyze_pair(half, Parity::Even);
    let mut f = SpectralField::zeros(&g);
    t.scatter(&a, &mut f, 0);
    t.scatter(&b, &mut f, 1);
    f.symmetrize();
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_give_zero_samples() {
        let g = GridSpec::desk();
        let p = to_physical(&SpectralField::zeros(&g));
        assert!(p.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_cosine_mode() {
        let g = GridSpec::desk();
        let mut f = SpectralField::zeros(&g);
        f.set_pair(1, 1, 0, 0, Complex64::new(0.5, 0.0));
        let p = to_physical(&f);
        for i in 0..g.nx {
            for j in 0..g.ny {
                for l in 0..g.nz_grid() {
                    let (x, _, _) = p.point(i, j, l);
                    assert!(p.get(0, i, j, l).abs() < 1e-15);
                    assert!((p.get(1, i, j, l) - x.cos()).abs() < 1e-14);
                }
            }
        }
        let back = from_physical(&p).unwrap();
        assert!((back.get(1, 1, 0, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((back.get(1, -1, 0, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        let mut rest = back.clone();
        rest.set(1, 1, 0, 0, ZERO);
        rest.set(1, -1, 0, 0, ZERO);
        assert!(rest.max_abs() < 1e-15);
    }

    #[test]
    fn odd_samples_rejected() {
        let g = GridSpec::desk();
        let p = PhysicalField::from_fn(&g, |_, x, _, z| x.cos() * z.sin());
        assert!(matches!(from_physical(&p), Err(Error::NotEven { .. })));
    }

    #[test]
    fn constant_samples_land_on_the_mean() {
        let g = GridSpec::desk();
        let p = PhysicalField::from_fn(&g, |c, _, _, _| if c == 0 { 2.0 } else { 0.0 });
        let f = from_physical(&p).unwrap();
        assert!((f.get(0, 0, 0, 0).re - 2.0).abs() < 1e-14);
        let f = crate::spectral::project(&f);
        assert!(f.max_abs() < 1e-14);
    }

    #[test]
    fn sine_parity_round_trip() {
        let g = GridSpec::desk();
        let band = g.dealiased_band();
        let t = Transform::new(&g, band);
        let mut a = vec![ZERO; band.len()];
        a[band.index(2, -1, 3)] = Complex64::new(0.3, 0.1);
        a[band.index(-2, 1, 3)] = Complex64::new(0.3, -0.1);
        a[band.index(0, 1, 1)] = Complex64::new(0.0, 0.2);
        a[band.index(0, -1, 1)] = Complex64::new(0.0, -0.2);
        let phys = t.synthesize_pair(&a, None, Parity::Odd);
        assert!(phys.iter().all(|v| v.im.abs() < 1e-15));
        let (back, other) = t.analyze_pair(phys, Parity::Odd);
        for (x, y) in back.iter().zip(&a) {
            assert!((x - y).norm() < 1e-15);
        }
        assert!(other.iter().all(|v| v.norm() < 1e-15));
    }
}
