use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Band, GridSpec};

/// Truncated coefficients of a real, z-even, two-component field
///
/// `v_c = Σ v̂_c(m,n,k) e^{2πi(mx+ny)/L} cos(2πkz/h)`, stored for both
/// components `c ∈ {0, 1}` over every `(m, n, k)` slot of the grid. Slots
/// are addressed with signed wavenumbers; the storage wraps them FFT-style.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &GridSpec) -> Self {
        SpectralField {
            grid: *grid,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * grid.nx * grid.ny * grid.nz],
        }
    }

    /// Wraps raw coefficients laid out as `[c][m mod nx][n mod ny][k]`.
    pub fn from_raw(grid: &GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * grid.nx * grid.ny * grid.nz {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                2 * grid.nx * grid.ny * grid.nz,
                coeffs.len()
            )));
        }
        Ok(SpectralField {
            grid: *grid,
            coeffs,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn index(&self, c: usize, m: i64, n: i64, k: usize) -> usize {
        let g = &self.grid;
        let mi = m.rem_euclid(g.nx as i64) as usize;
        let ni = n.rem_euclid(g.ny as i64) as usize;
        ((c * g.nx + mi) * g.ny + ni) * g.nz + k
    }

    #[inline]
    pub fn get(&self, c: usize, m: i64, n: i64, k: usize) -> Complex64 {
        self.coeffs[self.index(c, m, n, k)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, m: i64, n: i64, k: usize, value: Complex64) {
        let i = self.index(c, m, n, k);
        self.coeffs[i] = value;
    }

    /// Sets `(m,n,k)` and its mirror `(-m,-n,k)` so the field stays real.
    pub fn set_pair(&mut self, c: usize, m: i64, n: i64, k: usize, value: Complex64) {
        self.set(c, m, n, k, value);
        self.set(c, -m, -n, k, value.conj());
        if m == 0 && n == 0 {
            self.set(c, 0, 0, k, Complex64::new(value.re, 0.0));
        }
    }

    pub fn same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Iterates the stored non-Nyquist wavenumbers `(m, n, k)`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, i64, usize)> {
        let band = self.grid.full_band();
        let nz = self.grid.nz;
        (-band.mx..=band.mx).flat_map(move |m| {
            (-band.ny..=band.ny).flat_map(move |n| (0..nz).map(move |k| (m, n, k)))
        })
    }

    fn is_nyquist(&self, m: i64, n: i64) -> bool {
        m.abs() == self.grid.nx as i64 / 2 || n.abs() == self.grid.ny as i64 / 2
    }

    /// Replaces the coefficients by their Hermitian part and clears the
    /// Nyquist slots.
    pub fn symmetrize(&mut self) {
        let g = self.grid;
        let half_x = g.nx as i64 / 2;
        let half_y = g.ny as i64 / 2;
        for c in 0..2 {
            for m in (-half_x + 1)..=half_x {
                for n in (-half_y + 1)..=half_y {
                    for k in 0..g.nz {
                        if self.is_nyquist(m, n) {
                            self.set(c, m, n, k, Complex64::new(0.0, 0.0));
                            continue;
                        }
                        // visit each conjugate pair once
                        if (m, n) < (-m, -n) {
                            continue;
                        }
                        let a = self.get(c, m, n, k);
                        let b = self.get(c, -m, -n, k).conj();
                        let avg = (a + b) * 0.5;
                        self.set(c, m, n, k, avg);
                        self.set(c, -m, -n, k, avg.conj());
                    }
                }
            }
        }
    }

    /// Largest deviation from `v̂(-m,-n,k) = conj v̂(m,n,k)`, plus any
    /// Nyquist content.
    pub fn hermitian_residual(&self) -> f64 {
        let g = self.grid;
        let half_x = g.nx as i64 / 2;
        let half_y = g.ny as i64 / 2;
        let mut worst = 0.0f64;
        for c in 0..2 {
            for m in (-half_x + 1)..=half_x {
                for n in (-half_y + 1)..=half_y {
                    for k in 0..g.nz {
                        let a = self.get(c, m, n, k);
                        let r = if self.is_nyquist(m, n) {
                            a.norm()
                        } else {
                            (a - self.get(c, -m, -n, k).conj()).norm()
                        };
                        worst = worst.max(r);
                    }
                }
            }
        }
        worst
    }

    /// `max_c |v̂_c(0,0,0)|`.
    pub fn mean_residual(&self) -> f64 {
        self.get(0, 0, 0, 0).norm().max(self.get(1, 0, 0, 0).norm())
    }

    /// Largest `|∂x v̂₁ + ∂y v̂₂|` over the barotropic (`k = 0`) modes.
    pub fn barotropic_divergence(&self) -> f64 {
        let unit = self.grid.kx_unit();
        let mut worst = 0.0f64;
        for (m, n, k) in self.modes() {
            if k != 0 {
                continue;
            }
            let d = (self.get(0, m, n, 0) * m as f64 + self.get(1, m, n, 0) * n as f64) * unit;
            worst = worst.max(d.norm());
        }
        worst
    }

    /// True when all three field invariants hold to `tol` (relative to the
    /// largest coefficient).
    pub fn satisfies_invariants(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.hermitian_residual() <= tol * scale
            && self.mean_residual() <= tol * scale
            && self.barotropic_divergence()
                <= tol * scale * self.grid.kx_unit() * self.grid.nx as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Weighted L² mass factor of a cosine mode: `Vol` for `k = 0`, `Vol/2` otherwise.
    #[inline]
    pub(crate) fn mass(&self, k: usize) -> f64 {
        if k == 0 {
            self.grid.volume()
        } else {
            0.5 * self.grid.volume()
        }
    }

    /// Sobolev inner product `⟨∇^j u, ∇^j v⟩` (`j = 0` is the L² product).
    pub fn inner_sobolev(&self, other: &SpectralField, j: u32) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let g = self.grid;
        let mut acc = 0.0;
        for (m, n, k) in self.modes() {
            let w = self.mass(k)
                * if j == 0 {
                    1.0
                } else {
                    g.eigenvalue(m, n, k).powi(j as i32)
                };
            if w == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for c in 0..2 {
                let a = self.get(c, m, n, k);
                let b = other.get(c, m, n, k);
                s += a.re * b.re + a.im * b.im;
            }
            acc += w * s;
        }
        acc
    }

    /// L² inner product.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        self.inner_sobolev(other, 0)
    }

    /// `‖∇^j f‖_{L²}`; `j = 0` is the L² norm.
    pub fn sobolev_norm(&self, j: u32) -> f64 {
        self.inner_sobolev(self, j).max(0.0).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0)
    }

    /// `‖f‖_{V^m}` at the grid's Sobolev index.
    pub fn vm_norm(&self) -> f64 {
        self.sobolev_norm(self.grid.m_sobolev)
    }

    /// `‖f‖_{L²} + δ‖f‖_{V^m}`.
    pub fn primed_norm(&self) -> f64 {
        self.l2_norm() + self.grid.delta * self.vm_norm()
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        debug_assert_eq!(self.grid, other.grid);
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    /// Keeps only the modes inside `band`.
    pub fn truncate(&mut self, band: &Band) {
        let g = self.grid;
        for c in 0..2 {
            for mi in 0..g.nx {
                let m = if mi > g.nx / 2 {
                    mi as i64 - g.nx as i64
                } else {
                    mi as i64
                };
                for ni in 0..g.ny {
                    let n = if ni > g.ny / 2 {
                        ni as i64 - g.ny as i64
                    } else {
                        ni as i64
                    };
                    for k in 0..g.nz {
                        if !band.contains(m, n, k) {
                            let i = ((c * g.nx + mi) * g.ny + ni) * g.nz + k;
                            self.coeffs[i] = Complex64::new(0.0, 0.0);
                        }
                    }
                }
            }
        }
    }

    /// Multiplies each mode by `factor(λ)`, e.g. the heat semigroup.
    pub fn apply_spectral<F: Fn(f64) -> f64>(&mut self, factor: F) {
        let table = Self::spectral_table(&self.grid, factor);
        self.apply_table(&table);
    }

    /// `factor(λ)` for every stored `(m, n, k)`, in storage order; reusable
    /// with [`SpectralField::apply_table`].
    pub fn spectral_table<F: Fn(f64) -> f64>(g: &GridSpec, factor: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(g.nx * g.ny * g.nz);
        for mi in 0..g.nx {
            let m = if mi > g.nx / 2 {
                mi as i64 - g.nx as i64
            } else {
                mi as i64
            };
            for ni in 0..g.ny {
                let n = if ni > g.ny / 2 {
                    ni as i64 - g.ny as i64
                } else {
                    ni as i64
                };
                for k in 0..g.nz {
                    out.push(factor(g.eigenvalue(m, n, k)));
                }
            }
        }
        out
    }

    /// Multiplies both components mode-wise by a table from
    /// [`SpectralField::spectral_table`].
    pub fn apply_table(&mut self, table: &[f64]) {
        assert_eq!(
            table.len() * 2,
            self.coeffs.len(),
            "table does not match the grid"
        );
        for half in self.coeffs.chunks_exact_mut(table.len()) {
            for (x, f) in half.iter_mut().zip(table) {
                *x *= *f;
            }
        }
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        self.axpy(-1.0, rhs);
    }
}

impl MulAssign<f64> for SpectralField {
    fn mul_assign(&mut self, rhs: f64) {
        for x in &mut self.coeffs {
            *x *= rhs;
        }
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        let mut out = self.clone();
        out *= rhs;
        out
    }
}

impl Mul<f64> for SpectralField {
    type Output = SpectralField;
    fn mul(mut self, rhs: f64) -> SpectralField {
        self *= rhs;
        self
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for SpectralField {
    type Output = SpectralField;
    fn neg(mut self) -> SpectralField {
        self *= -1.0;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_cosine_l2_norm() {
        let g = GridSpec::desk();
        let mut f = SpectralField::zeros(&g);
        f.set_pair(1, 1, 0, 0, Complex64::new(0.5, 0.0));
        let vol = 8.0 * PI.powi(3);
        assert!((f.l2_norm() - (vol / 2.0).sqrt()).abs() < 1e-12);
        assert_eq!(f.hermitian_residual(), 0.0);
    }

    #[test]
    fn zero_field_norms() {
        let f = SpectralField::zeros(&GridSpec::desk());
        assert_eq!(f.l2_norm(), 0.0);
        assert_eq!(f.primed_norm(), 0.0);
        assert_eq!(f.sobolev_norm(3), 0.0);
    }

    #[test]
    fn primed_norm_single_mode() {
        // λ = 1 for (1,0,0) on the 2π box, so ‖f‖' = (1 + δ)‖f‖ for any m
        let g = GridSpec {
            delta: 1.0,
            ..GridSpec::desk()
        };
        let mut f = SpectralField::zeros(&g);
        let a = 0.7;
        f.set_pair(1, 1, 0, 0, Complex64::new(a / 2.0, 0.0));
        let vol = g.volume();
        let expect = 2.0 * a * (vol / 2.0).sqrt();
        assert!((f.primed_norm() - expect).abs() < 1e-12 * expect);
        // a (1,1,0) mode has λ = 2, and with m = 2 ‖f‖_{V^m} = λ^{m/2}‖f‖
        let mut f = SpectralField::zeros(&g);
        f.set_pair(0, 1, -1, 0, Complex64::new(a / 2.0, 0.0));
        f.set_pair(1, 1, -1, 0, Complex64::new(a / 2.0, 0.0));
        let l2 = f.l2_norm();
        assert!((f.primed_norm() - (1.0 + 2.0) * l2).abs() < 1e-12 * l2);
    }

    #[test]
    fn symmetrize_clears_nyquist() {
        let g = GridSpec::desk();
        let mut f = SpectralField::zeros(&g);
        f.set(0, 8, 1, 2, Complex64::new(1.0, 1.0));
        f.set(1, 2, 3, 1, Complex64::new(1.0, 1.0));
        assert!(f.hermitian_residual() > 0.0);
        f.symmetrize();
        assert!(f.hermitian_residual() < 1e-15);
        assert_eq!(f.get(0, 8, 1, 2), Complex64::new(0.0, 0.0));
    }
}
