use std::cmp::Ordering;

use num_complex::Complex64;

use super::field::SpectralField;
use crate::grid::GridSpec;

/// Polarization of a retained basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    /// `(-n, m)` direction: horizontally divergence-free.
    Minus,
    /// `(m, n)` direction: only retained for `k >= 1`.
    Plus,
    /// Horizontal-constant mode along `e₁` (`m = n = 0`, `k >= 1`).
    AxisX,
    /// Horizontal-constant mode along `e₂`.
    AxisY,
}

/// One real, L²-normalized basis function of `V`.
///
/// Each complex function `Λ_{m,n}^{k±}` and its mirror `Λ_{-m,-n}^{k±}` span
/// the same real plane as the cosine-type and sine-type real functions. The
/// index with `(m, n)` in the upper half plane (`m > 0`, or `m = 0, n > 0`)
/// denotes the cosine type; its negation denotes the sine type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub m: i64,
    pub n: i64,
    pub k: usize,
    pub pol: Polarization,
}

fn upper_half(m: i64, n: i64) -> bool {
    m > 0 || (m == 0 && n > 0)
}

impl ModeIndex {
    pub fn eigenvalue(&self, g: &GridSpec) -> f64 {
        g.eigenvalue(self.m, self.n, self.k)
    }

    /// Whether the index names a member of the retained basis of `V` on `g`.
    pub fn is_valid(&self, g: &GridSpec) -> bool {
        let stored = self.m.abs() <= g.max_m() && self.n.abs() <= g.max_n() && self.k < g.nz;
        if !stored {
            return false;
        }
        let horizontal_zero = self.m == 0 && self.n == 0;
        match self.pol {
            Polarization::Minus => !horizontal_zero,
            Polarization::Plus => !horizontal_zero && self.k >= 1,
            Polarization::AxisX | Polarization::AxisY => horizontal_zero && self.k >= 1,
        }
    }

    /// The basis function as a spectral field, normalized in L².
    pub fn basis_field(&self, g: &GridSpec) -> SpectralField {
        let mut f = SpectralField::zeros(g);
        let vol = g.volume();
        let zmass = if self.k == 0 { 1.0 } else { 0.5 };
        match self.pol {
            Polarization::AxisX | Polarization::AxisY => {
                let c = if self.pol == Polarization::AxisX {
                    0
                } else {
                    1
                };
                let amp = 1.0 / (vol * zmass).sqrt();
                f.set(c, 0, 0, self.k, Complex64::new(amp, 0.0));
            }
            Polarization::Minus | Polarization::Plus => {
                let cosine = upper_half(self.m, self.n);
                let (m, n) = if cosine {
                    (self.m, self.n)
                } else {
                    (-self.m, -self.n)
                };
                let norm = ((m * m + n * n) as f64).sqrt();
                let dir = match self.pol {
                    Polarization::Minus => [-n as f64 / norm, m as f64 / norm],
                    _ => [m as f64 / norm, n as f64 / norm],
                };
                // ‖d cos θ cos kz‖² = Vol · 1/2 · zmass
                let amp = 1.0 / (vol * 0.5 * zmass).sqrt();
                // cos θ = (e^{iθ} + e^{-iθ})/2, sin θ = (e^{iθ} - e^{-iθ})/(2i)
                let coef = if cosine {
                    Complex64::new(0.5 * amp, 0.0)
                } else {
                    Complex64::new(0.0, -0.5 * amp)
                };
                for (c, d) in dir.iter().enumerate() {
                    f.set_pair(c, m, n, self.k, coef * *d);
                }
            }
        }
        f
    }
}

fn compare_eigen(a: f64, b: f64) -> Ordering {
    let scale = a.abs().max(b.abs()).max(1.0);
    if (a - b).abs() <= 1e-12 * scale {
        Ordering::Equal
    } else {
        a.partial_cmp(&b).unwrap_or(Ordering::Equal)
    }
}

/// The retained basis of `V` in the canonical order: ascending eigenvalue,
/// ties broken by `(k, m, n, polarization)`.
pub fn enumerate_modes(g: &GridSpec) -> Vec<(ModeIndex, f64)> {
    let mut out = Vec::new();
    for k in 0..g.nz {
        for m in -g.max_m()..=g.max_m() {
            for n in -g.max_n()..=g.max_n() {
                for pol in [
                    Polarization::Minus,
                    Polarization::Plus,
                    Polarization::AxisX,
                    Polarization::AxisY,
                ] {
                    let idx = ModeIndex { m, n, k, pol };
                    if idx.is_valid(g) {
                        out.push((idx, idx.eigenvalue(g)));
                    }
                }
            }
        }
    }
    out.sort_by(|(a, la), (b, lb)| {
        compare_eigen(*la, *lb)
            .then(a.k.cmp(&b.k))
            .then(a.m.cmp(&b.m))
            .then(a.n.cmp(&b.n))
            .then(a.pol.cmp(&b.pol))
    });
    out
}
