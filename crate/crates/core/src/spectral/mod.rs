//! Truncated Fourier(x, y) × cosine(z) fields, their transforms, norms and
//! the projection onto `V`.

mod field;
mod modes;
mod transform;

pub use field::SpectralField;
pub use modes::{enumerate_modes, ModeIndex, Polarization};
pub use transform::{from_physical, to_physical, Parity, PhysicalField, Transform};

use num_complex::Complex64;

use crate::grid::GridSpec;

/// Eigenvalue of `-Δ` on the basis function `idx`.
pub fn eigenvalue(idx: &ModeIndex, g: &GridSpec) -> f64 {
    idx.eigenvalue(g)
}

/// `‖∇^j f‖_{L²}`.
pub fn sobolev_norm(f: &SpectralField, j: u32) -> f64 {
    f.sobolev_norm(j)
}

/// `‖f‖_{L²} + δ‖f‖_{V^m}`.
pub fn primed_norm(f: &SpectralField) -> f64 {
    f.primed_norm()
}

/// Orthogonal projection onto `V`.
///
/// Removes the mean and, at `k = 0`, the horizontal-gradient component
/// parallel to `(m, n)`; all `k >= 1` coefficients pass through unchanged.
pub fn project(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    project_in_place(&mut out);
    out
}

pub fn project_in_place(f: &mut SpectralField) {
    let zero = Complex64::new(0.0, 0.0);
    f.set(0, 0, 0, 0, zero);
    f.set(1, 0, 0, 0, zero);
    let g = *f.grid();
    for m in -g.max_m()..=g.max_m() {
        for n in -g.max_n()..=g.max_n() {
            if m == 0 && n == 0 {
                continue;
            }
            let a = f.get(0, m, n, 0);
            let b = f.get(1, m, n, 0);
            let (mf, nf) = (m as f64, n as f64);
            let s = (a * mf + b * nf) / (mf * mf + nf * nf);
            f.set(0, m, n, 0, a - s * mf);
            f.set(1, m, n, 0, b - s * nf);
        }
    }
    // Nyquist slots
    let hx = g.nx as i64 / 2;
    let hy = g.ny as i64 / 2;
    for c in 0..2 {
        for k in 0..g.nz {
            for n in (-hy + 1)..=hy {
                f.set(c, hx, n, k, zero);
            }
            for m in (-hx + 1)..=hx {
                f.set(c, m, hy, k, zero);
            }
        }
    }
}

/// Random field in `V` supported on `band`: independent centred coefficients
/// with standard deviation `(1 + λ)^{-decay/2}`, projected onto `V`.
/// Scale the result afterwards to the norm you need.
pub fn random_field<R: rand::Rng + ?Sized>(
    grid: &GridSpec,
    band: &crate::grid::Band,
    decay: f64,
    rng: &mut R,
) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    for c in 0..2 {
        for m in -band.mx..=band.mx {
            for n in -band.ny..=band.ny {
                if (m, n) < (0, 0) {
                    continue;
                }
                for k in 0..=band.kz {
                    let sd = (1.0 + grid.eigenvalue(m, n, k)).powf(-decay / 2.0);
                    let re: f64 = rng.random_range(-1.0..1.0);
                    let im: f64 = rng.random_range(-1.0..1.0);
                    f.set_pair(c, m, n, k, Complex64::new(re, im) * sd);
                }
            }
        }
    }
    project_in_place(&mut f);
    f
}

/// `random_field` rescaled to `‖f‖_{V^m} = vm_norm`.
pub fn random_field_with_vm_norm<R: rand::Rng + ?Sized>(
    grid: &GridSpec,
    band: &crate::grid::Band,
    decay: f64,
    vm_norm: f64,
    rng: &mut R,
) -> SpectralField {
    let mut f = random_field(grid, band, decay, rng);
    let n = f.vm_norm();
    if n > 0.0 {
        f *= vm_norm / n;
    }
    f
}
