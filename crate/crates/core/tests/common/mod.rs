#![allow(dead_code)]

use num_complex::Complex64;
use primix::grid::GridSpec;
use primix::spectral::{random_field, SpectralField};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Random field in `V` on the dealiased band.
pub fn field(g: &GridSpec, seed: u64) -> SpectralField {
    random_field(g, &g.dealiased_band(), 2.0, &mut rng(seed))
}

/// Random field in `V` over every stored mode.
pub fn wide_field(g: &GridSpec, seed: u64) -> SpectralField {
    random_field(g, &g.full_band(), 2.0, &mut rng(seed))
}

/// `a cos(2π(mx+ny)/L)` in component `c`, cosine `k` in z.
pub fn cos_mode(g: &GridSpec, c: usize, m: i64, n: i64, k: usize, a: f64) -> SpectralField {
    let mut f = SpectralField::zeros(g);
    f.set_pair(c, m, n, k, Complex64::new(a / 2.0, 0.0));
    f
}

/// `a sin(2π(mx+ny)/L)` in component `c`, cosine `k` in z.
pub fn sin_mode(g: &GridSpec, c: usize, m: i64, n: i64, k: usize, a: f64) -> SpectralField {
    let mut f = SpectralField::zeros(g);
    f.set_pair(c, m, n, k, Complex64::new(0.0, -a / 2.0));
    f
}

pub fn small_grid() -> GridSpec {
    GridSpec {
        nx: 8,
        ny: 8,
        nz: 5,
        ..GridSpec::desk()
    }
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    (d, kolmogorov_q((ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d))
}

/// One-sample KS against a continuous CDF.
pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut a = a.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = a.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in a.iter().enumerate() {
        let f = cdf(*x);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    (d, kolmogorov_q((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d))
}

/// `Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}
