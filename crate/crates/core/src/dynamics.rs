//! The nonlinear operator of the reduced primitive equations, its projected
//! form `B = 𝔓b`, the reconstructed vertical velocity and pressure gradient,
//! the tangent operator and the adjoint operator `𝔹_u`.
//!
//! Quadratic terms are evaluated pseudo-spectrally: inputs are truncated to
//! the 2/3 band, multiplied on the collocation grid and projected back onto
//! the same band, so every retained coefficient of a product is exact.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Band, GridSpec};
use crate::spectral::{project_in_place, Parity, SpectralField, Transform};

type Block = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sine series `w = Σ ŵ(m,n,k) e^{2πi(mx+ny)/L} sin(2πkz/h)`, `k >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SineField {
    grid: GridSpec,
    // [m mod nx][n mod ny][k]; k = 0 is always zero
    coeffs: Vec<Complex64>,
}

impl SineField {
    fn zeros(grid: &GridSpec) -> Self {
        SineField {
            grid: *grid,
            coeffs: vec![ZERO; grid.nx * grid.ny * grid.nz],
        }
    }

    fn index(&self, m: i64, n: i64, k: usize) -> usize {
        let g = &self.grid;
        let mi = m.rem_euclid(g.nx as i64) as usize;
        let ni = n.rem_euclid(g.ny as i64) as usize;
        (mi * g.ny + ni) * g.nz + k
    }

    pub fn get(&self, m: i64, n: i64, k: usize) -> Complex64 {
        self.coeffs[self.index(m, n, k)]
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.norm()))
    }

    /// Direct evaluation of the series at a point.
    pub fn evaluate(&self, x: f64, y: f64, z: f64) -> f64 {
        let g = &self.grid;
        let (a, b) = (g.kx_unit(), g.kz_unit());
        let mut acc = 0.0;
        for m in -g.max_m()..=g.max_m() {
            for n in -g.max_n()..=g.max_n() {
                let phase = Complex64::from_polar(1.0, a * (m as f64 * x + n as f64 * y));
                for k in 1..g.nz {
                    let c = self.get(m, n, k);
                    if c == ZERO {
                        continue;
                    }
                    acc += (c * phase).re * (b * k as f64 * z).sin();
                }
            }
        }
        acc
    }
}

/// Evaluation context holding the transform plans for one grid.
#[derive(Debug)]
pub struct Dynamics {
    grid: GridSpec,
    band: Band,
    tr: Transform,
}

impl Dynamics {
    pub fn new(grid: &GridSpec) -> Self {
        let band = grid.dealiased_band();
        Dynamics {
            grid: *grid,
            band,
            tr: Transform::new(grid, band),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn band(&self) -> &Band {
        &self.band
    }

    fn check(&self, f: &SpectralField) {
        assert_eq!(
            f.grid(),
            &self.grid,
            "field grid differs from the operator grid"
        );
    }

    fn map_block<F: Fn(i64, i64, usize) -> Complex64>(
        &self,
        src: &[Complex64],
        factor: F,
    ) -> Block {
        let b = self.band;
        let mut out = vec![ZERO; b.len()];
        for m in -b.mx..=b.mx {
            for n in -b.ny..=b.ny {
                for k in 0..=b.kz {
                    let i = b.index(m, n, k);
                    out[i] = src[i] * factor(m, n, k);
                }
            }
        }
        out
    }

    fn dx(&self, src: &[Complex64]) -> Block {
        let a = self.grid.kx_unit();
        self.map_block(src, |m, _, _| Complex64::new(0.0, a * m as f64))
    }

    fn dy(&self, src: &[Complex64]) -> Block {
        let a = self.grid.kx_unit();
        self.map_block(src, |_, n, _| Complex64::new(0.0, a * n as f64))
    }

    /// `∂z` of a cosine block, as a sine block.
    fn dz_even(&self, src: &[Complex64]) -> Block {
        let b = self.grid.kz_unit();
        self.map_block(src, |_, _, k| Complex64::new(-b * k as f64, 0.0))
    }

    /// `W = ∫_{-h}^z div₂u dξ` as a sine block (the `k = 0` part of the
    /// divergence is dropped; it vanishes for fields in `V`).
    fn vertical_integral(&self, u1: &[Complex64], u2: &[Complex64]) -> Block {
        let a = self.grid.kx_unit();
        let bz = self.grid.kz_unit();
        let b = self.band;
        let mut out = vec![ZERO; b.len()];
        for m in -b.mx..=b.mx {
            for n in -b.ny..=b.ny {
                for k in 1..=b.kz {
                    let i = b.index(m, n, k);
                    let div = (u1[i] * m as f64 + u2[i] * n as f64) * Complex64::new(0.0, a);
                    out[i] = div / (bz * k as f64);
                }
            }
        }
        out
    }

    fn components(&self, f: &SpectralField) -> (Block, Block) {
        self.check(f);
        (self.tr.gather(f, 0), self.tr.gather(f, 1))
    }

    fn assemble(&self, c0: &[Complex64], c1: &[Complex64]) -> SpectralField {
        let mut out = SpectralField::zeros(&self.grid);
        self.tr.scatter(c0, &mut out, 0);
        self.tr.scatter(c1, &mut out, 1);
        out
    }

    fn synth_even(&self, a: &[Complex64], b: &[Complex64]) -> Block {
        self.tr.synthesize_pair(a, Some(b), Parity::Even)
    }

    fn synth_odd(&self, a: &[Complex64], b: Option<&[Complex64]>) -> Block {
        self.tr.synthesize_pair(a, b, Parity::Odd)
    }

    /// Un-projected `b(u,v) = (u·∇₂)v - (∫_{-h}^z div₂u dξ) ∂v/∂z`,
    /// dealiased; the result is Hermitian, z-even and band-limited.
    pub fn advect(&self, u: &SpectralField, v: &SpectralField) -> SpectralField {
        let (u1, u2) = self.components(u);
        let (v1, v2) = self.components(v);
        let pu = self.synth_even(&u1, &u2);
        let pvx = self.synth_even(&self.dx(&v1), &self.dx(&v2));
        let pvy = self.synth_even(&self.dy(&v1), &self.dy(&v2));
        let pvz = self.synth_odd(&self.dz_even(&v1), Some(&self.dz_even(&v2)));
        let pw = self.synth_odd(&self.vertical_integral(&u1, &u2), None);
        let prod: Block = pu
            .iter()
            .zip(&pvx)
            .zip(&pvy)
            .zip(&pvz)
            .zip(&pw)
            .map(|((((u, vx), vy), vz), w)| {
                let b1 = u.re * vx.re + u.im * vy.re - w.re * vz.re;
                let b2 = u.re * vx.im + u.im * vy.im - w.re * vz.im;
                Complex64::new(b1, b2)
            })
            .collect();
        let (b1, b2) = self.tr.analyze_pair(prod, Parity::Even);
        self.assemble(&b1, &b2)
    }

    /// `B(u,v) = 𝔓 b(u,v)`.
    #[allow(non_snake_case)]
    pub fn B(&self, u: &SpectralField, v: &SpectralField) -> SpectralField {
        if std::ptr::eq(u, v) {
            return self.self_advect(u);
        }
        let mut out = self.advect(u, v);
        project_in_place(&mut out);
        out
    }

    /// `B(v,v)` in flux form `𝔓 ∇₃·(v⊗v)` with `v₃ = -∫div₂v`; two forward
    /// and three inverse transforms instead of five and one.
    fn self_advect(&self, v: &SpectralField) -> SpectralField {
        let (v1, v2) = self.components(v);
        let mut v3 = self.vertical_integral(&v1, &v2);
        v3.iter_mut().for_each(|c| *c = -*c);
        let pv = self.synth_even(&v1, &v2);
        let p3 = self.synth_odd(&v3, None);
        let mut e1 = Vec::with_capacity(pv.len());
        let mut e2 = Vec::with_capacity(pv.len());
        let mut o = Vec::with_capacity(pv.len());
        for (a, c) in pv.iter().zip(&p3) {
            e1.push(Complex64::new(a.re * a.re, a.re * a.im));
            e2.push(Complex64::new(a.im * a.im, 0.0));
            o.push(Complex64::new(c.re * a.re, c.re * a.im));
        }
        let (s11, s12) = self.tr.analyze_pair(e1, Parity::Even);
        let (s22, _) = self.tr.analyze_pair(e2, Parity::Even);
        let (s31, s32) = self.tr.analyze_pair(o, Parity::Odd);
        let mut out = self.flux_divergence(&s11, &s12, &s22, &s31, &s32);
        project_in_place(&mut out);
        out
    }

    /// `(∂x S11 + ∂y S12 + ∂z S31, ∂x S12 + ∂y S22 + ∂z S32)`.
    fn flux_divergence(
        &self,
        s11: &[Complex64],
        s12: &[Complex64],
        s22: &[Complex64],
        s31: &[Complex64],
        s32: &[Complex64],
    ) -> SpectralField {
        let a = self.grid.kx_unit();
        let bz = self.grid.kz_unit();
        let b = self.band;
        let mut r1 = vec![ZERO; b.len()];
        let mut r2 = vec![ZERO; b.len()];
        for m in -b.mx..=b.mx {
            for n in -b.ny..=b.ny {
                let (im, i_n) = (
                    Complex64::new(0.0, a * m as f64),
                    Complex64::new(0.0, a * n as f64),
                );
                for k in 0..=b.kz {
                    let i = b.index(m, n, k);
                    let kz = bz * k as f64;
                    r1[i] = im * s11[i] + i_n * s12[i] + s31[i] * kz;
                    r2[i] = im * s12[i] + i_n * s22[i] + s32[i] * kz;
                }
            }
        }
        self.assemble(&r1, &r2)
    }

    /// `∇₂p = b(v,v) - B(v,v)`: the barotropic gradient removed by `𝔓`.
    pub fn pressure_gradient(&self, v: &SpectralField) -> SpectralField {
        let b = self.advect(v, v);
        let mut p = b.clone();
        project_in_place(&mut p);
        &b - &p
    }

    /// Symmetrized flux `𝔓 ∇₃·(u⊗w + w⊗u)` restricted to the horizontal
    /// momentum components, with `u₃ = -∫ div₂u`. For `u, w ∈ V` this equals
    /// `B(u,w) + B(w,u)`.
    pub fn tangent_rhs(&self, base: &SpectralField, w: &SpectralField) -> SpectralField {
        let (u1, u2) = self.components(base);
        let (w1, w2) = self.components(w);
        let mut u3 = self.vertical_integral(&u1, &u2);
        let mut w3 = self.vertical_integral(&w1, &w2);
        u3.iter_mut().chain(w3.iter_mut()).for_each(|c| *c = -*c);
        let pu = self.synth_even(&u1, &u2);
        let pw = self.synth_even(&w1, &w2);
        let p3 = self.synth_odd(&u3, Some(&w3));
        // even products: (S11, S12) and (S22, 0); odd products (S31, S32)
        let mut e1 = Vec::with_capacity(pu.len());
        let mut e2 = Vec::with_capacity(pu.len());
        let mut o = Vec::with_capacity(pu.len());
        for ((a, b), c) in pu.iter().zip(&pw).zip(&p3) {
            let s11 = 2.0 * a.re * b.re;
            let s12 = a.re * b.im + b.re * a.im;
            let s22 = 2.0 * a.im * b.im;
            let s31 = c.re * b.re + c.im * a.re;
            let s32 = c.re * b.im + c.im * a.im;
            e1.push(Complex64::new(s11, s12));
            e2.push(Complex64::new(s22, 0.0));
            o.push(Complex64::new(s31, s32));
        }
        let (s11, s12) = self.tr.analyze_pair(e1, Parity::Even);
        let (s22, _) = self.tr.analyze_pair(e2, Parity::Even);
        let (s31, s32) = self.tr.analyze_pair(o, Parity::Odd);
        let mut out = self.flux_divergence(&s11, &s12, &s22, &s31, &s32);
        project_in_place(&mut out);
        out
    }

    /// The adjoint operator
    /// `𝔹_u(w) = 𝔓(-b(u,w) + (d₂u*)w - ∫_{-h}^z ∇₂(w·∂u/∂z) dξ)`,
    /// characterized by `⟨B(u,v) + B(v,u), w⟩ = ⟨v, 𝔹_u(w)⟩` for `u, v, w ∈ V`.
    ///
    /// The vertical primitive of the sine series `w·∂u/∂z` is taken with zero
    /// vertical mean; the discarded constant is a horizontal gradient, which
    /// `𝔓` removes anyway.
    pub fn adjoint_rhs(&self, base: &SpectralField, w: &SpectralField) -> SpectralField {
        let (u1, u2) = self.components(base);
        let (w1, w2) = self.components(w);
        let pu = self.synth_even(&u1, &u2);
        let pw = self.synth_even(&w1, &w2);
        let pwx = self.synth_even(&self.dx(&w1), &self.dx(&w2));
        let pwy = self.synth_even(&self.dy(&w1), &self.dy(&w2));
        let pux = self.synth_even(&self.dx(&u1), &self.dx(&u2));
        let puy = self.synth_even(&self.dy(&u1), &self.dy(&u2));
        let pwz = self.synth_odd(&self.dz_even(&w1), Some(&self.dz_even(&w2)));
        let puz = self.synth_odd(&self.dz_even(&u1), Some(&self.dz_even(&u2)));
        let pvi = self.synth_odd(&self.vertical_integral(&u1, &u2), None);
        let n = pu.len();
        let mut even = Vec::with_capacity(n);
        let mut odd = Vec::with_capacity(n);
        for i in 0..n {
            let (u, w, wx, wy, ux, uy) = (pu[i], pw[i], pwx[i], pwy[i], pux[i], puy[i]);
            let (wz, uz, vi) = (pwz[i], puz[i], pvi[i].re);
            // -b(u,w)
            let mut r1 = -(u.re * wx.re + u.im * wy.re - vi * wz.re);
            let mut r2 = -(u.re * wx.im + u.im * wy.im - vi * wz.im);
            // (d₂u*)w: component i is Σ_l w_l ∂_i u_l
            r1 += w.re * ux.re + w.im * ux.im;
            r2 += w.re * uy.re + w.im * uy.im;
            even.push(Complex64::new(r1, r2));
            odd.push(Complex64::new(w.re * uz.re + w.im * uz.im, 0.0));
        }
        let (mut r1, mut r2) = self.tr.analyze_pair(even, Parity::Even);
        let (g, _) = self.tr.analyze_pair(odd, Parity::Odd);
        // zero-mean primitive of Σ g_k sin(κz) is -Σ g_k cos(κz)/κ
        let bz = self.grid.kz_unit();
        let a = self.grid.kx_unit();
        let b = self.band;
        for m in -b.mx..=b.mx {
            for n in -b.ny..=b.ny {
                for k in 1..=b.kz {
                    let i = b.index(m, n, k);
                    let prim = -g[i] / (bz * k as f64);
                    r1[i] -= prim * Complex64::new(0.0, a * m as f64);
                    r2[i] -= prim * Complex64::new(0.0, a * n as f64);
                }
            }
        }
        let mut out = self.assemble(&r1, &r2);
        project_in_place(&mut out);
        out
    }
}

/// Vertical velocity `u₃ = -∫_{-h}^z div₂v dξ` as a sine series over every
/// stored mode. Errors when the barotropic divergence does not vanish.
pub fn vertical_velocity(v: &SpectralField) -> Result<SineField> {
    let g = *v.grid();
    let a = g.kx_unit();
    let bz = g.kz_unit();
    let scale = v.max_abs() * a * g.nx as f64;
    let residual = v.barotropic_divergence();
    if residual > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotInV { residual });
    }
    let mut w = SineField::zeros(&g);
    for (m, n, k) in v.modes() {
        if k == 0 {
            continue;
        }
        let div =
            (v.get(0, m, n, k) * m as f64 + v.get(1, m, n, k) * n as f64) * Complex64::new(0.0, a);
        let i = w.index(m, n, k);
        w.coeffs[i] = -div / (bz * k as f64);
    }
    Ok(w)
}

/// Convenience: `B(u,v)` with a freshly planned context.
#[allow(non_snake_case)]
pub fn B(u: &SpectralField, v: &SpectralField) -> SpectralField {
    Dynamics::new(u.grid()).B(u, v)
}

/// Convenience: `b(u,v)` with a freshly planned context.
pub fn advect(u: &SpectralField, v: &SpectralField) -> SpectralField {
    Dynamics::new(u.grid()).advect(u, v)
}

/// Pair `(w, base)` at which the tangent operator is evaluated.
#[derive(Debug, Clone)]
pub struct TangentDirection {
    pub w: SpectralField,
    pub base: SpectralField,
}

impl TangentDirection {
    pub fn new(w: SpectralField, base: SpectralField) -> Result<Self> {
        w.same_grid(&base)?;
        Ok(TangentDirection { w, base })
    }

    pub fn rhs(&self, dynamics: &Dynamics) -> SpectralField {
        dynamics.tangent_rhs(&self.base, &self.w)
    }
}
