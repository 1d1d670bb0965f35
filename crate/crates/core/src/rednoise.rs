//! Bounded red noise built from Haar series with bounded i.i.d. coefficients.
//!
//! On each unit interval the forcing is
//!
//! ```text
//! η(t) = Σ_{i=1}^{I} b_i (ξ₀^i h₀(t) + Σ_{j<J} c_j Σ_k ξ_{j,k}^i h_{j,k}(t)) λ_i^{-m/2} e_i
//! ```
//!
//! with `b_i = b₀ i^{-α}`, `c_j = 2^{-βj}`, `(e_i, λ_i)` the retained basis
//! of `V` in canonical order and `ξ` drawn from the Epanechnikov density
//! `ρ(r) = 3/4 (1 - r²)` on `[-1, 1]`.
//!
//! Draws are counter-based: the value of `ξ` for `(seed, interval, i, j, k)`
//! is the ChaCha20 output at stream `interval`, word position
//! `2·(i·2³² + slot)`, where `slot = 0` for `ξ₀` and `2^j + k` otherwise.
//! Segments can therefore be generated in any order, in parallel, and
//! reproduce bit-for-bit.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral::{enumerate_modes, SpectralField};
use crate::timestep::Forcing;

/// `h₀(t) = 1` on `[0, 1]`.
pub fn haar0(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        1.0
    } else {
        0.0
    }
}

/// Haar function `h_{j,k}`: `+1` on `[k/2^j, (k+½)/2^j)`, `-1` on
/// `[(k+½)/2^j, (k+1)/2^j)`, zero elsewhere. Intervals are closed on the
/// left, so at most one `h_{j,k}` per level is nonzero at any `t`; the
/// right end `t = 1` takes the left limit.
pub fn haar(j: u32, k: u64, t: f64) -> Result<f64> {
    if j >= 63 || k >= 1u64 << j {
        return Err(Error::HaarIndex { j, k });
    }
    Ok(haar_value(j, k, t, false))
}

/// Left limit of `h_{j,k}` at `t`.
pub fn haar_left(j: u32, k: u64, t: f64) -> Result<f64> {
    if j >= 63 || k >= 1u64 << j {
        return Err(Error::HaarIndex { j, k });
    }
    Ok(haar_value(j, k, t, true))
}

fn haar_value(j: u32, k: u64, t: f64, left: bool) -> f64 {
    let scale = (1u64 << j) as f64;
    let s = t * scale - k as f64;
    let left = left || t == 1.0;
    let (in_first, in_second) = if left {
        (s > 0.0 && s <= 0.5, s > 0.5 && s <= 1.0)
    } else {
        ((0.0..0.5).contains(&s), (0.5..1.0).contains(&s))
    };
    if in_first {
        1.0
    } else if in_second {
        -1.0
    } else {
        0.0
    }
}

/// CDF of the Epanechnikov law on `[-1, 1]`.
pub fn epanechnikov_cdf(r: f64) -> f64 {
    let r = r.clamp(-1.0, 1.0);
    (2.0 + 3.0 * r - r * r * r) / 4.0
}

/// Inverse CDF of the Epanechnikov law: the root of
/// `(2 + 3r - r³)/4 = u` in `[-1, 1]`, via the trigonometric cubic solution
/// and one Newton polish.
pub fn epanechnikov_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return -1.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let mut r = 2.0 * ((2.0 * u - 1.0).asin() / 3.0).sin();
    let slope = 0.75 * (1.0 - r * r);
    if slope > 1e-8 {
        r -= (epanechnikov_cdf(r) - u) / slope;
    }
    r.clamp(-1.0, 1.0)
}

/// Draws one `ξ` from a uniform variate.
pub fn sample_xi<R: RngCore>(rng: &mut R) -> f64 {
    // 53 random bits, uniform on [0, 1)
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    epanechnikov_quantile(u)
}

/// Coefficient-decay rules and truncation of the noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedNoiseSpec {
    /// Number of spatial modes `i = 1..=i_max`.
    pub i_max: usize,
    /// Haar depth: levels `j = 0..j_max`.
    pub j_max: u32,
    /// `b_i = b0 · i^{-alpha}`.
    pub alpha: f64,
    /// `c_j = 2^{-beta·j}`.
    pub beta: f64,
    pub b0: f64,
    pub m_sobolev: u32,
}

impl RedNoiseSpec {
    pub fn new(
        i_max: usize,
        j_max: u32,
        alpha: f64,
        beta: f64,
        b0: f64,
        m_sobolev: u32,
    ) -> Result<Self> {
        let s = RedNoiseSpec {
            i_max,
            j_max,
            alpha,
            beta,
            b0,
            m_sobolev,
        };
        s.validate()?;
        Ok(s)
    }

    /// Desk-scale defaults: 12 modes, depth 5, `α = 1`, `β = 1/2`, `b₀ = 0.5`.
    pub fn desk() -> Self {
        RedNoiseSpec {
            i_max: 12,
            j_max: 5,
            alpha: 1.0,
            beta: 0.5,
            b0: 0.5,
            m_sobolev: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.5) {
            return Err(Error::InvalidNoise("alpha must exceed 1/2".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidNoise("beta must be positive".into()));
        }
        if !(self.b0 > 0.0 && self.b0.is_finite()) {
            return Err(Error::InvalidNoise("b0 must be positive".into()));
        }
        if self.j_max > 30 {
            return Err(Error::InvalidNoise(
                "J_max above 30 is not supported".into(),
            ));
        }
        Ok(())
    }

    /// `b_i`, for `i >= 1`.
    pub fn b(&self, i: usize) -> f64 {
        self.b0 * (i as f64).powf(-self.alpha)
    }

    /// `c_j`.
    pub fn c(&self, j: u32) -> f64 {
        2f64.powf(-self.beta * j as f64)
    }

    /// `Σ_{j<J} c_j`.
    pub fn c_sum(&self) -> f64 {
        (0..self.j_max).map(|j| self.c(j)).sum()
    }

    /// `C* = Σ_i b_i² (1 + (Σ_j c_j)²)`.
    pub fn moment_bound(&self) -> f64 {
        let cs = self.c_sum();
        (1..=self.i_max).map(|i| self.b(i).powi(2)).sum::<f64>() * (1.0 + cs * cs)
    }

    /// `Σ_i b_i² (1 + Σ_j c_j)²`, the bound implied by `|ξ| <= 1` and one
    /// active Haar function per level.
    pub fn pathwise_bound(&self) -> f64 {
        let cs = self.c_sum();
        (1..=self.i_max).map(|i| self.b(i).powi(2)).sum::<f64>() * (1.0 + cs).powi(2)
    }
}

/// Slot of `ξ_{j,k}` within one mode's block; `0` is `ξ₀`.
fn slot(j: u32, k: u64) -> u64 {
    (1u64 << j) + k
}

/// One unit-interval realization of the noise coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSegment {
    pub spec: RedNoiseSpec,
    pub interval_index: u64,
    /// `ξ₀^i`, indexed by `i - 1`.
    pub xi0: Vec<f64>,
    /// `ξ_{j,k}^i` at `[i - 1][2^j + k - 1]`.
    pub xi: Vec<Vec<f64>>,
}

/// Deterministic generator for `(seed, interval)`.
fn stream(master_seed: u64, interval_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(interval_index);
    rng
}

/// The draw for `(seed, interval, i, slot)`, independent of every other.
fn draw(rng: &mut ChaCha20Rng, i: usize, slot: u64) -> f64 {
    rng.set_word_pos(2 * (((i as u128) << 32) + slot as u128));
    sample_xi(rng)
}

/// Fills a segment from `(master_seed, interval_index)`.
pub fn draw_segment(spec: &RedNoiseSpec, master_seed: u64, interval_index: u64) -> NoiseSegment {
    let mut rng = stream(master_seed, interval_index);
    let per_mode = (1usize << spec.j_max) - 1;
    let mut xi0 = Vec::with_capacity(spec.i_max);
    let mut xi = Vec::with_capacity(spec.i_max);
    for i in 1..=spec.i_max {
        xi0.push(draw(&mut rng, i, 0));
        let mut row = Vec::with_capacity(per_mode);
        for j in 0..spec.j_max {
            for k in 0..(1u64 << j) {
                row.push(draw(&mut rng, i, slot(j, k)));
            }
        }
        xi.push(row);
    }
    NoiseSegment {
        spec: *spec,
        interval_index,
        xi0,
        xi,
    }
}

impl NoiseSegment {
    /// A segment with every coefficient zero.
    pub fn zero(spec: &RedNoiseSpec) -> Self {
        let per_mode = (1usize << spec.j_max) - 1;
        NoiseSegment {
            spec: *spec,
            interval_index: 0,
            xi0: vec![0.0; spec.i_max],
            xi: vec![vec![0.0; per_mode]; spec.i_max],
        }
    }

    pub fn xi_jk(&self, i: usize, j: u32, k: u64) -> f64 {
        self.xi[i - 1][(slot(j, k) - 1) as usize]
    }

    pub fn set_xi_jk(&mut self, i: usize, j: u32, k: u64, value: f64) {
        self.xi[i - 1][(slot(j, k) - 1) as usize] = value;
    }

    /// `Σ_k ξ_{j,k}^i h_{j,k}(t)`; bounded by 1 in absolute value.
    pub fn level_sum(&self, i: usize, j: u32, t: f64, left: bool) -> f64 {
        // only the function whose support contains t contributes
        let scale = (1u64 << j) as f64;
        let pos = if left || t >= 1.0 {
            ((t * scale).ceil() - 1.0).max(0.0)
        } else {
            (t * scale).floor()
        };
        let k = (pos as u64).min((1u64 << j) - 1);
        self.xi_jk(i, j, k) * haar_value(j, k, t, left)
    }

    /// Scalar amplitude `η̃^i(t)`.
    pub fn amplitude(&self, i: usize, t: f64, left: bool) -> f64 {
        let s = &self.spec;
        let mut a = self.xi0[i - 1] * haar0(t);
        for j in 0..s.j_max {
            a += s.c(j) * self.level_sum(i, j, t, left);
        }
        a
    }

    /// Writes `i, j, k, xi` rows; `ξ₀` rows carry an empty `j`, `k`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "i,j,k,xi")?;
        for i in 1..=self.spec.i_max {
            writeln!(w, "{i},,,{:e}", self.xi0[i - 1])?;
            for j in 0..self.spec.j_max {
                for k in 0..(1u64 << j) {
                    writeln!(w, "{i},{j},{k},{:e}", self.xi_jk(i, j, k))?;
                }
            }
        }
        Ok(())
    }
}

/// The spatial directions `λ_i^{-m/2} e_i`, `i = 1..=I`.
#[derive(Debug, Clone)]
pub struct NoiseBasis {
    pub grid: GridSpec,
    pub directions: Vec<SpectralField>,
    pub eigenvalues: Vec<f64>,
}

impl NoiseBasis {
    pub fn new(grid: &GridSpec, spec: &RedNoiseSpec) -> Self {
        let modes = enumerate_modes(grid);
        let count = spec.i_max.min(modes.len());
        let mut directions = Vec::with_capacity(count);
        let mut eigenvalues = Vec::with_capacity(count);
        for (idx, lambda) in modes.into_iter().take(count) {
            let mut e = idx.basis_field(grid);
            e *= lambda.powf(-(spec.m_sobolev as f64) / 2.0);
            directions.push(e);
            eigenvalues.push(lambda);
        }
        NoiseBasis {
            grid: *grid,
            directions,
            eigenvalues,
        }
    }
}

/// `η(t)` for the segment, as a field in `V`.
pub fn evaluate(seg: &NoiseSegment, t_local: f64, basis: &NoiseBasis) -> SpectralField {
    evaluate_side(seg, t_local, basis, false)
}

fn evaluate_side(seg: &NoiseSegment, t: f64, basis: &NoiseBasis, left: bool) -> SpectralField {
    let mut out = SpectralField::zeros(&basis.grid);
    for (i, dir) in basis.directions.iter().enumerate().take(seg.spec.i_max) {
        let a = seg.spec.b(i + 1) * seg.amplitude(i + 1, t, left);
        if a != 0.0 {
            out.axpy(a, dir);
        }
    }
    out
}

/// Piecewise-constant forcing of one unit interval, cached per dyadic cell
/// of width `2^{-J}`. Time is local: `[0, 1]`.
#[derive(Debug, Clone)]
pub struct NoiseForcing {
    cells: Vec<SpectralField>,
}

impl NoiseForcing {
    pub fn new(seg: &NoiseSegment, basis: &NoiseBasis) -> Self {
        let n = 1usize << seg.spec.j_max;
        let cells = (0..n)
            .map(|c| evaluate_side(seg, (c as f64 + 0.5) / n as f64, basis, false))
            .collect();
        NoiseForcing { cells }
    }

    pub fn cells(&self) -> &[SpectralField] {
        &self.cells
    }
}

impl Forcing for NoiseForcing {
    fn eval(&self, t: f64, left: bool) -> Option<SpectralField> {
        let n = self.cells.len() as f64;
        let pos = if left || t >= 1.0 {
            (t * n).ceil() - 1.0
        } else {
            (t * n).floor()
        };
        let c = pos.clamp(0.0, n - 1.0) as usize;
        Some(self.cells[c].clone())
    }
}
