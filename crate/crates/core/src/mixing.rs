//! Markov chains of the time-one map, same-noise couplings, the
//! dual-Lipschitz distance between ensembles and the Gramian diagnostic.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::rednoise::{draw_segment, NoiseBasis, NoiseForcing, NoiseSegment, RedNoiseSpec};
use crate::spectral::{enumerate_modes, random_field, SpectralField};
use crate::timestep::{Forcing, NoForcing, SlotForcing, Stepper, StepperConfig};

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of ensemble member `member` under `master_seed`.
pub fn member_seed(master_seed: u64, member: u64) -> u64 {
    mix64(master_seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(member.wrapping_add(1))))
}

/// Lineage of the long reference chain.
const REFERENCE_LINEAGE: u64 = u64::MAX;

/// Current state of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub field: SpectralField,
    pub step: u64,
    /// Seed from which segment `step` is drawn.
    pub seed: u64,
}

/// The Markov chain `u_{n+1} = S(u_n, η_n)` for one grid, noise law and stepper.
#[derive(Debug)]
pub struct MarkovChain {
    stepper: Stepper,
    cfg: StepperConfig,
    noise: Option<(RedNoiseSpec, NoiseBasis)>,
}

impl MarkovChain {
    /// `noise = None` runs the deterministic map `S(·, 0)`.
    pub fn new(grid: &GridSpec, cfg: StepperConfig, noise: Option<RedNoiseSpec>) -> Result<Self> {
        grid.validate()?;
        match &noise {
            Some(spec) => {
                spec.validate()?;
                cfg.validate_for_noise_depth(spec.j_max)?;
            }
            None => cfg.validate()?,
        }
        let noise = noise.map(|s| (s, NoiseBasis::new(grid, &s)));
        Ok(MarkovChain {
            stepper: Stepper::new(grid),
            cfg: StepperConfig { t_end: 1.0, ..cfg },
            noise,
        })
    }

    pub fn stepper(&self) -> &Stepper {
        &self.stepper
    }

    pub fn grid(&self) -> &GridSpec {
        self.stepper.grid()
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn noise_spec(&self) -> Option<&RedNoiseSpec> {
        self.noise.as_ref().map(|(s, _)| s)
    }

    pub fn noise_basis(&self) -> Option<&NoiseBasis> {
        self.noise.as_ref().map(|(_, b)| b)
    }

    /// Segment `interval` of lineage `seed`.
    pub fn segment(&self, seed: u64, interval: u64) -> Option<NoiseSegment> {
        self.noise
            .as_ref()
            .map(|(s, _)| draw_segment(s, seed, interval))
    }

    /// The forcing of one segment (zero when the chain is noise-free).
    pub fn forcing(&self, seg: Option<&NoiseSegment>) -> Box<dyn Forcing> {
        match (seg, &self.noise) {
            (Some(seg), Some((_, basis))) => Box::new(NoiseForcing::new(seg, basis)),
            _ => Box::new(NoForcing),
        }
    }

    /// One transition `S(u, η_interval)`.
    pub fn step(&self, u: &SpectralField, seed: u64, interval: u64) -> Result<SpectralField> {
        let seg = self.segment(seed, interval);
        let f = self.forcing(seg.as_ref());
        self.stepper
            .time_one_map(u, f.as_ref(), &self.cfg)
            .map_err(|e| shift_time(e, interval as f64))
    }

    /// `n_steps` transitions from `u0`; returns `n_steps + 1` states.
    pub fn run_chain(
        &self,
        u0: &SpectralField,
        n_steps: u64,
        seed: u64,
    ) -> Result<Vec<ChainState>> {
        let mut out = Vec::with_capacity(n_steps as usize + 1);
        out.push(ChainState {
            field: u0.clone(),
            step: 0,
            seed,
        });
        for n in 0..n_steps {
            let next = self.step(&out[n as usize].field, seed, n)?;
            out.push(ChainState {
                field: next,
                step: n + 1,
                seed,
            });
        }
        Ok(out)
    }

    /// Two chains driven by identical segments.
    pub fn run_coupled(
        &self,
        u0: &SpectralField,
        u0b: &SpectralField,
        n_steps: u64,
        seed: u64,
    ) -> Result<CouplingReport> {
        let mut a = u0.clone();
        let mut b = u0b.clone();
        let mut rows = Vec::with_capacity(n_steps as usize + 1);
        rows.push(CouplingRow::between(0, &a, &b));
        for n in 0..n_steps {
            let seg = self.segment(seed, n);
            let f = self.forcing(seg.as_ref());
            a = self
                .stepper
                .time_one_map(&a, f.as_ref(), &self.cfg)
                .map_err(|e| shift_time(e, n as f64))?;
            b = self
                .stepper
                .time_one_map(&b, f.as_ref(), &self.cfg)
                .map_err(|e| shift_time(e, n as f64))?;
            rows.push(CouplingRow::between(n + 1, &a, &b));
        }
        Ok(CouplingReport { rows })
    }
}

fn shift_time(e: Error, offset: f64) -> Error {
    match e {
        Error::AbsorbingSetViolation { time, norm, bound } => Error::AbsorbingSetViolation {
            time: time + offset,
            norm,
            bound,
        },
        Error::NonFiniteState { time } => Error::NonFiniteState {
            time: time + offset,
        },
        other => other,
    }
}

/// Difference norms of a coupled pair after `k` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingRow {
    pub k: u64,
    pub diff_l2: f64,
    pub diff_vm: f64,
    pub diff_primed: f64,
    /// `max(‖a‖_{V^m}, ‖b‖_{V^m})`, the scale of round-off in the difference.
    pub state_vm: f64,
}

/// Differences below this fraction of the state norm are round-off.
pub const COUPLING_RESOLUTION: f64 = 1e-10;

impl CouplingRow {
    fn between(k: u64, a: &SpectralField, b: &SpectralField) -> Self {
        let d = a - b;
        CouplingRow {
            k,
            diff_l2: d.l2_norm(),
            diff_vm: d.vm_norm(),
            diff_primed: d.primed_norm(),
            state_vm: a.vm_norm().max(b.vm_norm()),
        }
    }

    /// Whether the difference stands above the round-off of the states.
    pub fn resolved(&self) -> bool {
        self.diff_vm > COUPLING_RESOLUTION * self.state_vm
    }
}

#[derive(Debug, Clone)]
pub struct CouplingReport {
    pub rows: Vec<CouplingRow>,
}

impl CouplingReport {
    /// Last step whose difference is resolved, if the pair starts apart.
    /// After it the two chains have merged to round-off.
    pub fn resolved_until(&self) -> Option<u64> {
        self.rows
            .iter()
            .take_while(|r| r.resolved())
            .last()
            .map(|r| r.k)
    }

    /// Geometric-mean contraction factor of the `V^m` difference per step,
    /// `(d_n / d_0)^{1/n}`, with `n` the last resolved step.
    pub fn mean_contraction(&self) -> Option<f64> {
        let first = self.rows.first()?.diff_vm;
        let n = self.resolved_until()?;
        if n == 0 {
            return None;
        }
        Some((self.rows[n as usize].diff_vm / first).powf(1.0 / n as f64))
    }

    /// Resolved steps at which the `V^m` difference grew, with their factor.
    pub fn expansions(&self) -> Vec<(u64, f64)> {
        self.rows
            .windows(2)
            .filter(|w| w[0].resolved() && w[1].resolved() && w[1].diff_vm > w[0].diff_vm)
            .map(|w| (w[1].k, w[1].diff_vm / w[0].diff_vm))
            .collect()
    }

    /// Least-squares slope of `log diff_vm` against `k` over resolved rows.
    pub fn log_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.resolved())
            .map(|r| (r.k as f64, r.diff_vm.ln()))
            .collect();
        least_squares(&pts).map(|(_, s, _)| s)
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, header: &str) -> std::io::Result<()> {
        write_header(w, header)?;
        writeln!(w, "k,diff_L2,diff_Vm,diff_primed")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:e},{:e},{:e}",
                r.k, r.diff_l2, r.diff_vm, r.diff_primed
            )?;
        }
        Ok(())
    }
}

fn write_header<W: Write>(w: &mut W, header: &str) -> std::io::Result<()> {
    for line in header.lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// Shape of the saturating scalar wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Saturation {
    Tanh,
    Clamp,
}

/// One test function `g(u) = a σ(ρ⟨u, φ⟩ / a) / (1 + a)`.
///
/// With `‖φ‖_{L²} = 1` and `ρ <= min(1, λ₁^{m/2})`, `g` is 1-Lipschitz in
/// both `L²` and `V^m`, and `sup|g| <= a`, so `‖g‖_L <= 1` after the
/// `1/(1 + a)` normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturator {
    pub shape: Saturation,
    pub level: f64,
}

impl Saturator {
    #[inline]
    pub fn apply(&self, s: f64) -> f64 {
        let x = s / self.level;
        let y = match self.shape {
            Saturation::Tanh => x.tanh(),
            Saturation::Clamp => x.clamp(-1.0, 1.0),
        };
        self.level * y / (1.0 + self.level)
    }
}

/// Finite family of bounded-Lipschitz test functions: linear probes along
/// unit directions wrapped by saturators.
#[derive(Debug, Clone)]
pub struct TestFunctionalDictionary {
    pub directions: Vec<SpectralField>,
    pub saturators: Vec<Saturator>,
    pub lip_scale: f64,
}

impl TestFunctionalDictionary {
    /// The lowest `coordinate` basis functions plus `random` random unit
    /// directions supported on the lowest modes, with clamp saturators at
    /// levels `10^-3 … 10` (ratio 1.25) and a unit tanh.
    pub fn standard(grid: &GridSpec, coordinate: usize, random: usize, seed: u64) -> Self {
        let modes = enumerate_modes(grid);
        let mut directions: Vec<SpectralField> = modes
            .iter()
            .take(coordinate)
            .map(|(idx, _)| idx.basis_field(grid))
            .collect();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let pool: Vec<SpectralField> = modes
            .iter()
            .take(64)
            .map(|(idx, _)| idx.basis_field(grid))
            .collect();
        for _ in 0..random {
            let mut d = SpectralField::zeros(grid);
            for e in &pool {
                let w: f64 = rng.random_range(-1.0..1.0);
                d.axpy(w, e);
            }
            let n = d.l2_norm();
            if n > 0.0 {
                d *= 1.0 / n;
                directions.push(d);
            }
        }
        let mut saturators = Vec::new();
        let mut level = 1e-3;
        while level <= 10.0 + 1e-12 {
            saturators.push(Saturator {
                shape: Saturation::Clamp,
                level,
            });
            level *= 1.25;
        }
        saturators.push(Saturator {
            shape: Saturation::Tanh,
            level: 1.0,
        });
        Self::new(grid, directions, saturators)
    }

    /// Normalizes each direction to unit L² norm.
    pub fn new(
        grid: &GridSpec,
        mut directions: Vec<SpectralField>,
        saturators: Vec<Saturator>,
    ) -> Self {
        for d in &mut directions {
            let n = d.l2_norm();
            if n > 0.0 {
                *d *= 1.0 / n;
            }
        }
        let lip_scale = 1f64.min(grid.lambda1().powf(grid.m_sobolev as f64 / 2.0));
        TestFunctionalDictionary {
            directions,
            saturators,
            lip_scale,
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len() * self.saturators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `ρ⟨u, φ_p⟩` for every direction.
    pub fn project(&self, u: &SpectralField) -> Vec<f64> {
        self.directions
            .iter()
            .map(|d| self.lip_scale * u.inner(d))
            .collect()
    }

    /// Values of every test function given the projections of one sample;
    /// direction-major order.
    pub fn evaluate(&self, projections: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for s in projections {
            for sat in &self.saturators {
                out.push(sat.apply(*s));
            }
        }
        out
    }
}

fn means(values: &[Vec<f64>], idx: impl Iterator<Item = usize> + Clone) -> Vec<f64> {
    let width = values[0].len();
    let mut acc = vec![0.0; width];
    let mut count = 0usize;
    for i in idx {
        count += 1;
        for (a, v) in acc.iter_mut().zip(&values[i]) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    acc
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `max_g |E_A g - E_B g|` over the dictionary, from per-sample test
/// function values.
pub fn dual_lipschitz_from_values(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(max_abs_diff(&means(a, 0..a.len()), &means(b, 0..b.len())))
}

/// Dual-Lipschitz distance between two ensembles, estimated from below by
/// the dictionary maximum. The result lies in `[0, 2]`.
pub fn dual_lipschitz(
    a: &[SpectralField],
    b: &[SpectralField],
    dict: &TestFunctionalDictionary,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let va: Vec<Vec<f64>> = a.iter().map(|u| dict.evaluate(&dict.project(u))).collect();
    let vb: Vec<Vec<f64>> = b.iter().map(|u| dict.evaluate(&dict.project(u))).collect();
    dual_lipschitz_from_values(&va, &vb)
}

/// Bootstrap standard error of the dictionary distance. With `paired`
/// the members of `a` and `b` are resampled jointly.
pub fn bootstrap_stderr(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    paired: bool,
    resamples: usize,
    seed: u64,
) -> f64 {
    if resamples < 2 || a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let ia: Vec<usize> = (0..a.len()).map(|_| rng.random_range(0..a.len())).collect();
        let ib: Vec<usize> = if paired && a.len() == b.len() {
            ia.clone()
        } else {
            (0..b.len()).map(|_| rng.random_range(0..b.len())).collect()
        };
        let ma = means(a, ia.iter().copied());
        let mb = means(b, ib.iter().copied());
        stats.push(max_abs_diff(&ma, &mb));
    }
    let mean = stats.iter().sum::<f64>() / stats.len() as f64;
    let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (stats.len() - 1) as f64;
    var.sqrt()
}

/// Ordinary least squares `y = a + s x`; returns `(a, s, R²)`.
pub fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some((intercept, slope, r2))
}

/// `d_k ≈ C κ^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub c: f64,
    pub kappa: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Estimates below this are treated as round-off.
pub const DISTANCE_FLOOR: f64 = 1e-12;

/// Fits `C κ^k` on the steps where `d_k > 2 stderr_k` and `d_k` exceeds the
/// round-off floor.
pub fn fit_exponential(distances: &[f64], stderr: &[f64]) -> Result<ExpFit> {
    let pts: Vec<(f64, f64)> = distances
        .iter()
        .zip(stderr)
        .enumerate()
        .filter(|(_, (d, s))| **d > 2.0 * **s && **d > DISTANCE_FLOOR)
        .map(|(k, (d, _))| (k as f64, d.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::FitFailure(format!(
            "only {} resolved estimates (need 5)",
            pts.len()
        )));
    }
    let (a, s, r2) =
        least_squares(&pts).ok_or_else(|| Error::FitFailure("degenerate abscissae".into()))?;
    Ok(ExpFit {
        c: a.exp(),
        kappa: s.exp(),
        r_squared: r2,
        points: pts.len(),
    })
}

/// How the stationary reference is compared with the ensemble from `u0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    /// The reference samples stay fixed for every `k`.
    Fixed,
    /// Each reference sample is pushed forward with the noise of the member
    /// it is paired with. Stationarity keeps it distributed as the
    /// reference, while the shared noise cancels most Monte-Carlo noise.
    Coupled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingParams {
    pub n_steps: u64,
    pub ensemble_size: usize,
    pub burn_in: u64,
    pub subsample: u64,
    pub reference: ReferenceMode,
    pub bootstrap: usize,
    pub master_seed: u64,
}

impl MixingParams {
    pub fn desk(master_seed: u64) -> Self {
        MixingParams {
            n_steps: 50,
            ensemble_size: 64,
            burn_in: 50,
            subsample: 5,
            reference: ReferenceMode::Coupled,
            bootstrap: 64,
            master_seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixingReport {
    pub distances: Vec<f64>,
    pub stderr: Vec<f64>,
    pub fit: std::result::Result<ExpFit, String>,
    pub ensemble_size: usize,
    pub config: String,
}

impl MixingReport {
    pub fn write_csv<W: Write>(&self, w: &mut W, header: &str) -> std::io::Result<()> {
        write_header(w, header)?;
        writeln!(w, "k,d_k,stderr_k")?;
        for (k, (d, s)) in self.distances.iter().zip(&self.stderr).enumerate() {
            writeln!(w, "{k},{d:e},{s:e}")?;
        }
        match &self.fit {
            Ok(f) => writeln!(
                w,
                "# fit: C = {:e}, kappa = {:.6}, R2 = {:.6}, points = {}",
                f.c, f.kappa, f.r_squared, f.points
            ),
            Err(e) => writeln!(w, "# fit: failed ({e})"),
        }
    }
}

impl MarkovChain {
    /// Samples of the reference measure: one long chain from `start`,
    /// recorded every `subsample` steps after `burn_in`.
    pub fn reference_ensemble(
        &self,
        start: &SpectralField,
        params: &MixingParams,
    ) -> Result<Vec<SpectralField>> {
        let seed = member_seed(params.master_seed, REFERENCE_LINEAGE);
        let mut u = start.clone();
        let mut out = Vec::with_capacity(params.ensemble_size);
        let total = params.burn_in + params.subsample * params.ensemble_size as u64;
        for n in 0..total {
            u = self.step(&u, seed, n)?;
            let after = n + 1;
            if after > params.burn_in && (after - params.burn_in).is_multiple_of(params.subsample) {
                out.push(u.clone());
            }
        }
        Ok(out)
    }

    /// Projections `ρ⟨u_k, φ_p⟩` along the path of member `member` from `u0`.
    fn member_projections(
        &self,
        u0: &SpectralField,
        member: usize,
        params: &MixingParams,
        dict: &TestFunctionalDictionary,
    ) -> Result<Vec<Vec<f64>>> {
        let seed = member_seed(params.master_seed, member as u64);
        let mut u = u0.clone();
        let mut out = Vec::with_capacity(params.n_steps as usize + 1);
        out.push(dict.project(&u));
        for n in 0..params.n_steps {
            u = self.step(&u, seed, n)?;
            out.push(dict.project(&u));
        }
        Ok(out)
    }

    /// Per-member paths `[member][k][direction]` from per-member starts.
    fn ensemble_projections(
        &self,
        starts: &[&SpectralField],
        params: &MixingParams,
        dict: &TestFunctionalDictionary,
    ) -> Result<Vec<Vec<Vec<f64>>>> {
        starts
            .par_iter()
            .enumerate()
            .map(|(e, u0)| self.member_projections(u0, e, params, dict))
            .collect()
    }

    /// Distance from the law of `u_k(u0)` to the reference for each
    /// `u0`, with exponential fits. `reference` should be a stationary
    /// sample (see [`MarkovChain::reference_ensemble`]).
    pub fn mixing_experiment(
        &self,
        u0s: &[SpectralField],
        reference: &[SpectralField],
        params: &MixingParams,
        dict: &TestFunctionalDictionary,
    ) -> Result<Vec<MixingReport>> {
        if reference.is_empty() || params.ensemble_size == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let ne = params.ensemble_size;
        let steps = params.n_steps as usize;
        let ref_paths: Vec<Vec<Vec<f64>>> = match params.reference {
            ReferenceMode::Coupled => {
                let starts: Vec<&SpectralField> =
                    (0..ne).map(|e| &reference[e % reference.len()]).collect();
                self.ensemble_projections(&starts, params, dict)?
            }
            ReferenceMode::Fixed => reference
                .iter()
                .map(|r| vec![dict.project(r); steps + 1])
                .collect(),
        };
        let mut reports = Vec::with_capacity(u0s.len());
        for (q, u0) in u0s.iter().enumerate() {
            let starts: Vec<&SpectralField> = vec![u0; ne];
            let paths = self.ensemble_projections(&starts, params, dict)?;
            let mut distances = Vec::with_capacity(steps + 1);
            let mut stderr = Vec::with_capacity(steps + 1);
            for k in 0..=steps {
                let va: Vec<Vec<f64>> = paths.iter().map(|p| dict.evaluate(&p[k])).collect();
                let vb: Vec<Vec<f64>> = ref_paths.iter().map(|p| dict.evaluate(&p[k])).collect();
                distances.push(dual_lipschitz_from_values(&va, &vb)?);
                let paired = params.reference == ReferenceMode::Coupled;
                let seed = mix64(params.master_seed ^ ((q as u64) << 32 | k as u64));
                stderr.push(bootstrap_stderr(&va, &vb, paired, params.bootstrap, seed));
            }
            let fit = fit_exponential(&distances, &stderr).map_err(|e| e.to_string());
            reports.push(MixingReport {
                distances,
                stderr,
                fit,
                ensemble_size: ne,
                config: format!(
                    "ensemble={} steps={} burn_in={} subsample={} reference={:?} bootstrap={} seed={}",
                    ne, params.n_steps, params.burn_in, params.subsample, params.reference, params.bootstrap,
                    params.master_seed
                ),
            });
        }
        Ok(reports)
    }

    /// Gramian of `h ↦ D_ηS(u0, η)h` over probes
    /// `1_{[s/T, (s+1)/T)}(t) λ_i^{-m/2} e_i` for the `n_probe_modes` lowest
    /// modes and `n_time_slots` slots, in the `V^m` inner product.
    pub fn gramian_nondegeneracy(
        &self,
        u0: &SpectralField,
        seg: Option<&NoiseSegment>,
        n_probe_modes: usize,
        n_time_slots: usize,
    ) -> Result<GramianReport> {
        gramian(
            &self.stepper,
            &self.cfg,
            u0,
            self.forcing(seg).as_ref(),
            n_probe_modes,
            n_time_slots,
        )
    }
}

/// Eigen-summary of a probe Gramian.
#[derive(Debug, Clone)]
pub struct GramianReport {
    pub matrix: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub probe_eigenvalues: Vec<f64>,
}

impl GramianReport {
    pub fn smallest(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `λ_max / λ_min`; infinite when singular.
    pub fn condition_number(&self) -> f64 {
        let s = self.smallest();
        if s > 0.0 {
            self.largest() / s
        } else {
            f64::INFINITY
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, header: &str) -> std::io::Result<()> {
        write_header(w, header)?;
        writeln!(w, "index,eigenvalue")?;
        for (i, e) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{i},{e:e}")?;
        }
        writeln!(w, "# condition_number = {:e}", self.condition_number())
    }
}

/// Gramian of an explicit probe list; `probes[a]` is switched on over
/// `slots[a]`.
pub fn gramian_of_probes(
    stepper: &Stepper,
    cfg: &StepperConfig,
    u0: &SpectralField,
    forcing: &dyn Forcing,
    probes: &[(SpectralField, (f64, f64))],
) -> Result<DMatrix<f64>> {
    let cfg = StepperConfig { t_end: 1.0, ..*cfg };
    let base = stepper.solve(u0, forcing, &cfg)?;
    let zero = SpectralField::zeros(stepper.grid());
    let responses: Vec<SpectralField> = probes
        .par_iter()
        .map(|(field, (start, end))| {
            let h = SlotForcing {
                field: field.clone(),
                start: *start,
                end: *end,
            };
            stepper.tangent_propagate(&zero, &base, 0.0, 1.0, Some(&h))
        })
        .collect::<Result<_>>()?;
    let m = stepper.grid().m_sobolev;
    let n = responses.len();
    let mut g = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = responses[a].inner_sobolev(&responses[b], m);
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    Ok(g)
}

fn gramian(
    stepper: &Stepper,
    cfg: &StepperConfig,
    u0: &SpectralField,
    forcing: &dyn Forcing,
    n_probe_modes: usize,
    n_time_slots: usize,
) -> Result<GramianReport> {
    let grid = *stepper.grid();
    if n_time_slots == 0 || !n_time_slots.is_power_of_two() || (n_time_slots as f64) * cfg.dt > 1.0
    {
        return Err(Error::InvalidStepper(format!(
            "{n_time_slots} time slots do not align with dt = {}",
            cfg.dt
        )));
    }
    let modes = enumerate_modes(&grid);
    let mut probes = Vec::new();
    let mut lambdas = Vec::new();
    for s in 0..n_time_slots {
        let slot = (
            s as f64 / n_time_slots as f64,
            (s + 1) as f64 / n_time_slots as f64,
        );
        for (idx, lambda) in modes.iter().take(n_probe_modes) {
            let mut e = idx.basis_field(&grid);
            e *= lambda.powf(-(grid.m_sobolev as f64) / 2.0);
            probes.push((e, slot));
            if s == 0 {
                lambdas.push(*lambda);
            }
        }
    }
    let matrix = gramian_of_probes(stepper, cfg, u0, forcing, &probes)?;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(matrix.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(GramianReport {
        matrix,
        eigenvalues,
        probe_eigenvalues: lambdas,
    })
}

/// Worst-case ratios of the zero-noise time-one map over `samples`:
/// `max ‖S(u,0)‖_{L²}/‖u‖_{L²}` and `max ‖S(u,0)‖'/‖u‖'`.
pub fn dissipativity(chain: &MarkovChain, samples: &[SpectralField]) -> Result<(f64, f64)> {
    let cfg = *chain.config();
    let ratios: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|u| {
            let s = chain.stepper().time_one_map(u, &NoForcing, &cfg)?;
            Ok((s.l2_norm() / u.l2_norm(), s.primed_norm() / u.primed_norm()))
        })
        .collect::<Result<_>>()?;
    Ok(ratios
        .iter()
        .fold((0.0f64, 0.0f64), |acc, r| (acc.0.max(r.0), acc.1.max(r.1))))
}

/// Random initial conditions with `‖u‖_{V^m} = radius`, one per seed.
pub fn random_initial_conditions(
    grid: &GridSpec,
    count: usize,
    radius: f64,
    seed: u64,
) -> Vec<SpectralField> {
    let band = grid.dealiased_band();
    (0..count)
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(member_seed(seed, i as u64));
            let mut f = random_field(grid, &band, 4.0, &mut rng);
            let n = f.vm_norm();
            if n > 0.0 {
                f *= radius / n;
            }
            f
        })
        .collect()
}
