//! Integrating-factor Heun integration of the projected equation
//! `∂v/∂t - Δv + B(v,v) = f`, of its tangent linearization and of the
//! adjoint equation.
//!
//! Per mode, with `E = e^{-λ dt}` and `N` the non-stiff part,
//!
//! ```text
//! ṽ  = E (v + dt N(v, t))
//! v⁺ = E v + dt/2 (E N(v, t) + N(ṽ, t + dt))
//! ```
//!
//! Forcing is sampled from the right at `t` and from the left at `t + dt`, so
//! a piecewise-constant force whose jumps fall on step boundaries is
//! integrated exactly.

use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral::SpectralField;

/// Time step, horizon and optional absorbing-set monitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub monitor_k: Option<f64>,
}

/// Returns `p` when `dt == 2^{-p}` exactly.
pub fn dyadic_exponent(dt: f64) -> Option<u32> {
    if !(dt > 0.0 && dt.is_finite()) {
        return None;
    }
    let p = -dt.log2();
    let pr = p.round();
    if !(0.0..=60.0).contains(&pr) {
        return None;
    }
    (2f64.powi(-(pr as i32)) == dt).then_some(pr as u32)
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64, monitor_k: Option<f64>) -> Result<Self> {
        let cfg = StepperConfig {
            dt,
            t_end,
            monitor_k,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = dyadic_exponent(self.dt).ok_or_else(|| {
            Error::InvalidStepper(format!("dt = {} is not a power of 1/2", self.dt))
        })?;
        if p < 2 {
            return Err(Error::InvalidStepper("dt must be at most 1/4".into()));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidStepper(
                "t_end must be finite and non-negative".into(),
            ));
        }
        if let Some(k) = self.monitor_k {
            if !(k > 0.0) {
                return Err(Error::InvalidStepper("monitor_K must be positive".into()));
            }
        }
        Ok(())
    }

    /// Additionally requires `dt <= 2^{-depth}` so that no step straddles a
    /// jump of a Haar series of that depth.
    pub fn validate_for_noise_depth(&self, depth: u32) -> Result<()> {
        self.validate()?;
        let p = dyadic_exponent(self.dt).unwrap_or(0);
        if p < depth {
            return Err(Error::InvalidStepper(format!(
                "dt = 2^-{p} is coarser than the noise resolution 2^-{depth}"
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Time-dependent forcing with values in `V`.
pub trait Forcing: Sync {
    /// Value at `t`; with `left` set, the left limit at `t`. `None` means zero.
    fn eval(&self, t: f64, left: bool) -> Option<SpectralField>;
}

/// Identically zero forcing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoForcing;

impl Forcing for NoForcing {
    fn eval(&self, _t: f64, _left: bool) -> Option<SpectralField> {
        None
    }
}

/// Continuous forcing given by a closure.
pub struct FnForcing<F>(pub F);

impl<F: Fn(f64) -> SpectralField + Sync> Forcing for FnForcing<F> {
    fn eval(&self, t: f64, _left: bool) -> Option<SpectralField> {
        Some((self.0)(t))
    }
}

/// A fixed field switched on over `[start, end)`.
#[derive(Debug, Clone)]
pub struct SlotForcing {
    pub field: SpectralField,
    pub start: f64,
    pub end: f64,
}

impl Forcing for SlotForcing {
    fn eval(&self, t: f64, left: bool) -> Option<SpectralField> {
        let on = if left {
            self.start < t && t <= self.end
        } else {
            self.start <= t && t < self.end
        };
        on.then(|| self.field.clone())
    }
}

/// States at `t0 + i·dt` together with the predictor stage of each step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<SpectralField>,
    /// `stages[i]` is the predictor `ṽ` of the step from `states[i]`.
    pub stages: Vec<SpectralField>,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.states.len() - 1) as f64
    }

    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("trajectory is never empty")
    }

    fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt;
        let i = x.round();
        ((x - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.states.len()).then_some(i as usize)
    }

    fn span(&self, t1: f64, t2: f64) -> Result<(usize, usize)> {
        match (self.index_of(t1), self.index_of(t2)) {
            (Some(a), Some(b)) if a <= b => Ok((a, b)),
            _ => Err(Error::TrajectoryCoverage { t1, t2 }),
        }
    }
}

/// Integrator bound to one grid.
#[derive(Debug)]
pub struct Stepper {
    dynamics: Dynamics,
}

fn decay_table(g: &GridSpec, dt: f64) -> Vec<f64> {
    SpectralField::spectral_table(g, |lambda| (-lambda * dt).exp())
}

fn add_forcing(n: &mut SpectralField, f: Option<SpectralField>) {
    if let Some(f) = f {
        *n += &f;
    }
}

/// One integrating-factor Heun step given the non-stiff terms.
fn heun_step<N1, N2>(
    v: &SpectralField,
    dt: f64,
    decay: &[f64],
    first: N1,
    second: N2,
) -> (SpectralField, SpectralField)
where
    N1: FnOnce(&SpectralField) -> SpectralField,
    N2: FnOnce(&SpectralField) -> SpectralField,
{
    let n0 = first(v);
    let mut pred = v.clone();
    pred.axpy(dt, &n0);
    pred.apply_table(decay);
    let n1 = second(&pred);
    // E v + dt/2 E n0 = E (v + dt/2 n0)
    let mut next = v.clone();
    next.axpy(0.5 * dt, &n0);
    next.apply_table(decay);
    next.axpy(0.5 * dt, &n1);
    (next, pred)
}

impl Stepper {
    pub fn new(grid: &GridSpec) -> Self {
        Stepper {
            dynamics: Dynamics::new(grid),
        }
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn grid(&self) -> &GridSpec {
        self.dynamics.grid()
    }

    fn nonlinear(&self, v: &SpectralField, f: Option<SpectralField>) -> SpectralField {
        let mut n = -self.dynamics.B(v, v);
        add_forcing(&mut n, f);
        n
    }

    /// One step from `t` to `t + dt`; returns the new state and the predictor.
    pub fn step(
        &self,
        v: &SpectralField,
        t: f64,
        dt: f64,
        f: &dyn Forcing,
    ) -> (SpectralField, SpectralField) {
        self.step_with(v, t, dt, &decay_table(self.grid(), dt), f)
    }

    fn step_with(
        &self,
        v: &SpectralField,
        t: f64,
        dt: f64,
        decay: &[f64],
        f: &dyn Forcing,
    ) -> (SpectralField, SpectralField) {
        heun_step(
            v,
            dt,
            decay,
            |x| self.nonlinear(x, f.eval(t, false)),
            |x| self.nonlinear(x, f.eval(t + dt, true)),
        )
    }

    fn check_state(&self, v: &SpectralField, t: f64, cfg: &StepperConfig) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::NonFiniteState { time: t });
        }
        if let Some(bound) = cfg.monitor_k {
            let norm = v.vm_norm();
            if norm > bound {
                return Err(Error::AbsorbingSetViolation {
                    time: t,
                    norm,
                    bound,
                });
            }
        }
        Ok(())
    }

    /// Integrates from `t0` over `cfg.t_end` and returns every step.
    pub fn solve_from(
        &self,
        v0: &SpectralField,
        t0: f64,
        f: &dyn Forcing,
        cfg: &StepperConfig,
    ) -> Result<Trajectory> {
        cfg.validate()?;
        v0.same_grid(&SpectralField::zeros(self.grid()))?;
        let steps = cfg.steps();
        let mut states = Vec::with_capacity(steps + 1);
        let mut stages = Vec::with_capacity(steps);
        self.check_state(v0, t0, cfg)?;
        let decay = decay_table(self.grid(), cfg.dt);
        states.push(v0.clone());
        for i in 0..steps {
            let t = t0 + i as f64 * cfg.dt;
            let (next, pred) = self.step_with(&states[i], t, cfg.dt, &decay, f);
            self.check_state(&next, t + cfg.dt, cfg)?;
            states.push(next);
            stages.push(pred);
        }
        Ok(Trajectory {
            t0,
            dt: cfg.dt,
            states,
            stages,
        })
    }

    /// Integrates over `[0, cfg.t_end]`.
    pub fn solve(
        &self,
        v0: &SpectralField,
        f: &dyn Forcing,
        cfg: &StepperConfig,
    ) -> Result<Trajectory> {
        self.solve_from(v0, 0.0, f, cfg)
    }

    /// Endpoint only, without storing the trajectory.
    pub fn advance(
        &self,
        v0: &SpectralField,
        t0: f64,
        f: &dyn Forcing,
        cfg: &StepperConfig,
    ) -> Result<SpectralField> {
        cfg.validate()?;
        v0.same_grid(&SpectralField::zeros(self.grid()))?;
        self.check_state(v0, t0, cfg)?;
        let decay = decay_table(self.grid(), cfg.dt);
        let mut v = v0.clone();
        for i in 0..cfg.steps() {
            let t = t0 + i as f64 * cfg.dt;
            v = self.step_with(&v, t, cfg.dt, &decay, f).0;
            self.check_state(&v, t + cfg.dt, cfg)?;
        }
        Ok(v)
    }

    /// The time-one map `S(v₀, η)`: integrates over `[0, 1]` with the forcing
    /// read in local time.
    pub fn time_one_map(
        &self,
        v0: &SpectralField,
        f: &dyn Forcing,
        cfg: &StepperConfig,
    ) -> Result<SpectralField> {
        let cfg = StepperConfig { t_end: 1.0, ..*cfg };
        self.advance(v0, 0.0, f, &cfg)
    }

    /// Tangent propagator `S_{t₁}^{t₂}` along `base`, with optional forcing
    /// `h`; linear in `(w0, h)`.
    ///
    /// The second Heun stage linearizes about the stored predictor of the
    /// base step, which makes the result the exact derivative of the
    /// discrete flow.
    pub fn tangent_propagate(
        &self,
        w0: &SpectralField,
        base: &Trajectory,
        t1: f64,
        t2: f64,
        h: Option<&dyn Forcing>,
    ) -> Result<SpectralField> {
        let (i1, i2) = base.span(t1, t2)?;
        let dt = base.dt;
        let d = &self.dynamics;
        let rhs = |w: &SpectralField, u: &SpectralField, t: f64, left: bool| {
            let mut n = -d.tangent_rhs(u, w);
            add_forcing(&mut n, h.and_then(|h| h.eval(t, left)));
            n
        };
        let decay = decay_table(self.grid(), dt);
        let mut w = w0.clone();
        for i in i1..i2 {
            let t = base.t0 + i as f64 * dt;
            let u0 = &base.states[i];
            let u1 = base.stages.get(i).unwrap_or(&base.states[i + 1]);
            w = heun_step(
                &w,
                dt,
                &decay,
                |x| rhs(x, u0, t, false),
                |x| rhs(x, u1, t + dt, true),
            )
            .0;
            if !w.is_finite() {
                return Err(Error::NonFiniteState { time: t + dt });
            }
        }
        Ok(w)
    }

    /// Adjoint propagator `S̄_{t₂}^{t₁}`: solves `dw/dt + Δw - 𝔹_{u(t)}(w) = 0`
    /// backwards from `w(t₂) = w2` and returns `w(t₁)`.
    pub fn adjoint_propagate(
        &self,
        w2: &SpectralField,
        base: &Trajectory,
        t2: f64,
        t1: f64,
    ) -> Result<SpectralField> {
        let (i1, i2) = base.span(t1, t2)?;
        let dt = base.dt;
        let d = &self.dynamics;
        let rhs = |w: &SpectralField, u: &SpectralField| -d.adjoint_rhs(u, w);
        let decay = decay_table(self.grid(), dt);
        let mut w = w2.clone();
        for i in (i1..i2).rev() {
            let (later, earlier) = (&base.states[i + 1], &base.states[i]);
            w = heun_step(&w, dt, &decay, |x| rhs(x, later), |x| rhs(x, earlier)).0;
            if !w.is_finite() {
                return Err(Error::NonFiniteState {
                    time: base.t0 + i as f64 * dt,
                });
            }
        }
        Ok(w)
    }
}
