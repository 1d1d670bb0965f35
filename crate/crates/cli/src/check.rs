//! The invariant suite behind `primix check`.

use num_complex::Complex64;
use primix::dynamics::Dynamics;
use primix::mixing::{least_squares, member_seed, random_initial_conditions};
use primix::rednoise::{draw_segment, evaluate, NoiseBasis};
use primix::spectral::{enumerate_modes, project, SpectralField};
use primix::timestep::{NoForcing, Stepper, StepperConfig};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    /// Machine-readable invariant name, as listed in `failures.json`.
    pub name: &'static str,
    /// The statement being checked.
    pub statement: &'static str,
    pub passed: bool,
    pub detail: String,
}

const SAMPLES: u64 = 50;

fn unit(seed: u64) -> f64 {
    (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Hermitian field with uniform coefficients on every stored mode, not in `V`.
fn raw_field(cfg: &RunConfig, seed: u64) -> SpectralField {
    let g = &cfg.grid;
    let mut f = SpectralField::zeros(g);
    let mut q = 0u64;
    for c in 0..2 {
        for (m, n, k) in SpectralField::zeros(g).modes() {
            let re = unit(member_seed(seed, q));
            let im = unit(member_seed(seed, q + 1));
            q += 2;
            f.set(c, m, n, k, Complex64::new(re, im));
        }
    }
    f.symmetrize();
    f
}

fn sample(cfg: &RunConfig, seed: u64) -> SpectralField {
    random_initial_conditions(&cfg.grid, 1, 1.0, cfg.master_seed ^ seed).remove(0)
}

fn energy_orthogonality(cfg: &RunConfig) -> CheckResult {
    let d = Dynamics::new(&cfg.grid);
    let mut worst = 0.0f64;
    for s in 0..SAMPLES {
        let (u, v) = (sample(cfg, 2 * s), sample(cfg, 2 * s + 1));
        let e = d.advect(&u, &v).inner(&v).abs();
        worst = worst.max(e / (u.sobolev_norm(1) * v.sobolev_norm(1).powi(2)));
    }
    CheckResult {
        name: "energy_orthogonality",
        statement: "<b(u,v),v> = 0",
        passed: worst <= 1e-11,
        detail: format!("max relative residual {worst:.2e}"),
    }
}

fn projection(cfg: &RunConfig) -> CheckResult {
    let (mut idem, mut orth, mut div) = (0.0f64, 0.0f64, 0.0f64);
    for s in 0..SAMPLES {
        let v = raw_field(cfg, cfg.master_seed ^ (1000 + s));
        let p = project(&v);
        let n = v.l2_norm();
        idem = idem.max((&project(&p) - &p).l2_norm() / n);
        orth = orth.max(p.inner(&(&v - &p)).abs() / (n * n));
        div = div.max(p.barotropic_divergence() / n);
    }
    CheckResult {
        name: "projection",
        statement: "P is the orthogonal projection onto V",
        passed: idem.max(orth).max(div) <= 1e-12,
        detail: format!("idempotence {idem:.2e}, orthogonality {orth:.2e}, divergence {div:.2e}"),
    }
}

fn poincare(cfg: &RunConfig) -> CheckResult {
    let g = &cfg.grid;
    let l1 = g.lambda1();
    let violations = (0..SAMPLES)
        .map(|s| project(&raw_field(cfg, cfg.master_seed ^ (2000 + s))))
        .filter(|f| f.l2_norm() > f.sobolev_norm(1) / l1.sqrt() * (1.0 + 1e-14))
        .count();
    let e = enumerate_modes(g)[0].0.basis_field(g);
    let gap = (e.l2_norm() - e.sobolev_norm(1) / l1.sqrt()).abs() / e.l2_norm();
    CheckResult {
        name: "poincare",
        statement: "|f| <= lambda1^(-1/2) |grad f|, sharp",
        passed: violations == 0 && gap <= 1e-12,
        detail: format!("{violations} violations, eigenmode gap {gap:.2e}"),
    }
}

fn bilinear_estimate(cfg: &RunConfig) -> CheckResult {
    let d = Dynamics::new(&cfg.grid);
    let (mut excess, mut ratio) = (0.0f64, 0.0f64);
    for s in 0..SAMPLES {
        let (u, v) = (sample(cfg, 3000 + 2 * s), sample(cfg, 3001 + 2 * s));
        let bb = d.B(&u, &v).l2_norm();
        excess = excess.max(bb / d.advect(&u, &v).l2_norm() - 1.0);
        let low = u.sobolev_norm(3) * v.sobolev_norm(1);
        let high = u.sobolev_norm(1) * v.sobolev_norm(3);
        ratio = ratio.max(bb / low.min(high));
    }
    CheckResult {
        name: "bilinear_estimate",
        statement: "|B(u,v)| <= |b(u,v)|, calibrated Sobolev ratio",
        passed: excess <= 1e-12 && ratio.is_finite(),
        detail: format!("max |B|/|b| - 1 = {excess:.2e}, calibrated C = {ratio:.3}"),
    }
}

fn adjoint_identity(cfg: &RunConfig) -> CheckResult {
    let d = Dynamics::new(&cfg.grid);
    let mut worst = 0.0f64;
    for s in 0..SAMPLES {
        let u = sample(cfg, 4000 + 3 * s);
        let v = sample(cfg, 4001 + 3 * s);
        let w = sample(cfg, 4002 + 3 * s);
        let lhs = d.tangent_rhs(&u, &v).inner(&w);
        let rhs = v.inner(&d.adjoint_rhs(&u, &w));
        worst = worst.max((lhs - rhs).abs() / (u.l2_norm() * v.l2_norm() * w.l2_norm()));
    }
    CheckResult {
        name: "adjoint_identity",
        statement: "<(B_u)'v, w> = <v, B_u* w>",
        passed: worst <= 1e-10,
        detail: format!("max relative mismatch {worst:.2e}"),
    }
}

fn propagator_duality(cfg: &RunConfig) -> Result<CheckResult, primix::Error> {
    let g = &cfg.grid;
    let s = Stepper::new(g);
    let u0 = random_initial_conditions(g, 1, 2.0, cfg.master_seed ^ 5000).remove(0);
    let (v, w) = (sample(cfg, 5001), sample(cfg, 5002));
    let mut pts = Vec::new();
    for p in 6..=9 {
        let c = StepperConfig::new(2f64.powi(-p), 1.0, None)?;
        let base = s.solve(&u0, &NoForcing, &c)?;
        let fwd = s.tangent_propagate(&v, &base, 0.0, 1.0, None)?;
        let bwd = s.adjoint_propagate(&w, &base, 1.0, 0.0)?;
        let gap = (fwd.inner(&w) - v.inner(&bwd)).abs() / (v.l2_norm() * w.l2_norm());
        pts.push((2f64.powi(-p).ln(), gap.max(1e-300).ln()));
    }
    let (a, order, _) = least_squares(&pts).unwrap_or((0.0, 0.0, 0.0));
    Ok(CheckResult {
        name: "propagator_duality",
        statement: "<S v, w> = <v, S* w> + O(dt^2)",
        passed: order >= 1.9,
        detail: format!("order {order:.3}, C = {:.3e}", a.exp()),
    })
}

fn noise_bound(cfg: &RunConfig) -> CheckResult {
    let Some(spec) = cfg.noise else {
        return CheckResult {
            name: "noise_bound",
            statement: "sup_t |eta|^2_Vm <= C*",
            passed: true,
            detail: "skipped: noise disabled".into(),
        };
    };
    let basis = NoiseBasis::new(&cfg.grid, &spec);
    let bound = spec.moment_bound();
    let n = 1usize << (spec.j_max + 2);
    let (mut violations, mut worst) = (0, 0.0f64);
    for interval in 0..100 {
        let seg = draw_segment(&spec, cfg.master_seed, interval);
        for q in 0..=n {
            let e = evaluate(&seg, q as f64 / n as f64, &basis)
                .vm_norm()
                .powi(2);
            worst = worst.max(e);
            violations += usize::from(e > bound);
        }
    }
    CheckResult {
        name: "noise_bound",
        statement: "sup_t |eta|^2_Vm <= C*",
        passed: violations == 0,
        detail: format!(
            "{violations} violations on 100 segments, max {worst:.4} vs C* = {bound:.4}"
        ),
    }
}

/// Runs every check on the configured grid.
pub fn run_checks(cfg: &RunConfig) -> Result<Vec<CheckResult>, primix::Error> {
    Ok(vec![
        energy_orthogonality(cfg),
        projection(cfg),
        poincare(cfg),
        bilinear_estimate(cfg),
        adjoint_identity(cfg),
        propagator_duality(cfg)?,
        noise_bound(cfg),
    ])
}

/// Pass/fail table, one row per check.
pub fn render_table(results: &[CheckResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{:<width$}  {}  {}  [{}]\n",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.statement,
            r.detail
        ));
    }
    out
}
