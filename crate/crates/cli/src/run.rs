//! Subcommand bodies. Each returns the names of failed assertions; an empty
//! list means success.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use primix::mixing::{
    random_initial_conditions, MarkovChain, MixingParams, TestFunctionalDictionary,
};
use primix::snapshot;
use primix::spectral::SpectralField;

use crate::check::{render_table, run_checks};
use crate::config::RunConfig;
use crate::CliError;

/// Output sink honouring `--quiet`.
pub struct Console {
    pub quiet: bool,
}

impl Console {
    pub fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn create(cfg: &RunConfig, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

fn chain(cfg: &RunConfig) -> Result<MarkovChain, CliError> {
    Ok(MarkovChain::new(&cfg.grid, cfg.stepper, cfg.noise)?)
}

/// The configured initial condition: the `initial` snapshot if given,
/// otherwise a random field of norm `u0_radius`.
pub fn initial_condition(cfg: &RunConfig, index: usize) -> Result<SpectralField, CliError> {
    if let Some(path) = &cfg.initial {
        let (f, _) = snapshot::read(&mut File::open(path)?)?;
        if f.grid() != &cfg.grid {
            return Err(CliError::Runtime(primix::Error::GridMismatch));
        }
        return Ok(f);
    }
    let all = random_initial_conditions(&cfg.grid, index + 1, cfg.u0_radius, cfg.master_seed);
    Ok(all.into_iter().nth(index).expect("index < count"))
}

/// Writes `failures.json` into the output directory.
pub fn write_failures(cfg: &RunConfig, failed: &[String]) -> Result<PathBuf, CliError> {
    let (path, mut w) = create(cfg, "failures.json")?;
    let doc = serde_json::json!({
        "config_hash": cfg.hash,
        "version": env!("CARGO_PKG_VERSION"),
        "failed": failed,
    });
    serde_json::to_writer_pretty(&mut w, &doc).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

fn write_config_echo(cfg: &RunConfig) -> Result<(), CliError> {
    let (_, mut w) = create(cfg, "config.txt")?;
    write!(w, "# config_hash = {}\n{}", cfg.hash, cfg.canonical)?;
    w.flush()?;
    Ok(())
}

pub fn check(cfg: &RunConfig, con: &Console) -> Result<Vec<String>, CliError> {
    let results = run_checks(cfg)?;
    con.say(format!("config {}", cfg.short_hash()));
    con.say(render_table(&results).trim_end());
    Ok(results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.to_string())
        .collect())
}

fn snapshot_name(cfg: &RunConfig, step: u64) -> String {
    format!("snapshot_{}_{step:06}.bin", cfg.short_hash())
}

/// Writes one snapshot and returns its path.
pub fn save_snapshot(cfg: &RunConfig, f: &SpectralField, step: u64) -> Result<PathBuf, CliError> {
    let (path, mut w) = create(cfg, &snapshot_name(cfg, step))?;
    snapshot::write(&mut w, f, Some(step as f64))?;
    w.flush()?;
    Ok(path)
}

pub fn simulate(cfg: &RunConfig, con: &Console) -> Result<Vec<String>, CliError> {
    write_config_echo(cfg)?;
    let chain = chain(cfg)?;
    let u0 = initial_condition(cfg, 0)?;
    let path = chain.run_chain(&u0, cfg.steps, cfg.master_seed)?;
    let (norms, mut w) = create(cfg, "norms.csv")?;
    for line in cfg.header().lines() {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "t,L2,Vm,primed")?;
    for s in &path {
        writeln!(
            w,
            "{},{:e},{:e},{:e}",
            s.step,
            s.field.l2_norm(),
            s.field.vm_norm(),
            s.field.primed_norm()
        )?;
        if cfg.snapshot_every > 0 && s.step % cfg.snapshot_every == 0 {
            save_snapshot(cfg, &s.field, s.step)?;
        }
    }
    w.flush()?;
    con.say(format!(
        "simulated {} steps; |u|_L2 {:.4e} -> {:.4e}; wrote {}",
        cfg.steps,
        u0.l2_norm(),
        path.last().map_or(0.0, |s| s.field.l2_norm()),
        norms.display()
    ));
    Ok(Vec::new())
}

pub fn couple(cfg: &RunConfig, con: &Console) -> Result<Vec<String>, CliError> {
    write_config_echo(cfg)?;
    let chain = chain(cfg)?;
    let u0 = initial_condition(cfg, 0)?;
    let dir = random_initial_conditions(
        &cfg.grid,
        1,
        cfg.coupling_distance,
        cfg.master_seed ^ 0x5eed,
    )
    .remove(0);
    let report = chain.run_coupled(&u0, &(&u0 + &dir), cfg.steps, cfg.master_seed)?;
    let (path, mut w) = create(cfg, "coupling.csv")?;
    report.write_csv(&mut w, &cfg.header())?;
    let mean = report.mean_contraction();
    writeln!(
        w,
        "# mean per-step factor = {}",
        mean.map_or("undefined".to_string(), |m| format!("{m:.6}"))
    )?;
    if let Some(n) = report.resolved_until() {
        writeln!(w, "# resolved through step = {n}")?;
    }
    let expansions = report.expansions();
    for (k, f) in &expansions {
        writeln!(w, "# expansion at k = {k}: factor {f:.6}")?;
    }
    w.flush()?;
    con.say(format!(
        "coupling: mean per-step factor {}, {} expanding steps; wrote {}",
        mean.map_or("undefined".to_string(), |m| format!("{m:.4}")),
        expansions.len(),
        path.display()
    ));
    // contraction is a diagnostic: expansions are reported, not failures
    Ok(Vec::new())
}

fn mixing_params(cfg: &RunConfig) -> MixingParams {
    MixingParams {
        n_steps: cfg.steps,
        ensemble_size: cfg.ensemble,
        burn_in: cfg.burn_in,
        subsample: cfg.subsample,
        reference: cfg.reference,
        bootstrap: cfg.bootstrap,
        master_seed: cfg.master_seed,
    }
}

/// `mixing.csv` for a single initial condition, `mixing_<q>.csv` otherwise.
pub fn mixing_file(cfg: &RunConfig, q: usize) -> String {
    if cfg.u0_count == 1 {
        "mixing.csv".into()
    } else {
        format!("mixing_{q}.csv")
    }
}

pub fn mixing(cfg: &RunConfig, con: &Console) -> Result<Vec<String>, CliError> {
    write_config_echo(cfg)?;
    let chain = chain(cfg)?;
    let params = mixing_params(cfg);
    let dict = TestFunctionalDictionary::standard(
        &cfg.grid,
        cfg.dictionary_coordinate,
        cfg.dictionary_random,
        cfg.master_seed,
    );
    let u0s = (0..cfg.u0_count)
        .map(|q| initial_condition(cfg, q))
        .collect::<Result<Vec<_>, _>>()?;
    let reference = chain.reference_ensemble(&SpectralField::zeros(&cfg.grid), &params)?;
    let reports = chain.mixing_experiment(&u0s, &reference, &params, &dict)?;
    let mut failed = Vec::new();
    for (q, r) in reports.iter().enumerate() {
        let (path, mut w) = create(cfg, &mixing_file(cfg, q))?;
        r.write_csv(&mut w, &format!("{}\n{}", cfg.header(), r.config))?;
        w.flush()?;
        match &r.fit {
            Ok(f) if f.kappa < 1.0 => con.say(format!(
                "u0 #{q}: kappa {:.4}, C {:.3e}, R2 {:.4}; wrote {}",
                f.kappa,
                f.c,
                f.r_squared,
                path.display()
            )),
            Ok(f) => {
                con.say(format!("u0 #{q}: no decay, kappa {:.4}", f.kappa));
                failed.push(format!("mixing_decay_u0_{q}"));
            }
            Err(e) => {
                con.say(format!("u0 #{q}: {e}"));
                failed.push(format!("mixing_fit_u0_{q}"));
            }
        }
    }
    Ok(failed)
}

pub fn gramian(cfg: &RunConfig, con: &Console) -> Result<Vec<String>, CliError> {
    write_config_echo(cfg)?;
    let chain = chain(cfg)?;
    let u0 = initial_condition(cfg, 0)?;
    let seg = chain.segment(cfg.master_seed, 0);
    let report = chain.gramian_nondegeneracy(&u0, seg.as_ref(), cfg.probe_modes, cfg.time_slots)?;
    let (path, mut w) = create(cfg, "gramian.csv")?;
    report.write_csv(&mut w, &cfg.header())?;
    w.flush()?;
    con.say(format!(
        "gramian: smallest eigenvalue {:.4e}, condition number {:.3e}; wrote {}",
        report.smallest(),
        report.condition_number(),
        path.display()
    ));
    Ok(if report.smallest() > 0.0 {
        Vec::new()
    } else {
        vec!["gramian_nondegeneracy".into()]
    })
}
