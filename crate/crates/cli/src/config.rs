//! Flat `key = value` run configuration.
//!
//! Values are resolved in increasing precedence: built-in defaults, the
//! config file, `PRIMIX_<KEY>` environment variables, command-line flags.
//! Blank lines and lines starting with `#` are ignored. Every key below is
//! optional; unknown keys are rejected.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `length`, `depth` | `2π` | box size `L`, `h` |
//! | `nx`, `ny`, `nz` | 16, 16, 9 | stored modes |
//! | `m_sobolev` | 2 | order `m` of the `V^m` norm |
//! | `delta` | 0.1 | weight of the primed norm |
//! | `dt` | 0.0078125 | time step, a power of 1/2 with `2^-p`, `p >= j_max` |
//! | `monitor_k` | `none` | absorbing-set bound on `‖v‖_{V^m}` |
//! | `noise` | `true` | drive the chain with red noise |
//! | `i_max`, `j_max` | 12, 5 | noise modes and Haar depth |
//! | `alpha`, `beta`, `b0` | 1, 0.5, 0.5 | `b_i = b0 i^-α`, `c_j = 2^-βj` |
//! | `master_seed` | 0 | seed of every random stream |
//! | `steps` | 50 | chain steps |
//! | `ensemble` | 64 | members per law |
//! | `burn_in`, `subsample` | 50, 5 | reference chain sampling |
//! | `bootstrap` | 64 | bootstrap resamples |
//! | `reference` | `coupled` | `coupled` or `fixed` |
//! | `dictionary_coordinate`, `dictionary_random` | 16, 48 | test directions |
//! | `u0_count`, `u0_radius` | 1, 1 | initial conditions and their `V^m` norm |
//! | `coupling_distance` | 0.001 | `V^m` distance of the coupled pair |
//! | `probe_modes`, `time_slots` | 10, 1 | Gramian probes |
//! | `snapshot_every` | 0 | snapshot period in steps, 0 for none |
//! | `initial` | `none` | snapshot file to start from |
//! | `out` | `out` | output directory |

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use primix::grid::GridSpec;
use primix::mixing::ReferenceMode;
use primix::rednoise::RedNoiseSpec;
use primix::timestep::StepperConfig;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const ENV_PREFIX: &str = "PRIMIX_";

#[derive(Debug, Error, PartialEq)]
#[error("config key `{key}`: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    fn new(key: &str, reason: impl Into<String>) -> Self {
        ConfigError {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

/// Keys and their default values, in documentation order.
pub fn defaults() -> Vec<(&'static str, String)> {
    vec![
        ("length", format!("{}", 2.0 * PI)),
        ("depth", format!("{}", 2.0 * PI)),
        ("nx", "16".into()),
        ("ny", "16".into()),
        ("nz", "9".into()),
        ("m_sobolev", "2".into()),
        ("delta", "0.1".into()),
        ("dt", "0.0078125".into()),
        ("monitor_k", "none".into()),
        ("noise", "true".into()),
        ("i_max", "12".into()),
        ("j_max", "5".into()),
        ("alpha", "1".into()),
        ("beta", "0.5".into()),
        ("b0", "0.5".into()),
        ("master_seed", "0".into()),
        ("steps", "50".into()),
        ("ensemble", "64".into()),
        ("burn_in", "50".into()),
        ("subsample", "5".into()),
        ("bootstrap", "64".into()),
        ("reference", "coupled".into()),
        ("dictionary_coordinate", "16".into()),
        ("dictionary_random", "48".into()),
        ("u0_count", "1".into()),
        ("u0_radius", "1".into()),
        ("coupling_distance", "0.001".into()),
        ("probe_modes", "10".into()),
        ("time_slots", "1".into()),
        ("snapshot_every", "0".into()),
        ("initial", "none".into()),
        ("out", "out".into()),
    ]
}

/// Parses config text into key/value pairs without interpreting them.
pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let known: Vec<&str> = defaults().iter().map(|(k, _)| *k).collect();
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            ConfigError::new(line, format!("line {} is not `key = value`", lineno + 1))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !known.contains(&k) {
            return Err(ConfigError::new(k, "unknown key"));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::new(k, "given twice"));
        }
    }
    Ok(out)
}

/// `PRIMIX_<KEY>` overrides found in `vars`.
pub fn env_overrides<I: IntoIterator<Item = (String, String)>>(
    vars: I,
) -> Result<BTreeMap<String, String>, ConfigError> {
    let known: Vec<&str> = defaults().iter().map(|(k, _)| *k).collect();
    let mut out = BTreeMap::new();
    for (name, value) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let key = rest.to_ascii_lowercase();
        if !known.contains(&key.as_str()) {
            return Err(ConfigError::new(&name, "unknown key in environment"));
        }
        out.insert(key, value);
    }
    Ok(out)
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub stepper: StepperConfig,
    pub noise: Option<RedNoiseSpec>,
    pub master_seed: u64,
    pub steps: u64,
    pub ensemble: usize,
    pub burn_in: u64,
    pub subsample: u64,
    pub bootstrap: usize,
    pub reference: ReferenceMode,
    pub dictionary_coordinate: usize,
    pub dictionary_random: usize,
    pub u0_count: usize,
    pub u0_radius: f64,
    pub coupling_distance: f64,
    pub probe_modes: usize,
    pub time_slots: usize,
    pub snapshot_every: u64,
    pub initial: Option<PathBuf>,
    pub out: PathBuf,
    /// Canonical `key = value` text of every setting except `out`.
    pub canonical: String,
    /// SHA-256 of `canonical`, hex encoded.
    pub hash: String,
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn raw(&self, key: &str) -> &str {
        &self.0[key]
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .parse()
            .map_err(|e: T::Err| ConfigError::new(key, format!("`{}`: {e}", self.raw(key))))
    }

    fn finite(&self, key: &str) -> Result<f64, ConfigError> {
        let v: f64 = self.parse(key)?;
        if !v.is_finite() {
            return Err(ConfigError::new(key, "must be finite"));
        }
        Ok(v)
    }

    fn optional(&self, key: &str) -> Option<&str> {
        let v = self.raw(key);
        (v != "none").then_some(v)
    }
}

impl RunConfig {
    /// Resolves defaults < `file` < `env` < `flags` and validates the result.
    pub fn resolve(
        file: &BTreeMap<String, String>,
        env: &BTreeMap<String, String>,
        flags: &BTreeMap<String, String>,
    ) -> Result<Self, ConfigError> {
        let mut map: BTreeMap<String, String> = defaults()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        for layer in [file, env, flags] {
            for (k, v) in layer {
                if !map.contains_key(k) {
                    return Err(ConfigError::new(k, "unknown key"));
                }
                map.insert(k.clone(), v.clone());
            }
        }
        Self::from_values(Values(map))
    }

    /// Parses config text alone (no environment, no flags).
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        Self::resolve(&parse_text(text)?, &BTreeMap::new(), &BTreeMap::new())
    }

    fn from_values(v: Values) -> Result<Self, ConfigError> {
        let grid = GridSpec {
            length: v.finite("length")?,
            depth: v.finite("depth")?,
            nx: v.parse("nx")?,
            ny: v.parse("ny")?,
            nz: v.parse("nz")?,
            m_sobolev: v.parse("m_sobolev")?,
            delta: v.finite("delta")?,
        };
        if grid.nx % 2 == 1 {
            return Err(ConfigError::new("nx", "must be even"));
        }
        if grid.ny % 2 == 1 {
            return Err(ConfigError::new("ny", "must be even"));
        }
        grid.validate()
            .map_err(|e| ConfigError::new("grid", e.to_string()))?;

        let monitor_k = match v.optional("monitor_k") {
            None => None,
            Some(_) => Some(v.finite("monitor_k")?),
        };
        let stepper = StepperConfig {
            dt: v.finite("dt")?,
            t_end: 1.0,
            monitor_k,
        };
        let spec = RedNoiseSpec {
            i_max: v.parse("i_max")?,
            j_max: v.parse("j_max")?,
            alpha: v.finite("alpha")?,
            beta: v.finite("beta")?,
            b0: v.finite("b0")?,
            m_sobolev: grid.m_sobolev,
        };
        spec.validate()
            .map_err(|e| ConfigError::new("noise", e.to_string()))?;
        stepper
            .validate_for_noise_depth(spec.j_max)
            .map_err(|e| ConfigError::new("dt", e.to_string()))?;
        let noise = v.parse::<bool>("noise")?.then_some(spec);

        let reference = match v.raw("reference") {
            "coupled" => ReferenceMode::Coupled,
            "fixed" => ReferenceMode::Fixed,
            other => {
                return Err(ConfigError::new(
                    "reference",
                    format!("`{other}` is neither `coupled` nor `fixed`"),
                ))
            }
        };
        let positive = |key: &str| -> Result<usize, ConfigError> {
            let n: usize = v.parse(key)?;
            if n == 0 {
                return Err(ConfigError::new(key, "must be positive"));
            }
            Ok(n)
        };
        let ensemble = positive("ensemble")?;
        let subsample = positive("subsample")? as u64;
        let u0_count = positive("u0_count")?;
        let probe_modes = positive("probe_modes")?;
        let time_slots = positive("time_slots")?;
        if !time_slots.is_power_of_two() {
            return Err(ConfigError::new("time_slots", "must be a power of two"));
        }
        let u0_radius = v.finite("u0_radius")?;
        if u0_radius < 0.0 {
            return Err(ConfigError::new("u0_radius", "must be non-negative"));
        }
        let coupling_distance = v.finite("coupling_distance")?;
        if coupling_distance <= 0.0 {
            return Err(ConfigError::new("coupling_distance", "must be positive"));
        }

        let canonical = canonical_text(&v, &grid, &stepper, &spec);
        let hash = format!("{:x}", Sha256::digest(canonical.as_bytes()));
        Ok(RunConfig {
            grid,
            stepper,
            noise,
            master_seed: v.parse("master_seed")?,
            steps: v.parse("steps")?,
            ensemble,
            burn_in: v.parse("burn_in")?,
            subsample,
            bootstrap: v.parse("bootstrap")?,
            reference,
            dictionary_coordinate: v.parse("dictionary_coordinate")?,
            dictionary_random: v.parse("dictionary_random")?,
            u0_count,
            u0_radius,
            coupling_distance,
            probe_modes,
            time_slots,
            snapshot_every: v.parse("snapshot_every")?,
            initial: v.optional("initial").map(PathBuf::from),
            out: PathBuf::from(v.raw("out")),
            canonical,
            hash,
        })
    }

    /// First 12 hex digits of the hash, used in file names.
    pub fn short_hash(&self) -> &str {
        &self.hash[..12]
    }

    /// Header lines echoed at the top of every output file.
    pub fn header(&self) -> String {
        format!(
            "config_hash = {}\nversion = primix {}",
            self.hash,
            env!("CARGO_PKG_VERSION")
        )
    }
}

/// Sorted `key = value` lines with numbers in shortest round-trip form, so
/// equivalent spellings (`0.50`, `.5`) hash alike.
fn canonical_text(v: &Values, g: &GridSpec, s: &StepperConfig, n: &RedNoiseSpec) -> String {
    let mut map = v.0.clone();
    map.remove("out");
    let mut updates = vec![
        ("length", format!("{:?}", g.length)),
        ("depth", format!("{:?}", g.depth)),
        ("delta", format!("{:?}", g.delta)),
        ("dt", format!("{:?}", s.dt)),
        ("alpha", format!("{:?}", n.alpha)),
        ("beta", format!("{:?}", n.beta)),
        ("b0", format!("{:?}", n.b0)),
    ];
    if let Some(k) = s.monitor_k {
        updates.push(("monitor_k", format!("{k:?}")));
    }
    for key in [
        "nx",
        "ny",
        "nz",
        "m_sobolev",
        "i_max",
        "j_max",
        "master_seed",
        "steps",
        "ensemble",
        "burn_in",
        "subsample",
        "bootstrap",
        "dictionary_coordinate",
        "dictionary_random",
        "u0_count",
        "probe_modes",
        "time_slots",
        "snapshot_every",
    ] {
        let x: u64 = map[key].parse().unwrap_or(0);
        updates.push((key, x.to_string()));
    }
    for key in ["u0_radius", "coupling_distance"] {
        let x: f64 = map[key].parse().unwrap_or(0.0);
        updates.push((key, format!("{x:?}")));
    }
    let noise: bool = map["noise"].parse().unwrap_or(true);
    updates.push(("noise", noise.to_string()));
    for (k, x) in updates {
        map.insert(k.to_string(), x);
    }
    map.iter().map(|(k, x)| format!("{k} = {x}\n")).collect()
}
