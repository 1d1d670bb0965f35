use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = "\
# small grid for fast runs
nx = 8
ny = 8
nz = 5
dt = 0.03125
steps = 4
ensemble = 8
burn_in = 5
subsample = 2
bootstrap = 8
dictionary_coordinate = 8
dictionary_random = 8
probe_modes = 4
";

struct Run {
    dir: TempDir,
}

impl Run {
    fn new(extra: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let key = |l: &str| l.split('=').next().unwrap().trim().to_string();
        let replaced: Vec<String> = extra.lines().map(key).collect();
        let base: String = SMALL
            .lines()
            .filter(|l| !replaced.contains(&key(l)))
            .map(|l| format!("{l}\n"))
            .collect();
        fs::write(dir.path().join("run.cfg"), format!("{base}{extra}")).unwrap();
        Run { dir }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn exec(&self, args: &[&str], env: &[(&str, &str)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_primix"));
        cmd.arg("--config")
            .arg(self.dir.path().join("run.cfg"))
            .arg("--out")
            .arg(self.out())
            .args(args);
        for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("PRIMIX_")) {
            cmd.env_remove(k);
        }
        cmd.envs(env.iter().copied());
        cmd.output().unwrap()
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.out().join(name)).unwrap()
    }
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn hash_of(csv: &str) -> String {
    csv.lines()
        .find_map(|l| l.strip_prefix("# config_hash = "))
        .unwrap()
        .to_string()
}

#[test]
fn check_passes_and_prints_a_table() {
    let run = Run::new("");
    let o = run.exec(&["check"], &[]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{stdout}{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for name in [
        "energy_orthogonality",
        "projection",
        "poincare",
        "bilinear_estimate",
        "adjoint_identity",
        "propagator_duality",
        "noise_bound",
    ] {
        let row = stdout.lines().find(|l| l.starts_with(name)).unwrap();
        assert!(row.contains("PASS"), "{row}");
    }
    assert!(!run.out().join("failures.json").exists());
}

#[test]
fn config_errors_exit_with_code_two() {
    for bad in ["dt = 0.3\n", "colour = blue\n", "nx = 7\n", "j_max = 6\n"] {
        let run = Run::new(bad);
        let o = run.exec(&["simulate"], &[]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("config key"));
    }
    let run = Run::new("");
    let o = run.exec(&["simulate"], &[("PRIMIX_BOGUS", "1")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn overrides_follow_file_env_flag_precedence() {
    let run = Run::new("");
    let rows = |run: &Run| data_rows(&run.read("norms.csv")).len();
    assert_eq!(run.exec(&["simulate"], &[]).status.code(), Some(0));
    assert_eq!(rows(&run), 5);
    assert_eq!(
        run.exec(&["simulate"], &[("PRIMIX_STEPS", "2")])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(rows(&run), 3);
    let o = run.exec(&["--steps", "1", "simulate"], &[("PRIMIX_STEPS", "2")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&run), 2);
}

#[test]
fn zero_noise_simulation_from_a_snapshot_dissipates() {
    let run = Run::new("snapshot_every = 2\nu0_radius = 2\n");
    assert_eq!(run.exec(&["simulate"], &[]).status.code(), Some(0));
    let norms = run.read("norms.csv");
    let hash = hash_of(&norms);
    assert!(norms.contains(&format!("# version = primix {}", env!("CARGO_PKG_VERSION"))));
    let snap = run
        .out()
        .join(format!("snapshot_{}_000004.bin", &hash[..12]));
    assert!(snap.exists());

    let second = Run::new(&format!(
        "noise = false\nsteps = 6\ninitial = {}\n",
        snap.display()
    ));
    assert_eq!(second.exec(&["simulate"], &[]).status.code(), Some(0));
    let l2: Vec<f64> = data_rows(&second.read("norms.csv"))
        .iter()
        .map(|r| r[1])
        .collect();
    assert!(l2[0] > 0.0);
    assert!(l2.windows(2).all(|w| w[1] < w[0]), "{l2:?}");
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    fs::read(a).unwrap() == fs::read(b).unwrap()
}

#[test]
fn identical_configs_give_identical_outputs() {
    let (a, b) = (Run::new("master_seed = 9\n"), Run::new("master_seed = 9\n"));
    for run in [&a, &b] {
        assert_eq!(run.exec(&["couple"], &[]).status.code(), Some(0));
    }
    assert!(same_bytes(
        &a.out().join("coupling.csv"),
        &b.out().join("coupling.csv")
    ));
    let csv = a.read("coupling.csv");
    assert!(csv.contains("k,diff_L2,diff_Vm,diff_primed"));
    assert!(csv.contains("# mean per-step factor"));
    let c = Run::new("master_seed = 10\n");
    c.exec(&["couple"], &[]);
    assert_ne!(hash_of(&csv), hash_of(&c.read("coupling.csv")));
}

#[test]
fn gramian_report_is_written() {
    let run = Run::new("");
    let o = run.exec(&["gramian"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = run.read("gramian.csv");
    assert!(csv.contains("index,eigenvalue"));
    let eig = data_rows(&csv);
    assert_eq!(eig.len(), 4);
    assert!(eig[0][1] > 0.0);
}

#[test]
fn unresolved_mixing_fit_is_an_assertion_failure() {
    let run = Run::new("steps = 3\n");
    let o = run.exec(&["--quiet", "mixing"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    let csv = run.read("mixing.csv");
    assert!(csv.contains("k,d_k,stderr_k"));
    assert!(csv.contains("# fit: failed"));
    let failures: serde_json::Value = serde_json::from_str(&run.read("failures.json")).unwrap();
    assert_eq!(failures["failed"][0], "mixing_fit_u0_0");
    assert_eq!(failures["config_hash"].as_str().unwrap(), hash_of(&csv));
}

#[test]
fn numerical_errors_exit_with_code_three() {
    let run = Run::new("monitor_k = 0.5\nu0_radius = 2\n");
    let o = run.exec(&["simulate"], &[]);
    assert_eq!(o.status.code(), Some(3));
    let failures: serde_json::Value = serde_json::from_str(&run.read("failures.json")).unwrap();
    assert_eq!(failures["failed"][0], "absorbing_set");
}
