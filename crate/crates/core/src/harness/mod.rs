//! Experiment runner: JSON configuration, validation, a bounded worker pool and
//! staged output directories.

mod config;
mod tasks;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

pub use config::{ExperimentConfig, Kind, Task};
pub use tasks::{
    BG_HEADER, COMBINATORICS_HEADER, COUPLING_HEADER, CURRENTS_HEADER, MARGINALS_HEADER, MEAN_CURRENT_HEADER,
    MOMENTS_HEADER, NORMALIZATION_HEADER, QV_HEADER, RECURSION_HEADER, SUP_CURRENT_HEADER,
};

use crate::error::{bail, FepError, Result};

pub const TOOLKIT: &str = "fepkit";
/// Bumped whenever a CSV header or the layout of the JSON outputs changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// A parsed and fully validated experiment, ready to execute.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub task: Task,
    pub out_dir: PathBuf,
    raw: Value,
    overrides: Value,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub task: Task,
    pub pass: bool,
    pub metrics: Value,
    pub out_dir: PathBuf,
    pub wall_seconds: f64,
}

impl Task {
    pub fn name(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }
}

/// Parses `text`, applies overrides and checks every precondition of the task.
/// `kind` must agree with the config's `kind` when both are present.
pub fn prepare(text: &str, kind: Option<Kind>, ov: &Overrides) -> Result<Prepared> {
    let (mut cfg, raw) = ExperimentConfig::from_json(text)?;
    let mut overrides = serde_json::Map::new();
    match (kind, cfg.kind) {
        (Some(k), Some(c)) if k != c => {
            bail!(InvalidArgument, "field `kind`: config has {c:?}, command line asks for {k:?}")
        }
        (Some(k), None) => {
            cfg.kind = Some(k);
            overrides.insert("kind".into(), serde_json::to_value(k)?);
        }
        _ => {}
    }
    if let Some(s) = ov.seed {
        cfg.seed = s;
        overrides.insert("seed".into(), json!(s));
    }
    if let Some(w) = ov.workers {
        cfg.workers = w;
        overrides.insert("workers".into(), json!(w));
    }
    let task = cfg.validate()?;
    tasks::check(&cfg, task)?;
    let out_dir = ov
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("fepkit-out").join(task.name()));
    Ok(Prepared {
        config: cfg,
        task,
        out_dir,
        raw,
        overrides: Value::Object(overrides),
    })
}

fn staging_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

fn pretty(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Runs the experiment and writes `manifest.json`, `result.json`, `timing.json` and
/// the task's files into the output directory. Files are staged in a sibling
/// `.partial` directory that is renamed on success and removed on failure.
pub fn execute(p: &Prepared) -> Result<RunOutcome> {
    let staging = staging_path(&p.out_dir);
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;
    let started = Instant::now();
    let written = run_into(p, &staging, started);
    match written {
        Ok(outcome) => {
            let moved = (|| -> Result<()> {
                if p.out_dir.exists() {
                    fs::remove_dir_all(&p.out_dir)?;
                }
                fs::rename(&staging, &p.out_dir)?;
                Ok(())
            })();
            if let Err(e) = moved {
                let _ = fs::remove_dir_all(&staging);
                return Err(e);
            }
            Ok(outcome)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

fn run_into(p: &Prepared, dir: &Path, started: Instant) -> Result<RunOutcome> {
    let cfg = &p.config;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| FepError::InvalidArgument(format!("field `workers`: {e}")))?;
    let out = pool.install(|| tasks::run_task(cfg, p.task))?;
    let wall = started.elapsed().as_secs_f64();

    let mut names: Vec<&str> = out.files.iter().map(|(n, _)| n.as_str()).collect();
    names.sort_unstable();
    let manifest = json!({
        "toolkit": TOOLKIT,
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind,
        "task": p.task,
        "config": p.raw,
        "overrides": p.overrides,
        "seed": cfg.seed,
        "schedule": { "s_switch": cfg.s_switch, "gamma": cfg.gamma, "N": cfg.n },
        "rho": cfg.rho,
        "L": cfg.ring_len(),
        "t_end": cfg.t_end,
        "replicas": cfg.replicas,
        "files": names,
    });
    let result = json!({ "task": p.task, "pass": out.pass, "metrics": out.metrics });
    fs::write(dir.join("manifest.json"), pretty(&manifest)?)?;
    fs::write(dir.join("result.json"), pretty(&result)?)?;
    fs::write(dir.join("timing.json"), pretty(&json!({ "wall_seconds": wall }))?)?;
    for (name, body) in &out.files {
        fs::write(dir.join(name), body)?;
    }
    Ok(RunOutcome {
        task: p.task,
        pass: out.pass,
        metrics: out.metrics,
        out_dir: p.out_dir.clone(),
        wall_seconds: wall,
    })
}

/// Reads a config file, then prepares and executes it.
pub fn run_file(path: &Path, kind: Option<Kind>, ov: &Overrides) -> Result<RunOutcome> {
    let text = fs::read_to_string(path)?;
    execute(&prepare(&text, kind, ov)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(dir: &Path) -> Overrides {
        Overrides {
            out: Some(dir.to_path_buf()),
            ..Overrides::default()
        }
    }

    #[test]
    fn small_run_writes_staged_outputs() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("norm");
        let p = prepare(r#"{"kind":"sample","max_ell":6,"rhos":[0.7]}"#, None, &ov(&out)).unwrap();
        let res = execute(&p).unwrap();
        assert!(res.pass);
        for f in ["manifest.json", "result.json", "timing.json", "normalization.csv"] {
            assert!(out.join(f).exists(), "{f}");
        }
        assert!(!staging_path(&out).exists());
        let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["schema_version"], 1);
        assert_eq!(manifest["config"]["max_ell"], 6);
    }

    #[test]
    fn kind_mismatch_and_failures_leave_nothing_behind() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("x");
        assert!(prepare(r#"{"kind":"sample"}"#, Some(Kind::Simulate), &ov(&out)).is_err());
        let p = prepare(r#"{"max_ell":3}"#, Some(Kind::Sample), &ov(&out)).unwrap();
        assert_eq!(p.overrides["kind"], "sample");
        // a regular file in the way of the output directory makes the final move fail
        fs::write(&out, "keep").unwrap();
        let p = prepare(r#"{"kind":"sample","max_ell":3}"#, None, &ov(&out)).unwrap();
        assert!(execute(&p).is_err());
        assert!(!staging_path(&out).exists());
        assert_eq!(fs::read_to_string(&out).unwrap(), "keep");
    }

    #[test]
    fn task_checks_name_the_field() {
        let err = prepare(r#"{"kind":"simulate","task":"coupling","rho":1.0,"t_end":1}"#, None, &Overrides::default())
            .unwrap_err();
        assert!(err.to_string().contains("rho"), "{err}");
        let err = prepare(r#"{"kind":"fluctuation","task":"covariance","N":64,"ring_factor":8,"t_end":0.05}"#, None, &Overrides::default())
            .unwrap_err();
        assert!(err.to_string().contains("test_functions"), "{err}");
        let err = prepare(r#"{"kind":"bg-decay","Ns":[64],"t_end":0.01}"#, None, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("Ns"), "{err}");
    }
}
