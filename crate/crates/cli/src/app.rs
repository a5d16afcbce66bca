use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::compare::{compare_engines, COMPARE_HEADER};
use crate::config::{load_compare, load_config, CompareConfig, ConfigFile, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::experiments::{resolve, run_experiment, Outcome};
use crate::output::{ensure_dir, write_json, write_rows, write_table, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_DISAGREE: i32 = 3;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub jobs: usize,
    pub output: PathBuf,
    pub format: Format,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn to_json<T: serde::Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string(v).map_err(|e| CliError::Serialize(e.to_string()))
}

/// Runs one experiment into `root/<output_dir or label>`.
pub fn run_one(cfg: &ExperimentConfig, root: &Path, format: Format) -> CliResult<(PathBuf, Outcome)> {
    let dir = root.join(cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from(cfg.label())));
    let start = Instant::now();
    let report = run_experiment(cfg)?;
    let runtime = start.elapsed().as_secs_f64();
    ensure_dir(&dir)?;
    write_rows(&dir, &report.rows, format)?;
    if let Some(s) = &report.sweep {
        write_table(&dir.join("sweep.csv"), &s.header, s.rows.iter().cloned())?;
    }
    let resolved = resolve(cfg);
    let summary = json!({
        "config": resolved,
        "config_sha256": sha256_hex(to_json(&resolved)?.as_bytes()),
        "seed": cfg.seed,
        "status": report.outcome,
        "outputs": report.outputs,
        "runtime_seconds": runtime,
        "threads": supercsp::par::threads(),
    });
    write_json(&dir.join("summary.json"), &summary)?;
    Ok((dir, report.outcome))
}

/// `run`: a single config or a bundle, with bundle members spread over
/// `jobs` workers. Returns the exit code.
pub fn run_command(path: &Path, opts: &RunOptions) -> CliResult<i32> {
    let mut configs = match load_config(path)? {
        ConfigFile::Single(c) => vec![*c],
        ConfigFile::Bundle(b) => b.experiments,
    };
    for c in &mut configs {
        if let Some(s) = opts.seed {
            c.seed = s;
        }
        c.validate()?;
    }
    if configs.len() == 1 {
        let (dir, outcome) = run_one(&configs[0], &opts.output, opts.format)?;
        eprintln!("{}: {:?}", dir.display(), outcome);
        return Ok(if outcome == Outcome::Unknown { EXIT_UNKNOWN } else { EXIT_OK });
    }
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![None; configs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..opts.jobs.max(1).min(configs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = configs.get(i) else { break };
                let r = run_one(cfg, &opts.output, opts.format).map_err(|e| e.to_string());
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let mut code = EXIT_OK;
    for (cfg, r) in configs.iter().zip(results.into_inner().unwrap()) {
        match r.expect("every bundle member runs") {
            Ok((dir, outcome)) => {
                eprintln!("{}: {:?}", dir.display(), outcome);
                if outcome == Outcome::Unknown && code == EXIT_OK {
                    code = EXIT_UNKNOWN;
                }
            }
            Err(e) => {
                eprintln!("{}: error: {e}", cfg.label());
                code = EXIT_ERROR;
            }
        }
    }
    Ok(code)
}

/// `compare`: writes `compare.csv` (or `.json`) and `summary.json`.
pub fn compare_command(path: Option<&Path>, opts: &RunOptions) -> CliResult<i32> {
    let mut cfg = match path {
        Some(p) => load_compare(p)?,
        None => CompareConfig::default(),
    };
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    let dir = opts.output.join(cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("compare")));
    let start = Instant::now();
    let report = compare_engines(&cfg)?;
    ensure_dir(&dir)?;
    match opts.format {
        Format::Csv => write_table(&dir.join("compare.csv"), &COMPARE_HEADER, report.table())?,
        Format::Json => write_json(&dir.join("compare.json"), &report.rows)?,
    }
    write_json(
        &dir.join("summary.json"),
        &json!({
            "config": cfg,
            "config_sha256": sha256_hex(to_json(&cfg)?.as_bytes()),
            "seed": cfg.seed,
            "outputs": report,
            "runtime_seconds": start.elapsed().as_secs_f64(),
            "threads": supercsp::par::threads(),
        }),
    )?;
    for r in &report.rows {
        eprintln!("{:<32} classifier={:<7} pde={:<7} agree={}", r.scenario, r.classifier, r.pde, r.agree);
    }
    Ok(if report.disagreements > 0 { EXIT_DISAGREE } else { EXIT_OK })
}
