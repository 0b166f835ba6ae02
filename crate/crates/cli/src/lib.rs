//! `papsim`: command-line front end for the piecewise adiabatic passage
//! simulator.
//!
//! Exit codes: 0 success, 2 configuration error (no data files written),
//! 3 numerical failure, 4 built-in check failure under `--check`.

pub mod config;
pub mod run;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use config::{parse_config, ConfigError, RunConfig, DEFAULT_CONFIG};
pub use run::{Check, Experiment};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_ENV: &str = "PAPSIM_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "papsim", version, about = "Shaped-pulse excitation of a two-level fine-structure doublet")]
pub struct Cli {
    #[arg(value_enum)]
    pub experiment: Experiment,
    /// TOML run configuration; the bundled potassium defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides PAPSIM_OUT and the config's output_dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent grid points.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Exit with code 4 if a built-in acceptance check fails.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Serialize)]
struct OutputRecord {
    file: String,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    config_source: String,
    config: Option<RunConfig>,
    threads: Option<usize>,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    status: &'static str,
    exit_code: i32,
    errors: Vec<String>,
    checks: Vec<Check>,
    outputs: Vec<OutputRecord>,
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, dir.join(name))
}

fn resolve_out(cli: &Cli, cfg: Option<&RunConfig>) -> Option<PathBuf> {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()).map(PathBuf::from))
}

fn exit_code_for(e: &pap_core::Error) -> (i32, &'static str) {
    use pap_core::Error::*;
    match e {
        Config(_) | Domain(_) | GridTooCoarse { .. } | IntegratorParams(_) => (EXIT_CONFIG, "config_error"),
        _ => (EXIT_NUMERICAL, "numerical_error"),
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run_cli(cli: &Cli) -> i32 {
    let started = now_ms();
    let mut manifest = RunManifest {
        tool: "papsim",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cli.experiment.name(),
        config_source: cli.config.as_ref().map_or("bundled default".into(), |p| p.display().to_string()),
        config: None,
        threads: cli.threads,
        started_unix_ms: started,
        finished_unix_ms: 0,
        status: "ok",
        exit_code: EXIT_OK,
        errors: Vec::new(),
        checks: Vec::new(),
        outputs: Vec::new(),
    };

    let parsed = match &cli.config {
        None => parse_config(DEFAULT_CONFIG),
        Some(p) => match fs::read_to_string(p) {
            Ok(text) => parse_config(&text),
            Err(e) => Err(ConfigError::Syntax(format!("cannot read {}: {e}", p.display()))),
        },
    };
    let cfg = match parsed {
        Ok(c) => c,
        Err(e) => return fail(manifest, resolve_out(cli, None).as_deref(), EXIT_CONFIG, "config_error", e.to_string()),
    };
    let out = resolve_out(cli, Some(&cfg)).unwrap_or_else(|| PathBuf::from("papsim-out"));
    manifest.config = Some(cfg.clone());

    let names = cfg.experiment.names();
    if let Some(other) = names.iter().find(|n| **n != cli.experiment.name()) {
        let msg = format!("experiment: config sets [experiment.{other}] but the subcommand is {}", cli.experiment.name());
        return fail(manifest, Some(&out), EXIT_CONFIG, "config_error", msg);
    }

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return fail(manifest, Some(&out), EXIT_CONFIG, "config_error", format!("threads: {e}")),
    };
    let result = pool.install(|| run::execute(cli.experiment, &cfg));
    let output = match result {
        Ok(o) => o,
        Err(e) => {
            let (code, status) = exit_code_for(&e);
            return fail(manifest, Some(&out), code, status, e.to_string());
        }
    };

    if let Err(e) = fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return EXIT_NUMERICAL;
    }
    let summary = json_bytes(&serde_json::json!({
        "experiment": cli.experiment.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "checks": output.checks,
        "results": output.summary,
    }));
    let files = output.files.iter().map(|(n, b)| (n.as_str(), b.as_slice())).chain([("summary.json", summary.as_slice())]);
    for (name, bytes) in files {
        if let Err(e) = write_atomic(&out, name, bytes) {
            eprintln!("error: cannot write {name}: {e}");
            return EXIT_NUMERICAL;
        }
        manifest.outputs.push(OutputRecord { file: name.into(), bytes: bytes.len(), sha256: hex::encode(Sha256::digest(bytes)) });
    }

    for c in &output.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = output.checks.iter().any(|c| !c.pass);
    manifest.checks = output.checks;
    if cli.check && failed {
        manifest.status = "check_failed";
        manifest.exit_code = EXIT_CHECK;
    }
    finish(&mut manifest, &out);
    println!("wrote {} files to {}", manifest.outputs.len(), out.display());
    manifest.exit_code
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

fn finish(manifest: &mut RunManifest, out: &Path) {
    manifest.finished_unix_ms = now_ms();
    let bytes = json_bytes(manifest);
    if fs::create_dir_all(out).and_then(|_| write_atomic(out, "manifest.json", &bytes)).is_err() {
        eprintln!("warning: cannot write manifest to {}", out.display());
    }
}

/// Records an error in the manifest (when the output directory is known)
/// and returns `code`. No data files are written.
fn fail(mut manifest: RunManifest, out: Option<&Path>, code: i32, status: &'static str, msg: String) -> i32 {
    eprintln!("error: {msg}");
    manifest.status = status;
    manifest.exit_code = code;
    manifest.errors.push(msg);
    if let Some(out) = out {
        finish(&mut manifest, out);
    }
    code
}

/// Parses the summary written by a previous run.
pub fn read_summary(out: &Path) -> std::io::Result<Value> {
    let text = fs::read_to_string(out.join("summary.json"))?;
    Ok(serde_json::from_str(&text)?)
}
