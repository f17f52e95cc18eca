//! Command-line front end: configs in, deterministic CSV/JSON tables out.

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use rayon::prelude::*;
use serde_json::json;

use crate::cache::Cache;
use crate::config::{Command, Config, Format, Sweep, ToleranceProfile};
use crate::output::{Cell, Table};

#[derive(Parser, Debug)]
#[command(name = "optomech", version, about = "Sweeps and tables for nonlinear cavity optomechanics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout if absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweep points
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub tolerance_profile: Option<ToleranceProfile>,
    /// Sweep one scalar, e.g. `--sweep tau 0:6.28:0.1`
    #[arg(long, global = true, num_args = 2, value_names = ["NAME", "START:STOP:STEP"])]
    pub sweep: Option<Vec<String>>,
    /// Fix one scalar, e.g. `--set g0=1.5`
    #[arg(long = "set", global = true, value_name = "NAME=VALUE")]
    pub set: Vec<String>,
}

/// Config file plus command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if let Some(out) = &cli.out {
        cfg.output.path = Some(out.clone());
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(t) = cli.tolerance_profile {
        cfg.tolerance_profile = t;
    }
    if let Some(s) = &cli.sweep {
        cfg.swept = Some(Sweep::parse(&s[0], &s[1])?);
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set expects NAME=VALUE, got `{kv}`"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("--set {k}: bad number `{v}`"))?;
        cfg.fixed.insert(k.trim().to_string(), v);
    }
    match cli.command {
        Command::Sweep => {
            if cfg.swept.is_none() {
                bail!("config field `swept`: required for `sweep`");
            }
        }
        Command::Validate => {}
        cmd => cfg.command = Some(cmd),
    }
    match cfg.command {
        Some(Command::Sweep | Command::Validate) => bail!("config field `command`: must name a table command"),
        None if cli.command == Command::Sweep => bail!("config field `command`: required for `sweep`"),
        _ => {}
    }
    Ok(cfg)
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads: must be >= 1");
        }
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

fn dedup(warnings: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for w in warnings {
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

/// Evaluate every point in swept order.
pub fn build_table(cfg: &Config, cache: &Cache) -> Result<Table> {
    let cmd = cfg.command.ok_or_else(|| anyhow!("config field `command`: required"))?;
    let points = cfg.points()?;
    let mut columns = commands::columns(cmd, cfg)?;
    let lead = cfg.swept.as_ref().map(|s| s.name.clone()).filter(|n| !columns.contains(n));
    if let Some(name) = &lead {
        columns.insert(0, name.clone());
    }
    let mut warnings = Vec::new();
    for p in &points {
        warnings.extend(commands::preflight(cmd, cfg, p)?);
    }
    let per_point: Vec<Vec<Vec<Cell>>> = pool(cfg.threads)?.install(|| {
        points
            .par_iter()
            .map(|p| {
                let mut rows = commands::evaluate(cmd, cfg, p, cache)?;
                if let Some(name) = &lead {
                    let v = p.get(name)?;
                    for r in &mut rows {
                        r.insert(0, v.into());
                    }
                }
                Ok(rows)
            })
            .collect::<Result<_>>()
    })?;
    let warnings = dedup(warnings);
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Table {
        command: cmd.name().to_string(),
        fingerprint: cfg.fingerprint(),
        warnings,
        columns,
        rows: per_point.into_iter().flatten().collect(),
    })
}

/// Dry run: schema, names and validity envelope.
pub fn validate(cfg: &Config) -> Result<serde_json::Value> {
    let points = cfg.points()?;
    let mut warnings = Vec::new();
    if let Some(cmd) = cfg.command {
        commands::columns(cmd, cfg)?;
        for p in &points {
            warnings.extend(commands::preflight(cmd, cfg, p)?);
        }
    } else {
        for p in &points {
            p.spec.validate()?;
        }
    }
    Ok(json!({
        "ok": true,
        "command": cfg.command.map(|c| c.name()),
        "points": points.len(),
        "config_sha256": cfg.fingerprint(),
        "warnings": dedup(warnings),
    }))
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let mut w = sink(&cfg.output.path)?;
    if cli.command == Command::Validate {
        let report = validate(&cfg)?;
        match cfg.output.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &report)?;
                writeln!(w)?;
            }
            Format::Csv => {
                writeln!(w, "ok: {} point(s), config-sha256 {}", report["points"], cfg.fingerprint())?;
                for warning in report["warnings"].as_array().into_iter().flatten() {
                    writeln!(w, "warning: {}", warning.as_str().unwrap_or_default())?;
                }
            }
        }
    } else {
        let table = build_table(&cfg, &Cache::from_env())?;
        table.write(cfg.output.format, &mut w)?;
    }
    w.flush()?;
    Ok(())
}
