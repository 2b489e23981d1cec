use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use cca_cli::config::{self, Resolved, ValidationError};
use cca_cli::figures;
use cca_cli::output::{Bundle, Metadata};
use cca_cli::tasks::{self, TaskOutput};

#[derive(Parser)]
#[command(name = "cca", version, about = "Coupled cavity array simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a TOML configuration.
    Run {
        config: PathBuf,
        /// Output directory (default: task_params.output_dir, else results/<config name>).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the bundled configurations of one figure and check its key numbers.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(figures::FIGURES))]
        figure: String,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

enum Failure {
    Config(ValidationError),
    Numerical(anyhow::Error),
    Assertions(Vec<figures::Assertion>),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Numerical(e)
    }
}

fn report(f: &Failure) -> ExitCode {
    let (code, body) = match f {
        Failure::Config(e) => (2, json!({ "status": "invalid-config", "problems": e.problems })),
        Failure::Numerical(e) => (1, json!({ "status": "failed", "error": e.to_string(), "context": e.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>() })),
        Failure::Assertions(a) => (
            3,
            json!({
                "status": "assertions-failed",
                "misses": a.iter().map(|x| json!({ "name": x.name, "computed": x.computed, "lower": x.lower, "upper": x.upper })).collect::<Vec<_>>()
            }),
        ),
    };
    eprintln!("{}", serde_json::to_string_pretty(&body).expect("json"));
    ExitCode::from(code)
}

fn bundle(r: &Resolved, out: &TaskOutput, wall: f64) -> Result<Bundle> {
    let mut b = Bundle::default();
    let mut files = Vec::new();
    for t in &out.tables {
        b.add(t.file_name(), t.to_csv(&r.hash)?);
        files.push(t.file_name());
    }
    let meta = Metadata {
        config: serde_json::to_value(&r.config)?,
        config_sha256: r.hash.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        task: r.config.task.name().to_string(),
        wall_time_s: wall,
        files,
        summary: out.summary.clone(),
        warnings: out.warnings.clone(),
    };
    b.add("metadata.json".into(), serde_json::to_vec_pretty(&meta)?);
    Ok(b)
}

fn execute(r: &Resolved) -> Result<(TaskOutput, Bundle)> {
    let start = Instant::now();
    let out = tasks::run(r)?;
    let b = bundle(r, &out, start.elapsed().as_secs_f64())?;
    Ok((out, b))
}

fn run(path: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let r = config::load(path).map_err(Failure::Config)?;
    let dir = out.unwrap_or_else(|| match &r.config.task_params.output_dir {
        Some(d) => path.parent().unwrap_or(Path::new(".")).join(d),
        None => PathBuf::from("results").join(path.file_stem().unwrap_or_default()),
    });
    let (res, b) = execute(&r)?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    for p in b.commit(&dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn reproduce(figure: &str, out: &Path) -> Result<(), Failure> {
    let cfgs = figures::configs(figure).expect("figure id checked by clap");
    let mut runs = Vec::new();
    let mut bundles = Vec::new();
    for (name, text) in cfgs {
        let r = config::parse(text).map_err(Failure::Config)?;
        eprintln!("{figure}: running {name} ({})", r.config.task.name());
        let (res, b) = execute(&r).with_context(|| format!("{figure}/{name}"))?;
        bundles.push((name, b));
        runs.push((r, res));
    }
    let asserts = figures::check(figure, &runs)?;
    let hash = hex::encode(Sha256::digest(runs.iter().map(|r| r.0.hash.as_str()).collect::<Vec<_>>().join("\n")));
    let dir = out.join(figure);
    for (name, b) in &bundles {
        b.commit(&dir.join(name))?;
    }
    let table = figures::table(&asserts);
    let mut ab = Bundle::default();
    ab.add(table.file_name(), table.to_csv(&hash)?);
    ab.commit(&dir)?;
    for a in &asserts {
        println!("{:4} {}: {:.6} in [{:.6}, {:.6}]", if a.pass() { "PASS" } else { "FAIL" }, a.name, a.computed, a.lower, a.upper);
    }
    let misses: Vec<_> = asserts.into_iter().filter(|a| !a.pass()).collect();
    if misses.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertions(misses))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = match &cli.command {
        Command::Run { jobs, .. } | Command::Reproduce { jobs, .. } => *jobs,
    };
    if let Some(n) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Run { config, out, .. } => run(config, out.clone()),
        Command::Reproduce { figure, out, .. } => reproduce(figure, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
