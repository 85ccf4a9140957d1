mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{parse_list, ExperimentConfig, Kind, Rows, UsageError};
use run::{Failure, Outcome};

const EXIT_VERIFICATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "jumpheat", version, about = "Solvers and verification experiments for jump-driven heat equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Output directory for CSV/JSON reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report failed verifications without a nonzero exit status.
    #[arg(long)]
    advisory: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Audit a registry symbol and its scale function.
    CheckSymbol {
        #[arg(long)]
        symbol: String,
        #[arg(long)]
        dim: Option<usize>,
        /// Time horizon of the audit.
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Transition density or rescaled kernel on a grid.
    Kernel {
        #[arg(long)]
        symbol: String,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        /// `d,L,M`
        #[arg(long)]
        grid: String,
        /// p, psidp, q1, q2, q2_<axis> or q3
        #[arg(long)]
        which: String,
        #[arg(long)]
        phi: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Spectral solution for a source field.
    Solve {
        #[arg(long)]
        symbol: String,
        /// builtin:bump, builtin:random:<seed> or a stored field base path
        #[arg(long)]
        source: String,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[arg(long)]
        phi: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Ratio of the potential norm of the solution to the source norm over random sources.
    Estimate {
        #[arg(long)]
        symbol: String,
        #[arg(long, default_value = "2,4")]
        p: String,
        #[arg(long, default_value = "64,128,256")]
        ladder: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        sources: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo solution against the spectral solution at given points.
    McCompare {
        #[arg(long)]
        process: String,
        #[arg(long)]
        symbol: String,
        #[arg(long = "T")]
        t_end: f64,
        #[arg(long)]
        paths: usize,
        #[arg(long)]
        seed: u64,
        /// File with one point per row.
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        source: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Empirical characteristic functions of increments against the symbol.
    VerifyCf {
        #[arg(long)]
        process: String,
        #[arg(long)]
        symbol: String,
        /// File with rows `s t`.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dim: Option<usize>,
        /// File with one frequency per row.
        #[arg(long)]
        xis: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Dyadic filtration, sharp-function and maximal-function checks.
    Maximal {
        #[arg(long)]
        phi: String,
        /// `nmin,nmax`
        #[arg(long, allow_hyphen_values = true)]
        levels: String,
        #[arg(long, default_value = "2,4")]
        p: String,
        /// `random:<count>:<seed>`
        #[arg(long)]
        fields: String,
        /// full or half
        #[arg(long = "U", default_value = "full")]
        domain: String,
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Supremum of the kernel-difference integral over random point pairs.
    Hormander {
        #[arg(long)]
        symbol: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        phi: Option<String>,
        /// `d,R,M`: truncation box `[-R, R)^d` with `M` base points per axis
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        max_points: Option<usize>,
        #[arg(long)]
        tail_tolerance: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run an experiment described by a JSON configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn base(kind: Kind, common: &Common) -> ExperimentConfig {
    ExperimentConfig {
        kind: Some(kind),
        out: common.out.clone(),
        required: common.advisory.then_some(false),
        ..Default::default()
    }
}

fn into_config(cmd: Command) -> Result<ExperimentConfig, UsageError> {
    Ok(match cmd {
        Command::CheckSymbol { symbol, dim, t_end, common } => {
            ExperimentConfig { symbol: Some(symbol), dim, t_end, ..base(Kind::CheckSymbol, &common) }
        }
        Command::Kernel { symbol, s, t, grid, which, phi, common } => ExperimentConfig {
            symbol: Some(symbol),
            s: Some(s),
            t: Some(t),
            grid: Some(grid),
            which: Some(which),
            phi,
            ..base(Kind::Kernel, &common)
        },
        Command::Solve { symbol, source, grid, steps, t_end, phi, common } => ExperimentConfig {
            symbol: Some(symbol),
            source: Some(source),
            grid,
            steps,
            t_end,
            phi,
            ..base(Kind::Solve, &common)
        },
        Command::Estimate { symbol, p, ladder, seed, phi, dim, sources, steps, t_end, common } => ExperimentConfig {
            symbol: Some(symbol),
            p: Some(parse_list("p", &p)?),
            ladder: Some(parse_list("ladder", &ladder)?),
            seed: Some(seed),
            phi,
            dim,
            sources,
            steps,
            t_end,
            ..base(Kind::Estimate, &common)
        },
        Command::McCompare { process, symbol, t_end, paths, seed, points, grid, steps, source, common } => ExperimentConfig {
            process: Some(process),
            symbol: Some(symbol),
            t_end: Some(t_end),
            paths: Some(paths),
            seed: Some(seed),
            points: Some(Rows::File(points)),
            grid,
            steps,
            source,
            ..base(Kind::McCompare, &common)
        },
        Command::VerifyCf { process, symbol, pairs, n, seed, dim, xis, common } => ExperimentConfig {
            process: Some(process),
            symbol: Some(symbol),
            pairs: Some(Rows::File(pairs)),
            n: Some(n),
            seed: Some(seed),
            dim,
            xis: xis.map(Rows::File),
            ..base(Kind::VerifyCf, &common)
        },
        Command::Maximal { phi, levels, p, fields, domain, dim, common } => {
            let lv: Vec<i32> = parse_list("levels", &levels)?;
            let [lo, hi] = lv[..] else {
                return Err(UsageError::new("levels", format!("expected nmin,nmax, got '{levels}'")));
            };
            let domain = match domain.as_str() {
                "full" => jumpheat::maximal::Domain::Full,
                "half" => jumpheat::maximal::Domain::Half,
                _ => return Err(UsageError::new("domain", format!("expected full or half, got '{domain}'"))),
            };
            ExperimentConfig {
                phi: Some(phi),
                levels: Some([lo, hi]),
                p: Some(parse_list("p", &p)?),
                fields: Some(fields),
                domain: Some(domain),
                dim,
                ..base(Kind::Maximal, &common)
            }
        }
        Command::Hormander { symbol, seed, count, phi, grid, max_points, tail_tolerance, common } => ExperimentConfig {
            symbol: Some(symbol),
            seed: Some(seed),
            count,
            phi,
            grid,
            max_points,
            tail_tolerance,
            ..base(Kind::Hormander, &common)
        },
        Command::Run { config, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| UsageError::new("config", e.to_string()))?;
            let mut cfg = config::parse_json(&text)?;
            if out.is_some() {
                cfg.out = out;
            }
            cfg
        }
    })
}

fn write_outputs(dir: &Path, cfg: &ExperimentConfig, summary: &serde_json::Value, outcome: Option<&Outcome>) -> jumpheat::Result<()> {
    std::fs::create_dir_all(dir)?;
    // the output location is not part of the experiment
    let stored = ExperimentConfig { out: None, ..cfg.clone() };
    jumpheat::io::write_json(&dir.join("config.json"), &stored)?;
    jumpheat::io::write_json(&dir.join("summary.json"), summary)?;
    if let Some(o) = outcome {
        for (name, text) in &o.tables {
            jumpheat::io::write_text(&dir.join(name), text)?;
        }
    }
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = json!({
        "created_unix": created,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": jumpheat::par::threads(),
        "arguments": std::env::args().collect::<Vec<_>>(),
    });
    jumpheat::io::write_json(&dir.join("metadata.json"), &meta)
}

fn usage(e: &UsageError) -> ExitCode {
    eprintln!("usage error: {e}");
    ExitCode::from(EXIT_USAGE)
}

fn execute(cfg: ExperimentConfig) -> ExitCode {
    let kind = match cfg.validate() {
        Ok(k) => k,
        Err(e) => return usage(&e),
    };
    let out = cfg.out.clone();
    if let Some(dir) = &out {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("cannot create {}: {e}", dir.display());
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let required = cfg.required.unwrap_or(true);
    match run::run(kind, &cfg, out.as_deref()) {
        Ok(outcome) => {
            let pass = outcome.pass();
            let summary = json!({
                "kind": kind.name(),
                "pass": pass,
                "checks": outcome.checks,
                "result": outcome.details,
            });
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            if let Some(dir) = &out {
                if let Err(e) = write_outputs(dir, &cfg, &summary, Some(&outcome)) {
                    eprintln!("writing reports failed: {e}");
                    return ExitCode::from(EXIT_NUMERICAL);
                }
            }
            if pass || !required {
                ExitCode::SUCCESS
            } else {
                for c in outcome.checks.iter().filter(|c| !c.pass) {
                    eprintln!("verification failed: {} = {} (bound {})", c.name, c.value, c.bound);
                }
                ExitCode::from(EXIT_VERIFICATION)
            }
        }
        Err(Failure::Usage(e)) => usage(&e),
        Err(Failure::Numerical(jumpheat::Error::Configuration(m))) => usage(&UsageError::new("", m)),
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            let diag = json!({ "kind": kind.name(), "pass": false, "error": e.to_string(), "detail": format!("{e:?}") });
            if let Some(dir) = &out {
                let _ = write_outputs(dir, &cfg, &diag, None);
                let _ = jumpheat::io::write_json(&dir.join("error.json"), &diag);
            }
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match into_config(cli.command) {
        Ok(cfg) => execute(cfg),
        Err(e) => usage(&e),
    }
}
