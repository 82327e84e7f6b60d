use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twobubble::cli::{self, RunConfig};

#[derive(Parser)]
#[command(name = "twobubble", version, about = "Two-bubble dynamics of the radial energy-critical biharmonic NLS")]
struct Args {
    /// flat key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// override a configuration key, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// write the primary output here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form constants as JSON
    Constants,
    /// Eigenpair of the linearized flow as JSON
    Eigen,
    /// Run the property suite; exits nonzero on any failure
    Check {
        #[arg(long)]
        only: Option<String>,
    },
    /// Integrate the reduced modulation law
    Ode {
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        t1: Option<String>,
        #[arg(long = "N")]
        n: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        theta0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        a2p0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        forcing: Option<String>,
    },
    /// Two-bubble experiment; trajectory CSV, summary JSON on stderr
    Simulate,
    /// Exit landscape over the cube; CSV, summary JSON on stderr
    Shoot,
}

fn resolve(args: &Args) -> twobubble::Result<RunConfig> {
    let text = match &args.config {
        Some(p) => fs::read_to_string(p).map_err(|e| twobubble::Error::Config {
            param: "config".into(),
            value: p.display().to_string(),
            expected: format!("readable file ({e})"),
        })?,
        None => String::new(),
    };
    let mut cfg = cli::parse_config(&text)?;
    let mut flags: Vec<(String, String)> = Vec::new();
    for s in &args.set {
        let (k, v) = s.split_once('=').ok_or_else(|| twobubble::Error::Config {
            param: "--set".into(),
            value: s.clone(),
            expected: "KEY=VALUE".into(),
        })?;
        flags.push((k.trim().into(), v.trim().into()));
    }
    if let Cmd::Ode { t0, t1, n, theta0, a2p0, forcing } = &args.cmd {
        for (k, v) in [("t0", t0), ("t1", t1), ("N", n), ("theta0", theta0), ("a2p0", a2p0), ("forcing", forcing)] {
            if let Some(v) = v {
                flags.push((k.into(), v.clone()));
            }
        }
    }
    for (k, v) in flags {
        cfg.set(&k, &v)?;
    }
    Ok(cfg)
}

fn emit(args: &Args, s: &str) -> std::io::Result<()> {
    match &args.output {
        Some(p) => fs::write(p, s),
        None => std::io::stdout().write_all(s.as_bytes()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match resolve(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match &args.cmd {
        Cmd::Constants => cli::cmd_constants(&cfg).map(|s| (s + "\n", None, true)),
        Cmd::Eigen => cli::cmd_eigen(&cfg).map(|s| (s + "\n", None, true)),
        Cmd::Check { only } => cli::run_suite(&cfg, only.as_deref()).map(|r| (cli::records_jsonl(&r), None, r.iter().all(|x| x.pass))),
        Cmd::Ode { .. } => cli::cmd_ode(&cfg).map(|s| (s, None, true)),
        Cmd::Simulate => cli::cmd_simulate(&cfg).map(|(c, j)| (c, Some(j), true)),
        Cmd::Shoot => cli::cmd_shoot(&cfg).map(|(c, j)| (c, Some(j), true)),
    };
    match result {
        Ok((out, side, ok)) => {
            if let Err(e) = emit(&args, &out) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if let Some(j) = side {
                eprintln!("{j}");
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
