use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use polygas::config::{self, DEFAULTS_HELP, DEFAULT_OUT, OUT_ENV};
use polygas::runner::{self, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "polygas", version, about = "Lagrangian viscous heat-conducting gas solver with estimate audits", after_help = DEFAULTS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON config file; `-` or omitted reads stdin.
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` and $POLYGAS_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. `--set n=512 --set gas.mu=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write the audit files.
    #[command(after_help = DEFAULTS_HELP)]
    Run(Common),
    /// Manufactured-solution convergence study.
    #[command(after_help = DEFAULTS_HELP)]
    Mms(Common),
    /// Run one configuration per value of a parameter, concurrently.
    #[command(after_help = DEFAULTS_HELP)]
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted config key to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated values (JSON literals or bare strings).
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
}

fn read_config(path: Option<&Path>) -> std::io::Result<String> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::read_to_string(p),
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn out_dir(flag: Option<PathBuf>, from_config: Option<PathBuf>) -> PathBuf {
    flag.or(from_config)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn execute(cli: Cli) -> polygas::Result<i32> {
    match cli.command {
        Command::Run(c) => {
            let text = read_config(c.config.as_deref())?;
            let cfg = config::parse_config_with(&text, &c.overrides)?;
            let out = out_dir(c.out, cfg.output_dir.clone());
            let outcome = runner::run(&cfg, &out)?;
            if let Some(err) = &outcome.error {
                eprintln!("polygas: {err}");
            }
            if let Some(s) = &outcome.summary {
                eprintln!(
                    "t = {} after {} steps; theta in [{:.4}, {:.4}], v in [{:.4}, {:.4}]; truncation {} ({:.3e})",
                    s.t_final,
                    s.steps,
                    s.bounds.theta_min,
                    s.bounds.theta_max,
                    s.bounds.v_min,
                    s.bounds.v_max,
                    if s.truncation.pass { "ok" } else { "BREACH" },
                    s.truncation.max_deviation,
                );
            }
            eprintln!("outputs in {}", out.display());
            Ok(outcome.exit_code)
        }
        Command::Mms(c) => {
            let text = read_config(c.config.as_deref())?;
            let cfg = config::parse_mms_config(&text, &c.overrides)?;
            let out = out_dir(c.out, cfg.output_dir.clone());
            let (code, report) = runner::mms(&cfg, &out)?;
            for r in &report.reports {
                let orders = r.orders.map_or("round-off".to_string(), |o| {
                    format!("v {:.3}  u {:.3}  theta {:.3}", o[0], o[1], o[2])
                });
                eprintln!(
                    "{:<20} {orders}  {}",
                    r.setup,
                    if r.pass { "pass" } else { "FAIL" }
                );
            }
            Ok(code)
        }
        Command::Sweep {
            common,
            param,
            values,
        } => {
            let text = read_config(common.config.as_deref())?;
            let mut doc: serde_json::Value = serde_json::from_str(&text)?;
            config::apply_overrides(&mut doc, &common.overrides)?;
            let from_cfg = doc
                .get("output_dir")
                .and_then(|v| v.as_str())
                .map(PathBuf::from);
            let out = out_dir(common.out, from_cfg);
            if let Some(obj) = doc.as_object_mut() {
                obj.remove("output_dir");
            }
            let values: Vec<serde_json::Value> = values
                .iter()
                .map(|v| {
                    serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.clone()))
                })
                .collect();
            let (code, entries) = runner::sweep(&doc, &param, &values, &out)?;
            for e in entries {
                eprintln!(
                    "{param}={} -> exit {}{}",
                    e.value,
                    e.exit_code,
                    e.error.map(|m| format!(" ({m})")).unwrap_or_default()
                );
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("polygas: {err}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
