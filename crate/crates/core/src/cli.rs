//! `nogo` command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::analyzer::{analyze, sweep_csv, tradeoff_sweep, AnalysisOptions, Mode, Observers};
use crate::demos::{build_demo, catalog, find_demo};
use crate::error::{Error, Result};
use crate::format::{parse_protocol, protocol_to_json};
use crate::linalg::DEFAULT_MAX_DIM;
use crate::protocol::Executor;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "nogo",
    version,
    about = "Security analysis of two-party commitment protocols"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List built-in demo protocols.
    List,
    /// Analyse a protocol file and print a JSON report.
    Analyze {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = ObserversArg::Bob)]
        observers: ObserversArg,
        /// Measure concealment after this many steps (default: end of commit phase).
        #[arg(long)]
        until: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
        max_dim: usize,
    },
    /// Sweep a demo's parameter and print CSV rows.
    Sweep {
        demo: String,
        #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, value_parser = parse_angle)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
        max_dim: usize,
    },
    /// Write a demo protocol in the file format.
    Export {
        demo: String,
        #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
        param: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Purified,
    Branches,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObserversArg {
    Bob,
    BobEnv,
}

/// Parses numbers and multiples of pi: `0.3`, `pi`, `pi/8`, `3*pi/8`, `-pi/4`.
pub fn parse_angle(text: &str) -> std::result::Result<f64, String> {
    let t: String = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_lowercase();
    let Some(at) = t.find("pi") else {
        return t
            .parse::<f64>()
            .map_err(|e| format!("invalid angle {text:?}: {e}"));
    };
    let (head, tail) = (&t[..at], &t[at + 2..]);
    let coeff = match head.trim_end_matches('*') {
        "" => 1.0,
        "-" => -1.0,
        "+" => 1.0,
        n => n
            .parse::<f64>()
            .map_err(|e| format!("invalid angle {text:?}: {e}"))?,
    };
    let divisor = match tail {
        "" => 1.0,
        d => d
            .strip_prefix('/')
            .ok_or_else(|| format!("invalid angle {text:?}"))?
            .parse::<f64>()
            .map_err(|e| format!("invalid angle {text:?}: {e}"))?,
    };
    if divisor == 0.0 {
        return Err(format!("invalid angle {text:?}: division by zero"));
    }
    Ok(coeff * std::f64::consts::PI / divisor)
}

/// `from, from + step, …` up to `to`, tolerant of float drift at the end.
pub fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !from.is_finite() || !to.is_finite() {
        return Err(Error::argument(
            "sweep needs finite bounds and a positive step",
        ));
    }
    if to < from {
        return Err(Error::argument(
            "sweep upper bound is below the lower bound",
        ));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| from + k as f64 * step).collect())
}

fn emit(out: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn list(stdout: &mut dyn Write) -> Result<()> {
    for d in catalog() {
        let range = match d.parameter {
            Some(p) => format!(
                "{} in [{:.6}, {:.6}] default {:.6}",
                p.name, p.min, p.max, p.default
            ),
            None => "no parameter".to_string(),
        };
        writeln!(
            stdout,
            "{}\t{}\t{}\t{}",
            d.id,
            range,
            d.behavior.tag(),
            d.description
        )?;
    }
    Ok(())
}

/// Runs a parsed command, writing normal output to `stdout`.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::List => list(stdout),
        Command::Analyze {
            path,
            mode,
            observers,
            until,
            out,
            max_dim,
        } => {
            let text = std::fs::read_to_string(&path)?;
            let script = parse_protocol(&text)?;
            let options = AnalysisOptions {
                mode: match mode {
                    ModeArg::Purified => Mode::Purified,
                    ModeArg::Branches => Mode::Branches,
                    ModeArg::Both => Mode::Both,
                },
                observers: match observers {
                    ObserversArg::Bob => Observers::Bob,
                    ObserversArg::BobEnv => Observers::BobEnv,
                },
                until,
                executor: Executor::new(max_dim),
            };
            let report = analyze(&script, &options)?;
            emit(out.as_ref(), &report.to_json()?, stdout)
        }
        Command::Sweep {
            demo,
            from,
            to,
            step,
            out,
            max_dim,
        } => {
            find_demo(&demo)?;
            let rows = tradeoff_sweep(&Executor::new(max_dim), &demo, &grid(from, to, step)?)?;
            emit(out.as_ref(), &sweep_csv(&rows)?, stdout)
        }
        Command::Export { demo, param, out } => {
            let script = build_demo(&demo, param)?;
            emit(out.as_ref(), &protocol_to_json(&script)?, stdout)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_capacity() {
        EXIT_CAPACITY
    } else {
        EXIT_INVALID
    }
}

/// Entry point shared by the binary and tests; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("pi/8").unwrap(), PI / 8.0);
        assert_eq!(parse_angle("3*pi/8").unwrap(), 3.0 * PI / 8.0);
        assert_eq!(parse_angle("3pi/8").unwrap(), 3.0 * PI / 8.0);
        assert_eq!(parse_angle("-pi/4").unwrap(), -PI / 4.0);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("tau").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(grid(0.0, PI / 2.0, PI / 8.0).unwrap().len(), 5);
        assert_eq!(grid(0.3, 0.3, 0.1).unwrap(), vec![0.3]);
        assert!(grid(0.0, 1.0, 0.0).is_err());
        assert!(grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn unknown_demo_exits_2() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["nogo", "export", "nope"], &mut out, &mut err);
        assert_eq!(code, EXIT_INVALID);
        let code = run(
            [
                "nogo", "sweep", "nope", "--from", "0", "--to", "1", "--step", "0.5",
            ],
            &mut out,
            &mut err,
        );
        assert_eq!(code, EXIT_INVALID);
    }

    #[test]
    fn list_mentions_demos() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["nogo", "list"], &mut out, &mut err), EXIT_OK);
        let text = String::from_utf8(out).unwrap();
        for id in ["theta_family", "coinflip_bell", "hidden_oracle"] {
            assert!(text.contains(id));
        }
    }
}
