//! Command-line front end: argument and config-file parsing, dispatch, artifact writing.

mod commands;
pub mod output;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::{Gl4Error, Result};

/// Comma-separated list of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct F64List(pub Vec<f64>);

impl FromStr for F64List {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let v: std::result::Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match v {
            Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(F64List(v)),
            _ => Err(format!("expected a comma-separated list of numbers, got `{s}`")),
        }
    }
}

/// Comma-separated list of grid sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct UsizeList(pub Vec<usize>);

impl FromStr for UsizeList {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(UsizeList)
            .map_err(|_| format!("expected a comma-separated list of integers, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Parser)]
#[command(name = "gl4", version, about = "Magnetic Ginzburg-Landau vortex sheets in R⁴")]
pub struct Cli {
    /// `key = value` file; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Degree-one planar vortex profile (U, V)
    Vortex(VortexArgs),
    /// Saddle solution (f, g, h) on the quarter plane
    Saddle(SaddleArgs),
    /// Fermi coordinates near Γ: oracle checks and single-point probes
    #[command(subcommand)]
    Fermi(FermiCommand),
    /// Jacobi operator: convergence checks, mode table, manufactured solves
    #[command(subcommand)]
    Jacobi(JacobiCommand),
    /// Projections and residual norms of the approximate solution across ε
    Reduce(ReduceArgs),
    /// Winding of a loop around Γ
    Omega(OmegaArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct VortexArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 20.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 4000)]
    pub nodes: usize,
    #[arg(long, default_value = "vortex.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SaddleArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// side of the square domain
    #[arg(long, visible_alias = "L", default_value_t = 15.0)]
    pub length: f64,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 300)]
    pub flow_iters: usize,
    #[arg(long, default_value_t = 40)]
    pub newton_max: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value = "saddle.csv")]
    pub out: PathBuf,
    /// also write the JSON summary here
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum FermiCommand {
    /// Seeded oracle comparisons for the Fermi charts
    Check(FermiCheckArgs),
    /// Closest points and chart coordinates of one point
    Probe(FermiProbeArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct FermiCheckArgs {
    #[arg(long, default_value = "0.5,0.2,0.1")]
    pub eps: F64List,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 40)]
    pub dense_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "fermi.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct FermiProbeArgs {
    /// ρ1,θ1,ρ2,θ2
    #[arg(long, allow_hyphen_values = true)]
    pub point: F64List,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum JacobiCommand {
    /// Refinement tables of L_H applied to explicit Jacobi fields
    Verify(JacobiVerifyArgs),
    /// Growth and decay exponents of the Fourier mode equations
    Modes(JacobiModesArgs),
    /// Manufactured solve of the reduced system
    Solve(JacobiSolveArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct JacobiVerifyArgs {
    #[arg(long, default_value_t = 0.2)]
    pub smin: f64,
    #[arg(long, default_value = "81,161,321,641")]
    pub nodes: UsizeList,
    #[arg(long, default_value_t = 16)]
    pub ntheta: usize,
    /// directory receiving one `<family>.csv` per family
    #[arg(long, default_value = "jacobi")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct JacobiModesArgs {
    #[arg(long, default_value_t = 3)]
    pub kmax: usize,
    #[arg(long, default_value = "modes.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct JacobiSolveArgs {
    #[arg(long, default_value_t = 0.2)]
    pub smin: f64,
    #[arg(long, default_value_t = 161)]
    pub nodes: usize,
    #[arg(long, default_value_t = 8)]
    pub ntheta: usize,
    #[arg(long, default_value_t = 3)]
    pub kmax: usize,
    #[arg(long, default_value = "solution.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ReduceArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value = "0.2,0.1,0.05")]
    pub eps: F64List,
    /// amplitude of the built-in smooth test perturbation
    #[arg(long, default_value_t = 0.5)]
    pub amp: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = crate::residual::DEFAULT_Q)]
    pub q: f64,
    /// (a, b) grid step of the ‖F(u)‖_** samples
    #[arg(long, default_value_t = 0.1)]
    pub spacing: f64,
    #[arg(long, default_value_t = false)]
    pub skip_norm: bool,
    #[arg(long, default_value_t = 30.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 3001)]
    pub nodes: usize,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    /// table `eps,Fnorm,proj1,proj2,mismatch`
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct OmegaArgs {
    /// `circle:s=..,theta=..,r=..[,a=..,b=..]` or `points:x1 x2 x3 x4;...`
    #[arg(long = "loop", allow_hyphen_values = true)]
    pub loop_spec: String,
    #[arg(long, default_value_t = 50.0)]
    pub rho_cut: f64,
    #[arg(long, default_value_t = 800)]
    pub n_u: usize,
    #[arg(long, default_value_t = 512)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 128)]
    pub n_loop: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Gl4Error::invalid(format!("config line {}: expected `key = value`", n + 1)));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Gl4Error::invalid(format!("config line {}: empty key", n + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn pull_config(argv: &mut Vec<String>) -> Result<Option<PathBuf>> {
    let mut found = None;
    let mut i = 1;
    while i < argv.len() {
        if argv[i] == "--config" {
            if i + 1 >= argv.len() {
                return Err(Gl4Error::invalid("--config needs a path"));
            }
            found = Some(PathBuf::from(argv.remove(i + 1)));
            argv.remove(i);
        } else if let Some(p) = argv[i].strip_prefix("--config=") {
            found = Some(PathBuf::from(p));
            argv.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Parses argv, merging an optional config file beneath the explicit flags.
pub fn parse_config(argv: &[String]) -> std::result::Result<Cli, ParseOutcome> {
    let mut argv = argv.to_vec();
    let path = pull_config(&mut argv).map_err(ParseOutcome::Error)?;
    if let Some(path) = path {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ParseOutcome::Error(Gl4Error::Io(format!("{}: {e}", path.display()))))?;
        let entries = read_config(&text).map_err(ParseOutcome::Error)?;
        // walk the subcommand path to find where flags start and which flags exist
        let mut cmd = Cli::command();
        let mut depth = 1;
        while depth < argv.len() {
            match cmd.find_subcommand(&argv[depth]) {
                Some(sub) => {
                    cmd = sub.clone();
                    depth += 1;
                }
                None => break,
            }
        }
        let mut injected = Vec::new();
        for (k, v) in entries {
            let arg = cmd.get_arguments().find(|a| a.get_long() == Some(k.as_str()) && k != "config");
            let Some(arg) = arg else {
                return Err(ParseOutcome::Error(Gl4Error::invalid(format!("unknown config key `{k}`"))));
            };
            let takes_value = arg.get_action().takes_values();
            if takes_value {
                injected.push(format!("--{k}={v}"));
            } else {
                match v.as_str() {
                    "true" => injected.push(format!("--{k}")),
                    "false" => {}
                    _ => {
                        return Err(ParseOutcome::Error(Gl4Error::invalid(format!(
                            "config key `{k}` takes true or false, got `{v}`"
                        ))))
                    }
                }
            }
        }
        argv.splice(depth..depth, injected);
    }
    Cli::try_parse_from(&argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ParseOutcome::Info(e.to_string()),
        _ => ParseOutcome::Error(Gl4Error::invalid(e.to_string().trim_end().to_string())),
    })
}

#[derive(Debug)]
pub enum ParseOutcome {
    /// help or version text, exit 0
    Info(String),
    Error(Gl4Error),
}

pub fn check_decreasing(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !(*x > 0.0)) {
        return Err(Gl4Error::invalid(format!("{name}: values must be positive")));
    }
    if v.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Gl4Error::invalid(format!("{name}: values must be strictly decreasing")));
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GL4_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Gl4Error::invalid(format!("GL4_THREADS must be a positive integer, got `{v}`")))?;
        // a second build in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one invocation and returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let cli = match parse_config(argv) {
        Ok(c) => c,
        Err(ParseOutcome::Info(s)) => {
            print!("{s}");
            return 0;
        }
        Err(ParseOutcome::Error(e)) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match configure_threads().and_then(|_| commands::dispatch(&cli.command)) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
