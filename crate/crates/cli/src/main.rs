//! Command-line driver: convergence sweeps, energy-drift studies and single
//! solves, emitting CSV or aligned-markdown tables.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kg_hdg::harness::{
    run_convergence, run_energy, run_single, ConvergenceConfig, EOCTable, EnergyConfig, Method,
};
use kg_hdg::par::ExecMode;

const THREADS_ENV: &str = "KGHDG_THREADS";

#[derive(Parser)]
#[command(
    name = "kghdg",
    version,
    about = "HDG solver for the 2D nonlinear Klein-Gordon equation",
    after_help = "Defaults may also come from a flat key=value config file \
                  (--config); explicit flags always win. The thread count \
                  falls back to the KGHDG_THREADS environment variable."
)]
struct Cli {
    /// flat key=value config file supplying defaults for any flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// worker thread count (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Mesh refinement study: errors and estimated orders of convergence
    Convergence(ConvergenceArgs),
    /// Per-step discrete energy drift of the conservative scheme
    Energy(EnergyArgs),
    /// One solve; prints the final-time error norms
    Single(SingleArgs),
}

#[derive(Args)]
struct ConvergenceArgs {
    /// benchmark problem id (1..4)
    #[arg(long)]
    example: Option<usize>,
    /// polynomial degree, single value or inclusive range a..b
    #[arg(long)]
    k: Option<Range>,
    /// refinement levels, single value or inclusive range a..b
    #[arg(long)]
    m: Option<Range>,
    #[arg(long, value_enum)]
    scheme: Option<Scheme>,
    /// stabilization parameter
    #[arg(long)]
    tau: Option<f64>,
    /// explicit time step (default: h^((k+1)/2), snapped so T/dt is integral)
    #[arg(long)]
    dt: Option<f64>,
    /// final time
    #[arg(long = "T")]
    final_time: Option<f64>,
    /// Newton residual tolerance
    #[arg(long)]
    newton_tol: Option<f64>,
    /// output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct EnergyArgs {
    /// benchmark problem id (default 4, the source-free case)
    #[arg(long)]
    example: Option<usize>,
    /// polynomial degree
    #[arg(long)]
    k: Option<usize>,
    /// refinement levels, single value or inclusive range a..b
    #[arg(long)]
    m: Option<Range>,
    /// stabilization parameter
    #[arg(long)]
    tau: Option<f64>,
    /// time step
    #[arg(long)]
    dt: Option<f64>,
    /// final time
    #[arg(long = "T")]
    final_time: Option<f64>,
    /// Newton residual tolerance
    #[arg(long)]
    newton_tol: Option<f64>,
    /// output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SingleArgs {
    #[arg(long)]
    example: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// refinement level
    #[arg(long)]
    m: Option<u32>,
    #[arg(long, value_enum)]
    scheme: Option<Scheme>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    final_time: Option<f64>,
    #[arg(long)]
    newton_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Conservative,
    Nonconservative,
    Variant,
}

impl Scheme {
    fn method(self) -> Method {
        match self {
            Scheme::Conservative => Method::Conservative,
            Scheme::Nonconservative => Method::NonConservative,
            Scheme::Variant => Method::Variant,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

/// Inclusive `a..b` range; a bare `a` means `a..a`.
#[derive(Clone, Copy, Debug)]
struct Range(u32, u32);

impl FromStr for Range {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| format!("bad range bound {v:?}"))
        };
        let r = match s.split_once("..") {
            Some((a, b)) => Range(parse(a)?, parse(b)?),
            None => {
                let v = parse(s)?;
                Range(v, v)
            }
        };
        if r.0 > r.1 {
            return Err(format!("empty range {}..{}", r.0, r.1));
        }
        Ok(r)
    }
}

/// `flag value if given, else config-file value, else default` — the merge
/// rule behind every option.
struct Defaults(HashMap<String, String>);

impl Defaults {
    fn load(path: Option<&PathBuf>) -> Result<Defaults, String> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap().trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Defaults(map))
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str, fallback: T) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.0.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| format!("config key {key}={raw}: {e}")),
            None => Ok(fallback),
        }
    }

    fn get_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| format!("config key {key}={raw}: {e}")),
            None => Ok(None),
        }
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Scheme as ValueEnum>::from_str(s, true)
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

enum Failure {
    /// bad flags or config: exit 2
    Usage(String),
    /// a run started and failed: exit 1
    Solver(String),
}

fn solver_err(e: kg_hdg::Error) -> Failure {
    use kg_hdg::Error::*;
    match e {
        InvalidConfig(_) | UnknownExample(_) | UnsupportedDegree(..) => Failure::Usage(e.to_string()),
        other => Failure::Solver(other.to_string()),
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let defaults = Defaults::load(cli.config.as_ref()).map_err(Failure::Usage)?;
    let threads = defaults
        .get_opt(cli.threads, "threads")
        .map_err(Failure::Usage)?
        .or_else(|| {
            std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.parse().ok())
        });
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        kg_hdg::par::set_threads(n);
    }
    let d = &defaults;
    match cli.cmd {
        Cmd::Convergence(a) => {
            let (table, fmt, out) = convergence(a, d).map_err(Failure::Usage)?;
            let table = table.map_err(solver_err)?;
            let text = match fmt {
                Format::Csv => table.to_csv(),
                Format::Md => table.to_markdown(),
            };
            emit(&text, out.as_ref()).map_err(Failure::Solver)
        }
        Cmd::Energy(a) => {
            let cfg = EnergyConfig {
                example: d.get(a.example, "example", 4).map_err(Failure::Usage)?,
                k: d.get(a.k, "k", 1).map_err(Failure::Usage)?,
                m_range: {
                    let r = d.get(a.m, "m", Range(1, 4)).map_err(Failure::Usage)?;
                    (r.0, r.1)
                },
                tau: d.get(a.tau, "tau", 1.0).map_err(Failure::Usage)?,
                dt: d.get(a.dt, "dt", 0.1).map_err(Failure::Usage)?,
                final_time: d.get(a.final_time, "T", 1.0).map_err(Failure::Usage)?,
                newton_tolerance: d
                    .get(a.newton_tol, "newton-tol", 1e-12)
                    .map_err(Failure::Usage)?,
                mode: ExecMode::Parallel,
            };
            let fmt = d.get(a.format, "format", Format::Csv).map_err(Failure::Usage)?;
            let out = d.get_opt(a.out, "out").map_err(Failure::Usage)?;
            let table = run_energy(&cfg).map_err(solver_err)?;
            let text = match fmt {
                Format::Csv => table.to_csv(),
                Format::Md => table.to_markdown(),
            };
            emit(&text, out.as_ref()).map_err(Failure::Solver)
        }
        Cmd::Single(a) => {
            let cfg = ConvergenceConfig {
                example: d.get(a.example, "example", 1).map_err(Failure::Usage)?,
                k: d.get(a.k, "k", 1).map_err(Failure::Usage)?,
                m_range: (1, 1),
                method: d
                    .get(a.scheme, "scheme", Scheme::Conservative)
                    .map_err(Failure::Usage)?
                    .method(),
                tau: d.get(a.tau, "tau", 1.0).map_err(Failure::Usage)?,
                dt_override: d.get_opt(a.dt, "dt").map_err(Failure::Usage)?,
                final_time: d.get(a.final_time, "T", 1.0).map_err(Failure::Usage)?,
                newton_tolerance: d
                    .get(a.newton_tol, "newton-tol", 1e-12)
                    .map_err(Failure::Usage)?,
                mode: ExecMode::Parallel,
            };
            let m = d.get(a.m, "m", 1).map_err(Failure::Usage)?;
            let out = d.get_opt(a.out, "out").map_err(Failure::Usage)?;
            let (eu, eq, es) = run_single(&cfg, m).map_err(solver_err)?;
            let mut text = String::from("k,m,err_u,err_q,err_ustar\n");
            let _ = writeln!(text, "{},{},{eu:.6e},{eq:.6e},{es:.6e}", cfg.k, m);
            emit(&text, out.as_ref()).map_err(Failure::Solver)
        }
    }
}

type ConvOut = (Result<EOCTable, kg_hdg::Error>, Format, Option<PathBuf>);

fn convergence(a: ConvergenceArgs, d: &Defaults) -> Result<ConvOut, String> {
    let k_range = d.get(a.k, "k", Range(1, 1))?;
    let base = ConvergenceConfig {
        example: d.get(a.example, "example", 1)?,
        k: 0,
        m_range: {
            let r = d.get(a.m, "m", Range(1, 4))?;
            (r.0, r.1)
        },
        method: d.get(a.scheme, "scheme", Scheme::Conservative)?.method(),
        tau: d.get(a.tau, "tau", 1.0)?,
        dt_override: d.get_opt(a.dt, "dt")?,
        final_time: d.get(a.final_time, "T", 1.0)?,
        newton_tolerance: d.get(a.newton_tol, "newton-tol", 1e-12)?,
        mode: ExecMode::Parallel,
    };
    let fmt = d.get(a.format, "format", Format::Csv)?;
    let out = d.get_opt(a.out, "out")?;
    let run = move || {
        let mut table = EOCTable::default();
        for k in k_range.0..=k_range.1 {
            let cfg = ConvergenceConfig {
                k: k as usize,
                ..base.clone()
            };
            table.rows.extend(run_convergence(&cfg)?.rows);
        }
        Ok(table)
    };
    Ok((run(), fmt, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
