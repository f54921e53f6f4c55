use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wavefem::cli::{default_grid, manufactured_case, run, EXIT_CONFIG};
use wavefem::config::{parse_solver, parse_switch, Command, StudyConfig};
use wavefem::verification::CaseName;
use wavefem::Result;

/// Space-time finite elements for the damped vectorial wave equation.
#[derive(Parser, Debug)]
#[command(name = "wavefem", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Convergence table under uniform refinement
    Convergence(Common),
    /// Error grid over spatial and temporal step sizes
    CflSweep(Common),
    /// Eigenvalue verdicts of the two-step recursion over q = λ h_t²
    StabilitySweep(Common),
    /// Single solve; CSV prints the coefficients, md an error summary
    Solve(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// key = value file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// A1, A2 or A3
    #[arg(long)]
    case: Option<String>,
    /// comma-separated refinement levels (2^L cells per side)
    #[arg(long)]
    levels: Option<String>,
    /// final time
    #[arg(long = "T")]
    end_time: Option<f64>,
    /// comma-separated numbers of time elements
    #[arg(long)]
    nt: Option<String>,
    /// comma-separated spatial steps (leg length of the unit square cells)
    #[arg(long = "hx-list")]
    hx_list: Option<String>,
    /// comma-separated time steps
    #[arg(long = "ht-list")]
    ht_list: Option<String>,
    /// h_t / h_x for convergence studies
    #[arg(long)]
    ratio: Option<f64>,
    /// on or off: diamond conductivity
    #[arg(long)]
    sigma: Option<String>,
    /// marching or lu
    #[arg(long)]
    solver: Option<String>,
    #[arg(long = "q-min")]
    q_min: Option<f64>,
    #[arg(long = "q-max")]
    q_max: Option<f64>,
    #[arg(long = "q-step")]
    q_step: Option<f64>,
    /// output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or md
    #[arg(long)]
    format: Option<String>,
}

fn build_config(command: Command, a: Common) -> Result<StudyConfig> {
    use wavefem::config::parse_list;
    let mut cfg = match &a.config {
        Some(path) => {
            let mut c = StudyConfig::from_text(&std::fs::read_to_string(path)?)?;
            c.command = command;
            c
        }
        None => StudyConfig::new(command, CaseName::A1),
    };
    if let Some(c) = &a.case {
        cfg.case = c.parse()?;
    }
    if let Some(l) = &a.levels {
        cfg.levels = parse_list(l)?;
    }
    if let Some(t) = a.end_time {
        cfg.end_time = Some(t);
    }
    if let Some(r) = a.ratio {
        cfg.ratio = r;
    }
    if let Some(s) = &a.sigma {
        cfg.sigma = Some(parse_switch(s)?);
    }
    if let Some(s) = &a.solver {
        cfg.solver = parse_solver(s)?;
    }
    if let Some(f) = &a.format {
        cfg.format = f.parse()?;
    }
    if let Some(q) = a.q_min {
        cfg.q_min = q;
    }
    if let Some(q) = a.q_max {
        cfg.q_max = q;
    }
    if let Some(q) = a.q_step {
        cfg.q_step = q;
    }
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    if let Some(h) = &a.hx_list {
        let hs: Vec<f64> = parse_list(h)?;
        cfg.n_per_side = hs.iter().map(|&h| steps(1.0, h)).collect::<Result<_>>()?;
    }
    if let Some(n) = &a.nt {
        cfg.n_time = parse_list(n)?;
    }
    if let Some(h) = &a.ht_list {
        let end = manufactured_case(&cfg).end_time;
        let hs: Vec<f64> = parse_list(h)?;
        cfg.n_time = hs.iter().map(|&h| steps(end, h)).collect::<Result<_>>()?;
    }
    if matches!(command, Command::CflSweep | Command::Solve) {
        let (ns, ms) = default_grid(cfg.case);
        if cfg.n_per_side.is_empty() {
            cfg.n_per_side = ns;
        }
        if cfg.n_time.is_empty() {
            cfg.n_time = ms;
        }
    }
    Ok(cfg)
}

fn steps(length: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(wavefem::FemError::InvalidArgument(format!("step {h} must be positive")));
    }
    Ok((length / h).round().max(1.0) as usize)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (command, args) = match cli.command {
        Sub::Convergence(a) => (Command::Convergence, a),
        Sub::CflSweep(a) => (Command::CflSweep, a),
        Sub::StabilitySweep(a) => (Command::StabilitySweep, a),
        Sub::Solve(a) => (Command::Solve, a),
    };
    let code = match build_config(command, args) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    ExitCode::from(code as u8)
}
