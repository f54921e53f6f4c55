//! Command runners behind the `wavefem` binary.

use std::fmt::Write as _;
use std::io::Write as _;

use crate::config::{Command, OutputFormat, StudyConfig};
use crate::error::{FemError, Result};
use crate::mesh::build_structured_mesh;
use crate::stability::stability_sweep;
use crate::system::SpaceTimeSystem;
use crate::temporal::TimePartition;
use crate::verification::{compute_errors, level_resolution, run_cfl_sweep, run_convergence_study, CaseName, ManufacturedCase};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

/// Default sweep grid of a case: cells per side and time element counts.
pub fn default_grid(case: CaseName) -> (Vec<usize>, Vec<usize>) {
    match case {
        CaseName::A1 => (vec![2, 4, 8], vec![2, 4, 8, 16]),
        CaseName::A2 => (vec![4, 8, 16], vec![5, 10, 20, 40, 80]),
        CaseName::A3 => (vec![4, 8, 16], vec![8, 16, 32, 64, 128]),
    }
}

pub fn manufactured_case(cfg: &StudyConfig) -> ManufacturedCase {
    let mut case = ManufacturedCase::new(cfg.case);
    if let Some(t) = cfg.end_time {
        case = case.with_end_time(t);
    }
    if let Some(s) = cfg.sigma {
        case = case.with_sigma(s);
    }
    case
}

pub fn cmd_convergence(cfg: &StudyConfig) -> Result<String> {
    let case = manufactured_case(cfg);
    let table = run_convergence_study(&case, &cfg.levels, |l| level_resolution(&case, l, cfg.ratio), cfg.solver)?;
    Ok(match cfg.format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Markdown => table.to_markdown(),
    })
}

pub fn cmd_cfl_sweep(cfg: &StudyConfig) -> Result<String> {
    let case = manufactured_case(cfg);
    let sweep = run_cfl_sweep(&case, &cfg.n_per_side, &cfg.n_time, cfg.solver)?;
    Ok(match cfg.format {
        OutputFormat::Csv => format!("# L2(Q)\n{}# H^(curl;1)(Q)\n{}", sweep.l2_csv(), sweep.seminorm_csv()),
        OutputFormat::Markdown => sweep.to_markdown(),
    })
}

pub fn cmd_stability_sweep(cfg: &StudyConfig) -> Result<String> {
    Ok(stability_sweep(cfg.q_min, cfg.q_max, cfg.q_step)?.to_csv())
}

/// Solves on the first spatial and temporal resolution. CSV output lists the
/// nodal coefficients, markdown a short error summary.
pub fn cmd_solve(cfg: &StudyConfig) -> Result<String> {
    let case = manufactured_case(cfg);
    let (n, m) = (cfg.n_per_side[0], cfg.n_time[0]);
    let mesh = build_structured_mesh(case.domain(), n)?;
    let problem = case.problem(mesh, TimePartition::equidistant(case.end_time, m)?);
    let system = SpaceTimeSystem::assemble(&problem)?;
    let sol = system.solve_with(cfg.solver)?;
    Ok(match cfg.format {
        OutputFormat::Csv => sol.to_csv(),
        OutputFormat::Markdown => {
            let err = compute_errors(&sol, &problem.mesh, &problem.material, &case)?;
            let mut s =
                String::from("| case | n | N_t | dofs | residual | L2(Q) error | H^{curl;1} error |\n|---|---|---|---|---|---|---|\n");
            let _ = writeln!(
                s,
                "| {} | {n} | {m} | {} | {:.3e} | {:.5e} | {:.5e} |",
                case.name,
                system.n_dofs(),
                sol.residual,
                err.l2,
                err.seminorm
            );
            s
        }
    })
}

pub fn execute(cfg: &StudyConfig) -> Result<String> {
    match cfg.command {
        Command::Convergence => cmd_convergence(cfg),
        Command::CflSweep => cmd_cfl_sweep(cfg),
        Command::StabilitySweep => cmd_stability_sweep(cfg),
        Command::Solve => cmd_solve(cfg),
    }
}

/// Validates, runs and writes the output; returns the process exit code.
pub fn run(cfg: &StudyConfig) -> i32 {
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let output = match execute(cfg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SOLVER;
        }
    };
    let written = match &cfg.out {
        Some(path) => write_file(path, &output),
        None => std::io::stdout().write_all(output.as_bytes()).map_err(FemError::from),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn write_file(path: &std::path::Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_sweep_shapes() {
        let mut c = StudyConfig::new(Command::StabilitySweep, CaseName::A1);
        c.q_step = 50.0;
        let out = execute(&c).unwrap();
        assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 4);
        c.q_min = 5.0;
        c.q_max = 1.0;
        assert_eq!(execute(&c).unwrap().lines().count(), 1);
    }

    #[test]
    fn exit_codes() {
        let mut c = StudyConfig::new(Command::Convergence, CaseName::A1);
        c.levels.clear();
        assert_eq!(run(&c), EXIT_CONFIG);
        let mut s = StudyConfig::new(Command::Solve, CaseName::A1);
        s.n_per_side = vec![2];
        s.n_time = vec![2];
        s.end_time = Some(f64::INFINITY);
        assert_eq!(run(&s), EXIT_CONFIG);
    }

    #[test]
    fn single_cell_sweep() {
        let mut c = StudyConfig::new(Command::CflSweep, CaseName::A1);
        c.n_per_side = vec![2];
        c.n_time = vec![2];
        let out = execute(&c).unwrap();
        assert_eq!(out.lines().count(), 6);
    }
}
