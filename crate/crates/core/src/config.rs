//! Study configuration and its `key = value` text form.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{FemError, Result};
use crate::system::SolverKind;
use crate::verification::CaseName;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Convergence,
    CflSweep,
    StabilitySweep,
    Solve,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Convergence => "convergence",
            Command::CflSweep => "cfl-sweep",
            Command::StabilitySweep => "stability-sweep",
            Command::Solve => "solve",
        }
    }
}

impl FromStr for Command {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "convergence" => Ok(Command::Convergence),
            "cfl-sweep" => Ok(Command::CflSweep),
            "stability-sweep" => Ok(Command::StabilitySweep),
            "solve" => Ok(Command::Solve),
            other => Err(FemError::Parse(format!("unknown command '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "md" | "markdown" => Ok(OutputFormat::Markdown),
            other => Err(FemError::Parse(format!("unknown format '{other}' (expected csv or md)"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Markdown => "md",
        })
    }
}

fn solver_name(s: SolverKind) -> &'static str {
    match s {
        SolverKind::TimeMarching => "marching",
        SolverKind::GlobalLu => "lu",
    }
}

pub fn parse_solver(s: &str) -> Result<SolverKind> {
    match s.trim() {
        "marching" => Ok(SolverKind::TimeMarching),
        "lu" => Ok(SolverKind::GlobalLu),
        other => Err(FemError::Parse(format!("unknown solver '{other}' (expected marching or lu)"))),
    }
}

/// Everything a study needs. Spatial resolutions are cells per side of the
/// unit square, temporal ones are numbers of time elements.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub command: Command,
    pub case: CaseName,
    pub levels: Vec<u32>,
    /// `None` selects the case default
    pub end_time: Option<f64>,
    /// `h_t / h_x` for convergence studies (leg length `h_x`)
    pub ratio: f64,
    pub n_per_side: Vec<usize>,
    pub n_time: Vec<usize>,
    /// `None` selects the case default
    pub sigma: Option<bool>,
    pub q_min: f64,
    pub q_max: f64,
    pub q_step: f64,
    pub solver: SolverKind,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl StudyConfig {
    pub fn new(command: Command, case: CaseName) -> Self {
        StudyConfig {
            command,
            case,
            levels: vec![1, 2, 3, 4],
            end_time: None,
            ratio: 1.0,
            n_per_side: Vec::new(),
            n_time: Vec::new(),
            sigma: None,
            q_min: 0.0,
            q_max: 100.0,
            q_step: 0.1,
            solver: SolverKind::default(),
            format: OutputFormat::default(),
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(FemError::InvalidArgument(m.to_string()));
        match self.command {
            Command::Convergence if self.levels.is_empty() => return bad("empty level list"),
            Command::Convergence if !(self.ratio > 0.0) => return bad("ratio must be positive"),
            Command::CflSweep | Command::Solve if self.n_per_side.is_empty() || self.n_time.is_empty() => {
                return bad("spatial and temporal resolutions required")
            }
            Command::StabilitySweep if !(self.q_step > 0.0) => return bad("q step must be positive"),
            _ => {}
        }
        if self.n_per_side.contains(&0) || self.n_time.contains(&0) {
            return bad("resolutions must be positive");
        }
        if let Some(t) = self.end_time {
            if !(t > 0.0) || !t.is_finite() {
                return bad("end time must be positive");
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut lines = vec![
            format!("command = {}", self.command.as_str()),
            format!("case = {}", self.case),
            format!("levels = {}", join(self.levels.iter().map(u32::to_string).collect())),
            format!("ratio = {:?}", self.ratio),
            format!("n_per_side = {}", join(self.n_per_side.iter().map(usize::to_string).collect())),
            format!("n_time = {}", join(self.n_time.iter().map(usize::to_string).collect())),
            format!("q_min = {:?}", self.q_min),
            format!("q_max = {:?}", self.q_max),
            format!("q_step = {:?}", self.q_step),
            format!("solver = {}", solver_name(self.solver)),
            format!("format = {}", self.format),
        ];
        if let Some(t) = self.end_time {
            lines.push(format!("end_time = {t:?}"));
        }
        if let Some(s) = self.sigma {
            lines.push(format!("sigma = {}", if s { "on" } else { "off" }));
        }
        if let Some(p) = &self.out {
            lines.push(format!("out = {}", p.display()));
        }
        lines.join("\n") + "\n"
    }

    /// Parses `key = value` lines; `#` starts a comment. `command` and `case`
    /// are required, everything else falls back to the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| FemError::Parse(format!("line {}: expected key = value", no + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let command: Command = get("command").ok_or_else(|| FemError::Parse("missing command".into()))?.parse()?;
        let case: CaseName = get("case").ok_or_else(|| FemError::Parse("missing case".into()))?.parse()?;
        let mut cfg = StudyConfig::new(command, case);
        for (k, v) in &pairs {
            match k.as_str() {
                "command" | "case" => {}
                "levels" => cfg.levels = parse_list(v)?,
                "ratio" => cfg.ratio = parse_num(v)?,
                "n_per_side" => cfg.n_per_side = parse_list(v)?,
                "n_time" => cfg.n_time = parse_list(v)?,
                "q_min" => cfg.q_min = parse_num(v)?,
                "q_max" => cfg.q_max = parse_num(v)?,
                "q_step" => cfg.q_step = parse_num(v)?,
                "solver" => cfg.solver = parse_solver(v)?,
                "format" => cfg.format = v.parse()?,
                "end_time" => cfg.end_time = Some(parse_num(v)?),
                "sigma" => cfg.sigma = Some(parse_switch(v)?),
                "out" => cfg.out = Some(PathBuf::from(v)),
                other => return Err(FemError::Parse(format!("unknown key '{other}'"))),
            }
        }
        Ok(cfg)
    }
}

pub fn parse_num<T: FromStr>(v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| FemError::Parse(format!("invalid number '{v}'")))
}

pub fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse_num).collect()
}

pub fn parse_switch(v: &str) -> Result<bool> {
    match v.trim() {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(FemError::Parse(format!("expected on or off, got '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = StudyConfig::new(Command::CflSweep, CaseName::A2);
        c.n_per_side = vec![4, 8];
        c.n_time = vec![5, 10, 20];
        c.end_time = Some(10.4f64.sqrt());
        c.sigma = Some(false);
        c.format = OutputFormat::Markdown;
        c.solver = SolverKind::GlobalLu;
        c.out = Some(PathBuf::from("out/table.md"));
        assert_eq!(StudyConfig::from_text(&c.to_text()).unwrap(), c);
        let d = StudyConfig::new(Command::Convergence, CaseName::A1);
        assert_eq!(StudyConfig::from_text(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn comments_and_errors() {
        let c = StudyConfig::from_text("# study\ncommand = convergence\ncase = a3 # diamond\nlevels = 1, 2\n").unwrap();
        assert_eq!(c.levels, vec![1, 2]);
        assert_eq!(c.case, CaseName::A3);
        assert!(StudyConfig::from_text("case = A1").is_err());
        assert!(StudyConfig::from_text("command = solve\ncase = A9").is_err());
        assert!(StudyConfig::from_text("command = solve\ncase = A1\nbogus = 1").is_err());
        assert!(StudyConfig::from_text("command = solve\ncase = A1\nlevels = x").is_err());
    }

    #[test]
    fn validation() {
        let mut c = StudyConfig::new(Command::Convergence, CaseName::A1);
        assert!(c.validate().is_ok());
        c.levels.clear();
        assert!(c.validate().is_err());
        let mut s = StudyConfig::new(Command::StabilitySweep, CaseName::A1);
        s.q_step = 0.0;
        assert!(s.validate().is_err());
        assert!(StudyConfig::new(Command::CflSweep, CaseName::A2).validate().is_err());
    }
}
