//! Manufactured solutions, space-time error norms and study drivers.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{FemError, Result};
use crate::mesh::{build_structured_mesh, mesh_metrics, Point, Rectangle, TriMesh};
use crate::quadrature::{gauss_legendre_unit, BaryPoint, TriangleRule};
use crate::spatial::{diamond_region, ElementGeometry, MaterialModel};
use crate::system::{ProblemData, SolutionCoefficients, SolverKind, SpaceTimeSystem};
use crate::temporal::{quadratic_reference, TimePartition};

/// Names of the built-in manufactured solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseName {
    /// `t³ p(x) (x₂, −x₁)`, `σ = 0`
    A1,
    /// quadratic-plus-cubic field with a `sin(π x₁)` factor, `σ = 0`
    A2,
    /// `t² p(x) (x₂, −x₁)` with `σ = 1` on a diamond
    A3,
}

impl CaseName {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::A1 => "A1",
            CaseName::A2 => "A2",
            CaseName::A3 => "A3",
        }
    }
}

impl std::fmt::Display for CaseName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseName {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A1" => Ok(CaseName::A1),
            "A2" => Ok(CaseName::A2),
            "A3" => Ok(CaseName::A3),
            other => Err(FemError::InvalidArgument(format!("unknown case '{other}' (expected A1, A2 or A3)"))),
        }
    }
}

/// Conductivity region of the `A3` case.
pub const A3_DIAMOND_CENTER: Point = [0.5, 0.5];
pub const A3_DIAMOND_RADIUS: f64 = 0.15;

/// `x₁(1−x₁)x₂(1−x₂)`
fn bubble(x: Point) -> f64 {
    x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])
}

/// `p (x₂, −x₁)` and its scalar curl and vector curl-curl.
fn swirl(x: Point) -> (Point, f64, Point) {
    let (a, b) = (x[0], x[1]);
    let p = bubble(x);
    let curl = -6.0 * a * a * b * b + 5.0 * a * a * b + 5.0 * a * b * b - 4.0 * a * b;
    let cc = [-a * (12.0 * a * b - 5.0 * a - 10.0 * b + 4.0), b * (12.0 * a * b - 10.0 * a - 5.0 * b + 4.0)];
    ([p * b, -p * a], curl, cc)
}

/// A manufactured solution on `(0, T) × (0, 1)²` with `ε = I`, `μ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub name: CaseName,
    pub end_time: f64,
    /// `σ = 1` on the diamond, `σ = 0` elsewhere; otherwise `σ ≡ 0`
    pub conductive: bool,
}

impl ManufacturedCase {
    /// Case with its default end time (`T = 2`, or `√10.4` for `A2`).
    pub fn new(name: CaseName) -> Self {
        let end_time = if name == CaseName::A2 { 10.4f64.sqrt() } else { 2.0 };
        ManufacturedCase { name, end_time, conductive: name == CaseName::A3 }
    }

    /// Switches the diamond conductivity on or off; the source follows.
    pub fn with_sigma(mut self, conductive: bool) -> Self {
        self.conductive = conductive;
        self
    }

    pub fn with_end_time(mut self, end_time: f64) -> Self {
        self.end_time = end_time;
        self
    }

    pub fn domain(&self) -> Rectangle {
        Rectangle::UNIT
    }

    pub fn material(&self) -> MaterialModel {
        if self.conductive {
            MaterialModel::vacuum().with_sigma_region(1.0, diamond_region(A3_DIAMOND_CENTER, A3_DIAMOND_RADIUS))
        } else {
            MaterialModel::vacuum()
        }
    }

    pub fn sigma(&self, x: Point) -> f64 {
        if self.conductive && diamond_region(A3_DIAMOND_CENTER, A3_DIAMOND_RADIUS)(x) {
            1.0
        } else {
            0.0
        }
    }

    pub fn exact(&self, t: f64, x: Point) -> Point {
        match self.name {
            CaseName::A1 => scale(t.powi(3), swirl(x).0),
            CaseName::A3 => scale(t * t, swirl(x).0),
            CaseName::A2 => {
                let q = x[1] * (1.0 - x[1]);
                [-5.0 * t * t * q + t.powi(3) * (PI * x[0]).sin() * q, t * t * x[0] * (1.0 - x[0])]
            }
        }
    }

    pub fn exact_dt(&self, t: f64, x: Point) -> Point {
        match self.name {
            CaseName::A1 => scale(3.0 * t * t, swirl(x).0),
            CaseName::A3 => scale(2.0 * t, swirl(x).0),
            CaseName::A2 => {
                let q = x[1] * (1.0 - x[1]);
                [-10.0 * t * q + 3.0 * t * t * (PI * x[0]).sin() * q, 2.0 * t * x[0] * (1.0 - x[0])]
            }
        }
    }

    pub fn exact_curl(&self, t: f64, x: Point) -> f64 {
        match self.name {
            CaseName::A1 => t.powi(3) * swirl(x).1,
            CaseName::A3 => t * t * swirl(x).1,
            CaseName::A2 => {
                t * t * (1.0 - 2.0 * x[0]) + 5.0 * t * t * (1.0 - 2.0 * x[1]) - t.powi(3) * (PI * x[0]).sin() * (1.0 - 2.0 * x[1])
            }
        }
    }

    /// `j = ∂ₜₜA + σ ∂ₜA + curl curl A`.
    pub fn source(&self, t: f64, x: Point) -> Point {
        let sigma = self.sigma(x);
        let damping = if sigma == 0.0 { [0.0; 2] } else { scale(sigma, self.exact_dt(t, x)) };
        add(self.undamped_source(t, x), damping)
    }

    fn undamped_source(&self, t: f64, x: Point) -> Point {
        match self.name {
            CaseName::A1 => {
                let (f, _, cc) = swirl(x);
                add(scale(6.0 * t, f), scale(t.powi(3), cc))
            }
            CaseName::A3 => {
                let (f, _, cc) = swirl(x);
                add(scale(2.0, f), scale(t * t, cc))
            }
            CaseName::A2 => {
                let s = (PI * x[0]).sin();
                let c = (PI * x[0]).cos();
                [
                    -10.0 * (t * t - x[1] * x[1] + x[1]) + 2.0 * t.powi(3) * s + 6.0 * t * s * x[1] * (1.0 - x[1]),
                    2.0 * (t * t - x[0] * x[0] + x[0]) + PI * t.powi(3) * (1.0 - 2.0 * x[1]) * c,
                ]
            }
        }
    }

    /// Problem on the given mesh and partition with this case's data.
    pub fn problem(&self, mesh: TriMesh, partition: TimePartition) -> ProblemData {
        let case = *self;
        ProblemData::new(mesh, partition, self.material()).with_source(move |t, x| case.source(t, x))
    }
}

fn scale(s: f64, v: Point) -> Point {
    [s * v[0], s * v[1]]
}

fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

/// Exact fields for error integration.
pub trait ExactField: Sync {
    fn value(&self, t: f64, x: Point) -> Point;
    fn time_derivative(&self, t: f64, x: Point) -> Point;
    fn curl(&self, t: f64, x: Point) -> f64;
}

impl ExactField for ManufacturedCase {
    fn value(&self, t: f64, x: Point) -> Point {
        self.exact(t, x)
    }

    fn time_derivative(&self, t: f64, x: Point) -> Point {
        self.exact_dt(t, x)
    }

    fn curl(&self, t: f64, x: Point) -> f64 {
        self.exact_curl(t, x)
    }
}

/// `‖A − A_h‖_{L²(Q)}` and the `H^{curl;1}(Q)` seminorm of the error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub seminorm: f64,
}

/// Both error norms with Gauss-4 per time element and the degree-4 triangle
/// rule; `ε` and `μ⁻¹` weight the seminorm.
pub fn compute_errors(sol: &SolutionCoefficients, mesh: &TriMesh, material: &MaterialModel, exact: &dyn ExactField) -> Result<ErrorNorms> {
    let partition = &sol.partition;
    let time_rule = gauss_legendre_unit(4);
    let space_rule = TriangleRule::Degree4.points();
    let geos: Vec<ElementGeometry> =
        (0..mesh.n_triangles()).map(|t| ElementGeometry::new(mesh.triangle_points(t))).collect::<Result<_>>()?;
    let n_edges = mesh.n_edges();
    let parts: Vec<[f64; 3]> = (0..partition.n_elements())
        .into_par_iter()
        .map(|el| {
            let (a, b) = partition.element(el);
            let h = b - a;
            let mut acc = [0.0; 3];
            let mut u = vec![0.0; n_edges];
            let mut du = vec![0.0; n_edges];
            for &(s, wt) in &time_rule {
                let t = a + s * h;
                let (phi, dphi) = quadratic_reference(s);
                for e in 0..n_edges {
                    let mut v = 0.0;
                    let mut d = 0.0;
                    for k in 0..3 {
                        let c = sol.nodal[2 * el + k][e];
                        v += phi[k] * c;
                        d += dphi[k] * c / h;
                    }
                    u[e] = v;
                    du[e] = d;
                }
                for (tri, geo) in geos.iter().enumerate() {
                    let edges = mesh.triangle_edges(tri);
                    let signs = mesh.triangle_edge_signs(tri);
                    let cu: [f64; 3] = std::array::from_fn(|k| signs[k] * u[edges[k]]);
                    let cd: [f64; 3] = std::array::from_fn(|k| signs[k] * du[edges[k]]);
                    let curl_h = (cu[0] + cu[1] + cu[2]) * geo.whitney_curl();
                    for BaryPoint { bary, weight } in &space_rule {
                        let x = geo.point_at(*bary);
                        let w = geo.whitney(*bary);
                        let mut vh = [0.0; 2];
                        let mut dh = [0.0; 2];
                        for k in 0..3 {
                            for d in 0..2 {
                                vh[d] += cu[k] * w[k][d];
                                dh[d] += cd[k] * w[k][d];
                            }
                        }
                        let ev = exact.value(t, x);
                        let ed = exact.time_derivative(t, x);
                        let err_v = [ev[0] - vh[0], ev[1] - vh[1]];
                        let err_d = [ed[0] - dh[0], ed[1] - dh[1]];
                        let eps = material.epsilon(x);
                        let eps_d = [eps[0][0] * err_d[0] + eps[0][1] * err_d[1], eps[1][0] * err_d[0] + eps[1][1] * err_d[1]];
                        let err_c = exact.curl(t, x) - curl_h;
                        let wgt = wt * h * weight * geo.area;
                        acc[0] += wgt * (err_v[0] * err_v[0] + err_v[1] * err_v[1]);
                        acc[1] += wgt * (eps_d[0] * err_d[0] + eps_d[1] * err_d[1]);
                        acc[2] += wgt * material.mu_inverse(x) * err_c * err_c;
                    }
                }
            }
            acc
        })
        .collect();
    let tot = parts.iter().fold([0.0; 3], |m, p| [m[0] + p[0], m[1] + p[1], m[2] + p[2]]);
    Ok(ErrorNorms { l2: tot[0].max(0.0).sqrt(), seminorm: (tot[1] + tot[2]).max(0.0).sqrt() })
}

/// `‖A − A_h‖_{L²(Q)}` for a manufactured case.
pub fn error_l2q(sol: &SolutionCoefficients, mesh: &TriMesh, case: &ManufacturedCase) -> Result<f64> {
    Ok(compute_errors(sol, mesh, &case.material(), case)?.l2)
}

/// `H^{curl;1}(Q)` error seminorm for a manufactured case.
pub fn error_seminorm(sol: &SolutionCoefficients, mesh: &TriMesh, case: &ManufacturedCase) -> Result<f64> {
    Ok(compute_errors(sol, mesh, &case.material(), case)?.seminorm)
}

/// One solve of a manufactured case on an `n × n` grid with `n_time`
/// equidistant time elements.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub n_per_side: usize,
    pub n_time: usize,
    /// `√(area)` of the (congruent) elements
    pub h_x: f64,
    pub h_t: f64,
    pub n_dofs: usize,
    pub errors: ErrorNorms,
    pub residual: f64,
}

pub fn run_case(case: &ManufacturedCase, n_per_side: usize, n_time: usize, solver: SolverKind) -> Result<RunResult> {
    let mesh = build_structured_mesh(case.domain(), n_per_side)?;
    let partition = TimePartition::equidistant(case.end_time, n_time)?;
    let problem = case.problem(mesh, partition);
    let system = SpaceTimeSystem::assemble(&problem)?;
    let sol = system.solve_with(solver)?;
    let errors = compute_errors(&sol, &problem.mesh, &problem.material, case)?;
    Ok(RunResult {
        n_per_side,
        n_time,
        h_x: mesh_metrics(&problem.mesh).h_max,
        h_t: case.end_time / n_time as f64,
        n_dofs: system.n_dofs(),
        errors,
        residual: sol.residual,
    })
}

/// Pairs a spatial resolution with a temporal one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub n_per_side: usize,
    pub n_time: usize,
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub run: RunResult,
    pub eoc_l2: Option<f64>,
    pub eoc_semi: Option<f64>,
    pub unstable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub case: CaseName,
    pub rows: Vec<ConvergenceRow>,
}

/// Errors above this value mark a blown-up run.
pub const BLOWUP_THRESHOLD: f64 = 1e3;

/// `(ln e_prev − ln e_cur) / ln 2`
pub fn eoc(prev: f64, cur: f64) -> f64 {
    (prev.ln() - cur.ln()) / std::f64::consts::LN_2
}

/// The leg-length rule: level `L` uses `2^L` cells per side and time step
/// `ratio · 2^{−L}`.
pub fn level_resolution(case: &ManufacturedCase, level: u32, ratio: f64) -> Result<Resolution> {
    let n_per_side = 1usize.checked_shl(level).ok_or_else(|| FemError::Capacity(format!("level {level}")))?;
    let h_t = ratio / n_per_side as f64;
    let n_time = (case.end_time / h_t).round().max(1.0) as usize;
    Ok(Resolution { n_per_side, n_time })
}

pub fn run_convergence_study(
    case: &ManufacturedCase,
    levels: &[u32],
    resolution: impl Fn(u32) -> Result<Resolution> + Sync,
    solver: SolverKind,
) -> Result<ConvergenceTable> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for &level in levels {
        let res = resolution(level)?;
        let run = run_case(case, res.n_per_side, res.n_time, solver)?;
        let unstable = !(run.errors.l2 <= BLOWUP_THRESHOLD);
        let (eoc_l2, eoc_semi) = match rows.last() {
            Some(prev) => (Some(eoc(prev.run.errors.l2, run.errors.l2)), Some(eoc(prev.run.errors.seminorm, run.errors.seminorm))),
            None => (None, None),
        };
        rows.push(ConvergenceRow { level, run, eoc_l2, eoc_semi, unstable });
    }
    Ok(ConvergenceTable { case: case.name, rows })
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h_x,h_t,n_dofs,err_l2,eoc_l2,err_semi,eoc_semi,unstable\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.4},{:.4},{},{:.5e},{},{:.5e},{},{}",
                r.level,
                r.run.h_x,
                r.run.h_t,
                r.run.n_dofs,
                r.run.errors.l2,
                opt(r.eoc_l2),
                r.run.errors.seminorm,
                opt(r.eoc_semi),
                r.unstable
            );
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| L | h_x | h_t | #fdofs | L2(Q) error | EOC | H^{curl;1} error | EOC |\n");
        s.push_str("|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "| {} | {:.4} | {:.4} | {} | {:.5e} | {} | {:.5e} | {} |",
                r.level,
                r.run.h_x,
                r.run.h_t,
                r.run.n_dofs,
                r.run.errors.l2,
                opt_or_dash(r.eoc_l2),
                r.run.errors.seminorm,
                opt_or_dash(r.eoc_semi)
            );
        }
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

fn opt_or_dash(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
}

/// Grid of runs over spatial and temporal resolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct CflSweep {
    pub case: CaseName,
    pub end_time: f64,
    pub n_per_side: Vec<usize>,
    pub n_time: Vec<usize>,
    /// `cells[i][j]` for spatial index `i`, temporal index `j`
    pub cells: Vec<Vec<RunResult>>,
}

pub fn run_cfl_sweep(case: &ManufacturedCase, n_per_side: &[usize], n_time: &[usize], solver: SolverKind) -> Result<CflSweep> {
    let pairs: Vec<(usize, usize)> = n_per_side.iter().flat_map(|&n| n_time.iter().map(move |&m| (n, m))).collect();
    let runs: Vec<RunResult> = pairs.par_iter().map(|&(n, m)| run_case(case, n, m, solver)).collect::<Result<_>>()?;
    let cells = runs.chunks(n_time.len().max(1)).map(|c| c.to_vec()).collect();
    Ok(CflSweep { case: case.name, end_time: case.end_time, n_per_side: n_per_side.to_vec(), n_time: n_time.to_vec(), cells })
}

impl CflSweep {
    fn grid(&self, seminorm: bool, md: bool) -> String {
        let pick = |r: &RunResult| if seminorm { r.errors.seminorm } else { r.errors.l2 };
        let mut s = String::new();
        let hts: Vec<String> = self.n_time.iter().map(|&m| format!("{:.4}", self.end_time / m as f64)).collect();
        if md {
            let _ = writeln!(s, "| h_x \\ h_t | {} |", hts.join(" | "));
            let _ = writeln!(s, "|---|{}", "---|".repeat(hts.len()));
        } else {
            let _ = writeln!(s, "h_x,{}", hts.join(","));
        }
        for row in &self.cells {
            let hx = row.first().map(|r| r.h_x).unwrap_or(0.0);
            let vals: Vec<String> = row.iter().map(|r| format!("{:.3e}", pick(r))).collect();
            if md {
                let _ = writeln!(s, "| {hx:.4} | {} |", vals.join(" | "));
            } else {
                let _ = writeln!(s, "{hx:.4},{}", vals.join(","));
            }
        }
        s
    }

    pub fn l2_csv(&self) -> String {
        self.grid(false, false)
    }

    pub fn seminorm_csv(&self) -> String {
        self.grid(true, false)
    }

    pub fn to_markdown(&self) -> String {
        format!("L2(Q) error\n\n{}\nH^{{curl;1}}(Q) error\n\n{}", self.grid(false, true), self.grid(true, true))
    }
}

/// Source residual `∂ₜₜA + σ∂ₜA + curl curl A − j` by fourth-order central
/// differences of step `h`.
pub fn source_residual(case: &ManufacturedCase, t: f64, x: Point, h: f64) -> f64 {
    fn d1(f: &dyn Fn(f64) -> f64, s: f64, h: f64) -> f64 {
        (-f(s + 2.0 * h) + 8.0 * f(s + h) - 8.0 * f(s - h) + f(s - 2.0 * h)) / (12.0 * h)
    }
    fn d2(f: &dyn Fn(f64) -> f64, s: f64, h: f64) -> f64 {
        (-f(s + 2.0 * h) + 16.0 * f(s + h) - 30.0 * f(s) + 16.0 * f(s - h) - f(s - 2.0 * h)) / (12.0 * h * h)
    }
    let mut r = [0.0; 2];
    for (d, rd) in r.iter_mut().enumerate() {
        let along_t = |s: f64| case.exact(s, x)[d];
        *rd = d2(&along_t, t, h) + case.sigma(x) * d1(&along_t, t, h);
    }
    // scalar curl w = ∂₁A₂ − ∂₂A₁, curl curl A = (∂₂w, −∂₁w)
    let w = |p: Point| {
        let a2 = |s: f64| case.exact(t, [s, p[1]])[1];
        let a1 = |s: f64| case.exact(t, [p[0], s])[0];
        d1(&a2, p[0], h) - d1(&a1, p[1], h)
    };
    r[0] += d1(&|s: f64| w([x[0], s]), x[1], h);
    r[1] -= d1(&|s: f64| w([s, x[1]]), x[0], h);
    let j = case.source(t, x);
    ((r[0] - j[0]).powi(2) + (r[1] - j[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_case_names() {
        assert_eq!("a2".parse::<CaseName>().unwrap(), CaseName::A2);
        assert!("B7".parse::<CaseName>().is_err());
    }

    #[test]
    fn exact_fields_are_consistent() {
        for name in [CaseName::A1, CaseName::A2, CaseName::A3] {
            let case = ManufacturedCase::new(name);
            let x = [0.3, 0.65];
            let t = 0.7;
            let h = 1e-5;
            let a = |t: f64, x: Point| case.exact(t, x);
            let dt = case.exact_dt(t, x);
            for d in 0..2 {
                let fd = (a(t + h, x)[d] - a(t - h, x)[d]) / (2.0 * h);
                assert!((fd - dt[d]).abs() < 1e-8, "{name} dt");
            }
            let curl = (a(t, [x[0] + h, x[1]])[1] - a(t, [x[0] - h, x[1]])[1]) / (2.0 * h)
                - (a(t, [x[0], x[1] + h])[0] - a(t, [x[0], x[1] - h])[0]) / (2.0 * h);
            assert!((curl - case.exact_curl(t, x)).abs() < 1e-8, "{name} curl");
            assert!(source_residual(&case, t, x, 1e-3) < 1e-6, "{name} source");
        }
    }

    #[test]
    fn homogeneous_initial_data_and_boundary_trace() {
        for name in [CaseName::A1, CaseName::A2, CaseName::A3] {
            let case = ManufacturedCase::new(name);
            assert_eq!(case.exact(0.0, [0.3, 0.4]), [0.0, 0.0]);
            assert_eq!(case.exact_dt(0.0, [0.3, 0.4]), [0.0, 0.0]);
            for s in [0.0, 0.25, 0.8] {
                // tangential components on the four sides
                assert!(case.exact(1.1, [s, 0.0])[0].abs() < 1e-15);
                assert!(case.exact(1.1, [s, 1.0])[0].abs() < 1e-15);
                assert!(case.exact(1.1, [0.0, s])[1].abs() < 1e-15);
                assert!(case.exact(1.1, [1.0, s])[1].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn eoc_of_halving_is_one() {
        assert!((eoc(0.2, 0.1) - 1.0).abs() < 1e-15);
        assert!((eoc(0.4, 0.1) - 2.0).abs() < 1e-15);
    }
}
