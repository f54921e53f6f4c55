//! Stability of the quadratic Galerkin-Petrov time discretisation.
//!
//! For a single mode `c'' + λc = 0` on an equidistant partition, the nodal
//! values `z_k = (u_{2k−1}, u_{2k})` satisfy the two-step recursion
//! `A z_k = B₁ z_{k−1} + B₂ z_{k−2}`, whose coefficients depend only on
//! `q = λ h_t²`. The scheme is stable when the nonzero eigenvalues of the
//! companion matrix `A_sys` satisfy `|Re μ| ≤ 1`.

use std::fmt::Write as _;

use nalgebra::{Complex, DMatrix, Matrix2, Matrix4, SymmetricEigen};

use crate::error::{FemError, Result};
use crate::linalg::{LuFactorization, SparseMatrix};
use crate::mesh::TriMesh;

/// Tolerance on `max |Re μ| − 1` for a stable verdict.
pub const STABILITY_TOL: f64 = 1e-12;

/// Nominal thresholds on `q` quoted for the scheme.
pub const Q_BAND: (f64, f64) = (10.0, 12.0);
pub const Q_MAX: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStepMatrices {
    pub q: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub mat_a: Matrix2<f64>,
    pub mat_b1: Matrix2<f64>,
    pub mat_b2: Matrix2<f64>,
    pub a_sys: Matrix4<f64>,
}

impl TwoStepMatrices {
    pub fn new(q: f64) -> Result<Self> {
        if !q.is_finite() {
            return Err(FemError::InvalidArgument(format!("q = {q} must be finite")));
        }
        let a = 8.0 + q / 5.0;
        let b = -16.0 + 8.0 * q / 5.0;
        let c = -1.0 - q / 10.0;
        let d = 14.0 - 4.0 * q / 5.0;
        let det = a * a - b * c;
        if det.abs() <= 1e-14 * (a * a).max(1.0) {
            return Err(FemError::NumericallySingular(format!("a² − bc vanishes at q = {q}")));
        }
        let mat_a = Matrix2::new(a, c, b, a);
        let mat_b1 = Matrix2::new(-a, d, 0.0, -a);
        let mat_b2 = Matrix2::new(0.0, 1.0 + q / 10.0, 0.0, 0.0);
        let inv = mat_a.try_inverse().ok_or_else(|| FemError::NumericallySingular(format!("A singular at q = {q}")))?;
        let lower_left = inv * mat_b2;
        let lower_right = inv * mat_b1;
        let mut a_sys = Matrix4::zeros();
        a_sys[(0, 2)] = 1.0;
        a_sys[(1, 3)] = 1.0;
        for i in 0..2 {
            for j in 0..2 {
                a_sys[(2 + i, j)] = lower_left[(i, j)];
                a_sys[(2 + i, 2 + j)] = lower_right[(i, j)];
            }
        }
        Ok(TwoStepMatrices { q, a, b, c, d, mat_a, mat_b1, mat_b2, a_sys })
    }

    /// `(u₁, u₂) = A⁻¹ (7 − 2q/5, −8 − q/5) u₀`.
    pub fn initial_pair(&self, u0: f64) -> [f64; 2] {
        let rhs = nalgebra::Vector2::new(7.0 - 2.0 * self.q / 5.0, -8.0 - self.q / 5.0) * u0;
        let z = self.mat_a.lu().solve(&rhs).expect("A invertible by construction");
        [z[0], z[1]]
    }
}

/// The two nonzero eigenvalues of `A_sys` from the quadratic formula.
pub fn closed_form_eigenvalues(q: f64) -> Result<[Complex<f64>; 2]> {
    let m = TwoStepMatrices::new(q)?;
    let (a, b, c, d) = (m.a, m.b, m.c, m.d);
    let den = 2.0 * (a * a - b * c);
    let disc = Complex::new(b * (2.0 * c + d) * (4.0 * a * a - 2.0 * b * c + b * d), 0.0).sqrt();
    let mid = Complex::new(-2.0 * a * a - b * d, 0.0);
    Ok([(mid + disc) / den, (mid - disc) / den])
}

/// All four eigenvalues of the assembled `A_sys`.
pub fn numerical_eigenvalues(q: f64) -> Result<[Complex<f64>; 4]> {
    let m = TwoStepMatrices::new(q)?;
    let ev = m.a_sys.complex_eigenvalues();
    Ok([ev[0], ev[1], ev[2], ev[3]])
}

/// Stability rule applied to `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `q ≤ 60` and `q ∉ [10, 12]` (no damping)
    StrictNoBand,
    /// `q ≤ 60` (sufficient damping removes the band)
    Relaxed,
}

pub fn classify(q: f64, criterion: Criterion) -> bool {
    match criterion {
        Criterion::StrictNoBand => q <= Q_MAX && !(Q_BAND.0..=Q_BAND.1).contains(&q),
        Criterion::Relaxed => q <= Q_MAX,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub q: f64,
    pub eigenvalues: [Complex<f64>; 4],
    pub max_abs_re: f64,
    pub spectral_radius: f64,
    /// `max |Re μ| ≤ 1 + STABILITY_TOL` from the closed form
    pub eigen_stable: bool,
    pub strict: bool,
    pub relaxed: bool,
}

pub fn stability_report(q: f64) -> Result<StabilityReport> {
    let eigenvalues = numerical_eigenvalues(q)?;
    let roots = closed_form_eigenvalues(q)?;
    let max_abs_re = roots.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let spectral_radius = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(StabilityReport {
        q,
        eigenvalues,
        max_abs_re,
        spectral_radius,
        eigen_stable: max_abs_re <= 1.0 + STABILITY_TOL,
        strict: classify(q, Criterion::StrictNoBand),
        relaxed: classify(q, Criterion::Relaxed),
    })
}

/// Largest distance between the closed-form roots and the two largest
/// numerical eigenvalues, plus the size of the two smallest.
pub fn eigenvalue_discrepancy(q: f64) -> Result<(f64, f64)> {
    let mut num = numerical_eigenvalues(q)?.to_vec();
    num.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    let zeros = num[2].norm().max(num[3].norm());
    let cf = closed_form_eigenvalues(q)?;
    let direct = (num[0] - cf[0]).norm().max((num[1] - cf[1]).norm());
    let swapped = (num[0] - cf[1]).norm().max((num[1] - cf[0]).norm());
    Ok((direct.min(swapped), zeros))
}

/// Sweep summary: reports plus the measured unstable intervals of the
/// eigenvalue verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySweep {
    pub reports: Vec<StabilityReport>,
    /// `(first unstable q, last unstable q)` of each contiguous run
    pub unstable_runs: Vec<(f64, f64)>,
}

/// `q = q_min + i·step` for `i = 0, 1, …` while `q ≤ q_max`.
pub fn stability_sweep(q_min: f64, q_max: f64, step: f64) -> Result<StabilitySweep> {
    if !(step > 0.0) {
        return Err(FemError::InvalidArgument(format!("step {step} must be positive")));
    }
    let mut reports = Vec::new();
    let mut i = 0usize;
    loop {
        let q = q_min + i as f64 * step;
        if q > q_max + 1e-9 * step {
            break;
        }
        // snap to 1e-9 so decimal grids hit 10, 12 and 60 exactly
        let q = (q * 1e9).round() / 1e9;
        reports.push(stability_report(q)?);
        i += 1;
    }
    let mut unstable_runs = Vec::new();
    let mut start: Option<f64> = None;
    let mut last = 0.0;
    for r in &reports {
        match (r.eigen_stable, start) {
            (false, None) => start = Some(r.q),
            (true, Some(s)) => {
                unstable_runs.push((s, last));
                start = None;
            }
            _ => {}
        }
        last = r.q;
    }
    if let Some(s) = start {
        unstable_runs.push((s, last));
    }
    Ok(StabilitySweep { reports, unstable_runs })
}

impl StabilitySweep {
    /// `q,re_max,abs_max,verdict_strict,verdict_relaxed` rows followed by a
    /// `#` summary line of measured unstable intervals.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("q,re_max,abs_max,verdict_strict,verdict_relaxed,verdict_eigen\n");
        let verdict = |b: bool| if b { "stable" } else { "unstable" };
        for r in &self.reports {
            let _ = writeln!(
                s,
                "{:.6},{:.12},{:.12},{},{},{}",
                r.q,
                r.max_abs_re,
                r.spectral_radius,
                verdict(r.strict),
                verdict(r.relaxed),
                verdict(r.eigen_stable)
            );
        }
        if !self.reports.is_empty() {
            let runs: Vec<String> = self.unstable_runs.iter().map(|(a, b)| format!("[{a:.6},{b:.6}]")).collect();
            let _ = writeln!(s, "# measured unstable q intervals: {}", if runs.is_empty() { "none".into() } else { runs.join(" ") });
        }
        s
    }
}

/// Result of iterating `Y_k = A_sys Y_{k−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionTrajectory {
    /// nodal values `u_1, u_2, …`
    pub values: Vec<f64>,
    pub norms: Vec<f64>,
    pub growth_factor: f64,
    /// iteration stopped after leaving the finite range
    pub saturated: bool,
}

/// Runs `n_steps` steps from `u₀` with `u₋₁ = 0`.
///
/// The growth factor is `(max_{k > n/2} ‖Y_k‖ / max_{k ≤ n/2} ‖Y_k‖)^{2/n}`,
/// which is `1` for bounded oscillations and the dominant `|μ|` for
/// exponential growth.
pub fn simulate_recursion(q: f64, n_steps: usize, u0: f64) -> Result<RecursionTrajectory> {
    if n_steps < 2 {
        return Err(FemError::InvalidArgument("at least two steps required".into()));
    }
    let m = TwoStepMatrices::new(q)?;
    let [u1, u2] = m.initial_pair(u0);
    let mut y = nalgebra::Vector4::new(0.0, u0, u1, u2);
    let mut values = vec![u1, u2];
    let mut norms = vec![y.norm()];
    let mut saturated = false;
    for _ in 1..n_steps {
        y = m.a_sys * y;
        let n = y.norm();
        if !n.is_finite() || n > 1e300 {
            saturated = true;
            break;
        }
        values.push(y[2]);
        values.push(y[3]);
        norms.push(n);
    }
    let growth_factor = if saturated {
        f64::INFINITY
    } else {
        let half = norms.len() / 2;
        let first = norms[..half].iter().copied().fold(0.0, f64::max);
        let second = norms[half..].iter().copied().fold(0.0, f64::max);
        if first == 0.0 {
            if second == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            (second / first).powf(1.0 / (norms.len() - half) as f64)
        }
    };
    Ok(RecursionTrajectory { values, norms, growth_factor, saturated })
}

/// The literal `(‖Y_n‖ / ‖Y_1‖)^{1/(n−1)}` estimate, reported for comparison.
pub fn endpoint_growth_factor(traj: &RecursionTrajectory) -> f64 {
    let n = traj.norms.len();
    if traj.saturated {
        return f64::INFINITY;
    }
    if traj.norms[0] == 0.0 {
        return 1.0;
    }
    (traj.norms[n - 1] / traj.norms[0]).powf(1.0 / (n - 1) as f64)
}

/// Elementwise inverse-inequality constant `18 λ_max(J Jᵀ) / (2|K|)`,
/// minimised over the choice of reference vertex and maximised over the
/// elements. The mesh size paired with it is `h = |K|^{1/2}`.
pub fn inverse_inequality_constant(mesh: &TriMesh) -> Result<f64> {
    let mut c_i: f64 = 0.0;
    for t in 0..mesh.n_triangles() {
        let p = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        if !(area > 0.0) {
            return Err(FemError::DegenerateElement { index: t, area });
        }
        let mut best = f64::INFINITY;
        for r in 0..3 {
            let o = p[r];
            let e1 = [p[(r + 1) % 3][0] - o[0], p[(r + 1) % 3][1] - o[1]];
            let e2 = [p[(r + 2) % 3][0] - o[0], p[(r + 2) % 3][1] - o[1]];
            // J = [e1 e2], J Jᵀ symmetric 2x2
            let m00 = e1[0] * e1[0] + e2[0] * e2[0];
            let m11 = e1[1] * e1[1] + e2[1] * e2[1];
            let m01 = e1[0] * e1[1] + e2[0] * e2[1];
            let tr = 0.5 * (m00 + m11);
            let lmax = tr + (0.25 * (m00 - m11).powi(2) + m01 * m01).sqrt();
            best = best.min(18.0 * lmax / (2.0 * area));
        }
        c_i = c_i.max(best);
    }
    Ok(c_i)
}

/// `18 c_F² / π`, the shape-regularity bound for `c_I`.
pub fn inverse_inequality_fallback(shape_constant_cf: f64) -> f64 {
    18.0 * shape_constant_cf * shape_constant_cf / std::f64::consts::PI
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflBounds {
    pub c_i: f64,
    /// `√(10 / c_I)`
    pub ratio_strict: f64,
    /// `√(60 / c_I)`
    pub ratio_relaxed: f64,
}

pub fn cfl_bounds(c_i: f64) -> Result<CflBounds> {
    if !(c_i > 0.0) || !c_i.is_finite() {
        return Err(FemError::InvalidArgument(format!("c_I = {c_i} must be positive")));
    }
    Ok(CflBounds { c_i, ratio_strict: (Q_BAND.0 / c_i).sqrt(), ratio_relaxed: (Q_MAX / c_i).sqrt() })
}

/// Largest eigenvalue of `A v = λ M v` (`A` symmetric semi-definite, `M`
/// symmetric positive definite) by Lanczos in the `M` inner product with full
/// reorthogonalisation.
pub fn max_generalized_eigenvalue(a: &SparseMatrix, m: &SparseMatrix, rel_tol: f64, max_iter: usize) -> Result<f64> {
    let n = a.n_rows();
    if a.n_cols() != n || m.n_rows() != n || m.n_cols() != n {
        return Err(FemError::DimensionMismatch { expected: n, found: m.n_rows() });
    }
    if n == 0 {
        return Err(FemError::InvalidArgument("empty matrices".into()));
    }
    let lu = LuFactorization::new(m)?;
    let m_dot = |x: &[f64], y: &[f64]| -> Result<f64> { Ok(m.matvec(y)?.iter().zip(x).map(|(u, v)| u * v).sum()) };

    // deterministic start vector with components in every direction
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i as f64 * 0.618_033_988_75).fract() - 0.5)).collect();
    let nv = m_dot(&v, &v)?.sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut previous = f64::NAN;
    let cap = max_iter.min(n);
    for j in 0..cap {
        let av = a.matvec(&basis[j])?;
        let mut w = lu.solve(&av)?;
        let alpha: f64 = av.iter().zip(&basis[j]).map(|(x, y)| x * y).sum();
        alphas.push(alpha);
        // full reorthogonalisation (twice is enough)
        for _ in 0..2 {
            let mw = m.matvec(&w)?;
            for b in &basis {
                let c: f64 = mw.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let estimate = tridiagonal_max_eigenvalue(&alphas, &betas);
        if j + 1 == cap {
            return Ok(estimate);
        }
        if (estimate - previous).abs() <= rel_tol * 1e-2 * estimate.abs() && j >= 5 {
            return Ok(estimate);
        }
        previous = estimate;
        let beta = m_dot(&w, &w)?.max(0.0).sqrt();
        if beta <= 1e-13 * estimate.abs().max(1e-300) {
            return Ok(estimate);
        }
        betas.push(beta);
        w.iter_mut().for_each(|x| *x /= beta);
        basis.push(w);
    }
    Err(FemError::NonConvergence { iterations: cap, estimate: previous })
}

fn tridiagonal_max_eigenvalue(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    SymmetricEigen::new(t).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Dense reference for [`max_generalized_eigenvalue`] (small problems).
pub fn dense_max_generalized_eigenvalue(a: &SparseMatrix, m: &SparseMatrix) -> Result<f64> {
    let n = a.n_rows();
    let ad = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    let md = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    let chol = md.cholesky().ok_or_else(|| FemError::NumericallySingular("mass matrix not positive definite".into()))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| FemError::NumericallySingular("Cholesky factor".into()))?;
    let s = &linv * ad * linv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    Ok(SymmetricEigen::new(s).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, Rectangle};

    #[test]
    fn classifier_examples() {
        assert!(classify(5.0, Criterion::StrictNoBand) && classify(5.0, Criterion::Relaxed));
        assert!(!classify(11.0, Criterion::StrictNoBand) && classify(11.0, Criterion::Relaxed));
        assert!(!classify(61.0, Criterion::StrictNoBand) && !classify(61.0, Criterion::Relaxed));
    }

    #[test]
    fn product_of_nonzero_roots_is_one() {
        for q in [0.5, 3.0, 11.0, 30.0, 75.0] {
            let [x, y] = closed_form_eigenvalues(q).unwrap();
            let p = x * y;
            assert!((p.re - 1.0).abs() < 1e-12 && p.im.abs() < 1e-12, "q={q}: {p}");
        }
    }

    #[test]
    fn boundary_at_sixty() {
        let r = stability_report(60.0).unwrap();
        assert!((r.max_abs_re - 1.0).abs() < 1e-9);
        assert!(stability_report(11.0).unwrap().max_abs_re > 1.0);
    }

    #[test]
    fn zero_initial_value_stays_zero() {
        let t = simulate_recursion(5.0, 50, 0.0).unwrap();
        assert!(t.values.iter().all(|&v| v == 0.0));
        assert_eq!(t.growth_factor, 1.0);
    }

    #[test]
    fn cfl_constants() {
        let b = cfl_bounds(18.0).unwrap();
        assert!((b.ratio_strict - 0.745_355_99).abs() < 5e-9);
        assert!((b.ratio_relaxed - 1.825_741_858).abs() < 5e-10);
        assert_eq!(cfl_bounds(10.0).unwrap().ratio_strict, 1.0);
        assert!(cfl_bounds(0.0).is_err());
    }

    #[test]
    fn structured_mesh_constant_is_eighteen() {
        for n in [1, 3, 8] {
            let mesh = build_structured_mesh(Rectangle::UNIT, n).unwrap();
            assert!((inverse_inequality_constant(&mesh).unwrap() - 18.0).abs() < 1e-12);
        }
        let mesh = build_structured_mesh(Rectangle::new(0.0, 7.0, 0.0, 7.0), 4).unwrap();
        assert!((inverse_inequality_constant(&mesh).unwrap() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn recursion_matches_assembled_temporal_system() {
        use crate::linalg::DenseMatrix;
        use crate::temporal::{assemble_full_temporal, TimePartition};
        // single mode u'' + λu = 0 with u(0) = 1, u'(0) = 0 on h_t = 1
        for q in [0.5, 7.0, 11.0, 40.0, 75.0] {
            let p = TimePartition::equidistant(3.0, 3).unwrap();
            let (a_tt, _, m_t) = assemble_full_temporal(&p).unwrap();
            let g = DenseMatrix::from_fn(7, 7, |i, j| -a_tt[(i, j)] + q * m_t[(i, j)]);
            let sys = DenseMatrix::from_fn(6, 6, |l, k| g[(l, k + 1)]);
            let rhs: Vec<f64> = (0..6).map(|l| -g[(l, 0)]).collect();
            let u = sys.lu().unwrap().solve(&rhs).unwrap();
            let traj = simulate_recursion(q, 3, 1.0).unwrap();
            for k in 0..6 {
                assert!((u[k] - traj.values[k]).abs() < 1e-10 * (1.0 + u[k].abs()), "q={q} k={k}: {} vs {}", u[k], traj.values[k]);
            }
        }
    }

    #[test]
    fn eigenvalues_agree_away_from_double_roots() {
        for i in 0..=1000 {
            let q = i as f64 / 10.0;
            let (d, zeros) = eigenvalue_discrepancy(q).unwrap();
            assert!(zeros < 1e-10, "q={q}");
            // double roots at 0, 10, 12, 60 are defective; f64 rounding of
            // A_sys alone moves them by O(√ε)
            let tol = if [0.0, 10.0, 12.0, 60.0].contains(&q) { 1e-7 } else { 1e-10 };
            assert!(d < tol, "q={q}: {d:e}");
        }
    }

    #[test]
    fn free_constant_mode_at_zero() {
        let ev = numerical_eigenvalues(0.0).unwrap();
        assert!(ev.iter().any(|z| (z - Complex::new(1.0, 0.0)).norm() < 1e-7));
        let t = simulate_recursion(0.0, 10, 2.0).unwrap();
        assert!(t.values.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn growth_examples() {
        assert!(simulate_recursion(5.0, 2000, 1.0).unwrap().growth_factor <= 1.0 + 1e-6);
        assert!(simulate_recursion(61.0, 200, 1.0).unwrap().growth_factor > 1.001);
        assert!(simulate_recursion(1e6, 2000, 1.0).unwrap().growth_factor > 1.0);
        assert!(simulate_recursion(5.0, 1, 1.0).is_err());
    }

    #[test]
    fn classifier_matches_growth_off_boundaries() {
        for i in 0..=1000 {
            let q = i as f64 / 10.0;
            if [10.0, 12.0, 60.0].iter().any(|b| (q - b).abs() <= 0.1 + 1e-9) {
                continue;
            }
            let g = simulate_recursion(q, 2000, 1.0).unwrap().growth_factor;
            assert_eq!(g <= 1.0 + 1e-4, classify(q, Criterion::StrictNoBand), "q={q} growth={g}");
        }
    }

    #[test]
    fn sweep_finds_band_and_upper_limit() {
        let sw = stability_sweep(0.0, 100.0, 0.1).unwrap();
        assert_eq!(sw.reports.len(), 1001);
        assert_eq!(sw.unstable_runs.len(), 2);
        let (lo, hi) = sw.unstable_runs[0];
        assert!(lo > 10.0 && lo < 10.2 && hi > 11.8 && hi < 12.0);
        assert!((sw.unstable_runs[1].0 - 60.1).abs() < 1e-9);
        assert_eq!(stability_sweep(0.0, 100.0, 50.0).unwrap().reports.len(), 3);
        assert!(stability_sweep(5.0, 1.0, 0.1).unwrap().to_csv().lines().count() == 1);
    }

    #[test]
    fn singular_a_is_rejected() {
        // a² − bc = 48 + 3.2q + 0.2q² has complex roots, so only non-finite q fails
        assert!(TwoStepMatrices::new(f64::NAN).is_err());
        assert!(TwoStepMatrices::new(-8.0).is_ok());
    }

    #[test]
    fn lanczos_matches_dense_and_obeys_inverse_inequality() {
        use crate::spatial::{assemble_spatial, EdgeDofMap, MaterialModel};
        for n in [2, 4] {
            let mesh = build_structured_mesh(Rectangle::UNIT, n).unwrap();
            let dm = EdgeDofMap::new(&mesh);
            let sp = assemble_spatial(&mesh, &MaterialModel::vacuum(), &dm).unwrap();
            let l = max_generalized_eigenvalue(&sp.a_xx, &sp.m_x, 1e-8, 500).unwrap();
            let d = dense_max_generalized_eigenvalue(&sp.a_xx, &sp.m_x).unwrap();
            assert!((l - d).abs() < 1e-6 * d, "{l} vs {d}");
            let h_min = crate::mesh::mesh_metrics(&mesh).h_min;
            assert!(l <= inverse_inequality_constant(&mesh).unwrap() / (h_min * h_min));
        }
    }
}
