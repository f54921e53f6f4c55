//! Closed-form solutions of the modal equation `c'' + βc' + λc = f` and the
//! quadratic Galerkin-Petrov discretisation of the same problem.

use std::fmt;
use std::sync::Arc;

use crate::error::{FemError, Result};
use crate::linalg::DenseMatrix;
use crate::quadrature::{adaptive_integrate, gauss_legendre_unit};
use crate::temporal::{assemble_temporal, TimePartition};

/// Below this value of `|β²/4 − λ|·t²` the impulse response uses its series.
const SERIES_THRESHOLD: f64 = 0.5;
const DUHAMEL_TOL: f64 = 1e-10;

#[derive(Clone)]
pub enum Forcing {
    Zero,
    /// `Σ c_k t^k`, at most cubic
    Polynomial(Vec<f64>),
    General(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Forcing {
    pub fn general(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Forcing::General(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck),
            Forcing::General(f) => f(t),
        }
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Forcing::General(_) => write!(f, "General(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModalProblem {
    pub beta: f64,
    pub lambda: f64,
    pub alpha0: f64,
    pub v0: f64,
    pub forcing: Forcing,
}

impl ModalProblem {
    pub fn new(beta: f64, lambda: f64, alpha0: f64, v0: f64, forcing: Forcing) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) || !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(FemError::InvalidArgument(format!("β = {beta}, λ = {lambda} must be finite and nonnegative")));
        }
        if let Forcing::Polynomial(c) = &forcing {
            if c.len() > 4 {
                return Err(FemError::InvalidArgument("polynomial forcing limited to degree 3".into()));
            }
        }
        Ok(ModalProblem { beta, lambda, alpha0, v0, forcing })
    }

    pub fn homogeneous(beta: f64, lambda: f64, alpha0: f64, v0: f64) -> Result<Self> {
        Self::new(beta, lambda, alpha0, v0, Forcing::Zero)
    }

    /// `β²/4 − λ`: positive overdamped, zero critical, negative oscillatory.
    pub fn discriminant(&self) -> f64 {
        0.25 * self.beta * self.beta - self.lambda
    }
}

/// Impulse response `g` (`g(0) = 0`, `g'(0) = 1`) and its derivative.
pub fn impulse_response(beta: f64, lambda: f64, t: f64) -> (f64, f64) {
    let d = 0.25 * beta * beta - lambda;
    impulse_response_branch(beta, lambda, t, (d * t * t).abs() < SERIES_THRESHOLD)
}

fn impulse_response_branch(beta: f64, lambda: f64, t: f64, series: bool) -> (f64, f64) {
    let r = 0.5 * beta;
    let d = r * r - lambda;
    let decay = (-r * t).exp();
    let z = d * t * t;
    // s(t) = sinh(√d t)/√d, its derivative cosh(√d t), valid for either sign of d
    let (s, ds) = if series {
        let (mut s_sum, mut c_sum) = (0.0, 0.0);
        let mut term = 1.0; // z^k / (2k)!
        for k in 0..30 {
            let kf = k as f64;
            c_sum += term;
            s_sum += term / (2.0 * kf + 1.0);
            term *= z / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0));
            if term.abs() < 1e-18 {
                break;
            }
        }
        (t * s_sum, c_sum)
    } else if d > 0.0 {
        let w = d.sqrt();
        ((w * t).sinh() / w, (w * t).cosh())
    } else {
        let w = (-d).sqrt();
        ((w * t).sin() / w, (w * t).cos())
    };
    (decay * s, decay * (ds - r * s))
}

/// Value and derivative of the exact solution at `t`.
pub fn solve_modal(p: &ModalProblem, t: f64) -> (f64, f64) {
    match &p.forcing {
        Forcing::Zero => homogeneous(p, p.alpha0, p.v0, t),
        Forcing::Polynomial(c) => {
            let poly = particular_polynomial(p.beta, p.lambda, c);
            let (q0, dq0) = poly_eval(&poly, 0.0);
            let (h, dh) = homogeneous(p, p.alpha0 - q0, p.v0 - dq0, t);
            let (q, dq) = poly_eval(&poly, t);
            (h + q, dh + dq)
        }
        Forcing::General(_) => {
            let (h, dh) = homogeneous(p, p.alpha0, p.v0, t);
            let (c, dc) = duhamel(p, t);
            (h + c, dh + dc)
        }
    }
}

fn homogeneous(p: &ModalProblem, alpha0: f64, v0: f64, t: f64) -> (f64, f64) {
    // c = α (g' + βg) + v0 g
    let (g, dg) = impulse_response(p.beta, p.lambda, t);
    (alpha0 * (dg + p.beta * g) + v0 * g, -alpha0 * p.lambda * g + v0 * dg)
}

/// `∫_0^t g(t − τ) f(τ) dτ` and its time derivative by adaptive quadrature.
pub fn duhamel(p: &ModalProblem, t: f64) -> (f64, f64) {
    if t == 0.0 {
        return (0.0, 0.0);
    }
    let f = &p.forcing;
    let value = adaptive_integrate(&|tau: f64| impulse_response(p.beta, p.lambda, t - tau).0 * f.eval(tau), 0.0, t, DUHAMEL_TOL);
    let deriv = adaptive_integrate(&|tau: f64| impulse_response(p.beta, p.lambda, t - tau).1 * f.eval(tau), 0.0, t, DUHAMEL_TOL);
    (value, deriv)
}

/// Polynomial `q` with `q'' + βq' + λq = Σ c_k t^k` (coefficients ascending).
pub fn particular_polynomial(beta: f64, lambda: f64, c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n == 0 {
        return Vec::new();
    }
    if lambda != 0.0 {
        // match coefficients from the top: λ q_k + β(k+1) q_{k+1} + (k+2)(k+1) q_{k+2} = c_k
        let mut q = vec![0.0; n + 2];
        for k in (0..n).rev() {
            let kf = k as f64;
            q[k] = (c[k] - beta * (kf + 1.0) * q[k + 1] - (kf + 2.0) * (kf + 1.0) * q[k + 2]) / lambda;
        }
        q.truncate(n);
        q
    } else if beta != 0.0 {
        // r = q' solves r' + βr = f
        let mut r = vec![0.0; n + 1];
        for k in (0..n).rev() {
            r[k] = (c[k] - (k as f64 + 1.0) * r[k + 1]) / beta;
        }
        let mut q = vec![0.0; n + 1];
        for k in 0..n {
            q[k + 1] = r[k] / (k as f64 + 1.0);
        }
        q
    } else {
        let mut q = vec![0.0; n + 2];
        for k in 0..n {
            let kf = k as f64;
            q[k + 2] = c[k] / ((kf + 1.0) * (kf + 2.0));
        }
        q
    }
}

fn poly_eval(c: &[f64], t: f64) -> (f64, f64) {
    let v = c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck);
    let d = c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &ck)| acc * t + k as f64 * ck);
    (v, d)
}

/// Largest `|c'' + βc' + λc − f|` over `samples`, with central differences of
/// step `h`.
pub fn residual_check(p: &ModalProblem, samples: &[f64], h: f64) -> f64 {
    samples
        .iter()
        .map(|&t| {
            let c = |s: f64| solve_modal(p, s).0;
            let (cm, c0, cp) = (c(t - h), c(t), c(t + h));
            let d2 = (cp - 2.0 * c0 + cm) / (h * h);
            let d1 = (cp - cm) / (2.0 * h);
            (d2 + p.beta * d1 + p.lambda * c0 - p.forcing.eval(t)).abs()
        })
        .fold(0.0, f64::max)
}

/// Nodal values of the quadratic Galerkin-Petrov solution.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModalSolution {
    pub partition: TimePartition,
    /// values at all `2N + 1` quadratic nodes, the first being `α0`
    pub nodal: Vec<f64>,
}

impl DiscreteModalSolution {
    /// `max_i |c_h(t_i) − c(t_i)|` over the quadratic nodes.
    pub fn max_nodal_error(&self, p: &ModalProblem) -> f64 {
        self.nodal.iter().enumerate().map(|(i, v)| (v - solve_modal(p, self.partition.quadratic_node(i)).0).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.nodal.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Solves `(−A_tt + βA_t + λM_t) ã = (f, φ_ℓ) + φ_ℓ(0) v0 − α0 (initial column)`.
pub fn discrete_modal_solve(p: &ModalProblem, partition: &TimePartition) -> Result<DiscreteModalSolution> {
    let tm = assemble_temporal(partition)?;
    let n = tm.dim();
    let op = DenseMatrix::from_fn(n, n, |l, k| -tm.a_tt[(l, k)] + p.beta * tm.a_t[(l, k)] + p.lambda * tm.m_t[(l, k)]);
    let init = tm.initial_columns();
    let mut rhs = vec![0.0; n];
    let rule = gauss_legendre_unit(8);
    for e in 0..partition.n_elements() {
        let (a, b) = partition.element(e);
        for &(s, w) in &rule {
            let fv = p.forcing.eval(a + s * (b - a)) * w * (b - a);
            let (phi, _) = crate::temporal::quadratic_reference(s);
            for (j, ph) in phi.iter().enumerate() {
                if 2 * e + j < n {
                    rhs[2 * e + j] += fv * ph;
                }
            }
        }
    }
    rhs[0] += p.v0;
    for l in 0..n {
        rhs[l] -= p.alpha0 * (-init.a_tt[l] + p.beta * init.a_t[l] + p.lambda * init.m_t[l]);
    }
    let sol = op.lu()?.solve(&rhs)?;
    let mut nodal = Vec::with_capacity(n + 1);
    nodal.push(p.alpha0);
    nodal.extend(sol);
    Ok(DiscreteModalSolution { partition: partition.clone(), nodal })
}

/// Observed orders `log2(e_k / e_{k+1})` of the nodal max error over
/// `N, 2N, 4N, …` equidistant elements on `[0, end_time]`.
pub fn observed_orders(p: &ModalProblem, end_time: f64, n_start: usize, refinements: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut errors = Vec::with_capacity(refinements + 1);
    for r in 0..=refinements {
        let part = TimePartition::equidistant(end_time, n_start << r)?;
        errors.push(discrete_modal_solve(p, &part)?.max_nodal_error(p));
    }
    let orders = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok((errors, orders))
}
