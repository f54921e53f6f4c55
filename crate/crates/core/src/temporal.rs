//! Piecewise-quadratic continuous elements in time.
//!
//! Global nodal index `2e`, `2e + 1`, `2e + 2` belongs to the left end, the
//! midpoint and the right end of element `e`. Trial functions drop node 0
//! (value prescribed at `t = 0`), test functions drop the last node (vanishing
//! at `t = T`), so both spaces have `2 N` functions for `N` elements. All
//! matrices use rows = test, columns = trial.

use crate::error::{FemError, Result};
use crate::linalg::DenseMatrix;
use crate::quadrature::gauss_legendre_unit;

#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    nodes: Vec<f64>,
}

impl TimePartition {
    pub fn equidistant(end_time: f64, n_elements: usize) -> Result<Self> {
        if n_elements == 0 {
            return Err(FemError::InvalidPartition("at least one time element required".into()));
        }
        if !(end_time > 0.0) || !end_time.is_finite() {
            return Err(FemError::InvalidPartition(format!("end time {end_time} must be positive")));
        }
        let h = end_time / n_elements as f64;
        let nodes = (0..=n_elements).map(|i| if i == n_elements { end_time } else { i as f64 * h }).collect();
        Ok(TimePartition { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(FemError::InvalidPartition("need at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(FemError::InvalidPartition(format!("first node {} must be 0", nodes[0])));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|t| !t.is_finite()) {
            return Err(FemError::InvalidPartition("nodes must be finite and strictly increasing".into()));
        }
        Ok(TimePartition { nodes })
    }

    /// Element end points `t_0 = 0 < ... < t_N = T`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of trial (or test) functions, `2 N`.
    pub fn n_dofs(&self) -> usize {
        2 * self.n_elements()
    }

    pub fn end_time(&self) -> f64 {
        *self.nodes.last().expect("non-empty")
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    pub fn element_len(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn max_step(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.element_len(e)).fold(0.0, f64::max)
    }

    pub fn is_equidistant(&self, rel_tol: f64) -> bool {
        let h = self.end_time() / self.n_elements() as f64;
        (0..self.n_elements()).all(|e| (self.element_len(e) - h).abs() <= rel_tol * h)
    }

    /// Position of quadratic node `i` (midpoints at odd indices).
    pub fn quadratic_node(&self, i: usize) -> f64 {
        let e = i / 2;
        if i % 2 == 0 {
            self.nodes[e]
        } else {
            0.5 * (self.nodes[e] + self.nodes[e + 1])
        }
    }

    /// Element containing `t` (the left one at interior nodes).
    pub fn find_element(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.end_time();
        if t < -tol || t > self.end_time() + tol {
            return None;
        }
        let idx = self.nodes.partition_point(|&x| x < t);
        Some(idx.saturating_sub(1).min(self.n_elements() - 1))
    }

    /// The three nonzero quadratic basis functions at `t`: global node index,
    /// value and time derivative.
    pub fn quadratic_basis_at(&self, t: f64) -> Option<[(usize, f64, f64); 3]> {
        let e = self.find_element(t)?;
        let (a, b) = self.element(e);
        let h = b - a;
        let s = ((t - a) / h).clamp(0.0, 1.0);
        let (v, d) = quadratic_reference(s);
        Some([(2 * e, v[0], d[0] / h), (2 * e + 1, v[1], d[1] / h), (2 * e + 2, v[2], d[2] / h)])
    }

    /// The two nonzero piecewise-linear hat functions at `t`.
    pub fn linear_basis_at(&self, t: f64) -> Option<[(usize, f64); 2]> {
        let e = self.find_element(t)?;
        let (a, b) = self.element(e);
        let s = ((t - a) / (b - a)).clamp(0.0, 1.0);
        Some([(e, 1.0 - s), (e + 1, s)])
    }
}

/// Values and derivatives of the nodal quadratic basis on `[0, 1]` with nodes
/// `0, 1/2, 1`.
pub fn quadratic_reference(s: f64) -> ([f64; 3], [f64; 3]) {
    ([(1.0 - s) * (1.0 - 2.0 * s), 4.0 * s * (1.0 - s), s * (2.0 * s - 1.0)], [4.0 * s - 3.0, 4.0 - 8.0 * s, 4.0 * s - 1.0])
}

/// Element matrices on an interval of length `h` (rows = test, cols = trial).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticElementMatrices {
    /// `∫ φ_j φ_i`
    pub mass: [[f64; 3]; 3],
    /// `∫ φ_j' φ_i'`
    pub stiffness: [[f64; 3]; 3],
    /// `∫ φ_j' φ_i`
    pub advection: [[f64; 3]; 3],
}

pub fn quadratic_element_matrices(h: f64) -> Result<QuadraticElementMatrices> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(FemError::InvalidPartition(format!("element length {h} must be positive")));
    }
    const M: [[f64; 3]; 3] = [[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]];
    const K: [[f64; 3]; 3] = [[7.0, -8.0, 1.0], [-8.0, 16.0, -8.0], [1.0, -8.0, 7.0]];
    const C: [[f64; 3]; 3] = [[-3.0, 4.0, -1.0], [-4.0, 0.0, 4.0], [1.0, -4.0, 3.0]];
    let mut out = QuadraticElementMatrices { mass: [[0.0; 3]; 3], stiffness: [[0.0; 3]; 3], advection: [[0.0; 3]; 3] };
    for i in 0..3 {
        for j in 0..3 {
            out.mass[i][j] = h * M[i][j] / 30.0;
            out.stiffness[i][j] = K[i][j] / (3.0 * h);
            out.advection[i][j] = C[i][j] / 6.0;
        }
    }
    Ok(out)
}

/// Temporal Galerkin-Petrov matrices together with their unrestricted
/// `(2N+1) x (2N+1)` counterparts.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMatrices {
    pub a_tt: DenseMatrix,
    pub a_t: DenseMatrix,
    pub m_t: DenseMatrix,
    pub full_a_tt: DenseMatrix,
    pub full_a_t: DenseMatrix,
    pub full_m_t: DenseMatrix,
}

impl TemporalMatrices {
    /// Number of trial (= test) functions.
    pub fn dim(&self) -> usize {
        self.a_tt.rows()
    }
}

pub fn assemble_full_temporal(partition: &TimePartition) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix)> {
    let n = partition.n_dofs() + 1;
    let mut a_tt = DenseMatrix::zeros(n, n);
    let mut a_t = DenseMatrix::zeros(n, n);
    let mut m_t = DenseMatrix::zeros(n, n);
    for e in 0..partition.n_elements() {
        let em = quadratic_element_matrices(partition.element_len(e))?;
        for i in 0..3 {
            for j in 0..3 {
                let (gi, gj) = (2 * e + i, 2 * e + j);
                a_tt[(gi, gj)] += em.stiffness[i][j];
                a_t[(gi, gj)] += em.advection[i][j];
                m_t[(gi, gj)] += em.mass[i][j];
            }
        }
    }
    Ok((a_tt, a_t, m_t))
}

/// Restricts the full matrices to test rows `0..2N` and trial columns `1..=2N`.
pub fn assemble_temporal(partition: &TimePartition) -> Result<TemporalMatrices> {
    let (full_a_tt, full_a_t, full_m_t) = assemble_full_temporal(partition)?;
    let n = partition.n_dofs();
    let restrict = |m: &DenseMatrix| DenseMatrix::from_fn(n, n, |l, k| m[(l, k + 1)]);
    Ok(TemporalMatrices { a_tt: restrict(&full_a_tt), a_t: restrict(&full_a_t), m_t: restrict(&full_m_t), full_a_tt, full_a_t, full_m_t })
}

/// Columns of the trial function at `t = 0`, restricted to the test rows.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialColumns {
    pub a_tt: Vec<f64>,
    pub a_t: Vec<f64>,
    pub m_t: Vec<f64>,
}

pub fn initial_row_columns(partition: &TimePartition) -> Result<InitialColumns> {
    let (a_tt, a_t, m_t) = assemble_full_temporal(partition)?;
    Ok(initial_columns_of(&a_tt, &a_t, &m_t))
}

pub(crate) fn initial_columns_of(a_tt: &DenseMatrix, a_t: &DenseMatrix, m_t: &DenseMatrix) -> InitialColumns {
    let n = a_tt.rows() - 1;
    let col = |m: &DenseMatrix| (0..n).map(|l| m[(l, 0)]).collect();
    InitialColumns { a_tt: col(a_tt), a_t: col(a_t), m_t: col(m_t) }
}

impl TemporalMatrices {
    pub fn initial_columns(&self) -> InitialColumns {
        initial_columns_of(&self.full_a_tt, &self.full_a_t, &self.full_m_t)
    }
}

/// Piecewise-linear mass matrix on the element end points, `(N+1) x (N+1)`.
pub fn linear_mass(partition: &TimePartition) -> DenseMatrix {
    let n = partition.n_elements() + 1;
    let mut m = DenseMatrix::zeros(n, n);
    for e in 0..partition.n_elements() {
        let h = partition.element_len(e);
        m[(e, e)] += h / 3.0;
        m[(e + 1, e + 1)] += h / 3.0;
        m[(e, e + 1)] += h / 6.0;
        m[(e + 1, e)] += h / 6.0;
    }
    m
}

/// `∫ φ¹_i φ²_ℓ` for all quadratic test functions `ℓ = 0..2N` (rows) and
/// linear hats `i = 0..=N` (columns).
pub fn linear_quadratic_mass(partition: &TimePartition) -> DenseMatrix {
    let nq = partition.n_dofs();
    let mut m = DenseMatrix::zeros(nq, partition.n_elements() + 1);
    let rule = gauss_legendre_unit(3);
    for e in 0..partition.n_elements() {
        let h = partition.element_len(e);
        for &(s, w) in &rule {
            let (q, _) = quadratic_reference(s);
            let lin = [1.0 - s, s];
            for (a, qa) in q.iter().enumerate() {
                let row = 2 * e + a;
                if row >= nq {
                    continue;
                }
                for (b, lb) in lin.iter().enumerate() {
                    m[(row, e + b)] += w * h * qa * lb;
                }
            }
        }
    }
    m
}
