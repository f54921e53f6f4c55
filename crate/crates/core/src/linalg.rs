//! Dense and compressed-row matrices, Kronecker products and direct solvers.
//!
//! The space-time operator is nonsymmetric and indefinite, so every solve goes
//! through an LU factorisation with row pivoting. Small systems use the dense
//! factorisation below; larger ones are handed to faer's supernodal sparse LU.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{FemError, Result};

/// Systems up to this size are factorised densely.
pub const DENSE_SOLVE_LIMIT: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        DenseMatrix { rows: r, cols: c, data: rows.concat() }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(FemError::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(FemError::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Largest `|i - j|` over the nonzero entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self[(i, j)] != 0.0 {
                    bw = bw.max(i.abs_diff(j));
                }
            }
        }
        bw
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self[(i, j)];
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        SparseMatrix::from_triplets(self.rows, self.cols, t).expect("indices in range")
    }

    pub fn lu(&self) -> Result<DenseLu> {
        DenseLu::factorize(self)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factorize(a: &DenseMatrix) -> Result<DenseLu> {
        if a.rows != a.cols {
            return Err(FemError::DimensionMismatch { expected: a.rows, found: a.cols });
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * n as f64;
        for k in 0..n {
            let (p, pmax) = (k..n).map(|i| (i, lu[i * n + k].abs())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= tiny || !pmax.is_finite() {
                return Err(FemError::Singular { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / piv;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(FemError::DimensionMismatch { expected: n, found: b.len() });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<DenseMatrix> {
        let n = self.n;
        let mut inv = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

/// Compressed sparse row matrix with sorted, unique column indices and no
/// stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix { n_rows, n_cols, row_ptr: vec![0; n_rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix { n_rows: n, n_cols: n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    /// Sums duplicate entries and drops exact zeros.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= n_rows || c >= n_cols) {
            return Err(FemError::InvalidArgument(format!("entry ({r}, {c}) outside {n_rows}x{n_cols}")));
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut rows_of = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                rows_of.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        for &r in &rows_of {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix { n_rows, n_cols, row_ptr, col_idx, values })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(FemError::DimensionMismatch { expected: self.n_cols, found: x.len() });
        }
        Ok((0..self.n_rows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect())
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        SparseMatrix::from_triplets(self.n_cols, self.n_rows, t).expect("transposed indices in range")
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let t = self.triplets().map(|(i, j, v)| (i, j, v * s)).collect();
        SparseMatrix::from_triplets(self.n_rows, self.n_cols, t).expect("same pattern")
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: f64, other: &SparseMatrix, b: f64) -> Result<SparseMatrix> {
        if (self.n_rows, self.n_cols) != (other.n_rows, other.n_cols) {
            return Err(FemError::DimensionMismatch { expected: self.n_rows * self.n_cols, found: other.n_rows * other.n_cols });
        }
        let t = self.triplets().map(|(i, j, v)| (i, j, a * v)).chain(other.triplets().map(|(i, j, v)| (i, j, b * v))).collect();
        SparseMatrix::from_triplets(self.n_rows, self.n_cols, t)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.n_rows == self.n_cols && self.triplets().all(|(i, j, v)| (self.get(j, i) - v).abs() <= tol)
    }

    /// `i j value` lines preceded by a `% rows cols nnz` header.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = format!("% {} {} {}\n", self.n_rows, self.n_cols, self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{i} {j} {v:e}");
        }
        s
    }

    /// Parses [`SparseMatrix::to_coordinate_text`]; without a header the shape
    /// is inferred from the largest indices.
    pub fn from_coordinate_text(text: &str) -> Result<SparseMatrix> {
        let mut shape = None;
        let mut t = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || FemError::Parse(format!("line {}: {line:?}", lineno + 1));
            if let Some(rest) = line.strip_prefix('%') {
                let nums: Vec<usize> = rest.split_whitespace().filter_map(|s| s.parse().ok()).collect();
                if nums.len() >= 2 {
                    shape = Some((nums[0], nums[1]));
                }
                continue;
            }
            let mut it = line.split_whitespace();
            let i: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let j: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            t.push((i, j, v));
        }
        let (r, c) = shape.unwrap_or_else(|| {
            let r = t.iter().map(|e| e.0 + 1).max().unwrap_or(0);
            let c = t.iter().map(|e| e.1 + 1).max().unwrap_or(0);
            (r, c)
        });
        SparseMatrix::from_triplets(r, c, t)
    }
}

/// Kronecker product with the first factor as the outer (slow) index.
pub fn kron(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
    kron_sum(&[KroneckerTerm { outer: a, inner: b, coeff: 1.0 }])
}

/// One summand `coeff * (outer ⊗ inner)` of a Kronecker sum.
#[derive(Debug, Clone, Copy)]
pub struct KroneckerTerm<'a> {
    pub outer: &'a SparseMatrix,
    pub inner: &'a SparseMatrix,
    pub coeff: f64,
}

/// Assembles `Σ coeff_k (outer_k ⊗ inner_k)` row by row. All terms must share
/// the product shape; terms with an empty factor contribute nothing.
pub fn kron_sum(terms: &[KroneckerTerm<'_>]) -> Result<SparseMatrix> {
    let first = terms.first().ok_or_else(|| FemError::InvalidArgument("empty Kronecker sum".into()))?;
    let (ro, co) = (first.outer.n_rows, first.outer.n_cols);
    let (ri, ci) = (first.inner.n_rows, first.inner.n_cols);
    for t in terms {
        if (t.outer.n_rows, t.outer.n_cols, t.inner.n_rows, t.inner.n_cols) != (ro, co, ri, ci) {
            return Err(FemError::DimensionMismatch { expected: ro * ri, found: t.outer.n_rows * t.inner.n_rows });
        }
    }
    let n_rows = ro.checked_mul(ri).ok_or_else(|| FemError::Capacity("Kronecker rows".into()))?;
    let n_cols = co.checked_mul(ci).ok_or_else(|| FemError::Capacity("Kronecker columns".into()))?;
    let active: Vec<&KroneckerTerm<'_>> = terms.iter().filter(|t| t.coeff != 0.0 && t.outer.nnz() > 0 && t.inner.nnz() > 0).collect();

    let mut row_ptr = Vec::with_capacity(n_rows + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    let mut scratch: Vec<(usize, f64)> = Vec::new();
    for i in 0..ro {
        for r in 0..ri {
            scratch.clear();
            for t in &active {
                for (j, a) in t.outer.row(i) {
                    let base = j * ci;
                    for (c, b) in t.inner.row(r) {
                        scratch.push((base + c, t.coeff * a * b));
                    }
                }
            }
            scratch.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < scratch.len() {
                let col = scratch[k].0;
                let mut v = 0.0;
                while k < scratch.len() && scratch[k].0 == col {
                    v += scratch[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    col_idx.push(col);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
    }
    Ok(SparseMatrix { n_rows, n_cols, row_ptr, col_idx, values })
}

/// A reusable LU factorisation of a square sparse matrix.
pub enum LuFactorization {
    Dense(DenseLu),
    Sparse { lu: faer::sparse::linalg::solvers::Lu<usize, f64>, matrix: SparseMatrix },
}

impl std::fmt::Debug for LuFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LuFactorization::Dense(lu) => write!(f, "LuFactorization::Dense(n={})", lu.dim()),
            LuFactorization::Sparse { matrix, .. } => write!(f, "LuFactorization::Sparse(n={}, nnz={})", matrix.n_rows, matrix.nnz()),
        }
    }
}

impl LuFactorization {
    pub fn new(k: &SparseMatrix) -> Result<Self> {
        if k.n_rows != k.n_cols {
            return Err(FemError::DimensionMismatch { expected: k.n_rows, found: k.n_cols });
        }
        if k.n_rows <= DENSE_SOLVE_LIMIT {
            return Ok(LuFactorization::Dense(DenseLu::factorize(&k.to_dense())?));
        }
        if let Some(i) = (0..k.n_rows).find(|&i| k.row_ptr[i] == k.row_ptr[i + 1]) {
            return Err(FemError::Singular { pivot: i });
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = k.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(k.n_rows, k.n_cols, &triplets)
            .map_err(|e| FemError::InvalidArgument(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => FemError::Singular { pivot: index },
            other => FemError::NumericallySingular(format!("{other:?}")),
        })?;
        Ok(LuFactorization::Sparse { lu, matrix: k.clone() })
    }

    pub fn dim(&self) -> usize {
        match self {
            LuFactorization::Dense(lu) => lu.dim(),
            LuFactorization::Sparse { matrix, .. } => matrix.n_rows,
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(FemError::DimensionMismatch { expected: n, found: rhs.len() });
        }
        let x = match self {
            LuFactorization::Dense(lu) => lu.solve(rhs)?,
            LuFactorization::Sparse { lu, matrix } => {
                let mut x = rhs.to_vec();
                lu.solve_in_place(faer::MatMut::from_column_major_slice_mut(&mut x, n, 1));
                // one step of iterative refinement
                let kx = matrix.matvec(&x)?;
                let mut r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, v)| b - v).collect();
                lu.solve_in_place(faer::MatMut::from_column_major_slice_mut(&mut r, n, 1));
                x.iter_mut().zip(&r).for_each(|(xi, di)| *xi += di);
                x
            }
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FemError::NumericallySingular("non-finite solution".into()));
        }
        Ok(x)
    }
}

/// Solves `k x = rhs` with a pivoted LU factorisation.
pub fn sparse_solve(k: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if k.n_rows != k.n_cols {
        return Err(FemError::DimensionMismatch { expected: k.n_rows, found: k.n_cols });
    }
    if rhs.len() != k.n_rows {
        return Err(FemError::DimensionMismatch { expected: k.n_rows, found: rhs.len() });
    }
    LuFactorization::new(k)?.solve(rhs)
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖k x − rhs‖₂ / ‖rhs‖₂` (absolute when `rhs` vanishes).
pub fn relative_residual(k: &SparseMatrix, x: &[f64], rhs: &[f64]) -> Result<f64> {
    let kx = k.matvec(x)?;
    let r: Vec<f64> = kx.iter().zip(rhs).map(|(a, b)| a - b).collect();
    let nb = norm2(rhs);
    Ok(if nb > 0.0 { norm2(&r) / nb } else { norm2(&r) })
}
