//! The space-time system `(−A_tt⊗M_x + A_t⊗M_xσ + M_t⊗A_xx) 𝒜 = 𝒥 − A_Ini`.
//!
//! Unknowns are ordered with the temporal index outer: block `κ − 1` holds the
//! free edge coefficients at quadratic time node `κ = 1..=2N`. The right-hand
//! side uses the `L²(Q)` projection of the source onto piecewise-linear time
//! hats times Raviart-Thomas functions.

use std::collections::HashMap;
use std::sync::Arc;

use log::{debug, warn};
use rayon::prelude::*;

use crate::error::{FemError, Result};
use crate::linalg::{kron_sum, norm2, DenseMatrix, KroneckerTerm, LuFactorization, SparseMatrix};
use crate::mesh::{Point, TriMesh};
use crate::quadrature::{gauss_legendre_unit, BaryPoint, TriangleRule};
use crate::spatial::{
    assemble_rt_mass, assemble_rt_nedelec_mixed, assemble_spatial, load_vector, nedelec_interpolate, EdgeDofMap, ElementGeometry,
    MaterialModel, SpatialMatrices,
};
use crate::temporal::{assemble_temporal, linear_mass, linear_quadratic_mass, TemporalMatrices, TimePartition};

pub type SpaceTimeField = Arc<dyn Fn(f64, Point) -> Point + Send + Sync>;
pub type SpaceField = Arc<dyn Fn(Point) -> Point + Send + Sync>;

/// Everything needed to pose one space-time problem.
#[derive(Clone)]
pub struct ProblemData {
    pub mesh: TriMesh,
    pub partition: TimePartition,
    pub material: MaterialModel,
    /// applied current `j_a(t, x)`
    pub source: SpaceTimeField,
    /// `A(0, ·)`
    pub initial_value: SpaceField,
    /// `∂ₜA(0, ·)`
    pub initial_velocity: SpaceField,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("n_triangles", &self.mesh.n_triangles())
            .field("n_time_elements", &self.partition.n_elements())
            .field("material", &self.material)
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    /// Zero source and zero initial data.
    pub fn new(mesh: TriMesh, partition: TimePartition, material: MaterialModel) -> Self {
        ProblemData {
            mesh,
            partition,
            material,
            source: Arc::new(|_, _| [0.0, 0.0]),
            initial_value: Arc::new(|_| [0.0, 0.0]),
            initial_velocity: Arc::new(|_| [0.0, 0.0]),
        }
    }

    pub fn with_source(mut self, j: impl Fn(f64, Point) -> Point + Send + Sync + 'static) -> Self {
        self.source = Arc::new(j);
        self
    }

    pub fn with_initial_value(mut self, phi: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        self.initial_value = Arc::new(phi);
        self
    }

    pub fn with_initial_velocity(mut self, psi: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        self.initial_velocity = Arc::new(psi);
        self
    }
}

/// Coefficients of `Π j` in `S¹ ⊗ RT⁰`: one all-edge vector per time node.
#[derive(Debug, Clone, PartialEq)]
pub struct RtProjection {
    pub coefficients: Vec<Vec<f64>>,
}

/// `L²(Q)` projection of `j` onto piecewise-linear time hats times
/// Raviart-Thomas functions.
pub fn project_rhs_rt(j: &(dyn Fn(f64, Point) -> Point + Sync), mesh: &TriMesh, partition: &TimePartition) -> Result<RtProjection> {
    let n_nodes = partition.n_elements() + 1;
    let n_edges = mesh.n_edges();
    let moments = rt_moments(j, mesh, partition)?;

    // (M1_t ⊗ M_RT) c = b: spatial solves per node, then temporal per edge
    let m_rt = assemble_rt_mass(mesh)?;
    let lu = LuFactorization::new(&m_rt)?;
    let spatial: Vec<Vec<f64>> = moments.par_iter().map(|b| lu.solve(b)).collect::<Result<_>>()?;
    let m1 = linear_mass(partition);
    let m1_lu = m1.lu()?;
    let mut coefficients = vec![vec![0.0; n_edges]; n_nodes];
    let mut col = vec![0.0; n_nodes];
    for e in 0..n_edges {
        for (i, c) in col.iter_mut().enumerate() {
            *c = spatial[i][e];
        }
        let sol = m1_lu.solve(&col)?;
        for (i, v) in sol.into_iter().enumerate() {
            coefficients[i][e] = v;
        }
    }
    Ok(RtProjection { coefficients })
}

/// `∫∫ j · φ¹_i ψ^RT_e` for every time hat `i` and edge `e`.
fn rt_moments(j: &(dyn Fn(f64, Point) -> Point + Sync), mesh: &TriMesh, partition: &TimePartition) -> Result<Vec<Vec<f64>>> {
    let time_rule = gauss_legendre_unit(4);
    let space_rule = TriangleRule::Degree4.points();
    let geos: Vec<ElementGeometry> = (0..mesh.n_triangles())
        .map(|t| {
            ElementGeometry::new(mesh.triangle_points(t)).map_err(|_| FemError::DegenerateElement { index: t, area: mesh.triangle_area(t) })
        })
        .collect::<Result<_>>()?;
    // per time element: contributions to its two hats
    let per_element: Vec<[Vec<f64>; 2]> = (0..partition.n_elements())
        .into_par_iter()
        .map(|el| {
            let (a, b) = partition.element(el);
            let h = b - a;
            let mut left = vec![0.0; mesh.n_edges()];
            let mut right = vec![0.0; mesh.n_edges()];
            for &(s, wt) in &time_rule {
                let t = a + s * h;
                for (tri, geo) in geos.iter().enumerate() {
                    let edges = mesh.triangle_edges(tri);
                    let signs = mesh.triangle_edge_signs(tri);
                    for BaryPoint { bary, weight } in &space_rule {
                        let x = geo.point_at(*bary);
                        let jv = j(t, x);
                        let rt = geo.raviart_thomas(*bary);
                        let w = wt * h * weight * geo.area;
                        for k in 0..3 {
                            let v = w * signs[k] * (jv[0] * rt[k][0] + jv[1] * rt[k][1]);
                            left[edges[k]] += (1.0 - s) * v;
                            right[edges[k]] += s * v;
                        }
                    }
                }
            }
            [left, right]
        })
        .collect();
    let mut moments = vec![vec![0.0; mesh.n_edges()]; partition.n_elements() + 1];
    for (el, [left, right]) in per_element.into_iter().enumerate() {
        for (e, (l, r)) in left.iter().zip(&right).enumerate() {
            moments[el][e] += l;
            moments[el + 1][e] += r;
        }
    }
    Ok(moments)
}

/// Evaluates a projection at `(t, x)` (for tests and diagnostics).
pub fn evaluate_rt_projection(proj: &RtProjection, mesh: &TriMesh, partition: &TimePartition, t: f64, x: Point) -> Result<Point> {
    let hats = partition.linear_basis_at(t).ok_or_else(|| FemError::InvalidArgument(format!("time {t} outside the partition")))?;
    let (tri, bary) = mesh.locate(x).ok_or_else(|| FemError::InvalidArgument(format!("point {x:?} outside the mesh")))?;
    let geo = ElementGeometry::new(mesh.triangle_points(tri))?;
    let rt = geo.raviart_thomas(bary);
    let edges = mesh.triangle_edges(tri);
    let signs = mesh.triangle_edge_signs(tri);
    let mut v = [0.0; 2];
    for (i, hv) in hats {
        for k in 0..3 {
            let c = hv * signs[k] * proj.coefficients[i][edges[k]];
            v[0] += c * rt[k][0];
            v[1] += c * rt[k][1];
        }
    }
    Ok(v)
}

/// `f^ℓ_l = (Π j, φ_ℓ ψ_l) + φ_ℓ(0) (ε ψ₀, ψ_l)` for all test indices.
///
/// `velocity_load` is `(ε ψ₀, ψ_l)`; only `ℓ = 0` has `φ_ℓ(0) ≠ 0`.
pub fn assemble_rhs(
    projection: &RtProjection,
    mesh: &TriMesh,
    dofmap: &EdgeDofMap,
    partition: &TimePartition,
    velocity_load: &[f64],
) -> Result<Vec<f64>> {
    let nx = dofmap.n_free();
    if velocity_load.len() != nx {
        return Err(FemError::DimensionMismatch { expected: nx, found: velocity_load.len() });
    }
    if projection.coefficients.len() != partition.n_elements() + 1 {
        return Err(FemError::DimensionMismatch { expected: partition.n_elements() + 1, found: projection.coefficients.len() });
    }
    let mixed = assemble_rt_nedelec_mixed(mesh, dofmap)?;
    let y: Vec<Vec<f64>> = projection.coefficients.iter().map(|c| mixed.matvec(c)).collect::<Result<_>>()?;
    let tmix = linear_quadratic_mass(partition);
    let nt = partition.n_dofs();
    let mut f = vec![0.0; nt * nx];
    for l in 0..nt {
        let block = &mut f[l * nx..(l + 1) * nx];
        for (i, yi) in y.iter().enumerate() {
            let w = tmix[(l, i)];
            if w != 0.0 {
                block.iter_mut().zip(yi).for_each(|(b, v)| *b += w * v);
            }
        }
    }
    for (b, v) in f[..nx].iter_mut().zip(velocity_load) {
        *b += v;
    }
    Ok(f)
}

/// `A_Ini` from the free part of the initial interpolant `a0`.
pub fn assemble_initial_lift(temporal: &TemporalMatrices, spatial: &SpatialMatrices, a0_free: &[f64]) -> Result<Vec<f64>> {
    let nx = spatial.dim();
    if a0_free.len() != nx {
        return Err(FemError::DimensionMismatch { expected: nx, found: a0_free.len() });
    }
    let cols = temporal.initial_columns();
    let nt = temporal.dim();
    let mut out = vec![0.0; nt * nx];
    if a0_free.iter().all(|&v| v == 0.0) {
        return Ok(out);
    }
    let mx = spatial.m_x.matvec(a0_free)?;
    let ms = spatial.m_x_sigma.matvec(a0_free)?;
    let ax = spatial.a_xx.matvec(a0_free)?;
    for l in 0..nt {
        let (ctt, ct, cm) = (cols.a_tt[l], cols.a_t[l], cols.m_t[l]);
        if ctt == 0.0 && ct == 0.0 && cm == 0.0 {
            continue;
        }
        for k in 0..nx {
            out[l * nx + k] = -ctt * mx[k] + ct * ms[k] + cm * ax[k];
        }
    }
    Ok(out)
}

/// Linear solver used by [`SpaceTimeSystem::solve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// One sparse LU of the whole operator.
    GlobalLu,
    /// Block forward substitution over time elements with a sparse LU of
    /// each distinct diagonal block; identical solution, far less fill.
    #[default]
    TimeMarching,
}

/// Assembled space-time system.
#[derive(Debug, Clone)]
pub struct SpaceTimeSystem {
    pub temporal: TemporalMatrices,
    pub spatial: SpatialMatrices,
    pub dofmap: EdgeDofMap,
    pub partition: TimePartition,
    /// `𝒥 − A_Ini`
    pub rhs: Vec<f64>,
    /// `A⁰` over all edges
    pub initial_coefficients: Vec<f64>,
}

impl SpaceTimeSystem {
    pub fn assemble(problem: &ProblemData) -> Result<Self> {
        let mesh = &problem.mesh;
        let dofmap = EdgeDofMap::new(mesh);
        let temporal = assemble_temporal(&problem.partition)?;
        let spatial = assemble_spatial(mesh, &problem.material, &dofmap)?;

        let a0 = nedelec_interpolate(mesh, problem.initial_value.as_ref());
        let boundary_moment = (0..mesh.n_edges()).filter(|&e| mesh.is_boundary_edge(e)).map(|e| a0[e].abs()).fold(0.0, f64::max);
        if boundary_moment > 1e-10 {
            warn!("initial value has tangential boundary moment {boundary_moment:e}; boundary part dropped");
        }
        let mut a0_all = a0;
        for e in 0..mesh.n_edges() {
            if mesh.is_boundary_edge(e) {
                a0_all[e] = 0.0;
            }
        }
        let lift = assemble_initial_lift(&temporal, &spatial, &dofmap.restrict(&a0_all))?;

        let projection = project_rhs_rt(problem.source.as_ref(), mesh, &problem.partition)?;
        let psi = problem.initial_velocity.clone();
        let velocity_load = load_vector(mesh, &dofmap, &problem.material, &move |x| psi(x))?;
        let mut rhs = assemble_rhs(&projection, mesh, &dofmap, &problem.partition, &velocity_load)?;
        rhs.iter_mut().zip(&lift).for_each(|(r, a)| *r -= a);

        Ok(SpaceTimeSystem { temporal, spatial, dofmap, partition: problem.partition.clone(), rhs, initial_coefficients: a0_all })
    }

    pub fn n_time(&self) -> usize {
        self.temporal.dim()
    }

    pub fn n_space(&self) -> usize {
        self.spatial.dim()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_time() * self.n_space()
    }

    /// Materialises the Kronecker operator; the `σ` term is dropped when
    /// `σ ≡ 0`.
    pub fn operator(&self) -> Result<SparseMatrix> {
        let att = self.temporal.a_tt.to_sparse();
        let at = self.temporal.a_t.to_sparse();
        let mt = self.temporal.m_t.to_sparse();
        if self.temporal.a_tt.rows() != self.temporal.a_tt.cols() {
            return Err(FemError::DimensionMismatch { expected: self.temporal.a_tt.rows(), found: self.temporal.a_tt.cols() });
        }
        let mut terms = vec![
            KroneckerTerm { outer: &att, inner: &self.spatial.m_x, coeff: -1.0 },
            KroneckerTerm { outer: &mt, inner: &self.spatial.a_xx, coeff: 1.0 },
        ];
        if !self.spatial.sigma_vanishes {
            terms.insert(1, KroneckerTerm { outer: &at, inner: &self.spatial.m_x_sigma, coeff: 1.0 });
        }
        kron_sum(&terms)
    }

    /// `K x` without forming `K`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (nt, nx) = (self.n_time(), self.n_space());
        if x.len() != nt * nx {
            return Err(FemError::DimensionMismatch { expected: nt * nx, found: x.len() });
        }
        let blocks: Vec<[Vec<f64>; 3]> = x
            .par_chunks(nx)
            .map(|b| -> Result<[Vec<f64>; 3]> {
                Ok([self.spatial.m_x.matvec(b)?, self.spatial.m_x_sigma.matvec(b)?, self.spatial.a_xx.matvec(b)?])
            })
            .collect::<Result<_>>()?;
        let mut y = vec![0.0; nt * nx];
        for l in 0..nt {
            let out = &mut y[l * nx..(l + 1) * nx];
            for k in l.saturating_sub(3)..(l + 3).min(nt) {
                let (ctt, ct, cm) = (self.temporal.a_tt[(l, k)], self.temporal.a_t[(l, k)], self.temporal.m_t[(l, k)]);
                if ctt == 0.0 && ct == 0.0 && cm == 0.0 {
                    continue;
                }
                let [mx, ms, ax] = &blocks[k];
                for i in 0..nx {
                    out[i] += -ctt * mx[i] + ct * ms[i] + cm * ax[i];
                }
            }
        }
        Ok(y)
    }

    pub fn relative_residual(&self, x: &[f64]) -> Result<f64> {
        let kx = self.apply(x)?;
        let r: Vec<f64> = kx.iter().zip(&self.rhs).map(|(a, b)| a - b).collect();
        let nb = norm2(&self.rhs);
        Ok(if nb > 0.0 { norm2(&r) / nb } else { norm2(&r) })
    }

    pub fn solve(&self) -> Result<SolutionCoefficients> {
        self.solve_with(SolverKind::default())
    }

    pub fn solve_with(&self, kind: SolverKind) -> Result<SolutionCoefficients> {
        let x = match kind {
            SolverKind::GlobalLu => LuFactorization::new(&self.operator()?)?.solve(&self.rhs)?,
            SolverKind::TimeMarching => self.march()?,
        };
        let residual = self.relative_residual(&x)?;
        if residual > 1e-8 {
            warn!("space-time residual {residual:e} above 1e-8");
        }
        debug!("solved {} unknowns, residual {residual:e}", x.len());
        Ok(SolutionCoefficients::new(self, x, residual))
    }

    fn block_operator(&self, coeffs: &[[f64; 3]; 4]) -> Result<SparseMatrix> {
        // coeffs[2*i + j] = (a_tt, a_t, m_t) for test row i, trial column j
        let mut terms_store = Vec::new();
        for (idx, which) in [(0usize, 0usize), (1, 1), (2, 2)] {
            let t = DenseMatrix::from_fn(2, 2, |i, j| coeffs[2 * i + j][which]).to_sparse();
            terms_store.push((idx, t));
        }
        let inner = [&self.spatial.m_x, &self.spatial.m_x_sigma, &self.spatial.a_xx];
        let sign = [-1.0, 1.0, 1.0];
        let terms: Vec<KroneckerTerm<'_>> = terms_store
            .iter()
            .filter(|(idx, _)| !(*idx == 1 && self.spatial.sigma_vanishes))
            .map(|(idx, t)| KroneckerTerm { outer: t, inner: inner[*idx], coeff: sign[*idx] })
            .collect();
        kron_sum(&terms)
    }

    fn march(&self) -> Result<Vec<f64>> {
        let (nt, nx) = (self.n_time(), self.n_space());
        let full = (&self.temporal.full_a_tt, &self.temporal.full_a_t, &self.temporal.full_m_t);
        let coef = |l: usize, node: usize| [full.0[(l, node)], full.1[(l, node)], full.2[(l, node)]];
        // nodal coefficients, node 0 handled through the lift
        let mut nodes: Vec<Vec<f64>> = vec![vec![0.0; nx]; nt + 1];
        let mut products: Vec<Option<[Vec<f64>; 3]>> = vec![None; nt + 1];
        products[0] = Some([vec![0.0; nx], vec![0.0; nx], vec![0.0; nx]]);
        let mut factors: HashMap<[u64; 12], LuFactorization> = HashMap::new();

        for e in 0..self.partition.n_elements() {
            let rows = [2 * e, 2 * e + 1];
            let cols = [2 * e + 1, 2 * e + 2];
            let mut c = [[0.0; 3]; 4];
            for i in 0..2 {
                for j in 0..2 {
                    c[2 * i + j] = coef(rows[i], cols[j]);
                }
            }
            let key: [u64; 12] = std::array::from_fn(|k| c[k / 3][k % 3].to_bits());
            if !factors.contains_key(&key) {
                factors.insert(key, LuFactorization::new(&self.block_operator(&c)?)?);
            }
            let lu = &factors[&key];

            let mut r = vec![0.0; 2 * nx];
            for (i, &l) in rows.iter().enumerate() {
                let seg = &mut r[i * nx..(i + 1) * nx];
                seg.copy_from_slice(&self.rhs[l * nx..(l + 1) * nx]);
                for m in l.saturating_sub(2)..=2 * e {
                    let [ctt, ct, cm] = coef(l, m);
                    if ctt == 0.0 && ct == 0.0 && cm == 0.0 {
                        continue;
                    }
                    let [mx, ms, ax] = products[m].as_ref().expect("earlier node solved");
                    for k in 0..nx {
                        seg[k] -= -ctt * mx[k] + ct * ms[k] + cm * ax[k];
                    }
                }
            }
            let x = lu.solve(&r)?;
            for (j, &node) in cols.iter().enumerate() {
                let v = x[j * nx..(j + 1) * nx].to_vec();
                products[node] = Some([self.spatial.m_x.matvec(&v)?, self.spatial.m_x_sigma.matvec(&v)?, self.spatial.a_xx.matvec(&v)?]);
                nodes[node] = v;
            }
            // later rows reach back to node 2e at most
            for m in (2 * e).saturating_sub(2)..2 * e {
                products[m] = None;
            }
        }
        Ok(nodes.into_iter().skip(1).flatten().collect())
    }
}

/// Solution in nodal form: one all-edge coefficient vector per quadratic
/// time node, node 0 being the prescribed initial interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionCoefficients {
    pub partition: TimePartition,
    pub nodal: Vec<Vec<f64>>,
    /// free-unknown vector as returned by the linear solve
    pub free: Vec<f64>,
    pub n_free: usize,
    pub residual: f64,
}

impl SolutionCoefficients {
    fn new(system: &SpaceTimeSystem, free: Vec<f64>, residual: f64) -> Self {
        let nx = system.n_space();
        let mut nodal = Vec::with_capacity(system.n_time() + 1);
        nodal.push(system.initial_coefficients.clone());
        for block in free.chunks(nx) {
            nodal.push(system.dofmap.extend(block));
        }
        SolutionCoefficients { partition: system.partition.clone(), nodal, free, n_free: nx, residual }
    }

    /// Coefficients at quadratic node `kappa` over all edges.
    pub fn node(&self, kappa: usize) -> &[f64] {
        &self.nodal[kappa]
    }

    /// Rows `(kappa, k, value)` for `kappa = 1..=2N` and free unknown `k`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kappa,k,value\n");
        for (i, chunk) in self.free.chunks(self.n_free.max(1)).enumerate() {
            for (k, v) in chunk.iter().enumerate() {
                s.push_str(&format!("{},{},{:e}\n", i + 1, k, v));
            }
        }
        s
    }

    /// Field, time derivative and scalar curl at `(t, x)`.
    pub fn evaluate(&self, mesh: &TriMesh, t: f64, x: Point) -> Result<PointValue> {
        let basis = self.partition.quadratic_basis_at(t).ok_or_else(|| FemError::InvalidArgument(format!("time {t} outside [0, T]")))?;
        let (tri, bary) = mesh.locate(x).ok_or_else(|| FemError::InvalidArgument(format!("point {x:?} outside the mesh")))?;
        let geo = ElementGeometry::new(mesh.triangle_points(tri))?;
        let w = geo.whitney(bary);
        let edges = mesh.triangle_edges(tri);
        let signs = mesh.triangle_edge_signs(tri);
        let mut out = PointValue::default();
        for (node, phi, dphi) in basis {
            for k in 0..3 {
                let c = signs[k] * self.nodal[node][edges[k]];
                if c == 0.0 {
                    continue;
                }
                out.value[0] += phi * c * w[k][0];
                out.value[1] += phi * c * w[k][1];
                out.time_derivative[0] += dphi * c * w[k][0];
                out.time_derivative[1] += dphi * c * w[k][1];
                out.curl += phi * c * geo.whitney_curl();
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointValue {
    pub value: Point,
    pub time_derivative: Point,
    pub curl: f64,
}

/// Assembles and solves in one call.
pub fn solve(problem: &ProblemData) -> Result<SolutionCoefficients> {
    SpaceTimeSystem::assemble(problem)?.solve()
}
