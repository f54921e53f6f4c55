//! Lowest-order Nédélec (first kind) and Raviart-Thomas elements on triangles.
//!
//! Local edge `k` of a triangle is opposite local vertex `k` and runs from
//! vertex `k+1` to vertex `k+2`. The local Whitney function is
//! `λ_a ∇λ_b − λ_b ∇λ_a` with `(a, b) = (k+1, k+2)`; the global function is the
//! local one times the edge sign from [`TriMesh::triangle_edge_signs`]. The
//! Raviart-Thomas function of the same edge is the Whitney function rotated
//! clockwise, `(w_2, −w_1)`, so both families share one orientation.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{FemError, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::{Point, TriMesh};
use crate::quadrature::{BaryPoint, TriangleRule};

pub type Tensor2 = [[f64; 2]; 2];
type TensorField = Arc<dyn Fn(Point) -> Tensor2 + Send + Sync>;
type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Material coefficients `ε`, `μ⁻¹` and `σ` as point functions.
#[derive(Clone)]
pub struct MaterialModel {
    epsilon: TensorField,
    mu_inverse: ScalarField,
    sigma: TensorField,
    sigma_vanishes: bool,
}

impl fmt::Debug for MaterialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaterialModel").field("sigma_vanishes", &self.sigma_vanishes).finish_non_exhaustive()
    }
}

impl MaterialModel {
    pub fn new(
        epsilon: impl Fn(Point) -> Tensor2 + Send + Sync + 'static,
        mu_inverse: impl Fn(Point) -> f64 + Send + Sync + 'static,
        sigma: Option<Arc<dyn Fn(Point) -> Tensor2 + Send + Sync>>,
    ) -> Self {
        let sigma_vanishes = sigma.is_none();
        MaterialModel {
            epsilon: Arc::new(epsilon),
            mu_inverse: Arc::new(mu_inverse),
            sigma: sigma.unwrap_or_else(|| Arc::new(|_| [[0.0; 2]; 2])),
            sigma_vanishes,
        }
    }

    /// `ε = eps·I`, `μ⁻¹ = nu`, `σ = 0`.
    pub fn constant(eps: f64, nu: f64) -> Self {
        MaterialModel::new(move |_| scalar_tensor(eps), move |_| nu, None)
    }

    /// Unit `ε` and `μ`, no conductivity.
    pub fn vacuum() -> Self {
        MaterialModel::constant(1.0, 1.0)
    }

    /// Replaces `σ` by `value·I` inside `region` and zero elsewhere.
    pub fn with_sigma_region(mut self, value: f64, region: impl Fn(Point) -> bool + Send + Sync + 'static) -> Self {
        self.sigma = Arc::new(move |p| if region(p) { scalar_tensor(value) } else { [[0.0; 2]; 2] });
        self.sigma_vanishes = value == 0.0;
        self
    }

    /// Replaces `σ` by an arbitrary tensor field.
    pub fn with_sigma(mut self, sigma: impl Fn(Point) -> Tensor2 + Send + Sync + 'static) -> Self {
        self.sigma = Arc::new(sigma);
        self.sigma_vanishes = false;
        self
    }

    pub fn epsilon(&self, p: Point) -> Tensor2 {
        (self.epsilon)(p)
    }

    pub fn mu_inverse(&self, p: Point) -> f64 {
        (self.mu_inverse)(p)
    }

    pub fn sigma(&self, p: Point) -> Tensor2 {
        (self.sigma)(p)
    }

    /// True when `σ` was never set; the damping term is then dropped.
    pub fn sigma_vanishes(&self) -> bool {
        self.sigma_vanishes
    }

    /// Checks positivity of `ε` and `μ⁻¹` and semi-definiteness of `σ` at
    /// the given points.
    pub fn validate_at(&self, points: &[Point]) -> Result<()> {
        for &p in points {
            let e = self.epsilon(p);
            if !(min_eigenvalue_sym(e) > 0.0) {
                return Err(FemError::InvalidArgument(format!("epsilon not positive definite at {p:?}")));
            }
            if !(self.mu_inverse(p) > 0.0) {
                return Err(FemError::InvalidArgument(format!("mu inverse not positive at {p:?}")));
            }
            if min_eigenvalue_sym(self.sigma(p)) < -1e-14 {
                return Err(FemError::InvalidArgument(format!("sigma not semi-definite at {p:?}")));
            }
        }
        Ok(())
    }
}

fn scalar_tensor(s: f64) -> Tensor2 {
    [[s, 0.0], [0.0, s]]
}

fn min_eigenvalue_sym(m: Tensor2) -> f64 {
    let tr = 0.5 * (m[0][0] + m[1][1]);
    let off = 0.5 * (m[0][1] + m[1][0]);
    let d = (0.25 * (m[0][0] - m[1][1]).powi(2) + off * off).sqrt();
    tr - d
}

/// Indicator of the closed diamond `|x − c_x| + |y − c_y| ≤ r`.
pub fn diamond_region(center: Point, radius: f64) -> impl Fn(Point) -> bool + Send + Sync + Clone {
    move |p: Point| (p[0] - center[0]).abs() + (p[1] - center[1]).abs() <= radius + 1e-14
}

/// Affine triangle data shared by the element routines.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub points: [Point; 3],
    pub area: f64,
    /// gradients of the barycentric coordinates
    pub grads: [Point; 3],
}

impl ElementGeometry {
    pub fn new(points: [Point; 3]) -> Result<Self> {
        let [p0, p1, p2] = points;
        let two_area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        if !(two_area > 0.0) || !two_area.is_finite() {
            return Err(FemError::DegenerateElement { index: 0, area: 0.5 * two_area });
        }
        let inv = 1.0 / two_area;
        let grads = [
            [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
            [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
            [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
        ];
        Ok(ElementGeometry { points, area: 0.5 * two_area, grads })
    }

    pub fn point_at(&self, bary: [f64; 3]) -> Point {
        let [a, b, c] = self.points;
        [bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0], bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1]]
    }

    /// Unsigned local Whitney functions at `bary`.
    pub fn whitney(&self, bary: [f64; 3]) -> [Point; 3] {
        let mut out = [[0.0; 2]; 3];
        for (k, w) in out.iter_mut().enumerate() {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            for d in 0..2 {
                w[d] = bary[a] * self.grads[b][d] - bary[b] * self.grads[a][d];
            }
        }
        out
    }

    /// Scalar curl of every local Whitney function.
    pub fn whitney_curl(&self) -> f64 {
        1.0 / self.area
    }

    /// Unsigned local Raviart-Thomas functions at `bary`.
    pub fn raviart_thomas(&self, bary: [f64; 3]) -> [Point; 3] {
        let x = self.point_at(bary);
        let s = 0.5 / self.area;
        let mut out = [[0.0; 2]; 3];
        for (k, v) in out.iter_mut().enumerate() {
            v[0] = s * (x[0] - self.points[k][0]);
            v[1] = s * (x[1] - self.points[k][1]);
        }
        out
    }
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn tensor_apply(m: Tensor2, v: Point) -> Point {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Local (unsigned) Nédélec element matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NedelecElementMatrices {
    pub curl_curl: [[f64; 3]; 3],
    pub mass_eps: [[f64; 3]; 3],
    pub mass_sigma: [[f64; 3]; 3],
}

pub fn nedelec_element_matrices(points: [Point; 3], material: &MaterialModel) -> Result<NedelecElementMatrices> {
    nedelec_element_matrices_with(points, material, TriangleRule::Degree2)
}

/// As [`nedelec_element_matrices`] with a chosen quadrature for the masses.
pub fn nedelec_element_matrices_with(points: [Point; 3], material: &MaterialModel, rule: TriangleRule) -> Result<NedelecElementMatrices> {
    let geo = ElementGeometry::new(points)?;
    let qp = rule.points();
    let mut out = NedelecElementMatrices { curl_curl: [[0.0; 3]; 3], mass_eps: [[0.0; 3]; 3], mass_sigma: [[0.0; 3]; 3] };
    let curl = geo.whitney_curl();
    let mut nu = 0.0;
    for BaryPoint { bary, weight } in &qp {
        let x = geo.point_at(*bary);
        nu += weight * material.mu_inverse(x);
        let w = geo.whitney(*bary);
        let eps = material.epsilon(x);
        let sig = if material.sigma_vanishes() { None } else { Some(material.sigma(x)) };
        for j in 0..3 {
            let ew = tensor_apply(eps, w[j]);
            let sw = sig.map(|s| tensor_apply(s, w[j]));
            for i in 0..3 {
                out.mass_eps[i][j] += weight * geo.area * dot(ew, w[i]);
                if let Some(sw) = sw {
                    out.mass_sigma[i][j] += weight * geo.area * dot(sw, w[i]);
                }
            }
        }
    }
    let cc = nu * curl * curl * geo.area;
    for row in out.curl_curl.iter_mut() {
        for v in row.iter_mut() {
            *v = cc;
        }
    }
    Ok(out)
}

/// Local (unsigned) Raviart-Thomas mass matrix.
pub fn rt_element_matrix(points: [Point; 3]) -> Result<[[f64; 3]; 3]> {
    let geo = ElementGeometry::new(points)?;
    let mut m = [[0.0; 3]; 3];
    for BaryPoint { bary, weight } in TriangleRule::Degree2.points() {
        let v = geo.raviart_thomas(bary);
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += weight * geo.area * dot(v[i], v[j]);
            }
        }
    }
    Ok(m)
}

/// Map between global edges and free (interior) Nédélec unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeDofMap {
    free_dofs: Vec<usize>,
    edge_to_free: Vec<Option<usize>>,
}

impl EdgeDofMap {
    pub fn new(mesh: &TriMesh) -> Self {
        let mut free_dofs = Vec::new();
        let mut edge_to_free = vec![None; mesh.n_edges()];
        for (e, slot) in edge_to_free.iter_mut().enumerate() {
            if !mesh.is_boundary_edge(e) {
                *slot = Some(free_dofs.len());
                free_dofs.push(e);
            }
        }
        EdgeDofMap { free_dofs, edge_to_free }
    }

    /// Global edge index of every free unknown.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_to_free.len()
    }

    pub fn free_index(&self, edge: usize) -> Option<usize> {
        self.edge_to_free[edge]
    }

    /// Restricts an all-edge vector to the free unknowns.
    pub fn restrict(&self, all: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&e| all[e]).collect()
    }

    /// Extends a free vector by zeros on boundary edges.
    pub fn extend(&self, free: &[f64]) -> Vec<f64> {
        let mut all = vec![0.0; self.n_edges()];
        for (i, &e) in self.free_dofs.iter().enumerate() {
            all[e] = free[i];
        }
        all
    }

    fn check(&self, mesh: &TriMesh) -> Result<()> {
        if self.n_edges() != mesh.n_edges() {
            return Err(FemError::DimensionMismatch { expected: mesh.n_edges(), found: self.n_edges() });
        }
        Ok(())
    }
}

/// Global Nédélec matrices restricted to free unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMatrices {
    pub a_xx: SparseMatrix,
    pub m_x: SparseMatrix,
    pub m_x_sigma: SparseMatrix,
    /// `σ ≡ 0`: the damping block is empty and dropped from the system.
    pub sigma_vanishes: bool,
}

impl SpatialMatrices {
    pub fn dim(&self) -> usize {
        self.a_xx.n_rows()
    }
}

pub fn assemble_spatial(mesh: &TriMesh, material: &MaterialModel, dofmap: &EdgeDofMap) -> Result<SpatialMatrices> {
    assemble_spatial_with(mesh, material, dofmap, TriangleRule::Degree2)
}

pub fn assemble_spatial_with(mesh: &TriMesh, material: &MaterialModel, dofmap: &EdgeDofMap, rule: TriangleRule) -> Result<SpatialMatrices> {
    dofmap.check(mesh)?;
    let locals: Vec<Result<NedelecElementMatrices>> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            nedelec_element_matrices_with(mesh.triangle_points(t), material, rule).map_err(|e| match e {
                FemError::DegenerateElement { area, .. } => FemError::DegenerateElement { index: t, area },
                other => other,
            })
        })
        .collect();
    let n = dofmap.n_free();
    let mut a = Vec::with_capacity(9 * mesh.n_triangles());
    let mut m = Vec::with_capacity(9 * mesh.n_triangles());
    let mut s = Vec::new();
    for (t, local) in locals.into_iter().enumerate() {
        let local = local?;
        let edges = mesh.triangle_edges(t);
        let signs = mesh.triangle_edge_signs(t);
        for i in 0..3 {
            let Some(gi) = dofmap.free_index(edges[i]) else { continue };
            for j in 0..3 {
                let Some(gj) = dofmap.free_index(edges[j]) else { continue };
                let sg = signs[i] * signs[j];
                a.push((gi, gj, sg * local.curl_curl[i][j]));
                m.push((gi, gj, sg * local.mass_eps[i][j]));
                if !material.sigma_vanishes() && local.mass_sigma[i][j] != 0.0 {
                    s.push((gi, gj, sg * local.mass_sigma[i][j]));
                }
            }
        }
    }
    Ok(SpatialMatrices {
        a_xx: SparseMatrix::from_triplets(n, n, a)?,
        m_x: SparseMatrix::from_triplets(n, n, m)?,
        m_x_sigma: SparseMatrix::from_triplets(n, n, s)?,
        sigma_vanishes: material.sigma_vanishes(),
    })
}

/// Raviart-Thomas mass matrix over all edges.
pub fn assemble_rt_mass(mesh: &TriMesh) -> Result<SparseMatrix> {
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let local = rt_element_matrix(mesh.triangle_points(t))
            .map_err(|_| FemError::DegenerateElement { index: t, area: mesh.triangle_area(t) })?;
        let edges = mesh.triangle_edges(t);
        let signs = mesh.triangle_edge_signs(t);
        for i in 0..3 {
            for j in 0..3 {
                trip.push((edges[i], edges[j], signs[i] * signs[j] * local[i][j]));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.n_edges(), mesh.n_edges(), trip)
}

/// `∫ ψ^RT_j · ψ^N_l` with free Nédélec rows `l` and all-edge RT columns `j`.
pub fn assemble_rt_nedelec_mixed(mesh: &TriMesh, dofmap: &EdgeDofMap) -> Result<SparseMatrix> {
    dofmap.check(mesh)?;
    let qp = TriangleRule::Degree2.points();
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let geo = ElementGeometry::new(mesh.triangle_points(t))
            .map_err(|_| FemError::DegenerateElement { index: t, area: mesh.triangle_area(t) })?;
        let mut local = [[0.0; 3]; 3];
        for BaryPoint { bary, weight } in &qp {
            let w = geo.whitney(*bary);
            let r = geo.raviart_thomas(*bary);
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += weight * geo.area * dot(w[i], r[j]);
                }
            }
        }
        let edges = mesh.triangle_edges(t);
        let signs = mesh.triangle_edge_signs(t);
        for i in 0..3 {
            let Some(gi) = dofmap.free_index(edges[i]) else { continue };
            for j in 0..3 {
                trip.push((gi, edges[j], signs[i] * signs[j] * local[i][j]));
            }
        }
    }
    SparseMatrix::from_triplets(dofmap.n_free(), mesh.n_edges(), trip)
}

/// `∫ (ε f) · ψ^N_l` for all free unknowns, degree-4 quadrature.
pub fn load_vector(mesh: &TriMesh, dofmap: &EdgeDofMap, material: &MaterialModel, f: &(dyn Fn(Point) -> Point + Sync)) -> Result<Vec<f64>> {
    dofmap.check(mesh)?;
    let qp = TriangleRule::Degree4.points();
    let mut out = vec![0.0; dofmap.n_free()];
    for t in 0..mesh.n_triangles() {
        let geo = ElementGeometry::new(mesh.triangle_points(t))
            .map_err(|_| FemError::DegenerateElement { index: t, area: mesh.triangle_area(t) })?;
        let edges = mesh.triangle_edges(t);
        let signs = mesh.triangle_edge_signs(t);
        for BaryPoint { bary, weight } in &qp {
            let x = geo.point_at(*bary);
            let v = tensor_apply(material.epsilon(x), f(x));
            let w = geo.whitney(*bary);
            for k in 0..3 {
                if let Some(g) = dofmap.free_index(edges[k]) {
                    out[g] += weight * geo.area * signs[k] * dot(v, w[k]);
                }
            }
        }
    }
    Ok(out)
}

/// Nédélec interpolant over all edges: tangential value at the edge midpoint
/// times the edge vector (global direction).
pub fn nedelec_interpolate(mesh: &TriMesh, f: &dyn Fn(Point) -> Point) -> Vec<f64> {
    (0..mesh.n_edges()).map(|e| dot(f(mesh.edge_midpoint(e)), mesh.edge_vector(e))).collect()
}

/// Value and scalar curl of the Nédélec field with all-edge coefficients
/// `coeffs` on triangle `t` at barycentric point `bary`.
pub fn evaluate_nedelec(mesh: &TriMesh, coeffs: &[f64], t: usize, bary: [f64; 3]) -> Result<(Point, f64)> {
    let geo = ElementGeometry::new(mesh.triangle_points(t))?;
    let edges = mesh.triangle_edges(t);
    let signs = mesh.triangle_edge_signs(t);
    let w = geo.whitney(bary);
    let mut v = [0.0; 2];
    let mut curl = 0.0;
    for k in 0..3 {
        let c = signs[k] * coeffs[edges[k]];
        v[0] += c * w[k][0];
        v[1] += c * w[k][1];
        curl += c * geo.whitney_curl();
    }
    Ok((v, curl))
}

/// Coefficients (free unknowns) of the gradient of the hat function at an
/// interior vertex.
pub fn discrete_gradient(mesh: &TriMesh, dofmap: &EdgeDofMap, vertex: usize) -> Vec<f64> {
    let mut g = vec![0.0; dofmap.n_free()];
    for (e, &[lo, hi]) in mesh.edges().iter().enumerate() {
        let Some(i) = dofmap.free_index(e) else { continue };
        if hi == vertex {
            g[i] = 1.0;
        } else if lo == vertex {
            g[i] = -1.0;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, Rectangle};

    const REF: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn reference_curl_curl_is_two() {
        let em = nedelec_element_matrices(REF, &MaterialModel::vacuum()).unwrap();
        for row in em.curl_curl {
            for v in row {
                assert!((v.abs() - 2.0).abs() < 1e-14);
            }
        }
        assert_eq!(em.mass_sigma, [[0.0; 3]; 3]);
    }

    #[test]
    fn whitney_tangential_moments_are_kronecker() {
        let geo = ElementGeometry::new([[0.2, 0.1], [1.3, 0.4], [0.5, 1.7]]).unwrap();
        for k in 0..3 {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let tau = [geo.points[b][0] - geo.points[a][0], geo.points[b][1] - geo.points[a][1]];
            for j in 0..3 {
                // linear along the edge, two-point Gauss is exact
                let mut moment = 0.0;
                for s in [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()] {
                    let mut bary = [0.0; 3];
                    bary[a] = 1.0 - s;
                    bary[b] = s;
                    moment += 0.5 * dot(geo.whitney(bary)[j], tau);
                }
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((moment - expect).abs() < 1e-13, "edge {k} basis {j}: {moment}");
            }
        }
    }

    #[test]
    fn rt_mass_matches_rotated_nedelec_mass() {
        let pts = [[0.2, 0.1], [1.3, 0.4], [0.5, 1.7]];
        let rt = rt_element_matrix(pts).unwrap();
        let ned = nedelec_element_matrices(pts, &MaterialModel::vacuum()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((rt[i][j] - ned.mass_eps[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        assert!(rt_element_matrix([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
        assert!(nedelec_element_matrices([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], &MaterialModel::vacuum()).is_err());
    }

    #[test]
    fn n2_sizes_and_gradient_kernel() {
        let mesh = build_structured_mesh(Rectangle::UNIT, 2).unwrap();
        let map = EdgeDofMap::new(&mesh);
        assert_eq!(map.n_free(), 8);
        let sm = assemble_spatial(&mesh, &MaterialModel::vacuum(), &map).unwrap();
        assert_eq!(sm.dim(), 8);
        assert_eq!(sm.m_x_sigma.nnz(), 0);
        assert!(sm.a_xx.is_symmetric(1e-14) && sm.m_x.is_symmetric(1e-14));
        let g = discrete_gradient(&mesh, &map, 4);
        let r = sm.a_xx.matvec(&g).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn constant_field_patch_test() {
        let mesh = build_structured_mesh(Rectangle::new(0.0, 2.0, -1.0, 0.5), 3).unwrap();
        let c = [0.7, -1.3];
        let coeffs = nedelec_interpolate(&mesh, &|_| c);
        for t in 0..mesh.n_triangles() {
            let (v, curl) = evaluate_nedelec(&mesh, &coeffs, t, [1.0 / 3.0; 3]).unwrap();
            assert!((v[0] - c[0]).abs() < 1e-12 && (v[1] - c[1]).abs() < 1e-12);
            assert!(curl.abs() < 1e-12);
        }
    }

    #[test]
    fn diamond_sigma_partial_contributions() {
        let mat = MaterialModel::vacuum().with_sigma_region(1.0, diamond_region([0.5, 0.5], 0.15));
        let mesh = build_structured_mesh(Rectangle::UNIT, 8).unwrap();
        let map = EdgeDofMap::new(&mesh);
        let sm = assemble_spatial(&mesh, &mat, &map).unwrap();
        assert!(!sm.sigma_vanishes);
        assert!(sm.m_x_sigma.nnz() > 0 && sm.m_x_sigma.nnz() < sm.m_x.nnz());
        assert!(mat.validate_at(&[[0.5, 0.5], [0.0, 0.0]]).is_ok());
    }
}
