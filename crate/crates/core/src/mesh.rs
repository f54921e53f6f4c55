//! Structured triangulations of axis-aligned rectangles.
//!
//! Every square cell of an `n x n` grid is split along the diagonal running
//! from its lower-left to its upper-right corner, so all triangles are
//! congruent isosceles right triangles. Edges are stored once with a global
//! direction from the smaller to the larger vertex index; each triangle keeps
//! its three edges in the order "opposite local vertex 0, 1, 2" together with
//! the sign relating the local counter-clockwise direction to the global one.

use std::fmt::Write as _;

use crate::error::{FemError, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rectangle {
    pub const UNIT: Rectangle = Rectangle { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 };

    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Rectangle { x_min, x_max, y_min, y_max }
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p[0] >= self.x_min - tol && p[0] <= self.x_max + tol && p[1] >= self.y_min - tol && p[1] <= self.y_max + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GridInfo {
    rect: Rectangle,
    n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    triangle_edge_signs: Vec<[f64; 3]>,
    boundary_edges: Vec<bool>,
    grid: Option<GridInfo>,
}

/// Size and shape measures of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshMetrics {
    pub h_max: f64,
    pub h_min: f64,
    pub quasi_uniformity: f64,
    /// max over elements of diameter / inradius
    pub shape_constant_cf: f64,
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Triangulates `rect` with `n_per_side` cells along each axis.
pub fn build_structured_mesh(rect: Rectangle, n_per_side: usize) -> Result<TriMesh> {
    if n_per_side == 0 {
        return Err(FemError::InvalidArgument("n_per_side must be at least 1".into()));
    }
    if !(rect.x_max > rect.x_min && rect.y_max > rect.y_min) || !rect.area().is_finite() {
        return Err(FemError::InvalidArgument(format!("degenerate rectangle {rect:?}")));
    }
    let n = n_per_side;
    let np = n.checked_add(1).and_then(|m| m.checked_mul(m)).ok_or_else(|| FemError::Capacity(format!("{n} cells per side")))?;
    let n_tri = n.checked_mul(n).and_then(|m| m.checked_mul(2)).ok_or_else(|| FemError::Capacity(format!("{n} cells per side")))?;
    // 3n^2 + 2n edges must also fit
    n.checked_mul(n)
        .and_then(|m| m.checked_mul(3))
        .and_then(|m| m.checked_add(2 * n))
        .ok_or_else(|| FemError::Capacity(format!("{n} cells per side")))?;

    let dx = (rect.x_max - rect.x_min) / n as f64;
    let dy = (rect.y_max - rect.y_min) / n as f64;
    let mut vertices = Vec::with_capacity(np);
    for j in 0..=n {
        for i in 0..=n {
            // exact endpoints avoid drift on the far boundary
            let x = if i == n { rect.x_max } else { rect.x_min + i as f64 * dx };
            let y = if j == n { rect.y_max } else { rect.y_min + j as f64 * dy };
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(n_tri);
    for j in 0..n {
        for i in 0..n {
            let v00 = j * (n + 1) + i;
            let v10 = v00 + 1;
            let v01 = v00 + n + 1;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut mesh = TriMesh::from_parts(vertices, triangles)?;
    mesh.grid = Some(GridInfo { rect, n });
    Ok(mesh)
}

/// Mesh of refinement level `level` starting from `n0` cells per side.
pub fn uniform_refine(rect: Rectangle, n0: usize, level: u32) -> Result<TriMesh> {
    let factor =
        1usize.checked_shl(level).filter(|_| level < usize::BITS).ok_or_else(|| FemError::Capacity(format!("refinement level {level}")))?;
    let n = n0.checked_mul(factor).ok_or_else(|| FemError::Capacity(format!("n0={n0} at level {level}")))?;
    build_structured_mesh(rect, n)
}

impl TriMesh {
    /// Builds the edge structure for an arbitrary list of counter-clockwise
    /// triangles.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<TriMesh> {
        if triangles.is_empty() {
            return Err(FemError::InvalidMesh("no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(FemError::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(FemError::DegenerateElement { index: t, area });
            }
        }

        let mut all: Vec<[usize; 2]> = Vec::with_capacity(3 * triangles.len());
        for tri in &triangles {
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                all.push([a.min(b), a.max(b)]);
            }
        }
        all.sort_unstable();
        all.dedup();
        let edges = all;

        let mut counts = vec![0u32; edges.len()];
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        let mut triangle_edge_signs = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut ids = [0usize; 3];
            let mut signs = [0.0f64; 3];
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let key = [a.min(b), a.max(b)];
                let e = edges.binary_search(&key).expect("edge collected above");
                counts[e] += 1;
                ids[k] = e;
                signs[k] = if a < b { 1.0 } else { -1.0 };
            }
            triangle_edges.push(ids);
            triangle_edge_signs.push(signs);
        }
        if let Some(e) = counts.iter().position(|&c| c > 2) {
            return Err(FemError::InvalidMesh(format!("edge {e} shared by more than two triangles")));
        }
        let boundary_edges = counts.iter().map(|&c| c == 1).collect();
        Ok(TriMesh { vertices, triangles, edges, triangle_edges, triangle_edge_signs, boundary_edges, grid: None })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Edge indices of triangle `t`, local edge `k` opposite local vertex `k`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// +1 where local edge `k` (running from local vertex k+1 to k+2) agrees
    /// with the global edge direction.
    pub fn triangle_edge_signs(&self, t: usize) -> [f64; 3] {
        self.triangle_edge_signs[t]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edges[e]
    }

    pub fn boundary_edge_flags(&self) -> &[bool] {
        &self.boundary_edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.boundary_edges.iter().filter(|&&b| b).count()
    }

    /// Cells per side when the mesh came from [`build_structured_mesh`].
    pub fn cells_per_side(&self) -> Option<usize> {
        self.grid.map(|g| g.n)
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn edge_vector(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [pb[0] - pa[0], pb[1] - pa[1]]
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Finds a triangle containing `p` and the barycentric coordinates of `p`.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        const TOL: f64 = 1e-12;
        if let Some(g) = self.grid {
            if !g.rect.contains(p, TOL) {
                return None;
            }
            let n = g.n;
            let sx = (p[0] - g.rect.x_min) / (g.rect.x_max - g.rect.x_min) * n as f64;
            let sy = (p[1] - g.rect.y_min) / (g.rect.y_max - g.rect.y_min) * n as f64;
            let i = (sx.floor().max(0.0) as usize).min(n - 1);
            let j = (sy.floor().max(0.0) as usize).min(n - 1);
            let base = 2 * (j * n + i);
            for t in [base, base + 1] {
                let bary = self.barycentric(t, p);
                if bary.iter().all(|&l| l >= -1e-10) {
                    return Some((t, bary));
                }
            }
        }
        (0..self.triangles.len()).find_map(|t| {
            let bary = self.barycentric(t, p);
            bary.iter().all(|&l| l >= -1e-10).then_some((t, bary))
        })
    }

    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let area = signed_area(a, b, c);
        [signed_area(p, b, c) / area, signed_area(a, p, c) / area, signed_area(a, b, p) / area]
    }

    /// Plain text dump: `v x y`, `t i j k`, `e i j b` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "t {} {} {}", t[0], t[1], t[2]);
        }
        for (e, edge) in self.edges.iter().enumerate() {
            let _ = writeln!(s, "e {} {} {}", edge[0], edge[1], u8::from(self.boundary_edges[e]));
        }
        s
    }

    /// Reads the `v`/`t` lines of [`TriMesh::to_text`]; edges are rebuilt.
    pub fn from_text(text: &str) -> Result<TriMesh> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            let bad = || FemError::Parse(format!("line {}: {line:?}", lineno + 1));
            match it.next() {
                Some("v") => {
                    let x = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    let y = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    vertices.push([x, y]);
                }
                Some("t") => {
                    let mut tri = [0usize; 3];
                    for v in &mut tri {
                        *v = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    }
                    triangles.push(tri);
                }
                Some("e") | None => {}
                Some(_) => return Err(bad()),
            }
        }
        TriMesh::from_parts(vertices, triangles)
    }
}

/// Diameter over inradius of a triangle.
pub fn diameter_over_inradius(p: [Point; 3]) -> f64 {
    let a = dist(p[1], p[2]);
    let b = dist(p[2], p[0]);
    let c = dist(p[0], p[1]);
    let area = signed_area(p[0], p[1], p[2]).abs();
    let inradius = 2.0 * area / (a + b + c);
    a.max(b).max(c) / inradius
}

pub fn mesh_metrics(mesh: &TriMesh) -> MeshMetrics {
    let mut h_max: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    let mut cf: f64 = 0.0;
    for t in 0..mesh.n_triangles() {
        let h = mesh.triangle_area(t).sqrt();
        h_max = h_max.max(h);
        h_min = h_min.min(h);
        cf = cf.max(diameter_over_inradius(mesh.triangle_points(t)));
    }
    MeshMetrics { h_max, h_min, quasi_uniformity: h_max / h_min, shape_constant_cf: cf }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_for_small_meshes() {
        let m1 = build_structured_mesh(Rectangle::UNIT, 1).unwrap();
        assert_eq!((m1.n_vertices(), m1.n_triangles(), m1.n_edges(), m1.n_boundary_edges()), (4, 2, 5, 4));
        let m2 = build_structured_mesh(Rectangle::UNIT, 2).unwrap();
        assert_eq!((m2.n_vertices(), m2.n_triangles(), m2.n_edges(), m2.n_boundary_edges()), (9, 8, 16, 8));
        for m in [&m1, &m2] {
            let euler = m.n_vertices() as i64 - m.n_edges() as i64 + m.n_triangles() as i64;
            assert_eq!(euler, 1);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_structured_mesh(Rectangle::UNIT, 0).is_err());
        assert!(build_structured_mesh(Rectangle::new(0.0, 0.0, 0.0, 1.0), 2).is_err());
        assert!(matches!(uniform_refine(Rectangle::UNIT, 1, 70), Err(FemError::Capacity(_))));
        assert!(matches!(uniform_refine(Rectangle::UNIT, usize::MAX / 2, 2), Err(FemError::Capacity(_))));
        let flipped = TriMesh::from_parts(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]]);
        assert!(matches!(flipped, Err(FemError::DegenerateElement { .. })));
    }

    #[test]
    fn mesh_sizes_match_reported_rows() {
        let m4 = build_structured_mesh(Rectangle::UNIT, 4).unwrap();
        let met = mesh_metrics(&m4);
        assert!((met.h_max - (1.0f64 / 32.0).sqrt()).abs() < 1e-15);
        assert!((met.h_max - 0.1768).abs() < 5e-5);
        assert_eq!(met.quasi_uniformity, 1.0);
        let m8 = mesh_metrics(&build_structured_mesh(Rectangle::UNIT, 8).unwrap());
        assert!((m8.h_max - 0.0884).abs() < 5e-5);
        let r = mesh_metrics(&uniform_refine(Rectangle::UNIT, 4, 2).unwrap());
        assert!((r.h_max - 0.0442).abs() < 5e-5);
        let l1 = mesh_metrics(&uniform_refine(Rectangle::UNIT, 2, 1).unwrap());
        assert!((l1.h_max - 0.1768).abs() < 5e-5);
        assert_eq!(uniform_refine(Rectangle::UNIT, 2, 0).unwrap(), build_structured_mesh(Rectangle::UNIT, 2).unwrap());
    }

    #[test]
    fn shape_constant_of_right_triangle() {
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        // r = (a + b - c) / 2 for legs a, b and hypotenuse c
        let r = (1.0 + 1.0 - 2.0f64.sqrt()) / 2.0;
        let expected = 2.0f64.sqrt() / r;
        assert!((diameter_over_inradius(p) - expected).abs() < 1e-12);
        assert!((expected - 2.0f64.sqrt() / (1.0 - 1.0 / 2.0f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn orientation_is_consistent_on_interior_edges() {
        for n in 1..6 {
            let m = build_structured_mesh(Rectangle::new(-1.0, 2.0, 0.5, 1.5), n).unwrap();
            let mut sum = vec![0.0; m.n_edges()];
            let mut count = vec![0; m.n_edges()];
            for t in 0..m.n_triangles() {
                for (e, s) in m.triangle_edges(t).into_iter().zip(m.triangle_edge_signs(t)) {
                    sum[e] += s;
                    count[e] += 1;
                }
            }
            for e in 0..m.n_edges() {
                if m.is_boundary_edge(e) {
                    assert_eq!(count[e], 1);
                } else {
                    assert_eq!(count[e], 2);
                    assert_eq!(sum[e], 0.0);
                }
            }
        }
    }

    #[test]
    fn text_dump_round_trips() {
        let m = build_structured_mesh(Rectangle::UNIT, 3).unwrap();
        let text = m.to_text();
        assert!(text.lines().any(|l| l.starts_with("e ") && l.ends_with(" 1")));
        let back = TriMesh::from_text(&text).unwrap();
        assert_eq!(back.edges(), m.edges());
        assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn locate_finds_points() {
        let m = build_structured_mesh(Rectangle::UNIT, 4).unwrap();
        for p in [[0.0, 0.0], [1.0, 1.0], [0.3, 0.71], [0.999, 0.001], [0.5, 0.5]] {
            let (t, bary) = m.locate(p).unwrap();
            let pts = m.triangle_points(t);
            let x = bary[0] * pts[0][0] + bary[1] * pts[1][0] + bary[2] * pts[2][0];
            let y = bary[0] * pts[0][1] + bary[1] * pts[1][1] + bary[2] * pts[2][1];
            assert!((x - p[0]).abs() < 1e-12 && (y - p[1]).abs() < 1e-12);
        }
        assert!(m.locate([1.5, 0.5]).is_none());
    }
}
