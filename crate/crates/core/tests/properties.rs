use num_rational::Rational64;
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

use wavefem::linalg::{kron, kron_sum, sparse_solve, DenseMatrix, KroneckerTerm, SparseMatrix};
use wavefem::mesh::{build_structured_mesh, Rectangle, TriMesh};
use wavefem::quadrature::gauss_legendre_unit;
use wavefem::spatial::{assemble_spatial, discrete_gradient, EdgeDofMap, MaterialModel};
use wavefem::stability::inverse_inequality_constant;
use wavefem::system::{evaluate_rt_projection, project_rhs_rt, RtProjection};
use wavefem::temporal::{assemble_full_temporal, quadratic_element_matrices, quadratic_reference, TimePartition};
use wavefem::verification::{source_residual, CaseName, ManufacturedCase};

fn random_sparse(rng: &mut StdRng, rows: usize, cols: usize, density: f64) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < density {
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // (A ⊗ B) vec(X) = vec(B X Aᵀ), with the outer index slow
    #[test]
    fn kronecker_vec_trick(seed in any::<u64>(), ra in 1usize..5, ca in 1usize..5, rb in 1usize..6, cb in 1usize..6) {
        let mut rng = StdRng::seed_from_u64(seed);
        let a = random_sparse(&mut rng, ra, ca, 0.7);
        let b = random_sparse(&mut rng, rb, cb, 0.7);
        let x: Vec<f64> = (0..ca * cb).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = kron(&a, &b).unwrap().matvec(&x).unwrap();
        let (ad, bd) = (a.to_dense(), b.to_dense());
        for i in 0..ra {
            for r in 0..rb {
                let mut expect = 0.0;
                for j in 0..ca {
                    for c in 0..cb {
                        expect += ad[(i, j)] * bd[(r, c)] * x[j * cb + c];
                    }
                }
                prop_assert!((y[i * rb + r] - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn kronecker_sum_is_linear(seed in any::<u64>(), n in 1usize..5, m in 1usize..5, s in -2.0f64..2.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (a1, a2) = (random_sparse(&mut rng, n, n, 0.6), random_sparse(&mut rng, n, n, 0.6));
        let b = random_sparse(&mut rng, m, m, 0.6);
        let sum = kron_sum(&[KroneckerTerm { outer: &a1, inner: &b, coeff: 1.0 }, KroneckerTerm { outer: &a2, inner: &b, coeff: s }]).unwrap();
        let combined = a1.linear_combination(1.0, &a2, s).unwrap();
        let direct = kron(&combined, &b).unwrap();
        prop_assert!(sum.to_dense().max_abs_diff(&direct.to_dense()) < 1e-14);
    }

    #[test]
    fn diagonally_dominant_solves(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut a = random_sparse(&mut rng, n, n, 0.3).to_dense();
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            a[(i, i)] = off + 1.0 + rng.random::<f64>();
        }
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = a.matvec(&x).unwrap();
        let sol = sparse_solve(&a.to_sparse(), &b).unwrap();
        let dense = a.lu().unwrap().solve(&b).unwrap();
        for i in 0..n {
            prop_assert!((sol[i] - x[i]).abs() < 1e-10);
            prop_assert!((dense[i] - x[i]).abs() < 1e-10);
        }
    }

    // Σ_i ∫ φ_j' φ_i = φ_j(T) − φ_j(0) on any partition
    #[test]
    fn advection_integrates_by_parts(nodes in prop::collection::vec(0.01f64..1.0, 1..8)) {
        let mut t = vec![0.0];
        for h in nodes {
            let last = *t.last().unwrap();
            t.push(last + h);
        }
        let p = TimePartition::from_nodes(t).unwrap();
        let (_, a_t, _) = assemble_full_temporal(&p).unwrap();
        let n = a_t.rows();
        for j in 0..n {
            let s: f64 = (0..n).map(|i| a_t[(i, j)]).sum();
            let expect = if j == 0 { -1.0 } else if j == n - 1 { 1.0 } else { 0.0 };
            prop_assert!((s - expect).abs() < 1e-13);
        }
        // ∫ φ_i' φ_j + ∫ φ_i φ_j' = boundary terms
        for i in 0..n {
            for j in 0..n {
                let sym = a_t[(i, j)] + a_t[(j, i)];
                let bnd = if i == j && i == n - 1 { 1.0 } else if i == j && i == 0 { -1.0 } else { 0.0 };
                prop_assert!((sym - bnd).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn inverse_inequality_constant_is_scale_invariant(scale in 0.01f64..100.0, shift in -5.0f64..5.0, n in 1usize..6) {
        let base = build_structured_mesh(Rectangle::UNIT, n).unwrap();
        let perturbed = jitter(&base, 0.2);
        let scaled = TriMesh::from_parts(
            perturbed.vertices().iter().map(|p| [shift + scale * p[0], shift + scale * p[1]]).collect(),
            perturbed.triangles().to_vec(),
        ).unwrap();
        let (a, b) = (inverse_inequality_constant(&perturbed).unwrap(), inverse_inequality_constant(&scaled).unwrap());
        prop_assert!((a - b).abs() < 1e-9 * a);
    }
}

/// Moves interior vertices deterministically by up to `frac` of a cell.
fn jitter(mesh: &TriMesh, frac: f64) -> TriMesh {
    let n = mesh.cells_per_side().unwrap() as f64;
    let verts = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let interior = p[0] > 1e-12 && p[0] < 1.0 - 1e-12 && p[1] > 1e-12 && p[1] < 1.0 - 1e-12;
            if interior {
                let s = (i as f64 * 0.754_877_666).fract() - 0.5;
                let c = (i as f64 * 0.569_840_29).fract() - 0.5;
                [p[0] + frac * s / n, p[1] + frac * c / n]
            } else {
                *p
            }
        })
        .collect();
    TriMesh::from_parts(verts, mesh.triangles().to_vec()).unwrap()
}

#[test]
fn rt_projection_is_idempotent() {
    let mesh = build_structured_mesh(Rectangle::UNIT, 3).unwrap();
    let partition = TimePartition::from_nodes(vec![0.0, 0.3, 0.5, 1.1]).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    let coefficients: Vec<Vec<f64>> = (0..4).map(|_| (0..mesh.n_edges()).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let original = RtProjection { coefficients };
    let field = |t: f64, x: [f64; 2]| evaluate_rt_projection(&original, &mesh, &partition, t, x).unwrap();
    let again = project_rhs_rt(&field, &mesh, &partition).unwrap();
    for (a, b) in again.coefficients.iter().flatten().zip(original.coefficients.iter().flatten()) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn discrete_gradients_span_curl_kernel() {
    for mesh in [build_structured_mesh(Rectangle::UNIT, 4).unwrap(), jitter(&build_structured_mesh(Rectangle::UNIT, 5).unwrap(), 0.3)] {
        let dm = EdgeDofMap::new(&mesh);
        let sp = assemble_spatial(&mesh, &MaterialModel::vacuum(), &dm).unwrap();
        for v in 0..mesh.n_vertices() {
            let p = mesh.vertices()[v];
            if p[0] <= 1e-12 || p[0] >= 1.0 - 1e-12 || p[1] <= 1e-12 || p[1] >= 1.0 - 1e-12 {
                continue;
            }
            let g = discrete_gradient(&mesh, &dm, v);
            let r = sp.a_xx.matvec(&g).unwrap();
            assert!(r.iter().all(|x| x.abs() < 1e-12));
        }
    }
}

#[test]
fn temporal_matrices_match_quadrature_oracle() {
    // degree-4 Gauss rule per element, directly on the quadratic basis
    let p = TimePartition::from_nodes(vec![0.0, 0.2, 0.45, 1.0, 1.1]).unwrap();
    let (a_tt, a_t, m_t) = assemble_full_temporal(&p).unwrap();
    let n = a_tt.rows();
    let (mut qa_tt, mut qa_t, mut qm) = (DenseMatrix::zeros(n, n), DenseMatrix::zeros(n, n), DenseMatrix::zeros(n, n));
    let rule = gauss_legendre_unit(4);
    for e in 0..p.n_elements() {
        let h = p.element_len(e);
        for &(s, w) in &rule {
            let (v, d) = quadratic_reference(s);
            for i in 0..3 {
                for j in 0..3 {
                    let (gi, gj) = (2 * e + i, 2 * e + j);
                    qa_tt[(gi, gj)] += w * h * d[i] * d[j] / (h * h);
                    qa_t[(gi, gj)] += w * h * v[i] * d[j] / h;
                    qm[(gi, gj)] += w * h * v[i] * v[j];
                }
            }
        }
    }
    assert!(a_tt.max_abs_diff(&qa_tt) < 1e-13);
    assert!(a_t.max_abs_diff(&qa_t) < 1e-13);
    assert!(m_t.max_abs_diff(&qm) < 1e-13);
}

#[test]
fn element_matrices_match_exact_rational_integrals() {
    // basis (1−s)(1−2s), 4s(1−s), s(2s−1) as ascending coefficient vectors
    let basis: [[i64; 3]; 3] = [[1, -3, 2], [0, 4, -4], [0, -1, 2]];
    let deriv = |c: &[i64; 3]| [c[1], 2 * c[2], 0];
    let integrate = |a: &[i64; 3], b: &[i64; 3]| {
        let mut s = Rational64::from_integer(0);
        for i in 0..3 {
            for j in 0..3 {
                s += Rational64::new(a[i] * b[j], (i + j + 1) as i64);
            }
        }
        s
    };
    let em = quadratic_element_matrices(1.0).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let m = integrate(&basis[i], &basis[j]);
            let k = integrate(&deriv(&basis[i]), &deriv(&basis[j]));
            let c = integrate(&basis[i], &deriv(&basis[j]));
            let f = |r: Rational64| *r.numer() as f64 / *r.denom() as f64;
            assert_eq!(m * 30, Rational64::from_integer([[4, 2, -1], [2, 16, 2], [-1, 2, 4]][i][j]));
            assert_eq!(k * 3, Rational64::from_integer([[7, -8, 1], [-8, 16, -8], [1, -8, 7]][i][j]));
            assert!((em.mass[i][j] - f(m)).abs() < 1e-15);
            assert!((em.stiffness[i][j] - f(k)).abs() < 1e-15);
            assert!((em.advection[i][j] - f(c)).abs() < 1e-15);
        }
    }
}

#[test]
fn manufactured_sources_satisfy_the_equation() {
    let mut rng = StdRng::seed_from_u64(2024);
    for name in [CaseName::A1, CaseName::A2, CaseName::A3] {
        let case = ManufacturedCase::new(name);
        for _ in 0..1000 {
            let t = rng.random_range(0.05..case.end_time);
            let x = [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)];
            let r = source_residual(&case, t, x, 1e-3);
            assert!(r < 1e-6, "{name} t={t} x={x:?}: {r:e}");
        }
    }
}
