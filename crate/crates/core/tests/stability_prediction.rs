//! The eigenvalue classifier, fed with the largest discrete spatial eigenvalue,
//! must explain which cells of a step-size sweep blow up.

use wavefem::mesh::{build_structured_mesh, Rectangle};
use wavefem::spatial::{assemble_spatial, EdgeDofMap};
use wavefem::stability::{classify, max_generalized_eigenvalue, Criterion};
use wavefem::system::SolverKind;
use wavefem::verification::{run_cfl_sweep, CaseName, ManufacturedCase};

const BLOW_UP: f64 = 1e3;

#[test]
fn blow_up_cells_are_predicted_unstable() {
    let case = ManufacturedCase::new(CaseName::A2);
    let ns = [4, 8, 16];
    let sweep = run_cfl_sweep(&case, &ns, &[5, 10, 20, 40, 80], SolverKind::TimeMarching).unwrap();
    let mut blown = 0;
    for (row, &n) in sweep.cells.iter().zip(&ns) {
        let mesh = build_structured_mesh(Rectangle::UNIT, n).unwrap();
        let dm = EdgeDofMap::new(&mesh);
        let sp = assemble_spatial(&mesh, &case.material(), &dm).unwrap();
        let lambda = max_generalized_eigenvalue(&sp.a_xx, &sp.m_x, 1e-8, 500).unwrap();
        // the finest time step is well inside the stable regime for every row
        let reference = row.last().unwrap().errors.seminorm;
        for cell in row {
            let q = lambda * cell.h_t * cell.h_t;
            let blows_up = cell.errors.seminorm > BLOW_UP * reference;
            let stable = classify(q, Criterion::StrictNoBand);
            if blows_up {
                blown += 1;
                assert!(!stable, "n = {n}, N_t = {}: q = {q:.2} blew up but is classified stable", cell.n_time);
            }
            if stable {
                assert!(
                    cell.errors.seminorm < 2.0 * reference,
                    "n = {n}, N_t = {}: q = {q:.2} classified stable but semi {:.3e} vs {:.3e}",
                    cell.n_time,
                    cell.errors.seminorm,
                    reference
                );
            }
        }
    }
    assert!(blown >= 1, "the sweep must contain a blow-up cell");
}
