//! From a bare graph to a shaped mesh: flatten, subdivide, then lift with an
//! eigenshape. Any flat embedding is planar, so it can seed a subspace.

use pmspace::corpus;
use pmspace::mesh::{halfedge_subdivide, planarity_report, tutte_flatten, BoundaryShape};
use pmspace::shapes::{eigenshapes, graph_laplacian};
use pmspace::subspace::{subspace, CaseAssignment};

fn main() -> pmspace::Result<()> {
    let curved = corpus::hex_half_sphere(2);
    let flat = tutte_flatten(&curved, &BoundaryShape::Circle)?;
    println!("flattened: planarity {:.1e}", planarity_report(&flat)?.max);

    for (name, mesh) in [("flat", flat.clone()), ("subdivided", halfedge_subdivide(&flat))] {
        let basis = subspace(&mesh, &CaseAssignment::vertical())?;
        let spectrum = eigenshapes(&basis, &graph_laplacian(&mesh), Some(12));
        // Skip the shapes that stay in the plane.
        let lift = spectrum
            .shapes
            .iter()
            .find(|s| {
                let n = mesh.num_vertices();
                s.displacement.rows(2 * n, n).norm() > 0.5
            })
            .expect("a vertical shape");
        let lifted = mesh.displaced(&(&lift.displacement * 0.5))?;
        println!(
            "{name:<10} ndof {:>3}: lifted with {:?}, planarity {:.1e}",
            basis.ndof(),
            lift.label,
            planarity_report(&lifted)?.max
        );
    }
    Ok(())
}
