//! Polar duals and editing a mesh through its dual.

use pmspace::corpus;
use pmspace::dual::{dual_edit, polar_dual, primal_from_dual, DualEdit};
use pmspace::mesh::planarity_report;
use pmspace::subspace::CaseAssignment;
use pmspace::Vec3;

fn main() -> pmspace::Result<()> {
    let cube = corpus::centered_cube(1.0);
    let d = polar_dual(&cube, Some(Vec3::zeros()))?;
    println!("cube dual: {} vertices, {} faces", d.mesh.num_vertices(), d.mesh.num_faces());
    let back = primal_from_dual(&d, &cube)?;
    let err = (back.to_vec() - cube.to_vec()).amax();
    println!("round trip error {err:.1e}");

    let solid = corpus::truncated_octahedron();
    for k in [1, 4, 8] {
        let edit = DualEdit::Eigenshape { index: k, amplitude: 0.1 };
        let r = dual_edit(&solid, &CaseAssignment::affine(), &edit)?;
        let res = r.residuals.iter().copied().fold(0.0, f64::max);
        println!(
            "dual eigenshape {k}: reconstruction residual {res:.1e}, primal planarity {:.1e}",
            planarity_report(&r.mesh)?.max
        );
    }
    Ok(())
}
