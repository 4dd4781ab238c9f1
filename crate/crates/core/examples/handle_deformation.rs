//! Drag the apex of a hexagonal cap. Affine faces only allow global motions;
//! vertical faces let the cap bend.

use pmspace::corpus;
use pmspace::deform::{deform, DeformParams, Energy, Handle};
use pmspace::mesh::planarity_report;
use pmspace::subspace::{subspace, CaseAssignment};
use pmspace::Vec3;

fn main() -> pmspace::Result<()> {
    let mesh = corpus::hex_half_sphere(2);
    let topo = mesh.topology();
    let boundary: Vec<usize> = topo.boundary_loops().concat();
    let apex = (0..mesh.num_vertices())
        .max_by(|&a, &b| mesh.vertex(a).z.total_cmp(&mesh.vertex(b).z))
        .expect("nonempty");
    let mut handles: Vec<Handle> = boundary.iter().map(|&v| Handle::soft(v, mesh.vertex(v))).collect();
    handles.push(Handle::soft(apex, mesh.vertex(apex) + Vec3::new(0.0, 0.0, 0.3)));

    let params = DeformParams {
        energy: Energy::Asap,
        ..Default::default()
    };
    for (name, a) in [("affine", CaseAssignment::affine()), ("vertical", CaseAssignment::vertical())] {
        let basis = subspace(&mesh, &a)?;
        let r = deform(&basis, &mesh, &handles, &params)?;
        let moved = (r.mesh.vertex(apex) - mesh.vertex(apex)).norm();
        println!(
            "{name:<8} ndof {:>3}: {} iterations, final energy {:.4e}, apex moved {moved:.4}, planarity {:.1e}",
            basis.ndof(),
            r.iterations,
            r.energy_trace.last().copied().unwrap_or(0.0),
            planarity_report(&r.mesh)?.max
        );
    }
    Ok(())
}
