//! Fundamental shapes: projections of a vertex impulse, smoothed by lambda.

use pmspace::corpus;
use pmspace::shapes::{fundamental_shape, graph_laplacian};
use pmspace::subspace::{subspace, CaseAssignment};

fn main() -> pmspace::Result<()> {
    let mesh = corpus::hex_half_sphere(2);
    let basis = subspace(&mesh, &CaseAssignment::vertical())?;
    let l = graph_laplacian(&mesh);
    // Impulse at the apex.
    let center = (0..mesh.num_vertices())
        .max_by(|&a, &b| mesh.vertex(a).z.total_cmp(&mesh.vertex(b).z))
        .unwrap();
    for lambda in [0.0, 1.0, 10.0, 100.0] {
        let s = fundamental_shape(&basis, &l, center, lambda)?;
        let d = &s.displacement;
        println!(
            "lambda {lambda:>5}: |d| {:.4}, |L d| {:.4}, support above 1e-3: {}, residual {:.1e}",
            d.norm(),
            l.apply(d).norm(),
            d.iter().filter(|v| v.abs() > 1e-3).count(),
            s.residual
        );
    }
    Ok(())
}
