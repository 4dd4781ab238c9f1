//! Sparse shapes: exact where the grid structure allows it, otherwise the
//! best residual the pursuit reaches.

use pmspace::corpus;
use pmspace::shapes::{sparse_pursuit, support_of};
use pmspace::subspace::{subspace, CaseAssignment};

fn main() -> pmspace::Result<()> {
    for (name, mesh) in [("flat grid", corpus::quad_grid(6, 6)), ("wavy grid", corpus::wavy_grid(6, 6))] {
        let basis = subspace(&mesh, &CaseAssignment::affine())?;
        let p = sparse_pursuit(&basis, Some(3), 7, 1e-10)?;
        println!(
            "{name}: support {:?}, residual {:.1e}, converged {}",
            support_of(&p.best.displacement),
            p.best.residual,
            p.converged
        );
    }

    // Affine hexagons only move globally, so no small support suffices.
    let cap = corpus::hex_half_sphere(2);
    let basis = subspace(&cap, &CaseAssignment::affine())?;
    let p = sparse_pursuit(&basis, None, 8, 1e-10)?;
    println!("hex cap residual trace:");
    for (s, r) in p.supports.iter().zip(&p.trace) {
        println!("  {} vertices: {r:.2e}", s.len());
    }
    println!("converged {}", p.converged);
    Ok(())
}
