//! Low-frequency eigenshapes of a wavy quad grid and a band-pass edit.

use pmspace::corpus;
use pmspace::mesh::{planarity_report, write_obj};
use pmspace::shapes::{bandpass_apply, eigenshapes, graph_laplacian};
use pmspace::subspace::{subspace, CaseAssignment};

fn main() -> pmspace::Result<()> {
    let mesh = corpus::wavy_grid(8, 8);
    let basis = subspace(&mesh, &CaseAssignment::affine())?;
    let spectrum = eigenshapes(&basis, &graph_laplacian(&mesh), None);
    println!("ndof {}", basis.ndof());
    for (k, f) in spectrum.frequencies.iter().take(8).enumerate() {
        println!("  shape {k}: frequency {f:.6}, residual {:.1e}", spectrum.shapes[k].residual);
    }

    let (low, high) = (0.05, 0.5);
    let out = bandpass_apply(&mesh, &spectrum, low, high, 0.3)?;
    println!(
        "band [{low}, {high}] gain 0.3: planarity {:.1e}",
        planarity_report(&out)?.max
    );
    let path = std::env::temp_dir().join("pmspace_bandpass.obj");
    std::fs::write(&path, write_obj(&out)).expect("writable temp dir");
    println!("wrote {}", path.display());
    Ok(())
}
