//! Snap a noisy mesh back into the subspace of its clean source.

use pmspace::corpus;
use pmspace::mesh::planarity_report;
use pmspace::subspace::{closest_pm, subspace, CaseAssignment};

fn main() -> pmspace::Result<()> {
    let source = corpus::wavy_grid(6, 5);
    let noisy = corpus::jitter(&source, 0.05, 7);
    println!("noisy planarity {:.2e}", planarity_report(&noisy)?.max);
    for (name, a) in [("affine", CaseAssignment::affine()), ("parallel", CaseAssignment::parallel())] {
        let basis = subspace(&source, &a)?;
        let free = closest_pm(&basis, &noisy, &[])?;
        let pinned = closest_pm(&basis, &noisy, &[(0, noisy.vertex(0))])?;
        println!(
            "{name:<8} closest planarity {:.1e}, distance {:.4}; pinned vertex 0 off by {:.1e}",
            planarity_report(&free)?.max,
            (free.to_vec() - noisy.to_vec()).norm(),
            (pinned.vertex(0) - noisy.vertex(0)).norm()
        );
    }
    Ok(())
}
