//! Dimensions of the three single-case subspaces of a cube, and how they nest.

use pmspace::corpus;
use pmspace::mesh::counts;
use pmspace::subspace::{containment_check, min_ndof_bound, subspace, CaseAssignment, CaseKind};

fn main() -> pmspace::Result<()> {
    for (name, mesh) in [("cube", corpus::cube()), ("open box", corpus::cube_minus_face())] {
        let c = counts(&mesh);
        println!("{name}: {} vertices, {} faces", c.n_v, c.n_f);
        let mut bases = Vec::new();
        for kind in CaseKind::ALL {
            let basis = subspace(&mesh, &CaseAssignment::uniform(kind.face_case()))?;
            println!(
                "  {:<8} ndof {:>2}  (lower bound {})",
                kind.name(),
                basis.ndof(),
                min_ndof_bound(&c, kind)
            );
            bases.push((kind, basis));
        }
        let r = containment_check(&bases[0].1, &bases[1].1)?;
        println!("  affine vs parallel: {:?}, intersection {}", r.relation, r.dim_intersection);
    }
    Ok(())
}
