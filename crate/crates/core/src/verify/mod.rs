//! Numerical audits of the planarity relationships and dimension bounds.

mod audits;
mod polygons;
mod suite;

pub use audits::{
    case_containments, maximality_probe, regular3_checks, stencil_check, table1_audit, ContainmentFlag,
    MaximalityReport, Regular3Report, StencilReport, Table1Report, Table1Row,
    MIXED_DERIVATIVE_STENCIL, PLANAR_TOL,
};
pub use polygons::{
    generate_pairs, nonplanarity, random_planar_polygon, relationship_type, spans_planar_space,
    PairConstruction, PolygonPair, RelationshipKind, RelationshipWitness, SpanReport, RELATION_TOL,
};
pub use suite::{
    run_suite, AuditResult, Suite, SuiteReport, MAXIMALITY_TRIALS, PAIRS_PER_KIND, SPAN_SAMPLES,
};
