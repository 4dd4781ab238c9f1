//! Named audit suites with JSON and text reports.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::audits::{maximality_probe, regular3_checks, stencil_check, table1_audit};
use super::polygons::{
    generate_pairs, relationship_type, spans_planar_space, PairConstruction, RelationshipKind,
};
use crate::corpus;
use crate::error::{PmError, Result};
use crate::subspace::{CaseAssignment, CaseKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Theorem1,
    Stencil,
    Regular3,
    Table1,
    Maximality,
}

impl FromStr for Suite {
    type Err = PmError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "theorem1" => Suite::Theorem1,
            "stencil" => Suite::Stencil,
            "regular3" => Suite::Regular3,
            "table1" => Suite::Table1,
            "maximality" => Suite::Maximality,
            other => return Err(PmError::InvalidArgument(format!("unknown suite '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub details: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub audits: Vec<AuditResult>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.audits {
            out.push_str(&format!(
                "[{}] {}: {}\n",
                if a.passed { "PASS" } else { "FAIL" },
                a.name,
                a.summary
            ));
        }
        out.push_str(if self.passed {
            "all audits passed\n"
        } else {
            "some audits failed\n"
        });
        out
    }
}

/// Pair count per construction in the polygon audit.
pub const PAIRS_PER_KIND: usize = 250;
pub const SPAN_SAMPLES: usize = 50;
pub const MAXIMALITY_TRIALS: usize = 20;

fn polygon_audit(seed: u64) -> Result<AuditResult> {
    let pairs = generate_pairs(PAIRS_PER_KIND, seed);
    let mut mismatches = Vec::new();
    let mut construction_misses = 0;
    for (i, p) in pairs.iter().enumerate() {
        let w = relationship_type(&p.x, &p.y)?;
        let span = spans_planar_space(&p.x, &p.y, SPAN_SAMPLES, seed.wrapping_add(i as u64))?;
        let related = w.kind != RelationshipKind::None;
        if related != span.spans {
            mismatches.push(json!({
                "index": i,
                "construction": p.construction,
                "kind": w.kind,
                "max_nonplanarity": span.max_nonplanarity,
            }));
        }
        let expected = match p.construction {
            PairConstruction::Affine => {
                matches!(w.kind, RelationshipKind::Type1 | RelationshipKind::Both)
            }
            PairConstruction::CrossNormal | PairConstruction::ParallelPlanes => {
                matches!(w.kind, RelationshipKind::Type2 | RelationshipKind::Both)
            }
            PairConstruction::Unrelated => w.kind == RelationshipKind::None,
        };
        if !expected {
            construction_misses += 1;
        }
    }
    let passed = mismatches.is_empty() && construction_misses == 0;
    Ok(AuditResult {
        name: "theorem1".into(),
        passed,
        summary: format!(
            "{} pairs, {} span/relationship disagreements, {} construction mismatches",
            pairs.len(),
            mismatches.len(),
            construction_misses
        ),
        details: json!({ "pairs": pairs.len(), "mismatches": mismatches, "construction_misses": construction_misses }),
    })
}

fn stencil_audit(seed: u64) -> Result<AuditResult> {
    let mut rows = Vec::new();
    let mut passed = true;
    let mut worst = (0.0f64, 0.0f64, f64::INFINITY);
    for n in [4, 6, 10] {
        let r = stencil_check(n, n, 20, seed)?;
        passed &= r.passed;
        worst = (
            worst.0.max(r.stencil_error),
            worst.1.max(r.lift_max_residual),
            worst.2.min(r.xy_residual),
        );
        rows.push(serde_json::to_value(&r)?);
    }
    Ok(AuditResult {
        name: "stencil".into(),
        passed,
        summary: format!(
            "grids 4x4, 6x6, 10x10: stencil error {:.1e}, lift residual {:.1e}, min xy residual {:.3}",
            worst.0, worst.1, worst.2
        ),
        details: Value::Array(rows),
    })
}

fn regular3_audit() -> Result<AuditResult> {
    let meshes = [
        ("cube", corpus::cube()),
        ("hexagonal_prism", corpus::hexagonal_prism()),
        ("truncated_octahedron", corpus::truncated_octahedron()),
        ("dodecahedron", corpus::dodecahedron()),
        ("goldberg_2", corpus::goldberg(2)),
        (
            "irregular_cubic_solid",
            corpus::irregular_cubic_solid(7, 14),
        ),
        ("rhombic_dodecahedron", corpus::rhombic_dodecahedron()),
    ];
    let mut rows = Vec::new();
    let mut passed = true;
    let mut checked = 0;
    for (name, m) in meshes {
        let r = regular3_checks(&m)?;
        passed &= r.passed;
        if r.skipped.is_none() {
            checked += 1;
        }
        let mut v = serde_json::to_value(&r)?;
        v["mesh"] = json!(name);
        rows.push(v);
    }
    Ok(AuditResult {
        name: "regular3".into(),
        passed,
        summary: format!(
            "{checked} closed 3-regular meshes checked, {} skipped",
            rows.len() - checked
        ),
        details: Value::Array(rows),
    })
}

fn table1_audit_result() -> Result<AuditResult> {
    let r = table1_audit(&corpus::standard_corpus())?;
    Ok(AuditResult {
        name: "table1".into(),
        passed: r.violations == 0,
        summary: format!("{} rows, {} bound violations", r.rows.len(), r.violations),
        details: serde_json::to_value(&r)?,
    })
}

fn maximality_audit(seed: u64) -> Result<AuditResult> {
    let meshes = [
        ("cube", corpus::cube()),
        ("grid_4x4", corpus::quad_grid(4, 4)),
        ("hex_patch_1", corpus::hex_patch(1)),
    ];
    let mut rows = Vec::new();
    let mut passed = true;
    for (name, m) in meshes {
        for kind in CaseKind::ALL {
            let r = maximality_probe(
                &m,
                &CaseAssignment::uniform(kind.face_case()),
                MAXIMALITY_TRIALS,
                seed,
            )?;
            passed &= r.certified == r.trials;
            let mut v = serde_json::to_value(&r)?;
            v["mesh"] = json!(name);
            v["case"] = json!(kind.name());
            rows.push(v);
        }
    }
    Ok(AuditResult {
        name: "maximality".into(),
        passed,
        summary: format!(
            "{} probes; maximality certified in sampled directions only",
            rows.len()
        ),
        details: Value::Array(rows),
    })
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let mut audits = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Theorem1 {
        audits.push(polygon_audit(seed)?);
    }
    if all || suite == Suite::Stencil {
        audits.push(stencil_audit(seed)?);
    }
    if all || suite == Suite::Regular3 {
        audits.push(regular3_audit()?);
    }
    if all || suite == Suite::Table1 {
        audits.push(table1_audit_result()?);
    }
    if all || suite == Suite::Maximality {
        audits.push(maximality_audit(seed)?);
    }
    let passed = audits.iter().all(|a| a.passed);
    Ok(SuiteReport {
        seed,
        audits,
        passed,
    })
}
