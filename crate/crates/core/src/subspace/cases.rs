use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{PmError, Result};
use crate::mesh::{Mesh, Vec3};

/// Relationship a target face must keep with its source face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceCase {
    /// Target is an affine image of the source face.
    Affine,
    /// Target stays parallel to the source face.
    Parallel,
    /// Target shares the intersection line direction `prescribed × source normal`.
    PrescribedNormal(Vec3),
}

impl FaceCase {
    /// Prescribed-normal case with the up vector.
    pub fn vertical() -> Self {
        FaceCase::PrescribedNormal(Vec3::z())
    }

    pub fn prescribed(normal: Vec3) -> Result<Self> {
        let len = normal.norm();
        if !(len > 0.0) || !len.is_finite() {
            return Err(PmError::InvalidArgument(
                "prescribed normal must be nonzero".into(),
            ));
        }
        Ok(FaceCase::PrescribedNormal(normal / len))
    }

    pub fn kind(&self) -> CaseKind {
        match self {
            FaceCase::Affine => CaseKind::Affine,
            FaceCase::Parallel => CaseKind::Parallel,
            FaceCase::PrescribedNormal(_) => CaseKind::Vertical,
        }
    }

    /// Display color used by the viewer: blue, red, green.
    pub fn color(&self) -> &'static str {
        match self.kind() {
            CaseKind::Affine => "blue",
            CaseKind::Parallel => "red",
            CaseKind::Vertical => "green",
        }
    }

    fn to_json(self) -> Value {
        match self {
            FaceCase::Affine => Value::from("affine"),
            FaceCase::Parallel => Value::from("parallel"),
            FaceCase::PrescribedNormal(n) if (n - Vec3::z()).norm() < 1e-15 => {
                Value::from("vertical")
            }
            FaceCase::PrescribedNormal(n) => serde_json::json!({ "normal": [n.x, n.y, n.z] }),
        }
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => FaceCase::from_keyword(s),
            Value::Object(map) => {
                let normal = map
                    .get("normal")
                    .and_then(Value::as_array)
                    .filter(|a| a.len() == 3)
                    .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                    .ok_or_else(|| PmError::InvalidArgument(format!("bad case object {v}")))?;
                FaceCase::prescribed(Vec3::new(normal[0], normal[1], normal[2]))
            }
            _ => Err(PmError::InvalidArgument(format!("bad case value {v}"))),
        }
    }

    pub fn from_keyword(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "affine" => Ok(FaceCase::Affine),
            "parallel" => Ok(FaceCase::Parallel),
            "vertical" => Ok(FaceCase::vertical()),
            other => Err(PmError::InvalidArgument(format!("unknown case '{other}'"))),
        }
    }
}

/// Coarse case category; prescribed normals of any direction count as
/// `Vertical` for equation counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Affine,
    Parallel,
    Vertical,
}

impl CaseKind {
    pub const ALL: [CaseKind; 3] = [CaseKind::Affine, CaseKind::Parallel, CaseKind::Vertical];

    pub fn face_case(self) -> FaceCase {
        match self {
            CaseKind::Affine => FaceCase::Affine,
            CaseKind::Parallel => FaceCase::Parallel,
            CaseKind::Vertical => FaceCase::vertical(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Affine => "affine",
            CaseKind::Parallel => "parallel",
            CaseKind::Vertical => "vertical",
        }
    }
}

/// Per-face case tags: a default plus explicit overrides.
///
/// JSON form: `{"default":"affine","faces":{"12":"parallel","13":{"normal":[0,0,1]}}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseAssignment {
    pub default: FaceCase,
    pub faces: BTreeMap<usize, FaceCase>,
}

impl CaseAssignment {
    pub fn uniform(case: FaceCase) -> Self {
        CaseAssignment {
            default: case,
            faces: BTreeMap::new(),
        }
    }

    pub fn affine() -> Self {
        Self::uniform(FaceCase::Affine)
    }

    pub fn parallel() -> Self {
        Self::uniform(FaceCase::Parallel)
    }

    pub fn vertical() -> Self {
        Self::uniform(FaceCase::vertical())
    }

    pub fn case(&self, face: usize) -> FaceCase {
        self.faces.get(&face).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, face: usize, case: FaceCase) -> &mut Self {
        self.faces.insert(face, case);
        self
    }

    /// Merges a delta: its default replaces ours only when it carries overrides
    /// for nothing else, i.e. deltas are applied face by face.
    pub fn apply_delta(&mut self, delta: &CaseAssignment, replace_default: bool) {
        if replace_default {
            self.default = delta.default;
            self.faces.clear();
        }
        for (&f, &c) in &delta.faces {
            self.faces.insert(f, c);
        }
    }

    /// The single case kind used by every non-triangular face, if any.
    pub fn uniform_kind(&self, mesh: &Mesh) -> Option<CaseKind> {
        let mut kind = None;
        for f in 0..mesh.num_faces() {
            if mesh.face(f).len() == 3 {
                continue;
            }
            let k = self.case(f).kind();
            match kind {
                None => kind = Some(k),
                Some(prev) if prev != k => return None,
                _ => {}
            }
        }
        kind.or(Some(self.default.kind()))
    }

    pub fn is_mixed(&self, mesh: &Mesh) -> bool {
        self.uniform_kind(mesh).is_none()
    }

    pub fn to_json(&self) -> Value {
        let faces: serde_json::Map<String, Value> = self
            .faces
            .iter()
            .map(|(f, c)| (f.to_string(), c.to_json()))
            .collect();
        serde_json::json!({ "default": self.default.to_json(), "faces": faces })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let default = match v.get("default") {
            Some(d) => FaceCase::from_json(d)?,
            None => FaceCase::Affine,
        };
        let mut faces = BTreeMap::new();
        if let Some(map) = v.get("faces") {
            let map = map
                .as_object()
                .ok_or_else(|| PmError::InvalidArgument("'faces' must be an object".into()))?;
            for (k, c) in map {
                let f: usize = k
                    .parse()
                    .map_err(|_| PmError::InvalidArgument(format!("bad face id '{k}'")))?;
                faces.insert(f, FaceCase::from_json(c)?);
            }
        }
        Ok(CaseAssignment { default, faces })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PmError::io(path, e))?;
        Self::from_json(&serde_json::from_str(&text)?)
    }

    /// Accepts a keyword (`affine|parallel|vertical`) or a path to a JSON file.
    pub fn from_arg(arg: &str) -> Result<Self> {
        match FaceCase::from_keyword(arg) {
            Ok(case) => Ok(Self::uniform(case)),
            Err(_) if Path::new(arg).exists() => Self::load(arg),
            Err(e) => Err(e),
        }
    }
}

impl Serialize for CaseAssignment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CaseAssignment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        CaseAssignment::from_json(&v).map_err(serde::de::Error::custom)
    }
}
