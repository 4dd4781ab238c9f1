//! Wavefront OBJ reading and writing (`v` and `f` records only).

use std::fmt::Write as _;
use std::path::Path;

use super::{Mesh, Vec3};
use crate::error::{PmError, Result};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PmError::io(path, e))?;
    parse_obj(&text)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_obj(mesh)).map_err(|e| PmError::io(path, e))
}

pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| PmError::Parse {
                            line,
                            message: format!("bad coordinate '{t}'"),
                        })
                    })
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(PmError::Parse {
                        line,
                        message: "vertex needs 3 coordinates".into(),
                    });
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut face = Vec::new();
                for tok in tokens {
                    let head = tok.split('/').next().unwrap_or("");
                    let idx: i64 = head.parse().map_err(|_| PmError::Parse {
                        line,
                        message: format!("bad face index '{tok}'"),
                    })?;
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        return Err(PmError::Parse {
                            line,
                            message: "face index 0 (OBJ indices are 1-based)".into(),
                        });
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(PmError::Parse {
                            line,
                            message: format!("face index {idx} out of range"),
                        });
                    }
                    face.push(resolved as usize);
                }
                if face.len() < 3 {
                    return Err(PmError::Parse {
                        line,
                        message: "face needs at least 3 vertices".into(),
                    });
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    Mesh::new(vertices, faces)
}

/// Formats a float with 12 significant digits, trimming trailing zeros.
pub(crate) fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0".into()
        } else {
            format!("{x}")
        };
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-6..=15).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for p in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", fmt_sig(p.x), fmt_sig(p.y), fmt_sig(p.z));
    }
    for face in mesh.faces() {
        out.push('f');
        for &v in face {
            let _ = write!(out, " {}", v + 1);
        }
        out.push('\n');
    }
    out
}
