//! Session service behind a small JSON-over-HTTP API.
//!
//! Routing is transport-agnostic ([`Service::handle`]); [`serve`] binds it to
//! a socket. Each case change bumps the session revision and recomputes the
//! basis and spectrum on a background thread; compute endpoints answer 409
//! until the current revision is ready.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::thread;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use serde_json::{json, Value};

use crate::analysis::analyze;
use crate::deform::{deform_from, parse_handles, DeformParams, Energy};
use crate::dual::{dual_edit, polar_dual, DualEdit};
use crate::error::{PmError, Result};
use crate::mesh::{parse_obj, planarity_report, write_obj, Mesh, Vec3};
use crate::shapes::{bandpass_apply, eigenshapes, graph_laplacian, Spectrum};
use crate::subspace::{subspace, CaseAssignment, FaceCase, SubspaceBasis};
use crate::verify::ContainmentFlag;

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub status: u16,
    pub content_type: &'static str,
    pub body: String,
}

impl Response {
    fn json(status: u16, v: Value) -> Self {
        Response {
            status,
            content_type: "application/json",
            body: v.to_string(),
        }
    }

    fn text(body: String) -> Self {
        Response {
            status: 200,
            content_type: "text/plain",
            body,
        }
    }

    pub fn json_body(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or(Value::Null)
    }
}

/// `{code, faces, vertices, message}`.
pub fn error_payload(e: &PmError) -> Value {
    json!({ "code": e.code(), "faces": e.faces(), "vertices": e.vertices(), "message": e.to_string() })
}

fn error_status(e: &PmError) -> u16 {
    match e {
        PmError::Json(_) | PmError::InvalidArgument(_) | PmError::Parse { .. } => 400,
        _ => 422,
    }
}

fn error_response(e: &PmError) -> Response {
    Response::json(error_status(e), error_payload(e))
}

fn not_found(what: &str) -> Response {
    Response::json(404, json!({ "code": "not_found", "faces": [], "vertices": [], "message": what }))
}

pub fn mesh_to_json(mesh: &Mesh) -> Value {
    let vertices: Vec<[f64; 3]> = mesh.vertices().iter().map(|p| [p.x, p.y, p.z]).collect();
    json!({ "vertices": vertices, "faces": mesh.faces() })
}

pub fn mesh_from_json(v: &Value) -> Result<Mesh> {
    let vertices: Vec<[f64; 3]> = serde_json::from_value(v.get("vertices").cloned().unwrap_or(Value::Null))?;
    let faces: Vec<Vec<usize>> = serde_json::from_value(v.get("faces").cloned().unwrap_or(Value::Null))?;
    Mesh::new(vertices.into_iter().map(Vec3::from).collect(), faces)
}

fn assignment_from(v: &Value) -> Result<CaseAssignment> {
    match v {
        Value::String(s) => Ok(CaseAssignment::uniform(FaceCase::from_keyword(s)?)),
        _ => CaseAssignment::from_json(v),
    }
}

struct Cache {
    basis: SubspaceBasis,
    spectrum: Spectrum,
}

#[derive(Clone)]
enum Stage {
    Computing(&'static str),
    Ready(Arc<Cache>),
    Failed(Value),
}

struct State {
    assignment: CaseAssignment,
    revision: u64,
    stage: Stage,
    current: Mesh,
}

struct Session {
    source: Mesh,
    state: Mutex<State>,
    /// Serializes mutating operations within the session.
    ops: Mutex<()>,
    containments: OnceLock<std::result::Result<Vec<ContainmentFlag>, Value>>,
}

impl Session {
    fn status(&self) -> Value {
        let st = self.state.lock().unwrap();
        let (ready, stage, error) = match &st.stage {
            Stage::Computing(s) => (false, *s, Value::Null),
            Stage::Ready(_) => (true, "ready", Value::Null),
            Stage::Failed(e) => (false, "failed", e.clone()),
        };
        json!({ "revision": st.revision, "ready": ready, "stage": stage, "error": error })
    }

    /// Ready cache for the current revision, or the response to send instead.
    fn ready(&self, expected: Option<u64>) -> std::result::Result<(u64, Arc<Cache>, Mesh), Response> {
        let st = self.state.lock().unwrap();
        if let Some(r) = expected {
            if r != st.revision {
                return Err(Response::json(
                    409,
                    json!({ "status": "stale", "revision": st.revision, "ready": matches!(st.stage, Stage::Ready(_)) }),
                ));
            }
        }
        match &st.stage {
            Stage::Ready(c) => Ok((st.revision, c.clone(), st.current.clone())),
            Stage::Computing(s) => Err(Response::json(
                409,
                json!({ "status": "recomputing", "stage": s, "revision": st.revision, "ready": false }),
            )),
            Stage::Failed(e) => {
                let mut e = e.clone();
                e["revision"] = json!(st.revision);
                Err(Response::json(422, e))
            }
        }
    }

    /// Stores `mesh` as the current state unless the revision moved on.
    fn commit(&self, revision: u64, mesh: &Mesh) {
        let mut st = self.state.lock().unwrap();
        if st.revision == revision {
            st.current = mesh.clone();
        }
    }
}

fn recompute(session: Arc<Session>, assignment: CaseAssignment, revision: u64) {
    let set_stage = |stage: Stage| {
        let mut st = session.state.lock().unwrap();
        if st.revision == revision {
            st.stage = stage;
        }
    };
    set_stage(Stage::Computing("nullspace"));
    let basis = match subspace(&session.source, &assignment) {
        Ok(b) => b,
        Err(e) => return set_stage(Stage::Failed(error_payload(&e))),
    };
    set_stage(Stage::Computing("spectrum"));
    let spectrum = eigenshapes(&basis, &graph_laplacian(&session.source), None);
    set_stage(Stage::Ready(Arc::new(Cache { basis, spectrum })));
}

/// In-memory session store.
#[derive(Default)]
pub struct Service {
    sessions: Mutex<HashMap<String, Arc<Session>>>,
    next_id: AtomicU64,
}

fn body_json(body: &str) -> Result<Value> {
    if body.trim().is_empty() {
        Ok(json!({}))
    } else {
        Ok(serde_json::from_str(body)?)
    }
}

fn field_f64(v: &Value, key: &str, default: Option<f64>) -> Result<f64> {
    match v.get(key) {
        Some(x) => x
            .as_f64()
            .ok_or_else(|| PmError::InvalidArgument(format!("'{key}' must be a number"))),
        None => default.ok_or_else(|| PmError::InvalidArgument(format!("missing '{key}'"))),
    }
}

fn expected_revision(v: &Value) -> Option<u64> {
    v.get("revision").and_then(Value::as_u64)
}

impl Service {
    pub fn new() -> Self {
        Self::default()
    }

    fn session(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.lock().unwrap().get(id).cloned()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    /// Polls until the session's current revision is ready or failed.
    pub fn wait_ready(&self, id: &str, timeout: Duration) -> bool {
        let start = Instant::now();
        while start.elapsed() < timeout {
            match self.session(id) {
                None => return false,
                Some(s) => {
                    if !matches!(s.state.lock().unwrap().stage, Stage::Computing(_)) {
                        return true;
                    }
                }
            }
            thread::sleep(Duration::from_millis(2));
        }
        false
    }

    /// Routes one request. `path` may carry a query string.
    pub fn handle(&self, method: &str, path: &str, body: &str) -> Response {
        let (path, query) = path.split_once('?').unwrap_or((path, ""));
        let parts: Vec<&str> = path.trim_matches('/').split('/').filter(|s| !s.is_empty()).collect();
        let body = match body_json(body) {
            Ok(b) => b,
            Err(e) => return error_response(&e),
        };
        let result = match (method, parts.as_slice()) {
            ("POST", ["sessions"]) => return self.create(&body),
            ("GET", ["sessions"]) => {
                let ids: Vec<String> = self.sessions.lock().unwrap().keys().cloned().collect();
                return Response::json(200, json!({ "sessions": ids }));
            }
            (_, ["sessions", id, rest @ ..]) => {
                let Some(s) = self.session(id) else {
                    return not_found(&format!("no session '{id}'"));
                };
                match (method, rest) {
                    ("GET", []) | ("GET", ["status"]) => Ok(Response::json(200, s.status())),
                    ("DELETE", []) => {
                        self.sessions.lock().unwrap().remove(*id);
                        Ok(Response::json(200, json!({ "deleted": id })))
                    }
                    ("PUT", ["cases"]) => self.set_cases(&s, &body),
                    ("GET", ["analysis"]) => self.analysis(&s, query),
                    ("POST", ["bandpass"]) => self.bandpass(&s, &body),
                    ("POST", ["deform"]) => self.deform(&s, &body),
                    ("POST", ["dual"]) => self.dual(&s, &body),
                    ("GET", ["export"]) => self.export(&s, query),
                    _ => return not_found(&format!("no route {method} {path}")),
                }
            }
            _ => return not_found(&format!("no route {method} {path}")),
        };
        result.unwrap_or_else(|e| error_response(&e))
    }

    fn create(&self, body: &Value) -> Response {
        let mesh = if let Some(obj) = body.get("obj").and_then(Value::as_str) {
            parse_obj(obj)
        } else if let Some(m) = body.get("mesh") {
            mesh_from_json(m)
        } else {
            mesh_from_json(body)
        };
        let assignment = match body.get("cases") {
            Some(c) => assignment_from(c),
            None => Ok(CaseAssignment::affine()),
        };
        let (mesh, assignment) = match (mesh, assignment) {
            (Ok(m), Ok(a)) => (m, a),
            (Err(e), _) | (_, Err(e)) => return error_response(&e),
        };
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
        let session = Arc::new(Session {
            state: Mutex::new(State {
                assignment: assignment.clone(),
                revision: 0,
                stage: Stage::Computing("queued"),
                current: mesh.clone(),
            }),
            source: mesh,
            ops: Mutex::new(()),
            containments: OnceLock::new(),
        });
        self.sessions.lock().unwrap().insert(id.clone(), session.clone());
        thread::spawn(move || recompute(session, assignment, 0));
        Response::json(201, json!({ "id": id, "revision": 0, "ready": false }))
    }

    /// Body: `{"cases": <assignment or keyword>, "replace": bool}`; a bare
    /// assignment is accepted too. Deltas are merged face by face unless
    /// `replace` is set or a keyword is given.
    fn set_cases(&self, s: &Arc<Session>, body: &Value) -> Result<Response> {
        let _op = s.ops.lock().unwrap();
        let raw = body.get("cases").unwrap_or(body);
        let delta = assignment_from(raw)?;
        let replace = raw.is_string() || body.get("replace").and_then(Value::as_bool).unwrap_or(false);
        let (assignment, revision) = {
            let mut st = s.state.lock().unwrap();
            if let Some(r) = expected_revision(body) {
                if r != st.revision {
                    return Ok(Response::json(409, json!({ "status": "stale", "revision": st.revision })));
                }
            }
            for &f in delta.faces.keys() {
                if f >= s.source.num_faces() {
                    return Err(PmError::InvalidArgument(format!("face {f} out of range")));
                }
            }
            st.assignment.apply_delta(&delta, replace);
            st.revision += 1;
            st.stage = Stage::Computing("queued");
            // The deformed state may leave the new subspace; restart from the source.
            st.current = s.source.clone();
            (st.assignment.clone(), st.revision)
        };
        let session = s.clone();
        thread::spawn(move || recompute(session, assignment.clone(), revision));
        Ok(Response::json(200, json!({ "revision": revision, "ready": false })))
    }

    fn analysis(&self, s: &Arc<Session>, query: &str) -> Result<Response> {
        let (revision, cache, _) = match s.ready(None) {
            Ok(r) => r,
            Err(resp) => return Ok(resp),
        };
        let assignment = s.state.lock().unwrap().assignment.clone();
        let mut a = serde_json::to_value(analyze(&s.source, &assignment, &cache.basis, false)?)?;
        if !query.contains("containments=false") {
            let flags = s
                .containments
                .get_or_init(|| crate::verify::case_containments(&s.source).map_err(|e| error_payload(&e)));
            a["containments"] = match flags {
                Ok(f) => serde_json::to_value(f)?,
                Err(e) => json!({ "error": e }),
            };
        }
        a["frequencies"] = json!(cache.spectrum.frequencies);
        a["revision"] = json!(revision);
        a["ready"] = json!(true);
        Ok(Response::json(200, a))
    }

    fn mesh_reply(&self, s: &Session, cache: &Cache, revision: u64, mesh: &Mesh, extra: Value) -> Result<Value> {
        let d = mesh.to_vec() - s.source.to_vec();
        let mut v = json!({
            "revision": revision,
            "mesh": mesh_to_json(mesh),
            "planarity": planarity_report(mesh)?.max,
            "subspace_residual": cache.basis.relative_residual(&d),
        });
        if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
            m.extend(e);
        }
        Ok(v)
    }

    fn bandpass(&self, s: &Arc<Session>, body: &Value) -> Result<Response> {
        let _op = s.ops.lock().unwrap();
        let (revision, cache, _) = match s.ready(expected_revision(body)) {
            Ok(r) => r,
            Err(resp) => return Ok(resp),
        };
        let low = field_f64(body, "low", Some(0.0))?;
        let high = field_f64(body, "high", Some(f64::INFINITY))?;
        let gain = field_f64(body, "gain", None)?;
        let out = bandpass_apply(&s.source, &cache.spectrum, low, high, gain)?;
        s.commit(revision, &out);
        let used = cache.spectrum.frequencies.iter().filter(|f| **f >= low && **f <= high).count();
        Ok(Response::json(200, self.mesh_reply(s, &cache, revision, &out, json!({ "shapes_used": used }))?))
    }

    /// Body: `{"handles":[...], "energy":"arap"|"asap", "iterations":n}`.
    /// Deforms from the current state; an empty handle list leaves it as is.
    fn deform(&self, s: &Arc<Session>, body: &Value) -> Result<Response> {
        let _op = s.ops.lock().unwrap();
        let (revision, cache, current) = match s.ready(expected_revision(body)) {
            Ok(r) => r,
            Err(resp) => return Ok(resp),
        };
        let handles = parse_handles(&body.get("handles").cloned().unwrap_or(json!([])).to_string())?;
        let mut params = DeformParams::default();
        if let Some(e) = body.get("energy") {
            params.energy = serde_json::from_value::<Energy>(e.clone())?;
        }
        if let Some(n) = body.get("iterations") {
            params.iterations = n
                .as_u64()
                .ok_or_else(|| PmError::InvalidArgument("'iterations' must be a positive integer".into()))?
                as usize;
        }
        params.convergence_tol = field_f64(body, "convergence_tol", Some(params.convergence_tol))?;
        let (out, trace, iterations) = if handles.is_empty() {
            (current, Vec::new(), 0)
        } else {
            let r = deform_from(&cache.basis, &s.source, &current, &handles, &params)?;
            (r.mesh, r.energy_trace, r.iterations)
        };
        s.commit(revision, &out);
        let energy = trace.last().copied();
        Ok(Response::json(
            200,
            self.mesh_reply(
                s,
                &cache,
                revision,
                &out,
                json!({ "energy": energy, "energy_trace": trace, "iterations": iterations }),
            )?,
        ))
    }

    /// Body: `{"on": bool, "edit": {...}, "cases": <dual assignment>}`.
    /// The dual of the current state is returned; an edit additionally
    /// returns the reconstructed primal, which is a planar-faced mesh but in
    /// general not in the session subspace, so it is not committed.
    fn dual(&self, s: &Arc<Session>, body: &Value) -> Result<Response> {
        let _op = s.ops.lock().unwrap();
        let (revision, cache, current) = match s.ready(expected_revision(body)) {
            Ok(r) => r,
            Err(resp) => return Ok(resp),
        };
        if !body.get("on").and_then(Value::as_bool).unwrap_or(true) {
            return Ok(Response::json(200, self.mesh_reply(s, &cache, revision, &current, json!({ "dual": null }))?));
        }
        let Some(edit) = body.get("edit") else {
            let d = polar_dual(&current, None)?;
            return Ok(Response::json(
                200,
                self.mesh_reply(s, &cache, revision, &current, json!({ "dual": mesh_to_json(&d.mesh) }))?,
            ));
        };
        let edit = parse_dual_edit(edit)?;
        let dual_cases = match body.get("cases") {
            Some(c) => assignment_from(c)?,
            None => CaseAssignment::affine(),
        };
        let r = dual_edit(&current, &dual_cases, &edit)?;
        let max_res = r.residuals.iter().copied().fold(0.0, f64::max);
        Ok(Response::json(
            200,
            self.mesh_reply(
                s,
                &cache,
                revision,
                &current,
                json!({
                    "dual": mesh_to_json(&r.edited_dual.mesh),
                    "primal": mesh_to_json(&r.mesh),
                    "primal_planarity": planarity_report(&r.mesh)?.max,
                    "reconstruction_residual": max_res,
                }),
            )?,
        ))
    }

    fn export(&self, s: &Arc<Session>, query: &str) -> Result<Response> {
        let st = s.state.lock().unwrap();
        if query.contains("format=obj") {
            return Ok(Response::text(write_obj(&st.current)));
        }
        Ok(Response::json(
            200,
            json!({
                "revision": st.revision,
                "ready": matches!(st.stage, Stage::Ready(_)),
                "obj": write_obj(&st.current),
                "assignment": st.assignment.to_json(),
            }),
        ))
    }
}

/// `{"kind":"eigenshape","index":i,"amplitude":a}`,
/// `{"kind":"bandpass","low":l,"high":h,"gain":g}` or
/// `{"kind":"displacement","values":[...]}` (axis-major, length 3 x dual vertices).
pub fn parse_dual_edit(v: &Value) -> Result<DualEdit> {
    match v.get("kind").and_then(Value::as_str) {
        Some("eigenshape") => Ok(DualEdit::Eigenshape {
            index: v
                .get("index")
                .and_then(Value::as_u64)
                .ok_or_else(|| PmError::InvalidArgument("eigenshape edit needs 'index'".into()))? as usize,
            amplitude: field_f64(v, "amplitude", None)?,
        }),
        Some("bandpass") => Ok(DualEdit::Bandpass {
            low: field_f64(v, "low", Some(0.0))?,
            high: field_f64(v, "high", Some(f64::INFINITY))?,
            gain: field_f64(v, "gain", None)?,
        }),
        Some("displacement") => {
            let values: Vec<f64> = serde_json::from_value(v.get("values").cloned().unwrap_or(Value::Null))?;
            Ok(DualEdit::Displacement(DVector::from_vec(values)))
        }
        _ => Err(PmError::InvalidArgument(
            "dual edit 'kind' must be eigenshape, bandpass or displacement".into(),
        )),
    }
}

/// Serves the API on `addr` (e.g. `127.0.0.1:8080`), one thread per request.
pub fn serve(addr: &str) -> Result<()> {
    let server = tiny_http::Server::http(addr)
        .map_err(|e| PmError::InvalidArgument(format!("cannot bind {addr}: {e}")))?;
    log::info!("listening on {addr}");
    let service = Arc::new(Service::new());
    for mut request in server.incoming_requests() {
        let service = service.clone();
        thread::spawn(move || {
            let mut body = String::new();
            let resp = match request.as_reader().read_to_string(&mut body) {
                Ok(_) => service.handle(request.method().as_str(), request.url(), &body),
                Err(e) => error_response(&PmError::InvalidArgument(format!("unreadable body: {e}"))),
            };
            let header = tiny_http::Header::from_bytes("Content-Type", resp.content_type).expect("valid header");
            let out = tiny_http::Response::from_string(resp.body)
                .with_status_code(resp.status)
                .with_header(header);
            if let Err(e) = request.respond(out) {
                log::warn!("failed to respond: {e}");
            }
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn ready_session(svc: &Service, mesh: &Mesh, cases: &str) -> String {
        let r = svc.handle("POST", "/sessions", &json!({ "mesh": mesh_to_json(mesh), "cases": cases }).to_string());
        assert_eq!(r.status, 201, "{}", r.body);
        let id = r.json_body()["id"].as_str().unwrap().to_string();
        assert!(svc.wait_ready(&id, Duration::from_secs(30)));
        id
    }

    #[test]
    fn cube_analysis() {
        let svc = Service::new();
        let id = ready_session(&svc, &corpus::cube(), "affine");
        let a = svc.handle("GET", &format!("/sessions/{id}/analysis"), "").json_body();
        assert_eq!(a["ndof"], 12);
        assert_eq!(a["revision"], 0);
        assert!(a["containments"].as_array().unwrap().iter().any(|f| f["relation"] == "b_in_a"));
    }

    #[test]
    fn mesh_payload_round_trip() {
        let m = corpus::hex_patch(1);
        assert_eq!(mesh_from_json(&mesh_to_json(&m)).unwrap(), m);
    }

    #[test]
    fn unknown_routes_and_sessions() {
        let svc = Service::new();
        assert_eq!(svc.handle("GET", "/nothing", "").status, 404);
        assert_eq!(svc.handle("GET", "/sessions/zz/analysis", "").status, 404);
        assert_eq!(svc.handle("POST", "/sessions", "{").status, 400);
    }
}
