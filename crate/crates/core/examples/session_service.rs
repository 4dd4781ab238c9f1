//! Drives the session API in-process, as the browser client would.
//! Pass `--serve` to listen on 127.0.0.1:8080 instead.

use std::time::Duration;

use pmspace::corpus;
use pmspace::service::{mesh_to_json, serve, Service};
use serde_json::json;

fn main() -> pmspace::Result<()> {
    if std::env::args().any(|a| a == "--serve") {
        return serve("127.0.0.1:8080");
    }
    let svc = Service::new();
    let r = svc.handle("POST", "/sessions", &json!({ "mesh": mesh_to_json(&corpus::cube()) }).to_string());
    let id = r.json_body()["id"].as_str().expect("id").to_string();
    println!("created {id}: {}", r.body);

    let r = svc.handle("PUT", &format!("/sessions/{id}/cases"), r#"{"cases":"parallel"}"#);
    println!("set cases: {}", r.body);
    let early = svc.handle("GET", &format!("/sessions/{id}/analysis"), "");
    println!("analysis right away: {} {}", early.status, early.body);
    svc.wait_ready(&id, Duration::from_secs(10));
    let a = svc.handle("GET", &format!("/sessions/{id}/analysis"), "").json_body();
    println!("analysis: revision {}, ndof {}", a["revision"], a["ndof"]);

    let body = json!({ "revision": 1, "handles": [{ "vertex": 6, "target": [1.3, 1.2, 1.4], "mode": "hard" }] });
    let d = svc.handle("POST", &format!("/sessions/{id}/deform"), &body.to_string()).json_body();
    println!("deform: energy {}, residual {}", d["energy"], d["subspace_residual"]);

    let stale = svc.handle("POST", &format!("/sessions/{id}/bandpass"), r#"{"revision":0,"gain":1}"#);
    println!("stale request: {} {}", stale.status, stale.body);

    let e = svc.handle("GET", &format!("/sessions/{id}/export?format=obj"), "");
    print!("export:\n{}", e.body);
    svc.handle("DELETE", &format!("/sessions/{id}"), "");
    Ok(())
}
