//! Runs every numerical audit and prints the report.

use pmspace::verify::{run_suite, Suite};

fn main() -> pmspace::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let report = run_suite(Suite::All, seed)?;
    print!("{}", report.to_text());
    if !report.passed {
        std::process::exit(1);
    }
    Ok(())
}
