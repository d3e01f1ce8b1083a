//! Running the verification suites from code.
//!
//! ```text
//! cargo run --release --example verify_suites -- energy-identities
//! ```

use fermicorr::report::Status;
use fermicorr::verify::{run_suite, VerifyOptions, SUITES};

fn main() -> fermicorr::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "energy-identities".into());
    if !SUITES.contains(&name.as_str()) {
        eprintln!("unknown suite {name}; choose one of {SUITES:?}");
        std::process::exit(2);
    }
    let opts = VerifyOptions { instances: 20, ..VerifyOptions::default() };
    let rep = run_suite(&name, &opts)?;
    for c in &rep.checks {
        let tag = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        println!("{tag} {:<60} {:.2e} / {:.0e}", c.name, c.residual, c.tolerance);
    }
    println!("{}", if rep.passed() { "all passed" } else { "failures present" });
    Ok(())
}
