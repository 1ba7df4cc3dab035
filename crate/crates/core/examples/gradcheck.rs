//! Runs the finite-difference gradient suite in double precision and prints
//! one line per check.

use lapsrn::gradcheck::{run_gradcheck, GradcheckOptions};

fn main() -> lapsrn::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed is an integer"));
    let report = run_gradcheck(&GradcheckOptions { seed, ..Default::default() })?;
    for r in &report.results {
        let mark = if r.passed { "ok" } else { "FAIL" };
        println!(
            "{mark:<4} {:<34} {:.2e}  ({} entries, {} skipped)",
            r.name, r.max_rel_error, r.entries, r.skipped
        );
    }
    println!("worst {:.2e}, tolerance {:e}", report.worst(), report.tolerance);
    std::process::exit(if report.passed() { 0 } else { 1 });
}
