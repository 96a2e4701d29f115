//! Acceptance suite: every verifiable claim at its pinned tolerance, one
//! line of output per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the table.

use backstep_core::acceptance::{run_all, CriterionResult};

fn report(results: &[CriterionResult]) {
    for r in results {
        println!(
            "{} {:>2}  {:<40} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.detail
        );
    }
}

#[test]
fn acceptance_suite_passes() {
    let results = run_all();
    report(&results);
    let failures: Vec<_> = results.iter().filter(|r| !r.passed).collect();
    assert!(
        failures.is_empty(),
        "{} criterion(s) failed (criteria 3 and 9 encode expectations the \
         system measurably does not meet; see README \"Known-failing checks\" \
         for the analysis): {:?}",
        failures.len(),
        failures
            .iter()
            .map(|r| format!("#{} {}: {}", r.id, r.name, r.detail))
            .collect::<Vec<_>>()
    );
}
