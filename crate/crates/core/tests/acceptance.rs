//! Acceptance criteria at their stated tolerances. Runs without the libtest
//! harness so every criterion prints its pass/fail line; the process fails if
//! any criterion does. Arguments that are criterion IDs restrict the run.

use std::process::ExitCode;

use pcf_core::verify::{run_criterion, VerifyOptions, CRITERIA};

fn main() -> ExitCode {
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for &(id, _, _) in CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.0)) {
        let r = run_criterion(id, &VerifyOptions::default());
        println!("criterion {:>2} {:<28} {} [{:.1} s] {}", r.id, r.name, if r.passed { "PASS" } else { "FAIL" }, r.seconds, r.detail);
        if !r.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
