//! Runs every acceptance criterion at full scale and prints one line each.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cantor_fup::harness::verify::{run_criterion, CRITERIA};
use cantor_fup::harness::Scale;

const MASTER_SEED: u64 = 1;

/// Wall-clock limits in seconds; `None` means unbounded.
const LIMITS: [Option<u64>; 13] = [
    Some(1),
    Some(10),
    Some(30),
    Some(60),
    None,
    None,
    Some(60),
    Some(120),
    Some(120),
    Some(600),
    Some(900),
    None,
    None,
];

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for k in 1..=CRITERIA.len() {
        let start = Instant::now();
        let result = run_criterion(k, Scale::Full, MASTER_SEED);
        let elapsed = start.elapsed();
        let in_time = LIMITS[k - 1].is_none_or(|s| elapsed <= Duration::from_secs(s));
        let (passed, detail) = match result {
            Ok(c) => (c.passed && in_time, c.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let limit = LIMITS[k - 1].map_or_else(String::new, |s| format!(" (limit {s} s)"));
        println!(
            "criterion {k:>2} {}: {} in {:.2} s{limit}; {detail}",
            CRITERIA[k - 1],
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        if !passed {
            failed.push(k);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
