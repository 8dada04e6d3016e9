//! The twelve acceptance criteria, one line each. Exits non-zero if any fails.

use std::time::Duration;

use wavefront_atlas::verify::run_check;

/// Runtime budget of each criterion.
const BUDGET_SECONDS: [u64; 12] = [1, 1, 10, 5, 5, 15, 10, 30, 180, 120, 5, 10];

fn main() {
    let mut failed = Vec::new();
    for id in 1..=12 {
        let mut outcome = run_check(id);
        let budget = Duration::from_secs(BUDGET_SECONDS[id - 1]);
        if outcome.seconds > budget.as_secs_f64() {
            outcome.passed = false;
            outcome.detail.push_str(&format!("; over the {}s budget", budget.as_secs()));
        }
        println!("criterion {}", outcome.line());
        if !outcome.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("all 12 criteria passed");
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
