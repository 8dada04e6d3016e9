//! The built-in self-checks; pass `full` for grid-refinement and seed checks as well.

use wavefront_atlas::verify::{run_suite, Suite};

fn main() {
    let suite = if std::env::args().any(|a| a == "full") { Suite::Full } else { Suite::Fast };
    let outcomes = run_suite(suite);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
}
