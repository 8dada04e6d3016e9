//! Numerical front profile for KPP with delay, with tail exponents and a CSV dump.

use wavefront_atlas::model::ModelSpec;
use wavefront_atlas::output::write_csv_file;
use wavefront_atlas::profile::{check_monotone, solve_profile, ProfileOptions};

fn main() {
    let m = ModelSpec::kpp_fisher();
    let w = solve_profile(&m, 0.2, 3.0, &ProfileOptions::default()).unwrap();
    println!(
        "converged {} in {} sweeps, change {:.2e}, residual {:.2e}, grid [-{:.1}, {:.1}] with {} nodes",
        w.converged,
        w.iterations,
        w.last_change,
        w.residual,
        w.half_width,
        w.half_width,
        w.len()
    );
    if let Some(e) = w.exponents {
        println!("tails: left {:.6} (expected {:.6}), right {:.6} (expected {:.6})", e.lambda_minus, w.tails.left, e.lambda_plus, w.tails.right);
    }
    println!("monotone: {}", check_monotone(&w, None).monotone);
    for t in [-10.0, -5.0, -2.0, 0.0, 2.0, 5.0] {
        println!("  phi({t:>5}) = {:.10}", w.value(t));
    }

    let path = std::env::temp_dir().join("kpp_front.csv");
    write_csv_file(&path, &["t", "phi", "dphi"], (0..w.len()).map(|i| vec![w.t(i), w.phi[i], w.dphi[i]])).unwrap();
    println!("profile written to {}", path.display());
}
