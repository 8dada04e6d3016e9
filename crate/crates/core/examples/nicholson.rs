//! Named constants of the Nicholson family and the bounded/unbounded threshold.

use wavefront_atlas::atlas::{nicholson_constants, nicholson_nu0};

fn main() {
    let nu = nicholson_nu0();
    println!("threshold p/delta = {:.10} (t0 = {:.8}), by the large-delay constants {:.10}", nu.nu0, nu.t0, nu.nu0_theta);

    println!("\n{:>6} {:>12} {:>12} {:>12} {:>12}", "p", "h_a", "h0", "beta_k-", "h0-");
    for p in [2.0, 2.75, 5.0, 6.0, 12.0] {
        let k = nicholson_constants(p, 1.0).unwrap();
        let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.8}"));
        println!("{p:>6} {:>12} {:>12} {:>12} {:>12}", show(k.h_a), show(k.h0), show(k.beta_k_minus), show(k.h0_minus));
    }
}
