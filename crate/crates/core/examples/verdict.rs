//! Monotone or oscillating: verdicts inside and outside the monotone domain.

use wavefront_atlas::model::{linearization, ModelSpec};
use wavefront_atlas::profile::{oscillation_verdict, ProfileOptions};
use wavefront_atlas::speeds::critical_speed_zero;

fn main() {
    let m = ModelSpec::nicholson(6.0, 1.0).unwrap();
    let lin = linearization(&m);
    let opts = ProfileOptions::default();
    for (h, c) in [(0.3, 2.5), (0.5, 2.2), (0.5, 3.0), (3.0, 0.5)] {
        let r = oscillation_verdict(&m, h, c, &opts).unwrap();
        print!("h = {h}, c = {c}: {} (c0 = {:.6}, c_kappa = {:.6})", r.verdict, r.c_zero, r.c_kappa);
        if let Some(d) = &r.diagnostic {
            let worst = d.vminus.iter().map(|&(_, v)| v).max().unwrap_or(0);
            print!(", sign changes of kappa - phi {}, largest V- {worst}", d.sc);
        }
        println!();
    }
    // the lower curve itself carries the slowest front
    let h = 0.5;
    let c0 = critical_speed_zero(h, &lin).unwrap().c_star.as_f64();
    println!("minimal speed at h = {h}: {c0:.8} -> {}", oscillation_verdict(&m, h, c0, &opts).unwrap().verdict);
}
