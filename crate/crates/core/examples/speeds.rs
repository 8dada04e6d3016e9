//! Minimal speed c0(h) and upper speed c_kappa(h) along a delay range.

use wavefront_atlas::charspec::Side;
use wavefront_atlas::model::{linearization, ModelSpec};
use wavefront_atlas::speeds::{asymptotic_constants, critical_speed_kappa, critical_speed_zero, speed_curve};

fn main() {
    let m = ModelSpec::mackey_glass(2.0, 1.0, 4.0).unwrap();
    let lin = linearization(&m);
    let consts = asymptotic_constants(&lin).unwrap();
    println!("Mackey-Glass p = 2, delta = 1, n = 4: {lin:?}");
    println!("large-delay constants: theta1 = {:?}, theta = {}", consts.theta1, consts.theta);

    println!("\n{:>6} {:>14} {:>14} {:>12}", "h", "c0", "c_kappa", "h*c_kappa");
    for h in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
        let lower = critical_speed_zero(h, &lin).unwrap();
        let upper = critical_speed_kappa(h, &lin).unwrap();
        let (chi, dchi) = lower.certificate(&lin).unwrap();
        assert!(chi < 1e-8 && dchi < 1e-8);
        let ck = upper.c_star.as_f64();
        println!("{h:>6} {:>14.8} {ck:>14.8} {:>12.6}", lower.c_star.as_f64(), h * ck);
    }

    let curve = speed_curve(&lin, Side::AtZero, 0.0, 20.0, 81).unwrap();
    println!("\nc0 on [0, 20] decreasing: {}", curve.is_monotone());
}
