//! Characteristic roots of the linearized equation at both equilibria.

use wavefront_atlas::charspec::{complex_roots_in_strip, real_roots, CharFunction, Side, Strip};
use wavefront_atlas::model::{linearization, ModelSpec};

fn main() {
    let m = ModelSpec::nicholson(6.0, 1.0).unwrap();
    let lin = linearization(&m);
    println!("Nicholson p = 6, delta = 1: {lin:?}");

    let (h, c) = (1.0, 2.0);
    for side in [Side::AtZero, Side::AtKappa] {
        let cf = CharFunction::new(side, c, h, &lin);
        println!("\n{side:?} at h = {h}, c = {c}");
        for r in real_roots(&cf) {
            println!("  real {:+.12} (multiplicity {})", r.value, r.multiplicity);
        }
        match complex_roots_in_strip(&cf, Strip::new(-6.0, 6.0, 40.0)) {
            Ok(set) => {
                for r in set.complex.iter().filter(|r| r.z.im > 0.0) {
                    println!("  complex {:+.10} +/- {:.10}i  |chi| = {:.1e}", r.z.re, r.z.im, r.residual);
                }
                println!("  contour count {:?}", set.contour_count);
            }
            Err(e) => println!("  contour search failed: {e}"),
        }
    }
}
