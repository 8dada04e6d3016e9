//! Domain of (h, c) carrying monotone fronts for a few models, and point classification.

use wavefront_atlas::atlas::{classify_point, trace_atlas, DEFAULT_CLASSIFY_TOL};
use wavefront_atlas::model::{linearization, ModelSpec};

fn main() {
    for (name, m) in [
        ("KPP u(1-v)", ModelSpec::kpp_fisher()),
        ("Nicholson p=6", ModelSpec::nicholson(6.0, 1.0).unwrap()),
        ("Nicholson p=2.75", ModelSpec::nicholson(2.75, 1.0).unwrap()),
    ] {
        let atlas = trace_atlas(&m, 10.0, 101).unwrap();
        println!("{name}: {:?}, hypotheses {}, sub-tangent {}", atlas.shape, atlas.hypotheses, atlas.subtangent);
        if let Some(x) = atlas.intersection {
            println!("  curves meet at h0 = {:.8} (Newton {:.8}), c = {:.8}", x.h0, x.h0_newton, x.c0);
        }
        for a in &atlas.asymptotes {
            println!("  asymptote {a:?}");
        }
    }

    let lin = linearization(&ModelSpec::kpp_fisher());
    for (h, c) in [(0.3, 1.0), (0.3, 2.5), (1.0, 1.5), (1.0, 5.0)] {
        println!("KPP (h, c) = ({h}, {c}): {}", classify_point(h, c, &lin, DEFAULT_CLASSIFY_TOL).unwrap());
    }
}
