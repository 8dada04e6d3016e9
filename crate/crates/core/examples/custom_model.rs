//! User-supplied nonlinearities given as expressions.

use wavefront_atlas::atlas::trace_atlas;
use wavefront_atlas::model::{build_model, check_hypotheses, linearization, KappaSpec, ModelSource};
use wavefront_atlas::speeds::critical_speed_zero;

fn main() {
    // a Ricker-type birth function with a tunable rate
    let ricker = ModelSource::CustomG {
        g: "p*v*exp(-a*v)".into(),
        delta: 1.0,
        params: vec![("p".into(), 4.0), ("a".into(), 1.0)],
        kappa: KappaSpec::Value(4f64.ln()),
    };
    // a KPP-type law with delayed saturation, kappa located by bracketing
    let saturating = ModelSource::CustomF {
        f: "u*(1 - v)*exp(-v)".into(),
        params: vec![],
        kappa: KappaSpec::Bracket(0.5, 2.0),
    };
    for source in [ricker, saturating] {
        let m = build_model(&source).unwrap();
        let lin = linearization(&m);
        println!("{}: kappa = {:.10}, {lin:?}, {}", m.formula(), m.kappa(), check_hypotheses(&m));
        println!("  c0(1) = {:.8}", critical_speed_zero(1.0, &lin).unwrap().c_star.as_f64());
        match trace_atlas(&m, 5.0, 51) {
            Ok(a) => println!("  domain {:?}, crossing {:?}", a.shape, a.intersection.map(|x| x.h0)),
            Err(e) => println!("  no atlas: {e}"),
        }
    }
}
