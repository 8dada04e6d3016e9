//! Command-line front end: argument parsing, dispatch and rendering.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::atlas::{classify_point, nicholson_constants, nicholson_nu0, trace_atlas, Asymptote, DEFAULT_CLASSIFY_TOL};
use crate::charspec::{complex_roots_in_strip, real_roots, CharFunction, RootSet, Side, Strip};
use crate::model::{build_model, check_hypotheses, linearization, KappaSpec, ModelSource, ModelSpec};
use crate::output::{self, num, opt};
use crate::profile::{
    check_monotone, oscillation_verdict, solve_profile, InitialGuess, ProfileError, ProfileOptions, WaveProfile,
};
use crate::speeds::speed_curve;
use crate::verify::{run_suite, Suite};

#[derive(Parser, Debug)]
#[command(name = "wfa", version, about = "Monotone wavefront domains, critical speeds and profiles for delayed monostable equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    model: ModelArgs,
    /// Print JSON instead of plain text.
    #[arg(long, global = true)]
    json: bool,
    /// Also write tabular results to this CSV file.
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Worker threads for grid sweeps; WFA_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Accepted for reproducibility records; every algorithm is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, global = true, value_enum, default_value_t = ModelChoice::Kpp)]
    model: ModelChoice,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Exponent n of the Mackey-Glass birth function p v / (1 + v^n).
    #[arg(long, global = true, default_value_t = 4.0)]
    mg_exponent: f64,
    /// Custom nonlinearity f(u, v).
    #[arg(long, global = true, value_name = "EXPR")]
    f: Option<String>,
    /// Custom birth function g(v), with f = -delta u + g(v).
    #[arg(long, global = true, value_name = "EXPR")]
    g: Option<String>,
    /// Named constant for custom expressions, as name=value; repeatable.
    #[arg(long = "param", global = true, value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Positive equilibrium of a custom model.
    #[arg(long, global = true)]
    kappa: Option<f64>,
    /// Bracket a:b with f(a,a) > 0 > f(b,b) locating kappa of a custom model.
    #[arg(long, global = true, value_name = "A:B")]
    kappa_bracket: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelChoice {
    Kpp,
    MackeyGlass,
    Nicholson,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Zero,
    Kappa,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Zero => Side::AtZero,
            SideArg::Kappa => Side::AtKappa,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SidesArg {
    Zero,
    Kappa,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SeedArg {
    Tanh,
    Ramp,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Real roots of the characteristic function, and complex roots in a strip.
    Roots {
        #[arg(long, value_enum)]
        side: SideArg,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 0.0)]
        h: f64,
        /// re_min:re_max:im_max
        #[arg(long)]
        strip: Option<String>,
    },
    /// Critical speed curves sampled over a delay range.
    Speeds {
        #[arg(long, value_enum, default_value_t = SidesArg::Both)]
        side: SidesArg,
        #[arg(long, default_value_t = 0.0)]
        h_min: f64,
        #[arg(long, default_value_t = 10.0)]
        h_max: f64,
        #[arg(long, default_value_t = 101)]
        n: usize,
    },
    /// Existence domain: trace both boundaries or classify a point.
    Atlas {
        #[command(subcommand)]
        action: AtlasAction,
    },
    /// Nicholson constants.
    Nicholson {
        #[command(subcommand)]
        action: NicholsonAction,
    },
    /// Travelling-wave profiles.
    Profile {
        #[command(subcommand)]
        action: ProfileAction,
    },
    /// Runs the built-in verification suite.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::Fast)]
        suite: SuiteArg,
    },
}

#[derive(Subcommand, Debug)]
enum AtlasAction {
    Trace {
        #[arg(long, default_value_t = 10.0)]
        h_max: f64,
        #[arg(long, default_value_t = 201)]
        n: usize,
    },
    Classify {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = DEFAULT_CLASSIFY_TOL)]
        tol: f64,
    },
}

#[derive(Subcommand, Debug)]
enum NicholsonAction {
    /// h_a, nu0, t0, the secant bound and its curve crossing for --p, --delta.
    Constants,
    /// The p/delta threshold between unbounded and bounded domains.
    Nu0,
}

#[derive(Args, Debug, Clone)]
struct SolveArgs {
    #[arg(long)]
    h: f64,
    #[arg(long)]
    c: f64,
    /// Half-width of the grid.
    #[arg(long = "L")]
    half_width: Option<f64>,
    /// Number of nodes.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    /// Solve outside the closed domain.
    #[arg(long)]
    force: bool,
    #[arg(long, value_enum, default_value_t = SeedArg::Tanh)]
    initial: SeedArg,
    /// Plain damped iteration without Anderson mixing.
    #[arg(long)]
    no_accel: bool,
}

impl SolveArgs {
    fn options(&self) -> ProfileOptions {
        ProfileOptions {
            half_width: self.half_width,
            nodes: self.n,
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            force: self.force,
            initial: match self.initial {
                SeedArg::Tanh => InitialGuess::Tanh,
                SeedArg::Ramp => InitialGuess::Ramp,
            },
            accelerate: !self.no_accel,
        }
    }

    fn config(&self) -> Value {
        let o = self.options();
        json!({
            "h": num(self.h), "c": num(self.c), "L": opt(o.half_width), "n": o.nodes,
            "tol": num(o.tol), "max_iter": o.max_iter, "damping": num(o.damping), "force": o.force,
            "initial": format!("{:?}", self.initial).to_lowercase(), "accelerate": o.accelerate,
        })
    }
}

#[derive(Subcommand, Debug)]
enum ProfileAction {
    /// Solves for the profile; --out writes t, phi, dphi.
    Solve {
        #[command(flatten)]
        args: SolveArgs,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Oscillation verdict with exponents and the V- trace.
    Diagnose {
        #[command(flatten)]
        args: SolveArgs,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

fn numerical(message: impl ToString) -> Failure {
    Failure { code: 2, message: message.to_string() }
}

/// Result of one subcommand: the document, the plain-text rendering and an
/// exit code that may flag a numerical failure after output was produced.
struct Report {
    result: Value,
    text: String,
    code: i32,
}

impl Report {
    fn ok(result: Value, text: String) -> Self {
        Report { result, text, code: 0 }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    configure_threads(cli.threads);
    match execute(&cli) {
        Ok((config, report)) => {
            let written = if cli.json {
                writeln!(out, "{}", output::render(&output::document(config, report.result)))
            } else {
                writeln!(out, "{}{}", config_header(&config), report.text)
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: {e}");
                return 1;
            }
            report.code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn configure_threads(flag: Option<usize>) {
    let env = std::env::var("WFA_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok());
    if let Some(n) = env.or(flag).filter(|&n| n > 0) {
        // a second build in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn config_header(config: &Value) -> String {
    let mut line = String::from("#");
    flatten_config(config, "", &mut line);
    line.push('\n');
    line
}

fn flatten_config(v: &Value, prefix: &str, line: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for k in keys {
                let name = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_config(&map[k], &name, line);
            }
        }
        Value::String(s) => write!(line, " {prefix}={s}").unwrap(),
        // shortest round-trip text reads better in a header than the fixed JSON digits
        other => write!(line, " {prefix}={other}").unwrap(),
    }
}

fn execute(cli: &Cli) -> Result<(Value, Report), Failure> {
    let threads = std::env::var("WFA_THREADS").ok().or(cli.threads.map(|t| t.to_string()));
    let mut config = json!({
        "threads": threads.map_or(Value::Null, Value::String),
        "seed": cli.seed,
        "csv": cli.csv.as_ref().map(|p| p.display().to_string()),
    });
    let (name, options, report) = match &cli.command {
        Command::Verify { suite } => {
            let suite = if *suite == SuiteArg::Full { Suite::Full } else { Suite::Fast };
            ("verify", json!({ "suite": format!("{suite:?}").to_lowercase() }), verify(suite))
        }
        Command::Nicholson { action: NicholsonAction::Nu0 } => ("nicholson nu0", json!({}), nu0()),
        Command::Nicholson { action: NicholsonAction::Constants } => {
            let (p, delta) = match (cli.model.p, cli.model.delta) {
                (Some(p), Some(d)) => (p, d),
                _ => return Err(usage("nicholson constants needs --p and --delta")),
            };
            ("nicholson constants", json!({ "p": num(p), "delta": num(delta) }), constants(p, delta)?)
        }
        command => {
            let m = model(&cli.model)?;
            config["model"] = model_config(&m, &cli.model);
            match command {
                Command::Roots { side, c, h, strip } => {
                    let opts = json!({ "side": Side::from(*side).to_string(), "c": num(*c), "h": num(*h), "strip": strip });
                    ("roots", opts, roots(&m, (*side).into(), *c, *h, strip.as_deref())?)
                }
                Command::Speeds { side, h_min, h_max, n } => {
                    let opts = json!({ "side": format!("{side:?}").to_lowercase(), "h_min": num(*h_min), "h_max": num(*h_max), "n": n });
                    ("speeds", opts, speeds(&m, *side, *h_min, *h_max, *n, cli.csv.as_ref())?)
                }
                Command::Atlas { action: AtlasAction::Trace { h_max, n } } => {
                    ("atlas trace", json!({ "h_max": num(*h_max), "n": n }), atlas_trace(&m, *h_max, *n, cli.csv.as_ref())?)
                }
                Command::Atlas { action: AtlasAction::Classify { h, c, tol } } => {
                    let opts = json!({ "h": num(*h), "c": num(*c), "tol": num(*tol) });
                    ("atlas classify", opts, classify(&m, *h, *c, *tol)?)
                }
                Command::Profile { action: ProfileAction::Solve { args, out } } => {
                    let mut opts = args.config();
                    opts["out"] = json!(out.as_ref().map(|p| p.display().to_string()));
                    let path = out.as_ref().or(cli.csv.as_ref());
                    ("profile solve", opts, profile_solve(&m, args, path)?)
                }
                Command::Profile { action: ProfileAction::Diagnose { args } } => {
                    ("profile diagnose", args.config(), profile_diagnose(&m, args)?)
                }
                _ => unreachable!("handled above"),
            }
        }
    };
    config["command"] = json!(name);
    config["options"] = options;
    Ok((config, report))
}

fn parse_pairs(raw: &[String]) -> Result<Vec<(String, f64)>, Failure> {
    raw.iter()
        .map(|s| {
            let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("--param expects name=value, got {s:?}")))?;
            let v: f64 = v.trim().parse().map_err(|_| usage(format!("--param {k}: {v:?} is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn parse_floats(raw: &str, count: usize, what: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<f64> = raw.split(':').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| {
        usage(format!("{what}: expected {count} numbers separated by ':', got {raw:?}"))
    })?;
    if parts.len() != count {
        return Err(usage(format!("{what}: expected {count} numbers separated by ':', got {raw:?}")));
    }
    Ok(parts)
}

fn model(a: &ModelArgs) -> Result<ModelSpec, Failure> {
    let need = |x: Option<f64>, name: &str| x.ok_or_else(|| usage(format!("--model {:?} needs --{name}", a.model)));
    let source = match a.model {
        ModelChoice::Kpp => ModelSource::KppFisher,
        ModelChoice::Nicholson => ModelSource::Nicholson { p: need(a.p, "p")?, delta: need(a.delta, "delta")? },
        ModelChoice::MackeyGlass => {
            ModelSource::MackeyGlass { p: need(a.p, "p")?, delta: need(a.delta, "delta")?, exponent: a.mg_exponent }
        }
        ModelChoice::Custom => {
            let kappa = match (a.kappa, &a.kappa_bracket) {
                (Some(k), None) => KappaSpec::Value(k),
                (None, Some(b)) => {
                    let v = parse_floats(b, 2, "--kappa-bracket")?;
                    KappaSpec::Bracket(v[0], v[1])
                }
                _ => return Err(usage("custom models need exactly one of --kappa or --kappa-bracket")),
            };
            let params = parse_pairs(&a.params)?;
            match (&a.f, &a.g) {
                (Some(f), None) => ModelSource::CustomF { f: f.clone(), params, kappa },
                (None, Some(g)) => ModelSource::CustomG { g: g.clone(), delta: need(a.delta, "delta")?, params, kappa },
                _ => return Err(usage("custom models need exactly one of --f or --g")),
            }
        }
    };
    build_model(&source).map_err(|e| usage(e.to_string()))
}

fn model_config(m: &ModelSpec, a: &ModelArgs) -> Value {
    let mut v = json!({
        "name": m.name(),
        "class": m.class().to_string(),
        "formula": m.formula(),
        "kappa": num(m.kappa()),
    });
    if let Some((p, delta)) = m.nicholson_params() {
        v["p"] = num(p);
        v["delta"] = num(delta);
    } else if let Some(delta) = m.delta() {
        v["delta"] = num(delta);
        v["p"] = opt(a.p);
    }
    if a.model == ModelChoice::MackeyGlass {
        v["exponent"] = num(a.mg_exponent);
    }
    if !a.params.is_empty() {
        v["params"] = json!(a.params);
    }
    v
}

fn roots(m: &ModelSpec, side: Side, c: f64, h: f64, strip: Option<&str>) -> Result<Report, Failure> {
    if !(c > 0.0 && h >= 0.0) {
        return Err(usage(format!("need c > 0 and h >= 0, got c = {c}, h = {h}")));
    }
    let cf = CharFunction::new(side, c, h, &linearization(m));
    let set = match strip {
        Some(s) => {
            let v = parse_floats(s, 3, "--strip")?;
            complex_roots_in_strip(&cf, Strip::new(v[0], v[1], v[2])).map_err(numerical)?
        }
        None => RootSet { real: real_roots(&cf), complex: Vec::new(), strip: None, contour_count: None },
    };
    let mut listed = Vec::new();
    let mut text = String::new();
    for r in &set.real {
        let residual = cf.chi(num_complex::Complex64::new(r.value, 0.0)).norm();
        listed.push(json!({ "re": num(r.value), "im": num(0.0), "multiplicity": r.multiplicity, "residual": num(residual) }));
        writeln!(text, "real     {:>24.16e}  multiplicity {}  residual {:.2e}", r.value, r.multiplicity, residual).unwrap();
    }
    for r in &set.complex {
        listed.push(json!({ "re": num(r.z.re), "im": num(r.z.im), "multiplicity": 1, "residual": num(r.residual) }));
        writeln!(text, "complex  {:>24.16e} {:+.16e}i  residual {:.2e}", r.z.re, r.z.im, r.residual).unwrap();
    }
    if let Some(n) = set.contour_count {
        writeln!(text, "argument-principle count {n}, located {}", set.counted()).unwrap();
    }
    let result = json!({
        "real": set.real.iter().map(|r| num(r.value)).collect::<Vec<_>>(),
        "roots": listed,
        "contour_count": set.contour_count,
    });
    Ok(Report::ok(result, text))
}

fn speeds(m: &ModelSpec, side: SidesArg, h_min: f64, h_max: f64, n: usize, csv: Option<&PathBuf>) -> Result<Report, Failure> {
    if n < 2 || !(h_min >= 0.0 && h_max > h_min) {
        return Err(usage(format!("need n >= 2 and 0 <= h_min < h_max, got n = {n}, [{h_min}, {h_max}]")));
    }
    let lin = linearization(m);
    let want = |s: Side| match side {
        SidesArg::Both => true,
        SidesArg::Zero => s == Side::AtZero,
        SidesArg::Kappa => s == Side::AtKappa,
    };
    let curve = |s: Side| -> Result<Option<Vec<f64>>, Failure> {
        if !want(s) {
            return Ok(None);
        }
        let c = speed_curve(&lin, s, h_min, h_max, n).map_err(numerical)?;
        Ok(Some(c.samples.iter().map(|r| r.c_star.as_f64()).collect()))
    };
    let (zero, kappa) = (curve(Side::AtZero)?, curve(Side::AtKappa)?);
    let hs: Vec<f64> = (0..n).map(|i| h_min + (h_max - h_min) * i as f64 / (n - 1) as f64).collect();
    let column = |c: &Option<Vec<f64>>, i: usize| c.as_ref().map_or(f64::NAN, |v| v[i]);
    if let Some(path) = csv {
        let rows = (0..n).map(|i| vec![hs[i], column(&zero, i), column(&kappa, i)]);
        output::write_csv_file(path, &["h", "c_zero", "c_kappa"], rows).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let mut text = format!("{:>24} {:>24} {:>24}\n", "h", "c_zero", "c_kappa");
    for i in 0..n {
        let cell = |x: f64| if x.is_nan() { "-".to_string() } else { format!("{x:.16e}") };
        writeln!(text, "{:>24} {:>24} {:>24}", cell(hs[i]), cell(column(&zero, i)), cell(column(&kappa, i))).unwrap();
    }
    let series = |c: &Option<Vec<f64>>| c.as_ref().map(|v| v.iter().map(|&x| num(x)).collect::<Vec<_>>());
    let result = json!({ "h": hs.iter().map(|&x| num(x)).collect::<Vec<_>>(), "c_zero": series(&zero), "c_kappa": series(&kappa) });
    Ok(Report::ok(result, text))
}

fn atlas_trace(m: &ModelSpec, h_max: f64, n: usize, csv: Option<&PathBuf>) -> Result<Report, Failure> {
    if !(h_max > 0.0) {
        return Err(usage(format!("--h-max must be positive, got {h_max}")));
    }
    let atlas = trace_atlas(m, h_max, n).map_err(|e| match e {
        crate::atlas::AtlasError::Unsupported(s) => usage(s),
        other => numerical(other),
    })?;
    let rows: Vec<Vec<f64>> = atlas
        .lower
        .samples
        .iter()
        .zip(&atlas.upper.samples)
        .map(|(lo, up)| vec![lo.h, lo.c_star.as_f64(), up.c_star.as_f64()])
        .collect();
    if let Some(path) = csv {
        output::write_csv_file(path, &["h", "c_zero", "c_kappa"], rows.clone()).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let asymptotes: Vec<Value> = atlas
        .asymptotes
        .iter()
        .map(|a| match a {
            Asymptote::Vertical { h } => json!({ "kind": "vertical", "h": num(*h) }),
            Asymptote::Horizontal { c } => json!({ "kind": "horizontal", "c": num(*c) }),
        })
        .collect();
    let intersection = atlas.intersection.map(|x| {
        json!({ "h0": num(x.h0), "h0_newton": num(x.h0_newton), "c0": num(x.c0), "slope": num(x.slope), "h_fin": num(x.h_fin), "transversal": x.transversal() })
    });
    let result = json!({
        "h": rows.iter().map(|r| num(r[0])).collect::<Vec<_>>(),
        "c_zero": rows.iter().map(|r| num(r[1])).collect::<Vec<_>>(),
        "c_kappa": rows.iter().map(|r| num(r[2])).collect::<Vec<_>>(),
        "intersection": intersection,
        "asymptotes": asymptotes,
        "shape": format!("{:?}", atlas.shape),
        "subtangent": atlas.subtangent,
        "hypotheses": atlas.hypotheses.to_string(),
        "ordered": atlas.ordered,
        "monotone_violation": { "zero": opt(atlas.lower.monotone_violation), "kappa": opt(atlas.upper.monotone_violation) },
    });
    let mut text = String::new();
    writeln!(text, "shape {:?}, hypotheses {}, sub-tangent {}, ordered {}", atlas.shape, atlas.hypotheses, atlas.subtangent, atlas.ordered).unwrap();
    match atlas.intersection {
        Some(x) => writeln!(text, "curves cross at h0 = {:.12} (Newton {:.12}), c = {:.12}", x.h0, x.h0_newton, x.c0).unwrap(),
        None => writeln!(text, "no crossing").unwrap(),
    }
    for a in &atlas.asymptotes {
        writeln!(text, "asymptote {a:?}").unwrap();
    }
    let step = (rows.len() / 20).max(1);
    for r in rows.iter().step_by(step) {
        writeln!(text, "h {:>12.6}  c_zero {:>14.8}  c_kappa {:>14.8}", r[0], r[1], r[2]).unwrap();
    }
    Ok(Report::ok(result, text))
}

fn classify(m: &ModelSpec, h: f64, c: f64, tol: f64) -> Result<Report, Failure> {
    if !(c > 0.0 && h >= 0.0) {
        return Err(usage(format!("need c > 0 and h >= 0, got c = {c}, h = {h}")));
    }
    let class = classify_point(h, c, &linearization(m), tol).map_err(numerical)?;
    Ok(Report::ok(json!({ "class": class.to_string() }), format!("{class}\n")))
}

fn nu0() -> Report {
    let r = nicholson_nu0();
    Report::ok(
        json!({ "nu0": num(r.nu0), "nu0_theta": num(r.nu0_theta), "t0": num(r.t0) }),
        format!("nu0 {:.16e}\nnu0 (theta route) {:.16e}\nt0 {:.16e}\n", r.nu0, r.nu0_theta, r.t0),
    )
}

fn constants(p: f64, delta: f64) -> Result<Report, Failure> {
    if !(p > 0.0 && delta > 0.0 && p / delta > 1.0) {
        return Err(usage(format!("need p, delta > 0 with p/delta > 1, got p = {p}, delta = {delta}")));
    }
    let k = nicholson_constants(p, delta).map_err(numerical)?;
    let result = json!({
        "p": num(k.p), "delta": num(k.delta), "kappa": num(k.kappa), "beta_kappa": num(k.beta_k),
        "h_a": opt(k.h_a), "nu0": num(k.nu0), "t0": num(k.t0), "h0": opt(k.h0),
        "beta_kappa_minus": opt(k.beta_k_minus), "h_a_minus": opt(k.h_a_minus), "h0_minus": opt(k.h0_minus),
    });
    let show = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.16e}"));
    let text = format!(
        "kappa {:.16e}\nbeta_kappa {:.16e}\nh_a {}\nnu0 {:.16e}\nt0 {:.16e}\nh0 {}\nbeta_kappa_minus {}\nh_a_minus {}\nh0_minus {}\n",
        k.kappa, k.beta_k, show(k.h_a), k.nu0, k.t0, show(k.h0), show(k.beta_k_minus), show(k.h_a_minus), show(k.h0_minus)
    );
    Ok(Report::ok(result, text))
}

fn profile_error(e: ProfileError) -> Failure {
    match e {
        ProfileError::Precondition { .. } | ProfileError::Options(_) => usage(e.to_string()),
        other => numerical(other),
    }
}

fn profile_summary(w: &WaveProfile) -> Value {
    let mono = check_monotone(w, None);
    json!({
        "converged": w.converged,
        "iterations": w.iterations,
        "last_change": num(w.last_change),
        "drift": num(w.drift),
        "residual": num(w.residual),
        "L": num(w.half_width),
        "n": w.len(),
        "step": num(w.step),
        "kappa": num(w.kappa),
        "monotone": mono.monotone,
        "first_violation": opt(mono.first_violation),
        "tail_rates": { "left": num(w.tails.left), "right": num(w.tails.right), "left_fallback": w.tails.left_fallback, "right_fallback": w.tails.right_fallback },
        "exponents": w.exponents.map(|e| json!({
            "lambda_minus": num(e.lambda_minus), "lambda_plus": num(e.lambda_plus),
            "r2_minus": num(e.r2_minus), "r2_plus": num(e.r2_plus),
            "lambda_c": opt(e.lambda_c), "lambda2_c": opt(e.lambda2_c),
        })),
    })
}

fn profile_text(w: &WaveProfile) -> String {
    let mut text = format!(
        "converged {} after {} iterations (change {:.2e}, drift {:.2e})\nresidual {:.3e}\ngrid L = {}, n = {}\nmonotone {}\n",
        w.converged,
        w.iterations,
        w.last_change,
        w.drift,
        w.residual,
        w.half_width,
        w.len(),
        check_monotone(w, None).monotone
    );
    if let Some(e) = w.exponents {
        let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.8}"));
        writeln!(text, "left exponent {:.8} (root {}), right exponent {:.8} (root {})", e.lambda_minus, show(e.lambda_c), e.lambda_plus, show(e.lambda2_c)).unwrap();
    }
    text
}

fn profile_solve(m: &ModelSpec, args: &SolveArgs, out: Option<&PathBuf>) -> Result<Report, Failure> {
    let w = solve_profile(m, args.h, args.c, &args.options()).map_err(profile_error)?;
    if let Some(path) = out {
        let rows = (0..w.len()).map(|i| vec![w.t(i), w.phi[i], w.dphi[i]]);
        output::write_csv_file(path, &["t", "phi", "dphi"], rows).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let code = if w.converged { 0 } else { 2 };
    Ok(Report { result: profile_summary(&w), text: profile_text(&w), code })
}

fn profile_diagnose(m: &ModelSpec, args: &SolveArgs) -> Result<Report, Failure> {
    let report = oscillation_verdict(m, args.h, args.c, &args.options()).map_err(profile_error)?;
    let mut result = json!({
        "verdict": report.verdict.to_string(),
        "c_zero": num(report.c_zero),
        "c_kappa": num(report.c_kappa),
        "hypotheses": check_hypotheses(m).to_string(),
    });
    let mut text = format!("verdict {}\nc_zero {:.12}  c_kappa {}\n", report.verdict, report.c_zero, speed_text(report.c_kappa));
    if let Some(w) = &report.profile {
        result["profile"] = profile_summary(w);
        text.push_str(&profile_text(w));
    }
    if let Some(d) = &report.diagnostic {
        result["sc"] = json!(d.sc);
        result["vminus"] = json!(d.vminus.iter().map(|&(t, v)| json!({ "t": num(t), "vminus": v })).collect::<Vec<_>>());
        let worst = d.vminus.iter().map(|&(_, v)| v).max().unwrap_or(1);
        writeln!(text, "sign changes of kappa - phi: {}, largest V- over {} windows: {}", d.sc, d.vminus.len(), worst).unwrap();
    }
    Ok(Report::ok(result, text))
}

fn speed_text(c: f64) -> String {
    if c.is_infinite() {
        "+inf".to_string()
    } else {
        format!("{c:.12}")
    }
}

fn verify(suite: Suite) -> Report {
    let outcomes = run_suite(suite);
    let mut text = String::new();
    for o in &outcomes {
        writeln!(text, "{}", o.line()).unwrap();
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    writeln!(text, "{} of {} checks passed", outcomes.len() - failed, outcomes.len()).unwrap();
    let checks: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({ "id": o.id, "name": o.name, "passed": o.passed, "value": num(o.value), "tolerance": o.tolerance, "detail": o.detail, "seconds": num(o.seconds) })
        })
        .collect();
    let result = json!({ "checks": checks, "passed": failed == 0 });
    Report { result, text, code: if failed == 0 { 0 } else { 2 } }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("wfa").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(call(&["roots", "--side", "middle", "--c", "1"]).0, 1);
        assert_eq!(call(&["nicholson", "constants"]).0, 1);
        assert_eq!(call(&["--model", "custom", "--f", "u*(1-v)", "roots", "--side", "zero", "--c", "2"]).0, 1);
    }

    #[test]
    fn classify_below_lower() {
        let (code, out, _) = call(&["atlas", "classify", "--h", "0.3", "--c", "1.0", "--model", "kpp", "--json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["class"], "BelowLower");
        assert_eq!(v["config"]["model"]["name"], "kpp");
    }

    #[test]
    fn plain_output_starts_with_config() {
        let (code, out, _) = call(&["roots", "--side", "zero", "--c", "2.5"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("# command=roots"), "{out}");
        assert!(out.contains("options.c=2.5"), "{out}");
    }
}
