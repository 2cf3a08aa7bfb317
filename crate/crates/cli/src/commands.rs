use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use pat_core::config::{parse_key_values, Method, ReconConfig};
use pat_core::field::{relative_l2, relative_linf, BallGrid, CauchyData, CauchyField, Source};
use pat_core::files;
use pat_core::forward::synthesize_observation;
use pat_core::harmonics::BoundaryObservation;
use pat_core::recon2d::reconstruct_iterative_2d;
use pat_core::recon3d::{reconstruct_exterior, reconstruct_interior_residue, reconstruct_interior_volterra, ModePoles};
use pat_core::xcheck::{fr_backprojection_many, reconstruct_halftime, Vanishing};
use pat_core::{phantom, Error};

use crate::fail::{self, Code, Failure};
use crate::{CompareArgs, ReconArgs, SynthArgs};

/// Half-time boundary residuals above this are reported as inconsistent data.
pub const HALFTIME_WARN: f64 = 1e-3;

pub struct Context {
    pub cfg: ReconConfig,
    pub workers: usize,
}

fn usage(e: Error) -> Failure {
    Failure::new(Code::Usage, e.to_string())
}

impl Context {
    pub fn load(path: Option<&Path>, seed: Option<u64>, workers: Option<usize>) -> Result<Self, Failure> {
        let mut from_file = None;
        let mut cfg = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(fail::io(p))?;
                let keys = parse_key_values(&text).map_err(usage)?;
                from_file = keys.get("run.workers").map(|_| ());
                ReconConfig::from_text(&text).map_err(|e| Failure::new(Code::Usage, format!("{}: {e}", p.display())))?
            }
            None => ReconConfig::default(),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let workers = match (workers, from_file) {
            (Some(0), _) => return Err(Failure::new(Code::Usage, "--workers must be positive")),
            (Some(n), _) => n,
            (None, Some(())) => cfg.workers,
            (None, None) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        cfg.workers = workers;
        Ok(Self { cfg, workers })
    }
}

fn cauchy_data(cfg: &ReconConfig, spec: &str) -> Result<CauchyData, Failure> {
    let source = if spec.ends_with(".meta") {
        let path = Path::new(spec);
        let (_, field) = files::read_field(path).map_err(fail::data(path))?;
        if field.ball.dim != cfg.dim {
            return Err(Failure::new(Code::Numerical, format!("{spec} is {}D, config is {}D", field.ball.dim.get(), cfg.dim.get())));
        }
        return Ok(CauchyData::from_field(&field, cfg.nmax)?);
    } else {
        Source::Analytic(Arc::from(phantom::parse(cfg.dim, spec, cfg.seed).map_err(usage)?))
    };
    let (a, b) = if cfg.phantom_component == "a" { (source, Source::Zero) } else { (Source::Zero, source) };
    Ok(CauchyData { dim: cfg.dim, a, b })
}

fn sample(ball: &BallGrid, s: &Source) -> Vec<f64> {
    ball.points().iter().map(|p| s.value(p)).collect()
}

pub fn synth(ctx: &mut Context, args: &SynthArgs) -> Result<(), Failure> {
    let cfg = &mut ctx.cfg;
    if let Some(p) = &args.phantom {
        cfg.phantom = Some(p.clone());
    }
    if let Some(c) = &args.component {
        cfg.phantom_component = c.clone();
    }
    cfg.validate().map_err(usage)?;
    let spec = cfg
        .phantom
        .clone()
        .ok_or_else(|| Failure::new(Code::Usage, "no phantom: pass --phantom or set phantom.spec"))?;
    let start = Instant::now();
    let data = cauchy_data(cfg, &spec)?;
    let grid = cfg.observation_grid()?;
    let obs = synthesize_observation(&data, &grid, cfg.t_final, cfg.dt, &cfg.forward_options())?;
    let prov = format!("synth phantom={spec} component={} seed={} nmax={}", cfg.phantom_component, cfg.seed, cfg.nmax);
    files::write_observation(&args.out, &obs, &prov).map_err(fail::data(&args.out))?;
    let side = args.out.with_extension("provenance");
    fs::write(&side, cfg.to_text()).map_err(fail::io(&side))?;
    if let Some(t) = &args.truth {
        let ball = cfg.ball_grid()?;
        let field = CauchyField { a: sample(&ball, &data.a), b: sample(&ball, &data.b), ball };
        files::write_field(t, &field, cfg.t_final, &prov).map_err(fail::data(t))?;
    }
    if args.csv {
        write_observation_csv(&args.out.with_extension("csv"), &obs)?;
    }
    println!(
        "synth: {} nodes x {} samples to {} in {:.2} s",
        obs.grid.len(),
        obs.n_times,
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Pole list lines: `mode Re(p) Im(p) Re(c) Im(c)`; `#` starts a comment.
fn read_poles(path: &Path) -> Result<Vec<ModePoles>, Failure> {
    let text = fs::read_to_string(path).map_err(fail::io(path))?;
    let mut by_mode: BTreeMap<usize, Vec<(Complex64, Complex64)>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Failure::new(Code::Io, format!("{}:{}: expected `mode re_p im_p re_c im_c`", path.display(), i + 1));
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(bad());
        }
        let mode: usize = f[0].parse().map_err(|_| bad())?;
        let v = f[1..].iter().map(|s| s.parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?;
        by_mode
            .entry(mode)
            .or_default()
            .push((Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])));
    }
    Ok(by_mode.into_iter().map(|(mode, terms)| ModePoles { mode, terms }).collect())
}

fn read_observation_for(path: &Path, method: Method) -> Result<BoundaryObservation, Failure> {
    let (_, obs) = files::read_observation(path).map_err(fail::data(path))?;
    if obs.grid.dim != method.dim() {
        return Err(Failure::new(
            Code::Numerical,
            format!("{} needs {}D observations, {} is {}D", method.name(), method.dim().get(), path.display(), obs.grid.dim.get()),
        ));
    }
    Ok(obs)
}

pub fn recon(ctx: &mut Context, args: &ReconArgs) -> Result<(), Failure> {
    let cfg = &mut ctx.cfg;
    if let Some(m) = args.method {
        cfg.method = m;
        cfg.dim = m.dim();
    }
    let method = cfg.method;
    let mut report: Vec<(&str, String)> = vec![("method", method.name().into())];
    let obs = if method == Method::Interior3dResidue {
        cfg.t_final = 2.0;
        None
    } else {
        let obs = read_observation_for(&args.input, method)?;
        cfg.dt = obs.dt;
        cfg.t_final = obs.t_final();
        Some(obs)
    };
    cfg.validate().map_err(usage)?;
    let ball = cfg.ball_grid()?;
    let start = Instant::now();
    let field = match (method, &obs) {
        (Method::Exterior3d, Some(o)) => reconstruct_exterior(o, cfg, &ball)?,
        (Method::Interior3dVolterra, Some(o)) => reconstruct_interior_volterra(o, cfg, &ball)?,
        (Method::Exterior2d | Method::Iterative2d, Some(o)) => {
            if method == Method::Exterior2d {
                cfg.n_iter = 1;
            }
            let (field, state) = reconstruct_iterative_2d(o, cfg, &ball)?;
            let norms: Vec<String> = state.norms.iter().map(|v| v.to_string()).collect();
            report.push(("iteration.count", state.iteration.to_string()));
            report.push(("iteration.norms", norms.join(",")));
            field
        }
        (Method::HalfTime, Some(o)) => {
            let which = if args.vanishing == "a" { Vanishing::AZero } else { Vanishing::BZero };
            let res = reconstruct_halftime(o, which, cfg, &ball)?;
            if res.residual > HALFTIME_WARN {
                eprintln!(
                    "warning: half-time residual {:.3e} exceeds {HALFTIME_WARN:e}; data may not satisfy {} = 0",
                    res.residual, args.vanishing
                );
            }
            report.push(("halftime.vanishing", args.vanishing.clone()));
            report.push(("halftime.residual", res.residual.to_string()));
            res.field
        }
        (Method::FrXcheck, Some(o)) => {
            let b = fr_backprojection_many(o, &ball.points())?;
            CauchyField { a: vec![0.0; b.len()], b, ball: ball.clone() }
        }
        (Method::Interior3dResidue, _) => {
            let poles = read_poles(&args.input)?;
            let res = reconstruct_interior_residue(&poles, cfg.nmax, args.zeros, &ball.radii, ball.radius)?;
            report.push(("residue.zeros", args.zeros.to_string()));
            report.push(("residue.tail_a", res.tail_bound.0.to_string()));
            report.push(("residue.tail_b", res.tail_bound.1.to_string()));
            CauchyField::from_modes(&ball, &res.a, &res.b)
        }
        (_, None) => unreachable!("observation is read for every method but the residue path"),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let prov = format!("recon method={} input={}", method.name(), args.input.display());
    files::write_field(&args.out, &field, cfg.t_final, &prov).map_err(fail::data(&args.out))?;
    write_report(&args.out.with_extension("report"), cfg, &args.input, &report)?;
    if args.csv {
        write_field_csv(&args.out.with_extension("csv"), &field)?;
    }
    println!("recon {}: {} points to {} in {elapsed:.2} s", method.name(), field.a.len(), args.out.display());
    Ok(())
}

/// Deterministic run report; wall time goes to stdout instead.
fn write_report(path: &Path, cfg: &ReconConfig, input: &Path, extra: &[(&str, String)]) -> Result<(), Failure> {
    let mut s = String::new();
    for (k, v) in extra {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "input = {}", input.display());
    let _ = writeln!(s, "dim = {}", cfg.dim.get());
    let _ = writeln!(s, "nmax = {}", cfg.nmax);
    let _ = writeln!(s, "dt = {}", cfg.dt);
    let _ = writeln!(s, "t_final = {}", cfg.t_final);
    fs::write(path, s).map_err(fail::io(path))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub a_l2: f64,
    pub a_linf: f64,
    pub b_l2: f64,
    pub b_linf: f64,
}

pub fn metrics(field: &CauchyField, reference: &CauchyField) -> Result<Metrics, Failure> {
    if field.ball != reference.ball {
        return Err(Failure::new(Code::Numerical, "incompatible grids: fields differ in dimension, radius or node layout"));
    }
    let w = reference.ball.weights();
    Ok(Metrics {
        a_l2: relative_l2(&field.a, &reference.a, &w),
        a_linf: relative_linf(&field.a, &reference.a),
        b_l2: relative_l2(&field.b, &reference.b, &w),
        b_linf: relative_linf(&field.b, &reference.b),
    })
}

pub fn compare(args: &CompareArgs) -> Result<(), Failure> {
    let (_, f) = files::read_field(&args.field).map_err(fail::data(&args.field))?;
    let (_, r) = files::read_field(&args.reference).map_err(fail::data(&args.reference))?;
    let m = metrics(&f, &r)?;
    if args.kv {
        println!("a.rel_l2 = {}", m.a_l2);
        println!("a.rel_linf = {}", m.a_linf);
        println!("b.rel_l2 = {}", m.b_l2);
        println!("b.rel_linf = {}", m.b_linf);
    } else {
        println!("a: relative L2 {:.4e}, relative Linf {:.4e}", m.a_l2, m.a_linf);
        println!("b: relative L2 {:.4e}, relative Linf {:.4e}", m.b_l2, m.b_linf);
    }
    Ok(())
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Failure + '_ {
    move |e| Failure::new(Code::Io, format!("{}: {e}", path.display()))
}

/// Columns t, node, value; node-major with time fastest.
fn write_observation_csv(path: &Path, obs: &BoundaryObservation) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["t", "node", "value"]).map_err(csv_err(path))?;
    for node in 0..obs.grid.len() {
        for (k, v) in obs.series(node).iter().enumerate() {
            let t = k as f64 * obs.dt;
            w.write_record([t.to_string(), node.to_string(), v.to_string()]).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(fail::io(path))
}

/// Columns r, node, a, b where node is the angular index; radius fastest.
fn write_field_csv(path: &Path, field: &CauchyField) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["r", "node", "a", "b"]).map_err(csv_err(path))?;
    let nr = field.ball.radii.len();
    for (idx, (a, b)) in field.a.iter().zip(&field.b).enumerate() {
        let r = field.ball.radii[idx % nr];
        w.write_record([r.to_string(), (idx / nr).to_string(), a.to_string(), b.to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(fail::io(path))
}
