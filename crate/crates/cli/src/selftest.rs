//! Fast invariant checks drawn from each module.

use std::sync::Arc;
use std::time::Instant;

use pat_core::config::ReconConfig;
use pat_core::field::{relative_l2, CauchyData, CauchyField, Source};
use pat_core::forward::{eval_solution, synthesize_observation};
use pat_core::harmonics::{analyze, synthesize, AngularGrid, Dim};
use pat_core::phantom::{Bump, Zero};
use pat_core::recon3d::reconstruct_exterior;
use pat_core::specfun::{bessel_zeros, chebyshev_t, chebyshev_u, legendre_derivs, Order};
use pat_core::volterra::{apply_resolvent3d, build_resolvent3d, exterior_solver_3d, TimeGrid};

use crate::commands::Context;
use crate::fail::{Code, Failure};

type Check = fn() -> Result<String, String>;

fn within(name: &str, value: f64, tol: f64) -> Result<String, String> {
    let line = format!("{name} {value:.3e} (tolerance {tol:.0e})");
    if value <= tol {
        Ok(line)
    } else {
        Err(line)
    }
}

fn legendre_ode() -> Result<String, String> {
    let mut worst = 0.0f64;
    for n in 0..=30 {
        for k in 0..=20 {
            let x = 1.0 + 0.1 * k as f64;
            let (p, d, s) = legendre_derivs(n, x);
            let terms = [(1.0 - x * x) * s, -2.0 * x * d, (n * (n + 1)) as f64 * p];
            let scale = terms.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            worst = worst.max(terms.iter().sum::<f64>().abs() / scale);
        }
    }
    within("relative residual", worst, 1e-12)
}

fn pell() -> Result<String, String> {
    let mut worst = 0.0f64;
    for n in 1..=30 {
        for k in 0..=20 {
            let x = 1.0 + 0.1 * k as f64;
            let t = chebyshev_t(n, x);
            let u = chebyshev_u(n - 1, x);
            worst = worst.max((t * t - (x * x - 1.0) * u * u - 1.0).abs() / (t * t).max(1.0));
        }
    }
    within("relative defect", worst, 1e-13)
}

fn half_integer_zeros() -> Result<String, String> {
    let z = bessel_zeros(Order::HalfInteger(0), 20).map_err(|e| e.to_string())?;
    let err = z.iter().enumerate().fold(0.0f64, |m, (p, v)| m.max((v - (p + 1) as f64 * std::f64::consts::PI).abs()));
    within("max |z_p - pπ|", err, 1e-10)
}

fn resolvent_h1() -> Result<String, String> {
    let h = build_resolvent3d(1).map_err(|e| e.to_string())?;
    let err = (0..=400).map(|k| k as f64 * 0.01).fold(0.0f64, |m, t| m.max((h.eval(t) - (-t).exp()).abs()));
    within("max |H_1 - e^-t|", err, 1e-10)
}

fn resolvent_vs_direct() -> Result<String, String> {
    let grid = TimeGrid::new(1e-3, 4000);
    let g: Vec<f64> = (0..=4000).map(|k| (k as f64 * 1e-3).sin() * (-(k as f64) * 5e-4).exp()).collect();
    let mut worst = 0.0f64;
    for n in [1, 4, 8] {
        let direct = exterior_solver_3d(n, grid).and_then(|s| s.solve(&g)).map_err(|e| e.to_string())?;
        let res = build_resolvent3d(n).map_err(|e| e.to_string())?;
        let via = apply_resolvent3d(&res, &g, grid);
        worst = worst.max(direct.iter().zip(&via).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
    }
    within("sup difference", worst, 1e-5)
}

fn harmonic_roundtrip() -> Result<String, String> {
    let grid = AngularGrid::sphere(10, 20).map_err(|e| e.to_string())?;
    let mut obs = pat_core::harmonics::BoundaryObservation::zeros(grid.clone(), 0.1, 3);
    for (i, v) in obs.data.iter_mut().enumerate() {
        let node = grid.nodes[i / 3];
        *v = node[0] * node[1] + 0.3 * node[2] * node[2] * node[2];
    }
    let c = analyze(&obs, 6).map_err(|e| e.to_string())?;
    let back = synthesize(&c, &grid);
    let err = back.data.iter().zip(&obs.data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    within("max synthesis defect", err, 1e-12)
}

fn config_roundtrip() -> Result<String, String> {
    let c = ReconConfig { fd_step: Some(3e-4), phantom: Some("bump:radius=0.4".into()), ..Default::default() };
    let back = ReconConfig::from_text(&c.to_text()).map_err(|e| e.to_string())?;
    if back == c && back.to_text() == c.to_text() {
        Ok("parse after serialize is the identity".into())
    } else {
        Err("config text does not round-trip".into())
    }
}

fn bump() -> Bump {
    Bump::new(Dim::Three, [0.3, 0.0, 0.0], 0.5, 3.0)
}

fn trailing_edge() -> Result<String, String> {
    let data = CauchyData { dim: Dim::Three, a: Source::Analytic(Arc::new(bump())), b: Source::Zero };
    let opts = ReconConfig::default().forward_options();
    let mut worst = 0.0f64;
    for x in [[0.0, 0.0, 0.0], [0.3, 0.2, 0.0], [-0.5, 0.1, 0.6]] {
        let (u, _) = eval_solution(&data, &x, 2.05, &opts).map_err(|e| e.to_string())?;
        worst = worst.max(u.abs());
    }
    within("max |u(x, 2.05)|", worst, 1e-3)
}

fn exterior_roundtrip() -> Result<String, String> {
    let cfg = ReconConfig { nmax: 6, dt: 1e-2, t_final: 2.1, n_radii: 10, shell_radii: 150, ..Default::default() };
    let data = CauchyData { dim: Dim::Three, a: Source::Analytic(Arc::new(bump())), b: Source::Zero };
    let grid = cfg.observation_grid().map_err(|e| e.to_string())?;
    let obs = synthesize_observation(&data, &grid, cfg.t_final, cfg.dt, &cfg.forward_options()).map_err(|e| e.to_string())?;
    let ball = cfg.ball_grid().map_err(|e| e.to_string())?;
    let rec = reconstruct_exterior(&obs, &cfg, &ball).map_err(|e| e.to_string())?;
    let truth = CauchyField::sample(&ball, &bump(), &Zero(Dim::Three));
    within("relative L2 error of a", relative_l2(&rec.a, &truth.a, &ball.weights()), 0.05)
}

pub fn run(_ctx: &Context) -> Result<(), Failure> {
    let checks: [(&str, Check); 9] = [
        ("specfun.legendre_ode", legendre_ode),
        ("specfun.pell", pell),
        ("specfun.half_integer_zeros", half_integer_zeros),
        ("volterra.resolvent_h1", resolvent_h1),
        ("volterra.resolvent_vs_direct", resolvent_vs_direct),
        ("harmonics.roundtrip", harmonic_roundtrip),
        ("cli.config_roundtrip", config_roundtrip),
        ("forward.trailing_edge", trailing_edge),
        ("recon3d.exterior_roundtrip", exterior_roundtrip),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let (tag, line) = match check() {
            Ok(l) => ("PASS", l),
            Err(l) => {
                failed += 1;
                ("FAIL", l)
            }
        };
        println!("{tag} {name}: {line} [{:.2} s]", start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        return Err(Failure::new(Code::Numerical, format!("selftest: {failed} check(s) failed")));
    }
    Ok(())
}
