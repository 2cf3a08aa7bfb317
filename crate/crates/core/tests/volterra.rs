use pat_core::volterra::*;

fn smooth_rhs(grid: TimeGrid) -> Vec<f64> {
    let g: Vec<f64> = (0..grid.n)
        .map(|k| {
            let t = grid.t(k);
            (3.0 * t).sin() * t * t * (-t).exp() + 0.3 * t
        })
        .collect();
    let norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    g.iter().map(|v| v / norm).collect()
}

#[test]
fn direct_and_resolvent_agree() {
    let grid = TimeGrid::new(1e-3, 4001);
    let g = smooth_rhs(grid);
    for n in 1..=10 {
        let direct = exterior_solver_3d(n, grid).unwrap().solve(&g).unwrap();
        let res = build_resolvent3d(n).unwrap();
        let via = apply_resolvent3d(&res, &g, grid);
        let d = direct.iter().zip(&via).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        println!("n={n} sup diff {d:.3e} sigma {:.3}", res.sigma());
        assert!(d < 1e-5, "n={n}: {d:e}");
    }
}

/// g(t) = ∫ ω(τ) G(t-τ) dτ for analytic ω, by fine θ-quadrature.
fn abel_exact(kind: AbelKind, n: usize, omega: impl Fn(f64) -> f64, t: f64) -> f64 {
    let c = if n == 0 { 1.0 } else { n as f64 };
    let th_max = match kind {
        AbelKind::Exterior => (1.0 + t).acosh(),
        AbelKind::Interior => (1.0 - t.min(2.0)).acos(),
    };
    let (x, w) = pat_core::quadrature::gauss_legendre(40);
    let cells = 200;
    let h = th_max / cells as f64;
    let mut s = 0.0;
    for k in 0..cells {
        for (xi, wi) in x.iter().zip(&w) {
            let th = (k as f64 + 0.5 * (xi + 1.0)) * h;
            let (lag, dens) = match kind {
                AbelKind::Exterior => (th.cosh() - 1.0, c * (n as f64 * th).cosh()),
                AbelKind::Interior => (1.0 - th.cos(), c * (n as f64 * th).cos()),
            };
            s += 0.5 * h * wi * dens * omega(t - lag);
        }
    }
    s
}

#[test]
fn abel_solver_converges() {
    for kind in [AbelKind::Exterior, AbelKind::Interior] {
        for n in [0usize, 3, 8] {
            let om = |t: f64| if t < 0.0 { 0.0 } else { t * t * (1.5 * t).cos() };
            let mut errs = vec![];
            for &dt in &[0.02, 0.01, 0.005] {
                let steps = (3.0 / dt) as usize + 1;
                let grid = TimeGrid::new(dt, steps);
                let g: Vec<f64> = (0..steps).map(|k| abel_exact(kind, n, om, grid.t(k))).collect();
                let w = solve_abel_volterra(n, &g, grid, kind).unwrap();
                let e = w
                    .iter()
                    .enumerate()
                    .fold(0.0f64, |m, (k, v)| m.max((v - om(grid.t(k))).abs()));
                errs.push(e);
            }
            let order = (errs[1] / errs[2]).log2();
            println!("{kind:?} n={n} errs {errs:?} order {order:.2}");
            assert!(order > 1.4, "{kind:?} n={n} order {order}");
        }
    }
}

#[test]
fn resolvent_roots_for_all_orders() {
    for n in 1..=19 {
        let res = build_resolvent3d(n).unwrap_or_else(|e| panic!("n={n}: {e}"));
        assert_eq!(res.roots.len(), n);
        // roots of k^n + Σ j! c_j k^{n-j} from the Taylor coefficients at 1
        let taylor = pat_core::specfun::legendre_taylor_at_one(n);
        for z in &res.roots {
            let mut p = num_complex::Complex64::new(0.0, 0.0);
            let mut mag = 0.0;
            for j in 0..=n {
                let d = if j == 0 { 1.0 } else { taylor.derivative_at_one(j) };
                p = p * z + d;
                mag = mag * z.norm() + d.abs();
            }
            assert!(p.norm() < 1e-9 * mag, "n={n}");
            let m = res.roots.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            assert!(m < 1e-8 * z.norm().max(1.0), "n={n}");
            assert!(z.re <= res.sigma() && z.re < 0.0);
        }
        for k in 0..=50 {
            let t = 0.1 * k as f64;
            let im: f64 = res.roots.iter().zip(&res.weights).map(|(z, w)| (w * (z * t).exp()).im).sum();
            let mag: f64 = res.roots.iter().zip(&res.weights).map(|(z, w)| (w * (z * t).exp()).norm()).sum();
            assert!(im.abs() <= 1e-10 * mag.max(1.0), "n={n} t={t}: {im:e}");
        }
    }
    for n in [20, 32, 64] {
        assert!(matches!(build_resolvent3d(n), Err(pat_core::error::Error::Conditioning(_))));
    }
    assert!(build_resolvent3d(65).is_err());
}

#[test]
fn resolvent_examples() {
    let grid = TimeGrid::new(1e-3, 2001);
    let res = build_resolvent3d(1).unwrap();
    let w = apply_resolvent3d(&res, &vec![1.0; grid.n], grid);
    for (k, v) in w.iter().enumerate() {
        assert!((v - (-grid.t(k)).exp()).abs() < 1e-10);
    }
    let z = apply_resolvent3d(&build_resolvent3d(4).unwrap(), &vec![0.0; grid.n], grid);
    assert!(z.iter().all(|&v| v == 0.0));
}

#[test]
fn smooth_solver_converges_second_order_or_better() {
    let om = |t: f64| (2.0 * t).sin() + t * t;
    let kernel = |s: f64| 1.0 + s * (1.5 * s).cos();
    let mut errs = vec![];
    for &dt in &[0.04, 0.02, 0.01] {
        let n = (2.0 / dt) as usize + 1;
        let grid = TimeGrid::new(dt, n);
        // g = ω + ∫ ω K by fine quadrature
        let (x, w) = pat_core::quadrature::gauss_legendre(30);
        let g: Vec<f64> = (0..n)
            .map(|k| {
                let t = grid.t(k);
                let conv: f64 = x.iter().zip(&w).map(|(xi, wi)| {
                    let tau = 0.5 * t * (xi + 1.0);
                    0.5 * t * wi * om(tau) * kernel(t - tau)
                }).sum();
                om(t) + conv
            })
            .collect();
        let sol = solve_smooth_volterra(kernel, &g, grid).unwrap();
        errs.push(sol.iter().enumerate().fold(0.0f64, |m, (k, v)| m.max((v - om(grid.t(k))).abs())));
    }
    let order = (errs[1] / errs[2]).log2();
    assert!(order >= 1.8, "errs {errs:?}");
    let zero = solve_smooth_volterra(|_| 0.0, &[1.0, 2.0, 3.0, 4.0, 5.0], TimeGrid::new(0.1, 5)).unwrap();
    assert_eq!(zero, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
}

fn delay_lhs(n: usize, om: impl Fn(f64) -> f64, t: f64) -> f64 {
    let p1 = |x: f64| pat_core::specfun::legendre_derivs(n, x).1;
    let sgn = if n % 2 == 0 { 1.0 } else { -1.0 };
    let lo = (t - 2.0).max(0.0);
    let (x, w) = pat_core::quadrature::gauss_legendre(40);
    let integral: f64 = x
        .iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let tau = lo + 0.5 * (t - lo) * (xi + 1.0);
            0.5 * (t - lo) * wi * om(tau) * p1(tau + 1.0 - t)
        })
        .sum();
    om(t) - sgn * om(t - 2.0) - integral
}

#[test]
fn delay_solver_manufactured_and_first_interval() {
    let om = |t: f64| if t < 0.0 { 0.0 } else { t * (1.3 * t).cos() + 0.2 * t * t };
    for n in [0usize, 1, 4, 7] {
        let mut errs = vec![];
        for dt in [1e-2, 5e-3] {
            let steps = (5.0 / dt) as usize + 1;
            let grid = TimeGrid::new(dt, steps);
            let g: Vec<f64> = (0..steps).map(|k| delay_lhs(n, om, grid.t(k))).collect();
            let w = solve_delay_volterra(n, &g, grid).unwrap();
            let err = |lo: usize, hi: usize| (lo..hi).fold(0.0f64, |m, k| m.max((w[k] - om(grid.t(k))).abs()));
            let two = (2.0 / dt).round() as usize;
            errs.push(err(0, steps));
            if dt == 5e-3 {
                // the interior procedure only ever uses t ≤ 2
                assert!(err(0, two + 1) < 2e-2, "n={n}");
                for b in [two, 2 * two] {
                    assert!((w[b + 1] - w[b]).abs() < 10.0 * dt * (1.0 + w[b].abs()));
                }
                // on (0, 2) the equation is second kind with kernel −P_n'(1 − s)
                let first = TimeGrid::new(dt, two + 1);
                let direct = solve_smooth_volterra(
                    |s| -pat_core::specfun::legendre_derivs(n, 1.0 - s).1,
                    &g[..=two],
                    first,
                )
                .unwrap();
                let d = direct.iter().zip(&w).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(d < 1e-8, "n={n}: {d:e}");
            }
        }
        if errs[0] > 1e-10 {
            let order = (errs[0] / errs[1]).log2();
            assert!(order > 3.5, "n={n}: {errs:?}");
        }
    }
    let z = solve_delay_volterra(3, &vec![0.0; 801], TimeGrid::new(5e-3, 801)).unwrap();
    assert!(z.iter().all(|&v| v == 0.0));
    assert!(solve_delay_volterra(3, &vec![0.0; 100], TimeGrid::new(0.003, 100)).is_err());
}

#[test]
fn abel_manufactured_constant_and_forward_consistency() {
    let dt = 1e-3;
    let steps = 1001;
    let grid = TimeGrid::new(dt, steps);
    let g: Vec<f64> = (0..steps).map(|k| abel_exact(AbelKind::Exterior, 1, |t| if t < 0.0 { 0.0 } else { 1.0 }, grid.t(k))).collect();
    let w = solve_abel_volterra(1, &g, grid, AbelKind::Exterior).unwrap();
    assert!(w.iter().all(|v| (v - 1.0).abs() < 1e-2));
    let z = solve_abel_volterra(2, &vec![0.0; steps], grid, AbelKind::Exterior).unwrap();
    assert!(z.iter().all(|&v| v == 0.0));
    // forward map of the solution reproduces the data
    let om: Vec<f64> = (0..steps).map(|k| (2.0 * grid.t(k)).sin() * grid.t(k)).collect();
    for (kind, cells) in [(AbelKind::Exterior, steps - 1), (AbelKind::Interior, 2000)] {
        let weights = AbelWeights::new(kind, 3, dt, cells);
        let rhs = weights.apply(&om);
        let sol = solve_abel_volterra(3, &rhs, grid, kind).unwrap();
        let back = weights.apply(&sol);
        let d = back.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(d < 1e-10, "{kind:?}: {d:e}");
    }
}

#[test]
fn bromwich_resolvent_cross_check() {
    let dt = 2e-3;
    let steps = 1501;
    let grid = TimeGrid::new(dt, steps);
    let g: Vec<f64> = (0..steps).map(|k| {
        let t = grid.t(k);
        t * t * (-t).exp() * (2.0 * t).cos()
    }).collect();
    let direct = solve_abel_volterra(1, &g, grid, AbelKind::Exterior).unwrap();
    let res = build_resolvent2d(1, grid, BromwichParams::default()).unwrap();
    let via = res.apply(&g).unwrap();
    let num: f64 = direct.iter().zip(&via).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = direct.iter().map(|a| a * a).sum();
    let rel = (num / den).sqrt();
    println!("bromwich rel L2 {rel:.3e}, estimate {:.2e}", res.error_estimate);
    assert!(rel < 0.05);
    let zero = res.apply(&vec![0.0; steps]).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));
    let g2: Vec<f64> = g.iter().map(|v| 3.0 * v).collect();
    let lin = res.apply(&g2).unwrap();
    let scale = lin.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(lin.iter().zip(&via).all(|(a, b)| (a - 3.0 * b).abs() < 1e-8 * scale));
    assert!(build_resolvent2d(1, grid, BromwichParams { sigma: -1.0, ..Default::default() }).is_err());
}
