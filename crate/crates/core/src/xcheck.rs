//! Cross-checks: backprojection from spherical data, and recovery of one
//! Cauchy datum from observations on [0, 1] by reflection in time.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::ReconConfig;
use crate::error::{Error, Result};
use crate::field::{norm3, BallGrid, CauchyField, RadialModes};
use crate::harmonics::{analyze, mode_count, mode_degree, BoundaryObservation, Dim, ModalCoefficients};
use crate::quadrature::{cubic_series, differentiate_series, gauss_legendre, gregory_weights, steps};
use crate::specfun::legendre_all_deriv;

/// Which Cauchy datum is known to vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vanishing {
    /// a = 0, so u is odd in t.
    AZero,
    /// b = 0, so u is even in t.
    BZero,
}

impl Vanishing {
    fn sign(self) -> f64 {
        match self {
            Vanishing::AZero => -1.0,
            Vanishing::BZero => 1.0,
        }
    }
}

/// Observation of the shifted field Ṽ(·, t) = U(·, t − 1) on [0, 2].
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedObservation {
    pub parity: Vanishing,
    pub obs: BoundaryObservation,
}

impl ReflectedObservation {
    /// Index of t = 1.
    pub fn center(&self) -> usize {
        (self.obs.n_times - 1) / 2
    }

    /// Largest |Ṽ(1+s) ∓ Ṽ(1−s)| over mirrored samples.
    pub fn symmetry_defect(&self) -> f64 {
        let c = self.center();
        let sgn = self.parity.sign();
        let mut worst = 0.0f64;
        for node in 0..self.obs.grid.len() {
            let y = self.obs.series(node);
            for k in 0..=c {
                worst = worst.max((y[c + k] - sgn * y[c - k]).abs());
            }
        }
        worst
    }
}

/// Reflects F on [0, 1] about t = 0 (odd for `AZero`, even for `BZero`) and
/// shifts by one. Samples past t = 1 are ignored.
pub fn reflect_and_shift(obs: &BoundaryObservation, parity: Vanishing) -> Result<ReflectedObservation> {
    let m = steps(1.0, obs.dt)?;
    if m >= obs.n_times {
        return Err(Error::Domain(format!("reflection needs data up to t = 1, have {}", obs.t_final())));
    }
    let sgn = parity.sign();
    let mut out = BoundaryObservation::zeros(obs.grid.clone(), obs.dt, 2 * m + 1);
    for node in 0..obs.grid.len() {
        let f = &obs.series(node)[..=m];
        let y = out.series_mut(node);
        for k in 1..=m {
            y[m + k] = f[k];
            y[m - k] = sgn * f[k];
        }
        y[m] = match parity {
            Vanishing::AZero => 0.0,
            Vanishing::BZero => f[0],
        };
    }
    Ok(ReflectedObservation { parity, obs: out })
}

/// Plane-wave densities of the free solution on [-1, 1], one per mode.
///
/// Each mode of u is ∫ ω(t + rα) P_n(α) dα with ω supported in [-1, 1] and
/// ω(−σ) = ε ω(σ). Differentiating the boundary identity on t ∈ [0, 1]
/// gives a second-kind equation for ω on [0, 1], solved by Nyström.
pub fn halftime_densities(refl: &ReflectedObservation, nmax: usize) -> Result<(Vec<Vec<f64>>, f64)> {
    if refl.obs.grid.dim != Dim::Three {
        return Err(Error::Domain("half-time recovery is only available in 3D".into()));
    }
    let coeffs = analyze(&refl.obs, nmax)?;
    let m = refl.center();
    let dt = coeffs.dt;
    let nm = mode_count(Dim::Three, nmax);
    let derivs: Vec<Vec<f64>> = coeffs
        .series
        .iter()
        .map(|s| differentiate_series(s, 1, dt))
        .collect::<Result<_>>()?;
    let wfull: Vec<f64> = gregory_weights(m).iter().map(|w| w * dt).collect();
    let per_degree: Vec<Result<Vec<(usize, Vec<f64>)>>> = (0..=nmax)
        .into_par_iter()
        .map(|n| {
            let parity_n = if n % 2 == 0 { 1.0 } else { -1.0 };
            let eps = refl.parity.sign() * parity_n;
            let kappa = -parity_n * eps;
            let mut p = vec![0.0; n + 1];
            let mut dp = vec![0.0; n + 1];
            let mut kern = |x: f64| {
                legendre_all_deriv(x, &mut p, &mut dp);
                dp[n]
            };
            let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
            for k in 0..=m {
                let sigma = k as f64 * dt;
                a[(k, k)] += kappa;
                for j in 0..=m {
                    a[(k, j)] -= wfull[j] * kern(j as f64 * dt - 1.0 + sigma);
                }
                if k > 0 {
                    let wk = gregory_weights(k);
                    for j in 0..=k {
                        a[(k, j)] -= eps * wk[j] * dt * kern(-(j as f64) * dt - 1.0 + sigma);
                    }
                }
            }
            let lu = a.lu();
            (n * n..(n + 1) * (n + 1))
                .filter(|&i| i < nm)
                .map(|i| {
                    let rhs = DVector::from_iterator(m + 1, (0..=m).map(|k| derivs[i][2 * m - k]));
                    let w = lu
                        .solve(&rhs)
                        .ok_or_else(|| Error::Singular(format!("half-time system singular at degree {n}")))?;
                    let mut full = vec![0.0; 2 * m + 1];
                    for k in 0..=m {
                        full[m + k] = w[k];
                        full[m - k] = eps * w[k];
                    }
                    Ok((i, full))
                })
                .collect()
        })
        .collect();
    let mut out = vec![Vec::new(); nm];
    for d in per_degree {
        for (i, w) in d? {
            out[i] = w;
        }
    }
    let residual = boundary_residual(&coeffs, &out, m);
    Ok((out, residual))
}

/// Relative mismatch between the data on [0, 1] and the boundary values
/// re-synthesized from the densities.
fn boundary_residual(coeffs: &ModalCoefficients, dens: &[Vec<f64>], m: usize) -> f64 {
    let dt = coeffs.dt;
    let nmax = coeffs.nmax;
    let mut p = vec![0.0; nmax + 1];
    let mut dp = vec![0.0; nmax + 1];
    let mut num = 0.0;
    let mut den = 0.0;
    let mut f = vec![0.0; dens.len()];
    for k in 0..=m {
        // F(t_k) = ∫_{t−1}^{1} ω(τ) P_n(τ − t) dτ, τ index from k to 2m
        let w = gregory_weights(2 * m - k);
        f.iter_mut().for_each(|v| *v = 0.0);
        for (j, wj) in w.iter().enumerate() {
            let tau_idx = k + j;
            legendre_all_deriv((tau_idx as f64 - (m + k) as f64) * dt, &mut p, &mut dp);
            for (i, fi) in f.iter_mut().enumerate() {
                *fi += wj * dt * dens[i][tau_idx] * p[mode_degree(Dim::Three, i).0];
            }
        }
        for (i, fi) in f.iter().enumerate() {
            let d = coeffs.series[i][m + k];
            num += (fi - d) * (fi - d);
            den += d * d;
        }
    }
    if den > 0.0 { (num / den).sqrt() } else { num.sqrt() }
}

/// ∫_{-1}^1 g(rα) P_n(α) dα for every mode, g sampled on [-1, 1].
fn assemble(series: &[Vec<f64>], nmax: usize, dt: f64, r: f64) -> Vec<f64> {
    let nm = series.len();
    let mut out = vec![0.0; nm];
    let mut p = vec![0.0; nmax + 1];
    let mut dp = vec![0.0; nmax + 1];
    if r < 1e-12 {
        for (i, s) in series.iter().enumerate() {
            if mode_degree(Dim::Three, i).0 == 0 {
                out[i] = 2.0 * cubic_series(s, dt, 1.0);
            }
        }
        return out;
    }
    let (gx, gw) = gauss_legendre(4);
    let cells = ((2.0 * r / dt).ceil() as usize).max(1);
    let h = 2.0 / cells as f64;
    for c in 0..cells {
        for (x, w) in gx.iter().zip(&gw) {
            let alpha = -1.0 + h * (c as f64 + 0.5 * (x + 1.0));
            legendre_all_deriv(alpha, &mut p, &mut dp);
            let ww = 0.5 * h * w;
            for (i, s) in series.iter().enumerate() {
                let n = mode_degree(Dim::Three, i).0;
                out[i] += ww * cubic_series(s, dt, 1.0 + r * alpha) * p[n];
            }
        }
    }
    out
}

/// Result of the half-time procedure.
#[derive(Debug, Clone)]
pub struct HalftimeResult {
    pub field: CauchyField,
    /// Relative boundary residual of the density solve; large values mean
    /// the declared vanishing datum is inconsistent with the data.
    pub residual: f64,
}

/// Recovers the surviving Cauchy datum from observations on [0, 1].
pub fn reconstruct_halftime(
    obs: &BoundaryObservation,
    which: Vanishing,
    cfg: &ReconConfig,
    target: &BallGrid,
) -> Result<HalftimeResult> {
    if obs.grid.dim != Dim::Three {
        return Err(Error::Domain("half-time recovery is only available in 3D".into()));
    }
    if ((obs.dt - cfg.dt) / cfg.dt).abs() > 1e-9 {
        return Err(Error::Domain(format!("observation dt {} differs from config dt {}", obs.dt, cfg.dt)));
    }
    let refl = reflect_and_shift(obs, which)?;
    let (dens, residual) = halftime_densities(&refl, cfg.nmax)?;
    let dt = obs.dt;
    let series: Vec<Vec<f64>> = match which {
        Vanishing::AZero => dens
            .iter()
            .map(|w| differentiate_series(w, 1, dt))
            .collect::<Result<_>>()?,
        Vanishing::BZero => dens,
    };
    let rows: Vec<Vec<f64>> = target
        .radii
        .par_iter()
        .map(|&r| assemble(&series, cfg.nmax, dt, r))
        .collect();
    let mut modes = RadialModes::zeros(Dim::Three, cfg.nmax, target.radii.clone(), target.radius);
    for (k, row) in rows.into_iter().enumerate() {
        for (i, v) in row.into_iter().enumerate() {
            modes.profiles[i][k] = v;
        }
    }
    let zero = RadialModes::zeros(Dim::Three, cfg.nmax, target.radii.clone(), target.radius);
    let field = match which {
        Vanishing::AZero => CauchyField::from_modes(target, &zero, &modes),
        Vanishing::BZero => CauchyField::from_modes(target, &modes, &zero),
    };
    Ok(HalftimeResult { field, residual })
}

/// b(x) from 3D observations with a = 0:
/// b(x) = −(1/2π) ∫_S ∂_t²(t F)(|x − x₀|, x₀) / |x − x₀| dS(x₀).
pub fn fr_backprojection(obs: &BoundaryObservation, x: &[f64; 3]) -> Result<f64> {
    Ok(fr_backprojection_many(obs, std::slice::from_ref(x))?[0])
}

/// Backprojection at many points; the second derivatives are shared.
pub fn fr_backprojection_many(obs: &BoundaryObservation, xs: &[[f64; 3]]) -> Result<Vec<f64>> {
    if obs.grid.dim != Dim::Three {
        return Err(Error::Domain("backprojection formula is 3D only".into()));
    }
    let t_final = obs.t_final();
    for x in xs {
        let r = norm3(x);
        if r >= 1.0 {
            return Err(Error::Domain(format!("point at radius {r} is outside the unit ball")));
        }
        if 1.0 + r > t_final + 1e-12 {
            return Err(Error::Domain(format!(
                "backprojection at radius {r} needs data up to t = {}, have {t_final}",
                1.0 + r
            )));
        }
    }
    let dt = obs.dt;
    let d2: Vec<Vec<f64>> = (0..obs.grid.len())
        .map(|node| {
            let tf: Vec<f64> = obs.series(node).iter().enumerate().map(|(k, f)| k as f64 * dt * f).collect();
            differentiate_series(&tf, 2, dt)
        })
        .collect::<Result<_>>()?;
    let out = xs
        .par_iter()
        .map(|x| {
            let mut acc = 0.0;
            for (node, (y, w)) in obs.grid.nodes.iter().zip(&obs.grid.weights).enumerate() {
                let d = norm3(&[x[0] - y[0], x[1] - y[1], x[2] - y[2]]);
                acc += w * cubic_series(&d2[node], dt, d) / d;
            }
            -acc / (2.0 * std::f64::consts::PI)
        })
        .collect();
    Ok(out)
}
