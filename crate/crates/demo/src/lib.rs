//! Small 2D pipelines for the browser page in `www/`. The plain functions are
//! usable natively; the `wasm_*` wrappers are the JavaScript surface.

use std::sync::Arc;

use pat_core::config::{Method, ReconConfig};
use pat_core::field::{CauchyData, Field, Source};
use pat_core::forward::synthesize_observation;
use pat_core::harmonics::{BoundaryObservation, Dim};
use pat_core::phantom::Bump;
use pat_core::recon2d::reconstruct_iterative_2d;
use pat_core::volterra::build_resolvent3d;
use pat_core::{Error, Result};
use wasm_bindgen::prelude::*;

fn demo_config(t_final: f64, n_iter: usize) -> ReconConfig {
    ReconConfig {
        dim: Dim::Two,
        method: Method::Iterative2d,
        nmax: 8,
        dt: 1e-2,
        t_final,
        n_radii: 16,
        shell_radii: 120,
        mean_cells: 12,
        n_iter,
        ..Default::default()
    }
}

fn bump(cx: f64, cy: f64, radius: f64) -> Result<Bump> {
    if !(radius > 0.0) || (cx * cx + cy * cy).sqrt() + radius > 1.0 {
        return Err(Error::Domain("the bump must lie inside the unit disc".into()));
    }
    Ok(Bump::new(Dim::Two, [cx, cy, 0.0], radius, 3.0))
}

fn observe(b: &Bump, cfg: &ReconConfig) -> Result<BoundaryObservation> {
    let data = CauchyData { dim: Dim::Two, a: Source::Analytic(Arc::new(b.clone())), b: Source::Zero };
    let grid = cfg.observation_grid()?;
    synthesize_observation(&data, &grid, cfg.t_final, cfg.dt, &cfg.forward_options())
}

/// Circle observation of a bump; node-major, time fastest.
pub fn sinogram(cx: f64, cy: f64, radius: f64, t_final: f64) -> Result<BoundaryObservation> {
    let cfg = demo_config(t_final, 1);
    observe(&bump(cx, cy, radius)?, &cfg)
}

/// Truth and reconstruction on a `pixels × pixels` image of [-1, 1]², row-major
/// from the top; zero outside the disc.
pub fn reconstruction_images(cx: f64, cy: f64, radius: f64, t_final: f64, n_iter: usize, pixels: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let cfg = demo_config(t_final, n_iter);
    let b = bump(cx, cy, radius)?;
    let obs = observe(&b, &cfg)?;
    let ball = cfg.ball_grid()?;
    let (_, state) = reconstruct_iterative_2d(&obs, &cfg, &ball)?;
    let mut truth = vec![0.0; pixels * pixels];
    let mut rec = truth.clone();
    let h = 2.0 / pixels as f64;
    for row in 0..pixels {
        for col in 0..pixels {
            let p = [-1.0 + (col as f64 + 0.5) * h, 1.0 - (row as f64 + 0.5) * h, 0.0];
            if p[0] * p[0] + p[1] * p[1] < 1.0 {
                truth[row * pixels + col] = b.value(&p);
                rec[row * pixels + col] = state.sum.value(&p);
            }
        }
    }
    Ok((truth, rec))
}

/// Resolvent kernel H_n on `samples` equispaced points of [0, t_max].
pub fn resolvent_curve(n: usize, t_max: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || !(t_max > 0.0) {
        return Err(Error::Domain("need at least two samples on a positive interval".into()));
    }
    let h = build_resolvent3d(n)?;
    Ok((0..samples).map(|k| h.eval(t_max * k as f64 / (samples - 1) as f64)).collect())
}

fn js(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Flat observation; the node count is `data.length / n_times`.
#[wasm_bindgen]
pub fn wasm_sinogram(cx: f64, cy: f64, radius: f64, t_final: f64) -> std::result::Result<Vec<f64>, JsValue> {
    sinogram(cx, cy, radius, t_final).map(|o| o.data).map_err(js)
}

/// Truth image followed by the reconstruction, each `pixels²` long.
#[wasm_bindgen]
pub fn wasm_reconstruction(cx: f64, cy: f64, radius: f64, t_final: f64, n_iter: usize, pixels: usize) -> std::result::Result<Vec<f64>, JsValue> {
    let (mut t, r) = reconstruction_images(cx, cy, radius, t_final, n_iter, pixels).map_err(js)?;
    t.extend(r);
    Ok(t)
}

#[wasm_bindgen]
pub fn wasm_resolvent(n: usize, t_max: f64, samples: usize) -> std::result::Result<Vec<f64>, JsValue> {
    resolvent_curve(n, t_max, samples).map_err(js)
}

/// Samples per node of `wasm_sinogram` for a given horizon.
#[wasm_bindgen]
pub fn wasm_sinogram_times(t_final: f64) -> usize {
    (t_final / demo_config(t_final, 1).dt + 1e-9).floor() as usize + 1
}
