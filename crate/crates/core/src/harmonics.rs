//! Real orthonormal harmonics on the sphere and circle, quadrature grids,
//! boundary observations and their modal decomposition.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{differentiate_series, gauss_legendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn get(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_usize(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::Domain(format!("dimension must be 2 or 3, got {d}"))),
        }
    }
}

/// Number of real modes with degree ≤ nmax.
pub fn mode_count(dim: Dim, nmax: usize) -> usize {
    match dim {
        Dim::Three => (nmax + 1) * (nmax + 1),
        Dim::Two => 2 * nmax + 1,
    }
}

/// Flat index of mode (n, m). In 2D, m = -n is sin(nφ) and m = +n is cos(nφ).
pub fn mode_index(dim: Dim, n: usize, m: i64) -> usize {
    match dim {
        Dim::Three => ((n * n + n) as i64 + m) as usize,
        Dim::Two => {
            if n == 0 {
                0
            } else if m < 0 {
                2 * n - 1
            } else {
                2 * n
            }
        }
    }
}

/// Degree n and order m of a flat mode index.
pub fn mode_degree(dim: Dim, idx: usize) -> (usize, i64) {
    match dim {
        Dim::Three => {
            let n = (idx as f64).sqrt().floor() as usize;
            let n = if (n + 1) * (n + 1) <= idx { n + 1 } else { n };
            (n, idx as i64 - (n * n + n) as i64)
        }
        Dim::Two => {
            if idx == 0 {
                (0, 0)
            } else {
                let n = idx.div_ceil(2);
                (n, if idx % 2 == 1 { -(n as i64) } else { n as i64 })
            }
        }
    }
}

/// All real orthonormal spherical harmonics of degree ≤ nmax at (cos θ, φ),
/// ordered by flat index. No Condon–Shortley phase.
pub fn sph_harmonics(nmax: usize, cos_theta: f64, phi: f64, out: &mut [f64]) {
    let x = cos_theta.clamp(-1.0, 1.0);
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=nmax {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        let (cm, sm) = if m == 0 {
            (1.0, 0.0)
        } else {
            let a = m as f64 * phi;
            (2f64.sqrt() * a.cos(), 2f64.sqrt() * a.sin())
        };
        let mut put = |n: usize, v: f64| {
            let base = n * n + n;
            if m == 0 {
                out[base] = v;
            } else {
                out[base + m] = v * cm;
                out[base - m] = v * sm;
            }
        };
        put(m, pmm);
        if m == nmax {
            break;
        }
        let mut p_prev = pmm;
        let mut p = (2 * m + 3) as f64;
        p = p.sqrt() * x * pmm;
        put(m + 1, p);
        for n in m + 2..=nmax {
            let nf = n as f64;
            let mf = m as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let b = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0)).sqrt();
            let next = a * (x * p - b * p_prev);
            p_prev = p;
            p = next;
            put(n, p);
        }
    }
}

/// Real orthonormal circular harmonics of degree ≤ nmax at angle φ.
pub fn circ_harmonics(nmax: usize, phi: f64, out: &mut [f64]) {
    out[0] = 1.0 / (2.0 * PI).sqrt();
    let c = 1.0 / PI.sqrt();
    for n in 1..=nmax {
        let a = n as f64 * phi;
        out[2 * n - 1] = c * a.sin();
        out[2 * n] = c * a.cos();
    }
}

/// Harmonics of degree ≤ nmax at a direction (any nonzero vector).
pub fn harmonics_at(dim: Dim, nmax: usize, dir: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mode_count(dim, nmax)];
    match dim {
        Dim::Two => circ_harmonics(nmax, dir[1].atan2(dir[0]), &mut out),
        Dim::Three => {
            let r = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
            let ct = if r > 0.0 { dir[2] / r } else { 1.0 };
            sph_harmonics(nmax, ct, dir[1].atan2(dir[0]), &mut out);
        }
    }
    out
}

/// Product quadrature on the unit sphere (Gauss–Legendre in cos θ times
/// uniform φ) or uniform quadrature on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    pub dim: Dim,
    pub n_theta: usize,
    pub n_phi: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl AngularGrid {
    pub fn sphere(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 1 || n_phi < 1 {
            return Err(Error::Resolution("empty sphere grid".into()));
        }
        let (x, w) = gauss_legendre(n_theta);
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (ct, wt) in x.iter().zip(&w) {
            let st = (1.0 - ct * ct).sqrt();
            for k in 0..n_phi {
                let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                nodes.push([st * phi.cos(), st * phi.sin(), *ct]);
                weights.push(wt * 2.0 * PI / n_phi as f64);
            }
        }
        Ok(Self { dim: Dim::Three, n_theta, n_phi, nodes, weights })
    }

    pub fn circle(n_phi: usize) -> Result<Self> {
        if n_phi < 1 {
            return Err(Error::Resolution("empty circle grid".into()));
        }
        let nodes = (0..n_phi)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / n_phi as f64;
                [phi.cos(), phi.sin(), 0.0]
            })
            .collect();
        Ok(Self {
            dim: Dim::Two,
            n_theta: 1,
            n_phi,
            nodes,
            weights: vec![2.0 * PI / n_phi as f64; n_phi],
        })
    }

    /// Grid with the given number of angular samples per axis.
    pub fn new(dim: Dim, n_theta: usize, n_phi: usize) -> Result<Self> {
        match dim {
            Dim::Three => Self::sphere(n_theta, n_phi),
            Dim::Two => Self::circle(n_phi),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest degree this grid can project exactly.
    pub fn check_resolution(&self, nmax: usize) -> Result<()> {
        let ok = match self.dim {
            Dim::Three => self.n_theta >= nmax + 1 && self.n_phi >= 2 * nmax + 2,
            Dim::Two => self.n_phi >= 2 * nmax + 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Resolution(format!(
                "angular grid {}x{} cannot resolve degree {nmax}",
                self.n_theta, self.n_phi
            )))
        }
    }

    /// Basis matrix, row per node: harmonics of degree ≤ nmax.
    pub fn basis(&self, nmax: usize) -> Vec<Vec<f64>> {
        self.nodes
            .iter()
            .map(|p| harmonics_at(self.dim, nmax, p))
            .collect()
    }
}

/// Pressure samples on an angular grid at equispaced times t_k = k dt.
/// Data is node-major with time fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryObservation {
    pub grid: AngularGrid,
    pub dt: f64,
    pub n_times: usize,
    pub data: Vec<f64>,
}

impl BoundaryObservation {
    pub fn zeros(grid: AngularGrid, dt: f64, n_times: usize) -> Self {
        let data = vec![0.0; grid.len() * n_times];
        Self { grid, dt, n_times, data }
    }

    pub fn t_final(&self) -> f64 {
        self.dt * (self.n_times - 1) as f64
    }

    pub fn series(&self, node: usize) -> &[f64] {
        &self.data[node * self.n_times..(node + 1) * self.n_times]
    }

    pub fn series_mut(&mut self, node: usize) -> &mut [f64] {
        let n = self.n_times;
        &mut self.data[node * n..(node + 1) * n]
    }

    /// Restriction to times t ≤ t_end.
    pub fn truncate(&self, n_times: usize) -> Self {
        let n_times = n_times.min(self.n_times);
        let mut out = Self::zeros(self.grid.clone(), self.dt, n_times);
        for node in 0..self.grid.len() {
            out.series_mut(node).copy_from_slice(&self.series(node)[..n_times]);
        }
        out
    }
}

/// Harmonic coefficient time series F_n^m(t_k).
#[derive(Debug, Clone, PartialEq)]
pub struct ModalCoefficients {
    pub dim: Dim,
    pub nmax: usize,
    pub dt: f64,
    pub n_times: usize,
    pub series: Vec<Vec<f64>>,
}

impl ModalCoefficients {
    pub fn zeros(dim: Dim, nmax: usize, dt: f64, n_times: usize) -> Self {
        Self {
            dim,
            nmax,
            dt,
            n_times,
            series: vec![vec![0.0; n_times]; mode_count(dim, nmax)],
        }
    }

    pub fn t_final(&self) -> f64 {
        self.dt * (self.n_times - 1) as f64
    }

    pub fn degree(&self, mode: usize) -> usize {
        mode_degree(self.dim, mode).0
    }
}

/// Projects each time slice onto harmonics of degree ≤ nmax.
pub fn analyze(obs: &BoundaryObservation, nmax: usize) -> Result<ModalCoefficients> {
    obs.grid.check_resolution(nmax)?;
    let basis = obs.grid.basis(nmax);
    let mut out = ModalCoefficients::zeros(obs.grid.dim, nmax, obs.dt, obs.n_times);
    for (node, row) in basis.iter().enumerate() {
        let w = obs.grid.weights[node];
        let s = obs.series(node);
        for (mode, &y) in row.iter().enumerate() {
            let c = w * y;
            for (o, v) in out.series[mode].iter_mut().zip(s) {
                *o += c * v;
            }
        }
    }
    Ok(out)
}

/// Evaluates a modal expansion on the nodes of `grid`.
pub fn synthesize(coeffs: &ModalCoefficients, grid: &AngularGrid) -> BoundaryObservation {
    let basis = grid.basis(coeffs.nmax);
    let mut obs = BoundaryObservation::zeros(grid.clone(), coeffs.dt, coeffs.n_times);
    for (node, row) in basis.iter().enumerate() {
        let s = obs.series_mut(node);
        for (mode, &y) in row.iter().enumerate() {
            for (o, v) in s.iter_mut().zip(&coeffs.series[mode]) {
                *o += y * v;
            }
        }
    }
    obs
}

/// Time derivative of every mode series.
pub fn differentiate_modes(coeffs: &ModalCoefficients, order: u8) -> Result<ModalCoefficients> {
    let series = coeffs
        .series
        .iter()
        .map(|s| differentiate_series(s, order, coeffs.dt))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModalCoefficients { series, ..coeffs.clone() })
}
