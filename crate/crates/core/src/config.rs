//! Reconstruction settings with a flat `key = value` text form (dotted keys).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::BallGrid;
use crate::forward::ForwardOptions;
use crate::harmonics::{AngularGrid, Dim};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolterraPath {
    Direct,
    Resolvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exterior3d,
    Interior3dVolterra,
    Interior3dResidue,
    Exterior2d,
    Iterative2d,
    HalfTime,
    FrXcheck,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown method `{s}`")))
    }
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Exterior3d,
        Method::Interior3dVolterra,
        Method::Interior3dResidue,
        Method::Exterior2d,
        Method::Iterative2d,
        Method::HalfTime,
        Method::FrXcheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exterior3d => "exterior3d",
            Method::Interior3dVolterra => "interior3d-volterra",
            Method::Interior3dResidue => "interior3d-residue",
            Method::Exterior2d => "exterior2d",
            Method::Iterative2d => "iterative2d",
            Method::HalfTime => "halftime",
            Method::FrXcheck => "fr-xcheck",
        }
    }

    pub fn dim(self) -> Dim {
        match self {
            Method::Exterior2d | Method::Iterative2d => Dim::Two,
            _ => Dim::Three,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconConfig {
    pub dim: Dim,
    pub nmax: usize,
    pub dt: f64,
    pub t_final: f64,
    pub method: Method,
    pub volterra: VolterraPath,
    /// Radial samples of the reconstruction ball grid.
    pub n_radii: usize,
    pub ball_radius: f64,
    /// Observation grid; `None` picks a default from `nmax`.
    pub obs_theta: Option<usize>,
    pub obs_phi: Option<usize>,
    /// Chebyshev radii for exterior-field profiles.
    pub shell_radii: usize,
    /// Composite Gauss–Legendre cells (order 8) for modal sphere means.
    pub mean_cells: usize,
    /// Gauss–Legendre order of point spherical/disc means.
    pub quad_order: usize,
    /// Time step of t and s finite differences; `None` means dt / 4.
    pub fd_step: Option<f64>,
    pub n_iter: usize,
    pub workers: usize,
    pub seed: u64,
    pub phantom: Option<String>,
    /// Which Cauchy component the phantom fills: "a" or "b".
    pub phantom_component: String,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            dim: Dim::Three,
            nmax: 12,
            dt: 2e-3,
            t_final: 2.2,
            method: Method::Exterior3d,
            volterra: VolterraPath::Direct,
            n_radii: 24,
            ball_radius: 1.0,
            obs_theta: None,
            obs_phi: None,
            shell_radii: 600,
            mean_cells: 32,
            quad_order: 24,
            fd_step: None,
            n_iter: 3,
            workers: 1,
            seed: 0,
            phantom: None,
            phantom_component: "a".into(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>().map_err(|_| Error::Format(format!("bad value `{v}` for `{key}`")))
}

fn parse_opt<T: FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

fn show_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_else(|| "auto".into())
}

impl ReconConfig {
    pub fn fd_step(&self) -> f64 {
        self.fd_step.unwrap_or(self.dt / 4.0)
    }

    pub fn forward_options(&self) -> ForwardOptions {
        ForwardOptions { quad_order: self.quad_order, fd_step: self.fd_step() }
    }

    pub fn observation_grid(&self) -> Result<AngularGrid> {
        let th = self.obs_theta.unwrap_or(self.nmax + 4);
        let ph = self.obs_phi.unwrap_or(2 * self.nmax + 8);
        AngularGrid::new(self.dim, th, ph)
    }

    /// Angular grid of reconstruction targets, fine enough for degree nmax.
    pub fn target_angular(&self) -> Result<AngularGrid> {
        AngularGrid::new(self.dim, self.nmax + 2, 2 * self.nmax + 4)
    }

    pub fn ball_grid(&self) -> Result<BallGrid> {
        BallGrid::new(self.ball_radius, self.n_radii, self.target_angular()?)
    }

    /// Checks ranges; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, why: &str| Err(Error::Domain(format!("config `{k}`: {why}")));
        if !(self.dt > 0.0) {
            return bad("grid.dt", "must be positive");
        }
        if !(self.t_final > 0.0) {
            return bad("grid.t_final", "must be positive");
        }
        if self.nmax > 64 {
            return bad("recon.nmax", "must be at most 64");
        }
        if self.n_radii == 0 {
            return bad("grid.n_radii", "must be positive");
        }
        if !(self.ball_radius > 0.0 && self.ball_radius <= 1.0) {
            return bad("grid.ball_radius", "must lie in (0, 1]");
        }
        if self.shell_radii < 8 {
            return bad("quad.shell_radii", "must be at least 8");
        }
        if self.workers == 0 {
            return bad("run.workers", "must be positive");
        }
        if self.method.dim() != self.dim {
            return bad("recon.method", &format!("{} needs dimension {}", self.method.name(), self.method.dim().get()));
        }
        if self.phantom_component != "a" && self.phantom_component != "b" {
            return bad("phantom.component", "must be a or b");
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("grid.dim", self.dim.get().to_string());
        put("recon.nmax", self.nmax.to_string());
        put("grid.dt", self.dt.to_string());
        put("grid.t_final", self.t_final.to_string());
        put("recon.method", self.method.name().into());
        put(
            "recon.volterra",
            match self.volterra {
                VolterraPath::Direct => "direct".into(),
                VolterraPath::Resolvent => "resolvent".into(),
            },
        );
        put("grid.n_radii", self.n_radii.to_string());
        put("grid.ball_radius", self.ball_radius.to_string());
        put("grid.obs_theta", show_opt(&self.obs_theta));
        put("grid.obs_phi", show_opt(&self.obs_phi));
        put("quad.shell_radii", self.shell_radii.to_string());
        put("quad.mean_cells", self.mean_cells.to_string());
        put("quad.order", self.quad_order.to_string());
        put("quad.fd_step", show_opt(&self.fd_step));
        put("recon.n_iter", self.n_iter.to_string());
        put("run.workers", self.workers.to_string());
        put("run.seed", self.seed.to_string());
        put("phantom.spec", self.phantom.clone().unwrap_or_else(|| "none".into()));
        put("phantom.component", self.phantom_component.clone());
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let mut c = Self::default();
        for (k, v) in &map {
            let v = v.as_str();
            match k.as_str() {
                "grid.dim" => c.dim = Dim::from_usize(parse_num(k, v)?)?,
                "recon.nmax" => c.nmax = parse_num(k, v)?,
                "grid.dt" => c.dt = parse_num(k, v)?,
                "grid.t_final" => c.t_final = parse_num(k, v)?,
                "recon.method" => c.method = v.parse()?,
                "recon.volterra" => {
                    c.volterra = match v {
                        "direct" => VolterraPath::Direct,
                        "resolvent" => VolterraPath::Resolvent,
                        _ => return Err(Error::Format(format!("bad value `{v}` for `recon.volterra`"))),
                    }
                }
                "grid.n_radii" => c.n_radii = parse_num(k, v)?,
                "grid.ball_radius" => c.ball_radius = parse_num(k, v)?,
                "grid.obs_theta" => c.obs_theta = parse_opt(k, v)?,
                "grid.obs_phi" => c.obs_phi = parse_opt(k, v)?,
                "quad.shell_radii" => c.shell_radii = parse_num(k, v)?,
                "quad.mean_cells" => c.mean_cells = parse_num(k, v)?,
                "quad.order" => c.quad_order = parse_num(k, v)?,
                "quad.fd_step" => c.fd_step = parse_opt(k, v)?,
                "recon.n_iter" => c.n_iter = parse_num(k, v)?,
                "run.workers" => c.workers = parse_num(k, v)?,
                "run.seed" => c.seed = parse_num(k, v)?,
                "phantom.spec" => c.phantom = if v == "none" { None } else { Some(v.to_string()) },
                "phantom.component" => c.phantom_component = v.to_string(),
                other => return Err(Error::Format(format!("unknown config key `{other}`"))),
            }
        }
        if c.dim == Dim::Two && !map.contains_key("recon.method") {
            c.method = Method::Iterative2d;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses `key = value` lines; `#` starts a comment. Duplicate keys are an error.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected key = value", i + 1)))?;
        let k = k.trim().to_string();
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Format(format!("duplicate key `{k}`")));
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let mut c = ReconConfig::default();
        c.fd_step = Some(1e-4);
        c.phantom = Some("bump:center=0.3,0,0:radius=0.5".into());
        let back = ReconConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), c.to_text());
    }

    #[test]
    fn bad_key_is_named() {
        let e = ReconConfig::from_text("grid.dt = -1").unwrap_err();
        assert!(e.to_string().contains("dt"));
        let e = ReconConfig::from_text("bogus = 3").unwrap_err();
        assert!(e.to_string().contains("bogus"));
    }
}
