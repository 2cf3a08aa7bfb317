//! Two-file container: a `key = value` metadata document next to a raw
//! payload of little-endian f64 samples.
//!
//! Observations are stored node-major with time fastest. Fields are stored
//! angular-major with radius fastest, component a first, then b.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::parse_key_values;
use crate::error::{Error, Result};
use crate::field::{BallGrid, CauchyField};
use crate::harmonics::{AngularGrid, BoundaryObservation, Dim};

pub const FORMAT_VERSION: &str = "pat-1";
pub const UNITS: &str = "unit sound speed; detector radius 1; time in radius units";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Observation,
    Field,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Observation => "observation",
            Kind::Field => "field",
        }
    }
}

/// Parsed metadata document.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub kind: Kind,
    pub dim: Dim,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Observation time grid; unused for fields.
    pub dt: f64,
    pub n_times: usize,
    /// Ball grid; unused for observations.
    pub radius: f64,
    pub n_radii: usize,
    pub t_final: f64,
    pub provenance: String,
    /// Payload file name, relative to the metadata file.
    pub payload: String,
}

impl Header {
    /// Number of f64 samples the payload must hold.
    pub fn sample_count(&self) -> usize {
        let nodes = match self.dim {
            Dim::Three => self.n_theta * self.n_phi,
            Dim::Two => self.n_phi,
        };
        match self.kind {
            Kind::Observation => nodes * self.n_times,
            Kind::Field => 2 * nodes * self.n_radii,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("format", &FORMAT_VERSION);
        put("kind", &self.kind.name());
        put("dim", &self.dim.get());
        put("grid.n_theta", &self.n_theta);
        put("grid.n_phi", &self.n_phi);
        match self.kind {
            Kind::Observation => {
                put("time.dt", &self.dt);
                put("time.n_times", &self.n_times);
            }
            Kind::Field => {
                put("ball.radius", &self.radius);
                put("ball.n_radii", &self.n_radii);
                put("components", &"a,b");
            }
        }
        put("time.t_final", &self.t_final);
        put("units", &UNITS);
        put("provenance", &self.provenance);
        put("payload", &self.payload);
        put("payload.samples", &self.sample_count());
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let get = |k: &str| map.get(k).map(String::as_str).ok_or_else(|| Error::Format(format!("metadata lacks `{k}`")));
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| Error::Format(format!("bad number for `{k}`")))
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| Error::Format(format!("bad integer for `{k}`")))
        };
        if get("format")? != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format `{}`", get("format")?)));
        }
        let kind = match get("kind")? {
            "observation" => Kind::Observation,
            "field" => Kind::Field,
            other => return Err(Error::Format(format!("unknown kind `{other}`"))),
        };
        let dim = Dim::from_usize(int("dim")?)?;
        let mut h = Header {
            kind,
            dim,
            n_theta: int("grid.n_theta")?,
            n_phi: int("grid.n_phi")?,
            dt: 0.0,
            n_times: 0,
            radius: 0.0,
            n_radii: 0,
            t_final: num("time.t_final")?,
            provenance: get("provenance")?.to_string(),
            payload: get("payload")?.to_string(),
        };
        match kind {
            Kind::Observation => {
                h.dt = num("time.dt")?;
                h.n_times = int("time.n_times")?;
            }
            Kind::Field => {
                h.radius = num("ball.radius")?;
                h.n_radii = int("ball.n_radii")?;
                if get("components")? != "a,b" {
                    return Err(Error::Format("field components must be a,b".into()));
                }
            }
        }
        if int("payload.samples")? != h.sample_count() {
            return Err(Error::Format("payload.samples disagrees with the grid sizes".into()));
        }
        Ok(h)
    }

    fn angular(&self) -> Result<AngularGrid> {
        AngularGrid::new(self.dim, self.n_theta, self.n_phi)
    }
}

/// `run/obs.meta` → `run/obs.bin`.
pub fn payload_path(meta: &Path) -> Result<PathBuf> {
    if meta.extension().is_some_and(|e| e == "bin") {
        return Err(Error::Format(format!("{} is reserved for the payload", meta.display())));
    }
    Ok(meta.with_extension("bin"))
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r', '#'], " ")
}

fn write_pair(meta: &Path, header: &Header, samples: &[&[f64]]) -> Result<()> {
    let bin = payload_path(meta)?;
    let mut w = BufWriter::new(fs::File::create(&bin)?);
    for part in samples {
        for v in *part {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    fs::write(meta, header.to_text())?;
    Ok(())
}

fn read_pair(meta: &Path, kind: Kind) -> Result<(Header, Vec<f64>)> {
    let header = Header::from_text(&fs::read_to_string(meta)?)?;
    if header.kind != kind {
        return Err(Error::Format(format!("{} holds a {}, expected a {}", meta.display(), header.kind.name(), kind.name())));
    }
    let bin = meta.parent().unwrap_or(Path::new("")).join(&header.payload);
    let bytes = fs::read(&bin)?;
    if bytes.len() != 8 * header.sample_count() {
        return Err(Error::Format(format!(
            "payload {} has {} bytes, metadata declares {} samples",
            bin.display(),
            bytes.len(),
            header.sample_count()
        )));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, data))
}

fn payload_name(meta: &Path) -> Result<String> {
    let bin = payload_path(meta)?;
    bin.file_name()
        .and_then(|n| n.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Format(format!("bad output path {}", meta.display())))
}

pub fn observation_header(obs: &BoundaryObservation, provenance: &str, payload: &str) -> Header {
    Header {
        kind: Kind::Observation,
        dim: obs.grid.dim,
        n_theta: obs.grid.n_theta,
        n_phi: obs.grid.n_phi,
        dt: obs.dt,
        n_times: obs.n_times,
        radius: 0.0,
        n_radii: 0,
        t_final: obs.t_final(),
        provenance: one_line(provenance),
        payload: payload.to_string(),
    }
}

pub fn field_header(field: &CauchyField, t_final: f64, provenance: &str, payload: &str) -> Header {
    Header {
        kind: Kind::Field,
        dim: field.ball.dim,
        n_theta: field.ball.angular.n_theta,
        n_phi: field.ball.angular.n_phi,
        dt: 0.0,
        n_times: 0,
        radius: field.ball.radius,
        n_radii: field.ball.radii.len(),
        t_final,
        provenance: one_line(provenance),
        payload: payload.to_string(),
    }
}

pub fn write_observation(meta: &Path, obs: &BoundaryObservation, provenance: &str) -> Result<()> {
    let header = observation_header(obs, provenance, &payload_name(meta)?);
    write_pair(meta, &header, &[&obs.data])
}

pub fn read_observation(meta: &Path) -> Result<(Header, BoundaryObservation)> {
    let (h, data) = read_pair(meta, Kind::Observation)?;
    let grid = h.angular()?;
    let obs = BoundaryObservation { grid, dt: h.dt, n_times: h.n_times, data };
    Ok((h, obs))
}

/// `t_final` records the observation horizon the field was built from.
pub fn write_field(meta: &Path, field: &CauchyField, t_final: f64, provenance: &str) -> Result<()> {
    let header = field_header(field, t_final, provenance, &payload_name(meta)?);
    write_pair(meta, &header, &[&field.a, &field.b])
}

pub fn read_field(meta: &Path) -> Result<(Header, CauchyField)> {
    let (h, mut data) = read_pair(meta, Kind::Field)?;
    let ball = BallGrid::new(h.radius, h.n_radii, h.angular()?)?;
    let b = data.split_off(data.len() / 2);
    Ok((h, CauchyField { ball, a: data, b }))
}
