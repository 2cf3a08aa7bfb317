//! Analytic test fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Field, Support};
use crate::harmonics::Dim;

/// amplitude · (1 - (|x - c| / radius)²)^power inside the ball, else 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub dim: Dim,
    pub center: [f64; 3],
    pub radius: f64,
    pub power: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(dim: Dim, center: [f64; 3], radius: f64, power: f64) -> Self {
        Self { dim, center, radius, power, amplitude: 1.0 }
    }
}

fn dist2(p: &[f64; 3], c: &[f64; 3]) -> f64 {
    (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)
}

impl Field for Bump {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn value(&self, p: &[f64; 3]) -> f64 {
        let s = dist2(p, &self.center) / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            let w = 1.0 - s;
            if self.power.fract() == 0.0 && self.power.abs() < 64.0 {
                self.amplitude * w.powi(self.power as i32)
            } else {
                self.amplitude * w.powf(self.power)
            }
        }
    }

    fn support(&self) -> Support {
        Support { center: self.center, radius: self.radius }
    }
}

/// amplitude · exp(1 - 1/(1 - s²)), s = |x - c| / radius: a C^∞ bump.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothBump {
    pub dim: Dim,
    pub center: [f64; 3],
    pub radius: f64,
    pub amplitude: f64,
}

impl Field for SmoothBump {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn value(&self, p: &[f64; 3]) -> f64 {
        let s = dist2(p, &self.center) / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - s)).exp()
        }
    }

    fn support(&self) -> Support {
        Support { center: self.center, radius: self.radius }
    }
}

/// Sum of bumps.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiBump {
    pub dim: Dim,
    pub bumps: Vec<Bump>,
}

impl MultiBump {
    /// `count` bumps with random centers, radii and amplitudes, all inside
    /// the ball of radius 0.9.
    pub fn random(dim: Dim, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = (0..count)
            .map(|_| {
                let radius = rng.gen_range(0.15..0.4);
                let reach = 0.9 - radius;
                let mut c = [0.0; 3];
                loop {
                    for v in c.iter_mut().take(dim.get()) {
                        *v = rng.gen_range(-reach..reach);
                    }
                    if dist2(&c, &[0.0; 3]).sqrt() <= reach {
                        break;
                    }
                }
                Bump { dim, center: c, radius, power: 3.0, amplitude: rng.gen_range(0.5..1.5) }
            })
            .collect();
        Self { dim, bumps }
    }
}

impl Field for MultiBump {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn value(&self, p: &[f64; 3]) -> f64 {
        self.bumps.iter().map(|b| b.value(p)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero(pub Dim);

impl Field for Zero {
    fn dim(&self) -> Dim {
        self.0
    }

    fn value(&self, _: &[f64; 3]) -> f64 {
        0.0
    }

    fn support(&self) -> Support {
        Support { center: [0.0; 3], radius: 0.0 }
    }
}

/// Parses `kind[:key=value]...`, e.g. `bump:center=0.3,0,0:radius=0.5:power=3`,
/// `smooth:radius=0.4`, `multibump:count=3`, `zero`.
pub fn parse(dim: Dim, spec: &str, seed: u64) -> Result<Box<dyn Field>> {
    let mut parts = spec.split(':');
    let kind = parts.next().unwrap_or("").trim();
    let mut center = [0.0; 3];
    let mut radius = 0.5;
    let mut power = 3.0;
    let mut amplitude = 1.0;
    let mut count = 3usize;
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("phantom parameter `{p}` is not key=value")))?;
        let num = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| Error::Format(format!("bad number `{s}` in phantom")))
        };
        match k.trim() {
            "center" => {
                let vals = v.split(',').map(num).collect::<Result<Vec<_>>>()?;
                if vals.len() != dim.get() && vals.len() != 3 {
                    return Err(Error::Format(format!("center needs {} components", dim.get())));
                }
                for (c, x) in center.iter_mut().zip(vals) {
                    *c = x;
                }
            }
            "radius" => radius = num(v)?,
            "power" => power = num(v)?,
            "amplitude" => amplitude = num(v)?,
            "count" => count = num(v)? as usize,
            other => return Err(Error::Format(format!("unknown phantom parameter `{other}`"))),
        }
    }
    if dim == Dim::Two {
        center[2] = 0.0;
    }
    if !(radius > 0.0) {
        return Err(Error::Domain("phantom radius must be positive".into()));
    }
    if (center[0].powi(2) + center[1].powi(2) + center[2].powi(2)).sqrt() + radius > 1.0 + 1e-12 {
        return Err(Error::Domain("phantom support must lie in the unit ball".into()));
    }
    Ok(match kind {
        "bump" => Box::new(Bump { dim, center, radius, power, amplitude }),
        "smooth" => Box::new(SmoothBump { dim, center, radius, amplitude }),
        "multibump" => Box::new(MultiBump::random(dim, count, seed)),
        "zero" => Box::new(Zero(dim)),
        other => return Err(Error::Format(format!("unknown phantom kind `{other}`"))),
    })
}
