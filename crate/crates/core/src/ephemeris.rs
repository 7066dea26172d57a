//! Planet positions and apparent magnitudes.
//!
//! Tables are static snapshots read from text files of the form
//! `name,epoch,x_km,y_km,z_km,app_mag`. A simple circular-orbit model of the
//! eight planets is included to generate such snapshots synthetically.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use crate::AU_KM;

#[derive(Debug, Error)]
pub enum EphemerisError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate entry {name} at epoch {epoch}")]
    Duplicate { name: String, epoch: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EphemerisEntry {
    pub name: String,
    pub epoch: String,
    pub position_km: Vector3<f64>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EphemerisTable {
    pub entries: Vec<EphemerisEntry>,
}

impl EphemerisTable {
    pub fn new(entries: Vec<EphemerisEntry>) -> Result<Self, EphemerisError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert((e.name.clone(), e.epoch.clone())) {
                return Err(EphemerisError::Duplicate {
                    name: e.name.clone(),
                    epoch: e.epoch.clone(),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&EphemerisEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Text form; floats use the shortest representation that parses back
    /// to the same value.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# name,epoch,x_km,y_km,z_km,app_mag\n");
        for e in &self.entries {
            let p = &e.position_km;
            let _ = writeln!(
                out,
                "{},{},{:?},{:?},{:?},{:?}",
                e.name, e.epoch, p.x, p.y, p.z, e.magnitude
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, EphemerisError> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| EphemerisError::Parse { line: n + 1, message };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", f.len())));
            }
            if f[0].is_empty() {
                return Err(err("empty name".into()));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("invalid number {s:?}")))
            };
            entries.push(EphemerisEntry {
                name: f[0].to_string(),
                epoch: f[1].to_string(),
                position_km: Vector3::new(num(f[2])?, num(f[3])?, num(f[4])?),
                magnitude: num(f[5])?,
            });
        }
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EphemerisError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EphemerisError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Circular heliocentric orbit referred to the ecliptic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanetOrbit {
    pub name: &'static str,
    pub semi_major_axis_au: f64,
    pub inclination_deg: f64,
    pub node_deg: f64,
    /// Mean longitude at day 0.
    pub mean_longitude_deg: f64,
    /// Absolute magnitude: brightness at 1 AU from both Sun and observer.
    pub absolute_magnitude: f64,
}

pub const PLANETS: [PlanetOrbit; 8] = [
    PlanetOrbit {
        name: "Mercury",
        semi_major_axis_au: 0.387,
        inclination_deg: 7.00,
        node_deg: 48.3,
        mean_longitude_deg: 252.25,
        absolute_magnitude: -0.42,
    },
    PlanetOrbit {
        name: "Venus",
        semi_major_axis_au: 0.723,
        inclination_deg: 3.39,
        node_deg: 76.7,
        mean_longitude_deg: 181.98,
        absolute_magnitude: -4.40,
    },
    PlanetOrbit {
        name: "Earth",
        semi_major_axis_au: 1.000,
        inclination_deg: 0.00,
        node_deg: 0.0,
        mean_longitude_deg: 100.46,
        absolute_magnitude: -3.86,
    },
    PlanetOrbit {
        name: "Mars",
        semi_major_axis_au: 1.524,
        inclination_deg: 1.85,
        node_deg: 49.6,
        mean_longitude_deg: 355.45,
        absolute_magnitude: -1.52,
    },
    PlanetOrbit {
        name: "Jupiter",
        semi_major_axis_au: 5.203,
        inclination_deg: 1.30,
        node_deg: 100.5,
        mean_longitude_deg: 34.40,
        absolute_magnitude: -9.40,
    },
    PlanetOrbit {
        name: "Saturn",
        semi_major_axis_au: 9.537,
        inclination_deg: 2.49,
        node_deg: 113.7,
        mean_longitude_deg: 49.94,
        absolute_magnitude: -8.88,
    },
    PlanetOrbit {
        name: "Uranus",
        semi_major_axis_au: 19.19,
        inclination_deg: 0.77,
        node_deg: 74.0,
        mean_longitude_deg: 313.23,
        absolute_magnitude: -7.19,
    },
    PlanetOrbit {
        name: "Neptune",
        semi_major_axis_au: 30.07,
        inclination_deg: 1.77,
        node_deg: 131.8,
        mean_longitude_deg: 304.88,
        absolute_magnitude: -6.87,
    },
];

impl PlanetOrbit {
    /// Heliocentric position (km) `days` after the reference epoch.
    pub fn position_km(&self, days: f64) -> Vector3<f64> {
        let period_days = 365.25 * self.semi_major_axis_au.powf(1.5);
        let l = self.mean_longitude_deg.to_radians() + std::f64::consts::TAU * days / period_days;
        let node = self.node_deg.to_radians();
        let inc = self.inclination_deg.to_radians();
        let u = l - node;
        let (su, cu) = u.sin_cos();
        let (sn, cn) = node.sin_cos();
        let (si, ci) = inc.sin_cos();
        Vector3::new(cn * cu - sn * su * ci, sn * cu + cn * su * ci, su * si) * (self.semi_major_axis_au * AU_KM)
    }
}

/// `H + 5 log10(r * delta)` with both distances in AU; phase effects ignored.
pub fn apparent_magnitude(absolute: f64, sun_distance_km: f64, observer_distance_km: f64) -> f64 {
    absolute + 5.0 * ((sun_distance_km / AU_KM) * (observer_distance_km / AU_KM)).log10()
}

/// Snapshot of all planets as seen from `observer_km`.
pub fn synthetic_table(days: f64, epoch: &str, observer_km: &Vector3<f64>) -> EphemerisTable {
    let entries = PLANETS
        .iter()
        .map(|p| {
            let pos = p.position_km(days);
            EphemerisEntry {
                name: p.name.to_string(),
                epoch: epoch.to_string(),
                position_km: pos,
                magnitude: apparent_magnitude(p.absolute_magnitude, pos.norm(), (pos - observer_km).norm()),
            }
        })
        .collect();
    EphemerisTable { entries }
}
