//! Random spacecraft poses and the planet snapshot seen from each.

use nalgebra::Vector3;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::config::Config;
use crate::ephemeris::{synthetic_table, EphemerisTable};
use crate::geometry::{project_point, PointingAngles};
use crate::AU_KM;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    /// Position in the master sequence; fixes every random draw below.
    pub index: u64,
    pub render_seed: u64,
    pub ransac_seed: u64,
    pub sc_position_km: Vector3<f64>,
    pub attitude: PointingAngles,
    /// Standard-normal draw scaled by sigma_r to form the onboard position
    /// estimate, shared across all sigma_r values.
    pub position_noise: Vector3<f64>,
    pub ephemeris: EphemerisTable,
    /// At least one planet projects inside the frame under the true pose.
    pub planet_present: bool,
}

impl ScenarioSpec {
    pub fn estimated_position(&self, sigma_r_km: f64) -> Vector3<f64> {
        self.sc_position_km + self.position_noise * sigma_r_km
    }
}

fn gauss3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::new(
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    )
}

/// Deterministic function of `(master_seed, index)`.
pub fn sample_scenario(index: u64, master_seed: u64, config: &Config) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    let render_seed = rng.next_u64();
    let ransac_seed = rng.next_u64();
    let spread = Vector3::new(config.sc_sigma_xy_au, config.sc_sigma_xy_au, config.sc_sigma_z_au) * AU_KM;
    let sc_position_km = gauss3(&mut rng).component_mul(&spread);
    let alpha = rng.random_range(0.0..std::f64::consts::TAU);
    let delta = match Normal::new(0.0, config.delta_sigma_rad) {
        Ok(d) => loop {
            let v: f64 = d.sample(&mut rng);
            if v.abs() <= config.delta_limit_rad {
                break v;
            }
        },
        Err(_) => 0.0,
    };
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    let position_noise = gauss3(&mut rng);
    let attitude = PointingAngles::new(alpha, delta, phi);
    let ephemeris = synthetic_table(config.ephemeris_days, &format!("S{index}"), &sc_position_km);
    let a = attitude.matrix();
    let planet_present = ephemeris.entries.iter().any(|e| {
        project_point(&config.camera, &a, &sc_position_km, &e.position_km)
            .ok()
            .and_then(|p| p.pixel())
            .is_some_and(|p| config.camera.contains(&p))
    });
    ScenarioSpec {
        index,
        render_seed,
        ransac_seed,
        sc_position_km,
        attitude,
        position_noise,
        ephemeris,
        planet_present,
    }
}

/// The first `n` scenarios of the master sequence, or with `present_only`
/// the first `n` that have a planet in frame.
pub fn sample_scenarios(n: usize, master_seed: u64, config: &Config, present_only: bool) -> Vec<ScenarioSpec> {
    let mut out = Vec::with_capacity(n);
    let mut index = 0;
    while out.len() < n {
        let s = sample_scenario(index, master_seed, config);
        if !present_only || s.planet_present {
            out.push(s);
        }
        index += 1;
    }
    out
}
