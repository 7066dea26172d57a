//! Synthetic star sky used when no real catalog is supplied.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::star_catalog::{StarCatalog, StarRecord};

/// Brightest magnitude drawn; the power law is truncated there.
const BRIGHTEST: f64 = -1.5;

/// Isotropic sky whose cumulative counts follow
/// `N(<m) = stars_below_6 * 10^(0.5 (m - 6))`, down to `mag_limit`.
pub fn synthetic_sky(seed: u64, stars_below_6: f64, mag_limit: f64) -> StarCatalog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = (stars_below_6 * 10f64.powf(0.5 * (mag_limit - 6.0))).round() as usize;
    let stars = (0..total)
        .map(|k| {
            let ra = rng.random_range(0.0..std::f64::consts::TAU);
            let dec = rng.random_range(-1.0f64..=1.0).asin();
            let magnitude = loop {
                // Inverse CDF of the truncated power law.
                let u: f64 = rng.random_range(f64::EPSILON..=1.0);
                let m = mag_limit + 2.0 * u.log10();
                if m >= BRIGHTEST {
                    break m;
                }
            };
            StarRecord {
                id: k as u32 + 1,
                ra,
                dec,
                magnitude,
            }
        })
        .collect();
    StarCatalog::new(stars).expect("generated ids are unique")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_power_law() {
        let sky = synthetic_sky(3, 5000.0, 6.5);
        assert_eq!(sky.len(), (5000.0 * 10f64.powf(0.25)).round() as usize);
        let below = |m: f64| sky.stars().iter().filter(|s| s.magnitude < m).count() as f64;
        assert!((below(6.0) / 5000.0 - 1.0).abs() < 0.05);
        assert!((below(5.0) / 1581.0 - 1.0).abs() < 0.1);
        assert!(sky
            .stars()
            .iter()
            .all(|s| s.magnitude >= BRIGHTEST && s.magnitude <= 6.5));
    }

    #[test]
    fn isotropic_and_deterministic() {
        let sky = synthetic_sky(4, 5000.0, 6.0);
        let north = sky.unit_vectors().iter().filter(|v| v.z > 0.0).count() as f64;
        assert!((north / sky.len() as f64 - 0.5).abs() < 0.03);
        assert_eq!(synthetic_sky(4, 5000.0, 6.0), sky);
    }
}
