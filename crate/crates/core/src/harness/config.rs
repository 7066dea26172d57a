//! Plain-text `key = value` configuration.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::attitude_solver::RansacConfig;
use crate::beacon_detection::UncertaintyBudget;
use crate::geometry::CameraModel;
use crate::pipeline::PipelineConfig;
use crate::renderer::{NoiseModel, Photometry};
use crate::star_id::RetryConfig;
use crate::ARCSEC;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub camera: CameraModel,
    pub threshold_t: f64,
    pub t_step: f64,
    pub max_iterations: usize,
    pub epsilon_arcsec: f64,
    pub m_lim: f64,
    pub gamma_max_deg: f64,
    pub ransac_samples: usize,
    pub ransac_threshold_arcsec: f64,
    pub unsampled_residual_arcsec: f64,
    pub sigma_qv: f64,
    pub sigma_rbc_km: f64,
    pub photometry: Photometry,
    pub noise: NoiseModel,
    pub render_mag_limit: f64,
    pub sky_seed: u64,
    pub sky_stars_below_6: f64,
    pub sc_sigma_xy_au: f64,
    pub sc_sigma_z_au: f64,
    pub delta_sigma_rad: f64,
    pub delta_limit_rad: f64,
    pub ephemeris_days: f64,
    pub wrong_attitude_arcsec: f64,
    pub detection_tolerance_px: f64,
    pub histogram_bins: usize,
    pub histogram_half_width_px: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            camera: CameraModel::default(),
            threshold_t: 20.0,
            t_step: 5.0,
            max_iterations: 5,
            epsilon_arcsec: 7.0,
            m_lim: 5.5,
            gamma_max_deg: 35.0,
            ransac_samples: 20,
            ransac_threshold_arcsec: 15.0,
            unsampled_residual_arcsec: 60.0,
            sigma_qv: 1e-4,
            sigma_rbc_km: 0.0,
            photometry: Photometry::default(),
            noise: NoiseModel::default(),
            render_mag_limit: 6.5,
            sky_seed: 1,
            sky_stars_below_6: 5000.0,
            sc_sigma_xy_au: 3.0,
            sc_sigma_z_au: 0.07,
            delta_sigma_rad: 0.2,
            delta_limit_rad: 0.6,
            ephemeris_days: 0.0,
            wrong_attitude_arcsec: 500.0,
            detection_tolerance_px: 5.0,
            histogram_bins: 41,
            histogram_half_width_px: 0.5,
        }
    }
}

type Getter = fn(&Config) -> String;
type Setter = fn(&mut Config, &str) -> Result<(), String>;

macro_rules! keys {
    ($($key:literal => $($field:ident).+ , $doc:literal;)*) => {
        const KEYS: &[(&str, &str, Getter, Setter)] = &[
            $((
                $key,
                $doc,
                |c: &Config| format!("{}", c.$($field).+),
                |c: &mut Config, v: &str| {
                    c.$($field).+ = v.parse().map_err(|_| format!("invalid value {v:?} for {}", $key))?;
                    Ok(())
                },
            ),)*
        ];
    };
}

keys! {
    "fov_deg" => camera.fov_deg, "camera field of view";
    "width_px" => camera.width, "image width";
    "height_px" => camera.height, "image height";
    "focal_length_mm" => camera.focal_length_mm, "focal length (informational)";
    "f_number" => camera.f_number, "f-number";
    "exposure_ms" => camera.exposure_ms, "exposure time";
    "qe_tlens" => camera.qe_tlens, "quantum efficiency times lens transmission";
    "sea_deg" => camera.sea_deg, "solar exclusion angle (informational)";
    "defocus_sigma_px" => camera.defocus_sigma_px, "defocus PSF standard deviation";
    "threshold_t" => threshold_t, "tuning parameter T of the intensity threshold";
    "t_step" => t_step, "increment of T on identification retries";
    "max_iterations" => max_iterations, "maximum threshold escalations";
    "epsilon_arcsec" => epsilon_arcsec, "k-vector range error";
    "m_lim" => m_lim, "faintest cataloged magnitude";
    "gamma_max_deg" => gamma_max_deg, "largest cataloged interstar angle";
    "ransac_samples" => ransac_samples, "RANSAC sample count n_R";
    "ransac_threshold_arcsec" => ransac_threshold_arcsec, "RANSAC axis threshold t";
    "unsampled_residual_arcsec" => unsampled_residual_arcsec, "residual gate for stars never drawn by RANSAC";
    "sigma_qv" => sigma_qv, "quaternion vector-part standard deviation";
    "sigma_rbc_km" => sigma_rbc_km, "beacon ephemeris standard deviation";
    "anchor_peak_dn" => photometry.anchor_peak_dn, "peak DN of a magnitude-0 source at the anchor defocus";
    "anchor_sigma_px" => photometry.anchor_sigma_px, "defocus at which the anchor is defined";
    "background_mean_dn" => noise.background_mean_dn, "background mean";
    "background_sigma_dn" => noise.background_sigma_dn, "background standard deviation";
    "photon_noise" => noise.photon_noise, "shot noise on source signal (true/false)";
    "electrons_per_dn" => noise.electrons_per_dn, "conversion gain used for shot noise";
    "render_mag_limit" => render_mag_limit, "faintest rendered star";
    "sky_seed" => sky_seed, "seed of the synthetic star sky";
    "sky_stars_below_6" => sky_stars_below_6, "synthetic sky: stars brighter than magnitude 6";
    "sc_sigma_xy_au" => sc_sigma_xy_au, "spacecraft position spread in x and y";
    "sc_sigma_z_au" => sc_sigma_z_au, "spacecraft position spread in z";
    "delta_sigma_rad" => delta_sigma_rad, "declination spread";
    "delta_limit_rad" => delta_limit_rad, "declination truncation";
    "ephemeris_days" => ephemeris_days, "planet epoch, days after the model reference";
    "wrong_attitude_arcsec" => wrong_attitude_arcsec, "pointing error above which an attitude is wrong";
    "detection_tolerance_px" => detection_tolerance_px, "beacon error above which a detection is wrong";
    "histogram_bins" => histogram_bins, "bins per axis of the projection-error histogram";
    "histogram_half_width_px" => histogram_half_width_px, "half width of the projection-error histogram";
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Parse { line: n + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            config.set(key.trim(), value.trim()).map_err(err)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let (_, _, _, setter) = KEYS
            .iter()
            .find(|k| k.0 == key)
            .ok_or_else(|| format!("unknown key {key:?}"))?;
        setter(self, value)
    }

    pub fn keys() -> impl Iterator<Item = (&'static str, &'static str)> {
        KEYS.iter().map(|k| (k.0, k.1))
    }

    /// Every key with its current value, parseable by [`Config::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, doc, getter, _) in KEYS {
            let _ = writeln!(out, "# {doc}\n{key} = {}", getter(self));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let c = &self.camera;
        if c.width == 0 || c.height == 0 || !(c.fov_deg > 0.0 && c.fov_deg < 180.0) {
            return bad("camera geometry");
        }
        if !(c.defocus_sigma_px > 0.0 && c.f_number > 0.0 && c.exposure_ms > 0.0) {
            return bad("camera optics must be positive");
        }
        if self.render_mag_limit < self.m_lim {
            return bad("render_mag_limit must not be brighter than m_lim");
        }
        if self.ransac_samples == 0 || self.ransac_threshold_arcsec <= 0.0 {
            return bad("ransac_samples >= 1 and ransac_threshold_arcsec > 0 required");
        }
        if self.epsilon_arcsec < 0.0 || self.sigma_qv < 0.0 || self.sigma_rbc_km < 0.0 {
            return bad("tolerances and sigmas must be nonnegative");
        }
        if self.max_iterations == 0 || self.histogram_bins == 0 || self.histogram_half_width_px <= 0.0 {
            return bad("max_iterations, histogram_bins and histogram_half_width_px must be positive");
        }
        if self.delta_limit_rad.is_nan() || self.delta_limit_rad <= 0.0 || self.delta_sigma_rad < 0.0 {
            return bad("declination sampling parameters");
        }
        Ok(())
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma_max_deg.to_radians()
    }

    pub fn pipeline(&self, sigma_r_km: f64, ransac_seed: u64) -> PipelineConfig {
        PipelineConfig {
            camera: self.camera.clone(),
            retry: RetryConfig {
                t0: self.threshold_t,
                t_step: self.t_step,
                max_iterations: self.max_iterations,
                epsilon: self.epsilon_arcsec * ARCSEC,
            },
            ransac: RansacConfig {
                samples: self.ransac_samples,
                threshold: self.ransac_threshold_arcsec * ARCSEC,
                unsampled_residual: self.unsampled_residual_arcsec * ARCSEC,
                seed: ransac_seed,
            },
            budget: UncertaintyBudget {
                sigma_qv: self.sigma_qv,
                sigma_r: sigma_r_km,
                sigma_rbc: self.sigma_rbc_km,
            },
        }
    }
}
