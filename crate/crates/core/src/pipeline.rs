//! The onboard image-processing chain: centroids, star identification,
//! attitude, then beacon detection among the remaining spikes.

use nalgebra::{Matrix3, Vector2, Vector3};
use thiserror::Error;

use crate::attitude_solver::{ransac_matches, AttitudeError, AttitudeSolution, RansacConfig};
use crate::beacon_detection::{detect_beacon, predict_projection, ProjectionPrediction, UncertaintyBudget};
use crate::centroiding::Centroid;
use crate::ephemeris::EphemerisTable;
use crate::geometry::CameraModel;
use crate::renderer::Image;
use crate::star_catalog::OnboardCatalog;
use crate::star_id::{identify_with_retry, Identification, RetryConfig, StarIdError};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub camera: CameraModel,
    pub retry: RetryConfig,
    pub ransac: RansacConfig,
    pub budget: UncertaintyBudget,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("star identification failed: {0}")]
    StarId(#[from] StarIdError),
    #[error("attitude determination failed: {0}")]
    Attitude(#[from] AttitudeError),
}

#[derive(Debug, Clone)]
pub struct AttitudeEstimate {
    pub identification: Identification,
    pub solution: AttitudeSolution,
    /// Centroid indices of unmatched objects and RANSAC outliers.
    pub spikes: Vec<usize>,
}

impl AttitudeEstimate {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.solution.matrix
    }

    pub fn centroids(&self) -> &[Centroid] {
        &self.identification.centroids
    }

    pub fn spike_pixels(&self) -> Vec<Vector2<f64>> {
        let c = self.centroids();
        self.spikes.iter().map(|&k| Vector2::new(c[k].x, c[k].y)).collect()
    }

    /// Matched (centroid index, star id) pairs kept by RANSAC.
    pub fn inlier_stars(&self) -> Vec<(usize, u32)> {
        let m = &self.identification.result.matches;
        self.solution
            .inliers
            .iter()
            .map(|&k| (m[k].centroid, m[k].star_id))
            .collect()
    }
}

pub fn estimate_attitude(
    image: &Image,
    catalog: &OnboardCatalog,
    config: &PipelineConfig,
) -> Result<AttitudeEstimate, PipelineError> {
    let identification = identify_with_retry(image, &config.camera, catalog, &config.retry)?;
    let solution = ransac_matches(&identification.result, &config.ransac)?;
    let matches = &identification.result.matches;
    let mut spikes = identification.result.spikes.clone();
    spikes.extend(solution.outliers.iter().map(|&k| matches[k].centroid));
    spikes.sort_unstable();
    Ok(AttitudeEstimate {
        identification,
        solution,
        spikes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeaconReport {
    pub name: String,
    /// `None` when the beacon is behind the camera.
    pub prediction: Option<ProjectionPrediction>,
    pub expected_in_frame: bool,
    /// Centroid index of the selected spike.
    pub detected: Option<usize>,
    pub detected_px: Option<Vector2<f64>>,
}

/// Predicts and gates every ephemeris entry. Detection is attempted only
/// for beacons expected inside the frame.
pub fn detect_beacons(
    estimate: &AttitudeEstimate,
    ephemeris: &EphemerisTable,
    sc_position: &Vector3<f64>,
    config: &PipelineConfig,
) -> Vec<BeaconReport> {
    let spike_px = estimate.spike_pixels();
    ephemeris
        .entries
        .iter()
        .map(|e| {
            let prediction = predict_projection(
                &config.camera,
                &estimate.solution.quaternion,
                sc_position,
                &e.position_km,
                &config.budget,
            )
            .ok();
            let expected_in_frame = prediction
                .as_ref()
                .is_some_and(|p| config.camera.contains(&p.expected_px));
            let hit = prediction
                .as_ref()
                .filter(|_| expected_in_frame)
                .and_then(|p| detect_beacon(&spike_px, p));
            BeaconReport {
                name: e.name.clone(),
                prediction,
                expected_in_frame,
                detected: hit.map(|k| estimate.spikes[k]),
                detected_px: hit.map(|k| spike_px[k]),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub attitude: Result<AttitudeEstimate, PipelineError>,
    pub beacons: Vec<BeaconReport>,
}

pub fn process_image(
    image: &Image,
    catalog: &OnboardCatalog,
    ephemeris: &EphemerisTable,
    sc_position: &Vector3<f64>,
    config: &PipelineConfig,
) -> PipelineOutput {
    let attitude = estimate_attitude(image, catalog, config);
    let beacons = match &attitude {
        Ok(est) => detect_beacons(est, ephemeris, sc_position, config),
        Err(_) => Vec::new(),
    };
    PipelineOutput { attitude, beacons }
}
