//! Ground-truth classification of pipeline outcomes.

use nalgebra::Vector2;

use super::config::Config;
use crate::attitude_solver::rotation_error;
use crate::beacon_detection::Ellipse;
use crate::geometry::{angle_between, boresight};
use crate::pipeline::{AttitudeEstimate, BeaconReport};
use crate::renderer::{GroundTruth, ObjectKind, TruthObject};
use crate::ARCSEC;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Visible planet detected within tolerance.
    Detected,
    /// Visible planet, wrong spike selected.
    WrongSpike,
    /// Visible planet identified as a star.
    MatchedAsStar,
    /// Visible planet, its spike falls outside the gate.
    OutsideEllipse,
    /// Visible planet missed because the attitude is wrong.
    WrongAttitudeMiss,
    /// Visible planet expected outside the frame.
    ExpectedOutside,
    /// Visible planet merged with another object.
    Merged,
    /// Visible planet produced no centroid.
    NoCentroid,
    /// Invisible planet expected outside the frame.
    NotVisibleOutside,
    /// Invisible planet expected in frame, nothing detected.
    NotVisibleMissed,
    /// Invisible planet expected in frame, something detected.
    NotVisibleFalseDetection,
    AttitudeWrong,
    AttitudeNone,
}

impl Label {
    pub const ALL: [Label; 13] = [
        Label::Detected,
        Label::WrongSpike,
        Label::MatchedAsStar,
        Label::OutsideEllipse,
        Label::WrongAttitudeMiss,
        Label::ExpectedOutside,
        Label::Merged,
        Label::NoCentroid,
        Label::NotVisibleOutside,
        Label::NotVisibleMissed,
        Label::NotVisibleFalseDetection,
        Label::AttitudeWrong,
        Label::AttitudeNone,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Detected => "1.I",
            Label::WrongSpike => "1.II",
            Label::MatchedAsStar => "1.III.A",
            Label::OutsideEllipse => "1.III.B",
            Label::WrongAttitudeMiss => "1.III.C",
            Label::ExpectedOutside => "1.III.D",
            Label::Merged => "1.III.E",
            Label::NoCentroid => "1.III.F",
            Label::NotVisibleOutside => "2.I",
            Label::NotVisibleMissed => "2.II",
            Label::NotVisibleFalseDetection => "2.III",
            Label::AttitudeWrong => "ATT_WRONG",
            Label::AttitudeNone => "ATT_NONE",
        }
    }

    /// A wrong or missing beacon detection.
    pub fn is_beacon_failure(&self) -> bool {
        matches!(
            self,
            Label::WrongSpike
                | Label::MatchedAsStar
                | Label::OutsideEllipse
                | Label::WrongAttitudeMiss
                | Label::ExpectedOutside
                | Label::Merged
                | Label::NoCentroid
                | Label::NotVisibleFalseDetection
        )
    }

    /// Which planet decides a multi-planet scenario's label: failures first,
    /// then successes, then the uneventful cases.
    fn precedence(&self) -> usize {
        match self {
            Label::WrongSpike => 0,
            Label::MatchedAsStar => 1,
            Label::OutsideEllipse => 2,
            Label::Merged => 3,
            Label::ExpectedOutside => 4,
            Label::NoCentroid => 5,
            Label::WrongAttitudeMiss => 6,
            Label::NotVisibleFalseDetection => 7,
            Label::Detected => 8,
            Label::NotVisibleMissed => 9,
            Label::NotVisibleOutside => 10,
            Label::AttitudeWrong => 11,
            Label::AttitudeNone => 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanetOutcome {
    pub name: String,
    pub label: Label,
    pub visible: bool,
    pub true_px: Option<Vector2<f64>>,
    pub peak_dn: u8,
    pub expected_px: Option<Vector2<f64>>,
    pub ellipse: Option<Ellipse>,
    pub detected_px: Option<Vector2<f64>>,
    /// Detected minus true position.
    pub error_px: Option<Vector2<f64>>,
}

impl PlanetOutcome {
    /// Worth reporting: visible, predicted in frame, or truly in frame.
    pub fn is_relevant(&self, config: &Config) -> bool {
        self.visible
            || self.expected_px.is_some_and(|p| config.camera.contains(&p))
            || self.true_px.is_some_and(|p| config.camera.contains(&p))
    }

    /// A missed or wrong identification. A planet below the visibility level
    /// that is still found at its true position (2.III within tolerance) is
    /// neither, so it does not count.
    pub fn is_beacon_failure(&self, config: &Config) -> bool {
        match self.label {
            Label::NotVisibleFalseDetection => self.error_px.is_none_or(|e| e.norm() > config.detection_tolerance_px),
            l => l.is_beacon_failure(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub label: Label,
    /// Any planet of the scene counts as a beacon failure.
    pub beacon_failure: bool,
    pub attitude_error_arcsec: Option<f64>,
    pub pointing_error_arcsec: Option<f64>,
    pub iterations: usize,
    pub n_centroids: usize,
    pub n_matches: usize,
    pub n_inliers: usize,
    pub planets: Vec<PlanetOutcome>,
}

impl ScenarioOutcome {
    pub fn attitude_correct(&self) -> bool {
        !matches!(self.label, Label::AttitudeNone | Label::AttitudeWrong)
    }
}

/// Labels every planet of the scene and the scenario as a whole.
///
/// `estimate` is `None` when the attitude pipeline found no solution;
/// `beacons` is the detection output for the same estimate.
pub fn classify_outcome(
    truth: &GroundTruth,
    estimate: Option<&AttitudeEstimate>,
    beacons: &[BeaconReport],
    config: &Config,
) -> ScenarioOutcome {
    let planets: Vec<&TruthObject> = truth.planets().collect();
    let Some(est) = estimate else {
        return ScenarioOutcome {
            label: Label::AttitudeNone,
            beacon_failure: false,
            attitude_error_arcsec: None,
            pointing_error_arcsec: None,
            iterations: 0,
            n_centroids: 0,
            n_matches: 0,
            n_inliers: 0,
            planets: planets
                .iter()
                .map(|p| PlanetOutcome {
                    name: p.id.clone(),
                    label: Label::AttitudeNone,
                    visible: p.visible,
                    true_px: p.pixel,
                    peak_dn: p.peak_dn,
                    expected_px: None,
                    ellipse: None,
                    detected_px: None,
                    error_px: None,
                })
                .collect(),
        };
    };

    let a_true = truth.attitude.matrix();
    let attitude_error = rotation_error(&a_true, est.matrix()) / ARCSEC;
    let pointing_error = angle_between(&boresight(&a_true), &boresight(est.matrix())) / ARCSEC;
    let attitude_wrong = pointing_error > config.wrong_attitude_arcsec;
    let inlier_centroids: Vec<usize> = est.inlier_stars().iter().map(|m| m.0).collect();
    let threshold = est.identification.threshold;

    let outcomes: Vec<PlanetOutcome> = planets
        .iter()
        .map(|p| {
            let report = beacons.iter().find(|b| b.name == p.id);
            let expected_px = report.and_then(|r| r.prediction.as_ref()).map(|pr| pr.expected_px);
            let expected_in = report.is_some_and(|r| r.expected_in_frame);
            let detected_px = report.and_then(|r| r.detected_px);
            let error_px = detected_px.zip(p.pixel).map(|(d, t)| d - t);
            let label = if p.visible {
                match error_px {
                    Some(e) if e.norm() <= config.detection_tolerance_px => Label::Detected,
                    Some(_) => Label::WrongSpike,
                    None if attitude_wrong => Label::WrongAttitudeMiss,
                    None if !expected_in => Label::ExpectedOutside,
                    None => forensics(p, truth, est, &inlier_centroids, threshold),
                }
            } else if !expected_in {
                Label::NotVisibleOutside
            } else if detected_px.is_some() {
                Label::NotVisibleFalseDetection
            } else {
                Label::NotVisibleMissed
            };
            PlanetOutcome {
                name: p.id.clone(),
                label,
                visible: p.visible,
                true_px: p.pixel,
                peak_dn: p.peak_dn,
                expected_px,
                ellipse: report.and_then(|r| r.prediction.as_ref()).map(|pr| pr.ellipse),
                detected_px,
                error_px,
            }
        })
        .collect();

    let beacon_failure = attitude_wrong || outcomes.iter().any(|o| o.is_beacon_failure(config));
    let label = if attitude_wrong {
        Label::AttitudeWrong
    } else {
        outcomes
            .iter()
            .min_by_key(|o| (!o.is_beacon_failure(config), o.label.precedence()))
            .map_or(Label::NotVisibleOutside, |o| o.label)
    };
    ScenarioOutcome {
        label,
        beacon_failure,
        attitude_error_arcsec: Some(attitude_error),
        pointing_error_arcsec: Some(pointing_error),
        iterations: est.identification.result.iterations_used,
        n_centroids: est.centroids().len(),
        n_matches: est.identification.result.matches.len(),
        n_inliers: est.solution.inliers.len(),
        planets: outcomes,
    }
}

/// Why a visible planet was not detected under a correct attitude.
fn forensics(
    planet: &TruthObject,
    truth: &GroundTruth,
    est: &AttitudeEstimate,
    inlier_centroids: &[usize],
    threshold: f64,
) -> Label {
    let Some(px) = planet.pixel else {
        return Label::NoCentroid;
    };
    let Some(k) = est.centroids().iter().position(|c| c.roi.contains(px.x, px.y)) else {
        return Label::NoCentroid;
    };
    let roi = &est.centroids()[k].roi;
    let merged = truth.objects.iter().any(|o| {
        !(o.kind == ObjectKind::Planet && o.id == planet.id)
            && o.peak_dn as f64 > threshold
            && o.pixel.is_some_and(|q| roi.contains(q.x, q.y))
    });
    if merged {
        Label::Merged
    } else if inlier_centroids.contains(&k) {
        Label::MatchedAsStar
    } else {
        Label::OutsideEllipse
    }
}
