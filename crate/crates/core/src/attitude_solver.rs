//! Wahba's problem by SVD and RANSAC consensus over principal rotation axes.

use nalgebra::{Matrix3, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{angle_between, quaternion_from_matrix, skew, Attitude};
use crate::star_id::MatchResult;

/// Rotation angles below this leave the principal axis undefined.
pub const INDETERMINATE_ANGLE: f64 = 1e-9;

/// Relative second singular value below which the observation geometry
/// cannot fix a rotation.
const DEGENERATE_SINGULAR_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttitudeError {
    #[error("degenerate geometry")]
    DegenerateGeometry,
    #[error("fewer than three matched stars")]
    TooFewMatches,
    #[error("mismatched vector counts")]
    LengthMismatch,
}

/// Rotation `A` minimising `sum |c_i - A n_i|^2` (unit weights).
pub fn wahba_svd(c: &[Vector3<f64>], n: &[Vector3<f64>]) -> Result<Matrix3<f64>, AttitudeError> {
    if c.len() != n.len() {
        return Err(AttitudeError::LengthMismatch);
    }
    if c.len() < 2 {
        return Err(AttitudeError::DegenerateGeometry);
    }
    let b: Matrix3<f64> = c.iter().zip(n).map(|(ci, ni)| ci * ni.transpose()).sum();
    let svd = b.svd(true, true);
    let mut s = [svd.singular_values[0], svd.singular_values[1], svd.singular_values[2]];
    s.sort_by(|x, y| y.total_cmp(x));
    if s[0].is_nan() || s[0] <= 0.0 || s[1] <= DEGENERATE_SINGULAR_RATIO * s[0] {
        return Err(AttitudeError::DegenerateGeometry);
    }
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let d = u.determinant() * v_t.determinant();
    let m = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d.signum()));
    Ok(u * m * v_t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub axis: Vector3<f64>,
    pub angle: f64,
    /// Set for (near) identity rotations, where `axis` is a placeholder.
    pub indeterminate: bool,
}

/// Principal axis and angle of a passive rotation matrix,
/// `R = cos(t) I + (1 - cos(t)) e e^T - sin(t) [e]^`.
pub fn principal_axis_angle(r: &Matrix3<f64>) -> AxisAngle {
    let w = 0.5 * Vector3::new(r[(1, 2)] - r[(2, 1)], r[(2, 0)] - r[(0, 2)], r[(0, 1)] - r[(1, 0)]);
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let angle = w.norm().atan2(cos);
    if angle < INDETERMINATE_ANGLE {
        return AxisAngle {
            axis: Vector3::z(),
            angle,
            indeterminate: true,
        };
    }
    let axis = if cos > -0.9 {
        w.normalize()
    } else {
        // Near pi the antisymmetric part vanishes; use the symmetric part
        // (1 - cos) e e^T and take the column with the largest diagonal.
        let sym = (r + r.transpose()) * 0.5 - Matrix3::identity() * cos;
        let k = (0..3).max_by(|&a, &b| sym[(a, a)].total_cmp(&sym[(b, b)])).unwrap_or(0);
        let e = sym.column(k).normalize();
        if e.dot(&w) < 0.0 {
            -e
        } else {
            e
        }
    };
    AxisAngle {
        axis,
        angle,
        indeterminate: false,
    }
}

/// Passive rotation matrix for a principal axis and angle.
pub fn rotation_from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let e = axis.normalize();
    let (s, c) = angle.sin_cos();
    Matrix3::identity() * c + e * e.transpose() * (1.0 - c) - skew(&e) * s
}

/// Principal angle of the rotation taking `a` to `b`.
pub fn rotation_error(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    principal_axis_angle(&(b * a.transpose())).angle
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacConfig {
    pub samples: usize,
    /// Axis agreement threshold (rad).
    pub threshold: f64,
    /// Residual (rad) under which a star never drawn in any sample still
    /// counts as an inlier of the consensus attitude.
    pub unsampled_residual: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            samples: 20,
            threshold: 15.0 * crate::ARCSEC,
            unsampled_residual: 60.0 * crate::ARCSEC,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttitudeSolution {
    pub matrix: Matrix3<f64>,
    pub quaternion: Attitude,
    /// Indices into the input vector lists.
    pub inliers: Vec<usize>,
    pub outliers: Vec<usize>,
    pub score: usize,
}

fn axes_agree(a: &AxisAngle, b: &AxisAngle, threshold: f64) -> bool {
    match (a.indeterminate, b.indeterminate) {
        (true, true) => true,
        (false, false) => angle_between(&a.axis, &b.axis) <= threshold,
        _ => false,
    }
}

/// Consensus scores of each sample axis and the winning sample (highest
/// score, lowest index on ties). `None` entries are unusable samples.
pub fn consensus(axes: &[Option<AxisAngle>], threshold: f64) -> Option<(usize, Vec<usize>)> {
    let scores: Vec<usize> = axes
        .iter()
        .enumerate()
        .map(|(i, a)| match a {
            None => 0,
            Some(a) => axes
                .iter()
                .enumerate()
                .filter(|(j, b)| *j != i && b.is_some_and(|b| axes_agree(a, &b, threshold)))
                .count(),
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, a) in axes.iter().enumerate() {
        if a.is_some() && best.is_none_or(|b| scores[i] > scores[b]) {
            best = Some(i);
        }
    }
    best.map(|b| (b, scores))
}

/// RANSAC over the given 3-star subsets. Exposed so that the sample draw
/// can be fixed in tests.
pub fn ransac_with_subsets(
    c: &[Vector3<f64>],
    n: &[Vector3<f64>],
    subsets: &[[usize; 3]],
    config: &RansacConfig,
) -> Result<AttitudeSolution, AttitudeError> {
    if c.len() != n.len() {
        return Err(AttitudeError::LengthMismatch);
    }
    if c.len() < 3 {
        return Err(AttitudeError::TooFewMatches);
    }
    let axes: Vec<Option<AxisAngle>> = subsets
        .iter()
        .map(|s| {
            let cs = [c[s[0]], c[s[1]], c[s[2]]];
            let ns = [n[s[0]], n[s[1]], n[s[2]]];
            wahba_svd(&cs, &ns).ok().map(|a| principal_axis_angle(&a))
        })
        .collect();
    let (best, scores) = consensus(&axes, config.threshold).ok_or(AttitudeError::DegenerateGeometry)?;
    let best_axis = axes[best].expect("winner is usable");

    let mut sampled = vec![false; c.len()];
    let mut inlier = vec![false; c.len()];
    for (s, axis) in subsets.iter().zip(&axes) {
        for &k in s {
            sampled[k] = true;
        }
        if axis.is_some_and(|a| axes_agree(&best_axis, &a, config.threshold)) {
            for &k in s {
                inlier[k] = true;
            }
        }
    }
    let solve = |mask: &[bool]| {
        let (cs, ns): (Vec<_>, Vec<_>) = (0..c.len()).filter(|&k| mask[k]).map(|k| (c[k], n[k])).unzip();
        wahba_svd(&cs, &ns)
    };
    let consensus_attitude = solve(&inlier)?;
    let mut any_unsampled = false;
    for k in 0..c.len() {
        if !sampled[k] {
            let residual = angle_between(&c[k], &(consensus_attitude * n[k]));
            if residual <= config.unsampled_residual {
                inlier[k] = true;
                any_unsampled = true;
            }
        }
    }
    let matrix = if any_unsampled {
        solve(&inlier)?
    } else {
        consensus_attitude
    };
    let quaternion = quaternion_from_matrix(&matrix).map_err(|_| AttitudeError::DegenerateGeometry)?;
    Ok(AttitudeSolution {
        matrix,
        quaternion,
        inliers: (0..c.len()).filter(|&k| inlier[k]).collect(),
        outliers: (0..c.len()).filter(|&k| !inlier[k]).collect(),
        score: scores[best],
    })
}

/// Seeded random 3-subsets, each drawn without replacement.
pub fn draw_subsets(count: usize, samples: usize, seed: u64) -> Vec<[usize; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples.max(1))
        .map(|_| {
            let v = sample(&mut rng, count, 3);
            [v.index(0), v.index(1), v.index(2)]
        })
        .collect()
}

pub fn ransac_attitude(
    c: &[Vector3<f64>],
    n: &[Vector3<f64>],
    config: &RansacConfig,
) -> Result<AttitudeSolution, AttitudeError> {
    if c.len() < 3 {
        return Err(AttitudeError::TooFewMatches);
    }
    let subsets = draw_subsets(c.len(), config.samples, config.seed);
    ransac_with_subsets(c, n, &subsets, config)
}

/// RANSAC on star identification output. Inlier and outlier indices refer
/// to positions in `matches.matches`.
pub fn ransac_matches(matches: &MatchResult, config: &RansacConfig) -> Result<AttitudeSolution, AttitudeError> {
    let (c, n): (Vec<_>, Vec<_>) = matches.matches.iter().map(|m| (m.los_camera, m.los_inertial)).unzip();
    ransac_attitude(&c, &n, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::frame_rotation;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        v.normalize()
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        rotation_from_axis_angle(&random_unit(rng), rng.random_range(0.0..std::f64::consts::PI))
    }

    #[test]
    fn identical_directions_give_identity() {
        let v = [Vector3::x(), Vector3::y(), Vector3::z()];
        let a = wahba_svd(&v, &v).unwrap();
        assert!((a - Matrix3::identity()).amax() < 1e-12);
    }

    #[test]
    fn exact_recovery_five_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let r = random_rotation(&mut rng);
            let n: Vec<_> = (0..5).map(|_| random_unit(&mut rng)).collect();
            let c: Vec<_> = n.iter().map(|v| r * v).collect();
            let a = wahba_svd(&c, &n).unwrap();
            assert!(rotation_error(&r, &a) < 1e-10);
        }
    }

    #[test]
    fn collinear_is_degenerate() {
        let n = [Vector3::x(), -Vector3::x(), Vector3::x()];
        assert_eq!(wahba_svd(&n, &n), Err(AttitudeError::DegenerateGeometry));
        assert_eq!(wahba_svd(&n[..1], &n[..1]), Err(AttitudeError::DegenerateGeometry));
    }

    #[test]
    fn noisy_recovery_is_tens_of_arcsec() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sigma = 10.0 * crate::ARCSEC;
        let mut sum_sq = 0.0;
        let trials = 1000;
        for _ in 0..trials {
            let r = random_rotation(&mut rng);
            let boresight = random_unit(&mut rng);
            let n: Vec<_> = (0..5)
                .map(|_| (boresight + random_unit(&mut rng) * 0.15).normalize())
                .collect();
            let c: Vec<_> = n
                .iter()
                .map(|v| {
                    let noise = Vector3::new(
                        StandardNormal.sample(&mut rng),
                        StandardNormal.sample(&mut rng),
                        StandardNormal.sample(&mut rng),
                    ) * sigma;
                    (r * v + noise).normalize()
                })
                .collect();
            let a = wahba_svd(&c, &n).unwrap();
            sum_sq += rotation_error(&r, &a).powi(2);
        }
        let rms = (sum_sq / trials as f64).sqrt() / crate::ARCSEC;
        assert!((3.0..100.0).contains(&rms), "rms {rms} arcsec");
    }

    #[test]
    fn axis_angle_special_cases() {
        let id = principal_axis_angle(&Matrix3::identity());
        assert!(id.indeterminate && id.angle == 0.0);
        let q = principal_axis_angle(&frame_rotation(3, std::f64::consts::FRAC_PI_2));
        assert!((q.axis - Vector3::z()).norm() < 1e-12);
        assert!((q.angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let half = principal_axis_angle(&frame_rotation(1, std::f64::consts::PI));
        assert!((half.axis.x.abs() - 1.0).abs() < 1e-12);
        assert!((half.angle - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn axis_angle_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..500 {
            let r = if k % 50 == 0 {
                rotation_from_axis_angle(&random_unit(&mut rng), std::f64::consts::PI - 1e-7)
            } else {
                random_rotation(&mut rng)
            };
            let aa = principal_axis_angle(&r);
            assert!((rotation_from_axis_angle(&aa.axis, aa.angle) - r).amax() < 1e-10);
        }
    }

    fn axis(v: Vector3<f64>) -> Option<AxisAngle> {
        Some(AxisAngle {
            axis: v.normalize(),
            angle: 1.0,
            indeterminate: false,
        })
    }

    #[test]
    fn four_sample_consensus_scores() {
        let t = 15.0 * crate::ARCSEC;
        let d = 10.0 * crate::ARCSEC;
        // Sample 0 sits between 1 and 2, which are 20" apart; sample 3 is far.
        let axes = [
            axis(Vector3::z()),
            axis(Vector3::new(d, 0.0, 1.0)),
            axis(Vector3::new(-d, 0.0, 1.0)),
            axis(Vector3::x()),
        ];
        let (best, scores) = consensus(&axes, t).unwrap();
        assert_eq!(scores, vec![2, 1, 1, 0]);
        assert_eq!(best, 0);
        // Ties pick the lowest index.
        let (best, _) = consensus(&[axis(Vector3::x()), axis(Vector3::y())], t).unwrap();
        assert_eq!(best, 0);
        assert!(consensus(&[None, None], t).is_none());
    }

    fn star_field(rng: &mut ChaCha8Rng, count: usize) -> (Matrix3<f64>, Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
        let r = random_rotation(rng);
        let center = random_unit(rng);
        let n: Vec<_> = (0..count)
            .map(|_| (center + random_unit(rng) * 0.15).normalize())
            .collect();
        let c: Vec<_> = n.iter().map(|v| r * v).collect();
        (r, c, n)
    }

    #[test]
    fn exclusive_members_of_rejected_subset_are_outliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (r, mut c, n) = star_field(&mut rng, 7);
        // Star 6 is corrupted by one degree and appears only in the last subset.
        c[6] = (c[6] + Vector3::new(0.0175, 0.0, 0.0)).normalize();
        let subsets = [[0, 1, 2], [1, 2, 3], [3, 4, 5], [0, 5, 6]];
        let config = RansacConfig::default();
        let sol = ransac_with_subsets(&c, &n, &subsets, &config).unwrap();
        assert_eq!(sol.score, 2);
        assert_eq!(sol.inliers, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(sol.outliers, vec![6]);
        assert!(rotation_error(&r, &sol.matrix) < 1e-10);
    }

    #[test]
    fn clean_matches_are_all_inliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..50 {
            let (r, c, n) = star_field(&mut rng, 8);
            let sol = ransac_attitude(
                &c,
                &n,
                &RansacConfig {
                    seed,
                    ..RansacConfig::default()
                },
            )
            .unwrap();
            assert_eq!(sol.inliers, (0..8).collect::<Vec<_>>());
            assert!(sol.outliers.is_empty());
            assert!(rotation_error(&r, &sol.matrix) < 1e-10);
            assert!((sol.quaternion.matrix() - sol.matrix).amax() < 1e-12);
        }
    }

    #[test]
    fn corrupted_match_rejected_across_seeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sigma = 1.0 * crate::ARCSEC;
        let mut rejected = 0;
        let runs = 200;
        for seed in 0..runs {
            let (_, mut c, n) = star_field(&mut rng, 8);
            for v in c.iter_mut() {
                let noise = Vector3::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                ) * sigma;
                *v = (*v + noise).normalize();
            }
            c[7] = (c[7] + Vector3::new(0.0, 0.0175, 0.0)).normalize();
            let sol = ransac_attitude(
                &c,
                &n,
                &RansacConfig {
                    seed,
                    ..RansacConfig::default()
                },
            )
            .unwrap();
            if sol.outliers.contains(&7) {
                rejected += 1;
            }
        }
        assert!(rejected as f64 >= 0.95 * runs as f64, "rejected {rejected}/{runs}");
    }

    #[test]
    fn too_few_matches() {
        let v = [Vector3::x(), Vector3::y()];
        assert_eq!(
            ransac_attitude(&v, &v, &RansacConfig::default()),
            Err(AttitudeError::TooFewMatches)
        );
    }

    proptest! {
        #[test]
        fn wahba_output_is_proper_rotation(seed in 0u64..10_000, noise in 0.0f64..0.3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n: Vec<_> = (0..4).map(|_| random_unit(&mut rng)).collect();
            let c: Vec<_> = n.iter().map(|v| (v + random_unit(&mut rng) * noise).normalize()).collect();
            let a = wahba_svd(&c, &n).unwrap();
            prop_assert!((a.transpose() * a - Matrix3::identity()).amax() < 1e-12);
            prop_assert!((a.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn wahba_equivariant(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n: Vec<_> = (0..4).map(|_| random_unit(&mut rng)).collect();
            let c: Vec<_> = n.iter().map(|v| (v + random_unit(&mut rng) * 0.05).normalize()).collect();
            let q = random_rotation(&mut rng);
            let a = wahba_svd(&c, &n).unwrap();
            let rotated: Vec<_> = n.iter().map(|v| q * v).collect();
            let b = wahba_svd(&c, &rotated).unwrap();
            prop_assert!((b - a * q.transpose()).amax() < 1e-9);
        }
    }
}
