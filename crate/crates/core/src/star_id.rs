//! Star identification: k-vector candidate lookup, triangle confirmation
//! against a reference star, and vote-based assignment.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Vector2, Vector3};
use thiserror::Error;

use crate::centroiding::{find_centroids, Centroid};
use crate::geometry::{angle_between, los_from_pixel, CameraModel};
use crate::renderer::Image;
use crate::star_catalog::{kvector_range_query, OnboardCatalog};

/// Only the brightest centroids take part in triangle voting; the rest are
/// reported as spikes. Bounds the cubic triangle enumeration.
pub const MAX_VOTING_CENTROIDS: usize = 48;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StarIdError {
    #[error("fewer than three centroids")]
    TooFewCentroids,
    #[error("no consistent star asterism found")]
    NoConsistentAsterism,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarMatch {
    pub centroid: usize,
    pub star_id: u32,
    pub los_camera: Vector3<f64>,
    pub los_inertial: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub matches: Vec<StarMatch>,
    pub spikes: Vec<usize>,
    pub iterations_used: usize,
}

impl MatchResult {
    pub fn star_for(&self, centroid: usize) -> Option<u32> {
        self.matches.iter().find(|m| m.centroid == centroid).map(|m| m.star_id)
    }
}

/// Identifies centroids given in pixel coordinates.
pub fn identify_stars(
    centroids: &[Vector2<f64>],
    camera: &CameraModel,
    catalog: &OnboardCatalog,
    epsilon: f64,
) -> Result<MatchResult, StarIdError> {
    let los: Vec<_> = centroids.iter().map(|p| los_from_pixel(camera, p)).collect();
    identify_los(&los, None, catalog, epsilon)
}

struct PairCandidates {
    /// Catalog star -> partner stars whose pair angle matches.
    adjacency: HashMap<u32, Vec<u32>>,
    pairs: Vec<(u32, u32)>,
}

impl PairCandidates {
    fn partners(&self, star: u32) -> &[u32] {
        self.adjacency.get(&star).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Identifies camera-frame lines of sight. `brightness`, when given, ranks
/// centroids for the voting cap.
pub fn identify_los(
    los: &[Vector3<f64>],
    brightness: Option<&[f64]>,
    catalog: &OnboardCatalog,
    epsilon: f64,
) -> Result<MatchResult, StarIdError> {
    let n = los.len();
    if n < 3 {
        return Err(StarIdError::TooFewCentroids);
    }
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(b) = brightness {
        order.sort_by(|&x, &y| b[y].total_cmp(&b[x]).then(x.cmp(&y)));
    }
    order.truncate(MAX_VOTING_CENTROIDS);
    order.sort_unstable();
    let m = order.len();

    let db = &catalog.pairs;
    let gamma_limit = db.gamma_max + epsilon;
    let mut cands: Vec<Option<PairCandidates>> = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            if b <= a {
                cands.push(None);
                continue;
            }
            let gamma = angle_between(&los[order[a]], &los[order[b]]);
            if gamma > gamma_limit {
                cands.push(None);
                continue;
            }
            let pairs: Vec<(u32, u32)> = kvector_range_query(&catalog.index, db, gamma, epsilon)
                .into_iter()
                .map(|p| db.pair(p))
                .collect();
            let mut adjacency: HashMap<u32, Vec<u32>> = HashMap::new();
            for &(s, t) in &pairs {
                adjacency.entry(s).or_default().push(t);
                adjacency.entry(t).or_default().push(s);
            }
            cands.push(Some(PairCandidates { adjacency, pairs }));
        }
    }
    let cand = |a: usize, b: usize| cands[a * m + b].as_ref();

    let mut votes: BTreeMap<(usize, u32), u32> = BTreeMap::new();
    let mut found = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let Some(ab) = cand(a, b) else { continue };
            if ab.pairs.is_empty() {
                continue;
            }
            for r in b + 1..m {
                let (Some(ar), Some(br)) = (cand(a, r), cand(b, r)) else {
                    continue;
                };
                found.clear();
                'pairs: for &(s, t) in &ab.pairs {
                    for (sa, sb) in [(s, t), (t, s)] {
                        let pb = br.partners(sb);
                        for &c in ar.partners(sa) {
                            if c != sa && c != sb && pb.contains(&c) {
                                found.push((sa, sb, c));
                                if found.len() > 1 {
                                    break 'pairs;
                                }
                            }
                        }
                    }
                }
                if let [(sa, sb, sc)] = found[..] {
                    *votes.entry((order[a], sa)).or_default() += 1;
                    *votes.entry((order[b], sb)).or_default() += 1;
                    *votes.entry((order[r], sc)).or_default() += 1;
                }
            }
        }
    }

    // Per centroid: unique maximum with at least two votes.
    let mut best: BTreeMap<usize, (u32, u32)> = BTreeMap::new();
    let mut tied: Vec<usize> = Vec::new();
    for (&(c, id), &v) in &votes {
        match best.get(&c) {
            Some(&(_, bv)) if v < bv => {}
            Some(&(_, bv)) if v == bv => tied.push(c),
            _ => {
                tied.retain(|&x| x != c);
                best.insert(c, (id, v));
            }
        }
    }
    best.retain(|c, (_, v)| *v >= 2 && !tied.contains(c));

    // A catalog star claimed by several centroids goes to the strongest
    // claim; equal claims drop all of them.
    let mut by_star: BTreeMap<u32, Vec<(usize, u32)>> = BTreeMap::new();
    for (&c, &(id, v)) in &best {
        by_star.entry(id).or_default().push((c, v));
    }
    let mut assigned: Vec<(usize, u32)> = Vec::new();
    for (id, claims) in by_star {
        let top = claims.iter().map(|x| x.1).max().unwrap_or(0);
        let winners: Vec<_> = claims.iter().filter(|x| x.1 == top).collect();
        if winners.len() == 1 {
            assigned.push((winners[0].0, id));
        }
    }
    assigned.sort_unstable();

    let kept = prune_inconsistent(&assigned, los, catalog, 2.0 * epsilon);
    if kept.len() < 3 {
        return Err(StarIdError::NoConsistentAsterism);
    }
    let matches: Vec<StarMatch> = kept
        .iter()
        .map(|&(c, id)| StarMatch {
            centroid: c,
            star_id: id,
            los_camera: los[c],
            los_inertial: catalog.stars.unit_vector(id).expect("pair ids are cataloged"),
        })
        .collect();
    let spikes = (0..n).filter(|c| !kept.iter().any(|k| k.0 == *c)).collect();
    Ok(MatchResult {
        matches,
        spikes,
        iterations_used: 1,
    })
}

/// Repeatedly drops the assignment agreeing with the fewest others until
/// every survivor agrees with at least two others.
fn prune_inconsistent(
    assigned: &[(usize, u32)],
    los: &[Vector3<f64>],
    catalog: &OnboardCatalog,
    tolerance: f64,
) -> Vec<(usize, u32)> {
    let inertial: Vec<Vector3<f64>> = assigned
        .iter()
        .map(|&(_, id)| catalog.stars.unit_vector(id).expect("pair ids are cataloged"))
        .collect();
    let k = assigned.len();
    let mut agree = vec![vec![false; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let measured = angle_between(&los[assigned[a].0], &los[assigned[b].0]);
            let cataloged = angle_between(&inertial[a], &inertial[b]);
            let ok = (measured - cataloged).abs() <= tolerance;
            agree[a][b] = ok;
            agree[b][a] = ok;
        }
    }
    let mut alive = vec![true; k];
    loop {
        let support = |a: usize, alive: &[bool]| (0..k).filter(|&b| alive[b] && agree[a][b]).count();
        let worst = (0..k).filter(|&a| alive[a]).map(|a| (support(a, &alive), a)).min();
        match worst {
            Some((s, a)) if s < 2 => alive[a] = false,
            _ => break,
        }
    }
    assigned
        .iter()
        .zip(&alive)
        .filter(|(_, &keep)| keep)
        .map(|(x, _)| *x)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetryConfig {
    pub t0: f64,
    pub t_step: f64,
    pub max_iterations: usize,
    pub epsilon: f64,
}

impl Default for RetryConfig {
    fn default() -> Self {
        Self {
            t0: 20.0,
            t_step: 5.0,
            max_iterations: 5,
            epsilon: 7.0 * crate::ARCSEC,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Identification {
    pub result: MatchResult,
    pub centroids: Vec<Centroid>,
    pub threshold: f64,
}

/// Runs centroiding and identification at increasing threshold until an
/// asterism is recognized, fewer than three centroids remain, or the
/// iteration budget runs out.
pub fn identify_with_retry(
    image: &Image,
    camera: &CameraModel,
    catalog: &OnboardCatalog,
    config: &RetryConfig,
) -> Result<Identification, StarIdError> {
    let mut last = StarIdError::TooFewCentroids;
    for iteration in 0..config.max_iterations.max(1) {
        let t = config.t0 + iteration as f64 * config.t_step;
        let (centroids, threshold) = find_centroids(image, t);
        if centroids.len() < 3 {
            return Err(StarIdError::TooFewCentroids);
        }
        let los: Vec<_> = centroids
            .iter()
            .map(|c| los_from_pixel(camera, &Vector2::new(c.x, c.y)))
            .collect();
        let brightness: Vec<f64> = centroids.iter().map(|c| c.i00).collect();
        match identify_los(&los, Some(&brightness), catalog, config.epsilon) {
            Ok(mut result) => {
                result.iterations_used = iteration + 1;
                return Ok(Identification {
                    result,
                    centroids,
                    threshold,
                });
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}
