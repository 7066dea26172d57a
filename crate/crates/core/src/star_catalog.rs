//! Star catalog ingestion, the onboard star-pair database and its k-vector
//! index.
//!
//! The pair database stores, for every pair of cataloged stars closer than
//! `gamma_max`, the cosine of their separation. Cosines are kept sorted
//! ascending in `s`, with the generating star ids in `i` and `j`. The
//! k-vector `k` then answers range queries on `s` without a search: its
//! `k`-th element is the number of entries of `s` strictly below the line
//! `a1 * k + a0` drawn through the first and last entries.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use crate::geometry::{angle_between, radec_to_unit};

/// Absolute widening of the cosine window, in cosine units. Absorbs the
/// rounding of `cos(acos(x))` so exact-angle queries always hit their pair.
pub const COS_SLACK: f64 = 1e-15;

const DB_MAGIC: &[u8; 8] = b"OPNAVKV1";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate star id {id}")]
    DuplicateId { id: u32 },
    #[error("catalog too sparse: no star pair survives the magnitude and angle cuts")]
    TooSparse,
    #[error("degenerate invariant range: all pair cosines are equal")]
    DegenerateRange,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed database file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarRecord {
    pub id: u32,
    /// Right ascension, radians in `[0, 2pi)`.
    pub ra: f64,
    /// Declination, radians in `[-pi/2, pi/2]`.
    pub dec: f64,
    pub magnitude: f64,
}

/// Star records plus their inertial unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct StarCatalog {
    stars: Vec<StarRecord>,
    unit_vectors: Vec<Vector3<f64>>,
    by_id: HashMap<u32, usize>,
}

impl StarCatalog {
    pub fn new(stars: Vec<StarRecord>) -> Result<Self, CatalogError> {
        let mut by_id = HashMap::with_capacity(stars.len());
        for (idx, s) in stars.iter().enumerate() {
            if by_id.insert(s.id, idx).is_some() {
                return Err(CatalogError::DuplicateId { id: s.id });
            }
        }
        let unit_vectors = stars.iter().map(|s| radec_to_unit(s.ra, s.dec)).collect();
        Ok(Self {
            stars,
            unit_vectors,
            by_id,
        })
    }

    pub fn stars(&self) -> &[StarRecord] {
        &self.stars
    }

    pub fn unit_vectors(&self) -> &[Vector3<f64>] {
        &self.unit_vectors
    }

    pub fn len(&self) -> usize {
        self.stars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stars.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<(&StarRecord, &Vector3<f64>)> {
        self.by_id.get(&id).map(|&i| (&self.stars[i], &self.unit_vectors[i]))
    }

    pub fn unit_vector(&self, id: u32) -> Option<Vector3<f64>> {
        self.by_id.get(&id).map(|&i| self.unit_vectors[i])
    }

    /// Stars no fainter than `m_lim`, in catalog order.
    pub fn filter_magnitude(&self, m_lim: f64) -> StarCatalog {
        let stars = self.stars.iter().filter(|s| s.magnitude <= m_lim).copied().collect();
        // Ids were unique before filtering.
        StarCatalog::new(stars).expect("subset of a valid catalog")
    }
}

/// Parses the raw `id,ra_deg,dec_deg,vmag` text format.
pub fn parse_catalog(text: &str) -> Result<StarCatalog, CatalogError> {
    let mut stars = Vec::new();
    let mut seen = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| CatalogError::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let id: u32 = fields[0]
            .parse()
            .map_err(|_| err(format!("invalid star id {:?}", fields[0])))?;
        let num = |s: &str, what: &str| -> Result<f64, CatalogError> {
            let v: f64 = s.parse().map_err(|_| err(format!("invalid {what} {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(format!("non-finite {what}")))
            }
        };
        let ra_deg = num(fields[1], "right ascension")?;
        let dec_deg = num(fields[2], "declination")?;
        let magnitude = num(fields[3], "magnitude")?;
        if !(-90.0..=90.0).contains(&dec_deg) {
            return Err(err(format!("declination {dec_deg} outside [-90, 90]")));
        }
        if seen.insert(id, line_no).is_some() {
            return Err(CatalogError::DuplicateId { id });
        }
        stars.push(StarRecord {
            id,
            ra: ra_deg.to_radians().rem_euclid(2.0 * PI),
            dec: dec_deg.to_radians(),
            magnitude,
        });
    }
    StarCatalog::new(stars)
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<StarCatalog, CatalogError> {
    parse_catalog(&fs::read_to_string(path)?)
}

/// Writes a catalog in the raw text format. Values use the shortest
/// representation that round-trips.
pub fn write_catalog(catalog: &StarCatalog, path: impl AsRef<Path>) -> Result<(), CatalogError> {
    let mut out = String::from("# id,ra_deg,dec_deg,vmag\n");
    for s in catalog.stars() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.id,
            s.ra.to_degrees(),
            s.dec.to_degrees(),
            s.magnitude
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Sorted star-pair cosines with their generating ids.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDatabase {
    /// Cosine of the pair separation, non-decreasing.
    pub s: Vec<f64>,
    /// Smaller id of each pair.
    pub i: Vec<u32>,
    /// Larger id of each pair.
    pub j: Vec<u32>,
    pub m_lim: f64,
    pub gamma_max: f64,
}

impl PairDatabase {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn pair(&self, p: usize) -> (u32, u32) {
        (self.i[p], self.j[p])
    }

    pub fn angle(&self, p: usize) -> f64 {
        self.s[p].clamp(-1.0, 1.0).acos()
    }
}

/// Enumerates every pair of stars with both magnitudes `<= m_lim` and
/// separation `<= gamma_max`.
pub fn build_pair_database(catalog: &StarCatalog, m_lim: f64, gamma_max: f64) -> Result<PairDatabase, CatalogError> {
    if !(gamma_max > 0.0 && gamma_max < PI) {
        return Err(CatalogError::InvalidParameter(format!(
            "gamma_max {gamma_max} must lie in (0, pi)"
        )));
    }
    let members: Vec<(u32, Vector3<f64>)> = catalog
        .stars()
        .iter()
        .zip(catalog.unit_vectors())
        .filter(|(s, _)| s.magnitude <= m_lim)
        .map(|(s, v)| (s.id, *v))
        .collect();
    // A separation computed from exactly-placed stars may exceed the cut by
    // a few ulps.
    let gamma_cut = gamma_max + 1e-12;
    let mut pairs: Vec<(f64, u32, u32)> = Vec::new();
    for (a, (id_a, va)) in members.iter().enumerate() {
        for (id_b, vb) in &members[a + 1..] {
            if angle_between(va, vb) <= gamma_cut {
                let (lo, hi) = if id_a < id_b { (*id_a, *id_b) } else { (*id_b, *id_a) };
                pairs.push((va.dot(vb).clamp(-1.0, 1.0), lo, hi));
            }
        }
    }
    if pairs.is_empty() {
        return Err(CatalogError::TooSparse);
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(PairDatabase {
        s: pairs.iter().map(|p| p.0).collect(),
        i: pairs.iter().map(|p| p.1).collect(),
        j: pairs.iter().map(|p| p.2).collect(),
        m_lim,
        gamma_max,
    })
}

/// The k-vector: `k[n]` counts the entries of `s` strictly below `a1 * n + a0`.
#[derive(Debug, Clone, PartialEq)]
pub struct KVectorIndex {
    pub k: Vec<usize>,
    pub a0: f64,
    pub a1: f64,
}

impl KVectorIndex {
    pub fn line(&self, n: usize) -> f64 {
        self.a1 * n as f64 + self.a0
    }
}

pub fn build_kvector(db: &PairDatabase) -> Result<KVectorIndex, CatalogError> {
    let n = db.s.len();
    if n < 2 {
        return Err(CatalogError::InvalidParameter(format!(
            "k-vector needs at least 2 pairs, got {n}"
        )));
    }
    let first = db.s[0];
    let last = db.s[n - 1];
    if first >= last {
        return Err(CatalogError::DegenerateRange);
    }
    let a1 = (last - first) / (n - 1) as f64;
    let a0 = first;
    let mut index = KVectorIndex {
        k: Vec::with_capacity(n),
        a0,
        a1,
    };
    for kk in 0..n {
        let z = index.line(kk);
        index.k.push(db.s.partition_point(|&x| x < z));
    }
    Ok(index)
}

/// Cosine bounds `[cos(gamma + eps), cos(gamma - eps)]`, with the angle
/// window clipped to `[0, pi]` and widened by [`COS_SLACK`].
pub fn cos_window(gamma: f64, epsilon: f64) -> (f64, f64) {
    let hi_angle = (gamma + epsilon).min(PI);
    let lo_angle = (gamma - epsilon).max(0.0);
    (hi_angle.cos() - COS_SLACK, lo_angle.cos() + COS_SLACK)
}

/// Indices of all pairs whose cosine lies in [`cos_window`]`(gamma, epsilon)`.
///
/// The k-vector yields a contiguous superset of candidate indices without
/// any search; an exact comparison then filters it.
pub fn kvector_range_query(index: &KVectorIndex, db: &PairDatabase, gamma_measured: f64, epsilon: f64) -> Vec<usize> {
    let (lo, hi) = cos_window(gamma_measured, epsilon.max(0.0));
    let (start, end) = candidate_span(index, db.s.len(), lo, hi);
    (start..end).filter(|&p| db.s[p] >= lo && db.s[p] <= hi).collect()
}

fn candidate_span(index: &KVectorIndex, n: usize, lo: f64, hi: f64) -> (usize, usize) {
    if n == 0 || hi < lo {
        return (0, 0);
    }
    let bin = |v: f64| (v - index.a0) / index.a1;
    // One extra bin of slack on each side guards against rounding in `bin`.
    let j_lo = bin(lo).floor() - 1.0;
    let j_hi = bin(hi).ceil() + 1.0;
    let start = if j_lo <= 0.0 {
        0
    } else if j_lo >= (n - 1) as f64 {
        index.k[n - 1]
    } else {
        index.k[j_lo as usize]
    };
    let end = if j_hi < 0.0 {
        0
    } else if j_hi >= (n - 1) as f64 {
        n
    } else {
        index.k[j_hi as usize]
    };
    (start, end.max(start))
}

/// Everything the flight pipeline needs for star identification: the
/// magnitude-filtered stars, the pair database and its k-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct OnboardCatalog {
    pub stars: StarCatalog,
    pub pairs: PairDatabase,
    pub index: KVectorIndex,
}

impl OnboardCatalog {
    pub fn build(catalog: &StarCatalog, m_lim: f64, gamma_max: f64) -> Result<Self, CatalogError> {
        let pairs = build_pair_database(catalog, m_lim, gamma_max)?;
        let index = build_kvector(&pairs)?;
        Ok(Self {
            stars: catalog.filter_magnitude(m_lim),
            pairs,
            index,
        })
    }

    /// Binary little-endian layout:
    ///
    /// ```text
    /// magic "OPNAVKV1"
    /// m_lim, gamma_max, a0, a1            f64
    /// n_stars u64, then per star: id u32, ra f64, dec f64, mag f64
    /// n_pairs u64, then S f64 x n, I u32 x n, J u32 x n, K u64 x n
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.pairs.len();
        let mut out = Vec::with_capacity(64 + self.stars.len() * 28 + n * 24);
        out.extend_from_slice(DB_MAGIC);
        for v in [self.pairs.m_lim, self.pairs.gamma_max, self.index.a0, self.index.a1] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.stars.len() as u64).to_le_bytes());
        for s in self.stars.stars() {
            out.extend_from_slice(&s.id.to_le_bytes());
            out.extend_from_slice(&s.ra.to_le_bytes());
            out.extend_from_slice(&s.dec.to_le_bytes());
            out.extend_from_slice(&s.magnitude.to_le_bytes());
        }
        out.extend_from_slice(&(n as u64).to_le_bytes());
        self.pairs
            .s
            .iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
        self.pairs
            .i
            .iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
        self.pairs
            .j
            .iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
        self.index
            .k
            .iter()
            .for_each(|v| out.extend_from_slice(&(*v as u64).to_le_bytes()));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CatalogError> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(8)? != DB_MAGIC {
            return Err(CatalogError::Format("bad magic".into()));
        }
        let m_lim = r.f64()?;
        let gamma_max = r.f64()?;
        let a0 = r.f64()?;
        let a1 = r.f64()?;
        let n_stars = r.len()?;
        let mut stars = Vec::with_capacity(n_stars);
        for _ in 0..n_stars {
            stars.push(StarRecord {
                id: r.u32()?,
                ra: r.f64()?,
                dec: r.f64()?,
                magnitude: r.f64()?,
            });
        }
        let n = r.len()?;
        let s = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let i = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        let j = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        let k = (0..n)
            .map(|_| r.u64().map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        if r.pos != bytes.len() {
            return Err(CatalogError::Format("trailing bytes".into()));
        }
        Ok(Self {
            stars: StarCatalog::new(stars)?,
            pairs: PairDatabase {
                s,
                i,
                j,
                m_lim,
                gamma_max,
            },
            index: KVectorIndex { k, a0, a1 },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CatalogError> {
        fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CatalogError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| CatalogError::Format("unexpected end of file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn f64(&mut self) -> Result<f64, CatalogError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CatalogError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CatalogError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize, CatalogError> {
        let n = self.u64()?;
        // Reject counts that cannot fit in the remaining bytes.
        if n > (self.bytes.len() - self.pos) as u64 {
            return Err(CatalogError::Format(format!("implausible count {n}")));
        }
        Ok(n as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    const DESK: &str = "\
# id,ra_deg,dec_deg,vmag
1,0,0,1.0
2,90,0,2.0
3,10,5,3.0
4,20,-5,6.5
";

    fn random_catalog(n: usize, seed: u64) -> StarCatalog {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stars = (0..n)
            .map(|k| StarRecord {
                id: k as u32 + 1,
                ra: rng.random_range(0.0..2.0 * PI),
                dec: rng.random_range(-1.0f64..1.0).asin(),
                magnitude: rng.random_range(0.0..7.0),
            })
            .collect();
        StarCatalog::new(stars).unwrap()
    }

    fn brute_force_pairs(cat: &StarCatalog, m_lim: f64, gamma_max: f64) -> BTreeSet<(u32, u32)> {
        let mut out = BTreeSet::new();
        for a in cat.stars() {
            for b in cat.stars() {
                if a.id < b.id && a.magnitude <= m_lim && b.magnitude <= m_lim {
                    let va = radec_to_unit(a.ra, a.dec);
                    let vb = radec_to_unit(b.ra, b.dec);
                    if va.dot(&vb).clamp(-1.0, 1.0).acos() <= gamma_max {
                        out.insert((a.id, b.id));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn parses_desk_catalog() {
        let cat = parse_catalog(DESK).unwrap();
        assert_eq!(cat.len(), 4);
        assert!((cat.unit_vector(1).unwrap() - Vector3::x()).amax() < 1e-15);
        assert!((cat.unit_vector(2).unwrap() - Vector3::y()).amax() < 1e-15);
        for v in cat.unit_vectors() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_catalog("# header\n1,0,0,1\n2,abc,0,1\n").unwrap_err();
        match err {
            CatalogError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
        let err = parse_catalog("1,0,0\n").unwrap_err();
        assert!(matches!(err, CatalogError::Parse { line: 1, .. }));
        let err = parse_catalog("1,0,95,1\n").unwrap_err();
        assert!(matches!(err, CatalogError::Parse { line: 1, .. }));
        let err = parse_catalog("1,0,0,1\n1,10,0,1\n").unwrap_err();
        assert!(matches!(err, CatalogError::DuplicateId { id: 1 }));
    }

    #[test]
    fn gamma_max_boundary_is_inclusive() {
        let g = 35f64.to_radians();
        let at = |ra: f64| StarRecord {
            id: 0,
            ra,
            dec: 0.0,
            magnitude: 1.0,
        };
        let cat = StarCatalog::new(vec![at(0.0), StarRecord { id: 1, ..at(g) }]).unwrap();
        let db = build_pair_database(&cat, 5.5, g).unwrap();
        assert_eq!(db.len(), 1);
        let cat = StarCatalog::new(vec![at(0.0), StarRecord { id: 1, ..at(g + 1e-6) }]).unwrap();
        assert!(matches!(
            build_pair_database(&cat, 5.5, g),
            Err(CatalogError::TooSparse)
        ));
    }

    #[test]
    fn pair_database_matches_brute_force() {
        let five = "1,0,0,1\n2,20,0,2\n3,30,10,5.5\n4,5,30,4\n5,100,0,1\n";
        let cat = parse_catalog(five).unwrap();
        let g = 35f64.to_radians();
        let db = build_pair_database(&cat, 5.5, g).unwrap();
        let got: BTreeSet<_> = (0..db.len()).map(|p| db.pair(p)).collect();
        assert_eq!(got, brute_force_pairs(&cat, 5.5, g));

        let big = random_catalog(400, 9);
        let db = build_pair_database(&big, 5.5, g).unwrap();
        let got: BTreeSet<_> = (0..db.len()).map(|p| db.pair(p)).collect();
        assert_eq!(got, brute_force_pairs(&big, 5.5, g));
        assert!(db.s.windows(2).all(|w| w[0] <= w[1]));
        for p in 0..db.len() {
            assert!(db.angle(p) <= g + 1e-12);
        }
    }

    #[test]
    fn pair_database_is_order_independent_and_symmetric() {
        let cat = random_catalog(200, 10);
        let g = 30f64.to_radians();
        let db = build_pair_database(&cat, 5.0, g).unwrap();
        let mut reversed: Vec<_> = cat.stars().to_vec();
        reversed.reverse();
        let db2 = build_pair_database(&StarCatalog::new(reversed).unwrap(), 5.0, g).unwrap();
        let triples = |d: &PairDatabase| -> BTreeSet<(u32, u32, u64)> {
            (0..d.len()).map(|p| (d.i[p], d.j[p], d.s[p].to_bits())).collect()
        };
        assert_eq!(triples(&db), triples(&db2));
        for p in 0..db.len() {
            let a = cat.unit_vector(db.i[p]).unwrap();
            let b = cat.unit_vector(db.j[p]).unwrap();
            assert_eq!(angle_between(&a, &b), angle_between(&b, &a));
        }
    }

    #[test]
    fn kvector_three_element_line() {
        let db = PairDatabase {
            s: vec![0.0, 0.5, 1.0],
            i: vec![1, 1, 2],
            j: vec![2, 3, 3],
            m_lim: 6.0,
            gamma_max: 1.0,
        };
        let kv = build_kvector(&db).unwrap();
        assert_eq!(kv.a0, 0.0);
        assert_eq!(kv.line(2), 1.0);
        assert_eq!(kv.k, vec![0, 1, 2]);
    }

    #[test]
    fn kvector_counts_strictly_less() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..1.0)).collect();
        // Ties, including at both ends.
        s.extend([s[0], s[0], s[5], s[5], s[5]]);
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let db = PairDatabase {
            s: s.clone(),
            i: vec![0; n],
            j: vec![1; n],
            m_lim: 6.0,
            gamma_max: 1.0,
        };
        let kv = build_kvector(&db).unwrap();
        assert_eq!(kv.k.len(), n);
        assert_eq!(kv.k[0], 0);
        for (kk, &count) in kv.k.iter().enumerate() {
            let z = kv.a1 * kk as f64 + kv.a0;
            assert_eq!(count, s.iter().filter(|&&x| x < z).count());
            assert!(count <= n);
        }
        assert!(kv.k.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn kvector_rejects_degenerate_range() {
        let db = PairDatabase {
            s: vec![0.3; 4],
            i: vec![0; 4],
            j: vec![1; 4],
            m_lim: 6.0,
            gamma_max: 1.0,
        };
        assert!(matches!(build_kvector(&db), Err(CatalogError::DegenerateRange)));
    }

    fn desk_db(n_stars: usize, seed: u64) -> (PairDatabase, KVectorIndex) {
        let cat = random_catalog(n_stars, seed);
        let db = build_pair_database(&cat, 7.0, 35f64.to_radians()).unwrap();
        let kv = build_kvector(&db).unwrap();
        (db, kv)
    }

    #[test]
    fn query_edge_cases() {
        let (db, kv) = desk_db(60, 12);
        let max_angle = db.angle(0);
        let min_angle = db.angle(db.len() - 1);
        let eps = 1e-4;
        assert!(kvector_range_query(&kv, &db, max_angle + 2.0 * eps, eps).is_empty());
        assert!(kvector_range_query(&kv, &db, min_angle - 2.0 * eps, eps).is_empty());
        for p in [0, db.len() / 2, db.len() - 1] {
            let hits = kvector_range_query(&kv, &db, db.angle(p), 0.0);
            assert!(hits.contains(&p), "pair {p} missing for exact query");
        }
    }

    #[test]
    fn query_matches_linear_scan() {
        let (db, kv) = desk_db(70, 13);
        assert!(db.len() >= 200);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..1000 {
            let gamma = rng.random_range(0.0..0.7);
            let eps = rng.random_range(0.0..0.01);
            let (lo, hi) = cos_window(gamma, eps);
            let oracle: Vec<usize> = (0..db.len()).filter(|&p| db.s[p] >= lo && db.s[p] <= hi).collect();
            assert_eq!(kvector_range_query(&kv, &db, gamma, eps), oracle);
        }
    }

    #[test]
    fn onboard_database_roundtrips_bit_exactly() {
        let cat = random_catalog(150, 15);
        let onboard = OnboardCatalog::build(&cat, 5.5, 35f64.to_radians()).unwrap();
        let bytes = onboard.to_bytes();
        let back = OnboardCatalog::from_bytes(&bytes).unwrap();
        assert_eq!(back.pairs, onboard.pairs);
        assert_eq!(back.index, onboard.index);
        assert_eq!(back.stars.stars(), onboard.stars.stars());
        assert_eq!(back.to_bytes(), bytes);
        assert!(OnboardCatalog::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    proptest! {
        #[test]
        fn kvector_invariants_hold(mut s in proptest::collection::vec(-1.0f64..1.0, 2..300)) {
            s.sort_by(f64::total_cmp);
            prop_assume!(s[0] < s[s.len() - 1]);
            let n = s.len();
            let db = PairDatabase { s: s.clone(), i: vec![0; n], j: vec![1; n], m_lim: 6.0, gamma_max: 1.0 };
            let kv = build_kvector(&db).unwrap();
            prop_assert!(kv.k.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(kv.k.iter().all(|&c| c <= n));
            for (lo, hi) in [(s[0], s[n - 1]), (s[n / 2], s[n / 2]), (s[0] - 1.0, s[0] - 0.5)] {
                let (start, end) = candidate_span(&kv, n, lo, hi);
                let want: Vec<usize> = (0..n).filter(|&p| s[p] >= lo && s[p] <= hi).collect();
                let got: Vec<usize> = (start..end).filter(|&p| s[p] >= lo && s[p] <= hi).collect();
                prop_assert_eq!(got, want);
            }
        }
    }
}
