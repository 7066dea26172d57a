//! Synthetic sky-field rendering with ground truth.
//!
//! Every point source (star, planet or injected artifact) is deposited as a
//! pixel-integrated Gaussian of standard deviation `defocus_sigma_px`,
//! truncated to the pixels whose centers lie within four sigma of the
//! source. Background and photon noise are added, then the signal is
//! clamped to `[0, 255]` and rounded.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

use crate::geometry::{project_point, project_star, CameraModel, PointingAngles};
use crate::star_catalog::StarCatalog;

/// Minimum peak intensity for an object to count as observable.
pub const DETECTABILITY_DN: u8 = 120;

/// PSF truncation radius in units of the defocus sigma.
pub const PSF_TRUNCATION_SIGMA: f64 = 4.0;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error("line {line}: {message}")]
    Truth { line: usize, message: String },
}

/// 8-bit grayscale frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Binary PGM (`P5`, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(ImageError::Pgm("truncated header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(ImageError::Pgm(format!("unsupported magic {:?}", fields[0])));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| ImageError::Pgm(format!("bad header field {s:?}")))
        };
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval != 255 {
            return Err(ImageError::Pgm(format!("maxval {maxval} is not 255")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let n = width * height;
        if bytes.len() < pos + n {
            return Err(ImageError::Pgm("truncated raster".into()));
        }
        Ok(Self {
            width,
            height,
            data: bytes[pos..pos + n].to_vec(),
        })
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        fs::File::create(path)?.write_all(&self.to_pgm())?;
        Ok(())
    }

    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        Self::from_pgm(&fs::read(path)?)
    }
}

/// Photometric calibration: a magnitude-0 source centered on a pixel yields
/// `anchor_peak_dn` in that pixel for the reference camera at
/// `anchor_sigma_px` defocus.
#[derive(Debug, Clone, PartialEq)]
pub struct Photometry {
    pub anchor_peak_dn: f64,
    pub anchor_sigma_px: f64,
}

impl Default for Photometry {
    fn default() -> Self {
        Self {
            anchor_peak_dn: 4000.0,
            anchor_sigma_px: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub background_mean_dn: f64,
    pub background_sigma_dn: f64,
    pub photon_noise: bool,
    /// Conversion gain used for photon (shot) noise.
    pub electrons_per_dn: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            background_mean_dn: 5.0,
            background_sigma_dn: 2.0,
            photon_noise: true,
            electrons_per_dn: 10.0,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            background_mean_dn: 0.0,
            background_sigma_dn: 0.0,
            photon_noise: false,
            electrons_per_dn: 1.0,
        }
    }
}

/// Fraction of a centered Gaussian's flux collected by its central pixel.
pub fn peak_fraction(sigma: f64) -> f64 {
    libm::erf(0.5 / (sigma * std::f64::consts::SQRT_2)).powi(2)
}

/// Total signal (DN, summed over all pixels) of a source of magnitude `m`.
/// Scales linearly with exposure and throughput and with the inverse square
/// of the f-number, relative to the default camera.
pub fn magnitude_to_flux(m: f64, camera: &CameraModel, photometry: &Photometry) -> f64 {
    let reference = CameraModel::default();
    let anchor_total = photometry.anchor_peak_dn / peak_fraction(photometry.anchor_sigma_px);
    anchor_total
        * (camera.exposure_ms / reference.exposure_ms)
        * (camera.qe_tlens / reference.qe_tlens)
        * (reference.f_number / camera.f_number).powi(2)
        * 10f64.powf(-0.4 * m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanetSpec {
    pub name: String,
    pub position_km: Vector3<f64>,
    pub magnitude: f64,
}

/// Additional point source placed directly in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtraSource {
    pub id: String,
    pub pixel: Vector2<f64>,
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct SceneSpec<'a> {
    pub camera: CameraModel,
    pub attitude: PointingAngles,
    pub sc_position_km: Vector3<f64>,
    pub planets: Vec<PlanetSpec>,
    pub extra_sources: Vec<ExtraSource>,
    pub stars: &'a StarCatalog,
    /// Faintest star magnitude drawn.
    pub render_mag_limit: f64,
    pub photometry: Photometry,
    pub noise: NoiseModel,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectKind {
    Star,
    Planet,
    Extra,
}

impl ObjectKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectKind::Star => "star",
            ObjectKind::Planet => "planet",
            ObjectKind::Extra => "extra",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "star" => Some(Self::Star),
            "planet" => Some(Self::Planet),
            "extra" => Some(Self::Extra),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthObject {
    pub kind: ObjectKind,
    pub id: String,
    /// True projection, `None` when behind the camera.
    pub pixel: Option<Vector2<f64>>,
    pub magnitude: f64,
    /// Maximum rendered intensity within the object's PSF footprint.
    pub peak_dn: u8,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub attitude: PointingAngles,
    pub objects: Vec<TruthObject>,
}

impl GroundTruth {
    pub fn planets(&self) -> impl Iterator<Item = &TruthObject> {
        self.objects.iter().filter(|o| o.kind == ObjectKind::Planet)
    }

    pub fn find(&self, kind: ObjectKind, id: &str) -> Option<&TruthObject> {
        self.objects.iter().find(|o| o.kind == kind && o.id == id)
    }

    /// Sidecar text: one `kind,id,x_px,y_px,peak_dn,visible` line per object.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# attitude_rad,{},{},{}\n# kind,id,x_px,y_px,peak_dn,visible\n",
            self.attitude.alpha, self.attitude.delta, self.attitude.phi
        );
        for o in &self.objects {
            let (x, y) = o
                .pixel
                .map(|p| (p.x.to_string(), p.y.to_string()))
                .unwrap_or_else(|| ("nan".into(), "nan".into()));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                o.kind.as_str(),
                o.id,
                x,
                y,
                o.peak_dn,
                u8::from(o.visible)
            );
        }
        out
    }

    /// Parses sidecar text. Magnitudes are not stored and read back as NaN.
    pub fn from_text(text: &str) -> Result<Self, ImageError> {
        let mut attitude = None;
        let mut objects = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |message: &str| ImageError::Truth {
                line: n + 1,
                message: message.to_string(),
            };
            if let Some(rest) = line.strip_prefix("# attitude_rad,") {
                let v: Vec<f64> = rest
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err("bad attitude"))?;
                if v.len() != 3 {
                    return Err(err("attitude needs 3 angles"));
                }
                attitude = Some(PointingAngles::new(v[0], v[1], v[2]));
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 6 {
                return Err(err("expected 6 fields"));
            }
            let kind = ObjectKind::parse(f[0]).ok_or_else(|| err("unknown kind"))?;
            let x: f64 = f[2].parse().map_err(|_| err("bad x"))?;
            let y: f64 = f[3].parse().map_err(|_| err("bad y"))?;
            objects.push(TruthObject {
                kind,
                id: f[1].to_string(),
                pixel: (x.is_finite() && y.is_finite()).then(|| Vector2::new(x, y)),
                magnitude: f64::NAN,
                peak_dn: f[4].parse().map_err(|_| err("bad peak"))?,
                visible: match f[5] {
                    "1" => true,
                    "0" => false,
                    _ => return Err(err("bad visible flag")),
                },
            });
        }
        Ok(Self {
            attitude: attitude.ok_or(ImageError::Truth {
                line: 0,
                message: "missing attitude line".into(),
            })?,
            objects,
        })
    }
}

fn gaussian_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Adds a pixel-integrated Gaussian of total `flux` centered at `center`.
pub fn deposit_gaussian(field: &mut [f64], width: usize, height: usize, center: &Vector2<f64>, flux: f64, sigma: f64) {
    let reach = PSF_TRUNCATION_SIGMA * sigma;
    let Some((x0, x1)) = pixel_span(center.x - reach, center.x + reach, width) else {
        return;
    };
    let Some((y0, y1)) = pixel_span(center.y - reach, center.y + reach, height) else {
        return;
    };
    let weights = |lo: usize, hi: usize, c: f64| -> Vec<f64> {
        (lo..=hi)
            .map(|i| {
                let i = i as f64;
                gaussian_cdf((i + 0.5 - c) / sigma) - gaussian_cdf((i - 0.5 - c) / sigma)
            })
            .collect()
    };
    let wx = weights(x0, x1, center.x);
    let wy = weights(y0, y1, center.y);
    for (dy, wyv) in wy.iter().enumerate() {
        let row = (y0 + dy) * width;
        for (dx, wxv) in wx.iter().enumerate() {
            field[row + x0 + dx] += flux * wxv * wyv;
        }
    }
}

/// Inclusive range of pixel indices whose centers lie in `[lo, hi]`.
fn pixel_span(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    let a = lo.ceil().max(0.0);
    let b = hi.floor().min(n as f64 - 1.0);
    (a <= b).then_some((a as usize, b as usize))
}

struct Placed {
    kind: ObjectKind,
    id: String,
    pixel: Option<Vector2<f64>>,
    magnitude: f64,
}

fn place_sources(scene: &SceneSpec) -> Vec<Placed> {
    let cam = &scene.camera;
    let a = scene.attitude.matrix();
    let reach = PSF_TRUNCATION_SIGMA * cam.defocus_sigma_px + 1.0;
    let near_frame = |p: &Vector2<f64>| {
        p.x > -reach && p.y > -reach && p.x < cam.width as f64 + reach && p.y < cam.height as f64 + reach
    };
    let boresight = crate::geometry::boresight(&a);
    // Half-diagonal of the field of view plus margin.
    let half_fov = (cam.fov_deg.to_radians() / 2.0)
        .tan()
        .hypot((cam.fov_deg.to_radians() / 2.0).tan());
    let cos_cone = (half_fov.atan() + 1f64.to_radians()).cos();

    let mut out = Vec::new();
    for (s, v) in scene.stars.stars().iter().zip(scene.stars.unit_vectors()) {
        if s.magnitude > scene.render_mag_limit || v.dot(&boresight) < cos_cone {
            continue;
        }
        if let Some(p) = project_star(cam, &a, s.ra, s.dec).pixel() {
            if near_frame(&p) {
                out.push(Placed {
                    kind: ObjectKind::Star,
                    id: s.id.to_string(),
                    pixel: Some(p),
                    magnitude: s.magnitude,
                });
            }
        }
    }
    for planet in &scene.planets {
        let pixel = project_point(cam, &a, &scene.sc_position_km, &planet.position_km)
            .ok()
            .and_then(|p| p.pixel());
        out.push(Placed {
            kind: ObjectKind::Planet,
            id: planet.name.clone(),
            pixel,
            magnitude: planet.magnitude,
        });
    }
    for extra in &scene.extra_sources {
        out.push(Placed {
            kind: ObjectKind::Extra,
            id: extra.id.clone(),
            pixel: Some(extra.pixel),
            magnitude: extra.magnitude,
        });
    }
    out
}

/// Noise-free signal field in DN before clamping and quantization.
pub fn render_signal(scene: &SceneSpec) -> Vec<f64> {
    render_signal_placed(scene, &place_sources(scene))
}

fn render_signal_placed(scene: &SceneSpec, placed: &[Placed]) -> Vec<f64> {
    let cam = &scene.camera;
    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut field = vec![0.0; w * h];
    for p in placed {
        if let Some(px) = p.pixel {
            let flux = magnitude_to_flux(p.magnitude, cam, &scene.photometry);
            deposit_gaussian(&mut field, w, h, &px, flux, cam.defocus_sigma_px);
        }
    }
    field
}

/// Renders the scene. Deterministic for a fixed `scene.seed`.
pub fn render(scene: &SceneSpec) -> (Image, GroundTruth) {
    let cam = &scene.camera;
    let (w, h) = (cam.width as usize, cam.height as usize);
    let placed = place_sources(scene);
    let field = render_signal_placed(scene, &placed);

    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let noise = &scene.noise;
    let background = (noise.background_sigma_dn > 0.0)
        .then(|| Normal::new(noise.background_mean_dn, noise.background_sigma_dn).ok())
        .flatten();
    let gain = noise.electrons_per_dn.max(f64::MIN_POSITIVE);
    let mut image = Image::new(w, h);
    for (out, &signal) in image.data.iter_mut().zip(&field) {
        let mut v = signal;
        if noise.photon_noise && signal > 0.0 {
            if let Ok(p) = Poisson::new(signal * gain) {
                v = p.sample(&mut rng) / gain;
            }
        }
        v += match &background {
            Some(n) => n.sample(&mut rng),
            None => noise.background_mean_dn,
        };
        *out = v.clamp(0.0, 255.0).round() as u8;
    }

    let objects = placed
        .into_iter()
        .filter(|p| p.kind != ObjectKind::Star || p.pixel.is_some_and(|px| cam.contains(&px)))
        .map(|p| {
            let peak_dn = p
                .pixel
                .map(|px| footprint_peak(&image, &px, cam.defocus_sigma_px))
                .unwrap_or(0);
            let visible = p.pixel.is_some_and(|px| cam.contains(&px)) && peak_dn >= DETECTABILITY_DN;
            TruthObject {
                kind: p.kind,
                id: p.id,
                pixel: p.pixel,
                magnitude: p.magnitude,
                peak_dn,
                visible,
            }
        })
        .collect();
    (
        image,
        GroundTruth {
            attitude: scene.attitude,
            objects,
        },
    )
}

/// Maximum intensity over the pixels within four sigma of `center`.
pub fn footprint_peak(image: &Image, center: &Vector2<f64>, sigma: f64) -> u8 {
    let reach = PSF_TRUNCATION_SIGMA * sigma;
    let (Some((x0, x1)), Some((y0, y1))) = (
        pixel_span(center.x - reach, center.x + reach, image.width),
        pixel_span(center.y - reach, center.y + reach, image.height),
    ) else {
        return 0;
    };
    let mut peak = 0;
    for y in y0..=y1 {
        for x in x0..=x1 {
            peak = peak.max(image.get(x, y));
        }
    }
    peak
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::star_catalog::StarRecord;

    fn empty_catalog() -> StarCatalog {
        StarCatalog::new(vec![]).unwrap()
    }

    fn scene<'a>(stars: &'a StarCatalog, extra: Vec<ExtraSource>, noise: NoiseModel) -> SceneSpec<'a> {
        SceneSpec {
            camera: CameraModel {
                width: 64,
                height: 64,
                ..CameraModel::default()
            },
            attitude: PointingAngles::new(0.0, 0.0, 0.0),
            sc_position_km: Vector3::zeros(),
            planets: vec![],
            extra_sources: extra,
            stars,
            render_mag_limit: 6.5,
            photometry: Photometry::default(),
            noise,
            seed: 7,
        }
    }

    fn extra(x: f64, y: f64, m: f64) -> ExtraSource {
        ExtraSource {
            id: format!("{x}:{y}"),
            pixel: Vector2::new(x, y),
            magnitude: m,
        }
    }

    #[test]
    fn flux_scaling() {
        let cam = CameraModel::default();
        let ph = Photometry::default();
        let f = |m| magnitude_to_flux(m, &cam, &ph);
        assert!((f(1.0) / f(3.5) - 10.0).abs() < 1e-12);
        assert!((f(2.0) / f(3.0) - 10f64.powf(0.4)).abs() < 1e-12);
        assert!((f(0.0) * peak_fraction(0.9) - ph.anchor_peak_dn).abs() < 1e-9);
        let long = CameraModel {
            exposure_ms: 800.0,
            ..cam.clone()
        };
        assert!((magnitude_to_flux(4.0, &long, &ph) / f(4.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn anchor_peak_matches_rendered_center_pixel() {
        let cat = empty_catalog();
        let s = scene(&cat, vec![extra(30.0, 30.0, 0.0)], NoiseModel::none());
        let field = render_signal(&s);
        assert!((field[30 * 64 + 30] - Photometry::default().anchor_peak_dn).abs() < 1e-6);
    }

    #[test]
    fn empty_noiseless_scene_is_black() {
        let cat = empty_catalog();
        let (img, truth) = render(&scene(&cat, vec![], NoiseModel::none()));
        assert!(img.data.iter().all(|&v| v == 0));
        assert!(truth.objects.is_empty());
    }

    #[test]
    fn centered_spot_is_rotationally_symmetric() {
        let cat = empty_catalog();
        let (img, _) = render(&scene(&cat, vec![extra(20.0, 30.0, 3.0)], NoiseModel::none()));
        for dy in -5i64..=5 {
            for dx in -5i64..=5 {
                let at = |x: i64, y: i64| img.get((20 + x) as usize, (30 + y) as usize);
                // 90 degree rotation: (dx, dy) -> (-dy, dx)
                assert_eq!(at(dx, dy), at(-dy, dx));
            }
        }
        assert!(img.get(20, 30) > 0);
    }

    #[test]
    fn signal_superposes_linearly() {
        let cat = empty_catalog();
        let a = extra(20.3, 21.6, 2.0);
        let b = extra(22.1, 20.2, 2.5);
        let both = render_signal(&scene(&cat, vec![a.clone(), b.clone()], NoiseModel::none()));
        let fa = render_signal(&scene(&cat, vec![a], NoiseModel::none()));
        let fb = render_signal(&scene(&cat, vec![b], NoiseModel::none()));
        for i in 0..both.len() {
            assert!((both[i] - fa[i] - fb[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_image() {
        let cat = empty_catalog();
        let s = scene(&cat, vec![extra(20.3, 21.6, 2.0)], NoiseModel::default());
        let (a, _) = render(&s);
        let (b, _) = render(&s);
        assert_eq!(a, b);
        let (c, _) = render(&SceneSpec { seed: 8, ..s });
        assert_ne!(a, c);
    }

    #[test]
    fn visibility_flag_matches_footprint_recount() {
        let stars = StarCatalog::new(vec![StarRecord {
            id: 5,
            ra: 0.0,
            dec: 0.0,
            magnitude: 1.0,
        }])
        .unwrap();
        let mut s = scene(
            &stars,
            vec![extra(10.0, 10.0, 0.5), extra(40.0, 40.0, 4.5), extra(70.0, 5.0, 0.0)],
            NoiseModel::default(),
        );
        s.planets.push(PlanetSpec {
            name: "behind".into(),
            position_km: Vector3::new(-1e8, 0.0, 0.0),
            magnitude: -2.0,
        });
        let (img, truth) = render(&s);
        // Boresight star at the principal point.
        let star = truth.find(ObjectKind::Star, "5").unwrap();
        assert!((star.pixel.unwrap() - Vector2::new(32.0, 32.0)).amax() < 1e-9);
        for o in &truth.objects {
            let peak = o.pixel.map(|p| footprint_peak(&img, &p, 0.9)).unwrap_or(0);
            assert_eq!(o.peak_dn, peak);
            let inside = o.pixel.is_some_and(|p| s.camera.contains(&p));
            assert_eq!(o.visible, inside && peak >= DETECTABILITY_DN, "{o:?}");
        }
        assert!(truth.find(ObjectKind::Extra, "10:10").unwrap().visible);
        assert!(!truth.find(ObjectKind::Extra, "40:40").unwrap().visible);
        assert!(!truth.find(ObjectKind::Extra, "70:5").unwrap().visible);
        assert!(truth.find(ObjectKind::Planet, "behind").unwrap().pixel.is_none());
    }

    #[test]
    fn pgm_and_truth_roundtrip() {
        let cat = empty_catalog();
        let (img, truth) = render(&scene(&cat, vec![extra(20.25, 30.5, 2.0)], NoiseModel::default()));
        let back = Image::from_pgm(&img.to_pgm()).unwrap();
        assert_eq!(back, img);
        let text = truth.to_text();
        let parsed = GroundTruth::from_text(&text).unwrap();
        assert_eq!(parsed.attitude, truth.attitude);
        assert_eq!(parsed.objects.len(), 1);
        assert_eq!(parsed.objects[0].pixel, truth.objects[0].pixel);
        assert_eq!(parsed.objects[0].peak_dn, truth.objects[0].peak_dn);
        assert!(Image::from_pgm(b"P2\n2 2\n255\n0000").is_err());
        assert!(Image::from_pgm(b"P5\n# comment\n2 2\n255\n\x01\x02\x03").is_err());
        let ok = Image::from_pgm(b"P5\n# comment\n2 2\n255\n\x01\x02\x03\x04").unwrap();
        assert_eq!(ok.get(1, 1), 4);
    }
}
