//! Dynamic thresholding, connected-component ROIs and weighted-moment
//! centroids.

use thiserror::Error;

use crate::renderer::Image;

#[derive(Debug, Error, PartialEq)]
pub enum CentroidError {
    #[error("ROI has no member pixels")]
    EmptyRoi,
    #[error("ROI has zero total weighted intensity")]
    ZeroIntensity,
}

/// Connected bright region with its bounding box grown by one pixel per side.
#[derive(Debug, Clone, PartialEq)]
pub struct Roi {
    /// Inclusive bounds `(x0, y0, x1, y1)` after the margin growth.
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    /// Above-threshold pixels `(x, y, intensity)`.
    pub members: Vec<(usize, usize, u8)>,
}

impl Roi {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 as f64 - 0.5 && x <= self.x1 as f64 + 0.5 && y >= self.y0 as f64 - 0.5 && y <= self.y1 as f64 + 0.5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centroid {
    pub x: f64,
    pub y: f64,
    pub i00: f64,
    pub peak_dn: u8,
    pub roi: Roi,
}

/// `mean + t * std` over all pixels, population standard deviation.
pub fn compute_threshold(image: &Image, t: f64) -> f64 {
    let n = image.data.len() as f64;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for &v in &image.data {
        let v = v as f64;
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    mean + t * var.sqrt()
}

/// 8-connected components of pixels strictly brighter than `threshold`,
/// ordered by their first pixel in row-major order.
pub fn extract_rois(image: &Image, threshold: f64) -> Vec<Roi> {
    let (w, h) = (image.width, image.height);
    let bright = |i: usize| image.data[i] as f64 > threshold;
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut rois = Vec::new();
    for seed in 0..w * h {
        if seen[seed] || !bright(seed) {
            continue;
        }
        seen[seed] = true;
        stack.push(seed);
        let mut members = Vec::new();
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            members.push((x, y, image.data[i]));
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if !seen[j] && bright(j) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        members.sort_by_key(|&(x, y, _)| (y, x));
        rois.push(Roi {
            x0: x0.saturating_sub(1),
            y0: y0.saturating_sub(1),
            x1: (x1 + 1).min(w - 1),
            y1: (y1 + 1).min(h - 1),
            members,
        });
    }
    rois
}

/// Moments over every pixel of the ROI box with `w = I / I_max`.
pub fn compute_centroid(roi: &Roi, image: &Image) -> Result<Centroid, CentroidError> {
    if roi.members.is_empty() {
        return Err(CentroidError::EmptyRoi);
    }
    let mut max = 0u8;
    for y in roi.y0..=roi.y1 {
        for x in roi.x0..=roi.x1 {
            max = max.max(image.get(x, y));
        }
    }
    if max == 0 {
        return Err(CentroidError::ZeroIntensity);
    }
    let inv_max = 1.0 / max as f64;
    let (mut i00, mut i10, mut i01) = (0.0, 0.0, 0.0);
    for y in roi.y0..=roi.y1 {
        for x in roi.x0..=roi.x1 {
            let v = image.get(x, y) as f64;
            let m = v * v * inv_max;
            i00 += m;
            i10 += x as f64 * m;
            i01 += y as f64 * m;
        }
    }
    let peak_dn = roi.members.iter().map(|m| m.2).max().unwrap_or(0);
    Ok(Centroid {
        x: i10 / i00,
        y: i01 / i00,
        i00,
        peak_dn,
        roi: roi.clone(),
    })
}

/// Threshold, segment and centroid a whole frame.
pub fn find_centroids(image: &Image, t: f64) -> (Vec<Centroid>, f64) {
    let threshold = compute_threshold(image, t);
    let centroids = extract_rois(image, threshold)
        .iter()
        .filter_map(|roi| compute_centroid(roi, image).ok())
        .collect();
    (centroids, threshold)
}
