//! Evaluation measures: per-keypoint squared error, absolute angular error,
//! polygon circularity, Procrustes disparity, MS-SSIM and round-trip MSE.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::BinaryMask;
use crate::raster::{GrayImage, Point, Raster};
use crate::sector::{Keypoints, KEYPOINT_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        if values.is_empty() {
            return MeanStd::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointAnnotation {
    pub image_id: String,
    pub keypoints: Keypoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KeypointError {
    /// Squared coordinate error, pixels squared.
    pub mse: MeanStd,
    /// Euclidean distance, pixels.
    pub mean_euclidean: MeanStd,
}

fn pair_up<'a, T>(gt: &'a [T], pred: &'a [T], id: impl Fn(&T) -> &str) -> Result<Vec<(&'a T, &'a T)>> {
    if gt.len() != pred.len() {
        return Err(Error::MismatchedSets(format!(
            "{} ground-truth vs {} predicted",
            gt.len(),
            pred.len()
        )));
    }
    let by_id: BTreeMap<&str, &T> = pred.iter().map(|p| (id(p), p)).collect();
    gt.iter()
        .map(|g| {
            by_id
                .get(id(g))
                .map(|p| (g, *p))
                .ok_or_else(|| Error::MismatchedSets(format!("no prediction for image '{}'", id(g))))
        })
        .collect()
}

/// Mean and spread, across images, of `(dj)^2 + (di)^2` for each named key
/// point, alongside the plain Euclidean distance.
pub fn keypoint_mse(gt: &[KeypointAnnotation], pred: &[KeypointAnnotation]) -> Result<BTreeMap<String, KeypointError>> {
    let pairs = pair_up(gt, pred, |a| a.image_id.as_str())?;
    let mut out = BTreeMap::new();
    for (k, name) in KEYPOINT_NAMES.iter().enumerate() {
        let sq: Vec<f64> = pairs
            .iter()
            .map(|(g, p)| {
                let (a, b) = (g.keypoints.as_array()[k], p.keypoints.as_array()[k]);
                (a.row - b.row).powi(2) + (a.col - b.col).powi(2)
            })
            .collect();
        let eu: Vec<f64> = sq.iter().map(|v| v.sqrt()).collect();
        out.insert(
            name.to_string(),
            KeypointError {
                mse: MeanStd::of(&sq),
                mean_euclidean: MeanStd::of(&eu),
            },
        );
    }
    Ok(out)
}

/// Mean absolute angular difference (same unit as the inputs).
pub fn maad(gt: &[f64], pred: &[f64]) -> Result<MeanStd> {
    if gt.len() != pred.len() {
        return Err(Error::MismatchedSets(format!("{} vs {} angles", gt.len(), pred.len())));
    }
    let diffs: Vec<f64> = gt.iter().zip(pred).map(|(a, b)| (a - b).abs()).collect();
    Ok(MeanStd::of(&diffs))
}

/// Closed polygon; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon2D {
    pub vertices: Vec<Point>,
}

impl Polygon2D {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    fn edges(&self) -> impl Iterator<Item = (&Point, &Point)> {
        self.vertices.iter().zip(self.vertices.iter().cycle().skip(1))
    }

    /// Shoelace area, unsigned.
    pub fn area(&self) -> f64 {
        0.5 * self
            .edges()
            .map(|(p, q)| p.col * q.row - q.col * p.row)
            .sum::<f64>()
            .abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(p, q)| p.distance(q)).sum()
    }
}

/// `4 pi area / perimeter^2`; 1 for a circle.
pub fn circularity(poly: &Polygon2D) -> Result<f64> {
    let perimeter = poly.perimeter();
    if poly.vertices.len() < 3 || perimeter == 0.0 {
        return Err(Error::DegeneratePolygon);
    }
    Ok(4.0 * std::f64::consts::PI * poly.area() / (perimeter * perimeter))
}

fn standardise(points: &[Point]) -> Result<Vec<(f64, f64)>> {
    let n = points.len() as f64;
    let (mr, mc) = points
        .iter()
        .fold((0.0, 0.0), |(r, c), p| (r + p.row / n, c + p.col / n));
    let centred: Vec<(f64, f64)> = points.iter().map(|p| (p.col - mc, p.row - mr)).collect();
    let norm = centred.iter().map(|(x, y)| x * x + y * y).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegeneratePolygon);
    }
    Ok(centred.into_iter().map(|(x, y)| (x / norm, y / norm)).collect())
}

/// Sum of squared pointwise differences after removing translation, scale
/// and rotation (no reflection) between corresponding vertices.
///
/// Both shapes are centred and scaled to unit Frobenius norm; the optimal
/// rotation and scale of the second then leave `1 - (A^2 + B^2)` where `A`
/// and `B` are the summed dot and cross products of corresponding vertices.
pub fn procrustes_disparity(a: &Polygon2D, b: &Polygon2D) -> Result<f64> {
    let (na, nb) = (a.vertices.len(), b.vertices.len());
    if na != nb {
        return Err(Error::CountMismatch(na, nb));
    }
    if na < 2 {
        return Err(Error::DegeneratePolygon);
    }
    let sa = standardise(&a.vertices)?;
    let sb = standardise(&b.vertices)?;
    let (mut dot, mut crs) = (0.0, 0.0);
    for ((xa, ya), (xb, yb)) in sa.iter().zip(&sb) {
        dot += xa * xb + ya * yb;
        crs += xa * yb - ya * xb;
    }
    Ok((1.0 - (dot * dot + crs * crs)).max(0.0))
}

const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 255.0;

struct Plane {
    h: usize,
    w: usize,
    v: Vec<f64>,
}

impl Plane {
    fn from_gray(img: &GrayImage) -> Self {
        Plane {
            h: img.height(),
            w: img.width(),
            v: img.pixels().iter().map(|&p| p as f64).collect(),
        }
    }

    fn mul(&self, other: &Plane) -> Plane {
        Plane {
            h: self.h,
            w: self.w,
            v: self.v.iter().zip(&other.v).map(|(a, b)| a * b).collect(),
        }
    }

    /// Separable Gaussian filter, `valid` region only.
    fn gaussian_valid(&self, kernel: &[f64]) -> Plane {
        let k = kernel.len();
        let (h, w) = (self.h, self.w);
        let ow = w + 1 - k;
        let oh = h + 1 - k;
        let mut horiz = vec![0.0; h * ow];
        for r in 0..h {
            for c in 0..ow {
                horiz[r * ow + c] = kernel.iter().enumerate().map(|(i, g)| g * self.v[r * w + c + i]).sum();
            }
        }
        let mut out = vec![0.0; oh * ow];
        for r in 0..oh {
            for c in 0..ow {
                out[r * ow + c] = kernel
                    .iter()
                    .enumerate()
                    .map(|(i, g)| g * horiz[(r + i) * ow + c])
                    .sum();
            }
        }
        Plane { h: oh, w: ow, v: out }
    }

    /// 2x2 mean pooling; an odd trailing row or column is dropped.
    fn downsample(&self) -> Plane {
        let (oh, ow) = (self.h / 2, self.w / 2);
        let mut v = vec![0.0; oh * ow];
        for r in 0..oh {
            for c in 0..ow {
                let at = |dr: usize, dc: usize| self.v[(2 * r + dr) * self.w + 2 * c + dc];
                v[r * ow + c] = (at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1)) / 4.0;
            }
        }
        Plane { h: oh, w: ow, v }
    }
}

fn gaussian_kernel() -> Vec<f64> {
    let half = (WINDOW / 2) as f64;
    let raw: Vec<f64> = (0..WINDOW)
        .map(|i| (-((i as f64 - half).powi(2)) / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|g| g / total).collect()
}

/// Mean luminance-contrast-structure product and mean contrast-structure
/// term at one scale.
fn ssim_terms(x: &Plane, y: &Plane, kernel: &[f64]) -> (f64, f64) {
    let c1 = (K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (K2 * DYNAMIC_RANGE).powi(2);
    let mx = x.gaussian_valid(kernel);
    let my = y.gaussian_valid(kernel);
    let sxx = x.mul(x).gaussian_valid(kernel);
    let syy = y.mul(y).gaussian_valid(kernel);
    let sxy = x.mul(y).gaussian_valid(kernel);
    let n = mx.v.len() as f64;
    let (mut ssim, mut cs) = (0.0, 0.0);
    for i in 0..mx.v.len() {
        let (ux, uy) = (mx.v[i], my.v[i]);
        let vx = sxx.v[i] - ux * ux;
        let vy = syy.v[i] - uy * uy;
        let cov = sxy.v[i] - ux * uy;
        let cs_i = (2.0 * cov + c2) / (vx + vy + c2);
        let l_i = (2.0 * ux * uy + c1) / (ux * ux + uy * uy + c1);
        cs += cs_i;
        ssim += l_i * cs_i;
    }
    (ssim / n, cs / n)
}

/// Five-scale structural similarity with an 11x11 Gaussian window
/// (sigma 1.5), `K1 = 0.01`, `K2 = 0.03`, 2x2 mean-pool downsampling and the
/// standard per-scale exponents. Negative per-scale terms are clamped to 0
/// before exponentiation, so the result lies in `[0, 1]`.
pub fn ms_ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(a.dims(), b.dims()));
    }
    let scales = MS_SSIM_WEIGHTS.len();
    let min = (1 << (scales - 1)) * WINDOW;
    if a.height().min(a.width()) < min {
        return Err(Error::TooSmallForScales {
            height: a.height(),
            width: a.width(),
            scales,
            min,
        });
    }
    let kernel = gaussian_kernel();
    let (mut x, mut y) = (Plane::from_gray(a), Plane::from_gray(b));
    let mut product = 1.0;
    for (g, weight) in MS_SSIM_WEIGHTS.iter().enumerate() {
        let (ssim, cs) = ssim_terms(&x, &y, &kernel);
        let term = if g + 1 == scales { ssim } else { cs };
        product *= term.max(0.0).powf(*weight);
        if g + 1 < scales {
            x = x.downsample();
            y = y.downsample();
        }
    }
    Ok(product.min(1.0))
}

/// Mean squared difference over `footprint`, intensities scaled to `[0, 1]`.
pub fn roundtrip_mse(a: &GrayImage, b: &GrayImage, footprint: &BinaryMask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(a.dims(), b.dims()));
    }
    let fp = (footprint.height(), footprint.width());
    if fp != a.dims() {
        return Err(Error::DimensionMismatch(a.dims(), fp));
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for ((&pa, &pb), &inside) in a.pixels().iter().zip(b.pixels()).zip(footprint.bits()) {
        if inside {
            let d = (pa as f64 - pb as f64) / 255.0;
            sum += d * d;
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Everything `evaluate` reports. Measures that were not requested stay
/// `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub image_count: usize,
    pub per_keypoint_mse: BTreeMap<String, KeypointError>,
    pub maad_deg: Option<MeanStd>,
    pub circularity_pair: Option<(f64, f64)>,
    pub procrustes_disparity: Option<f64>,
    pub ms_ssim: Option<f64>,
    pub roundtrip_mse: Option<MeanStd>,
}
