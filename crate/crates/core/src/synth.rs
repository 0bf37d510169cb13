//! Synthetic convex planes with exact ground truth, plus corruption
//! operators (cropping, GUI burn-in, noise, acoustic shadows).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::BinaryMask;
use crate::raster::{GrayImage, Point, Raster};
use crate::sector::AnnulusSector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Texture {
    Constant {
        level: u8,
    },
    /// Linear in radius from `inner` at `r_inner` to `outer` at `r_outer`.
    RadialGradient {
        inner: u8,
        outer: u8,
    },
    /// Linear in angle from `left` on the left leg to `right` on the right.
    AngularGradient {
        left: u8,
        right: u8,
    },
    /// Gaussian-smoothed white noise, `mean +- spread` per standard deviation.
    Speckle {
        seed: u64,
        mean: u8,
        spread: u8,
    },
}

impl Default for Texture {
    fn default() -> Self {
        Texture::Constant { level: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub origin: Point,
    pub theta_deg: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    /// `(height, width)`.
    pub canvas: (usize, usize),
    #[serde(default)]
    pub texture: Texture,
    #[serde(default)]
    pub background_level: u8,
    /// Blend a one-pixel band across the sector boundary.
    #[serde(default)]
    pub feather: bool,
}

impl SectorSpec {
    pub fn truth(&self) -> AnnulusSector {
        AnnulusSector::from_geometry(
            self.origin,
            self.theta_deg.to_radians(),
            self.r_inner,
            self.r_outer,
            self.canvas,
        )
    }

    fn validate(&self) -> Result<()> {
        let (h, w) = self.canvas;
        if h < 2 || w < 2 {
            return Err(Error::SpecOutOfCanvas(format!("canvas {h}x{w} is too small")));
        }
        if !(self.theta_deg > 0.0 && self.theta_deg < 180.0) {
            return Err(Error::SpecOutOfCanvas(format!("aperture {} deg", self.theta_deg)));
        }
        if !(self.r_inner >= 0.0 && self.r_inner < self.r_outer && self.r_outer.is_finite()) {
            return Err(Error::SpecOutOfCanvas(format!(
                "radii {}/{}",
                self.r_inner, self.r_outer
            )));
        }
        let bottom = Point::new(self.origin.row + self.r_outer, self.origin.col);
        if !(bottom.row >= 0.0 && bottom.row <= (h - 1) as f64 && bottom.col >= 0.0 && bottom.col <= (w - 1) as f64) {
            return Err(Error::SpecOutOfCanvas(format!(
                "outer arc midpoint ({:.1}, {:.1}) outside {h}x{w}",
                bottom.row, bottom.col
            )));
        }
        Ok(())
    }
}

/// Signed distance (pixels) from `p` to the sector boundary, positive inside.
fn signed_distance(sector: &AnnulusSector, p: &Point) -> f64 {
    let (r, a) = sector.polar(p);
    let (lo, hi) = sector.angle_range();
    let radial = (r - sector.r_inner).min(sector.r_outer - r);
    let angular = (r * (a - lo).sin()).min(r * (hi - a).sin());
    let angular = if a < lo || a > hi {
        -(r * (a - lo).sin().abs()).min(r * (a - hi).sin().abs())
    } else {
        angular
    };
    radial.min(angular)
}

fn gaussian_blur(values: &mut [f64], h: usize, w: usize, sigma: f64) {
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.into_iter().map(|k| k / total).collect();
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            tmp[r * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, g)| g * values[r * w + clamp(c as isize + k as isize - radius, w)])
                .sum();
        }
    }
    for r in 0..h {
        for c in 0..w {
            values[r * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, g)| g * tmp[clamp(r as isize + k as isize - radius, h) * w + c])
                .sum();
        }
    }
}

fn speckle_field(h: usize, w: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..h * w).map(|_| rng.random::<f64>()).collect();
    gaussian_blur(&mut v, h, w, 1.2);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n)
        .sqrt()
        .max(1e-12);
    v.iter_mut().for_each(|x| *x = (*x - mean) / std);
    v
}

fn to_level(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Draw the sector described by `spec`. Pixel `(r, c)` is foreground when its
/// centre lies inside the sector.
pub fn render(spec: &SectorSpec) -> Result<(GrayImage, AnnulusSector)> {
    spec.validate()?;
    let truth = spec.truth();
    let (h, w) = spec.canvas;
    let speckle = match spec.texture {
        Texture::Speckle { seed, .. } => Some(speckle_field(h, w, seed)),
        _ => None,
    };
    let (lo, hi) = truth.angle_range();
    let bg = spec.background_level as f64;
    let mut img = GrayImage::filled(h, w, spec.background_level)?;
    for r in 0..h {
        for c in 0..w {
            let p = Point::new(r as f64, c as f64);
            let alpha = if spec.feather {
                (signed_distance(&truth, &p) + 0.5).clamp(0.0, 1.0)
            } else if truth.contains(&p) {
                1.0
            } else {
                0.0
            };
            if alpha == 0.0 {
                continue;
            }
            let (radius, angle) = truth.polar(&p);
            let value = match spec.texture {
                Texture::Constant { level } => level as f64,
                Texture::RadialGradient { inner, outer } => {
                    let t = ((radius - truth.r_inner) / (truth.r_outer - truth.r_inner)).clamp(0.0, 1.0);
                    inner as f64 + t * (outer as f64 - inner as f64)
                }
                Texture::AngularGradient { left, right } => {
                    // left leg sits at the larger angle
                    let t = ((hi - angle) / (hi - lo)).clamp(0.0, 1.0);
                    left as f64 + t * (right as f64 - left as f64)
                }
                Texture::Speckle { mean, spread, .. } => {
                    let z = speckle.as_ref().map_or(0.0, |s| s[r * w + c]);
                    (mean as f64 + spread as f64 * z).clamp(16.0, 255.0)
                }
            };
            img.put(r, c, to_level(alpha * value + (1.0 - alpha) * bg));
        }
    }
    Ok((img, truth))
}

/// Fill a disc with `value`.
pub fn paint_disc(img: &mut GrayImage, centre: Point, radius: f64, value: u8) {
    let (h, w) = (img.height(), img.width());
    let r0 = (centre.row - radius).floor().max(0.0) as usize;
    let r1 = ((centre.row + radius).ceil().max(0.0) as usize).min(h.saturating_sub(1));
    let c0 = (centre.col - radius).floor().max(0.0) as usize;
    let c1 = ((centre.col + radius).ceil().max(0.0) as usize).min(w.saturating_sub(1));
    for r in r0..=r1 {
        for c in c0..=c1 {
            if Point::new(r as f64, c as f64).distance(&centre) <= radius {
                img.put(r, c, value);
            }
        }
    }
}

/// Paint the band within `half_width` pixels of the ray from `origin` at
/// `angle`, between radii `r_from` and `r_to`. Pixels straddling the band
/// edge are blended by coverage, so the painted profile is centred exactly on
/// the ray.
pub fn paint_ray(img: &mut GrayImage, origin: Point, angle: f64, r_from: f64, r_to: f64, half_width: f64, value: u8) {
    let (s, c) = angle.sin_cos();
    for r in 0..img.height() {
        for col in 0..img.width() {
            let (dr, dc) = (r as f64 - origin.row, col as f64 - origin.col);
            let along = dc * c + dr * s;
            let across = (dr * c - dc * s).abs();
            let alpha = (half_width + 0.5 - across).clamp(0.0, 1.0);
            if along >= r_from && along <= r_to && alpha > 0.0 {
                let old = img.get(r, col) as f64;
                img.put(r, col, to_level(alpha * value as f64 + (1.0 - alpha) * old));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuiBox {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
    pub intensity: u8,
    /// Paint short dashes in rows instead of a solid block.
    #[serde(default)]
    pub stripes: bool,
}

impl GuiBox {
    fn covers(&self, r: usize, c: usize) -> bool {
        if r < self.top || r >= self.top + self.height || c < self.left || c >= self.left + self.width {
            return false;
        }
        !self.stripes || ((r - self.top) % 4 < 2 && (c - self.left) % 6 < 4)
    }
}

/// Wedge-shaped dropout centred on the ray at `angle`: pixels whose
/// along-ray offset from the centre point and distance across the ray sum to
/// at most `width / 2` drop to the background level. On a leg this cuts a V of
/// opening `width` and depth `width / 2` into the plane boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowNotch {
    pub angle: f64,
    pub width: f64,
    /// Centre as a fraction of the way from the inner to the outer arc.
    #[serde(default = "ShadowNotch::default_at")]
    pub at: f64,
}

impl ShadowNotch {
    fn default_at() -> f64 {
        0.5
    }

    fn covers(&self, sector: &AnnulusSector, p: &Point) -> bool {
        let (dr, dc) = (p.row - sector.origin.row, p.col - sector.origin.col);
        let (s, c) = self.angle.sin_cos();
        let along = dc * c + dr * s;
        let across = (dr * c - dc * s).abs();
        let centre = sector.r_inner + self.at * (sector.r_outer - sector.r_inner);
        (along - centre).abs() + across <= self.width / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorruptionSpec {
    #[serde(default)]
    pub crop_top_rows: usize,
    #[serde(default)]
    pub gui_boxes: Vec<GuiBox>,
    /// Standard deviation of additive Gaussian noise inside the plane.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub shadow_notches: Vec<ShadowNotch>,
    #[serde(default)]
    pub background_level: u8,
}

impl CorruptionSpec {
    pub fn is_empty(&self) -> bool {
        self.crop_top_rows == 0
            && self.gui_boxes.is_empty()
            && self.noise_sigma == 0.0
            && self.shadow_notches.is_empty()
    }
}

const MAX_RELABELLED: f64 = 0.4;

/// Ground truth after removing the top `rows` rows: everything shifts up, and
/// features that fell off the image are replaced by what remains visible on
/// the new first row.
fn crop_truth(truth: &AnnulusSector, rows: usize) -> AnnulusSector {
    let n = rows as f64;
    let mut t = truth.clone();
    let o = truth.origin;
    let onto_top_row = |p: Point| -> Point {
        if p.row >= n {
            return p;
        }
        let dir = Point::new(p.row - o.row, p.col - o.col);
        let s = (n - o.row) / dir.row;
        Point::new(n, o.col + s * dir.col)
    };
    let kp = &mut t.keypoints;
    kp.legs_l_top = onto_top_row(kp.legs_l_top);
    kp.legs_r_top = onto_top_row(kp.legs_r_top);
    if kp.arc_inner.row < n {
        kp.arc_inner = Point::new(n, truth.axis_col);
        t.r_inner = n - o.row;
        t.cropped_top = true;
    }
    t.keypoints = t.keypoints.map(|p| Point::new(p.row - n, p.col));
    t.origin = t.keypoints.origin;
    t.source_dims = (truth.source_dims.0 - rows, truth.source_dims.1);
    t
}

/// Apply `spec` to a rendered image. Deterministic in `seed`.
pub fn corrupt(
    img: &GrayImage,
    truth: &AnnulusSector,
    spec: &CorruptionSpec,
    seed: u64,
) -> Result<(GrayImage, AnnulusSector)> {
    if spec.is_empty() {
        return Ok((img.clone(), truth.clone()));
    }
    let (h, w) = (img.height(), img.width());
    if spec.crop_top_rows + 2 > h {
        return Err(Error::CorruptionTooSevere { fraction: 1.0 });
    }
    let mut out = img.clone();
    let mut total = 0usize;
    let mut removed = 0usize;
    let normal =
        Normal::new(0.0, spec.noise_sigma.max(0.0)).map_err(|_| Error::CorruptionTooSevere { fraction: 0.0 })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg = spec.background_level;
    for r in 0..h {
        for c in 0..w {
            let p = Point::new(r as f64, c as f64);
            if !truth.contains(&p) {
                continue;
            }
            total += 1;
            if r < spec.crop_top_rows || spec.shadow_notches.iter().any(|n| n.covers(truth, &p)) {
                removed += 1;
                out.put(r, c, bg);
            } else if spec.noise_sigma > 0.0 {
                let noisy = out.get(r, c) as f64 + rng.sample(normal);
                // stay strictly above the background so the plane keeps its shape
                out.put(r, c, noisy.round().clamp(bg as f64 + 1.0, 255.0) as u8);
            }
        }
    }
    let fraction = if total == 0 { 0.0 } else { removed as f64 / total as f64 };
    if fraction > MAX_RELABELLED {
        return Err(Error::CorruptionTooSevere { fraction });
    }
    for b in &spec.gui_boxes {
        for r in b.top..(b.top + b.height).min(h) {
            for c in b.left..(b.left + b.width).min(w) {
                if b.covers(r, c) {
                    out.put(r, c, b.intensity);
                }
            }
        }
    }
    let k = spec.crop_top_rows;
    if k == 0 {
        return Ok((out, truth.clone()));
    }
    let cropped = GrayImage::from_raw(h - k, w, out.pixels()[k * w..].to_vec())?;
    Ok((cropped, crop_truth(truth, k)))
}

/// One entry of a standard acceptance grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    pub id: String,
    pub spec: SectorSpec,
    #[serde(default)]
    pub corruption: Option<CorruptionSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl GridCase {
    pub fn render(&self) -> Result<(GrayImage, AnnulusSector)> {
        let (img, truth) = render(&self.spec)?;
        match &self.corruption {
            Some(c) => corrupt(&img, &truth, c, self.seed),
            None => Ok((img, truth)),
        }
    }
}

const THETAS: [f64; 5] = [40.0, 50.0, 60.0, 70.0, 80.0];
const R_INNERS: [f64; 3] = [40.0, 80.0, 120.0];
const R_OUTERS: [f64; 3] = [250.0, 350.0, 420.0];
const TOP_MARGIN: f64 = 20.0;

fn grid_spec(theta_deg: f64, r_inner: f64, r_outer: f64, canvas: (usize, usize), index: usize) -> SectorSpec {
    let half = (theta_deg / 2.0).to_radians();
    // small deterministic horizontal offsets so the axis is not always centred
    let offset = ((index * 37) % 21) as f64 - 10.0;
    SectorSpec {
        origin: Point::new(TOP_MARGIN - r_inner * half.cos(), canvas.1 as f64 / 2.0 + offset),
        theta_deg,
        r_inner,
        r_outer,
        canvas,
        texture: Texture::Speckle {
            seed: 1000 + index as u64,
            mean: 128,
            spread: 30,
        },
        background_level: 0,
        feather: false,
    }
}

/// Sixty clean cases: every aperture/radius combination on a 960x1280
/// canvas, plus each aperture/inner-radius pair on 512x512 with
/// `r_outer = 250`.
pub fn clean_grid() -> Vec<GridCase> {
    let mut cases = Vec::with_capacity(60);
    for &t in &THETAS {
        for &ri in &R_INNERS {
            for &ro in &R_OUTERS {
                let i = cases.len();
                cases.push(GridCase {
                    id: format!("clean_{i:02}_t{t:.0}_ri{ri:.0}_ro{ro:.0}_960x1280"),
                    spec: grid_spec(t, ri, ro, (960, 1280), i),
                    corruption: None,
                    seed: i as u64,
                });
            }
        }
    }
    for &t in &THETAS {
        for &ri in &R_INNERS {
            let i = cases.len();
            cases.push(GridCase {
                id: format!("clean_{i:02}_t{t:.0}_ri{ri:.0}_ro250_512x512"),
                spec: grid_spec(t, ri, 250.0, (512, 512), i),
                corruption: None,
                seed: i as u64,
            });
        }
    }
    cases
}

fn clear_of(footprint: &BinaryMask, b: &GuiBox, margin: usize) -> bool {
    let (h, w) = (footprint.height(), footprint.width());
    if b.top + b.height > h || b.left + b.width > w {
        return false;
    }
    let r0 = b.top.saturating_sub(margin);
    let c0 = b.left.saturating_sub(margin);
    let r1 = (b.top + b.height + margin).min(h);
    let c1 = (b.left + b.width + margin).min(w);
    (r0..r1).all(|r| (c0..c1).all(|c| !footprint.get(r, c)))
}

/// Place a `height x width` box in the first free corner, shrinking it until
/// it clears the sector.
fn corner_box(
    footprint: &BinaryMask,
    crop: usize,
    height: usize,
    width: usize,
    right: bool,
    intensity: u8,
) -> Option<GuiBox> {
    let w = footprint.width();
    let mut bw = width;
    while bw >= 16 {
        let left = if right { w - 4 - bw } else { 4 };
        let candidate = GuiBox {
            top: crop + 2,
            left,
            height,
            width: bw,
            intensity,
            stripes: true,
        };
        if clear_of(footprint, &candidate, 3) {
            return Some(candidate);
        }
        bw -= 8;
    }
    let bottom = footprint.height().checked_sub(height + 6)?;
    let candidate = GuiBox {
        top: bottom,
        left: if right { w - 4 - width } else { 4 },
        height,
        width,
        intensity,
        stripes: false,
    };
    clear_of(footprint, &candidate, 3).then_some(candidate)
}

/// Thirty corrupted cases drawn from the clean grid: the inner arc cropped
/// away, two GUI boxes, `sigma = 8` noise inside the plane and one 20-px
/// shadow notch on alternating legs.
pub fn corrupted_grid() -> Vec<GridCase> {
    let clean = clean_grid();
    (0..30)
        .map(|k| {
            let base = &clean[(k * 2) % clean.len()];
            let truth = base.spec.truth();
            let footprint = BinaryMask::from_fn(truth.source_dims.0, truth.source_dims.1, |r, c| {
                truth.contains(&Point::new(r as f64, c as f64))
            });
            let crop = truth.keypoints.arc_inner.row.floor() as usize + 1 + (k % 3) * 4;
            let (lo, hi) = truth.angle_range();
            let leg = if k % 2 == 0 { lo } else { hi };
            let gui_boxes = [false, true]
                .iter()
                .filter_map(|&right| corner_box(&footprint, crop, 24, 120, right, 230 - (k as u8 % 4) * 10))
                .collect();
            GridCase {
                id: format!("corrupt_{k:02}_from_{}", base.id),
                spec: base.spec.clone(),
                corruption: Some(CorruptionSpec {
                    crop_top_rows: crop,
                    gui_boxes,
                    noise_sigma: 8.0,
                    shadow_notches: vec![ShadowNotch {
                        angle: leg,
                        width: 20.0,
                        at: 0.3 + 0.1 * (k % 5) as f64,
                    }],
                    background_level: 0,
                }),
                seed: 5000 + k as u64,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;
    use std::f64::consts::PI;

    fn spec(texture: Texture) -> SectorSpec {
        SectorSpec {
            origin: Point::new(-40.0, 256.0),
            theta_deg: 60.0,
            r_inner: 60.0,
            r_outer: 380.0,
            canvas: (512, 512),
            texture,
            background_level: 0,
            feather: false,
        }
    }

    #[test]
    fn foreground_area_matches_formula() {
        let (img, truth) = render(&spec(Texture::Constant { level: 128 })).unwrap();
        let count = img.pixels().iter().filter(|&&v| v == 128).count() as f64;
        let area = PI / 3.0 * (380.0f64.powi(2) - 60.0f64.powi(2)) / 2.0;
        assert!((count - area).abs() / area < 0.01, "{count} vs {area}");
        assert_eq!(truth.keypoints.arc_inner, Point::new(20.0, 256.0));
        assert_eq!(img.pixels().iter().filter(|&&v| v != 0 && v != 128).count(), 0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = spec(Texture::default());
        s.theta_deg = 0.0;
        assert!(matches!(render(&s), Err(Error::SpecOutOfCanvas(_))));
        let mut s = spec(Texture::default());
        s.r_outer = 600.0;
        assert!(matches!(render(&s), Err(Error::SpecOutOfCanvas(_))));
        let mut s = spec(Texture::default());
        s.r_inner = 400.0;
        assert!(render(&s).is_err());
    }

    #[test]
    fn radial_gradient_depends_on_radius_only() {
        let (img, truth) = render(&spec(Texture::RadialGradient { inner: 40, outer: 240 })).unwrap();
        let mut by_radius = std::collections::BTreeMap::<i64, std::collections::BTreeSet<u8>>::new();
        for r in 0..512 {
            for c in 0..512 {
                let p = Point::new(r as f64, c as f64);
                if truth.contains(&p) {
                    let key = (truth.polar(&p).0 * 1000.0).round() as i64;
                    by_radius.entry(key).or_default().insert(img.get(r, c));
                }
            }
        }
        assert!(by_radius.values().all(|levels| levels.len() == 1));
    }

    #[test]
    fn angular_gradient_runs_left_to_right() {
        let (img, _) = render(&spec(Texture::AngularGradient { left: 50, right: 250 })).unwrap();
        let row = 300;
        let cols: Vec<usize> = (0..512).filter(|&c| img.get(row, c) != 0).collect();
        assert!(img.get(row, cols[0]) < img.get(row, *cols.last().unwrap()));
    }

    #[test]
    fn speckle_is_reproducible_and_stays_foreground() {
        let s = spec(Texture::Speckle {
            seed: 3,
            mean: 128,
            spread: 30,
        });
        let (a, truth) = render(&s).unwrap();
        let (b, _) = render(&s).unwrap();
        assert_eq!(a, b);
        for r in 0..512 {
            for c in 0..512 {
                let inside = truth.contains(&Point::new(r as f64, c as f64));
                assert_eq!(inside, a.get(r, c) > 0);
            }
        }
        let other = render(&spec(Texture::Speckle {
            seed: 4,
            mean: 128,
            spread: 30,
        }))
        .unwrap()
        .0;
        assert_ne!(a, other);
    }

    #[test]
    fn feathering_blends_the_boundary() {
        let mut s = spec(Texture::Constant { level: 200 });
        s.feather = true;
        let (img, _) = render(&s).unwrap();
        assert!(img.pixels().iter().any(|&v| v > 0 && v < 200));
    }

    #[test]
    fn empty_corruption_is_identity() {
        let (img, truth) = render(&spec(Texture::default())).unwrap();
        let (out, t) = corrupt(&img, &truth, &CorruptionSpec::default(), 9).unwrap();
        assert_eq!(out, img);
        assert_eq!(t, truth);
    }

    #[test]
    fn cropping_the_inner_arc_flags_truth() {
        let (img, truth) = render(&spec(Texture::default())).unwrap();
        let c = CorruptionSpec {
            crop_top_rows: 40,
            ..Default::default()
        };
        let (out, t) = corrupt(&img, &truth, &c, 0).unwrap();
        assert_eq!(out.dims(), (472, 512));
        assert!(t.cropped_top);
        assert_eq!(t.keypoints.arc_inner, Point::new(0.0, 256.0));
        assert!((t.r_inner - 80.0).abs() < 1e-12);
        assert_eq!(t.origin, Point::new(-80.0, 256.0));
        assert!((t.keypoints.legs_l_top.row).abs() < 1e-9);
        assert!((t.keypoints.arc_outer.row - (340.0 - 40.0)).abs() < 1e-9);
        // leg tops stay on the original leg lines
        let dir = truth.keypoints.legs_r_bottom;
        let o = truth.origin;
        let top = t.keypoints.legs_r_top;
        let cross = (top.row + 40.0 - o.row) * (dir.col - o.col) - (top.col - o.col) * (dir.row - o.row);
        assert!(cross.abs() < 1e-6);
    }

    #[test]
    fn gui_boxes_leave_truth_unchanged() {
        let (img, truth) = render(&spec(Texture::default())).unwrap();
        let c = CorruptionSpec {
            gui_boxes: vec![GuiBox {
                top: 2,
                left: 2,
                height: 20,
                width: 60,
                intensity: 250,
                stripes: true,
            }],
            ..Default::default()
        };
        let (out, t) = corrupt(&img, &truth, &c, 0).unwrap();
        assert_eq!(t, truth);
        assert_eq!(out.get(2, 2), 250);
        assert_eq!(out.get(4, 2), 0);
    }

    #[test]
    fn noise_is_seeded_and_confined_to_the_plane() {
        let (img, truth) = render(&spec(Texture::default())).unwrap();
        let c = CorruptionSpec {
            noise_sigma: 8.0,
            ..Default::default()
        };
        let (a, _) = corrupt(&img, &truth, &c, 1).unwrap();
        let (b, _) = corrupt(&img, &truth, &c, 1).unwrap();
        let (d, _) = corrupt(&img, &truth, &c, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
        assert_eq!(a.get(0, 0), 0);
        assert!(a.pixels().iter().zip(img.pixels()).all(|(&x, &y)| (x == 0) == (y == 0)));
    }

    #[test]
    fn notch_and_severity_limit() {
        let (img, truth) = render(&spec(Texture::default())).unwrap();
        let (lo, _) = truth.angle_range();
        let notch = ShadowNotch {
            angle: lo,
            width: 30.0,
            at: 0.5,
        };
        let c = CorruptionSpec {
            shadow_notches: vec![notch],
            ..Default::default()
        };
        let (out, _) = corrupt(&img, &truth, &c, 0).unwrap();
        let removed = img.pixels().iter().zip(out.pixels()).filter(|(a, b)| a != b).count();
        // half of a 30 px diamond lies outside the plane
        assert!((200..=260).contains(&removed), "{removed}");
        let c = CorruptionSpec {
            crop_top_rows: 250,
            ..Default::default()
        };
        assert!(matches!(
            corrupt(&img, &truth, &c, 0),
            Err(Error::CorruptionTooSevere { .. })
        ));
    }

    #[test]
    fn painting_helpers() {
        let mut img = GrayImage::filled(64, 64, 0).unwrap();
        paint_disc(&mut img, Point::new(32.0, 32.0), 5.0, 255);
        let n = img.pixels().iter().filter(|&&v| v == 255).count() as f64;
        assert!((n - PI * 25.0).abs() < 10.0);
        let mut img = GrayImage::filled(64, 64, 0).unwrap();
        paint_ray(&mut img, Point::new(0.0, 32.0), PI / 2.0, 10.0, 50.0, 0.5, 255);
        assert_eq!(img.get(30, 32), 255);
        assert_eq!(img.get(30, 33), 0);
        assert_eq!(img.get(5, 32), 0);
        let mut img = GrayImage::filled(64, 64, 0).unwrap();
        paint_ray(&mut img, Point::new(0.0, 32.25), PI / 2.0, 0.0, 60.0, 1.0, 200);
        let row: Vec<f64> = (0..64).map(|c| img.get(30, c) as f64).collect();
        let centroid = row.iter().enumerate().map(|(c, v)| c as f64 * v).sum::<f64>() / row.iter().sum::<f64>();
        assert!((centroid - 32.25).abs() < 0.01, "{centroid}");
    }

    #[test]
    fn grids_have_the_documented_shape() {
        let clean = clean_grid();
        assert_eq!(clean.len(), 60);
        assert_eq!(clean.iter().filter(|c| c.spec.canvas == (960, 1280)).count(), 45);
        assert!(clean.iter().all(|c| c.spec.validate().is_ok()));
        for c in &clean {
            let t = c.spec.truth();
            assert!((t.keypoints.legs_l_top.row - TOP_MARGIN).abs() < 1e-9);
        }
        let corrupted = corrupted_grid();
        assert_eq!(corrupted.len(), 30);
        for c in &corrupted {
            let corruption = c.corruption.as_ref().unwrap();
            assert_eq!(corruption.gui_boxes.len(), 2, "{}", c.id);
            assert!(corruption.crop_top_rows as f64 > c.spec.truth().keypoints.arc_inner.row);
        }
    }
}
