//! Scan-line fan construction, linearisation of the convex plane, and the
//! inverse mapping back to convex geometry.
//!
//! Ray `k` of the fan has angle `a_k = pi/2 - theta/2 + k * step` with
//! `step = theta / n_rays`. Increasing angle sweeps from the right leg to the
//! left leg in image space, so ray `k` is written to linear column
//! `n_rays - 1 - k`; the linear image reads left to right like the source.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::BinaryMask;
use crate::raster::{AnyImage, Point, Raster};
use crate::sector::AnnulusSector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Catmull-Rom cubic convolution.
    #[default]
    Spline,
    Bilinear,
}

impl std::str::FromStr for Interpolation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spline" => Ok(Interpolation::Spline),
            "bilinear" => Ok(Interpolation::Bilinear),
            other => Err(format!("unknown interpolation '{other}' (expected spline or bilinear)")),
        }
    }
}

impl std::fmt::Display for Interpolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Interpolation::Spline => "spline",
            Interpolation::Bilinear => "bilinear",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineariseOptions {
    pub interp: Interpolation,
    /// Divides both the ray count and the samples per ray.
    pub downsample: f64,
}

impl Default for LineariseOptions {
    fn default() -> Self {
        Self {
            interp: Interpolation::Spline,
            downsample: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRay {
    pub start: Point,
    pub end: Point,
    pub theta_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanLineFan {
    pub rays: Vec<ScanRay>,
    pub n_rays: usize,
    pub samples_per_ray: usize,
    pub step: f64,
}

/// Height over width of the sector's rectangular equivalent: radial span
/// over `area / radial span` (the mid-arc length).
pub fn aspect_ratio(sector: &AnnulusSector) -> f64 {
    let height = sector.r_outer - sector.r_inner;
    let width = sector.area() / height;
    height / width
}

fn ray_count(sector: &AnnulusSector, downsample: f64) -> usize {
    ((sector.theta * sector.r_outer / downsample).round() as usize).max(2)
}

fn fan_with_rays(sector: &AnnulusSector, n_rays: usize, samples_per_ray: usize) -> ScanLineFan {
    let step = sector.theta / n_rays as f64;
    let (first, _) = sector.angle_range();
    let o = sector.origin;
    let rays = (0..n_rays)
        .map(|k| {
            let theta_hat = first + k as f64 * step;
            let (s, c) = theta_hat.sin_cos();
            ScanRay {
                start: Point::new(sector.r_inner * s + o.row, sector.r_inner * c + o.col),
                end: Point::new(sector.r_outer * s + o.row, sector.r_outer * c + o.col),
                theta_hat,
            }
        })
        .collect();
    ScanLineFan {
        rays,
        n_rays,
        samples_per_ray,
        step,
    }
}

/// One ray per pixel of outer-arc length (divided by `downsample`), and
/// `round(n_rays * aspect_ratio)` samples along each.
pub fn build_fan(sector: &AnnulusSector, downsample: f64) -> ScanLineFan {
    let n_rays = ray_count(sector, downsample);
    let samples = ((n_rays as f64 * aspect_ratio(sector)).round() as usize).max(2);
    fan_with_rays(sector, n_rays, samples)
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Interleaved-raster sampler with clamp-to-edge addressing.
struct Sampler<'a> {
    data: &'a [u8],
    height: usize,
    width: usize,
    channels: usize,
    interp: Interpolation,
}

impl<'a> Sampler<'a> {
    fn new(img: &'a (impl Raster + ?Sized), interp: Interpolation) -> Self {
        Self {
            data: img.data(),
            height: img.height(),
            width: img.width(),
            channels: img.channels(),
            interp,
        }
    }

    #[inline]
    fn texel(&self, row: isize, col: isize, ch: usize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.data[(r * self.width + c) * self.channels + ch] as f64
    }

    fn sample(&self, row: f64, col: f64, out: &mut [f64]) {
        let (r0, c0) = (row.floor(), col.floor());
        let (tr, tc) = (row - r0, col - c0);
        let (r0, c0) = (r0 as isize, c0 as isize);
        match self.interp {
            Interpolation::Bilinear => {
                for (ch, o) in out.iter_mut().enumerate() {
                    let top = self.texel(r0, c0, ch) * (1.0 - tc) + self.texel(r0, c0 + 1, ch) * tc;
                    let bottom = self.texel(r0 + 1, c0, ch) * (1.0 - tc) + self.texel(r0 + 1, c0 + 1, ch) * tc;
                    *o = top * (1.0 - tr) + bottom * tr;
                }
            }
            Interpolation::Spline => {
                let (wr, wc) = (catmull_rom(tr), catmull_rom(tc));
                for (ch, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (i, wri) in wr.iter().enumerate() {
                        let rr = r0 - 1 + i as isize;
                        let mut line = 0.0;
                        for (j, wcj) in wc.iter().enumerate() {
                            line += wcj * self.texel(rr, c0 - 1 + j as isize, ch);
                        }
                        acc += wri * line;
                    }
                    *o = acc;
                }
            }
        }
    }
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// The linearised plane: one column per scan line, row 0 on the inner arc
/// and the last row on the outer arc.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
    pub sector: AnnulusSector,
    pub ratio: f64,
    pub step: f64,
}

impl LinearImage {
    /// Reattaches a sector to a previously saved linear raster. The ray count
    /// and sample count are taken from the raster's width and height.
    pub fn from_raster(img: &impl Raster, sector: AnnulusSector) -> Self {
        let step = sector.theta / img.width() as f64;
        Self {
            height: img.height(),
            width: img.width(),
            channels: img.channels(),
            pixels: img.data().to_vec(),
            ratio: aspect_ratio(&sector),
            sector,
            step,
        }
    }

    pub fn to_image(&self) -> AnyImage {
        AnyImage::from_raw(self.height, self.width, self.channels, self.pixels.clone())
            .expect("linear image dimensions are valid")
    }

    /// Fan matching this image's columns and rows.
    pub fn fan(&self) -> ScanLineFan {
        fan_with_rays(&self.sector, self.width, self.height)
    }

    /// Fractional linear coordinates `(row, col)` of a convex-image point, or
    /// `None` when it lies outside the sector.
    pub fn linear_coords(&self, p: &Point) -> Option<(f64, f64)> {
        let s = &self.sector;
        if !s.contains(p) {
            return None;
        }
        let (r, a) = s.polar(p);
        let (first, _) = s.angle_range();
        let k = (a - first) / self.step;
        let col = (self.width - 1) as f64 - k;
        let row = (r - s.r_inner) / (s.r_outer - s.r_inner) * (self.height - 1) as f64;
        Some((row, col))
    }

    /// Convex-image position of fractional linear coordinates.
    pub fn convex_coords(&self, row: f64, col: f64) -> Point {
        let s = &self.sector;
        let (first, _) = s.angle_range();
        let a = first + ((self.width - 1) as f64 - col) * self.step;
        let r = s.r_inner + row / (self.height - 1) as f64 * (s.r_outer - s.r_inner);
        Point::new(s.origin.row + r * a.sin(), s.origin.col + r * a.cos())
    }
}

impl Raster for LinearImage {
    fn height(&self) -> usize {
        self.height
    }
    fn width(&self) -> usize {
        self.width
    }
    fn channels(&self) -> usize {
        self.channels
    }
    fn data(&self) -> &[u8] {
        &self.pixels
    }
}

pub fn linearise(img: &(impl Raster + ?Sized), sector: &AnnulusSector, opts: &LineariseOptions) -> Result<LinearImage> {
    linearise_impl(img, sector, None, opts)
}

/// As [`linearise`], additionally zero-filling samples whose nearest pixel
/// is outside `mask`.
pub fn linearise_masked(
    img: &(impl Raster + ?Sized),
    sector: &AnnulusSector,
    mask: &BinaryMask,
    opts: &LineariseOptions,
) -> Result<LinearImage> {
    if (mask.height(), mask.width()) != img.dims() {
        return Err(Error::DimensionMismatch(img.dims(), (mask.height(), mask.width())));
    }
    linearise_impl(img, sector, Some(mask), opts)
}

fn linearise_impl(
    img: &(impl Raster + ?Sized),
    sector: &AnnulusSector,
    mask: Option<&BinaryMask>,
    opts: &LineariseOptions,
) -> Result<LinearImage> {
    if sector.source_dims != img.dims() {
        return Err(Error::InconsistentSector {
            expected: sector.source_dims,
            got: img.dims(),
        });
    }
    let fan = build_fan(sector, opts.downsample);
    let (n, samples, ch) = (fan.n_rays, fan.samples_per_ray, img.channels());
    let (h, w) = (img.height() as f64, img.width() as f64);
    let sampler = Sampler::new(img, opts.interp);
    let mut pixels = vec![0u8; n * samples * ch];
    let mut value = vec![0.0; ch];
    let dr = (sector.r_outer - sector.r_inner) / (samples - 1) as f64;

    for (k, ray) in fan.rays.iter().enumerate() {
        let col = n - 1 - k;
        let (s, c) = ray.theta_hat.sin_cos();
        for row in 0..samples {
            let r = sector.r_inner + row as f64 * dr;
            let (pr, pc) = (sector.origin.row + r * s, sector.origin.col + r * c);
            let (nr, nc) = (pr.round(), pc.round());
            if nr < 0.0 || nc < 0.0 || nr >= h || nc >= w {
                continue;
            }
            if let Some(m) = mask {
                if !m.get(nr as usize, nc as usize) {
                    continue;
                }
            }
            sampler.sample(pr, pc, &mut value);
            let base = (row * n + col) * ch;
            for (dst, v) in pixels[base..base + ch].iter_mut().zip(&value) {
                *dst = to_u8(*v);
            }
        }
    }

    Ok(LinearImage {
        height: samples,
        width: n,
        channels: ch,
        pixels,
        sector: sector.clone(),
        ratio: aspect_ratio(sector),
        step: fan.step,
    })
}

/// Re-projects a linear image onto a `target_dims` convex canvas by polar
/// lookup of every pixel inside the sector footprint. Pixels outside the
/// footprint are 0.
pub fn invert(lin: &LinearImage, target_dims: (usize, usize), interp: Interpolation) -> AnyImage {
    let (h, w) = target_dims;
    let ch = lin.channels;
    let sampler = Sampler::new(lin, interp);
    let mut pixels = vec![0u8; h * w * ch];
    let mut value = vec![0.0; ch];
    for row in 0..h {
        for col in 0..w {
            let Some((lr, lc)) = lin.linear_coords(&Point::new(row as f64, col as f64)) else {
                continue;
            };
            sampler.sample(lr, lc, &mut value);
            let base = (row * w + col) * ch;
            for (dst, v) in pixels[base..base + ch].iter_mut().zip(&value) {
                *dst = to_u8(*v);
            }
        }
    }
    AnyImage::from_raw(h, w, ch, pixels).expect("target dimensions are valid")
}

/// Pixels whose centres fall inside the sector.
pub fn footprint(sector: &AnnulusSector) -> BinaryMask {
    let (h, w) = sector.source_dims;
    BinaryMask::from_fn(h, w, |r, c| sector.contains(&Point::new(r as f64, c as f64)))
}
