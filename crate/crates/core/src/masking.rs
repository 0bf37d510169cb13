//! Background detection by histogram spike analysis, binarisation, and
//! isolation of the ultrasound plane as the largest 4-connected component.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::raster::{GrayImage, Raster};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub bins: [u64; 256],
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }
}

pub fn intensity_histogram(img: &GrayImage) -> Histogram {
    let mut bins = [0u64; 256];
    for &v in img.pixels() {
        bins[v as usize] += 1;
    }
    Histogram { bins }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZScores {
    pub values: Vec<f64>,
}

impl ZScores {
    /// Standard scores of arbitrary bin counts, using the population
    /// standard deviation.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let n = counts.len() as f64;
        if counts.is_empty() {
            return Err(Error::DegenerateHistogram);
        }
        let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
        let var = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        let sigma = var.sqrt();
        if sigma == 0.0 {
            return Err(Error::DegenerateHistogram);
        }
        Ok(Self {
            values: counts.iter().map(|&c| (c as f64 - mean) / sigma).collect(),
        })
    }
}

pub fn z_scores(h: &Histogram) -> Result<ZScores> {
    ZScores::from_counts(&h.bins)
}

/// Upper intensity of the background band: the highest index whose z-score
/// exceeds `max(max(Z) / 2, 2)`, or 0 when nothing clears the threshold.
pub fn background_max(z: &ZScores) -> usize {
    let peak = z.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = (peak / 2.0).max(2.0);
    z.values.iter().rposition(|&v| v > threshold).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(row, col));
            }
        }
        Self { height, width, bits }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn flip_horizontal(&self) -> BinaryMask {
        BinaryMask::from_fn(self.height, self.width, |r, c| self.get(r, self.width - 1 - c))
    }

    /// 255 for foreground, 0 for background.
    pub fn to_gray(&self) -> GrayImage {
        let pixels = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::from_raw(self.height, self.width, pixels).expect("mask dimensions are valid")
    }
}

pub fn binarize(img: &GrayImage, bg_max: u8) -> BinaryMask {
    BinaryMask {
        height: img.height(),
        width: img.width(),
        bits: img.pixels().iter().map(|&v| v > bg_max).collect(),
    }
}

/// Label map from 4-connected component labelling. Labels are dense
/// `1..=n`, numbered in raster order of first appearance; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentMap {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<u32>,
    /// Pixel count per label; index 0 counts background pixels.
    pub component_sizes: Vec<usize>,
}

impl ComponentMap {
    pub fn component_count(&self) -> usize {
        self.component_sizes.len() - 1
    }

    pub fn label(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        // slot 0 is the background label
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (keep, merge) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[merge as usize] = keep;
        keep
    }
}

/// Two-pass 4-connectivity labelling with union-find equivalence resolution.
pub fn connected_components(mask: &BinaryMask) -> ComponentMap {
    let (h, w) = (mask.height, mask.width);
    let mut provisional = vec![0u32; h * w];
    let mut uf = UnionFind::new();

    for row in 0..h {
        for col in 0..w {
            let idx = row * w + col;
            if !mask.bits[idx] {
                continue;
            }
            let up = if row > 0 { provisional[idx - w] } else { 0 };
            let left = if col > 0 { provisional[idx - 1] } else { 0 };
            provisional[idx] = match (up, left) {
                (0, 0) => uf.make(),
                (0, l) => l,
                (u, 0) => u,
                (u, l) if u == l => u,
                (u, l) => uf.union(u, l),
            };
        }
    }

    let mut dense = vec![0u32; uf.parent.len()];
    let mut sizes = vec![0usize];
    let mut labels = provisional;
    for slot in labels.iter_mut() {
        if *slot == 0 {
            sizes[0] += 1;
            continue;
        }
        let root = uf.find(*slot) as usize;
        if dense[root] == 0 {
            sizes.push(0);
            dense[root] = (sizes.len() - 1) as u32;
        }
        *slot = dense[root];
        sizes[*slot as usize] += 1;
    }

    ComponentMap {
        height: h,
        width: w,
        labels,
        component_sizes: sizes,
    }
}

/// Mask holding exactly one 4-connected component: the ultrasound plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneMask(BinaryMask);

impl PlaneMask {
    pub fn into_inner(self) -> BinaryMask {
        self.0
    }

    /// Wraps a mask without re-checking connectivity. For masks the caller
    /// already knows to be a single component (e.g. synthetic renders).
    pub fn from_mask_unchecked(mask: BinaryMask) -> Self {
        Self(mask)
    }
}

impl Deref for PlaneMask {
    type Target = BinaryMask;
    fn deref(&self) -> &BinaryMask {
        &self.0
    }
}

/// Keeps the component with the most pixels; ties go to the smaller label.
pub fn largest_component(map: &ComponentMap) -> Result<PlaneMask> {
    let best = map
        .component_sizes
        .iter()
        .enumerate()
        .skip(1)
        .fold(None::<(usize, usize)>, |acc, (label, &size)| match acc {
            Some((_, best_size)) if best_size >= size => acc,
            _ => Some((label, size)),
        })
        .ok_or(Error::EmptyForeground)?
        .0 as u32;
    Ok(PlaneMask(BinaryMask {
        height: map.height,
        width: map.width,
        bits: map.labels.iter().map(|&l| l == best).collect(),
    }))
}

/// 3x3 morphological closing (dilate then erode). Pixels beyond the border
/// count as background for the dilation and foreground for the erosion, so
/// the result always contains the input.
pub fn close_3x3(mask: &BinaryMask) -> BinaryMask {
    let (h, w) = (mask.height as isize, mask.width as isize);
    let window = |m: &BinaryMask, r: usize, c: usize, outside: bool, all: bool| {
        let mut acc = all;
        for dr in -1..=1isize {
            for dc in -1..=1isize {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                let v = if rr < 0 || cc < 0 || rr >= h || cc >= w {
                    outside
                } else {
                    m.get(rr as usize, cc as usize)
                };
                if all {
                    acc &= v;
                } else {
                    acc |= v;
                }
            }
        }
        acc
    };
    let dilated = BinaryMask::from_fn(mask.height, mask.width, |r, c| window(mask, r, c, false, false));
    BinaryMask::from_fn(mask.height, mask.width, |r, c| window(&dilated, r, c, true, true))
}

/// Result of the masking stage.
#[derive(Debug, Clone)]
pub struct MaskingOutput {
    pub bg_max: u8,
    pub plane: PlaneMask,
}

/// Histogram, spike threshold, binarisation and largest-component selection
/// in one call. `closing` applies [`close_3x3`] to the selected plane.
pub fn extract_plane(gray: &GrayImage, closing: bool) -> Result<MaskingOutput> {
    let hist = intensity_histogram(gray);
    let z = z_scores(&hist)?;
    let bg_max = background_max(&z).min(255) as u8;
    let binary = binarize(gray, bg_max);
    let mut plane = largest_component(&connected_components(&binary))?;
    if closing {
        plane = PlaneMask(close_3x3(&plane));
    }
    Ok(MaskingOutput { bg_max, plane })
}
