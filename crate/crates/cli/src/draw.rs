//! Minimal raster drawing for overlays and the symmetry plot.

use annulus_scan::raster::{Point, RgbImage};
use annulus_scan::Raster;

pub type Rgb = [u8; 3];

pub const GREEN: Rgb = [40, 220, 70];
pub const PURPLE: Rgb = [170, 60, 230];
pub const BLUE: Rgb = [40, 120, 255];
pub const ORANGE: Rgb = [255, 150, 20];
pub const YELLOW: Rgb = [250, 230, 40];
pub const RED: Rgb = [240, 40, 40];
pub const WHITE: Rgb = [255, 255, 255];

pub struct Canvas {
    pub img: RgbImage,
}

impl Canvas {
    pub fn new(img: RgbImage) -> Self {
        Self { img }
    }

    pub fn put(&mut self, row: i64, col: i64, color: Rgb) {
        if row >= 0 && col >= 0 && (row as usize) < self.img.height() && (col as usize) < self.img.width() {
            self.img.put(row as usize, col as usize, color);
        }
    }

    /// Straight segment by uniform stepping; pixels off the canvas are skipped.
    pub fn line(&mut self, a: Point, b: Point, color: Rgb) {
        if !a.is_finite() || !b.is_finite() {
            return;
        }
        let steps = (b.row - a.row).abs().max((b.col - a.col).abs()).ceil().min(1e5) as i64;
        for k in 0..=steps.max(1) {
            let t = k as f64 / steps.max(1) as f64;
            let r = a.row + t * (b.row - a.row);
            let c = a.col + t * (b.col - a.col);
            self.put(r.round() as i64, c.round() as i64, color);
        }
    }

    pub fn cross(&mut self, p: Point, arm: i64, color: Rgb) {
        let (r, c) = (p.row.round() as i64, p.col.round() as i64);
        for d in -arm..=arm {
            for w in -1..=1 {
                self.put(r + d, c + w, color);
                self.put(r + w, c + d, color);
            }
        }
    }

    pub fn dot(&mut self, p: Point, color: Rgb) {
        self.put(p.row.round() as i64, p.col.round() as i64, color);
    }

    pub fn polyline(&mut self, points: &[Point], color: Rgb) {
        for pair in points.windows(2) {
            self.line(pair[0], pair[1], color);
        }
    }
}
