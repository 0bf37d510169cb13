//! Annulus-sector assembly: origin from the two radial boundaries, aperture
//! angle, radii, and the end-to-end extraction pipeline.

use serde::{Deserialize, Serialize};

use crate::boundaries::{detect_boundaries, BoundaryAnalysis, RadialBoundary, RansacParams};
use crate::error::{Error, Result};
use crate::masking::{extract_plane, PlaneMask};
use crate::raster::{to_grayscale, GrayImage, Point, Raster, RgbImage};
use crate::symmetry::{arc_points, locate_axis, ArcPoints, SymmetryResult};

/// `a x + b y = c_neg` in Cartesian `(x = col, y = row)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineCoefficients {
    pub a: f64,
    pub b: f64,
    pub c_neg: f64,
}

impl LineCoefficients {
    /// Signed residual of the line equation at `p`.
    pub fn residual(&self, p: &Point) -> f64 {
        self.a * p.col + self.b * p.row - self.c_neg
    }
}

pub fn line_coefficients(rb: &RadialBoundary) -> Result<LineCoefficients> {
    let (x1, y1) = (rb.top.col, rb.top.row);
    let (x2, y2) = (rb.bottom.col, rb.bottom.row);
    let a = y1 - y2;
    let b = x2 - x1;
    if a == 0.0 && b == 0.0 {
        return Err(Error::ZeroLengthSegment);
    }
    let c = x1 * y2 - x2 * y1;
    Ok(LineCoefficients { a, b, c_neg: -c })
}

/// Cramer's rule. Lines whose normals are within `1e-9` (as the sine of the
/// angle between them) of parallel are rejected.
pub fn intersect(l: &LineCoefficients, r: &LineCoefficients) -> Result<Point> {
    let d = l.a * r.b - l.b * r.a;
    let scale = l.a.hypot(l.b) * r.a.hypot(r.b);
    if scale == 0.0 || (d / scale).abs() <= 1e-9 {
        return Err(Error::ParallelBoundaries);
    }
    let dx = l.c_neg * r.b - l.b * r.c_neg;
    let dy = l.a * r.c_neg - l.c_neg * r.a;
    Ok(Point::new(dy / d, dx / d))
}

/// Angle between the rays from `origin` to the two bottom endpoints.
pub fn aperture_angle(left: &RadialBoundary, right: &RadialBoundary, origin: &Point) -> Result<f64> {
    let (ax, ay) = (left.bottom.col - origin.col, left.bottom.row - origin.row);
    let (cx, cy) = (right.bottom.col - origin.col, right.bottom.row - origin.row);
    let (na, nc) = (ax.hypot(ay), cx.hypot(cy));
    if na == 0.0 || nc == 0.0 {
        return Err(Error::DegenerateRay);
    }
    Ok(((ax * cx + ay * cy) / (na * nc)).clamp(-1.0, 1.0).acos())
}

pub fn radii(arcs: &ArcPoints, origin: &Point) -> (f64, f64) {
    (arcs.arc_inner.distance(origin), arcs.arc_outer.distance(origin))
}

pub const KEYPOINT_NAMES: [&str; 7] = [
    "arc_inner",
    "arc_outer",
    "legs_l_top",
    "legs_l_bottom",
    "legs_r_top",
    "legs_r_bottom",
    "origin",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoints {
    pub arc_inner: Point,
    pub arc_outer: Point,
    pub legs_l_top: Point,
    pub legs_l_bottom: Point,
    pub legs_r_top: Point,
    pub legs_r_bottom: Point,
    pub origin: Point,
}

impl Keypoints {
    /// The seven points in [`KEYPOINT_NAMES`] order.
    pub fn as_array(&self) -> [Point; 7] {
        [
            self.arc_inner,
            self.arc_outer,
            self.legs_l_top,
            self.legs_l_bottom,
            self.legs_r_top,
            self.legs_r_bottom,
            self.origin,
        ]
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, Point)> {
        KEYPOINT_NAMES.into_iter().zip(self.as_array())
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Keypoints {
        Keypoints {
            arc_inner: f(self.arc_inner),
            arc_outer: f(self.arc_outer),
            legs_l_top: f(self.legs_l_top),
            legs_l_bottom: f(self.legs_l_bottom),
            legs_r_top: f(self.legs_r_top),
            legs_r_bottom: f(self.legs_r_bottom),
            origin: f(self.origin),
        }
    }
}

/// Geometry of a convex field of view. Ray angles follow the image
/// convention `col = O.col + r cos(a)`, `row = O.row + r sin(a)`, so the
/// symmetry axis points straight down at `a = pi/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSector {
    pub origin: Point,
    /// Aperture, radians.
    pub theta: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    pub axis_col: f64,
    pub keypoints: Keypoints,
    /// `(height, width)` of the image the sector belongs to.
    pub source_dims: (usize, usize),
    pub cropped_top: bool,
}

impl AnnulusSector {
    /// A perfectly symmetric sector with analytic key points.
    pub fn from_geometry(origin: Point, theta: f64, r_inner: f64, r_outer: f64, source_dims: (usize, usize)) -> Self {
        let at = |r: f64, a: f64| Point::new(origin.row + r * a.sin(), origin.col + r * a.cos());
        let (a_left, a_right) = (
            std::f64::consts::FRAC_PI_2 + theta / 2.0,
            std::f64::consts::FRAC_PI_2 - theta / 2.0,
        );
        Self {
            origin,
            theta,
            r_inner,
            r_outer,
            axis_col: origin.col,
            keypoints: Keypoints {
                arc_inner: Point::new(origin.row + r_inner, origin.col),
                arc_outer: Point::new(origin.row + r_outer, origin.col),
                legs_l_top: at(r_inner, a_left),
                legs_l_bottom: at(r_outer, a_left),
                legs_r_top: at(r_inner, a_right),
                legs_r_bottom: at(r_outer, a_right),
                origin,
            },
            source_dims,
            cropped_top: false,
        }
    }

    /// First and last ray angle of the fan, `pi/2 -+ theta/2`.
    pub fn angle_range(&self) -> (f64, f64) {
        (
            std::f64::consts::FRAC_PI_2 - self.theta / 2.0,
            std::f64::consts::FRAC_PI_2 + self.theta / 2.0,
        )
    }

    /// Polar coordinates `(radius, angle)` of `p` about the origin.
    pub fn polar(&self, p: &Point) -> (f64, f64) {
        let (dr, dc) = (p.row - self.origin.row, p.col - self.origin.col);
        (dr.hypot(dc), dr.atan2(dc))
    }

    pub fn contains(&self, p: &Point) -> bool {
        let (r, a) = self.polar(p);
        let (lo, hi) = self.angle_range();
        r >= self.r_inner && r <= self.r_outer && a >= lo && a <= hi
    }

    pub fn theta_degrees(&self) -> f64 {
        self.theta.to_degrees()
    }

    pub fn area(&self) -> f64 {
        self.theta * (self.r_outer * self.r_outer - self.r_inner * self.r_inner) / 2.0
    }

    fn validate(&self) -> Result<()> {
        let deg = self.theta.to_degrees();
        if !(deg > 1.0 && deg < 179.0) {
            return Err(Error::NotConvex(format!("aperture {deg:.2} deg outside (1, 179)")));
        }
        if !(self.r_inner >= 0.0 && self.r_inner < self.r_outer) {
            return Err(Error::NotConvex(format!(
                "radii {:.2}/{:.2} are not ordered",
                self.r_inner, self.r_outer
            )));
        }
        if self.origin.row >= self.keypoints.arc_inner.row {
            return Err(Error::NotConvex("boundaries converge below the inner arc".into()));
        }
        if !self.keypoints.as_array().iter().all(Point::is_finite) {
            return Err(Error::NotConvex("non-finite key point".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub ransac: RansacParams,
    /// Apply a 3x3 morphological closing to the plane mask.
    pub closing: bool,
}

/// The extracted sector together with every intermediate result.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub sector: AnnulusSector,
    pub bg_max: u8,
    pub plane: PlaneMask,
    pub symmetry: SymmetryResult,
    pub arcs: ArcPoints,
    pub boundaries: BoundaryAnalysis,
}

pub fn extract(img: &RgbImage, config: &ExtractConfig) -> Result<Extraction> {
    extract_gray(&to_grayscale(img), config)
}

pub fn extract_gray(gray: &GrayImage, config: &ExtractConfig) -> Result<Extraction> {
    let masked = extract_plane(gray, config.closing)?;
    let plane = masked.plane;
    let symmetry = locate_axis(&plane)?;
    let m = symmetry.m;
    let arcs = arc_points(&plane, m)?;
    let boundaries = detect_boundaries(&plane, m, &config.ransac)?;
    let left = boundaries.corrected.left;
    let right = boundaries.corrected.right;

    let origin = match intersect(&line_coefficients(&left)?, &line_coefficients(&right)?) {
        Ok(o) => o,
        Err(Error::ParallelBoundaries) => return Err(Error::NotConvex("radial boundaries are parallel".into())),
        Err(e) => return Err(e),
    };
    let theta = aperture_angle(&left, &right, &origin)?;
    let (r_inner, r_outer) = radii(&arcs, &origin);

    let sector = AnnulusSector {
        origin,
        theta,
        r_inner,
        r_outer,
        axis_col: m,
        keypoints: Keypoints {
            arc_inner: arcs.arc_inner,
            arc_outer: arcs.arc_outer,
            legs_l_top: left.top,
            legs_l_bottom: left.bottom,
            legs_r_top: right.top,
            legs_r_bottom: right.bottom,
            origin,
        },
        source_dims: gray.dims(),
        cropped_top: symmetry.cropped_top,
    };
    sector.validate()?;
    Ok(Extraction {
        sector,
        bg_max: masked.bg_max,
        plane,
        symmetry,
        arcs,
        boundaries,
    })
}
