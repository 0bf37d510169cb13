//! Radial boundary (leg) detection: outermost edge points per row, convex
//! hull truncation at the leg/outer-arc vertex, RANSAC line fits, and the
//! symmetric correction that mirrors the better-fitting leg.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::BinaryMask;
use crate::raster::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// At most one point per row, ordered by increasing row.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSet {
    pub side: Side,
    pub points: Vec<Point>,
}

impl EdgeSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn row_span(&self) -> Option<(f64, f64)> {
        let first = self.points.iter().map(|p| p.row).fold(f64::INFINITY, f64::min);
        let last = self.points.iter().map(|p| p.row).fold(f64::NEG_INFINITY, f64::max);
        (first <= last).then_some((first, last))
    }
}

/// Leftmost plane column in `[0, ceil(m) - 1]` and rightmost in
/// `[floor(m) + 1, w - 1]` for every row.
pub fn extract_edges(plane: &BinaryMask, m: f64) -> (EdgeSet, EdgeSet) {
    let w = plane.width() as i64;
    let left_end = (m.ceil() as i64 - 1).min(w - 1);
    let right_start = (m.floor() as i64 + 1).max(0);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for row in 0..plane.height() {
        if left_end >= 0 {
            if let Some(c) = (0..=left_end as usize).find(|&c| plane.get(row, c)) {
                left.push(Point::new(row as f64, c as f64));
            }
        }
        if right_start < w {
            if let Some(c) = (right_start as usize..w as usize).rev().find(|&c| plane.get(row, c)) {
                right.push(Point::new(row as f64, c as f64));
            }
        }
    }
    (
        EdgeSet {
            side: Side::Left,
            points: left,
        },
        EdgeSet {
            side: Side::Right,
            points: right,
        },
    )
}

fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.col - o.col) * (b.row - o.row) - (a.row - o.row) * (b.col - o.col)
}

/// Andrew's monotone chain. Collinear points are dropped, so the result has
/// fewer than three vertices exactly when the input is collinear.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.col.total_cmp(&b.col).then(a.row.total_cmp(&b.row)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Keeps the leg part of an edge set: points at or above the hull vertex
/// that sticks out furthest sideways (leftmost for the left side, rightmost
/// for the right side; the lowest such vertex on ties). Collinear or tiny
/// inputs pass through unchanged.
pub fn truncate_at_vertices(edges: &EdgeSet) -> EdgeSet {
    if edges.len() < 3 {
        return edges.clone();
    }
    let hull = convex_hull(&edges.points);
    if hull.len() < 3 {
        return edges.clone();
    }
    let outward = |p: &Point| match edges.side {
        Side::Left => -p.col,
        Side::Right => p.col,
    };
    let vertex = hull
        .iter()
        .max_by(|a, b| outward(a).total_cmp(&outward(b)).then(a.row.total_cmp(&b.row)))
        .expect("hull is nonempty");
    EdgeSet {
        side: edges.side,
        points: edges.points.iter().filter(|p| p.row <= vertex.row).copied().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacParams {
    /// Maximum perpendicular distance, in pixels, for a point to count as an inlier.
    pub inlier_threshold: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            inlier_threshold: 2.0,
            iterations: 1000,
            seed: 7,
        }
    }
}

/// `col = slope * row + intercept`. Legs are near-vertical, so rows are the
/// abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Mean absolute perpendicular distance of the consensus set, pixels.
    pub residual: f64,
    pub inlier_count: usize,
    pub seed: u64,
}

impl LineFit {
    pub fn col_at(&self, row: f64) -> f64 {
        self.slope * row + self.intercept
    }

    pub fn distance(&self, p: &Point) -> f64 {
        perpendicular_distance(self.slope, self.intercept, p)
    }

    /// Angle of the line from the downward vertical, radians; positive when
    /// the column grows with the row.
    pub fn angle_from_vertical(&self) -> f64 {
        self.slope.atan()
    }

    /// The same line moved `dcol` pixels along the column axis.
    pub fn shifted(&self, dcol: f64) -> LineFit {
        LineFit {
            intercept: self.intercept + dcol,
            ..*self
        }
    }
}

fn perpendicular_distance(slope: f64, intercept: f64, p: &Point) -> f64 {
    (slope * p.row + intercept - p.col).abs() / (1.0 + slope * slope).sqrt()
}

fn least_squares(points: &[Point]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    let mean_r = points.iter().map(|p| p.row).sum::<f64>() / n;
    let mean_c = points.iter().map(|p| p.col).sum::<f64>() / n;
    let (mut srr, mut src) = (0.0, 0.0);
    for p in points {
        let dr = p.row - mean_r;
        srr += dr * dr;
        src += dr * (p.col - mean_c);
    }
    if srr == 0.0 {
        return None;
    }
    let slope = src / srr;
    Some((slope, mean_c - slope * mean_r))
}

/// RANSAC over two-point line hypotheses followed by a least-squares refit
/// on the best consensus set. Deterministic for a given seed.
pub fn fit_line_ransac(points: &[Point], params: &RansacParams) -> Result<LineFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let inliers_of = |slope: f64, intercept: f64| -> Vec<usize> {
        (0..n)
            .filter(|&k| perpendicular_distance(slope, intercept, &points[k]) <= params.inlier_threshold)
            .collect()
    };

    let mut best: Option<((f64, f64), Vec<usize>)> = None;
    let iterations = if n == 2 { 1 } else { params.iterations.max(1) };
    for _ in 0..iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (p, q) = (points[i], points[j]);
        if p.row == q.row {
            continue;
        }
        let slope = (q.col - p.col) / (q.row - p.row);
        let intercept = p.col - slope * p.row;
        let inliers = inliers_of(slope, intercept);
        if best.as_ref().is_none_or(|(_, b)| inliers.len() > b.len()) {
            best = Some(((slope, intercept), inliers));
        }
    }
    let ((mut slope, mut intercept), consensus) = best.ok_or(Error::TooFewPoints { needed: 2, got: 1 })?;
    let members: Vec<Point> = consensus.iter().map(|&k| points[k]).collect();
    if let Some((s, b)) = least_squares(&members) {
        slope = s;
        intercept = b;
    }
    let residual = members
        .iter()
        .map(|p| perpendicular_distance(slope, intercept, p))
        .sum::<f64>()
        / members.len() as f64;
    Ok(LineFit {
        slope,
        intercept,
        residual,
        inlier_count: members.len(),
        seed: params.seed,
    })
}

pub fn ransac_line(edges: &EdgeSet, params: &RansacParams) -> Result<LineFit> {
    fit_line_ransac(&edges.points, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBoundary {
    pub top: Point,
    pub bottom: Point,
}

impl RadialBoundary {
    pub fn mirror(&self, axis_col: f64) -> RadialBoundary {
        RadialBoundary {
            top: self.top.mirror_col(axis_col),
            bottom: self.bottom.mirror_col(axis_col),
        }
    }
}

/// The fitted line evaluated at the first and last row of the edge set.
pub fn boundary_segment(fit: &LineFit, edges: &EdgeSet) -> Result<RadialBoundary> {
    let (first, last) = edges.row_span().ok_or(Error::TooFewPoints { needed: 1, got: 0 })?;
    Ok(RadialBoundary {
        top: Point::new(first, fit.col_at(first)),
        bottom: Point::new(last, fit.col_at(last)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedBoundaries {
    pub left: RadialBoundary,
    pub right: RadialBoundary,
    /// The side that was replaced by the mirror of the other, if any.
    pub replaced: Option<Side>,
}

/// Replaces the leg with the strictly larger residual by the mirror image of
/// the other leg about `col = axis_col`.
pub fn symmetric_correction(
    left: RadialBoundary,
    right: RadialBoundary,
    residual_l: f64,
    residual_r: f64,
    axis_col: f64,
) -> CorrectedBoundaries {
    if residual_r < residual_l {
        CorrectedBoundaries {
            left: right.mirror(axis_col),
            right,
            replaced: Some(Side::Left),
        }
    } else if residual_r > residual_l {
        CorrectedBoundaries {
            left,
            right: left.mirror(axis_col),
            replaced: Some(Side::Right),
        }
    } else {
        CorrectedBoundaries {
            left,
            right,
            replaced: None,
        }
    }
}

/// Every intermediate of the boundary stage, kept for overlays.
#[derive(Debug, Clone)]
pub struct BoundaryAnalysis {
    pub raw_left: EdgeSet,
    pub raw_right: EdgeSet,
    pub left: EdgeSet,
    pub right: EdgeSet,
    pub fit_left: LineFit,
    pub fit_right: LineFit,
    pub uncorrected_left: RadialBoundary,
    pub uncorrected_right: RadialBoundary,
    pub corrected: CorrectedBoundaries,
}

pub fn detect_boundaries(plane: &BinaryMask, m: f64, params: &RansacParams) -> Result<BoundaryAnalysis> {
    let (raw_left, raw_right) = extract_edges(plane, m);
    let left = truncate_at_vertices(&raw_left);
    let right = truncate_at_vertices(&raw_right);
    // Edge points are the centres of the outermost plane pixels; the boundary
    // between plane and background lies half a pixel further out.
    let fit_left = ransac_line(&left, params)?.shifted(-0.5);
    let fit_right = ransac_line(&right, params)?.shifted(0.5);
    let uncorrected_left = boundary_segment(&fit_left, &left)?;
    let uncorrected_right = boundary_segment(&fit_right, &right)?;
    let corrected = symmetric_correction(
        uncorrected_left,
        uncorrected_right,
        fit_left.residual,
        fit_right.residual,
        m,
    );
    Ok(BoundaryAnalysis {
        raw_left,
        raw_right,
        left,
        right,
        fit_left,
        fit_right,
        uncorrected_left,
        uncorrected_right,
        corrected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn edge_set(side: Side, pts: &[(f64, f64)]) -> EdgeSet {
        EdgeSet {
            side,
            points: pts.iter().map(|&(r, c)| Point::new(r, c)).collect(),
        }
    }

    #[test]
    fn rectangle_edges_are_constant() {
        let mask = BinaryMask::from_fn(30, 40, |r, c| (5..25).contains(&r) && (10..=20).contains(&c));
        let (l, r) = extract_edges(&mask, 15.0);
        assert_eq!(l.len(), 20);
        assert!(l.points.iter().all(|p| p.col == 10.0));
        assert!(r.points.iter().all(|p| p.col == 20.0));
        assert_eq!(l.points[0].row, 5.0);
    }

    #[test]
    fn single_column_at_axis_has_no_edges() {
        let mask = BinaryMask::from_fn(10, 9, |_, c| c == 4);
        let (l, r) = extract_edges(&mask, 4.0);
        assert!(l.is_empty() && r.is_empty());
    }

    #[test]
    fn half_integer_axis_splits_columns() {
        let mask = BinaryMask::from_fn(3, 10, |_, c| c == 4 || c == 5);
        let (l, r) = extract_edges(&mask, 4.5);
        assert!(l.points.iter().all(|p| p.col == 4.0));
        assert!(r.points.iter().all(|p| p.col == 5.0));
    }

    #[test]
    fn hull_of_square_with_interior() {
        let pts: Vec<Point> = [(0., 0.), (0., 4.), (4., 4.), (4., 0.), (2., 2.), (0., 2.)]
            .iter()
            .map(|&(r, c)| Point::new(r, c))
            .collect();
        assert_eq!(convex_hull(&pts).len(), 4);
    }

    #[test]
    fn l_shape_loses_its_arc() {
        // leg going down-left to (20, 0), then an arc-like return to the right
        let mut pts: Vec<(f64, f64)> = (0..=20).map(|r| (r as f64, 10.0 - r as f64 / 2.0)).collect();
        pts.extend((21..=30).map(|r| (r as f64, (r - 20) as f64 * 1.5)));
        let kept = truncate_at_vertices(&edge_set(Side::Left, &pts));
        assert_eq!(kept.len(), 21);
        assert_eq!(kept.points.last().unwrap().row, 20.0);

        let mirrored: Vec<(f64, f64)> = pts.iter().map(|&(r, c)| (r, 100.0 - c)).collect();
        let kept = truncate_at_vertices(&edge_set(Side::Right, &mirrored));
        assert_eq!(kept.len(), 21);
    }

    #[test]
    fn straight_leg_is_unchanged() {
        let pts: Vec<(f64, f64)> = (0..40).map(|r| (r as f64, 50.0 - r as f64 * 0.4)).collect();
        let edges = edge_set(Side::Left, &pts);
        assert_eq!(truncate_at_vertices(&edges), edges);
        let vertical: Vec<(f64, f64)> = (0..40).map(|r| (r as f64, 5.0)).collect();
        let edges = edge_set(Side::Left, &vertical);
        assert_eq!(truncate_at_vertices(&edges), edges);
    }

    #[test]
    fn noiseless_line_fits_exactly() {
        let pts: Vec<Point> = (0..50).map(|r| Point::new(r as f64, 3.0 + 0.25 * r as f64)).collect();
        let fit = fit_line_ransac(&pts, &RansacParams::default()).unwrap();
        assert!(fit.residual < 1e-9);
        assert!((fit.slope - 0.25).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-9);
        assert_eq!(fit.inlier_count, 50);
    }

    #[test]
    fn gross_outliers_are_rejected() {
        let (slope, intercept) = (-0.6, 120.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let mut pts = Vec::new();
        for r in 0..200 {
            let row = r as f64;
            let mut col = slope * row + intercept + noise.sample(&mut rng);
            if r % 5 == 0 {
                col += 40.0;
            }
            pts.push(Point::new(row, col));
        }
        // independent oracle: least squares on the known-good points
        let clean: Vec<Point> = pts
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 5 != 0)
            .map(|(_, p)| *p)
            .collect();
        let (os, oi) = least_squares(&clean).unwrap();
        let fit = fit_line_ransac(&pts, &RansacParams::default()).unwrap();
        for row in [0.0, 100.0, 199.0] {
            let truth = slope * row + intercept;
            assert!((fit.col_at(row) - truth).abs() < 0.5);
            assert!((fit.col_at(row) - (os * row + oi)).abs() < 0.05);
        }
        assert_eq!(fit.inlier_count, 160);
    }

    #[test]
    fn single_point_is_too_few() {
        assert!(matches!(
            fit_line_ransac(&[Point::new(1.0, 1.0)], &RansacParams::default()),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let pts: Vec<Point> = (0..80)
            .map(|r| Point::new(r as f64, ((r * 37) % 11) as f64 + 0.1 * r as f64))
            .collect();
        let params = RansacParams {
            seed: 1234,
            ..Default::default()
        };
        let a = fit_line_ransac(&pts, &params).unwrap();
        let b = fit_line_ransac(&pts, &params).unwrap();
        assert_eq!(a.slope.to_bits(), b.slope.to_bits());
        assert_eq!(a.intercept.to_bits(), b.intercept.to_bits());
        assert_eq!(a.seed, 1234);
    }

    #[test]
    fn segment_spans_edge_rows() {
        let fit = LineFit {
            slope: -0.5,
            intercept: 100.0,
            residual: 0.0,
            inlier_count: 2,
            seed: 0,
        };
        let edges = edge_set(Side::Left, &[(5.0, 97.0), (40.0, 80.0), (100.0, 50.0)]);
        let rb = boundary_segment(&fit, &edges).unwrap();
        assert_eq!(rb.top, Point::new(5.0, 97.5));
        assert_eq!(rb.bottom, Point::new(100.0, 50.0));
    }

    fn rb(t: (f64, f64), b: (f64, f64)) -> RadialBoundary {
        RadialBoundary {
            top: Point::new(t.0, t.1),
            bottom: Point::new(b.0, b.1),
        }
    }

    #[test]
    fn worse_right_leg_is_replaced() {
        let l = rb((10.0, 90.0), (200.0, 20.0));
        let r = rb((12.0, 115.0), (190.0, 170.0));
        let out = symmetric_correction(l, r, 0.2, 3.0, 100.0);
        assert_eq!(out.replaced, Some(Side::Right));
        assert_eq!(out.left, l);
        assert_eq!(out.right, rb((10.0, 110.0), (200.0, 180.0)));
        let gap = (100.0 - out.left.bottom.col) - (out.right.bottom.col - 100.0);
        assert!(gap.abs() <= 1e-6);

        let out = symmetric_correction(l, r, 3.0, 0.2, 100.0);
        assert_eq!(out.replaced, Some(Side::Left));
        assert_eq!(out.left, r.mirror(100.0));
    }

    #[test]
    fn equal_residuals_change_nothing() {
        let l = rb((10.0, 90.0), (200.0, 20.0));
        let r = rb((12.0, 115.0), (190.0, 170.0));
        let out = symmetric_correction(l, r, 1.0, 1.0, 100.0);
        assert_eq!((out.left, out.right, out.replaced), (l, r, None));
    }

    proptest! {
        #[test]
        fn mirroring_twice_is_identity(r0 in -500.0f64..500.0, c0 in -500.0f64..500.0, r1 in -500.0f64..500.0, c1 in -500.0f64..500.0, axis in -300.0f64..900.0) {
            let b = rb((r0, c0), (r1, c1));
            let back = b.mirror(axis).mirror(axis);
            prop_assert!((back.top.col - c0).abs() < 1e-9 && (back.bottom.col - c1).abs() < 1e-9);
            prop_assert_eq!(back.top.row, r0);
        }
    }
}
