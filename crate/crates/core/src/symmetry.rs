//! Vertical axis of symmetry and the arc key points along it.
//!
//! The top half of the plane mask is accumulated column-wise into a
//! nonpositive profile `S`. For an uncropped sector `S` has a local maximum
//! over the inner-arc hole flanked by minima at the two top corners; the
//! axis is the average of the profile's trapezoid centroid and the midpoint
//! of those minima. When row 0 already contains the plane (the top was
//! cropped away) the midpoint of the row-0 run is used instead.

use crate::error::{Error, Result};
use crate::masking::BinaryMask;
use crate::raster::Point;

const SMOOTHING_WIDTH: usize = 5;

/// Smoothed accumulated row difference, one nonpositive entry per column.
#[derive(Debug, Clone, PartialEq)]
pub struct RowAccumulation {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryResult {
    /// Axis column.
    pub m: f64,
    /// Centroid estimate before averaging with the minima midpoint.
    pub m_hat: f64,
    pub min_l: usize,
    pub min_r: usize,
    pub cropped_top: bool,
    /// The profile the axis was computed from; absent on the cropped path.
    pub profile: Option<RowAccumulation>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcPoints {
    pub arc_inner: Point,
    pub arc_outer: Point,
}

/// `-(column sums over the first h/2 rows)`, then a width-5 moving average
/// with replicated edges.
pub fn accumulate_rows(plane: &BinaryMask) -> RowAccumulation {
    let (h, w) = (plane.height(), plane.width());
    let mut raw = vec![0.0f64; w];
    for row in 0..h / 2 {
        for (col, acc) in raw.iter_mut().enumerate() {
            if plane.get(row, col) {
                *acc -= 1.0;
            }
        }
    }
    let half = (SMOOTHING_WIDTH / 2) as isize;
    let values = (0..w as isize)
        .map(|c| {
            (-half..=half)
                .map(|k| raw[(c + k).clamp(0, w as isize - 1) as usize])
                .sum::<f64>()
                / SMOOTHING_WIDTH as f64
        })
        .collect();
    RowAccumulation { values }
}

/// Trapezoid-rule weighted centroid over column pairs `(i, i+1)` for
/// `i = 1..=w-2`.
pub fn centroid(profile: &RowAccumulation) -> Result<f64> {
    let s = &profile.values;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..s.len().saturating_sub(1) {
        let (a, b) = (s[i], s[i + 1]);
        num += (i as f64 * a + (i + 1) as f64 * b) / 2.0;
        den += (a + b) / 2.0;
    }
    if den == 0.0 {
        return Err(Error::FlatAccumulation);
    }
    Ok(num / den)
}

fn argmin(values: &[f64], range: std::ops::RangeInclusive<usize>) -> usize {
    let start = *range.start();
    let mut best = start;
    for i in range {
        if values[i] < values[best] {
            best = i;
        }
    }
    best
}

/// Minima of the profile on either side of `m_hat`: over columns
/// `[1, floor(m_hat)]` and `[floor(m_hat) + 1, w - 1]`. Ties keep the first.
pub fn flanking_minima(profile: &RowAccumulation, m_hat: f64) -> Result<(usize, usize)> {
    let w = profile.values.len();
    if !m_hat.is_finite() || m_hat < 1.0 || m_hat.floor() as usize + 1 > w.saturating_sub(1) {
        return Err(Error::DegenerateAxis { m_hat });
    }
    let split = m_hat.floor() as usize;
    Ok((
        argmin(&profile.values, 1..=split),
        argmin(&profile.values, split + 1..=w - 1),
    ))
}

pub fn symmetry_axis(m_hat: f64, min_l: usize, min_r: usize) -> f64 {
    let (l, r) = (min_l as f64, min_r as f64);
    (m_hat + (0.5 * (r - l) + l)) / 2.0
}

/// Leftmost and rightmost foreground columns of row 0, if any.
fn top_row_extent(plane: &BinaryMask) -> Option<(usize, usize)> {
    let w = plane.width();
    let first = (0..w).find(|&c| plane.get(0, c))?;
    let last = (0..w).rev().find(|&c| plane.get(0, c))?;
    Some((first, last))
}

/// Axis of a plane whose top has been cropped: the midpoint of row 0's
/// foreground extent. `None` when row 0 is empty.
pub fn detect_cropped_top(plane: &BinaryMask) -> Option<f64> {
    top_row_extent(plane).map(|(l, r)| (l + r) as f64 / 2.0)
}

/// First and last plane rows along column `round(m)`.
pub fn arc_points(plane: &BinaryMask, m: f64) -> Result<ArcPoints> {
    let col = m.round() as i64;
    if col < 0 || col >= plane.width() as i64 {
        return Err(Error::AxisMissesPlane { col });
    }
    let c = col as usize;
    let first = (0..plane.height()).find(|&r| plane.get(r, c));
    let last = (0..plane.height()).rev().find(|&r| plane.get(r, c));
    match (first, last) {
        (Some(top), Some(bottom)) => Ok(ArcPoints {
            arc_inner: Point::new(top as f64, m),
            arc_outer: Point::new(bottom as f64, m),
        }),
        _ => Err(Error::AxisMissesPlane { col }),
    }
}

/// Runs either the cropped-top fallback or the profile path.
pub fn locate_axis(plane: &BinaryMask) -> Result<SymmetryResult> {
    if let Some((l, r)) = top_row_extent(plane) {
        let m = (l + r) as f64 / 2.0;
        return Ok(SymmetryResult {
            m,
            m_hat: m,
            min_l: l,
            min_r: r,
            cropped_top: true,
            profile: None,
        });
    }
    let profile = accumulate_rows(plane);
    let m_hat = centroid(&profile)?;
    let (min_l, min_r) = flanking_minima(&profile, m_hat)?;
    Ok(SymmetryResult {
        m: symmetry_axis(m_hat, min_l, min_r),
        m_hat,
        min_l,
        min_r,
        cropped_top: false,
        profile: Some(profile),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(values: &[f64]) -> RowAccumulation {
        RowAccumulation {
            values: values.to_vec(),
        }
    }

    #[test]
    fn empty_top_half_accumulates_to_zero() {
        let mut mask = BinaryMask::new(10, 8);
        for c in 0..8 {
            mask.set(7, c, true);
        }
        assert!(accumulate_rows(&mask).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_full_row_accumulates_to_minus_one() {
        let mut mask = BinaryMask::new(10, 8);
        for c in 0..8 {
            mask.set(2, c, true);
        }
        for v in accumulate_rows(&mask).values {
            assert!((v + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_replicates_edges() {
        let mut mask = BinaryMask::new(4, 6);
        mask.set(0, 0, true);
        let s = accumulate_rows(&mask).values;
        // column 0 sees itself three times (two replicated) out of five
        assert!((s[0] + 0.6).abs() < 1e-12);
        assert!((s[1] + 0.4).abs() < 1e-12);
        assert!((s[2] + 0.2).abs() < 1e-12);
        assert_eq!(s[3], 0.0);
    }

    #[test]
    fn centroid_of_equal_pair() {
        let mut v = vec![0.0; 20];
        v[7] = -3.0;
        v[8] = -3.0;
        assert!((centroid(&profile(&v)).unwrap() - 7.5).abs() < 1e-12);
    }

    #[test]
    fn centroid_of_symmetric_profile() {
        let v: Vec<f64> = (0..41).map(|i| -(20.0 - (i as f64 - 20.0).abs())).collect();
        let m = centroid(&profile(&v)).unwrap();
        assert!((m - 20.0).abs() <= 0.5, "{m}");
    }

    #[test]
    fn centroid_of_flat_profile_fails() {
        assert!(matches!(centroid(&profile(&[0.0; 9])), Err(Error::FlatAccumulation)));
    }

    #[test]
    fn flanking_minima_unique() {
        let v = [0.0, -1.0, -5.0, -2.0, -1.0, -2.0, -6.0, -1.0, 0.0];
        assert_eq!(flanking_minima(&profile(&v), 4.2).unwrap(), (2, 6));
    }

    #[test]
    fn flanking_minima_plateau_keeps_leftmost() {
        let v = [0.0, -5.0, -5.0, -1.0, -1.0, -7.0, -7.0, -7.0, 0.0];
        assert_eq!(flanking_minima(&profile(&v), 3.5).unwrap(), (1, 5));
    }

    #[test]
    fn flanking_minima_rejects_edge_centroid() {
        assert!(flanking_minima(&profile(&[-1.0; 5]), 4.0).is_err());
        assert!(flanking_minima(&profile(&[-1.0; 5]), 0.5).is_err());
    }

    #[test]
    fn axis_formula() {
        assert_eq!(symmetry_axis(100.0, 60, 140), 100.0);
        assert_eq!(symmetry_axis(90.0, 60, 140), 95.0);
    }

    #[test]
    fn cropped_top_detection() {
        let mut mask = BinaryMask::new(6, 10);
        assert_eq!(detect_cropped_top(&mask), None);
        for c in 2..=7 {
            mask.set(0, c, true);
        }
        assert_eq!(detect_cropped_top(&mask), Some(4.5));
        let full = BinaryMask::from_fn(6, 10, |_, _| true);
        assert_eq!(detect_cropped_top(&full), Some(4.5));
        let res = locate_axis(&full).unwrap();
        assert!(res.cropped_top && res.profile.is_none());
    }

    #[test]
    fn arc_points_along_column() {
        let mut mask = BinaryMask::new(220, 30);
        for r in 10..=200 {
            mask.set(r, 15, true);
        }
        let arcs = arc_points(&mask, 15.2).unwrap();
        assert_eq!(arcs.arc_inner, Point::new(10.0, 15.2));
        assert_eq!(arcs.arc_outer, Point::new(200.0, 15.2));
        assert!(matches!(arc_points(&mask, 3.0), Err(Error::AxisMissesPlane { col: 3 })));
        assert!(arc_points(&mask, -4.0).is_err());
    }
}
