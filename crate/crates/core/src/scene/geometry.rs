use super::config::Point2;

/// Interval `[lo, hi]` on the obstacle track line covered by the LOS
/// corridor between `tx` and `rx`, or `None` when the LOS segment does not
/// cross the track.
pub fn corridor_on_track(tx: Point2, rx: Point2, track_y: f64, corridor_m: f64) -> Option<(f64, f64)> {
    let dy = rx.y - tx.y;
    if dy == 0.0 {
        return None;
    }
    let s = (track_y - tx.y) / dy;
    if !(0.0..=1.0).contains(&s) {
        return None;
    }
    let dx = rx.x - tx.x;
    let cross_x = tx.x + s * dx;
    let len = (dx * dx + dy * dy).sqrt();
    // Half-length of the corridor cross-section measured along the track.
    let half = 0.5 * corridor_m * len / dy.abs();
    Some((cross_x - half, cross_x + half))
}

/// Fraction of `[lo, hi]` covered by the obstacle footprint
/// `[center - width/2, center + width/2]`.
pub fn covered_fraction(corridor: (f64, f64), center: f64, width: f64) -> f64 {
    let (lo, hi) = corridor;
    let a = (center - 0.5 * width).max(lo);
    let b = (center + 0.5 * width).min(hi);
    if b <= a {
        0.0
    } else {
        ((b - a) / (hi - lo)).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perpendicular_corridor_is_centered_on_crossing() {
        let (lo, hi) = corridor_on_track(Point2::new(1.0, 0.0), Point2::new(1.0, 4.0), 2.0, 0.6).unwrap();
        assert!((lo - 0.7).abs() < 1e-12 && (hi - 1.3).abs() < 1e-12);
    }

    #[test]
    fn slanted_corridor_widens_along_track() {
        // 45 degree LOS: cross-section along the track is corridor * sqrt(2).
        let (lo, hi) = corridor_on_track(Point2::new(0.0, 0.0), Point2::new(4.0, 4.0), 2.0, 1.0).unwrap();
        assert!((hi - lo - 2f64.sqrt()).abs() < 1e-12);
        assert!(((lo + hi) / 2.0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn track_outside_segment_never_blocks() {
        assert!(corridor_on_track(Point2::new(0.0, 0.0), Point2::new(0.0, 4.0), 5.0, 0.5).is_none());
        assert!(corridor_on_track(Point2::new(0.0, 1.0), Point2::new(3.0, 1.0), 1.0, 0.5).is_none());
    }

    #[test]
    fn coverage_limits() {
        assert_eq!(covered_fraction((0.0, 1.0), 10.0, 0.9), 0.0);
        assert_eq!(covered_fraction((0.0, 1.0), 0.5, 2.0), 1.0);
        assert!((covered_fraction((0.0, 1.0), 0.0, 1.0) - 0.5).abs() < 1e-15);
    }
}
