use std::cmp::Ordering;

/// A rate pair in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
}

impl RatePoint {
    pub fn new(r1: f64, r2: f64) -> Self {
        Self {
            r1: r1.max(0.0),
            r2: r2.max(0.0),
        }
    }

    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.r1 * factor, self.r2 * factor)
    }
}

/// Convex, downward-closed region in the nonnegative quadrant, stored as
/// its upper-right boundary from `(0, r2_max)` to `(r1_max, 0)`.
///
/// The region is the convex hull of the origin and the vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRegion {
    vertices: Vec<RatePoint>,
}

fn cross(o: RatePoint, a: RatePoint, b: RatePoint) -> f64 {
    (a.r1 - o.r1) * (b.r2 - o.r2) - (a.r2 - o.r2) * (b.r1 - o.r1)
}

impl RateRegion {
    /// Hull of the rectangles `[0, p.r1] x [0, p.r2]` over all points.
    pub fn from_points(points: &[RatePoint]) -> Self {
        let r1_max = points.iter().map(|p| p.r1).fold(0.0, f64::max);
        let r2_max = points.iter().map(|p| p.r2).fold(0.0, f64::max);
        let mut pts: Vec<RatePoint> = points.to_vec();
        pts.push(RatePoint::new(0.0, r2_max));
        pts.push(RatePoint::new(r1_max, 0.0));
        pts.sort_by(|a, b| {
            a.r1.partial_cmp(&b.r1)
                .unwrap_or(Ordering::Equal)
                .then(b.r2.partial_cmp(&a.r2).unwrap_or(Ordering::Equal))
        });
        pts.dedup();

        // Upper hull (monotone chain); collinear points are dropped.
        let mut hull: Vec<RatePoint> = Vec::with_capacity(pts.len());
        for p in pts {
            while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        Self { vertices: hull }
    }

    pub fn vertices(&self) -> &[RatePoint] {
        &self.vertices
    }

    pub fn r1_max(&self) -> f64 {
        self.vertices.iter().map(|p| p.r1).fold(0.0, f64::max)
    }

    pub fn r2_max(&self) -> f64 {
        self.vertices.iter().map(|p| p.r2).fold(0.0, f64::max)
    }

    pub fn max_sum_rate(&self) -> f64 {
        self.vertices.iter().map(|p| p.sum()).fold(0.0, f64::max)
    }

    /// Signed distance of `p` to the region boundary, positive inside.
    pub fn depth(&self, p: RatePoint) -> f64 {
        let mut d =
            p.r1.min(p.r2)
                .min(self.r1_max() - p.r1)
                .min(self.r2_max() - p.r2);
        for w in self.vertices.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = ((b.r1 - a.r1).powi(2) + (b.r2 - a.r2).powi(2)).sqrt();
            if len == 0.0 {
                continue;
            }
            d = d.min(-cross(a, b, p) / len);
        }
        d
    }

    /// Whether `p` lies in the region enlarged by `margin`.
    pub fn contains(&self, p: RatePoint, margin: f64) -> bool {
        self.depth(p) >= -margin
    }

    /// Whether every vertex of `other` lies in this region up to `slack`.
    pub fn contains_region(&self, other: &RateRegion, slack: f64) -> bool {
        other.vertices.iter().all(|&v| self.contains(v, slack))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_pentagon_corners() {
        let r = RateRegion::from_points(&[RatePoint::new(1.0, 0.5), RatePoint::new(0.5, 1.0)]);
        let v: Vec<(f64, f64)> = r.vertices().iter().map(|p| (p.r1, p.r2)).collect();
        assert_eq!(v, vec![(0.0, 1.0), (0.5, 1.0), (1.0, 0.5), (1.0, 0.0)]);
        assert!(r.contains(RatePoint::new(0.75, 0.75), 0.0));
        assert!(!r.contains(RatePoint::new(0.8, 0.8), 1e-9));
        assert!((r.max_sum_rate() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn interior_points_are_dropped() {
        let r = RateRegion::from_points(&[
            RatePoint::new(1.0, 0.0),
            RatePoint::new(0.0, 1.0),
            RatePoint::new(0.4, 0.4),
            RatePoint::new(0.5, 0.5),
        ]);
        assert_eq!(r.vertices().len(), 2);
        assert!(r.contains(RatePoint::new(0.5, 0.5), 1e-12));
    }

    #[test]
    fn degenerate_regions() {
        let origin = RateRegion::from_points(&[]);
        assert!(origin.contains(RatePoint::new(0.0, 0.0), 0.0));
        assert!(!origin.contains(RatePoint::new(0.1, 0.0), 1e-9));

        let seg = RateRegion::from_points(&[RatePoint::new(0.7, 0.0)]);
        assert!(seg.contains(RatePoint::new(0.7, 0.0), 1e-12));
        assert!(!seg.contains(RatePoint::new(0.7, 0.01), 1e-9));
        assert!(!seg.contains(RatePoint::new(0.71, 0.0), 1e-9));
    }

    #[test]
    fn boundary_is_monotone() {
        let pts: Vec<RatePoint> = (0..=20)
            .map(|i| {
                let a = i as f64 / 20.0;
                RatePoint::new(a, (1.0 - a * a).sqrt())
            })
            .collect();
        let r = RateRegion::from_points(&pts);
        for w in r.vertices().windows(2) {
            assert!(w[0].r1 <= w[1].r1 && w[0].r2 >= w[1].r2);
        }
        assert_eq!(r.vertices().first().unwrap().r1, 0.0);
        assert_eq!(r.vertices().last().unwrap().r2, 0.0);
    }
}
