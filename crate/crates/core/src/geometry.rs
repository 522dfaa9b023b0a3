//! Planar and 3-D primitives used by the distance distributions and the
//! tether constraint.
//!
//! Lengths are meters and angles radians throughout. Angles measured "from
//! east" are counterclockwise from the +x ray and normalized to `[0, 2π)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance (meters) used to classify tangency, containment and
/// center coincidence of circles.
pub const GEOM_TOL: f64 = 1e-9;

/// A location in 3-D space; `h` is the altitude above the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

/// A location on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, h: f64) -> Self {
        Self { x, y, h }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dh) = (self.x - other.x, self.y - other.y, self.h - other.h);
        (dx * dx + dy * dy + dh * dh).sqrt()
    }

    /// Ground projection (drops the altitude).
    pub fn project(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.h.is_finite()
    }
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Lift to 3-D at altitude `h`.
    pub fn at_height(&self, h: f64) -> Point3 {
        Point3::new(self.x, self.y, h)
    }

    /// The point at distance `radius` from `self` in direction `angle`.
    pub fn polar_offset(&self, radius: f64, angle: f64) -> Point2 {
        Point2::new(self.x + radius * angle.cos(), self.y + radius * angle.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point2,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point2, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::invalid("radius", format!("{radius} must be finite and >= 0")));
        }
        Ok(Self { center, radius })
    }

    pub fn circumference(&self) -> f64 {
        TAU * self.radius
    }

    /// True when `p` lies in the closed disk bounded by this circle.
    pub fn disk_contains(&self, p: &Point2) -> bool {
        self.center.distance(p) <= self.radius
    }
}

/// Result of intersecting two circles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircleIntersection {
    /// Two crossing points, the one with larger `y` first.
    Two(Point2, Point2),
    Tangent(Point2),
    /// The circles are separated (no point in common).
    Disjoint,
    /// One circle lies strictly inside the other.
    Contained,
    /// Same center and radius.
    Coincident,
}

/// Intersection of two circles.
///
/// In a frame where `c1` sits at the origin and `c2` on the +x axis at
/// distance `D`, the crossing points are `x = (R1² − R2² + D²) / 2D`,
/// `y = ±√(R1² − x²)`; the result is rotated back into the caller's frame.
pub fn circle_intersection(c1: &Circle, c2: &Circle) -> CircleIntersection {
    let d = c1.center.distance(&c2.center);
    let (r1, r2) = (c1.radius, c2.radius);
    let tol = GEOM_TOL * r1.max(r2).max(1.0);

    if d <= tol {
        return if (r1 - r2).abs() <= tol { CircleIntersection::Coincident } else { CircleIntersection::Contained };
    }
    if d > r1 + r2 + tol {
        return CircleIntersection::Disjoint;
    }
    if d < (r1 - r2).abs() - tol {
        return CircleIntersection::Contained;
    }

    let ux = (c2.center.x - c1.center.x) / d;
    let uy = (c2.center.y - c1.center.y) / d;
    let to_global = |lx: f64, ly: f64| Point2::new(c1.center.x + lx * ux - ly * uy, c1.center.y + lx * uy + ly * ux);

    let external = (d - (r1 + r2)).abs() <= tol;
    let internal = (d - (r1 - r2).abs()).abs() <= tol;
    if external || internal {
        // Tangent point lies on the center line, on c1 at distance r1.
        let sign = if internal && r2 > r1 { -1.0 } else { 1.0 };
        return CircleIntersection::Tangent(to_global(sign * r1, 0.0));
    }

    let x = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let y = (r1 * r1 - x * x).max(0.0).sqrt();
    let a = to_global(x, y);
    let b = to_global(x, -y);
    if a.y > b.y || (a.y == b.y && a.x <= b.x) {
        CircleIntersection::Two(a, b)
    } else {
        CircleIntersection::Two(b, a)
    }
}

/// `arccos` that tolerates roundoff just outside `[-1, 1]`.
///
/// Excursions larger than [`GEOM_TOL`] indicate a logic error upstream and
/// are reported instead of being clamped away.
pub fn clamped_acos(x: f64) -> Result<f64> {
    if !(-1.0 - GEOM_TOL..=1.0 + GEOM_TOL).contains(&x) {
        return Err(Error::Numeric(format!("arccos argument {x} outside [-1, 1]")));
    }
    Ok(x.clamp(-1.0, 1.0).acos())
}

/// Normalize an angle to `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can return TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Counterclockwise angle of the vector `to − at`, measured from the +x ray.
pub fn angle_from_east(at: &Point2, to: &Point2) -> Result<f64> {
    let (dx, dy) = (to.x - at.x, to.y - at.y);
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::Degenerate("angle between coincident points is undefined".into()));
    }
    Ok(normalize_angle(dy.atan2(dx)))
}

/// A counterclockwise angular interval `[start, start + sweep]`, possibly
/// wrapping through 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularInterval {
    pub start: f64,
    pub sweep: f64,
}

impl AngularInterval {
    pub fn new(start: f64, sweep: f64) -> Self {
        Self { start: normalize_angle(start), sweep: sweep.clamp(0.0, TAU) }
    }

    pub fn full() -> Self {
        Self { start: 0.0, sweep: TAU }
    }

    pub fn end(&self) -> f64 {
        normalize_angle(self.start + self.sweep)
    }

    pub fn is_full(&self) -> bool {
        self.sweep >= TAU
    }

    /// Membership with an absolute angular tolerance `tol`.
    pub fn contains_with_tol(&self, angle: f64, tol: f64) -> bool {
        if self.sweep + tol >= TAU {
            return true;
        }
        let offset = normalize_angle(angle - self.start);
        offset <= self.sweep + tol || offset >= TAU - tol
    }

    pub fn contains(&self, angle: f64) -> bool {
        self.contains_with_tol(angle, 0.0)
    }

    /// Angle at fraction `t ∈ [0, 1]` of the sweep.
    pub fn lerp(&self, t: f64) -> f64 {
        normalize_angle(self.start + t * self.sweep)
    }
}

/// The part of `arc_circle` lying inside the closed disk bounded by
/// `clip_disk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcInDisk {
    pub arc_circle: Circle,
    pub clip_disk: Circle,
    pub length: f64,
    /// Angular extent of the arc as seen from `arc_circle.center`.
    pub interval: AngularInterval,
    /// Arc endpoints in counterclockwise order; `None` for full or empty arcs.
    pub endpoints: Option<(Point2, Point2)>,
}

impl ArcInDisk {
    pub fn is_full(&self) -> bool {
        self.interval.is_full() && self.length > 0.0
    }

    pub fn is_empty(&self) -> bool {
        self.length <= 0.0
    }

    /// Length of the part of `arc_circle` outside the disk.
    pub fn outside_length(&self) -> f64 {
        self.arc_circle.circumference() - self.length
    }
}

/// Length of the arc of `arc_of` that lies inside the disk bounded by
/// `inside`.
///
/// For crossing circles at center distance `D` the arc subtends
/// `2·arccos((D² + R² − Rᵢ²) / (2DR))` at the arc center, `R` being the arc
/// circle's radius and `Rᵢ` the clipping disk's.
pub fn arc_length_inside(arc_of: &Circle, inside: &Circle) -> Result<ArcInDisk> {
    let d = arc_of.center.distance(&inside.center);
    let (r, ri) = (arc_of.radius, inside.radius);
    let tol = GEOM_TOL * r.max(ri).max(1.0);

    let full = ArcInDisk {
        arc_circle: *arc_of,
        clip_disk: *inside,
        length: arc_of.circumference(),
        interval: AngularInterval::full(),
        endpoints: None,
    };
    let empty = ArcInDisk { length: 0.0, interval: AngularInterval::new(0.0, 0.0), ..full };

    if r == 0.0 {
        return Ok(if inside.disk_contains(&arc_of.center) { full } else { empty });
    }
    if d <= tol {
        return Ok(if r <= ri + tol { full } else { empty });
    }
    if d + r <= ri + tol {
        return Ok(full);
    }
    if d >= r + ri - tol || r >= d + ri - tol {
        return Ok(empty);
    }

    let half = clamped_acos((d * d + r * r - ri * ri) / (2.0 * d * r))?;
    let toward = angle_from_east(&arc_of.center, &inside.center)?;
    let interval = AngularInterval::new(toward - half, 2.0 * half);
    let lo = arc_of.center.polar_offset(r, toward - half);
    let hi = arc_of.center.polar_offset(r, toward + half);
    Ok(ArcInDisk {
        arc_circle: *arc_of,
        clip_disk: *inside,
        length: 2.0 * r * half,
        interval,
        endpoints: Some((lo, hi)),
    })
}

/// The reachable set of a tethered drone: points within `tether_len` of the
/// ground station whose elevation angle from the station is at least
/// `min_inclination`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalCone {
    pub apex: Point3,
    pub tether_len: f64,
    pub min_inclination: f64,
}

impl SphericalCone {
    pub fn new(apex: Point3, tether_len: f64, min_inclination: f64) -> Result<Self> {
        if !apex.is_finite() {
            return Err(Error::invalid("apex", "coordinates must be finite"));
        }
        if !(tether_len > 0.0) || !tether_len.is_finite() {
            return Err(Error::invalid("tether_len", format!("{tether_len} must be > 0")));
        }
        if !(0.0..PI / 2.0).contains(&min_inclination) {
            return Err(Error::invalid("min_inclination", format!("{min_inclination} rad must lie in [0, π/2)")));
        }
        Ok(Self { apex, tether_len, min_inclination })
    }

    pub fn min_height(&self) -> f64 {
        self.apex.h
    }

    pub fn max_height(&self) -> f64 {
        self.apex.h + self.tether_len
    }

    /// Height at which the conical side meets the spherical cap.
    pub fn junction_height(&self) -> f64 {
        self.apex.h + self.tether_len * self.min_inclination.sin()
    }

    /// Horizontal reach of the cone at altitude `h_u`.
    pub fn radius_at_height(&self, h_u: f64) -> Result<f64> {
        let rel = h_u - self.apex.h;
        let slack = GEOM_TOL * self.tether_len.max(1.0);
        if !(rel >= -slack && rel <= self.tether_len + slack) {
            return Err(Error::OutOfRange {
                what: "T-UAV height",
                value: h_u,
                lo: self.min_height(),
                hi: self.max_height(),
            });
        }
        let rel = rel.clamp(0.0, self.tether_len);
        if h_u < self.junction_height() {
            Ok(rel / self.min_inclination.tan())
        } else {
            Ok((self.tether_len * self.tether_len - rel * rel).max(0.0).sqrt())
        }
    }

    pub fn contains(&self, p: &Point3) -> bool {
        let d = self.apex.distance(p);
        let slack = GEOM_TOL * self.tether_len.max(1.0);
        if d <= slack {
            return true;
        }
        if d > self.tether_len + slack {
            return false;
        }
        let elevation = ((p.h - self.apex.h) / d).clamp(-1.0, 1.0).asin();
        elevation >= self.min_inclination - GEOM_TOL
    }
}

/// A spherical cone whose apex has `y ≥ 0`, restricted to the half-space
/// `y ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CroppedCone {
    pub cone: SphericalCone,
}

impl CroppedCone {
    pub fn new(cone: SphericalCone) -> Result<Self> {
        if cone.apex.y < 0.0 {
            return Err(Error::invalid(
                "apex.y",
                "cropped cones need a ground station with y >= 0; mirror the scenario first",
            ));
        }
        Ok(Self { cone })
    }

    /// Horizontal reach at altitude `h_u` in direction `psi`, stopping at
    /// the x-axis for directions pointing into `y < 0`.
    pub fn radius(&self, h_u: f64, psi: f64) -> Result<f64> {
        let full = self.cone.radius_at_height(h_u)?;
        let psi = normalize_angle(psi);
        if psi <= PI {
            return Ok(full);
        }
        let s = psi.sin();
        if s >= 0.0 {
            return Ok(full);
        }
        Ok(full.min(-self.cone.apex.y / s))
    }

    /// Surface point at altitude `h_u` in direction `psi` from the apex.
    pub fn surface_point(&self, h_u: f64, psi: f64) -> Result<Point3> {
        let r = self.radius(h_u, psi)?;
        Ok(self.cone.apex.project().polar_offset(r, psi).at_height(h_u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle(x: f64, y: f64, r: f64) -> Circle {
        Circle::new(Point2::new(x, y), r).unwrap()
    }

    #[test]
    fn distances_and_projection() {
        let o = Point3::new(0.0, 0.0, 0.0);
        assert_eq!(o.distance(&Point3::new(3.0, 4.0, 0.0)), 5.0);
        assert_eq!(Point3::new(170.0, 0.0, 10.0).distance(&Point3::new(170.0, 0.0, 0.0)), 10.0);
        assert_eq!(Point3::new(-18.125, 0.0, 100.0).project(), Point2::new(-18.125, 0.0));
    }

    #[test]
    fn intersection_three_four_five() {
        match circle_intersection(&circle(0.0, 0.0, 5.0), &circle(8.0, 0.0, 5.0)) {
            CircleIntersection::Two(a, b) => {
                assert_relative_eq!(a.x, 4.0, epsilon = 1e-12);
                assert_relative_eq!(a.y, 3.0, epsilon = 1e-12);
                assert_relative_eq!(b.x, 4.0, epsilon = 1e-12);
                assert_relative_eq!(b.y, -3.0, epsilon = 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn intersection_tangent_and_degenerate() {
        assert_eq!(
            circle_intersection(&circle(0.0, 0.0, 5.0), &circle(10.0, 0.0, 5.0)),
            CircleIntersection::Tangent(Point2::new(5.0, 0.0))
        );
        assert_eq!(
            circle_intersection(&circle(0.0, 0.0, 5.0), &circle(3.0, 0.0, 2.0)),
            CircleIntersection::Tangent(Point2::new(5.0, 0.0))
        );
        assert_eq!(circle_intersection(&circle(0.0, 0.0, 5.0), &circle(20.0, 0.0, 5.0)), CircleIntersection::Disjoint);
        assert_eq!(circle_intersection(&circle(0.0, 0.0, 5.0), &circle(1.0, 0.0, 1.0)), CircleIntersection::Contained);
        assert_eq!(circle_intersection(&circle(1.0, 1.0, 2.0), &circle(1.0, 1.0, 2.0)), CircleIntersection::Coincident);
    }

    #[test]
    fn intersection_hotspot_and_tbs_ring() {
        let (c1, c2) = (circle(0.0, 0.0, 150.0), circle(170.0, 0.0, 100.0));
        let expected_x = (150.0f64.powi(2) - 100.0f64.powi(2) + 170.0f64.powi(2)) / (2.0 * 170.0);
        let CircleIntersection::Two(a, b) = circle_intersection(&c1, &c2) else {
            panic!("expected two points");
        };
        for p in [a, b] {
            assert_relative_eq!(p.x, expected_x, epsilon = 1e-9);
            let res1 = (p.x * p.x + p.y * p.y - 150.0f64.powi(2)).abs().sqrt();
            let res2 = ((p.x - 170.0).powi(2) + p.y * p.y - 100.0f64.powi(2)).abs().sqrt();
            assert!(res1 < 1e-9 * 150.0 * 10.0 && res2 < 1e-9 * 150.0 * 10.0);
        }
        assert!(a.y > 0.0 && b.y < 0.0);
    }

    #[test]
    fn arc_lengths() {
        let a = arc_length_inside(&circle(5.0, 0.0, 5.0), &circle(0.0, 0.0, 5.0)).unwrap();
        assert_relative_eq!(a.length, 10.0 * PI / 3.0, epsilon = 1e-12);
        let full = arc_length_inside(&circle(0.0, 0.0, 3.0), &circle(0.0, 0.0, 5.0)).unwrap();
        assert_relative_eq!(full.length, 6.0 * PI, epsilon = 1e-12);
        assert!(full.is_full());
        let none = arc_length_inside(&circle(0.0, 0.0, 7.0), &circle(0.0, 0.0, 5.0)).unwrap();
        assert_eq!(none.length, 0.0);
        let far = arc_length_inside(&circle(20.0, 0.0, 3.0), &circle(0.0, 0.0, 5.0)).unwrap();
        assert_eq!(far.length, 0.0);
    }

    #[test]
    fn arc_length_matches_angular_sampling() {
        let arc_of = circle(170.0, 0.0, 60.0);
        let disk = circle(0.0, 0.0, 150.0);
        let arc = arc_length_inside(&arc_of, &disk).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let hits =
            (0..n).filter(|_| disk.disk_contains(&arc_of.center.polar_offset(60.0, rng.random::<f64>() * TAU))).count();
        let sampled = hits as f64 / n as f64 * arc_of.circumference();
        // binomial standard error on the fraction is below 5e-4
        assert!((sampled - arc.length).abs() < 4.0 * 5e-4 * arc_of.circumference());
        let (lo, hi) = arc.endpoints.unwrap();
        assert!(lo.y > 0.0 && hi.y < 0.0, "ccw from the upper crossing");
        assert_relative_eq!(lo.norm(), 150.0, epsilon = 1e-9);
    }

    #[test]
    fn angles() {
        let o = Point2::ORIGIN;
        assert_relative_eq!(angle_from_east(&o, &Point2::new(1.0, 1.0)).unwrap(), PI / 4.0);
        let a = angle_from_east(&Point2::new(170.0, 0.0), &Point2::new(0.0, 75.0)).unwrap();
        assert_relative_eq!(a, 75.0f64.atan2(-170.0), epsilon = 1e-15);
        assert_relative_eq!(a, 2.7261, epsilon = 1e-4);
        let down = angle_from_east(&Point2::new(0.0, 75.0), &o).unwrap();
        assert_relative_eq!(down, 3.0 * PI / 2.0);
        assert!(angle_from_east(&o, &o).is_err());
    }

    #[test]
    fn wrapped_interval_membership() {
        let iv = AngularInterval::new(7.0 * PI / 4.0, PI / 2.0);
        assert!(iv.contains(0.0));
        assert!(iv.contains(0.2));
        assert!(iv.contains(7.0 * PI / 4.0 + 0.1));
        assert!(!iv.contains(PI));
        assert!(AngularInterval::full().contains(3.0));
    }

    #[test]
    fn cone_radius_profile() {
        let apex = Point3::new(0.0, 0.0, 25.0);
        let cone = SphericalCone::new(apex, 100.0, 30f64.to_radians()).unwrap();
        assert_eq!(cone.radius_at_height(25.0).unwrap(), 0.0);
        assert_relative_eq!(cone.radius_at_height(125.0).unwrap(), 0.0, epsilon = 1e-12);
        let h = 25.0 + 100.0 * 30f64.to_radians().cos();
        assert_relative_eq!(cone.radius_at_height(h).unwrap(), 50.0, epsilon = 1e-9);
        // continuity where the conical side meets the cap
        let j = cone.junction_height();
        let below = cone.radius_at_height(j - 1e-9).unwrap();
        let above = cone.radius_at_height(j).unwrap();
        assert_relative_eq!(below, above, epsilon = 1e-6);
        assert!(cone.radius_at_height(10.0).is_err());
        assert!(cone.radius_at_height(126.0).is_err());
    }

    #[test]
    fn cone_membership() {
        let cone = SphericalCone::new(Point3::new(0.0, 0.0, 25.0), 50.0, 30f64.to_radians()).unwrap();
        assert!(cone.contains(&Point3::new(0.0, 0.0, 75.0)));
        assert!(cone.contains(&Point3::new(0.0, 0.0, 25.0)));
        assert!(!cone.contains(&Point3::new(49.0, 0.0, 26.0)));
    }

    #[test]
    fn cone_membership_agrees_with_cylindrical_form() {
        let cone = SphericalCone::new(Point3::new(10.0, 40.0, 20.0), 50.0, 30f64.to_radians()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut disagreements = 0;
        for _ in 0..100_000 {
            let p =
                Point3::new(rng.random_range(-45.0..65.0), rng.random_range(-15.0..95.0), rng.random_range(20.0..70.0));
            let r = p.project().distance(&cone.apex.project());
            let cyl = r <= cone.radius_at_height(p.h).unwrap();
            if cyl != cone.contains(&p) {
                // only points within roundoff of the boundary may disagree
                let margin = (r - cone.radius_at_height(p.h).unwrap()).abs();
                assert!(margin < 1e-6, "disagreement at {p:?}");
                disagreements += 1;
            }
        }
        assert!(disagreements < 5);
    }

    #[test]
    fn cropped_radius_cases() {
        let far = CroppedCone::new(SphericalCone::new(Point3::new(0.0, 200.0, 20.0), 50.0, 0.5).unwrap()).unwrap();
        for psi in [0.3, 2.0, 3.5, 4.7, 6.0] {
            assert_eq!(far.radius(40.0, psi).unwrap(), far.cone.radius_at_height(40.0).unwrap());
        }
        // R_n = 50 at the top of the junction band: use a tall tether so the cap gives 50
        let cone = SphericalCone::new(Point3::new(0.0, 10.0, 0.0), 50.0, 0.0).unwrap();
        let cc = CroppedCone::new(cone).unwrap();
        assert_relative_eq!(cc.radius(0.0, 3.0 * PI / 2.0).unwrap(), 10.0, epsilon = 1e-12);
        let cone = SphericalCone::new(Point3::new(0.0, 20.0, 0.0), 50.0, 0.0).unwrap();
        let cc = CroppedCone::new(cone).unwrap();
        let psi = 7.0 * PI / 6.0;
        assert_relative_eq!(cc.radius(0.0, psi).unwrap(), 40.0, epsilon = 1e-9);
        assert!(cc.surface_point(0.0, psi).unwrap().y.abs() < 1e-9);
        assert!(CroppedCone::new(SphericalCone::new(Point3::new(0.0, -1.0, 0.0), 5.0, 0.1).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn intersection_points_lie_on_both_circles(
            x in -200.0..200.0f64, y in -200.0..200.0f64,
            r1 in 1.0..200.0f64, r2 in 1.0..200.0f64,
        ) {
            let c1 = circle(0.0, 0.0, r1);
            let c2 = circle(x, y, r2);
            if let CircleIntersection::Two(a, b) = circle_intersection(&c1, &c2) {
                let scale = r1.max(r2);
                for p in [a, b] {
                    prop_assert!((p.distance(&c1.center) - r1).abs() < 1e-9 * scale);
                    prop_assert!((p.distance(&c2.center) - r2).abs() < 1e-9 * scale);
                }
                prop_assert!(a.y >= b.y);
            }
        }

        #[test]
        fn arc_length_is_rigid_motion_invariant(
            x in -200.0..200.0f64, y in -200.0..200.0f64,
            r in 1.0..200.0f64, ri in 1.0..200.0f64,
            tx in -500.0..500.0f64, ty in -500.0..500.0f64, rot in 0.0..TAU,
        ) {
            let base = arc_length_inside(&circle(x, y, r), &circle(0.0, 0.0, ri)).unwrap().length;
            let (c, s) = (rot.cos(), rot.sin());
            let moved = circle(c * x - s * y + tx, s * x + c * y + ty, r);
            let disk = circle(tx, ty, ri);
            let len = arc_length_inside(&moved, &disk).unwrap().length;
            prop_assert!((len - base).abs() < 1e-6 * (1.0 + base));
        }

        #[test]
        fn cropped_radius_is_uncropped_in_upper_half(psi in 0.0..PI, y in 0.0..100.0f64, h in 0.0..1.0f64) {
            let cone = SphericalCone::new(Point3::new(5.0, y, 10.0), 40.0, 0.4).unwrap();
            let cc = CroppedCone::new(cone).unwrap();
            let hu = 10.0 + 40.0 * h;
            prop_assert_eq!(cc.radius(hu, psi).unwrap(), cone.radius_at_height(hu).unwrap());
        }
    }
}
