//! Distance distributions of a user dropped uniformly in the hot-spot disk.
//!
//! Two families are provided: the marginal distance to any anchor in the
//! plane, and the distance to a second anchor given the distance to the
//! first (the user then lies uniformly on the part of a circle inside the
//! disk).

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    angle_from_east, arc_length_inside, clamped_acos, normalize_angle, AngularInterval, Circle, Point2, GEOM_TOL,
};
use crate::quadrature::{integrate_nodes, Node, Panel, QuadOptions};

/// The hot-spot disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotSpot {
    pub center: Point2,
    pub radius: f64,
}

impl HotSpot {
    pub fn new(center: Point2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("radius", "hot-spot radius must be finite and > 0"));
        }
        Ok(Self { center, radius })
    }

    /// Disk centered at the origin.
    pub fn centered(radius: f64) -> Result<Self> {
        Self::new(Point2::ORIGIN, radius)
    }

    pub fn disk(&self) -> Circle {
        Circle { center: self.center, radius: self.radius }
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn contains(&self, p: &Point2) -> bool {
        self.disk().disk_contains(p)
    }
}

/// Closed-form density of one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentDensity {
    /// `slope · r`.
    Linear { slope: f64 },
    /// `(2r / πR²) · arccos((D² + r² − R²) / 2Dr)`: share of the circle of
    /// radius `r` around an anchor at distance `D` that falls in the disk.
    Lens { anchor_dist: f64, disk_radius: f64 },
    /// `scale · 2r / (D sin δ)` with `cos δ = (D² + ρ² − r²) / 2Dρ`: distance
    /// from a fixed point to a uniform point on a circle of radius `ρ`
    /// whose center lies at distance `D`. `scale` is the number of matching
    /// arc points over twice the arc length.
    CircleChord { anchor_dist: f64, circle_radius: f64, scale: f64 },
}

impl SegmentDensity {
    #[inline]
    fn eval(&self, r: f64) -> f64 {
        match *self {
            SegmentDensity::Linear { slope } => slope * r,
            SegmentDensity::Lens { anchor_dist: d, disk_radius: rr } => {
                if d == 0.0 {
                    return if r <= rr { 2.0 * r / (rr * rr) } else { 0.0 };
                }
                // arccos c = 2·atan2(√(1−c), √(1+c)) with both sides factored,
                // which stays accurate when R ≪ D.
                let one_minus = (rr - (d - r)) * (rr + (d - r));
                let one_plus = ((d + r) - rr) * ((d + r) + rr);
                let angle = 2.0 * one_minus.max(0.0).sqrt().atan2(one_plus.max(0.0).sqrt());
                2.0 * r * angle / (PI * rr * rr)
            }
            SegmentDensity::CircleChord { anchor_dist: d, circle_radius: rho, scale } => {
                // sin δ through the factored form keeps accuracy near both
                // ends: 4D²ρ² sin²δ = (r² − (D−ρ)²)((D+ρ)² − r²).
                let a = r * r - (d - rho) * (d - rho);
                let b = (d + rho) * (d + rho) - r * r;
                let prod = a * b;
                if prod <= 0.0 {
                    return 0.0;
                }
                scale * 4.0 * r * rho / prod.sqrt()
            }
        }
    }
}

/// A density segment on `[lo, hi]`. The flags mark endpoints where the
/// density diverges like an inverse square root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdfSegment {
    pub lo: f64,
    pub hi: f64,
    pub density: SegmentDensity,
    pub singular_lo: bool,
    pub singular_hi: bool,
}

/// Segment endpoint, flagged when the density diverges there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub r: f64,
    pub singular: bool,
}

/// A one-dimensional distribution made of contiguous closed-form density
/// segments plus optional point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePdf {
    segments: Vec<PdfSegment>,
    atoms: Vec<(f64, f64)>,
}

impl PiecewisePdf {
    fn from_parts(segments: Vec<PdfSegment>, atoms: Vec<(f64, f64)>) -> Self {
        debug_assert!(segments.windows(2).all(|w| w[0].hi <= w[1].lo + 1e-9 * (1.0 + w[1].lo.abs())));
        Self { segments, atoms }
    }

    pub fn point_mass(at: f64) -> Self {
        Self::from_parts(Vec::new(), vec![(at, 1.0)])
    }

    pub fn segments(&self) -> &[PdfSegment] {
        &self.segments
    }

    /// Point masses as `(location, probability)`.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn support(&self) -> (f64, f64) {
        let seg = self.segments.iter().map(|s| (s.lo, s.hi));
        let atoms = self.atoms.iter().map(|&(x, _)| (x, x));
        seg.chain(atoms).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
    }

    /// Density of the continuous part at `r`; zero outside the support.
    pub fn pdf(&self, r: f64) -> f64 {
        // Where two segments meet, the later one wins.
        self.segments.iter().rev().find(|s| r >= s.lo && r <= s.hi).map_or(0.0, |s| s.density.eval(r))
    }

    /// Ordered segment endpoints (and atom locations), with divergence
    /// markers.
    pub fn breakpoints(&self) -> Vec<Breakpoint> {
        let mut out: Vec<Breakpoint> = Vec::new();
        let mut push = |r: f64, singular: bool| {
            if let Some(b) = out.iter_mut().find(|b| (b.r - r).abs() <= 1e-12 * (1.0 + r.abs())) {
                b.singular |= singular;
            } else {
                out.push(Breakpoint { r, singular });
            }
        };
        for s in &self.segments {
            push(s.lo, s.singular_lo);
            push(s.hi, s.singular_hi);
        }
        for &(x, _) in &self.atoms {
            push(x, false);
        }
        out.sort_by(|a, b| a.r.total_cmp(&b.r));
        out
    }

    /// Quadrature panels covering the part of the support inside
    /// `[lo, hi]`, split at every cut strictly inside a panel. Every
    /// non-polynomial segment end gets the square-root substitution:
    /// besides true divergences this also smooths the square-root kinks of
    /// the arccos branches.
    pub fn panels_split(&self, lo: f64, hi: f64, cuts: &[f64]) -> PdfPanels {
        let mut out = PdfPanels { panels: Vec::with_capacity(self.segments.len()), segment: Vec::new() };
        for (i, s) in self.segments.iter().enumerate() {
            let (a, b) = (s.lo.max(lo), s.hi.min(hi));
            if !(b > a) {
                continue;
            }
            let curved = !matches!(s.density, SegmentDensity::Linear { .. });
            let mut inner: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
            inner.sort_by(f64::total_cmp);
            inner.dedup();
            let mut left = a;
            for &c in inner.iter().chain(std::iter::once(&b)) {
                out.panels.push(Panel::singular(left, c, curved && left == s.lo, curved && c == s.hi));
                out.segment.push(i);
                left = c;
            }
        }
        out
    }

    pub fn panels_within(&self, lo: f64, hi: f64) -> Vec<Panel> {
        self.panels_split(lo, hi, &[]).panels
    }

    pub fn panels(&self) -> Vec<Panel> {
        self.panels_within(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Density at a quadrature node over `panels`. Near a divergent end the
    /// exact gap from the node is used, so the density keeps full relative
    /// accuracy where `x − lo` would cancel.
    pub fn density_at(&self, panels: &PdfPanels, node: &Node) -> f64 {
        let seg = &self.segments[panels.segment[node.panel]];
        let panel = &panels.panels[node.panel];
        let r = node.x;
        match seg.density {
            SegmentDensity::CircleChord { anchor_dist: d, circle_radius: rho, scale } => {
                let a = if seg.singular_lo && panel.lo == seg.lo {
                    node.gap_lo * (r + seg.lo)
                } else {
                    r * r - (d - rho) * (d - rho)
                };
                let b = if seg.singular_hi && panel.hi == seg.hi {
                    node.gap_hi * (r + seg.hi)
                } else {
                    (d + rho) * (d + rho) - r * r
                };
                let prod = a * b;
                if prod <= 0.0 {
                    return 0.0;
                }
                scale * 4.0 * r * rho / prod.sqrt()
            }
            density => density.eval(r),
        }
    }

    /// `∫ g(x) f(x) dx` over `panels` for vector-valued `g`.
    pub fn integrate_vec<const N: usize, G: FnMut(f64) -> [f64; N]>(
        &self,
        panels: &PdfPanels,
        mut g: G,
        opts: &QuadOptions,
    ) -> Result<crate::quadrature::IntegralVec<N>> {
        integrate_nodes(
            |n| {
                let w = self.density_at(panels, n);
                if w == 0.0 {
                    return [0.0; N];
                }
                g(n.x).map(|v| v * w)
            },
            &panels.panels,
            opts,
        )
    }

    /// Probability of `[a, b]`, atoms included.
    pub fn mass_between(&self, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
        let atoms: f64 = self.atoms.iter().filter(|&&(x, _)| x >= a && x <= b).map(|&(_, p)| p).sum();
        let cont = self.integrate_vec(&self.panels_split(a, b, &[]), |_| [1.0], opts)?;
        Ok(atoms + cont.value[0])
    }

    pub fn total_mass(&self, opts: &QuadOptions) -> Result<f64> {
        self.mass_between(f64::NEG_INFINITY, f64::INFINITY, opts)
    }

    /// `P(X ≤ r)` by quadrature.
    pub fn cdf(&self, r: f64, opts: &QuadOptions) -> Result<f64> {
        self.mass_between(f64::NEG_INFINITY, r, opts)
    }

    /// Expectation of `g(X)` by quadrature over the segments plus atoms.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut g: F, opts: &QuadOptions) -> Result<f64> {
        let atoms: f64 = self.atoms.iter().map(|&(x, p)| p * g(x)).sum();
        let panels = self.panels_split(f64::NEG_INFINITY, f64::INFINITY, &[]);
        let cont = self.integrate_vec(&panels, |r| [g(r)], opts)?;
        Ok(atoms + cont.value[0])
    }
}

/// Quadrature panels over a [`PiecewisePdf`], each tied to the segment it
/// came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfPanels {
    pub panels: Vec<Panel>,
    segment: Vec<usize>,
}

impl PdfPanels {
    /// Same panels with the square-root substitution on every end.
    pub fn all_singular(mut self) -> Self {
        for p in &mut self.panels {
            p.singular_lo = true;
            p.singular_hi = true;
        }
        self
    }
}

/// Segment endpoints of `pdf` with divergence markers.
pub fn pdf_breakpoints(pdf: &PiecewisePdf) -> Vec<Breakpoint> {
    pdf.breakpoints()
}

/// Density of the distance from `anchor` to a uniform point of the disk.
///
/// `2r/R²` on `[0, R − D]` while the circle of radius `r` stays inside the
/// disk, then the lens branch on `[|R − D|, R + D]`.
pub fn marginal_distance_pdf(hotspot: &HotSpot, anchor: &Point2) -> PiecewisePdf {
    let rr = hotspot.radius;
    let d = anchor.distance(&hotspot.center);
    let slope = 2.0 / (rr * rr);
    let tol = GEOM_TOL * rr.max(1.0);
    if d <= tol {
        let seg = PdfSegment {
            lo: 0.0,
            hi: rr,
            density: SegmentDensity::Linear { slope },
            singular_lo: false,
            singular_hi: false,
        };
        return PiecewisePdf::from_parts(vec![seg], Vec::new());
    }
    let lens = PdfSegment {
        lo: (rr - d).abs(),
        hi: rr + d,
        density: SegmentDensity::Lens { anchor_dist: d, disk_radius: rr },
        singular_lo: false,
        singular_hi: false,
    };
    let mut segments = Vec::with_capacity(2);
    if d < rr {
        segments.push(PdfSegment {
            lo: 0.0,
            hi: rr - d,
            density: SegmentDensity::Linear { slope },
            singular_lo: false,
            singular_hi: false,
        });
    }
    segments.push(lens);
    PiecewisePdf::from_parts(segments, Vec::new())
}

/// Area of the intersection of two disks at center distance `d`.
pub fn lens_area(r1: f64, r2: f64, d: f64) -> f64 {
    if r1 <= 0.0 || r2 <= 0.0 || d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return PI * r * r;
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0).sqrt();
    r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k
}

/// `P(‖U − anchor‖ ≤ r)` for `U` uniform in the disk: the lens area of the
/// two disks over the hot-spot area.
pub fn marginal_distance_cdf(hotspot: &HotSpot, anchor: &Point2, r: f64) -> f64 {
    let d = anchor.distance(&hotspot.center);
    (lens_area(r, hotspot.radius, d) / hotspot.area()).clamp(0.0, 1.0)
}

/// Which shape the conditional density takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionalCase {
    /// The whole circle around the TBS lies in the disk.
    FullCircle,
    /// Only an arc lies in the disk and it contains the point nearest to
    /// the UAV projection.
    ArcWithNearest,
    /// The arc contains the point farthest from the UAV projection.
    ArcWithFarthest,
    /// The arc contains both extreme points.
    ArcWithBoth,
    /// The arc contains neither extreme point.
    ArcWithNeither,
    /// The UAV projection coincides with the TBS projection, so every arc
    /// point is at distance `r_b`.
    Concentric,
    /// The circle touches the disk in a single point.
    Tangent,
}

/// Geometry of the conditional law of the UAV distance given that the user
/// is at horizontal distance `r_b` from the TBS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalGeometry {
    pub hotspot: HotSpot,
    pub tbs: Point2,
    pub uav: Point2,
    pub r_b: f64,
    /// TBS-to-center distance.
    pub d_bo: f64,
    /// TBS-to-UAV distance.
    pub d_bu: f64,
    /// Arc of the circle `C(tbs, r_b)` inside the disk, seen from the TBS.
    pub arc: AngularInterval,
    pub arc_length: f64,
    /// Counterclockwise start and end points of the arc; `None` for a full
    /// circle.
    pub arc_start: Option<Point2>,
    pub arc_end: Option<Point2>,
    /// Direction (from the TBS) of the circle point nearest the UAV, and the
    /// antipodal direction of the farthest point.
    pub theta_near: f64,
    pub theta_far: f64,
    pub case: ConditionalCase,
}

impl ConditionalGeometry {
    pub fn theta_arc_start(&self) -> f64 {
        self.arc.start
    }

    pub fn theta_arc_end(&self) -> f64 {
        self.arc.end()
    }

    pub fn is_full_circle(&self) -> bool {
        self.case == ConditionalCase::FullCircle
    }
}

/// Build the conditional geometry for TBS distance `r_b`.
pub fn conditional_geometry(hotspot: &HotSpot, tbs: &Point2, uav: &Point2, r_b: f64) -> Result<ConditionalGeometry> {
    let rr = hotspot.radius;
    let d_bo = tbs.distance(&hotspot.center);
    let (lo, hi) = ((d_bo - rr).max(0.0), rr + d_bo);
    let tol = GEOM_TOL * hi.max(1.0);
    if !(r_b >= lo - tol && r_b <= hi + tol) {
        return Err(Error::OutOfRange { what: "r_b", value: r_b, lo, hi });
    }
    let r_b = r_b.clamp(lo, hi);
    let d_bu = tbs.distance(uav);
    let theta_near = if d_bu > 0.0 { angle_from_east(tbs, uav)? } else { 0.0 };
    let theta_far = normalize_angle(theta_near + PI);

    let circle = Circle { center: *tbs, radius: r_b };
    let inside = arc_length_inside(&circle, &hotspot.disk())?;
    let mut geom = ConditionalGeometry {
        hotspot: *hotspot,
        tbs: *tbs,
        uav: *uav,
        r_b,
        d_bo,
        d_bu,
        arc: inside.interval,
        arc_length: inside.length,
        arc_start: inside.endpoints.map(|e| e.0),
        arc_end: inside.endpoints.map(|e| e.1),
        theta_near,
        theta_far,
        case: ConditionalCase::FullCircle,
    };

    if inside.is_empty() || r_b == 0.0 {
        // The circle only touches the disk: at the outer support end it
        // touches on the far side, at the inner end on the near side.
        let toward = if d_bo > 0.0 { angle_from_east(tbs, &hotspot.center)? } else { 0.0 };
        let dir = if r_b > d_bo { toward + PI } else { toward };
        let p = tbs.polar_offset(r_b, dir);
        geom.arc = AngularInterval::new(dir, 0.0);
        geom.arc_length = 0.0;
        geom.arc_start = Some(p);
        geom.arc_end = Some(p);
        geom.case = ConditionalCase::Tangent;
        return Ok(geom);
    }
    geom.case = if d_bu <= GEOM_TOL * rr.max(1.0) {
        ConditionalCase::Concentric
    } else if inside.is_full() {
        ConditionalCase::FullCircle
    } else {
        match (inside.interval.contains(theta_near), inside.interval.contains(theta_far)) {
            (true, true) => ConditionalCase::ArcWithBoth,
            (true, false) => ConditionalCase::ArcWithNearest,
            (false, true) => ConditionalCase::ArcWithFarthest,
            (false, false) => ConditionalCase::ArcWithNeither,
        }
    };
    Ok(geom)
}

/// Density of the horizontal UAV distance given the TBS distance.
///
/// A UAV distance `r_u` is reached at the two circle points at angles
/// `θ_near ± δ`, `cos δ = (D² + r_b² − r_u²) / 2Dr_b`. Each of them lying on
/// the arc contributes `w / 2|arc|` with `w = 2r_u / (D sin δ)`, so the
/// density is piecewise constant in the number of matching points between
/// the breakpoints `|D − r_b|`, the arc-end distances and `D + r_b`.
pub fn conditional_distance_pdf(geom: &ConditionalGeometry) -> Result<PiecewisePdf> {
    match geom.case {
        ConditionalCase::Concentric => return Ok(PiecewisePdf::point_mass(geom.r_b)),
        ConditionalCase::Tangent => {
            let p = geom.arc_start.expect("tangent point is always set");
            return Ok(PiecewisePdf::point_mass(p.distance(&geom.uav)));
        }
        _ => {}
    }
    let (d, rho) = (geom.d_bu, geom.r_b);
    let lo = (d - rho).abs();
    let hi = d + rho;
    let mut cuts = vec![lo, hi];
    if let (Some(a), Some(b)) = (geom.arc_start, geom.arc_end) {
        cuts.push(a.distance(&geom.uav).clamp(lo, hi));
        cuts.push(b.distance(&geom.uav).clamp(lo, hi));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * hi.max(1.0));
    // Dedup may have kept a near-copy of an end; the ends must be exact for
    // the divergence flags below.
    let last = cuts.len() - 1;
    cuts[0] = lo;
    cuts[last] = hi;

    let angle_tol = 1e-12;
    let mut segments = Vec::with_capacity(3);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let mid = 0.5 * (a + b);
        let delta = clamped_acos((d * d + rho * rho - mid * mid) / (2.0 * d * rho))?;
        let count = [geom.theta_near + delta, geom.theta_near - delta]
            .iter()
            .filter(|&&t| geom.arc.contains_with_tol(t, angle_tol))
            .count();
        if count == 0 {
            continue;
        }
        segments.push(PdfSegment {
            lo: a,
            hi: b,
            density: SegmentDensity::CircleChord {
                anchor_dist: d,
                circle_radius: rho,
                scale: count as f64 / (2.0 * geom.arc_length),
            },
            singular_lo: a == lo,
            singular_hi: b == hi,
        });
    }
    if segments.is_empty() {
        return Err(Error::Numeric("conditional density has empty support".into()));
    }
    Ok(PiecewisePdf::from_parts(segments, Vec::new()))
}

/// Arc length of `C(center, r)` inside the disk, as a fraction of its
/// circumference.
pub fn arc_fraction_inside(hotspot: &HotSpot, center: &Point2, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Ok(if hotspot.contains(center) { 1.0 } else { 0.0 });
    }
    let arc = arc_length_inside(&Circle { center: *center, radius: r }, &hotspot.disk())?;
    Ok(arc.length / (TAU * r))
}
