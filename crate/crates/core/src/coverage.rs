//! Link and system coverage probabilities.
//!
//! Every probability is an integral over the user's horizontal distance(s)
//! weighted by the closed-form densities of [`crate::distributions`]. The
//! system-level results integrate over the TBS distance `r_b` on the outside
//! and over the UAV distance `r_u` given `r_b` on the inside; the inner
//! panels are split wherever the association decision flips.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::channel::{
    los_probability_access_at, los_probability_backhaul, EnvironmentParams, LinkParams, Preset, SnrThreshold,
};
use crate::distributions::{
    conditional_distance_pdf, conditional_geometry, marginal_distance_pdf, HotSpot, PdfPanels, PiecewisePdf,
};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3};
use crate::quadrature::{QuadOptions, Rule};

/// Everything except the UAV: hot-spot, TBS, radio environment and SNR
/// threshold.
///
/// The frame is canonical: hot-spot centered at the origin and TBS on the
/// x-axis. The fields are public for experiments; [`Scenario::new`]
/// validates them and derives `threshold` from `link`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub hotspot: HotSpot,
    pub tbs: Point3,
    pub env: EnvironmentParams,
    pub link: LinkParams,
    pub threshold: SnrThreshold,
}

impl Scenario {
    pub fn new(hotspot: HotSpot, tbs: Point3, env: EnvironmentParams, link: LinkParams, beta: f64) -> Result<Self> {
        env.validate()?;
        link.validate()?;
        if hotspot.center != Point2::ORIGIN {
            return Err(Error::invalid("hotspot.center", "the hot-spot must be centered at the origin"));
        }
        if tbs.y != 0.0 {
            return Err(Error::invalid("tbs.y", "the TBS must lie on the x-axis"));
        }
        if !tbs.is_finite() || tbs.h < 0.0 {
            return Err(Error::invalid("tbs", "coordinates must be finite with h >= 0"));
        }
        let threshold = SnrThreshold::new(beta, &link)?;
        Ok(Self { hotspot, tbs, env, link, threshold })
    }

    /// Dense-urban defaults: `R_o = 150`, TBS at `{170, 0, 10}`, β = 15.
    pub fn table_defaults() -> Self {
        Self::preset(Preset::DenseUrban)
    }

    /// Default powers and threshold with the environment and TBS height of
    /// `preset`.
    pub fn preset(preset: Preset) -> Self {
        Self::new(
            HotSpot::centered(150.0).expect("positive radius"),
            Point3::new(170.0, 0.0, preset.tbs_height()),
            preset.env(),
            LinkParams::table_defaults(),
            15.0,
        )
        .expect("default scenario is valid")
    }

    /// Copy with the TBS moved to `x` on the x-axis.
    pub fn with_tbs_x(&self, x: f64) -> Result<Self> {
        Self::new(self.hotspot, Point3::new(x, 0.0, self.tbs.h), self.env, self.link, self.threshold.beta)
    }

    pub fn tbs_proj(&self) -> Point2 {
        self.tbs.project()
    }
}

/// How the UAV is powered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UavMode {
    /// Wired power and data: no backhaul loss, always available.
    Tethered,
    /// Battery powered with a wireless backhaul; airborne a fraction
    /// `duty_cycle` of the time.
    Untethered { duty_cycle: f64 },
}

impl UavMode {
    pub fn untethered(duty_cycle: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&duty_cycle) {
            return Err(Error::OutOfRange { what: "duty_cycle", value: duty_cycle, lo: 0.0, hi: 1.0 });
        }
        Ok(UavMode::Untethered { duty_cycle })
    }
}

/// Contributions to a coverage probability.
///
/// `uav_*` count users served and covered by the UAV under a LoS / NLoS
/// access link; `tbs_*_region` count users the association sends to the TBS
/// (split by the UAV link state that decided it) and covered there;
/// `unavailable` is TBS coverage while the UAV is away.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub uav_los: f64,
    pub uav_nlos: f64,
    pub tbs_los_region: f64,
    pub tbs_nlos_region: f64,
    pub unavailable: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.uav_los + self.uav_nlos + self.tbs_los_region + self.tbs_nlos_region + self.unavailable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub value: f64,
    /// Quadrature error estimate of `value`.
    pub quad_error: f64,
    pub breakdown: Breakdown,
    /// Probability that the user is served by the UAV (zero for link-level
    /// results that involve no association).
    pub uav_association: f64,
    pub evaluations: usize,
}

/// Quadrature tolerances for the three integral shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Precision {
    /// Single integrals (link coverages).
    pub single: QuadOptions,
    /// Outer `r_b` integral of the system coverages.
    pub outer: QuadOptions,
    /// Inner `r_u` integrals, one per outer node.
    pub inner: QuadOptions,
}

impl Precision {
    /// Absolute targets of 1e-6 for single and 1e-5 for double integrals.
    pub fn accurate() -> Self {
        Self {
            single: QuadOptions::new(1e-6, 100_000),
            outer: QuadOptions::new(1e-5, 100_000),
            inner: QuadOptions::new(1e-6, 100_000),
        }
    }

    /// Looser targets for optimizer sweeps that evaluate thousands of
    /// positions. The error estimates are pessimistic; actual errors stay
    /// near 1e-8.
    pub fn fast() -> Self {
        Self {
            single: QuadOptions::new(1e-4, 100_000),
            outer: QuadOptions::new(1e-3, 100_000),
            inner: QuadOptions::new(1e-4, 100_000),
        }
    }

    /// Loosest targets with the 7-point rule, for randomized ensembles
    /// whose Monte-Carlo noise dwarfs quadrature error (actual errors near
    /// 5e-5).
    pub fn coarse() -> Self {
        Self {
            single: QuadOptions::new(1e-3, 100_000).with_rule(Rule::Gk7),
            outer: QuadOptions::new(1e-1, 100_000).with_rule(Rule::Gk7),
            inner: QuadOptions::new(1e-1, 100_000).with_rule(Rule::Gk7),
        }
    }
}

impl Default for Precision {
    fn default() -> Self {
        Self::accurate()
    }
}

/// Terrestrial kernel: `exp(−μ β̄_b (r_b² + h_b²)^{α_b/2})`, the Rayleigh
/// coverage at horizontal distance `r_b`.
pub fn kernel_tbs(threshold: &SnrThreshold, link: &LinkParams, r_b: f64, h_b: f64) -> f64 {
    (-link.mu * threshold.beta_bar_b * (r_b * r_b + h_b * h_b).powf(0.5 * link.alpha_b)).exp()
}

/// `P(Gamma(m, 1) > x)` for integer `m`: `e^{−x} Σ_{k<m} x^k / k!`.
#[inline]
fn gamma_ccdf_int(m: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..m {
        term *= x / f64::from(k);
        sum += term;
    }
    sum * (-x).exp()
}

/// Nakagami-m kernel of the aerial access link at horizontal distance `r_u`.
pub fn kernel_uav(threshold: &SnrThreshold, link: &LinkParams, r_u: f64, h_u: f64, los: bool) -> f64 {
    let d_alpha = (r_u * r_u + h_u * h_u).powf(0.5 * link.alpha_u);
    let m = f64::from(link.m);
    gamma_ccdf_int(link.m, m * threshold.beta_bar_u * d_alpha * link.eta(los))
}

/// Aerial kernels with the per-call constants hoisted.
#[derive(Debug, Clone, Copy)]
struct Kernels {
    m: u32,
    x_los: f64,
    x_nlos: f64,
    half_alpha_u: f64,
    tbs_scale: f64,
    half_alpha_b: f64,
    h_b2: f64,
}

impl Kernels {
    fn new(s: &Scenario) -> Self {
        let m = f64::from(s.link.m);
        let base = m * s.threshold.beta_bar_u;
        Self {
            m: s.link.m,
            x_los: base * s.link.eta_los,
            x_nlos: base * s.link.eta_nlos,
            half_alpha_u: 0.5 * s.link.alpha_u,
            tbs_scale: s.link.mu * s.threshold.beta_bar_b,
            half_alpha_b: 0.5 * s.link.alpha_b,
            h_b2: s.tbs.h * s.tbs.h,
        }
    }

    /// (LoS, NLoS) aerial kernels at squared 3-D distance `d2`.
    #[inline]
    fn uav(&self, d2: f64) -> (f64, f64) {
        let d_alpha = d2.powf(self.half_alpha_u);
        (gamma_ccdf_int(self.m, self.x_los * d_alpha), gamma_ccdf_int(self.m, self.x_nlos * d_alpha))
    }

    #[inline]
    fn tbs(&self, r_b: f64) -> f64 {
        (-self.tbs_scale * (r_b * r_b + self.h_b2).powf(self.half_alpha_b)).exp()
    }
}

fn check_uav(uav: &Point3) -> Result<()> {
    if !uav.is_finite() || !(uav.h > 0.0) {
        return Err(Error::invalid("uav", "coordinates must be finite with h > 0"));
    }
    Ok(())
}

/// Integrate `g` against `pdf` (atoms included) with a vector integrand.
fn expect_vec<const N: usize, G: FnMut(f64) -> [f64; N]>(
    pdf: &PiecewisePdf,
    panels: &PdfPanels,
    mut g: G,
    opts: &QuadOptions,
) -> Result<([f64; N], f64, usize)> {
    let mut out = [0.0; N];
    for &(x, p) in pdf.atoms() {
        let v = g(x);
        for (o, vc) in out.iter_mut().zip(v) {
            *o += p * vc;
        }
    }
    let r = pdf.integrate_vec(panels, g, opts)?;
    for (o, vc) in out.iter_mut().zip(r.value) {
        *o += vc;
    }
    Ok((out, r.error, r.evaluations))
}

fn all_panels(pdf: &PiecewisePdf) -> PdfPanels {
    pdf.panels_split(f64::NEG_INFINITY, f64::INFINITY, &[])
}

/// Terrestrial link coverage averaged over the hot-spot.
pub fn coverage_tbs(scenario: &Scenario) -> Result<CoverageResult> {
    coverage_tbs_with(scenario, &Precision::default())
}

pub fn coverage_tbs_with(scenario: &Scenario, precision: &Precision) -> Result<CoverageResult> {
    let k = Kernels::new(scenario);
    let pdf = marginal_distance_pdf(&scenario.hotspot, &scenario.tbs_proj());
    let ([value], error, evaluations) = expect_vec(&pdf, &all_panels(&pdf), |r| [k.tbs(r)], &precision.single)?;
    Ok(CoverageResult {
        value,
        quad_error: error,
        breakdown: Breakdown { unavailable: value, ..Breakdown::default() },
        uav_association: 0.0,
        evaluations,
    })
}

/// Aerial access coverage of a user drawn uniformly in the hot-spot, with
/// the LoS probability evaluated at each horizontal distance.
pub fn coverage_uav_access(scenario: &Scenario, uav: &Point3) -> Result<CoverageResult> {
    coverage_uav_access_with(scenario, uav, &Precision::default())
}

pub fn coverage_uav_access_with(scenario: &Scenario, uav: &Point3, precision: &Precision) -> Result<CoverageResult> {
    check_uav(uav)?;
    let k = Kernels::new(scenario);
    let env = scenario.env;
    let h2 = uav.h * uav.h;
    let pdf = marginal_distance_pdf(&scenario.hotspot, &uav.project());
    let integrand = |r: f64| {
        let kappa = los_probability_access_at(&env, r, uav.h);
        let (kl, kn) = k.uav(r * r + h2);
        [kappa * kl, (1.0 - kappa) * kn]
    };
    let ([los, nlos], error, evaluations) = expect_vec(&pdf, &all_panels(&pdf), integrand, &precision.single)?;
    Ok(CoverageResult {
        value: los + nlos,
        quad_error: error,
        breakdown: Breakdown { uav_los: los, uav_nlos: nlos, ..Breakdown::default() },
        uav_association: 0.0,
        evaluations,
    })
}

/// Backhaul (TBS to UAV) coverage: the aerial kernel at the fixed TBS–UAV
/// distance, mixed over the backhaul LoS probability.
pub fn coverage_backhaul(scenario: &Scenario, uav: &Point3) -> Result<f64> {
    let d = scenario.tbs.distance(uav);
    if !(d > 0.0) {
        return Err(Error::Degenerate("UAV coincides with the TBS".into()));
    }
    let k = Kernels::new(scenario);
    let kappa = los_probability_backhaul(&scenario.env, &scenario.tbs, uav);
    let (kl, kn) = k.uav(d * d);
    Ok(kappa * kl + (1.0 - kappa) * kn)
}

/// Coverage of a UAV-served user through backhaul and access links
/// (independent links, so the probabilities multiply).
pub fn coverage_end_to_end(scenario: &Scenario, uav: &Point3, mode: UavMode) -> Result<f64> {
    let access = coverage_uav_access(scenario, uav)?.value;
    Ok(match mode {
        UavMode::Tethered => access,
        UavMode::Untethered { .. } => coverage_backhaul(scenario, uav)? * access,
    })
}

/// Association thresholds: a user picks the UAV when its 3-D UAV distance
/// is at most `λ(D_b) = ((ρ_u/ρ_b) D_b^{α_b} / η)^{1/α_u}`, `D_b` being the
/// 3-D TBS distance. Since `η_LoS < η_NLoS`, `λ_NLoS < λ_LoS`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationBoundary {
    los_scale: f64,
    nlos_scale: f64,
    alpha_b: f64,
    inv_alpha_u: f64,
    h_b: f64,
}

impl AssociationBoundary {
    fn lambda(&self, scale: f64, r_b: f64) -> f64 {
        let d_b = (r_b * r_b + self.h_b * self.h_b).sqrt();
        (scale * d_b.powf(self.alpha_b)).powf(self.inv_alpha_u)
    }

    /// 3-D UAV distance threshold under a LoS access link.
    pub fn lambda_los(&self, r_b: f64) -> f64 {
        self.lambda(self.los_scale, r_b)
    }

    pub fn lambda_nlos(&self, r_b: f64) -> f64 {
        self.lambda(self.nlos_scale, r_b)
    }

    /// Horizontal-distance version for a UAV at altitude `h_u`: users with
    /// `r_u` below the returned value pick the UAV. Zero when no user does.
    pub fn r_u_threshold(&self, r_b: f64, h_u: f64, los: bool) -> f64 {
        let lam = if los { self.lambda_los(r_b) } else { self.lambda_nlos(r_b) };
        (lam * lam - h_u * h_u).max(0.0).sqrt()
    }
}

pub fn association_boundary(scenario: &Scenario) -> AssociationBoundary {
    let l = &scenario.link;
    let ratio = l.rho_u / l.rho_b;
    AssociationBoundary {
        los_scale: ratio / l.eta_los,
        nlos_scale: ratio / l.eta_nlos,
        alpha_b: l.alpha_b,
        inv_alpha_u: 1.0 / l.alpha_u,
        h_b: scenario.tbs.h,
    }
}

/// Association class of a ground position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Association {
    /// Picks the UAV whatever the access-link state.
    UavAlways,
    /// Picks the UAV only over a LoS access link.
    UavIfLos,
    TbsAlways,
}

impl Association {
    /// Decision for a realized access-link state.
    pub fn serves_uav(self, los: bool) -> bool {
        match self {
            Association::UavAlways => true,
            Association::UavIfLos => los,
            Association::TbsAlways => false,
        }
    }
}

pub fn classify_user(scenario: &Scenario, uav: &Point3, user: &Point2) -> Association {
    let b = association_boundary(scenario);
    let r_b = scenario.tbs_proj().distance(user);
    let d_u = uav.distance(&user.at_height(0.0));
    if d_u <= b.lambda_nlos(r_b) {
        Association::UavAlways
    } else if d_u <= b.lambda_los(r_b) {
        Association::UavIfLos
    } else {
        Association::TbsAlways
    }
}

/// TBS distances at which the inner integrand changes shape: the
/// conditional case switches, an association threshold crosses a
/// conditional-density breakpoint, or a threshold leaves zero. The inner
/// integral has kinks there, so the outer quadrature is split at them.
fn outer_cuts(scenario: &Scenario, uav: &Point3, boundary: &AssociationBoundary, marginal: &PiecewisePdf) -> Vec<f64> {
    const SCAN: usize = 48;
    const FEATURES: usize = 10;
    let (tbs2, uav2) = (scenario.tbs_proj(), uav.project());
    let h_u = uav.h;
    type Signature = Option<(u8, [f64; FEATURES])>;
    let signature = |r_b: f64| -> Signature {
        let geom = conditional_geometry(&scenario.hotspot, &tbs2, &uav2, r_b).ok()?;
        let d = geom.d_bu;
        let (near, far) = ((d - r_b).abs(), d + r_b);
        let ends = match (geom.arc_start, geom.arc_end) {
            (Some(a), Some(b)) => (a.distance(&uav2), b.distance(&uav2)),
            _ => (f64::NAN, f64::NAN),
        };
        let mut f = [0.0; FEATURES];
        for (i, los) in [true, false].into_iter().enumerate() {
            let thr = boundary.r_u_threshold(r_b, h_u, los);
            let lam = if los { boundary.lambda_los(r_b) } else { boundary.lambda_nlos(r_b) };
            f[5 * i] = thr - near;
            f[5 * i + 1] = thr - far;
            f[5 * i + 2] = thr - ends.0;
            f[5 * i + 3] = thr - ends.1;
            f[5 * i + 4] = lam - h_u;
        }
        Some((geom.case as u8, f))
    };

    let mut cuts = Vec::new();
    for seg in marginal.segments() {
        let (lo, hi) = (seg.lo, seg.hi);
        let step = (hi - lo) / SCAN as f64;
        let grid: Vec<(f64, Signature)> =
            (0..SCAN).map(|i| lo + step * (i as f64 + 0.5)).map(|r| (r, signature(r))).collect();
        for w in grid.windows(2) {
            let ((a, Some((ca, fa))), (b, Some((cb, fb)))) = (w[0], w[1]) else { continue };
            if ca != cb {
                cuts.push(bisect(a, b, |r| signature(r).is_some_and(|(c, _)| c == ca)));
            }
            for j in 0..FEATURES {
                if fa[j].is_finite() && fb[j].is_finite() && (fa[j] > 0.0) != (fb[j] > 0.0) {
                    let left_pos = fa[j] > 0.0;
                    cuts.push(bisect(a, b, |r| {
                        signature(r).is_some_and(|(_, f)| f[j].is_finite() && (f[j] > 0.0) == left_pos)
                    }));
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    cuts
}

/// Boundary of a predicate that holds at `a` and fails at `b`.
fn bisect(mut a: f64, mut b: f64, holds: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..48 {
        let m = 0.5 * (a + b);
        if holds(m) {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-10 * (1.0 + a.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Raw association-aware double integral: per-component contributions
/// `[uav_los, uav_nlos, tbs_los_region, tbs_nlos_region, assoc_los,
/// assoc_nlos]`, none scaled by backhaul or availability.
fn association_integral(scenario: &Scenario, uav: &Point3, precision: &Precision) -> Result<([f64; 6], f64, usize)> {
    check_uav(uav)?;
    let k = Kernels::new(scenario);
    let env = scenario.env;
    let boundary = association_boundary(scenario);
    let (tbs2, uav2) = (scenario.tbs_proj(), uav.project());
    let h_u = uav.h;
    let h2 = h_u * h_u;
    let marginal = marginal_distance_pdf(&scenario.hotspot, &tbs2);
    let failure: Cell<Option<Error>> = Cell::new(None);
    let inner_evals = Cell::new(0usize);

    let inner = |r_b: f64| -> [f64; 6] {
        let run = || -> Result<[f64; 6]> {
            let geom = conditional_geometry(&scenario.hotspot, &tbs2, &uav2, r_b)?;
            let cond = conditional_distance_pdf(&geom)?;
            let kb = k.tbs(r_b);
            let lam_los = boundary.r_u_threshold(r_b, h_u, true);
            let lam_nlos = boundary.r_u_threshold(r_b, h_u, false);
            let panels = cond.panels_split(f64::NEG_INFINITY, f64::INFINITY, &[lam_los, lam_nlos]);
            let g = |r_u: f64| {
                let kappa = los_probability_access_at(&env, r_u, h_u);
                let (mut out, to_uav_los, to_uav_nlos) = ([0.0; 6], r_u < lam_los, r_u < lam_nlos);
                if to_uav_los || to_uav_nlos {
                    let (kl, kn) = k.uav(r_u * r_u + h2);
                    if to_uav_los {
                        out[0] = kappa * kl;
                        out[4] = kappa;
                    }
                    if to_uav_nlos {
                        out[1] = (1.0 - kappa) * kn;
                        out[5] = 1.0 - kappa;
                    }
                }
                if !to_uav_los {
                    out[2] = kappa * kb;
                }
                if !to_uav_nlos {
                    out[3] = (1.0 - kappa) * kb;
                }
                out
            };
            let (v, _, n) = expect_vec(&cond, &panels, g, &precision.inner)?;
            inner_evals.set(inner_evals.get() + n);
            Ok(v)
        };
        match run() {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                [0.0; 6]
            }
        }
    };

    let cuts = outer_cuts(scenario, uav, &boundary, &marginal);
    // Kinks at the cuts are typically of square-root type.
    let panels = marginal.panels_split(f64::NEG_INFINITY, f64::INFINITY, &cuts).all_singular();
    let outer = marginal.integrate_vec(&panels, inner, &precision.outer);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let outer = outer?;
    Ok((outer.value, outer.error, outer.evaluations + inner_evals.get()))
}

/// T-UAV system coverage: association-aware mix of UAV and TBS coverage
/// with an ideal (wired) backhaul.
pub fn system_coverage_tuav(scenario: &Scenario, uav: &Point3) -> Result<CoverageResult> {
    system_coverage_tuav_with(scenario, uav, &Precision::default())
}

pub fn system_coverage_tuav_with(scenario: &Scenario, uav: &Point3, precision: &Precision) -> Result<CoverageResult> {
    let (v, error, evaluations) = association_integral(scenario, uav, precision)?;
    let breakdown =
        Breakdown { uav_los: v[0], uav_nlos: v[1], tbs_los_region: v[2], tbs_nlos_region: v[3], unavailable: 0.0 };
    Ok(CoverageResult {
        value: breakdown.total(),
        quad_error: error,
        breakdown,
        uav_association: v[4] + v[5],
        evaluations,
    })
}

/// U-UAV system coverage: while airborne (fraction `duty_cycle`) the
/// UAV-served terms are scaled by the backhaul coverage; otherwise every
/// user falls back to the TBS.
pub fn system_coverage_uuav(scenario: &Scenario, uav: &Point3, duty_cycle: f64) -> Result<CoverageResult> {
    system_coverage_uuav_with(scenario, uav, duty_cycle, &Precision::default())
}

pub fn system_coverage_uuav_with(
    scenario: &Scenario,
    uav: &Point3,
    duty_cycle: f64,
    precision: &Precision,
) -> Result<CoverageResult> {
    UavMode::untethered(duty_cycle)?;
    check_uav(uav)?;
    let p_br = coverage_tbs_with(scenario, precision)?;
    let a = duty_cycle;
    let unavailable = (1.0 - a) * p_br.value;
    if a == 0.0 {
        return Ok(CoverageResult {
            value: p_br.value,
            quad_error: p_br.quad_error,
            breakdown: Breakdown { unavailable: p_br.value, ..Breakdown::default() },
            uav_association: 0.0,
            evaluations: p_br.evaluations,
        });
    }
    let p_bu = coverage_backhaul(scenario, uav)?;
    let (v, error, evaluations) = association_integral(scenario, uav, precision)?;
    let breakdown = Breakdown {
        uav_los: a * p_bu * v[0],
        uav_nlos: a * p_bu * v[1],
        tbs_los_region: a * v[2],
        tbs_nlos_region: a * v[3],
        unavailable,
    };
    Ok(CoverageResult {
        value: breakdown.total(),
        quad_error: a * error + (1.0 - a) * p_br.quad_error,
        breakdown,
        uav_association: a * (v[4] + v[5]),
        evaluations: evaluations + p_br.evaluations,
    })
}

/// System coverage for either UAV kind.
pub fn system_coverage(
    scenario: &Scenario,
    uav: &Point3,
    mode: UavMode,
    precision: &Precision,
) -> Result<CoverageResult> {
    match mode {
        UavMode::Tethered => system_coverage_tuav_with(scenario, uav, precision),
        UavMode::Untethered { duty_cycle } => system_coverage_uuav_with(scenario, uav, duty_cycle, precision),
    }
}
