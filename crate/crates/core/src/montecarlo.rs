//! Brute-force simulation of users, LoS states, fading and availability.
//!
//! Nothing here reuses the closed forms of [`crate::distributions`] or
//! [`crate::coverage`]: users are dropped in the plane, links are drawn and
//! SNRs compared with the threshold. The estimators are the oracles the
//! analytic results are tested against.
//!
//! Samples are split into fixed-size batches; batch `b` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `b`, and batch sums are
//! combined in batch order, so results do not depend on the thread count.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{los_probability_access, los_probability_backhaul, sample_nakagami_gain, sample_rayleigh_gain};
use crate::coverage::{Scenario, UavMode};
use crate::distributions::{HotSpot, PiecewisePdf};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3};
use crate::quadrature::QuadOptions;

const BATCH: usize = 1 << 15;

/// Spatial law of the users inside the hot-spot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UserDistribution {
    UniformDisk,
    /// Isotropic normal around the center, truncated to the disk.
    Gaussian {
        std: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub user_distribution: UserDistribution,
}

impl McConfig {
    /// Uniform users.
    pub fn new(n_samples: usize, seed: u64) -> Result<Self> {
        Self::with_users(n_samples, seed, UserDistribution::UniformDisk)
    }

    pub fn with_users(n_samples: usize, seed: u64, user_distribution: UserDistribution) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::invalid("n_samples", "need at least one sample"));
        }
        if let UserDistribution::Gaussian { std } = user_distribution {
            if !(std >= 0.0) || !std.is_finite() {
                return Err(Error::invalid("std", "must be finite and >= 0"));
            }
        }
        Ok(Self { n_samples, seed, user_distribution })
    }
}

/// Sample mean with its standard error `s / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl McEstimate {
    /// Whether `value` lies within `max(floor, k · std_error)` of the mean.
    pub fn agrees_with(&self, value: f64, floor: f64, k: f64) -> bool {
        (self.mean - value).abs() <= floor.max(k * self.std_error)
    }
}

/// Neumaier-compensated sums of `x` and `x²`.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    comp: f64,
    sum2: f64,
    comp2: f64,
    n: usize,
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl Moments {
    fn push(&mut self, x: f64) {
        neumaier(&mut self.sum, &mut self.comp, x);
        neumaier(&mut self.sum2, &mut self.comp2, x * x);
        self.n += 1;
    }

    fn merge(&mut self, other: &Moments) {
        neumaier(&mut self.sum, &mut self.comp, other.sum);
        neumaier(&mut self.sum, &mut self.comp, other.comp);
        neumaier(&mut self.sum2, &mut self.comp2, other.sum2);
        neumaier(&mut self.sum2, &mut self.comp2, other.comp2);
        self.n += other.n;
    }

    fn estimate(&self) -> McEstimate {
        let n = self.n as f64;
        let mean = (self.sum + self.comp) / n;
        let var = if self.n > 1 { ((self.sum2 + self.comp2) - n * mean * mean).max(0.0) / (n - 1.0) } else { 0.0 };
        McEstimate { mean, std_error: (var / n).sqrt(), n: self.n }
    }
}

/// Runs `f` on per-batch streams in parallel and returns the batch results
/// in batch order.
fn batched<T: Send, F>(cfg: &McConfig, f: F) -> Result<Vec<T>>
where
    F: Fn(&mut ChaCha8Rng, usize) -> Result<T> + Sync,
{
    let n_batches = cfg.n_samples.div_ceil(BATCH);
    (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let len = BATCH.min(cfg.n_samples - b * BATCH);
            f(&mut rng, len)
        })
        .collect()
}

/// Mean of `n_samples` draws of `f`.
fn estimate_mean<F>(cfg: &McConfig, f: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let batches = batched(cfg, |rng, len| {
        let mut m = Moments::default();
        for _ in 0..len {
            m.push(f(rng)?);
        }
        Ok(m)
    })?;
    let mut total = Moments::default();
    for m in &batches {
        total.merge(m);
    }
    Ok(total.estimate())
}

/// A user position: radius `R√U` for the uniform disk; for the Gaussian,
/// normal draws around the center until one lands inside.
pub fn sample_user<R: Rng + ?Sized>(rng: &mut R, hotspot: &HotSpot, distribution: &UserDistribution) -> Point2 {
    match *distribution {
        UserDistribution::UniformDisk => {
            let r = hotspot.radius * rng.random::<f64>().sqrt();
            hotspot.center.polar_offset(r, TAU * rng.random::<f64>())
        }
        UserDistribution::Gaussian { std } => loop {
            let dx: f64 = StandardNormal.sample(rng);
            let dy: f64 = StandardNormal.sample(rng);
            let p = Point2::new(hotspot.center.x + std * dx, hotspot.center.y + std * dy);
            if hotspot.contains(&p) {
                return p;
            }
        },
    }
}

/// `n` users from one seeded stream.
pub fn sample_users(hotspot: &HotSpot, distribution: &UserDistribution, n: usize, seed: u64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_user(&mut rng, hotspot, distribution)).collect()
}

/// Equal-width histogram normalized to unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    /// Fraction of the samples in each bin.
    pub mass: Vec<f64>,
    pub n: usize,
}

impl Histogram {
    fn from_counts(lo: f64, hi: f64, counts: &[u64], n: usize) -> Self {
        let mass = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self { lo, hi, mass, n }
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.mass.len() as f64
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }

    /// Density estimate in bin `i`.
    pub fn density(&self, i: usize) -> f64 {
        self.mass[i] / self.bin_width()
    }

    /// Binned L1 distance `Σ |p̂_i − p_i|` to `pdf`, plus the mass `pdf`
    /// puts outside the histogram range.
    pub fn l1_distance(&self, pdf: &PiecewisePdf, opts: &QuadOptions) -> Result<f64> {
        let mut l1 = 0.0;
        let mut inside = 0.0;
        for (i, &m) in self.mass.iter().enumerate() {
            let (a, b) = self.bin_edges(i);
            let p = pdf.mass_between(a, b, opts)?;
            inside += p;
            l1 += (m - p).abs();
        }
        Ok(l1 + (1.0 - inside).max(0.0))
    }
}

fn index_of(x: f64, lo: f64, hi: f64, bins: usize) -> Option<usize> {
    if !(x >= lo && x <= hi) {
        return None;
    }
    Some((((x - lo) / (hi - lo)) * bins as f64).min(bins as f64 - 1.0) as usize)
}

fn histogram_of<F>(cfg: &McConfig, lo: f64, hi: f64, bins: usize, draw: F) -> Result<Histogram>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if bins == 0 || !(hi > lo) {
        return Err(Error::invalid("bins", "need at least one bin over a non-empty range"));
    }
    let batches = batched(cfg, |rng, len| {
        let mut counts = vec![0u64; bins];
        for _ in 0..len {
            if let Some(i) = index_of(draw(rng), lo, hi, bins) {
                counts[i] += 1;
            }
        }
        Ok(counts)
    })?;
    let mut counts = vec![0u64; bins];
    for c in &batches {
        for (t, v) in counts.iter_mut().zip(c) {
            *t += v;
        }
    }
    Ok(Histogram::from_counts(lo, hi, &counts, cfg.n_samples))
}

/// Histogram of the horizontal distance from `anchor` to a user, over the
/// range `[max(0, D − R), D + R]`.
pub fn estimate_distance_pdf(cfg: &McConfig, hotspot: &HotSpot, anchor: &Point2, bins: usize) -> Result<Histogram> {
    let d = anchor.distance(&hotspot.center);
    let (lo, hi) = ((d - hotspot.radius).max(0.0), d + hotspot.radius);
    let users = cfg.user_distribution;
    histogram_of(cfg, lo, hi, bins, |rng| sample_user(rng, hotspot, &users).distance(anchor))
}

/// Histogram of the UAV distance of uniform users whose TBS distance lies
/// within `half_width` of `r_b`.
///
/// A uniform user conditioned on the band is uniform on the annulus
/// `r_b ± half_width` around the TBS clipped to the disk, so users are drawn
/// uniformly on the annulus and kept when inside the disk until
/// `n_samples` survive. Distances outside `range` are dropped from the
/// counts but not from the normalization.
#[allow(clippy::too_many_arguments)]
pub fn estimate_conditional_distance_pdf(
    cfg: &McConfig,
    hotspot: &HotSpot,
    tbs: &Point2,
    uav: &Point2,
    r_b: f64,
    half_width: f64,
    range: (f64, f64),
    bins: usize,
) -> Result<Histogram> {
    if !(half_width > 0.0) || !(r_b >= 0.0) {
        return Err(Error::invalid("half_width", "need half_width > 0 and r_b >= 0"));
    }
    let d = tbs.distance(&hotspot.center);
    let (inner, outer) = ((r_b - half_width).max(0.0), r_b + half_width);
    if d + hotspot.radius <= inner || (d - hotspot.radius) >= outer {
        return Err(Error::Degenerate("band misses the hot-spot".into()));
    }
    let (lo, hi) = range;
    let (a2, b2) = (inner * inner, outer * outer);
    histogram_of(cfg, lo, hi, bins, |rng| loop {
        let r = (a2 + (b2 - a2) * rng.random::<f64>()).sqrt();
        let p = tbs.polar_offset(r, TAU * rng.random::<f64>());
        if hotspot.contains(&p) {
            return p.distance(uav);
        }
    })
}

/// Which single link to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkKind {
    /// TBS to a hot-spot user.
    Tbs,
    /// UAV to a hot-spot user.
    UavAccess { uav: Point3 },
    /// TBS to the UAV.
    Backhaul { uav: Point3 },
}

fn aerial_snr(scenario: &Scenario, from: &Point3, to: &Point3, los: bool, gain: f64) -> f64 {
    let l = &scenario.link;
    l.rho_u * gain * from.distance(to).powf(-l.alpha_u) / (l.sigma_n2 * l.eta(los))
}

fn terrestrial_snr(scenario: &Scenario, user: &Point3, gain: f64) -> f64 {
    let l = &scenario.link;
    l.rho_b * gain * scenario.tbs.distance(user).powf(-l.alpha_b) / l.sigma_n2
}

fn tbs_covered<R: Rng + ?Sized>(rng: &mut R, scenario: &Scenario, user: &Point3) -> bool {
    terrestrial_snr(scenario, user, sample_rayleigh_gain(rng, scenario.link.mu)) > scenario.threshold.beta
}

fn backhaul_covered<R: Rng + ?Sized>(rng: &mut R, scenario: &Scenario, uav: &Point3) -> bool {
    let los = rng.random::<f64>() < los_probability_backhaul(&scenario.env, &scenario.tbs, uav);
    let g = sample_nakagami_gain(rng, scenario.link.m);
    aerial_snr(scenario, &scenario.tbs, uav, los, g) > scenario.threshold.beta
}

fn check_uav(scenario: &Scenario, uav: &Point3) -> Result<()> {
    if !uav.is_finite() || !(uav.h > 0.0) {
        return Err(Error::invalid("uav", "coordinates must be finite with h > 0"));
    }
    if scenario.tbs.distance(uav) == 0.0 {
        return Err(Error::Degenerate("UAV coincides with the TBS".into()));
    }
    Ok(())
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Coverage probability of one link: draw the user (except for the
/// backhaul), the aerial LoS state and the fading, and compare the SNR with
/// the threshold.
pub fn estimate_link_coverage(cfg: &McConfig, scenario: &Scenario, link: LinkKind) -> Result<McEstimate> {
    let s = scenario;
    let beta = s.threshold.beta;
    match link {
        LinkKind::Tbs => estimate_mean(cfg, |rng| {
            let user = sample_user(rng, &s.hotspot, &cfg.user_distribution).at_height(0.0);
            Ok(indicator(tbs_covered(rng, s, &user)))
        }),
        LinkKind::UavAccess { uav } => {
            check_uav(s, &uav)?;
            estimate_mean(cfg, |rng| {
                let user = sample_user(rng, &s.hotspot, &cfg.user_distribution);
                let los = rng.random::<f64>() < los_probability_access(&s.env, &uav, &user);
                let g = sample_nakagami_gain(rng, s.link.m);
                Ok(indicator(aerial_snr(s, &uav, &user.at_height(0.0), los, g) > beta))
            })
        }
        LinkKind::Backhaul { uav } => {
            check_uav(s, &uav)?;
            estimate_mean(cfg, |rng| Ok(indicator(backhaul_covered(rng, s, &uav))))
        }
    }
}

/// Outcome of one simulated user.
#[derive(Debug, Clone, Copy)]
struct Draw {
    covered: bool,
    uav_served: bool,
}

fn draw_system<R: Rng + ?Sized>(rng: &mut R, cfg: &McConfig, s: &Scenario, uav: &Point3, mode: UavMode) -> Draw {
    let user2 = sample_user(rng, &s.hotspot, &cfg.user_distribution);
    let user = user2.at_height(0.0);
    if let UavMode::Untethered { duty_cycle } = mode {
        if rng.random::<f64>() >= duty_cycle {
            return Draw { covered: tbs_covered(rng, s, &user), uav_served: false };
        }
    }
    // One LoS state decides the association and then drives the link.
    let los = rng.random::<f64>() < los_probability_access(&s.env, uav, &user2);
    let uav_mean = aerial_snr(s, uav, &user, los, 1.0);
    let tbs_mean = terrestrial_snr(s, &user, 1.0);
    if uav_mean < tbs_mean {
        return Draw { covered: tbs_covered(rng, s, &user), uav_served: false };
    }
    let g = sample_nakagami_gain(rng, s.link.m);
    let access = uav_mean * g > s.threshold.beta;
    let covered = match mode {
        UavMode::Tethered => access,
        UavMode::Untethered { .. } => access && backhaul_covered(rng, s, uav),
    };
    Draw { covered, uav_served: true }
}

/// Paired estimates from one simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemEstimate {
    pub coverage: McEstimate,
    /// Share of users served by the UAV (airborne and preferred).
    pub association: McEstimate,
}

/// Coverage and association of a random user under the average-SNR policy:
/// availability, LoS state, association, fresh fading on the serving link
/// and, for a U-UAV, an independent backhaul draw.
pub fn simulate_system(cfg: &McConfig, scenario: &Scenario, uav: &Point3, mode: UavMode) -> Result<SystemEstimate> {
    check_uav(scenario, uav)?;
    if let UavMode::Untethered { duty_cycle } = mode {
        UavMode::untethered(duty_cycle)?;
    }
    let batches = batched(cfg, |rng, len| {
        let (mut cov, mut assoc) = (Moments::default(), Moments::default());
        for _ in 0..len {
            let d = draw_system(rng, cfg, scenario, uav, mode);
            cov.push(indicator(d.covered));
            assoc.push(indicator(d.uav_served));
        }
        Ok((cov, assoc))
    })?;
    let (mut cov, mut assoc) = (Moments::default(), Moments::default());
    for (c, a) in &batches {
        cov.merge(c);
        assoc.merge(a);
    }
    Ok(SystemEstimate { coverage: cov.estimate(), association: assoc.estimate() })
}

pub fn estimate_system_coverage(
    cfg: &McConfig,
    scenario: &Scenario,
    uav: &Point3,
    mode: UavMode,
) -> Result<McEstimate> {
    Ok(simulate_system(cfg, scenario, uav, mode)?.coverage)
}

pub fn estimate_association_probability(
    cfg: &McConfig,
    scenario: &Scenario,
    uav: &Point3,
    mode: UavMode,
) -> Result<McEstimate> {
    Ok(simulate_system(cfg, scenario, uav, mode)?.association)
}
