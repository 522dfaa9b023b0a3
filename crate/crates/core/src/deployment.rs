//! Placement of the UAV.
//!
//! A T-UAV is searched on the part of its cropped cone surface that can
//! hold the optimum (the region between the direction pointing away from
//! the TBS and the direction pointing at the hot-spot center). A U-UAV is
//! searched on the x-axis, on the hot-spot side of the TBS. Both searches
//! run either exhaustively on a lattice or by simulated annealing snapped
//! to the same lattice, so an annealed optimum never beats the exhaustive
//! one.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::Preset;
use crate::coverage::{
    coverage_tbs_with, system_coverage, system_coverage_tuav_with, CoverageResult, Precision, Scenario, UavMode,
};
use crate::error::{Error, Result};
use crate::geometry::{angle_from_east, AngularInterval, CroppedCone, Point2, Point3, SphericalCone};

/// A rooftop that can host the tether anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub location: Point3,
    pub accessible: bool,
}

impl GroundStation {
    pub fn new(location: Point3) -> Self {
        Self { location, accessible: true }
    }
}

/// Tether length and minimum elevation angle (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tether {
    pub length: f64,
    pub min_inclination: f64,
}

impl Tether {
    pub fn new(length: f64, min_inclination: f64) -> Result<Self> {
        let t = Self { length, min_inclination };
        t.cone(Point3::new(0.0, 0.0, 0.0))?;
        Ok(t)
    }

    /// 50 m at 30°.
    pub fn table_defaults() -> Self {
        Self { length: 50.0, min_inclination: 30f64.to_radians() }
    }

    pub fn with_length(self, length: f64) -> Self {
        Self { length, ..self }
    }

    pub fn cone(&self, apex: Point3) -> Result<SphericalCone> {
        SphericalCone::new(apex, self.length, self.min_inclination)
    }
}

/// Reflection that brings a ground station into `y ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mirror {
    Identity,
    FlipY,
}

impl Mirror {
    /// Maps a point between the mirrored and the original frame (the map is
    /// an involution).
    pub fn apply(self, p: Point3) -> Point3 {
        match self {
            Mirror::Identity => p,
            Mirror::FlipY => Point3::new(p.x, -p.y, p.h),
        }
    }
}

/// Reflects a ground station with `y < 0` across the x-axis. The canonical
/// scenario is symmetric about that axis, so optimizing in the mirrored
/// frame and mapping back with the returned [`Mirror`] loses nothing.
pub fn mirror_canonicalize(gs: &GroundStation) -> (GroundStation, Mirror) {
    if gs.location.y < 0.0 {
        let m = Mirror::FlipY;
        (GroundStation { location: m.apply(gs.location), ..*gs }, m)
    } else {
        (*gs, Mirror::Identity)
    }
}

/// The part of the cropped cone surface that contains the T-UAV optimum:
/// directions `ψ` (seen from the ground station) between `psi1`, pointing
/// away from the TBS, and `psi2`, pointing at the hot-spot center, at full
/// radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalSurface {
    pub gs: GroundStation,
    pub tether: Tether,
    pub psi1: f64,
    pub psi2: f64,
    /// The directions kept, running from `psi1` to `psi2` the short way.
    pub interval: AngularInterval,
    pub cone: CroppedCone,
}

impl OptimalSurface {
    pub fn h_range(&self) -> (f64, f64) {
        (self.cone.cone.min_height(), self.cone.cone.max_height())
    }

    /// Surface point at height `h` in direction `psi`.
    pub fn point(&self, h: f64, psi: f64) -> Result<Point3> {
        self.cone.surface_point(h, psi)
    }

    /// Horizontal distance from `p` to the surface curve at height `p.h`.
    /// `samples` directions are checked, plus the interval ends.
    pub fn horizontal_distance(&self, p: &Point3, samples: usize) -> Result<f64> {
        let mut best = f64::INFINITY;
        let n = samples.max(1);
        for k in 0..=n {
            let q = self.point(p.h, self.interval.lerp(k as f64 / n as f64))?;
            best = best.min(q.project().distance(&p.project()));
        }
        Ok(best)
    }
}

/// Builds the optimal surface for a ground station with `y ≥ 0`.
pub fn optimal_surface(scenario: &Scenario, gs: &GroundStation, tether: &Tether) -> Result<OptimalSurface> {
    if gs.location.y < 0.0 {
        return Err(Error::invalid("gs.location.y", "mirror the ground station into y >= 0 first"));
    }
    let cone = CroppedCone::new(tether.cone(gs.location)?)?;
    let gs2 = gs.location.project();
    let psi1 = angle_from_east(&scenario.tbs_proj(), &gs2)
        .map_err(|_| Error::Degenerate("ground station directly above the TBS".into()))?;
    let psi2 = angle_from_east(&gs2, &scenario.hotspot.center)
        .map_err(|_| Error::Degenerate("ground station directly above the hot-spot center".into()))?;
    let ccw = (psi2 - psi1).rem_euclid(TAU);
    let interval = if (ccw - PI).abs() <= 1e-12 {
        // Opposite directions (station on the x-axis): keep the half that
        // points into y ≥ 0, the cropped half being a single ray.
        if AngularInterval::new(psi1, PI).contains(PI / 2.0) {
            AngularInterval::new(psi1, PI)
        } else {
            AngularInterval::new(psi2, PI)
        }
    } else if ccw < PI {
        AngularInterval::new(psi1, ccw)
    } else {
        AngularInterval::new(psi2, TAU - ccw)
    };
    Ok(OptimalSurface { gs: *gs, tether: *tether, psi1, psi2, interval, cone })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Grid,
    Anneal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best_location: Point3,
    pub best_value: f64,
    /// UAV association probability at the optimum.
    pub best_association: f64,
    /// Distinct coverage evaluations.
    pub evaluations: usize,
    /// Every evaluated location, in evaluation order.
    pub trace: Vec<(Point3, f64)>,
    pub method: Method,
}

impl OptimizationReport {
    fn from_trace(trace: Vec<(Point3, CoverageResult)>, method: Method) -> Result<Self> {
        let mut best: Option<(Point3, CoverageResult)> = None;
        for &(p, c) in &trace {
            if best.is_none_or(|(_, b)| c.value > b.value) {
                best = Some((p, c));
            }
        }
        let (best_location, best) = best.ok_or_else(|| Error::EmptySearchSpace("no point evaluated".into()))?;
        Ok(Self {
            best_location,
            best_value: best.value,
            best_association: best.uav_association,
            evaluations: trace.len(),
            trace: trace.into_iter().map(|(p, c)| (p, c.value)).collect(),
            method,
        })
    }

    fn mirrored(mut self, m: Mirror) -> Self {
        self.best_location = m.apply(self.best_location);
        for (p, _) in &mut self.trace {
            *p = m.apply(*p);
        }
        self
    }
}

/// Lattice on the optimal surface: `h_divisions` equal height steps over
/// `[h_n, h_n + T]` and direction steps of at most `psi_step` across the
/// interval, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub psi_step: f64,
    pub h_divisions: usize,
}

impl Default for SurfaceGrid {
    /// 1° by `T/50`.
    fn default() -> Self {
        Self { psi_step: 1f64.to_radians(), h_divisions: 50 }
    }
}

struct Lattice {
    surface: OptimalSurface,
    n_h: usize,
    n_psi: usize,
    /// First height index with a positive altitude.
    i_min: usize,
}

impl Lattice {
    fn new(surface: OptimalSurface, grid: &SurfaceGrid) -> Result<Self> {
        if !(grid.psi_step > 0.0) || grid.h_divisions == 0 {
            return Err(Error::invalid("grid", "psi_step must be > 0 and h_divisions >= 1"));
        }
        let n_psi = (surface.interval.sweep / grid.psi_step - 1e-9).ceil().max(0.0) as usize;
        let n_h = grid.h_divisions;
        let i_min = if surface.gs.location.h > 0.0 { 0 } else { 1 };
        Ok(Self { surface, n_h, n_psi, i_min })
    }

    fn h(&self, i: usize) -> f64 {
        let (lo, _) = self.surface.h_range();
        if i == self.n_h {
            self.surface.h_range().1
        } else {
            lo + self.surface.tether.length * i as f64 / self.n_h as f64
        }
    }

    fn psi(&self, j: usize) -> f64 {
        if self.n_psi == 0 {
            return self.surface.interval.start;
        }
        self.surface.interval.lerp(j as f64 / self.n_psi as f64)
    }

    fn point(&self, i: usize, j: usize) -> Result<Point3> {
        self.surface.point(self.h(i), self.psi(j))
    }

    fn nearest(&self, target: &Point3) -> Result<(usize, usize)> {
        let mut best = ((self.i_min, 0), f64::INFINITY);
        for (i, j) in self.indices() {
            let d = self.point(i, j)?.distance(target);
            if d < best.1 {
                best = ((i, j), d);
            }
        }
        Ok(best.0)
    }

    fn indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.i_min..=self.n_h).flat_map(move |i| (0..=self.n_psi).map(move |j| (i, j)))
    }
}

fn tuav_objective<'a>(
    scenario: &'a Scenario,
    precision: &Precision,
) -> impl Fn(&Point3) -> Result<CoverageResult> + Sync + 'a {
    let precision = *precision;
    move |p: &Point3| system_coverage_tuav_with(scenario, p, &precision)
}

/// Exhaustive search over the surface lattice of a ground station with
/// `y ≥ 0`.
pub fn grid_search_tuav(
    scenario: &Scenario,
    gs: &GroundStation,
    tether: &Tether,
    grid: &SurfaceGrid,
    precision: &Precision,
) -> Result<OptimizationReport> {
    let lattice = Lattice::new(optimal_surface(scenario, gs, tether)?, grid)?;
    let f = tuav_objective(scenario, precision);
    let idx: Vec<(usize, usize)> = lattice.indices().collect();
    let trace = idx
        .par_iter()
        .map(|&(i, j)| {
            let p = lattice.point(i, j)?;
            Ok((p, f(&p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    OptimizationReport::from_trace(trace, Method::Grid)
}

/// Simulated-annealing settings. Proposals are Gaussian steps in `(h, ψ)`
/// clamped to the surface and snapped to `grid`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub initial_temperature: f64,
    pub cooling: f64,
    pub steps: usize,
    /// Height step std as a fraction of the tether length.
    pub h_std_fraction: f64,
    /// Direction step std in radians.
    pub psi_std: f64,
    /// Start at the lattice point nearest to this location (typically the
    /// unconstrained optimum); `None` starts at the middle direction and
    /// the height of widest reach.
    pub start_near: Option<Point3>,
    pub grid: SurfaceGrid,
}

impl Default for AnnealParams {
    fn default() -> Self {
        Self {
            initial_temperature: 0.002,
            cooling: 0.9,
            steps: 40,
            h_std_fraction: 0.1,
            psi_std: 0.2,
            start_near: None,
            grid: SurfaceGrid::default(),
        }
    }
}

impl AnnealParams {
    fn validate(&self) -> Result<()> {
        if !(self.initial_temperature > 0.0) || !(self.cooling > 0.0 && self.cooling <= 1.0) {
            return Err(Error::invalid("anneal", "temperature must be > 0 and cooling in (0, 1]"));
        }
        if !(self.h_std_fraction >= 0.0) || !(self.psi_std >= 0.0) {
            return Err(Error::invalid("anneal", "proposal std must be >= 0"));
        }
        Ok(())
    }
}

/// Annealed search on the surface lattice: Metropolis acceptance with
/// geometric cooling, returning the best point seen.
pub fn anneal_tuav(
    scenario: &Scenario,
    gs: &GroundStation,
    tether: &Tether,
    params: &AnnealParams,
    precision: &Precision,
    seed: u64,
) -> Result<OptimizationReport> {
    params.validate()?;
    let lattice = Lattice::new(optimal_surface(scenario, gs, tether)?, &params.grid)?;
    let f = tuav_objective(scenario, precision);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut trace = Vec::new();
    let mut eval = |i: usize, j: usize, trace: &mut Vec<(Point3, CoverageResult)>| -> Result<f64> {
        if let Some(&v) = cache.get(&(i, j)) {
            return Ok(v);
        }
        let p = lattice.point(i, j)?;
        let c = f(&p)?;
        cache.insert((i, j), c.value);
        trace.push((p, c));
        Ok(c.value)
    };

    let junction = lattice.surface.cone.cone.junction_height();
    let (h_lo, _) = lattice.surface.h_range();
    let i0 = (((junction - h_lo) / tether.length) * lattice.n_h as f64).round() as usize;
    let mut cur = match params.start_near {
        Some(target) => lattice.nearest(&target)?,
        None => (i0.clamp(lattice.i_min, lattice.n_h), lattice.n_psi / 2),
    };
    let mut cur_v = eval(cur.0, cur.1, &mut trace)?;

    let h_cells = params.h_std_fraction * lattice.n_h as f64;
    let psi_cells =
        if lattice.n_psi == 0 { 0.0 } else { params.psi_std * lattice.n_psi as f64 / lattice.surface.interval.sweep };
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut temp = params.initial_temperature;
    for _ in 0..params.steps {
        let di = h_cells * unit.sample(&mut rng);
        let dj = psi_cells * unit.sample(&mut rng);
        let i = (cur.0 as f64 + di).round().clamp(lattice.i_min as f64, lattice.n_h as f64) as usize;
        let j = (cur.1 as f64 + dj).round().clamp(0.0, lattice.n_psi as f64) as usize;
        let v = eval(i, j, &mut trace)?;
        let u: f64 = rng.random();
        if v >= cur_v || u < ((v - cur_v) / temp).exp() {
            cur = (i, j);
            cur_v = v;
        }
        temp *= params.cooling;
    }
    OptimizationReport::from_trace(trace, Method::Anneal)
}

/// How T-UAV positions are searched per ground station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TuavSearch {
    Grid(SurfaceGrid),
    /// Annealing, seeded per ground station from `seed` and the station
    /// coordinates so results do not depend on list order.
    Anneal {
        params: AnnealParams,
        seed: u64,
    },
}

impl Default for TuavSearch {
    fn default() -> Self {
        TuavSearch::Grid(SurfaceGrid::default())
    }
}

/// Stable 64-bit mix (SplitMix64 finalizer).
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for annealing around one ground station.
pub fn station_seed(seed: u64, gs: &GroundStation, tether: &Tether) -> u64 {
    [gs.location.x, gs.location.y, gs.location.h, tether.length, tether.min_inclination]
        .iter()
        .fold(mix(seed), |acc, v| mix(acc ^ v.to_bits()))
}

/// Optimizes one ground station in any half-plane: mirrors, searches, and
/// maps the optimum back.
pub fn optimize_station(
    scenario: &Scenario,
    gs: &GroundStation,
    tether: &Tether,
    search: &TuavSearch,
    precision: &Precision,
) -> Result<OptimizationReport> {
    let (canon, m) = mirror_canonicalize(gs);
    let report = match search {
        TuavSearch::Grid(grid) => grid_search_tuav(scenario, &canon, tether, grid, precision)?,
        TuavSearch::Anneal { params, seed } => {
            anneal_tuav(scenario, &canon, tether, params, precision, station_seed(*seed, gs, tether))?
        }
    };
    Ok(report.mirrored(m))
}

/// Best accessible ground station and its optimized T-UAV position. Ties
/// go to the lexicographically smallest station `(x, y, h)`, making the
/// result independent of list order.
pub fn best_gs_selection(
    scenario: &Scenario,
    gs_list: &[GroundStation],
    tether: &Tether,
    search: &TuavSearch,
    precision: &Precision,
) -> Result<(GroundStation, OptimizationReport)> {
    let mut candidates: Vec<&GroundStation> = gs_list.iter().filter(|g| g.accessible).collect();
    if candidates.is_empty() {
        return Err(Error::NoAccessibleGroundStation);
    }
    let key = |g: &GroundStation| [g.location.x, g.location.y, g.location.h];
    candidates.sort_by(|a, b| {
        key(a)
            .iter()
            .zip(key(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let reports = candidates
        .iter()
        .map(|g| optimize_station(scenario, g, tether, search, precision))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, r) in reports.iter().enumerate() {
        if r.best_value > reports[best].best_value {
            best = k;
        }
    }
    let gs = *candidates[best];
    Ok((gs, reports.into_iter().nth(best).expect("index in range")))
}

/// U-UAV search box on the x-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UuavBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub h_step: f64,
}

impl UuavBounds {
    /// `x` from the far hot-spot edge to the TBS, `h` in `[10, 300]` by 2 m.
    pub fn default_for(scenario: &Scenario) -> Self {
        Self {
            x_min: scenario.hotspot.center.x - scenario.hotspot.radius,
            x_max: scenario.tbs.x,
            h_min: 10.0,
            h_max: 300.0,
            h_step: 2.0,
        }
    }
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

/// Exhaustive U-UAV search on the x-axis at `x ≤ x_b`, with `step` along x.
pub fn grid_search_uuav(
    scenario: &Scenario,
    duty_cycle: f64,
    bounds: &UuavBounds,
    step: f64,
    precision: &Precision,
) -> Result<OptimizationReport> {
    let bounds = UuavBounds { x_max: bounds.x_max.min(scenario.tbs.x), ..*bounds };
    grid_search_axis(scenario, UavMode::untethered(duty_cycle)?, &bounds, step, precision)
}

/// Exhaustive search on the x-axis over `bounds` for either UAV kind. For
/// a T-UAV this ignores the tether and gives the unconstrained optimum.
pub fn grid_search_axis(
    scenario: &Scenario,
    mode: UavMode,
    bounds: &UuavBounds,
    step: f64,
    precision: &Precision,
) -> Result<OptimizationReport> {
    if !(step > 0.0) || !(bounds.h_step > 0.0) {
        return Err(Error::invalid("step", "grid steps must be > 0"));
    }
    if !(bounds.x_min <= bounds.x_max) || !(bounds.h_min <= bounds.h_max) || !(bounds.h_max > 0.0) {
        return Err(Error::EmptySearchSpace(format!(
            "x in [{}, {}], h in [{}, {}]",
            bounds.x_min, bounds.x_max, bounds.h_min, bounds.h_max
        )));
    }
    let hs: Vec<f64> = axis(bounds.h_min, bounds.h_max, bounds.h_step).into_iter().filter(|&h| h > 0.0).collect();
    let pts: Vec<Point3> = axis(bounds.x_min, bounds.x_max, step)
        .into_iter()
        .flat_map(|x| hs.iter().map(move |&h| Point3::new(x, 0.0, h)))
        // A UAV inside the TBS mast has no defined backhaul.
        .filter(|p| p.distance(&scenario.tbs) > 1e-9)
        .collect();
    let trace =
        pts.par_iter().map(|p| Ok((*p, system_coverage(scenario, p, mode, precision)?))).collect::<Result<Vec<_>>>()?;
    OptimizationReport::from_trace(trace, Method::Grid)
}

/// Unconstrained T-UAV optimum on the x-axis across the hot-spot, `h` in
/// `[10, 300]`, on an 8 m by 2 m grid. Used to warm-start annealing.
pub fn free_optimum_tuav(scenario: &Scenario, precision: &Precision) -> Result<OptimizationReport> {
    let (c, r) = (scenario.hotspot.center.x, scenario.hotspot.radius);
    let bounds = UuavBounds { x_min: c - r, x_max: c + r, ..UuavBounds::default_for(scenario) };
    grid_search_axis(scenario, UavMode::Tethered, &bounds, 8.0, precision)
}

/// Axis-aligned square where ground stations are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub center: Point2,
    pub half_side: f64,
}

impl Region {
    /// Square of side `2(R_o + T)` around the hot-spot.
    pub fn around_hotspot(scenario: &Scenario, tether: &Tether) -> Self {
        Self { center: scenario.hotspot.center, half_side: scenario.hotspot.radius + tether.length }
    }

    pub fn area_km2(&self) -> f64 {
        (2.0 * self.half_side / 1000.0).powi(2)
    }
}

/// Building statistics of the random ground-station field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildingField {
    /// Rayleigh scale of the building heights (m).
    pub gamma1: f64,
    /// Buildings per km².
    pub gamma3: f64,
}

impl BuildingField {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::DenseUrban => Self { gamma1: 20.0, gamma3: 300.0 },
            Preset::HighRise => Self { gamma1: 50.0, gamma3: 300.0 },
        }
    }
}

/// Settings of a randomized ground-station ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub region: Region,
    pub field: BuildingField,
    pub tether: Tether,
    pub n_trials: usize,
    pub seed: u64,
    pub anneal: AnnealParams,
    pub precision: Precision,
}

impl EnsembleConfig {
    /// 200 trials over the reachable square, default annealing and coarse
    /// quadrature.
    pub fn new(scenario: &Scenario, field: BuildingField, tether: Tether, seed: u64) -> Self {
        Self {
            region: Region::around_hotspot(scenario, &tether),
            field,
            tether,
            n_trials: 200,
            seed,
            anneal: AnnealParams::default(),
            precision: Precision::coarse(),
        }
    }
}

/// Mean system coverage over the ensemble for one accessibility level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub delta_a: f64,
    pub mean: f64,
    pub std_err: f64,
    /// Half-width of the normal 95 % interval.
    pub ci95: f64,
    pub mean_association: f64,
    pub association_std_err: f64,
    pub n_trials: usize,
    /// Trials without an accessible station (TBS-only coverage).
    pub tbs_only_trials: usize,
}

/// One trial's station field, as `(station, uniform draw)` pairs. Accessibility is decided later by comparing
/// each station's uniform draw with `δ_A`, so every accessibility level
/// sees the same buildings and the accessible sets are nested.
pub fn sample_stations(
    region: &Region,
    field: &BuildingField,
    seed: u64,
    trial: u64,
) -> Result<Vec<(GroundStation, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let mean = field.gamma3 * region.area_km2();
    let count = if mean > 0.0 {
        Poisson::new(mean).map_err(|e| Error::invalid("gamma3", e.to_string()))?.sample(&mut rng) as usize
    } else {
        0
    };
    // Rayleigh(γ1) is Weibull with shape 2 and scale γ1·√2.
    let heights = Weibull::new(field.gamma1 * 2f64.sqrt(), 2.0).map_err(|e| Error::invalid("gamma1", e.to_string()))?;
    Ok((0..count)
        .map(|_| {
            let x = region.center.x + region.half_side * (2.0 * rng.random::<f64>() - 1.0);
            let y = region.center.y + region.half_side * (2.0 * rng.random::<f64>() - 1.0);
            let h = heights.sample(&mut rng);
            let u: f64 = rng.random();
            (GroundStation::new(Point3::new(x, y, h)), u)
        })
        .collect())
}

/// Ensemble means of the optimized T-UAV coverage for several accessibility
/// levels, all sharing the same random fields. Each trial keeps the best
/// accessible station (annealed); trials without one score the TBS-only
/// coverage.
pub fn random_gs_ensemble_sweep(
    scenario: &Scenario,
    config: &EnsembleConfig,
    delta_as: &[f64],
) -> Result<Vec<EnsembleStats>> {
    if config.n_trials == 0 {
        return Err(Error::invalid("n_trials", "need at least one trial"));
    }
    if delta_as.iter().any(|d| !(0.0..=1.0).contains(d)) {
        return Err(Error::invalid("delta_a", "accessibility must lie in [0, 1]"));
    }
    let p_br = coverage_tbs_with(scenario, &config.precision)?.value;
    let d_max = delta_as.iter().copied().fold(0.0, f64::max);
    let mut params = config.anneal;
    if params.start_near.is_none() && d_max > 0.0 {
        params.start_near = Some(free_optimum_tuav(scenario, &config.precision)?.best_location);
    }
    let search = TuavSearch::Anneal { params, seed: config.seed };
    // Per trial: (uniform draw, best value, association) of every station
    // accessible at the largest level.
    let trials = (0..config.n_trials as u64)
        .into_par_iter()
        .map(|t| {
            let stations = sample_stations(&config.region, &config.field, config.seed, t)?;
            stations
                .into_iter()
                .filter(|&(_, u)| u < d_max)
                .map(|(gs, u)| {
                    let r =
                        optimize_station(scenario, &nudge(scenario, gs), &config.tether, &search, &config.precision)?;
                    Ok((u, r.best_value, r.best_association))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(delta_as
        .iter()
        .map(|&d| {
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            let mut assoc = 0.0;
            let mut assoc2 = 0.0;
            let mut tbs_only = 0;
            for per in &trials {
                let best =
                    per.iter().filter(|&&(u, _, _)| u < d).fold(None::<(f64, f64)>, |acc, &(_, v, a)| match acc {
                        Some((bv, _)) if bv >= v => acc,
                        _ => Some((v, a)),
                    });
                let (v, a) = best.unwrap_or_else(|| {
                    tbs_only += 1;
                    (p_br, 0.0)
                });
                sum += v;
                sum2 += v * v;
                assoc += a;
                assoc2 += a * a;
            }
            let n = trials.len() as f64;
            let mean = sum / n;
            let std_err = std_error(sum, sum2, n);
            let mean_association = assoc / n;
            EnsembleStats {
                delta_a: d,
                mean,
                std_err,
                ci95: 1.96 * std_err,
                mean_association,
                association_std_err: std_error(assoc, assoc2, n),
                n_trials: trials.len(),
                tbs_only_trials: tbs_only,
            }
        })
        .collect())
}

fn std_error(sum: f64, sum2: f64, n: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    let mean = sum / n;
    (((sum2 - n * mean * mean) / (n - 1.0)).max(0.0) / n).sqrt()
}

/// Single-level [`random_gs_ensemble_sweep`].
pub fn random_gs_ensemble(scenario: &Scenario, config: &EnsembleConfig, delta_a: f64) -> Result<EnsembleStats> {
    Ok(random_gs_ensemble_sweep(scenario, config, &[delta_a])?.remove(0))
}

/// Moves a station off the two points where the surface directions are
/// undefined.
fn nudge(scenario: &Scenario, gs: GroundStation) -> GroundStation {
    let p = gs.location.project();
    let eps = 1e-6;
    if p == scenario.hotspot.center || p == scenario.tbs_proj() {
        GroundStation { location: Point3::new(gs.location.x, gs.location.y + eps, gs.location.h), ..gs }
    } else {
        gs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn s() -> Scenario {
        Scenario::table_defaults()
    }

    fn coarse_grid() -> SurfaceGrid {
        SurfaceGrid { psi_step: 10f64.to_radians(), h_divisions: 10 }
    }

    #[test]
    fn surface_angles() {
        let gs = GroundStation::new(Point3::new(0.0, 75.0, 25.0));
        let surf = optimal_surface(&s(), &gs, &Tether::table_defaults()).unwrap();
        assert_relative_eq!(surf.psi1, 75f64.atan2(-170.0), epsilon = 1e-12);
        assert_relative_eq!(surf.psi1, 2.7261, epsilon = 1e-4);
        assert_relative_eq!(surf.psi2, 1.5 * PI, epsilon = 1e-12);
        assert_relative_eq!(surf.interval.start, surf.psi1, epsilon = 1e-12);
        assert_relative_eq!(surf.interval.end(), surf.psi2, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_surfaces() {
        let t = Tether::table_defaults();
        for p in [Point3::new(0.0, 0.0, 20.0), Point3::new(170.0, 0.0, 20.0)] {
            assert!(matches!(optimal_surface(&s(), &GroundStation::new(p), &t), Err(Error::Degenerate(_))));
        }
        let below = GroundStation::new(Point3::new(10.0, -5.0, 20.0));
        assert!(optimal_surface(&s(), &below, &t).is_err());
    }

    #[test]
    fn surface_on_axis_points_up() {
        let t = Tether::table_defaults();
        for x in [-100.0, 300.0, 100.0] {
            let surf = optimal_surface(&s(), &GroundStation::new(Point3::new(x, 0.0, 20.0)), &t).unwrap();
            assert!(surf.interval.sweep <= PI + 1e-12);
            if surf.interval.sweep > 0.0 {
                assert!(surf.interval.contains(PI / 2.0), "x = {x}: {:?}", surf.interval);
            }
        }
    }

    #[test]
    fn mirror_round_trip() {
        let g = GroundStation::new(Point3::new(5.0, -30.0, 12.0));
        let (c, m) = mirror_canonicalize(&g);
        assert_eq!(c.location, Point3::new(5.0, 30.0, 12.0));
        assert_eq!(m.apply(c.location), g.location);
        let (c0, m0) = mirror_canonicalize(&GroundStation::new(Point3::new(5.0, 0.0, 12.0)));
        assert_eq!(m0, Mirror::Identity);
        assert_eq!(c0.location.y, 0.0);
    }

    #[test]
    fn mirrored_optimization_matches() {
        let t = Tether::table_defaults();
        let p = Precision::fast();
        let search = TuavSearch::Grid(coarse_grid());
        let up = optimize_station(&s(), &GroundStation::new(Point3::new(-40.0, 60.0, 20.0)), &t, &search, &p).unwrap();
        let down =
            optimize_station(&s(), &GroundStation::new(Point3::new(-40.0, -60.0, 20.0)), &t, &search, &p).unwrap();
        assert_relative_eq!(up.best_value, down.best_value, epsilon = 1e-9);
        assert_relative_eq!(up.best_location.y, -down.best_location.y, epsilon = 1e-9);
    }

    #[test]
    fn anneal_never_beats_grid() {
        let t = Tether::table_defaults();
        let p = Precision::fast();
        let gs = GroundStation::new(Point3::new(-60.0, 90.0, 15.0));
        let params = AnnealParams { grid: coarse_grid(), ..AnnealParams::default() };
        let grid = grid_search_tuav(&s(), &gs, &t, &coarse_grid(), &p).unwrap();
        let ann = anneal_tuav(&s(), &gs, &t, &params, &p, 7).unwrap();
        assert!(ann.best_value <= grid.best_value + 1e-9);
        assert!(ann.evaluations <= params.steps + 1);
        let max = ann.trace.iter().map(|&(_, v)| v).fold(f64::MIN, f64::max);
        assert_eq!(max, ann.best_value);
    }

    #[test]
    fn selection_rules() {
        let t = Tether::table_defaults();
        let p = Precision::fast();
        let search = TuavSearch::Grid(coarse_grid());
        let a = GroundStation::new(Point3::new(-50.0, 40.0, 20.0));
        let b = GroundStation::new(Point3::new(120.0, 140.0, 30.0));
        let closed = GroundStation { accessible: false, ..GroundStation::new(Point3::new(0.0, 10.0, 40.0)) };
        let (g1, r1) = best_gs_selection(&s(), &[a, b, closed], &t, &search, &p).unwrap();
        let (g2, r2) = best_gs_selection(&s(), &[closed, b, a], &t, &search, &p).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(r1.best_value, r2.best_value);
        let single = optimize_station(&s(), &a, &t, &search, &p).unwrap();
        let (_, only) = best_gs_selection(&s(), &[a], &t, &search, &p).unwrap();
        assert_eq!(single.best_value, only.best_value);
        assert!(matches!(best_gs_selection(&s(), &[closed], &t, &search, &p), Err(Error::NoAccessibleGroundStation)));
    }

    #[test]
    fn uuav_grid_bounds() {
        let b = UuavBounds { x_min: 200.0, ..UuavBounds::default_for(&s()) };
        assert!(matches!(grid_search_uuav(&s(), 1.0, &b, 8.0, &Precision::fast()), Err(Error::EmptySearchSpace(_))));
        let b = UuavBounds { x_min: 0.0, x_max: 400.0, h_min: 100.0, h_max: 100.0, h_step: 2.0 };
        let r = grid_search_uuav(&s(), 1.0, &b, 85.0, &Precision::fast()).unwrap();
        assert_eq!(r.evaluations, 3);
        assert!(r.trace.iter().all(|(p, _)| p.x <= 170.0 && p.y == 0.0));
    }

    #[test]
    fn station_fields_are_coupled() {
        let region = Region { center: Point2::ORIGIN, half_side: 200.0 };
        let field = BuildingField { gamma1: 20.0, gamma3: 300.0 };
        let a = sample_stations(&region, &field, 3, 5).unwrap();
        let b = sample_stations(&region, &field, 3, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_stations(&region, &field, 3, 6).unwrap());
        assert!(a.iter().all(|(g, u)| g.location.x.abs() <= 200.0 && g.location.h > 0.0 && (0.0..1.0).contains(u)));
    }

    #[test]
    fn zero_accessibility_is_tbs_only() {
        let t = Tether::table_defaults();
        let config = EnsembleConfig {
            region: Region::around_hotspot(&s(), &t),
            field: BuildingField { gamma1: 20.0, gamma3: 300.0 },
            tether: t,
            n_trials: 3,
            seed: 1,
            anneal: AnnealParams::default(),
            precision: Precision::fast(),
        };
        let r = random_gs_ensemble(&s(), &config, 0.0).unwrap();
        assert_relative_eq!(r.mean, coverage_tbs_with(&s(), &Precision::fast()).unwrap().value, epsilon = 1e-15);
        assert_eq!(r.tbs_only_trials, 3);
    }
}
