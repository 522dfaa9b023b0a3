use anyhow::{anyhow, bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use tethered_coverage::coverage::{
    classify_user, coverage_backhaul, coverage_end_to_end, coverage_tbs_with, coverage_uav_access_with,
    system_coverage, Association, Precision, Scenario, UavMode,
};
use tethered_coverage::deployment::{
    best_gs_selection, grid_search_uuav, random_gs_ensemble_sweep, BuildingField, EnsembleConfig, EnsembleStats,
    OptimizationReport, TuavSearch, UuavBounds,
};
use tethered_coverage::distributions::marginal_distance_pdf;
use tethered_coverage::geometry::{Point2, Point3};
use tethered_coverage::montecarlo::{
    estimate_distance_pdf, estimate_link_coverage, sample_users, simulate_system, LinkKind, McConfig,
};
use tethered_coverage::quadrature::QuadOptions;

use crate::config::{MethodKind, ModeKind, RunConfig, SweepMode, SweepVariable};
use crate::output::{Cell, Table};

/// Outcome of `validate`: the table plus whether every check passed.
pub struct Validation {
    pub table: Table,
    pub all_passed: bool,
}

struct Check {
    name: String,
    analytic: f64,
    simulated: f64,
    std_error: f64,
    tolerance: f64,
}

impl Check {
    fn passed(&self) -> bool {
        (self.analytic - self.simulated).abs() <= self.tolerance
    }
}

fn mc_check(name: String, analytic: f64, mean: f64, se: f64, floor: f64) -> Check {
    Check { name, analytic, simulated: mean, std_error: se, tolerance: floor.max(4.0 * se) }
}

/// Analytic values against simulation at `experiment.validate.samples`.
pub fn validate(cfg: &RunConfig) -> Result<Validation> {
    let s = cfg.scenario()?;
    let v = &cfg.experiment.validate;
    let precision = Precision::accurate();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut next_seed = cfg.seed;
    let mut mc = |n: usize| {
        next_seed = next_seed.wrapping_add(1);
        McConfig::new(n, next_seed)
    };
    let mut checks = Vec::new();

    // Binned L1 of the distance law, reported as "simulated" against 0.
    for (label, anchor) in [("center", Point2::ORIGIN), ("tbs", s.tbs_proj())] {
        let hist = estimate_distance_pdf(&mc(v.samples)?, &s.hotspot, &anchor, 50)?;
        let l1 = hist.l1_distance(&marginal_distance_pdf(&s.hotspot, &anchor), &QuadOptions::default())?;
        checks.push(Check {
            name: format!("distance_pdf_l1_{label}"),
            analytic: 0.0,
            simulated: l1,
            std_error: 0.0,
            tolerance: 0.05,
        });
    }

    let tbs = estimate_link_coverage(&mc(v.samples)?, &s, LinkKind::Tbs)?;
    checks.push(mc_check("link_tbs".into(), coverage_tbs_with(&s, &precision)?.value, tbs.mean, tbs.std_error, 0.005));

    for k in 0..v.positions {
        let r = s.hotspot.radius;
        let uav = Point3::new(
            -r + (r + s.tbs.x) * rng.random::<f64>(),
            -r + 2.0 * r * rng.random::<f64>(),
            30.0 + 220.0 * rng.random::<f64>(),
        );
        let access = estimate_link_coverage(&mc(v.samples)?, &s, LinkKind::UavAccess { uav })?;
        let exact = coverage_uav_access_with(&s, &uav, &precision)?.value;
        checks.push(mc_check(format!("link_access_{k}"), exact, access.mean, access.std_error, 0.005));
        let back = estimate_link_coverage(&mc(v.samples)?, &s, LinkKind::Backhaul { uav })?;
        checks.push(mc_check(
            format!("link_backhaul_{k}"),
            coverage_backhaul(&s, &uav)?,
            back.mean,
            back.std_error,
            0.005,
        ));

        let duty = cfg.uav.duty_cycle;
        for (label, mode) in [("tethered", UavMode::Tethered), ("untethered", UavMode::untethered(duty)?)] {
            let exact = system_coverage(&s, &uav, mode, &precision)?;
            let sim = simulate_system(&mc(v.samples)?, &s, &uav, mode)?;
            checks.push(mc_check(
                format!("system_{label}_{k}"),
                exact.value,
                sim.coverage.mean,
                sim.coverage.std_error,
                0.01,
            ));
            checks.push(mc_check(
                format!("association_{label}_{k}"),
                exact.uav_association,
                sim.association.mean,
                sim.association.std_error,
                0.01,
            ));
        }
    }

    let mut table = Table::new(&["check", "analytic", "simulated", "std_error", "tolerance", "pass"]);
    let mut all_passed = true;
    for c in &checks {
        let ok = c.passed();
        all_passed &= ok;
        table.push(vec![
            c.name.as_str().into(),
            c.analytic.into(),
            c.simulated.into(),
            c.std_error.into(),
            c.tolerance.into(),
            ok.into(),
        ]);
    }
    table.meta.push(("samples".into(), json!(v.samples)));
    table.meta.push(("all_passed".into(), json!(all_passed)));
    Ok(Validation { table, all_passed })
}

/// Coverage with the UAV at every grid point at height `grid.h_m`; rows
/// run over `x` first, then `y` within each `x`.
pub fn coverage_map(cfg: &RunConfig) -> Result<Table> {
    let s = cfg.scenario()?;
    let mode = cfg.mode()?;
    let precision = cfg.precision();
    let g = &cfg.experiment.grid;
    let (xs, ys) = (g.xs()?, g.ys()?);
    let pts: Vec<Point3> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| Point3::new(x, y, g.h_m))).collect();
    let values = pts
        .par_iter()
        .map(|p| {
            if p.distance(&s.tbs) == 0.0 {
                return Err(anyhow!("grid point {p:?} coincides with the TBS"));
            }
            Ok(system_coverage(&s, p, mode, &precision)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["x_m", "y_m", "h_m", "coverage", "association"]);
    for (p, v) in pts.iter().zip(&values) {
        t.push(vec![p.x.into(), p.y.into(), p.h.into(), v.value.into(), v.uav_association.into()]);
    }
    Ok(t)
}

fn uuav_bounds(cfg: &RunConfig, s: &Scenario) -> UuavBounds {
    let o = &cfg.experiment.optimize;
    UuavBounds { h_min: o.h_min_m, h_max: o.h_max_m, h_step: o.h_step_m, ..UuavBounds::default_for(s) }
}

/// Best location for the configured UAV kind: the axis grid for a U-UAV,
/// the best listed ground station for a T-UAV.
pub fn optimize(cfg: &RunConfig) -> Result<Table> {
    let s = cfg.scenario()?;
    let precision = cfg.precision();
    let o = &cfg.experiment.optimize;
    let (report, gs): (OptimizationReport, Option<Point3>) = match cfg.uav.mode {
        ModeKind::Untethered => {
            (grid_search_uuav(&s, cfg.uav.duty_cycle, &uuav_bounds(cfg, &s), o.x_step_m, &precision)?, None)
        }
        ModeKind::Tethered => {
            let tether = cfg.tether()?;
            let stations = cfg.ground_stations();
            if stations.is_empty() {
                bail!("infeasible tether configuration: no ground stations listed under [uav]");
            }
            let search = match o.method {
                MethodKind::Grid => TuavSearch::Grid(o.surface_grid()),
                MethodKind::Anneal => TuavSearch::Anneal { params: o.anneal(), seed: cfg.seed },
            };
            let (gs, report) = best_gs_selection(&s, &stations, &tether, &search, &precision)?;
            (report, Some(gs.location))
        }
    };
    let best = report.best_location;
    let mut t = Table::new(&["x_m", "y_m", "h_m", "coverage"]);
    for (p, v) in &report.trace {
        t.push(vec![p.x.into(), p.y.into(), p.h.into(), (*v).into()]);
    }
    t.meta.push(("best_location".into(), json!([best.x, best.y, best.h])));
    t.meta.push(("best_value".into(), json!(report.best_value)));
    t.meta.push(("best_association".into(), json!(report.best_association)));
    if let Some(g) = gs {
        t.meta.push(("ground_station".into(), json!([g.x, g.y, g.h])));
    }
    t.json_body = Some(serde_json::to_value(&report)?);
    Ok(t)
}

pub const METRICS: [&str; 8] = ["p_br", "p_ur", "p_bur", "p_t", "p_t_ci95", "p_u", "association_t", "association_u"];

/// One row per sweep value; metric columns follow [`METRICS`] order
/// whatever order they were requested in.
pub fn sweep(cfg: &RunConfig) -> Result<Table> {
    let sw = &cfg.experiment.sweep;
    for m in &sw.metrics {
        if !METRICS.contains(&m.as_str()) {
            bail!("unknown metric '{m}' (known: {})", METRICS.join(", "));
        }
    }
    let metrics: Vec<&str> = METRICS.iter().copied().filter(|m| sw.metrics.iter().any(|r| r == m)).collect();
    if metrics.is_empty() {
        bail!("no metrics requested");
    }
    let values = sw.values.values()?;
    if sw.mode == SweepMode::Fixed && matches!(sw.variable, SweepVariable::TetherT | SweepVariable::DeltaA) {
        bail!("{} only matters for optimized sweeps (set experiment.sweep.mode = \"optimized\")", sw.variable.name());
    }

    let mut columns = vec![sw.variable.name()];
    columns.extend(&metrics);
    let mut t = Table::new(&columns);
    t.meta.push(("mode".into(), json!(sw.mode)));

    // delta_A levels share one ensemble run.
    let delta_rows = if sw.mode == SweepMode::Optimized && sw.variable == SweepVariable::DeltaA {
        let base = cfg.scenario()?;
        let ens = ensemble_config(cfg, &base, cfg.tether()?.length)?;
        Some(random_gs_ensemble_sweep(&base, &ens, &values)?)
    } else {
        None
    };
    // The U-UAV optimum ignores the tether and the station density.
    let shared_uuav = if sw.mode == SweepMode::Optimized
        && matches!(sw.variable, SweepVariable::DeltaA | SweepVariable::TetherT)
        && wants(&metrics, UUAV_METRICS)
    {
        Some(uuav_optimum(cfg)?)
    } else {
        None
    };

    for (k, &v) in values.iter().enumerate() {
        let mut c = cfg.clone();
        match sw.variable {
            SweepVariable::UavX => c.uav.position.x_m = v,
            SweepVariable::UavH => c.uav.position.h_m = v,
            SweepVariable::TbsX => c.scenario.tbs_x_m = v,
            SweepVariable::TetherT => c.uav.tether_length_m = v,
            SweepVariable::DeltaA => c.experiment.sweep.delta_a = v,
            SweepVariable::DutyA => c.uav.duty_cycle = v,
            SweepVariable::Beta => {
                c.scenario.beta = v;
                c.scenario.beta_db = None;
            }
        }
        let row = match sw.mode {
            SweepMode::Fixed => fixed_metrics(&c, &metrics)?,
            SweepMode::Optimized => {
                optimized_metrics(&c, &metrics, delta_rows.as_ref().map(|r| r[k]), shared_uuav.as_ref())?
            }
        };
        let mut cells: Vec<Cell> = vec![v.into()];
        cells.extend(row.into_iter().map(Cell::from));
        t.push(cells);
    }
    Ok(t)
}

fn wants(metrics: &[&str], names: &[&str]) -> bool {
    metrics.iter().any(|m| names.contains(m))
}

fn fixed_metrics(c: &RunConfig, metrics: &[&str]) -> Result<Vec<f64>> {
    let s = c.scenario()?;
    let precision = c.precision();
    let p = c.uav.position.point();
    let duty = UavMode::untethered(c.uav.duty_cycle)?;
    let t = if wants(metrics, &["p_t", "association_t"]) {
        Some(system_coverage(&s, &p, UavMode::Tethered, &precision)?)
    } else {
        None
    };
    let u =
        if wants(metrics, &["p_u", "association_u"]) { Some(system_coverage(&s, &p, duty, &precision)?) } else { None };
    metrics
        .iter()
        .map(|&m| {
            Ok(match m {
                "p_br" => coverage_tbs_with(&s, &precision)?.value,
                "p_ur" => coverage_uav_access_with(&s, &p, &precision)?.value,
                "p_bur" => coverage_end_to_end(&s, &p, duty)?,
                "p_t" => t.expect("computed").value,
                "p_t_ci95" => 0.0,
                "p_u" => u.expect("computed").value,
                "association_t" => t.expect("computed").uav_association,
                "association_u" => u.expect("computed").uav_association,
                _ => unreachable!("metrics are checked"),
            })
        })
        .collect()
}

fn ensemble_config(c: &RunConfig, s: &Scenario, tether_len: f64) -> Result<EnsembleConfig> {
    let tether = c.tether()?.with_length(tether_len);
    let mut e = EnsembleConfig::new(s, BuildingField::preset(c.scenario.preset), tether, c.seed);
    e.n_trials = c.experiment.sweep.trials;
    e.anneal = c.experiment.optimize.anneal();
    e.precision = c.precision();
    Ok(e)
}

const UUAV_METRICS: &[&str] = &["p_u", "association_u", "p_ur", "p_bur"];

fn uuav_optimum(c: &RunConfig) -> Result<OptimizationReport> {
    let s = c.scenario()?;
    Ok(grid_search_uuav(&s, c.uav.duty_cycle, &uuav_bounds(c, &s), c.experiment.optimize.x_step_m, &c.precision())?)
}

fn optimized_metrics(
    c: &RunConfig,
    metrics: &[&str],
    delta_row: Option<EnsembleStats>,
    shared_uuav: Option<&OptimizationReport>,
) -> Result<Vec<f64>> {
    let s = c.scenario()?;
    let precision = c.precision();
    let ens = if wants(metrics, &["p_t", "p_t_ci95", "association_t"]) {
        match delta_row {
            Some(r) => Some(r),
            None => {
                let e = ensemble_config(c, &s, c.uav.tether_length_m)?;
                Some(random_gs_ensemble_sweep(&s, &e, &[c.experiment.sweep.delta_a])?[0])
            }
        }
    } else {
        None
    };
    let u = match shared_uuav {
        Some(r) => Some(r.clone()),
        None if wants(metrics, UUAV_METRICS) => Some(uuav_optimum(c)?),
        None => None,
    };
    let duty = UavMode::untethered(c.uav.duty_cycle)?;
    metrics
        .iter()
        .map(|&m| {
            Ok(match m {
                "p_br" => coverage_tbs_with(&s, &precision)?.value,
                "p_ur" => coverage_uav_access_with(&s, &u.as_ref().expect("computed").best_location, &precision)?.value,
                "p_bur" => coverage_end_to_end(&s, &u.as_ref().expect("computed").best_location, duty)?,
                "p_t" => ens.expect("computed").mean,
                "p_t_ci95" => ens.expect("computed").ci95,
                "association_t" => ens.expect("computed").mean_association,
                "p_u" => u.as_ref().expect("computed").best_value,
                "association_u" => u.as_ref().expect("computed").best_association,
                _ => unreachable!("metrics are checked"),
            })
        })
        .collect()
}

fn class_name(a: Association) -> &'static str {
    match a {
        Association::UavAlways => "UAV",
        Association::UavIfLos => "UAV_IF_LOS",
        Association::TbsAlways => "TBS",
    }
}

/// Association class at every grid point for the UAV at `uav.position`,
/// followed by optional sampled users.
pub fn association_map(cfg: &RunConfig) -> Result<Table> {
    let s = cfg.scenario()?;
    let uav = cfg.uav.position.point();
    let g = &cfg.experiment.grid;
    let mut t = Table::new(&["kind", "x_m", "y_m", "class"]);
    for x in g.xs()? {
        for y in g.ys()? {
            let class = classify_user(&s, &uav, &Point2::new(x, y));
            t.push(vec!["grid".into(), x.into(), y.into(), class_name(class).into()]);
        }
    }
    let am = &cfg.experiment.association_map;
    for p in sample_users(&s.hotspot, &am.distribution(), am.overlay_users, cfg.seed) {
        let class = classify_user(&s, &uav, &p);
        t.push(vec!["user".into(), p.x.into(), p.y.into(), class_name(class).into()]);
    }
    Ok(t)
}
