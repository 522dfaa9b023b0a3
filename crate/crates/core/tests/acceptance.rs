//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a hard criterion fails.
//!
//! `ACCEPTANCE_ONLY=1,5` runs a subset.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use tethered_coverage::channel::{LinkParams, Preset};
use tethered_coverage::coverage::{
    coverage_backhaul, coverage_end_to_end, coverage_tbs, coverage_uav_access, system_coverage,
    system_coverage_tuav_with, system_coverage_uuav_with, Precision, Scenario, UavMode,
};
use tethered_coverage::deployment::{
    anneal_tuav, free_optimum_tuav, grid_search_tuav, grid_search_uuav, optimal_surface, random_gs_ensemble_sweep,
    AnnealParams, BuildingField, EnsembleConfig, GroundStation, Region, SurfaceGrid, Tether, UuavBounds,
};
use tethered_coverage::distributions::{
    conditional_distance_pdf, conditional_geometry, marginal_distance_pdf, ConditionalCase, HotSpot,
};
use tethered_coverage::geometry::{Point2, Point3};
use tethered_coverage::montecarlo::{
    estimate_conditional_distance_pdf, estimate_distance_pdf, estimate_link_coverage, estimate_system_coverage,
    LinkKind, McConfig,
};
use tethered_coverage::quadrature::QuadOptions;
use tethered_coverage::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn tight() -> QuadOptions {
    QuadOptions { abs_tol: 1e-10, rel_tol: 1e-10, ..QuadOptions::default() }
}

fn table() -> Scenario {
    Scenario::table_defaults()
}

fn c1_distance_pdf() -> Result<Outcome> {
    let start = Instant::now();
    let hs = HotSpot::centered(150.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let radius = if k < 10 { 150.0 * rng.random::<f64>().sqrt() } else { 150.0 + 300.0 * rng.random::<f64>() };
        let anchor = Point2::ORIGIN.polar_offset(radius, 2.0 * PI * rng.random::<f64>());
        let hist = estimate_distance_pdf(&McConfig::new(1_000_000, 1000 + k)?, &hs, &anchor, 100)?;
        worst = worst.max(hist.l1_distance(&marginal_distance_pdf(&hs, &anchor), &tight())?);
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Outcome::new(worst < 0.02 && secs < 30.0, format!("worst L1 {worst:.4} over 20 anchors, {secs:.1} s")))
}

const CASES: [ConditionalCase; 5] = [
    ConditionalCase::FullCircle,
    ConditionalCase::ArcWithNearest,
    ConditionalCase::ArcWithFarthest,
    ConditionalCase::ArcWithBoth,
    ConditionalCase::ArcWithNeither,
];

const BAND: f64 = 0.5;

fn c2_conditional_pdf() -> Result<Outcome> {
    let hs = HotSpot::centered(150.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut found: Vec<Vec<(Point2, Point2, f64)>> = vec![Vec::new(); CASES.len()];
    let mut attempts = 0;
    while found.iter().any(|f| f.len() < 10) && attempts < 1_000_000 {
        attempts += 1;
        let tbs = Point2::new(400.0 * rng.random::<f64>(), 0.0);
        let uav = Point2::new(500.0 * rng.random::<f64>() - 250.0, 250.0 * rng.random::<f64>() - 125.0);
        let d = tbs.norm();
        let (lo, hi) = ((d - 150.0).max(0.0), d + 150.0);
        let r_b = lo + (hi - lo) * rng.random::<f64>();
        // Stay clear of the support ends, where the 0.5 m band is wider
        // than the arc itself.
        if r_b < lo + 5.0 || r_b > hi - 5.0 || (d < 150.0 && (r_b - (150.0 - d)).abs() < 5.0) {
            continue;
        }
        let g = conditional_geometry(&hs, &tbs, &uav, r_b)?;
        if let Some(k) = CASES.iter().position(|&c| c == g.case) {
            if found[k].len() < 10 {
                found[k].push((tbs, uav, r_b));
            }
        }
    }
    if found.iter().any(|f| f.len() < 10) {
        return Ok(Outcome::new(false, "could not generate 10 configurations per case"));
    }
    let mut worst: f64 = 0.0;
    let mut seed = 2000;
    for configs in &found {
        for &(tbs, uav, r_b) in configs {
            seed += 1;
            let pdf = conditional_distance_pdf(&conditional_geometry(&hs, &tbs, &uav, r_b)?)?;
            // The band blurs the distance by up to its own width, so bins
            // are never narrower than the band (at most 40 of them).
            let (lo, hi) = pdf.support();
            let range = (lo - BAND, hi + BAND);
            let bins = ((range.1 - range.0) / (2.0 * BAND)).floor().clamp(1.0, 40.0) as usize;
            let cfg = McConfig::new(200_000, seed)?;
            let hist = estimate_conditional_distance_pdf(&cfg, &hs, &tbs, &uav, r_b, BAND, range, bins)?;
            worst = worst.max(hist.l1_distance(&pdf, &tight())?);
        }
    }
    Ok(Outcome::new(worst < 0.05, format!("worst L1 {worst:.4} over 5 cases x 10, 200000 band samples each")))
}

fn random_scenario(rng: &mut ChaCha8Rng) -> Result<Scenario> {
    let preset = if rng.random::<bool>() { Preset::DenseUrban } else { Preset::HighRise };
    let radius = 50.0 + 250.0 * rng.random::<f64>();
    let tbs = Point3::new(600.0 * rng.random::<f64>(), 0.0, 5.0 + 35.0 * rng.random::<f64>());
    let beta = 10f64.powf((-5.0 + 20.0 * rng.random::<f64>()) / 10.0);
    Scenario::new(HotSpot::centered(radius)?, tbs, preset.env(), LinkParams::table_defaults(), beta)
}

fn random_uav(rng: &mut ChaCha8Rng, s: &Scenario) -> Point3 {
    let r = s.hotspot.radius;
    Point3::new(
        -1.5 * r + (1.5 * r + s.tbs.x) * rng.random::<f64>(),
        -r + 2.0 * r * rng.random::<f64>(),
        20.0 + 280.0 * rng.random::<f64>(),
    )
}

fn c3_link_coverage() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut fails = Vec::new();
    let mut worst_sigma: f64 = 0.0;
    for k in 0..10u64 {
        let s = random_scenario(&mut rng)?;
        let uav = random_uav(&mut rng, &s);
        let checks = [
            ("TBS", LinkKind::Tbs, coverage_tbs(&s)?.value),
            ("access", LinkKind::UavAccess { uav }, coverage_uav_access(&s, &uav)?.value),
            ("backhaul", LinkKind::Backhaul { uav }, coverage_backhaul(&s, &uav)?),
        ];
        for (j, (name, link, exact)) in checks.into_iter().enumerate() {
            let mc = estimate_link_coverage(&McConfig::new(1_000_000, 3000 + 10 * k + j as u64)?, &s, link)?;
            if mc.std_error > 0.0 {
                worst_sigma = worst_sigma.max((mc.mean - exact).abs() / mc.std_error);
            }
            if !mc.agrees_with(exact, 0.005, 4.0) {
                fails.push(format!(
                    "scenario {k} {name}: analytic {exact:.5} vs MC {:.5} ± {:.5}",
                    mc.mean, mc.std_error
                ));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Outcome::new(
        fails.is_empty() && secs < 120.0,
        format!("30 checks, worst |Δ|/SE {worst_sigma:.2}, {secs:.1} s{}", failures(&fails)),
    ))
}

fn failures(fails: &[String]) -> String {
    if fails.is_empty() {
        String::new()
    } else {
        format!("; {}", fails.join("; "))
    }
}

fn c4_system_coverage() -> Result<Outcome> {
    let s = table();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let uav = random_uav(&mut rng, &s);
        let mode = if k < 10 { UavMode::Tethered } else { UavMode::untethered(0.2 + 0.8 * rng.random::<f64>())? };
        let exact = system_coverage(&s, &uav, mode, &Precision::accurate())?.value;
        let mc = estimate_system_coverage(&McConfig::new(1_000_000, 4000 + k)?, &s, &uav, mode)?;
        worst = worst.max((mc.mean - exact).abs());
        if !mc.agrees_with(exact, 0.01, 4.0) {
            fails.push(format!("{mode:?} at {uav:?}: analytic {exact:.5} vs MC {:.5} ± {:.5}", mc.mean, mc.std_error));
        }
    }
    Ok(Outcome::new(
        fails.is_empty(),
        format!("10 tethered + 10 untethered positions, worst |Δ| {worst:.4}{}", failures(&fails)),
    ))
}

fn c5_containment() -> Result<Outcome> {
    let s = table();
    let tether = Tether::table_defaults();
    let precision = Precision::fast();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut fails = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let d_psi = 2f64.to_radians();
    for k in 0..20 {
        let h_n = 1.0 + 40.0 * rng.random::<f64>();
        let gs = GroundStation::new(Point3::new(
            -250.0 + 500.0 * rng.random::<f64>(),
            1.0 + 250.0 * rng.random::<f64>(),
            h_n,
        ));
        let cone = tether.cone(gs.location)?;
        let dh = tether.length / 25.0;
        let mut pts = Vec::new();
        for i in 0..=25 {
            let h = h_n + dh * i as f64;
            let r = cone.radius_at_height(h)?;
            pts.push(Point3::new(gs.location.x, gs.location.y, h));
            for frac in [1.0 / 3.0, 2.0 / 3.0, 1.0] {
                for j in 0..180 {
                    let q = gs.location.project().polar_offset(frac * r, d_psi * j as f64);
                    pts.push(q.at_height(h));
                }
            }
        }
        let values = pts
            .par_iter()
            .map(|p| Ok(system_coverage_tuav_with(&s, p, &precision)?.value))
            .collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for (i, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = i;
            }
        }
        let p = pts[best];
        let surface = optimal_surface(&s, &gs, &tether)?;
        let dist = surface.horizontal_distance(&p, 3600)?;
        let r = cone.radius_at_height(p.h)?;
        let dr = [p.h - dh, p.h + dh]
            .iter()
            .filter(|&&h| h >= cone.min_height() && h <= cone.max_height())
            .map(|&h| Ok((cone.radius_at_height(h)? - r).abs()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let cell = ((r * d_psi).powi(2) + dr * dr).sqrt() + 1e-9;
        worst_ratio = worst_ratio.max(dist / cell);
        if dist > cell {
            fails.push(format!(
                "station {k} at {:?}: argmax {p:?} is {dist:.2} m off the surface (cell {cell:.2} m)",
                gs.location
            ));
        }
    }
    Ok(Outcome::new(
        fails.is_empty(),
        format!("20 stations, worst distance {worst_ratio:.3} cells{}", failures(&fails)),
    ))
}

fn c6_structure() -> Result<Outcome> {
    let s = table();
    let acc = Precision::accurate();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let p_br = coverage_tbs(&s)?.value;
    let (mut worst_a0, mut worst_affine, mut worst_mirror): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10 {
        let uav = random_uav(&mut rng, &s);
        worst_a0 = worst_a0.max((system_coverage_uuav_with(&s, &uav, 0.0, &acc)?.value - p_br).abs());
        let vals = (0..=4)
            .map(|k| Ok(system_coverage_uuav_with(&s, &uav, k as f64 / 4.0, &acc)?.value))
            .collect::<Result<Vec<f64>>>()?;
        let slope = vals[4] - vals[0];
        for (k, v) in vals.iter().enumerate() {
            worst_affine = worst_affine.max((v - (vals[0] + slope * k as f64 / 4.0)).abs());
        }
        let flipped = Point3::new(uav.x, -uav.y, uav.h);
        for mode in [UavMode::Tethered, UavMode::untethered(0.6)?] {
            let a = system_coverage(&s, &uav, mode, &acc)?.value;
            let b = system_coverage(&s, &flipped, mode, &acc)?.value;
            worst_mirror = worst_mirror.max((a - b).abs());
        }
    }
    let pass = worst_a0 <= 1e-9 && worst_affine <= 1e-9 && worst_mirror <= 1e-6;
    Ok(Outcome::new(
        pass,
        format!("|P^u(0) - P_br| {worst_a0:.1e}, affine residual {worst_affine:.1e}, mirror gap {worst_mirror:.1e}"),
    ))
}

fn c7_fig5() -> Result<Outcome> {
    let s = table();
    let xs: Vec<f64> = (0..=55).map(|k| -100.0 + 5.0 * k as f64).collect();
    let mut access = Vec::new();
    let mut e2e = Vec::new();
    for &x in &xs {
        let p = Point3::new(x, 0.0, 100.0);
        access.push(coverage_uav_access(&s, &p)?.value);
        e2e.push(coverage_end_to_end(&s, &p, UavMode::untethered(1.0)?)?);
    }
    let argmax = |v: &[f64]| xs[(0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })];
    let (xt, xu) = (argmax(&access), argmax(&e2e));
    let dominated = access.iter().zip(&e2e).all(|(t, u)| t >= u);
    Ok(Outcome::new(
        xt.abs() <= 10.0 && (30.0..=70.0).contains(&xu) && dominated,
        format!(
            "T-UAV access peak at x = {xt}, U-UAV end-to-end peak at x = {xu}, T-UAV >= U-UAV everywhere: {dominated}"
        ),
    ))
}

fn c8_uuav_optimum() -> Result<Outcome> {
    let s = Scenario::preset(Preset::DenseUrban);
    let r = grid_search_uuav(&s, 1.0, &UuavBounds::default_for(&s), 4.0, &Precision::fast())?;
    let p = r.best_location;
    let target = Point3::new(48.13, 0.0, 109.65);
    let pass = (p.x - target.x).abs() <= 10.0 && p.y.abs() <= 10.0 && (p.h - target.h).abs() <= 10.0;
    Ok(Outcome::new(pass, format!("optimum {{{:.1}, {:.1}, {:.1}}}, P^u {:.4}", p.x, p.y, p.h, r.best_value)))
}

fn c9_trends() -> Result<Outcome> {
    let start = Instant::now();
    let base = table();
    let field = BuildingField::preset(Preset::DenseUrban);
    let region = Region::around_hotspot(&base, &Tether::table_defaults().with_length(100.0));
    let deltas = [0.0, 0.05, 0.1, 0.2, 0.3];
    let tethers = [25.0, 50.0, 100.0];
    let cfg = |s: &Scenario, t: f64| EnsembleConfig {
        region,
        ..EnsembleConfig::new(s, field, Tether::table_defaults().with_length(t), 1)
    };
    let mut notes = Vec::new();
    let mut ok = true;
    let by_t = tethers
        .iter()
        .map(|&t| random_gs_ensemble_sweep(&base, &cfg(&base, t), &deltas))
        .collect::<Result<Vec<_>>>()?;
    for (a, b) in by_t.iter().zip(&by_t[1..]) {
        for (x, y) in a.iter().zip(b) {
            if y.mean < x.mean - 2.0 * x.ci95.max(y.ci95) {
                ok = false;
                notes.push(format!("P^t drops with T at delta {}: {:.4} -> {:.4}", x.delta_a, x.mean, y.mean));
            }
        }
    }
    for (t, row) in tethers.iter().zip(&by_t) {
        for (x, y) in row.iter().zip(&row[1..]) {
            if y.mean < x.mean - 2.0 * x.ci95.max(y.ci95) {
                ok = false;
                notes.push(format!("P^t drops with delta at T {t}: {:.4} -> {:.4}", x.mean, y.mean));
            }
        }
    }
    let grid: Vec<String> = by_t
        .iter()
        .zip(tethers)
        .map(|(row, t)| {
            format!("T={t}: {}", row.iter().map(|e| format!("{:.3}", e.mean)).collect::<Vec<_>>().join("/"))
        })
        .collect();

    // TBS sweep at T = 50, delta_A = 0.3; x_b = 170 is the row above.
    let xbs = [170.0, 250.0, 300.0, 350.0];
    let mut t_stats = vec![by_t[1][deltas.len() - 1]];
    let mut u_reports = Vec::new();
    for &xb in &xbs {
        let s = base.with_tbs_x(xb)?;
        if xb != 170.0 {
            t_stats.push(random_gs_ensemble_sweep(&s, &cfg(&s, 50.0), &[0.3])?[0]);
        }
        u_reports.push(grid_search_uuav(&s, 1.0, &UuavBounds::default_for(&s), 4.0, &Precision::fast())?);
    }
    for ((xb, t), u) in xbs.iter().zip(&t_stats).zip(&u_reports) {
        if *xb >= 250.0 && t.mean < u.best_value {
            ok = false;
            notes.push(format!("P^t {:.4} < P^u {:.4} at x_b {xb}", t.mean, u.best_value));
        }
    }
    for k in 1..xbs.len() {
        let (a, b) = (&t_stats[k - 1], &t_stats[k]);
        let tol = 2.0 * 1.96 * a.association_std_err.max(b.association_std_err);
        if b.mean_association < a.mean_association - tol {
            ok = false;
            notes.push(format!(
                "T-UAV association drops from x_b {} to {}: {:.4} -> {:.4}",
                xbs[k - 1],
                xbs[k],
                a.mean_association,
                b.mean_association
            ));
        }
        let (ua, ub) = (u_reports[k - 1].best_association, u_reports[k].best_association);
        if ub < ua {
            ok = false;
            notes.push(format!("U-UAV association drops from x_b {} to {}: {ua:.4} -> {ub:.4}", xbs[k - 1], xbs[k]));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 900.0 {
        ok = false;
    }
    let sweep: Vec<String> = xbs
        .iter()
        .zip(&t_stats)
        .zip(&u_reports)
        .map(|((xb, t), u)| {
            format!(
                "x_b={xb}: P^t {:.3} P^u {:.3} assoc T {:.3} U {:.3}",
                t.mean, u.best_value, t.mean_association, u.best_association
            )
        })
        .collect();
    Ok(Outcome::new(ok, format!("{}; {}; {secs:.0} s{}", grid.join(" "), sweep.join(", "), failures(&notes))))
}

fn c10_anneal() -> Result<Outcome> {
    let s = table();
    let precision = Precision::fast();
    let start_near = free_optimum_tuav(&s, &precision)?.best_location;
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for k in 0..10u64 {
        let t = [25.0, 50.0, 100.0][rng.random_range(0..3)];
        let tether = Tether::table_defaults().with_length(t);
        let gs = GroundStation::new(Point3::new(
            -200.0 + 400.0 * rng.random::<f64>(),
            1.0 + 200.0 * rng.random::<f64>(),
            1.0 + 40.0 * rng.random::<f64>(),
        ));
        let grid = grid_search_tuav(&s, &gs, &tether, &SurfaceGrid::default(), &precision)?;
        let params = AnnealParams { start_near: Some(start_near), ..AnnealParams::default() };
        let anneal = anneal_tuav(&s, &gs, &tether, &params, &precision, 10_000 + k)?;
        let gap = grid.best_value - anneal.best_value;
        worst = worst.max(gap);
        if gap > 1e-3 {
            fails.push(format!("instance {k} (T={t}, {:?}): gap {gap:.2e}", gs.location));
        }
    }
    Ok(Outcome::new(fails.is_empty(), format!("10 instances, worst gap {worst:.2e}{}", failures(&fails))))
}

type Criterion = (u32, &'static str, bool, fn() -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "distance pdf vs histogram", true, c1_distance_pdf),
        (2, "conditional pdf vs band histogram", true, c2_conditional_pdf),
        (3, "link coverage vs simulation", true, c3_link_coverage),
        (4, "system coverage vs simulation", true, c4_system_coverage),
        (5, "optimum on the optimal surface", true, c5_containment),
        (6, "structural identities", true, c6_structure),
        (7, "coverage along the x-axis", true, c7_fig5),
        (8, "dense-urban U-UAV optimum (soft)", false, c8_uuav_optimum),
        (9, "monotone ensemble trends", true, c9_trends),
        (10, "annealing vs surface grid", true, c10_anneal),
    ];
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut hard_failures = 0;
    for (id, name, hard, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let took = fmt_secs(start.elapsed());
        let verdict = match (outcome.pass, hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (soft, warning only)",
        };
        if !outcome.pass && hard {
            hard_failures += 1;
        }
        println!("criterion {id:>2} {verdict}: {name} [{took}] {}", outcome.detail);
    }
    if hard_failures > 0 {
        println!("{hard_failures} hard criteria failed");
        std::process::exit(1);
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}
