//! Run configuration. Units live in the key names (`_m`, `_deg`, `_dbm`,
//! `_db`); everything is converted to the library's SI/linear units in
//! [`RunConfig::scenario`] and friends.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use tethered_coverage::channel::{db_to_linear, dbm_to_mw, EnvironmentParams, LinkParams, Preset};
use tethered_coverage::coverage::{Precision, Scenario, UavMode};
use tethered_coverage::deployment::{AnnealParams, GroundStation, SurfaceGrid, Tether};
use tethered_coverage::distributions::HotSpot;
use tethered_coverage::geometry::Point3;
use tethered_coverage::montecarlo::UserDistribution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub uav: UavConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            scenario: ScenarioConfig::default(),
            uav: UavConfig::default(),
            experiment: ExperimentConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub preset: Preset,
    pub hotspot_radius_m: f64,
    pub tbs_x_m: f64,
    /// Defaults to the preset's TBS height.
    pub tbs_h_m: Option<f64>,
    /// Linear SNR threshold, unless `beta_db` is given.
    pub beta: f64,
    pub beta_db: Option<f64>,
    pub environment: EnvironmentOverride,
    pub link: LinkConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            preset: Preset::DenseUrban,
            hotspot_radius_m: 150.0,
            tbs_x_m: 170.0,
            tbs_h_m: None,
            beta: 15.0,
            beta_db: None,
            environment: EnvironmentOverride::default(),
            link: LinkConfig::default(),
        }
    }
}

/// Field-by-field overrides of the preset environment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentOverride {
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma3: Option<f64>,
    pub a_b: Option<f64>,
    pub b_b: Option<f64>,
    pub a_r: Option<f64>,
    pub b_r: Option<f64>,
}

impl EnvironmentOverride {
    fn apply(&self, mut env: EnvironmentParams) -> EnvironmentParams {
        let pairs = [
            (&mut env.gamma1, self.gamma1),
            (&mut env.gamma2, self.gamma2),
            (&mut env.gamma3, self.gamma3),
            (&mut env.a_b, self.a_b),
            (&mut env.b_b, self.b_b),
            (&mut env.a_r, self.a_r),
            (&mut env.b_r, self.b_r),
        ];
        for (field, value) in pairs {
            if let Some(v) = value {
                *field = v;
            }
        }
        env
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub rho_b_dbm: f64,
    pub rho_u_dbm: f64,
    pub noise_dbm: f64,
    pub alpha_b: f64,
    pub alpha_u: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
    pub nakagami_m: u32,
    pub mu: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            rho_b_dbm: 1.0,
            rho_u_dbm: 1.0,
            noise_dbm: -80.0,
            alpha_b: 3.0,
            alpha_u: 2.7,
            eta_los_db: 1.6,
            eta_nlos_db: 23.0,
            nakagami_m: 2,
            mu: 1.0,
        }
    }
}

impl LinkConfig {
    fn params(&self) -> LinkParams {
        LinkParams {
            rho_b: dbm_to_mw(self.rho_b_dbm),
            rho_u: dbm_to_mw(self.rho_u_dbm),
            sigma_n2: dbm_to_mw(self.noise_dbm),
            alpha_b: self.alpha_b,
            alpha_u: self.alpha_u,
            eta_los: db_to_linear(self.eta_los_db),
            eta_nlos: db_to_linear(self.eta_nlos_db),
            m: self.nakagami_m,
            mu: self.mu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Tethered,
    Untethered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    pub x_m: f64,
    #[serde(default)]
    pub y_m: f64,
    pub h_m: f64,
}

impl Position {
    pub fn point(&self) -> Point3 {
        Point3::new(self.x_m, self.y_m, self.h_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UavConfig {
    pub mode: ModeKind,
    pub duty_cycle: f64,
    /// Fixed UAV location for maps of other quantities and fixed sweeps.
    pub position: Position,
    pub tether_length_m: f64,
    pub min_inclination_deg: f64,
    /// Candidate rooftops for `optimize` in tethered mode.
    pub ground_stations: Vec<Position>,
}

impl Default for UavConfig {
    fn default() -> Self {
        Self {
            mode: ModeKind::Untethered,
            duty_cycle: 1.0,
            position: Position { x_m: 0.0, y_m: 0.0, h_m: 100.0 },
            tether_length_m: 50.0,
            min_inclination_deg: 30.0,
            ground_stations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionKind {
    Accurate,
    Fast,
    Coarse,
}

impl PrecisionKind {
    pub fn precision(self) -> Precision {
        match self {
            PrecisionKind::Accurate => Precision::accurate(),
            PrecisionKind::Fast => Precision::fast(),
            PrecisionKind::Coarse => Precision::coarse(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub precision: PrecisionKind,
    pub validate: ValidateConfig,
    pub grid: GridConfig,
    pub optimize: OptimizeConfig,
    pub sweep: SweepConfig,
    pub association_map: AssociationMapConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            precision: PrecisionKind::Fast,
            validate: ValidateConfig::default(),
            grid: GridConfig::default(),
            optimize: OptimizeConfig::default(),
            sweep: SweepConfig::default(),
            association_map: AssociationMapConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub samples: usize,
    /// Random UAV positions per system-level check.
    pub positions: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self { samples: 100_000, positions: 3 }
    }
}

/// Plane grid shared by `coverage-map` and `association-map`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub y_min_m: f64,
    pub y_max_m: f64,
    pub step_m: f64,
    /// UAV altitude for `coverage-map`.
    pub h_m: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { x_min_m: -200.0, x_max_m: 200.0, y_min_m: -200.0, y_max_m: 200.0, step_m: 8.0, h_m: 100.0 }
    }
}

impl GridConfig {
    pub fn axis(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0 && hi >= lo) {
            bail!("grid needs step > 0 and max >= min");
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| lo + step * k as f64).collect())
    }

    pub fn xs(&self) -> Result<Vec<f64>> {
        Self::axis(self.x_min_m, self.x_max_m, self.step_m)
    }

    pub fn ys(&self) -> Result<Vec<f64>> {
        Self::axis(self.y_min_m, self.y_max_m, self.step_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Grid,
    Anneal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    pub method: MethodKind,
    /// U-UAV search box; `x` runs from the far hot-spot edge to the TBS.
    pub x_step_m: f64,
    pub h_min_m: f64,
    pub h_max_m: f64,
    pub h_step_m: f64,
    /// T-UAV surface lattice.
    pub psi_step_deg: f64,
    pub h_divisions: usize,
    pub anneal_steps: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            method: MethodKind::Grid,
            x_step_m: 4.0,
            h_min_m: 10.0,
            h_max_m: 300.0,
            h_step_m: 2.0,
            psi_step_deg: 1.0,
            h_divisions: 50,
            anneal_steps: 40,
        }
    }
}

impl OptimizeConfig {
    pub fn surface_grid(&self) -> SurfaceGrid {
        SurfaceGrid { psi_step: self.psi_step_deg.to_radians(), h_divisions: self.h_divisions }
    }

    pub fn anneal(&self) -> AnnealParams {
        AnnealParams { steps: self.anneal_steps, grid: self.surface_grid(), ..AnnealParams::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    UavX,
    UavH,
    TbsX,
    TetherT,
    DeltaA,
    DutyA,
    Beta,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::UavX => "uav_x",
            SweepVariable::UavH => "uav_h",
            SweepVariable::TbsX => "tbs_x",
            SweepVariable::TetherT => "tether_T",
            SweepVariable::DeltaA => "delta_A",
            SweepVariable::DutyA => "duty_A",
            SweepVariable::Beta => "beta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValues {
    List(Vec<f64>),
    Range { lo: f64, hi: f64, step: f64 },
}

impl SweepValues {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            SweepValues::List(v) => v.clone(),
            SweepValues::Range { lo, hi, step } => GridConfig::axis(*lo, *hi, *step)?,
        };
        if v.is_empty() {
            bail!("sweep values must not be empty");
        }
        if v.iter().any(|x| !x.is_finite()) {
            bail!("sweep values must be finite");
        }
        let up = v.windows(2).all(|w| w[1] > w[0]);
        let down = v.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            bail!("sweep values must be strictly monotone");
        }
        Ok(v)
    }
}

/// `fixed` evaluates every metric at `uav.position`; `optimized` uses the
/// random ground-station ensemble for the T-UAV and the axis grid optimum
/// for the U-UAV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Fixed,
    Optimized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub values: SweepValues,
    pub metrics: Vec<String>,
    pub mode: SweepMode,
    /// Ensemble settings for `optimized` sweeps.
    pub trials: usize,
    pub delta_a: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            variable: SweepVariable::UavX,
            values: SweepValues::Range { lo: -100.0, hi: 175.0, step: 5.0 },
            metrics: vec!["p_t".into(), "p_u".into()],
            mode: SweepMode::Fixed,
            trials: 200,
            delta_a: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsersKind {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssociationMapConfig {
    /// Sampled users appended after the grid rows.
    pub overlay_users: usize,
    pub users: UsersKind,
    pub gaussian_std_m: f64,
}

impl Default for AssociationMapConfig {
    fn default() -> Self {
        Self { overlay_users: 0, users: UsersKind::Uniform, gaussian_std_m: 50.0 }
    }
}

impl AssociationMapConfig {
    pub fn distribution(&self) -> UserDistribution {
        match self.users {
            UsersKind::Uniform => UserDistribution::UniformDisk,
            UsersKind::Gaussian => UserDistribution::Gaussian { std: self.gaussian_std_m },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: Format,
    /// Standard output when absent.
    pub path: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { format: Format::Csv, path: None }
    }
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        cfg.scenario()?;
        cfg.mode()?;
        Ok(cfg)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let s = &self.scenario;
        let preset = s.preset;
        let env = s.environment.apply(preset.env());
        let tbs = Point3::new(s.tbs_x_m, 0.0, s.tbs_h_m.unwrap_or(preset.tbs_height()));
        let beta = s.beta_db.map(db_to_linear).unwrap_or(s.beta);
        Ok(Scenario::new(HotSpot::centered(s.hotspot_radius_m)?, tbs, env, s.link.params(), beta)?)
    }

    pub fn mode(&self) -> Result<UavMode> {
        Ok(match self.uav.mode {
            ModeKind::Tethered => UavMode::Tethered,
            ModeKind::Untethered => UavMode::untethered(self.uav.duty_cycle)?,
        })
    }

    pub fn tether(&self) -> Result<Tether> {
        Ok(Tether::new(self.uav.tether_length_m, self.uav.min_inclination_deg.to_radians())?)
    }

    pub fn ground_stations(&self) -> Vec<GroundStation> {
        self.uav.ground_stations.iter().map(|p| GroundStation::new(p.point())).collect()
    }

    pub fn precision(&self) -> Precision {
        self.experiment.precision.precision()
    }

    /// SHA-256 of the canonical JSON form, so TOML and JSON spellings of
    /// the same run hash alike.
    /// SHA-256 of everything that affects results; the output section is
    /// left out so a CSV and a JSON run of the same experiment match.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_table_scenario() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.scenario().unwrap(), Scenario::table_defaults());
    }

    #[test]
    fn empty_document_is_default() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[scenario]\nrho_b = 1.0\n").is_err());
    }

    #[test]
    fn eta_ordering_is_checked() {
        let cfg: RunConfig = toml::from_str("[scenario.link]\neta_los_db = 30.0\n").unwrap();
        assert!(cfg.scenario().is_err());
    }

    #[test]
    fn environment_overrides_one_field() {
        let cfg: RunConfig =
            toml::from_str("[scenario]\npreset = \"high_rise\"\n[scenario.environment]\ngamma1 = 40.0\n").unwrap();
        let s = cfg.scenario().unwrap();
        assert_eq!(s.env.gamma1, 40.0);
        assert_eq!(s.env.a_r, EnvironmentParams::high_rise().a_r);
        assert_eq!(s.tbs.h, 30.0);
    }

    #[test]
    fn sweep_values_must_be_monotone() {
        assert!(SweepValues::List(vec![1.0, 3.0, 2.0]).values().is_err());
        assert!(SweepValues::List(vec![]).values().is_err());
        assert_eq!(SweepValues::Range { lo: 0.0, hi: 1.0, step: 0.5 }.values().unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn hash_ignores_spelling() {
        let a: RunConfig = toml::from_str("seed = 7\n").unwrap();
        let b: RunConfig = serde_json::from_str("{\"seed\": 7}").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), RunConfig::default().hash());
        let mut c = a.clone();
        c.output.format = Format::Json;
        c.output.path = Some("x.json".into());
        assert_eq!(c.hash(), a.hash());
    }
}
