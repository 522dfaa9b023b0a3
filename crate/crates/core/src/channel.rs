//! Radio environment: line-of-sight models, mean SNRs, fading samplers and
//! unit conversions.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3};

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Urban environment statistics and the sigmoid fits of the LoS
/// probability for the backhaul (`a_b`, `b_b`) and access (`a_r`, `b_r`)
/// links.
///
/// `gamma2` only feeds [`los_probability_exact`]; every coverage formula
/// uses the sigmoid fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentParams {
    /// Rayleigh scale of building heights (m).
    pub gamma1: f64,
    /// Ratio of built-up land to total land area.
    pub gamma2: f64,
    /// Buildings per km².
    pub gamma3: f64,
    pub a_b: f64,
    pub b_b: f64,
    pub a_r: f64,
    pub b_r: f64,
}

impl EnvironmentParams {
    pub fn dense_urban() -> Self {
        Self { gamma1: 20.0, gamma2: 0.3, gamma3: 300.0, a_b: 7.0, b_b: 0.2, a_r: 13.0, b_r: 0.22 }
    }

    pub fn high_rise() -> Self {
        Self { gamma1: 50.0, gamma2: 0.5, gamma3: 300.0, a_b: 11.0, b_b: 0.16, a_r: 22.0, b_r: 0.18 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1 > 0.0) {
            return Err(Error::invalid("gamma1", "must be > 0"));
        }
        if !(self.gamma3 > 0.0) {
            return Err(Error::invalid("gamma3", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.gamma2) {
            return Err(Error::invalid("gamma2", "must lie in [0, 1]"));
        }
        if !(self.b_b > 0.0 && self.b_r > 0.0) {
            return Err(Error::invalid("b_b/b_r", "sigmoid slopes must be > 0"));
        }
        Ok(())
    }
}

/// Named urban environments with their sigmoid fits and TBS height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    DenseUrban,
    HighRise,
}

impl Preset {
    pub fn env(self) -> EnvironmentParams {
        match self {
            Preset::DenseUrban => EnvironmentParams::dense_urban(),
            Preset::HighRise => EnvironmentParams::high_rise(),
        }
    }

    /// TBS antenna height (m).
    pub fn tbs_height(self) -> f64 {
        match self {
            Preset::DenseUrban => 10.0,
            Preset::HighRise => 30.0,
        }
    }
}

/// Transmit/noise powers (mW), path-loss exponents, excess attenuations
/// (linear) and fading parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub rho_b: f64,
    pub rho_u: f64,
    pub sigma_n2: f64,
    pub alpha_b: f64,
    pub alpha_u: f64,
    pub eta_los: f64,
    pub eta_nlos: f64,
    /// Nakagami shape of the aerial links.
    pub m: u32,
    /// Rate of the exponential terrestrial fading gain.
    pub mu: f64,
}

impl LinkParams {
    /// The default parameter set (1 dBm transmitters, −80 dBm noise,
    /// 1.6/23 dB excess attenuation, m = 2).
    pub fn table_defaults() -> Self {
        Self {
            rho_b: dbm_to_mw(1.0),
            rho_u: dbm_to_mw(1.0),
            sigma_n2: dbm_to_mw(-80.0),
            alpha_b: 3.0,
            alpha_u: 2.7,
            eta_los: db_to_linear(1.6),
            eta_nlos: db_to_linear(23.0),
            m: 2,
            mu: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho_b", self.rho_b), ("rho_u", self.rho_u), ("sigma_n2", self.sigma_n2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "powers must be finite and > 0"));
            }
        }
        if !(self.alpha_b > 2.0 && self.alpha_u > 2.0) {
            return Err(Error::invalid("alpha", "path-loss exponents must exceed 2"));
        }
        if !(self.eta_los >= 1.0 && self.eta_los < self.eta_nlos) {
            return Err(Error::invalid("eta", "need 1 <= eta_los < eta_nlos"));
        }
        if self.m == 0 {
            return Err(Error::invalid("m", "Nakagami shape must be a positive integer"));
        }
        if !(self.mu > 0.0) {
            return Err(Error::invalid("mu", "must be > 0"));
        }
        Ok(())
    }

    pub fn eta(&self, los: bool) -> f64 {
        if los {
            self.eta_los
        } else {
            self.eta_nlos
        }
    }

    /// Mean SNR of the terrestrial access link (unit-mean fading).
    pub fn mean_snr_terrestrial(&self, tbs: &Point3, user: &Point2) -> Result<f64> {
        let d = tbs.distance(&user.at_height(0.0));
        if d <= 0.0 {
            return Err(Error::Degenerate("TBS–user distance is zero".into()));
        }
        Ok(self.rho_b * d.powf(-self.alpha_b) / self.sigma_n2)
    }

    /// Mean SNR of the aerial access link (unit-mean fading).
    pub fn mean_snr_aerial(&self, uav: &Point3, user: &Point2, los: bool) -> Result<f64> {
        let d = uav.distance(&user.at_height(0.0));
        if d <= 0.0 {
            return Err(Error::Degenerate("UAV–user distance is zero".into()));
        }
        Ok(self.rho_u * d.powf(-self.alpha_u) / (self.sigma_n2 * self.eta(los)))
    }
}

/// Linear SNR threshold together with the normalized thresholds
/// `σ²β/ρ_b` and `σ²β/ρ_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrThreshold {
    pub beta: f64,
    pub beta_bar_b: f64,
    pub beta_bar_u: f64,
}

impl SnrThreshold {
    pub fn new(beta: f64, link: &LinkParams) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::invalid("beta", "threshold must be finite and > 0"));
        }
        Ok(Self { beta, beta_bar_b: link.sigma_n2 * beta / link.rho_b, beta_bar_u: link.sigma_n2 * beta / link.rho_u })
    }
}

/// Building-blockage LoS probability between an elevated node `from` and a
/// lower node `to`, from the Rayleigh building-height model.
///
/// `K = ⌊d·√(γ₂γ₃) − 1⌋` buildings are crossed, `d` being the ground
/// distance in km; the link is LoS when every crossed building is lower
/// than the ray at that point.
pub fn los_probability_exact(env: &EnvironmentParams, from: &Point3, to: &Point3) -> f64 {
    let ground_km = from.project().distance(&to.project()) / 1000.0;
    let k_max = (ground_km * (env.gamma2 * env.gamma3).sqrt() - 1.0).floor();
    if k_max < 0.0 || env.gamma1 <= 0.0 {
        return 1.0;
    }
    let k_max = k_max as u64;
    let (hu, hi) = (from.h, to.h);
    let two_g1_sq = 2.0 * env.gamma1 * env.gamma1;
    let mut p = 1.0;
    for k in 0..=k_max {
        let hk = hu - (k as f64 + 0.5) * (hu - hi) / (k_max as f64 + 1.0);
        p *= 1.0 - (-(hk * hk) / two_g1_sq).exp();
    }
    p
}

fn sigmoid_los(a: f64, b: f64, elevation_deg: f64) -> f64 {
    1.0 / (1.0 + a * (-b * (elevation_deg - a)).exp())
}

/// LoS probability of the UAV–user link; the elevation angle enters in
/// degrees.
pub fn los_probability_access(env: &EnvironmentParams, uav: &Point3, ground: &Point2) -> f64 {
    let r = uav.project().distance(ground);
    los_probability_access_at(env, r, uav.h)
}

/// Access LoS probability from horizontal distance `r` and UAV height `h_u`.
#[inline]
pub fn los_probability_access_at(env: &EnvironmentParams, r: f64, h_u: f64) -> f64 {
    let elevation = h_u.atan2(r).to_degrees();
    sigmoid_los(env.a_r, env.b_r, elevation)
}

/// LoS probability of the TBS–UAV backhaul link. The elevation is signed:
/// a UAV below the TBS yields a negative angle.
pub fn los_probability_backhaul(env: &EnvironmentParams, tbs: &Point3, uav: &Point3) -> f64 {
    let ground = tbs.project().distance(&uav.project());
    let elevation = (uav.h - tbs.h).atan2(ground).to_degrees();
    sigmoid_los(env.a_b, env.b_b, elevation)
}

/// Exponential gain with rate `mu` (Rayleigh amplitude fading).
pub fn sample_rayleigh_gain<R: Rng + ?Sized>(rng: &mut R, mu: f64) -> f64 {
    Exp::new(mu).expect("rate must be positive").sample(rng)
}

/// Unit-mean Gamma gain with shape `m` (Nakagami-m amplitude fading).
pub fn sample_nakagami_gain<R: Rng + ?Sized>(rng: &mut R, m: u32) -> f64 {
    let m = f64::from(m);
    Gamma::new(m, 1.0 / m).expect("shape must be positive").sample(rng)
}
