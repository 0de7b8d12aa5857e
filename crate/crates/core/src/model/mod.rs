//! Temperature-driven WNV transmission model (humans, *Culex* mosquitoes,
//! birds) and the derived daily covariates: adult abundance `M` and the
//! normalized cumulative temperature `T`.
//!
//! Compartments: `S_H E_H I_H R_H` for humans, `Egg A S_M E_M I_M` for
//! mosquitoes and `S_B E_B I_B R_B` for birds. Humans are dead-end hosts:
//! they are infected by infectious mosquitoes but never infect mosquitoes.

mod calibrate;
mod metric;
mod ode;
mod thermal;

pub use calibrate::{
    calibrate_carrying_capacity, CalibrationMethod, CalibrationSettings, CarryingCapacityEstimate,
};
pub use metric::{normalized_cumulative_temperature, ThermalMetric};
pub use ode::{simulate, write_trajectory_csv, SimulationTrajectory};
pub use thermal::{thermal_eval, MosquitoTraits, ResponseKind, ThermalResponse, DEFAULT_TRAITS_TOML};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid thermal response coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("trait file: {0}")]
    TraitFile(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time step {0} does not divide one day")]
    InvalidStep(f64),
    #[error("integration produced a non-finite state on day {0}")]
    NonFiniteState(usize),
    #[error("state went negative beyond clamp tolerance on day {0}")]
    NegativeStateUnrecoverable(usize),
    #[error("training cases contain no positive counts")]
    NoCasesInTraining,
    #[error("assimilation ensemble collapsed (variance {0:e})")]
    DivergedAssimilation(f64),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanParams {
    /// 1 / intrinsic incubation period, per day.
    pub incubation_rate: f64,
    pub recovery_rate: f64,
    /// Per-bite probability that an infectious mosquito bite infects a human,
    /// scaled by the share of bites taken on humans.
    pub spillover_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BirdParams {
    pub incubation_rate: f64,
    /// Recovery or removal rate of infectious birds, per day.
    pub recovery_rate: f64,
    /// Probability that an infectious bite transmits to a bird.
    pub transmission_prob: f64,
    /// Per-capita birth = death rate; keeps the bird total constant.
    pub turnover_rate: f64,
    /// Per-capita rate at which susceptible birds acquire infection from
    /// outside the modelled area (migration, neighbouring foci).
    pub introduction_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub human: HumanParams,
    pub bird: BirdParams,
    pub traits: MosquitoTraits,
    /// Egg hatching rate, per day.
    pub egg_hatch_rate: f64,
    /// Egg mortality, per day.
    pub egg_mortality: f64,
    /// Lower bound on adult lifespan (days) used when the curve reaches zero.
    pub min_lifespan: f64,
    /// Carrying capacity of the aquatic stage, individuals.
    pub carrying_capacity: f64,
}

impl Default for HumanParams {
    fn default() -> Self {
        Self {
            incubation_rate: 1.0 / 6.0,
            recovery_rate: 1.0 / 7.0,
            spillover_coefficient: 2.0e-4,
        }
    }
}

impl Default for BirdParams {
    fn default() -> Self {
        Self {
            incubation_rate: 1.0 / 2.0,
            recovery_rate: 1.0 / 4.0,
            transmission_prob: 0.9,
            turnover_rate: 1.0 / 1000.0,
            introduction_rate: 2.0e-5,
        }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            human: HumanParams::default(),
            bird: BirdParams::default(),
            traits: MosquitoTraits::default(),
            egg_hatch_rate: 0.5,
            egg_mortality: 0.1,
            min_lifespan: 1.0,
            carrying_capacity: 1.0e5,
        }
    }
}

impl ModelParams {
    pub fn with_carrying_capacity(&self, k: f64) -> Self {
        Self {
            carrying_capacity: k,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let rates = [
            ("human.incubation_rate", self.human.incubation_rate),
            ("human.recovery_rate", self.human.recovery_rate),
            ("human.spillover_coefficient", self.human.spillover_coefficient),
            ("bird.incubation_rate", self.bird.incubation_rate),
            ("bird.recovery_rate", self.bird.recovery_rate),
            ("bird.transmission_prob", self.bird.transmission_prob),
            ("bird.turnover_rate", self.bird.turnover_rate),
            ("bird.introduction_rate", self.bird.introduction_rate),
            ("egg_hatch_rate", self.egg_hatch_rate),
            ("egg_mortality", self.egg_mortality),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ModelError::InvalidParameter(format!("{name} must be a nonnegative rate")));
            }
        }
        if !(self.min_lifespan > 0.0) {
            return Err(ModelError::InvalidParameter("min_lifespan must be positive".into()));
        }
        if !(self.carrying_capacity.is_finite() && self.carrying_capacity > 0.0) {
            return Err(ModelError::InvalidParameter("carrying_capacity must be positive".into()));
        }
        self.traits.validate()
    }
}

/// Model state. All components are nonnegative counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CompartmentState {
    pub s_h: f64,
    pub e_h: f64,
    pub i_h: f64,
    pub r_h: f64,
    pub egg: f64,
    pub a_m: f64,
    pub s_m: f64,
    pub e_m: f64,
    pub i_m: f64,
    pub s_b: f64,
    pub e_b: f64,
    pub i_b: f64,
    pub r_b: f64,
}

pub const COMPARTMENT_NAMES: [&str; 13] = [
    "S_H", "E_H", "I_H", "R_H", "Egg_M", "A_M", "S_M", "E_M", "I_M", "S_B", "E_B", "I_B", "R_B",
];

impl CompartmentState {
    pub fn to_array(&self) -> [f64; 13] {
        [
            self.s_h, self.e_h, self.i_h, self.r_h, self.egg, self.a_m, self.s_m, self.e_m, self.i_m, self.s_b,
            self.e_b, self.i_b, self.r_b,
        ]
    }

    pub fn from_array(y: &[f64; 13]) -> Self {
        Self {
            s_h: y[0],
            e_h: y[1],
            i_h: y[2],
            r_h: y[3],
            egg: y[4],
            a_m: y[5],
            s_m: y[6],
            e_m: y[7],
            i_m: y[8],
            s_b: y[9],
            e_b: y[10],
            i_b: y[11],
            r_b: y[12],
        }
    }

    pub fn humans(&self) -> f64 {
        self.s_h + self.e_h + self.i_h + self.r_h
    }

    /// Adult mosquito abundance `M`.
    pub fn adults(&self) -> f64 {
        self.s_m + self.e_m + self.i_m
    }

    pub fn birds(&self) -> f64 {
        self.s_b + self.e_b + self.i_b + self.r_b
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.to_array().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ModelError::InvalidParameter(
                "initial state must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// A typical January 1 state: an overwintering mosquito population, a
    /// fully susceptible bird flock and a fully susceptible human population.
    pub fn seasonal_default() -> Self {
        Self {
            s_h: 1.0e6,
            egg: 2.0e3,
            a_m: 2.0e3,
            s_m: 5.0e3,
            s_b: 1.0e4,
            ..Default::default()
        }
    }
}
