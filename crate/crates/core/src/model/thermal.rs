//! Thermal performance curves for mosquito life-history traits.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    /// `c·t·(t−T0)·sqrt(Tm−t)` on `(T0, Tm)`; coefficients `[c, T0, Tm]`.
    Briere,
    /// `q·(t−T0)·(Tm−t)` on `(T0, Tm)`; coefficients `[q, T0, Tm]`.
    ConcaveQuadratic,
    /// `slope·t + intercept`; coefficients `[slope, intercept]`.
    Linear,
    /// Coefficients `[value]`.
    Constant,
}

/// A trait's response to temperature. Inputs are clamped into `valid_range`
/// before evaluation and the result is never negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalResponse {
    pub kind: ResponseKind,
    pub coefficients: Vec<f64>,
    pub valid_range: [f64; 2],
}

impl ThermalResponse {
    pub fn briere(c: f64, t0: f64, tm: f64) -> Self {
        Self {
            kind: ResponseKind::Briere,
            coefficients: vec![c, t0, tm],
            valid_range: [t0, tm],
        }
    }

    pub fn concave_quadratic(q: f64, t0: f64, tm: f64) -> Self {
        Self {
            kind: ResponseKind::ConcaveQuadratic,
            coefficients: vec![q, t0, tm],
            valid_range: [t0, tm],
        }
    }

    pub fn linear(slope: f64, intercept: f64, valid_range: [f64; 2]) -> Self {
        Self {
            kind: ResponseKind::Linear,
            coefficients: vec![slope, intercept],
            valid_range,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            kind: ResponseKind::Constant,
            coefficients: vec![value],
            valid_range: [-60.0, 60.0],
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |why: &str| Err(ModelError::InvalidCoefficients(why.to_string()));
        let c = &self.coefficients;
        if c.iter().any(|v| !v.is_finite()) {
            return bad("non-finite coefficient");
        }
        if !(self.valid_range[0] < self.valid_range[1]) {
            return bad("valid_range must be increasing");
        }
        match self.kind {
            ResponseKind::Briere | ResponseKind::ConcaveQuadratic => {
                if c.len() != 3 {
                    return bad("expected [scale, T0, Tm]");
                }
                if c[2] <= c[1] {
                    return bad("Tm must exceed T0");
                }
                if c[0] < 0.0 {
                    return bad("scale must be nonnegative");
                }
            }
            ResponseKind::Linear => {
                if c.len() != 2 {
                    return bad("expected [slope, intercept]");
                }
            }
            ResponseKind::Constant => {
                if c.len() != 1 {
                    return bad("expected [value]");
                }
                if c[0] < 0.0 {
                    return bad("constant must be nonnegative");
                }
            }
        }
        Ok(())
    }

    /// Evaluates the response at `temp` °C. Assumes `validate` has passed.
    pub fn eval(&self, temp: f64) -> f64 {
        let t = temp.clamp(self.valid_range[0], self.valid_range[1]);
        let c = &self.coefficients;
        let v = match self.kind {
            ResponseKind::Briere => {
                let (k, t0, tm) = (c[0], c[1], c[2]);
                if t > t0 && t < tm {
                    k * t * (t - t0) * (tm - t).max(0.0).sqrt()
                } else {
                    0.0
                }
            }
            ResponseKind::ConcaveQuadratic => {
                let (q, t0, tm) = (c[0], c[1], c[2]);
                -q * (t - t0) * (t - tm)
            }
            ResponseKind::Linear => c[0] * t + c[1],
            ResponseKind::Constant => c[0],
        };
        v.max(0.0)
    }
}

/// Checked evaluation.
pub fn thermal_eval(resp: &ThermalResponse, temp: f64) -> Result<f64, ModelError> {
    resp.validate()?;
    Ok(resp.eval(temp))
}

/// Temperature-dependent mosquito traits, one curve per trait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosquitoTraits {
    /// Eggs laid per female per day.
    pub egg_laying: ThermalResponse,
    /// Aquatic (larva to adult) development rate, 1/day.
    pub aquatic_development: ThermalResponse,
    /// Probability of surviving the aquatic stage.
    pub aquatic_survival: ThermalResponse,
    /// Adult lifespan in days.
    pub adult_lifespan: ThermalResponse,
    /// Bites per mosquito per day.
    pub biting_rate: ThermalResponse,
    /// Probability that a bite on an infectious bird infects the mosquito.
    pub vector_competence: ThermalResponse,
    /// Extrinsic incubation (parasite development) rate, 1/day.
    pub extrinsic_incubation: ThermalResponse,
}

/// Trait-table file as shipped in `data/`: one table per trait name.
#[derive(Debug, Deserialize, Serialize)]
struct TraitFile {
    #[serde(flatten)]
    traits: BTreeMap<String, ThermalResponse>,
}

const TRAIT_NAMES: [&str; 7] = [
    "egg_laying",
    "aquatic_development",
    "aquatic_survival",
    "adult_lifespan",
    "biting_rate",
    "vector_competence",
    "extrinsic_incubation",
];

/// Default *Culex tarsalis* trait table bundled with the crate.
pub const DEFAULT_TRAITS_TOML: &str = include_str!("../../data/culex_tarsalis_traits.toml");

impl MosquitoTraits {
    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let file: TraitFile = toml::from_str(text).map_err(|e| ModelError::TraitFile(e.to_string()))?;
        let mut map = file.traits;
        let mut take = |name: &str| {
            map.remove(name)
                .ok_or_else(|| ModelError::TraitFile(format!("missing trait `{name}`")))
        };
        let traits = MosquitoTraits {
            egg_laying: take(TRAIT_NAMES[0])?,
            aquatic_development: take(TRAIT_NAMES[1])?,
            aquatic_survival: take(TRAIT_NAMES[2])?,
            adult_lifespan: take(TRAIT_NAMES[3])?,
            biting_rate: take(TRAIT_NAMES[4])?,
            vector_competence: take(TRAIT_NAMES[5])?,
            extrinsic_incubation: take(TRAIT_NAMES[6])?,
        };
        if let Some(extra) = map.keys().next() {
            return Err(ModelError::TraitFile(format!("unknown trait `{extra}`")));
        }
        traits.validate()?;
        Ok(traits)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ModelError::TraitFile(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let mut map = BTreeMap::new();
        for (name, resp) in TRAIT_NAMES.iter().zip(self.all()) {
            map.insert(name.to_string(), resp.clone());
        }
        toml::to_string(&TraitFile { traits: map }).expect("trait table serializes")
    }

    fn all(&self) -> [&ThermalResponse; 7] {
        [
            &self.egg_laying,
            &self.aquatic_development,
            &self.aquatic_survival,
            &self.adult_lifespan,
            &self.biting_rate,
            &self.vector_competence,
            &self.extrinsic_incubation,
        ]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.all().iter().try_for_each(|r| r.validate())
    }
}

impl Default for MosquitoTraits {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_TRAITS_TOML).expect("bundled trait table is valid")
    }
}
