//! JSON run configuration. Matrices are row-major nested arrays; a
//! time-dependent matrix is `{"const": [[...]]}`,
//! `{"samples": {"times": [...], "values": [[[...]], ...]}}`, or the name of
//! a builtin (`"example_C"`, `"example_H"`, `"example_free"`).

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::example;
use crate::model::{validate, DaeSystem, MatrixEvaluator, TimeGrid, UncertaintyModel};
use crate::simulate::{NoiseSpec, ScenarioSpec};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub weights: WeightsConfig,
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub eps: Option<f64>,
    /// `"from:to:count"`, geometric.
    #[serde(default)]
    pub sweep: Option<String>,
    #[serde(default)]
    pub l: Option<Vec<f64>>,
    #[serde(default)]
    pub observations: Option<PathBuf>,
    #[serde(default)]
    pub scenario: Option<ScenarioSource>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub compensated: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub f: Vec<Vec<f64>>,
    pub c: EvaluatorConfig,
    pub h: EvaluatorConfig,
    pub t0: f64,
    pub t_final: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub q0: Vec<Vec<f64>>,
    pub q: EvaluatorConfig,
    pub r: EvaluatorConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum EvaluatorConfig {
    Const(ConstConfig),
    Samples(SamplesWrapper),
    Builtin(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstConfig {
    #[serde(rename = "const")]
    pub value: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesWrapper {
    pub samples: SamplesConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesConfig {
    pub times: Vec<f64>,
    pub values: Vec<Vec<Vec<f64>>>,
}

/// A scenario inline or in its own file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    File(PathBuf),
    Inline(ScenarioConfig),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// `x1(t0)` in canonical coordinates.
    pub x1_initial: Vec<f64>,
    #[serde(default)]
    pub free: Option<EvaluatorConfig>,
    #[serde(default)]
    pub input: Option<EvaluatorConfig>,
    #[serde(default)]
    pub noise: NoiseConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseConfig {
    #[default]
    None,
    Constant { value: Vec<f64> },
    Uniform {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        amplitude: Option<Vec<f64>>,
    },
}

pub fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!("{what}: rows have different lengths")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{what}: non-finite entry")));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

impl EvaluatorConfig {
    pub fn build(&self, what: &str) -> Result<MatrixEvaluator> {
        match self {
            Self::Const(c) => Ok(MatrixEvaluator::constant(matrix(&c.value, what)?)),
            Self::Samples(s) => {
                let values = s.samples.values.iter().map(|v| matrix(v, what)).collect::<Result<Vec<_>>>()?;
                MatrixEvaluator::samples(s.samples.times.clone(), values)
            }
            Self::Builtin(name) => builtin(name),
        }
    }
}

fn builtin(name: &str) -> Result<MatrixEvaluator> {
    match name {
        "example_C" => Ok(MatrixEvaluator::constant(example::c())),
        "example_H" => Ok(MatrixEvaluator::constant(example::h())),
        "example_free" => Ok(example::free_components()),
        other => Err(Error::Config(format!("unknown builtin evaluator {other:?}"))),
    }
}

impl ScenarioConfig {
    pub fn build(&self, seed: Option<u64>) -> Result<ScenarioSpec> {
        let noise = match &self.noise {
            NoiseConfig::None => NoiseSpec::None,
            NoiseConfig::Constant { value } => NoiseSpec::Constant(DVector::from_column_slice(value)),
            NoiseConfig::Uniform { seed: s, amplitude } => NoiseSpec::Uniform {
                seed: seed.or(*s).ok_or_else(|| Error::Config("uniform noise needs a seed".into()))?,
                amplitude: amplitude.as_deref().map(DVector::from_column_slice),
            },
        };
        Ok(ScenarioSpec {
            x1_initial: DVector::from_column_slice(&self.x1_initial),
            free: self.free.as_ref().map(|e| e.build("free")).transpose()?,
            input: self.input.as_ref().map(|e| e.build("input")).transpose()?,
            noise,
        })
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = read_json(path)?;
        // Relative paths inside a config are relative to the config file.
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.observations.as_mut() {
            rebase(p);
        }
        if let Some(ScenarioSource::File(p)) = cfg.scenario.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn system(&self) -> Result<DaeSystem> {
        let s = &self.system;
        if !(s.t0 < s.t_final) {
            return Err(Error::Config(format!("t0 = {} must be below t_final = {}", s.t0, s.t_final)));
        }
        Ok(DaeSystem::new(matrix(&s.f, "F")?, s.c.build("C")?, s.h.build("H")?, s.t0, s.t_final))
    }

    pub fn weights(&self) -> Result<UncertaintyModel> {
        let w = &self.weights;
        Ok(UncertaintyModel::new(matrix(&w.q0, "Q0")?, w.q.build("Q")?, w.r.build("R")?))
    }

    /// Parse, then validate on `grid`.
    pub fn model(&self, grid_steps: usize) -> Result<(DaeSystem, UncertaintyModel, TimeGrid)> {
        let system = self.system()?;
        let weights = self.weights()?;
        let grid = system.grid(grid_steps)?;
        validate(&system, &weights, &grid).into_result()?;
        Ok((system, weights, grid))
    }

    pub fn scenario(&self, seed: Option<u64>) -> Result<Option<ScenarioSpec>> {
        match &self.scenario {
            None => Ok(None),
            Some(ScenarioSource::Inline(s)) => s.build(seed.or(self.seed)).map(Some),
            Some(ScenarioSource::File(p)) => read_json::<ScenarioConfig>(p)?.build(seed.or(self.seed)).map(Some),
        }
    }
}

/// The bundled reference configuration.
pub fn paper_example() -> RunConfig {
    let mut cfg: RunConfig = serde_json::from_str(PAPER_EXAMPLE).expect("bundled config parses");
    cfg.scenario = Some(ScenarioSource::Inline(serde_json::from_str(PAPER_SCENARIO).expect("bundled scenario parses")));
    cfg
}

pub const PAPER_EXAMPLE: &str = include_str!("../../../../configs/paper_example.json");
pub const PAPER_SCENARIO: &str = include_str!("../../../../configs/paper_scenario.json");
