//! Run configuration: a versioned JSON document describing the dataset,
//! model, target, attacks, replications and optional sweep.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::attacks::{AttackConfig, AttackProblem, Backend};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::EvalConfig;
use crate::model::{Model, ParamVector};
use crate::models::{
    gen_synthetic_logistic, gen_synthetic_regression, gen_two_group, make_model, ModelSpec,
    SyntheticLogisticSpec, SyntheticRegressionSpec, TwoGroupSpec,
};
use crate::rng::RngSeed;
use crate::samplers::{laplace_approx, HmcConfig};
use crate::targets::{
    laplace_flip_target, nig_mean_shift_target, nig_variance_scale_target, response_shift_target,
    synthetic_refit_target, Target,
};
use crate::weights::WeightVector;

pub const SCHEMA_VERSION: u32 = 1;

const DATA_LABEL: u64 = 0xda7a;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    /// CSV with a header row; paths are relative to the config file.
    Csv {
        path: PathBuf,
        #[serde(default)]
        response: Option<String>,
        #[serde(default)]
        features: Option<Vec<String>>,
    },
    SyntheticRegression(SyntheticRegressionSpec),
    SyntheticLogistic(SyntheticLogisticSpec),
    TwoGroup(TwoGroupSpec),
}

impl DatasetSource {
    fn is_synthetic(&self) -> bool {
        !matches!(self, DatasetSource::Csv { .. })
    }

    /// Seed of the generator for replication `r`, if synthetic.
    fn seed_for(&self, r: usize, resample: bool) -> Option<RngSeed> {
        let base = match self {
            DatasetSource::Csv { .. } => return None,
            DatasetSource::SyntheticRegression(s) => s.seed,
            DatasetSource::SyntheticLogistic(s) => s.seed,
            DatasetSource::TwoGroup(s) => s.seed,
        };
        Some(if resample && r > 0 {
            base.derive2(DATA_LABEL, r as u64)
        } else {
            base
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetRecipe {
    /// NIG posterior with the mean of coefficient `coord` set to `value`.
    NigMeanShift { coord: usize, value: f64 },
    /// NIG posterior with coefficient `coord`'s scale factor multiplied by `rho`.
    NigVarianceScale { coord: usize, rho: f64 },
    /// Laplace approximation with coefficient `coord`'s mean negated.
    LaplaceFlip { coord: usize },
    /// Posterior after adding `shift` to the response of rows where `column`
    /// equals `equals` (every row when `column` is absent).
    ResponseShift {
        shift: f64,
        #[serde(default)]
        column: Option<String>,
        #[serde(default = "one_f64")]
        equals: f64,
        #[serde(default)]
        hmc: HmcConfig,
    },
    /// Posterior given responses simulated at `estimates`.
    SyntheticRefit {
        estimates: Vec<f64>,
        #[serde(default)]
        hmc: HmcConfig,
    },
}

fn one_f64() -> f64 {
    1.0
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl TargetRecipe {
    pub fn build(&self, model: &Arc<dyn Model>, data: &Dataset) -> Result<Target> {
        let nig_posterior = || -> Result<_> {
            let nig = model.as_nig().ok_or_else(|| {
                Error::Config(format!(
                    "target recipe needs the nig_linreg model, not {}",
                    model.name()
                ))
            })?;
            nig.posterior(data, &WeightVector::ones(data.n()))
        };
        match self {
            TargetRecipe::NigMeanShift { coord, value } => {
                nig_mean_shift_target(&nig_posterior()?, *coord, *value)
            }
            TargetRecipe::NigVarianceScale { coord, rho } => {
                nig_variance_scale_target(&nig_posterior()?, *coord, *rho)
            }
            TargetRecipe::LaplaceFlip { coord } => {
                let init = ParamVector::new(model.initial_point(data))?;
                let approx =
                    laplace_approx(model.as_ref(), data, &WeightVector::ones(data.n()), &init)?;
                laplace_flip_target(&approx, *coord)
            }
            TargetRecipe::ResponseShift {
                shift,
                column,
                equals,
                hmc,
            } => {
                let mask: Vec<bool> = match column {
                    None => vec![true; data.n()],
                    Some(c) => {
                        let j = data.column_index(c).ok_or_else(|| {
                            Error::Config(format!("response_shift column {c:?} not in dataset"))
                        })?;
                        data.x().column(j).iter().map(|v| v == equals).collect()
                    }
                };
                response_shift_target(data, *shift, &mask, model.clone(), hmc)
            }
            TargetRecipe::SyntheticRefit { estimates, hmc } => synthetic_refit_target(
                model.clone(),
                &ParamVector::new(estimates.clone())?,
                data,
                hmc,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Budget,
    NoiseSd,
    Rho,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Budget => "budget",
            SweepAxis::NoiseSd => "noise_sd",
            SweepAxis::Rho => "rho",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub model: ModelSpec,
    pub target: TargetRecipe,
    /// defaults to `nig_sampler` for nig_linreg and `laplace` otherwise
    #[serde(default)]
    pub backend: Option<Backend>,
    pub attacks: Vec<AttackConfig>,
    #[serde(default = "one")]
    pub replications: usize,
    /// regenerate synthetic data for each replication after the first
    #[serde(default = "yes")]
    pub resample_data: bool,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub alternate_models: Vec<ModelSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    csv_cache: Option<Arc<Dataset>>,
}

impl RunConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.resolve(base_dir)?;
        Ok(cfg)
    }

    /// Reads, validates and loads referenced files.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve(&mut self, base_dir: &Path) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.attacks.is_empty() {
            return Err(Error::Config("at least one attack is required".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        for a in &self.attacks {
            a.validate()?;
        }
        if let DatasetSource::Csv {
            path,
            response,
            features,
        } = &mut self.dataset
        {
            if path.is_relative() {
                *path = base_dir.join(&*path);
            }
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "dataset {} does not exist",
                    path.display()
                )));
            }
            let data = Dataset::from_csv(&*path, response.as_deref(), features.as_deref())?;
            self.csv_cache = Some(Arc::new(data));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::Config("sweep needs at least one value".into()));
            }
            for &v in &s.values {
                self.at_sweep_value(s.axis, v)?;
            }
        }
        // dataset, model and target must all build
        self.problem(0)?;
        Ok(())
    }

    /// A copy with the sweep axis set to `value`.
    pub fn at_sweep_value(&self, axis: SweepAxis, value: f64) -> Result<RunConfig> {
        let mut out = self.clone();
        out.sweep = None;
        match axis {
            SweepAxis::Budget => {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= f64::from(u32::MAX)) {
                    return Err(Error::Config(format!(
                        "budget sweep value {value} is not a nonnegative integer"
                    )));
                }
                for a in &mut out.attacks {
                    a.budget.b_max = value as u32;
                }
            }
            SweepAxis::NoiseSd => match &mut out.dataset {
                DatasetSource::SyntheticRegression(s) => s.noise_sd = value,
                _ => {
                    return Err(Error::Config(
                        "noise_sd sweeps need a synthetic_regression dataset".into(),
                    ))
                }
            },
            SweepAxis::Rho => match &mut out.target {
                TargetRecipe::NigVarianceScale { rho, .. } => *rho = value,
                _ => {
                    return Err(Error::Config(
                        "rho sweeps need a nig_variance_scale target".into(),
                    ))
                }
            },
        }
        Ok(out)
    }

    pub fn data_seed(&self, replication: usize) -> Option<RngSeed> {
        self.dataset.seed_for(replication, self.resample_data)
    }

    pub fn dataset(&self, replication: usize) -> Result<Dataset> {
        let seed = self.data_seed(replication);
        match &self.dataset {
            DatasetSource::Csv { .. } => self
                .csv_cache
                .as_deref()
                .cloned()
                .ok_or_else(|| Error::Internal("CSV dataset was not loaded".into())),
            DatasetSource::SyntheticRegression(s) => {
                gen_synthetic_regression(&SyntheticRegressionSpec {
                    seed: seed.unwrap_or(s.seed),
                    ..*s
                })
            }
            DatasetSource::SyntheticLogistic(s) => gen_synthetic_logistic(&SyntheticLogisticSpec {
                seed: seed.unwrap_or(s.seed),
                ..s.clone()
            }),
            DatasetSource::TwoGroup(s) => gen_two_group(&TwoGroupSpec {
                seed: seed.unwrap_or(s.seed),
                ..*s
            }),
        }
    }

    pub fn backend_for(&self, model: &dyn Model) -> Backend {
        self.backend.clone().unwrap_or(if model.as_nig().is_some() {
            Backend::NigSampler
        } else {
            Backend::Laplace
        })
    }

    /// The attack problem for one replication.
    pub fn problem(&self, replication: usize) -> Result<AttackProblem> {
        let data = self.dataset(replication)?;
        let model = make_model(&self.model, data.p())?;
        let target = self.target.build(&model, &data)?;
        let backend = self.backend_for(model.as_ref());
        AttackProblem::new(model, data, target, backend)
    }

    pub fn alternate_models(&self, n_features: usize) -> Result<Vec<Arc<dyn Model>>> {
        self.alternate_models
            .iter()
            .map(|m| make_model(m, n_features))
            .collect()
    }

    /// Whether replications differ only in their random seeds.
    pub fn fixed_data(&self) -> bool {
        !(self.dataset.is_synthetic() && self.resample_data)
    }
}
