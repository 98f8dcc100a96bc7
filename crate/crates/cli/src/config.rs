//! Experiment configuration: a TOML file with `[model]`, `[payoff]`,
//! `[grid]`, `[algorithm]`, `[execution]` and `[output]` sections.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chaos_bermudan::{
    BlackScholes, ExerciseRule, Granularity, Heston, Model, PayoffSpec, PricingRequest, TimeGrid,
};
use serde::{Deserialize, Serialize};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "CHAOS_BERMUDAN_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub payoff: PayoffConfig,
    pub grid: GridConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub execution: ExecutionConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    BlackScholes {
        spot: f64,
        #[serde(default = "one")]
        assets: usize,
        rate: f64,
        vol: f64,
        #[serde(default)]
        rho: f64,
    },
    Heston {
        spot: f64,
        rate: f64,
        v0: f64,
        kappa: f64,
        theta: f64,
        xi: f64,
        rho: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PayoffConfig {
    Put {
        strike: f64,
    },
    /// Equal weights unless `weights` is given.
    BasketPut {
        strike: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    /// Window and delay in years.
    MovingAverage {
        window: f64,
        #[serde(default)]
        delay: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub maturity: f64,
    pub dates: usize,
    /// Simulation steps; defaults to one per exercise date.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GranularityConfig {
    #[default]
    Fixed,
    PerWorker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Chaos,
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    #[serde(default)]
    pub method: Method,
    /// Chaos order `p`.
    pub order: usize,
    /// Total polynomial degree of the least-squares regressors.
    #[serde(default = "default_ls_degree")]
    pub ls_degree: usize,
    pub paths: usize,
    #[serde(default = "one")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub first_run: u64,
    /// Regress on in-the-money paths only and exercise only when in the money.
    #[serde(default)]
    pub itm_rule: bool,
    /// With `itm_rule`, exercise on `Z > 0 or Z >= C` instead of `and`.
    #[serde(default)]
    pub union_rule: bool,
    #[serde(default)]
    pub granularity: GranularityConfig,
    #[serde(default = "default_leaves")]
    pub leaves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExecutionConfig {
    /// Defaults to `CHAOS_BERMUDAN_WORKERS`, else 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn one() -> usize {
    1
}

fn default_ls_degree() -> usize {
    3
}

fn default_leaves() -> usize {
    chaos_bermudan::reduce::DEFAULT_LEAVES
}

/// Worker count from the environment, if set.
pub fn env_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| anyhow!("{WORKERS_ENV}={v:?} is not a worker count")),
        Err(_) => Ok(None),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).context("config is not valid TOML")?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| anyhow!("{}", e.message()))?;
        cfg.to_request()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The config with the worker count filled in from the environment.
    pub fn resolved(mut self) -> Result<Self> {
        self.execution.workers = Some(self.workers()?);
        Ok(self)
    }

    pub fn workers(&self) -> Result<usize> {
        Ok(match self.execution.workers {
            Some(w) => w,
            None => env_workers()?.unwrap_or(1),
        })
    }

    /// Validated pricing request.
    pub fn to_request(&self) -> Result<PricingRequest> {
        let model = match &self.model {
            ModelConfig::BlackScholes {
                spot,
                assets,
                rate,
                vol,
                rho,
            } => Model::BlackScholes(BlackScholes::new(
                vec![*spot; *assets],
                *rate,
                vec![*vol; *assets],
                *rho,
            )?),
            ModelConfig::Heston {
                spot,
                rate,
                v0,
                kappa,
                theta,
                xi,
                rho,
            } => {
                let h = Heston {
                    spot: *spot,
                    rate: *rate,
                    v0: *v0,
                    kappa: *kappa,
                    theta: *theta,
                    xi: *xi,
                    rho: *rho,
                };
                h.validate()?;
                Model::Heston(h)
            }
        };
        let g = &self.grid;
        let grid = TimeGrid::uniform(g.maturity, g.dates, g.steps.unwrap_or(g.dates))?;
        let payoff = match &self.payoff {
            PayoffConfig::Put { strike } => PayoffSpec::Put { strike: *strike },
            PayoffConfig::BasketPut { strike, weights } => PayoffSpec::BasketPut {
                strike: *strike,
                weights: weights
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / model.assets() as f64; model.assets()]),
            },
            PayoffConfig::MovingAverage { window, delay } => {
                PayoffSpec::moving_average(*window, *delay, g.maturity, g.dates)?
            }
        };
        let a = &self.algorithm;
        if a.union_rule && !a.itm_rule {
            bail!("algorithm.union_rule needs algorithm.itm_rule = true");
        }
        let mut req = PricingRequest::new(model, payoff, grid, a.order, a.paths);
        req.runs = a.runs;
        req.seed = a.seed;
        req.first_run = a.first_run;
        req.rule = match (a.itm_rule, a.union_rule) {
            (false, _) => ExerciseRule::Standard,
            (true, false) => ExerciseRule::InTheMoney,
            (true, true) => ExerciseRule::InTheMoneyUnion,
        };
        req.granularity = match a.granularity {
            GranularityConfig::Fixed => Granularity::Fixed { leaves: a.leaves },
            GranularityConfig::PerWorker => Granularity::PerWorker,
        };
        req.workers = self.workers()?;
        req.validate()?;
        if a.method == Method::Chaos {
            req.catalog()?;
        }
        Ok(req)
    }
}

/// Applies `section.key=value`; the value is read as a TOML value, falling
/// back to a plain string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override {spec:?} is not of the form section.key=value"))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| anyhow!("override {spec:?} needs a section.key path"))?;
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let section_table = entry
        .as_table_mut()
        .ok_or_else(|| anyhow!("{section} is not a section"))?;
    section_table.insert(key.to_string(), value);
    Ok(())
}
