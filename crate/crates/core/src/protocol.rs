//! The calibration/validation benchmark: split once, tune baseline penalties
//! by cross-validation on the calibration part, fit every method and report
//! errors per order, coefficients and sparsity.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineMethod, BaselineModel};
use crate::datasets::IndexRange;
use crate::engine::{fit, FittedModel, PenaltySpec};
use crate::error::{Error, Result};
use crate::io::{format_number, write_table};
use crate::linalg::{center_xy, DataMatrix};
use crate::metrics::{l0, l0_complement};
use crate::par;
use crate::penalty::{GroupPartition, RidgeParams, ShrinkRatio};
use crate::reports::{metric_table, recovery_score, support_tolerance, Labelled, MetricRow, Predictor, Recovery};
use crate::sampling::{calibration_size, calvalxy, kennard_stone, rotated_split, SplitPlan};
use crate::selection::{select_hyperparameter, CvPlan, PenalizedBaseline, Splitter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pls,
    DualLasso,
    DualGl,
    DualLs,
    DualRidge,
    Ols,
    Ridge,
    Lasso,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Pls,
        Method::DualLasso,
        Method::DualGl,
        Method::DualLs,
        Method::DualRidge,
        Method::Ols,
        Method::Ridge,
        Method::Lasso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pls => "pls",
            Method::DualLasso => "dual-lasso",
            Method::DualGl => "dual-gl",
            Method::DualLs => "dual-ls",
            Method::DualRidge => "dual-ridge",
            Method::Ols => "ols",
            Method::Ridge => "ridge",
            Method::Lasso => "lasso",
        }
    }

    pub fn is_latent(self) -> bool {
        !matches!(self, Method::Ols | Method::Ridge | Method::Lasso)
    }

    /// Methods whose coefficients are dense, so their support is read with a
    /// relative tolerance instead of exact zeros.
    pub fn is_dense(self) -> bool {
        matches!(self, Method::Pls | Method::Ols | Method::Ridge)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid("method", format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
    pub shrink: f64,
    pub m_max: usize,
    /// Order at which coefficients and sparsity are reported.
    pub order: usize,
    pub calibration_fraction: f64,
    pub splitter: Splitter,
    pub seed: u64,
    /// Splits of the calibration set used to tune ridge and lasso penalties.
    pub cv_splits: usize,
    /// Contiguous groups for the group penalty.
    pub n_groups: usize,
    /// Explicit `ν₂`; otherwise `1/t` with `t` the tuned ridge penalty.
    pub nu2: Option<f64>,
    pub ridge_grid: Option<Vec<f64>>,
    pub lasso_grid: Option<Vec<f64>>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Pls, Method::DualLasso],
            shrink: 0.99,
            m_max: 10,
            order: 6,
            calibration_fraction: 0.8,
            splitter: Splitter::Calvalxy { n_groups: 10 },
            seed: 0,
            cv_splits: 5,
            n_groups: 4,
            nu2: None,
            ridge_grid: None,
            lasso_grid: None,
        }
    }
}

/// Relative ridge grid, scaled by the mean squared row norm of the centered data.
pub const RIDGE_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
/// Relative lasso grid, scaled by `‖Xᵀy‖∞` of the centered data.
pub const LASSO_GRID: [f64; 5] = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];

pub fn default_ridge_grid(x: &DataMatrix, y: &[f64]) -> Result<Vec<f64>> {
    let (xc, _, _) = center_xy(x, y)?;
    let scale = xc.frobenius_norm().powi(2) / x.n_rows() as f64;
    Ok(RIDGE_GRID.iter().map(|g| g * scale).collect())
}

pub fn default_lasso_grid(x: &DataMatrix, y: &[f64]) -> Result<Vec<f64>> {
    let (xc, yc, _) = center_xy(x, y)?;
    let scale = xc.tmul_vec(&yc).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(LASSO_GRID.iter().map(|g| g * scale).collect())
}

pub struct BenchmarkData {
    pub x: DataMatrix,
    pub y: Vec<f64>,
    /// Ground-truth active variables, when known.
    pub active_set: Option<Vec<IndexRange>>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub hyperparameters: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_components: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated: Option<bool>,
    /// Order whose coefficients are reported.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reported_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l0_complement: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovery: Option<Recovery>,
    #[serde(skip)]
    pub coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub scenario: String,
    pub n_obs: usize,
    pub n_vars: usize,
    pub config: BenchmarkConfig,
    #[serde(skip)]
    pub split: SplitPlan,
    pub n_calibration: usize,
    pub n_validation: usize,
    pub methods: Vec<MethodOutcome>,
    #[serde(skip)]
    pub rows: Vec<MetricRow>,
}

enum Fitted {
    Latent(FittedModel),
    Baseline(BaselineModel),
}

struct Tuned {
    ridge: Option<Result<f64>>,
    lasso: Option<Result<f64>>,
}

fn split_data(data: &BenchmarkData, config: &BenchmarkConfig) -> Result<SplitPlan> {
    let n = data.x.n_rows();
    let n_cal = calibration_size(n, config.calibration_fraction);
    match config.splitter {
        Splitter::Random => rotated_split(n, n_cal, config.seed, 0),
        Splitter::KennardStone => kennard_stone(&data.x, n_cal),
        Splitter::Calvalxy { n_groups } => calvalxy(&data.x, &data.y, n_cal, n_groups),
    }
}

fn tune(x: &DataMatrix, y: &[f64], config: &BenchmarkConfig) -> Tuned {
    let plan = CvPlan {
        n_splits: config.cv_splits,
        calibration_fraction: 0.8,
        seed: config.seed,
        splitter: Splitter::Random,
    };
    let needs_ridge = config.methods.contains(&Method::Ridge)
        || (config.methods.contains(&Method::DualRidge) && config.nu2.is_none());
    let run = |method: PenalizedBaseline, grid: &Option<Vec<f64>>| -> Result<f64> {
        let grid = match (grid, method) {
            (Some(g), _) => g.clone(),
            (None, PenalizedBaseline::Ridge) => default_ridge_grid(x, y)?,
            (None, PenalizedBaseline::Lasso) => default_lasso_grid(x, y)?,
        };
        Ok(select_hyperparameter(x, y, method, &grid, &plan)?.best)
    };
    let ridge = needs_ridge.then(|| run(PenalizedBaseline::Ridge, &config.ridge_grid));
    let lasso = config
        .methods
        .contains(&Method::Lasso)
        .then(|| run(PenalizedBaseline::Lasso, &config.lasso_grid));
    Tuned { ridge, lasso }
}

fn fit_method(
    method: Method,
    x: &DataMatrix,
    y: &[f64],
    config: &BenchmarkConfig,
    tuned: &Tuned,
    params: &mut BTreeMap<String, f64>,
) -> Result<Fitted> {
    let shrink = || ShrinkRatio::new(config.shrink);
    let latent = |spec: PenaltySpec| fit(x, y, &spec, config.m_max).map(Fitted::Latent);
    let baseline = |m: BaselineMethod| BaselineModel::fit(x, y, m).map(Fitted::Baseline);
    let tuned_value = |v: &Option<Result<f64>>| match v {
        Some(Ok(t)) => Ok(*t),
        Some(Err(e)) => Err(Error::invalid("t", format!("tuning failed: {e}"))),
        None => Err(Error::invalid("t", "was not tuned")),
    };
    if method.is_latent() && method != Method::Pls {
        params.insert("shrink".into(), config.shrink);
    }
    match method {
        Method::Pls => latent(PenaltySpec::Pls),
        Method::DualLasso => latent(PenaltySpec::PseudoLasso { shrink: shrink()? }),
        Method::DualLs => latent(PenaltySpec::PseudoLs { shrink: shrink()? }),
        Method::DualGl => {
            params.insert("n_groups".into(), config.n_groups as f64);
            let partition = GroupPartition::contiguous(x.n_cols(), config.n_groups)?;
            latent(PenaltySpec::group_lasso(partition, shrink()?))
        }
        Method::DualRidge => {
            let ridge = match config.nu2 {
                Some(nu2) => RidgeParams::new(nu2)?,
                None => RidgeParams::from_ridge_penalty(tuned_value(&tuned.ridge)?)?,
            };
            params.insert("nu2".into(), ridge.nu2);
            latent(PenaltySpec::PseudoRidge {
                shrink: shrink()?,
                ridge,
            })
        }
        Method::Ols => baseline(BaselineMethod::Ols),
        Method::Ridge => {
            let t = tuned_value(&tuned.ridge)?;
            params.insert("t".into(), t);
            baseline(BaselineMethod::Ridge { t })
        }
        Method::Lasso => {
            let t = tuned_value(&tuned.lasso)?;
            params.insert("t".into(), t);
            baseline(BaselineMethod::Lasso { t })
        }
    }
}

pub fn run_benchmark(data: &BenchmarkData, config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if config.methods.is_empty() {
        return Err(Error::invalid("methods", "at least one method is required"));
    }
    if config.m_max == 0 || config.order == 0 {
        return Err(Error::invalid("ncomp", "orders must be at least 1"));
    }
    ShrinkRatio::new(config.shrink)?;
    let split = split_data(data, config)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| data.y[i]).collect::<Vec<f64>>();
    let (x_cal, y_cal) = (data.x.select_rows(&split.calibration), pick(&split.calibration));
    let (x_val, y_val) = (data.x.select_rows(&split.validation), pick(&split.validation));

    let tuned = tune(&x_cal, &y_cal, config);
    let fitted: Vec<(BTreeMap<String, f64>, Result<Fitted>)> = par::map(&config.methods, |&method| {
        let mut params = BTreeMap::new();
        let result = fit_method(method, &x_cal, &y_cal, config, &tuned, &mut params);
        (params, result)
    });

    let mut outcomes = Vec::with_capacity(fitted.len());
    let mut rows = Vec::new();
    for (&method, (params, result)) in config.methods.iter().zip(fitted) {
        let mut outcome = MethodOutcome {
            method,
            status: "ok".into(),
            error: None,
            hyperparameters: params,
            n_components: None,
            truncated: None,
            reported_order: None,
            l0: None,
            l0_complement: None,
            recovery: None,
            coefficients: None,
        };
        let model = match result {
            Ok(m) => m,
            Err(e) => {
                outcome.status = "error".into();
                outcome.error = Some(e.to_string());
                outcomes.push(outcome);
                continue;
            }
        };
        let label = method.name().to_string();
        let (beta, table) = match &model {
            Fitted::Latent(m) => {
                let order = config.order.min(m.n_components());
                outcome.n_components = Some(m.n_components());
                outcome.truncated = Some(m.truncated());
                outcome.reported_order = Some(order);
                let p = Labelled { label, model: m };
                (m.coefficients(order)?.to_vec(), metric_rows(&p, &x_cal, &y_cal, &x_val, &y_val, config.m_max))
            }
            Fitted::Baseline(m) => {
                let p = Labelled { label, model: m };
                (m.coefficients().to_vec(), metric_rows(&p, &x_cal, &y_cal, &x_val, &y_val, config.m_max))
            }
        };
        match table {
            Ok(t) => rows.extend(t),
            Err(e) => {
                outcome.status = "error".into();
                outcome.error = Some(e.to_string());
            }
        }
        let tol = support_tolerance(&beta, method.is_dense());
        outcome.l0 = Some(l0(&beta, tol));
        outcome.l0_complement = Some(l0_complement(&beta, tol));
        outcome.recovery = data.active_set.as_ref().map(|s| recovery_score(&beta, s, tol));
        outcome.coefficients = Some(beta);
        outcomes.push(outcome);
    }
    Ok(BenchmarkReport {
        scenario: data.label.clone(),
        n_obs: data.x.n_rows(),
        n_vars: data.x.n_cols(),
        config: config.clone(),
        n_calibration: split.calibration.len(),
        n_validation: split.validation.len(),
        split,
        methods: outcomes,
        rows,
    })
}

fn metric_rows(
    p: &dyn Predictor,
    x_cal: &DataMatrix,
    y_cal: &[f64],
    x_val: &DataMatrix,
    y_val: &[f64],
    m_max: usize,
) -> Result<Vec<MetricRow>> {
    metric_table(&[p], (x_cal, y_cal), (x_val, y_val), m_max)
}

impl BenchmarkReport {
    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.methods.iter().find(|o| o.method == method)
    }

    /// Metric row for `method` at `order` on the given set.
    pub fn metric(&self, method: Method, order: usize, set: crate::reports::SetKind) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.method == method.name() && r.order == order && r.set == set)
    }

    /// Writes `rmse_vs_components.csv`, `coefficients_stack.csv`,
    /// `sparsity.csv`, `split.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.method.clone(),
                    r.order.to_string(),
                    r.set.as_str().to_string(),
                    format_number(r.rmse),
                    format_number(r.mae),
                    format_number(r.r2),
                ]
            })
            .collect();
        write_table(
            dir.join("rmse_vs_components.csv"),
            &["method", "order", "set", "rmse", "mae", "r2"],
            &rows,
        )?;
        let mut coef = Vec::new();
        let mut sparsity = Vec::new();
        for o in &self.methods {
            if let Some(beta) = &o.coefficients {
                for (j, b) in beta.iter().enumerate() {
                    coef.push(vec![o.method.name().to_string(), (j + 1).to_string(), format_number(*b)]);
                }
            }
            if let (Some(a), Some(b)) = (o.l0, o.l0_complement) {
                sparsity.push(vec![o.method.name().to_string(), a.to_string(), b.to_string()]);
            }
        }
        write_table(dir.join("coefficients_stack.csv"), &["method", "variable", "beta"], &coef)?;
        write_table(dir.join("sparsity.csv"), &["method", "l0", "l0_complement"], &sparsity)?;
        std::fs::write(dir.join("split.csv"), self.split.to_csv())?;
        let mut summary = serde_json::to_string_pretty(self)?;
        summary.push('\n');
        std::fs::write(dir.join("summary.json"), summary)?;
        Ok(())
    }
}
