//! The deflation loop shared by PLS1 and every dual-norm variant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{center_xy, deflate_in_place, dot, norm_l2, solve_spd, CenteringStats, DataMatrix, SquareMatrix};
use crate::penalty::{
    group_lasso_weight, lasso_weight, CalibrationContext, GroupPartition, LsWeightSolver, PenaltyNorm,
    RidgeParams, RidgeWeightSolver, ShrinkRatio, ThresholdLog,
};

/// Relative size below which a covariance or score vector counts as exhausted.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Which weight solver runs at each component.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltySpec {
    Pls,
    PseudoLasso {
        shrink: ShrinkRatio,
    },
    PseudoGroupLasso {
        partition: GroupPartition,
        shrink: Vec<ShrinkRatio>,
    },
    PseudoLs {
        shrink: ShrinkRatio,
    },
    PseudoRidge {
        shrink: ShrinkRatio,
        ridge: RidgeParams,
    },
}

impl PenaltySpec {
    pub fn kind(&self) -> &'static str {
        match self {
            PenaltySpec::Pls => "pls",
            PenaltySpec::PseudoLasso { .. } => "pseudo_lasso",
            PenaltySpec::PseudoGroupLasso { .. } => "pseudo_group_lasso",
            PenaltySpec::PseudoLs { .. } => "pseudo_ls",
            PenaltySpec::PseudoRidge { .. } => "pseudo_ridge",
        }
    }

    /// Group variant with one shared ratio for every group.
    pub fn group_lasso(partition: GroupPartition, shrink: ShrinkRatio) -> Self {
        let shrink = vec![shrink; partition.n_groups()];
        PenaltySpec::PseudoGroupLasso { partition, shrink }
    }

    fn validate(&self, n_vars: usize) -> Result<()> {
        if let PenaltySpec::PseudoGroupLasso { partition, shrink } = self {
            if partition.n_vars() != n_vars {
                return Err(Error::DimensionMismatch(format!(
                    "group partition covers {} variables, data has {n_vars}",
                    partition.n_vars()
                )));
            }
            if shrink.len() != partition.n_groups() {
                return Err(Error::invalid(
                    "shrink",
                    format!("{} ratios for {} groups", shrink.len(), partition.n_groups()),
                ));
            }
        }
        Ok(())
    }
}

/// Parameters of the norm under which a component weight is unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "norm", rename_all = "snake_case")]
pub enum ComponentNorm {
    L2,
    PseudoLasso { lambda1: f64 },
    PseudoGroupLasso { alphas: Vec<f64>, lambdas: Vec<f64> },
    PseudoRidge { lambda1: f64, lambda2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentLog {
    #[serde(flatten)]
    pub threshold: ThresholdLog,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<ThresholdLog>>,
    #[serde(flatten)]
    pub norm: ComponentNorm,
}

/// A fitted latent-variable model with coefficients for every order `1..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    spec: PenaltySpec,
    centering: CenteringStats,
    weights: Vec<Vec<f64>>,
    coefficients: Vec<Vec<f64>>,
    components: Vec<ComponentLog>,
    scores: Option<Vec<Vec<f64>>>,
    fitted: Option<Vec<Vec<f64>>>,
    requested: usize,
}

enum Solver<'a> {
    Plain,
    Ls(LsWeightSolver),
    Ridge(RidgeWeightSolver<'a>),
}

/// Fit `m` components. Stops early, flagging the model as truncated, once the
/// covariance or the score vanishes.
pub fn fit(x: &DataMatrix, y: &[f64], spec: &PenaltySpec, m: usize) -> Result<FittedModel> {
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, y has {} values",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() < 3 {
        return Err(Error::invalid("X", "at least 3 observations are required"));
    }
    if m == 0 {
        return Err(Error::invalid("ncomp", "must be at least 1"));
    }
    spec.validate(x.n_cols())?;
    let (xc, yc, centering) = center_xy(x, y)?;
    let cap = m.min(x.n_rows() - 1).min(x.n_cols());

    let solver = match spec {
        PenaltySpec::PseudoLs { .. } => Solver::Ls(LsWeightSolver::new(&xc)?),
        PenaltySpec::PseudoRidge { ridge, .. } => Solver::Ridge(RidgeWeightSolver::new(&xc, *ridge)?),
        _ => Solver::Plain,
    };

    let x_norm = xc.frobenius_norm();
    let y_norm = norm_l2(&yc);
    let mut xm = xc.clone();
    let mut weights = Vec::with_capacity(cap);
    let mut scores: Vec<Vec<f64>> = Vec::with_capacity(cap);
    let mut components = Vec::with_capacity(cap);

    for _ in 0..cap {
        let z = xm.tmul_vec(&yc);
        if norm_l2(&z) <= RANK_TOLERANCE * x_norm * y_norm {
            break;
        }
        let (w, log) = component_weight(spec, &solver, &xm, &yc, &z)?;
        let t = xm.mul_vec(&w);
        if norm_l2(&t) <= RANK_TOLERANCE * x_norm * norm_l2(&w) {
            break;
        }
        deflate_in_place(&mut xm, &t)?;
        weights.push(w);
        scores.push(t);
        components.push(log);
    }
    if weights.is_empty() {
        return Err(Error::RankExhausted { component: 1 });
    }

    let coefficients = regression_coefficients(&xc, &yc, &weights, &scores)?;
    let fitted = fitted_values(&yc, centering.y_mean, &scores)?;
    Ok(FittedModel {
        spec: spec.clone(),
        centering,
        weights,
        coefficients,
        components,
        scores: Some(scores),
        fitted: Some(fitted),
        requested: m,
    })
}

fn component_weight(
    spec: &PenaltySpec,
    solver: &Solver<'_>,
    xm: &DataMatrix,
    y: &[f64],
    z: &[f64],
) -> Result<(Vec<f64>, ComponentLog)> {
    let plain = |threshold, norm| ComponentLog {
        threshold,
        groups: None,
        norm,
    };
    Ok(match (spec, solver) {
        (PenaltySpec::Pls, _) => {
            let mu = norm_l2(z);
            let w = z.iter().map(|v| v / mu).collect();
            (w, plain(ThresholdLog::new(0.0, mu), ComponentNorm::L2))
        }
        (PenaltySpec::PseudoLasso { shrink }, _) => {
            let r = lasso_weight(z, *shrink)?;
            let norm = ComponentNorm::PseudoLasso { lambda1: r.log.lambda };
            (r.w, plain(r.log, norm))
        }
        (PenaltySpec::PseudoGroupLasso { partition, shrink }, _) => {
            let r = group_lasso_weight(z, partition, shrink, CalibrationContext { x: xm, y })?;
            let log = ComponentLog {
                threshold: r.summary_log(),
                groups: Some(r.group_logs.clone()),
                norm: ComponentNorm::PseudoGroupLasso {
                    alphas: r.alphas.clone(),
                    lambdas: r.lambdas.clone(),
                },
            };
            (r.w, log)
        }
        (PenaltySpec::PseudoLs { shrink }, Solver::Ls(ls)) => {
            let r = ls.weight(z, *shrink)?;
            (r.w, plain(r.log, ComponentNorm::L2))
        }
        (PenaltySpec::PseudoRidge { shrink, .. }, Solver::Ridge(ridge)) => {
            let r = ridge.weight(z, *shrink)?;
            let norm = ComponentNorm::PseudoRidge {
                lambda1: r.log.lambda,
                lambda2: r.lambda2,
            };
            (r.w, plain(r.log, norm))
        }
        _ => unreachable!("solver prepared for a different penalty"),
    })
}

/// `β̂_k = W_k (T_kᵀ X W_k)⁻¹ T_kᵀ y`. The middle matrix is upper triangular
/// with diagonal `‖t_i‖²` because each score is orthogonal to later deflated
/// blocks, so every order is a back-substitution on its leading block.
fn regression_coefficients(
    xc: &DataMatrix,
    yc: &[f64],
    weights: &[Vec<f64>],
    scores: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let m = weights.len();
    let xw: Vec<Vec<f64>> = weights.iter().map(|w| xc.mul_vec(w)).collect();
    let mut r = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            r[i * m + j] = dot(&scores[i], &xw[j]);
        }
    }
    let ty: Vec<f64> = scores.iter().map(|t| dot(t, yc)).collect();
    let mut out = Vec::with_capacity(m);
    for k in 1..=m {
        let mut c = ty[..k].to_vec();
        for i in (0..k).rev() {
            let mut s = c[i];
            for j in (i + 1)..k {
                s -= r[i * m + j] * c[j];
            }
            let d = r[i * m + i];
            if !(d.abs() > 0.0) {
                return Err(Error::SingularMatrix {
                    index: i,
                    pivot: d,
                    tolerance: 0.0,
                });
            }
            c[i] = s / d;
        }
        let mut beta = vec![0.0; xc.n_cols()];
        for (w, ci) in weights[..k].iter().zip(&c) {
            crate::linalg::axpy(*ci, w, &mut beta);
        }
        out.push(beta);
    }
    Ok(out)
}

/// `ȳ + T_k (T_kᵀT_k)⁻¹ T_kᵀ y` for every order.
fn fitted_values(yc: &[f64], y_mean: f64, scores: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let m = scores.len();
    let ty: Vec<f64> = scores.iter().map(|t| dot(t, yc)).collect();
    let mut out = Vec::with_capacity(m);
    for k in 1..=m {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| dot(&scores[i], &scores[j])).collect())
            .collect();
        let c = solve_spd(&SquareMatrix::from_rows(&rows)?, &ty[..k])?;
        let mut yhat = vec![y_mean; yc.len()];
        for (t, ci) in scores[..k].iter().zip(&c) {
            crate::linalg::axpy(*ci, t, &mut yhat);
        }
        out.push(yhat);
    }
    Ok(out)
}

impl FittedModel {
    pub fn spec(&self) -> &PenaltySpec {
        &self.spec
    }

    pub fn centering(&self) -> &CenteringStats {
        &self.centering
    }

    /// Number of components actually built.
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn requested_components(&self) -> usize {
        self.requested
    }

    /// True when fewer components than requested could be built.
    pub fn truncated(&self) -> bool {
        self.weights.len() < self.requested
    }

    pub fn n_vars(&self) -> usize {
        self.centering.col_means.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Training scores; absent on models loaded from disk.
    pub fn scores(&self) -> Option<&[Vec<f64>]> {
        self.scores.as_deref()
    }

    pub fn components(&self) -> &[ComponentLog] {
        &self.components
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order == 0 || order > self.n_components() {
            return Err(Error::invalid(
                "order",
                format!("must be in 1..={}, got {order}", self.n_components()),
            ));
        }
        Ok(())
    }

    pub fn coefficients(&self, order: usize) -> Result<&[f64]> {
        self.check_order(order)?;
        Ok(&self.coefficients[order - 1])
    }

    pub fn all_coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    /// Calibration fitted values at `order`; absent on models loaded from disk.
    pub fn fitted_values(&self, order: usize) -> Result<Option<&[f64]>> {
        self.check_order(order)?;
        Ok(self.fitted.as_ref().map(|f| f[order - 1].as_slice()))
    }

    /// `ŷ = ȳ + (x − x̄)ᵀβ̂_order`
    pub fn predict(&self, x_new: &DataMatrix, order: usize) -> Result<Vec<f64>> {
        self.check_order(order)?;
        predict_linear(&self.centering, &self.coefficients[order - 1], x_new)
    }

    /// Predictions at every order, index `k − 1` holding order `k`.
    pub fn predict_all(&self, x_new: &DataMatrix) -> Result<Vec<Vec<f64>>> {
        self.coefficients
            .iter()
            .map(|b| predict_linear(&self.centering, b, x_new))
            .collect()
    }

    /// Norm under which weight `m` (1-based) is unit. `x_centered` must be the
    /// centered training matrix; only the pseudo-ridge norm reads it.
    pub fn component_norm<'a>(&'a self, m: usize, x_centered: &'a DataMatrix) -> Result<PenaltyNorm<'a>> {
        self.check_order(m)?;
        Ok(match (&self.components[m - 1].norm, &self.spec) {
            (ComponentNorm::L2, _) => PenaltyNorm::L2,
            (ComponentNorm::PseudoLasso { lambda1 }, _) => PenaltyNorm::PseudoLasso { lambda: *lambda1 },
            (ComponentNorm::PseudoGroupLasso { alphas, lambdas }, PenaltySpec::PseudoGroupLasso { partition, .. }) => {
                PenaltyNorm::PseudoGroupLasso {
                    partition,
                    alphas: alphas.clone(),
                    lambdas: lambdas.clone(),
                }
            }
            (ComponentNorm::PseudoRidge { lambda1, lambda2 }, _) => PenaltyNorm::PseudoRidge {
                x: x_centered,
                lambda1: *lambda1,
                lambda2: *lambda2,
            },
            _ => return Err(Error::invalid("model", "component norm does not match the penalty")),
        })
    }
}

pub(crate) fn predict_linear(centering: &CenteringStats, beta: &[f64], x_new: &DataMatrix) -> Result<Vec<f64>> {
    if x_new.n_cols() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} variables, data has {}",
            beta.len(),
            x_new.n_cols()
        )));
    }
    let offset = centering.y_mean - dot(&centering.col_means, beta);
    Ok(x_new.rows_iter().map(|r| offset + dot(r, beta)).collect())
}

/// Serialized form shared by latent and baseline models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub kind: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "P")]
    pub p: usize,
    pub col_means: Vec<f64>,
    pub y_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varsigma: Option<ShrinkField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu2: Option<f64>,
    /// Group id (1-based) of every variable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<usize>>,
    /// Penalty parameter of a baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub thresholds: Vec<ComponentLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShrinkField {
    Single(f64),
    PerGroup(Vec<f64>),
}

pub const FORMAT_VERSION: u32 = 1;

impl FittedModel {
    pub fn to_document(&self) -> ModelDocument {
        let (varsigma, nu2, groups) = match &self.spec {
            PenaltySpec::Pls => (None, None, None),
            PenaltySpec::PseudoLasso { shrink } | PenaltySpec::PseudoLs { shrink } => {
                (Some(ShrinkField::Single(shrink.value())), None, None)
            }
            PenaltySpec::PseudoGroupLasso { partition, shrink } => (
                Some(ShrinkField::PerGroup(shrink.iter().map(|s| s.value()).collect())),
                None,
                Some(partition.group_ids().iter().map(|g| g + 1).collect()),
            ),
            PenaltySpec::PseudoRidge { shrink, ridge } => {
                (Some(ShrinkField::Single(shrink.value())), Some(ridge.nu2), None)
            }
        };
        ModelDocument {
            format_version: FORMAT_VERSION,
            kind: self.spec.kind().to_string(),
            m: self.n_components(),
            p: self.n_vars(),
            col_means: self.centering.col_means.clone(),
            y_mean: self.centering.y_mean,
            varsigma,
            nu2,
            groups,
            t: None,
            w: self.weights.clone(),
            beta: self.coefficients.clone(),
            thresholds: self.components.clone(),
        }
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        doc.check_shape()?;
        let single = |doc: &ModelDocument| match &doc.varsigma {
            Some(ShrinkField::Single(v)) => ShrinkRatio::new(*v),
            _ => Err(Error::invalid("varsigma", "expected a single ratio")),
        };
        let spec = match doc.kind.as_str() {
            "pls" => PenaltySpec::Pls,
            "pseudo_lasso" => PenaltySpec::PseudoLasso { shrink: single(&doc)? },
            "pseudo_ls" => PenaltySpec::PseudoLs { shrink: single(&doc)? },
            "pseudo_ridge" => PenaltySpec::PseudoRidge {
                shrink: single(&doc)?,
                ridge: RidgeParams::new(doc.nu2.ok_or_else(|| Error::invalid("nu2", "missing"))?)?,
            },
            "pseudo_group_lasso" => {
                let ids = doc.groups.as_ref().ok_or_else(|| Error::invalid("groups", "missing"))?;
                let partition = GroupPartition::new(ids.iter().map(|g| g.wrapping_sub(1)).collect())?;
                let shrink = match &doc.varsigma {
                    Some(ShrinkField::PerGroup(v)) => v.iter().map(|s| ShrinkRatio::new(*s)).collect::<Result<_>>()?,
                    Some(ShrinkField::Single(v)) => vec![ShrinkRatio::new(*v)?; partition.n_groups()],
                    None => return Err(Error::invalid("varsigma", "missing")),
                };
                let spec = PenaltySpec::PseudoGroupLasso { partition, shrink };
                spec.validate(doc.p)?;
                spec
            }
            other => return Err(Error::invalid("kind", format!("`{other}` is not a latent model"))),
        };
        if doc.w.len() != doc.m || doc.thresholds.len() != doc.m {
            return Err(Error::DimensionMismatch("W and thresholds must hold M entries".into()));
        }
        Ok(FittedModel {
            spec,
            centering: CenteringStats {
                col_means: doc.col_means,
                y_mean: doc.y_mean,
            },
            weights: doc.w,
            coefficients: doc.beta,
            components: doc.thresholds,
            scores: None,
            fitted: None,
            requested: doc.m,
        })
    }
}

impl ModelDocument {
    pub(crate) fn check_shape(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::invalid(
                "format_version",
                format!("unsupported version {}", self.format_version),
            ));
        }
        if self.col_means.len() != self.p
            || self.beta.len() != self.m
            || self.m == 0
            || self.beta.iter().chain(&self.w).any(|b| b.len() != self.p)
        {
            return Err(Error::DimensionMismatch("model document shapes are inconsistent".into()));
        }
        Ok(())
    }
}

/// Any model that can be written to or read from a model document.
#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Latent(FittedModel),
    Baseline(crate::baselines::BaselineModel),
}

impl SavedModel {
    pub fn to_document(&self) -> ModelDocument {
        match self {
            SavedModel::Latent(m) => m.to_document(),
            SavedModel::Baseline(m) => m.to_document(),
        }
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        match doc.kind.as_str() {
            "ols" | "ridge" | "lasso" => crate::baselines::BaselineModel::from_document(doc).map(SavedModel::Baseline),
            _ => FittedModel::from_document(doc).map(SavedModel::Latent),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?)
    }

    /// Number of coefficient vectors (latent orders, or one for a baseline).
    pub fn n_orders(&self) -> usize {
        match self {
            SavedModel::Latent(m) => m.n_components(),
            SavedModel::Baseline(_) => 1,
        }
    }

    pub fn coefficients(&self, order: usize) -> Result<&[f64]> {
        match self {
            SavedModel::Latent(m) => m.coefficients(order),
            SavedModel::Baseline(m) if order == 1 => Ok(m.coefficients()),
            SavedModel::Baseline(_) => Err(Error::invalid("order", "baseline models have a single order")),
        }
    }

    pub fn predict(&self, x_new: &DataMatrix, order: usize) -> Result<Vec<f64>> {
        match self {
            SavedModel::Latent(m) => m.predict(x_new, order),
            SavedModel::Baseline(m) if order == 1 => m.predict(x_new),
            SavedModel::Baseline(_) => Err(Error::invalid("order", "baseline models have a single order")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mean_center;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_data(seed: u64, n: usize, p: usize) -> (DataMatrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
        let x = DataMatrix::new(n, p, x).unwrap();
        let beta: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let y = x
            .mul_vec(&beta)
            .into_iter()
            .map(|v| v + 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        (x, y)
    }

    fn ratio(v: f64) -> ShrinkRatio {
        ShrinkRatio::new(v).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
    }

    fn calibration_mse(model: &FittedModel, x: &DataMatrix, y: &[f64], order: usize) -> f64 {
        let yhat = model.predict(x, order).unwrap();
        y.iter().zip(&yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64
    }

    fn ols(x: &DataMatrix, y: &[f64]) -> Vec<f64> {
        let (xc, yc, _) = center_xy(x, y).unwrap();
        solve_spd(&xc.gram(), &xc.tmul_vec(&yc)).unwrap()
    }

    #[test]
    fn orthogonal_design_recovers_first_column() {
        let x = DataMatrix::from_rows(&[
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ])
        .unwrap();
        let y = x.column(0);
        let model = fit(&x, &y, &PenaltySpec::Pls, 1).unwrap();
        assert!(max_diff(&model.weights()[0], &[1.0, 0.0]) < 1e-15);
        assert!(calibration_mse(&model, &x, &y, 1) < 1e-28);
    }

    #[test]
    fn lasso_without_shrinkage_is_pls() {
        let (x, y) = random_data(3, 40, 12);
        let pls = fit(&x, &y, &PenaltySpec::Pls, 6).unwrap();
        let lasso = fit(&x, &y, &PenaltySpec::PseudoLasso { shrink: ratio(0.0) }, 6).unwrap();
        for k in 1..=6 {
            assert!(max_diff(pls.coefficients(k).unwrap(), lasso.coefficients(k).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn predict_at_centroid_is_mean() {
        let (x, y) = random_data(5, 20, 6);
        let model = fit(&x, &y, &PenaltySpec::Pls, 3).unwrap();
        let centroid = DataMatrix::new(1, 6, model.centering().col_means.clone()).unwrap();
        let y_mean = y.iter().sum::<f64>() / y.len() as f64;
        for k in 1..=3 {
            assert!((model.predict(&centroid, k).unwrap()[0] - y_mean).abs() < 1e-12);
        }
    }

    #[test]
    fn training_predictions_match_fitted_values() {
        let (x, y) = random_data(6, 30, 10);
        let specs = [
            PenaltySpec::Pls,
            PenaltySpec::PseudoLasso { shrink: ratio(0.7) },
            PenaltySpec::PseudoLs { shrink: ratio(0.5) },
            PenaltySpec::PseudoRidge {
                shrink: ratio(0.6),
                ridge: RidgeParams::new(0.3).unwrap(),
            },
            PenaltySpec::group_lasso(GroupPartition::contiguous(10, 2).unwrap(), ratio(0.5)),
        ];
        for spec in &specs {
            let model = fit(&x, &y, spec, 4).unwrap();
            for k in 1..=model.n_components() {
                let yhat = model.predict(&x, k).unwrap();
                let stored = model.fitted_values(k).unwrap().unwrap();
                assert!(max_diff(&yhat, stored) < 1e-8, "{} order {k}", spec.kind());
            }
        }
    }

    #[test]
    fn exact_one_spike_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 15;
        let mut cols = vec![vec![0.0; n]; 4];
        cols[0] = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for c in cols.iter_mut().skip(1) {
            *c = (0..n).map(|_| 1e-3 * rng.sample::<f64, _>(StandardNormal)).collect();
        }
        let x = DataMatrix::from_columns(&cols).unwrap();
        let (xc, _) = mean_center(&x);
        // y = X β* with β* along the first PLS weight makes one component exact.
        let w = xc.tmul_vec(&xc.column(0));
        let y = x.mul_vec(&w);
        let model = fit(&x, &y, &PenaltySpec::Pls, 1).unwrap();
        let yhat = model.predict(&x, 1).unwrap();
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_diff(&yhat, &y) < 1e-8 * scale.max(1.0));
    }

    #[test]
    fn single_component_coefficients_are_scaled_weight() {
        let (x, y) = random_data(9, 25, 7);
        let model = fit(&x, &y, &PenaltySpec::Pls, 2).unwrap();
        let (_, yc, _) = center_xy(&x, &y).unwrap();
        let t = &model.scores().unwrap()[0];
        let c = dot(t, &yc) / dot(t, t);
        let expected: Vec<f64> = model.weights()[0].iter().map(|w| c * w).collect();
        assert!(max_diff(model.coefficients(1).unwrap(), &expected) < 1e-12);
    }

    #[test]
    fn lasso_first_coefficients_share_weight_support() {
        let (x, y) = random_data(10, 30, 20);
        let model = fit(&x, &y, &PenaltySpec::PseudoLasso { shrink: ratio(0.8) }, 3).unwrap();
        let w = &model.weights()[0];
        let b = model.coefficients(1).unwrap();
        for (wi, bi) in w.iter().zip(b) {
            assert_eq!(*wi == 0.0, *bi == 0.0);
        }
    }

    #[test]
    fn saturated_pls_is_ols() {
        let (x, y) = random_data(11, 12, 5);
        let model = fit(&x, &y, &PenaltySpec::Pls, 5).unwrap();
        assert_eq!(model.n_components(), 5);
        assert!(max_diff(model.coefficients(5).unwrap(), &ols(&x, &y)) < 1e-6);
    }

    #[test]
    fn rank_exhaustion_truncates() {
        let (x, _) = random_data(12, 10, 4);
        let y = x.column(0);
        let model = fit(&x, &y, &PenaltySpec::Pls, 4).unwrap();
        assert!(model.n_components() <= 4);
        let y = vec![1.0; 10];
        assert!(matches!(
            fit(&x, &y, &PenaltySpec::Pls, 2),
            Err(Error::RankExhausted { .. })
        ));
        let model = fit(&x, &x.column(1), &PenaltySpec::Pls, 9).unwrap();
        assert!(model.truncated());
    }

    #[test]
    fn coefficients_match_projection_of_scores() {
        let (x, y) = random_data(13, 40, 15);
        let model = fit(&x, &y, &PenaltySpec::PseudoLasso { shrink: ratio(0.6) }, 5).unwrap();
        let (xc, _, _) = center_xy(&x, &y).unwrap();
        for k in 1..=5 {
            let xb = xc.mul_vec(model.coefficients(k).unwrap());
            let fitted: Vec<f64> = model
                .fitted_values(k)
                .unwrap()
                .unwrap()
                .iter()
                .map(|v| v - model.centering().y_mean)
                .collect();
            assert!(max_diff(&xb, &fitted) < 1e-8);
        }
    }

    #[test]
    fn document_round_trip_is_lossless() {
        let (x, y) = random_data(14, 30, 8);
        let specs = [
            PenaltySpec::Pls,
            PenaltySpec::PseudoLasso { shrink: ratio(0.5) },
            PenaltySpec::group_lasso(GroupPartition::contiguous(8, 2).unwrap(), ratio(0.4)),
            PenaltySpec::PseudoLs { shrink: ratio(0.5) },
            PenaltySpec::PseudoRidge {
                shrink: ratio(0.5),
                ridge: RidgeParams::new(0.3).unwrap(),
            },
        ];
        for spec in specs {
            let model = fit(&x, &y, &spec, 3).unwrap();
            let text = serde_json::to_string(&model.to_document()).unwrap();
            let back = FittedModel::from_document(serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(back.all_coefficients(), model.all_coefficients());
            assert_eq!(back.weights(), model.weights());
            assert_eq!(back.components(), model.components());
            assert_eq!(back.spec(), model.spec());
        }
    }

    #[test]
    fn rejects_mismatched_width() {
        let (x, y) = random_data(15, 10, 3);
        let model = fit(&x, &y, &PenaltySpec::Pls, 1).unwrap();
        let bad = DataMatrix::new(1, 2, vec![0.0, 1.0]).unwrap();
        assert!(matches!(model.predict(&bad, 1), Err(Error::DimensionMismatch(_))));
        assert!(model.predict(&x, 2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn scores_are_orthogonal(seed in 0u64..1000, shrink in 0.0f64..0.9) {
            let (x, y) = random_data(seed, 25, 12);
            for spec in [PenaltySpec::Pls, PenaltySpec::PseudoLasso { shrink: ratio(shrink) }] {
                let model = fit(&x, &y, &spec, 6).unwrap();
                let t = model.scores().unwrap();
                for i in 0..t.len() {
                    for j in 0..i {
                        prop_assert!(dot(&t[i], &t[j]).abs() <= 1e-6 * norm_l2(&t[i]) * norm_l2(&t[j]));
                    }
                }
            }
        }

        #[test]
        fn pls_calibration_error_is_monotone(seed in 0u64..1000) {
            let (x, y) = random_data(seed, 20, 8);
            let model = fit(&x, &y, &PenaltySpec::Pls, 8).unwrap();
            let mut last = f64::INFINITY;
            for k in 1..=model.n_components() {
                let mse = calibration_mse(&model, &x, &y, k);
                prop_assert!(mse <= last + 1e-10);
                last = mse;
            }
        }

        #[test]
        fn coefficient_support_within_weight_union(seed in 0u64..1000, shrink in 0.3f64..0.9) {
            let (x, y) = random_data(seed, 25, 15);
            let model = fit(&x, &y, &PenaltySpec::PseudoLasso { shrink: ratio(shrink) }, 4).unwrap();
            let k = model.n_components();
            let beta = model.coefficients(k).unwrap();
            for p in 0..15 {
                if beta[p] != 0.0 {
                    prop_assert!(model.weights().iter().any(|w| w[p] != 0.0));
                }
            }
        }

        #[test]
        fn fit_is_deterministic(seed in 0u64..1000) {
            let (x, y) = random_data(seed, 20, 10);
            let spec = PenaltySpec::PseudoLasso { shrink: ratio(0.5) };
            prop_assert_eq!(fit(&x, &y, &spec, 4).unwrap(), fit(&x, &y, &spec, 4).unwrap());
        }
    }
}
