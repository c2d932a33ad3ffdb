//! Metric tables and support-recovery scores.

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineModel;
use crate::datasets::{expand_ranges, IndexRange};
use crate::engine::FittedModel;
use crate::error::Result;
use crate::linalg::DataMatrix;
use crate::metrics::{l0, mae, r_squared, rmse};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub precision: f64,
    pub recall: f64,
    /// Number of selected coefficients.
    pub selected: usize,
    /// Selected coefficients inside the active set.
    pub hits: usize,
    /// True when nothing was selected, so precision is 1 by convention.
    pub degenerate: bool,
}

/// Support tolerance for a method: exact zeros for sparse solvers,
/// `1e-8·max|β|` for dense ones.
pub fn support_tolerance(beta: &[f64], dense: bool) -> f64 {
    if dense {
        1e-8 * beta.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        0.0
    }
}

pub fn recovery_score(beta: &[f64], active: &[IndexRange], tol: f64) -> Recovery {
    let truth = expand_ranges(active);
    let mut in_truth = vec![false; beta.len()];
    truth.iter().filter(|&&j| j < beta.len()).for_each(|&j| in_truth[j] = true);
    let selected = l0(beta, tol);
    let hits = beta
        .iter()
        .zip(&in_truth)
        .filter(|(b, t)| **t && b.abs() > tol)
        .count();
    Recovery {
        precision: if selected == 0 { 1.0 } else { hits as f64 / selected as f64 },
        recall: if truth.is_empty() { 1.0 } else { hits as f64 / truth.len() as f64 },
        selected,
        hits,
        degenerate: selected == 0,
    }
}

/// Anything that predicts at one or more model orders.
pub trait Predictor: Sync {
    fn label(&self) -> &str;
    /// `None` for order-free models, which are reported at every order.
    fn n_orders(&self) -> Option<usize>;
    fn predict(&self, x: &DataMatrix, order: usize) -> Result<Vec<f64>>;
}

pub struct Labelled<'a, M> {
    pub label: String,
    pub model: &'a M,
}

impl Predictor for Labelled<'_, FittedModel> {
    fn label(&self) -> &str {
        &self.label
    }

    fn n_orders(&self) -> Option<usize> {
        Some(self.model.n_components())
    }

    fn predict(&self, x: &DataMatrix, order: usize) -> Result<Vec<f64>> {
        self.model.predict(x, order)
    }
}

impl Predictor for Labelled<'_, BaselineModel> {
    fn label(&self) -> &str {
        &self.label
    }

    fn n_orders(&self) -> Option<usize> {
        None
    }

    fn predict(&self, x: &DataMatrix, _order: usize) -> Result<Vec<f64>> {
        self.model.predict(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Calibration,
    Validation,
}

impl SetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SetKind::Calibration => "calibration",
            SetKind::Validation => "validation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: String,
    pub order: usize,
    pub set: SetKind,
    pub rmse: f64,
    pub mae: f64,
    /// NaN when the response of the set is constant.
    pub r2: f64,
}

/// Calibration and validation metrics for orders `1..=m_max`. Latent models
/// stop at the order they reached; order-free models repeat their metrics.
pub fn metric_table(
    models: &[&dyn Predictor],
    cal: (&DataMatrix, &[f64]),
    val: (&DataMatrix, &[f64]),
    m_max: usize,
) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    for model in models {
        let orders = model.n_orders().map_or(m_max, |n| n.min(m_max));
        let mut cache: Option<[(f64, f64, f64); 2]> = None;
        for order in 1..=orders {
            let scores = match (model.n_orders(), cache) {
                (None, Some(c)) => c,
                _ => {
                    let mut out = [(0.0, 0.0, 0.0); 2];
                    for (slot, (x, y)) in out.iter_mut().zip([cal, val]) {
                        let yhat = model.predict(x, order)?;
                        *slot = (rmse(y, &yhat)?, mae(y, &yhat)?, r_squared(y, &yhat).unwrap_or(f64::NAN));
                    }
                    cache = Some(out);
                    out
                }
            };
            for (set, (rmse, mae, r2)) in [SetKind::Calibration, SetKind::Validation].into_iter().zip(scores) {
                rows.push(MetricRow {
                    method: model.label().to_string(),
                    order,
                    set,
                    rmse,
                    mae,
                    r2,
                });
            }
        }
    }
    Ok(rows)
}
