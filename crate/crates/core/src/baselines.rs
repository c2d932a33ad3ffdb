//! Classical comparators: ordinary least squares, ridge and lasso.

use serde::{Deserialize, Serialize};

use crate::engine::{predict_linear, ModelDocument, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::linalg::{axpy, center_xy, dot, norm_l1, solve_spd, CenteringStats, DataMatrix, SymmetricMatrix};

/// `(XᵀX)⁻¹Xᵀy`
pub fn ols_fit(x: &DataMatrix, y: &[f64]) -> Result<Vec<f64>> {
    check_rows(x, y)?;
    solve_spd(&x.gram(), &x.tmul_vec(y))
}

/// `(XᵀX + tI)⁻¹Xᵀy`, computed as `Xᵀ(XXᵀ + tI)⁻¹y` when `P > N`.
pub fn ridge_fit(x: &DataMatrix, y: &[f64], t: f64) -> Result<Vec<f64>> {
    check_rows(x, y)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", format!("ridge penalty must be positive, got {t}")));
    }
    if x.n_cols() <= x.n_rows() {
        solve_spd(&x.gram().add_diagonal(t), &x.tmul_vec(y))
    } else {
        let a = solve_spd(&x.row_gram().add_diagonal(t), y)?;
        Ok(x.tmul_vec(&a))
    }
}

fn check_rows(x: &DataMatrix, y: &[f64]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, y has {} values",
            x.n_rows(),
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    pub max_iter: usize,
    /// Stop once the duality gap falls below `tol·½‖y‖²`, or once no
    /// column's contribution to the fit, `‖x_j‖·|Δβ_j|`, moves by more than
    /// `tol·‖y‖` in a sweep.
    pub tol: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    pub sweeps: usize,
    /// `½‖y − Xβ‖² + t‖β‖₁` after each sweep.
    pub objectives: Vec<f64>,
    /// Duality gap after the last full sweep.
    pub gap: f64,
}

/// Lasso by cyclic coordinate descent on `½‖y − Xβ‖² + t‖β‖₁`.
///
/// Each full sweep is followed by an active-set step that solves exactly on
/// the current support and signs, which settles correlated designs in a few
/// rounds instead of thousands of sweeps.
pub fn lasso_fit(x: &DataMatrix, y: &[f64], t: f64, options: LassoOptions) -> Result<Vec<f64>> {
    lasso_fit_detailed(x, y, t, options).map(|f| f.beta)
}

pub fn lasso_fit_detailed(x: &DataMatrix, y: &[f64], t: f64, options: LassoOptions) -> Result<LassoFit> {
    check_rows(x, y)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", format!("lasso penalty must be nonnegative, got {t}")));
    }
    let p = x.n_cols();
    // Columns as contiguous rows, scaled to unit norm.
    let mut xt = x.transpose();
    let mut scale = vec![0.0; p];
    for j in 0..p {
        let s = dot(xt.row(j), xt.row(j)).sqrt();
        scale[j] = s;
        if s > 0.0 {
            xt.scale_row(j, 1.0 / s);
        }
    }
    let mut gamma = vec![0.0; p];
    let mut residual = y.to_vec();
    let mut objectives = Vec::new();
    let objective = |residual: &[f64], gamma: &[f64]| {
        let penalty: f64 = gamma
            .iter()
            .zip(&scale)
            .filter(|(_, s)| **s > 0.0)
            .map(|(g, s)| (g / s).abs())
            .sum();
        0.5 * dot(residual, residual) + t * penalty
    };

    let sweep = |subset: &mut dyn Iterator<Item = usize>, gamma: &mut [f64], residual: &mut [f64]| {
        let mut largest = 0.0f64;
        for j in subset {
            let s = scale[j];
            if s == 0.0 {
                continue;
            }
            let col = xt.row(j);
            let old = gamma[j];
            let rho = dot(col, residual) + old;
            let new = soft(rho, t / s);
            if new != old {
                axpy(old - new, col, residual);
                gamma[j] = new;
                largest = largest.max((new - old).abs());
            }
        }
        largest
    };

    // Dual point: the residual scaled into `‖Xᵀθ‖∞ ≤ t`.
    let gap = |residual: &[f64], primal: f64| {
        let worst = (0..p)
            .filter(|&j| scale[j] > 0.0)
            .map(|j| dot(xt.row(j), residual).abs() * scale[j])
            .fold(0.0f64, f64::max);
        let s = if worst > t { t / worst } else { 1.0 };
        let dual: f64 = y.iter().zip(residual).map(|(yi, ri)| s * ri * yi - 0.5 * s * s * ri * ri).sum();
        primal - dual
    };

    let yy = dot(y, y);
    let stop = options.tol * yy.sqrt();
    let done = |g: f64| g <= options.tol * 0.5 * yy;
    let mut sweeps = 0;
    let mut last_change = f64::INFINITY;
    while sweeps < options.max_iter {
        let change = sweep(&mut (0..p), &mut gamma, &mut residual);
        sweeps += 1;
        let primal = objective(&residual, &gamma);
        objectives.push(primal);
        last_change = change;
        let g = gap(&residual, primal);
        if change <= stop || done(g) {
            return Ok(LassoFit {
                beta: unscale(&gamma, &scale),
                sweeps,
                objectives,
                gap: g,
            });
        }
        let mut candidate = gamma.clone();
        if refine(&xt, y, &scale, t, &mut candidate) {
            let r = (0..p).filter(|&j| candidate[j] != 0.0).fold(y.to_vec(), |mut acc, j| {
                axpy(-candidate[j], xt.row(j), &mut acc);
                acc
            });
            let value = objective(&r, &candidate);
            if value <= primal {
                gamma = candidate;
                residual = r;
                objectives.push(value);
                let g = gap(&residual, value);
                if done(g) {
                    return Ok(LassoFit {
                        beta: unscale(&gamma, &scale),
                        sweeps,
                        objectives,
                        gap: g,
                    });
                }
            }
        }
        let active: Vec<usize> = (0..p).filter(|&j| gamma[j] != 0.0).collect();
        for _ in 0..ACTIVE_SWEEPS {
            if sweeps >= options.max_iter {
                break;
            }
            let change = sweep(&mut active.iter().copied(), &mut gamma, &mut residual);
            sweeps += 1;
            objectives.push(objective(&residual, &gamma));
            last_change = change;
            if change <= stop {
                break;
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: sweeps,
        last_change,
        iterate: unscale(&gamma, &scale),
    })
}

const ACTIVE_SWEEPS: usize = 50;

/// Active-set step in scaled coordinates: moves the nonzero coordinates of
/// `gamma` toward the minimizer of the objective with their signs frozen,
/// stopping at the first sign change and dropping that coordinate. Returns
/// `false` when the restricted Gram matrix is singular.
fn refine(xt: &DataMatrix, y: &[f64], scale: &[f64], t: f64, gamma: &mut [f64]) -> bool {
    let mut support: Vec<usize> = (0..gamma.len()).filter(|&j| gamma[j] != 0.0).collect();
    while !support.is_empty() && support.len() <= y.len() {
        let rows: Vec<Vec<f64>> = support
            .iter()
            .map(|&a| support.iter().map(|&b| dot(xt.row(a), xt.row(b))).collect())
            .collect();
        let Ok(gram) = SymmetricMatrix::from_rows(&rows) else {
            return false;
        };
        let rhs: Vec<f64> = support
            .iter()
            .map(|&j| dot(xt.row(j), y) - (t / scale[j]) * gamma[j].signum())
            .collect();
        let Ok(target) = solve_spd(&gram, &rhs) else {
            return false;
        };
        let mut step = 1.0f64;
        let mut blocking = None;
        for (k, &j) in support.iter().enumerate() {
            if target[k] * gamma[j] <= 0.0 {
                let reach = gamma[j] / (gamma[j] - target[k]);
                if reach < step {
                    step = reach;
                    blocking = Some(k);
                }
            }
        }
        for (k, &j) in support.iter().enumerate() {
            gamma[j] += step * (target[k] - gamma[j]);
        }
        match blocking {
            None => return true,
            Some(k) => {
                gamma[support[k]] = 0.0;
                support.remove(k);
            }
        }
    }
    !support.is_empty()
}

fn soft(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

fn unscale(gamma: &[f64], scale: &[f64]) -> Vec<f64> {
    gamma
        .iter()
        .zip(scale)
        .map(|(g, s)| if *s > 0.0 { g / s } else { 0.0 })
        .collect()
}

/// `½‖y − Xβ‖² + t‖β‖₁`
pub fn lasso_objective(x: &DataMatrix, y: &[f64], beta: &[f64], t: f64) -> f64 {
    let r: Vec<f64> = y.iter().zip(x.mul_vec(beta)).map(|(a, b)| a - b).collect();
    0.5 * dot(&r, &r) + t * norm_l1(beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum BaselineMethod {
    Ols,
    Ridge { t: f64 },
    Lasso { t: f64 },
}

impl BaselineMethod {
    pub fn kind(&self) -> &'static str {
        match self {
            BaselineMethod::Ols => "ols",
            BaselineMethod::Ridge { .. } => "ridge",
            BaselineMethod::Lasso { .. } => "lasso",
        }
    }

    pub fn penalty(&self) -> Option<f64> {
        match self {
            BaselineMethod::Ols => None,
            BaselineMethod::Ridge { t } | BaselineMethod::Lasso { t } => Some(*t),
        }
    }
}

/// A baseline fitted on centered data, predicting with an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    method: BaselineMethod,
    centering: CenteringStats,
    beta: Vec<f64>,
}

impl BaselineModel {
    pub fn fit(x: &DataMatrix, y: &[f64], method: BaselineMethod) -> Result<Self> {
        let (xc, yc, centering) = center_xy(x, y)?;
        let beta = match method {
            BaselineMethod::Ols => ols_fit(&xc, &yc)?,
            BaselineMethod::Ridge { t } => ridge_fit(&xc, &yc, t)?,
            BaselineMethod::Lasso { t } => lasso_fit(&xc, &yc, t, LassoOptions::default())?,
        };
        Ok(Self {
            method,
            centering,
            beta,
        })
    }

    pub fn method(&self) -> BaselineMethod {
        self.method
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.beta
    }

    pub fn centering(&self) -> &CenteringStats {
        &self.centering
    }

    pub fn predict(&self, x_new: &DataMatrix) -> Result<Vec<f64>> {
        predict_linear(&self.centering, &self.beta, x_new)
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            format_version: FORMAT_VERSION,
            kind: self.method.kind().to_string(),
            m: 1,
            p: self.beta.len(),
            col_means: self.centering.col_means.clone(),
            y_mean: self.centering.y_mean,
            varsigma: None,
            nu2: None,
            groups: None,
            t: self.method.penalty(),
            w: Vec::new(),
            beta: vec![self.beta.clone()],
            thresholds: Vec::new(),
        }
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        doc.check_shape()?;
        let t = || doc.t.ok_or_else(|| Error::invalid("t", "missing"));
        let method = match doc.kind.as_str() {
            "ols" => BaselineMethod::Ols,
            "ridge" => BaselineMethod::Ridge { t: t()? },
            "lasso" => BaselineMethod::Lasso { t: t()? },
            other => return Err(Error::invalid("kind", format!("`{other}` is not a baseline"))),
        };
        if doc.m != 1 {
            return Err(Error::DimensionMismatch("baseline models hold one coefficient vector".into()));
        }
        Ok(Self {
            method,
            centering: CenteringStats {
                col_means: doc.col_means,
                y_mean: doc.y_mean,
            },
            beta: doc.beta.into_iter().next().unwrap_or_default(),
        })
    }
}
