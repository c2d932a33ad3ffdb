//! Cross-validated choice of the number of components and of baseline penalties.

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineMethod, BaselineModel};
use crate::engine::{fit, PenaltySpec};
use crate::error::{Error, Result};
use crate::linalg::DataMatrix;
use crate::metrics::mse;
use crate::par;
use crate::sampling::{calibration_size, calvalxy, kennard_stone, rotated_split, SplitPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "splitter", rename_all = "snake_case")]
pub enum Splitter {
    Random,
    Calvalxy { n_groups: usize },
    KennardStone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    pub n_splits: usize,
    pub calibration_fraction: f64,
    pub seed: u64,
    #[serde(flatten)]
    pub splitter: Splitter,
}

impl Default for CvPlan {
    fn default() -> Self {
        Self {
            n_splits: 10,
            calibration_fraction: 0.8,
            seed: 0,
            splitter: Splitter::Random,
        }
    }
}

impl CvPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_splits < 2 {
            return Err(Error::invalid("splits", "at least 2 splits are required"));
        }
        if !(self.calibration_fraction > 0.0 && self.calibration_fraction < 1.0) {
            return Err(Error::invalid("calibration_fraction", "must lie strictly between 0 and 1"));
        }
        Ok(())
    }

    /// The partitions used by every selection routine. Random splits rotate
    /// validation blocks over one seeded permutation; the deterministic
    /// splitters yield a single partition, so they contribute one split
    /// whatever `n_splits` says.
    pub fn splits(&self, x: &DataMatrix, y: &[f64]) -> Result<Vec<SplitPlan>> {
        self.validate()?;
        let n = x.n_rows();
        let n_cal = calibration_size(n, self.calibration_fraction);
        match self.splitter {
            Splitter::Random => (0..self.n_splits as u64)
                .map(|s| rotated_split(n, n_cal, self.seed, s))
                .collect(),
            Splitter::KennardStone => Ok(vec![kennard_stone(x, n_cal)?]),
            Splitter::Calvalxy { n_groups } => Ok(vec![calvalxy(x, y, n_cal, n_groups)?]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub order: usize,
    pub mean_mse: f64,
    pub std_mse: f64,
    /// Splits whose model reached this order.
    pub n_splits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSelection {
    pub best: usize,
    pub table: Vec<CvRow>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Smallest 1-based position attaining the minimum; NaN entries are skipped.
pub fn best_order(means: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &m) in means.iter().enumerate() {
        if m.is_nan() {
            continue;
        }
        if best.map_or(true, |(_, b)| m < b) {
            best = Some((i + 1, m));
        }
    }
    best.map(|b| b.0)
}

fn subsets(x: &DataMatrix, y: &[f64], plan: &SplitPlan) -> (DataMatrix, Vec<f64>, DataMatrix, Vec<f64>) {
    let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<f64>>();
    (
        x.select_rows(&plan.calibration),
        pick(&plan.calibration),
        x.select_rows(&plan.validation),
        pick(&plan.validation),
    )
}

/// Fit once per split at `m_max` and score every nested order on the
/// validation part. A split whose fit stops early contributes only the orders
/// it reached.
pub fn select_components(
    x: &DataMatrix,
    y: &[f64],
    spec: &PenaltySpec,
    m_max: usize,
    plan: &CvPlan,
) -> Result<ComponentSelection> {
    if m_max == 0 {
        return Err(Error::invalid("max_ncomp", "must be at least 1"));
    }
    let splits = plan.splits(x, y)?;
    let per_split: Vec<Result<Vec<f64>>> = par::map(&splits, |split| {
        let (xc, yc, xv, yv) = subsets(x, y, split);
        let model = match fit(&xc, &yc, spec, m_max) {
            Ok(m) => m,
            Err(Error::RankExhausted { .. }) => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        model.predict_all(&xv)?.iter().map(|yhat| mse(&yv, yhat)).collect()
    });
    let per_split: Vec<Vec<f64>> = per_split.into_iter().collect::<Result<_>>()?;
    let table: Vec<CvRow> = (1..=m_max)
        .map(|order| {
            let values: Vec<f64> = per_split.iter().filter_map(|s| s.get(order - 1).copied()).collect();
            let (mean_mse, std_mse) = mean_std(&values);
            CvRow {
                order,
                mean_mse,
                std_mse,
                n_splits: values.len(),
            }
        })
        .collect();
    let means: Vec<f64> = table.iter().map(|r| r.mean_mse).collect();
    let best = best_order(&means).ok_or(Error::RankExhausted { component: 1 })?;
    Ok(ComponentSelection { best, table })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenalizedBaseline {
    Lasso,
    Ridge,
}

impl PenalizedBaseline {
    pub fn with(self, t: f64) -> BaselineMethod {
        match self {
            PenalizedBaseline::Lasso => BaselineMethod::Lasso { t },
            PenalizedBaseline::Ridge => BaselineMethod::Ridge { t },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub value: f64,
    pub mean_mse: f64,
    pub std_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterSelection {
    pub best: f64,
    pub table: Vec<GridRow>,
}

/// Grid value with the lowest mean validation MSE; the smallest value wins ties.
pub fn select_hyperparameter(
    x: &DataMatrix,
    y: &[f64],
    method: PenalizedBaseline,
    grid: &[f64],
    plan: &CvPlan,
) -> Result<HyperparameterSelection> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must not be empty"));
    }
    if grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::invalid("grid", "values must be positive and finite"));
    }
    let splits = plan.splits(x, y)?;
    let per_split: Vec<Result<Vec<f64>>> = par::map(&splits, |split| {
        let (xc, yc, xv, yv) = subsets(x, y, split);
        grid.iter()
            .map(|&t| match BaselineModel::fit(&xc, &yc, method.with(t)) {
                Ok(model) => mse(&yv, &model.predict(&xv)?),
                Err(e) if e.is_numeric() => Ok(f64::NAN),
                Err(e) => Err(e),
            })
            .collect()
    });
    let per_split: Vec<Vec<f64>> = per_split.into_iter().collect::<Result<_>>()?;
    let mut table: Vec<GridRow> = grid
        .iter()
        .enumerate()
        .map(|(g, &value)| {
            let values: Vec<f64> = per_split.iter().map(|s| s[g]).collect();
            let (mean_mse, std_mse) = mean_std(&values);
            GridRow {
                value,
                mean_mse,
                std_mse,
            }
        })
        .collect();
    table.sort_by(|a, b| a.value.total_cmp(&b.value));
    let means: Vec<f64> = table.iter().map(|r| r.mean_mse).collect();
    let best = match best_order(&means) {
        Some(i) => table[i - 1].value,
        None => return Err(Error::invalid("grid", "no grid value could be fitted on every split")),
    };
    Ok(HyperparameterSelection { best, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{center_xy, norm_l2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(seed: u64, n: usize, p: usize) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(n, p, (0..n * p).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
    }

    fn plan(seed: u64) -> CvPlan {
        CvPlan {
            seed,
            ..CvPlan::default()
        }
    }

    #[test]
    fn rank_one_response_selects_one_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scores: Vec<f64> = (0..40).map(|_| rng.sample(StandardNormal)).collect();
        let loading: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
        let rows: Vec<Vec<f64>> = scores.iter().map(|s| loading.iter().map(|l| s * l).collect()).collect();
        let x = DataMatrix::from_rows(&rows).unwrap();
        let sel = select_components(&x, &scores, &PenaltySpec::Pls, 5, &plan(3)).unwrap();
        assert_eq!(sel.best, 1);
        assert_eq!(sel.table.len(), 5);
        assert!(sel.table[0].mean_mse < 1e-20);
    }

    #[test]
    fn ties_pick_the_smallest_order() {
        assert_eq!(best_order(&[3.0, 2.0, 1.0, 2.0, 1.0]), Some(3));
        assert_eq!(best_order(&[f64::NAN, 2.0]), Some(2));
        assert_eq!(best_order(&[f64::NAN]), None);
    }

    #[test]
    fn same_seed_same_selection() {
        let x = random_matrix(2, 30, 6);
        let y: Vec<f64> = x.rows_iter().map(|r| r[0] - r[3]).collect();
        let a = select_components(&x, &y, &PenaltySpec::Pls, 4, &plan(5)).unwrap();
        let b = select_components(&x, &y, &PenaltySpec::Pls, 4, &plan(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_splits_cover_every_observation() {
        let x = random_matrix(3, 25, 2);
        let y = vec![0.0; 25];
        let splits = plan(1).splits(&x, &y).unwrap();
        let mut seen = [false; 25];
        splits.iter().flat_map(|s| &s.validation).for_each(|&i| seen[i] = true);
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn single_value_grid() {
        let x = random_matrix(4, 20, 3);
        let y: Vec<f64> = x.rows_iter().map(|r| r[0]).collect();
        let sel = select_hyperparameter(&x, &y, PenalizedBaseline::Ridge, &[0.7], &plan(1)).unwrap();
        assert_eq!(sel.best, 0.7);
    }

    #[test]
    fn noiseless_ridge_prefers_small_penalty() {
        let x = random_matrix(5, 40, 5);
        let y: Vec<f64> = x.rows_iter().map(|r| r[0] + 2.0 * r[1] - r[4]).collect();
        let sel = select_hyperparameter(&x, &y, PenalizedBaseline::Ridge, &[100.0, 1.0, 1e-8], &plan(2)).unwrap();
        assert_eq!(sel.best, 1e-8);
    }

    #[test]
    fn lasso_zero_model_never_wins() {
        let x = random_matrix(6, 40, 6);
        let y: Vec<f64> = x.rows_iter().map(|r| r[0] + r[1] + r[2]).collect();
        let (xc, yc, _) = center_xy(&x, &y).unwrap();
        let t_max = xc.tmul_vec(&yc).iter().fold(0.0f64, |m, v| m.max(v.abs())) * 2.0;
        let sel = select_hyperparameter(&x, &y, PenalizedBaseline::Lasso, &[0.1, 1.0, t_max], &plan(3)).unwrap();
        assert!(sel.best < t_max);
        assert!(norm_l2(&y) > 0.0);
    }

    #[test]
    fn rejects_bad_plans_and_grids() {
        let x = random_matrix(7, 10, 2);
        let y = vec![1.0; 10];
        let mut p = plan(0);
        p.n_splits = 1;
        assert!(p.splits(&x, &y).is_err());
        assert!(select_hyperparameter(&x, &y, PenalizedBaseline::Ridge, &[], &plan(0)).is_err());
        assert!(select_hyperparameter(&x, &y, PenalizedBaseline::Ridge, &[-1.0], &plan(0)).is_err());
    }
}
