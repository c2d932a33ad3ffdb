//! Per-component weight solvers for the dual-norm penalties.
//!
//! Each solver takes the covariance vector `z = X_mᵀy` of the current
//! deflation stage and returns the maximizer `w` of `zᵀw` subject to
//! `Ω(w) = 1` for its norm `Ω`, restricted to the orthant of `z`. Sparsity is
//! steered by a shrink ratio: the fraction of coordinates the threshold is
//! chosen to zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_l1, norm_l2, Cholesky, DataMatrix};
use crate::par;

/// Target fraction of coordinates zeroed per component, in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ShrinkRatio(f64);

impl ShrinkRatio {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&value) {
            return Err(Error::invalid(
                "shrink",
                format!("shrink ratio must lie in [0, 1), got {value}"),
            ));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Number of order statistics at or below the threshold: `⌈ς·P⌉`.
    pub fn zeroed_count(self, len: usize) -> usize {
        // guard against 0.8 * 5 = 4.000000000000001 style round-off
        let k = (self.0 * len as f64 - 1e-9).ceil();
        (k.max(0.0) as usize).min(len)
    }
}

impl TryFrom<f64> for ShrinkRatio {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ShrinkRatio> for f64 {
    fn from(s: ShrinkRatio) -> f64 {
        s.0
    }
}

/// Threshold `ν`, Lagrange normalizer `μ` and penalty weight `λ = ν/μ` of one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdLog {
    pub nu: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl ThresholdLog {
    pub(crate) fn new(nu: f64, mu: f64) -> Self {
        Self {
            nu,
            mu,
            lambda: nu / mu,
        }
    }
}

/// Assignment of every variable to one of `G` groups (ids `1..=G`).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    group_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl GroupPartition {
    pub fn new(group_of: Vec<usize>) -> Result<Self> {
        let n_groups = group_of.iter().copied().max().unwrap_or(0);
        if n_groups == 0 || group_of.contains(&0) {
            return Err(Error::invalid("groups", "group ids must start at 1"));
        }
        let mut members = vec![Vec::new(); n_groups];
        for (p, &g) in group_of.iter().enumerate() {
            members[g - 1].push(p);
        }
        if let Some(g) = members.iter().position(Vec::is_empty) {
            return Err(Error::invalid(
                "groups",
                format!("group {} is empty; ids must be contiguous", g + 1),
            ));
        }
        Ok(Self { group_of, members })
    }

    /// `n_groups` contiguous bands of near-equal width over `n_vars` variables.
    pub fn contiguous(n_vars: usize, n_groups: usize) -> Result<Self> {
        if n_groups == 0 || n_groups > n_vars {
            return Err(Error::invalid(
                "groups",
                format!("cannot split {n_vars} variables into {n_groups} bands"),
            ));
        }
        let group_of = (0..n_vars).map(|p| p * n_groups / n_vars + 1).collect();
        Self::new(group_of)
    }

    pub fn n_groups(&self) -> usize {
        self.members.len()
    }

    pub fn n_vars(&self) -> usize {
        self.group_of.len()
    }

    pub fn group_ids(&self) -> &[usize] {
        &self.group_of
    }

    /// Zero-based variable indices of group `g` (zero-based).
    pub fn members(&self, g: usize) -> &[usize] {
        &self.members[g]
    }
}

/// Ridge perturbation weight `ν₂ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeParams {
    pub nu2: f64,
}

impl RidgeParams {
    pub fn new(nu2: f64) -> Result<Self> {
        if !(nu2.is_finite() && nu2 >= 0.0) {
            return Err(Error::invalid("nu2", format!("must be finite and >= 0, got {nu2}")));
        }
        Ok(Self { nu2 })
    }

    /// `ν₂ = 1/t` for a ridge baseline with penalty `t`.
    pub fn from_ridge_penalty(t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::invalid("t", "ridge penalty must be positive"));
        }
        Self::new(1.0 / t)
    }
}

/// Threshold at the empirical `ς`-quantile of the magnitudes: the `⌈ς·P⌉`-th
/// smallest entry of `z_abs`, or zero when `⌈ς·P⌉ = 0`.
pub fn adaptive_threshold(z_abs: &[f64], shrink: ShrinkRatio) -> Result<f64> {
    if z_abs.is_empty() {
        return Err(Error::invalid("z", "empty covariance vector"));
    }
    if z_abs.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("z", "magnitudes must be finite and nonnegative"));
    }
    if z_abs.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateThreshold(
            "covariance vector is identically zero".into(),
        ));
    }
    let k = shrink.zeroed_count(z_abs.len());
    if k == 0 {
        return Ok(0.0);
    }
    let mut sorted = z_abs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[k - 1])
}

/// `sign(z)·(|z| − ν)₊`, coordinate-wise.
pub fn soft_threshold(z: &[f64], nu: f64) -> Vec<f64> {
    z.iter()
        .map(|&v| {
            let m = v.abs() - nu;
            if m > 0.0 {
                m.copysign(v)
            } else {
                0.0
            }
        })
        .collect()
}

fn abs_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.abs()).collect()
}

fn thresholded(v: &[f64], shrink: ShrinkRatio, what: &str) -> Result<(f64, Vec<f64>)> {
    let nu = adaptive_threshold(&abs_vec(v), shrink)?;
    let z_nu = soft_threshold(v, nu);
    if z_nu.iter().all(|x| *x == 0.0) {
        return Err(Error::DegenerateThreshold(format!(
            "threshold {nu:e} on {what} leaves no surviving coordinate (shrink {})",
            shrink.value()
        )));
    }
    Ok((nu, z_nu))
}

/// Norm `Ω` under which a weight vector is unit, for evaluation and
/// optimality checks.
#[derive(Debug, Clone)]
pub enum PenaltyNorm<'a> {
    /// `‖w‖₂`.
    L2,
    /// `λ‖w‖₁ + ‖w‖₂`.
    PseudoLasso { lambda: f64 },
    /// `Σ_g α_g (‖w_g‖₂ + λ_g‖w_g‖₁)`.
    PseudoGroupLasso {
        partition: &'a GroupPartition,
        alphas: Vec<f64>,
        lambdas: Vec<f64>,
    },
    /// `λ₁‖w‖₁ + λ₂‖Xw‖₂ + ‖w‖₂`.
    PseudoRidge {
        x: &'a DataMatrix,
        lambda1: f64,
        lambda2: f64,
    },
}

impl PenaltyNorm<'_> {
    pub fn evaluate(&self, w: &[f64]) -> f64 {
        match self {
            PenaltyNorm::L2 => norm_l2(w),
            PenaltyNorm::PseudoLasso { lambda } => lambda * norm_l1(w) + norm_l2(w),
            PenaltyNorm::PseudoGroupLasso {
                partition,
                alphas,
                lambdas,
            } => group_norm(w, partition, alphas, lambdas),
            PenaltyNorm::PseudoRidge {
                x,
                lambda1,
                lambda2,
            } => {
                let xw = if *lambda2 != 0.0 {
                    norm_l2(&x.mul_vec(w))
                } else {
                    0.0
                };
                lambda1 * norm_l1(w) + lambda2 * xw + norm_l2(w)
            }
        }
    }
}

fn group_norm(w: &[f64], partition: &GroupPartition, alphas: &[f64], lambdas: &[f64]) -> f64 {
    (0..partition.n_groups())
        .map(|g| {
            let (mut l1, mut l2) = (0.0, 0.0);
            for &p in partition.members(g) {
                l1 += w[p].abs();
                l2 += w[p] * w[p];
            }
            alphas[g] * (l2.sqrt() + lambdas[g] * l1)
        })
        .sum()
}

/// Weight vector of one component together with its threshold bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoWeight {
    pub w: Vec<f64>,
    pub log: ThresholdLog,
}

impl LassoWeight {
    pub fn norm(&self) -> PenaltyNorm<'static> {
        PenaltyNorm::PseudoLasso {
            lambda: self.log.lambda,
        }
    }
}

/// Pseudo-lasso weight: `w = μ·z_ν / (ν‖z_ν‖₁ + ‖z_ν‖₂²)` with `z_ν` the
/// soft-thresholded covariance and `μ = ‖z_ν‖₂`.
pub fn lasso_weight(z: &[f64], shrink: ShrinkRatio) -> Result<LassoWeight> {
    let (nu, z_nu) = thresholded(z, shrink, "|z|")?;
    let mu = norm_l2(&z_nu);
    let scale = mu / (nu * norm_l1(&z_nu) + mu * mu);
    Ok(LassoWeight {
        w: z_nu.iter().map(|v| v * scale).collect(),
        log: ThresholdLog::new(nu, mu),
    })
}

/// Read-only view of the current deflation stage, used to score candidate
/// weights in the group grid search.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationContext<'a> {
    pub x: &'a DataMatrix,
    pub y: &'a [f64],
}

/// Grid values tried per group, spread evenly over `[0, ‖w_g‖₂^max]`.
pub const GROUP_GRID_SIZE: usize = 10;
const MAX_GROUP_COMBINATIONS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupWeight {
    pub w: Vec<f64>,
    /// Per group: `ν_g`, `α_g μ = ‖z_νg‖₂` and `λ_g`. Inactive groups log zeros.
    pub group_logs: Vec<ThresholdLog>,
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `μ = Σ_g ‖z_νg‖₂`.
    pub mu: f64,
    /// Selected `‖w_g‖₂` before the final rescaling.
    pub magnitudes: Vec<f64>,
    /// Calibration MSE of the one-component fit at the selected grid point.
    pub grid_mse: f64,
}

impl GroupWeight {
    pub fn norm<'a>(&self, partition: &'a GroupPartition) -> PenaltyNorm<'a> {
        PenaltyNorm::PseudoGroupLasso {
            partition,
            alphas: self.alphas.clone(),
            lambdas: self.lambdas.clone(),
        }
    }

    /// Component-level summary: `μ` total and `ν = Σ α_g ν_g`.
    pub fn summary_log(&self) -> ThresholdLog {
        let nu = self
            .alphas
            .iter()
            .zip(&self.group_logs)
            .map(|(a, l)| a * l.nu)
            .sum();
        ThresholdLog::new(nu, self.mu)
    }
}

/// Pseudo-group-lasso weight. Each group is thresholded with its own ratio;
/// the relative group magnitudes are chosen by exhaustive grid search on the
/// calibration MSE of the resulting one-component regression, then `w` is
/// rescaled to unit group norm.
pub fn group_lasso_weight(
    z: &[f64],
    partition: &GroupPartition,
    shrink: &[ShrinkRatio],
    context: CalibrationContext<'_>,
) -> Result<GroupWeight> {
    let n_groups = partition.n_groups();
    if partition.n_vars() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} variables, z has {}",
            partition.n_vars(),
            z.len()
        )));
    }
    if shrink.len() != n_groups {
        return Err(Error::DimensionMismatch(format!(
            "{} shrink ratios for {n_groups} groups",
            shrink.len()
        )));
    }
    if context.x.n_cols() != z.len() || context.x.n_rows() != context.y.len() {
        return Err(Error::DimensionMismatch("calibration context does not match z".into()));
    }

    // Per-group thresholding. A group whose covariance vanishes stays at zero.
    let mut z_nu = vec![0.0; z.len()];
    let mut group_l2 = vec![0.0; n_groups];
    let mut group_l1 = vec![0.0; n_groups];
    let mut nus = vec![0.0; n_groups];
    for g in 0..n_groups {
        let members = partition.members(g);
        let zg: Vec<f64> = members.iter().map(|&p| z[p]).collect();
        if zg.iter().all(|v| *v == 0.0) {
            continue;
        }
        let nu = adaptive_threshold(&abs_vec(&zg), shrink[g])?;
        let zg_nu = soft_threshold(&zg, nu);
        nus[g] = nu;
        group_l2[g] = norm_l2(&zg_nu);
        group_l1[g] = norm_l1(&zg_nu);
        for (&p, v) in members.iter().zip(zg_nu) {
            z_nu[p] = v;
        }
    }
    let active: Vec<usize> = (0..n_groups).filter(|&g| group_l2[g] > 0.0).collect();
    if active.is_empty() {
        return Err(Error::DegenerateThreshold(
            "every group is zeroed by its threshold".into(),
        ));
    }

    let mu: f64 = group_l2.iter().sum();
    let alphas: Vec<f64> = group_l2.iter().map(|l| l / mu).collect();
    let lambdas: Vec<f64> = (0..n_groups)
        .map(|g| if group_l2[g] > 0.0 { nus[g] / group_l2[g] } else { 0.0 })
        .collect();
    let group_logs: Vec<ThresholdLog> = (0..n_groups)
        .map(|g| {
            if group_l2[g] > 0.0 {
                ThresholdLog {
                    nu: nus[g],
                    mu: group_l2[g],
                    lambda: lambdas[g],
                }
            } else {
                ThresholdLog {
                    nu: 0.0,
                    mu: 0.0,
                    lambda: 0.0,
                }
            }
        })
        .collect();

    // Ω_g(z_νg) = α_g (‖z_νg‖₂ + λ_g ‖z_νg‖₁); upper grid bound μ / Ω_g(z_νg).
    let max_norm: Vec<f64> = active
        .iter()
        .map(|&g| mu / (alphas[g] * (group_l2[g] + lambdas[g] * group_l1[g])))
        .collect();

    // Unit directions per active group and their score contributions s_g = X_g u_g.
    let scores: Vec<Vec<f64>> = active
        .iter()
        .map(|&g| {
            let mut u = vec![0.0; z.len()];
            for &p in partition.members(g) {
                u[p] = z_nu[p] / group_l2[g];
            }
            context.x.mul_vec(&u)
        })
        .collect();
    let a = active.len();
    let mut s_gram = vec![0.0; a * a];
    for i in 0..a {
        for j in 0..a {
            s_gram[i * a + j] = dot(&scores[i], &scores[j]);
        }
    }
    let s_y: Vec<f64> = scores.iter().map(|s| dot(s, context.y)).collect();
    let yy = dot(context.y, context.y);
    let n = context.y.len() as f64;

    let combos = GROUP_GRID_SIZE
        .checked_pow(a as u32)
        .filter(|c| *c <= MAX_GROUP_COMBINATIONS)
        .ok_or_else(|| {
            Error::invalid(
                "groups",
                format!("{a} active groups exceed the exhaustive grid budget"),
            )
        })?;
    let step: Vec<f64> = max_norm
        .iter()
        .map(|m| m / (GROUP_GRID_SIZE - 1) as f64)
        .collect();

    let evaluate = |index: usize| -> Option<f64> {
        let r = grid_point(index, a, &step);
        let mut tt = 0.0;
        let mut ty = 0.0;
        for i in 0..a {
            ty += r[i] * s_y[i];
            for j in 0..a {
                tt += r[i] * r[j] * s_gram[i * a + j];
            }
        }
        if !(tt > 0.0) {
            return None;
        }
        Some((yy - ty * ty / tt).max(0.0) / n)
    };

    // Lexicographic order over (k_1, ..., k_a) with k_1 most significant;
    // a later candidate wins only on a strict improvement beyond round-off.
    let mut best: Option<(usize, f64)> = None;
    for index in 0..combos {
        if let Some(mse) = evaluate(index) {
            let better = match best {
                None => true,
                Some((_, b)) => mse < b - 1e-12 * b.abs().max(f64::MIN_POSITIVE),
            };
            if better {
                best = Some((index, mse));
            }
        }
    }
    let (best_index, grid_mse) = best.ok_or(Error::EmptyGrid)?;
    let chosen = grid_point(best_index, a, &step);

    let mut w = vec![0.0; z.len()];
    let mut magnitudes = vec![0.0; n_groups];
    for (slot, &g) in active.iter().enumerate() {
        magnitudes[g] = chosen[slot];
        for &p in partition.members(g) {
            w[p] = chosen[slot] * z_nu[p] / group_l2[g];
        }
    }
    let omega = group_norm(&w, partition, &alphas, &lambdas);
    w.iter_mut().for_each(|v| *v /= omega);

    Ok(GroupWeight {
        w,
        group_logs,
        alphas,
        lambdas,
        mu,
        magnitudes,
        grid_mse,
    })
}

/// Decode a flat grid index into per-group magnitudes (first group most significant).
fn grid_point(mut index: usize, groups: usize, step: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; groups];
    for slot in (0..groups).rev() {
        r[slot] = (index % GROUP_GRID_SIZE) as f64 * step[slot];
        index /= GROUP_GRID_SIZE;
    }
    r
}

/// Pseudo-least-squares solver bound to a design whose Gram matrix is invertible.
#[derive(Debug, Clone)]
pub struct LsWeightSolver {
    gram: Cholesky,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsWeight {
    /// Unit `ℓ2` weight.
    pub w: Vec<f64>,
    pub log: ThresholdLog,
    /// `(XᵀX)⁻¹ z`
    pub beta_ls: Vec<f64>,
}

impl LsWeightSolver {
    pub fn new(x: &DataMatrix) -> Result<Self> {
        Ok(Self {
            gram: Cholesky::factor(&x.gram())?,
        })
    }

    /// Threshold the least-squares coefficients `(XᵀX)⁻¹z` instead of `z`,
    /// then normalize to unit `ℓ2` norm.
    pub fn weight(&self, z: &[f64], shrink: ShrinkRatio) -> Result<LsWeight> {
        let beta_ls = self.gram.solve(z);
        let (nu, z_nu) = thresholded(&beta_ls, shrink, "|(XᵀX)⁻¹z|")?;
        let mu = norm_l2(&z_nu);
        Ok(LsWeight {
            w: z_nu.iter().map(|v| v / mu).collect(),
            log: ThresholdLog::new(nu, mu),
            beta_ls,
        })
    }
}

pub fn ls_weight(x: &DataMatrix, z: &[f64], shrink: ShrinkRatio) -> Result<LsWeight> {
    LsWeightSolver::new(x)?.weight(z, shrink)
}

/// Applies `(ν₂XᵀX + I)⁻¹`. When `P > N` the push-through identity
/// `(ν₂XᵀX + I)⁻¹ = I − ν₂Xᵀ(I + ν₂XXᵀ)⁻¹X` keeps the factorization N×N.
#[derive(Debug, Clone)]
enum RidgeOperator {
    Identity,
    Primal(Cholesky),
    Dual(Cholesky),
}

#[derive(Debug, Clone)]
pub struct RidgeWeightSolver<'a> {
    x: &'a DataMatrix,
    params: RidgeParams,
    operator: RidgeOperator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeWeight {
    pub w: Vec<f64>,
    /// `ν = ν₁`, `μ = ‖z_ν‖₂`, `λ = λ₁ = ν₁/μ`.
    pub log: ThresholdLog,
    /// `λ₂ = ν₂‖Xw‖₂/‖w‖₂`.
    pub lambda2: f64,
    /// `(ν₂XᵀX + I)⁻¹ z`
    pub z_ridge: Vec<f64>,
}

impl RidgeWeight {
    pub fn norm<'a>(&self, x: &'a DataMatrix) -> PenaltyNorm<'a> {
        PenaltyNorm::PseudoRidge {
            x,
            lambda1: self.log.lambda,
            lambda2: self.lambda2,
        }
    }
}

impl<'a> RidgeWeightSolver<'a> {
    pub fn new(x: &'a DataMatrix, params: RidgeParams) -> Result<Self> {
        let nu2 = params.nu2;
        let operator = if nu2 == 0.0 {
            RidgeOperator::Identity
        } else if x.n_cols() <= x.n_rows() {
            RidgeOperator::Primal(Cholesky::factor(&x.gram().scaled(nu2).add_diagonal(1.0))?)
        } else {
            RidgeOperator::Dual(Cholesky::factor(
                &x.row_gram().scaled(nu2).add_diagonal(1.0),
            )?)
        };
        Ok(Self { x, params, operator })
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        match &self.operator {
            RidgeOperator::Identity => z.to_vec(),
            RidgeOperator::Primal(chol) => chol.solve(z),
            RidgeOperator::Dual(chol) => {
                let inner = chol.solve(&self.x.mul_vec(z));
                let back = self.x.tmul_vec(&inner);
                z.iter()
                    .zip(back)
                    .map(|(a, b)| a - self.params.nu2 * b)
                    .collect()
            }
        }
    }

    /// `w = μ·z_ν / (ν₁‖z_ν‖₁ + ν₂‖Xz_ν‖₂² + μ²)` where `z_ν` thresholds
    /// `(ν₂XᵀX + I)⁻¹z`.
    pub fn weight(&self, z: &[f64], shrink: ShrinkRatio) -> Result<RidgeWeight> {
        let nu2 = self.params.nu2;
        let z_ridge = self.apply(z);
        let (nu1, z_nu) = thresholded(&z_ridge, shrink, "|(ν₂XᵀX + I)⁻¹z|")?;
        let mu = norm_l2(&z_nu);
        let xz_sq = if nu2 != 0.0 {
            let xz = self.x.mul_vec(&z_nu);
            dot(&xz, &xz)
        } else {
            0.0
        };
        let scale = mu / (nu1 * norm_l1(&z_nu) + nu2 * xz_sq + mu * mu);
        Ok(RidgeWeight {
            w: z_nu.iter().map(|v| v * scale).collect(),
            log: ThresholdLog::new(nu1, mu),
            lambda2: nu2 * xz_sq.sqrt() / mu,
            z_ridge,
        })
    }
}

pub fn ridge_weight(
    x: &DataMatrix,
    z: &[f64],
    shrink: ShrinkRatio,
    params: RidgeParams,
) -> Result<RidgeWeight> {
    RidgeWeightSolver::new(x, params)?.weight(z, shrink)
}

/// Outcome of a Monte-Carlo search for a better feasible point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualGapReport {
    /// `max_u zᵀu − zᵀw` over sampled `u` with `Ω(u) = 1`.
    pub gap: f64,
    pub objective: f64,
    pub best_sampled: f64,
    pub trials: usize,
}

impl DualGapReport {
    pub fn certifies(&self, tolerance: f64) -> bool {
        self.gap <= tolerance
    }
}

const TRIALS_PER_CHUNK: usize = 1024;

/// Sample `u` in the orthant of `z`, rescale to `Ω(u) = 1` and report how much
/// `zᵀu` can exceed `zᵀw`. A nonpositive gap certifies `w` as the dual-norm
/// maximizer at sampling resolution.
pub fn check_dual_optimality(
    z: &[f64],
    w: &[f64],
    norm: &PenaltyNorm<'_>,
    trials: usize,
    seed: u64,
) -> Result<DualGapReport> {
    if z.len() != w.len() {
        return Err(Error::DimensionMismatch("z and w differ in length".into()));
    }
    let omega_w = norm.evaluate(w);
    if (omega_w - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(
            "w",
            format!("candidate must satisfy Ω(w) = 1, got {omega_w}"),
        ));
    }
    let objective = dot(z, w);
    let signs: Vec<f64> = z.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
    let w_scale = norm_l2(w).max(f64::MIN_POSITIVE);
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);

    let per_chunk = par::map_range(chunks, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let count = TRIALS_PER_CHUNK.min(trials - chunk * TRIALS_PER_CHUNK);
        let mut best = f64::NEG_INFINITY;
        let mut u = vec![0.0; z.len()];
        for trial in 0..count {
            match trial % 3 {
                // dense draw
                0 => {
                    for (ui, s) in u.iter_mut().zip(&signs) {
                        *ui = s * rng.sample::<f64, _>(StandardNormal).abs();
                    }
                }
                // random face of the orthant
                1 => {
                    for (ui, s) in u.iter_mut().zip(&signs) {
                        let keep = rng.random_bool(0.6);
                        let mag: f64 = rng.sample::<f64, _>(StandardNormal).abs();
                        *ui = if keep { s * mag } else { 0.0 };
                    }
                }
                // local perturbation of the candidate, clamped to the orthant
                _ => {
                    let eps = 10f64.powi(-(1 + (trial / 3) as i32 % 4)) * w_scale;
                    for ((ui, s), wi) in u.iter_mut().zip(&signs).zip(w) {
                        let v = wi + eps * rng.sample::<f64, _>(StandardNormal);
                        *ui = if v * s > 0.0 { v } else { 0.0 };
                    }
                }
            }
            let omega = norm.evaluate(&u);
            if omega > 0.0 {
                best = best.max(dot(z, &u) / omega);
            }
        }
        best
    });
    let best_sampled = per_chunk.into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(DualGapReport {
        gap: best_sampled - objective,
        objective,
        best_sampled,
        trials,
    })
}
