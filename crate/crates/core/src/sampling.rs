//! Calibration/validation partitions.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SplitMethod {
    Random { seed: u64, stream: u64 },
    KennardStone,
    Calvalxy { n_groups: usize },
}

impl fmt::Display for SplitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitMethod::Random { .. } => f.write_str("random"),
            SplitMethod::KennardStone => f.write_str("kennard_stone"),
            SplitMethod::Calvalxy { .. } => f.write_str("calvalxy"),
        }
    }
}

/// Disjoint zero-based index sets covering `0..n`. Calibration indices are
/// listed in selection order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub calibration: Vec<usize>,
    pub validation: Vec<usize>,
    pub method: SplitMethod,
}

impl SplitPlan {
    fn from_selection(n: usize, calibration: Vec<usize>, method: SplitMethod) -> Self {
        let mut picked = vec![false; n];
        calibration.iter().for_each(|&i| picked[i] = true);
        let validation = (0..n).filter(|&i| !picked[i]).collect();
        Self {
            calibration,
            validation,
            method,
        }
    }

    pub fn n_obs(&self) -> usize {
        self.calibration.len() + self.validation.len()
    }

    /// CSV rows `(index, role)` with 1-based indices in ascending order.
    pub fn to_csv(&self) -> String {
        let mut role = vec![""; self.n_obs()];
        self.calibration.iter().for_each(|&i| role[i] = "cal");
        self.validation.iter().for_each(|&i| role[i] = "val");
        let mut out = String::from("index,role\n");
        for (i, r) in role.iter().enumerate() {
            out.push_str(&format!("{},{r}\n", i + 1));
        }
        out
    }
}

fn check_size(n: usize, n_cal: usize) -> Result<()> {
    if n_cal == 0 || n_cal >= n {
        return Err(Error::invalid(
            "n_cal",
            format!("calibration size must be in 1..{n}, got {n_cal}"),
        ));
    }
    Ok(())
}

/// Calibration size for a fraction, kept inside `1..n`.
pub fn calibration_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1))
}

/// Uniformly random calibration set; `stream` separates repeated draws under one seed.
pub fn random_split(n: usize, n_cal: usize, seed: u64, stream: u64) -> Result<SplitPlan> {
    check_size(n, n_cal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let mut cal = idx[..n_cal].to_vec();
    cal.sort_unstable();
    Ok(SplitPlan::from_selection(n, cal, SplitMethod::Random { seed, stream }))
}

/// Split `stream` of a rotation over one seeded permutation: its validation set
/// is the `stream`-th consecutive block of `n − n_cal` permuted indices
/// (wrapping), so enough splits validate every observation at least once.
pub fn rotated_split(n: usize, n_cal: usize, seed: u64, stream: u64) -> Result<SplitPlan> {
    check_size(n, n_cal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let n_val = n - n_cal;
    let start = (stream as usize % n) * n_val;
    let mut in_val = vec![false; n];
    for k in 0..n_val {
        in_val[perm[(start + k) % n]] = true;
    }
    let cal = (0..n).filter(|&i| !in_val[i]).collect();
    Ok(SplitPlan::from_selection(n, cal, SplitMethod::Random { seed, stream }))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Index farthest from the centroid of `rows`, lowest index on ties.
fn farthest_from_centroid(x: &DataMatrix, rows: &[usize]) -> usize {
    let p = x.n_cols();
    let mut centroid = vec![0.0; p];
    for &i in rows {
        crate::linalg::axpy(1.0, x.row(i), &mut centroid);
    }
    centroid.iter_mut().for_each(|c| *c /= rows.len() as f64);
    argmax(rows.iter().map(|&i| (i, sq_dist(x.row(i), &centroid))))
}

fn argmax(items: impl Iterator<Item = (usize, f64)>) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in items {
        match best {
            Some((_, bd)) if d <= bd => {}
            _ => best = Some((i, d)),
        }
    }
    best.map(|b| b.0).expect("nonempty candidate set")
}

/// Maximin bookkeeping over all observations.
struct MinDistances<'a> {
    x: &'a DataMatrix,
    min: Vec<f64>,
    picked: Vec<bool>,
    order: Vec<usize>,
}

impl<'a> MinDistances<'a> {
    fn new(x: &'a DataMatrix) -> Self {
        Self {
            x,
            min: vec![f64::INFINITY; x.n_rows()],
            picked: vec![false; x.n_rows()],
            order: Vec::new(),
        }
    }

    fn pick(&mut self, i: usize) {
        self.picked[i] = true;
        self.order.push(i);
        let xi = self.x.row(i);
        let x = self.x;
        let fresh = par::map_range(x.n_rows(), |j| sq_dist(x.row(j), xi));
        for (m, d) in self.min.iter_mut().zip(fresh) {
            *m = m.min(d);
        }
    }

    /// Unpicked candidate with the largest distance to the picked set.
    fn next_in(&self, candidates: &[usize]) -> Option<usize> {
        let mut free = candidates.iter().filter(|&&i| !self.picked[i]).peekable();
        free.peek()?;
        Some(argmax(free.map(|&i| (i, self.min[i]))))
    }
}

/// Kennard–Stone: start from the observation farthest from the centroid, then
/// repeatedly add the one farthest from its nearest selected neighbour.
pub fn kennard_stone(x: &DataMatrix, n_cal: usize) -> Result<SplitPlan> {
    let n = x.n_rows();
    check_size(n, n_cal)?;
    let all: Vec<usize> = (0..n).collect();
    let mut state = MinDistances::new(x);
    state.pick(farthest_from_centroid(x, &all));
    while state.order.len() < n_cal {
        let next = state.next_in(&all).expect("unpicked observations remain");
        state.pick(next);
    }
    Ok(SplitPlan::from_selection(n, state.order, SplitMethod::KennardStone))
}

/// Equal-frequency bins of `y`, ascending, ties by index.
pub fn y_quantile_groups(y: &[f64], n_groups: usize) -> Result<Vec<Vec<usize>>> {
    let n = y.len();
    if n_groups == 0 || n_groups > n {
        return Err(Error::invalid(
            "n_groups",
            format!("{n_groups} groups for {n} observations leaves an empty subset"),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    Ok((0..n_groups)
        .map(|g| order[g * n / n_groups..(g + 1) * n / n_groups].to_vec())
        .collect())
}

/// Proportional quotas summing to `total`, largest remainder first, lowest
/// group on equal remainders.
pub fn proportional_quotas(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut quotas: Vec<usize> = sizes.iter().map(|s| s * total / n).collect();
    let mut left = total - quotas.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..sizes.len()).collect();
    by_remainder.sort_by_key(|&g| (std::cmp::Reverse(sizes[g] * total % n), g));
    for g in by_remainder {
        if left == 0 {
            break;
        }
        if quotas[g] < sizes[g] {
            quotas[g] += 1;
            left -= 1;
        }
    }
    quotas
}

/// Kennard–Stone stratified on `y`. Observations are binned into
/// `n_groups` equal-frequency subsets of `y`, each receiving a proportional
/// calibration quota. The first pick is the observation farthest from the
/// global centroid; the loop then visits subsets in ascending order, wrapping,
/// taking the maximin point of each subset with quota left.
pub fn calvalxy(x: &DataMatrix, y: &[f64], n_cal: usize, n_groups: usize) -> Result<SplitPlan> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("X has {n} rows, y has {} values", y.len())));
    }
    check_size(n, n_cal)?;
    let groups = y_quantile_groups(y, n_groups)?;
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let mut quota = proportional_quotas(&sizes, n_cal);
    let mut group_of = vec![0; n];
    for (g, members) in groups.iter().enumerate() {
        members.iter().for_each(|&i| group_of[i] = g);
    }

    let all: Vec<usize> = (0..n).collect();
    let mut first = farthest_from_centroid(x, &all);
    if quota[group_of[first]] == 0 {
        let eligible: Vec<usize> = all.iter().copied().filter(|&i| quota[group_of[i]] > 0).collect();
        first = farthest_from_centroid_of(x, &all, &eligible);
    }
    let mut state = MinDistances::new(x);
    state.pick(first);
    quota[group_of[first]] -= 1;
    let mut s = group_of[first];
    while state.order.len() < n_cal {
        s = (s + 1) % n_groups;
        if quota[s] == 0 {
            continue;
        }
        let next = state.next_in(&groups[s]).expect("quota never exceeds subset size");
        state.pick(next);
        quota[s] -= 1;
    }
    Ok(SplitPlan::from_selection(n, state.order, SplitMethod::Calvalxy { n_groups }))
}

/// Among `candidates`, the one farthest from the centroid of `reference`.
fn farthest_from_centroid_of(x: &DataMatrix, reference: &[usize], candidates: &[usize]) -> usize {
    let p = x.n_cols();
    let mut centroid = vec![0.0; p];
    for &i in reference {
        crate::linalg::axpy(1.0, x.row(i), &mut centroid);
    }
    centroid.iter_mut().for_each(|c| *c /= reference.len() as f64);
    argmax(candidates.iter().map(|&i| (i, sq_dist(x.row(i), &centroid))))
}
