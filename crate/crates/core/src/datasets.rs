//! Gaussian-mixture spectra with a sparse linear response, and
//! Savitzky–Golay derivative preprocessing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_spd, DataMatrix, SquareMatrix};
use crate::par;

/// Inclusive 1-based range of variable indices, written `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl From<[usize; 2]> for IndexRange {
    fn from([start, end]: [usize; 2]) -> Self {
        Self { start, end }
    }
}

impl From<IndexRange> for [usize; 2] {
    fn from(r: IndexRange) -> Self {
        [r.start, r.end]
    }
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

/// Zero-based sorted, deduplicated indices covered by the ranges.
pub fn expand_ranges(ranges: &[IndexRange]) -> Vec<usize> {
    let mut idx: Vec<usize> = ranges.iter().flat_map(|r| (r.start - 1)..r.end).collect();
    idx.sort_unstable();
    idx.dedup();
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKeyword {
    Random,
}

/// Response weights over the active set: `"random"` draws them uniformly in
/// `[0.5, 1.5]`; a list gives one weight per active index in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResponseWeights {
    Keyword(WeightKeyword),
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationRecipe {
    pub n_obs: usize,
    pub n_vars: usize,
    pub n_peaks: usize,
    /// Peak scale in variable-index units.
    pub sigma: f64,
    pub amp_range: (f64, f64),
    pub active_set: Vec<IndexRange>,
    pub response_weights: ResponseWeights,
    /// Standard deviation of the additive contamination on `X`.
    pub noise_sd: f64,
    /// Standard deviation of the additive noise on `y`.
    #[serde(default)]
    pub response_noise_sd: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub x: DataMatrix,
    pub y: Vec<f64>,
    pub true_beta: Vec<f64>,
    pub recipe: SimulationRecipe,
}

impl SimulationRecipe {
    /// 300 spectra of 1000 variables, each a mixture of 30 peaks.
    pub fn dsim(seed: u64) -> Self {
        Self {
            n_obs: 300,
            n_vars: 1000,
            n_peaks: 30,
            sigma: 3.0,
            amp_range: (1.0, 5.0),
            active_set: vec![IndexRange::new(181, 200), IndexRange::new(491, 510), IndexRange::new(781, 800)],
            response_weights: ResponseWeights::Keyword(WeightKeyword::Random),
            noise_sd: 0.01,
            response_noise_sd: 5.0,
            seed,
        }
    }

    /// 200 spectra of 50 variables, each a mixture of 100 peaks; the response
    /// reads the first five and the last twelve variables.
    pub fn dsim_bar(seed: u64) -> Self {
        Self {
            n_obs: 200,
            n_vars: 50,
            n_peaks: 100,
            sigma: 1.0,
            amp_range: (1.0, 5.0),
            active_set: vec![IndexRange::new(1, 5), IndexRange::new(39, 50)],
            response_weights: ResponseWeights::Keyword(WeightKeyword::Random),
            noise_sd: 0.01,
            response_noise_sd: 5.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_obs < 2 || self.n_vars < 1 {
            return Err(Error::invalid("n_obs", "need at least 2 observations and 1 variable"));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid("sigma", "must be positive"));
        }
        let (lo, hi) = self.amp_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::invalid("amp_range", "need 0 < A_min ≤ A_max"));
        }
        for (name, v) in [("noise_sd", self.noise_sd), ("response_noise_sd", self.response_noise_sd)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be finite and nonnegative"));
            }
        }
        if let Some(r) = self.active_set.iter().find(|r| r.start == 0 || r.end > self.n_vars || r.is_empty()) {
            return Err(Error::invalid(
                "active_set",
                format!("range [{}, {}] outside 1..={}", r.start, r.end, self.n_vars),
            ));
        }
        if let ResponseWeights::Fixed(w) = &self.response_weights {
            let n_active = expand_ranges(&self.active_set).len();
            if w.len() != n_active {
                return Err(Error::invalid(
                    "response_weights",
                    format!("{} weights for {n_active} active variables", w.len()),
                ));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("response_weights"));
            }
        }
        Ok(())
    }
}

const STREAM_AMPLITUDES: u64 = 0;
const STREAM_LOCATIONS: u64 = 1;
const STREAM_X_NOISE: u64 = 2;
const STREAM_WEIGHTS: u64 = 3;
const STREAM_Y_NOISE: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Each stream of randomness comes from its own ChaCha20 stream of the seed,
/// so changing one recipe field leaves the other draws untouched.
pub fn simulate(recipe: &SimulationRecipe) -> Result<SimulatedDataset> {
    recipe.validate()?;
    let (n, p, k) = (recipe.n_obs, recipe.n_vars, recipe.n_peaks);
    let amp = Uniform::new_inclusive(recipe.amp_range.0, recipe.amp_range.1).map_err(|e| Error::invalid("amp_range", e.to_string()))?;
    let loc = Uniform::new_inclusive(1.0, p as f64).map_err(|e| Error::invalid("n_vars", e.to_string()))?;
    let mut amp_rng = stream(recipe.seed, STREAM_AMPLITUDES);
    let mut loc_rng = stream(recipe.seed, STREAM_LOCATIONS);
    let amplitudes: Vec<f64> = (0..n * k).map(|_| amp_rng.sample(amp)).collect();
    let locations: Vec<f64> = (0..n * k).map(|_| loc_rng.sample(loc)).collect();

    let mut data = vec![0.0; n * p];
    par::fill_rows(&mut data, p, |i, row| {
        let peaks = &amplitudes[i * k..(i + 1) * k];
        add_mixture(row, recipe.sigma, peaks, &locations[i * k..(i + 1) * k]);
    });
    if recipe.noise_sd > 0.0 {
        let normal = Normal::new(0.0, recipe.noise_sd).map_err(|e| Error::invalid("noise_sd", e.to_string()))?;
        let mut rng = stream(recipe.seed, STREAM_X_NOISE);
        data.iter_mut().for_each(|v| *v += rng.sample(normal));
    }
    let x = DataMatrix::new(n, p, data)?;

    let active = expand_ranges(&recipe.active_set);
    let weights = match &recipe.response_weights {
        ResponseWeights::Fixed(w) => w.clone(),
        ResponseWeights::Keyword(WeightKeyword::Random) => {
            let mut rng = stream(recipe.seed, STREAM_WEIGHTS);
            let u = Uniform::new_inclusive(0.5, 1.5).expect("valid bounds");
            active.iter().map(|_| rng.sample(u)).collect()
        }
    };
    let mut true_beta = vec![0.0; p];
    for (&j, &w) in active.iter().zip(&weights) {
        true_beta[j] = w;
    }
    let mut y = x.mul_vec(&true_beta);
    if recipe.response_noise_sd > 0.0 {
        let normal = Normal::new(0.0, recipe.response_noise_sd).map_err(|e| Error::invalid("response_noise_sd", e.to_string()))?;
        let mut rng = stream(recipe.seed, STREAM_Y_NOISE);
        y.iter_mut().for_each(|v| *v += rng.sample(normal));
    }
    Ok(SimulatedDataset {
        x,
        y,
        true_beta,
        recipe: recipe.clone(),
    })
}

/// Add `Σ_k A_k exp(−(x − μ_k)²/(2σ²))` sampled at `x = 1..=len`.
pub fn add_mixture(row: &mut [f64], sigma: f64, amplitudes: &[f64], locations: &[f64]) {
    let inv = 1.0 / (2.0 * sigma * sigma);
    for (a, mu) in amplitudes.iter().zip(locations) {
        for (j, slot) in row.iter_mut().enumerate() {
            let d = (j + 1) as f64 - mu;
            *slot += a * (-d * d * inv).exp();
        }
    }
}

/// First-derivative Savitzky–Golay filter along each row. Near the edges the
/// polynomial is fitted on the truncated window, which keeps the filter exact
/// for polynomials of degree ≤ `degree` everywhere.
pub fn savitzky_golay_derivative(x: &DataMatrix, window: usize, degree: usize) -> Result<DataMatrix> {
    if window % 2 == 0 {
        return Err(Error::invalid("window", format!("must be odd, got {window}")));
    }
    if window <= degree {
        return Err(Error::invalid("window", format!("must exceed the degree {degree}")));
    }
    if degree == 0 {
        return Err(Error::invalid("degree", "a derivative needs degree ≥ 1"));
    }
    let p = x.n_cols();
    if p < window {
        return Err(Error::invalid("window", format!("{window} is longer than the {p} variables")));
    }
    let half = window / 2;
    let filters: Vec<(usize, Vec<f64>)> = (0..p)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(p - 1);
            derivative_weights(lo as isize - i as isize, hi as isize - i as isize, degree).map(|w| (lo, w))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; x.n_rows() * p];
    par::fill_rows(&mut out, p, |r, row| {
        let src = x.row(r);
        for (slot, (lo, w)) in row.iter_mut().zip(&filters) {
            *slot = dot(&src[*lo..*lo + w.len()], w);
        }
    });
    DataMatrix::new(x.n_rows(), p, out)
}

/// Weights `c` such that `cᵀx` is the slope at offset 0 of the least-squares
/// polynomial through samples at offsets `from..=to`.
fn derivative_weights(from: isize, to: isize, degree: usize) -> Result<Vec<f64>> {
    let offsets: Vec<f64> = (from..=to).map(|u| u as f64).collect();
    let d = degree + 1;
    let rows: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..d).map(|b| offsets.iter().map(|u| u.powi((a + b) as i32)).sum()).collect())
        .collect();
    let gram = SquareMatrix::from_rows(&rows)?;
    let mut e1 = vec![0.0; d];
    e1[1] = 1.0;
    // Row 1 of (VᵀV)⁻¹Vᵀ.
    let g = solve_spd(&gram, &e1)?;
    Ok(offsets
        .iter()
        .map(|u| (0..d).map(|a| g[a] * u.powi(a as i32)).sum())
        .collect())
}
