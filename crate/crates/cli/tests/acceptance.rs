//! Acceptance checks. Prints one line per criterion and exits non-zero when
//! any criterion fails.

use std::cell::RefCell;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dualspls::baselines::{lasso_fit, LassoOptions};
use dualspls::datasets::{savitzky_golay_derivative, simulate, SimulationRecipe};
use dualspls::linalg::{center_xy, dot, norm_l2};
use dualspls::metrics::l0;
use dualspls::penalty::{check_dual_optimality, lasso_weight, RidgeWeightSolver};
use dualspls::protocol::{run_benchmark, BenchmarkConfig, BenchmarkData, Method};
use dualspls::reports::SetKind;
use dualspls::sampling::{calvalxy, kennard_stone};
use dualspls::selection::Splitter;
use dualspls::{fit, DataMatrix, FittedModel, GroupPartition, PenaltySpec, RidgeParams, ShrinkRatio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn(&Suite) -> Verdict;

#[derive(Default)]
struct Suite {
    /// Score vectors of every latent model fitted so far.
    scores: RefCell<Vec<(String, Vec<Vec<f64>>)>>,
}

impl Suite {
    fn fit(&self, label: &str, x: &DataMatrix, y: &[f64], spec: &PenaltySpec, m: usize) -> FittedModel {
        let model = fit(x, y, spec, m).unwrap_or_else(|e| panic!("{label}: {e}"));
        if let Some(t) = model.scores() {
            self.scores.borrow_mut().push((label.to_string(), t.to_vec()));
        }
        model
    }
}

fn gaussian(seed: u64, n: usize, p: usize) -> (DataMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DataMatrix::new(n, p, (0..n * p).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
    let y = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    (x, y)
}

/// Columns orthonormal and orthogonal to the intercept.
fn orthonormal(seed: u64, n: usize, p: usize) -> DataMatrix {
    let (raw, _) = gaussian(seed, n, p);
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (n as f64).sqrt(); n]];
    for j in 0..p {
        let mut v = raw.column(j);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
        }
        let s = norm_l2(&v);
        v.iter_mut().for_each(|vi| *vi /= s);
        basis.push(v);
    }
    DataMatrix::from_columns(&basis[1..]).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn max_coef_diff(a: &FittedModel, b: &FittedModel) -> f64 {
    if a.n_components() != b.n_components() {
        return f64::INFINITY;
    }
    a.all_coefficients()
        .iter()
        .zip(b.all_coefficients())
        .map(|(u, v)| max_abs_diff(u, v))
        .fold(0.0, f64::max)
}

fn ratio(v: f64) -> ShrinkRatio {
    ShrinkRatio::new(v).unwrap()
}

fn within(label: &str, got: f64, tol: f64) -> Verdict {
    let detail = format!("{label} {got:.3e} (tol {tol:.0e})");
    if got <= tol {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, v)| [r.as_slice(), &[*v]].concat()).collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}

/// Textbook NIPALS PLS1 coefficients for orders `1..=m`.
fn nipals(x: &DataMatrix, y: &[f64], m: usize) -> Vec<Vec<f64>> {
    let (xc, yc, _) = center_xy(x, y).unwrap();
    let (n, p) = (xc.n_rows(), xc.n_cols());
    let mut e: Vec<Vec<f64>> = (0..n).map(|i| xc.row(i).to_vec()).collect();
    let mut f = yc;
    let (mut ws, mut ps, mut qs) = (Vec::new(), Vec::new(), Vec::new());
    let mut out = Vec::new();
    for _ in 0..m {
        let mut w: Vec<f64> = (0..p).map(|j| (0..n).map(|i| e[i][j] * f[i]).sum()).collect();
        let s = norm_l2(&w);
        w.iter_mut().for_each(|v| *v /= s);
        let t: Vec<f64> = e.iter().map(|r| dot(r, &w)).collect();
        let tt = dot(&t, &t);
        let load: Vec<f64> = (0..p).map(|j| (0..n).map(|i| e[i][j] * t[i]).sum::<f64>() / tt).collect();
        let q = dot(&f, &t) / tt;
        for i in 0..n {
            for j in 0..p {
                e[i][j] -= t[i] * load[j];
            }
            f[i] -= q * t[i];
        }
        ws.push(w);
        ps.push(load);
        qs.push(q);
        let k = ws.len();
        let pw: Vec<Vec<f64>> = (0..k).map(|a| (0..k).map(|b| dot(&ps[a], &ws[b])).collect()).collect();
        let c = solve(&pw, &qs);
        out.push((0..p).map(|j| (0..k).map(|a| ws[a][j] * c[a]).sum()).collect());
    }
    out
}

fn c01_pls_reduction(suite: &Suite) -> Verdict {
    let (x, y) = gaussian(101, 50, 20);
    let oracle = nipals(&x, &y, 5);
    let dual = suite.fit("dual-lasso ς=0", &x, &y, &PenaltySpec::PseudoLasso { shrink: ratio(0.0) }, 5);
    let pls = suite.fit("pls", &x, &y, &PenaltySpec::Pls, 5);
    if dual.n_components() != 5 || pls.n_components() != 5 {
        return Verdict::Fail("model truncated".into());
    }
    let worst = (1..=5)
        .map(|k| {
            max_abs_diff(dual.coefficients(k).unwrap(), &oracle[k - 1])
                .max(max_abs_diff(pls.coefficients(k).unwrap(), &oracle[k - 1]))
        })
        .fold(0.0, f64::max);
    within("max |β̂ − β̂_NIPALS|", worst, 1e-8)
}

fn c02_group_reduction(suite: &Suite) -> Verdict {
    let (x, y) = gaussian(102, 50, 20);
    let shrink = ratio(0.7);
    let lasso = suite.fit("dual-lasso", &x, &y, &PenaltySpec::PseudoLasso { shrink }, 5);
    let group = PenaltySpec::group_lasso(GroupPartition::contiguous(20, 1).unwrap(), shrink);
    let gl = suite.fit("dual-gl G=1", &x, &y, &group, 5);
    within("max |β̂_gl − β̂_lasso|", max_coef_diff(&gl, &lasso), 1e-10)
}

fn c03_ridge_reduction(suite: &Suite) -> Verdict {
    let (x, y) = gaussian(103, 50, 20);
    let shrink = ratio(0.7);
    let lasso = suite.fit("dual-lasso", &x, &y, &PenaltySpec::PseudoLasso { shrink }, 5);
    let spec = PenaltySpec::PseudoRidge {
        shrink,
        ridge: RidgeParams::new(0.0).unwrap(),
    };
    let ridge = suite.fit("dual-ridge ν₂=0", &x, &y, &spec, 5);
    within("max |β̂_ridge − β̂_lasso|", max_coef_diff(&ridge, &lasso), 1e-10)
}

fn c04_ls_reduction(suite: &Suite) -> Verdict {
    let x = orthonormal(104, 50, 20);
    let (_, y) = gaussian(204, 50, 1);
    let shrink = ratio(0.5);
    let lasso = suite.fit("dual-lasso", &x, &y, &PenaltySpec::PseudoLasso { shrink }, 5);
    let ls = suite.fit("dual-ls orthonormal", &x, &y, &PenaltySpec::PseudoLs { shrink }, 5);
    within("max |β̂_ls − β̂_lasso|", max_coef_diff(&ls, &lasso), 1e-8)
}

fn c05_sparsity(_: &Suite) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for p in [100usize, 250, 1000] {
        for s in [0.5, 0.8, 0.99] {
            let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            let w = lasso_weight(&z, ratio(s)).unwrap().w;
            let expected = p - (s * p as f64 - 1e-9).ceil() as usize;
            let got = l0(&w, 0.0);
            if got != expected {
                return Verdict::Fail(format!("P={p} ς={s}: ℓ0 {got}, expected {expected}"));
            }
        }
    }
    Verdict::Pass("ℓ0(w₁) = P − ⌈ςP⌉ for 9 (P, ς) pairs".into())
}

fn c06_unit_norm(suite: &Suite) -> Verdict {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for i in 0..100u64 {
        let (x, y) = gaussian(1000 + i, 40, 12);
        let (xc, _, _) = center_xy(&x, &y).unwrap();
        let shrink = ratio(0.3 + 0.004 * i as f64);
        let specs = [
            PenaltySpec::PseudoLasso { shrink },
            PenaltySpec::group_lasso(GroupPartition::contiguous(12, 3).unwrap(), shrink),
            PenaltySpec::PseudoLs { shrink },
            PenaltySpec::PseudoRidge {
                shrink,
                ridge: RidgeParams::new(0.05 * (i + 1) as f64).unwrap(),
            },
        ];
        for spec in &specs {
            let model = suite.fit(spec.kind(), &x, &y, spec, 3);
            for (m, w) in model.weights().iter().enumerate() {
                let omega = model.component_norm(m + 1, &xc).unwrap().evaluate(w);
                worst = worst.max((omega - 1.0).abs());
                checked += 1;
            }
        }
    }
    match within("max |Ω(w) − 1|", worst, 1e-10) {
        Verdict::Pass(d) => Verdict::Pass(format!("{d} over {checked} components")),
        other => other,
    }
}

fn c07_dual_optimality(_: &Suite) -> Verdict {
    let (x, _) = gaussian(107, 12, 5);
    let (xc, _, _) = center_xy(&x, &[0.0; 12]).unwrap();
    let ridge = RidgeWeightSolver::new(&xc, RidgeParams::new(0.5).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(207);
    let (mut lasso_gap, mut ridge_gap) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..20u64 {
        let z: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
        let shrink = ratio(0.4);
        let lw = lasso_weight(&z, shrink).unwrap();
        let report = check_dual_optimality(&z, &lw.w, &lw.norm(), 10_000, k).unwrap();
        lasso_gap = lasso_gap.max(report.gap);
        let rw = ridge.weight(&z, shrink).unwrap();
        let report = check_dual_optimality(&z, &rw.w, &rw.norm(&xc), 10_000, k).unwrap();
        ridge_gap = ridge_gap.max(report.gap);
    }
    let detail = format!("max gap lasso {lasso_gap:.3e}, ridge {ridge_gap:.3e} (tol 1e-9)");
    if lasso_gap <= 1e-9 && ridge_gap <= 1e-9 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn c13_monotone(suite: &Suite) -> Verdict {
    for i in 0..10u64 {
        let (x, y) = gaussian(1300 + i, 40, 15);
        let model = suite.fit("pls", &x, &y, &PenaltySpec::Pls, 10);
        let rmse: Vec<f64> = (1..=model.n_components())
            .map(|k| {
                let yhat = model.predict(&x, k).unwrap();
                let sse: f64 = y.iter().zip(&yhat).map(|(a, b)| (a - b).powi(2)).sum();
                (sse / y.len() as f64).sqrt()
            })
            .collect();
        if let Some(k) = rmse.windows(2).position(|w| w[1] > w[0] + 1e-10) {
            return Verdict::Fail(format!("instance {i}: RMSE rises at order {}", k + 2));
        }
    }
    Verdict::Pass("calibration RMSE non-increasing on 10 instances".into())
}

fn simulated(recipe: &SimulationRecipe) -> BenchmarkData {
    let data = simulate(recipe).unwrap();
    BenchmarkData {
        x: data.x,
        y: data.y,
        active_set: Some(recipe.active_set.clone()),
        label: "simulated".into(),
    }
}

fn validation_rmse(report: &dualspls::protocol::BenchmarkReport, method: Method, order: usize) -> f64 {
    let outcome = report.outcome(method).expect("method ran");
    let order = outcome.reported_order.unwrap_or(order);
    report
        .metric(method, order, SetKind::Validation)
        .map_or(f64::NAN, |r| r.rmse)
}

fn c09_dsim_lasso(suite: &Suite) -> Verdict {
    let data = simulated(&SimulationRecipe::dsim(7));
    let config = BenchmarkConfig {
        methods: vec![Method::Pls, Method::DualLasso],
        shrink: 0.99,
        m_max: 6,
        order: 6,
        seed: 7,
        ..BenchmarkConfig::default()
    };
    let report = run_benchmark(&data, &config).unwrap();
    let lasso = report.outcome(Method::DualLasso).unwrap();
    if lasso.status != "ok" {
        return Verdict::Fail(format!("dual-lasso failed: {:?}", lasso.error));
    }
    let r = validation_rmse(&report, Method::DualLasso, 6) / validation_rmse(&report, Method::Pls, 6);
    let nnz = lasso.l0.unwrap_or(usize::MAX);
    let precision = lasso.recovery.map_or(0.0, |r| r.precision);
    let shrink = ShrinkRatio::new(0.99).unwrap();
    let model = suite.fit("dsim dual-lasso", &data.x, &data.y, &PenaltySpec::PseudoLasso { shrink }, 6);
    let detail = format!(
        "RMSE ratio {r:.3} (≤ 1.25), ℓ0 {nnz} (≤ 120), precision {precision:.2} (≥ 0.7), full-data ℓ0 {}",
        l0(model.coefficients(model.n_components()).unwrap(), 0.0)
    );
    if r <= 1.25 && nnz <= 120 && precision >= 0.7 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn c10_dsim_bar_ls(suite: &Suite) -> Verdict {
    let data = simulated(&SimulationRecipe::dsim_bar(7));
    let config = BenchmarkConfig {
        methods: vec![Method::Ols, Method::DualLs],
        shrink: 0.6,
        m_max: 5,
        order: 5,
        seed: 7,
        ..BenchmarkConfig::default()
    };
    let report = run_benchmark(&data, &config).unwrap();
    let ls = report.outcome(Method::DualLs).unwrap();
    let ols = report.outcome(Method::Ols).unwrap();
    if ls.status != "ok" || ols.status != "ok" {
        return Verdict::Fail(format!("fit failed: {:?} {:?}", ls.error, ols.error));
    }
    let r = validation_rmse(&report, Method::DualLs, 5) / validation_rmse(&report, Method::Ols, 5);
    let (nnz, nnz_ols) = (ls.l0.unwrap(), ols.l0.unwrap());
    let shrink = ShrinkRatio::new(0.6).unwrap();
    suite.fit("dsim-bar dual-ls", &data.x, &data.y, &PenaltySpec::PseudoLs { shrink }, 5);
    let detail = format!(
        "RMSE ratio {r:.3} (≤ 1.10) at order {}, ℓ0 {nnz} vs OLS {nnz_ols}",
        ls.reported_order.unwrap_or(5)
    );
    if r <= 1.10 && nnz < nnz_ols {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn c11_dsim_ridge(suite: &Suite) -> Verdict {
    let data = simulated(&SimulationRecipe::dsim(7));
    let config = BenchmarkConfig {
        methods: vec![Method::Ridge, Method::DualRidge],
        shrink: 0.99,
        m_max: 6,
        order: 6,
        seed: 7,
        ..BenchmarkConfig::default()
    };
    let report = run_benchmark(&data, &config).unwrap();
    let dual = report.outcome(Method::DualRidge).unwrap();
    if dual.status != "ok" {
        return Verdict::Fail(format!("dual-ridge failed: {:?}", dual.error));
    }
    let r = validation_rmse(&report, Method::DualRidge, 6) / validation_rmse(&report, Method::Ridge, 6);
    let nnz = dual.l0.unwrap_or(usize::MAX);
    let nu2 = dual.hyperparameters.get("nu2").copied().unwrap_or(f64::NAN);
    let spec = PenaltySpec::PseudoRidge {
        shrink: ShrinkRatio::new(0.99).unwrap(),
        ridge: RidgeParams::new(nu2).unwrap(),
    };
    suite.fit("dsim dual-ridge", &data.x, &data.y, &spec, 6);
    let detail = format!("RMSE ratio {r:.3} (≤ 1.10), ℓ0 {nnz} (≤ 100), ν₂ {nu2:.3e}");
    if r <= 1.10 && nnz <= 100 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn c08_orthogonality(suite: &Suite) -> Verdict {
    let scores = suite.scores.borrow();
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for (_, t) in scores.iter() {
        for i in 0..t.len() {
            for j in 0..i {
                let scale = norm_l2(&t[i]) * norm_l2(&t[j]);
                worst = worst.max(dot(&t[i], &t[j]).abs() / scale);
                pairs += 1;
            }
        }
    }
    match within("max |tᵢᵀtⱼ|/(‖tᵢ‖‖tⱼ‖)", worst, 1e-6) {
        Verdict::Pass(d) => Verdict::Pass(format!("{d} over {} models, {pairs} pairs", scores.len())),
        other => other,
    }
}

fn c12_lasso_closed_form(_: &Suite) -> Verdict {
    let x = orthonormal(112, 30, 10);
    let (_, y) = gaussian(212, 30, 1);
    let xty = x.tmul_vec(&y);
    let peak = xty.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst = 0.0f64;
    for t in [0.1 * peak, 0.4 * peak, 0.8 * peak] {
        let beta = lasso_fit(&x, &y, t, LassoOptions::default()).unwrap();
        let closed: Vec<f64> = xty.iter().map(|v| v.signum() * (v.abs() - t).max(0.0)).collect();
        worst = worst.max(max_abs_diff(&beta, &closed));
    }
    within("max |β̂_cd − soft(Xᵀy, t)|", worst, 1e-6)
}

fn c14_savitzky_golay(_: &Suite) -> Verdict {
    let p = 60;
    let coeffs = [(1.0, -0.5, 0.02), (-3.0, 2.0, -0.1), (0.5, 0.0, 0.3)];
    let rows: Vec<Vec<f64>> = coeffs
        .iter()
        .map(|(a, b, c)| (0..p).map(|i| a + b * i as f64 + c * (i * i) as f64).collect())
        .collect();
    let d = savitzky_golay_derivative(&DataMatrix::from_rows(&rows).unwrap(), 15, 2).unwrap();
    let mut worst = 0.0f64;
    for (r, (_, b, c)) in coeffs.iter().enumerate() {
        for i in 7..p - 7 {
            worst = worst.max((d.get(r, i) - (b + 2.0 * c * i as f64)).abs());
        }
    }
    within("max interior derivative error", worst, 1e-9)
}

fn c15_calvalxy(_: &Suite) -> Verdict {
    for seed in 0..5u64 {
        let (x, y) = gaussian(1500 + seed, 60, 4);
        let n_cal = 45;
        let plan = calvalxy(&x, &y, n_cal, 4).unwrap();
        if plan.calibration.len() != n_cal {
            return Verdict::Fail(format!("seed {seed}: {} calibration points", plan.calibration.len()));
        }
        let centroid: Vec<f64> = (0..4).map(|j| x.column(j).iter().sum::<f64>() / 60.0).collect();
        let dist = |i: usize| -> f64 { x.row(i).iter().zip(&centroid).map(|(a, c)| (a - c).powi(2)).sum() };
        let far = (0..60).max_by(|&a, &b| dist(a).total_cmp(&dist(b))).unwrap();
        if plan.calibration[0] != far {
            return Verdict::Fail(format!("seed {seed}: first pick {} but farthest is {far}", plan.calibration[0]));
        }
        let single = calvalxy(&x, &y, n_cal, 1).unwrap();
        if single.calibration != kennard_stone(&x, n_cal).unwrap().calibration {
            return Verdict::Fail(format!("seed {seed}: one group differs from Kennard–Stone"));
        }
    }
    Verdict::Pass("size, first pick and one-group equivalence hold on 5 instances".into())
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn c16_determinism(_: &Suite) -> Verdict {
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let status = Command::new(env!("CARGO_BIN_EXE_dualspls"))
                .args(["benchmark", "--scenario", "dsim", "--seed", "7", "--out-dir"])
                .arg(dir.path())
                .status()
                .unwrap();
            (status.success(), csv_files(dir.path()))
        })
        .collect();
    if !runs.iter().all(|r| r.0) {
        return Verdict::Fail("benchmark command failed".into());
    }
    let names: Vec<&str> = runs[0].1.iter().map(|f| f.0.as_str()).collect();
    if runs[0].1.is_empty() || runs[0].1 != runs[1].1 {
        return Verdict::Fail(format!("outputs differ among {names:?}"));
    }
    Verdict::Pass(format!("byte-identical {}", names.join(", ")))
}

fn c17_nir(_: &Suite) -> Verdict {
    let (Ok(xp), Ok(yp)) = (std::env::var("DUALSPLS_NIR_X"), std::env::var("DUALSPLS_NIR_Y")) else {
        return Verdict::Skip("no NIR dataset; set DUALSPLS_NIR_X and DUALSPLS_NIR_Y to run".into());
    };
    let header = std::env::var("DUALSPLS_NIR_HEADER").is_ok_and(|v| v == "1");
    let data = BenchmarkData {
        x: dualspls::io::read_matrix(&xp, header).unwrap(),
        y: dualspls::io::read_vector(&yp, header).unwrap(),
        active_set: None,
        label: "nir".into(),
    };
    let config = BenchmarkConfig {
        methods: vec![Method::Pls, Method::DualLasso],
        shrink: 0.99,
        m_max: 6,
        order: 6,
        splitter: Splitter::Calvalxy { n_groups: 10 },
        ..BenchmarkConfig::default()
    };
    let report = run_benchmark(&data, &config).unwrap();
    let r = validation_rmse(&report, Method::DualLasso, 6) / validation_rmse(&report, Method::Pls, 6);
    let nnz = report.outcome(Method::DualLasso).and_then(|o| o.l0).unwrap_or(usize::MAX);
    let detail = format!("RMSE ratio {r:.3} (≤ 1.25), ℓ0 {nnz} (in [40, 160])");
    if r <= 1.25 && (40..=160).contains(&nnz) {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn timed(label: &str, detail: Verdict, elapsed: Duration, budget: Option<Duration>) -> Verdict {
    match (detail, budget) {
        (Verdict::Pass(d), Some(b)) if elapsed > b => {
            Verdict::Fail(format!("{d}; {label} took {:.1}s, budget {:.0}s", elapsed.as_secs_f64(), b.as_secs_f64()))
        }
        (v, _) => v,
    }
}

fn main() -> ExitCode {
    let secs = |s: u64| Some(Duration::from_secs(s));
    let checks: [(u32, &str, Check, Option<Duration>); 17] = [
        (1, "PLS reduction", c01_pls_reduction, secs(1)),
        (2, "group reduction", c02_group_reduction, None),
        (3, "ridge reduction", c03_ridge_reduction, None),
        (4, "orthonormal LS reduction", c04_ls_reduction, None),
        (5, "sparsity control", c05_sparsity, None),
        (6, "unit-norm constraint", c06_unit_norm, None),
        (7, "dual optimality", c07_dual_optimality, secs(10)),
        (9, "simulated benchmark, pseudo-lasso", c09_dsim_lasso, secs(60)),
        (10, "pseudo-LS against OLS", c10_dsim_bar_ls, secs(5)),
        (11, "pseudo-ridge against ridge", c11_dsim_ridge, secs(90)),
        (12, "lasso closed form", c12_lasso_closed_form, None),
        (13, "PLS calibration monotonicity", c13_monotone, None),
        (8, "score orthogonality", c08_orthogonality, None),
        (14, "Savitzky-Golay exactness", c14_savitzky_golay, None),
        (15, "CalValXy contract", c15_calvalxy, None),
        (16, "determinism", c16_determinism, None),
        (17, "NIR benchmark", c17_nir, None),
    ];
    let suite = Suite::default();
    let mut lines = Vec::new();
    for (id, name, check, budget) in checks {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| check(&suite)))
            .unwrap_or_else(|e| {
                let message = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Verdict::Fail(format!("panicked: {message}"))
            });
        let elapsed = start.elapsed();
        let verdict = timed(name, verdict, elapsed, budget);
        lines.push((id, name, verdict, elapsed));
    }
    lines.sort_by_key(|l| l.0);
    let mut failed = 0;
    for (id, name, verdict, elapsed) in &lines {
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {id:>2} {name}: {detail} [{:.2}s]", elapsed.as_secs_f64());
    }
    println!("{} criteria, {failed} failed", lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
