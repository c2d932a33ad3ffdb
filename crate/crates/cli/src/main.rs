use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dualspls::baselines::{BaselineMethod, BaselineModel};
use dualspls::datasets::{savitzky_golay_derivative, simulate, SimulationRecipe};
use dualspls::io::{format_number, read_matrix, read_vector, write_matrix, write_table, write_vector};
use dualspls::protocol::{run_benchmark, BenchmarkConfig, BenchmarkData, Method};
use dualspls::sampling::{calibration_size, calvalxy, kennard_stone, rotated_split};
use dualspls::selection::{select_components, CvPlan, Splitter};
use dualspls::{fit, DataMatrix, Error, GroupPartition, PenaltySpec, RidgeParams, SavedModel, ShrinkRatio};

#[derive(Parser)]
#[command(name = "dualspls", version, about = "Dual sparse partial least squares regression", args_override_self = true)]
struct Cli {
    /// JSON object whose keys stand in for flags; flags on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a simulated dataset.
    Simulate(SimulateArgs),
    /// Partition observations into calibration and validation sets.
    Split(SplitArgs),
    /// Fit one model and save it.
    Fit(FitArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Cross-validate the number of components.
    Cv(CvArgs),
    /// Run the calibration/validation comparison of several methods.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Dsim,
    DsimBar,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Dsim,
    DsimBar,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitterArg {
    Random,
    KennardStone,
    Calvalxy,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, value_name = "PATH")]
    x: PathBuf,
    #[arg(long, value_name = "PATH")]
    y: PathBuf,
    /// Input files start with a header row.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, required_unless_present = "recipe", conflicts_with = "recipe")]
    preset: Option<Preset>,
    /// Recipe as JSON, instead of a preset.
    #[arg(long, value_name = "PATH")]
    recipe: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "calvalxy")]
    splitter: SplitterArg,
    #[arg(long, default_value_t = 0.8)]
    fraction: f64,
    /// Response strata for calvalxy.
    #[arg(long, default_value_t = 10)]
    cal_groups: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Fraction of coordinates zeroed per component.
    #[arg(long, default_value_t = 0.99)]
    shrink: f64,
    /// Contiguous variable groups for dual-gl.
    #[arg(long, default_value_t = 4)]
    groups: usize,
    /// Ridge weight of dual-ridge; defaults to 1/t when --t is given.
    #[arg(long)]
    nu2: Option<f64>,
    /// Penalty of the ridge and lasso baselines.
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 6)]
    ncomp: usize,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    #[arg(long, value_name = "PATH")]
    x: PathBuf,
    #[arg(long)]
    header: bool,
    /// Order to predict with; the largest one by default.
    #[arg(long)]
    ncomp: Option<usize>,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    max_ncomp: usize,
    #[arg(long, default_value_t = 10)]
    splits: usize,
    #[arg(long, value_enum, default_value = "random")]
    splitter: SplitterArg,
    #[arg(long, default_value_t = 0.8)]
    fraction: f64,
    #[arg(long, default_value_t = 10)]
    cal_groups: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, value_enum)]
    scenario: Scenario,
    #[arg(long, value_name = "PATH", required_if_eq("scenario", "file"))]
    x: Option<PathBuf>,
    #[arg(long, value_name = "PATH", required_if_eq("scenario", "file"))]
    y: Option<PathBuf>,
    #[arg(long)]
    header: bool,
    /// Replace X by its Savitzky-Golay first derivative before splitting.
    #[arg(long)]
    sg: bool,
    #[arg(long, default_value_t = 15)]
    sg_window: usize,
    #[arg(long, default_value_t = 2)]
    sg_degree: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Vec<Method>,
    /// Defaults to 0.6 for dsim-bar and 0.99 otherwise.
    #[arg(long)]
    shrink: Option<f64>,
    #[arg(long, default_value_t = 10)]
    max_ncomp: usize,
    /// Order whose coefficients are reported.
    #[arg(long, default_value_t = 6)]
    order: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "calvalxy")]
    splitter: SplitterArg,
    #[arg(long, default_value_t = 10)]
    cal_groups: usize,
    #[arg(long, default_value_t = 0.8)]
    fraction: f64,
    /// Splits of the calibration set for tuning ridge and lasso.
    #[arg(long, default_value_t = 5)]
    cv_splits: usize,
    #[arg(long, default_value_t = 4)]
    groups: usize,
    #[arg(long)]
    nu2: Option<f64>,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn splitter(arg: SplitterArg, cal_groups: usize) -> Splitter {
    match arg {
        SplitterArg::Random => Splitter::Random,
        SplitterArg::KennardStone => Splitter::KennardStone,
        SplitterArg::Calvalxy => Splitter::Calvalxy { n_groups: cal_groups },
    }
}

enum Failure {
    Clap(i32),
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

type Outcome = Result<(), Failure>;

fn read_data(args: &DataArgs) -> Result<(DataMatrix, Vec<f64>), Failure> {
    let x = read_matrix(&args.x, args.header)?;
    let y = read_vector(&args.y, args.header)?;
    Ok((x, y))
}

fn shrink(value: f64) -> Result<ShrinkRatio, Failure> {
    ShrinkRatio::new(value).map_err(|e| Failure::Usage(e.to_string()))
}

fn penalty_spec(model: &ModelArgs, n_vars: usize) -> Result<PenaltySpec, Failure> {
    Ok(match model.method {
        Method::Pls => PenaltySpec::Pls,
        Method::DualLasso => PenaltySpec::PseudoLasso { shrink: shrink(model.shrink)? },
        Method::DualLs => PenaltySpec::PseudoLs { shrink: shrink(model.shrink)? },
        Method::DualGl => {
            let partition = GroupPartition::contiguous(n_vars, model.groups).map_err(|e| Failure::Usage(e.to_string()))?;
            PenaltySpec::group_lasso(partition, shrink(model.shrink)?)
        }
        Method::DualRidge => {
            let ridge = match (model.nu2, model.t) {
                (Some(nu2), _) => RidgeParams::new(nu2),
                (None, Some(t)) => RidgeParams::from_ridge_penalty(t),
                (None, None) => return Err(Failure::Usage("dual-ridge needs --nu2 or --t".into())),
            }
            .map_err(|e| Failure::Usage(e.to_string()))?;
            PenaltySpec::PseudoRidge {
                shrink: shrink(model.shrink)?,
                ridge,
            }
        }
        Method::Ols | Method::Ridge | Method::Lasso => {
            return Err(Failure::Usage(format!("{} is not a latent-variable method", model.method)))
        }
    })
}

fn baseline_method(model: &ModelArgs) -> Result<BaselineMethod, Failure> {
    let t = || model.t.ok_or_else(|| Failure::Usage(format!("{} needs --t", model.method)));
    Ok(match model.method {
        Method::Ols => BaselineMethod::Ols,
        Method::Ridge => BaselineMethod::Ridge { t: t()? },
        Method::Lasso => BaselineMethod::Lasso { t: t()? },
        _ => unreachable!("latent methods are handled by penalty_spec"),
    })
}

fn cmd_simulate(args: SimulateArgs) -> Outcome {
    let mut recipe = match (args.preset, &args.recipe) {
        (Some(Preset::Dsim), _) => SimulationRecipe::dsim(0),
        (Some(Preset::DsimBar), _) => SimulationRecipe::dsim_bar(0),
        (None, Some(path)) => serde_json::from_str(&fs::read_to_string(path)?).map_err(Error::Json)?,
        (None, None) => unreachable!("clap requires one of --preset and --recipe"),
    };
    if let Some(seed) = args.seed {
        recipe.seed = seed;
    }
    recipe.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let sim = simulate(&recipe)?;
    fs::create_dir_all(&args.out_dir)?;
    write_matrix(args.out_dir.join("X.csv"), &sim.x)?;
    write_vector(args.out_dir.join("y.csv"), &sim.y)?;
    write_vector(args.out_dir.join("truth.csv"), &sim.true_beta)?;
    let mut text = serde_json::to_string_pretty(&recipe).map_err(Error::Json)?;
    text.push('\n');
    fs::write(args.out_dir.join("recipe.json"), text)?;
    Ok(())
}

fn cmd_split(args: SplitArgs) -> Outcome {
    let (x, y) = read_data(&args.data)?;
    let n_cal = calibration_size(x.n_rows(), args.fraction);
    let plan = match splitter(args.splitter, args.cal_groups) {
        Splitter::Random => rotated_split(x.n_rows(), n_cal, args.seed, 0)?,
        Splitter::KennardStone => kennard_stone(&x, n_cal)?,
        Splitter::Calvalxy { n_groups } => calvalxy(&x, &y, n_cal, n_groups)?,
    };
    fs::write(&args.out, plan.to_csv())?;
    Ok(())
}

fn coefficient_rows(model: &SavedModel) -> Result<Vec<Vec<String>>, Failure> {
    let mut rows = Vec::new();
    for order in 1..=model.n_orders() {
        for (j, b) in model.coefficients(order)?.iter().enumerate() {
            rows.push(vec![order.to_string(), (j + 1).to_string(), format_number(*b)]);
        }
    }
    Ok(rows)
}

fn cmd_fit(args: FitArgs) -> Outcome {
    let (x, y) = read_data(&args.data)?;
    let saved = if args.model.method.is_latent() {
        let spec = penalty_spec(&args.model, x.n_cols())?;
        let model = fit(&x, &y, &spec, args.ncomp)?;
        if model.truncated() {
            eprintln!(
                "note: stopped at {} of {} components (rank exhausted)",
                model.n_components(),
                model.requested_components()
            );
        }
        SavedModel::Latent(model)
    } else {
        SavedModel::Baseline(BaselineModel::fit(&x, &y, baseline_method(&args.model)?)?)
    };
    fs::create_dir_all(&args.out_dir)?;
    fs::write(args.out_dir.join("model.json"), saved.to_json()?)?;
    write_table(
        args.out_dir.join("coefficients.csv"),
        &["order", "variable", "beta"],
        &coefficient_rows(&saved)?,
    )?;
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Outcome {
    let model = SavedModel::from_json(&fs::read_to_string(&args.model)?)?;
    let x = read_matrix(&args.x, args.header)?;
    let order = args.ncomp.unwrap_or(model.n_orders());
    if order == 0 || order > model.n_orders() {
        return Err(Failure::Usage(format!("--ncomp must lie in 1..={}", model.n_orders())));
    }
    write_vector(&args.out, &model.predict(&x, order)?)?;
    Ok(())
}

fn cmd_cv(args: CvArgs) -> Outcome {
    let (x, y) = read_data(&args.data)?;
    let spec = penalty_spec(&args.model, x.n_cols())?;
    let plan = CvPlan {
        n_splits: args.splits,
        calibration_fraction: args.fraction,
        seed: args.seed,
        splitter: splitter(args.splitter, args.cal_groups),
    };
    plan.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let selection = select_components(&x, &y, &spec, args.max_ncomp, &plan)?;
    let rows: Vec<Vec<String>> = selection
        .table
        .iter()
        .map(|r| {
            vec![
                r.order.to_string(),
                format_number(r.mean_mse),
                format_number(r.std_mse),
                r.n_splits.to_string(),
            ]
        })
        .collect();
    fs::create_dir_all(&args.out_dir)?;
    write_table(
        args.out_dir.join("mse_table.csv"),
        &["order", "mean_mse", "std_mse", "n_splits"],
        &rows,
    )?;
    println!("{}", selection.best);
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Outcome {
    let (data, default_shrink, default_methods) = match args.scenario {
        Scenario::Dsim | Scenario::DsimBar => {
            let bar = matches!(args.scenario, Scenario::DsimBar);
            let recipe = if bar {
                SimulationRecipe::dsim_bar(args.seed)
            } else {
                SimulationRecipe::dsim(args.seed)
            };
            let sim = simulate(&recipe)?;
            let data = BenchmarkData {
                x: sim.x,
                y: sim.y,
                active_set: Some(recipe.active_set),
                label: if bar { "dsim-bar" } else { "dsim" }.into(),
            };
            if bar {
                (data, 0.6, vec![Method::Pls, Method::DualLs, Method::Ols])
            } else {
                let methods = vec![Method::Pls, Method::DualLasso, Method::DualRidge, Method::Ridge, Method::Lasso];
                (data, 0.99, methods)
            }
        }
        Scenario::File => {
            let (x, y) = (args.x.as_deref(), args.y.as_deref());
            let data = BenchmarkData {
                x: read_matrix(x.expect("required by clap"), args.header)?,
                y: read_vector(y.expect("required by clap"), args.header)?,
                active_set: None,
                label: "file".into(),
            };
            (data, 0.99, vec![Method::Pls, Method::DualLasso, Method::DualRidge, Method::Ridge, Method::Lasso])
        }
    };
    let mut data = data;
    if args.sg {
        data.x = savitzky_golay_derivative(&data.x, args.sg_window, args.sg_degree)
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let config = BenchmarkConfig {
        methods: if args.methods.is_empty() { default_methods } else { args.methods },
        shrink: args.shrink.unwrap_or(default_shrink),
        m_max: args.max_ncomp,
        order: args.order,
        calibration_fraction: args.fraction,
        splitter: splitter(args.splitter, args.cal_groups),
        seed: args.seed,
        cv_splits: args.cv_splits,
        n_groups: args.groups,
        nu2: args.nu2,
        ridge_grid: None,
        lasso_grid: None,
    };
    let report = run_benchmark(&data, &config).map_err(|e| match e {
        Error::InvalidParameter { .. } => Failure::Usage(e.to_string()),
        other => Failure::Lib(other),
    })?;
    report.write(&args.out_dir)?;
    for o in &report.methods {
        if let Some(err) = &o.error {
            eprintln!("{}: {err}", o.method);
        }
    }
    Ok(())
}

/// Splices flags from `--config` right after the subcommand, so anything
/// given on the command line comes later and wins.
fn expand_config(raw: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let mut args = Vec::with_capacity(raw.len());
    let mut config = None;
    let mut iter = raw.into_iter();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            match iter.next() {
                Some(path) => config = Some(PathBuf::from(path)),
                None => args.push(arg),
            }
        } else if let Some(path) = text.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else {
            args.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(args);
    };
    let flags = config_flags(&path)?;
    let at = args
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map_or(args.len(), |i| i + 2);
    args.splice(at..at, flags);
    Ok(args)
}

fn config_flags(path: &Path) -> Result<Vec<OsString>, Failure> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::Json)?;
    let serde_json::Value::Object(map) = value else {
        return Err(Failure::Usage(format!("{}: config must be a JSON object", path.display())));
    };
    let mut flags = Vec::new();
    for (key, value) in map {
        let flag = OsString::from(format!("--{}", key.replace('_', "-")));
        let rendered = match value {
            serde_json::Value::Null | serde_json::Value::Bool(false) => continue,
            serde_json::Value::Bool(true) => {
                flags.push(flag);
                continue;
            }
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Array(items) => items
                .iter()
                .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string))
                .collect::<Vec<_>>()
                .join(","),
            serde_json::Value::Object(_) => {
                return Err(Failure::Usage(format!("config key `{key}` must not be an object")))
            }
        };
        flags.push(flag);
        flags.push(rendered.into());
    }
    Ok(flags)
}

fn dispatch(args: Vec<OsString>) -> Outcome {
    let cli = match Cli::try_parse_from(expand_config(args)?) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return Err(Failure::Clap(e.exit_code()));
        }
    };
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Split(a) => cmd_split(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    }
}

/// Exit status: 2 usage, 3 input or output, 4 numerical failure.
fn run(args: Vec<OsString>) -> u8 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(Failure::Clap(code)) => code as u8,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            2
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            if e.is_io() {
                3
            } else if e.is_numeric() {
                4
            } else {
                2
            }
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os().collect()))
}
