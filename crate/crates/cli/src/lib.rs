//! Subcommands of the `migflow` binary. Each command loads and validates its
//! inputs, calls into `migration_core`, and writes its artifacts into the
//! output directory only once everything has succeeded.

use std::fs;
use std::path::{Path, PathBuf};

use migration_core::calibration::{coupling_from_lambda, CalibrationResult, FittedParams};
use migration_core::classical::economic_distance_matrix;
use migration_core::dynamics::population_drift;
use migration_core::io::{self, format_number};
use migration_core::{
    derive_charges, fit_coulomb_coupling, fit_gravity_params, validate_scenario, DistanceMatrix, Error, FlowMatrix,
    FlowModel, NpvTable, Region, Scenario, ScenarioConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for degenerate computations, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_degenerate() => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Inputs shared by validate, flows and simulate.
#[derive(Debug, Clone)]
pub struct ScenarioPaths {
    pub regions: PathBuf,
    pub distances: Option<PathBuf>,
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    Coulomb,
    Gravity,
}

#[derive(Debug, Clone)]
pub struct CalibrateArgs {
    pub regions: PathBuf,
    pub distances: Option<PathBuf>,
    pub observed: PathBuf,
    pub model: FitModel,
    /// Charge rule, permissiveness and economic-distance coefficients;
    /// defaults apply without it.
    pub config: Option<PathBuf>,
    pub out: PathBuf,
}

fn load_distances(regions: &[Region], path: Option<&Path>) -> CliResult<DistanceMatrix> {
    Ok(match path {
        Some(p) => io::load_distance_matrix(p)?,
        None => io::distances_from_positions(regions)?,
    })
}

fn validated(config: &ScenarioConfig, regions: &[Region], distances: &DistanceMatrix) -> CliResult<Scenario> {
    validate_scenario(config, regions, distances).map_err(|r| CliError::Core(Error::Validation(r)))
}

/// Parses and validates a scenario, loading the NPV table when the model
/// needs one.
pub fn load_scenario(paths: &ScenarioPaths) -> CliResult<(Scenario, Option<NpvTable>)> {
    let config = io::load_config(&paths.config)?;
    let regions = io::load_regions(&paths.regions)?;
    let distances = load_distances(&regions, paths.distances.as_deref())?;
    let scenario = validated(&config, &regions, &distances)?;
    let npv = match (&config.npv, config.model.is_npv_gated()) {
        (Some(src), true) => Some(io::load_npv_table(&src.table, &src.benefits_column, &src.costs_column)?),
        _ => None,
    };
    Ok((scenario, npv))
}

/// Writes every file into a scratch directory inside `out`, then renames
/// them into place. Nothing lands in `out` if any write fails.
pub fn commit_outputs(out: &Path, files: &[(&str, String)]) -> CliResult<()> {
    let io_err = |path: &Path, source| {
        CliError::Core(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let scratch = tempfile::Builder::new()
        .prefix(".migflow-")
        .tempdir_in(out)
        .map_err(|e| io_err(out, e))?;
    for (name, contents) in files {
        io::write_file(&scratch.path().join(name), contents)?;
    }
    for (name, _) in files {
        let from = scratch.path().join(name);
        let to = out.join(name);
        fs::rename(&from, &to).map_err(|e| io_err(&to, e))?;
    }
    Ok(())
}

pub fn cmd_validate(paths: &ScenarioPaths) -> CliResult<String> {
    let (scenario, npv) = load_scenario(paths)?;
    let mut summary = format!(
        "scenario ok: {} regions, model {:?}",
        scenario.regions().len(),
        scenario.config().model
    );
    if let Some(t) = npv {
        summary.push_str(&format!(", {} NPV pairs", t.len()));
    }
    Ok(summary)
}

/// One-shot flow matrix of the configured model.
pub fn compute_flows(scenario: &Scenario, npv: Option<NpvTable>) -> CliResult<FlowMatrix> {
    let model = FlowModel::new(scenario, npv)?;
    let charges = model.charges(scenario.regions())?;
    Ok(model.flows(scenario.regions(), &charges)?)
}

fn flow_summary(flows: &FlowMatrix) -> String {
    let n = flows.len();
    let mut corridors: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, flows.get(i, j)))
        .filter(|&(_, _, m)| m > 0.0)
        .collect();
    corridors.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut out = format!("total_flow = {}\n", format_number(flows.total()));
    out.push_str(&format!("nonzero_corridors = {}\n", corridors.len()));
    out.push_str("top corridors:\n");
    for (i, j, m) in corridors.iter().take(5) {
        out.push_str(&format!(
            "  {} -> {}: {}\n",
            flows.ids()[*i],
            flows.ids()[*j],
            format_number(*m)
        ));
    }
    out
}

pub fn cmd_flows(paths: &ScenarioPaths, out: &Path) -> CliResult<String> {
    let (scenario, npv) = load_scenario(paths)?;
    let flows = compute_flows(&scenario, npv)?;
    let summary = flow_summary(&flows);
    commit_outputs(
        out,
        &[
            ("flows.csv", io::flow_matrix_to_csv(&flows)),
            ("summary.txt", summary.clone()),
        ],
    )?;
    Ok(summary)
}

pub const CONSERVATION_TOLERANCE: f64 = 1e-9;

pub fn cmd_simulate(paths: &ScenarioPaths, out: &Path) -> CliResult<String> {
    let (scenario, npv) = load_scenario(paths)?;
    if scenario.config().steps == 0 {
        return Err(CliError::Usage("simulate needs steps >= 1 in the config".into()));
    }
    let model = FlowModel::new(&scenario, npv)?;
    let (series, last) = model.run(scenario.regions())?;
    let drift = population_drift(&series);
    commit_outputs(
        out,
        &[
            ("timeseries.csv", io::timeseries_to_csv(&series)),
            ("final_state.csv", io::regions_to_csv(&last.regions)),
            ("flows_cumulative.csv", io::flow_matrix_to_csv(&last.cumulative)),
        ],
    )?;
    let verdict = if drift < CONSERVATION_TOLERANCE { "ok" } else { "FAILED" };
    Ok(format!(
        "simulated {} steps over {} regions\npopulation conservation: drift {:e} (< {:e}) {verdict}",
        last.step,
        last.regions.len(),
        drift,
        CONSERVATION_TOLERANCE
    ))
}

pub fn fit_report(result: &CalibrationResult, epsilon: Option<f64>) -> String {
    let mut out = String::new();
    match &result.params {
        FittedParams::Coulomb { lambda } => {
            out.push_str("model = coulomb\n");
            out.push_str(&format!("lambda = {}\n", format_number(*lambda)));
            if let Some(eps) = epsilon {
                out.push_str(&format!("epsilon = {}\n", format_number(eps)));
                out.push_str(&format!("k = {}\n", format_number(coupling_from_lambda(*lambda, eps))));
            }
        }
        FittedParams::Gravity(p) => {
            out.push_str("model = gravity\n");
            for (name, v) in [
                ("G", p.g),
                ("alpha", p.alpha),
                ("beta", p.beta),
                ("gamma", p.gamma),
                ("theta", p.theta),
                ("eta", p.eta),
            ] {
                out.push_str(&format!("{name} = {}\n", format_number(v)));
            }
        }
    }
    let d = &result.diagnostics;
    out.push_str(&format!("rss = {}\n", format_number(result.rss)));
    out.push_str(&format!("pairs = {}\n", d.pair_count));
    out.push_str(&format!("degenerate_pairs = {}\n", d.degenerate_pair_count));
    out.push_str(&format!("clamped = {}\n", d.clamped));
    out
}

fn residuals_csv(result: &CalibrationResult) -> String {
    let mut out = String::from("origin,destination,observed,predicted,residual\n");
    for r in &result.residuals {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.origin,
            r.destination,
            format_number(r.observed),
            format_number(r.predicted),
            format_number(r.residual())
        ));
    }
    out
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> CliResult<String> {
    let config = match &args.config {
        Some(p) => io::load_config(p)?,
        None => ScenarioConfig::default(),
    };
    let regions = io::load_regions(&args.regions)?;
    let distances = load_distances(&regions, args.distances.as_deref())?;
    let scenario = validated(&config, &regions, &distances)?;
    let observed = io::load_flow_matrix(&args.observed)?;

    let result = match args.model {
        FitModel::Coulomb => {
            let charges = derive_charges(scenario.regions(), config.charge_source, config.charge_threshold)?;
            fit_coulomb_coupling(&observed, &charges, scenario.distances())?
        }
        FitModel::Gravity => {
            let economic = economic_distance_matrix(scenario.distances(), &config.distance)?;
            fit_gravity_params(&observed, scenario.regions(), &economic)?
        }
    };
    let epsilon = args.config.as_ref().map(|_| config.epsilon);
    let report = fit_report(&result, epsilon);
    commit_outputs(
        &args.out,
        &[("fit.txt", report.clone()), ("residuals.csv", residuals_csv(&result))],
    )?;
    Ok(report)
}
