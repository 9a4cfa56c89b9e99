use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ndarray::{Array1, Array2, Axis};
use outerproj::data::{
    generate_network, generate_response, load_graph, load_matrix_csv, load_vector_csv,
    signed_graph_for_example, true_regressor, write_graph, write_matrix_csv, write_vector_csv,
    CsvOptions, Example, NetworkParams,
};
use outerproj::{
    project_level_set_observed, solve_path, ConstraintKind, ConstraintSpec, Error, FeatureGraph,
    ProjectionOptions, RiskModel, StopReason, Task,
};
use serde::Serialize;

use crate::args::{
    Command, ConstraintArg, DataArgs, EvalArgs, ProjectArgs, SolveArgs, SynthArgs, TaskArg,
};
use crate::experiment::{Experiment, ExperimentReport, Metric};
use crate::manifest::{unix_now, RunManifest, MANIFEST_FILE};
use crate::output::OutputDir;

/// Offset between the design-matrix stream and the response-noise stream.
const NOISE_STREAM: u64 = 0x5151_0000_0000;

/// Runs a command and writes its manifest. Replays substitute the recorded
/// command.
pub fn run(command: Command) -> Result<PathBuf> {
    let command = match command {
        Command::Replay(r) => {
            let manifest = RunManifest::load(&r.manifest)?;
            let mut args = manifest.args;
            if let Some(out) = r.out {
                *out_dir_mut(&mut args).context("manifest records a replay")? = out;
            }
            args
        }
        other => other,
    };
    let started = unix_now();
    let (resolved, out) = match command {
        Command::Synth(a) => synth(a)?,
        Command::Solve(a) => solve(a)?,
        Command::Project(a) => project(a)?,
        Command::Eval(a) => eval(a)?,
        Command::Replay(_) => unreachable!("replays are unwrapped above"),
    };
    let mut out = out;
    let manifest = RunManifest::new(resolved, started, out.written().to_vec());
    out.write_json(MANIFEST_FILE, &manifest)?;
    Ok(out.root().to_path_buf())
}

fn out_dir_mut(command: &mut Command) -> Option<&mut PathBuf> {
    match command {
        Command::Synth(a) => Some(&mut a.out.out),
        Command::Solve(a) => Some(&mut a.out.out),
        Command::Project(a) => Some(&mut a.out.out),
        Command::Eval(a) => Some(&mut a.out.out),
        Command::Replay(_) => None,
    }
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidConfig(msg.into()).into()
}

fn canonical(path: &Path) -> Result<PathBuf> {
    path.canonicalize().map_err(|e| Error::Io(e).into()).map_err(|e: anyhow::Error| {
        e.context(format!("input {}", path.display()))
    })
}

fn task_of(task: TaskArg, data: &DataArgs) -> Task {
    match task {
        TaskArg::Regression => Task::Regression,
        TaskArg::Classification => Task::Classification(data.loss.into()),
    }
}

/// Expands `--data` into explicit file paths and makes every path absolute.
/// Returns the data directory, if one was given.
fn resolve_data(data: &mut DataArgs) -> Result<Option<PathBuf>> {
    let dir = data.data.take().map(|d| canonical(&d)).transpose()?;
    if let Some(dir) = &dir {
        data.x.get_or_insert_with(|| dir.join("X.csv"));
        data.y.get_or_insert_with(|| dir.join("y.csv"));
        if data.graph.is_none() && dir.join("graph.tsv").is_file() {
            data.graph = Some(dir.join("graph.tsv"));
        }
    }
    let x = data.x.as_deref().ok_or_else(|| config_error("--x or --data is required"))?;
    data.x = Some(canonical(x)?);
    let y = data.y.as_deref().ok_or_else(|| config_error("--y or --data is required"))?;
    data.y = Some(canonical(y)?);
    data.graph = data.graph.as_deref().map(canonical).transpose()?;
    Ok(dir)
}

struct Loaded {
    x: Array2<f64>,
    y: Array1<f64>,
    graph: Option<FeatureGraph>,
}

/// Call after [`resolve_data`].
fn load_data(data: &DataArgs) -> Result<Loaded> {
    let opts = CsvOptions { has_header: data.header };
    let x = load_matrix_csv(data.x.as_ref().expect("resolved"), opts)?;
    let y = load_vector_csv(data.y.as_ref().expect("resolved"))?;
    let graph = data.graph.as_ref().map(|g| load_graph(g, x.ncols())).transpose()?;
    Ok(Loaded { x, y, graph })
}

fn constraint(kind: ConstraintArg, graph: Option<&FeatureGraph>, eta: f64) -> Result<ConstraintSpec> {
    let kind: ConstraintKind = kind.into();
    let graph = if kind.needs_graph() { graph.cloned() } else { None };
    Ok(ConstraintSpec::new(kind, graph, eta)?)
}

pub struct SynthData {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub graph: FeatureGraph,
    pub signed_graph: FeatureGraph,
    pub w_true: Array1<f64>,
}

/// The dataset `synth` writes, without touching the file system.
pub fn synth_data(params: &NetworkParams, example: Example, task: TaskArg) -> Result<SynthData> {
    params.validate()?;
    let (x, graph) = generate_network(params)?;
    let w_true = true_regressor(example, x.ncols())?;
    let signed_graph = signed_graph_for_example(example, x.ncols())?;
    let mut y = generate_response(&x, &w_true, params.noise_sigma, params.seed.wrapping_add(NOISE_STREAM))?;
    if task == TaskArg::Classification {
        y.mapv_inplace(|v| if v >= 0.0 { 1.0 } else { -1.0 });
    }
    Ok(SynthData { x, y, graph, signed_graph, w_true })
}

fn synth(mut a: SynthArgs) -> Result<(Command, OutputDir)> {
    let mut out = OutputDir::create(&a.out.out)?;
    a.out.out = out.root().to_path_buf();
    let params = NetworkParams {
        m: a.m,
        n_reg: a.n_reg,
        n_g: a.n_g,
        correlation: a.correlation,
        noise_sigma: a.sigma,
        seed: a.seed,
    };
    let SynthData { x, y, graph, signed_graph: signed, w_true: w } =
        synth_data(&params, Example::from_number(a.example)?, a.task)?;

    out.write_with("X.csv", |p| Ok(write_matrix_csv(p, &x)?))?;
    out.write_with("y.csv", |p| Ok(write_vector_csv(p, &y)?))?;
    out.write_with("graph.tsv", |p| Ok(write_graph(p, &graph)?))?;
    out.write_with("signed_graph.tsv", |p| Ok(write_graph(p, &signed)?))?;
    out.write_with("w_true.csv", |p| Ok(write_vector_csv(p, &w)?))?;
    println!(
        "wrote {} samples x {} features ({} nonzero true coefficients) to {}",
        x.nrows(),
        x.ncols(),
        w.iter().filter(|v| **v != 0.0).count(),
        out.root().display()
    );
    Ok((Command::Synth(a), out))
}

#[derive(Debug, Serialize)]
struct TraceRow {
    eta: f64,
    iteration: usize,
    risk: f64,
    constraint_value: f64,
    nonzeros: usize,
    inner_iterations: usize,
}

#[derive(Debug, Serialize)]
struct RunMetrics {
    eta: f64,
    stop_reason: StopReason,
    outer_iterations: usize,
    risk: f64,
    constraint_value: f64,
    nonzeros: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    train_mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_pmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train_auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_auc: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SolveMetrics {
    command: &'static str,
    task: Task,
    constraint: &'static str,
    samples: usize,
    features: usize,
    beta: f64,
    step: f64,
    runs: Vec<RunMetrics>,
}

fn solve(mut a: SolveArgs) -> Result<(Command, OutputDir)> {
    resolve_data(&mut a.data)?;
    a.test_x = a.test_x.as_deref().map(canonical).transpose()?;
    a.test_y = a.test_y.as_deref().map(canonical).transpose()?;
    let grid = match a.eta {
        Some(eta) => vec![eta],
        None => a.grid.resolve().map_err(|e| config_error(e.to_string()))?,
    };
    let config = a.solver.config();
    config.validate()?;
    let data = load_data(&a.data)?;
    let test = match (&a.test_x, &a.test_y) {
        (Some(tx), Some(ty)) => Some((
            load_matrix_csv(tx, CsvOptions { has_header: a.data.header })?,
            load_vector_csv(ty)?,
        )),
        _ => None,
    };
    let task = task_of(a.data.task, &a.data);
    let spec = constraint(a.constraint, data.graph.as_ref(), grid[0])?;
    let features = data.x.ncols();
    let samples = data.x.nrows();
    let model = RiskModel::new(data.x, data.y, task)?;
    let path = solve_path(&model, &spec, &grid, &config)?;

    let metric = Metric::for_task(task);
    let mut runs = Vec::with_capacity(path.len());
    let mut trace = Vec::new();
    for point in &path {
        let r = &point.result;
        let last = r.final_record();
        let train = metric.evaluate(model.design(), model.targets(), &r.w_final)?;
        let held_out = test.as_ref().map(|(tx, ty)| metric.evaluate(tx, ty, &r.w_final)).transpose()?;
        let regression = metric == Metric::Pmse;
        runs.push(RunMetrics {
            eta: point.eta,
            stop_reason: r.stop_reason,
            outer_iterations: r.outer_iterations(),
            risk: last.risk,
            constraint_value: last.constraint_value,
            nonzeros: last.nonzeros,
            train_mse: regression.then_some(train),
            test_pmse: held_out.filter(|_| regression),
            train_auc: (!regression).then_some(train),
            test_auc: held_out.filter(|_| !regression),
        });
        trace.extend(r.trace.iter().map(|rec| TraceRow {
            eta: point.eta,
            iteration: rec.iteration,
            risk: rec.risk,
            constraint_value: rec.constraint_value,
            nonzeros: rec.nonzeros,
            inner_iterations: rec.inner_iterations,
        }));
    }

    let a_out = a.out.out.clone();
    let mut out = OutputDir::create(&a_out)?;
    a.out.out = out.root().to_path_buf();
    let last = &path.last().expect("grid is non-empty").result;
    out.write_with("w.csv", |p| Ok(write_vector_csv(p, &last.w_final)?))?;
    if path.len() > 1 {
        let mut rows = Array2::zeros((path.len(), features + 1));
        for (mut row, point) in rows.axis_iter_mut(Axis(0)).zip(&path) {
            row[0] = point.eta;
            row.slice_mut(ndarray::s![1..]).assign(&point.result.w_final);
        }
        out.write_with("path.csv", |p| Ok(write_matrix_csv(p, &rows)?))?;
    }
    out.write_rows("trace.csv", &trace)?;
    out.write_json(
        "metrics.json",
        &SolveMetrics {
            command: "solve",
            task,
            constraint: spec.kind().name(),
            samples,
            features,
            beta: last.beta,
            step: last.step,
            runs,
        },
    )?;
    let final_run = path.last().expect("grid is non-empty");
    let rec = final_run.result.final_record();
    println!(
        "eta={} iterations={} risk={} constraint={} nonzeros={} stop={:?}",
        final_run.eta,
        final_run.result.outer_iterations(),
        rec.risk,
        rec.constraint_value,
        rec.nonzeros,
        final_run.result.stop_reason
    );
    Ok((Command::Solve(a), out))
}

#[derive(Debug, Serialize)]
struct ProjectionTraceRow {
    iteration: usize,
    distance_from_start: f64,
    violation: f64,
}

#[derive(Debug, Serialize)]
struct ProjectionMetrics {
    command: &'static str,
    constraint: &'static str,
    eta: f64,
    outcome: outerproj::ProjectionOutcome,
    iterations_used: usize,
    final_violation: f64,
    constraint_value: f64,
    distance_from_start: f64,
}

fn project(mut a: ProjectArgs) -> Result<(Command, OutputDir)> {
    a.input = canonical(&a.input)?;
    a.graph = a.graph.as_deref().map(canonical).transpose()?;
    let opts = ProjectionOptions {
        max_inner_iters: a.max_inner_iters,
        feasibility_tolerance: a.feasibility_tolerance,
        distance_tolerance: a.distance_tolerance,
    };
    opts.validate()?;
    let p0 = load_vector_csv(&a.input)?;
    let graph = a.graph.as_ref().map(|g| load_graph(g, p0.len())).transpose()?;
    let spec = constraint(a.constraint, graph.as_ref(), a.eta)?;

    let mut trace = vec![ProjectionTraceRow {
        iteration: 0,
        distance_from_start: 0.0,
        violation: (spec.value(&p0)? - a.eta).max(0.0),
    }];
    let mut trace_error = None;
    let projection = project_level_set_observed(&spec, &p0, &opts, |k, p| {
        if a.trace {
            let d = p - &p0;
            match spec.value(p) {
                Ok(v) => trace.push(ProjectionTraceRow {
                    iteration: k,
                    distance_from_start: d.dot(&d).sqrt(),
                    violation: (v - a.eta).max(0.0),
                }),
                Err(e) => trace_error = Some(e),
            }
        }
    })?;
    if let Some(e) = trace_error {
        return Err(e.into());
    }
    let moved = &projection.point - &p0;
    let metrics = ProjectionMetrics {
        command: "project",
        constraint: spec.kind().name(),
        eta: a.eta,
        outcome: projection.status.outcome,
        iterations_used: projection.status.iterations_used,
        final_violation: projection.status.final_violation,
        constraint_value: spec.value(&projection.point)?,
        distance_from_start: moved.dot(&moved).sqrt(),
    };

    let mut out = OutputDir::create(&a.out.out)?;
    a.out.out = out.root().to_path_buf();
    out.write_with("projected.csv", |p| Ok(write_vector_csv(p, &projection.point)?))?;
    if a.trace {
        out.write_rows("projection_trace.csv", &trace)?;
    }
    out.write_json("metrics.json", &metrics)?;
    println!(
        "iterations={} violation={} outcome={:?}",
        metrics.iterations_used, metrics.final_violation, metrics.outcome
    );
    Ok((Command::Project(a), out))
}

#[derive(Debug, Serialize)]
struct CurveRow<'a> {
    constraint: &'a str,
    eta: f64,
    mean: f64,
    std: f64,
}

#[derive(Debug, Serialize)]
struct EvalMetrics<'a> {
    command: &'static str,
    task: Task,
    #[serde(flatten)]
    report: &'a ExperimentReport,
}

fn eval(mut a: EvalArgs) -> Result<(Command, OutputDir)> {
    let dir = resolve_data(&mut a.data)?;
    if a.signed_graph.is_none() {
        a.signed_graph = dir.map(|d| d.join("signed_graph.tsv")).filter(|p| p.is_file());
    }
    a.signed_graph = a.signed_graph.as_deref().map(canonical).transpose()?;
    let grid = a.grid.resolve().map_err(|e| config_error(e.to_string()))?;
    let config = a.solver.config();
    config.validate()?;
    let data = load_data(&a.data)?;
    let signed = a.signed_graph.as_ref().map(|g| load_graph(g, data.x.ncols())).transpose()?;
    let task = task_of(a.data.task, &a.data);

    let mut constraints = Vec::with_capacity(a.constraints.len());
    for &c in &a.constraints {
        let graph = match c {
            ConstraintArg::SignedPairwiseDiff => signed.as_ref().or(data.graph.as_ref()),
            _ => data.graph.as_ref(),
        };
        constraints.push(constraint(c, graph, grid[0])?);
    }
    let experiment = Experiment {
        x: data.x,
        y: data.y,
        task,
        constraints,
        eta_grid: grid,
        config,
        folds: a.folds,
        train_fraction: a.train_fraction,
        split_seed: a.split_seed,
    };
    // validates the data before any work is spread over threads
    RiskModel::new(experiment.x.clone(), experiment.y.clone(), task)?;
    let report = experiment.run()?;

    let mut out = OutputDir::create(&a.out.out)?;
    a.out.out = out.root().to_path_buf();
    let curves: Vec<CurveRow> = report
        .constraints
        .iter()
        .flat_map(|c| {
            report.eta_grid.iter().zip(c.mean_by_eta.iter().zip(&c.std_by_eta)).map(|(&eta, (&mean, &std))| {
                CurveRow { constraint: &c.constraint, eta, mean, std }
            })
        })
        .collect();
    out.write_rows("curves.csv", &curves)?;
    out.write_json("metrics.json", &EvalMetrics { command: "eval", task, report: &report })?;
    for c in &report.constraints {
        println!("{}: best eta={} mean {:?}={}", c.constraint, c.best_eta, report.metric, c.best_mean);
    }
    Ok((Command::Eval(a), out))
}
