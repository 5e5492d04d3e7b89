//! Sweep orchestration: one optimization per (ansatz, depth, initial state).

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qoca_core::ansatz::{self, AnsatzKind, Circuit, CompileOptions};
use qoca_core::sim::{self, GroundSpace, Statevector};
use qoca_core::vqe::{self, Objective, OptimizationTrace, TraceOptions, TraceRecord};

use crate::config::{InitParams, InitialStateConfig, Plan, StrategyName};
use crate::output;
use crate::CliError;

/// One line of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub ansatz: String,
    pub depth: usize,
    pub strategy: StrategyName,
    pub initial_state: String,
    pub max_fidelity: Option<f64>,
    pub best_energy: Option<f64>,
    pub exact_energy: f64,
    pub n_evals: usize,
    pub n_params_per_layer: usize,
    pub n_cnot_per_layer: usize,
    pub stop: Option<String>,
    pub trace_file: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<SummaryRow>,
    pub ground: GroundSpace,
    pub output_dir: PathBuf,
}

impl RunOutcome {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    kind: AnsatzKind,
    depth: usize,
    init: usize,
}

/// Runs every point of `plan`, writing traces, `summary.json` and the plot
/// CSVs into `out_dir`. Failing points are recorded in their summary row
/// and do not stop the sweep.
pub fn run_plan(plan: &Plan, out_dir: &Path, jobs: usize) -> Result<RunOutcome, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let ground = sim::exact_ground_space(&plan.hamiltonian, plan.target.degeneracy_tol)
        .map_err(|e| CliError::Run(format!("exact diagonalization: {e}")))?;
    let target = match plan.target.pin {
        Some(i) => ground
            .pinned(i)
            .map_err(|e| CliError::Config(format!("target.pin: {e}")))?,
        None => ground.clone(),
    };
    log::info!(
        "ground energy {} (degeneracy {}, gap {:?})",
        ground.energy,
        ground.degeneracy(),
        ground.gap
    );

    let mut points = Vec::new();
    for &kind in &plan.kinds {
        for init in 0..plan.initial_states.len() {
            for &depth in &plan.depths {
                points.push(Point { kind, depth, init });
            }
        }
    }
    let multi_init = plan.initial_states.len() > 1;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Run(format!("thread pool: {e}")))?;
    let results: Vec<(SummaryRow, Vec<TraceRecord>)> = pool.install(|| {
        points
            .par_iter()
            .map(|p| run_point(plan, &target, ground.energy, *p, multi_init, out_dir))
            .collect()
    });

    let mut rows = Vec::with_capacity(results.len());
    let mut series = Vec::new();
    for (row, records) in results {
        if row.error.is_none() && row.depth > 0 {
            series.push((series_name(&row), records));
        }
        rows.push(row);
    }
    output::write_summary(&out_dir.join("summary.json"), &rows)?;
    output::write_plot_data(out_dir, &series, &rows)?;
    Ok(RunOutcome {
        rows,
        ground,
        output_dir: out_dir.to_path_buf(),
    })
}

fn series_name(row: &SummaryRow) -> String {
    format!("{}_d{}_{}", row.ansatz, row.depth, row.initial_state)
}

fn run_point(
    plan: &Plan,
    target: &GroundSpace,
    exact: f64,
    p: Point,
    multi_init: bool,
    out_dir: &Path,
) -> (SummaryRow, Vec<TraceRecord>) {
    let (init_cfg, init_state) = &plan.initial_states[p.init];
    let mut row = SummaryRow {
        ansatz: p.kind.name().to_string(),
        depth: p.depth,
        strategy: plan.strategy_name,
        initial_state: init_cfg.label(),
        max_fidelity: None,
        best_energy: None,
        exact_energy: exact,
        n_evals: 0,
        n_params_per_layer: 0,
        n_cnot_per_layer: 0,
        stop: None,
        trace_file: None,
        error: None,
    };
    match execute(plan, target, p, init_cfg, init_state) {
        Ok((circuit, trace)) => {
            let res = ansatz::count_resources(&circuit, CompileOptions::default());
            row.n_params_per_layer = res.params_per_layer;
            row.n_cnot_per_layer = res.cnots_per_layer;
            row.max_fidelity = trace.max_fidelity;
            row.best_energy = Some(trace.best_energy);
            row.n_evals = trace.n_evals;
            row.stop = Some(format!("{:?}", trace.stop).to_lowercase());
            if p.depth > 0 {
                let name = trace_file_name(p.kind, p.depth, init_cfg, multi_init);
                let path = out_dir.join(&name);
                match output::write_trace(&path, &trace.records) {
                    Ok(()) => row.trace_file = Some(name),
                    Err(e) => row.error = Some(e.to_string()),
                }
            }
            log::info!(
                "{} d={} {}: max fidelity {:?}, energy {} after {} evaluations",
                row.ansatz,
                row.depth,
                row.initial_state,
                row.max_fidelity,
                trace.best_energy,
                trace.n_evals
            );
            (row, trace.records)
        }
        Err(e) => {
            log::error!("{} d={} {}: {e}", row.ansatz, row.depth, row.initial_state);
            row.error = Some(e.to_string());
            (row, Vec::new())
        }
    }
}

pub fn trace_file_name(kind: AnsatzKind, depth: usize, init: &InitialStateConfig, multi_init: bool) -> String {
    if multi_init {
        format!("trace_{}_d{}_{}.csv", kind.name(), depth, init.label())
    } else {
        format!("trace_{}_d{}.csv", kind.name(), depth)
    }
}

pub fn build_circuit(plan: &Plan, kind: AnsatzKind, depth: usize) -> qoca_core::Result<Circuit> {
    if kind == AnsatzKind::Hea {
        return ansatz::build_hea(plan.hamiltonian.num_qubits(), depth);
    }
    let shape = plan
        .ansatz_lattice
        .as_ref()
        .expect("validated plans give Hamiltonian ansätze a lattice");
    ansatz::build_for_lattice(kind, shape, depth, plan.options)
}

fn execute(
    plan: &Plan,
    target: &GroundSpace,
    p: Point,
    init_cfg: &InitialStateConfig,
    init_state: &Statevector,
) -> Result<(Circuit, OptimizationTrace), CliError> {
    let run_err = |e: qoca_core::Error| CliError::Run(e.to_string());
    let circuit = build_circuit(plan, p.kind, p.depth).map_err(run_err)?;
    let sites = match &plan.ansatz_lattice {
        Some(l) => l.num_sites(),
        None => plan.hamiltonian.num_qubits() / 2,
    };
    let obj = Objective::new(circuit.clone(), plan.hamiltonian.clone(), init_state.clone()).map_err(run_err)?;
    if p.depth == 0 {
        return Ok((circuit, bare_state_trace(&obj, target, sites).map_err(run_err)?));
    }
    let random = match plan.init_params {
        InitParams::Auto => p.kind == AnsatzKind::ShortQoca,
        InitParams::Zeros => false,
        InitParams::Random => true,
    };
    let theta0 = vqe::initial_parameters(obj.num_params(), random, plan.optimizer.seed);
    log::debug!(
        "{} d={} {}: {} parameters",
        p.kind,
        p.depth,
        init_cfg.label(),
        obj.num_params()
    );
    let opts = TraceOptions {
        record_every: plan.record_every,
        params_every: 0,
        sites,
    };
    let trace = vqe::run_traced(&obj, Some(target), &plan.optimizer, &theta0, opts).map_err(run_err)?;
    Ok((circuit, trace))
}

fn bare_state_trace(obj: &Objective, target: &GroundSpace, sites: usize) -> qoca_core::Result<OptimizationTrace> {
    let state = &obj.initial_state;
    let energy = obj.energy_of(state)?;
    let fid = sim::fidelity(state, target)?;
    Ok(OptimizationTrace {
        records: vec![TraceRecord {
            iter: 0,
            energy,
            fidelity: Some(fid),
            occupancy: sim::occupation_number(state) / sites.max(1) as f64,
            params: None,
        }],
        best_energy: energy,
        best_params: Vec::new(),
        best_fidelity: Some(fid),
        max_fidelity: Some(fid),
        n_evals: 0,
        stop: vqe::StopReason::NoParameters,
    })
}
