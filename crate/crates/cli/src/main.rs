use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qoca_cli::config::{
    self, AnsatzName, ExperimentConfig, InitialStateConfig, OrderName, Overrides, StrategyName, PRESETS,
};
use qoca_cli::{fmt_f64, run_plan, CliError};

#[derive(Parser)]
#[command(
    name = "qoca",
    version,
    about = "Statevector VQE workbench for Hubbard and molecular Hamiltonians"
)]
struct Cli {
    /// List the bundled experiment presets and exit.
    #[arg(long)]
    list_presets: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured (ansatz, depth, initial state) points.
    Run(RunArgs),
    /// Like `run`, with a bare initial-state row (d=0) added to every series.
    Sweep(RunArgs),
    /// Parse an interchange Hamiltonian and report its structure.
    CheckHamiltonian {
        file: PathBuf,
        #[arg(long)]
        num_qubits: Option<usize>,
    },
    /// List presets, or print one as TOML.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct RunArgs {
    /// Config file, or `preset:<name>`.
    config: String,
    #[arg(long, value_delimiter = ',')]
    ansatz: Option<Vec<String>>,
    /// Depth list such as `1-10` or `1,2,4`.
    #[arg(long)]
    depths: Option<String>,
    #[arg(long)]
    strategy: Option<StrategyArg>,
    #[arg(long)]
    order: Option<OrderArg>,
    /// Initial states: plus_all, omega_t1, omega_t2, omega_t, hartree_fock, bits:<bits>.
    #[arg(long, value_delimiter = ',')]
    initial_state: Option<Vec<String>>,
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long)]
    rho_begin: Option<f64>,
    #[arg(long)]
    rho_end: Option<f64>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    record_every: Option<usize>,
    /// Takes precedence over QOCA_OUT and the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads for independent sweep points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Validate the config and print the resolved TOML without running.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Full,
    Scalable,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    HoppingFirst,
    OnsiteFirst,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match (cli.list_presets, cli.command) {
        (true, _) => {
            list_presets();
            Ok(())
        }
        (false, Some(Command::Run(args))) => run(args, false),
        (false, Some(Command::Sweep(args))) => run(args, true),
        (false, Some(Command::CheckHamiltonian { file, num_qubits })) => check_hamiltonian(&file, num_qubits),
        (false, Some(Command::Presets { name: None })) => {
            list_presets();
            Ok(())
        }
        (false, Some(Command::Presets { name: Some(name) })) => match config::preset(&name) {
            Some(p) => {
                print!("{}", p.toml);
                Ok(())
            }
            None => Err(CliError::Config(format!("no preset named {name:?}"))),
        },
        (false, None) => Err(CliError::Config("no command given (try --help)".into())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn list_presets() {
    for p in PRESETS {
        println!("{:<24} {}", p.name, p.description);
    }
}

fn load_config(spec: &str) -> Result<ExperimentConfig, CliError> {
    match spec.strip_prefix("preset:") {
        Some(name) => {
            let p = config::preset(name).ok_or_else(|| CliError::Config(format!("no preset named {name:?}")))?;
            ExperimentConfig::from_toml(p.toml)
        }
        None => ExperimentConfig::load(Path::new(spec)),
    }
}

fn overrides(args: &RunArgs) -> Result<Overrides, CliError> {
    let kinds = args
        .ansatz
        .as_ref()
        .map(|v| {
            v.iter()
                .map(|s| AnsatzName::parse(s).ok_or_else(|| CliError::Config(format!("unknown ansatz {s:?}"))))
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let initial_states = args
        .initial_state
        .as_ref()
        .map(|v| {
            v.iter()
                .map(|s| {
                    InitialStateConfig::parse(s).ok_or_else(|| CliError::Config(format!("unknown initial state {s:?}")))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let output_dir = args
        .output_dir
        .clone()
        .or_else(|| std::env::var_os("QOCA_OUT").map(PathBuf::from));
    Ok(Overrides {
        kinds,
        depths: args.depths.as_deref().map(config::parse_depths).transpose()?,
        strategy: args.strategy.map(|s| match s {
            StrategyArg::Full => StrategyName::Full,
            StrategyArg::Scalable => StrategyName::Scalable,
        }),
        order: args.order.map(|o| match o {
            OrderArg::HoppingFirst => OrderName::HoppingFirst,
            OrderArg::OnsiteFirst => OrderName::OnsiteFirst,
        }),
        initial_states,
        max_evals: args.max_evals,
        rho_begin: args.rho_begin,
        rho_end: args.rho_end,
        method: args.method.clone(),
        seed: args.seed,
        record_every: args.record_every,
        output_dir,
    })
}

fn run(args: RunArgs, sweep: bool) -> Result<(), CliError> {
    let mut cfg = load_config(&args.config)?;
    cfg.apply(&overrides(&args)?);
    if sweep && !cfg.ansatz.depths.contains(&0) {
        cfg.ansatz.depths.insert(0, 0);
    }
    let plan = cfg.validate()?;
    if args.dry_run {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let outcome = run_plan(&plan, &cfg.output_dir, args.jobs)?;
    println!(
        "exact ground energy {} (degeneracy {})",
        fmt_f64(outcome.ground.energy),
        outcome.ground.degeneracy()
    );
    println!(
        "{:<6} {:>3} {:<22} {:>12} {:>24} {:>8} {:>6} {:>6}",
        "ansatz", "d", "initial", "max_fid", "best_energy", "evals", "n_th/d", "n_cx/d"
    );
    for r in &outcome.rows {
        match &r.error {
            None => println!(
                "{:<6} {:>3} {:<22} {:>12.8} {:>24} {:>8} {:>6} {:>6}",
                r.ansatz,
                r.depth,
                r.initial_state,
                r.max_fidelity.unwrap_or(f64::NAN),
                r.best_energy.map(fmt_f64).unwrap_or_default(),
                r.n_evals,
                r.n_params_per_layer,
                r.n_cnot_per_layer
            ),
            Some(e) => println!("{:<6} {:>3} {:<22} failed: {e}", r.ansatz, r.depth, r.initial_state),
        }
    }
    println!("wrote {}", outcome.output_dir.display());
    match outcome.failures() {
        0 => Ok(()),
        n => Err(CliError::Run(format!("{n} of {} runs failed", outcome.rows.len()))),
    }
}

fn check_hamiltonian(path: &Path, num_qubits: Option<usize>) -> Result<(), CliError> {
    let file = config::load_hamiltonian_file(path, num_qubits)?;
    let h = &file.sum;
    let n = h.num_qubits();
    println!("file        {}", path.display());
    println!("qubits      {n}");
    println!("terms       {}", h.len());
    println!("constant    {}", fmt_f64(h.constant().re));
    println!("hermitian   yes (residual {:e})", h.hermitian_residual());
    for (k, v) in &file.metadata {
        println!("meta        {k} = {v}");
    }
    if n > qoca_core::pauli::DENSE_CAP {
        println!("ground      skipped ({n} qubits exceed the dense cap)");
        return Ok(());
    }
    let ground = qoca_core::sim::exact_ground_space(h, qoca_core::sim::DEGENERACY_TOL)
        .map_err(|e| CliError::Run(e.to_string()))?;
    println!(
        "ground      {} (degeneracy {})",
        fmt_f64(ground.energy),
        ground.degeneracy()
    );
    if let Some(bits) = file.metadata.get("hf_bitstring") {
        let state = qoca_core::fermion::prepare_register_state(
            &qoca_core::fermion::InitialState::Computational(bits.clone()),
            n,
        )
        .map_err(|e| CliError::Config(format!("hf_bitstring: {e}")))?;
        let e = state.expectation(h).map_err(|e| CliError::Run(e.to_string()))?;
        println!("hf energy   {}", fmt_f64(e));
    }
    if let Some(fci) = file.metadata.get("fci_energy") {
        let fci: f64 = fci
            .parse()
            .map_err(|_| CliError::Config(format!("fci_energy {fci:?} is not a number")))?;
        let diff = (ground.energy - fci).abs();
        println!("fci check   |E0 - fci_energy| = {diff:e}");
        if diff > 1e-6 {
            return Err(CliError::Run(format!(
                "exact ground energy {} disagrees with fci_energy {fci}",
                ground.energy
            )));
        }
    }
    Ok(())
}
