//! Experiment configuration: TOML schema, command-line overrides, validation
//! and the bundled presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qoca_core::ansatz::{AnsatzKind, AnsatzOptions, Strategy, TermOrder};
use qoca_core::fermion::{InitialState, LatticeSpec, SiteOrder};
use qoca_core::pauli::{InterchangeFile, PauliSum, DENSE_CAP};
use qoca_core::vqe::{Method, OptimizerConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub problem: ProblemConfig,
    pub ansatz: AnsatzConfig,
    #[serde(default = "default_initial")]
    pub initial_state: OneOrMany<InitialStateConfig>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn default_initial() -> OneOrMany<InitialStateConfig> {
    OneOrMany::One(InitialStateConfig::PlusAll)
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("qoca_out")
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Exactly one of `lattice` or `hamiltonian_file`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub lattice: Option<LatticeConfig>,
    #[serde(default)]
    pub hamiltonian_file: Option<PathBuf>,
    #[serde(default)]
    pub num_qubits: Option<usize>,
    /// Lattice whose hopping/onsite/drive structure shapes the Hamiltonian
    /// ansätze when the problem comes from a file.
    #[serde(default)]
    pub ansatz_lattice: Option<LatticeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_u")]
    pub u: f64,
    /// Defaults to `u / 2` (half filling).
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub site_order: SiteOrderName,
}

fn default_t() -> f64 {
    1.0
}

fn default_u() -> f64 {
    4.0
}

impl LatticeConfig {
    pub fn to_spec(&self) -> LatticeSpec {
        LatticeSpec::new(self.rows, self.cols)
            .periodic(self.periodic)
            .with_params(self.t, self.u, self.mu.unwrap_or(self.u / 2.0))
            .with_site_order(match self.site_order {
                SiteOrderName::Snake => SiteOrder::Snake,
                SiteOrderName::RowMajor => SiteOrder::RowMajor,
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteOrderName {
    #[default]
    Snake,
    RowMajor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzName {
    Hea,
    Vha,
    Ftvha,
    Qoca,
    Sqoca,
}

impl AnsatzName {
    pub fn kind(self) -> AnsatzKind {
        match self {
            AnsatzName::Hea => AnsatzKind::Hea,
            AnsatzName::Vha => AnsatzKind::Vha,
            AnsatzName::Ftvha => AnsatzKind::FtVha,
            AnsatzName::Qoca => AnsatzKind::Qoca,
            AnsatzName::Sqoca => AnsatzKind::ShortQoca,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        AnsatzKind::from_name(s).map(|k| match k {
            AnsatzKind::Hea => AnsatzName::Hea,
            AnsatzKind::Vha => AnsatzName::Vha,
            AnsatzKind::FtVha => AnsatzName::Ftvha,
            AnsatzKind::Qoca => AnsatzName::Qoca,
            AnsatzKind::ShortQoca => AnsatzName::Sqoca,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    #[default]
    Full,
    Scalable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderName {
    #[default]
    HoppingFirst,
    OnsiteFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub kinds: OneOrMany<AnsatzName>,
    pub depths: Vec<usize>,
    #[serde(default)]
    pub strategy: StrategyName,
    #[serde(default)]
    pub order: OrderName,
}

impl AnsatzConfig {
    pub fn options(&self) -> AnsatzOptions {
        AnsatzOptions {
            strategy: match self.strategy {
                StrategyName::Full => Strategy::Full,
                StrategyName::Scalable => Strategy::Scalable,
            },
            order: match self.order {
                OrderName::HoppingFirst => TermOrder::HoppingFirst,
                OrderName::OnsiteFirst => TermOrder::OnsiteFirst,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateConfig {
    PlusAll,
    OmegaT1,
    OmegaT2,
    /// `(Ω_T1 − Ω_T2)/√2`
    OmegaT,
    Computational {
        bits: String,
    },
    /// Occupation bitstring; taken from the file's `hf_bitstring` metadata
    /// when omitted.
    HartreeFock {
        #[serde(default)]
        bits: Option<String>,
    },
    Momentum {
        up: String,
        down: String,
    },
}

impl InitialStateConfig {
    /// Short label used in file names and summaries.
    pub fn label(&self) -> String {
        match self {
            InitialStateConfig::PlusAll => "plus_all".into(),
            InitialStateConfig::OmegaT1 => "omega_t1".into(),
            InitialStateConfig::OmegaT2 => "omega_t2".into(),
            InitialStateConfig::OmegaT => "omega_t".into(),
            InitialStateConfig::Computational { bits } => format!("bits_{bits}"),
            InitialStateConfig::HartreeFock { .. } => "hartree_fock".into(),
            InitialStateConfig::Momentum { up, down } => format!("momentum_{up}_{down}"),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "plus_all" | "plus" => InitialStateConfig::PlusAll,
            "omega_t1" => InitialStateConfig::OmegaT1,
            "omega_t2" => InitialStateConfig::OmegaT2,
            "omega_t" => InitialStateConfig::OmegaT,
            "hartree_fock" | "hf" => InitialStateConfig::HartreeFock { bits: None },
            _ => InitialStateConfig::Computational {
                bits: s.strip_prefix("bits:")?.into(),
            },
        })
    }

    fn resolve(&self, metadata_hf: Option<&str>) -> Result<InitialState, CliError> {
        Ok(match self {
            InitialStateConfig::PlusAll => InitialState::PlusAll,
            InitialStateConfig::OmegaT1 => InitialState::OmegaT1,
            InitialStateConfig::OmegaT2 => InitialState::OmegaT2,
            InitialStateConfig::OmegaT => InitialState::OmegaTSuperposition,
            InitialStateConfig::Computational { bits } => InitialState::Computational(bits.clone()),
            InitialStateConfig::HartreeFock { bits } => {
                let bits = bits.as_deref().or(metadata_hf).ok_or_else(|| {
                    CliError::Config(
                        "hartree_fock initial state needs `bits` or an `hf_bitstring` entry in the Hamiltonian file"
                            .into(),
                    )
                })?;
                InitialState::Computational(bits.to_string())
            }
            InitialStateConfig::Momentum { up, down } => InitialState::Momentum {
                up: up.clone(),
                down: down.clone(),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitParams {
    /// Zeros, except uniform random in `[−π, π)` for short QOCA.
    #[default]
    Auto,
    Zeros,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_rho_begin")]
    pub rho_begin: f64,
    #[serde(default = "default_rho_end")]
    pub rho_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitParams,
}

// `method` is a string so error messages can name the bad value.
fn default_method() -> String {
    "cobyla".into()
}

fn default_max_evals() -> usize {
    OptimizerConfig::default().max_evals
}

fn default_rho_begin() -> f64 {
    OptimizerConfig::default().rho_begin
}

fn default_rho_end() -> f64 {
    OptimizerConfig::default().rho_end
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            method: default_method(),
            max_evals: default_max_evals(),
            rho_begin: default_rho_begin(),
            rho_end: default_rho_end(),
            seed: 0,
            init: InitParams::Auto,
        }
    }
}

impl OptimizerSection {
    pub fn to_config(&self) -> Result<OptimizerConfig, CliError> {
        let method = Method::from_name(&self.method).ok_or_else(|| {
            CliError::Config(format!(
                "unknown optimizer method {:?} (expected cobyla or nelder-mead)",
                self.method
            ))
        })?;
        let cfg = OptimizerConfig {
            method,
            max_evals: self.max_evals,
            rho_begin: self.rho_begin,
            rho_end: self.rho_end,
            seed: self.seed,
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// Relative width of the ground-state window.
    #[serde(default = "default_degeneracy")]
    pub degeneracy_tol: f64,
    /// Measure fidelity against one ground-state vector instead of the
    /// whole ground space.
    #[serde(default)]
    pub pin: Option<usize>,
}

fn default_degeneracy() -> f64 {
    qoca_core::sim::DEGENERACY_TOL
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            degeneracy_tol: default_degeneracy(),
            pin: None,
        }
    }
}

/// Command-line values that replace config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kinds: Option<Vec<AnsatzName>>,
    pub depths: Option<Vec<usize>>,
    pub strategy: Option<StrategyName>,
    pub order: Option<OrderName>,
    pub initial_states: Option<Vec<InitialStateConfig>>,
    pub max_evals: Option<usize>,
    pub rho_begin: Option<f64>,
    pub rho_end: Option<f64>,
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub record_every: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // relative Hamiltonian paths are resolved against the config file
        if let (Some(file), Some(dir)) = (&cfg.problem.hamiltonian_file, path.parent()) {
            if file.is_relative() {
                cfg.problem.hamiltonian_file = Some(dir.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(k) = &o.kinds {
            self.ansatz.kinds = OneOrMany::Many(k.clone());
        }
        if let Some(d) = &o.depths {
            self.ansatz.depths = d.clone();
        }
        if let Some(s) = o.strategy {
            self.ansatz.strategy = s;
        }
        if let Some(s) = o.order {
            self.ansatz.order = s;
        }
        if let Some(s) = &o.initial_states {
            self.initial_state = OneOrMany::Many(s.clone());
        }
        if let Some(v) = o.max_evals {
            self.optimizer.max_evals = v;
        }
        if let Some(v) = o.rho_begin {
            self.optimizer.rho_begin = v;
        }
        if let Some(v) = o.rho_end {
            self.optimizer.rho_end = v;
        }
        if let Some(v) = &o.method {
            self.optimizer.method = v.clone();
        }
        if let Some(v) = o.seed {
            self.optimizer.seed = v;
        }
        if let Some(v) = o.record_every {
            self.record_every = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
    }

    /// Checks everything that can be checked without running an optimization
    /// and resolves the problem into concrete operators.
    pub fn validate(&self) -> Result<Plan, CliError> {
        let cfg_err = |m: String| CliError::Config(m);
        let p = &self.problem;
        let (hamiltonian, lattice, ansatz_lattice, hf_bits) = match (&p.lattice, &p.hamiltonian_file) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(cfg_err(
                    "problem needs exactly one of `lattice` or `hamiltonian_file`".into(),
                ))
            }
            (Some(l), None) => {
                if p.ansatz_lattice.is_some() {
                    return Err(cfg_err("`ansatz_lattice` only applies to file problems".into()));
                }
                let spec = l.to_spec();
                spec.validate().map_err(|e| cfg_err(e.to_string()))?;
                if let Some(n) = p.num_qubits {
                    if n != spec.num_orbitals() {
                        return Err(cfg_err(format!(
                            "num_qubits = {n} but the lattice has {} spin orbitals",
                            spec.num_orbitals()
                        )));
                    }
                }
                let h = qoca_core::fermion::hubbard_qubit_hamiltonian(&spec).map_err(|e| cfg_err(e.to_string()))?;
                (h, Some(spec), Some(spec), None)
            }
            (None, Some(path)) => {
                let file = load_hamiltonian_file(path, p.num_qubits)?;
                let shape = p.ansatz_lattice.map(|l| l.to_spec());
                if let Some(s) = &shape {
                    s.validate().map_err(|e| cfg_err(e.to_string()))?;
                    if s.num_orbitals() != file.sum.num_qubits() {
                        return Err(cfg_err(format!(
                            "ansatz_lattice has {} spin orbitals but the Hamiltonian acts on {} qubits",
                            s.num_orbitals(),
                            file.sum.num_qubits()
                        )));
                    }
                }
                let hf = file.metadata.get("hf_bitstring").cloned();
                (file.sum, None, shape, hf)
            }
        };
        let n = hamiltonian.num_qubits();
        if n > DENSE_CAP {
            return Err(cfg_err(format!(
                "{n} qubits exceed the exact-diagonalization cap of {DENSE_CAP}"
            )));
        }

        let kinds: Vec<AnsatzKind> = self.ansatz.kinds.to_vec().iter().map(|k| k.kind()).collect();
        if kinds.is_empty() {
            return Err(cfg_err("ansatz.kinds is empty".into()));
        }
        if self.ansatz.depths.is_empty() {
            return Err(cfg_err("ansatz.depths is empty".into()));
        }
        if self.record_every == 0 {
            return Err(cfg_err("record_every must be at least 1".into()));
        }
        let optimizer = self.optimizer.to_config()?;
        if !(self.target.degeneracy_tol >= 0.0 && self.target.degeneracy_tol < 1.0) {
            return Err(cfg_err("target.degeneracy_tol must lie in [0, 1)".into()));
        }
        let opts = self.ansatz.options();
        for &kind in &kinds {
            if kind.is_hamiltonian_based() {
                let shape = ansatz_lattice.as_ref().ok_or_else(|| {
                    cfg_err(format!(
                        "{kind} needs a lattice structure; set problem.ansatz_lattice for file Hamiltonians"
                    ))
                })?;
                // builds a one-layer circuit to surface structural refusals early
                qoca_core::ansatz::build_for_lattice(kind, shape, 1, opts)
                    .map_err(|e| cfg_err(format!("{kind}: {e}")))?;
            }
        }

        let mut initial_states = Vec::new();
        for init in self.initial_state.to_vec() {
            let resolved = init.resolve(hf_bits.as_deref())?;
            let state = match &lattice {
                Some(spec) => qoca_core::fermion::prepare_initial_state(&resolved, spec),
                None => match (&resolved, &ansatz_lattice) {
                    (InitialState::PlusAll | InitialState::Computational(_), _) => {
                        qoca_core::fermion::prepare_register_state(&resolved, n)
                    }
                    (_, Some(shape)) => qoca_core::fermion::prepare_initial_state(&resolved, shape),
                    (_, None) => qoca_core::fermion::prepare_register_state(&resolved, n),
                },
            }
            .map_err(|e| cfg_err(format!("initial state {}: {e}", init.label())))?;
            initial_states.push((init, state));
        }
        if initial_states.is_empty() {
            return Err(cfg_err("initial_state list is empty".into()));
        }

        Ok(Plan {
            hamiltonian,
            lattice,
            ansatz_lattice,
            kinds,
            depths: self.ansatz.depths.clone(),
            options: opts,
            strategy_name: self.ansatz.strategy,
            initial_states,
            optimizer,
            init_params: self.optimizer.init,
            target: self.target,
            record_every: self.record_every,
        })
    }
}

/// Validated, fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Plan {
    pub hamiltonian: PauliSum,
    pub lattice: Option<LatticeSpec>,
    pub ansatz_lattice: Option<LatticeSpec>,
    pub kinds: Vec<AnsatzKind>,
    pub depths: Vec<usize>,
    pub options: AnsatzOptions,
    pub strategy_name: StrategyName,
    pub initial_states: Vec<(InitialStateConfig, qoca_core::sim::Statevector)>,
    pub optimizer: OptimizerConfig,
    pub init_params: InitParams,
    pub target: TargetConfig,
    pub record_every: usize,
}

/// Reads an interchange file and checks it is Hermitian (and has the
/// expected width when `num_qubits` is given).
pub fn load_hamiltonian_file(path: &Path, num_qubits: Option<usize>) -> Result<InterchangeFile, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file = InterchangeFile::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if !file.sum.is_hermitian() {
        return Err(CliError::Config(format!(
            "{}: Hamiltonian is not Hermitian (residual {:e})",
            path.display(),
            file.sum.hermitian_residual()
        )));
    }
    if let Some(n) = num_qubits {
        if n != file.sum.num_qubits() {
            return Err(CliError::Config(format!(
                "{}: expected {n} qubits, file has {}",
                path.display(),
                file.sum.num_qubits()
            )));
        }
    }
    Ok(file)
}

/// Parses `1,2,5` or `1-10` (or a mix such as `0,2-4`).
pub fn parse_depths(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Config(format!("cannot parse depth list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "dimer",
        description: "2x1 Hubbard dimer, VHA, QOCA, sQOCA and HEA at one and two layers",
        toml: include_str!("../presets/dimer.toml"),
    },
    Preset {
        name: "square",
        description: "2x2 Hubbard plaquette, QOCA and VHA depth sweep from |+>^8",
        toml: include_str!("../presets/square.toml"),
    },
    Preset {
        name: "square-scalable",
        description: "2x2 Hubbard plaquette, scalable QOCA depth sweep",
        toml: include_str!("../presets/square_scalable.toml"),
    },
    Preset {
        name: "square-initial-states",
        description: "2x2 plaquette, QOCA and VHA from |+>^8, Omega_T1 and Omega_T",
        toml: include_str!("../presets/square_initial_states.toml"),
    },
    Preset {
        name: "rect",
        description: "2x3 Hubbard lattice, QOCA at nine layers and VHA at ten",
        toml: include_str!("../presets/rect.toml"),
    },
    Preset {
        name: "h2o",
        description: "12-qubit H2O file Hamiltonian (run the exporter first)",
        toml: include_str!("../presets/h2o.toml"),
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for p in PRESETS {
            let cfg = ExperimentConfig::from_toml(p.toml).unwrap_or_else(|e| panic!("{}: {e}", p.name));
            if cfg.problem.lattice.is_some() {
                cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            }
        }
    }

    #[test]
    fn depth_lists() {
        assert_eq!(parse_depths("1-3,7").unwrap(), vec![1, 2, 3, 7]);
        assert_eq!(parse_depths("0").unwrap(), vec![0]);
        assert!(parse_depths("3-1").is_err());
        assert!(parse_depths("x").is_err());
        assert!(parse_depths("").is_err());
    }

    #[test]
    fn initial_state_names() {
        assert_eq!(InitialStateConfig::parse("omega_t"), Some(InitialStateConfig::OmegaT));
        assert_eq!(
            InitialStateConfig::parse("bits:0101"),
            Some(InitialStateConfig::Computational { bits: "0101".into() })
        );
        assert_eq!(InitialStateConfig::parse("bogus"), None);
    }
}
