//! Parametrized circuits for the HEA, VHA, FT-VHA, QOCA and short-QOCA
//! families, their CNOT lowering and resource counts.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::{
    dft_matrix, drive_string, fourier_unitary, hopping_term, jw_transform, onsite_term, DriveKind, LatticeSpec, Spin,
    TermGroup,
};
use crate::pauli::{DenseMatrix, Pauli, PauliString};
use crate::sim::{OneQubitGate, Statevector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// One parameter per term, tied across spin.
    #[default]
    Full,
    /// One parameter per commuting group.
    Scalable,
}

/// Order of the Hamiltonian exponentials inside one layer. Drives always close
/// the layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TermOrder {
    #[default]
    HoppingFirst,
    OnsiteFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnsatzKind {
    Hea,
    Vha,
    FtVha,
    Qoca,
    ShortQoca,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 5] = [
        AnsatzKind::Hea,
        AnsatzKind::Vha,
        AnsatzKind::FtVha,
        AnsatzKind::Qoca,
        AnsatzKind::ShortQoca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnsatzKind::Hea => "hea",
            AnsatzKind::Vha => "vha",
            AnsatzKind::FtVha => "ftvha",
            AnsatzKind::Qoca => "qoca",
            AnsatzKind::ShortQoca => "sqoca",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        let s = s.to_ascii_lowercase().replace(['-', '_'], "");
        Some(match s.as_str() {
            "hea" => AnsatzKind::Hea,
            "vha" => AnsatzKind::Vha,
            "ftvha" => AnsatzKind::FtVha,
            "qoca" => AnsatzKind::Qoca,
            "sqoca" | "shortqoca" => AnsatzKind::ShortQoca,
            _ => return None,
        })
    }

    /// True when the circuit is built from exponentials of the Hamiltonian
    /// (and optional drives), so an all-zero binding is the identity.
    pub fn is_hamiltonian_based(self) -> bool {
        self != AnsatzKind::Hea
    }

    pub fn conserves_particle_number(self) -> bool {
        matches!(self, AnsatzKind::Vha | AnsatzKind::FtVha)
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OneQubitKind {
    RX,
    RY,
    RZ,
    H,
    G,
    X,
}

impl OneQubitKind {
    fn bind(self, angle: f64) -> OneQubitGate {
        match self {
            OneQubitKind::RX => OneQubitGate::RX(angle),
            OneQubitKind::RY => OneQubitGate::RY(angle),
            OneQubitKind::RZ => OneQubitGate::RZ(angle),
            OneQubitKind::H => OneQubitGate::H,
            OneQubitKind::G => OneQubitGate::G,
            OneQubitKind::X => OneQubitGate::X,
        }
    }

    fn self_inverse(self) -> bool {
        matches!(self, OneQubitKind::H | OneQubitKind::G | OneQubitKind::X)
    }

    pub fn name(self) -> &'static str {
        self.bind(0.0).name()
    }
}

#[derive(Clone)]
pub enum GateKind {
    PauliExp(PauliString),
    OneQubit {
        gate: OneQubitKind,
        qubit: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// Dense unitary on the contiguous qubits `first..first+width`.
    DenseBlock {
        tag: String,
        first: usize,
        width: usize,
        matrix: Arc<DenseMatrix>,
    },
}

impl fmt::Debug for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::PauliExp(p) => write!(f, "PauliExp({p})"),
            GateKind::OneQubit { gate, qubit } => write!(f, "{}({qubit})", gate.name()),
            GateKind::Cnot { control, target } => write!(f, "CNOT({control},{target})"),
            GateKind::DenseBlock { tag, first, width, .. } => {
                write!(f, "Dense({tag}@{first}+{width})")
            }
        }
    }
}

/// One gate. Its angle is `scale · θ[slot]`, or `scale` itself when the gate
/// has no slot. Angle-free gates ignore both.
#[derive(Debug, Clone)]
pub struct GateDescriptor {
    pub kind: GateKind,
    pub slot: Option<usize>,
    pub scale: f64,
}

impl GateDescriptor {
    fn fixed(kind: GateKind) -> Self {
        Self {
            kind,
            slot: None,
            scale: 0.0,
        }
    }

    fn angle(&self, theta: &[f64]) -> f64 {
        match self.slot {
            Some(s) => self.scale * theta[s],
            None => self.scale,
        }
    }

    /// 1-based qubits touched by the gate.
    pub fn qubits(&self) -> Vec<usize> {
        match &self.kind {
            GateKind::PauliExp(p) => p.support(),
            GateKind::OneQubit { qubit, .. } => vec![*qubit],
            GateKind::Cnot { control, target } => vec![*control, *target],
            GateKind::DenseBlock { first, width, .. } => (*first..first + width).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotRole {
    Rotation,
    Hopping,
    Momentum,
    Onsite,
    Drive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSlot {
    pub name: String,
    pub role: SlotRole,
    pub layer: usize,
}

#[derive(Debug, Clone)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<GateDescriptor>,
    pub params: Vec<ParamSlot>,
    /// End index (exclusive) into `gates` of each layer.
    pub layer_boundaries: Vec<usize>,
}

impl Circuit {
    pub fn empty(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
            params: Vec::new(),
            layer_boundaries: Vec::new(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn depth(&self) -> usize {
        self.layer_boundaries.len()
    }

    pub fn params_per_layer(&self) -> usize {
        match self.depth() {
            0 => 0,
            d => self.num_params() / d,
        }
    }

    pub fn layer(&self, k: usize) -> &[GateDescriptor] {
        let start = if k == 0 { 0 } else { self.layer_boundaries[k - 1] };
        &self.gates[start..self.layer_boundaries[k]]
    }

    pub fn slots_with_role(&self, role: SlotRole) -> Vec<usize> {
        (0..self.params.len())
            .filter(|&i| self.params[i].role == role)
            .collect()
    }

    fn new_slot(&mut self, name: String, role: SlotRole, layer: usize) -> usize {
        self.params.push(ParamSlot { name, role, layer });
        self.params.len() - 1
    }

    fn push_exp(&mut self, p: PauliString, slot: usize, scale: f64) {
        self.gates.push(GateDescriptor {
            kind: GateKind::PauliExp(p),
            slot: Some(slot),
            scale,
        });
    }

    fn close_layer(&mut self) {
        self.layer_boundaries.push(self.gates.len());
    }

    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::ParameterLength {
                expected: self.num_params(),
                actual: theta.len(),
            });
        }
        Ok(())
    }

    /// Runs the bound circuit on `state` in place.
    pub fn apply(&self, theta: &[f64], state: &mut Statevector) -> Result<()> {
        self.check_params(theta)?;
        if state.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: state.num_qubits(),
            });
        }
        for g in &self.gates {
            match &g.kind {
                GateKind::PauliExp(p) => state.apply_pauli_exp_masks(
                    p.x_mask() as usize,
                    p.z_mask() as usize,
                    p.y_phase().to_complex(),
                    g.angle(theta),
                ),
                GateKind::OneQubit { gate, qubit } => state.apply_one_qubit(*qubit, gate.bind(g.angle(theta)))?,
                GateKind::Cnot { control, target } => state.apply_cnot(*control, *target)?,
                GateKind::DenseBlock {
                    first, width, matrix, ..
                } => state.apply_dense_block_unchecked(matrix, *first, *width),
            }
        }
        Ok(())
    }

    /// Fresh state `U(θ)|ψ₀⟩`.
    pub fn run(&self, theta: &[f64], initial: &Statevector) -> Result<Statevector> {
        let mut s = initial.clone();
        self.apply(theta, &mut s)?;
        Ok(s)
    }

    pub fn cnot_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g.kind, GateKind::Cnot { .. }))
            .count()
    }

    /// One gate per line: `PAULIEXP <string> slot=<k> scale=<s>`, `CNOT c t`,
    /// `1Q <gate> q` and `DENSE <tag>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            let slot = match g.slot {
                Some(s) => s.to_string(),
                None => "-".to_string(),
            };
            let _ = match &g.kind {
                GateKind::PauliExp(p) => {
                    writeln!(out, "PAULIEXP {p} slot={slot} scale={:?}", g.scale)
                }
                GateKind::Cnot { control, target } => writeln!(out, "CNOT {control} {target}"),
                GateKind::OneQubit { gate, qubit } if gate.self_inverse() => {
                    writeln!(out, "1Q {} {qubit}", gate.name())
                }
                GateKind::OneQubit { gate, qubit } => {
                    writeln!(out, "1Q {} {qubit} slot={slot} scale={:?}", gate.name(), g.scale)
                }
                GateKind::DenseBlock { tag, .. } => writeln!(out, "DENSE {tag}"),
            };
        }
        out
    }
}

/// Hardware-efficient ansatz: RY then RZ on every qubit, then a CNOT ladder.
pub fn build_hea(num_qubits: usize, depth: usize) -> Result<Circuit> {
    if num_qubits == 0 {
        return Err(Error::Unsupported("HEA on zero qubits".into()));
    }
    let mut c = Circuit::empty(num_qubits);
    for d in 0..depth {
        for q in 1..=num_qubits {
            for gate in [OneQubitKind::RY, OneQubitKind::RZ] {
                let slot = c.new_slot(format!("d{}.{}.q{q}", d + 1, gate.name()), SlotRole::Rotation, d);
                c.gates.push(GateDescriptor {
                    kind: GateKind::OneQubit { gate, qubit: q },
                    slot: Some(slot),
                    scale: 1.0,
                });
            }
        }
        for q in 1..num_qubits {
            c.gates.push(GateDescriptor::fixed(GateKind::Cnot {
                control: q,
                target: q + 1,
            }));
        }
        c.close_layer();
    }
    Ok(c)
}

/// Commuting Pauli strings of a fermionic term with their real weights.
fn term_strings(f: &crate::fermion::FermionSum) -> Result<Vec<(PauliString, f64)>> {
    let q = jw_transform(f)?.without_identity();
    Ok(q.iter().map(|(p, c)| (*p, c.re)).collect())
}

/// Emitter shared by the lattice ansätze.
struct LayerBuilder<'a> {
    spec: &'a LatticeSpec,
    strategy: Strategy,
    circuit: Circuit,
}

impl LayerBuilder<'_> {
    fn hopping(&mut self, d: usize) -> Result<()> {
        let bonds = self.spec.bonds();
        for group in TermGroup::ALL.iter().filter(|g| **g != TermGroup::Onsite) {
            let members: Vec<_> = bonds.iter().filter(|b| b.group == *group).collect();
            if members.is_empty() {
                continue;
            }
            let shared = (self.strategy == Strategy::Scalable).then(|| {
                self.circuit
                    .new_slot(format!("d{}.{group}", d + 1), SlotRole::Hopping, d)
            });
            for bond in members {
                let slot = shared.unwrap_or_else(|| {
                    self.circuit.new_slot(
                        format!("d{}.{group}.b{}-{}", d + 1, bond.a + 1, bond.b + 1),
                        SlotRole::Hopping,
                        d,
                    )
                });
                for (p, w) in term_strings(&hopping_term(self.spec, bond))? {
                    self.circuit.push_exp(p, slot, w);
                }
            }
        }
        Ok(())
    }

    fn onsite(&mut self, d: usize) -> Result<()> {
        let shared = (self.strategy == Strategy::Scalable)
            .then(|| self.circuit.new_slot(format!("d{}.onsite", d + 1), SlotRole::Onsite, d));
        for site in 0..self.spec.num_sites() {
            let slot = shared.unwrap_or_else(|| {
                self.circuit
                    .new_slot(format!("d{}.onsite.s{}", d + 1, site + 1), SlotRole::Onsite, d)
            });
            for (p, w) in term_strings(&onsite_term(self.spec, site))? {
                self.circuit.push_exp(p, slot, w);
            }
        }
        Ok(())
    }

    /// `FT† · exp(iτ𝒯) · FT` on both spin registers.
    fn momentum(&mut self, d: usize, ft: &Arc<DenseMatrix>, ft_dag: &Arc<DenseMatrix>) -> Result<()> {
        let l = self.spec.num_sites();
        let n = self.spec.num_orbitals();
        for (spin, first) in [("up", 1), ("down", l + 1)] {
            self.circuit.gates.push(GateDescriptor::fixed(GateKind::DenseBlock {
                tag: format!("FT_{spin}"),
                first,
                width: l,
                matrix: Arc::clone(ft),
            }));
        }
        let eps = band_energies(self.spec);
        let shared = (self.strategy == Strategy::Scalable).then(|| {
            self.circuit
                .new_slot(format!("d{}.kinetic", d + 1), SlotRole::Momentum, d)
        });
        for k in 0..l {
            // exp(iτ n_k) = phase · exp(-iτ Z_k / 2); the scalable form weights by ε_k
            let (slot, weight) = match shared {
                Some(s) => (s, eps[k]),
                None => (
                    self.circuit
                        .new_slot(format!("d{}.kinetic.k{k}", d + 1), SlotRole::Momentum, d),
                    1.0,
                ),
            };
            for offset in [0, l] {
                let p = PauliString::single(n, offset + k + 1, Pauli::Z)?;
                self.circuit.push_exp(p, slot, -0.5 * weight);
            }
        }
        for (spin, first) in [("up", 1), ("down", l + 1)] {
            self.circuit.gates.push(GateDescriptor::fixed(GateKind::DenseBlock {
                tag: format!("FTdag_{spin}"),
                first,
                width: l,
                matrix: Arc::clone(ft_dag),
            }));
        }
        Ok(())
    }

    fn drives(&mut self, d: usize) -> Result<()> {
        let l = self.spec.num_sites();
        let n = self.spec.num_orbitals();
        let kinds = [DriveKind::X, DriveKind::Y];
        let slots: Vec<usize> = match self.strategy {
            Strategy::Scalable => kinds
                .iter()
                .map(|k| {
                    self.circuit
                        .new_slot(format!("d{}.drive_{k:?}", d + 1), SlotRole::Drive, d)
                })
                .collect(),
            Strategy::Full => (1..=l)
                .flat_map(|j| kinds.iter().map(move |k| (j, *k)))
                .map(|(j, k)| {
                    self.circuit
                        .new_slot(format!("d{}.drive_{k:?}.j{j}", d + 1), SlotRole::Drive, d)
                })
                .collect(),
        };
        for register in [Spin::Up, Spin::Down] {
            for j in 1..=l {
                for (i, kind) in kinds.iter().enumerate() {
                    let slot = match self.strategy {
                        Strategy::Scalable => slots[i],
                        Strategy::Full => slots[2 * (j - 1) + i],
                    };
                    self.circuit
                        .push_exp(drive_string(*kind, register, j, l, n)?, slot, 1.0);
                }
            }
        }
        Ok(())
    }
}

/// Momentum-mode energies of the lattice hopping, `−t Σ_bonds 2 Re(F_ka F*_kb)`.
/// On a ring with L ≥ 3 this is `ε_k = −2t cos(2πk/L)`.
pub fn band_energies(spec: &LatticeSpec) -> Vec<f64> {
    let l = spec.num_sites();
    let f = dft_matrix(l);
    let bonds = spec.bonds();
    (0..l)
        .map(|k| {
            bonds
                .iter()
                .map(|b| {
                    let z: Complex64 = f[k][b.a] * f[k][b.b].conj();
                    -spec.t * 2.0 * z.re
                })
                .sum()
        })
        .collect()
}

fn lattice_builder(spec: &LatticeSpec, strategy: Strategy) -> Result<LayerBuilder<'_>> {
    spec.validate()?;
    Ok(LayerBuilder {
        spec,
        strategy,
        circuit: Circuit::empty(spec.num_orbitals()),
    })
}

/// Variational Hamiltonian ansatz.
pub fn build_vha(spec: &LatticeSpec, depth: usize, strategy: Strategy, order: TermOrder) -> Result<Circuit> {
    hamiltonian_ansatz(spec, depth, strategy, order, true, false)
}

/// QOCA: the VHA layer followed by the drive block on each spin register.
pub fn build_qoca(spec: &LatticeSpec, depth: usize, strategy: Strategy, order: TermOrder) -> Result<Circuit> {
    hamiltonian_ansatz(spec, depth, strategy, order, true, true)
}

/// Short QOCA: onsite exponentials then drives.
pub fn build_sqoca(spec: &LatticeSpec, depth: usize, strategy: Strategy) -> Result<Circuit> {
    hamiltonian_ansatz(spec, depth, strategy, TermOrder::HoppingFirst, false, true)
}

fn hamiltonian_ansatz(
    spec: &LatticeSpec,
    depth: usize,
    strategy: Strategy,
    order: TermOrder,
    hopping: bool,
    drives: bool,
) -> Result<Circuit> {
    let mut b = lattice_builder(spec, strategy)?;
    for d in 0..depth {
        match (hopping, order) {
            (true, TermOrder::HoppingFirst) => {
                b.hopping(d)?;
                b.onsite(d)?;
            }
            (true, TermOrder::OnsiteFirst) => {
                b.onsite(d)?;
                b.hopping(d)?;
            }
            (false, _) => b.onsite(d)?,
        }
        if drives {
            b.drives(d)?;
        }
        b.circuit.close_layer();
    }
    Ok(b.circuit)
}

/// FT-VHA: kinetic exponentials diagonal in momentum space, conjugated by the
/// fermionic Fourier transform, alternating with onsite exponentials.
pub fn build_ftvha(spec: &LatticeSpec, depth: usize, strategy: Strategy, order: TermOrder) -> Result<Circuit> {
    if !spec.is_site_ordered_ring() {
        return Err(Error::Unsupported(format!(
            "FT-VHA needs a lattice that is a ring in site order, got {}x{} (periodic={})",
            spec.rows, spec.cols, spec.periodic
        )));
    }
    let mut b = lattice_builder(spec, strategy)?;
    let ft = fourier_unitary(spec.num_sites())?;
    let ft_dag = Arc::new(ft.adjoint());
    let ft = Arc::new(ft);
    for d in 0..depth {
        match order {
            TermOrder::HoppingFirst => {
                b.momentum(d, &ft, &ft_dag)?;
                b.onsite(d)?;
            }
            TermOrder::OnsiteFirst => {
                b.onsite(d)?;
                b.momentum(d, &ft, &ft_dag)?;
            }
        }
        b.circuit.close_layer();
    }
    Ok(b.circuit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnsatzOptions {
    pub strategy: Strategy,
    pub order: TermOrder,
}

impl Default for AnsatzOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Full,
            order: TermOrder::HoppingFirst,
        }
    }
}

/// Dispatches to the builder of `kind` for a lattice problem.
pub fn build_for_lattice(kind: AnsatzKind, spec: &LatticeSpec, depth: usize, opts: AnsatzOptions) -> Result<Circuit> {
    match kind {
        AnsatzKind::Hea => {
            spec.validate()?;
            build_hea(spec.num_orbitals(), depth)
        }
        AnsatzKind::Vha => build_vha(spec, depth, opts.strategy, opts.order),
        AnsatzKind::FtVha => build_ftvha(spec, depth, opts.strategy, opts.order),
        AnsatzKind::Qoca => build_qoca(spec, depth, opts.strategy, opts.order),
        AnsatzKind::ShortQoca => build_sqoca(spec, depth, opts.strategy),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    /// Remove adjacent self-inverse pairs (CNOT, H, G, X) separated only by
    /// gates on other qubits.
    pub cancel_adjacent: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { cancel_adjacent: true }
    }
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub circuit: Circuit,
    /// Tags of dense blocks that were passed through without lowering.
    pub unlowered: Vec<String>,
}

impl Compiled {
    pub fn is_complete(&self) -> bool {
        self.unlowered.is_empty()
    }
}

fn lower_pauli_exp(p: &PauliString, g: &GateDescriptor, out: &mut Vec<GateDescriptor>) {
    let support = p.support();
    let Some(&last) = support.last() else {
        // identity: global phase only
        return;
    };
    let basis: Vec<(usize, Option<OneQubitKind>)> = support
        .iter()
        .map(|&q| {
            let change = match p.get(q) {
                Pauli::X => Some(OneQubitKind::H),
                Pauli::Y => Some(OneQubitKind::G),
                _ => None,
            };
            (q, change)
        })
        .collect();
    let one = |gate, qubit| GateDescriptor::fixed(GateKind::OneQubit { gate, qubit });
    for &(q, change) in &basis {
        if let Some(gate) = change {
            out.push(one(gate, q));
        }
    }
    for w in support.windows(2) {
        out.push(GateDescriptor::fixed(GateKind::Cnot {
            control: w[0],
            target: w[1],
        }));
    }
    // exp(iθZ) = RZ(−2θ)
    out.push(GateDescriptor {
        kind: GateKind::OneQubit {
            gate: OneQubitKind::RZ,
            qubit: last,
        },
        slot: g.slot,
        scale: -2.0 * g.scale,
    });
    for w in support.windows(2).rev() {
        out.push(GateDescriptor::fixed(GateKind::Cnot {
            control: w[0],
            target: w[1],
        }));
    }
    for &(q, change) in basis.iter().rev() {
        if let Some(gate) = change {
            out.push(one(gate, q));
        }
    }
}

fn same_involution(a: &GateKind, b: &GateKind) -> bool {
    match (a, b) {
        (
            GateKind::Cnot { control, target },
            GateKind::Cnot {
                control: c2,
                target: t2,
            },
        ) => control == c2 && target == t2,
        (GateKind::OneQubit { gate, qubit }, GateKind::OneQubit { gate: g2, qubit: q2 }) => {
            gate.self_inverse() && gate == g2 && qubit == q2
        }
        _ => false,
    }
}

/// Appends `g`, or cancels it against the most recent gate it meets on its
/// qubits when the two form an involutive pair.
fn push_cancelling(out: &mut Vec<GateDescriptor>, g: GateDescriptor) {
    let qs = g.qubits();
    for i in (0..out.len()).rev() {
        let prev = &out[i];
        if same_involution(&prev.kind, &g.kind) && prev.slot.is_none() {
            out.remove(i);
            return;
        }
        if prev.qubits().iter().any(|q| qs.contains(q)) {
            break;
        }
    }
    out.push(g);
}

/// Lowers every Pauli exponential to basis changes, CNOT ladders and an RZ.
/// Each layer is lowered independently so per-layer counts stay meaningful.
pub fn compile_to_cnot(circuit: &Circuit, opts: CompileOptions) -> Compiled {
    let mut out = Circuit {
        num_qubits: circuit.num_qubits,
        gates: Vec::new(),
        params: circuit.params.clone(),
        layer_boundaries: Vec::new(),
    };
    let mut unlowered = Vec::new();
    for k in 0..circuit.depth() {
        let mut layer = Vec::new();
        for g in circuit.layer(k) {
            let mut lowered = Vec::new();
            match &g.kind {
                GateKind::PauliExp(p) => lower_pauli_exp(p, g, &mut lowered),
                GateKind::DenseBlock { tag, .. } => {
                    unlowered.push(tag.clone());
                    lowered.push(g.clone());
                }
                _ => lowered.push(g.clone()),
            }
            for g in lowered {
                if opts.cancel_adjacent {
                    push_cancelling(&mut layer, g);
                } else {
                    layer.push(g);
                }
            }
        }
        out.gates.extend(layer);
        out.close_layer();
    }
    Compiled {
        circuit: out,
        unlowered,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resources {
    pub params_per_layer: usize,
    /// Largest per-layer CNOT count after lowering.
    pub cnots_per_layer: usize,
    pub cnots_by_layer: Vec<usize>,
    /// Dense blocks left unlowered (their cost is not counted).
    pub unlowered_blocks: usize,
}

pub fn count_resources(circuit: &Circuit, opts: CompileOptions) -> Resources {
    let compiled = compile_to_cnot(circuit, opts);
    let c = &compiled.circuit;
    let by_layer: Vec<usize> = (0..c.depth())
        .map(|k| {
            c.layer(k)
                .iter()
                .filter(|g| matches!(g.kind, GateKind::Cnot { .. }))
                .count()
        })
        .collect();
    Resources {
        params_per_layer: circuit.params_per_layer(),
        cnots_per_layer: by_layer.iter().copied().max().unwrap_or(0),
        cnots_by_layer: by_layer,
        unlowered_blocks: compiled.unlowered.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> LatticeSpec {
        LatticeSpec::new(2, 2)
    }

    #[test]
    fn hea_counts() {
        let c = build_hea(8, 1).unwrap();
        assert_eq!((c.num_params(), c.cnot_count()), (16, 7));
        let c = build_hea(12, 1).unwrap();
        assert_eq!((c.num_params(), c.cnot_count()), (24, 11));
        let c = build_hea(8, 0).unwrap();
        assert!(c.gates.is_empty());
        assert_eq!(count_resources(&c, CompileOptions::default()).cnots_per_layer, 0);
    }

    #[test]
    fn lattice_param_counts() {
        let o = TermOrder::HoppingFirst;
        assert_eq!(build_vha(&square(), 1, Strategy::Full, o).unwrap().num_params(), 8);
        assert_eq!(
            build_qoca(&square(), 3, Strategy::Full, o).unwrap().params_per_layer(),
            16
        );
        assert_eq!(build_qoca(&square(), 1, Strategy::Scalable, o).unwrap().num_params(), 5);
        assert_eq!(build_sqoca(&square(), 1, Strategy::Full).unwrap().num_params(), 12);
        let r = LatticeSpec::new(2, 3);
        assert_eq!(build_vha(&r, 1, Strategy::Full, o).unwrap().num_params(), 13);
        assert_eq!(build_qoca(&r, 1, Strategy::Full, o).unwrap().num_params(), 25);
        assert_eq!(build_qoca(&r, 1, Strategy::Scalable, o).unwrap().num_params(), 6);
        assert_eq!(build_sqoca(&r, 1, Strategy::Full).unwrap().num_params(), 18);
        let chain = LatticeSpec::new(1, 4).periodic(true);
        assert_eq!(build_ftvha(&chain, 2, Strategy::Full, o).unwrap().params_per_layer(), 8);
        assert!(build_ftvha(&r, 1, Strategy::Full, o).is_err());
    }

    #[test]
    fn zero_binding_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = Statevector::random(8, &mut rng);
        for kind in AnsatzKind::ALL.into_iter().filter(|k| k.is_hamiltonian_based()) {
            let c = build_for_lattice(kind, &square(), 2, AnsatzOptions::default()).unwrap();
            let out = c.run(&vec![0.0; c.num_params()], &s).unwrap();
            let diff = out
                .amplitudes()
                .iter()
                .zip(s.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff <= 1e-10, "{kind}: {diff}");
        }
    }

    #[test]
    fn lowering_examples() {
        let zz = PauliString::from_letters("ZZ").unwrap();
        let mut c = Circuit::empty(2);
        let s = c.new_slot("a".into(), SlotRole::Onsite, 0);
        c.push_exp(zz, s, 1.0);
        c.close_layer();
        let low = compile_to_cnot(&c, CompileOptions::default()).circuit;
        assert_eq!(low.cnot_count(), 2);
        assert_eq!(low.gates.len(), 3);

        let zzx = PauliString::from_letters("ZZX").unwrap();
        let mut c = Circuit::empty(3);
        let s = c.new_slot("a".into(), SlotRole::Onsite, 0);
        c.push_exp(zzx, s, 1.0);
        c.close_layer();
        let low = compile_to_cnot(&c, CompileOptions::default()).circuit;
        assert_eq!(low.cnot_count(), 4);
        let text = low.to_text();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.first(), Some(&"1Q H 3"));
        assert_eq!(lines.last(), Some(&"1Q H 3"));
        assert!(text.contains("1Q RZ 3 slot=0 scale=-2.0"));
    }

    #[test]
    fn compiled_matches_original() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in [AnsatzKind::Vha, AnsatzKind::Qoca, AnsatzKind::ShortQoca] {
            let c = build_for_lattice(kind, &square(), 1, AnsatzOptions::default()).unwrap();
            let theta: Vec<f64> = (0..c.num_params()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for opts in [CompileOptions { cancel_adjacent: false }, CompileOptions::default()] {
                let low = compile_to_cnot(&c, opts);
                assert!(low.is_complete());
                let s = Statevector::random(8, &mut rng);
                let a = c.run(&theta, &s).unwrap();
                let b = low.circuit.run(&theta, &s).unwrap();
                let overlap = a.inner(&b).unwrap();
                assert!((overlap - Complex64::new(1.0, 0.0)).norm() < 1e-10, "{kind}");
            }
        }
    }

    #[test]
    fn ftvha_reports_unlowered_blocks() {
        let chain = LatticeSpec::new(1, 4).periodic(true);
        let c = build_ftvha(&chain, 1, Strategy::Full, TermOrder::HoppingFirst).unwrap();
        let low = compile_to_cnot(&c, CompileOptions::default());
        assert_eq!(low.unlowered, ["FT_up", "FT_down", "FTdag_up", "FTdag_down"]);
        assert!(c.to_text().contains("DENSE FT_up"));
    }

    #[test]
    fn band_of_the_four_ring() {
        let eps = band_energies(&LatticeSpec::new(1, 4).periodic(true));
        let expect = [-2.0, 0.0, 2.0, 0.0];
        for (a, b) in eps.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn names_round_trip() {
        for k in AnsatzKind::ALL {
            assert_eq!(AnsatzKind::from_name(k.name()), Some(k));
        }
        assert_eq!(AnsatzKind::from_name("short-QOCA"), Some(AnsatzKind::ShortQoca));
        assert_eq!(AnsatzKind::from_name("uccsd"), None);
    }
}
