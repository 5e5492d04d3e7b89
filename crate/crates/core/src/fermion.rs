//! Second-quantized operators, the Jordan-Wigner encoding, Hubbard lattices,
//! symmetry-breaking drives and the fermionic Fourier transform.
//!
//! Spin orbitals are numbered 1..=2L: all spin-up sites first, then all
//! spin-down sites, each block in lattice site order.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{check_dense_cap, DenseMatrix, Pauli, PauliString, PauliSum};
use crate::sim::Statevector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ladder {
    /// 1-based spin-orbital index.
    pub orbital: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(orbital: usize) -> Self {
        Self { orbital, dagger: true }
    }

    pub fn annihilate(orbital: usize) -> Self {
        Self { orbital, dagger: false }
    }
}

/// Product of ladder operators kept in the order written.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionTerm {
    pub factors: Vec<Ladder>,
    pub coefficient: Complex64,
}

impl FermionTerm {
    pub fn new(coefficient: f64, factors: Vec<Ladder>) -> Self {
        Self {
            factors,
            coefficient: Complex64::new(coefficient, 0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .rev()
                .map(|l| Ladder {
                    orbital: l.orbital,
                    dagger: !l.dagger,
                })
                .collect(),
            coefficient: self.coefficient.conj(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FermionSum {
    pub num_orbitals: usize,
    pub terms: Vec<FermionTerm>,
}

impl FermionSum {
    pub fn new(num_orbitals: usize) -> Self {
        Self {
            num_orbitals,
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, term: FermionTerm) {
        self.terms.push(term);
    }

    pub fn extend(&mut self, other: &FermionSum) {
        self.terms.extend(other.terms.iter().cloned());
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    fn check(&self) -> Result<()> {
        for l in self.terms.iter().flat_map(|t| t.factors.iter()) {
            if l.orbital == 0 || l.orbital > self.num_orbitals {
                return Err(Error::IndexOutOfRange {
                    what: "orbital",
                    index: l.orbital,
                    max: self.num_orbitals,
                });
            }
        }
        Ok(())
    }
}

/// `n_p = a†_p a_p`.
pub fn number_term(p: usize, coefficient: f64) -> FermionTerm {
    FermionTerm::new(coefficient, vec![Ladder::create(p), Ladder::annihilate(p)])
}

/// Total number operator over `n` orbitals.
pub fn total_number(n: usize) -> FermionSum {
    FermionSum {
        num_orbitals: n,
        terms: (1..=n).map(|p| number_term(p, 1.0)).collect(),
    }
}

/// Jordan-Wigner image of a single ladder operator on an `n`-orbital register:
/// `a_p ↦ (X_p + iY_p)/2 ⊗ Z_{l<p}`, the creation operator is its adjoint.
pub fn jw_ladder(p: usize, dagger: bool, n: usize) -> Result<PauliSum> {
    if p == 0 || p > n {
        return Err(Error::IndexOutOfRange {
            what: "orbital",
            index: p,
            max: n,
        });
    }
    let mut tail: Vec<(usize, Pauli)> = (1..p).map(|l| (l, Pauli::Z)).collect();
    tail.push((p, Pauli::X));
    let x = PauliString::from_sites(n, &tail)?;
    tail.pop();
    tail.push((p, Pauli::Y));
    let y = PauliString::from_sites(n, &tail)?;
    let y_coeff = if dagger { -0.5 } else { 0.5 };
    PauliSum::from_terms(n, [(x, Complex64::new(0.5, 0.0)), (y, Complex64::new(0.0, y_coeff))])
}

pub fn jw_transform(f: &FermionSum) -> Result<PauliSum> {
    f.check()?;
    let n = f.num_orbitals;
    let ladders: Vec<[PauliSum; 2]> = (1..=n)
        .map(|p| Ok([jw_ladder(p, false, n)?, jw_ladder(p, true, n)?]))
        .collect::<Result<_>>()?;
    let mut out = PauliSum::zero(n);
    for term in &f.terms {
        let mut prod = PauliSum::identity(n).scale(term.coefficient);
        for l in &term.factors {
            prod = prod.try_mul(&ladders[l.orbital - 1][l.dagger as usize])?;
        }
        out = out.try_add(&prod)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SiteOrder {
    /// Boustrophedon numbering: even rows left to right, odd rows right to left.
    /// A 2×2 plaquette becomes the ring 1-2-3-4.
    #[default]
    Snake,
    RowMajor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermGroup {
    HopHorizontalEven,
    HopHorizontalOdd,
    HopVerticalEven,
    HopVerticalOdd,
    Onsite,
}

impl TermGroup {
    pub const ALL: [TermGroup; 5] = [
        TermGroup::HopHorizontalEven,
        TermGroup::HopHorizontalOdd,
        TermGroup::HopVerticalEven,
        TermGroup::HopVerticalOdd,
        TermGroup::Onsite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TermGroup::HopHorizontalEven => "hop_h_even",
            TermGroup::HopHorizontalOdd => "hop_h_odd",
            TermGroup::HopVerticalEven => "hop_v_even",
            TermGroup::HopVerticalOdd => "hop_v_odd",
            TermGroup::Onsite => "onsite",
        }
    }
}

impl fmt::Display for TermGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Nearest-neighbour bond between 0-based sites `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub group: TermGroup,
}

/// Rectangular Hubbard lattice with its model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub periodic: bool,
    pub t: f64,
    pub u: f64,
    pub mu: f64,
    pub site_order: SiteOrder,
}

impl LatticeSpec {
    /// Open lattice at half filling with `t = 1`, `U = 4`, `μ = U/2`.
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            periodic: false,
            t: 1.0,
            u: 4.0,
            mu: 2.0,
            site_order: SiteOrder::Snake,
        }
    }

    pub fn periodic(mut self, periodic: bool) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn with_params(mut self, t: f64, u: f64, mu: f64) -> Self {
        self.t = t;
        self.u = u;
        self.mu = mu;
        self
    }

    pub fn with_site_order(mut self, order: SiteOrder) -> Self {
        self.site_order = order;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidLattice(format!(
                "{}x{} lattice has no sites",
                self.rows, self.cols
            )));
        }
        if 2 * self.num_sites() > 64 {
            return Err(Error::InvalidLattice(format!(
                "{} spin orbitals exceed the 64-qubit register limit",
                2 * self.num_sites()
            )));
        }
        if ![self.t, self.u, self.mu].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidLattice("non-finite model parameter".into()));
        }
        Ok(())
    }

    pub fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_orbitals(&self) -> usize {
        2 * self.num_sites()
    }

    pub fn half_filling(&self) -> bool {
        (self.mu - self.u / 2.0).abs() <= 1e-12
    }

    /// 0-based site index of row `r`, column `c`.
    pub fn site(&self, r: usize, c: usize) -> usize {
        match self.site_order {
            SiteOrder::RowMajor => r * self.cols + c,
            SiteOrder::Snake if r % 2 == 0 => r * self.cols + c,
            SiteOrder::Snake => r * self.cols + (self.cols - 1 - c),
        }
    }

    /// 1-based spin orbital of 0-based `site`.
    pub fn orbital(&self, site: usize, spin: Spin) -> usize {
        match spin {
            Spin::Up => site + 1,
            Spin::Down => self.num_sites() + site + 1,
        }
    }

    pub fn bonds(&self) -> Vec<Bond> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut push = |s1: usize, s2: usize, group: TermGroup| {
            let (a, b) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
            if a != b && seen.insert((a, b)) {
                out.push(Bond { a, b, group });
            }
        };
        let h_span = if self.periodic && self.cols > 2 {
            self.cols
        } else {
            self.cols.saturating_sub(1)
        };
        for r in 0..self.rows {
            for c in 0..h_span {
                let group = if c % 2 == 0 {
                    TermGroup::HopHorizontalEven
                } else {
                    TermGroup::HopHorizontalOdd
                };
                push(self.site(r, c), self.site(r, (c + 1) % self.cols), group);
            }
        }
        let v_span = if self.periodic && self.rows > 2 {
            self.rows
        } else {
            self.rows.saturating_sub(1)
        };
        for r in 0..v_span {
            for c in 0..self.cols {
                let group = if r % 2 == 0 {
                    TermGroup::HopVerticalEven
                } else {
                    TermGroup::HopVerticalOdd
                };
                push(self.site(r, c), self.site((r + 1) % self.rows, c), group);
            }
        }
        out
    }

    /// True when the bond set is exactly the ring `0-1-…-(L-1)-0` in site order,
    /// which is the geometry the Fourier transform diagonalizes.
    pub fn is_site_ordered_ring(&self) -> bool {
        let l = self.num_sites();
        let mut ring = BTreeSet::new();
        for j in 0..l {
            let k = (j + 1) % l;
            if j != k {
                ring.insert((j.min(k), j.max(k)));
            }
        }
        let bonds: BTreeSet<_> = self.bonds().iter().map(|b| (b.a, b.b)).collect();
        bonds == ring
    }
}

/// `-t (a†_a a_b + a†_b a_a)` for both spins.
pub fn hopping_term(spec: &LatticeSpec, bond: &Bond) -> FermionSum {
    let mut f = FermionSum::new(spec.num_orbitals());
    for spin in [Spin::Up, Spin::Down] {
        let p = spec.orbital(bond.a, spin);
        let q = spec.orbital(bond.b, spin);
        let term = FermionTerm::new(-spec.t, vec![Ladder::create(p), Ladder::annihilate(q)]);
        f.push(term.adjoint());
        f.push(term);
    }
    f
}

/// `U n_{i↑} n_{i↓} − μ (n_{i↑} + n_{i↓})` for 0-based `site`.
pub fn onsite_term(spec: &LatticeSpec, site: usize) -> FermionSum {
    let up = spec.orbital(site, Spin::Up);
    let down = spec.orbital(site, Spin::Down);
    let mut f = FermionSum::new(spec.num_orbitals());
    f.push(FermionTerm::new(
        spec.u,
        vec![
            Ladder::create(up),
            Ladder::annihilate(up),
            Ladder::create(down),
            Ladder::annihilate(down),
        ],
    ));
    f.push(number_term(up, -spec.mu));
    f.push(number_term(down, -spec.mu));
    f
}

/// The Hubbard Hamiltonian split into its named commuting groups, in the fixed
/// order hop_h_even, hop_h_odd, hop_v_even, hop_v_odd, onsite. Empty groups
/// are omitted.
pub fn hubbard_groups(spec: &LatticeSpec) -> Result<Vec<(TermGroup, FermionSum)>> {
    spec.validate()?;
    let bonds = spec.bonds();
    let mut out = Vec::new();
    for group in TermGroup::ALL {
        let mut f = FermionSum::new(spec.num_orbitals());
        if group == TermGroup::Onsite {
            for site in 0..spec.num_sites() {
                f.extend(&onsite_term(spec, site));
            }
        } else {
            for bond in bonds.iter().filter(|b| b.group == group) {
                f.extend(&hopping_term(spec, bond));
            }
        }
        if !f.is_empty() {
            out.push((group, f));
        }
    }
    Ok(out)
}

pub fn build_hubbard(spec: &LatticeSpec) -> Result<FermionSum> {
    let mut h = FermionSum::new(spec.num_orbitals());
    for (_, g) in hubbard_groups(spec)? {
        h.extend(&g);
    }
    Ok(h)
}

/// Qubit Hamiltonian of the lattice.
pub fn hubbard_qubit_hamiltonian(spec: &LatticeSpec) -> Result<PauliSum> {
    jw_transform(&build_hubbard(spec)?)
}

/// Kinetic part alone (all hopping groups).
pub fn hopping_qubit_hamiltonian(spec: &LatticeSpec) -> Result<PauliSum> {
    let mut f = FermionSum::new(spec.num_orbitals());
    for (g, part) in hubbard_groups(spec)? {
        if g != TermGroup::Onsite {
            f.extend(&part);
        }
    }
    jw_transform(&f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriveKind {
    /// `Σ_j (a†_j + a_j)`
    X,
    /// `Σ_j i(a†_j − a_j)`
    Y,
}

impl DriveKind {
    pub fn pauli(self) -> Pauli {
        match self {
            DriveKind::X => Pauli::X,
            DriveKind::Y => Pauli::Y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DriveSpec {
    pub kind: DriveKind,
    pub register: Spin,
}

/// Offset of the first qubit of a spin register (0 for up, L for down).
pub fn register_offset(register: Spin, num_sites: usize) -> usize {
    match register {
        Spin::Up => 0,
        Spin::Down => num_sites,
    }
}

/// `P_j ⊗ Z_{l<j}` on the `j`-th (1-based) orbital of a spin register, with
/// the Z string restarting at the register start.
pub fn drive_string(
    kind: DriveKind,
    register: Spin,
    j: usize,
    num_sites: usize,
    num_qubits: usize,
) -> Result<PauliString> {
    let offset = register_offset(register, num_sites);
    if j == 0 || j > num_sites {
        return Err(Error::IndexOutOfRange {
            what: "drive site",
            index: j,
            max: num_sites,
        });
    }
    if offset + num_sites > num_qubits {
        return Err(Error::IndexOutOfRange {
            what: "drive register end",
            index: offset + num_sites,
            max: num_qubits,
        });
    }
    let mut sites: Vec<(usize, Pauli)> = (1..j).map(|l| (offset + l, Pauli::Z)).collect();
    sites.push((offset + j, kind.pauli()));
    PauliString::from_sites(num_qubits, &sites)
}

pub fn build_drive(spec: DriveSpec, num_sites: usize, num_qubits: usize) -> Result<PauliSum> {
    let strings = (1..=num_sites)
        .map(|j| drive_string(spec.kind, spec.register, j, num_sites, num_qubits))
        .collect::<Result<Vec<_>>>()?;
    PauliSum::from_terms(num_qubits, strings.into_iter().map(|p| (p, Complex64::new(1.0, 0.0))))
}

/// Applies `a†_mode` (0-based) to a basis index of an `l`-mode register.
/// Returns `None` when the mode is already occupied.
fn create_on_basis(mode: usize, l: usize, b: usize) -> Option<(f64, usize)> {
    let bit = 1usize << (l - 1 - mode);
    if b & bit != 0 {
        return None;
    }
    let higher = !((bit << 1) - 1) & ((1usize << l) - 1);
    let sign = if (b & higher).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
    Some((sign, b | bit))
}

/// Single-particle DFT matrix `F[k][j] = e^{-i2πkj/L}/√L`.
pub fn dft_matrix(l: usize) -> Vec<Vec<Complex64>> {
    let norm = 1.0 / (l as f64).sqrt();
    (0..l)
        .map(|k| {
            (0..l)
                .map(|j| Complex64::from_polar(norm, -2.0 * PI * (k * j) as f64 / l as f64))
                .collect()
        })
        .collect()
}

/// Fock-space fermionic Fourier transform `FT` on an `l`-mode register.
///
/// Column `n` of `FT†` is `c†_{k1} c†_{k2} ⋯ |0⟩` over the occupied momenta
/// `k1 < k2 < …` of `n`, with `c†_k = Σ_j F[k][j] a†_j`. Hence
/// `FT · T · FT†` is diagonal for the periodic ring hopping `T`.
pub fn fourier_unitary(l: usize) -> Result<DenseMatrix> {
    if l == 0 {
        return Err(Error::InvalidLattice("Fourier transform on zero modes".into()));
    }
    check_dense_cap(l)?;
    let dim = 1usize << l;
    let f = dft_matrix(l);
    let mut ft_dag = DenseMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut state = vec![Complex64::new(0.0, 0.0); dim];
        state[0] = Complex64::new(1.0, 0.0);
        // apply the highest momentum first so the lowest ends up leftmost
        for k in (0..l).rev() {
            if col & (1 << (l - 1 - k)) == 0 {
                continue;
            }
            let mut next = vec![Complex64::new(0.0, 0.0); dim];
            for (b, amp) in state.iter().enumerate() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                for (j, fkj) in f[k].iter().enumerate() {
                    if let Some((sign, nb)) = create_on_basis(j, l, b) {
                        next[nb] += amp * fkj * sign;
                    }
                }
            }
            state = next;
        }
        for (row, amp) in state.into_iter().enumerate() {
            ft_dag[(row, col)] = amp;
        }
    }
    Ok(ft_dag.adjoint())
}

/// Reference states for the variational search.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// `H^{⊗N}|0⟩`
    PlusAll,
    /// `FT†|1100;1100⟩` on the four-site ring.
    OmegaT1,
    /// `FT†|1001;1001⟩` on the four-site ring.
    OmegaT2,
    /// `(Ω_T1 − Ω_T2)/√2`
    OmegaTSuperposition,
    /// Computational basis state, qubit 1 first (e.g. a Hartree-Fock occupation).
    Computational(String),
    /// `FT†|up;down⟩` with momentum occupations per register, on a ring lattice.
    Momentum { up: String, down: String },
}

fn parse_bits(bits: &str, expect: usize) -> Result<usize> {
    if bits.len() != expect || !bits.chars().all(|c| c == '0' || c == '1') {
        return Err(Error::Unsupported(format!(
            "bitstring {bits:?} must have {expect} characters from {{0,1}}"
        )));
    }
    Ok(usize::from_str_radix(bits, 2).expect("validated bitstring"))
}

fn momentum_state(spec: &LatticeSpec, up: &str, down: &str) -> Result<Statevector> {
    let l = spec.num_sites();
    if !spec.is_site_ordered_ring() {
        return Err(Error::Unsupported(format!(
            "momentum-space states need a ring lattice in site order, got {}x{} (periodic={})",
            spec.rows, spec.cols, spec.periodic
        )));
    }
    let ft_dag = fourier_unitary(l)?.adjoint();
    let up_col = ft_dag.column(parse_bits(up, l)?).into_owned();
    let down_col = ft_dag.column(parse_bits(down, l)?).into_owned();
    let mut amps = Vec::with_capacity(1 << (2 * l));
    for a in up_col.iter() {
        for b in down_col.iter() {
            amps.push(a * b);
        }
    }
    Statevector::from_amplitudes(2 * l, amps)
}

fn require_four_ring(spec: &LatticeSpec) -> Result<()> {
    if spec.num_sites() != 4 || !spec.is_site_ordered_ring() {
        return Err(Error::Unsupported(
            "Ω_T states are defined for the four-site ring (2x2 plaquette or periodic 1x4 chain)".into(),
        ));
    }
    Ok(())
}

/// Prepares `kind` on the register of `spec`'s lattice.
pub fn prepare_initial_state(kind: &InitialState, spec: &LatticeSpec) -> Result<Statevector> {
    spec.validate()?;
    let n = spec.num_orbitals();
    match kind {
        InitialState::OmegaT1 => {
            require_four_ring(spec)?;
            momentum_state(spec, "1100", "1100")
        }
        InitialState::OmegaT2 => {
            require_four_ring(spec)?;
            momentum_state(spec, "1001", "1001")
        }
        InitialState::OmegaTSuperposition => {
            require_four_ring(spec)?;
            let a = momentum_state(spec, "1100", "1100")?;
            let b = momentum_state(spec, "1001", "1001")?;
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let amps = a
                .amplitudes()
                .iter()
                .zip(b.amplitudes())
                .map(|(x, y)| (x - y) * s)
                .collect();
            Statevector::from_amplitudes(n, amps)
        }
        InitialState::Momentum { up, down } => momentum_state(spec, up, down),
        other => prepare_register_state(other, n),
    }
}

/// Lattice-independent kinds on a bare `n`-qubit register.
pub fn prepare_register_state(kind: &InitialState, n: usize) -> Result<Statevector> {
    match kind {
        InitialState::PlusAll => Ok(Statevector::plus(n)),
        InitialState::Computational(bits) => Statevector::from_bits(bits).and_then(|s| {
            if s.num_qubits() != n {
                Err(Error::DimensionMismatch {
                    expected: n,
                    actual: s.num_qubits(),
                })
            } else {
                Ok(s)
            }
        }),
        other => Err(Error::Unsupported(format!("{other:?} needs a lattice description"))),
    }
}
