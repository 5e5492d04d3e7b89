//! Qubit operators as weighted sums of Pauli strings.
//!
//! A [`PauliString`] stores one X bit and one Z bit per qubit; a qubit with
//! both bits set carries Y. Qubit 1 is the leftmost tensor factor and maps to
//! the most significant bit of a basis-state index, so the masks can be used
//! directly against statevector indices.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register that may be realized as a dense matrix.
pub const DENSE_CAP: usize = 14;

/// Coefficients with modulus at or below this are dropped by [`PauliSum::simplify`].
pub const PRUNE_TOL: f64 = 1e-12;

pub type DenseMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }
}

/// A power of the imaginary unit, `i^k` with `k` in `0..4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_quarter_turns(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn quarter_turns(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// Multiplies `c` by this phase without rounding.
    pub fn apply(self, c: Complex64) -> Complex64 {
        match self.0 {
            0 => c,
            1 => Complex64::new(-c.im, c.re),
            2 => -c,
            _ => Complex64::new(c.im, -c.re),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Tensor product of single-qubit Paulis on `num_qubits` qubits (at most 64).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    num_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> Self {
        assert!((1..=64).contains(&num_qubits), "Pauli strings support 1..=64 qubits");
        Self { num_qubits, x: 0, z: 0 }
    }

    /// Builds a string from raw index-convention masks (bit `n - q` is qubit `q`).
    pub fn from_masks(num_qubits: usize, x: u64, z: u64) -> Self {
        let s = Self::identity(num_qubits);
        let valid = s.valid_mask();
        assert!(x & !valid == 0 && z & !valid == 0, "mask exceeds register");
        Self { num_qubits, x, z }
    }

    /// Single Pauli `p` on 1-based qubit `q`.
    pub fn single(num_qubits: usize, q: usize, p: Pauli) -> Result<Self> {
        let mut s = Self::identity(num_qubits);
        s.set(q, p)?;
        Ok(s)
    }

    /// Builds a string from `(qubit, Pauli)` pairs, 1-based qubits.
    pub fn from_sites(num_qubits: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(num_qubits);
        for &(q, p) in sites {
            s.set(q, p)?;
        }
        Ok(s)
    }

    /// Parses `letters`, qubit 1 first.
    pub fn from_letters(letters: &str) -> Result<Self> {
        let n = letters.chars().count();
        if n == 0 || n > 64 {
            return Err(Error::Parse {
                line: 0,
                message: format!("Pauli string must have 1..=64 letters, got {n}"),
            });
        }
        let mut s = Self::identity(n);
        for (k, c) in letters.chars().enumerate() {
            let p = Pauli::from_letter(c).ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("invalid Pauli letter {c:?}"),
            })?;
            s.set(k + 1, p)?;
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    fn valid_mask(&self) -> u64 {
        if self.num_qubits == 64 {
            u64::MAX
        } else {
            (1u64 << self.num_qubits) - 1
        }
    }

    /// Index-convention bit for 1-based qubit `q`.
    pub fn qubit_bit(num_qubits: usize, q: usize) -> u64 {
        1u64 << (num_qubits - q)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q == 0 || q > self.num_qubits {
            return Err(Error::IndexOutOfRange {
                what: "qubit",
                index: q,
                max: self.num_qubits,
            });
        }
        Ok(())
    }

    pub fn set(&mut self, q: usize, p: Pauli) -> Result<()> {
        self.check_qubit(q)?;
        let bit = Self::qubit_bit(self.num_qubits, q);
        let (xb, zb) = p.bits();
        self.x = if xb { self.x | bit } else { self.x & !bit };
        self.z = if zb { self.z | bit } else { self.z & !bit };
        Ok(())
    }

    pub fn get(&self, q: usize) -> Pauli {
        let bit = Self::qubit_bit(self.num_qubits, q);
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// 1-based qubits carrying a non-identity Pauli, ascending.
    pub fn support(&self) -> Vec<usize> {
        (1..=self.num_qubits).filter(|&q| self.get(q) != Pauli::I).collect()
    }

    pub fn letters(&self) -> String {
        (1..=self.num_qubits).map(|q| self.get(q).letter()).collect()
    }

    /// `i^{#Y}`: the string equals this phase times `X^x Z^z`.
    pub fn y_phase(&self) -> Phase {
        Phase::from_quarter_turns(self.y_count())
    }

    /// Product `self · other = phase · result`.
    pub fn mul(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // Z^a X^b = (-1)^{|a & b|} X^b Z^a when moving other's X past self's Z.
        let swaps = (self.z & other.x).count_ones();
        let ny_result = (x & z).count_ones();
        let k = self.y_count() + other.y_count() + 2 * swaps + 4 - (ny_result % 4);
        Ok((
            Phase::from_quarter_turns(k),
            PauliString {
                num_qubits: self.num_qubits,
                x,
                z,
            },
        ))
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Action on a basis state: `P|b> = sign · |b ^ x>`.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (Complex64, u64) {
        let sign = if (b & self.z).count_ones() % 2 == 1 {
            Phase::MINUS_ONE
        } else {
            Phase::ONE
        };
        ((self.y_phase() * sign).to_complex(), b ^ self.x)
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        check_dense_cap(self.num_qubits)?;
        let dim = 1usize << self.num_qubits;
        let mut m = DenseMatrix::zeros(dim, dim);
        for col in 0..dim as u64 {
            let (amp, row) = self.apply_to_basis(col);
            m[(row as usize, col as usize)] = amp;
        }
        Ok(m)
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({})", self.letters())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.letters())
    }
}

pub(crate) fn check_dense_cap(num_qubits: usize) -> Result<()> {
    if num_qubits > DENSE_CAP {
        Err(Error::DenseCap {
            num_qubits,
            cap: DENSE_CAP,
        })
    } else {
        Ok(())
    }
}

/// Linear combination of Pauli strings sharing one register size.
#[derive(Clone, PartialEq)]
pub struct PauliSum {
    num_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self::from_string(PauliString::identity(num_qubits), Complex64::new(1.0, 0.0))
    }

    pub fn from_string(p: PauliString, coeff: Complex64) -> Self {
        let mut s = Self::zero(p.num_qubits());
        s.terms.insert(p, coeff);
        s.simplify()
    }

    pub fn from_terms<I>(num_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut s = Self::zero(num_qubits);
        for (p, c) in terms {
            s.add_term(p, c)?;
        }
        Ok(s.simplify())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    /// Coefficient of the identity string.
    pub fn constant(&self) -> Complex64 {
        self.coefficient(&PauliString::identity(self.num_qubits))
    }

    pub fn without_identity(&self) -> Self {
        let mut s = self.clone();
        s.terms.remove(&PauliString::identity(self.num_qubits));
        s
    }

    fn check_dims(&self, n: usize) -> Result<()> {
        if self.num_qubits != n {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: n,
            });
        }
        Ok(())
    }

    /// Accumulates `coeff · p` without pruning.
    pub fn add_term(&mut self, p: PauliString, coeff: Complex64) -> Result<()> {
        self.check_dims(p.num_qubits())?;
        *self.terms.entry(p).or_default() += coeff;
        Ok(())
    }

    /// Drops terms with modulus at or below [`PRUNE_TOL`].
    pub fn simplify(mut self) -> Self {
        self.terms.retain(|_, c| c.norm() > PRUNE_TOL);
        self
    }

    pub fn try_add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_dims(other.num_qubits)?;
        let mut out = self.clone();
        for (p, c) in &other.terms {
            *out.terms.entry(*p).or_default() += *c;
        }
        Ok(out.simplify())
    }

    pub fn try_sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.try_add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= factor;
        }
        out.simplify()
    }

    pub fn scale_real(&self, factor: f64) -> PauliSum {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn try_mul(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_dims(other.num_qubits)?;
        let mut out = PauliSum::zero(self.num_qubits);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (phase, p) = a.mul(b)?;
                *out.terms.entry(p).or_default() += phase.apply(ca * cb);
            }
        }
        Ok(out.simplify())
    }

    /// `self · other − other · self`.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    pub fn commutator_is_zero(&self, other: &PauliSum) -> Result<bool> {
        Ok(self.commutator(other)?.is_empty())
    }

    /// Largest imaginary part among coefficients; zero for a Hermitian sum.
    pub fn hermitian_residual(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_residual() <= PRUNE_TOL
    }

    pub fn adjoint(&self) -> PauliSum {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.conj();
        }
        out
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        check_dense_cap(self.num_qubits)?;
        let dim = 1usize << self.num_qubits;
        let mut m = DenseMatrix::zeros(dim, dim);
        for (p, c) in &self.terms {
            for col in 0..dim as u64 {
                let (amp, row) = p.apply_to_basis(col);
                m[(row as usize, col as usize)] += amp * c;
            }
        }
        Ok(m)
    }

    /// Interchange text: one `<re> <im> <letters>` line per term, sorted by letters.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(String, Complex64)> = self.terms.iter().map(|(p, c)| (p.letters(), *c)).collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out = String::new();
        for (letters, c) in rows {
            out.push_str(&format!("{:.16e} {:.16e} {}\n", c.re, c.im, letters));
        }
        out
    }
}

impl fmt::Debug for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.terms.iter().map(|(p, c)| (p.letters(), c)))
            .finish()
    }
}

impl Add for &PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: &PauliSum) -> PauliSum {
        self.try_add(rhs).expect("PauliSum dimension mismatch")
    }
}

impl Sub for &PauliSum {
    type Output = PauliSum;
    fn sub(self, rhs: &PauliSum) -> PauliSum {
        self.try_sub(rhs).expect("PauliSum dimension mismatch")
    }
}

impl Mul for &PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: &PauliSum) -> PauliSum {
        self.try_mul(rhs).expect("PauliSum dimension mismatch")
    }
}

impl Neg for &PauliSum {
    type Output = PauliSum;
    fn neg(self) -> PauliSum {
        self.scale_real(-1.0)
    }
}

/// A parsed interchange file: the operator plus `# key=value` comment metadata.
#[derive(Debug, Clone)]
pub struct InterchangeFile {
    pub sum: PauliSum,
    pub metadata: BTreeMap<String, String>,
}

impl InterchangeFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        let mut sum: Option<PauliSum> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((k, v)) = comment.trim().split_once('=') {
                    metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            let err = |message: String| Error::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected `<re> <im> <letters>`, found {} fields",
                    fields.len()
                )));
            }
            let re: f64 = fields[0]
                .parse()
                .map_err(|_| err(format!("bad real part {:?}", fields[0])))?;
            let im: f64 = fields[1]
                .parse()
                .map_err(|_| err(format!("bad imaginary part {:?}", fields[1])))?;
            if !re.is_finite() || !im.is_finite() {
                return Err(err("non-finite coefficient".into()));
            }
            let p = PauliString::from_letters(fields[2]).map_err(|e| match e {
                Error::Parse { message, .. } => err(message),
                other => other,
            })?;
            let s = sum.get_or_insert_with(|| PauliSum::zero(p.num_qubits()));
            if s.num_qubits() != p.num_qubits() {
                return Err(err(format!(
                    "string has {} qubits, earlier lines have {}",
                    p.num_qubits(),
                    s.num_qubits()
                )));
            }
            s.add_term(p, Complex64::new(re, im))?;
        }
        let sum = sum.ok_or(Error::Parse {
            line: 0,
            message: "no operator terms found".into(),
        })?;
        Ok(Self {
            sum: sum.simplify(),
            metadata,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.sum.to_text());
        out
    }
}
