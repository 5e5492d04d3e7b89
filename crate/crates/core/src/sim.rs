//! In-place statevector evolution, expectation values and the exact
//! ground-space oracle.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fermion::LatticeSpec;
use crate::pauli::{check_dense_cap, DenseMatrix, PauliString, PauliSum};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Default degeneracy window, relative to the spectral range.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Maximum deviation from unitarity accepted by [`Statevector::apply_dense_block`].
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OneQubitGate {
    /// `exp(-iθX/2)`
    RX(f64),
    RY(f64),
    RZ(f64),
    H,
    /// `(Y + Z)/√2`, the basis change taking Y to Z.
    G,
    X,
}

impl OneQubitGate {
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match self {
            OneQubitGate::RX(t) => {
                let (sn, cs) = (t / 2.0).sin_cos();
                [[c(cs, 0.0), c(0.0, -sn)], [c(0.0, -sn), c(cs, 0.0)]]
            }
            OneQubitGate::RY(t) => {
                let (sn, cs) = (t / 2.0).sin_cos();
                [[c(cs, 0.0), c(-sn, 0.0)], [c(sn, 0.0), c(cs, 0.0)]]
            }
            OneQubitGate::RZ(t) => [
                [Complex64::from_polar(1.0, -t / 2.0), ZERO],
                [ZERO, Complex64::from_polar(1.0, t / 2.0)],
            ],
            OneQubitGate::H => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
            OneQubitGate::G => [[c(s, 0.0), c(0.0, -s)], [c(0.0, s), c(-s, 0.0)]],
            OneQubitGate::X => [[ZERO, ONE], [ONE, ZERO]],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OneQubitGate::RX(_) => "RX",
            OneQubitGate::RY(_) => "RY",
            OneQubitGate::RZ(_) => "RZ",
            OneQubitGate::H => "H",
            OneQubitGate::G => "G",
            OneQubitGate::X => "X",
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl std::fmt::Debug for Statevector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Statevector")
            .field("num_qubits", &self.num_qubits)
            .field("norm", &self.norm())
            .finish()
    }
}

fn check_register(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > 30 {
        return Err(Error::Unsupported(format!(
            "statevector register of {num_qubits} qubits (supported 1..=30)"
        )));
    }
    Ok(())
}

impl Statevector {
    /// `|0…0⟩`
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[index] = ONE;
        Self { num_qubits, amps }
    }

    /// `H^{⊗n}|0⟩`
    pub fn plus(num_qubits: usize) -> Self {
        let a = Complex64::new((0.5f64).powf(num_qubits as f64 / 2.0), 0.0);
        Self {
            num_qubits,
            amps: vec![a; 1 << num_qubits],
        }
    }

    /// Basis state from an occupation string, qubit 1 first.
    pub fn from_bits(bits: &str) -> Result<Self> {
        check_register(bits.len())?;
        let mut index = 0usize;
        for ch in bits.chars() {
            index <<= 1;
            match ch {
                '0' => {}
                '1' => index |= 1,
                other => return Err(Error::Unsupported(format!("occupation string contains {other:?}"))),
            }
        }
        Ok(Self::basis(bits.len(), index))
    }

    pub fn from_amplitudes(num_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_register(num_qubits)?;
        if amps.len() != 1 << num_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << num_qubits,
                actual: amps.len(),
            });
        }
        Ok(Self { num_qubits, amps })
    }

    /// Haar-like random state from complex Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        let mut amps: Vec<Complex64> = (0..1usize << num_qubits)
            .map(|_| {
                // Box-Muller
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                let v: f64 = rng.gen();
                let r = (-2.0 * u.ln()).sqrt();
                Complex64::from_polar(r, 2.0 * std::f64::consts::PI * v)
            })
            .collect();
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= n);
        Self { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        self.check_same(other.num_qubits)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.amps.iter_mut().for_each(|a| *a *= factor);
    }

    /// Overwrites the amplitudes with those of `other` without reallocating.
    pub fn copy_from(&mut self, other: &Statevector) -> Result<()> {
        self.check_same(other.num_qubits)?;
        self.amps.copy_from_slice(&other.amps);
        Ok(())
    }

    fn check_same(&self, n: usize) -> Result<()> {
        if n != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: n,
            });
        }
        Ok(())
    }

    fn bit(&self, q: usize) -> Result<usize> {
        if q == 0 || q > self.num_qubits {
            return Err(Error::IndexOutOfRange {
                what: "qubit",
                index: q,
                max: self.num_qubits,
            });
        }
        Ok(1 << (self.num_qubits - q))
    }

    pub fn apply_one_qubit(&mut self, q: usize, gate: OneQubitGate) -> Result<()> {
        let bit = self.bit(q)?;
        let [[m00, m01], [m10, m11]] = gate.matrix();
        for hi in (0..self.amps.len()).step_by(2 * bit) {
            for b in hi..hi + bit {
                let a0 = self.amps[b];
                let a1 = self.amps[b | bit];
                self.amps[b] = m00 * a0 + m01 * a1;
                self.amps[b | bit] = m10 * a0 + m11 * a1;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        let cb = self.bit(control)?;
        let tb = self.bit(target)?;
        if cb == tb {
            return Err(Error::Unsupported(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        for b in 0..self.amps.len() {
            if b & cb != 0 && b & tb == 0 {
                self.amps.swap(b, b | tb);
            }
        }
        Ok(())
    }

    /// `ψ ← exp(iθP) ψ = cos θ ψ + i sin θ Pψ`.
    pub fn apply_pauli_exp(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        self.check_same(p.num_qubits())?;
        self.apply_pauli_exp_masks(
            p.x_mask() as usize,
            p.z_mask() as usize,
            p.y_phase().to_complex(),
            theta,
        );
        Ok(())
    }

    /// Mask form of [`Self::apply_pauli_exp`]; `y_phase` is `i^{#Y}`.
    pub fn apply_pauli_exp_masks(&mut self, x: usize, z: usize, y_phase: Complex64, theta: f64) {
        let (sn, cs) = theta.sin_cos();
        if x == 0 {
            // y_phase is 1 when there is no X component
            let plus = Complex64::new(cs, sn);
            let minus = Complex64::new(cs, -sn);
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a *= if (b & z).count_ones() & 1 == 0 { plus } else { minus };
            }
            return;
        }
        let k = Complex64::new(0.0, sn) * y_phase;
        let h = 1usize << (usize::BITS - 1 - x.leading_zeros());
        let amps = &mut self.amps;
        for hi in (0..amps.len()).step_by(2 * h) {
            for b in hi..hi + h {
                let c = b ^ x;
                let sb = if (b & z).count_ones() & 1 == 0 { k } else { -k };
                let sc = if (c & z).count_ones() & 1 == 0 { k } else { -k };
                let ab = amps[b];
                let ac = amps[c];
                amps[b] = ab * cs + sc * ac;
                amps[c] = ac * cs + sb * ab;
            }
        }
    }

    /// `ψ ← Pψ`.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_same(p.num_qubits())?;
        let old = self.amps.clone();
        for (b, a) in old.into_iter().enumerate() {
            let (ph, c) = p.apply_to_basis(b as u64);
            self.amps[c as usize] = ph * a;
        }
        Ok(())
    }

    /// Applies `u` to the contiguous block of qubits starting at 1-based
    /// `first`, with `first` as the block's most significant qubit.
    pub fn apply_dense_block(&mut self, u: &DenseMatrix, first: usize) -> Result<()> {
        let width = block_width(u)?;
        let deviation = unitarity_deviation(u);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        if first == 0 || first + width - 1 > self.num_qubits {
            return Err(Error::IndexOutOfRange {
                what: "block end qubit",
                index: first + width - 1,
                max: self.num_qubits,
            });
        }
        self.apply_dense_block_unchecked(u, first, width);
        Ok(())
    }

    pub(crate) fn apply_dense_block_unchecked(&mut self, u: &DenseMatrix, first: usize, width: usize) {
        let shift = self.num_qubits + 1 - first - width;
        let bsize = 1usize << width;
        let mut buf = vec![ZERO; bsize];
        for high in 0..1usize << (first - 1) {
            for low in 0..1usize << shift {
                let base = (high << (shift + width)) | low;
                for (k, v) in buf.iter_mut().enumerate() {
                    *v = self.amps[base | (k << shift)];
                }
                for r in 0..bsize {
                    let mut acc = ZERO;
                    for (k, v) in buf.iter().enumerate() {
                        acc += u[(r, k)] * v;
                    }
                    self.amps[base | (r << shift)] = acc;
                }
            }
        }
    }

    /// `⟨ψ|O|ψ⟩` for a Hermitian observable.
    pub fn expectation(&self, o: &PauliSum) -> Result<f64> {
        Observable::new(o)?.expectation(self)
    }

    /// Little-endian interleaved `f64` real/imaginary pairs, basis index ascending.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(num_qubits: usize, bytes: &[u8]) -> Result<Self> {
        let expected = 16usize << num_qubits;
        if bytes.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: bytes.len(),
            });
        }
        let amps = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Self::from_amplitudes(num_qubits, amps)
    }
}

fn block_width(u: &DenseMatrix) -> Result<usize> {
    let dim = u.nrows();
    if dim != u.ncols() || dim < 2 || !dim.is_power_of_two() {
        return Err(Error::Unsupported(format!(
            "dense block of shape {}x{} is not a square power-of-two matrix",
            u.nrows(),
            u.ncols()
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Largest entry of `U†U − I`.
pub fn unitarity_deviation(u: &DenseMatrix) -> f64 {
    let prod = u.adjoint() * u;
    let mut worst = 0.0f64;
    for r in 0..prod.nrows() {
        for c in 0..prod.ncols() {
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((prod[(r, c)] - target).norm());
        }
    }
    worst
}

/// Hermitian observable compiled for repeated expectation values: terms are
/// merged by X mask into per-basis coefficient tables.
#[derive(Debug, Clone)]
pub struct Observable {
    num_qubits: usize,
    diagonal: Vec<f64>,
    /// `(x, c)` with `(Oψ)[b ^ x] += c[b] ψ[b]`.
    flips: Vec<(usize, Vec<Complex64>)>,
}

impl Observable {
    pub fn new(o: &PauliSum) -> Result<Self> {
        let residual = o.hermitian_residual();
        if residual > 1e-10 {
            return Err(Error::NotHermitian { residual });
        }
        let n = o.num_qubits();
        check_register(n)?;
        let dim = 1usize << n;
        let mut groups: BTreeMap<u64, Vec<Complex64>> = BTreeMap::new();
        for (p, coeff) in o.iter() {
            let table = groups.entry(p.x_mask()).or_insert_with(|| vec![ZERO; dim]);
            let base = p.y_phase().to_complex() * coeff;
            let z = p.z_mask() as usize;
            for (b, c) in table.iter_mut().enumerate() {
                if (b & z).count_ones() & 1 == 0 {
                    *c += base;
                } else {
                    *c -= base;
                }
            }
        }
        let diagonal = groups
            .remove(&0)
            .map(|d| d.into_iter().map(|c| c.re).collect())
            .unwrap_or_else(|| vec![0.0; dim]);
        let flips = groups.into_iter().map(|(x, c)| (x as usize, c)).collect();
        Ok(Self {
            num_qubits: n,
            diagonal,
            flips,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn check(&self, state: &Statevector) -> Result<()> {
        if state.num_qubits != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: state.num_qubits,
            });
        }
        Ok(())
    }

    pub fn expectation(&self, state: &Statevector) -> Result<f64> {
        self.check(state)?;
        let amps = &state.amps;
        let mut re: f64 = self.diagonal.iter().zip(amps).map(|(d, a)| d * a.norm_sqr()).sum();
        let mut im = 0.0;
        for (x, table) in &self.flips {
            let mut acc = ZERO;
            for (b, c) in table.iter().enumerate() {
                acc += amps[b ^ x].conj() * c * amps[b];
            }
            re += acc.re;
            im += acc.im;
        }
        debug_assert!(
            im.abs() <= 1e-10 * re.abs().max(1.0),
            "imaginary expectation part {im:e}"
        );
        Ok(re)
    }

    /// `Oψ` as a raw amplitude vector.
    pub fn apply(&self, state: &Statevector) -> Result<Vec<Complex64>> {
        self.check(state)?;
        let amps = &state.amps;
        let mut out: Vec<Complex64> = self.diagonal.iter().zip(amps).map(|(d, a)| a * *d).collect();
        for (x, table) in &self.flips {
            for (b, c) in table.iter().enumerate() {
                out[b ^ x] += c * amps[b];
            }
        }
        Ok(out)
    }
}

/// Lowest eigenspace of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct GroundSpace {
    pub energy: f64,
    pub basis: Vec<Statevector>,
    pub degeneracy_tolerance: f64,
    /// Lowest eigenvalue above the ground window, when one exists.
    pub gap: Option<f64>,
}

impl GroundSpace {
    pub fn degeneracy(&self) -> usize {
        self.basis.len()
    }

    /// Restricts the target to one basis vector.
    pub fn pinned(&self, index: usize) -> Result<GroundSpace> {
        let v = self.basis.get(index).ok_or(Error::IndexOutOfRange {
            what: "ground-state vector",
            index,
            max: self.basis.len().saturating_sub(1),
        })?;
        Ok(GroundSpace {
            energy: self.energy,
            basis: vec![v.clone()],
            degeneracy_tolerance: self.degeneracy_tolerance,
            gap: self.gap,
        })
    }
}

/// Projection of `state` onto the ground space: `Σ_v |⟨v|ψ⟩|²`.
pub fn fidelity(state: &Statevector, target: &GroundSpace) -> Result<f64> {
    let mut f = 0.0;
    for v in &target.basis {
        f += v.inner(state)?.norm_sqr();
    }
    Ok(f.min(1.0))
}

/// Mean occupation per site, `⟨N̂⟩/L`.
pub fn site_occupancy(state: &Statevector, lattice: &LatticeSpec) -> Result<f64> {
    if state.num_qubits != lattice.num_orbitals() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_orbitals(),
            actual: state.num_qubits,
        });
    }
    Ok(occupation_number(state) / lattice.num_sites() as f64)
}

/// `⟨N̂⟩`: expected popcount of the basis index.
pub fn occupation_number(state: &Statevector) -> f64 {
    state
        .amps
        .iter()
        .enumerate()
        .map(|(b, a)| b.count_ones() as f64 * a.norm_sqr())
        .sum()
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Exact lowest eigenspace.
///
/// Basis states are first split into the connected sectors of the operator's
/// off-diagonal structure, and each sector is diagonalized densely. The
/// window is `tol` times the spectral range (absolute `tol` for a flat
/// spectrum).
pub fn exact_ground_space(h: &PauliSum, tol: f64) -> Result<GroundSpace> {
    let n = h.num_qubits();
    check_dense_cap(n)?;
    let obs = Observable::new(h)?;
    let dim = 1usize << n;

    let mut parent: Vec<usize> = (0..dim).collect();
    for (x, table) in &obs.flips {
        for (b, c) in table.iter().enumerate() {
            if c.norm() > 1e-14 {
                let (rb, rc) = (find(&mut parent, b), find(&mut parent, b ^ x));
                if rb != rc {
                    parent[rb.max(rc)] = rb.min(rc);
                }
            }
        }
    }
    let mut sectors: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for b in 0..dim {
        let r = find(&mut parent, b);
        sectors.entry(r).or_default().push(b);
    }

    let mut position = vec![0usize; dim];
    let mut spectrum: Vec<(f64, usize, Vec<Complex64>)> = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (sector_id, members) in sectors.values().enumerate() {
        for (i, &b) in members.iter().enumerate() {
            position[b] = i;
        }
        let m = members.len();
        let mut block = DenseMatrix::zeros(m, m);
        for (i, &b) in members.iter().enumerate() {
            block[(i, i)] += Complex64::new(obs.diagonal[b], 0.0);
            for (x, table) in &obs.flips {
                let c = table[b];
                if c != ZERO {
                    // (Hψ)[b^x] += c[b] ψ[b]: column b, row b^x
                    block[(position[b ^ x], i)] += c;
                }
            }
        }
        let eig = SymmetricEigen::new(block);
        for (k, &e) in eig.eigenvalues.iter().enumerate() {
            lo = lo.min(e);
            hi = hi.max(e);
            let col = eig.eigenvectors.column(k);
            spectrum.push((e, sector_id, col.iter().copied().collect()));
        }
    }
    let window = if hi - lo > 0.0 { tol * (hi - lo) } else { tol };
    let members: Vec<&Vec<usize>> = sectors.values().collect();
    let mut basis = Vec::new();
    let mut gap: Option<f64> = None;
    for (e, sector_id, vec) in &spectrum {
        if *e - lo <= window {
            let mut amps = vec![ZERO; dim];
            for (i, &b) in members[*sector_id].iter().enumerate() {
                amps[b] = vec[i];
            }
            fix_phase(&mut amps);
            basis.push(Statevector { num_qubits: n, amps });
        } else {
            gap = Some(gap.map_or(*e, |g: f64| g.min(*e)));
        }
    }
    Ok(GroundSpace {
        energy: lo,
        basis,
        degeneracy_tolerance: tol,
        gap,
    })
}

/// Rotates the global phase so the largest amplitude is real and positive.
fn fix_phase(amps: &mut [Complex64]) {
    let pivot = amps
        .iter()
        .copied()
        .fold(ZERO, |best, a| if a.norm() > best.norm() + 1e-12 { a } else { best });
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        amps.iter_mut().for_each(|a| *a *= rot);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn dense_apply(m: &DenseMatrix, s: &Statevector) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(s.amplitudes());
        (m * v).iter().copied().collect()
    }

    #[test]
    fn one_qubit_basics() {
        let mut s = Statevector::zero(1);
        s.apply_one_qubit(1, OneQubitGate::H).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.amplitudes(), &[c(h, 0.0), c(h, 0.0)], 1e-15));

        let mut s = Statevector::zero(1);
        s.apply_one_qubit(1, OneQubitGate::RZ(0.7)).unwrap();
        assert!(close(s.amplitudes(), &[Complex64::from_polar(1.0, -0.35), ZERO], 1e-15));
        assert!(s.apply_one_qubit(2, OneQubitGate::X).is_err());
    }

    #[test]
    fn g_maps_between_y_and_z() {
        let g = OneQubitGate::G.matrix();
        let gm = DenseMatrix::from_fn(2, 2, |r, k| g[r][k]);
        let z = PauliString::single(1, 1, Pauli::Z).unwrap().to_dense().unwrap();
        let y = PauliString::single(1, 1, Pauli::Y).unwrap().to_dense().unwrap();
        let conj = &gm * z * gm.adjoint();
        assert!((conj - y).iter().all(|e| e.norm() < 1e-15));
    }

    #[test]
    fn cnot_cases() {
        let mut s = Statevector::from_bits("10").unwrap();
        s.apply_cnot(1, 2).unwrap();
        assert_eq!(s, Statevector::from_bits("11").unwrap());
        let mut s = Statevector::from_bits("00").unwrap();
        s.apply_cnot(1, 2).unwrap();
        assert_eq!(s, Statevector::zero(2));
        let mut s = Statevector::from_bits("01").unwrap();
        s.apply_cnot(2, 1).unwrap();
        assert_eq!(s, Statevector::from_bits("11").unwrap());
        assert!(s.apply_cnot(1, 1).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = Statevector::random(4, &mut rng);
        let mut t = r.clone();
        t.apply_cnot(2, 4).unwrap();
        t.apply_cnot(2, 4).unwrap();
        assert_eq!(r, t);
    }

    #[test]
    fn pauli_exp_closed_forms() {
        let z = PauliString::from_letters("Z").unwrap();
        let mut s = Statevector::zero(1);
        s.apply_pauli_exp(&z, 0.3).unwrap();
        assert!(close(s.amplitudes(), &[Complex64::from_polar(1.0, 0.3), ZERO], 1e-15));

        let x = PauliString::from_letters("X").unwrap();
        let mut s = Statevector::zero(1);
        s.apply_pauli_exp(&x, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(close(s.amplitudes(), &[ZERO, c(0.0, 1.0)], 1e-15));
        assert!(Statevector::zero(2).apply_pauli_exp(&x, 0.1).is_err());
    }

    #[test]
    fn pauli_exp_matches_dense_expm() {
        // exp(iθP) with P² = I from the eigendecomposition of P
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for letters in ["XYZI", "YYXZ", "IZIZ", "ZXXY", "YIII"] {
            let p = PauliString::from_letters(letters).unwrap();
            let pm = p.to_dense().unwrap();
            let eig = SymmetricEigen::new(pm.clone());
            let theta = rng.gen_range(-3.0..3.0);
            let phases = DenseMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, theta * l)));
            let expm = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
            let s = Statevector::random(4, &mut rng);
            let mut t = s.clone();
            t.apply_pauli_exp(&p, theta).unwrap();
            assert!(close(t.amplitudes(), &dense_apply(&expm, &s), 1e-10), "{letters}");
        }
    }

    #[test]
    fn dense_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Statevector::random(3, &mut rng);
        let mut a = s.clone();
        a.apply_dense_block(&DenseMatrix::identity(4, 4), 2).unwrap();
        assert!(close(a.amplitudes(), s.amplitudes(), 1e-15));

        let h = OneQubitGate::H.matrix();
        let hm = DenseMatrix::from_fn(2, 2, |r, k| h[r][k]);
        for q in 1..=3 {
            let mut a = s.clone();
            let mut b = s.clone();
            a.apply_dense_block(&hm, q).unwrap();
            b.apply_one_qubit(q, OneQubitGate::H).unwrap();
            assert!(close(a.amplitudes(), b.amplitudes(), 1e-14));
        }
        // a two-qubit block on qubits 2,3 equals the kron-embedded matrix
        let p = PauliString::from_letters("XY").unwrap().to_dense().unwrap();
        let mut a = s.clone();
        a.apply_dense_block(&p, 2).unwrap();
        let full = PauliString::from_letters("IXY").unwrap().to_dense().unwrap();
        assert!(close(a.amplitudes(), &dense_apply(&full, &s), 1e-14));

        let bad = DenseMatrix::identity(2, 2).scale(2.0);
        assert!(matches!(a.apply_dense_block(&bad, 1), Err(Error::NotUnitary { .. })));
        assert!(a.apply_dense_block(&p, 3).is_err());
    }

    #[test]
    fn expectations() {
        let mut plus = Statevector::zero(1);
        plus.apply_one_qubit(1, OneQubitGate::H).unwrap();
        let x = PauliSum::from_string(PauliString::from_letters("X").unwrap(), ONE);
        let z = PauliSum::from_string(PauliString::from_letters("Z").unwrap(), ONE);
        assert!((plus.expectation(&x).unwrap() - 1.0).abs() < 1e-15);
        assert!((Statevector::zero(1).expectation(&z).unwrap() - 1.0).abs() < 1e-15);
        let anti = PauliSum::from_string(PauliString::from_letters("X").unwrap(), c(0.0, 1.0));
        assert!(matches!(plus.expectation(&anti), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn expectation_and_apply_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut sum = PauliSum::zero(4);
        for letters in ["XXYY", "ZIZI", "YZXI", "IIII", "XIIX", "ZZZZ", "IYIY"] {
            let w = rng.gen_range(-1.0..1.0);
            sum.add_term(PauliString::from_letters(letters).unwrap(), c(w, 0.0))
                .unwrap();
        }
        let s = Statevector::random(4, &mut rng);
        let m = sum.to_dense().unwrap();
        let hv = dense_apply(&m, &s);
        let oracle: Complex64 = s.amplitudes().iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
        let obs = Observable::new(&sum).unwrap();
        assert!((obs.expectation(&s).unwrap() - oracle.re).abs() < 1e-12);
        assert!(close(&obs.apply(&s).unwrap(), &hv, 1e-12));
    }

    #[test]
    fn ground_space_single_qubit() {
        let h = PauliSum::from_string(PauliString::from_letters("Z").unwrap(), c(-1.0, 0.0));
        let g = exact_ground_space(&h, DEGENERACY_TOL).unwrap();
        assert!((g.energy + 1.0).abs() < 1e-14);
        assert_eq!(g.degeneracy(), 1);
        assert!((fidelity(&Statevector::zero(1), &g).unwrap() - 1.0).abs() < 1e-14);
        assert!(fidelity(&Statevector::basis(1, 1), &g).unwrap() < 1e-14);
        assert_eq!(g.gap, Some(1.0));
    }

    #[test]
    fn ground_space_degenerate_and_pinned() {
        // Z1 Z2 has the two-fold ground space {|01>, |10>}
        let h = PauliSum::from_string(PauliString::from_letters("ZZ").unwrap(), ONE);
        let g = exact_ground_space(&h, DEGENERACY_TOL).unwrap();
        assert_eq!(g.degeneracy(), 2);
        let s = Statevector::from_amplitudes(2, vec![ZERO, c(0.6, 0.0), c(0.0, 0.8), ZERO]).unwrap();
        assert!((fidelity(&s, &g).unwrap() - 1.0).abs() < 1e-14);
        let pinned = g.pinned(0).unwrap();
        assert!(fidelity(&s, &pinned).unwrap() < 1.0 - 1e-3);
        assert!(g.pinned(2).is_err());
    }

    #[test]
    fn dense_cap_refused() {
        let h = PauliSum::identity(15);
        assert!(matches!(
            exact_ground_space(&h, DEGENERACY_TOL),
            Err(Error::DenseCap { .. })
        ));
    }

    #[test]
    fn occupancy_extremes() {
        let l = LatticeSpec::new(2, 2);
        assert!((site_occupancy(&Statevector::plus(8), &l).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(site_occupancy(&Statevector::zero(8), &l).unwrap(), 0.0);
        assert_eq!(site_occupancy(&Statevector::basis(8, 255), &l).unwrap(), 2.0);
        assert!(site_occupancy(&Statevector::zero(4), &l).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = Statevector::random(3, &mut rng);
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 * 16);
        assert_eq!(&buf[..8], &s.amplitudes()[0].re.to_le_bytes());
        assert_eq!(Statevector::read_binary(3, &buf).unwrap(), s);
        assert!(Statevector::read_binary(2, &buf).is_err());
    }
}
