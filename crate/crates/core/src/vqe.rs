//! Energy objective, derivative-free minimizers and per-evaluation traces.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::Circuit;
use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::sim::{fidelity, occupation_number, GroundSpace, Observable, Statevector};

/// `E(θ) = ⟨ψ₀|U†(θ) H U(θ)|ψ₀⟩`, with the identity part of `H` kept as a
/// separate offset.
#[derive(Debug, Clone)]
pub struct Objective {
    pub circuit: Circuit,
    pub hamiltonian: PauliSum,
    pub initial_state: Statevector,
    pub constant_offset: f64,
    observable: Observable,
}

impl Objective {
    pub fn new(circuit: Circuit, hamiltonian: PauliSum, initial_state: Statevector) -> Result<Self> {
        let n = hamiltonian.num_qubits();
        for actual in [circuit.num_qubits, initial_state.num_qubits()] {
            if actual != n {
                return Err(Error::DimensionMismatch { expected: n, actual });
            }
        }
        let constant_offset = hamiltonian.constant().re;
        let observable = Observable::new(&hamiltonian.without_identity())?;
        Ok(Self {
            circuit,
            hamiltonian,
            initial_state,
            constant_offset,
            observable,
        })
    }

    pub fn num_params(&self) -> usize {
        self.circuit.num_params()
    }

    pub fn state(&self, theta: &[f64]) -> Result<Statevector> {
        self.circuit.run(theta, &self.initial_state)
    }

    pub fn energy_of(&self, state: &Statevector) -> Result<f64> {
        Ok(self.observable.expectation(state)? + self.constant_offset)
    }

    pub fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        self.energy_of(&self.state(theta)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Cobyla,
    NelderMead,
}

impl Method {
    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "cobyla" => Some(Method::Cobyla),
            "neldermead" | "nm" => Some(Method::NelderMead),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Cobyla => "cobyla",
            Method::NelderMead => "nelder-mead",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub method: Method,
    pub max_evals: usize,
    /// Initial trust-region radius (COBYLA) or simplex edge (Nelder-Mead).
    pub rho_begin: f64,
    pub rho_end: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Cobyla,
            max_evals: 100_000,
            rho_begin: 0.5,
            rho_end: 1e-6,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals == 0 {
            return Err(Error::InvalidOptimizer("max_evals must be at least 1".into()));
        }
        if !(self.rho_end > 0.0 && self.rho_begin.is_finite() && self.rho_end < self.rho_begin) {
            return Err(Error::InvalidOptimizer(format!(
                "need 0 < rho_end < rho_begin, got rho_end={} rho_begin={}",
                self.rho_end, self.rho_begin
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The trust radius (or simplex size) reached `rho_end`.
    Converged,
    Budget,
    /// The simplex inverse drifted too far to continue.
    Rounding,
    NoParameters,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::Budget => "budget",
            StopReason::Rounding => "rounding",
            StopReason::NoParameters => "no_parameters",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub n_evals: usize,
    pub stop: StopReason,
}

/// Counts evaluations, rejects non-finite values and remembers the best point.
struct Counted<F> {
    f: F,
    n_evals: usize,
    max_evals: usize,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Counted<F> {
    fn call(&mut self, x: &[f64]) -> Result<f64> {
        self.n_evals += 1;
        let v = (self.f)(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective {
                value: v,
                evaluation: self.n_evals,
            });
        }
        if v < self.best_f {
            self.best_f = v;
            self.best_x.clear();
            self.best_x.extend_from_slice(x);
        }
        Ok(v)
    }

    fn exhausted(&self) -> bool {
        self.n_evals >= self.max_evals
    }

    fn finish(self, stop: StopReason) -> MinimizeOutcome {
        MinimizeOutcome {
            x: self.best_x,
            f: self.best_f,
            n_evals: self.n_evals,
            stop,
        }
    }
}

pub fn minimize<F>(f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<MinimizeOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidOptimizer("non-finite starting point".into()));
    }
    let mut counted = Counted {
        f,
        n_evals: 0,
        max_evals: cfg.max_evals,
        best_x: x0.to_vec(),
        best_f: f64::INFINITY,
    };
    if x0.is_empty() {
        counted.call(x0)?;
        return Ok(counted.finish(StopReason::NoParameters));
    }
    let stop = match cfg.method {
        Method::Cobyla => cobyla(&mut counted, x0, cfg)?,
        Method::NelderMead => nelder_mead(&mut counted, x0, cfg)?,
    };
    Ok(counted.finish(stop))
}

/// Powell's COBYLA specialised to the unconstrained case: a simplex of n+1
/// points defines a linear model, steps are taken to the trust-region
/// boundary along the model's steepest descent, and the radius shrinks from
/// `rho_begin` to `rho_end`. Index `n` of the simplex arrays is the pivot
/// (best) vertex; `sim` holds the other vertices as displacements from it.
fn cobyla<F>(fc: &mut Counted<F>, x0: &[f64], cfg: &OptimizerConfig) -> Result<StopReason>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    const ALPHA: f64 = 0.25;
    const BETA: f64 = 2.1;
    const GAMMA: f64 = 0.5;
    const DELTA: f64 = 1.1;

    let n = x0.len();
    let mut rho = cfg.rho_begin;
    // sim[i][j]: coordinate i of vertex j (j < n displacement, j == n pivot)
    let mut sim = vec![vec![0.0; n + 1]; n];
    let mut simi = vec![vec![0.0; n]; n];
    for i in 0..n {
        sim[i][n] = x0[i];
        sim[i][i] = rho;
        simi[i][i] = 1.0 / rho;
    }
    let mut datmat = vec![0.0; n + 1];
    let mut x = x0.to_vec();
    let mut dx = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut vsig = vec![0.0; n];
    let mut veta = vec![0.0; n];

    // initial simplex, moving the pivot whenever a better vertex appears
    let mut jdrop = n;
    loop {
        if fc.exhausted() {
            return Ok(StopReason::Budget);
        }
        let f = fc.call(&x)?;
        datmat[jdrop] = f;
        if jdrop < n {
            if datmat[n] < f {
                x[jdrop] = sim[jdrop][n];
            } else {
                sim[jdrop][n] = x[jdrop];
                datmat[jdrop] = datmat[n];
                datmat[n] = f;
                for k in 0..=jdrop {
                    sim[jdrop][k] = -rho;
                    let mut temp = 0.0;
                    for row in simi.iter().take(jdrop + 1).skip(k) {
                        temp -= row[k];
                    }
                    simi[jdrop][k] = temp;
                }
            }
        }
        let next = if jdrop == n { 0 } else { jdrop + 1 };
        if next >= n {
            break;
        }
        jdrop = next;
        x[jdrop] += rho;
    }

    let mut geometry_pending = false;
    loop {
        // pivot on the best vertex
        let mut nbest = n;
        let mut phimin = datmat[n];
        for (j, &v) in datmat.iter().enumerate().take(n) {
            if v < phimin {
                nbest = j;
                phimin = v;
            }
        }
        if nbest < n {
            datmat.swap(nbest, n);
            for i in 0..n {
                let temp = sim[i][nbest];
                sim[i][nbest] = 0.0;
                sim[i][n] += temp;
                let mut tempa = 0.0;
                for k in 0..n {
                    sim[i][k] -= temp;
                    tempa -= simi[k][i];
                }
                simi[nbest][i] = tempa;
            }
        }

        let mut error = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut temp = if i == j { -1.0 } else { 0.0 };
                for k in 0..n {
                    temp += simi[i][k] * sim[k][j];
                }
                error = error.max(temp.abs());
            }
        }
        if error > 0.1 {
            return Ok(StopReason::Rounding);
        }

        // linear model: gradient of f
        for (i, g) in grad.iter_mut().enumerate() {
            *g = (0..n).map(|j| (datmat[j] - datmat[n]) * simi[j][i]).sum();
        }

        let parsig = ALPHA * rho;
        let pareta = BETA * rho;
        let mut acceptable = true;
        for j in 0..n {
            let wsig: f64 = simi[j].iter().map(|v| v * v).sum();
            let weta: f64 = sim.iter().map(|row| row[j] * row[j]).sum();
            vsig[j] = 1.0 / wsig.sqrt();
            veta[j] = weta.sqrt();
            if vsig[j] < parsig || veta[j] > pareta {
                acceptable = false;
            }
        }

        if geometry_pending && !acceptable {
            // replace the vertex that spoils the simplex shape
            let mut jd = None;
            let mut temp = pareta;
            for j in 0..n {
                if veta[j] > temp {
                    jd = Some(j);
                    temp = veta[j];
                }
            }
            if jd.is_none() {
                for j in 0..n {
                    if vsig[j] < temp {
                        jd = Some(j);
                        temp = vsig[j];
                    }
                }
            }
            let jd = jd.expect("an unacceptable simplex has an offending vertex");
            let step = GAMMA * rho * vsig[jd];
            for i in 0..n {
                dx[i] = step * simi[jd][i];
            }
            let slope: f64 = (0..n).map(|i| -grad[i] * dx[i]).sum();
            let sign = if slope < 0.0 { -1.0 } else { 1.0 };
            dx.iter_mut().for_each(|v| *v *= sign);
            replace_vertex(&mut sim, &mut simi, jd, &dx);
            for i in 0..n {
                x[i] = sim[i][n] + dx[i];
            }
            if fc.exhausted() {
                return Ok(StopReason::Budget);
            }
            datmat[jd] = fc.call(&x)?;
            geometry_pending = false;
            continue;
        }

        // trust-region step to the boundary along -grad
        geometry_pending = false;
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let mut improved = false;
        if gnorm > 0.0 {
            for i in 0..n {
                dx[i] = -rho * grad[i] / gnorm;
            }
            let prerem = rho * gnorm;
            for i in 0..n {
                x[i] = sim[i][n] + dx[i];
            }
            if fc.exhausted() {
                return Ok(StopReason::Budget);
            }
            let f = fc.call(&x)?;
            let (trured, prerem) = if f == datmat[n] {
                (0.0, 0.0)
            } else {
                (datmat[n] - f, prerem)
            };

            let mut ratio = if trured <= 0.0 { 1.0 } else { 0.0 };
            let mut jd = None;
            let mut sigbar = vec![0.0; n];
            for j in 0..n {
                let temp: f64 = (0..n).map(|i| simi[j][i] * dx[i]).sum::<f64>().abs();
                if temp > ratio {
                    jd = Some(j);
                    ratio = temp;
                }
                sigbar[j] = temp * vsig[j];
            }
            let mut edgmax = DELTA * rho;
            let mut far = None;
            for j in 0..n {
                if sigbar[j] >= parsig || sigbar[j] >= vsig[j] {
                    let mut temp = veta[j];
                    if trured > 0.0 {
                        temp = (0..n).map(|i| (dx[i] - sim[i][j]).powi(2)).sum::<f64>().sqrt();
                    }
                    if temp > edgmax {
                        far = Some(j);
                        edgmax = temp;
                    }
                }
            }
            if far.is_some() {
                jd = far;
            }
            if let Some(jd) = jd {
                replace_vertex(&mut sim, &mut simi, jd, &dx);
                datmat[jd] = f;
                improved = trured > 0.0 && trured >= 0.1 * prerem;
            }
        }
        if improved {
            continue;
        }
        if !acceptable {
            geometry_pending = true;
            continue;
        }
        if rho > cfg.rho_end {
            rho *= 0.5;
            if rho <= 1.5 * cfg.rho_end {
                rho = cfg.rho_end;
            }
            continue;
        }
        return Ok(StopReason::Converged);
    }
}

/// Puts displacement `dx` in column `jd` of `sim` and updates the inverse.
fn replace_vertex(sim: &mut [Vec<f64>], simi: &mut [Vec<f64>], jd: usize, dx: &[f64]) {
    let n = dx.len();
    let mut temp = 0.0;
    for i in 0..n {
        sim[i][jd] = dx[i];
        temp += simi[jd][i] * dx[i];
    }
    for v in simi[jd].iter_mut() {
        *v /= temp;
    }
    let pivot_row = simi[jd].clone();
    for (j, row) in simi.iter_mut().enumerate() {
        if j != jd {
            let t: f64 = row.iter().zip(dx).map(|(a, b)| a * b).sum();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= t * p;
            }
        }
    }
}

/// Textbook Nelder-Mead (reflection 1, expansion 2, contraction and
/// shrink 0.5), stopping when every vertex lies within `rho_end` of the best
/// one in each coordinate and the values agree to `rho_end`.
fn nelder_mead<F>(fc: &mut Counted<F>, x0: &[f64], cfg: &OptimizerConfig) -> Result<StopReason>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += cfg.rho_begin;
        pts.push(p);
    }
    let mut vals = Vec::with_capacity(n + 1);
    for p in &pts {
        if fc.exhausted() {
            return Ok(StopReason::Budget);
        }
        vals.push(fc.call(p)?);
    }
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let fspread = vals[n] - vals[0];
        if spread <= cfg.rho_end && fspread <= cfg.rho_end {
            return Ok(StopReason::Converged);
        }
        if fc.exhausted() {
            return Ok(StopReason::Budget);
        }

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(1.0);
        let fr = fc.call(&xr)?;
        if fr < vals[0] {
            if fc.exhausted() {
                pts[n] = xr;
                vals[n] = fr;
                continue;
            }
            let xe = along(2.0);
            let fe = fc.call(&xe)?;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        if fc.exhausted() {
            continue;
        }
        let (xc, fc_val) = if fr < vals[n] {
            let xc = along(0.5);
            let v = fc.call(&xc)?;
            (xc, v)
        } else {
            let xc = along(-0.5);
            let v = fc.call(&xc)?;
            (xc, v)
        };
        if fc_val < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc_val;
            continue;
        }
        for i in 1..=n {
            if fc.exhausted() {
                return Ok(StopReason::Budget);
            }
            let shrunk: Vec<f64> = pts[i].iter().zip(&pts[0]).map(|(p, b)| b + 0.5 * (p - b)).collect();
            vals[i] = fc.call(&shrunk)?;
            pts[i] = shrunk;
        }
    }
}

/// Starting parameters: zeros, or uniform in `[−π, π)` from `seed`.
pub fn initial_parameters(n: usize, random: bool, seed: u64) -> Vec<f64> {
    if !random {
        return vec![0.0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-PI..PI)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based objective evaluation count.
    pub iter: usize,
    pub energy: f64,
    pub fidelity: Option<f64>,
    /// `⟨N̂⟩` per site.
    pub occupancy: f64,
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
    pub best_energy: f64,
    pub best_params: Vec<f64>,
    /// Fidelity of the state at `best_params`.
    pub best_fidelity: Option<f64>,
    /// Largest fidelity over all evaluations.
    pub max_fidelity: Option<f64>,
    pub n_evals: usize,
    pub stop: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Keep every k-th evaluation (the first one and any fidelity record are
    /// always kept).
    pub record_every: usize,
    /// Attach a parameter snapshot to every k-th kept record; 0 disables.
    pub params_every: usize,
    /// Number of sites used to normalise the occupation.
    pub sites: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            params_every: 0,
            sites: 1,
        }
    }
}

/// Minimizes `obj` from `theta0`, measuring fidelity against `target` and
/// the site occupancy after every evaluation.
pub fn run_traced(
    obj: &Objective,
    target: Option<&GroundSpace>,
    cfg: &OptimizerConfig,
    theta0: &[f64],
    opts: TraceOptions,
) -> Result<OptimizationTrace> {
    obj.circuit.check_params(theta0)?;
    let every = opts.record_every.max(1);
    let sites = opts.sites.max(1) as f64;
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut count = 0usize;
    let mut max_fid: Option<f64> = None;
    let mut best: Option<(f64, Option<f64>)> = None;
    let outcome = minimize(
        |theta| {
            count += 1;
            let state = obj.state(theta)?;
            let energy = obj.energy_of(&state)?;
            let fid = target.map(|t| fidelity(&state, t)).transpose()?;
            let new_max = match (fid, max_fid) {
                (Some(f), Some(m)) => f > m,
                (Some(_), None) => true,
                _ => false,
            };
            if new_max {
                max_fid = fid;
            }
            if best.is_none_or(|(e, _)| energy < e) {
                best = Some((energy, fid));
            }
            if count == 1 || count % every == 0 || new_max {
                let keep_params = opts.params_every > 0 && records.len() % opts.params_every == 0;
                records.push(TraceRecord {
                    iter: count,
                    energy,
                    fidelity: fid,
                    occupancy: occupation_number(&state) / sites,
                    params: keep_params.then(|| theta.to_vec()),
                });
            }
            Ok(energy)
        },
        theta0,
        cfg,
    )?;
    Ok(OptimizationTrace {
        records,
        best_energy: outcome.f,
        best_params: outcome.x,
        best_fidelity: best.and_then(|(_, f)| f),
        max_fidelity: max_fid,
        n_evals: outcome.n_evals,
        stop: outcome.stop,
    })
}
