//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.
//!
//! `QOCA_ACCEPTANCE=1,6,8` restricts the run to the listed criteria.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qoca_core::ansatz::{self, AnsatzKind, AnsatzOptions, CompileOptions, Strategy, TermOrder};
use qoca_core::fermion::{self, InitialState, LatticeSpec};
use qoca_core::pauli::{PauliString, PauliSum};
use qoca_core::sim::{self, GroundSpace, Statevector};
use qoca_core::vqe::{self, Objective, OptimizationTrace, OptimizerConfig, TraceOptions};

const FULL_BUDGET: usize = 100_000;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, pass: bool, detail: String, started: Instant) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {id:>2} {}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
}

struct Problem {
    spec: LatticeSpec,
    hamiltonian: PauliSum,
    ground: GroundSpace,
}

impl Problem {
    fn new(spec: LatticeSpec) -> Self {
        let hamiltonian = fermion::hubbard_qubit_hamiltonian(&spec).unwrap();
        let ground = sim::exact_ground_space(&hamiltonian, sim::DEGENERACY_TOL).unwrap();
        Self {
            spec,
            hamiltonian,
            ground,
        }
    }

    fn optimize(
        &self,
        kind: AnsatzKind,
        depth: usize,
        opts: AnsatzOptions,
        init: &InitialState,
        budget: usize,
    ) -> OptimizationTrace {
        let circuit = ansatz::build_for_lattice(kind, &self.spec, depth, opts).unwrap();
        let state = fermion::prepare_initial_state(init, &self.spec).unwrap();
        let obj = Objective::new(circuit, self.hamiltonian.clone(), state).unwrap();
        let cfg = OptimizerConfig {
            max_evals: budget,
            ..Default::default()
        };
        let theta0 = vqe::initial_parameters(obj.num_params(), kind == AnsatzKind::ShortQoca, cfg.seed);
        let opts = TraceOptions {
            record_every: 1,
            params_every: 0,
            sites: self.spec.num_sites(),
        };
        vqe::run_traced(&obj, Some(&self.ground), &cfg, &theta0, opts).unwrap()
    }
}

fn full() -> AnsatzOptions {
    AnsatzOptions::default()
}

fn scalable() -> AnsatzOptions {
    AnsatzOptions {
        strategy: Strategy::Scalable,
        ..Default::default()
    }
}

fn max_fid(t: &OptimizationTrace) -> f64 {
    t.max_fidelity.unwrap_or(0.0)
}

fn selected() -> Option<Vec<u32>> {
    std::env::var("QOCA_ACCEPTANCE")
        .ok()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect())
}

/// Shared 2x2 results reused by later criteria.
#[derive(Default)]
struct Cache {
    qoca_plus_d4: Option<OptimizationTrace>,
    vha_plus: BTreeMap<usize, OptimizationTrace>,
}

fn main() {
    let only = selected();
    let wants = |id: u32| only.as_ref().is_none_or(|v| v.contains(&id));
    let mut report = Report { failures: 0 };
    let square = Problem::new(LatticeSpec::new(2, 2));
    let mut cache = Cache::default();

    if wants(1) {
        criterion_1(&mut report);
    }
    if wants(2) || wants(9) || wants(10) {
        let t0 = Instant::now();
        let t = square.optimize(AnsatzKind::Qoca, 4, full(), &InitialState::PlusAll, FULL_BUDGET);
        if wants(2) {
            let f = max_fid(&t);
            report.line(
                2,
                f >= 0.995,
                format!(
                    "QOCA 2x2 full d=4 from |+>^8: max fidelity {f:.6} after {} evaluations (need >= 0.995)",
                    t.n_evals
                ),
                t0,
            );
        }
        cache.qoca_plus_d4 = Some(t);
    }
    if wants(3) || wants(9) || wants(10) {
        let t0 = Instant::now();
        for d in 1..=8 {
            let t = square.optimize(AnsatzKind::Vha, d, full(), &InitialState::PlusAll, FULL_BUDGET);
            cache.vha_plus.insert(d, t);
        }
        if wants(3) {
            let fids: Vec<String> = cache
                .vha_plus
                .iter()
                .map(|(d, t)| format!("d{d}={:.4}", max_fid(t)))
                .collect();
            let worst = cache.vha_plus.values().map(max_fid).fold(0.0, f64::max);
            report.line(
                3,
                worst <= 0.30,
                format!(
                    "VHA 2x2 full from |+>^8, max fidelity per depth [{}] (need all <= 0.30)",
                    fids.join(" ")
                ),
                t0,
            );
        }
    }
    if wants(4) {
        let t0 = Instant::now();
        let t = square.optimize(AnsatzKind::Qoca, 10, scalable(), &InitialState::PlusAll, FULL_BUDGET);
        let per_layer = ansatz::build_for_lattice(AnsatzKind::Qoca, &square.spec, 1, scalable())
            .unwrap()
            .num_params();
        let f = max_fid(&t);
        report.line(
            4,
            f >= 0.95 && per_layer == 5,
            format!("scalable QOCA 2x2 d=10 ({per_layer} params/layer): max fidelity {f:.6} (need >= 0.95 with 5 params/layer)"),
            t0,
        );
    }
    if wants(5) {
        criterion_5(&mut report);
    }
    if wants(6) {
        criterion_6(&mut report);
    }
    if wants(7) {
        criterion_7(&mut report);
    }
    if wants(8) {
        criterion_8(&mut report);
    }
    if wants(9) {
        let t0 = Instant::now();
        let vha_dev = cache
            .vha_plus
            .values()
            .flat_map(|t| t.records.iter())
            .map(|r| (r.occupancy - 1.0).abs())
            .fold(0.0, f64::max);
        let q = cache.qoca_plus_d4.as_ref().unwrap();
        let q_dev = q.records.iter().map(|r| (r.occupancy - 1.0).abs()).fold(0.0, f64::max);
        let q_final = q.records.last().map(|r| r.occupancy).unwrap_or(f64::NAN);
        report.line(
            9,
            vha_dev <= 1e-8 && q_dev >= 1e-3 && (q_final - 1.0).abs() <= 0.05,
            format!(
                "VHA occupancy max deviation {vha_dev:.2e} (need <= 1e-8); QOCA max deviation {q_dev:.4} (need >= 1e-3), final {q_final:.6} (need within 0.05 of 1)"
            ),
            t0,
        );
    }
    if wants(10) {
        criterion_10(&mut report, &square, &cache);
    }
    if wants(11) {
        criterion_11(&mut report);
    }

    println!("acceptance: {} criteria failed", report.failures);
    if report.failures > 0 {
        std::process::exit(1);
    }
}

fn criterion_1(report: &mut Report) {
    let t0 = Instant::now();
    let dimer = Problem::new(LatticeSpec::new(2, 1));
    let momentum = InitialState::Momentum {
        up: "10".into(),
        down: "10".into(),
    };
    let onsite_first = AnsatzOptions {
        order: TermOrder::OnsiteFirst,
        ..Default::default()
    };
    let runs = [
        ("VHA d=1", AnsatzKind::Vha, 1, onsite_first, momentum.clone()),
        ("QOCA d=1", AnsatzKind::Qoca, 1, full(), InitialState::PlusAll),
        ("sQOCA d=1", AnsatzKind::ShortQoca, 1, full(), InitialState::PlusAll),
        ("HEA d=2", AnsatzKind::Hea, 2, full(), InitialState::PlusAll),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, kind, d, opts, init) in runs {
        let circuit = if kind == AnsatzKind::Hea {
            ansatz::build_hea(4, d).unwrap()
        } else {
            ansatz::build_for_lattice(kind, &dimer.spec, d, opts).unwrap()
        };
        let state = fermion::prepare_initial_state(&init, &dimer.spec).unwrap();
        let obj = Objective::new(circuit, dimer.hamiltonian.clone(), state).unwrap();
        // the bonding state sits on a saddle at theta=0; a wider first step leaves it
        let cfg = OptimizerConfig {
            max_evals: 5000,
            rho_begin: 0.75,
            ..Default::default()
        };
        let theta0 = vec![0.0; obj.num_params()];
        let out = vqe::minimize(|t| obj.evaluate(t), &theta0, &cfg).unwrap();
        let err = (out.f - dimer.ground.energy).abs();
        pass &= err < 1e-7 && out.n_evals <= 5000;
        parts.push(format!("{label} |dE|={err:.1e} in {} evals", out.n_evals));
    }
    report.line(
        1,
        pass,
        format!(
            "dimer from theta=0: {} (need |dE| < 1e-7 within 5000)",
            parts.join(", ")
        ),
        t0,
    );
}

fn criterion_5(report: &mut Report) {
    let t0 = Instant::now();
    let rect = Problem::new(LatticeSpec::new(2, 3));
    let q = rect.optimize(AnsatzKind::Qoca, 9, full(), &InitialState::PlusAll, FULL_BUDGET);
    let v = rect.optimize(AnsatzKind::Vha, 10, full(), &InitialState::PlusAll, FULL_BUDGET);
    let (fq, fv) = (max_fid(&q), max_fid(&v));
    report.line(
        5,
        fq >= 0.95 && fv <= 0.30,
        format!("2x3 from |+>^12: QOCA d=9 max fidelity {fq:.6} (need >= 0.95), VHA d=10 max fidelity {fv:.6} (need <= 0.30)"),
        t0,
    );
}

fn criterion_6(report: &mut Report) {
    let t0 = Instant::now();
    let sq = LatticeSpec::new(2, 2);
    let rect = LatticeSpec::new(2, 3);
    let per_layer = |kind: AnsatzKind, spec: &LatticeSpec, opts: AnsatzOptions| {
        if kind == AnsatzKind::Hea {
            ansatz::build_hea(spec.num_orbitals(), 3).unwrap().params_per_layer()
        } else {
            let c = ansatz::build_for_lattice(kind, spec, 3, opts).unwrap();
            assert_eq!(c.num_params() % 3, 0);
            c.params_per_layer()
        }
    };
    let expected = [
        ("HEA 2x2", per_layer(AnsatzKind::Hea, &sq, full()), 16),
        ("HEA 2x3", per_layer(AnsatzKind::Hea, &rect, full()), 24),
        ("VHA 2x2", per_layer(AnsatzKind::Vha, &sq, full()), 8),
        ("VHA 2x3", per_layer(AnsatzKind::Vha, &rect, full()), 13),
        ("FT-VHA 2x2", per_layer(AnsatzKind::FtVha, &sq, full()), 8),
        ("QOCA 2x2", per_layer(AnsatzKind::Qoca, &sq, full()), 16),
        ("QOCA 2x3", per_layer(AnsatzKind::Qoca, &rect, full()), 25),
        ("QOCA-scalable 2x2", per_layer(AnsatzKind::Qoca, &sq, scalable()), 5),
        ("QOCA-scalable 2x3", per_layer(AnsatzKind::Qoca, &rect, scalable()), 6),
        ("sQOCA 2x2", per_layer(AnsatzKind::ShortQoca, &sq, full()), 12),
        ("sQOCA 2x3", per_layer(AnsatzKind::ShortQoca, &rect, full()), 18),
    ];
    let pass = expected.iter().all(|(_, got, want)| got == want);
    let parts: Vec<String> = expected
        .iter()
        .map(|(l, got, want)| format!("{l} {got}/{want}"))
        .collect();
    report.line(
        6,
        pass,
        format!("params per layer (got/table): {}", parts.join(", ")),
        t0,
    );
}

fn criterion_7(report: &mut Report) {
    let t0 = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (spec, label, hea, targets) in [
        (LatticeSpec::new(2, 2), "2x2", 7usize, [56.0, 88.0, 40.0]),
        (LatticeSpec::new(2, 3), "2x3", 11, [116.0, 172.0, 68.0]),
    ] {
        let h = ansatz::count_resources(
            &ansatz::build_hea(spec.num_orbitals(), 2).unwrap(),
            CompileOptions::default(),
        );
        pass &= h.cnots_per_layer == hea;
        parts.push(format!("HEA {label} {} (exact {hea})", h.cnots_per_layer));
        for (kind, target) in [AnsatzKind::Vha, AnsatzKind::Qoca, AnsatzKind::ShortQoca]
            .into_iter()
            .zip(targets)
        {
            let c = ansatz::build_for_lattice(kind, &spec, 2, full()).unwrap();
            let r = ansatz::count_resources(&c, CompileOptions::default());
            let n = r.cnots_per_layer as f64;
            let ok = (n - target).abs() <= 0.25 * target && r.unlowered_blocks == 0;
            pass &= ok;
            parts.push(format!("{kind} {label} {} (table {target})", r.cnots_per_layer));
        }
    }
    report.line(
        7,
        pass,
        format!("CNOTs per layer: {} (need +-25%)", parts.join(", ")),
        t0,
    );
}

fn criterion_8(report: &mut Report) {
    let t0 = Instant::now();
    let ring = Problem::new(LatticeSpec::new(1, 4).periodic(true));
    let fid = |k: InitialState| {
        sim::fidelity(&fermion::prepare_initial_state(&k, &ring.spec).unwrap(), &ring.ground).unwrap()
    };
    let plus = fid(InitialState::PlusAll);
    let t1 = fid(InitialState::OmegaT1);
    let sup = fid(InitialState::OmegaTSuperposition);
    let pass = (plus - 0.035).abs() <= 0.005 && (t1 - 0.425).abs() <= 0.02 && (sup - 0.85).abs() <= 0.02;
    report.line(
        8,
        pass,
        format!("periodic 1x4 fidelities |+> {plus:.6} (0.035+-0.005), Omega_T1 {t1:.6} (0.425+-0.02), Omega_T {sup:.6} (0.85+-0.02)"),
        t0,
    );
}

fn criterion_10(report: &mut Report, square: &Problem, cache: &Cache) {
    let t0 = Instant::now();
    let states = [
        ("plus_all", InitialState::PlusAll),
        ("omega_t1", InitialState::OmegaT1),
        ("omega_t", InitialState::OmegaTSuperposition),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut vha_best = Vec::new();
    for (label, init) in &states {
        // QOCA: stop at the first depth that clears the bar
        let mut best = (0.0f64, 0usize);
        for d in 1..=10 {
            let f = match (label, d, &cache.qoca_plus_d4) {
                (&"plus_all", 4, Some(t)) => max_fid(t),
                _ => max_fid(&square.optimize(AnsatzKind::Qoca, d, full(), init, FULL_BUDGET)),
            };
            if f > best.0 {
                best = (f, d);
            }
            if best.0 >= 0.995 {
                break;
            }
        }
        pass &= best.0 >= 0.995;
        let mut vbest = 0.0f64;
        for d in 1..=10 {
            let f = match (label, cache.vha_plus.get(&d)) {
                (&"plus_all", Some(t)) => max_fid(t),
                _ => max_fid(&square.optimize(AnsatzKind::Vha, d, full(), init, FULL_BUDGET)),
            };
            vbest = vbest.max(f);
        }
        vha_best.push(vbest);
        parts.push(format!(
            "{label}: QOCA {:.6} at d={}, VHA best {vbest:.4}",
            best.0, best.1
        ));
    }
    let spread = vha_best.iter().cloned().fold(f64::MIN, f64::max) - vha_best.iter().cloned().fold(f64::MAX, f64::min);
    pass &= spread >= 0.3;
    report.line(
        10,
        pass,
        format!(
            "{}; VHA spread {spread:.4} (need QOCA >= 0.995 at some d <= 10 for each, VHA spread >= 0.3)",
            parts.join("; ")
        ),
        t0,
    );
}

fn criterion_11(report: &mut Report) {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    // JW anticommutation for every pair on up to six orbitals
    let mut jw_ok = true;
    for n in 1..=6 {
        let a: Vec<(PauliSum, PauliSum)> = (1..=n)
            .map(|p| {
                (
                    fermion::jw_ladder(p, false, n).unwrap(),
                    fermion::jw_ladder(p, true, n).unwrap(),
                )
            })
            .collect();
        let anti = |x: &PauliSum, y: &PauliSum| x.try_mul(y).unwrap().try_add(&y.try_mul(x).unwrap()).unwrap();
        for p in 0..n {
            for q in 0..n {
                let delta = if p == q {
                    PauliSum::identity(n)
                } else {
                    PauliSum::zero(n)
                };
                jw_ok &= anti(&a[p].0, &a[q].1).try_sub(&delta).unwrap().is_empty();
                jw_ok &= anti(&a[p].0, &a[q].0).is_empty();
                jw_ok &= anti(&a[p].1, &a[q].1).is_empty();
            }
        }
    }
    check("jordan-wigner anticommutation", jw_ok);

    // Pauli exponentials against the dense matrix exponential, all 3-qubit strings
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut exp_err = 0.0f64;
    let mut norm_err = 0.0f64;
    for code in 0..64u32 {
        let letters: String = (0..3)
            .map(|k| ['I', 'X', 'Y', 'Z'][(code >> (2 * k) & 3) as usize])
            .collect();
        let p = PauliString::from_letters(&letters).unwrap();
        for theta in [-2.7, -0.4, 0.3, 1.9] {
            let mut s = Statevector::random(3, &mut rng);
            let dense = (p.to_dense().unwrap() * Complex64::new(0.0, theta)).exp();
            let v = nalgebra::DVector::from_vec(s.amplitudes().to_vec());
            let want = dense * v;
            s.apply_pauli_exp(&p, theta).unwrap();
            for (a, b) in s.amplitudes().iter().zip(want.iter()) {
                exp_err = exp_err.max((a - b).norm());
            }
            norm_err = norm_err.max((s.norm() - 1.0).abs());
        }
    }
    check("pauli exponential vs expm", exp_err < 1e-10);

    // FT unitarity and the free band
    let mut ft_ok = true;
    for l in [3usize, 4] {
        let ring = LatticeSpec::new(1, l).periodic(true);
        let ft = fermion::fourier_unitary(l).unwrap();
        ft_ok &= sim::unitarity_deviation(&ft) < 1e-10;
        let band = ansatz::band_energies(&ring);
        for (k, e) in band.iter().enumerate() {
            let want = -2.0 * (2.0 * std::f64::consts::PI * k as f64 / l as f64).cos();
            ft_ok &= (e - want).abs() < 1e-12;
        }
        let full = ft.kronecker(&ft);
        let t = fermion::hopping_qubit_hamiltonian(&ring).unwrap().to_dense().unwrap();
        let rotated = &full * t * full.adjoint();
        let n = 2 * l;
        for b in 0..(1usize << n) {
            let want: f64 = (0..n).filter(|&q| b >> (n - 1 - q) & 1 == 1).map(|q| band[q % l]).sum();
            ft_ok &= (rotated[(b, b)].re - want).abs() < 1e-9;
        }
    }
    check("fourier transform", ft_ok);

    // compiled circuits, norm preservation and the variational bound on 2x2
    let sq = Problem::new(LatticeSpec::new(2, 2));
    let mut equiv_err = 0.0f64;
    let mut below = 0.0f64;
    for kind in AnsatzKind::ALL {
        for opts in [full(), scalable()] {
            let circ = if kind == AnsatzKind::Hea {
                ansatz::build_hea(8, 2).unwrap()
            } else {
                ansatz::build_for_lattice(kind, &sq.spec, 2, opts).unwrap()
            };
            let theta = vqe::initial_parameters(circ.num_params(), true, 5);
            let s0 = fermion::prepare_initial_state(&InitialState::PlusAll, &sq.spec).unwrap();
            let s = circ.run(&theta, &s0).unwrap();
            norm_err = norm_err.max((s.norm() - 1.0).abs());
            below = below.max(sq.ground.energy - s.expectation(&sq.hamiltonian).unwrap());
            let compiled = ansatz::compile_to_cnot(&circ, CompileOptions::default());
            // dense Fourier blocks stay unlowered; the rest must agree exactly
            let c = compiled.circuit.run(&theta, &s0).unwrap();
            for (a, b) in s.amplitudes().iter().zip(c.amplitudes()) {
                equiv_err = equiv_err.max((a - b).norm());
            }
        }
    }
    for seed in 0..20 {
        let s = Statevector::random(8, &mut ChaCha8Rng::seed_from_u64(seed));
        below = below.max(sq.ground.energy - s.expectation(&sq.hamiltonian).unwrap());
    }
    check("compiled circuit equivalence", equiv_err < 1e-10);
    check("norm preservation", norm_err < 1e-12);
    check("variational lower bound", below <= 1e-10);

    report.line(
        11,
        failures.is_empty(),
        format!(
            "property suites: expm err {exp_err:.1e}, compile err {equiv_err:.1e}, norm err {norm_err:.1e}, bound violation {below:.1e}{}",
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
        t0,
    );
}
