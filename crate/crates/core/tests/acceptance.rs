//! End-to-end acceptance checks. Each check prints one `PASS`/`FAIL` line;
//! the process exits non-zero if any check fails.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rydsim::dynamics::{propagate_density, propagate_state_exact, Spectral, TimeGrid, Trajectory, DEFAULT_TOL};
use rydsim::metrics::{
    dissipative_gate_fidelity_curve, extract_alpha, extract_gate, ghz_fidelity, unitary_gate_fidelity,
    GateExtractor,
};
use rydsim::model::{
    build_effective_h, build_eliminated_h, build_full_h, build_gate_target, build_ladder_h, collapse_ops,
    resonance_u, PhysParams, EXPERIMENTAL_DELTA_BIG, EXPERIMENTAL_OMEGA_B, EXPERIMENTAL_OMEGA_R,
};
use rydsim::perturbation::{
    calibrate_full_model, effective_model, gate_time, ghz_time, numeric_effective_model, phase_distance,
    predicted_alpha,
};
use rydsim::qkernel::{dicke_isometry, min_eigenvalue, AtomBasis, CMatrix, Level, Operator, QuantumState};

/// Peak N=4 values observed when the checks were first run; later runs must
/// reproduce them.
const N4_GHZ_PEAK: f64 = 0.99541;
const N4_GATE_PEAK: f64 = 0.95913;
const REGRESSION_TOL: f64 = 1e-3;

thread_local! {
    /// Worst trace/Hermiticity/positivity violation over every Lindblad run.
    static LINDBLAD_WORST: RefCell<(f64, usize)> = const { RefCell::new((0.0, 0)) };
}

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn ghz_params(delta: f64, gamma: f64) -> PhysParams {
    PhysParams::ideal(3, delta, resonance_u(3, delta).unwrap()).with_rydberg_decay(gamma)
}

fn ground(n: usize) -> QuantumState {
    QuantumState::product(&AtomBasis::three_level(n).unwrap(), &vec![Level::One; n]).unwrap()
}

fn record_lindblad(traj: &Trajectory) {
    for s in &traj.states {
        let rho = s.density();
        let trace = (rho.trace().re - 1.0).abs() + rho.trace().im.abs();
        let herm = (&rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let neg = (-min_eigenvalue(&rho)).max(0.0);
        LINDBLAD_WORST.with(|w| {
            let mut w = w.borrow_mut();
            w.0 = w.0.max(trace).max(herm).max(neg);
            w.1 += 1;
        });
    }
}

fn lindblad_ghz(delta: f64, gamma: f64) -> f64 {
    let p = ghz_params(delta, gamma);
    let h = build_eliminated_h(&p, true).unwrap();
    let c = collapse_ops(&p, &AtomBasis::three_level(3).unwrap()).unwrap();
    let t = ghz_time(&effective_model(3, delta).unwrap(), 0).unwrap();
    let traj = propagate_density(&h, &c, &ground(3), &TimeGrid::new(0.0, t, 21).unwrap(), DEFAULT_TOL).unwrap();
    record_lindblad(&traj);
    ghz_fidelity(traj.last(), 3).unwrap()
}

fn gate_ideal(r: &mut Report) {
    let h = build_eliminated_h(&ghz_params(12.0, 0.0), true).unwrap();
    let gate = extract_gate(&h, 3, 24.0 * PI).unwrap();
    let f = unitary_gate_fidelity(&gate, &build_gate_target(3, 0.0).unwrap()).unwrap();
    r.check(
        "three-qubit gate, ideal (delta=12, t=24pi)",
        within(f, 0.9940, 0.005),
        format!("F={f:.5}, expected 0.9940 +/- 0.005"),
    );
}

fn gate_robustness(r: &mut Report) {
    let mut values = Vec::new();
    for delta in [11.0, 13.0] {
        let h = build_eliminated_h(&ghz_params(delta, 0.0), true).unwrap();
        let t = gate_time(&effective_model(3, delta).unwrap()).unwrap();
        let gate = extract_gate(&h, 3, t).unwrap();
        let target = build_gate_target(3, predicted_alpha(delta)).unwrap();
        values.push((delta, unitary_gate_fidelity(&gate, &target).unwrap()));
    }
    let pass = values.iter().all(|&(_, f)| f >= 0.97);
    let detail = values.iter().map(|(d, f)| format!("F(delta={d})={f:.5}")).collect::<Vec<_>>().join(", ");
    r.check("gate robustness, local-equivalent target", pass, format!("{detail}, need >= 0.97"));
}

fn ghz_ideal(r: &mut Report) {
    let h = build_eliminated_h(&ghz_params(14.0, 0.0), true).unwrap();
    let t = ghz_time(&effective_model(3, 14.0).unwrap(), 0).unwrap();
    let psi = Spectral::new(&h).unwrap().evolve(ground(3).amplitudes().unwrap(), t);
    let state = QuantumState::normalized(h.tag().clone(), psi).unwrap();
    let f = ghz_fidelity(&state, 3).unwrap();
    r.check(
        "GHZ, ideal (delta=14)",
        within(f, 0.9946, 0.003),
        format!("F={f:.5} at t={t:.4}, expected 0.9946 +/- 0.003"),
    );
}

fn ghz_strong_decay(r: &mut Report) {
    let f = lindblad_ghz(10.0, 0.01);
    r.check("GHZ under strong decay (delta=10, gamma=0.01)", f >= 0.90, format!("F={f:.5}, need >= 0.90"));
}

fn experimental_point(r: &mut Report) {
    let f_ghz = lindblad_ghz(14.0, 0.002);
    let p = ghz_params(12.0, 0.002);
    let h = build_eliminated_h(&p, true).unwrap();
    let c = collapse_ops(&p, &AtomBasis::three_level(3).unwrap()).unwrap();
    let t = gate_time(&effective_model(3, 12.0).unwrap()).unwrap();
    let target = build_gate_target(3, predicted_alpha(12.0)).unwrap();
    let grid = TimeGrid::new(0.0, t, 21).unwrap();
    let curve = dissipative_gate_fidelity_curve(&h, &c, &target, &grid).unwrap();
    let f_gate = *curve.values.last().unwrap();
    // positivity of the gate run is checked on a separate trajectory from the same input
    let input = rydsim::metrics::equal_weight_input(&AtomBasis::three_level(3).unwrap()).unwrap();
    record_lindblad(&propagate_density(&h, &c, &input, &grid, DEFAULT_TOL).unwrap());
    r.check(
        "experimental decay gamma=0.002",
        within(f_ghz, 0.9675, 0.01) && within(f_gate, 0.9654, 0.01),
        format!("GHZ(delta=14)={f_ghz:.5} vs 0.9675 +/- 0.01, gate(delta=12)={f_gate:.5} vs 0.9654 +/- 0.01"),
    );
}

/// Maximum deviation of the extremal populations between the Dicke ladder
/// and the two-state Raman model, plus the ladder's GHZ peak.
fn ladder_vs_effective(delta: f64) -> (f64, f64) {
    let ladder = build_ladder_h(3, delta, delta).unwrap();
    let eff = build_effective_h(delta).unwrap();
    let t = 4.0 * ghz_time(&effective_model(3, delta).unwrap(), 0).unwrap();
    let grid = TimeGrid::new(0.0, t, 2001).unwrap();
    let a = propagate_state_exact(&ladder, &QuantumState::basis_state(ladder.tag().clone(), 4, 0).unwrap(), &grid)
        .unwrap();
    let b = propagate_state_exact(&eff, &QuantumState::basis_state(eff.tag().clone(), 2, 0).unwrap(), &grid)
        .unwrap();
    let mut dev: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for (x, y) in a.states.iter().zip(&b.states) {
        dev = dev.max((x.population(0) - y.population(0)).abs());
        dev = dev.max((x.population(3) - y.population(1)).abs());
        peak = peak.max(ghz_fidelity(x, 3).unwrap());
    }
    (dev, peak)
}

fn effective_agreement(r: &mut Report) {
    let (dev20, _) = ladder_vs_effective(20.0);
    let (dev10, peak10) = ladder_vs_effective(10.0);
    r.check(
        "effective-model agreement",
        dev20 <= 0.05 && dev10 > dev20 && peak10 > 0.95,
        format!(
            "max dev(delta=20)={dev20:.4} (need <= 0.05), dev(delta=10)={dev10:.4} (need larger), \
             GHZ peak(delta=10)={peak10:.5} (need > 0.95)"
        ),
    );
}

fn four_atoms(r: &mut Report) {
    let u = resonance_u(4, 20.0).unwrap();
    let h = build_eliminated_h(&PhysParams::ideal(4, 20.0, u), true).unwrap();
    let t_ghz = ghz_time(&numeric_effective_model(4, 20.0).unwrap(), 0).unwrap();
    let grid = TimeGrid::new(0.0, 2.0 * t_ghz, 801).unwrap();
    let traj = propagate_state_exact(&h, &ground(4), &grid).unwrap();
    let ghz_peak = traj.states.iter().map(|s| ghz_fidelity(s, 4).unwrap()).fold(0.0, f64::max);

    let u = resonance_u(4, 12.0).unwrap();
    let h = build_eliminated_h(&PhysParams::ideal(4, 12.0, u), true).unwrap();
    let t_gate = gate_time(&numeric_effective_model(4, 12.0).unwrap()).unwrap();
    let extractor = GateExtractor::new(&h, 4).unwrap();
    let grid = TimeGrid::new(0.0, 1.5 * t_gate, 1501).unwrap();
    let (mut gate_peak, mut gate_peak_t) = (0.0, 0.0);
    for t in grid.times() {
        let gate = extractor.at(t);
        let Ok(alpha) = extract_alpha(&gate) else { continue };
        let f = unitary_gate_fidelity(&gate, &build_gate_target(4, alpha).unwrap()).unwrap();
        if f > gate_peak {
            (gate_peak, gate_peak_t) = (f, t);
        }
    }
    let regression = within(ghz_peak, N4_GHZ_PEAK, REGRESSION_TOL) && within(gate_peak, N4_GATE_PEAK, REGRESSION_TOL);
    r.check(
        "four-atom GHZ and gate",
        ghz_peak >= 0.95 && gate_peak >= 0.95 && regression,
        format!(
            "GHZ peak(delta=20)={ghz_peak:.5}, fitted gate peak(delta=12)={gate_peak:.5} at t={:.3} T, need >= 0.95 \
             and regression {N4_GHZ_PEAK}/{N4_GATE_PEAK} +/- {REGRESSION_TOL}",
            gate_peak_t / t_gate
        ),
    );
}

fn adiabatic_elimination(r: &mut Report) {
    let delta = 20.0;
    let cal = calibrate_full_model(3, EXPERIMENTAL_OMEGA_R, EXPERIMENTAL_OMEGA_B, EXPERIMENTAL_DELTA_BIG, delta)
        .unwrap();
    let (full, _) = build_full_h(&cal.params).unwrap();
    let elim = build_eliminated_h(&ghz_params(delta, 0.0), true).unwrap();
    let t = 2.0 * ghz_time(&effective_model(3, delta).unwrap(), 0).unwrap();
    let grid = TimeGrid::new(0.0, t, 1001).unwrap();
    let b4 = AtomBasis::four_level(3).unwrap();
    let b3 = AtomBasis::three_level(3).unwrap();
    let a = propagate_state_exact(&full, &QuantumState::product(&b4, &[Level::One; 3]).unwrap(), &grid).unwrap();
    let b = propagate_state_exact(&elim, &ground(3), &grid).unwrap();
    let idx4 = [b4.uniform_index(Level::One).unwrap(), b4.uniform_index(Level::R).unwrap()];
    let idx3 = [b3.uniform_index(Level::One).unwrap(), b3.uniform_index(Level::R).unwrap()];
    let mut dev: f64 = 0.0;
    for (x, y) in a.states.iter().zip(&b.states) {
        for k in 0..2 {
            dev = dev.max((x.population(idx4[k]) - y.population(idx3[k])).abs());
        }
    }
    r.check(
        "adiabatic elimination, four-level vs eliminated",
        dev <= 0.05,
        format!("max population dev={dev:.4} over [0, {t:.2}], need <= 0.05"),
    );
}

fn hermiticity(r: &mut Report) {
    let mut worst: f64 = 0.0;
    let mut note = |op: &Operator| worst = worst.max(op.hermiticity_error());
    for n in 2..=4 {
        for delta in [10.0, 12.0, 20.0] {
            let u = resonance_u(n, delta).unwrap();
            let p = PhysParams::ideal(n, delta, u).with_rydberg_decay(0.01);
            note(&build_eliminated_h(&p, true).unwrap());
            note(&build_eliminated_h(&p, false).unwrap());
            note(&build_ladder_h(n, delta, u).unwrap());
            if n <= 3 {
                note(&build_full_h(&p).unwrap().0);
            }
        }
    }
    note(&build_effective_h(14.0).unwrap());
    note(&numeric_effective_model(4, 20.0).unwrap().hamiltonian().unwrap());
    r.check("Hamiltonians Hermitian", worst <= 1e-12, format!("max |H - H^dag|={worst:.2e}, need <= 1e-12"));
}

fn ladder_mirror(r: &mut Report) {
    // couplings are compared bit for bit; diagonals up to rounding of C(k,2) U
    let mut couplings_exact = true;
    let mut worst_ulps: f64 = 0.0;
    for n in 2..=6usize {
        for delta in [8.0, 10.0, 12.0, 20.0, 40.0] {
            let h = build_ladder_h(n, delta, resonance_u(n, delta).unwrap()).unwrap();
            let scale = (0..=n).map(|k| h.get(k, k).norm()).fold(1.0, f64::max);
            for k in 0..=n {
                let diff = (h.get(k, k) - h.get(n - k, n - k)).norm();
                worst_ulps = worst_ulps.max(diff / (scale * f64::EPSILON));
            }
            for k in 0..n {
                couplings_exact &= h.get(k, k + 1) == h.get(n - 1 - k, n - k);
            }
        }
    }
    r.check(
        "resonant ladder mirror symmetry",
        couplings_exact && worst_ulps <= 4.0,
        format!("N=2..6: couplings identical={couplings_exact}, diagonal mismatch={worst_ulps:.1} ulp, need <= 4"),
    );
}

fn symmetric_projection(r: &mut Report) {
    let mut worst: f64 = 0.0;
    for n in 2..=4 {
        let basis = AtomBasis::two_level(n).unwrap();
        let v = dicke_isometry(&basis);
        let proj = &v * v.adjoint();
        worst = worst.max((&proj * &proj - &proj).norm());
        worst = worst.max((v.adjoint() * &v - CMatrix::identity(n + 1, n + 1)).norm());
        let delta = 12.0;
        let u = resonance_u(n, delta).unwrap();
        let p = PhysParams::ideal(n, delta, u);
        let h = rydsim::model::build_eliminated_h_in(&p, true, &basis).unwrap();
        let reduced = v.adjoint() * h.matrix() * &v;
        worst = worst.max((reduced - build_ladder_h(n, delta, u).unwrap().matrix()).norm());
        // the full Hamiltonian leaves the symmetric subspace invariant
        worst = worst.max((h.matrix() * &proj - &proj * h.matrix()).norm());
    }
    r.check("symmetric-subspace projection", worst <= 1e-12, format!("max residual={worst:.2e}, need <= 1e-12"));
}

fn lindblad_preservation(r: &mut Report) {
    // one extra run with optical decay in the four-level space
    let mut p = ghz_params(12.0, 0.01);
    p.n_atoms = 2;
    p.interaction = rydsim::model::Interaction::Uniform(resonance_u(2, 12.0).unwrap());
    p.gamma_p = 0.05;
    let (h, c) = build_full_h(&p).unwrap();
    let b4 = AtomBasis::four_level(2).unwrap();
    let rho0 = QuantumState::product(&b4, &[Level::One, Level::One]).unwrap();
    record_lindblad(&propagate_density(&h, &c, &rho0, &TimeGrid::new(0.0, 2.0, 11).unwrap(), DEFAULT_TOL).unwrap());
    let (worst, count) = LINDBLAD_WORST.with(|w| *w.borrow());
    r.check(
        "Lindblad trace/Hermiticity/positivity",
        count > 0 && worst <= 1e-7,
        format!("worst violation={worst:.2e} over {count} states, need <= 1e-7"),
    );
}

fn numeric_coupling(r: &mut Report) {
    let m = numeric_effective_model(3, 40.0).unwrap();
    let want = 6.0 / 1600.0;
    let rel = (m.g_eff - want).abs() / want;
    r.check(
        "numeric effective coupling (delta=40)",
        rel <= 0.05,
        format!("g={:.6e} vs 6/delta^2={want:.6e}, rel err={rel:.4}, need <= 0.05", m.g_eff),
    );
}

fn alpha_consistency(r: &mut Report) {
    for delta in [10.0, 12.0, 14.0] {
        let h = build_eliminated_h(&ghz_params(delta, 0.0), true).unwrap();
        let t = gate_time(&effective_model(3, delta).unwrap()).unwrap();
        let gate = extract_gate(&h, 3, t).unwrap();
        let alpha = extract_alpha(&gate).unwrap();
        let d = phase_distance(alpha, predicted_alpha(delta));
        r.check(
            &format!("phase prediction vs extraction (delta={delta})"),
            d <= 0.05,
            format!("extracted={alpha:.4}, predicted={:.4}, diff={d:.4} rad, need <= 0.05", predicted_alpha(delta)),
        );
    }
}

type Check = fn(&mut Report);

fn main() -> ExitCode {
    let start = Instant::now();
    let mut r = Report { failures: 0 };
    let checks: [(&str, Check); 14] = [
        ("gate_ideal", gate_ideal),
        ("gate_robustness", gate_robustness),
        ("ghz_ideal", ghz_ideal),
        ("ghz_strong_decay", ghz_strong_decay),
        ("experimental_point", experimental_point),
        ("effective_agreement", effective_agreement),
        ("four_atoms", four_atoms),
        ("adiabatic_elimination", adiabatic_elimination),
        ("hermiticity", hermiticity),
        ("ladder_mirror", ladder_mirror),
        ("symmetric_projection", symmetric_projection),
        ("lindblad_preservation", lindblad_preservation),
        ("numeric_coupling", numeric_coupling),
        ("alpha_consistency", alpha_consistency),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    for (name, f) in checks {
        if filter.is_empty() || filter.iter().any(|p| name.contains(p.as_str())) {
            f(&mut r);
        }
    }
    println!("acceptance: {} failed, {:.1}s", r.failures, start.elapsed().as_secs_f64());
    if r.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
