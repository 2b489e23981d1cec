use std::f64::consts::{PI, SQRT_2};

use cca_core::dynamics::{dissipation_sweep, evolve_master, make_pi_pulse, pump_equivalence, EvolveOptions, RateKind};
use cca_core::effective::{
    effective_eigenstates, effective_two_level, schrieffer_wolff, singlet_resonance, sw_steady_state, tilde_basis_view, triplet_resonance,
    SW_FLUCTUATION_CUTOFF,
};
use cca_core::hilbert::{named_state, BasisState, Bell, CutoffSpec, HilbertSpace, StateSpec, StateVector};
use cca_core::linalg::{self, C64, ZERO};
use cca_core::model::{build_hamiltonian, DephasingConvention, ModelParams};
use cca_core::ode::{integrate, OdeOptions};
use cca_core::spectral::{analytic_drive_frequency, eigendecompose, rabi_gap, scan_quality_map};
use cca_core::steady::{default_symmetry, model_liouvillian, steady_state, SteadyOptions};

fn fig3() -> ModelParams {
    ModelParams::uniform(2, 7.0, 6.0, 7.43, 1.0).with_qubit_drive(0.05, &[]).with_rates(1e-3, 1e-4, 1e-5)
}

fn fig6(wd: f64) -> ModelParams {
    ModelParams::uniform(2, 70.0, 60.0, wd, 1.0)
        .with_cavity_drive(1.0, &[])
        .with_rates(1e-3, 1e-4, 1e-5)
        .with_dephasing(DephasingConvention::HalfPauliZ)
}

fn states(space: &HilbertSpace, target: StateSpec) -> (StateVector, StateVector) {
    (named_state(space, &StateSpec::Vacuum).unwrap(), named_state(space, &target).unwrap())
}

/// Population of `target` after evolving the 2x2 Hamiltonian h(t) from the first basis state.
fn two_level_final(h: impl Fn(f64) -> [[C64; 2]; 2], times: &[f64]) -> Vec<f64> {
    let mi = C64::new(0.0, -1.0);
    let opts = OdeOptions { rtol: 1e-11, atol: 1e-13, max_step: 0.05, ..Default::default() };
    let mut out = Vec::new();
    integrate(
        |t, x: &[C64], y: &mut [C64]| {
            let m = h(t);
            y[0] = mi * (m[0][0] * x[0] + m[0][1] * x[1]);
            y[1] = mi * (m[1][0] * x[0] + m[1][1] * x[1]);
        },
        0.0,
        &[C64::new(1.0, 0.0), ZERO],
        times,
        &opts,
        |_, _, y: &[C64]| {
            out.push(y[1].norm_sqr());
            Ok(())
        },
    )
    .unwrap();
    out
}

#[test]
fn cavity_photon_decays_exponentially() {
    let mut p = ModelParams::uniform(1, 7.0, 6.0, 6.0, 0.0).with_rates(0.2, 0.0, 0.0);
    p.g = 0.0;
    let space = HilbertSpace::build(1, CutoffSpec::TotalExcitations(1)).unwrap();
    let one = StateVector::basis(&space, &BasisState::new(vec![0], vec![1])).unwrap();
    let vac = named_state(&space, &StateSpec::Vacuum).unwrap();
    let grid: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
    let opts = EvolveOptions { ode: OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() }, ..Default::default() };
    let tr = evolve_master(&one.projector(), &space, &p, None, &grid, &vac, &one, &opts).unwrap();
    for (t, f) in tr.times.iter().zip(&tr.f_target) {
        assert!((f - (-0.2 * t).exp()).abs() < 1e-8, "t = {t}");
    }
}

#[test]
fn long_time_evolution_reaches_the_steady_state() {
    let p = ModelParams::uniform(2, 7.0, 6.0, 6.6, 1.0).with_cavity_drive(0.3, &[]).with_rates(1.0, 0.8, 0.2);
    let space = HilbertSpace::build(2, CutoffSpec::PerModeMax(2)).unwrap();
    let (vac, tgt) = states(&space, StateSpec::QubitBell { state: Bell::T0 });
    let opts = EvolveOptions {
        ode: OdeOptions { rtol: 1e-10, atol: 1e-13, ..Default::default() },
        checkpoint_every: Some(1),
        ..Default::default()
    };
    let tr = evolve_master(&vac.projector(), &space, &p, None, &[0.0, 60.0], &vac, &tgt, &opts).unwrap();
    let rho_t = &tr.checkpoints.last().unwrap().1;
    let ss = steady_state(&space, &model_liouvillian(&space, &p).unwrap(), default_symmetry(&space).as_ref(), &SteadyOptions::default()).unwrap();
    assert!(linalg::trace_distance(&rho_t.elements, &ss.rho_ss.elements).unwrap() < 1e-6);
}

#[test]
fn coherent_drive_never_populates_antisymmetric_states() {
    let mut p = fig3().with_rates(0.0, 0.0, 0.0);
    p.drive.amplitudes = vec![C64::new(0.05, 0.0); 2];
    let space = HilbertSpace::build(2, CutoffSpec::TotalExcitations(3)).unwrap();
    let (vac, s) = states(&space, StateSpec::QubitBell { state: Bell::Singlet });
    let es = eigendecompose(&build_hamiltonian(&space, &p, 1.0).unwrap()).unwrap();
    let t0 = named_state(&space, &StateSpec::QubitBell { state: Bell::T0 }).unwrap();
    let pulse = make_pi_pulse(rabi_gap(&es, &vac, &t0).unwrap(), 0.05).unwrap();
    let opts = EvolveOptions { exchange_pair: Some((0, 1)), ..Default::default() };
    let tr = evolve_master(&vac.projector(), &space, &p, Some(&pulse), &pulse.time_grid(301), &vac, &s, &opts).unwrap();
    assert!(tr.f_target.iter().all(|&f| f < 1e-8));
    assert!(tr.antisymmetric_weight.unwrap().iter().all(|&w| w.abs() < 1e-8));
}

#[test]
fn halving_tolerances_keeps_the_peak() {
    let p = fig3();
    let space = HilbertSpace::build(2, CutoffSpec::TotalExcitations(3)).unwrap();
    let (vac, tgt) = states(&space, StateSpec::QubitBell { state: Bell::T0 });
    let es = eigendecompose(&build_hamiltonian(&space, &p, 1.0).unwrap()).unwrap();
    let pulse = make_pi_pulse(rabi_gap(&es, &vac, &tgt).unwrap(), 0.05).unwrap();
    let peak = |rtol: f64, atol: f64| {
        let opts = EvolveOptions { ode: OdeOptions { rtol, atol, ..Default::default() }, ..Default::default() };
        evolve_master(&vac.projector(), &space, &p, Some(&pulse), &pulse.time_grid(601), &vac, &tgt, &opts).unwrap().peak_target().0
    };
    assert!((peak(1e-8, 1e-10) - peak(5e-9, 5e-11)).abs() < 1e-5);
}

#[test]
fn cavity_decay_is_the_mildest_channel() {
    let base = fig3().with_rates(0.0, 0.0, 0.0);
    let space = HilbertSpace::build(2, CutoffSpec::TotalExcitations(2)).unwrap();
    let (vac, tgt) = states(&space, StateSpec::QubitBell { state: Bell::T0 });
    let es = eigendecompose(&build_hamiltonian(&space, &base, 1.0).unwrap()).unwrap();
    let pulse = make_pi_pulse(rabi_gap(&es, &vac, &tgt).unwrap(), 0.05).unwrap();
    let grid = pulse.time_grid(401);
    let f = |k: RateKind| {
        dissipation_sweep(&space, k, &[3e-3], &base, &pulse, &grid, &vac, &tgt, &EvolveOptions::default()).unwrap()[0].max_fidelity
    };
    let (fk, fg, fp) = (f(RateKind::Kappa), f(RateKind::Gamma), f(RateKind::GammaPhi));
    assert!(fk > fg && fk > fp, "kappa {fk}, gamma {fg}, gamma_phi {fp}");
}

#[test]
fn pump_equivalence_converges_with_cutoff() {
    let p = fig3();
    let mut last = f64::INFINITY;
    for m in [3, 4, 5] {
        let space = HilbertSpace::build(2, CutoffSpec::TotalExcitations(m)).unwrap();
        let (vac, tgt) = states(&space, StateSpec::QubitBell { state: Bell::T0 });
        let es = eigendecompose(&build_hamiltonian(&space, &p, 1.0).unwrap()).unwrap();
        let pulse = make_pi_pulse(rabi_gap(&es, &vac, &tgt).unwrap(), 0.05).unwrap();
        let ode = OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let d = pump_equivalence(&space, &p, &pulse, &pulse.time_grid(121), &ode).unwrap().max_trace_distance;
        assert!(d < 0.1 * last, "cutoff {m}: {d:e} after {last:e}");
        if m >= 4 {
            assert!(d < 1e-6, "cutoff {m}: {d:e}");
        }
        last = d;
    }
}

#[test]
fn two_level_resonance_sits_on_the_analytic_curve() {
    for n in [2usize, 3, 4] {
        for delta in [-3.0, -0.5, 1.0, 1.873] {
            let mut p = ModelParams::uniform(n, 7.0, 7.0 - delta, 0.0, 1.0).with_qubit_drive(0.05, &[]);
            let (plus, minus) = analytic_drive_frequency(delta, n, &p);
            for wd in [plus, minus] {
                p.omega_d = wd;
                let tl = effective_two_level(&p, n).unwrap();
                assert!(tl.detuning.abs() < 1e-10, "N={n} Delta={delta} omega_d={wd}: {}", tl.detuning);
            }
        }
    }
}

#[test]
fn two_level_rabi_frequency() {
    let p = ModelParams::uniform(2, 7.0, 6.0, 7.43, 1.0).with_qubit_drive(0.05, &[]);
    assert!((effective_two_level(&p, 2).unwrap().rabi_eff - 2.0 * SQRT_2 * 0.05).abs() < 1e-15);
    let p4 = ModelParams::uniform(4, 7.0, 7.5, 7.35, 1.0).with_qubit_drive(0.05, &[]);
    assert!((effective_two_level(&p4, 4).unwrap().rabi_eff - 0.2).abs() < 1e-15);
}

#[test]
fn two_level_oscillation_period() {
    let mut p = ModelParams::uniform(2, 7.0, 6.0, 0.0, 1.0).with_qubit_drive(0.05, &[]);
    p.omega_d = analytic_drive_frequency(1.0, 2, &p).0;
    let tl = effective_two_level(&p, 2).unwrap();
    let h = tl.hamiltonian;
    let period = 2.0 * PI / tl.rabi_eff;
    let dt = period / 4000.0;
    let times: Vec<f64> = (0..=6000).map(|k| k as f64 * dt).collect();
    let pop = two_level_final(|_| h, &times);
    // first return to the start after the transfer, refined by a parabola through the minimum
    let k = (2000..6000).min_by(|&a, &b| pop[a].total_cmp(&pop[b])).unwrap();
    let (a, b, c) = (pop[k - 1], pop[k], pop[k + 1]);
    let t_min = times[k] + 0.5 * dt * (a - c) / (a - 2.0 * b + c);
    assert!((t_min - period).abs() / period < 1e-3, "{t_min} vs {period}");
}

#[test]
fn gaussian_pi_pulse_inverts_the_two_level_model() {
    let mut p = ModelParams::uniform(2, 7.0, 6.0, 0.0, 1.0).with_qubit_drive(0.05, &[]);
    p.omega_d = analytic_drive_frequency(1.0, 2, &p).0;
    let tl = effective_two_level(&p, 2).unwrap();
    let pulse = make_pi_pulse(tl.rabi_eff, 0.05).unwrap();
    let h = tl.hamiltonian;
    let end = two_level_final(
        |t| {
            let f = C64::new(pulse.envelope(t), 0.0);
            [[h[0][0], h[0][1] * f], [h[1][0] * f, h[1][1]]]
        },
        &[pulse.total_window],
    );
    assert!(end[0] > 0.999, "{}", end[0]);
}

#[test]
fn transition_splitting_comes_from_hopping() {
    let transitions = |j: f64| {
        let mut p = fig6(65.56);
        p.hopping = vec![vec![0.0, j], vec![j, 0.0]];
        let tl = effective_eigenstates(&schrieffer_wolff(&p).unwrap()).unwrap();
        (tl.energy(Bell::TMinus) - tl.energy(Bell::Singlet), tl.energy(Bell::Singlet) - tl.energy(Bell::TPlus))
    };
    let (a, b) = transitions(0.0);
    assert!((a - b).abs() < 1e-12 * a.abs(), "{a} {b}");
    let (a, b) = transitions(1.0);
    // leading order 2 J (g / Delta)^2 with Delta = 10
    assert!(((a - b).abs() - 0.02).abs() < 0.1 * 0.02, "{}", (a - b).abs());
}

#[test]
fn effective_steady_state_is_diagonal_in_the_dressed_basis() {
    let p = fig6(65.5);
    for wd in [singlet_resonance(&p, 65.0, 66.0).unwrap(), triplet_resonance(&p, 64.0, 65.0).unwrap()] {
        let q = fig6(wd);
        let r = sw_steady_state(&q, SW_FLUCTUATION_CUTOFF, &SteadyOptions::default()).unwrap();
        let tl = effective_eigenstates(&schrieffer_wolff(&q).unwrap()).unwrap();
        let v = tilde_basis_view(&tl, &r.reduced_qubits.elements);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(v[i][j].norm() < 0.02, "omega_d = {wd}: |rho_{i}{j}| = {}", v[i][j].norm());
                }
            }
        }
    }
}

#[test]
fn quality_map_does_not_depend_on_worker_count() {
    let space = HilbertSpace::build(2, CutoffSpec::TotalExcitations(2)).unwrap();
    let deltas: Vec<f64> = (0..7).map(|k| -3.0 + k as f64).collect();
    let omegas: Vec<f64> = (0..9).map(|k| 6.0 + 0.25 * k as f64).collect();
    let target = StateSpec::QubitBell { state: Bell::T0 };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| scan_quality_map(&space, &deltas, &omegas, &fig3(), &target).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.q_max.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.q_max.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.argmax_eigenindex, b.argmax_eigenindex);
}
