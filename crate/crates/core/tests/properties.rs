use cca_core::effective::{
    bloch_redfield_rates, effective_rate_model, lorentzian, qubit_channels, rate_steady_state, schrieffer_wolff, spectral_function,
    Branch,
};
use cca_core::hilbert::{partial_trace_qubits, CutoffSpec, DensityMatrix, HilbertSpace, SignedPermutation, StateSpec, StateVector};
use cca_core::hilbert::{named_state, BasisState};
use cca_core::liouvillian::{build_liouvillian, lindblad_rhs_direct};
use cca_core::linalg::{self, C64, ZERO};
use cca_core::model::{build_hamiltonian, collapse_ops, DephasingConvention, ModelParams};
use cca_core::ode::{integrate, OdeOptions};
use cca_core::spectral::{eigendecompose, overlap_quality, single_excitation_spectrum, EigenSystem};
use cca_core::steady::{model_liouvillian, steady_state, default_symmetry, SteadyOptions};
use faer::Mat;
use proptest::prelude::*;

/// Brute-force count of (qubits, photons) with total excitations <= m.
fn brute_force_dim(n: usize, m: u32) -> usize {
    let mut count = 0;
    let photon_tuples = (m as usize + 1).pow(n as u32);
    for q in 0..(1usize << n) {
        for code in 0..photon_tuples {
            let mut c = code;
            let mut total = q.count_ones();
            for _ in 0..n {
                total += (c % (m as usize + 1)) as u32;
                c /= m as usize + 1;
            }
            if total <= m {
                count += 1;
            }
        }
    }
    count
}

fn random_density(d: usize, seed: &[f64]) -> Mat<C64> {
    // A A^+ / tr for a pseudo-random A built from the seed values
    let a = Mat::from_fn(d, d, |i, j| {
        let k = (i * d + j) % seed.len();
        C64::new(seed[k] * ((i + 2 * j) as f64).sin(), seed[(k + 1) % seed.len()] * ((3 * i + j) as f64).cos())
    });
    let rho = &a * linalg::dagger(&a);
    let tr = linalg::trace(&rho);
    rho * faer::Scale(C64::new(1.0, 0.0) / tr)
}

fn driven(n: usize, wq: f64, wc: f64, wd: f64, j: f64, eps: f64, cavity: bool) -> ModelParams {
    let p = ModelParams::uniform(n, wq, wc, wd, j);
    if cavity {
        p.with_cavity_drive(eps, &[])
    } else {
        p.with_qubit_drive(eps, &[0.3, -1.1, 2.0, 0.0][..n])
    }
}

#[test]
fn dimensions_match_brute_force() {
    for n in 1..=4 {
        for m in 0..=3 {
            let s = HilbertSpace::build(n, CutoffSpec::TotalExcitations(m)).unwrap();
            assert_eq!(s.dim(), brute_force_dim(n, m), "N={n} M={m}");
            for (k, b) in s.basis().iter().enumerate() {
                assert_eq!(s.index_of(b), Some(k));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn per_mode_index_is_inverse(n in 1usize..=3, m in 0u32..=3) {
        let s = HilbertSpace::build(n, CutoffSpec::PerModeMax(m)).unwrap();
        prop_assert_eq!(s.dim(), (1usize << n) * (m as usize + 1).pow(n as u32));
        for k in 0..s.dim() {
            prop_assert_eq!(s.index_of(s.state(k)), Some(k));
        }
    }

    #[test]
    fn site_swap_is_an_involution(n in 2usize..=4, m in 0u32..=3, i in 0usize..4, j in 0usize..4) {
        prop_assume!(i < n && j < n && i != j);
        let s = HilbertSpace::build(n, CutoffSpec::TotalExcitations(m)).unwrap();
        let p = SignedPermutation::site_swap(&s, i, j).unwrap();
        prop_assert!(p.is_involution());
        for k in 0..s.dim() {
            prop_assert_eq!(p.perm[p.perm[k]], k);
        }
    }

    #[test]
    fn partial_trace_keeps_trace_and_hermiticity(m in 0u32..=3, seed in prop::collection::vec(-1.0f64..1.0, 7)) {
        let s = HilbertSpace::build(2, CutoffSpec::TotalExcitations(m)).unwrap();
        let rho = DensityMatrix { elements: random_density(s.dim(), &seed) };
        let q = partial_trace_qubits(&s, &rho).unwrap();
        prop_assert!((linalg::trace(&q.elements) - C64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert_eq!(linalg::hermiticity_defect(&q.elements), 0.0);
    }

    #[test]
    fn superoperator_matches_operator_form(
        wd in 5.0f64..9.0, eps in 0.0f64..0.3, cavity: bool,
        kappa in 0.0f64..0.1, gamma in 0.0f64..0.1, gphi in 0.0f64..0.1, half: bool,
        seed in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let conv = if half { DephasingConvention::HalfPauliZ } else { DephasingConvention::PauliZ };
        let p = driven(2, 7.0, 6.0, wd, 1.0, eps, cavity).with_rates(kappa, gamma, gphi).with_dephasing(conv);
        let s = HilbertSpace::build(2, CutoffSpec::TotalExcitations(2)).unwrap();
        let h = build_hamiltonian(&s, &p, 1.0).unwrap();
        let c = collapse_ops(&s, &p).unwrap();
        let l = build_liouvillian(&h, &c).unwrap();
        let rho = random_density(s.dim(), &seed);
        let dense: Vec<Mat<C64>> = c.iter().map(|x| x.to_dense()).collect();
        let diff = &l.apply(&rho) - &lindblad_rhs_direct(&h.to_dense(), &dense, &rho);
        prop_assert!(linalg::max_abs(&diff) < 1e-12);
    }

    #[test]
    fn identity_is_a_left_null_vector(wd in 5.0f64..9.0, eps in 0.0f64..0.3, cavity: bool, kappa in 0.0f64..0.5, gamma in 0.0f64..0.5, gphi in 0.0f64..0.5) {
        let p = driven(2, 7.0, 6.0, wd, 1.0, eps, cavity).with_rates(kappa, gamma, gphi);
        let s = HilbertSpace::build(2, CutoffSpec::PerModeMax(2)).unwrap();
        let l = model_liouvillian(&s, &p).unwrap();
        let d = s.dim();
        let mut col = vec![ZERO; d * d];
        for (r, c, v) in l.elements.triplets() {
            if r % d == r / d {
                col[c] += v;
            }
        }
        prop_assert!(col.iter().all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn closed_form_single_excitation_spectrum(delta in -4.0f64..4.0, j in 0.05f64..2.0, g in 0.1f64..2.0, wd in 5.0f64..9.0) {
        let mut p = ModelParams::uniform(2, 7.0, 7.0 - delta, wd, j);
        p.g = g;
        let s = HilbertSpace::build(2, CutoffSpec::TotalExcitations(1)).unwrap();
        let es = eigendecompose(&build_hamiltonian(&s, &p, 1.0).unwrap()).unwrap();
        for (a, b) in es.eigenvalues.iter().zip(single_excitation_spectrum(&p)) {
            prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn hamiltonian_is_hermitian(n in 1usize..=3, wd in 5.0f64..9.0, eps in 0.0f64..0.5, cavity: bool) {
        let s = HilbertSpace::build(n, CutoffSpec::TotalExcitations(2)).unwrap();
        let h = build_hamiltonian(&s, &driven(n, 7.0, 6.2, wd, 0.7, eps, cavity), 0.8).unwrap().to_dense();
        prop_assert!(linalg::hermiticity_defect(&h) < 1e-15);
    }

    #[test]
    fn undriven_hamiltonian_conserves_excitations(n in 1usize..=3, m in 1u32..=3, wd in 5.0f64..9.0, j in 0.0f64..2.0) {
        let s = HilbertSpace::build(n, CutoffSpec::TotalExcitations(m)).unwrap();
        let h = build_hamiltonian(&s, &ModelParams::uniform(n, 7.0, 6.0, wd, j), 1.0).unwrap();
        for (r, c, v) in h.triplets() {
            if v.norm() > 0.0 {
                prop_assert_eq!(s.state(r).excitations(), s.state(c).excitations());
            }
        }
    }

    #[test]
    fn quality_ignores_global_phases(wd in 6.5f64..8.0, a in 0.0f64..6.3, b in 0.0f64..6.3, c in 0.0f64..6.3) {
        let s = HilbertSpace::build(2, CutoffSpec::TotalExcitations(2)).unwrap();
        let es = eigendecompose(&build_hamiltonian(&s, &driven(2, 7.0, 6.0, wd, 1.0, 0.05, false), 1.0).unwrap()).unwrap();
        let vac = named_state(&s, &StateSpec::Vacuum).unwrap();
        let tgt = named_state(&s, &StateSpec::QubitBell { state: cca_core::hilbert::Bell::T0 }).unwrap();
        let base = overlap_quality(&es, &vac, &tgt);
        let rot = |v: &StateVector, x: f64| StateVector { amplitudes: v.amplitudes.iter().map(|z| z * C64::from_polar(1.0, x)).collect() };
        let phased = EigenSystem {
            eigenvalues: es.eigenvalues.clone(),
            eigenvectors: Mat::from_fn(es.eigenvectors.nrows(), es.len(), |i, k| es.eigenvectors[(i, k)] * C64::from_polar(1.0, c * k as f64)),
        };
        let q = overlap_quality(&phased, &rot(&vac, a), &rot(&tgt, b));
        prop_assert_eq!(q.argmax, base.argmax);
        for (x, y) in q.q_values.iter().zip(&base.q_values) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rates_are_nonnegative_and_populations_normalised(wd in 61.0f64..67.0) {
        let p = ModelParams::uniform(2, 70.0, 60.0, wd, 1.0).with_cavity_drive(1.0, &[]).with_rates(1e-3, 1e-4, 1e-5);
        let em = schrieffer_wolff(&p).unwrap();
        for w in [-20.0, -5.0, 0.0, 3.0, 12.0] {
            prop_assert!(spectral_function(w, Branch::Symmetric, &em, 1e-3) >= 0.0);
            prop_assert!(spectral_function(w, Branch::Antisymmetric, &em, 1e-3) >= 0.0);
        }
        let rm = effective_rate_model(&em).unwrap();
        prop_assert!(rm.transition_rates.iter().flatten().all(|&r| r >= 0.0));
        let pops = rate_steady_state(&rm, &qubit_channels(&em)).unwrap();
        prop_assert!(pops.iter().all(|&x| x >= 0.0));
        prop_assert!((pops.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherences_decay_as_closed_form(k in 0usize..4, l in 0usize..4, re in -1.0f64..1.0, im in -1.0f64..1.0, t in 0.01f64..2.0) {
        prop_assume!(k != l);
        let p = ModelParams::uniform(2, 70.0, 60.0, 65.5, 1.0).with_cavity_drive(1.0, &[]).with_rates(1e-2, 1e-3, 1e-4);
        let em = schrieffer_wolff(&p).unwrap();
        let rm = effective_rate_model(&em).unwrap();
        let z0 = C64::new(re, im);
        let w = rm.energies[k] - rm.energies[l];
        let lam = rm.dephasing_constants[k][l];
        let gen = C64::new(-lam, -w);
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-13, ..Default::default() };
        let mut end = ZERO;
        integrate(|_, x: &[C64], y: &mut [C64]| y[0] = gen * x[0], 0.0, &[z0], &[t], &opts, |_, _, y: &[C64]| {
            end = y[0];
            Ok(())
        })
        .unwrap();
        prop_assert!((rm.coherence_at(k, l, z0, t) - end).norm() < 1e-10);
    }

    #[test]
    fn steady_purity_is_bounded(wd in 61.0f64..69.0) {
        let p = ModelParams::uniform(2, 70.0, 60.0, wd, 1.0).with_cavity_drive(1.0, &[]).with_rates(1e-2, 1e-3, 1e-4);
        let s = HilbertSpace::build(2, CutoffSpec::PerModeMax(1)).unwrap();
        let r = steady_state(&s, &model_liouvillian(&s, &p).unwrap(), default_symmetry(&s).as_ref(), &SteadyOptions::default()).unwrap();
        prop_assert!(r.purity >= 0.25 - 1e-12 && r.purity <= 1.0 + 1e-12);
    }
}

#[test]
fn lorentzian_integrates_to_one() {
    // trapezoid on [-L, L] against the closed form (2/pi) atan(2L/kappa)
    for kappa in [1e-3, 0.1, 2.0] {
        let half = 2000.0 * kappa;
        let n = 400_000;
        let h = 2.0 * half / n as f64;
        let s: f64 = (0..=n).map(|i| lorentzian(-half + i as f64 * h, 0.0, kappa) * if i == 0 || i == n { 0.5 } else { 1.0 }).sum::<f64>() * h;
        let exact = 2.0 / std::f64::consts::PI * (2.0 * half / kappa).atan();
        assert!((s - exact).abs() < 1e-6);
        assert!((s - 1.0).abs() < 1e-3);
    }
}

#[test]
fn redfield_rates_follow_golden_rule() {
    // two-level system with sigma_x coupling: Gamma_{e->g} = S(E_e - E_g)
    let h = Mat::from_fn(2, 2, |i, j| if i == j { C64::new(if i == 0 { -0.5 } else { 0.5 }, 0.0) } else { ZERO });
    let sx = Mat::from_fn(2, 2, |i, j| if i != j { C64::new(1.0, 0.0) } else { ZERO });
    let rm = bloch_redfield_rates(&h, &[sx], |_, w| if w > 0.0 { 0.3 } else { 0.1 }).unwrap();
    assert!((rm.transition_rates[1][0] - 0.3).abs() < 1e-15);
    assert!((rm.transition_rates[0][1] - 0.1).abs() < 1e-15);
    let pops = rate_steady_state(&rm, &[]).unwrap();
    assert!((pops[0] - 0.75).abs() < 1e-12);
}

#[test]
fn qubit_index_puts_site_zero_high() {
    // sanity of the (gg, ge, eg, ee) layout used by the effective model
    let s = HilbertSpace::build(2, CutoffSpec::PerModeMax(0)).unwrap();
    for q in 0..4u8 {
        let b = BasisState::new(vec![q >> 1, q & 1], vec![0, 0]);
        assert_eq!(s.state(s.index_of(&b).unwrap()).qubit_index(), q as usize);
    }
}
