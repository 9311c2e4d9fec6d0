use num_complex::Complex64;
use passage_core::angular::LevelScheme;
use passage_core::basis::{atomic_lowering, enumerate_basis, mode_annihilation, BasisState, Level, Polarization};
use passage_core::hamiltonian::{Hamiltonian, Polarizations, PulseProfile, SimulationConfig};
use passage_core::operator::{OperatorMatrix, StateVector};
use passage_core::trajectory::{detector_collapse_set, standard_collapse_set};
use proptest::prelude::*;

fn config(scheme: LevelScheme, n_max: u32, delta: (f64, f64), kappa: f64, pol: Polarizations) -> SimulationConfig {
    SimulationConfig {
        scheme,
        n_max,
        cavity_pulse: PulseProfile::new(25.0, 17.0, 10.0).unwrap(),
        pump_pulse: PulseProfile::new(50.0, 23.0, 10.0).unwrap(),
        delta_plus: delta.0,
        delta_minus: delta.1,
        kappa,
        gamma: 1.0,
        t_start: 0.0,
        t_end: 40.0,
        initial_state: vec![(BasisState::ground(-scheme.f_g.twice() / 2, 0, 0), Complex64::new(1.0, 0.0))],
        polarizations: pol,
    }
}

fn f33() -> LevelScheme {
    LevelScheme::integer(3, 3).unwrap()
}

fn random_state(dim: usize, seed: &[f64]) -> StateVector {
    let mut v = StateVector::zeros(dim);
    for i in 0..dim {
        let a = seed[i % seed.len()] * (1.0 + i as f64).sin();
        let b = seed[(i + 1) % seed.len()] * (2.0 + 0.7 * i as f64).cos();
        v[i] = Complex64::new(a, b);
    }
    v.normalized()
}

#[test]
fn full_dimension() {
    assert_eq!(enumerate_basis(f33(), 7).dim(), 896);
    assert_eq!(enumerate_basis(LevelScheme::integer(2, 1).unwrap(), 2).dim(), 72);
}

#[test]
fn cavity_term_matches_explicit_construction() {
    let cfg = config(f33(), 4, (0.0, 0.0), 0.0, Polarizations::Both);
    let basis = cfg.basis();
    let ham = Hamiltonian::new(&cfg, &basis).unwrap();
    let i = Complex64::new(0.0, 1.0);
    let mut expected = OperatorMatrix::zeros(basis.dim());
    for (pol, sigma) in [(Polarization::Minus, -1), (Polarization::Plus, 1)] {
        let a = mode_annihilation(&basis, pol);
        let s = atomic_lowering(&basis, sigma).unwrap();
        let t = a.adjoint().mul(&s).unwrap();
        expected = expected.add(&t.sub(&t.adjoint()).unwrap().scale(-i)).unwrap();
    }
    assert!(ham.cavity_term().max_abs_diff(&expected) < 1e-14);
    let a0 = atomic_lowering(&basis, 0).unwrap();
    let pump = a0.sub(&a0.adjoint()).unwrap().scale(i);
    assert!(ham.pump_term().max_abs_diff(&pump) < 1e-14);
}

#[test]
fn single_polarization_drops_plus_coupling() {
    let cfg = config(f33(), 4, (0.0, 0.0), 0.0, Polarizations::MinusOnly);
    let basis = cfg.basis();
    let ham = Hamiltonian::new(&cfg, &basis).unwrap();
    let np = passage_core::basis::mode_number(&basis, Polarization::Plus);
    assert!(ham.cavity_term().commutator(&np).unwrap().max_abs() < 1e-14);
}

#[test]
fn charge_is_conserved_by_the_interaction() {
    let cfg = config(f33(), 4, (0.3, -0.2), 0.0, Polarizations::Both);
    let basis = cfg.basis();
    let ham = Hamiltonian::new(&cfg, &basis).unwrap();
    let charge = |s: &BasisState| s.m.twice() + 2 * s.n_plus as i32 - 2 * s.n_minus as i32;
    for (r, c, _) in ham.h_int_at(3.0, 5.0).triplets() {
        assert_eq!(charge(&basis.state(r)), charge(&basis.state(c)));
    }
}

#[test]
fn target_reachable_from_initial_sector() {
    let cfg = config(f33(), 7, (0.6, 0.6), 0.0, Polarizations::Both);
    let basis = cfg.basis();
    let ham = Hamiltonian::new(&cfg, &basis).unwrap();
    let sectors = ham.sectors();
    let start = basis.index_of(&BasisState::ground(-3, 0, 0)).unwrap();
    for target in [BasisState::ground(0, 0, 3), BasisState::ground(0, 1, 4), BasisState::ground(0, 2, 5)] {
        assert_eq!(sectors.sector_of(start), sectors.sector_of(basis.index_of(&target).unwrap()));
    }
    let off = basis.index_of(&BasisState::ground(-3, 0, 1)).unwrap();
    assert_ne!(sectors.sector_of(start), sectors.sector_of(off));
}

#[test]
fn h_eff_reduces_to_h_int_without_loss() {
    let mut cfg = config(f33(), 3, (0.4, 0.1), 0.0, Polarizations::Both);
    cfg.gamma = 0.0;
    let basis = cfg.basis();
    let ham = Hamiltonian::new(&cfg, &basis).unwrap();
    for t in [0.0, 12.5, 20.0, 31.0] {
        assert!(ham.h_eff(t).max_abs_diff(&ham.h_int(t)) < 1e-14);
    }
}

#[test]
fn decay_part_of_h_eff() {
    let cfg = config(f33(), 3, (0.4, 0.1), 0.3, Polarizations::Both);
    let basis = cfg.basis();
    let ham = Hamiltonian::new(&cfg, &basis).unwrap();
    let t = 19.0;
    let d = ham.h_eff(t).sub(&ham.h_int(t)).unwrap();
    assert!(d.is_diagonal());
    for (k, z) in d.diagonal_values().iter().enumerate() {
        let s = basis.state(k);
        let mut expect = -0.3 * (s.n_plus + s.n_minus) as f64;
        if s.level == Level::Excited {
            expect -= 0.5;
        }
        assert!(z.re.abs() < 1e-15 && (z.im - expect).abs() < 1e-14, "{s}: {z}");
    }
}

#[test]
fn bad_configs_rejected() {
    let mut cfg = config(f33(), 3, (0.0, 0.0), 0.0, Polarizations::Both);
    cfg.kappa = -1.0;
    assert!(cfg.validate().is_err());
    let mut cfg = config(f33(), 3, (0.0, 0.0), 0.0, Polarizations::Both);
    cfg.initial_state = vec![(BasisState::ground(-3, 0, 0), Complex64::new(0.9, 0.0))];
    assert!(cfg.validate().is_err());
    let mut cfg = config(f33(), 3, (0.0, 0.0), 0.0, Polarizations::Both);
    cfg.initial_state = vec![(BasisState::ground(-3, 0, 4), Complex64::new(1.0, 0.0))];
    assert!(cfg.validate().is_err());
    assert!(PulseProfile::new(1.0, 0.0, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn h_int_is_hermitian(t in 0.0f64..40.0, dp in -2.0f64..2.0, dm in -2.0f64..2.0, two in any::<bool>()) {
        let pol = if two { Polarizations::Both } else { Polarizations::MinusOnly };
        let cfg = config(f33(), 3, (dp, dm), 0.0, pol);
        let basis = cfg.basis();
        let ham = Hamiltonian::new(&cfg, &basis).unwrap();
        prop_assert!(ham.h_int(t).is_hermitian(1e-14));
    }

    #[test]
    fn pulsed_operator_matches_assembly(g in 0.0f64..60.0, om in 0.0f64..60.0) {
        let cfg = config(LevelScheme::integer(2, 1).unwrap(), 3, (0.6, 0.6), 0.1, Polarizations::Both);
        let basis = cfg.basis();
        let ham = Hamiltonian::new(&cfg, &basis).unwrap();
        let direct = ham.h_int_at(g, om).add(&ham.decay_term().clone()).unwrap();
        prop_assert!(ham.pulsed_h_eff().at(g, om).max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn jump_rates_match_norm_loss(kappa in 0.0f64..1.0, t in 0.0f64..40.0, phis in proptest::array::uniform3(0.0f64..6.3), seed in proptest::collection::vec(-1.0f64..1.0, 5)) {
        let cfg = config(f33(), 3, (0.6, 0.6), kappa, Polarizations::Both);
        let basis = cfg.basis();
        let ham = Hamiltonian::new(&cfg, &basis).unwrap();
        let psi = random_state(basis.dim(), &seed);
        // d|psi|^2/dt = 2 Im <psi|H_eff|psi>
        let loss = -2.0 * ham.h_eff(t).expectation(&psi).im;
        for set in [standard_collapse_set(&ham), detector_collapse_set(&ham, &phis).unwrap()] {
            let total: f64 = set.rates(psi.as_slice()).iter().sum();
            prop_assert!((total - loss).abs() < 1e-12 * (1.0 + loss));
            prop_assert!(set.sum_rule_deviation(&ham) < 1e-13);
        }
    }
}
