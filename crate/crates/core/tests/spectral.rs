use num_complex::Complex64;
use passage_core::angular::LevelScheme;
use passage_core::basis::{BasisState, Level};
use passage_core::hamiltonian::{Hamiltonian, Polarizations, PulseProfile, SimulationConfig};
use passage_core::operator::OperatorMatrix;
use passage_core::spectral::{
    analytic_dark_state, dark_state_terms, hermitian_eigen, instantaneous_spectrum, landau_zener_probability_with, reachable_manifold,
    LandauZenerOptions,
};
use proptest::prelude::*;

fn config(scheme: LevelScheme, n_max: u32, delta: f64) -> SimulationConfig {
    SimulationConfig {
        scheme,
        n_max,
        cavity_pulse: PulseProfile::new(25.0, 17.0, 10.0).unwrap(),
        pump_pulse: PulseProfile::new(50.0, 23.0, 10.0).unwrap(),
        delta_plus: delta,
        delta_minus: delta,
        kappa: 0.0,
        gamma: 1.0,
        t_start: 0.0,
        t_end: 40.0,
        initial_state: vec![(BasisState::ground(-(scheme.f_g.twice() / 2).min(3), 0, 0), Complex64::new(1.0, 0.0))],
        polarizations: Polarizations::Both,
    }
}

#[test]
fn eigen_of_pauli_x() {
    let one = Complex64::new(1.0, 0.0);
    let h = OperatorMatrix::from_triplets(2, vec![(0, 1, one), (1, 0, one)]);
    let (e, v) = hermitian_eigen(&h).unwrap();
    assert!((e[0] + 1.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
    assert!((v[0][0] + v[0][1]).norm() < 1e-14);
}

#[test]
fn unsupported_dark_states() {
    assert!(dark_state_terms(3, LevelScheme::integer(3, 3).unwrap()).is_err());
    assert!(dark_state_terms(1, LevelScheme::integer(2, 1).unwrap()).is_err());
    assert!(dark_state_terms(0, LevelScheme::integer(1, 1).unwrap()).is_err());
    assert!(analytic_dark_state(0, 0.0, 0.0, LevelScheme::integer(3, 3).unwrap()).is_err());
}

#[test]
fn dark_state_limits() {
    // Only the cavity on: E0 is the initial Zeeman state; only the pump on: the three-photon state.
    let s = LevelScheme::integer(3, 3).unwrap();
    let a = analytic_dark_state(0, 1.0, 0.0, s).unwrap();
    assert!((a.amplitude(&BasisState::ground(-3, 0, 0)).abs() - 1.0).abs() < 1e-14);
    let b = analytic_dark_state(0, 0.0, 1.0, s).unwrap();
    assert!((b.amplitude(&BasisState::ground(0, 0, 3)).abs() - 1.0).abs() < 1e-14);
}

#[test]
fn spectrum_contains_zero_energies_on_resonance() {
    let cfg = config(LevelScheme::integer(3, 3).unwrap(), 5, 0.0);
    let basis = cfg.basis();
    let ham = Hamiltonian::new(&cfg, &basis).unwrap();
    let man = reachable_manifold(&ham, &cfg.initial_vector(&basis).unwrap());
    let sp = instantaneous_spectrum(&ham, 20.0, &man).unwrap();
    assert!(sp.energies.iter().filter(|e| e.abs() < 1e-9).count() >= 3);
    assert!(sp.energies.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn landau_zener_is_time_translation_invariant() {
    let cfg = config(LevelScheme::integer(3, 3).unwrap(), 7, 0.0);
    let mut shifted = cfg.clone();
    shifted.cavity_pulse = cfg.cavity_pulse.shifted(13.25);
    shifted.pump_pulse = cfg.pump_pulse.shifted(13.25);
    let opts = LandauZenerOptions { step: 2e-3, ..Default::default() };
    let a = landau_zener_probability_with(&cfg, opts).unwrap();
    let b = landau_zener_probability_with(&shifted, opts).unwrap();
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn landau_zener_vanishes_for_frozen_couplings() {
    // Pulses so broad that the couplings do not change over the window.
    let mut cfg = config(LevelScheme::integer(3, 3).unwrap(), 7, 0.0);
    cfg.cavity_pulse = PulseProfile::new(25.0, 0.0, 1e7).unwrap();
    cfg.pump_pulse = PulseProfile::new(50.0, 0.0, 1e7).unwrap();
    let p = landau_zener_probability_with(&cfg, LandauZenerOptions { step: 1e-2, margin_fwhm: 1e-6 }).unwrap();
    assert!(p < 1e-10, "{p}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn dark_states_annihilated(k in 0u32..3, g in 0.01f64..60.0, om in 0.01f64..60.0) {
        let scheme = LevelScheme::integer(3, 3).unwrap();
        let cfg = config(scheme, 7, 0.0);
        let basis = cfg.basis();
        let ham = Hamiltonian::new(&cfg, &basis).unwrap();
        let d = analytic_dark_state(k, g, om, scheme).unwrap();
        let v = d.to_vector(&basis).unwrap();
        prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        prop_assert!(d.amplitudes.iter().all(|(s, _)| s.level == Level::Ground));
        let hv = ham.h_int_at(g, om).apply(&v);
        prop_assert!(hv.norm() < 1e-10 * g.max(om).max(1.0));
    }

    #[test]
    fn j2_dark_state_annihilated(g in 0.01f64..60.0, om in 0.01f64..60.0) {
        let scheme = LevelScheme::integer(2, 1).unwrap();
        let cfg = config(scheme, 3, 0.0);
        let basis = cfg.basis();
        let ham = Hamiltonian::new(&cfg, &basis).unwrap();
        let v = analytic_dark_state(0, g, om, scheme).unwrap().to_vector(&basis).unwrap();
        prop_assert!(ham.h_int_at(g, om).apply(&v).norm() < 1e-10 * g.max(om).max(1.0));
    }

    #[test]
    fn eigenvectors_diagonalize(t in 5.0f64..35.0) {
        let cfg = config(LevelScheme::integer(3, 3).unwrap(), 4, 0.5);
        let basis = cfg.basis();
        let ham = Hamiltonian::new(&cfg, &basis).unwrap();
        let man = reachable_manifold(&ham, &cfg.initial_vector(&basis).unwrap());
        let h = ham.h_int(t).restrict(&man);
        let sp = instantaneous_spectrum(&ham, t, &man).unwrap();
        for (e, v) in sp.energies.iter().zip(&sp.vectors) {
            let mut hv = vec![Complex64::new(0.0, 0.0); v.len()];
            h.apply_into(v, &mut hv);
            let r: f64 = hv.iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(r < 1e-10, "residual {r} at e={e}");
        }
    }
}
