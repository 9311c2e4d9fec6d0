use num_complex::Complex64;
use passage_core::angular::HalfInt;
use passage_core::basis::BasisState;
use passage_core::hamiltonian::Polarizations;
use passage_sim::config::{parse_experiment, parse_experiment_as, ExperimentKind, SweepAxis};
use passage_sim::presets;
use passage_sim::Error;
use proptest::prelude::*;

#[test]
fn every_preset_parses_and_round_trips() {
    for name in presets::names() {
        let spec = parse_experiment(&format!("preset = {name:?}")).unwrap_or_else(|e| panic!("{name}: {e}"));
        let echo = spec.to_toml();
        let again = parse_experiment(&echo).unwrap_or_else(|e| panic!("{name} echo: {e}\n{echo}"));
        assert_eq!(spec, again, "{name}");
        assert_eq!(echo, again.to_toml());
    }
}

#[test]
fn fig10_preset_values() {
    let s = parse_experiment("preset = \"fig10\"").unwrap();
    let c = &s.config;
    assert_eq!(s.kind, ExperimentKind::Master);
    assert_eq!((c.scheme.f_g, c.scheme.f_e), (HalfInt::from_int(3), HalfInt::from_int(3)));
    assert_eq!((c.cavity_pulse.amplitude, c.cavity_pulse.center, c.cavity_pulse.fwhm), (25.0, 17.0, 10.0));
    assert_eq!((c.pump_pulse.amplitude, c.pump_pulse.center, c.pump_pulse.fwhm), (50.0, 23.0, 10.0));
    assert_eq!((c.delta_plus, c.delta_minus, c.kappa, c.gamma), (0.6, 0.6, 0.0, 1.0));
    assert_eq!(c.initial_state, vec![(BasisState::ground(-3, 0, 0), Complex64::new(1.0, 0.0))]);
    assert_eq!(c.polarizations, Polarizations::Both);
}

#[test]
fn fig21_preset_values() {
    let s = parse_experiment("preset = \"fig21\"").unwrap();
    let c = &s.config;
    assert_eq!((c.scheme.f_g, c.scheme.f_e), (HalfInt::from_int(2), HalfInt::from_int(1)));
    assert_eq!((c.cavity_pulse.amplitude, c.pump_pulse.amplitude), (30.0, 50.0));
    assert_eq!((c.delta_plus, c.delta_minus), (0.6, 0.6));
    assert_eq!(c.initial_state, vec![(BasisState::ground(0, 0, 0), Complex64::new(1.0, 0.0))]);
}

#[test]
fn user_keys_override_preset() {
    let s = parse_experiment_as("preset = \"fig14\"\n[system]\nkappa = 0.3\n[run]\nseed = 9\n", ExperimentKind::Master).unwrap();
    assert_eq!(s.kind, ExperimentKind::Master);
    assert_eq!(s.config.kappa, 0.3);
    assert_eq!(s.config.delta_plus, 0.6);
    assert_eq!(s.base_seed, 9);
    assert_eq!(s.config.initial_state.len(), 2);
}

#[test]
fn negative_kappa_is_a_range_error() {
    let e = parse_experiment("preset = \"fig10\"\n[system]\nkappa = -1\n").unwrap_err();
    match &e {
        Error::Range { key, bound, .. } => {
            assert_eq!(key, "system.kappa");
            assert!(bound.contains(">= 0"));
        }
        other => panic!("{other:?}"),
    }
    assert!(e.to_string().contains("system.kappa"));
}

#[test]
fn unknown_keys_are_all_listed() {
    let e = parse_experiment("preset = \"fig10\"\nkapa = 1\n[system]\ndelt = 0.5\n[[initial]]\nstate = \"g-3,0,0\"\nphase = 1\n").unwrap_err();
    let Error::UnknownKeys(keys) = e else { panic!("{e:?}") };
    assert_eq!(keys, vec!["initial[0].phase".to_string(), "kapa".into(), "system.delt".into()]);
}

#[test]
fn missing_required_keys() {
    let base = "kind = \"master\"\n[system]\nf_g = 3\nf_e = 3\n[cavity]\namplitude = 25\n[pump]\namplitude = 50\n";
    let with_init = format!("{base}[[initial]]\nstate = \"g-3,0,0\"\n");
    parse_experiment(&with_init).unwrap();
    assert!(matches!(parse_experiment(base), Err(Error::Missing(k)) if k == "initial"));
    let no_pump = with_init.replace("[pump]\namplitude = 50\n", "");
    assert!(matches!(parse_experiment(&no_pump), Err(Error::Missing(k)) if k == "pump.amplitude"));
    let no_kind = with_init.replace("kind = \"master\"\n", "");
    assert!(matches!(parse_experiment(&no_kind), Err(Error::Missing(k)) if k == "kind"));
    assert!(matches!(parse_experiment_as(&with_init, ExperimentKind::CorrelateGhz), Err(Error::Missing(k)) if k == "analyzer"));
    assert!(matches!(parse_experiment_as(&with_init, ExperimentKind::SweepDetuning), Err(Error::Missing(k)) if k == "sweep"));
}

#[test]
fn invalid_values() {
    let bad = [
        "preset = \"fig10\"\n[sweep]\nparameter = \"delta\"\nvalues = [0.1, nan]\n",
        "preset = \"fig11\"\n[sweep]\nparameter = \"kappa\"\nvalues = [0.1]\n",
        "preset = \"fig10\"\n[time]\nt_end = -1\n",
        "preset = \"fig10\"\n[system]\nf_g = 3\nf_e = 5\n",
        "preset = \"fig10\"\n[system]\nn_max = 2\n[[target]]\nstate = \"g0,0,3\"\n",
        "preset = \"fig10\"\n[cavity]\nfwhm = 0\n",
        "preset = \"fig10\"\n[[initial]]\nstate = \"q1,0,0\"\n",
        "preset = \"nope\"\n",
        "preset = \"fig10\"\n[run]\nn_traj = 0\n",
        "preset = \"fig10\"\n[system]\ngamma = \"one\"\n",
    ];
    for text in bad {
        assert!(parse_experiment(text).is_err(), "{text}");
    }
}

#[test]
fn sweep_range_form_and_half_integer_spins() {
    let s = parse_experiment("preset = \"fig17\"").unwrap();
    let sw = s.sweep.as_ref().unwrap();
    assert_eq!(sw.axis, SweepAxis::Phi);
    assert_eq!(sw.values.len(), 13);
    assert!((sw.values[12] - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-15);
    let p = s.at_point(0.5).unwrap();
    assert_eq!(p.analyzer.unwrap().angles, vec![0.5; 3]);

    let text = "kind = \"master\"\n[system]\nf_g = \"1/2\"\nf_e = \"3/2\"\nn_max = 2\n[cavity]\namplitude = 1\n[pump]\namplitude = 1\n[[initial]]\nstate = \"g-1/2,0,0\"\n[[target]]\nstate = \"g+1/2,0,0\"\n";
    let s = parse_experiment(text).unwrap();
    assert_eq!(s.config.scheme.f_e, HalfInt::from_twice(3));
    assert_eq!(parse_experiment(&s.to_toml()).unwrap(), s);
}

#[test]
fn initial_amplitudes_are_normalized() {
    let s = parse_experiment("preset = \"fig10\"\n[[initial]]\nstate = \"g-3,0,0\"\nre = 1\n[[initial]]\nstate = \"g+3,0,0\"\nim = 1\nre = 0\n").unwrap();
    let n: f64 = s.config.initial_state.iter().map(|(_, a)| a.norm_sqr()).sum();
    assert!((n - 1.0).abs() < 1e-15);
    assert_eq!(parse_experiment(&s.to_toml()).unwrap(), s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn echo_round_trips(
        g0 in 0.0f64..100.0, om in 0.0f64..100.0, dp in -5.0f64..5.0, dm in -5.0f64..5.0,
        kappa in 0.0f64..3.0, gamma in 0.0f64..3.0, seed in 0u64..u64::MAX / 2, n_traj in 1usize..10_000,
        re in -1.0f64..1.0, im in -1.0f64..1.0, angles in proptest::collection::vec(-7.0f64..7.0, 1..4),
        values in proptest::collection::vec(-2.0f64..2.0, 1..6), n_max in 3u32..8,
    ) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let angles: Vec<String> = angles.iter().map(|a| format!("{a:?}")).collect();
        let values: Vec<String> = values.iter().map(|a| format!("{a:?}")).collect();
        let text = format!(
            "kind = \"correlate-ghz\"\n[system]\nf_g = 3\nf_e = 3\nn_max = {n_max}\ndelta_plus = {dp:?}\ndelta_minus = {dm:?}\nkappa = {kappa:?}\ngamma = {gamma:?}\n\
             [cavity]\namplitude = {g0:?}\n[pump]\namplitude = {om:?}\ncenter = 22.5\n[[initial]]\nstate = \"g-3,0,0\"\nre = {re:?}\nim = {im:?}\n\
             [[initial]]\nstate = \"g+1,1,0\"\nre = 0.3\n[analyzer]\nangles = [{}]\n[run]\nseed = {seed}\nn_traj = {n_traj}\n\
             [sweep]\nparameter = \"delta\"\nvalues = [{}]\n",
            angles.join(", "), values.join(", "));
        let spec = parse_experiment(&text).unwrap();
        let again = parse_experiment(&spec.to_toml()).unwrap();
        prop_assert_eq!(spec, again);
    }
}
