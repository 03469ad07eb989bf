//! Property tests for the library-wide invariants.

use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::SQRT_2;

use trisub::detect::{joint_distribution, PnrPovm, SourceInfo};
use trisub::evolve::{evolve_multinomial, evolve_oracle, prepare_input, SqueezeSource};
use trisub::fock::{OccupationTriple, ThreeModeState};
use trisub::trimer::{CouplerConfig, TrimerUnitary};

fn arbitrary_state() -> impl Strategy<Value = ThreeModeState> {
    // up to six amplitudes on random triples within a small cutoff
    let triple = (0u32..4, 0u32..4, 0u32..4).prop_map(|(a, b, c)| OccupationTriple::new(a, b, c));
    let amp = (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im));
    proptest::collection::vec((triple, amp), 1..6).prop_filter_map(
        "needs nonzero norm",
        |amps| {
            let state = ThreeModeState::from_amplitudes(12, amps);
            if state.norm_sqr() > 1e-12 {
                Some(state)
            } else {
                None
            }
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent(state in arbitrary_state()) {
        let once = state.normalize().unwrap();
        let twice = once.normalize().unwrap();
        for (triple, amp) in once.triples() {
            prop_assert!((twice.amplitude(triple) - amp).norm() < 1e-12);
        }
        prop_assert!((once.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_evolution_is_unitary_on_any_state(state in arbitrary_state(), theta in 0.05f64..2.0) {
        let state = state.normalize().unwrap();
        let config = CouplerConfig::new(1.0, theta / SQRT_2).unwrap();
        let out = evolve_oracle(&state, &config).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
        // block weights are individually conserved
        let before = state.block_weights();
        let after = out.block_weights();
        for (total, w) in &before {
            let drift = (after.get(total).copied().unwrap_or(0.0) - w).abs();
            prop_assert!(drift < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolved_squeezed_state_is_exchange_symmetric(
        r_abs in 0.05f64..0.7,
        theta in 0.05f64..2.0,
    ) {
        let source = SqueezeSource::new(Complex64::new(r_abs, 0.0), 6).unwrap();
        let out = evolve_multinomial(&prepare_input(&source), &TrimerUnitary::from_theta(theta))
            .unwrap();
        for (triple, amp) in out.triples() {
            let mirrored =
                out.amplitude(OccupationTriple::new(triple.n_c, triple.n_b, triple.n_a));
            prop_assert!((amp - mirrored).norm() < 1e-10);
        }
    }

    #[test]
    fn squeeze_phase_never_reaches_observables(
        r_abs in 0.1f64..0.7,
        phase in 0.0f64..std::f64::consts::TAU,
        n_sub in 0u32..3,
    ) {
        let theta = 0.4551;
        let unitary = TrimerUnitary::from_theta(theta);
        let povm = PnrPovm::new(n_sub, 1.0).unwrap();

        let mut dists = Vec::new();
        for r in [
            Complex64::new(r_abs, 0.0),
            Complex64::from_polar(r_abs, phase),
        ] {
            let source = SqueezeSource::new(r, 6).unwrap();
            let out = evolve_multinomial(&prepare_input(&source), &unitary).unwrap();
            let dist = joint_distribution(&out, &povm, 1.0, SourceInfo { r, theta });
            match dist {
                Ok(d) => dists.push(d),
                Err(_) => return Ok(()), // herald impossible for both or neither
            }
        }
        for m in 0..dists[0].dim() {
            for n in 0..dists[0].dim() {
                prop_assert!((dists[0].prob(m, n) - dists[1].prob(m, n)).abs() < 1e-12);
            }
        }
        prop_assert!(
            (dists[0].success_probability() - dists[1].success_probability()).abs() < 1e-12
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn povm_weights_are_complete(j in 0u32..40, eta in 0.05f64..1.0) {
        let total: f64 = (0..=j)
            .map(|n| PnrPovm::new(n, eta).unwrap().weight(j))
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
