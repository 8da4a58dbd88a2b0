//! Randomized invariants of the simulator.

mod common;

use nalgebra::Matrix2;
use proptest::prelude::*;

use ccqsim::analysis::{concurrence, Bins, OutcomeLabel, VoltageHistogram};
use ccqsim::basis::Mat4;
use ccqsim::compensation::CompensationMode;
use ccqsim::drive::Envelope;
use ccqsim::ensemble::{worker_ranges, SimulationConfig};
use ccqsim::slh::HilbertLayout;
use ccqsim::sme::Representation;
use ccqsim::{SystemParams, C64};

use common::*;

fn arb_params() -> impl Strategy<Value = SystemParams> {
    (
        (0.5f64..20.0, 0.5f64..20.0, 0.1f64..3.0, 0.1f64..3.0),
        (0.0f64..0.1, -1.0f64..1.0, 0.3f64..1.0, 0.1f64..1.0, 0.0f64..0.2),
    )
        .prop_map(|((k1, k2, c1, c2), (leak, d, eta_l, eta_m, deph))| {
            let mut p = SystemParams::symmetric(mhz(k1), mhz(c1));
            p.kappa2 = mhz(k2);
            p.chi2 = mhz(c2);
            p.gamma1 = leak * p.kappa1;
            p.gamma2 = leak * p.kappa2;
            p.delta1 = mhz(d);
            p.delta2 = mhz(-0.5 * d);
            p.eta_l = eta_l;
            p.eta_m = eta_m;
            p.gamma_d1 = mhz(deph);
            p.gamma_d2 = mhz(0.5 * deph);
            p
        })
}

fn arb_representation() -> impl Strategy<Value = Representation> {
    prop_oneof![Just(Representation::Polaron), Just(Representation::LabReduced), Just(Representation::LabCompensated),]
}

fn arb_unitary() -> impl Strategy<Value = Matrix2<C64>> {
    (-3.2f64..3.2, -3.2f64..3.2, -3.2f64..3.2, -3.2f64..3.2).prop_map(|(a, b, c, d)| unitary2(a, b, c, d))
}

/// Mixed single-qubit state with Bloch vector inside radius 0.9.
fn arb_qubit() -> impl Strategy<Value = Matrix2<C64>> {
    (0.0f64..0.9, 0.0f64..std::f64::consts::PI, -3.2f64..3.2).prop_map(|(r, th, ph)| {
        let (x, y, z) = (r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos());
        Matrix2::new(
            C64::new(0.5 * (1.0 + z), 0.0),
            C64::new(0.5 * x, -0.5 * y),
            C64::new(0.5 * x, 0.5 * y),
            C64::new(0.5 * (1.0 - z), 0.0),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_step_keeps_a_valid_state(
        p in arb_params(),
        rep in arb_representation(),
        amp in 0.2f64..4.0,
        seed in 0u64..1000,
    ) {
        let pulse = Envelope::flat_top_width(mhz(amp), 0.1, 0.4);
        let plan = plan_for(&p, pulse, CompensationMode::Adiabatic, rep, 0.02, 0.2, 1);
        prop_assert_eq!(check_step_invariants(&plan, seed), Ok(()));
    }

    #[test]
    fn amplitudes_scale_with_drives(p in arb_params(), amp in 0.1f64..5.0, scale in -5.0f64..5.0) {
        prop_assume!(scale.abs() > 1e-3);
        prop_assert!(linearity_defect(&p, mhz(amp), scale) < 1e-12);
    }

    #[test]
    fn second_cavity_does_not_act_back(
        p in arb_params(),
        amp in 0.1f64..5.0,
        k2 in 0.5f64..30.0,
        c2 in -3.0f64..3.0,
        d2 in -2.0f64..2.0,
        scale in -4.0f64..4.0,
    ) {
        prop_assert!(backaction(&p, mhz(amp), mhz(k2), mhz(c2), mhz(d2), scale) < 1e-12);
    }

    #[test]
    fn series_product_is_associative(p in arb_params(), na in 2usize..4, nb in 2usize..4) {
        prop_assert!(series_associativity_defect(&p, &HilbertLayout::new(na, nb)) < 1e-12);
    }

    #[test]
    fn results_ignore_worker_count(n in 1usize..16, workers in 2usize..6) {
        let plan = plan_for(
            &ideal_setting(),
            Envelope::flat_top_width(mhz(1.0), 0.1, 0.3),
            CompensationMode::Ideal,
            Representation::Polaron,
            0.02,
            0.1,
            7,
        );
        prop_assert_eq!(worker_count_invariant(&plan, n, &[workers]), Ok(()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn concurrence_ignores_local_unitaries(
        values in prop::collection::vec(-1.0f64..1.0, 32),
        u1 in arb_unitary(),
        u2 in arb_unitary(),
    ) {
        let rho = state_from(&values);
        prop_assert!(concurrence_shift(&rho, &u1, &u2) < 1e-10);
    }

    #[test]
    fn concurrence_is_bounded(values in prop::collection::vec(-1.0f64..1.0, 32)) {
        let c = concurrence(&state_from(&values)).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
    }

    #[test]
    fn separable_mixtures_have_no_concurrence(
        parts in prop::collection::vec((arb_qubit(), arb_qubit(), 0.05f64..1.0), 1..6),
    ) {
        let total: f64 = parts.iter().map(|x| x.2).sum();
        let mut rho = Mat4::zeros();
        for (a, b, w) in &parts {
            rho += local(a, b) * C64::new(w / total, 0.0);
        }
        prop_assert!(concurrence(&rho).unwrap() <= 1e-10);
    }

    #[test]
    fn worker_ranges_tile_the_ensemble(n in 0usize..500, workers in 1usize..64) {
        let ranges = worker_ranges(n, workers);
        let mut next = 0;
        for &(a, b) in &ranges {
            prop_assert_eq!(a, next);
            next = b;
        }
        prop_assert_eq!(next, n);
        let lens: Vec<usize> = ranges.iter().map(|(a, b)| b - a).collect();
        prop_assert!(lens.iter().max().unwrap() - lens.iter().min().unwrap() <= 1);
        prop_assert!(ranges.len() <= workers.max(1));
    }

    #[test]
    fn histogram_marginal_equals_outcome_counts(
        samples in prop::collection::vec((-3.0f64..3.0, 0usize..5), 1..300),
        bins in 1usize..40,
    ) {
        let samples: Vec<(f64, OutcomeLabel)> =
            samples.into_iter().map(|(v, k)| (v, OutcomeLabel::ALL[k])).collect();
        let h = VoltageHistogram::build(1.0, Bins::new(-2.0, 2.0, bins).unwrap(), &samples).unwrap();
        let mut counts = [0u64; 5];
        for (_, l) in &samples {
            counts[l.index()] += 1;
        }
        prop_assert_eq!(h.marginal(), counts);
    }

    #[test]
    fn config_survives_a_round_trip(
        chi in (0.1f64..5.0, 0.1f64..5.0),
        kappa in (0.5f64..30.0, 0.5f64..30.0),
        eta in (0.1f64..1.0, 0.1f64..1.0),
        amp in 0.1f64..20.0,
        width in 0.1f64..5.0,
        seed in any::<u64>(),
    ) {
        let text = format!(
            "[params]\nchi1_mhz = {}\nchi2_mhz = {}\nkappa1_mhz = {}\nkappa2_mhz = {}\neta_l = {}\neta_m = {}\n\n\
             [drive.a_d]\namplitude_mhz = {amp}\nramp_us = 0.05\nwidth_us = {width}\n\n[simulation]\nseed = {seed}\n",
            chi.0, chi.1, kappa.0, kappa.1, eta.0, eta.1,
        );
        let cfg = SimulationConfig::from_toml_str(&text).unwrap();
        let again = SimulationConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(cfg.hash().unwrap(), again.hash().unwrap());
        prop_assert_eq!(cfg, again);
    }
}

#[test]
fn weak_error_is_first_order_in_dt() {
    let rho = ccqsim::basis::plus_plus();
    for (p, amp) in [(histogram_setting(), 13.0), (oracle_setting(), 1.0), (ideal_setting(), 1.0)] {
        let dt0 = 0.02 / p.kappa_max();
        let errs: Vec<f64> = (0..3).map(|k| local_weak_error(&p, mhz(amp), dt0 / 2f64.powi(k), &rho)).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2() - 1.0;
            assert!((0.7..=1.3).contains(&order), "local errors {errs:?}");
        }
    }
}

#[test]
fn frames_agree_when_the_cavities_are_empty() {
    let p = oracle_setting();
    let pulse = Envelope::flat_top_width(mhz(1.0), 0.2, 0.6);
    let tail = ringdown(&p);
    let lab = plan_for(&p, pulse.clone(), CompensationMode::Adiabatic, Representation::LabReduced, 0.02, tail, 1);
    let pol = plan_for(&p, pulse, CompensationMode::Adiabatic, Representation::Polaron, 0.02, tail, 1);
    let a = ccqsim::sme::simulate_trajectory(&lab, 3).unwrap();
    let b = ccqsim::sme::simulate_trajectory(&pol, 3).unwrap();
    for (n, (x, y)) in a.snapshots.iter().zip(&b.snapshots).enumerate() {
        if lab.track.at(n).state.max_amplitude() < 1e-6 {
            assert!(ccqsim::basis::max_abs(&(x.rho - y.rho)) < 1e-6, "t = {}", x.t);
        }
    }
}
