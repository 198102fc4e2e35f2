use proptest::prelude::*;

use spf_core::fit::normalize_spf;
use spf_core::model::{BandSchedule, PacingTarget, ProgressCurve};
use spf_core::warp::{
    blend_positions, build_schedule, compute_tau, latent_centers, map_to_latent, refine_positions,
    timestep_decay, ScheduleConfig,
};

fn curve_from_steps(steps: &[f64]) -> ProgressCurve {
    let mut acc = vec![0.0];
    for s in steps {
        acc.push(acc[acc.len() - 1] + s);
    }
    normalize_spf(&acc).unwrap()
}

fn target() -> impl Strategy<Value = PacingTarget> {
    prop_oneof![
        Just(PacingTarget::Linear),
        (0.1f64..6.0).prop_map(|r| PacingTarget::exp_rise(r).unwrap()),
        (0.1f64..6.0).prop_map(|r| PacingTarget::exp_fall(r).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn warp_is_monotone_and_pinned(steps in prop::collection::vec(0.0f64..1.0, 1..80), g in target()) {
        prop_assume!(steps.iter().sum::<f64>() > 1e-6);
        let curve = curve_from_steps(&steps);
        let tau = compute_tau(&curve, &g).unwrap();
        let last = (tau.len() - 1) as f64;
        prop_assert_eq!(tau[0], 0.0);
        prop_assert_eq!(tau[tau.len() - 1], last);
        prop_assert!(tau.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn bands_sandwiched_and_ordered(
        steps in prop::collection::vec(0.0f64..1.0, 1..60),
        bands in 1usize..24,
        lo in 0.0f64..=1.0,
        hi_frac in 0.0f64..=1.0,
        kappa in 0.0f64..8.0,
        t_norm in 0.0f64..=1.0,
    ) {
        prop_assume!(steps.iter().sum::<f64>() > 1e-6);
        let curve = curve_from_steps(&steps);
        let tau = compute_tau(&curve, &PacingTarget::Linear).unwrap();
        let schedule = BandSchedule::new(bands, lo, lo * hi_frac, kappa).unwrap();
        let positions = blend_positions(&tau, &schedule, t_norm).unwrap();
        for p in &positions {
            prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
            for (k, (&v, &target)) in p.iter().zip(&tau).enumerate() {
                let (a, b) = ((k as f64).min(target), (k as f64).max(target));
                prop_assert!(v >= a - 1e-9 && v <= b + 1e-9);
            }
        }
        for pair in positions.windows(2) {
            for k in 0..tau.len() {
                prop_assert!((pair[0][k] - tau[k]).abs() <= (pair[1][k] - tau[k]).abs() + 1e-9);
            }
        }
    }

    #[test]
    fn no_warp_at_clean_timestep(steps in prop::collection::vec(0.0f64..1.0, 1..60)) {
        prop_assume!(steps.iter().sum::<f64>() > 1e-6);
        let curve = curve_from_steps(&steps);
        let tau = compute_tau(&curve, &PacingTarget::Linear).unwrap();
        let schedule = BandSchedule::new(8, 0.77, 0.2, 4.0).unwrap();
        for p in blend_positions(&tau, &schedule, 0.0).unwrap() {
            for (k, v) in p.iter().enumerate() {
                prop_assert_eq!(*v, k as f64);
            }
        }
    }

    #[test]
    fn decay_is_increasing(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(timestep_decay(lo).unwrap() <= timestep_decay(hi).unwrap());
    }

    #[test]
    fn latent_identity_hits_centers(l in 2usize..40, c in 1usize..9) {
        let t = (l - 1) * c + 1;
        let ramp: Vec<f64> = (0..t).map(|k| k as f64).collect();
        let centers = latent_centers(t, c).unwrap();
        let mapped = map_to_latent(&ramp, c).unwrap();
        prop_assert_eq!(mapped.len(), l);
        for (m, x) in mapped.iter().zip(&centers) {
            prop_assert!((m - x.clamp(0.0, (t - 1) as f64)).abs() <= 1e-12);
        }
    }

    #[test]
    fn latent_map_commutes_with_scaling(values in prop::collection::vec(0.0f64..100.0, 2..6), c in 1usize..6, scale in 0.1f64..10.0) {
        let t = (values.len() - 1) * c + 1;
        let positions: Vec<f64> = (0..t).map(|k| values[k / c] + k as f64 * 0.5).collect();
        let scaled: Vec<f64> = positions.iter().map(|v| v * scale).collect();
        let a = map_to_latent(&positions, c).unwrap();
        let b = map_to_latent(&scaled, c).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x * scale - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn refinement_fixed_point_at_linear(
        bands in 1usize..10,
        warp in prop::collection::vec(0.0f64..1.0, 1..40),
    ) {
        let mut tau = vec![0.0];
        for w in &warp {
            tau.push(tau[tau.len() - 1] + w);
        }
        let last = (tau.len() - 1) as f64;
        let max = tau[tau.len() - 1].max(1e-12);
        let tau: Vec<f64> = tau.iter().map(|v| (v / max * last).min(last)).collect();
        let schedule = BandSchedule::new(bands, 0.77, 0.2, 4.0).unwrap();
        let current = vec![tau; bands];
        let measured = ProgressCurve::linear(current[0].len()).unwrap();
        prop_assert_eq!(refine_positions(&current, &measured, &schedule).unwrap(), current);
    }
}

#[test]
fn exp_rise_target_on_linear_curve_matches_closed_form() {
    let t = 81;
    let last = (t - 1) as f64;
    let tau = compute_tau(&ProgressCurve::linear(t).unwrap(), &PacingTarget::exp_rise(3.0).unwrap())
        .unwrap();
    for (k, v) in tau.iter().enumerate() {
        let u = k as f64 / last;
        let expected = last * ((3.0 * u).exp() - 1.0) / (3.0f64.exp() - 1.0);
        assert!((v - expected).abs() <= 1e-9, "k={k}: {v} vs {expected}");
    }
}

#[test]
fn schedule_shapes() {
    let cfg = ScheduleConfig {
        band_count: 22,
        alpha_low: 0.77,
        alpha_high: 0.2,
        kappa: 4.0,
        timesteps: vec![1.0, 0.75, 0.5, 0.25, 0.0],
        compression: Some(4),
    };
    let curve = curve_from_steps(&(0..80).map(|k| 1.0 + (k % 7) as f64).collect::<Vec<_>>());
    let s = build_schedule(&curve, &PacingTarget::Linear, &cfg).unwrap();
    assert_eq!(s.frame_count(), 81);
    assert_eq!(s.steps().len(), 5);
    assert!(s.steps().iter().all(|st| st.positions.len() == 22));
    let latent = s.latent().unwrap();
    assert_eq!(latent.centers().len(), 21);
    assert!(latent.steps().iter().all(|st| st.positions.iter().all(|p| p.len() == 21)));
    let bad = ScheduleConfig {
        compression: Some(4),
        ..cfg
    };
    let short = curve_from_steps(&[1.0; 79]);
    assert!(build_schedule(&short, &PacingTarget::Linear, &bad).is_err());
}
