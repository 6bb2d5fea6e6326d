mod support;

use iterlstm_core::cell::CellParams;
use iterlstm_core::dynamics::{
    apply_map, check_condition, iterate_map, jacobian_g, lyapunov_direct, lyapunov_spectrum, random_params,
    spectral_rescale, AutonomousMap, DrawSpec, LyapunovEstimate,
};
use iterlstm_core::math::{Rng, SPECTRAL_TOL};
use proptest::prelude::*;

fn raw_spec(units: usize) -> DrawSpec {
    DrawSpec {
        units,
        margin: None,
        ..DrawSpec::default()
    }
}

fn oracle_margin(p: &CellParams) -> f64 {
    let n = p.units();
    let s: Vec<f64> = (0..4).map(|g| support::sigma_max(n, p.w_rec[g].data())).collect();
    1.0 - (s[0] + 0.25 * s[1] + 0.25 * s[2] + 0.25 * s[3])
}

fn frozen_map_inputs(rng: &mut Rng, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        rng.uniform_vec(n, -1.0, 1.0).into_inner(),
        rng.uniform_vec(n, -1.0, 1.0).into_inner(),
        rng.uniform_vec(n, -1.0, 1.0).into_inner(),
    )
}

#[test]
fn singular_values_match_jacobi_eigen_oracle() {
    let mut rng = Rng::new(11);
    for _ in 0..20 {
        let p = CellParams::uniform(6, 6, -1.0, 1.0, &mut rng).unwrap();
        let report = check_condition(&p, SPECTRAL_TOL).unwrap();
        let got = [report.sigma_j, report.sigma_i, report.sigma_f, report.sigma_o];
        for g in 0..4 {
            let want = support::sigma_max(6, p.w_rec[g].data());
            assert!((got[g] - want).abs() < 1e-8, "gate {g}: {} vs {want}", got[g]);
        }
        assert!((report.margin - oracle_margin(&p)).abs() < 1e-8);
    }
}

#[test]
fn rescale_hits_the_requested_margin() {
    let mut rng = Rng::new(12);
    for k in 0..100 {
        let n = 2 + k % 7;
        let p = random_params(&raw_spec(n), &mut rng).unwrap();
        let target = rng.uniform(-5.0, 0.9);
        let q = spectral_rescale(&p, target).unwrap();
        assert!((check_condition(&q, SPECTRAL_TOL).unwrap().margin - target).abs() < 1e-6);
        assert!((oracle_margin(&q) - target).abs() < 1e-6);
        assert_eq!(q.w_in, p.w_in);
        assert_eq!(q.bias, p.bias);
        assert_eq!(q.gate, p.gate);
    }
}

#[test]
fn rescale_rejects_targets_at_or_above_one() {
    let p = random_params(&raw_spec(3), &mut Rng::new(1)).unwrap();
    assert!(spectral_rescale(&p, 1.0).is_err());
    assert!(spectral_rescale(&p, f64::NAN).is_err());
}

#[test]
fn jacobian_matches_central_differences_on_random_configurations() {
    let mut rng = Rng::new(13);
    let step = 1e-6;
    for k in 0..50 {
        let n = 1 + k % 9;
        let p = CellParams::uniform(n, n, -1.5, 1.5, &mut rng).unwrap();
        let (x, c0, h) = frozen_map_inputs(&mut rng, n);
        let map = AutonomousMap::new(&p, &x, &c0).unwrap();
        let jac = jacobian_g(&map, &h).unwrap();
        for col in 0..n {
            let (mut hp, mut hm) = (h.clone(), h.clone());
            hp[col] += step;
            hm[col] -= step;
            let fd = apply_map(&map, &hp).unwrap().sub(&apply_map(&map, &hm).unwrap()).scale(0.5 / step);
            assert!(fd.max_abs_diff(&jac.column(col)) < 1e-6, "configuration {k}");
        }
    }
}

#[test]
fn direct_and_qr_estimates_agree_on_contracting_maps() {
    let spec = DrawSpec {
        margin: Some(0.3),
        ..DrawSpec::default()
    };
    let mut rng = Rng::new(14);
    for _ in 0..20 {
        let p = random_params(&spec, &mut rng).unwrap();
        let (x, c0, h0) = frozen_map_inputs(&mut rng, spec.units);
        let map = AutonomousMap::new(&p, &x, &c0).unwrap();
        let direct = lyapunov_direct(&map, &h0, 1e-8, 400, &mut rng).unwrap().finite().unwrap();
        let top = lyapunov_spectrum(&map, &h0, 400).unwrap()[0].finite().unwrap();
        assert!((direct - top).abs() < 0.05, "direct {direct} vs QR {top}");
    }
}

#[test]
fn direct_estimate_does_not_depend_on_the_perturbation_direction() {
    let spec = DrawSpec::default();
    let mut rng = Rng::new(15);
    let p = random_params(&spec, &mut rng).unwrap();
    let (x, c0, h0) = frozen_map_inputs(&mut rng, spec.units);
    let map = AutonomousMap::new(&p, &x, &c0).unwrap();
    let estimates: Vec<f64> = (0..5)
        .map(|s| lyapunov_direct(&map, &h0, 1e-8, 400, &mut Rng::new(s)).unwrap().finite().unwrap())
        .collect();
    let lo = estimates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi - lo < 0.05, "{estimates:?}");
}

#[test]
fn spectrum_sums_to_mean_log_determinant() {
    let spec = DrawSpec {
        units: 5,
        margin: Some(-1.0),
        ..DrawSpec::default()
    };
    let mut rng = Rng::new(16);
    let tau = 150;
    for _ in 0..5 {
        let p = random_params(&spec, &mut rng).unwrap();
        let (x, c0, h0) = frozen_map_inputs(&mut rng, 5);
        let map = AutonomousMap::new(&p, &x, &c0).unwrap();
        let spectrum = lyapunov_spectrum(&map, &h0, tau).unwrap();
        let sum: f64 = spectrum.iter().map(|e| e.finite().unwrap()).sum();
        let mut h = h0.clone();
        let mut acc = 0.0;
        for _ in 0..tau {
            acc += support::log_abs_det(5, map.jacobian(&h).unwrap().data());
            h = map.apply(&h).unwrap().into_inner();
        }
        let want = acc / tau as f64;
        assert!((sum - want).abs() < 1e-8 * want.abs().max(1.0), "{sum} vs {want}");
        for w in spectrum.windows(2) {
            assert!(w[0].finite().unwrap() >= w[1].finite().unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn positive_margin_gives_convergence_and_negative_exponents(seed in any::<u64>(), margin in 0.05f64..0.9) {
        let spec = DrawSpec { margin: Some(margin), ..DrawSpec::default() };
        let mut rng = Rng::new(seed);
        let p = random_params(&spec, &mut rng).unwrap();
        let (x, c0, h0) = frozen_map_inputs(&mut rng, spec.units);
        let map = AutonomousMap::new(&p, &x, &c0).unwrap();
        prop_assert!(iterate_map(&map, &h0, 1000, 1e-9).unwrap().converged);
        prop_assert!(lyapunov_direct(&map, &h0, 1e-8, 200, &mut rng).unwrap().is_negative());
        let top = lyapunov_spectrum(&map, &h0, 200).unwrap()[0];
        prop_assert!(top.is_negative());
        // a contraction with Lipschitz bound 1 − margin
        if let LyapunovEstimate::Finite(v) = top {
            prop_assert!(v <= (1.0 - margin).ln() + 1e-6);
        }
    }

    #[test]
    fn rescaling_is_idempotent(seed in any::<u64>(), m in -3.0f64..0.95) {
        let p = random_params(&raw_spec(4), &mut Rng::new(seed)).unwrap();
        let once = spectral_rescale(&p, m).unwrap();
        let twice = spectral_rescale(&once, m).unwrap();
        for g in 0..4 {
            prop_assert!(once.w_rec[g].max_abs_diff(&twice.w_rec[g]) < 1e-8);
        }
    }
}
