use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use yamabe_core::ground_state::{shoot_ground_state, shoot_normalized};
use yamabe_core::quadrature::{gn_quotient, integral_report, radial_integral, Integrand};
use yamabe_core::radial_ode::Sampling;
use yamabe_core::stability::{
    admissible_lambda_max, classify_at_lambda, find_lambda, linear_trajectory,
};
use yamabe_core::{
    compute_lambda, make_dims, Class, Equation, Profile, Shooting, SolverSettings, Stability,
    Tolerances,
};

fn profile(m: u32, n: u32) -> Profile {
    shoot_ground_state(&make_dims(m, n).unwrap(), &Shooting::default()).unwrap()
}

#[test]
fn trichotomy_is_monotone_in_lambda() {
    for (m, n) in [(2, 2), (3, 3), (2, 5)] {
        let f = profile(m, n);
        let settings = Stability::default();
        let horizon = settings.horizon_for(&f.dims);
        let cap = admissible_lambda_max(&f) * 0.999;
        let mut seen_min = false;
        for i in 0..25 {
            let lambda = cap * i as f64 / 24.0;
            match classify_at_lambda(&f, lambda, horizon, &settings).unwrap() {
                Class::ZeroCrossing { .. } => {
                    assert!(
                        !seen_min,
                        "({m},{n}) zero crossing at {lambda} after a minimum"
                    )
                }
                Class::LocalMin { .. } => seen_min = true,
                Class::DecreasingPositive => {}
            }
        }
        assert!(seen_min);
    }
}

#[test]
fn event_times_converge_with_tolerance() {
    let f = profile(2, 2);
    let coarse = Stability::default();
    let fine = Stability {
        tolerances: coarse.tolerances.scaled(0.5),
        ..coarse
    };
    let horizon = coarse.horizon_for(&f.dims);
    for lambda in [0.5, 1.0, 2.5, 3.5] {
        let a = classify_at_lambda(&f, lambda, horizon, &coarse).unwrap();
        let b = classify_at_lambda(&f, lambda, horizon, &fine).unwrap();
        let (ta, tb) = match (a, b) {
            (Class::ZeroCrossing { t: x }, Class::ZeroCrossing { t: y }) => (x, y),
            (Class::LocalMin { t: x, .. }, Class::LocalMin { t: y, .. }) => (x, y),
            other => panic!("classes differ at {lambda}: {other:?}"),
        };
        assert!(
            (ta - tb).abs() < 10.0 * coarse.tolerances.rtol.max(1e-9),
            "{lambda}: {ta} vs {tb}"
        );
    }
}

#[test]
fn grid_refinement_converges() {
    let dims = make_dims::<f64>(2, 3).unwrap();
    let base = Shooting::default();
    let coarse = shoot_ground_state(&dims, &base).unwrap();
    let fine = shoot_ground_state(
        &dims,
        &Shooting {
            grid_nodes: 2 * base.grid_nodes,
            ..base
        },
    )
    .unwrap();
    for integrand in [
        Integrand::Power(2.0),
        Integrand::Power(dims.p),
        Integrand::GradSquared,
    ] {
        let a = radial_integral(&coarse, integrand).unwrap();
        let b = radial_integral(&fine, integrand).unwrap();
        assert!(((a - b) / b).abs() < 1e-8, "{integrand:?}: {a} vs {b}");
    }
    let la = find_lambda(&coarse, &Stability::default())
        .unwrap()
        .lambda_mn;
    let lb = find_lambda(&fine, &Stability::default()).unwrap().lambda_mn;
    assert!((la - lb).abs() < 1e-6);
}

#[test]
fn ground_state_minimizes_gn_quotient() {
    let dims = make_dims::<f64>(2, 2).unwrap();
    let w = shoot_normalized(&dims, &Shooting::default()).unwrap();
    let base = gn_quotient(&w, &dims).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..12 {
        let center: f64 = rng.gen_range(0.0..4.0);
        let width: f64 = rng.gen_range(0.3..1.5);
        let eps: f64 = rng.gen_range(0.01..0.1) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let bump = |t: f64| {
            let s = (t - center) / width;
            let g = (-s * s).exp();
            (eps * g, -2.0 * eps * s / width * g)
        };
        let values = (0..w.values.len())
            .map(|i| w.values[i] + bump(w.node(i)).0)
            .collect();
        let derivs = (0..w.derivs.len())
            .map(|i| w.derivs[i] + bump(w.node(i)).1)
            .collect();
        let perturbed =
            Profile::from_samples(dims, Equation::Unit, w.spacing, values, derivs).unwrap();
        let q = gn_quotient(&perturbed, &dims).unwrap();
        assert!(
            q >= base * (1.0 - 1e-10),
            "bump at {center} width {width} eps {eps}: {q} < {base}"
        );
    }
}

#[test]
fn single_precision_pipeline() {
    let settings = SolverSettings::<f32> {
        shooting: yamabe_core::ShootingSettings {
            tol_beta: 1e-5,
            tolerances: Tolerances {
                rtol: 1e-6,
                atol: 1e-6,
                ..Tolerances::default()
            },
            separation_tol: 1e-4,
            grid_nodes: 1024,
            ..Default::default()
        },
        stability: yamabe_core::StabilitySettings {
            tol: 1e-4,
            tolerances: Tolerances {
                rtol: 1e-6,
                atol: 1e-6,
                ..Tolerances::default()
            },
            ..Default::default()
        },
    };
    let (f, result) = compute_lambda::<f32>(2, 2, &settings).unwrap();
    assert!((f.beta - 2.2062).abs() < 1e-3, "beta {}", f.beta);
    assert!(
        (result.lambda_mn - 1.80406).abs() < 2e-3,
        "lambda {}",
        result.lambda_mn
    );
    assert!(integral_report(&f).unwrap().max_residual() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sturm_log_derivative_ordering(k1 in 0.34f64..3.0, gap in 0.05f64..1.5) {
        let f = profile(2, 2);
        let settings = Stability::default();
        let kappa = f.dims.kappa();
        let k2 = (k1 + gap).min(admissible_lambda_max(&f) + kappa - 0.01);
        prop_assume!(k2 > k1 + 0.01);
        let sampling = Sampling::Uniform { spacing: 1.0 / 32.0 };
        let horizon = settings.horizon_for(&f.dims);
        let a = linear_trajectory(&f, k1 - kappa, horizon, &settings, sampling).unwrap();
        let b = linear_trajectory(&f, k2 - kappa, horizon, &settings, sampling).unwrap();
        for i in 1..a.grid.len().min(b.grid.len()) {
            if a.values[i] > 0.0 && b.values[i] > 0.0 {
                prop_assert!(a.derivs[i] / a.values[i] < b.derivs[i] / b.values[i], "t = {}", a.grid[i]);
            }
        }
    }

    #[test]
    fn threshold_is_horizon_independent(factor in 20.0f64..80.0) {
        let f = profile(3, 2);
        let base = Stability::default();
        let reference = find_lambda(&f, &base).unwrap().lambda_mn;
        let settings = Stability { horizon: Some(factor / f.dims.decay_rate()), ..base };
        let lambda = find_lambda(&f, &settings).unwrap().lambda_mn;
        prop_assert!((lambda - reference).abs() < 1e-6);
    }
}
