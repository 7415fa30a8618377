//! Property-based checks of the structural invariants.

use proptest::prelude::*;
use crate::analytics::{equilibrium_log_pdf, reduce, AffineSde};
use crate::atlas::threshold_scan;
use crate::moments::{is_stable, moment_map, LinearModelId, Moment};
use crate::noise::{NoiseSource, PhiloxNoise};
use crate::porous::{porous_problem, PorousParams};
use crate::problem::{Benchmark, FnSde, SdeProblem};
use crate::scheme::{aux_drift, simulate_path, step, NoiseDraw, SchemeId};

fn scheme() -> impl Strategy<Value = SchemeId> {
    prop::sample::select(SchemeId::ALL.to_vec())
}

fn draws(n: usize) -> impl Strategy<Value = Vec<NoiseDraw>> {
    prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5).prop_map(|(a, b)| NoiseDraw::new(a, b)), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pathwise_negation(s in scheme(), eta in -1.4f64..1.4, x0 in -3.0f64..3.0, h in 0.001f64..0.2, noise in draws(40)) {
        let a = simulate_path(s, &Benchmark::new(eta), x0, h, 40, noise.clone());
        let b = simulate_path(s, &Benchmark::new(-eta), -x0, h, 40, noise.iter().map(|d| d.negated()));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                for (u, v) in a.states.iter().zip(&b.states) {
                    prop_assert!((u + v).abs() <= 1e-13 * u.abs().max(1.0), "{u} vs {v}");
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "one side failed: {a:?} / {b:?}"),
        }
    }

    #[test]
    fn additive_noise_milstein_is_euler(alpha in -2.0f64..2.0, beta in -2.0f64..2.0, gamma in -2.0f64..2.0,
                                        x in -5.0f64..5.0, h in 1e-4f64..1.0, dw in -2.0f64..2.0, dwt in -2.0f64..2.0) {
        let p = FnSde::affine(alpha, beta, gamma, 0.0);
        let d = NoiseDraw::new(dw, dwt);
        prop_assert_eq!(step(SchemeId::Em, &p, x, h, d).unwrap(), step(SchemeId::Mil, &p, x, h, d).unwrap());
    }

    #[test]
    fn zero_noise_is_deterministic_runge_kutta(eta in -1.4f64..1.4, x in -0.9f64..5.0, h in 1e-4f64..0.5, porous in any::<bool>()) {
        let bench = Benchmark::new(eta);
        let por = porous_problem(PorousParams::large_eta()).unwrap();
        let p: &dyn SdeProblem = if porous { &por } else { &bench };
        let f = |y: f64| aux_drift(p, y).unwrap();
        let heun = {
            let k1 = f(x);
            let k2 = f(x + h * k1);
            x + 0.5 * h * (k1 + k2)
        };
        let rk3 = {
            let k1 = f(x);
            let k2 = f(x + h * k1 / 3.0);
            let k3 = f(x + 2.0 * h * k2 / 3.0);
            x + 0.25 * h * (k1 + 3.0 * k3)
        };
        let tol = 1e-12 * x.abs().max(1.0);
        prop_assert!((step(SchemeId::Sh, p, x, h, NoiseDraw::ZERO).unwrap() - heun).abs() <= tol);
        prop_assert!((step(SchemeId::Rk3, p, x, h, NoiseDraw::ZERO).unwrap() - rk3).abs() <= tol);
    }

    #[test]
    fn reduction_round_trip(alpha in -3.0f64..3.0, beta in prop_oneof![-3.0f64..-0.05, 0.05f64..3.0],
                            gamma in -3.0f64..3.0, delta in -3.0f64..3.0, xi in -4.0f64..4.0) {
        let sde = AffineSde::new(alpha, beta, gamma, delta);
        let reduced = reduce(&sde).unwrap();
        let t = reduced.transform().unwrap();
        let (mu, sigma) = t.pull_back(
            xi,
            |x| reduced.coefficients(x).unwrap().0,
            |x| reduced.coefficients(x).unwrap().1,
        );
        let scale = 1.0 + alpha.abs() + (beta * xi).abs();
        prop_assert!((mu - sde.drift(xi)).abs() <= 1e-12 * scale);
        // diffusion is recovered up to the sign of the noise
        let gscale = 1.0 + gamma.abs() + (delta * xi).abs();
        prop_assert!((sigma.abs() - sde.diffusion(xi).abs()).abs() <= 1e-12 * gscale);
    }

    #[test]
    fn density_mirror(eta in -1.6f64..1.6, x in -5.0f64..50.0) {
        prop_assert_eq!(equilibrium_log_pdf(-eta, -x), equilibrium_log_pdf(eta, x));
    }

    #[test]
    fn cross_model_identity(s in scheme(), eta in -1.6f64..1.6, h in 1e-4f64..4.0) {
        let b = moment_map(s, LinearModelId::Benchmark, eta, h);
        let g = moment_map(s, LinearModelId::Gbm, eta, h);
        prop_assert!((b.m11 - g.m11).abs() <= 1e-12 * b.m11.abs().max(1.0));
        prop_assert!((b.m22 - g.m22).abs() <= 1e-12 * b.m22.abs().max(1.0));
        prop_assert_eq!((g.b1, g.m21, g.b2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn containment(s in scheme(), eta in 0.0f64..1.4, h in 1e-4f64..3.0) {
        if is_stable(s, LinearModelId::Benchmark, Moment::Second, eta, h) {
            prop_assert!(is_stable(s, LinearModelId::Benchmark, Moment::First, eta, h));
        }
    }

    #[test]
    fn em_and_milstein_share_the_first_moment(eta in -2.0f64..2.0, h in 0.0f64..5.0) {
        let em = moment_map(SchemeId::Em, LinearModelId::Benchmark, eta, h);
        let mil = moment_map(SchemeId::Mil, LinearModelId::Benchmark, eta, h);
        prop_assert_eq!((em.m11, em.b1), (mil.m11, mil.b1));
    }

    #[test]
    fn noise_is_a_pure_function(seed in any::<u64>(), traj in any::<u64>(), step_ in any::<u64>()) {
        let a = PhiloxNoise::new(seed).standard_pair(traj, step_);
        let b = PhiloxNoise::new(seed).standard_pair(traj, step_);
        prop_assert_eq!(a, b);
        prop_assert!(a.0.is_finite() && a.1.is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn thresholds_are_model_invariant(s in scheme(), second in any::<bool>(), eta in -1.6f64..1.6) {
        let m = if second { Moment::Second } else { Moment::First };
        let b = threshold_scan(s, LinearModelId::Benchmark, m, eta);
        let g = threshold_scan(s, LinearModelId::Gbm, m, eta);
        prop_assert!((b.h_max - g.h_max).abs() <= 1e-9);
        prop_assert_eq!(b.islands.len(), g.islands.len());
    }
}
