use movsurf::fields::{pi_cq, pi_q, reconstruct_split, split_cart, Cart, QSplit, Split};
use movsurf::scenario::SCENARIOS;
use movsurf::timederiv::{convected_dt, ConvectedPath, DerivKind};
use movsurf::{geometry_at, samples, scenario, GeometrySample};
use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sample(which: usize, seed: u64) -> (movsurf::MovingSurface, movsurf::Event, GeometrySample) {
    let s = scenario(SCENARIOS[which % SCENARIOS.len()]).unwrap();
    let e = s.sample_events(&mut ChaCha8Rng::seed_from_u64(seed), 1, 0.0, 1.0)[0];
    let g = geometry_at(&s, &e).unwrap();
    (s, e, g)
}

fn matrix() -> impl Strategy<Value = Matrix3<f64>> {
    prop::array::uniform9(-2.0..2.0f64).prop_map(|a| Matrix3::from_fn(|i, j| a[3 * i + j]))
}

fn inner(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    a.component_mul(b).sum()
}

proptest! {
    #[test]
    fn projections_are_idempotent_and_self_adjoint(which in 0usize..16, seed in 0u64..1000, m in matrix(), n in matrix()) {
        let (_, _, g) = sample(which, seed);
        let sym = n + n.transpose();
        let p = g.proj();
        let (mt, nt) = (p * m * p, p * n * p);
        let once = pi_q(&mt, &g);
        prop_assert!((pi_q(&once, &g) - once).amax() < 1e-12);
        prop_assert!((inner(&once, &nt) - inner(&mt, &pi_q(&nt, &g))).abs() < 1e-11);
        let once = p * m * p;
        prop_assert!((p * once * p - once).amax() < 1e-12);
        prop_assert!((inner(&once, &n) - inner(&m, &(p * n * p))).abs() < 1e-11);
        let once = pi_cq(&sym, &g);
        prop_assert!((pi_cq(&once, &g) - once).amax() < 1e-12);
        let sym2 = m + m.transpose();
        prop_assert!((inner(&pi_cq(&sym, &g), &sym2) - inner(&sym, &pi_cq(&sym2, &g))).abs() < 1e-11);
    }

    #[test]
    fn split_is_orthogonal(which in 0usize..16, seed in 0u64..1000, m in matrix()) {
        let (_, _, g) = sample(which, seed);
        let c = Cart::Tensor(m);
        let split = split_cart(&c, &g);
        let Split::Tensor { r, eta_l, eta_r, phi } = split.clone() else { unreachable!() };
        let parts = (g.g * r * g.g * r.transpose()).trace()
            + eta_l.dot(&(g.g * eta_l))
            + eta_r.dot(&(g.g * eta_r))
            + phi * phi;
        prop_assert!((parts - m.norm_squared()).abs() < 1e-10 * m.norm_squared().max(1.0));
        prop_assert!((reconstruct_split(&split, &g).tensor() - m).amax() < 1e-12);
    }

    #[test]
    fn q_projection_of_symmetric_square(which in 0usize..16, seed in 0u64..1000, pair_seed in any::<u64>()) {
        let (_, _, g) = sample(which, seed);
        let (s, q) = samples::random_pair(&mut ChaCha8Rng::seed_from_u64(pair_seed), &g);
        let lhs = pi_q(&(s * s * q), &g);
        let rhs = 0.5 * s.norm_squared() * q;
        prop_assert!((lhs - rhs).amax() < 1e-10);
    }

    #[test]
    fn q_split_round_trip(which in 0usize..16, seed in 0u64..1000, m in matrix()) {
        let (_, _, g) = sample(which, seed);
        let q = m + m.transpose() - (2.0 * m.trace() / 3.0) * Matrix3::identity();
        let split = QSplit::from_cart(&q, &g).unwrap();
        prop_assert!((split.to_cart(&g) - q).amax() < 1e-12);
        prop_assert!(QSplit::from_cart(&(q + Matrix3::identity()), &g).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jaumann_is_average_of_convected(which in 0usize..16, seed in 0u64..1000, field_seed in 0u64..100) {
        let (s, e, _) = sample(which, seed);
        let f = if field_seed % 2 == 0 { samples::tensor_field(&s, field_seed) } else { samples::vector_field(&s, field_seed) };
        let j = convected_dt(DerivKind::Jaumann, &f, &s, &e, ConvectedPath::ViaMaterial).unwrap().cart();
        let a = convected_dt(DerivKind::Jaumann, &f, &s, &e, ConvectedPath::Average).unwrap().cart();
        prop_assert!((j.clone() - a).amax() / j.amax().max(1.0) < 1e-10);
    }
}
