use movsurf::diffops::surface_gradient;
use movsurf::fields::QSplit;
use movsurf::landau::{
    bulk_rhs, rhs_conforming_at, rhs_projected_at, run_flow, FlowConfig, InitialCondition, Integrator, LdGParams, Mode,
};
use movsurf::samples;
use movsurf::timederiv::QField;
use movsurf::{geometry_at, scenario, Event};
use nalgebra::{Matrix2, Matrix3, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(scenario: &str, mode: Mode, n: usize, dt: f64, steps: usize, params: LdGParams, initial: InitialCondition) -> FlowConfig {
    FlowConfig {
        scenario: scenario.into(),
        params,
        mode,
        grid: [n, n],
        dt,
        t_end: dt * steps as f64,
        t0: 0.0,
        output_every: 10,
        snapshot_every: None,
        initial,
        integrator: Integrator::Euler,
        check_every: 100,
    }
}

const NEMATIC: LdGParams = LdGParams { l: 1.0, a: -1.0, b: 0.0, c: 1.0 };

#[test]
fn conforming_decomposition_matches_projection() {
    let p = LdGParams { l: 0.8, a: -0.5, b: 0.7, c: 1.2 };
    for name in ["torus-static", "torus-breathing", "ellipsoid-wobble"] {
        let s = scenario(name).unwrap();
        let q = samples::conforming_q_field(&s, 3);
        for e in s.sample_events(&mut ChaCha8Rng::seed_from_u64(4), 5, 0.0, 1.0) {
            let g = geometry_at(&s, &e).unwrap();
            let a = rhs_conforming_at(&q, &p, &s, &e).unwrap().to_cart(&g);
            let b = rhs_projected_at(&q, &p, &s, &e).unwrap().to_cart(&g);
            assert!((a - b).amax() / a.amax().max(1.0) < 1e-5, "{name}");
        }
    }
}

#[test]
fn constant_beta_rhs_on_plane_and_sphere() {
    let p = LdGParams { l: 1.0, a: -0.3, b: 0.4, c: 0.9 };
    let beta = 0.5;
    let expected = -(2.0 * p.a + p.b * beta + 3.0 * p.c * beta * beta) * beta;
    let plane = scenario("flat-torus").unwrap();
    let q = QField::new(&plane, move |_| QSplit { q: Matrix2::zeros(), eta: Vector2::zeros(), beta });
    let e = Event::new(0.0, 1.0, 2.0);
    let r = rhs_conforming_at(&q, &p, &plane, &e).unwrap();
    assert!(r.q.amax() < 1e-10 && (r.beta - expected).abs() < 1e-8);
    let bulk = bulk_rhs(&QSplit { q: Matrix2::zeros(), eta: Vector2::zeros(), beta }.to_cart(&geometry_at(&plane, &e).unwrap()), &p);
    assert!((bulk[(2, 2)] - expected).abs() < 1e-12);

    let sphere = scenario("sphere-static").unwrap();
    let q = QField::new(&sphere, move |_| QSplit { q: Matrix2::zeros(), eta: Vector2::zeros(), beta });
    let e = Event::new(0.0, 1.0, 2.0);
    for r in [rhs_conforming_at(&q, &p, &sphere, &e).unwrap(), rhs_projected_at(&q, &p, &sphere, &e).unwrap()] {
        assert!(r.q.amax() < 1e-6);
        assert!((r.beta - (expected - 3.0 * p.l * beta * 2.0)).abs() < 1e-6);
    }
}

#[test]
fn elastic_density_of_normal_alignment_on_unit_sphere() {
    let s = scenario("sphere-static").unwrap();
    let beta = 0.8;
    let q = QField::new(&s, move |_| QSplit { q: Matrix2::zeros(), eta: Vector2::zeros(), beta }).to_field();
    let e = Event::new(0.0, 0.7, 1.9);
    let n2 = surface_gradient(&q, &s, &e).unwrap().norm2();
    assert!((n2 - 9.0 * beta * beta).abs() < 1e-8, "{n2}");
}

#[test]
fn nematic_flow_is_monotone() {
    for mode in [Mode::ConformingMaterial, Mode::FullQJaumann] {
        let cfg = config(
            "torus-static",
            mode,
            32,
            1e-4,
            400,
            NEMATIC,
            InitialCondition::RandomSmooth { amplitude: 0.1, modes: 2, seed: 5 },
        );
        let tr = run_flow(&cfg).unwrap();
        for w in tr.records.windows(2) {
            assert!(w[1].energy_total <= w[0].energy_total + 1e-10);
        }
        for r in &tr.records {
            assert!(r.max_trace_residual < 1e-8 && r.max_sym_residual < 1e-8);
        }
        if mode.conforming() {
            assert_eq!(tr.checks.len(), 4);
            assert!(tr.max_check_residual() < 1e-5, "{}", tr.max_check_residual());
        }
    }
}

/// λ̇_i = −2(aλ_i + b(λ_i² − S/3) + cSλ_i), S = Σλ², integrated by RK4 with a fine step.
fn ode_oracle(p: &LdGParams, mut lam: [f64; 3], t_end: f64) -> [f64; 3] {
    let f = |l: [f64; 3]| {
        let s: f64 = l.iter().map(|x| x * x).sum();
        l.map(|x| -2.0 * (p.a * x + p.b * (x * x - s / 3.0) + p.c * s * x))
    };
    let n = 200_000;
    let h = t_end / n as f64;
    for _ in 0..n {
        let k1 = f(lam);
        let k2 = f(std::array::from_fn(|i| lam[i] + 0.5 * h * k1[i]));
        let k3 = f(std::array::from_fn(|i| lam[i] + 0.5 * h * k2[i]));
        let k4 = f(std::array::from_fn(|i| lam[i] + h * k3[i]));
        lam = std::array::from_fn(|i| lam[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    lam
}

#[test]
fn constant_state_follows_ode() {
    let p = LdGParams { l: 1.0, a: -1.0, b: 0.6, c: 1.0 };
    let lam0 = [0.2, -0.05, -0.15];
    let mut cfg = config(
        "flat-torus",
        Mode::FullQMaterial,
        16,
        1e-3,
        1000,
        p,
        InitialCondition::Constant { q: [[lam0[0], 0.0, 0.0], [0.0, lam0[1], 0.0], [0.0, 0.0, lam0[2]]] },
    );
    cfg.integrator = Integrator::Rk4;
    let tr = run_flow(&cfg).unwrap();
    let lam = ode_oracle(&p, lam0, 1.0);
    let q = tr.final_state.values[7];
    for i in 0..3 {
        assert!((q[(i, i)] - lam[i]).abs() / lam[i].abs() < 1e-4, "{} vs {}", q[(i, i)], lam[i]);
    }
}

#[test]
fn convex_potential_decays() {
    let p = LdGParams { l: 1.0, a: 5.0, b: 0.0, c: 1.0 };
    let cfg = config(
        "torus-static",
        Mode::FullQMaterial,
        16,
        1e-3,
        800,
        p,
        InitialCondition::RandomSmooth { amplitude: 0.5, modes: 2, seed: 9 },
    );
    let tr = run_flow(&cfg).unwrap();
    let first = tr.records.first().unwrap().energy_total;
    let last = tr.records.last().unwrap().energy_total;
    assert!(last < 1e-6 * first, "{last} vs {first}");
}

#[test]
fn moving_surface_runs_keep_structure() {
    for mode in [Mode::ConformingMaterial, Mode::ConformingJaumann, Mode::FullQMaterial, Mode::FullQJaumann] {
        let cfg = config(
            "torus-breathing",
            mode,
            16,
            1e-3,
            50,
            NEMATIC,
            InitialCondition::RandomSmooth { amplitude: 0.2, modes: 1, seed: 2 },
        );
        let tr = run_flow(&cfg).unwrap();
        let last = tr.records.last().unwrap();
        assert!(last.max_sym_residual < 1e-8 && last.max_trace_residual < 1e-8, "{mode:?}");
        assert!(last.energy_total.is_finite());
        if mode.conforming() {
            let g = geometry_at(&scenario("torus-breathing").unwrap(), &tr.final_state.grid.event(tr.final_state.t, 5)).unwrap();
            let q: Matrix3<f64> = tr.final_state.values[5];
            assert!((g.proj() * q * g.nu).amax() < 1e-12);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let cfg = config("torus-static", Mode::ConformingJaumann, 16, 1e-3, 30, NEMATIC, InitialCondition::RandomSmooth {
        amplitude: 0.2,
        modes: 2,
        seed: 77,
    });
    let a = run_flow(&cfg).unwrap();
    let b = run_flow(&cfg).unwrap();
    assert_eq!(a.energy_csv(), b.energy_csv());
}
