use movsurf::scenario;
use movsurf::scenario::SCENARIOS;
use movsurf::suites::{run_suite, Suite, Tolerances};

#[test]
fn full_suite_on_breathing_torus() {
    let s = scenario("torus-breathing").unwrap();
    let rep = run_suite(&s, Suite::All, 20, 7, &Tolerances::default()).unwrap();
    for r in &rep.records {
        assert!(r.pass, "{r:?}");
    }
    assert!(rep.records.len() >= 40, "{}", rep.records.len());
}

#[test]
fn plane_geometry_residuals_vanish() {
    let s = scenario("plane-static").unwrap();
    let rep = run_suite(&s, Suite::Geometry, 20, 1, &Tolerances::default()).unwrap();
    assert!(rep.records.iter().all(|r| r.residual == 0.0), "{rep:?}");
}

#[test]
fn every_scenario_passes_every_suite() {
    for name in SCENARIOS {
        let s = scenario(name).unwrap();
        let rep = run_suite(&s, Suite::All, 4, 3, &Tolerances::default()).unwrap();
        for r in &rep.records {
            assert!(r.pass, "{name}: {r:?}");
        }
    }
}

#[test]
fn suite_names_parse() {
    assert_eq!(Suite::parse("qtensor").unwrap(), Suite::Qtensor);
    assert!(Suite::parse("everything").is_err());
}

mod studies {
    use movsurf::scenario;
    use movsurf::suites::{fd_order_study, laplace_order_study, thinfilm_study};
    use movsurf::thinfilm::Extension;

    #[test]
    fn fd_jets_are_fourth_order() {
        for name in ["torus-static", "sphere-expanding", "ellipsoid-wobble", "torus-breathing"] {
            let r = fd_order_study(&scenario(name).unwrap(), 3, 1).unwrap();
            for q in r.ratios() {
                assert!((14.0..=18.0).contains(&q), "{name}: {r:?}");
            }
            assert!(r.pass);
        }
    }

    #[test]
    fn grid_laplacian_is_second_order() {
        let r = laplace_order_study(&scenario("torus-static").unwrap(), 3).unwrap();
        assert!(r.pass, "{r:?}");
        for q in r.ratios() {
            assert!((3.5..=4.5).contains(&q), "{r:?}");
        }
    }

    #[test]
    fn thinfilm_orders_on_expanding_sphere() {
        for ext in [Extension::Constant, Extension::Linear] {
            for r in thinfilm_study(&scenario("sphere-expanding").unwrap(), 4, 2, ext).unwrap() {
                assert!(r.pass, "{r:?}");
            }
        }
    }
}
