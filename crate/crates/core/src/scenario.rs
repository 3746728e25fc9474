//! Registry of named moving surfaces with closed-form jets.

use std::f64::consts::PI;

use nalgebra::{Matrix3x2, Vector2, Vector3};

use crate::chart::{polar_domain, Axis, ChartJet, ChartMotion, Domain, MovingSurface};
use crate::error::{Error, Result};

/// Pole-exclusion band of polar charts.
pub const POLE_BAND: f64 = 0.15;

/// Names accepted by [`scenario`].
pub const SCENARIOS: &[&str] = &[
    "plane-static",
    "plane-shear",
    "flat-torus",
    "sphere-static",
    "sphere-expanding",
    "sphere-rigid-rotation",
    "ellipsoid-wobble",
    "torus-static",
    "torus-breathing",
];

/// Scenarios whose surface is curved; thin-film and curvature suites run on these.
pub const CURVED_SCENARIOS: &[&str] =
    &["sphere-static", "sphere-expanding", "sphere-rigid-rotation", "ellipsoid-wobble", "torus-static", "torus-breathing"];

/// Looks up a registered scenario.
pub fn scenario(name: &str) -> Result<MovingSurface> {
    let s = match name {
        "plane-static" => plane(name, false).with_static(true),
        "plane-shear" => plane(name, false).with_static(true).with_u(|_, y| Vector2::new(0.5 * y[1], 0.0)),
        "flat-torus" => plane(name, true).with_static(true),
        "sphere-static" => ellipsoid(name, |_| [(1.0, 0.0); 3]).with_static(true),
        "sphere-expanding" => ellipsoid(name, |t| [(1.0 + t, 1.0); 3]),
        "sphere-rigid-rotation" => sphere_rotation(name, Vector3::new(0.3, -0.2, 1.0)),
        "ellipsoid-wobble" => ellipsoid(name, |t| {
            [(1.0 + 0.2 * t.sin(), 0.2 * t.cos()), (1.3, 0.0), (0.8 + 0.1 * (2.0 * t).cos(), -0.2 * (2.0 * t).sin())]
        })
        .with_u(|t, y| Vector2::new(0.2 * y[1].sin() * (1.0 + 0.5 * t), 0.3 * y[0].cos())),
        "torus-static" => torus(name, 2.0, |_| (1.0, 0.0)).with_static(true),
        "torus-breathing" => torus(name, 2.0, |t| (1.0 + 0.1 * t.sin(), 0.1 * t.cos()))
            .with_u(|t, y| Vector2::new(0.3 + 0.2 * y[1].sin(), 0.25 * (y[0] + t).cos())),
        _ => {
            return Err(Error::Config(format!(
                "unknown scenario '{name}'; registered scenarios: {}",
                SCENARIOS.join(", ")
            )))
        }
    };
    Ok(s)
}

/// Rotating-coordinates observer map used for invariance checks on polar and torus charts.
pub fn rotating_coordinates(omega: f64) -> ChartMotion {
    ChartMotion::rotation(1, omega)
}

fn plane(name: &str, periodic: bool) -> MovingSurface {
    let domain = if periodic {
        Domain::new(Axis::periodic(0.0, 2.0 * PI), Axis::periodic(0.0, 2.0 * PI), 0.0)
    } else {
        Domain::new(Axis::open(-1.0, 1.0), Axis::open(-1.0, 1.0), 0.05)
    };
    MovingSurface::new(name, domain, |_, y| Vector3::new(y[0], y[1], 0.0)).with_jet(|_, y| ChartJet {
        x: Vector3::new(y[0], y[1], 0.0),
        dx: Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0),
        ddx: [[Vector3::zeros(); 2]; 2],
        vt: Vector3::zeros(),
        dvt: Matrix3x2::zeros(),
    })
}

/// Axis-aligned ellipsoid with semi-axes (value, time rate) given as functions of t.
fn ellipsoid(name: &str, axes: impl Fn(f64) -> [(f64, f64); 3] + Send + Sync + Clone + 'static) -> MovingSurface {
    let ax = axes.clone();
    let chart = move |t: f64, y: [f64; 2]| {
        let [(a, _), (b, _), (c, _)] = ax(t);
        let (st, ct) = y[0].sin_cos();
        let (sp, cp) = y[1].sin_cos();
        Vector3::new(a * st * cp, b * st * sp, c * ct)
    };
    let jet = move |t: f64, y: [f64; 2]| ellipsoid_jet(axes(t), y);
    MovingSurface::new(name, polar_domain(POLE_BAND), chart).with_jet(jet)
}

fn ellipsoid_jet(axes: [(f64, f64); 3], y: [f64; 2]) -> ChartJet {
    let [(a, da), (b, db), (c, dc)] = axes;
    let (st, ct) = y[0].sin_cos();
    let (sp, cp) = y[1].sin_cos();
    let scaled = |a: f64, b: f64, c: f64| {
        let x = Vector3::new(a * st * cp, b * st * sp, c * ct);
        let xt = Vector3::new(a * ct * cp, b * ct * sp, -c * st);
        let xp = Vector3::new(-a * st * sp, b * st * cp, 0.0);
        (x, xt, xp)
    };
    let (x, xt, xp) = scaled(a, b, c);
    let (vt, vtt, vtp) = scaled(da, db, dc);
    let xtt = Vector3::new(-a * st * cp, -b * st * sp, -c * ct);
    let xtp = Vector3::new(-a * ct * sp, b * ct * cp, 0.0);
    let xpp = Vector3::new(-a * st * cp, -b * st * sp, 0.0);
    ChartJet {
        x,
        dx: Matrix3x2::from_columns(&[xt, xp]),
        ddx: [[xtt, xtp], [xtp, xpp]],
        vt,
        dvt: Matrix3x2::from_columns(&[vtt, vtp]),
    }
}

/// Static unit sphere whose material rotates rigidly with angular velocity `omega`.
fn sphere_rotation(name: &str, omega: Vector3<f64>) -> MovingSurface {
    ellipsoid(name, |_| [(1.0, 0.0); 3]).with_static(true).with_u(move |_, y| {
        let jet = ellipsoid_jet([(1.0, 0.0); 3], y);
        let w = omega.cross(&jet.x);
        let g = jet.dx.transpose() * jet.dx;
        g.try_inverse().unwrap_or_default() * (jet.dx.transpose() * w)
    })
}

/// Torus of tube radius r(t) around a circle of radius `big_r`; coordinates (u, v).
fn torus(name: &str, big_r: f64, tube: impl Fn(f64) -> (f64, f64) + Send + Sync + Clone + 'static) -> MovingSurface {
    let domain = Domain::new(Axis::periodic(0.0, 2.0 * PI), Axis::periodic(0.0, 2.0 * PI), 0.0);
    let tb = tube.clone();
    let chart = move |t: f64, y: [f64; 2]| {
        let (r, _) = tb(t);
        let (su, cu) = y[0].sin_cos();
        let (sv, cv) = y[1].sin_cos();
        let rho = big_r + r * cv;
        Vector3::new(rho * cu, rho * su, r * sv)
    };
    let jet = move |t: f64, y: [f64; 2]| {
        let (r, dr) = tube(t);
        let (su, cu) = y[0].sin_cos();
        let (sv, cv) = y[1].sin_cos();
        let rho = big_r + r * cv;
        let xu = Vector3::new(-rho * su, rho * cu, 0.0);
        let xv = Vector3::new(-r * sv * cu, -r * sv * su, r * cv);
        let xuu = Vector3::new(-rho * cu, -rho * su, 0.0);
        let xuv = Vector3::new(r * sv * su, -r * sv * cu, 0.0);
        let xvv = Vector3::new(-r * cv * cu, -r * cv * su, -r * sv);
        ChartJet {
            x: Vector3::new(rho * cu, rho * su, r * sv),
            dx: Matrix3x2::from_columns(&[xu, xv]),
            ddx: [[xuu, xuv], [xuv, xvv]],
            vt: Vector3::new(dr * cv * cu, dr * cv * su, dr * sv),
            dvt: Matrix3x2::from_columns(&[
                Vector3::new(-dr * cv * su, dr * cv * cu, 0.0),
                Vector3::new(-dr * sv * cu, -dr * sv * su, dr * cv),
            ]),
        }
    };
    MovingSurface::new(name, domain, chart).with_jet(jet)
}
