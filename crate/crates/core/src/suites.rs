//! Identity and dual-path verification suites over seeded random events.

use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::{make_observer_pair, DiffMode, Event, MovingSurface};
use crate::diffops::{conforming_laplace, surface_laplace, ConformingPath, LaplacePath};
use crate::error::{Error, Result};
use crate::fields::{pi_cq, pi_q, q_residuals, Cart};
use crate::geometry::{check_identities, geometry_at, motion_at, IdentityReport};
use crate::grid::{laplace_compact, Grid, GridGeometry};
use crate::samples;
use crate::scenario::rotating_coordinates;
use crate::thinfilm::{fitted_order, limit_study, Extension, Quantity, EXACT_FLOOR};
use crate::timederiv::{
    convected_dt, derivative, derivative_decomposed, q_dt, scalar_dot, tangential_dt, tangential_jaumann_forms, ConvectedPath,
    DerivKind, FieldClosure,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Geometry,
    Derivatives,
    Qtensor,
    Laplace,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Suite> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown suite '{s}'; expected geometry, derivatives, qtensor, laplace or all")))
    }
}

/// Per-family tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub identity_fd: f64,
    pub identity_analytic: f64,
    pub dual_path: f64,
    pub jaumann_average: f64,
    pub jaumann_forms: f64,
    pub q_closure: f64,
    pub ssq: f64,
    pub laplace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity_fd: 1e-6,
            identity_analytic: 1e-8,
            dual_path: 1e-6,
            jaumann_average: 1e-10,
            jaumann_forms: 1e-8,
            q_closure: 1e-8,
            ssq: 1e-10,
            laplace: 1e-5,
        }
    }
}

impl Tolerances {
    /// Every family at the same tolerance.
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            identity_fd: tol,
            identity_analytic: tol,
            dual_path: tol,
            jaumann_average: tol,
            jaumann_forms: tol,
            q_closure: tol,
            ssq: tol,
            laplace: tol,
        }
    }
}

fn rel(a: &Cart, b: &Cart) -> f64 {
    (a.clone() - b.clone()).amax() / a.amax().max(b.amax()).max(1.0)
}

fn rank_name(f: &FieldClosure) -> &'static str {
    if f.rank == 1 {
        "rank1"
    } else {
        "rank2"
    }
}

pub fn geometry_suite(surface: &MovingSurface, events: &[Event], tol: &Tolerances) -> Result<IdentityReport> {
    let t = match surface.diff_mode {
        DiffMode::Analytic => tol.identity_analytic,
        DiffMode::FiniteDifference { .. } => tol.identity_fd,
    };
    let mut rep = IdentityReport::default();
    for e in events {
        rep.extend(check_identities(surface, e, t)?);
    }
    Ok(rep)
}

pub fn derivative_suite(surface: &MovingSurface, events: &[Event], seed: u64, tol: &Tolerances) -> Result<IdentityReport> {
    let mut rep = IdentityReport::default();
    let fields = [
        samples::vector_field(surface, seed),
        samples::tensor_field(surface, seed + 1),
        samples::split_vector_field(surface, seed + 2),
        samples::split_tensor_field(surface, seed + 3),
    ];
    let r = samples::tensor_field(surface, seed + 4);
    let p = samples::vector_field(surface, seed + 5);
    let tv = samples::tangential_vector(seed + 6);
    let tt = samples::tangential_tensor(seed + 7);
    let pair = surface.domain.axes[1].periodic.then(|| make_observer_pair(surface, rotating_coordinates(0.7)));

    for e in events {
        let m = motion_at(surface, e)?;
        let sym = m.material.g_cart + m.material.g_cart.transpose();
        for f in &fields {
            let rk = rank_name(f);
            for kind in DerivKind::ALL_GENERAL {
                let a = derivative(kind, f, surface, e)?;
                let b = derivative_decomposed(kind, f, surface, e)?;
                rep.push(format!("dual_path_{}_{rk}", kind.name()), rel(&a, &b), tol.dual_path);
            }
            let j = convected_dt(DerivKind::Jaumann, f, surface, e, ConvectedPath::ViaMaterial)?.cart();
            let avg = convected_dt(DerivKind::Jaumann, f, surface, e, ConvectedPath::Average)?.cart();
            rep.push(format!("jaumann_average_{rk}"), rel(&j, &avg), tol.jaumann_average);
        }
        for (r1, r2) in [(&fields[0], &fields[2]), (&fields[1], &fields[3])] {
            let rk = rank_name(r1);
            let lhs = scalar_dot(&r1.inner(r2), surface, e)?;
            let v1 = r1.eval(e)?;
            let v2 = r2.eval(e)?;
            let scale = lhs.abs().max(1.0);
            let split_rate = |kind| -> Result<f64> {
                Ok(derivative_decomposed(kind, r1, surface, e)?.inner(&v2) + v1.inner(&derivative_decomposed(kind, r2, surface, e)?))
            };
            for kind in [DerivKind::Material, DerivKind::Jaumann] {
                rep.push(format!("inner_product_rule_{}_{rk}", kind.name()), (lhs - split_rate(kind)?).abs() / scale, tol.dual_path);
            }
            let defect = match (&v1, &v2) {
                (Cart::Vector(a), Cart::Vector(b)) => sym.component_mul(&(a * b.transpose())).sum(),
                (Cart::Tensor(a), Cart::Tensor(b)) => sym.component_mul(&(a * b.transpose() + a.transpose() * b)).sum(),
                _ => return Err(Error::Rank(v1.rank())),
            };
            for (kind, sign) in [(DerivKind::Upper, 1.0), (DerivKind::Lower, -1.0)] {
                let res = (lhs - split_rate(kind)? - sign * defect).abs() / scale;
                rep.push(format!("convected_defect_{}_{rk}", kind.name()), res, tol.dual_path);
            }
        }
        for kind in [DerivKind::Material, DerivKind::Jaumann] {
            let lhs = derivative(kind, &r.apply(&p), surface, e)?;
            let rhs = derivative_decomposed(kind, &r, surface, e)?.tensor() * p.eval(e)?.vector()
                + r.eval(e)?.tensor() * derivative_decomposed(kind, &p, surface, e)?.vector();
            rep.push(format!("tensor_vector_product_rule_{}", kind.name()), rel(&lhs, &Cart::Vector(rhs)), tol.dual_path);
        }
        let v = tangential_jaumann_forms(&tv, surface, e)?;
        rep.push("tangential_jaumann_rotation_form_rank1", rel(&v.average, &v.rotation), tol.jaumann_forms);
        let up = tangential_dt(DerivKind::Upper, &tv, surface, e)?;
        let low = tangential_dt(DerivKind::Lower, &tv, surface, e)?;
        rep.push("tangential_jaumann_average_rank1", rel(&((up + low) * 0.5), &v.average), tol.jaumann_average);
        let t2 = tangential_jaumann_forms(&tt, surface, e)?;
        rep.push("tangential_jaumann_rotation_form_rank2", rel(&t2.average, &t2.rotation), tol.jaumann_forms);
        if let Some(qp) = &t2.q_projected {
            rep.push("tangential_jaumann_q_form_rank2", rel(&t2.average, qp), tol.jaumann_forms);
        }
    }

    if let Some(pair) = pair {
        for e_b in events {
            let e_a = pair.map_event(e_b);
            for f in &fields[..3] {
                let fb = f.pullback(&pair);
                for kind in DerivKind::ALL_GENERAL {
                    let a = derivative(kind, f, surface, &e_a)?;
                    let b = derivative_decomposed(kind, &fb, &pair.b, e_b)?;
                    rep.push(format!("observer_invariance_{}", kind.name()), rel(&a, &b), tol.dual_path);
                }
            }
        }
    }
    Ok(rep)
}

pub fn qtensor_suite(surface: &MovingSurface, events: &[Event], seed: u64, tol: &Tolerances) -> Result<IdentityReport> {
    let mut rep = IdentityReport::default();
    let q = samples::q_field(surface, seed);
    let field = q.to_field();
    let cq = samples::conforming_q_field(surface, seed + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for e in events {
        let geom = geometry_at(surface, e)?;
        for kind in [DerivKind::Material, DerivKind::Jaumann] {
            let full = derivative(kind, &field, surface, e)?.tensor();
            let (asym, tr) = q_residuals(&full);
            rep.push(format!("q_closure_symmetry_{}", kind.name()), asym, tol.q_closure);
            rep.push(format!("q_closure_trace_{}", kind.name()), tr, tol.q_closure);
            let split = q_dt(kind, &q, surface, e)?.to_cart(&geom);
            rep.push(format!("q_dual_path_{}", kind.name()), (split - full).amax() / full.amax().max(1.0), tol.dual_path);
        }
        let qs = q.eval(e)?;
        let g = motion_at(surface, e)?.material.g_cart;
        let expected = qs.beta * g.trace() - 2.0 * g.component_mul(&geom.embed_mat(&qs.q)).sum();
        let up = derivative(DerivKind::Upper, &field, surface, e)?.tensor().trace();
        let low = derivative(DerivKind::Lower, &field, surface, e)?.tensor().trace();
        let scale = expected.abs().max(1.0);
        rep.push("q_trace_formula_upper", (up - expected).abs() / scale, tol.dual_path);
        rep.push("q_trace_formula_lower", (low + expected).abs() / scale, tol.dual_path);

        let c = q_dt(DerivKind::ConformingMaterial, &cq, surface, e)?.to_cart(&geom);
        let proj = pi_cq(&derivative(DerivKind::Material, &cq.to_field(), surface, e)?.tensor(), &geom);
        rep.push("conforming_material_projection", (c - proj).amax() / proj.amax().max(1.0), tol.dual_path);

        for _ in 0..5 {
            let (s, qt) = samples::random_pair(&mut rng, &geom);
            let lhs: Matrix3<f64> = pi_q(&(s * s * qt), &geom);
            let rhs = 0.5 * s.norm_squared() * qt;
            rep.push("q_projection_of_sym_square", (lhs - rhs).amax() / rhs.amax().max(1.0), tol.ssq);
        }
    }
    Ok(rep)
}

pub fn laplace_suite(surface: &MovingSurface, events: &[Event], seed: u64, tol: &Tolerances) -> Result<IdentityReport> {
    let mut rep = IdentityReport::default();
    let fields = [samples::tensor_field(surface, seed), samples::split_tensor_field(surface, seed + 1)];
    let q = samples::q_field(surface, seed + 2).to_field();
    let cq = samples::conforming_q_field(surface, seed + 3);
    for e in events {
        for f in &fields {
            let a = surface_laplace(f, surface, e, LaplacePath::Beltrami)?;
            let b = surface_laplace(f, surface, e, LaplacePath::Decomposed)?;
            rep.push("laplace_beltrami_vs_decomposed", rel(&a, &b), tol.laplace);
        }
        let lq = surface_laplace(&q, surface, e, LaplacePath::Beltrami)?.tensor();
        let (asym, tr) = q_residuals(&lq);
        rep.push("q_laplace_closure", asym.max(tr), tol.q_closure);
        let geom = geometry_at(surface, e)?;
        let a = conforming_laplace(&cq, surface, e, ConformingPath::Projected)?.to_cart(&geom);
        let b = conforming_laplace(&cq, surface, e, ConformingPath::Decomposed)?.to_cart(&geom);
        rep.push("conforming_laplace_dual_path", (a - b).amax() / a.amax().max(1.0), tol.laplace);
    }
    Ok(rep)
}

/// Runs `suite` at `n` seeded events in t ∈ [0, 1]; records are worst residuals per identity.
pub fn run_suite(surface: &MovingSurface, suite: Suite, n: usize, seed: u64, tol: &Tolerances) -> Result<IdentityReport> {
    let events = surface.sample_events(&mut ChaCha8Rng::seed_from_u64(seed), n, 0.0, 1.0);
    let mut rep = IdentityReport::default();
    if matches!(suite, Suite::Geometry | Suite::All) {
        rep.extend(geometry_suite(surface, &events, tol)?);
    }
    if matches!(suite, Suite::Derivatives | Suite::All) {
        rep.extend(derivative_suite(surface, &events, seed, tol)?);
    }
    if matches!(suite, Suite::Qtensor | Suite::All) {
        rep.extend(qtensor_suite(surface, &events, seed, tol)?);
    }
    if matches!(suite, Suite::Laplace | Suite::All) {
        rep.extend(laplace_suite(surface, &events, seed, tol)?);
    }
    Ok(rep.summarize())
}

/// Errors of a refinement sequence with the fitted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: String,
    pub scenario: String,
    pub param: Vec<f64>,
    pub error: Vec<f64>,
    pub fitted_order: Option<f64>,
    pub exact: bool,
    pub min_order: f64,
    pub max_order: f64,
    pub pass: bool,
}

impl StudyReport {
    fn new(study: impl Into<String>, scenario: &str, param: Vec<f64>, error: Vec<f64>, bounds: [f64; 2], floor: f64) -> Self {
        let exact = error.iter().all(|&v| v < floor);
        let fitted_order = (!exact).then(|| fitted_order(&param, &error));
        let pass = exact || fitted_order.is_some_and(|p| p >= bounds[0] && p <= bounds[1]);
        StudyReport {
            study: study.into(),
            scenario: scenario.to_string(),
            param,
            error,
            fitted_order,
            exact,
            min_order: bounds[0],
            max_order: bounds[1],
            pass,
        }
    }

    /// Ratios of consecutive errors.
    pub fn ratios(&self) -> Vec<f64> {
        self.error.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

/// First derivatives of finite-difference jets against closed-form jets at steps 1e-2·2^-k.
/// Second-derivative stencils reach roundoff before the last step.
pub fn fd_order_study(surface: &MovingSurface, steps: usize, seed: u64) -> Result<StudyReport> {
    if !surface.has_jet() {
        return Err(Error::Config(format!("scenario '{}' has no closed-form jet", surface.name)));
    }
    let exact = surface.clone().with_mode(DiffMode::Analytic);
    let events = surface.sample_events(&mut ChaCha8Rng::seed_from_u64(seed), 5, 0.0, 1.0);
    let hs: Vec<f64> = (0..steps).map(|k| 1e-2 * 0.5f64.powi(k as i32)).collect();
    let mut error = Vec::with_capacity(steps);
    for &h in &hs {
        let mut worst = 0.0_f64;
        for e in &events {
            let a = exact.eval_jet(e)?;
            let b = surface.fd_jet(e, h * surface.coord_scale)?;
            let diff = (a.dx - b.dx).amax().max((a.vt - b.vt).amax());
            worst = worst.max(diff / a.dx.amax().max(a.vt.amax()).max(1.0));
        }
        error.push(worst);
    }
    Ok(StudyReport::new("fd", &surface.name, hs, error, [3.5, 4.5], 1e-14))
}

/// Grid Laplacian of a smooth scalar against the pointwise Laplacian on grids 32·2^k.
pub fn laplace_order_study(surface: &MovingSurface, steps: usize) -> Result<StudyReport> {
    let f = |y: [f64; 2]| y[0].sin() * (2.0 * y[1]).cos() + (y[1] + 0.3).sin();
    let closure = FieldClosure::new(0, move |e| Cart::Scalar(f(e.y())));
    let mut hs = Vec::with_capacity(steps);
    let mut error = Vec::with_capacity(steps);
    for k in 0..steps {
        let n = 32 << k;
        let grid = Grid::new(&surface.domain, [n, n])?;
        let geo = GridGeometry::sample(surface, &grid, 0.0)?;
        let v: Vec<f64> = (0..grid.len()).map(|i| f(grid.event(0.0, i).y())).collect();
        let lap = laplace_compact(&geo, &v);
        let mut worst = 0.0_f64;
        for (i, l) in lap.iter().enumerate() {
            let exact = surface_laplace(&closure, surface, &grid.event(0.0, i), LaplacePath::Beltrami)?.scalar();
            worst = worst.max((l - exact).abs());
        }
        hs.push(grid.h[0]);
        error.push(worst);
    }
    Ok(StudyReport::new("laplace", &surface.name, hs, error, [1.8, 2.2], 1e-13))
}

/// Thin-film limits of every quantity for a vector and a tensor field.
pub fn thinfilm_study(surface: &MovingSurface, steps: usize, seed: u64, ext: Extension) -> Result<Vec<StudyReport>> {
    let xis: Vec<f64> = (0..steps).map(|k| 0.1 * 0.5f64.powi(k as i32) * surface.length_scale).collect();
    let e = surface.sample_events(&mut ChaCha8Rng::seed_from_u64(seed), 1, 0.0, 1.0)[0];
    let v = samples::vector_field(surface, seed);
    let fields = [
        FieldClosure::try_new(0, move |e| Ok(Cart::Scalar(v.eval(e)?.vector()[0]))),
        samples::vector_field(surface, seed + 1),
        samples::tensor_field(surface, seed + 2),
    ];
    let mut out = Vec::new();
    for q in [
        Quantity::ScalarDot,
        Quantity::MaterialDt,
        Quantity::UpperDt,
        Quantity::LowerDt,
        Quantity::JaumannDt,
        Quantity::Deformation,
    ] {
        let chosen: &[FieldClosure] = match q {
            Quantity::ScalarDot | Quantity::Deformation => &fields[..1],
            _ => &fields[1..],
        };
        for f in chosen {
            let r = limit_study(q, f, surface, &e, &xis, ext)?;
            let name = serde_json::to_value(q).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            let study = if f.rank == 0 { format!("thinfilm_{name}") } else { format!("thinfilm_{name}_rank{}", f.rank) };
            out.push(StudyReport::new(study, &surface.name, r.xi, r.error, [0.9, f64::INFINITY], EXACT_FLOOR));
        }
    }
    Ok(out)
}
