//! Surface gradient, surface Laplacian (Beltrami and decomposed forms) and the conforming Laplacian.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::chart::{Event, MovingSurface};
use crate::error::{Error, Result};
use crate::fd;
use crate::fields::{pi_cq, pi_q, Cart, QSplit, Split};
use crate::geometry::{geometry_near, GeometrySample};
use crate::timederiv::{FieldClosure, QField};

/// ∇_C R stored as the chart partials of the Cartesian proxies together with the dual frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGradient {
    pub partials: [Cart; 2],
    /// Columns ∂^k X.
    pub dual: Matrix3x2<f64>,
    pub ginv: Matrix2<f64>,
}

impl SurfaceGradient {
    pub fn rank(&self) -> u8 {
        self.partials[0].rank() + 1
    }

    /// Cartesian components with the derivative slot last.
    pub fn components(&self) -> Vec<f64> {
        let p0 = self.partials[0].components();
        let p1 = self.partials[1].components();
        let mut out = Vec::with_capacity(3 * p0.len());
        for (a, b) in p0.iter().zip(&p1) {
            for c in 0..3 {
                out.push(a * self.dual[(c, 0)] + b * self.dual[(c, 1)]);
            }
        }
        out
    }

    /// Pointwise inner product ⟨∇_C R, ∇_C Ψ⟩ = g^{kl}⟨∂_k R, ∂_l Ψ⟩.
    pub fn inner(&self, other: &SurfaceGradient) -> f64 {
        let mut s = 0.0;
        for k in 0..2 {
            for l in 0..2 {
                s += self.ginv[(k, l)] * self.partials[k].inner(&other.partials[l]);
            }
        }
        s
    }

    pub fn norm2(&self) -> f64 {
        self.inner(self)
    }
}

pub fn surface_gradient(field: &FieldClosure, surface: &MovingSurface, e: &Event) -> Result<SurfaceGradient> {
    if !surface.domain.admissible(e) {
        return Err(Error::Domain { t: e.t, y1: e.y1, y2: e.y2 });
    }
    let geom = geometry_near(surface, e)?;
    let partials = fd::grad2(|y| field.eval(&e.with_y(y)), e.y(), surface.fd_step())?;
    Ok(SurfaceGradient { partials, dual: geom.dual(), ginv: geom.ginv })
}

/// Max deviation between ∇_C R and (∇̂R̂)Π_S for a field given on ambient space.
pub fn ambient_gradient_residual(
    rank: u8,
    f: impl Fn(f64, &Vector3<f64>) -> Cart + Send + Sync + Clone + 'static,
    surface: &MovingSurface,
    e: &Event,
) -> Result<f64> {
    let field = FieldClosure::ambient(rank, surface, f.clone());
    let surf = surface_gradient(&field, surface, e)?.components();
    let geom = geometry_near(surface, e)?;
    let x = geom.x;
    let h = surface.fd_step();
    let amb: Vec<Vec<f64>> = (0..3)
        .map(|c| fd::d1(|s| { let mut p = x; p[c] = s; Ok(f(e.t, &p)) }, x[c], h).map(|d| d.components()))
        .collect::<Result<_>>()?;
    let p = geom.proj();
    let n = amb[0].len();
    let mut res: f64 = 0.0;
    for a in 0..n {
        for c in 0..3 {
            let v: f64 = (0..3).map(|d| amb[d][a] * p[(d, c)]).sum();
            res = res.max((v - surf[3 * a + c]).abs());
        }
    }
    Ok(res)
}

/// Computation path of the surface Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaplacePath {
    Beltrami,
    Decomposed,
}

/// Componentwise Laplace–Beltrami operator of a closure: g^{ij}(∂_i∂_j R − Γ^k_ij ∂_k R).
pub fn beltrami<T: fd::Lin>(f: impl Fn(&Event) -> Result<T>, geom: &GeometrySample, e: &Event, h: f64) -> Result<T> {
    let hess = fd::hess2(|y| f(&e.with_y(y)), e.y(), h)?;
    let grad = fd::grad2(|y| f(&e.with_y(y)), e.y(), h)?;
    let mut out: Option<T> = None;
    for i in 0..2 {
        for j in 0..2 {
            let gij = geom.ginv[(i, j)];
            let mut term = hess[i][j].clone();
            for (k, gk) in grad.iter().enumerate() {
                term = term - gk.clone() * geom.gamma[k][i][j];
            }
            let term = term * gij;
            out = Some(match out {
                None => term,
                Some(o) => o + term,
            });
        }
    }
    Ok(out.expect("2x2 sum"))
}

/// Covariant gradient [i][k] = η^i_{|k} of a contravariant vector closure.
fn cov_grad_vec(f: &dyn Fn(&Event) -> Result<Vector2<f64>>, s: &MovingSurface, e: &Event, h: f64) -> Result<Matrix2<f64>> {
    let d = fd::grad2(|y| f(&e.with_y(y)), e.y(), h)?;
    Ok(Matrix2::from_columns(&d) + geometry_near(s, e)?.gamma_dot(&f(e)?))
}

fn christoffel(geom: &GeometrySample, k: usize) -> Matrix2<f64> {
    Matrix2::from_fn(|i, l| geom.gamma[i][k][l])
}

/// Covariant gradient of a contravariant 2-tensor closure, indexed by the derivative slot.
fn cov_grad_mat(f: &dyn Fn(&Event) -> Result<Matrix2<f64>>, s: &MovingSurface, e: &Event, h: f64) -> Result<[Matrix2<f64>; 2]> {
    let d = fd::grad2(|y| f(&e.with_y(y)), e.y(), h)?;
    let geom = geometry_near(s, e)?;
    let r = f(e)?;
    Ok(std::array::from_fn(|k| {
        let gk = christoffel(&geom, k);
        d[k] + gk * r + r * gk.transpose()
    }))
}

/// Bochner Laplacian Δη of a tangential vector closure.
pub fn vector_laplace(f: &dyn Fn(&Event) -> Result<Vector2<f64>>, s: &MovingSurface, e: &Event, h: f64) -> Result<Vector2<f64>> {
    let geom = geometry_near(s, e)?;
    let t = cov_grad_vec(f, s, e, h)?;
    let dt = fd::grad2(|y| cov_grad_vec(f, s, &e.with_y(y), h), e.y(), h)?;
    let mut out = Vector2::zeros();
    for k in 0..2 {
        // ∇_k T^i_j = ∂_k T^i_j + Γ^i_kl T^l_j − Γ^l_kj T^i_l
        let gk = christoffel(&geom, k);
        let cov = dt[k] + gk * t - t * gk;
        for j in 0..2 {
            out += geom.ginv[(j, k)] * cov.column(j);
        }
    }
    Ok(out)
}

/// Bochner Laplacian Δr of a tangential 2-tensor closure.
pub fn tensor_laplace(f: &dyn Fn(&Event) -> Result<Matrix2<f64>>, s: &MovingSurface, e: &Event, h: f64) -> Result<Matrix2<f64>> {
    let geom = geometry_near(s, e)?;
    let sm = cov_grad_mat(f, s, e, h)?;
    let ds = fd::grad2(|y| cov_grad_mat(f, s, &e.with_y(y), h).map(|a| ArrM(a)), e.y(), h)?;
    let mut out = Matrix2::zeros();
    for k in 0..2 {
        let gk = christoffel(&geom, k);
        for m in 0..2 {
            let mut cov = ds[k].0[m] + gk * sm[m] + sm[m] * gk.transpose();
            for l in 0..2 {
                cov -= geom.gamma[l][k][m] * sm[l];
            }
            out += geom.ginv[(k, m)] * cov;
        }
    }
    Ok(out)
}

/// Pair of matrices with the linear operations needed by the FD helpers.
#[derive(Debug, Clone, Copy)]
struct ArrM([Matrix2<f64>; 2]);

impl std::ops::Add for ArrM {
    type Output = ArrM;
    fn add(self, o: ArrM) -> ArrM {
        ArrM([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl std::ops::Sub for ArrM {
    type Output = ArrM;
    fn sub(self, o: ArrM) -> ArrM {
        ArrM([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl std::ops::Mul<f64> for ArrM {
    type Output = ArrM;
    fn mul(self, s: f64) -> ArrM {
        ArrM([self.0[0] * s, self.0[1] * s])
    }
}

fn scalar_beltrami(f: &dyn Fn(&Event) -> Result<f64>, s: &MovingSurface, e: &Event, h: f64) -> Result<f64> {
    beltrami(f, &geometry_near(s, e)?, e, h)
}

fn tensor_split_parts(s: &Split) -> Result<(Matrix2<f64>, Vector2<f64>, Vector2<f64>, f64)> {
    match s {
        Split::Tensor { r, eta_l, eta_r, phi } => Ok((*r, *eta_l, *eta_r, *phi)),
        other => Err(Error::Rank(other.rank())),
    }
}

/// Surface Laplacian Δ_C R of a rank-2 field (Beltrami also accepts ranks 0 and 1).
pub fn surface_laplace(field: &FieldClosure, surface: &MovingSurface, e: &Event, path: LaplacePath) -> Result<Cart> {
    if !surface.domain.admissible(e) {
        return Err(Error::Domain { t: e.t, y1: e.y1, y2: e.y2 });
    }
    let h = surface.fd_step();
    let geom = geometry_near(surface, e)?;
    match path {
        LaplacePath::Beltrami => beltrami(|ev| field.eval(ev), &geom, e, h),
        LaplacePath::Decomposed => {
            if field.rank != 2 {
                return Err(Error::Rank(field.rank));
            }
            if !field.has_split() {
                return Err(Error::MissingSplit);
            }
            let part = |ev: &Event| field.eval_split(ev).and_then(|s| tensor_split_parts(&s));
            let (r, el, er, phi) = part(e)?;
            let fr = |ev: &Event| part(ev).map(|p| p.0);
            let fl = |ev: &Event| part(ev).map(|p| p.1);
            let fright = |ev: &Event| part(ev).map(|p| p.2);
            let fphi = |ev: &Event| part(ev).map(|p| p.3);
            let lap_r = tensor_laplace(&fr, surface, e, h)?;
            let lap_l = vector_laplace(&fl, surface, e, h)?;
            let lap_rr = vector_laplace(&fright, surface, e, h)?;
            let lap_phi = scalar_beltrami(&fphi, surface, e, h)?;
            let grad_r = cov_grad_mat(&fr, surface, e, h)?;
            let grad_l = cov_grad_vec(&fl, surface, e, h)?;
            let grad_rr = cov_grad_vec(&fright, surface, e, h)?;
            let dphi = fd::grad2(|y| fphi(&e.with_y(y)), e.y(), h)?;
            let dh = fd::grad2(|y| geometry_near(surface, &e.with_y(y)).map(|g| g.h), e.y(), h)?;
            Ok(Cart::Tensor(assemble_decomposed(
                &geom,
                DecomposedParts {
                    r,
                    el,
                    er,
                    phi,
                    lap_r,
                    lap_l,
                    lap_rr,
                    lap_phi,
                    grad_r,
                    grad_l,
                    grad_rr,
                    dphi: Vector2::new(dphi[0], dphi[1]),
                    dh: Vector2::new(dh[0], dh[1]),
                },
            )))
        }
    }
}

struct DecomposedParts {
    r: Matrix2<f64>,
    el: Vector2<f64>,
    er: Vector2<f64>,
    phi: f64,
    lap_r: Matrix2<f64>,
    lap_l: Vector2<f64>,
    lap_rr: Vector2<f64>,
    lap_phi: f64,
    grad_r: [Matrix2<f64>; 2],
    grad_l: Matrix2<f64>,
    grad_rr: Matrix2<f64>,
    dphi: Vector2<f64>,
    dh: Vector2<f64>,
}

fn assemble_decomposed(geom: &GeometrySample, p: DecomposedParts) -> Matrix3<f64> {
    let nu = geom.nu;
    let b = geom.b_cart();
    let b2 = b * b;
    let tr_b2 = b2.trace();
    let dual = geom.dual();
    let r = geom.embed_mat(&p.r);
    let el = geom.embed_vec(&p.el);
    let er = geom.embed_vec(&p.er);
    let grad_h = dual * p.dh;
    let grad_phi = dual * p.dphi;
    let gl = geom.dx * p.grad_l * dual.transpose();
    let gr = geom.dx * p.grad_rr * dual.transpose();
    // (∇r):B contracts the second slot, (∇rᵀ):B the first.
    let mut rb = Vector3::zeros();
    let mut rtb = Vector3::zeros();
    for k in 0..2 {
        let rk = geom.embed_mat(&p.grad_r[k]);
        let bk = b * dual.column(k);
        rb += rk * bk;
        rtb += rk.transpose() * bk;
    }
    let lap_r = geom.embed_mat(&p.lap_r);
    let lap_l = geom.embed_vec(&p.lap_l);
    let lap_rr = geom.embed_vec(&p.lap_rr);
    let tang = lap_r - (b2 * r + r * b2) - 2.0 * (gl * b + b * gr.transpose()) - (el * grad_h.transpose() + grad_h * er.transpose())
        + 2.0 * p.phi * b2;
    let left = 2.0 * rb + r * grad_h + lap_l - tr_b2 * el - b2 * (el + 2.0 * er) - 2.0 * b * grad_phi - p.phi * grad_h;
    let right = 2.0 * rtb + r.transpose() * grad_h + lap_rr - tr_b2 * er - b2 * (er + 2.0 * el) - 2.0 * b * grad_phi - p.phi * grad_h;
    let nn = 2.0 * b2.component_mul(&r).sum() + 2.0 * (gl + gr).component_mul(&b).sum() + (el + er).dot(&grad_h) + p.lap_phi
        - 2.0 * p.phi * tr_b2;
    tang + left * nu.transpose() + nu * right.transpose() + nn * nu * nu.transpose()
}

/// Computation path of the conforming Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConformingPath {
    /// Π_CQ applied to the Beltrami Laplacian of the reconstructed Q.
    Projected,
    /// Closed form Δq − Tr(B²)q + 3βΠ_Q(B²), Δβ + ⟨B², 2q − 3β Id_S⟩.
    Decomposed,
}

pub fn conforming_laplace(q: &QField, surface: &MovingSurface, e: &Event, path: ConformingPath) -> Result<QSplit> {
    if !surface.domain.admissible(e) {
        return Err(Error::Domain { t: e.t, y1: e.y1, y2: e.y2 });
    }
    let geom = geometry_near(surface, e)?;
    let at = q.eval(e)?;
    at.is_conforming(&geom, 1e-8)?;
    let h = surface.fd_step();
    match path {
        ConformingPath::Projected => {
            let lap = surface_laplace(&q.to_field(), surface, e, LaplacePath::Beltrami)?.tensor();
            let mut out = QSplit::from_cart_unchecked(&pi_cq(&lap, &geom), &geom);
            out.eta = Vector2::zeros();
            Ok(out)
        }
        ConformingPath::Decomposed => {
            let fq = |ev: &Event| q.eval(ev).map(|s| s.q);
            let fb = |ev: &Event| q.eval(ev).map(|s| s.beta);
            let lap_q = geom.embed_mat(&tensor_laplace(&fq, surface, e, h)?);
            let lap_b = scalar_beltrami(&fb, surface, e, h)?;
            let (q_rate, b_rate) = conforming_closed_form(&geom, &geom.embed_mat(&at.q), at.beta, &lap_q, lap_b);
            Ok(QSplit { q: geom.pull_mat(&q_rate), eta: Vector2::zeros(), beta: b_rate })
        }
    }
}

/// Closed-form conforming Laplacian from tangential Δq and scalar Δβ (Cartesian tangential form).
pub fn conforming_closed_form(
    geom: &GeometrySample,
    q: &Matrix3<f64>,
    beta: f64,
    lap_q: &Matrix3<f64>,
    lap_beta: f64,
) -> (Matrix3<f64>, f64) {
    let b = geom.b_cart();
    let b2 = b * b;
    let tr_b2 = b2.trace();
    let q_part = lap_q - tr_b2 * q + 3.0 * beta * pi_q(&b2, geom);
    let beta_part = lap_beta + b2.component_mul(&(2.0 * q - 3.0 * beta * geom.proj())).sum();
    (q_part, beta_part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::scenario;

    #[test]
    fn constant_field_has_zero_laplacian() {
        let s = scenario("torus-breathing").unwrap();
        let f = FieldClosure::new(2, |_| Cart::Tensor(Matrix3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0)))
            .with_derived_split(&s);
        let e = Event::new(0.3, 1.0, 2.0);
        for path in [LaplacePath::Beltrami, LaplacePath::Decomposed] {
            assert!(surface_laplace(&f, &s, &e, path).unwrap().amax() < 1e-8);
        }
    }

    #[test]
    fn height_gradient_on_sphere() {
        let s = scenario("sphere-static").unwrap();
        let z = FieldClosure::ambient(0, &s, |_, x| Cart::Scalar(x[2]));
        let e = Event::new(0.0, 1.1, 0.4);
        let grad = surface_gradient(&z, &s, &e).unwrap().components();
        let geom = geometry_near(&s, &e).unwrap();
        let expected = geom.proj() * Vector3::z();
        for c in 0..3 {
            assert!((grad[c] - expected[c]).abs() < 1e-10);
        }
    }

    #[test]
    fn normal_gradient_is_minus_shape_operator() {
        let s = scenario("torus-static").unwrap();
        let nu = FieldClosure::geometric(1, &s, |_, g| Cart::Vector(g.nu));
        let e = Event::new(0.0, 0.3, 2.2);
        let c = surface_gradient(&nu, &s, &e).unwrap().components();
        let b = geometry_near(&s, &e).unwrap().b_cart();
        for a in 0..3 {
            for d in 0..3 {
                assert!((c[3 * a + d] + b[(a, d)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn laplacian_of_nu_nu_on_unit_sphere() {
        let s = scenario("sphere-static").unwrap();
        let nn = FieldClosure::geometric(2, &s, |_, g| Cart::Tensor(g.nu * g.nu.transpose()));
        let e = Event::new(0.0, 0.9, 2.0);
        let geom = geometry_near(&s, &e).unwrap();
        let b2 = geom.b_cart() * geom.b_cart();
        let nu = geom.nu;
        let expected = 2.0 * b2 + (0.0 - 2.0 * b2.trace()) * nu * nu.transpose();
        for path in [LaplacePath::Beltrami, LaplacePath::Decomposed] {
            let l = surface_laplace(&nn, &s, &e, path).unwrap().tensor();
            assert!((l - expected).amax() < 1e-6, "{path:?}");
        }
    }
}
