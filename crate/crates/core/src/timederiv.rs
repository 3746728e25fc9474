//! Material, convected and Jaumann time derivatives with independent computation paths.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::chart::{Event, MovingSurface, ObserverPair};
use crate::error::{Error, Result};
use crate::fd;
use crate::fields::{pi_cq, pi_q, reconstruct_split, split_cart, Cart, QSplit, Split, TensorValue};
use crate::geometry::{geometry_near, motion_at, GeometrySample, MotionSample};

type CartFn = Arc<dyn Fn(&Event) -> Result<Cart> + Send + Sync>;
type SplitFn = Arc<dyn Fn(&Event) -> Result<Split> + Send + Sync>;

/// A field on a moving surface: Cartesian proxy closure plus an optional split closure.
#[derive(Clone)]
pub struct FieldClosure {
    pub rank: u8,
    eval: CartFn,
    split_eval: Option<SplitFn>,
}

impl fmt::Debug for FieldClosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldClosure")
            .field("rank", &self.rank)
            .field("has_split", &self.split_eval.is_some())
            .finish()
    }
}

impl FieldClosure {
    pub fn new(rank: u8, f: impl Fn(&Event) -> Cart + Send + Sync + 'static) -> Self {
        FieldClosure { rank, eval: Arc::new(move |e| Ok(f(e))), split_eval: None }
    }

    pub fn try_new(rank: u8, f: impl Fn(&Event) -> Result<Cart> + Send + Sync + 'static) -> Self {
        FieldClosure { rank, eval: Arc::new(f), split_eval: None }
    }

    /// Installs an explicit split closure.
    pub fn with_split(mut self, f: impl Fn(&Event) -> Result<Split> + Send + Sync + 'static) -> Self {
        self.split_eval = Some(Arc::new(f));
        self
    }

    /// Installs a split closure obtained by splitting the Cartesian proxy on `surface`.
    pub fn with_derived_split(mut self, surface: &MovingSurface) -> Self {
        let s = surface.clone();
        let eval = self.eval.clone();
        self.split_eval = Some(Arc::new(move |e| {
            let c = eval(e)?;
            Ok(split_cart(&c, &geometry_near(&s, e)?))
        }));
        self
    }

    /// Field given by split components; the Cartesian proxy is reconstructed on `surface`.
    pub fn from_split(
        rank: u8,
        surface: &MovingSurface,
        f: impl Fn(&Event) -> Split + Send + Sync + 'static,
    ) -> Self {
        let f = Arc::new(f);
        let s = surface.clone();
        let f2 = f.clone();
        FieldClosure {
            rank,
            eval: Arc::new(move |e| Ok(reconstruct_split(&f2(e), &geometry_near(&s, e)?))),
            split_eval: Some(Arc::new(move |e| Ok(f(e)))),
        }
    }

    /// Field given as a function of time and position in ℝ³.
    pub fn ambient(
        rank: u8,
        surface: &MovingSurface,
        f: impl Fn(f64, &Vector3<f64>) -> Cart + Send + Sync + 'static,
    ) -> Self {
        let s = surface.clone();
        FieldClosure::new(rank, move |e| f(e.t, &s.position(e))).with_derived_split(surface)
    }

    /// Field built from the local geometry (normals, curvature).
    pub fn geometric(
        rank: u8,
        surface: &MovingSurface,
        f: impl Fn(&Event, &GeometrySample) -> Cart + Send + Sync + 'static,
    ) -> Self {
        let s = surface.clone();
        FieldClosure::try_new(rank, move |e| Ok(f(e, &geometry_near(&s, e)?))).with_derived_split(surface)
    }

    pub fn has_split(&self) -> bool {
        self.split_eval.is_some()
    }

    pub fn eval(&self, e: &Event) -> Result<Cart> {
        (self.eval)(e)
    }

    pub fn eval_split(&self, e: &Event) -> Result<Split> {
        match &self.split_eval {
            Some(f) => f(e),
            None => Err(Error::MissingSplit),
        }
    }

    /// Both halves at `e`.
    pub fn value(&self, e: &Event) -> Result<TensorValue> {
        let mut v = TensorValue::from_cart(self.eval(e)?);
        if self.split_eval.is_some() {
            v.split = Some(self.eval_split(e)?);
            v.sync = crate::fields::Sync::Both;
        }
        Ok(v)
    }

    /// The same field seen by observer B of `pair`; the split is re-derived on B's frame.
    pub fn pullback(&self, pair: &ObserverPair) -> FieldClosure {
        let eval = self.eval.clone();
        let p = pair.clone();
        FieldClosure::try_new(self.rank, move |e| eval(&p.map_event(e))).with_derived_split(&pair.b)
    }

    /// Pointwise inner product ⟨self, other⟩ as a scalar field.
    pub fn inner(&self, other: &FieldClosure) -> FieldClosure {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        FieldClosure::try_new(0, move |e| Ok(Cart::Scalar(a(e)?.inner(&b(e)?))))
    }

    /// Contraction of a rank-2 field with a rank-1 field.
    pub fn apply(&self, other: &FieldClosure) -> FieldClosure {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        FieldClosure::try_new(1, move |e| Ok(Cart::Vector(a(e)?.tensor() * b(e)?.vector())))
    }
}

/// Derivative kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivKind {
    Material,
    Upper,
    Lower,
    Jaumann,
    ConformingMaterial,
}

impl DerivKind {
    pub const ALL_GENERAL: [DerivKind; 4] = [DerivKind::Material, DerivKind::Upper, DerivKind::Lower, DerivKind::Jaumann];

    pub fn name(&self) -> &'static str {
        match self {
            DerivKind::Material => "material",
            DerivKind::Upper => "upper",
            DerivKind::Lower => "lower",
            DerivKind::Jaumann => "jaumann",
            DerivKind::ConformingMaterial => "conforming_material",
        }
    }
}

/// Computation path of the material derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaterialPath {
    CartesianProxy,
    Decomposed,
}

/// Computation path of convected and Jaumann derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvectedPath {
    ViaMaterial,
    Decomposed,
    /// ½(D^♯ + D^♭); Jaumann only.
    Average,
}

/// Value, time derivative and chart gradient of a closure at one event.
struct Jet1<T> {
    v: T,
    dt: T,
    dy: [T; 2],
}

fn jet1<T: fd::Lin>(f: impl Fn(&Event) -> Result<T>, e: &Event, h: f64) -> Result<Jet1<T>> {
    Ok(Jet1 {
        v: f(e)?,
        dt: fd::d1(|s| f(&e.with_t(s)), e.t, h)?,
        dy: fd::grad2(|y| f(&e.with_y(y)), e.y(), h)?,
    })
}

/// ḟ = ∂_t f + u^i ∂_i f.
pub fn scalar_dot(f: &FieldClosure, surface: &MovingSurface, e: &Event) -> Result<f64> {
    if !surface.domain.admissible(e) {
        return Err(Error::Domain { t: e.t, y1: e.y1, y2: e.y2 });
    }
    let j = jet1(|ev| f.eval(ev).map(|c| c.scalar()), e, surface.fd_step())?;
    let u = surface.u(e);
    Ok(j.dt + u[0] * j.dy[0] + u[1] * j.dy[1])
}

/// Componentwise scalar time derivative of the Cartesian proxy.
pub fn cartesian_dot(f: &FieldClosure, surface: &MovingSurface, e: &Event) -> Result<Cart> {
    if !surface.domain.admissible(e) {
        return Err(Error::Domain { t: e.t, y1: e.y1, y2: e.y2 });
    }
    let j = jet1(|ev| f.eval(ev), e, surface.fd_step())?;
    let u = surface.u(e);
    Ok(j.dt + j.dy[0] * u[0] + j.dy[1] * u[1])
}

/// Kinematic quantities shared by the decomposed formulas.
pub struct Kinematics {
    pub geom: GeometrySample,
    pub motion: MotionSample,
    /// Mixed covariant gradient of u, indexed [i][k] = u^i_{|k}.
    pub grad_u: Matrix2<f64>,
    pub grad_u_cart: Matrix3<f64>,
    /// ∂_t g_ij at fixed chart coordinates.
    pub dg_dt: Matrix2<f64>,
}

impl Kinematics {
    pub fn at(surface: &MovingSurface, e: &Event) -> Result<Self> {
        let motion = motion_at(surface, e)?;
        let geom = geometry_near(surface, e)?;
        let h = surface.fd_step();
        let du = fd::grad2(|y| Ok(surface.u(&e.with_y(y))), e.y(), h)?;
        let u = surface.u(e);
        let grad_u = Matrix2::from_columns(&du) + geom.gamma_dot(&u);
        let grad_u_cart = geom.dx * grad_u * geom.dual().transpose();
        let dg_dt = fd::d1(|s| geometry_near(surface, &e.with_t(s)).map(|g| g.g), e.t, h)?;
        Ok(Kinematics { geom, motion, grad_u, grad_u_cart, dg_dt })
    }

    fn christoffel(&self, k: usize) -> Matrix2<f64> {
        Matrix2::from_fn(|i, l| self.geom.gamma[i][k][l])
    }

    fn b(&self) -> Vector3<f64> {
        self.motion.material.b_cart
    }
}

/// Tangential derivative of a tangential vector from its contravariant jet.
fn tangential_vec(kind: DerivKind, k: &Kinematics, r: &Vector2<f64>, dt: &Vector2<f64>, dy: &[Vector2<f64>; 2]) -> Vector3<f64> {
    let geom = &k.geom;
    let cov = Matrix2::from_columns(dy) + geom.gamma_dot(r);
    let adv = cov * k.motion.u;
    let r_c = geom.embed_vec(r);
    match kind {
        DerivKind::Material | DerivKind::ConformingMaterial => geom.embed_vec(&(dt + adv)) + k.motion.observer.g_cart * r_c,
        DerivKind::Upper => geom.embed_vec(&(dt + adv - k.grad_u * r)),
        DerivKind::Lower => {
            let dt_low = k.dg_dt * r + geom.g * dt;
            geom.dual() * dt_low + geom.embed_vec(&adv) + k.grad_u_cart.transpose() * r_c
        }
        DerivKind::Jaumann => {
            0.5 * (tangential_vec(DerivKind::Upper, k, r, dt, dy) + tangential_vec(DerivKind::Lower, k, r, dt, dy))
        }
    }
}

/// Tangential derivative of a tangential 2-tensor from its contravariant jet.
fn tangential_mat(kind: DerivKind, k: &Kinematics, r: &Matrix2<f64>, dt: &Matrix2<f64>, dy: &[Matrix2<f64>; 2]) -> Matrix3<f64> {
    let geom = &k.geom;
    let u = k.motion.u;
    let mut adv = Matrix2::zeros();
    for (kk, d) in dy.iter().enumerate() {
        let gk = k.christoffel(kk);
        adv += u[kk] * (d + gk * r + r * gk.transpose());
    }
    let r_c = geom.embed_mat(r);
    match kind {
        DerivKind::Material | DerivKind::ConformingMaterial => {
            let go = k.motion.observer.g_cart;
            geom.embed_mat(&(dt + adv)) + go * r_c + r_c * go.transpose()
        }
        DerivKind::Upper => {
            let m = k.grad_u;
            geom.embed_mat(&(dt + adv - m * r - r * m.transpose()))
        }
        DerivKind::Lower => {
            let dt_low = k.dg_dt * r * geom.g + geom.g * dt * geom.g + geom.g * r * k.dg_dt;
            let dual = geom.dual();
            let mc = k.grad_u_cart;
            dual * dt_low * dual.transpose() + geom.embed_mat(&adv) + mc.transpose() * r_c + r_c * mc
        }
        DerivKind::Jaumann => {
            0.5 * (tangential_mat(DerivKind::Upper, k, r, dt, dy) + tangential_mat(DerivKind::Lower, k, r, dt, dy))
        }
    }
}

fn split_parts_vec(s: &Split) -> (Vector2<f64>, f64) {
    match s {
        Split::Vector { r, phi } => (*r, *phi),
        _ => panic!("expected a rank-1 split"),
    }
}

fn split_parts_mat(s: &Split) -> (Matrix2<f64>, Vector2<f64>, Vector2<f64>, f64) {
    match s {
        Split::Tensor { r, eta_l, eta_r, phi } => (*r, *eta_l, *eta_r, *phi),
        _ => panic!("expected a rank-2 split"),
    }
}

/// Decomposed assembly of material (and convected) derivatives from split closures.
fn decomposed(kind: DerivKind, field: &FieldClosure, surface: &MovingSurface, e: &Event) -> Result<Cart> {
    if !field.has_split() {
        return Err(Error::MissingSplit);
    }
    if !surface.domain.admissible(e) {
        return Err(Error::Domain { t: e.t, y1: e.y1, y2: e.y2 });
    }
    let k = Kinematics::at(surface, e)?;
    let j = jet1(|ev| field.eval_split(ev), e, surface.fd_step())?;
    let nu = k.geom.nu;
    let b = k.b();
    let u = k.motion.u;
    match field.rank {
        0 => Err(Error::Rank(0)),
        1 => {
            let (r, phi) = split_parts_vec(&j.v);
            let (r_t, phi_t) = split_parts_vec(&j.dt);
            let (r_1, phi_1) = split_parts_vec(&j.dy[0]);
            let (r_2, phi_2) = split_parts_vec(&j.dy[1]);
            let phi_dot = phi_t + u[0] * phi_1 + u[1] * phi_2;
            let tr = tangential_vec(kind, &k, &r, &r_t, &[r_1, r_2]);
            Ok(Cart::Vector(match kind {
                DerivKind::Material | DerivKind::ConformingMaterial => {
                    tr - phi * b + (phi_dot + k.geom.embed_vec(&r).dot(&b)) * nu
                }
                _ => tr + phi_dot * nu,
            }))
        }
        _ => {
            let (r, el, er, phi) = split_parts_mat(&j.v);
            let (r_t, el_t, er_t, phi_t) = split_parts_mat(&j.dt);
            let (r_1, el_1, er_1, phi_1) = split_parts_mat(&j.dy[0]);
            let (r_2, el_2, er_2, phi_2) = split_parts_mat(&j.dy[1]);
            let phi_dot = phi_t + u[0] * phi_1 + u[1] * phi_2;
            let tr = tangential_mat(kind, &k, &r, &r_t, &[r_1, r_2]);
            let tl = tangential_vec(kind, &k, &el, &el_t, &[el_1, el_2]);
            let tright = tangential_vec(kind, &k, &er, &er_t, &[er_1, er_2]);
            let nn = nu * nu.transpose();
            Ok(Cart::Tensor(match kind {
                DerivKind::Material | DerivKind::ConformingMaterial => {
                    let r_c = k.geom.embed_mat(&r);
                    let l_c = k.geom.embed_vec(&el);
                    let rr_c = k.geom.embed_vec(&er);
                    tr - l_c * b.transpose() - b * rr_c.transpose()
                        + (tl + r_c * b - phi * b) * nu.transpose()
                        + nu * (tright + r_c.transpose() * b - phi * b).transpose()
                        + (phi_dot + (l_c + rr_c).dot(&b)) * nn
                }
                _ => tr + tl * nu.transpose() + nu * tright.transpose() + phi_dot * nn,
            }))
        }
    }
}

/// Material derivative D^m R.
pub fn material_dt(field: &FieldClosure, surface: &MovingSurface, e: &Event, path: MaterialPath) -> Result<TensorValue> {
    let c = match path {
        MaterialPath::CartesianProxy => cartesian_dot(field, surface, e)?,
        MaterialPath::Decomposed => decomposed(DerivKind::Material, field, surface, e)?,
    };
    Ok(TensorValue::from_cart(c))
}

/// Corrections turning D^m R into the convected or Jaumann derivative.
fn convected_from_material(kind: DerivKind, dm: Cart, r: Cart, motion: &MotionSample) -> Result<Cart> {
    let gc = motion.gcal;
    let ac = motion.acal;
    Ok(match (dm, r) {
        (Cart::Vector(d), Cart::Vector(r)) => Cart::Vector(match kind {
            DerivKind::Upper => d - gc * r,
            DerivKind::Lower => d + gc.transpose() * r,
            DerivKind::Jaumann => d - ac * r,
            _ => d,
        }),
        (Cart::Tensor(d), Cart::Tensor(r)) => Cart::Tensor(match kind {
            DerivKind::Upper => d - gc * r - r * gc.transpose(),
            DerivKind::Lower => d + gc.transpose() * r + r * gc,
            DerivKind::Jaumann => d - ac * r + r * ac,
            _ => d,
        }),
        (d, _) => return Err(Error::Rank(d.rank())),
    })
}

/// Upper-convected, lower-convected or Jaumann derivative.
pub fn convected_dt(
    kind: DerivKind,
    field: &FieldClosure,
    surface: &MovingSurface,
    e: &Event,
    path: ConvectedPath,
) -> Result<TensorValue> {
    if !matches!(kind, DerivKind::Upper | DerivKind::Lower | DerivKind::Jaumann) {
        return Err(Error::Config(format!("convected_dt does not handle {:?}", kind)));
    }
    let c = match path {
        ConvectedPath::ViaMaterial => {
            let dm = cartesian_dot(field, surface, e)?;
            let motion = motion_at(surface, e)?;
            convected_from_material(kind, dm, field.eval(e)?, &motion)?
        }
        ConvectedPath::Decomposed => decomposed(kind, field, surface, e)?,
        ConvectedPath::Average => {
            if kind != DerivKind::Jaumann {
                return Err(Error::Config("the averaged path defines only the Jaumann derivative".into()));
            }
            let dm = cartesian_dot(field, surface, e)?;
            let motion = motion_at(surface, e)?;
            let r = field.eval(e)?;
            let up = convected_from_material(DerivKind::Upper, dm, r, &motion)?;
            let low = convected_from_material(DerivKind::Lower, dm, r, &motion)?;
            (up + low) * 0.5
        }
    };
    Ok(TensorValue::from_cart(c))
}

/// Any derivative kind by its default path (Cartesian proxy / via material).
pub fn derivative(kind: DerivKind, field: &FieldClosure, surface: &MovingSurface, e: &Event) -> Result<Cart> {
    match kind {
        DerivKind::Material => Ok(material_dt(field, surface, e, MaterialPath::CartesianProxy)?.cart()),
        DerivKind::ConformingMaterial => Err(Error::Config("conforming material derivative needs a Q-tensor field".into())),
        _ => Ok(convected_dt(kind, field, surface, e, ConvectedPath::ViaMaterial)?.cart()),
    }
}

/// Any derivative kind by the decomposed path.
pub fn derivative_decomposed(kind: DerivKind, field: &FieldClosure, surface: &MovingSurface, e: &Event) -> Result<Cart> {
    match kind {
        DerivKind::Material => Ok(material_dt(field, surface, e, MaterialPath::Decomposed)?.cart()),
        DerivKind::ConformingMaterial => Err(Error::Config("conforming material derivative needs a Q-tensor field".into())),
        _ => Ok(convected_dt(kind, field, surface, e, ConvectedPath::Decomposed)?.cart()),
    }
}

/// A tangential field given by contravariant chart components.
#[derive(Clone)]
pub struct TangentialField {
    pub rank: u8,
    eval: SplitFn,
}

impl fmt::Debug for TangentialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TangentialField").field("rank", &self.rank).finish()
    }
}

impl TangentialField {
    pub fn vector(f: impl Fn(&Event) -> Vector2<f64> + Send + Sync + 'static) -> Self {
        TangentialField { rank: 1, eval: Arc::new(move |e| Ok(Split::Vector { r: f(e), phi: 0.0 })) }
    }

    pub fn tensor(f: impl Fn(&Event) -> Matrix2<f64> + Send + Sync + 'static) -> Self {
        TangentialField {
            rank: 2,
            eval: Arc::new(move |e| {
                Ok(Split::Tensor { r: f(e), eta_l: Vector2::zeros(), eta_r: Vector2::zeros(), phi: 0.0 })
            }),
        }
    }

    /// Tangential field supplied in ℝ³ form; evaluation fails on values with a normal part.
    pub fn from_cart(surface: &MovingSurface, f: impl Fn(&Event) -> Cart + Send + Sync + 'static) -> Self {
        let s = surface.clone();
        let rank = f(&Event::new(0.0, 0.0, 0.0)).rank();
        TangentialField {
            rank,
            eval: Arc::new(move |e| {
                let geom = geometry_near(&s, e)?;
                let c = f(e);
                let p = geom.proj();
                let normal = match c {
                    Cart::Vector(v) => (v - p * v).amax(),
                    Cart::Tensor(m) => (m - p * m * p).amax(),
                    Cart::Scalar(_) => return Err(Error::Rank(0)),
                };
                if normal > 1e-8 {
                    return Err(Error::NotTangential(normal));
                }
                Ok(split_cart(&c, &geom))
            }),
        }
    }

    pub fn eval(&self, e: &Event) -> Result<Split> {
        (self.eval)(e)
    }
}

/// Tangential time derivative (material, upper, lower or Jaumann) in ℝ³ form.
pub fn tangential_dt(kind: DerivKind, tfield: &TangentialField, surface: &MovingSurface, e: &Event) -> Result<Cart> {
    let k = Kinematics::at(surface, e)?;
    tangential_with(kind, tfield, surface, e, &k)
}

fn tangential_with(kind: DerivKind, tfield: &TangentialField, surface: &MovingSurface, e: &Event, k: &Kinematics) -> Result<Cart> {
    let j = jet1(|ev| tfield.eval(ev), e, surface.fd_step())?;
    Ok(match tfield.rank {
        1 => {
            let (r, _) = split_parts_vec(&j.v);
            let dy = [split_parts_vec(&j.dy[0]).0, split_parts_vec(&j.dy[1]).0];
            Cart::Vector(tangential_vec(kind, k, &r, &split_parts_vec(&j.dt).0, &dy))
        }
        2 => {
            let (r, ..) = split_parts_mat(&j.v);
            let dy = [split_parts_mat(&j.dy[0]).0, split_parts_mat(&j.dy[1]).0];
            Cart::Tensor(tangential_mat(kind, k, &r, &split_parts_mat(&j.dt).0, &dy))
        }
        r => return Err(Error::Rank(r)),
    })
}

/// Alternative forms of the tangential Jaumann derivative built from the material one.
#[derive(Debug, Clone, PartialEq)]
pub struct JaumannForms {
    pub average: Cart,
    /// ṙ − A r (vectors) or ṙ − A r + r A (2-tensors).
    pub rotation: Cart,
    /// ṙ − 2A Π_Q r; 2-tensors only.
    pub q_projected: Option<Cart>,
}

pub fn tangential_jaumann_forms(tfield: &TangentialField, surface: &MovingSurface, e: &Event) -> Result<JaumannForms> {
    let k = Kinematics::at(surface, e)?;
    let average = tangential_with(DerivKind::Jaumann, tfield, surface, e, &k)?;
    let mat = tangential_with(DerivKind::Material, tfield, surface, e, &k)?;
    let a = k.motion.material.a_cart();
    let r = reconstruct_split(&tfield.eval(e)?, &k.geom);
    Ok(match (mat, r) {
        (Cart::Vector(m), Cart::Vector(r)) => {
            JaumannForms { average, rotation: Cart::Vector(m - a * r), q_projected: None }
        }
        (Cart::Tensor(m), Cart::Tensor(r)) => JaumannForms {
            average,
            rotation: Cart::Tensor(m - a * r + r * a),
            q_projected: Some(Cart::Tensor(m - 2.0 * a * pi_q(&r, &k.geom))),
        },
        (m, _) => return Err(Error::Rank(m.rank())),
    })
}

type QFn = Arc<dyn Fn(&Event) -> Result<QSplit> + Send + Sync>;

/// A Q-tensor field given by its (q, η, β) components.
#[derive(Clone)]
pub struct QField {
    eval: QFn,
    surface: MovingSurface,
}

impl fmt::Debug for QField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QField").field("surface", &self.surface.name).finish()
    }
}

impl QField {
    pub fn new(surface: &MovingSurface, f: impl Fn(&Event) -> QSplit + Send + Sync + 'static) -> Self {
        QField { eval: Arc::new(move |e| Ok(f(e))), surface: surface.clone() }
    }

    pub fn from_fallible(surface: &MovingSurface, f: impl Fn(&Event) -> Result<QSplit> + Send + Sync + 'static) -> Self {
        QField { eval: Arc::new(f), surface: surface.clone() }
    }

    /// Q-tensor field from a symmetric trace-free Cartesian closure.
    pub fn from_cart(surface: &MovingSurface, f: impl Fn(&Event) -> Matrix3<f64> + Send + Sync + 'static) -> Self {
        let s = surface.clone();
        QField { eval: Arc::new(move |e| QSplit::from_cart(&f(e), &geometry_near(&s, e)?)), surface: surface.clone() }
    }

    pub fn eval(&self, e: &Event) -> Result<QSplit> {
        (self.eval)(e)
    }

    /// General rank-2 field carrying the Q-decomposition as its split.
    pub fn to_field(&self) -> FieldClosure {
        let (f1, f2) = (self.eval.clone(), self.eval.clone());
        let (s1, s2) = (self.surface.clone(), self.surface.clone());
        FieldClosure::try_new(2, move |e| Ok(Cart::Tensor(f1(e)?.to_cart(&geometry_near(&s1, e)?))))
            .with_split(move |e| Ok(f2(e)?.to_split(&geometry_near(&s2, e)?)))
    }
}

/// Q-tensor derivatives returned in (q, η, β) components.
pub fn q_dt(kind: DerivKind, q: &QField, surface: &MovingSurface, e: &Event) -> Result<QSplit> {
    if !surface.domain.admissible(e) {
        return Err(Error::Domain { t: e.t, y1: e.y1, y2: e.y2 });
    }
    let k = Kinematics::at(surface, e)?;
    let geom = &k.geom;
    let j = jet1(|ev| q.eval(ev).map(|s| Split::Tensor { r: s.q, eta_l: s.eta, eta_r: s.eta, phi: s.beta }), e, surface.fd_step())?;
    let (qv, eta, _, beta) = split_parts_mat(&j.v);
    let (q_t, eta_t, _, beta_t) = split_parts_mat(&j.dt);
    let (q_1, eta_1, _, beta_1) = split_parts_mat(&j.dy[0]);
    let (q_2, eta_2, _, beta_2) = split_parts_mat(&j.dy[1]);
    let u = k.motion.u;
    let beta_dot = beta_t + u[0] * beta_1 + u[1] * beta_2;
    let b = k.b();
    let eta_c = geom.embed_vec(&eta);
    let (q_rate, eta_rate, beta_rate) = match kind {
        DerivKind::Material => {
            let qdot = tangential_mat(DerivKind::Material, &k, &qv, &q_t, &[q_1, q_2]);
            let etadot = tangential_vec(DerivKind::Material, &k, &eta, &eta_t, &[eta_1, eta_2]);
            let q_c = geom.embed_mat(&qv);
            (
                qdot - 2.0 * pi_q(&(eta_c * b.transpose()), geom),
                etadot + q_c * b - 1.5 * beta * b,
                beta_dot + 2.0 * eta_c.dot(&b),
            )
        }
        DerivKind::Jaumann => (
            tangential_mat(DerivKind::Jaumann, &k, &qv, &q_t, &[q_1, q_2]),
            tangential_vec(DerivKind::Jaumann, &k, &eta, &eta_t, &[eta_1, eta_2]),
            beta_dot,
        ),
        DerivKind::ConformingMaterial => {
            let s = QSplit { q: qv, eta, beta };
            s.is_conforming(geom, 1e-8)?;
            (tangential_mat(DerivKind::Material, &k, &qv, &q_t, &[q_1, q_2]), Vector3::zeros(), beta_dot)
        }
        other => return Err(Error::Config(format!("{:?} does not preserve Q-tensors", other))),
    };
    Ok(QSplit { q: geom.pull_mat(&q_rate), eta: geom.pull_vec(&eta_rate), beta: beta_rate })
}

/// Π_CQ of the Cartesian material derivative, the reference for the conforming material derivative.
pub fn projected_material_dt(q: &QField, surface: &MovingSurface, e: &Event) -> Result<Matrix3<f64>> {
    let dm = material_dt(&q.to_field(), surface, e, MaterialPath::CartesianProxy)?.cart().tensor();
    Ok(pi_cq(&dm, &geometry_near(surface, e)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::scenario;

    #[test]
    fn scalar_dot_examples() {
        let plane = scenario("plane-static").unwrap();
        let f = FieldClosure::new(0, |e| Cart::Scalar(e.t * e.t));
        assert!((scalar_dot(&f, &plane, &Event::new(1.0, 0.1, 0.2)).unwrap() - 2.0).abs() < 1e-9);
        let shear = scenario("plane-shear").unwrap();
        let g = FieldClosure::new(0, |e| Cart::Scalar(e.y1));
        let e = Event::new(0.0, 0.1, 0.4);
        assert!((scalar_dot(&g, &shear, &e).unwrap() - 0.5 * 0.4).abs() < 1e-10);
    }

    #[test]
    fn constant_field_has_zero_rates() {
        let s = scenario("torus-breathing").unwrap();
        let f = FieldClosure::new(1, |_| Cart::Vector(Vector3::z())).with_derived_split(&s);
        let e = Event::new(0.4, 1.0, 2.0);
        for path in [MaterialPath::CartesianProxy, MaterialPath::Decomposed] {
            assert!(material_dt(&f, &s, &e, path).unwrap().cart().amax() < 1e-8);
        }
    }

    #[test]
    fn missing_split_is_reported() {
        let s = scenario("sphere-static").unwrap();
        let f = FieldClosure::new(1, |_| Cart::Vector(Vector3::z()));
        let e = Event::new(0.0, 1.0, 1.0);
        assert_eq!(material_dt(&f, &s, &e, MaterialPath::Decomposed), Err(Error::MissingSplit));
    }

    #[test]
    fn static_plane_tangential_rate() {
        let s = scenario("plane-static").unwrap();
        let r = TangentialField::vector(|e| Vector2::new(e.t, 0.0));
        let v = tangential_dt(DerivKind::Material, &r, &s, &Event::new(0.3, 0.1, 0.1)).unwrap();
        assert!((v.vector() - Vector3::x()).amax() < 1e-10);
    }

    #[test]
    fn normal_part_rejected() {
        let s = scenario("sphere-static").unwrap();
        let r = TangentialField::from_cart(&s, |_| Cart::Vector(Vector3::new(1.0, 0.0, 0.0)));
        assert!(matches!(r.eval(&Event::new(0.0, 1.0, 0.3)), Err(Error::NotTangential(_))));
    }
}
