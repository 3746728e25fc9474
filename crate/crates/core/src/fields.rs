//! Field values in Cartesian and tangential–normal form, and the orthogonal projections.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometrySample;

/// Cartesian proxy of a rank 0, 1 or 2 field value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cart {
    Scalar(f64),
    Vector(Vector3<f64>),
    Tensor(Matrix3<f64>),
}

impl Cart {
    pub fn rank(&self) -> u8 {
        match self {
            Cart::Scalar(_) => 0,
            Cart::Vector(_) => 1,
            Cart::Tensor(_) => 2,
        }
    }

    pub fn zero(rank: u8) -> Self {
        match rank {
            0 => Cart::Scalar(0.0),
            1 => Cart::Vector(Vector3::zeros()),
            _ => Cart::Tensor(Matrix3::zeros()),
        }
    }

    pub fn components(&self) -> Vec<f64> {
        match self {
            Cart::Scalar(s) => vec![*s],
            Cart::Vector(v) => v.iter().copied().collect(),
            Cart::Tensor(m) => m.iter().copied().collect(),
        }
    }

    pub fn from_components(rank: u8, c: &[f64]) -> Self {
        match rank {
            0 => Cart::Scalar(c[0]),
            1 => Cart::Vector(Vector3::from_column_slice(c)),
            _ => Cart::Tensor(Matrix3::from_column_slice(c)),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            Cart::Scalar(s) => s.abs(),
            Cart::Vector(v) => v.norm(),
            Cart::Tensor(m) => m.norm(),
        }
    }

    /// Largest absolute component.
    pub fn amax(&self) -> f64 {
        match self {
            Cart::Scalar(s) => s.abs(),
            Cart::Vector(v) => v.amax(),
            Cart::Tensor(m) => m.amax(),
        }
    }

    /// Full contraction ⟨a, b⟩.
    pub fn inner(&self, other: &Cart) -> f64 {
        match (self, other) {
            (Cart::Scalar(a), Cart::Scalar(b)) => a * b,
            (Cart::Vector(a), Cart::Vector(b)) => a.dot(b),
            (Cart::Tensor(a), Cart::Tensor(b)) => a.dot(b),
            _ => panic!("inner product of mismatched ranks"),
        }
    }

    pub fn vector(&self) -> Vector3<f64> {
        match self {
            Cart::Vector(v) => *v,
            _ => panic!("expected a rank-1 value"),
        }
    }

    pub fn tensor(&self) -> Matrix3<f64> {
        match self {
            Cart::Tensor(m) => *m,
            _ => panic!("expected a rank-2 value"),
        }
    }

    pub fn scalar(&self) -> f64 {
        match self {
            Cart::Scalar(s) => *s,
            _ => panic!("expected a rank-0 value"),
        }
    }
}

impl Add for Cart {
    type Output = Cart;
    fn add(self, o: Cart) -> Cart {
        match (self, o) {
            (Cart::Scalar(a), Cart::Scalar(b)) => Cart::Scalar(a + b),
            (Cart::Vector(a), Cart::Vector(b)) => Cart::Vector(a + b),
            (Cart::Tensor(a), Cart::Tensor(b)) => Cart::Tensor(a + b),
            _ => panic!("sum of mismatched ranks"),
        }
    }
}

impl Sub for Cart {
    type Output = Cart;
    fn sub(self, o: Cart) -> Cart {
        self + o * -1.0
    }
}

impl Mul<f64> for Cart {
    type Output = Cart;
    fn mul(self, s: f64) -> Cart {
        match self {
            Cart::Scalar(a) => Cart::Scalar(a * s),
            Cart::Vector(a) => Cart::Vector(a * s),
            Cart::Tensor(a) => Cart::Tensor(a * s),
        }
    }
}

/// Tangential–normal split with tangential parts in contravariant chart components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Split {
    Scalar(f64),
    Vector { r: Vector2<f64>, phi: f64 },
    Tensor { r: Matrix2<f64>, eta_l: Vector2<f64>, eta_r: Vector2<f64>, phi: f64 },
}

impl Split {
    pub fn rank(&self) -> u8 {
        match self {
            Split::Scalar(_) => 0,
            Split::Vector { .. } => 1,
            Split::Tensor { .. } => 2,
        }
    }

    fn zip(self, o: Split, f: impl Fn(f64, f64) -> f64) -> Split {
        match (self, o) {
            (Split::Scalar(a), Split::Scalar(b)) => Split::Scalar(f(a, b)),
            (Split::Vector { r, phi }, Split::Vector { r: r2, phi: p2 }) => {
                Split::Vector { r: r.zip_map(&r2, &f), phi: f(phi, p2) }
            }
            (
                Split::Tensor { r, eta_l, eta_r, phi },
                Split::Tensor { r: r2, eta_l: l2, eta_r: e2, phi: p2 },
            ) => Split::Tensor {
                r: r.zip_map(&r2, &f),
                eta_l: eta_l.zip_map(&l2, &f),
                eta_r: eta_r.zip_map(&e2, &f),
                phi: f(phi, p2),
            },
            _ => panic!("combination of mismatched split ranks"),
        }
    }

    /// Largest absolute difference between two splits of the same rank.
    pub fn max_abs_diff(&self, o: &Split) -> f64 {
        let d = self.zip(*o, |a, b| a - b);
        match d {
            Split::Scalar(a) => a.abs(),
            Split::Vector { r, phi } => r.amax().max(phi.abs()),
            Split::Tensor { r, eta_l, eta_r, phi } => r.amax().max(eta_l.amax()).max(eta_r.amax()).max(phi.abs()),
        }
    }
}

impl Add for Split {
    type Output = Split;
    fn add(self, o: Split) -> Split {
        self.zip(o, |a, b| a + b)
    }
}

impl Sub for Split {
    type Output = Split;
    fn sub(self, o: Split) -> Split {
        self.zip(o, |a, b| a - b)
    }
}

impl Mul<f64> for Split {
    type Output = Split;
    fn mul(self, s: f64) -> Split {
        self.zip(self, |a, _| a * s)
    }
}

/// Which half of a [`TensorValue`] is authoritative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sync {
    Cartesian,
    Split,
    Both,
}

/// A field value in dual form.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorValue {
    pub rank: u8,
    pub cart: Option<Cart>,
    pub split: Option<Split>,
    pub sync: Sync,
}

impl TensorValue {
    pub fn from_cart(c: Cart) -> Self {
        TensorValue { rank: c.rank(), cart: Some(c), split: None, sync: Sync::Cartesian }
    }

    pub fn from_split(s: Split) -> Self {
        TensorValue { rank: s.rank(), cart: None, split: Some(s), sync: Sync::Split }
    }

    /// Cartesian proxy; panics if only the split half is populated.
    pub fn cart(&self) -> Cart {
        self.cart.expect("Cartesian half not populated")
    }
}

/// Splits a Cartesian proxy at the frame of `geom`.
pub fn split_cart(c: &Cart, geom: &GeometrySample) -> Split {
    let nu = geom.nu;
    let p = geom.proj();
    match c {
        Cart::Scalar(s) => Split::Scalar(*s),
        Cart::Vector(v) => Split::Vector { r: geom.pull_vec(v), phi: v.dot(&nu) },
        Cart::Tensor(m) => Split::Tensor {
            r: geom.pull_mat(&(p * m * p)),
            eta_l: geom.pull_vec(&(m * nu)),
            eta_r: geom.pull_vec(&(m.transpose() * nu)),
            phi: nu.dot(&(m * nu)),
        },
    }
}

/// Assembles the Cartesian proxy from a split over the frame {∂_iX, ν}.
pub fn reconstruct_split(s: &Split, geom: &GeometrySample) -> Cart {
    let nu = geom.nu;
    match s {
        Split::Scalar(x) => Cart::Scalar(*x),
        Split::Vector { r, phi } => Cart::Vector(geom.embed_vec(r) + *phi * nu),
        Split::Tensor { r, eta_l, eta_r, phi } => Cart::Tensor(
            geom.embed_mat(r)
                + geom.embed_vec(eta_l) * nu.transpose()
                + nu * geom.embed_vec(eta_r).transpose()
                + *phi * nu * nu.transpose(),
        ),
    }
}

/// Populates the split half from the Cartesian half.
pub fn split(value: &TensorValue, geom: &GeometrySample) -> Result<TensorValue> {
    if value.rank == 0 {
        return Err(Error::Rank(0));
    }
    let c = value.cart.ok_or(Error::Config("split needs a Cartesian proxy".into()))?;
    Ok(TensorValue { rank: value.rank, cart: Some(c), split: Some(split_cart(&c, geom)), sync: Sync::Both })
}

/// Populates the Cartesian half from the split half.
pub fn reconstruct(value: &TensorValue, geom: &GeometrySample) -> Result<TensorValue> {
    let s = value.split.ok_or(Error::Config("reconstruct needs a split".into()))?;
    Ok(TensorValue { rank: value.rank, cart: Some(reconstruct_split(&s, geom)), split: Some(s), sync: Sync::Both })
}

/// Target space of [`project`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Tangential,
    Q,
    CQ,
}

/// Asymmetry and trace of a Cartesian 2-tensor.
pub fn q_residuals(m: &Matrix3<f64>) -> (f64, f64) {
    ((m - m.transpose()).amax(), m.trace().abs())
}

/// Π_Q r = ½(r + rᵀ − (Tr r) Id_S) on an ℝ³-form tangential 2-tensor.
pub fn pi_q(r: &Matrix3<f64>, geom: &GeometrySample) -> Matrix3<f64> {
    0.5 * (r + r.transpose() - r.trace() * geom.proj())
}

/// Π_CQ Q = Q − Π_S(Qν)⊗ν − ν⊗Π_S(Qν).
pub fn pi_cq(q: &Matrix3<f64>, geom: &GeometrySample) -> Matrix3<f64> {
    let eta = geom.proj() * (q * geom.nu);
    q - eta * geom.nu.transpose() - geom.nu * eta.transpose()
}

pub fn project(space: Space, value: &TensorValue, geom: &GeometrySample) -> Result<TensorValue> {
    let c = match (value.cart, value.split) {
        (Some(c), _) => c,
        (None, Some(s)) => reconstruct_split(&s, geom),
        (None, None) => return Err(Error::Config("empty tensor value".into())),
    };
    let p = geom.proj();
    let out = match (space, c) {
        (Space::Tangential, Cart::Vector(v)) => Cart::Vector(p * v),
        (Space::Tangential, Cart::Tensor(m)) => Cart::Tensor(p * m * p),
        (Space::Q, Cart::Tensor(m)) => {
            let normal = (m - p * m * p).amax();
            if normal > 1e-8 {
                return Err(Error::NotTangential(normal));
            }
            Cart::Tensor(pi_q(&m, geom))
        }
        (Space::CQ, Cart::Tensor(m)) => {
            let (asym, trace) = q_residuals(&m);
            if asym > 1e-8 || trace > 1e-8 {
                return Err(Error::NotQTensor { asym, trace });
            }
            Cart::Tensor(pi_cq(&m, geom))
        }
        (_, c) => return Err(Error::Rank(c.rank())),
    };
    Ok(TensorValue::from_cart(out))
}

/// Q-tensor components (q, η, β) with q and η in contravariant chart components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSplit {
    pub q: Matrix2<f64>,
    pub eta: Vector2<f64>,
    pub beta: f64,
}

impl QSplit {
    pub fn zero() -> Self {
        QSplit { q: Matrix2::zeros(), eta: Vector2::zeros(), beta: 0.0 }
    }

    /// 𝒬[q, η, β] = q + η⊗ν + ν⊗η + β(ν⊗ν − ½Id_S).
    pub fn to_cart(&self, geom: &GeometrySample) -> Matrix3<f64> {
        let nu = geom.nu;
        let eta = geom.embed_vec(&self.eta);
        geom.embed_mat(&self.q)
            + eta * nu.transpose()
            + nu * eta.transpose()
            + self.beta * (nu * nu.transpose() - 0.5 * geom.proj())
    }

    /// Inverse of [`QSplit::to_cart`] on Q-tensors.
    pub fn from_cart(m: &Matrix3<f64>, geom: &GeometrySample) -> Result<Self> {
        let (asym, trace) = q_residuals(m);
        let scale = m.amax().max(1.0);
        if asym > 1e-8 * scale || trace > 1e-8 * scale {
            return Err(Error::NotQTensor { asym, trace });
        }
        Ok(Self::from_cart_unchecked(m, geom))
    }

    pub(crate) fn from_cart_unchecked(m: &Matrix3<f64>, geom: &GeometrySample) -> Self {
        let nu = geom.nu;
        let p = geom.proj();
        let beta = nu.dot(&(m * nu));
        QSplit { q: geom.pull_mat(&(p * m * p + 0.5 * beta * p)), eta: geom.pull_vec(&(m * nu)), beta }
    }

    /// The same value as a general rank-2 split.
    pub fn to_split(&self, geom: &GeometrySample) -> Split {
        Split::Tensor { r: self.q - 0.5 * self.beta * geom.ginv, eta_l: self.eta, eta_r: self.eta, phi: self.beta }
    }

    /// Symmetry and g-trace residual of q.
    pub fn q_residuals(&self, geom: &GeometrySample) -> (f64, f64) {
        ((self.q - self.q.transpose()).amax(), (geom.g * self.q).trace().abs())
    }

    pub fn is_conforming(&self, geom: &GeometrySample, tol: f64) -> Result<()> {
        let n = (self.eta.transpose() * geom.g * self.eta)[(0, 0)].max(0.0).sqrt();
        if n > tol {
            Err(Error::NotConforming(n))
        } else {
            Ok(())
        }
    }
}

/// Squared norm of a tangential vector with contravariant components.
pub fn norm2_vec(r: &Vector2<f64>, geom: &GeometrySample) -> f64 {
    (r.transpose() * geom.g * r)[(0, 0)]
}

/// Squared norm of a tangential 2-tensor with contravariant components.
pub fn norm2_mat(r: &Matrix2<f64>, geom: &GeometrySample) -> f64 {
    (geom.g * r * geom.g * r.transpose()).trace()
}
