//! Shell (thin-film) extensions of surface quantities and their limits as the thickness vanishes.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::chart::{Event, MovingSurface};
use crate::error::{Error, Result};
use crate::fd;
use crate::fields::Cart;
use crate::geometry::{geometry_near, motion_at};
use crate::timederiv::{derivative, scalar_dot, DerivKind, FieldClosure};

/// Default offsets in units of the surface length scale.
pub const XI_SEQUENCE: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

/// Errors below this are reported as an exact limit.
pub const EXACT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellEvent {
    pub t: f64,
    pub y1: f64,
    pub y2: f64,
    pub xi: f64,
}

impl ShellEvent {
    pub fn new(e: &Event, xi: f64) -> Self {
        ShellEvent { t: e.t, y1: e.y1, y2: e.y2, xi }
    }

    pub fn base(&self) -> Event {
        Event::new(self.t, self.y1, self.y2)
    }
}

/// Point χ = X + ξν and the frame {∂_1χ, ∂_2χ, ∂_ξχ} as columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellFrame {
    pub point: Vector3<f64>,
    pub frame: Matrix3<f64>,
}

fn check_shell(surface: &MovingSurface, se: &ShellEvent) -> Result<()> {
    let (k1, k2) = geometry_near(surface, &se.base())?.principal_curvatures();
    let margin = (1.0 - se.xi * k1).min(1.0 - se.xi * k2);
    if margin <= 0.0 {
        return Err(Error::ShellDegenerate { xi: se.xi, margin });
    }
    Ok(())
}

fn chi(surface: &MovingSurface, t: f64, y: [f64; 2], xi: f64) -> Result<Vector3<f64>> {
    let g = geometry_near(surface, &Event::new(t, y[0], y[1]))?;
    Ok(g.x + xi * g.nu)
}

/// Shell frame ∂_iχ = ∂_iX − ξ II^j_i ∂_jX, ∂_ξχ = ν.
pub fn shell_chart(surface: &MovingSurface, se: &ShellEvent) -> Result<ShellFrame> {
    check_shell(surface, se)?;
    let g = geometry_near(surface, &se.base())?;
    let tang = g.dx - se.xi * g.dx * g.b_mixed;
    Ok(ShellFrame {
        point: g.x + se.xi * g.nu,
        frame: Matrix3::from_columns(&[tang.column(0).into(), tang.column(1).into(), g.nu]),
    })
}

/// Frame of χ by direct finite differences.
pub fn shell_chart_fd(surface: &MovingSurface, se: &ShellEvent) -> Result<ShellFrame> {
    check_shell(surface, se)?;
    let h = surface.fd_step();
    let y = [se.y1, se.y2];
    let d = fd::grad2(|z| chi(surface, se.t, z, se.xi), y, h)?;
    let dxi = fd::d1(|s| chi(surface, se.t, y, s), se.xi, h)?;
    Ok(ShellFrame { point: chi(surface, se.t, y, se.xi)?, frame: Matrix3::from_columns(&[d[0], d[1], dxi]) })
}

/// Bulk material velocity V̂ = ∂_tχ + u^i ∂_iχ at a shell point.
fn shell_velocity(surface: &MovingSurface, t: f64, y: [f64; 2], xi: f64) -> Result<Vector3<f64>> {
    let h = surface.fd_step();
    let e = Event::new(t, y[0], y[1]);
    let dt = fd::d1(|s| chi(surface, s, y, xi), t, h)?;
    let d = fd::grad2(|z| chi(surface, t, z, xi), y, h)?;
    let u = surface.u(&e);
    Ok(dt + d[0] * u[0] + d[1] * u[1])
}

/// Bulk velocity gradient ∇̂V̂ = Σ_α ∂_αV̂ ⊗ ∂^αχ at a shell point.
pub fn shell_gradient_at(surface: &MovingSurface, se: &ShellEvent) -> Result<Matrix3<f64>> {
    let frame = shell_chart_fd(surface, se)?.frame;
    let h = surface.fd_step();
    let y = [se.y1, se.y2];
    let dv = fd::grad2(|z| shell_velocity(surface, se.t, z, se.xi), y, h)?;
    let dvxi = fd::d1(|s| shell_velocity(surface, se.t, y, s), se.xi, h)?;
    let inv = frame.try_inverse().ok_or(Error::ShellDegenerate { xi: se.xi, margin: 0.0 })?;
    Ok(Matrix3::from_columns(&[dv[0], dv[1], dvxi]) * inv)
}

/// Limit of the bulk velocity gradient as ξ → 0 by Richardson extrapolation of shrinking offsets.
pub fn shell_velocity_gradient(surface: &MovingSurface, e: &Event, xi: f64) -> Result<Matrix3<f64>> {
    let a = shell_gradient_at(surface, &ShellEvent::new(e, xi))?;
    let b = shell_gradient_at(surface, &ShellEvent::new(e, 0.5 * xi))?;
    Ok(2.0 * b - a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    ScalarDot,
    MaterialDt,
    UpperDt,
    LowerDt,
    JaumannDt,
    Deformation,
}

impl Quantity {
    /// The five derivative limits.
    pub const LIMITS: [Quantity; 5] =
        [Quantity::ScalarDot, Quantity::MaterialDt, Quantity::UpperDt, Quantity::LowerDt, Quantity::JaumannDt];
}

/// Extension of a surface field into the shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// R̂(ξ) = R.
    Constant,
    /// R̂(ξ) = R + ξ W with W the field evaluated half a time unit later.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub quantity: Quantity,
    pub xi: Vec<f64>,
    pub error: Vec<f64>,
    /// Least-squares slope of log(error) against log(ξ); absent when the limit is exact.
    pub fitted_order: Option<f64>,
    pub exact: bool,
}

impl ConvergenceReport {
    pub fn passes(&self, min_order: f64) -> bool {
        self.exact || self.fitted_order.is_some_and(|p| p >= min_order)
    }
}

/// Least-squares slope of log(y) against log(x).
pub fn fitted_order(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn extended(field: &FieldClosure, ext: Extension, xi: f64) -> FieldClosure {
    let f = field.clone();
    FieldClosure::try_new(field.rank, move |e| {
        let v = f.eval(e)?;
        Ok(match ext {
            Extension::Constant => v,
            Extension::Linear => v + f.eval(&e.with_t(e.t + 0.5))? * xi,
        })
    })
}

/// Bulk material derivative ∂_t R̂ + u^i ∂_i R̂ at fixed ξ.
fn bulk_material(field: &FieldClosure, surface: &MovingSurface, e: &Event, ext: Extension, xi: f64) -> Result<Cart> {
    let fx = extended(field, ext, xi);
    let h = surface.fd_step();
    let dt = fd::d1(|s| fx.eval(&e.with_t(s)), e.t, h)?;
    let d = fd::grad2(|y| fx.eval(&e.with_y(y)), e.y(), h)?;
    let u = surface.u(e);
    Ok(dt + d[0].clone() * u[0] + d[1].clone() * u[1])
}

fn convected(kind: DerivKind, dm: Cart, r: Cart, grad: &Matrix3<f64>) -> Result<Cart> {
    let w = 0.5 * (grad - grad.transpose());
    Ok(match (dm, r) {
        (Cart::Vector(d), Cart::Vector(r)) => Cart::Vector(match kind {
            DerivKind::Upper => d - grad * r,
            DerivKind::Lower => d + grad.transpose() * r,
            _ => d - w * r,
        }),
        (Cart::Tensor(d), Cart::Tensor(r)) => Cart::Tensor(match kind {
            DerivKind::Upper => d - grad * r - r * grad.transpose(),
            DerivKind::Lower => d + grad.transpose() * r + r * grad,
            _ => d - w * r + r * w,
        }),
        (d, _) => return Err(Error::Rank(d.rank())),
    })
}

/// Bulk value of `quantity` at offset ξ.
pub fn bulk_value(quantity: Quantity, field: &FieldClosure, surface: &MovingSurface, e: &Event, xi: f64, ext: Extension) -> Result<Cart> {
    check_shell(surface, &ShellEvent::new(e, xi))?;
    match quantity {
        Quantity::Deformation => Ok(Cart::Tensor(shell_gradient_at(surface, &ShellEvent::new(e, xi))?)),
        Quantity::ScalarDot | Quantity::MaterialDt => bulk_material(field, surface, e, ext, xi),
        Quantity::UpperDt | Quantity::LowerDt | Quantity::JaumannDt => {
            let kind = match quantity {
                Quantity::UpperDt => DerivKind::Upper,
                Quantity::LowerDt => DerivKind::Lower,
                _ => DerivKind::Jaumann,
            };
            let dm = bulk_material(field, surface, e, ext, xi)?;
            let r = extended(field, ext, xi).eval(e)?;
            convected(kind, dm, r, &shell_gradient_at(surface, &ShellEvent::new(e, xi))?)
        }
    }
}

/// Surface quantity that the bulk value approaches.
pub fn surface_value(quantity: Quantity, field: &FieldClosure, surface: &MovingSurface, e: &Event) -> Result<Cart> {
    match quantity {
        Quantity::Deformation => Ok(Cart::Tensor(motion_at(surface, e)?.gcal)),
        Quantity::ScalarDot => Ok(Cart::Scalar(scalar_dot(field, surface, e)?)),
        Quantity::MaterialDt => derivative(DerivKind::Material, field, surface, e),
        Quantity::UpperDt => derivative(DerivKind::Upper, field, surface, e),
        Quantity::LowerDt => derivative(DerivKind::Lower, field, surface, e),
        Quantity::JaumannDt => derivative(DerivKind::Jaumann, field, surface, e),
    }
}

/// Errors of the bulk expression against the surface quantity over a sequence of offsets.
pub fn limit_study(
    quantity: Quantity,
    field: &FieldClosure,
    surface: &MovingSurface,
    e: &Event,
    xis: &[f64],
    ext: Extension,
) -> Result<ConvergenceReport> {
    let reference = surface_value(quantity, field, surface, e)?;
    let scale = reference.amax().max(1.0);
    let error = xis
        .iter()
        .map(|&xi| bulk_value(quantity, field, surface, e, xi, ext).map(|b| (b - reference.clone()).amax() / scale))
        .collect::<Result<Vec<f64>>>()?;
    let exact = error.iter().all(|&v| v < EXACT_FLOOR);
    let fitted_order = if exact { None } else { Some(fitted_order(xis, &error)) };
    Ok(ConvergenceReport { quantity, xi: xis.to_vec(), error, fitted_order, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::scenario;

    #[test]
    fn frame_at_zero_offset_and_on_plane() {
        let s = scenario("torus-breathing").unwrap();
        let e = Event::new(0.3, 1.0, 2.0);
        let f = shell_chart(&s, &ShellEvent::new(&e, 0.0)).unwrap();
        let g = geometry_near(&s, &e).unwrap();
        assert!((f.frame.fixed_view::<3, 2>(0, 0) - g.dx).amax() < 1e-15);
        let p = scenario("plane-static").unwrap();
        let e = Event::new(0.0, 0.1, 0.2);
        let a = shell_chart(&p, &ShellEvent::new(&e, 0.0)).unwrap();
        let b = shell_chart(&p, &ShellEvent::new(&e, 0.3)).unwrap();
        assert_eq!(a.frame, b.frame);
    }

    #[test]
    fn sphere_frame_matches_fd() {
        let s = scenario("sphere-static").unwrap();
        let se = ShellEvent { t: 0.0, y1: 1.0, y2: 0.5, xi: 0.1 };
        let a = shell_chart(&s, &se).unwrap();
        let b = shell_chart_fd(&s, &se).unwrap();
        assert!((a.frame - b.frame).amax() < 1e-9);
        // Outward normal and B = −Id: the tangent vectors scale by 1 + ξ.
        let g = geometry_near(&s, &se.base()).unwrap();
        assert!((a.frame.column(0) - 1.1 * g.dx.column(0)).amax() < 1e-12);
    }

    #[test]
    fn degenerate_shell_is_rejected() {
        let s = scenario("sphere-static").unwrap();
        let se = ShellEvent { t: 0.0, y1: 1.0, y2: 0.5, xi: -1.5 };
        assert!(matches!(shell_chart(&s, &se), Err(Error::ShellDegenerate { .. })));
    }

    #[test]
    fn order_fit() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        assert!((fitted_order(&x, &y) - 2.0).abs() < 1e-12);
    }
}
