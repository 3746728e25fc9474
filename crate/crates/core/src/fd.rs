//! Fourth-order central finite-difference stencils.

use std::ops::{Add, Mul, Sub};

use crate::error::Result;

/// Values that finite-difference stencils can combine linearly.
pub trait Lin: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl<T> Lin for T where T: Clone + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

/// First derivative of `f` at `x` by the five-point stencil.
pub fn d1<T: Lin>(f: impl Fn(f64) -> Result<T>, x: f64, h: f64) -> Result<T> {
    let fp1 = f(x + h)?;
    let fm1 = f(x - h)?;
    let fp2 = f(x + 2.0 * h)?;
    let fm2 = f(x - 2.0 * h)?;
    Ok(((fp1 - fm1) * 8.0 - (fp2 - fm2)) * (1.0 / (12.0 * h)))
}

/// Second derivative of `f` at `x` by the five-point stencil.
pub fn d2<T: Lin>(f: impl Fn(f64) -> Result<T>, x: f64, h: f64) -> Result<T> {
    let f0 = f(x)?;
    let fp1 = f(x + h)?;
    let fm1 = f(x - h)?;
    let fp2 = f(x + 2.0 * h)?;
    let fm2 = f(x - 2.0 * h)?;
    Ok(((fp1 + fm1) * 16.0 - (fp2 + fm2) - f0 * 30.0) * (1.0 / (12.0 * h * h)))
}

/// Gradient of `f` over the two chart coordinates.
pub fn grad2<T: Lin>(f: impl Fn([f64; 2]) -> Result<T>, y: [f64; 2], h: f64) -> Result<[T; 2]> {
    let g0 = d1(|s| f([s, y[1]]), y[0], h)?;
    let g1 = d1(|s| f([y[0], s]), y[1], h)?;
    Ok([g0, g1])
}

/// Symmetric Hessian of `f` over the two chart coordinates; the mixed entry uses nested stencils.
pub fn hess2<T: Lin>(f: impl Fn([f64; 2]) -> Result<T>, y: [f64; 2], h: f64) -> Result<[[T; 2]; 2]> {
    let h00 = d2(|s| f([s, y[1]]), y[0], h)?;
    let h11 = d2(|s| f([y[0], s]), y[1], h)?;
    let h01 = d1(|s| d1(|r| f([r, s]), y[0], h), y[1], h)?;
    Ok([[h00, h01.clone()], [h01, h11]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_is_exact() {
        let f = |x: f64| Ok::<f64, crate::error::Error>(x.powi(4) - 2.0 * x.powi(3) + x);
        let x = 0.7_f64;
        let exact = 4.0 * x.powi(3) - 6.0 * x * x + 1.0;
        assert!((d1(f, x, 1e-2).unwrap() - exact).abs() < 1e-10);
        let exact2 = 12.0 * x * x - 12.0 * x;
        assert!((d2(f, x, 1e-2).unwrap() - exact2).abs() < 1e-8);
    }

    #[test]
    fn mixed_partial() {
        let f = |y: [f64; 2]| Ok::<f64, crate::error::Error>((y[0] * y[1]).sin());
        let y = [0.3, 1.1];
        let hs = hess2(f, y, 1e-3).unwrap();
        let p = y[0] * y[1];
        let exact = p.cos() - p * p.sin();
        assert!((hs[0][1] - exact).abs() < 1e-8);
        assert!((hs[0][0] + y[1] * y[1] * p.sin()).abs() < 1e-8);
    }

    #[test]
    fn fourth_order_ratio() {
        let f = |x: f64| Ok::<f64, crate::error::Error>(x.exp().sin());
        let x = 0.4_f64;
        let exact = x.exp() * x.exp().cos();
        let e1 = (d1(f, x, 0.1).unwrap() - exact).abs();
        let e2 = (d1(f, x, 0.05).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
    }
}
