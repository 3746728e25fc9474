//! Structured periodic grids on chart domains and discrete surface operators.

use std::sync::Arc;

use nalgebra::Matrix3;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::chart::{Domain, Event, MovingSurface};
use crate::diffops::{surface_gradient, surface_laplace, LaplacePath};
use crate::error::{Error, Result};
use crate::fd::Lin;
use crate::geometry::{geometry_near, GeometrySample};
use crate::timederiv::FieldClosure;

/// Minimum number of nodes per axis.
pub const MIN_NODES: usize = 16;

/// Uniform node lattice on a fully periodic chart domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: [usize; 2],
    pub lo: [f64; 2],
    pub h: [f64; 2],
}

impl Grid {
    pub fn new(domain: &Domain, n: [usize; 2]) -> Result<Self> {
        if !domain.fully_periodic() {
            return Err(Error::Config("grids require a chart that is periodic in both axes".into()));
        }
        for &k in &n {
            if k < MIN_NODES {
                return Err(Error::Stencil { n: k, min: MIN_NODES });
            }
        }
        let a = domain.axes;
        Ok(Grid { n, lo: [a[0].lo, a[1].lo], h: [a[0].len() / n[0] as f64, a[1].len() / n[1] as f64] })
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n[1] + j
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.n[1], k % self.n[1])
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.lo[0] + i as f64 * self.h[0], self.lo[1] + j as f64 * self.h[1]]
    }

    pub fn event(&self, t: f64, k: usize) -> Event {
        let (i, j) = self.ij(k);
        let y = self.node(i, j);
        Event::new(t, y[0], y[1])
    }

    /// Index of the neighbor shifted by (di, dj) with periodic wrap.
    pub fn shift(&self, k: usize, di: isize, dj: isize) -> usize {
        let (i, j) = self.ij(k);
        let n0 = self.n[0] as isize;
        let n1 = self.n[1] as isize;
        let i2 = (i as isize + di).rem_euclid(n0) as usize;
        let j2 = (j as isize + dj).rem_euclid(n1) as usize;
        self.idx(i2, j2)
    }

    pub fn cell_area(&self) -> f64 {
        self.h[0] * self.h[1]
    }
}

/// Geometry sampled at every node, with face coefficients √g g^{ii} of the conservative stencil.
#[derive(Debug, Clone)]
pub struct GridGeometry {
    pub grid: Grid,
    pub t: f64,
    pub nodes: Vec<GeometrySample>,
    /// √g g^{11} at (i+½, j) and √g g^{22} at (i, j+½).
    pub faces: Vec<[f64; 2]>,
    /// Largest |g^{12}|/g^{11} over nodes; the conservative stencil needs it to vanish.
    pub max_offdiag: f64,
}

impl GridGeometry {
    pub fn sample(surface: &MovingSurface, grid: &Grid, t: f64) -> Result<Self> {
        let mut nodes = Vec::with_capacity(grid.len());
        let mut faces = Vec::with_capacity(grid.len());
        let mut max_offdiag: f64 = 0.0;
        for k in 0..grid.len() {
            let e = grid.event(t, k);
            let g = geometry_near(surface, &surface.domain.reduce(e))?;
            max_offdiag = max_offdiag.max(g.ginv[(0, 1)].abs() / g.ginv[(0, 0)].max(g.ginv[(1, 1)]));
            let e1 = surface.domain.reduce(Event::new(t, e.y1 + 0.5 * grid.h[0], e.y2));
            let e2 = surface.domain.reduce(Event::new(t, e.y1, e.y2 + 0.5 * grid.h[1]));
            let g1 = geometry_near(surface, &e1)?;
            let g2 = geometry_near(surface, &e2)?;
            faces.push([g1.sqrtdetg * g1.ginv[(0, 0)], g2.sqrtdetg * g2.ginv[(1, 1)]]);
            nodes.push(g);
        }
        Ok(GridGeometry { grid: *grid, t, nodes, faces, max_offdiag })
    }

    /// Largest admissible explicit step 0.2·min(g_ii Δy_i²)/L.
    pub fn dt_bound(&self, l: f64) -> f64 {
        let mut m = f64::INFINITY;
        for g in &self.nodes {
            m = m.min(g.g[(0, 0)] * self.grid.h[0].powi(2)).min(g.g[(1, 1)] * self.grid.h[1].powi(2));
        }
        0.2 * m / l
    }

    /// ∫ ρ dS by the node rule.
    pub fn integrate(&self, density: &[f64]) -> f64 {
        let a = self.grid.cell_area();
        self.nodes.iter().zip(density).map(|(g, r)| g.sqrtdetg * a * r).sum()
    }

    /// Total area.
    pub fn area(&self) -> f64 {
        self.integrate(&vec![1.0; self.nodes.len()])
    }

    fn require_orthogonal(&self) -> Result<()> {
        if self.max_offdiag > 1e-12 {
            return Err(Error::Config(format!(
                "conservative stencil needs an orthogonal chart (|g^12|/g^11 = {:e})",
                self.max_offdiag
            )));
        }
        Ok(())
    }
}

/// Values at every node of a grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    pub grid: Grid,
    pub t: f64,
    pub values: Vec<T>,
}

impl<T: Clone> GridField<T> {
    pub fn from_fn(grid: &Grid, t: f64, f: impl Fn(&Event) -> T) -> Self {
        GridField { grid: *grid, t, values: (0..grid.len()).map(|k| f(&grid.event(t, k))).collect() }
    }

    pub fn try_from_fn(grid: &Grid, t: f64, f: impl Fn(&Event) -> Result<T>) -> Result<Self> {
        Ok(GridField { grid: *grid, t, values: (0..grid.len()).map(|k| f(&grid.event(t, k))).collect::<Result<_>>()? })
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> GridField<U> {
        GridField { grid: self.grid, t: self.t, values: self.values.iter().map(f).collect() }
    }
}

/// Central-difference chart partials at every node.
pub fn partials<T: Lin>(geo: &GridGeometry, v: &[T]) -> Vec<[T; 2]> {
    let grid = &geo.grid;
    (0..grid.len())
        .map(|k| {
            let d1 = (v[grid.shift(k, 1, 0)].clone() - v[grid.shift(k, -1, 0)].clone()) * (0.5 / grid.h[0]);
            let d2 = (v[grid.shift(k, 0, 1)].clone() - v[grid.shift(k, 0, -1)].clone()) * (0.5 / grid.h[1]);
            [d1, d2]
        })
        .collect()
}

/// Second-order compact Laplace–Beltrami stencil g^{ij}(D_ij − Γ^k_ij D_k).
pub fn laplace_compact<T: Lin>(geo: &GridGeometry, v: &[T]) -> Vec<T> {
    let grid = &geo.grid;
    let (h1, h2) = (grid.h[0], grid.h[1]);
    (0..grid.len())
        .map(|k| {
            let g = &geo.nodes[k];
            let c = v[k].clone();
            let at = |di, dj| v[grid.shift(k, di, dj)].clone();
            let d11 = (at(1, 0) - c.clone() * 2.0 + at(-1, 0)) * (1.0 / (h1 * h1));
            let d22 = (at(0, 1) - c.clone() * 2.0 + at(0, -1)) * (1.0 / (h2 * h2));
            let d12 = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) * (0.25 / (h1 * h2));
            let d1 = (at(1, 0) - at(-1, 0)) * (0.5 / h1);
            let d2 = (at(0, 1) - at(0, -1)) * (0.5 / h2);
            let hess = [[d11, d12.clone()], [d12, d22]];
            let grad = [d1, d2];
            let mut out = c * 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let mut term = hess[i][j].clone();
                    for (kk, gk) in grad.iter().enumerate() {
                        term = term - gk.clone() * g.gamma[kk][i][j];
                    }
                    out = out + term * g.ginv[(i, j)];
                }
            }
            out
        })
        .collect()
}

/// Conservative five-point stencil (1/√g)∂_i(√g g^{ii} ∂_i ·); requires an orthogonal chart.
pub fn laplace_conservative<T: Lin>(geo: &GridGeometry, v: &[T]) -> Result<Vec<T>> {
    geo.require_orthogonal()?;
    let grid = &geo.grid;
    let (h1, h2) = (grid.h[0], grid.h[1]);
    Ok((0..grid.len())
        .map(|k| {
            let c = v[k].clone();
            let w1 = grid.shift(k, -1, 0);
            let w2 = grid.shift(k, 0, -1);
            let f1p = (v[grid.shift(k, 1, 0)].clone() - c.clone()) * geo.faces[k][0];
            let f1m = (c.clone() - v[w1].clone()) * geo.faces[w1][0];
            let f2p = (v[grid.shift(k, 0, 1)].clone() - c.clone()) * geo.faces[k][1];
            let f2m = (c - v[w2].clone()) * geo.faces[w2][1];
            ((f1p - f1m) * (1.0 / (h1 * h1)) + (f2p - f2m) * (1.0 / (h2 * h2))) * (1.0 / geo.nodes[k].sqrtdetg)
        })
        .collect())
}

/// ∫‖∇_C v‖² dS for the conservative stencil, with `norm2` the pointwise squared norm of a value.
pub fn dirichlet_energy<T: Lin>(geo: &GridGeometry, v: &[T], norm2: impl Fn(&T) -> f64) -> f64 {
    let grid = &geo.grid;
    let (h1, h2) = (grid.h[0], grid.h[1]);
    let a = grid.cell_area();
    let mut s = 0.0;
    for k in 0..grid.len() {
        let d1 = v[grid.shift(k, 1, 0)].clone() - v[k].clone();
        let d2 = v[grid.shift(k, 0, 1)].clone() - v[k].clone();
        s += geo.faces[k][0] * norm2(&d1) / (h1 * h1) + geo.faces[k][1] * norm2(&d2) / (h2 * h2);
    }
    s * a
}

/// Smooth periodic interpolant of node data by the trigonometric series through the nodes.
#[derive(Debug, Clone)]
pub struct TrigInterp {
    grid: Grid,
    coeffs: Arc<Vec<Complex64>>,
}

impl TrigInterp {
    pub fn new(grid: &Grid, values: &[f64]) -> Self {
        let (n0, n1) = (grid.n[0], grid.n[1]);
        let mut planner = FftPlanner::new();
        let f0 = planner.plan_fft_forward(n0);
        let f1 = planner.plan_fft_forward(n1);
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for row in data.chunks_mut(n1) {
            f1.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n0];
        for j in 0..n1 {
            for i in 0..n0 {
                col[i] = data[i * n1 + j];
            }
            f0.process(&mut col);
            for i in 0..n0 {
                data[i * n1 + j] = col[i] / (n0 * n1) as f64;
            }
        }
        TrigInterp { grid: *grid, coeffs: Arc::new(data) }
    }

    fn wavenumber(k: usize, n: usize) -> f64 {
        if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            0.0
        } else {
            k as f64 - n as f64
        }
    }

    pub fn eval(&self, y: [f64; 2]) -> f64 {
        let (n0, n1) = (self.grid.n[0], self.grid.n[1]);
        let scale = [
            2.0 * std::f64::consts::PI / (self.grid.h[0] * n0 as f64),
            2.0 * std::f64::consts::PI / (self.grid.h[1] * n1 as f64),
        ];
        let z0 = (y[0] - self.grid.lo[0]) * scale[0];
        let z1 = (y[1] - self.grid.lo[1]) * scale[1];
        // Nyquist modes are represented by their cosine part.
        let basis = |z: f64, n: usize| -> Vec<Complex64> {
            (0..n)
                .map(|k| {
                    if 2 * k == n {
                        Complex64::new((k as f64 * z).cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, Self::wavenumber(k, n) * z)
                    }
                })
                .collect()
        };
        let b0 = basis(z0, n0);
        let b1 = basis(z1, n1);
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n0 {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..n1 {
                row += self.coeffs[i * n1 + j] * b1[j];
            }
            s += row * b0[i];
        }
        s.re
    }
}

/// Both sides of ⟨Δ_C R, Ψ⟩ = −⟨∇_C R, ∇_C Ψ⟩ integrated over a periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BochnerCheck {
    pub laplace_side: f64,
    pub gradient_side: f64,
    pub rel: f64,
}

/// Integrates both Bochner sides with pointwise closure operators and the node quadrature.
pub fn bochner_check(r: &FieldClosure, psi: &FieldClosure, surface: &MovingSurface, t: f64, n: usize) -> Result<BochnerCheck> {
    let grid = Grid::new(&surface.domain, [n, n])?;
    let geo = GridGeometry::sample(surface, &grid, t)?;
    let mut lap = Vec::with_capacity(grid.len());
    let mut grad = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let e = grid.event(t, k);
        let p = psi.eval(&e)?;
        lap.push(surface_laplace(r, surface, &e, LaplacePath::Beltrami)?.inner(&p));
        grad.push(surface_gradient(r, surface, &e)?.inner(&surface_gradient(psi, surface, &e)?));
    }
    let a = geo.integrate(&lap);
    let b = -geo.integrate(&grad);
    Ok(BochnerCheck { laplace_side: a, gradient_side: b, rel: (a - b).abs() / a.abs().max(b.abs()).max(1e-300) })
}

/// Pointwise squared Frobenius norm.
pub fn frob2(m: &Matrix3<f64>) -> f64 {
    m.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::scenario;

    #[test]
    fn coarse_grids_are_rejected() {
        let s = scenario("torus-static").unwrap();
        assert_eq!(Grid::new(&s.domain, [8, 32]), Err(Error::Stencil { n: 8, min: 16 }));
        let sphere = scenario("sphere-static").unwrap();
        assert!(matches!(Grid::new(&sphere.domain, [32, 32]), Err(Error::Config(_))));
    }

    #[test]
    fn torus_area() {
        let s = scenario("torus-static").unwrap();
        let grid = Grid::new(&s.domain, [32, 32]).unwrap();
        let geo = GridGeometry::sample(&s, &grid, 0.0).unwrap();
        let exact = 4.0 * std::f64::consts::PI.powi(2) * 2.0;
        assert!((geo.area() - exact).abs() < 1e-10);
    }

    #[test]
    fn interpolant_reproduces_nodes_and_modes() {
        let s = scenario("flat-torus").unwrap();
        let grid = Grid::new(&s.domain, [16, 20]).unwrap();
        let f = |y: [f64; 2]| (2.0 * y[0]).sin() * (3.0 * y[1]).cos() + 0.3;
        let v: Vec<f64> = (0..grid.len()).map(|k| f(grid.event(0.0, k).y())).collect();
        let it = TrigInterp::new(&grid, &v);
        assert!((it.eval(grid.event(0.0, 37).y()) - v[37]).abs() < 1e-12);
        assert!((it.eval([0.123, 4.56]) - f([0.123, 4.56])).abs() < 1e-12);
    }

    #[test]
    fn conservative_stencil_is_symmetric() {
        let s = scenario("torus-static").unwrap();
        let grid = Grid::new(&s.domain, [16, 16]).unwrap();
        let geo = GridGeometry::sample(&s, &grid, 0.0).unwrap();
        let a: Vec<f64> = (0..grid.len()).map(|k| ((k * 7919) % 13) as f64 / 13.0).collect();
        let b: Vec<f64> = (0..grid.len()).map(|k| ((k * 104729) % 17) as f64 / 17.0).collect();
        let la = laplace_conservative(&geo, &a).unwrap();
        let lb = laplace_conservative(&geo, &b).unwrap();
        let ab: Vec<f64> = la.iter().zip(&b).map(|(x, y)| x * y).collect();
        let ba: Vec<f64> = lb.iter().zip(&a).map(|(x, y)| x * y).collect();
        assert!((geo.integrate(&ab) - geo.integrate(&ba)).abs() < 1e-10);
        let aa: Vec<f64> = la.iter().zip(&a).map(|(x, y)| x * y).collect();
        assert!((geo.integrate(&aa) + dirichlet_energy(&geo, &a, |x| x * x)).abs() < 1e-9);
    }
}
