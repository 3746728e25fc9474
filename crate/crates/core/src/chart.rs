//! Chart evaluation, derivative jets and observer pairs.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3x2, Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;

/// A time and a pair of chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub y1: f64,
    pub y2: f64,
}

impl Event {
    pub fn new(t: f64, y1: f64, y2: f64) -> Self {
        Event { t, y1, y2 }
    }

    pub fn y(&self) -> [f64; 2] {
        [self.y1, self.y2]
    }

    pub fn with_y(&self, y: [f64; 2]) -> Self {
        Event { t: self.t, y1: y[0], y2: y[1] }
    }

    pub fn with_t(&self, t: f64) -> Self {
        Event { t, ..*self }
    }
}

/// One coordinate axis of a chart domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Axis {
    pub fn periodic(lo: f64, hi: f64) -> Self {
        Axis { lo, hi, periodic: true }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Axis { lo, hi, periodic: false }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    fn reduce(&self, y: f64) -> f64 {
        if self.periodic {
            self.lo + (y - self.lo).rem_euclid(self.len())
        } else {
            y
        }
    }
}

/// Rectangular chart domain with an exclusion band on non-periodic axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub axes: [Axis; 2],
    pub band: f64,
}

impl Domain {
    pub fn new(a1: Axis, a2: Axis, band: f64) -> Self {
        Domain { axes: [a1, a2], band }
    }

    pub fn fully_periodic(&self) -> bool {
        self.axes.iter().all(|a| a.periodic)
    }

    /// Reduces periodic coordinates to the fundamental cell.
    pub fn reduce(&self, e: Event) -> Event {
        Event::new(e.t, self.axes[0].reduce(e.y1), self.axes[1].reduce(e.y2))
    }

    /// Inside the domain minus the exclusion band.
    pub fn admissible(&self, e: &Event) -> bool {
        e.y().iter().zip(&self.axes).all(|(&y, a)| {
            y.is_finite() && (a.periodic || (y >= a.lo + self.band && y <= a.hi - self.band))
        }) && e.t.is_finite()
    }

    /// Strictly inside the open chart domain; stencil points only need this.
    pub fn inside(&self, e: &Event) -> bool {
        e.y().iter().zip(&self.axes).all(|(&y, a)| y.is_finite() && (a.periodic || (y > a.lo && y < a.hi)))
    }

    /// Uniform sample from the admissible set shrunk by `margin` on bounded axes.
    pub fn sample<R: Rng>(&self, rng: &mut R, margin: f64) -> [f64; 2] {
        let mut y = [0.0; 2];
        for (k, a) in self.axes.iter().enumerate() {
            y[k] = if a.periodic {
                rng.gen_range(a.lo..a.hi)
            } else {
                rng.gen_range(a.lo + self.band + margin..a.hi - self.band - margin)
            };
        }
        y
    }
}

/// Position and first/second space and time derivatives of a chart at one event.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartJet {
    pub x: Vector3<f64>,
    pub dx: Matrix3x2<f64>,
    pub ddx: [[Vector3<f64>; 2]; 2],
    pub vt: Vector3<f64>,
    pub dvt: Matrix3x2<f64>,
}

impl ChartJet {
    pub fn max_abs_diff(&self, other: &ChartJet) -> f64 {
        let mut m = (self.x - other.x).amax();
        m = m.max((self.dx - other.dx).amax());
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.ddx[i][j] - other.ddx[i][j]).amax());
            }
        }
        m.max((self.vt - other.vt).amax()).max((self.dvt - other.dvt).amax())
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = self.x.amax().max(self.dx.amax()).max(self.vt.amax()).max(self.dvt.amax());
        for row in &self.ddx {
            for v in row {
                m = m.max(v.amax());
            }
        }
        m
    }

    /// Asymmetry of the second chart derivatives.
    pub fn symmetry_residual(&self) -> f64 {
        (self.ddx[0][1] - self.ddx[1][0]).amax()
    }
}

pub type ChartFn = Arc<dyn Fn(f64, [f64; 2]) -> Vector3<f64> + Send + Sync>;
pub type JetFn = Arc<dyn Fn(f64, [f64; 2]) -> ChartJet + Send + Sync>;
pub type VelocityFn = Arc<dyn Fn(f64, [f64; 2]) -> Vector2<f64> + Send + Sync>;

/// How chart derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiffMode {
    Analytic,
    FiniteDifference { step: f64 },
}

/// One chart of a moving surface together with the relative velocity of the material.
#[derive(Clone)]
pub struct MovingSurface {
    pub name: String,
    pub domain: Domain,
    pub diff_mode: DiffMode,
    /// Typical coordinate extent; finite-difference steps scale with it.
    pub coord_scale: f64,
    /// Typical radius of curvature; shell thicknesses scale with it.
    pub length_scale: f64,
    /// The chart does not depend on time.
    pub is_static: bool,
    chart: ChartFn,
    jet: Option<JetFn>,
    u_field: VelocityFn,
}

impl fmt::Debug for MovingSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MovingSurface")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("diff_mode", &self.diff_mode)
            .field("is_static", &self.is_static)
            .finish()
    }
}

/// Default relative finite-difference step.
pub const FD_STEP: f64 = 1e-3;

impl MovingSurface {
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        chart: impl Fn(f64, [f64; 2]) -> Vector3<f64> + Send + Sync + 'static,
    ) -> Self {
        MovingSurface {
            name: name.into(),
            domain,
            diff_mode: DiffMode::FiniteDifference { step: FD_STEP },
            coord_scale: 1.0,
            length_scale: 1.0,
            is_static: false,
            chart: Arc::new(chart),
            jet: None,
            u_field: Arc::new(|_, _| Vector2::zeros()),
        }
    }

    /// Installs closed-form derivatives and switches to analytic mode.
    pub fn with_jet(mut self, jet: impl Fn(f64, [f64; 2]) -> ChartJet + Send + Sync + 'static) -> Self {
        self.jet = Some(Arc::new(jet));
        self.diff_mode = DiffMode::Analytic;
        self
    }

    pub fn with_u(mut self, u: impl Fn(f64, [f64; 2]) -> Vector2<f64> + Send + Sync + 'static) -> Self {
        self.u_field = Arc::new(u);
        self
    }

    pub fn with_mode(mut self, mode: DiffMode) -> Self {
        self.diff_mode = mode;
        self
    }

    pub fn with_static(mut self, is_static: bool) -> Self {
        self.is_static = is_static;
        self
    }

    pub fn with_scales(mut self, coord_scale: f64, length_scale: f64) -> Self {
        self.coord_scale = coord_scale;
        self.length_scale = length_scale;
        self
    }

    pub fn has_analytic_jet(&self) -> bool {
        self.jet.is_some()
    }

    /// Step used by space and time stencils on this surface.
    pub fn fd_step(&self) -> f64 {
        match self.diff_mode {
            DiffMode::FiniteDifference { step } => step * self.coord_scale,
            DiffMode::Analytic => FD_STEP * self.coord_scale,
        }
    }

    /// Chart position; periodic coordinates are reduced first.
    pub fn position(&self, e: &Event) -> Vector3<f64> {
        let e = self.domain.reduce(*e);
        (self.chart)(e.t, e.y())
    }

    /// Contravariant components of the relative velocity u.
    pub fn u(&self, e: &Event) -> Vector2<f64> {
        let e = self.domain.reduce(*e);
        (self.u_field)(e.t, e.y())
    }

    /// Jet at an admissible event.
    pub fn has_jet(&self) -> bool {
        self.jet.is_some()
    }

    pub fn eval_jet(&self, e: &Event) -> Result<ChartJet> {
        if !self.domain.admissible(e) {
            return Err(Error::Domain { t: e.t, y1: e.y1, y2: e.y2 });
        }
        self.jet_at(e)
    }

    /// Jet at any event inside the open chart domain (used at stencil points).
    pub fn jet_at(&self, e: &Event) -> Result<ChartJet> {
        if !self.domain.inside(e) {
            return Err(Error::Domain { t: e.t, y1: e.y1, y2: e.y2 });
        }
        let e = self.domain.reduce(*e);
        let jet = match (&self.diff_mode, &self.jet) {
            (DiffMode::Analytic, Some(jet)) => jet(e.t, e.y()),
            (DiffMode::FiniteDifference { step }, _) => self.fd_jet(&e, step * self.coord_scale)?,
            (DiffMode::Analytic, None) => self.fd_jet(&e, FD_STEP * self.coord_scale)?,
        };
        let det = (jet.dx.transpose() * jet.dx).determinant();
        if !(det >= 1e-12) {
            return Err(Error::NonEmbedding { det_g: det });
        }
        Ok(jet)
    }

    /// Jet by fourth-order central differences of the chart closure.
    pub fn fd_jet(&self, e: &Event, h: f64) -> Result<ChartJet> {
        let chart = &self.chart;
        let dom = &self.domain;
        let at = |t: f64, y: [f64; 2]| -> Result<Vector3<f64>> {
            let r = dom.reduce(Event::new(t, y[0], y[1]));
            Ok(chart(r.t, r.y()))
        };
        let y = e.y();
        let t = e.t;
        let x = at(t, y)?;
        let g = fd::grad2(|z| at(t, z), y, h)?;
        let hs = fd::hess2(|z| at(t, z), y, h)?;
        let vt = fd::d1(|s| at(s, y), t, h)?;
        let dvt = fd::grad2(|z| fd::d1(|s| at(s, z), t, h), y, h)?;
        Ok(ChartJet {
            x,
            dx: Matrix3x2::from_columns(&g),
            ddx: hs,
            vt,
            dvt: Matrix3x2::from_columns(&dvt),
        })
    }

    /// Uniformly sampled admissible events with times in `[t0, t1]`.
    pub fn sample_events<R: Rng>(&self, rng: &mut R, n: usize, t0: f64, t1: f64) -> Vec<Event> {
        let margin = 0.02 * self.coord_scale;
        (0..n)
            .map(|_| {
                let y = self.domain.sample(rng, margin);
                let t = if t1 > t0 { rng.gen_range(t0..t1) } else { t0 };
                Event::new(t, y[0], y[1])
            })
            .collect()
    }
}

/// A time-dependent reparameterization z ↦ φ_t(z) of a chart domain.
#[derive(Clone)]
pub struct ChartMotion {
    map: Arc<dyn Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync>,
    step: f64,
}

impl fmt::Debug for ChartMotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMotion").field("step", &self.step).finish()
    }
}

impl ChartMotion {
    pub fn new(map: impl Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync + 'static) -> Self {
        ChartMotion { map: Arc::new(map), step: FD_STEP }
    }

    pub fn identity() -> Self {
        ChartMotion::new(|_, z| z)
    }

    /// Coordinates advancing along one axis at constant rate.
    pub fn rotation(axis: usize, omega: f64) -> Self {
        ChartMotion::new(move |t, mut z| {
            z[axis] += omega * t;
            z
        })
    }

    pub fn apply(&self, t: f64, z: [f64; 2]) -> [f64; 2] {
        (self.map)(t, z)
    }

    /// Jacobian ∂φ/∂z and time rate ∂_t φ.
    pub fn derivatives(&self, t: f64, z: [f64; 2]) -> Result<(Matrix2<f64>, Vector2<f64>)> {
        let f = |s: f64, w: [f64; 2]| -> Result<Vector2<f64>> {
            let p = (self.map)(s, w);
            Ok(Vector2::new(p[0], p[1]))
        };
        let h = self.step;
        let g = fd::grad2(|w| f(t, w), z, h)?;
        let rate = fd::d1(|s| f(s, z), t, h)?;
        let jac = Matrix2::from_columns(&g);
        let det = jac.determinant();
        if det.abs() < 1e-10 || !det.is_finite() {
            return Err(Error::Inversion { y1: z[0], y2: z[1], det });
        }
        Ok((jac, rate))
    }
}

/// Two observers of the same moving surface and the map between their events.
#[derive(Debug, Clone)]
pub struct ObserverPair {
    pub a: MovingSurface,
    pub b: MovingSurface,
    pub motion: ChartMotion,
}

impl ObserverPair {
    /// Event of observer A at the same spatial point and time as `e_b` of observer B.
    pub fn map_event(&self, e_b: &Event) -> Event {
        let y = self.motion.apply(e_b.t, e_b.y());
        self.a.domain.reduce(Event::new(e_b.t, y[0], y[1]))
    }
}

/// Builds observer B with chart X_B(t, z) = X_A(t, φ_t(z)) keeping the material velocity fixed.
pub fn make_observer_pair(surface: &MovingSurface, chart_motion: ChartMotion) -> ObserverPair {
    let a = surface.clone();
    let chart_a = a.chart.clone();
    let dom = a.domain;
    let m1 = chart_motion.clone();
    let chart_b = move |t: f64, z: [f64; 2]| {
        let y = dom.reduce(Event::new(t, 0.0, 0.0).with_y(m1.apply(t, z)));
        chart_a(t, y.y())
    };
    let u_a = a.u_field.clone();
    let m2 = chart_motion.clone();
    let u_b = move |t: f64, z: [f64; 2]| {
        let y = dom.reduce(Event::new(t, 0.0, 0.0).with_y(m2.apply(t, z)));
        match m2.derivatives(t, z) {
            Ok((jac, rate)) => jac.try_inverse().map(|inv| inv * (u_a(t, y.y()) - rate)).unwrap_or_else(|| Vector2::repeat(f64::NAN)),
            Err(_) => Vector2::repeat(f64::NAN),
        }
    };
    let step = match a.diff_mode {
        DiffMode::FiniteDifference { step } => step,
        DiffMode::Analytic => FD_STEP,
    };
    let b = MovingSurface {
        name: format!("{}~observer", a.name),
        domain: a.domain,
        diff_mode: DiffMode::FiniteDifference { step },
        coord_scale: a.coord_scale,
        length_scale: a.length_scale,
        is_static: false,
        chart: Arc::new(chart_b),
        jet: None,
        u_field: Arc::new(u_b),
    };
    ObserverPair { a, b, motion: chart_motion }
}

/// Admissible domain of the usual polar chart: θ ∈ [δ, π − δ], φ periodic.
pub fn polar_domain(band: f64) -> Domain {
    Domain::new(Axis::open(0.0, PI), Axis::periodic(0.0, 2.0 * PI), band)
}
