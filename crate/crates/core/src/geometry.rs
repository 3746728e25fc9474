//! Pointwise geometry and kinematics of a moving surface, and the identity checks built on them.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::chart::{ChartJet, Event, MovingSurface};
use crate::error::{Error, Result};
use crate::fd;

/// Metric, connection and curvature at one event.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySample {
    pub x: Vector3<f64>,
    /// Frame ∂_iX as columns.
    pub dx: Matrix3x2<f64>,
    pub ddx: [[Vector3<f64>; 2]; 2],
    pub g: Matrix2<f64>,
    pub ginv: Matrix2<f64>,
    pub sqrtdetg: f64,
    /// Γ^k_ij stored as `gamma[k][i][j]`.
    pub gamma: [[[f64; 2]; 2]; 2],
    /// Γ_ijk = ⟨∂_i∂_jX, ∂_kX⟩ stored as `gamma_low[i][j][k]`.
    pub gamma_low: [[[f64; 2]; 2]; 2],
    pub nu: Vector3<f64>,
    /// Covariant second fundamental form II_ij.
    pub ii: Matrix2<f64>,
    /// Mixed shape operator B^i_j = g^ik II_kj.
    pub b_mixed: Matrix2<f64>,
    pub h: f64,
    pub k: f64,
}

impl GeometrySample {
    pub fn from_jet(jet: &ChartJet) -> Result<Self> {
        let dx = jet.dx;
        let g = dx.transpose() * dx;
        let det = g.determinant();
        if !(det >= 1e-12) {
            return Err(Error::NonEmbedding { det_g: det });
        }
        let ginv = g.try_inverse().ok_or(Error::NonEmbedding { det_g: det })?;
        let d1 = dx.column(0).into_owned();
        let d2 = dx.column(1).into_owned();
        let nu = d1.cross(&d2).normalize();
        let mut gamma_low = [[[0.0; 2]; 2]; 2];
        let mut ii = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    gamma_low[i][j][k] = jet.ddx[i][j].dot(&dx.column(k));
                }
                ii[(i, j)] = jet.ddx[i][j].dot(&nu);
            }
        }
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    gamma[k][i][j] = (0..2).map(|l| ginv[(k, l)] * gamma_low[i][j][l]).sum();
                }
            }
        }
        let b_mixed = ginv * ii;
        Ok(GeometrySample {
            x: jet.x,
            dx,
            ddx: jet.ddx,
            g,
            ginv,
            sqrtdetg: det.sqrt(),
            gamma,
            gamma_low,
            nu,
            ii,
            b_mixed,
            h: b_mixed.trace(),
            k: b_mixed.determinant(),
        })
    }

    /// Dual frame ∂^iX = g^ij ∂_jX as columns.
    pub fn dual(&self) -> Matrix3x2<f64> {
        self.dx * self.ginv
    }

    /// Tangential projector Π_S = Id − ν⊗ν.
    pub fn proj(&self) -> Matrix3<f64> {
        Matrix3::identity() - self.nu * self.nu.transpose()
    }

    /// ℝ³ form of a tangential vector with contravariant components.
    pub fn embed_vec(&self, r: &Vector2<f64>) -> Vector3<f64> {
        self.dx * r
    }

    /// ℝ³ form of a tangential 2-tensor with contravariant components.
    pub fn embed_mat(&self, r: &Matrix2<f64>) -> Matrix3<f64> {
        self.dx * r * self.dx.transpose()
    }

    /// Map from ℝ³ to contravariant components of the tangential part.
    pub fn pull(&self) -> Matrix2x3<f64> {
        self.ginv * self.dx.transpose()
    }

    pub fn pull_vec(&self, w: &Vector3<f64>) -> Vector2<f64> {
        self.pull() * w
    }

    pub fn pull_mat(&self, m: &Matrix3<f64>) -> Matrix2<f64> {
        let p = self.pull();
        p * m * p.transpose()
    }

    /// ℝ³ form of the shape operator.
    pub fn b_cart(&self) -> Matrix3<f64> {
        self.embed_mat(&(self.ginv * self.ii * self.ginv))
    }

    /// Christoffel contraction Γ^i_{kl} w^l as a matrix indexed [i][k].
    pub fn gamma_dot(&self, w: &Vector2<f64>) -> Matrix2<f64> {
        Matrix2::from_fn(|i, k| (0..2).map(|l| self.gamma[i][k][l] * w[l]).sum())
    }

    /// Principal curvatures as eigenvalues of the mixed shape operator.
    pub fn principal_curvatures(&self) -> (f64, f64) {
        let disc = (0.25 * self.h * self.h - self.k).max(0.0).sqrt();
        (0.5 * self.h + disc, 0.5 * self.h - disc)
    }
}

/// Velocity gradient blocks of one velocity field.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGradient {
    /// ∇_C V in ℝ³ (value index first).
    pub grad: Matrix3<f64>,
    /// Covariant G_ji = ⟨∂_iV, ∂_jX⟩.
    pub g_cov: Matrix2<f64>,
    /// Covariant b_i = ⟨∂_iV, ν⟩.
    pub b_cov: Vector2<f64>,
    pub g_cart: Matrix3<f64>,
    pub b_cart: Vector3<f64>,
    /// 𝒢 = G + ν⊗b − b⊗ν.
    pub gcal: Matrix3<f64>,
    /// 𝒜 = (𝒢 − 𝒢ᵀ)/2.
    pub acal: Matrix3<f64>,
}

impl VelocityGradient {
    /// Blocks from the chart derivatives ∂_iV as columns.
    pub fn from_partials(geom: &GeometrySample, dv: &Matrix3x2<f64>) -> Self {
        let dual = geom.dual();
        let grad = dv * dual.transpose();
        let g_cov = geom.dx.transpose() * dv;
        let b_cov = dv.transpose() * geom.nu;
        let b_cart = dual * b_cov;
        let g_cart = geom.proj() * grad;
        let gcal = grad - b_cart * geom.nu.transpose();
        let acal = 0.5 * (gcal - gcal.transpose());
        VelocityGradient { grad, g_cov, b_cov, g_cart, b_cart, gcal, acal }
    }

    /// Tangential antisymmetric part A = (G − Gᵀ)/2 in ℝ³.
    pub fn a_cart(&self) -> Matrix3<f64> {
        0.5 * (self.g_cart - self.g_cart.transpose())
    }

    /// Tangential symmetric part S = (G + Gᵀ)/2 in ℝ³.
    pub fn s_cart(&self) -> Matrix3<f64> {
        0.5 * (self.g_cart + self.g_cart.transpose())
    }
}

/// Velocity splits and deformation tensors at one event.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSample {
    pub v_o: Vector3<f64>,
    pub v_m: Vector3<f64>,
    pub u: Vector2<f64>,
    pub u_cart: Vector3<f64>,
    /// Tangential part of V_m.
    pub v: Vector3<f64>,
    pub vperp: f64,
    /// Covariant G[V_m].
    pub g: Matrix2<f64>,
    /// Covariant b[V_m].
    pub b: Vector2<f64>,
    pub gcal: Matrix3<f64>,
    /// Covariant A[V_m].
    pub a: Matrix2<f64>,
    pub acal: Matrix3<f64>,
    /// Covariant S[V_m].
    pub s: Matrix2<f64>,
    pub material: VelocityGradient,
    pub observer: VelocityGradient,
}

pub fn geometry_at(surface: &MovingSurface, e: &Event) -> Result<GeometrySample> {
    GeometrySample::from_jet(&surface.eval_jet(e)?)
}

/// Geometry at a stencil point (only the open chart domain is required).
pub(crate) fn geometry_near(surface: &MovingSurface, e: &Event) -> Result<GeometrySample> {
    GeometrySample::from_jet(&surface.jet_at(e)?)
}

/// Material velocity V_m = ∂_tX + u^k ∂_kX at a stencil point.
pub(crate) fn material_velocity(surface: &MovingSurface, e: &Event) -> Result<Vector3<f64>> {
    let jet = surface.jet_at(e)?;
    Ok(jet.vt + jet.dx * surface.u(e))
}

pub fn motion_at(surface: &MovingSurface, e: &Event) -> Result<MotionSample> {
    let jet = surface.eval_jet(e)?;
    let geom = GeometrySample::from_jet(&jet)?;
    let h = surface.fd_step();
    let dvm = fd::grad2(|y| material_velocity(surface, &e.with_y(y)), e.y(), h)?;
    let material = VelocityGradient::from_partials(&geom, &Matrix3x2::from_columns(&dvm));
    let observer = VelocityGradient::from_partials(&geom, &jet.dvt);
    let u = surface.u(e);
    let u_cart = geom.embed_vec(&u);
    let v_m = jet.vt + u_cart;
    let vperp = v_m.dot(&geom.nu);
    let g = material.g_cov;
    Ok(MotionSample {
        v_o: jet.vt,
        v_m,
        u,
        u_cart,
        v: v_m - vperp * geom.nu,
        vperp,
        g,
        b: material.b_cov,
        gcal: material.gcal,
        a: 0.5 * (g - g.transpose()),
        acal: material.acal,
        s: 0.5 * (g + g.transpose()),
        material,
        observer,
    })
}

/// One checked identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub identity_name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl IdentityRecord {
    pub fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        IdentityRecord { identity_name: name.into(), residual, tol, pass: residual <= tol }
    }
}

/// Residuals of a batch of identity checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub records: Vec<IdentityRecord>,
}

impl IdentityReport {
    pub fn push(&mut self, name: impl Into<String>, residual: f64, tol: f64) {
        self.records.push(IdentityRecord::new(name, residual, tol));
    }

    pub fn extend(&mut self, other: IdentityReport) {
        self.records.extend(other.records);
    }

    pub fn pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.records.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    /// Worst residual per identity name, keeping first-seen order.
    pub fn summarize(&self) -> IdentityReport {
        let mut out: Vec<IdentityRecord> = Vec::new();
        for r in &self.records {
            match out.iter_mut().find(|o| o.identity_name == r.identity_name) {
                Some(o) => {
                    o.residual = o.residual.max(r.residual);
                    o.pass &= r.pass;
                }
                None => out.push(r.clone()),
            }
        }
        IdentityReport { records: out }
    }
}

fn rel(residual: f64, scale: f64) -> f64 {
    residual / scale.max(1.0)
}

/// Test vector field (contravariant proxies) used by the proxy time-derivative checks.
fn probe_vector(e: &Event) -> Vector2<f64> {
    Vector2::new((e.t + e.y1).sin() + 0.5, (0.7 * e.t - e.y2).cos() * e.y1.cos())
}

fn probe_tensor(e: &Event) -> Matrix2<f64> {
    Matrix2::new(
        1.0 + 0.3 * (e.t + e.y2).sin(),
        (e.y1 - e.t).cos(),
        0.2 * (e.y1 * e.y2).sin(),
        0.5 + 0.4 * (2.0 * e.t).cos() * e.y2.sin(),
    )
}

/// Evaluates the partial-derivative identities at `e`; residuals are relative to max(1, scale).
pub fn check_identities(surface: &MovingSurface, e: &Event, tol: f64) -> Result<IdentityReport> {
    let geom = geometry_at(surface, e)?;
    let motion = motion_at(surface, e)?;
    // Oracle stencils use half the default step: chart derivatives grow quickly near polar bands.
    let h = 0.5 * surface.fd_step();
    let ht = h;
    let mut rep = IdentityReport::default();

    // Christoffel symbols from metric derivatives, independent of the jet's projection.
    let dg = fd::grad2(|y| geometry_near(surface, &e.with_y(y)).map(|s| s.g), e.y(), h)?;
    let mut gauss = 0.0_f64;
    let mut metric_cov = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut rhs = geom.ii[(i, j)] * geom.nu;
            for k in 0..2 {
                let glow: f64 = (0..2)
                    .map(|l| 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]) * geom.ginv[(k, l)])
                    .sum();
                rhs += glow * geom.dx.column(k);
            }
            gauss = gauss.max((geom.ddx[i][j] - rhs).amax());
            for l in 0..2 {
                let r = dg[l][(i, j)] - geom.gamma_low[l][i][j] - geom.gamma_low[l][j][i];
                metric_cov = metric_cov.max(r.abs());
            }
        }
    }
    let scale = geom.ddx.iter().flatten().map(|v| v.amax()).fold(0.0, f64::max);
    rep.push("gauss_formula", rel(gauss, scale), tol);
    rep.push("metric_cov_derivative", rel(metric_cov, geom.g.amax()), tol);

    let dginv = fd::grad2(|y| geometry_near(surface, &e.with_y(y)).map(|s| s.ginv), e.y(), h)?;
    let mut metric_contra = 0.0_f64;
    let mut contra_scale = geom.ginv.amax();
    for l in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let rhs: f64 = -(0..2)
                    .map(|k| geom.ginv[(k, j)] * geom.gamma[i][l][k] + geom.ginv[(k, i)] * geom.gamma[j][l][k])
                    .sum::<f64>();
                metric_contra = metric_contra.max((dginv[l][(i, j)] - rhs).abs());
                contra_scale = contra_scale.max(rhs.abs());
            }
        }
    }
    rep.push("metric_contra_derivative", rel(metric_contra, contra_scale), tol);

    let dnu = fd::grad2(|y| geometry_near(surface, &e.with_y(y)).map(|s| s.nu), e.y(), h)?;
    let mut weingarten = 0.0_f64;
    for i in 0..2 {
        let mut rhs = Vector3::zeros();
        for j in 0..2 {
            rhs -= geom.b_mixed[(j, i)] * geom.dx.column(j);
        }
        weingarten = weingarten.max((dnu[i] - rhs).amax());
    }
    rep.push("weingarten", rel(weingarten, geom.b_mixed.amax()), tol);

    let nu_t = fd::d1(|s| geometry_near(surface, &e.with_t(s)).map(|g| g.nu), e.t, ht)?;
    let b_o = motion.observer.b_cart;
    rep.push("normal_time_derivative", rel((nu_t + b_o).amax(), b_o.amax()), tol);
    rep.push("normal_rate_orthogonal", nu_t.dot(&geom.nu).abs(), tol);
    let mut nu_adv = nu_t;
    for k in 0..2 {
        nu_adv += motion.u[k] * dnu[k];
    }
    let b_m = motion.material.b_cart;
    rep.push("normal_material_rate", rel((nu_adv + b_m).amax(), b_m.amax()), tol);

    // Covariant proxies η_i = g_ik η^k and r_ij = g_ik r^kl g_lj.
    let go = motion.observer.g_cov;
    let sym = go + go.transpose();
    let eta_low_t = fd::d1(
        |s| {
            let ev = e.with_t(s);
            geometry_near(surface, &ev).map(|g| g.g * probe_vector(&ev))
        },
        e.t,
        ht,
    )?;
    let eta_up_t = fd::d1(|s| Ok(probe_vector(&e.with_t(s))), e.t, ht)?;
    let eta = probe_vector(e);
    let rhs = geom.g * eta_up_t + sym * eta;
    rep.push("vector_covariant_proxy_rate", rel((eta_low_t - rhs).amax(), eta_low_t.amax()), tol);

    let r_low_t = fd::d1(
        |s| {
            let ev = e.with_t(s);
            geometry_near(surface, &ev).map(|g| g.g * probe_tensor(&ev) * g.g)
        },
        e.t,
        ht,
    )?;
    let r_up_t = fd::d1(|s| Ok(probe_tensor(&e.with_t(s))), e.t, ht)?;
    let r = probe_tensor(e);
    let rhs = geom.g * r_up_t * geom.g + sym * r * geom.g + geom.g * r * sym;
    rep.push("tensor_covariant_proxy_rate", rel((r_low_t - rhs).amax(), r_low_t.amax()), tol);
    Ok(rep)
}
