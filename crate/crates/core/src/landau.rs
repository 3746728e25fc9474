//! Landau–de Gennes energy, its L²-gradient flows and an explicit integrator on periodic grids.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::{Event, MovingSurface};
use crate::diffops::{conforming_closed_form, conforming_laplace, surface_laplace, ConformingPath, LaplacePath};
use crate::error::{Error, Result};
use crate::fields::{pi_cq, q_residuals, QSplit};
use crate::geometry::{geometry_near, motion_at, MotionSample};
use crate::grid::{dirichlet_energy, laplace_conservative, partials, Grid, GridGeometry, TrigInterp};
use crate::scenario::scenario;
use crate::timederiv::QField;

/// Tolerance on the per-step energy increase of a static-surface run.
pub const ENERGY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdGParams {
    #[serde(rename = "L")]
    pub l: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LdGParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(Error::Config(format!("elastic constant L must be positive, got {}", self.l)));
        }
        if ![self.a, self.b, self.c].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("thermotropic coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// aTrQ² + (2b/3)TrQ³ + cTrQ⁴.
pub fn bulk_density(q: &Matrix3<f64>, p: &LdGParams) -> f64 {
    let q2 = q * q;
    let t2 = q2.trace();
    p.a * t2 + 2.0 * p.b / 3.0 * (q2 * q).trace() + p.c * (q2 * q2).trace()
}

/// −2(aQ + b(Q² − TrQ²/3 Id) + cTrQ² Q).
pub fn bulk_rhs(q: &Matrix3<f64>, p: &LdGParams) -> Matrix3<f64> {
    let q2 = q * q;
    let t2 = q2.trace();
    -2.0 * (p.a * q + p.b * (q2 - t2 / 3.0 * Matrix3::identity()) + p.c * t2 * q)
}

fn check_q(q: &Matrix3<f64>) -> Result<()> {
    let (asym, trace) = q_residuals(q);
    let scale = q.amax().max(1.0);
    if asym > 1e-8 * scale || trace > 1e-8 * scale {
        return Err(Error::NotQTensor { asym, trace });
    }
    Ok(())
}

/// Pointwise full flow RHS LΔ_CQ − 2(aQ + b(Q² − TrQ²/3 Id) + cTrQ²Q) of a Q-tensor field.
pub fn rhs_full_at(q: &QField, p: &LdGParams, surface: &MovingSurface, e: &Event) -> Result<Matrix3<f64>> {
    let field = q.to_field();
    let qc = field.eval(e)?.tensor();
    check_q(&qc)?;
    let lap = surface_laplace(&field, surface, e, LaplacePath::Beltrami)?.tensor();
    Ok(p.l * lap + bulk_rhs(&qc, p))
}

/// Π_CQ of the full RHS, in (q, β) components.
pub fn rhs_projected_at(q: &QField, p: &LdGParams, surface: &MovingSurface, e: &Event) -> Result<QSplit> {
    let geom = geometry_near(surface, e)?;
    q.eval(e)?.is_conforming(&geom, 1e-8)?;
    let r = rhs_full_at(q, p, surface, e)?;
    let mut out = QSplit::from_cart_unchecked(&pi_cq(&r, &geom), &geom);
    out.eta = Vector2::zeros();
    Ok(out)
}

/// Bulk part of the decomposed conforming RHS in Cartesian tangential form.
fn conforming_bulk(q: &Matrix3<f64>, beta: f64, p: &LdGParams) -> (Matrix3<f64>, f64) {
    let trq2 = (q * q).trace();
    let q_part = -(2.0 * p.a - 2.0 * p.b * beta + 3.0 * p.c * beta * beta + 2.0 * p.c * trq2) * q;
    let b_part = -(2.0 * p.a + p.b * beta + 3.0 * p.c * beta * beta + 2.0 * p.c * trq2) * beta + 2.0 / 3.0 * p.b * trq2;
    (q_part, b_part)
}

/// Decomposed conforming RHS in (q, β) components.
pub fn rhs_conforming_at(q: &QField, p: &LdGParams, surface: &MovingSurface, e: &Event) -> Result<QSplit> {
    let geom = geometry_near(surface, e)?;
    let at = q.eval(e)?;
    let lap = conforming_laplace(q, surface, e, ConformingPath::Decomposed)?;
    let qc = geom.embed_mat(&at.q);
    let (bq, bb) = conforming_bulk(&qc, at.beta, p);
    Ok(QSplit { q: p.l * lap.q + geom.pull_mat(&bq), eta: Vector2::zeros(), beta: p.l * lap.beta + bb })
}

/// Energy split into elastic and bulk parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub elastic: f64,
    pub bulk: f64,
    pub total: f64,
}

/// Discrete energy of Cartesian Q values on a grid.
pub fn energy(geo: &GridGeometry, qs: &[Matrix3<f64>], p: &LdGParams) -> Energy {
    let elastic = 0.5 * p.l * dirichlet_energy(geo, qs, |m| m.norm_squared());
    let dens: Vec<f64> = qs.iter().map(|q| bulk_density(q, p)).collect();
    let bulk = geo.integrate(&dens);
    Energy { elastic, bulk, total: elastic + bulk }
}

/// Full RHS at every node with the conservative Laplacian.
pub fn rhs_full(geo: &GridGeometry, qs: &[Matrix3<f64>], p: &LdGParams) -> Result<Vec<Matrix3<f64>>> {
    let lap = laplace_conservative(geo, qs)?;
    Ok(qs.iter().zip(lap).map(|(q, l)| p.l * l + bulk_rhs(q, p)).collect())
}

/// Decomposed conforming RHS at every node; Δq uses Π_S(ΔQ)Π_S + B²q + qB² of the Cartesian proxy.
pub fn rhs_conforming(geo: &GridGeometry, field: &[QSplit], p: &LdGParams) -> Result<Vec<QSplit>> {
    let qc: Vec<Matrix3<f64>> = field.iter().zip(&geo.nodes).map(|(s, g)| g.embed_mat(&s.q)).collect();
    let betas: Vec<f64> = field.iter().map(|s| s.beta).collect();
    let lap_q = laplace_conservative(geo, &qc)?;
    let lap_b = laplace_conservative(geo, &betas)?;
    let mut out = Vec::with_capacity(field.len());
    for k in 0..field.len() {
        let g = &geo.nodes[k];
        let pr = g.proj();
        let b2 = g.b_cart() * g.b_cart();
        let tang = pr * lap_q[k] * pr + b2 * qc[k] + qc[k] * b2;
        let (lq, lb) = conforming_closed_form(g, &qc[k], betas[k], &tang, lap_b[k]);
        let (bq, bb) = conforming_bulk(&qc[k], betas[k], p);
        out.push(QSplit { q: g.pull_mat(&(p.l * lq + bq)), eta: Vector2::zeros(), beta: p.l * lb + bb });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FullQMaterial,
    FullQJaumann,
    ConformingMaterial,
    ConformingJaumann,
}

impl Mode {
    pub fn conforming(&self) -> bool {
        matches!(self, Mode::ConformingMaterial | Mode::ConformingJaumann)
    }

    fn jaumann(&self) -> bool {
        matches!(self, Mode::FullQJaumann | Mode::ConformingJaumann)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Euler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Zero,
    ConstantBeta { beta: f64 },
    /// Spatially constant Cartesian Q (symmetric trace-free rows).
    Constant { q: [[f64; 3]; 3] },
    RandomSmooth { amplitude: f64, modes: u32, seed: u64 },
}

fn default_check_every() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub scenario: String,
    pub params: LdGParams,
    pub mode: Mode,
    pub grid: [usize; 2],
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub t0: f64,
    /// Energy record cadence in steps.
    pub output_every: usize,
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    pub initial: InitialCondition,
    #[serde(default)]
    pub integrator: Integrator,
    /// Cadence of the decomposition check on conforming runs.
    #[serde(default = "default_check_every")]
    pub check_every: usize,
}

impl FlowConfig {
    pub fn steps(&self) -> usize {
        ((self.t_end - self.t0) / self.dt).round().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_end >= self.t0) {
            return Err(Error::Config("dt must be positive and t_end ≥ t0".into()));
        }
        if self.output_every == 0 || self.check_every == 0 || self.snapshot_every == Some(0) {
            return Err(Error::Config("cadences must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: FlowConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub step: usize,
    pub t: f64,
    pub energy_elastic: f64,
    pub energy_bulk: f64,
    pub energy_total: f64,
    pub max_trace_residual: f64,
    pub max_sym_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub step: usize,
    pub t: f64,
    pub residual: f64,
}

/// Node values at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub grid: Grid,
    pub values: Vec<Matrix3<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<EnergyRecord>,
    pub checks: Vec<DecompositionCheck>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: Snapshot,
}

impl Trajectory {
    pub fn energy_csv(&self) -> String {
        let mut s = String::from("step,t,energy_elastic,energy_bulk,energy_total,max_trace_residual,max_sym_residual\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{:.12e},{:.17e},{:.17e},{:.17e},{:.6e},{:.6e}\n",
                r.step, r.t, r.energy_elastic, r.energy_bulk, r.energy_total, r.max_trace_residual, r.max_sym_residual
            ));
        }
        s
    }

    pub fn max_check_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

/// Random symmetric 3×3 field built from low integer modes of the chart coordinates.
fn random_smooth(amplitude: f64, modes: u32, seed: u64) -> impl Fn([f64; 2]) -> Matrix3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = modes as i32;
    let mut terms = Vec::new();
    for k1 in -m..=m {
        for k2 in -m..=m {
            let c = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let c = 0.5 * (c + c.transpose());
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            terms.push((k1 as f64, k2 as f64, c, phase));
        }
    }
    let norm = amplitude / (terms.len() as f64).sqrt();
    move |y| {
        let mut out = Matrix3::zeros();
        for (k1, k2, c, ph) in &terms {
            out += c * (k1 * y[0] + k2 * y[1] + ph).cos();
        }
        norm * out
    }
}

fn to_q(m: &Matrix3<f64>) -> Matrix3<f64> {
    let s = 0.5 * (m + m.transpose());
    s - s.trace() / 3.0 * Matrix3::identity()
}

fn initial_state(cfg: &FlowConfig, geo: &GridGeometry) -> Result<Vec<Matrix3<f64>>> {
    let grid = &geo.grid;
    let raw: Vec<Matrix3<f64>> = match &cfg.initial {
        InitialCondition::Zero => vec![Matrix3::zeros(); grid.len()],
        InitialCondition::ConstantBeta { beta } => geo
            .nodes
            .iter()
            .map(|g| QSplit { q: Matrix2::zeros(), eta: Vector2::zeros(), beta: *beta }.to_cart(g))
            .collect(),
        InitialCondition::Constant { q } => {
            let m = Matrix3::from_fn(|i, j| q[i][j]);
            check_q(&m)?;
            vec![m; grid.len()]
        }
        InitialCondition::RandomSmooth { amplitude, modes, seed } => {
            let f = random_smooth(*amplitude, *modes, *seed);
            (0..grid.len()).map(|k| to_q(&f(grid.event(geo.t, k).y()))).collect()
        }
    };
    Ok(if cfg.mode.conforming() { project_conforming(geo, &raw) } else { raw })
}

fn project_conforming(geo: &GridGeometry, qs: &[Matrix3<f64>]) -> Vec<Matrix3<f64>> {
    qs.iter()
        .zip(&geo.nodes)
        .map(|(q, g)| {
            let mut s = QSplit::from_cart_unchecked(&pi_cq(q, g), g);
            s.eta = Vector2::zeros();
            s.to_cart(g)
        })
        .collect()
}

/// Explicit time integrator for one flow configuration.
pub struct FlowRunner {
    pub cfg: FlowConfig,
    surface: MovingSurface,
    grid: Grid,
    static_geo: Option<GridGeometry>,
    kinematic: bool,
}

impl FlowRunner {
    pub fn new(cfg: FlowConfig) -> Result<Self> {
        cfg.validate()?;
        let surface = scenario(&cfg.scenario)?;
        let grid = Grid::new(&surface.domain, cfg.grid)?;
        let geo0 = GridGeometry::sample(&surface, &grid, cfg.t0)?;
        let bound = geo0.dt_bound(cfg.params.l);
        if cfg.dt > bound {
            return Err(Error::StepAboveBound { dt: cfg.dt, bound });
        }
        let zero_u = (0..grid.len()).all(|k| surface.u(&grid.event(cfg.t0, k)).amax() == 0.0);
        let kinematic = !(surface.is_static && zero_u);
        let static_geo = if surface.is_static { Some(geo0) } else { None };
        Ok(FlowRunner { cfg, surface, grid, static_geo, kinematic })
    }

    pub fn surface(&self) -> &MovingSurface {
        &self.surface
    }

    fn geometry(&self, t: f64) -> Result<GridGeometry> {
        match &self.static_geo {
            Some(g) => Ok(g.clone()),
            None => GridGeometry::sample(&self.surface, &self.grid, t),
        }
    }

    fn motion(&self, t: f64) -> Result<Vec<MotionSample>> {
        (0..self.grid.len()).map(|k| motion_at(&self.surface, &self.grid.event(t, k))).collect()
    }

    /// ∂_t of the Cartesian node values at fixed chart coordinates.
    fn rate(&self, t: f64, qs: &[Matrix3<f64>]) -> Result<Vec<Matrix3<f64>>> {
        let geo = self.geometry(t)?;
        let rhs = rhs_full(&geo, qs, &self.cfg.params)?;
        let mode = self.cfg.mode;
        let mut out: Vec<Matrix3<f64>> = if mode.conforming() {
            rhs.iter().zip(&geo.nodes).map(|(r, g)| pi_cq(r, g)).collect()
        } else {
            rhs
        };
        if !self.kinematic {
            return Ok(out);
        }
        let motion = self.motion(t)?;
        let grads = partials(&geo, qs);
        for k in 0..qs.len() {
            let m = &motion[k];
            let q = qs[k];
            let g = &geo.nodes[k];
            if mode.jaumann() {
                out[k] += m.acal * q - q * m.acal;
            } else if mode.conforming() {
                let nu = g.nu;
                let b = m.material.b_cart;
                let beta = nu.dot(&(q * nu));
                let w: Vector3<f64> = g.proj() * q * g.proj() * b + 0.5 * beta * b - 1.5 * beta * b;
                out[k] += w * nu.transpose() + nu * w.transpose();
            }
            out[k] -= grads[k][0] * m.u[0] + grads[k][1] * m.u[1];
        }
        Ok(out)
    }

    fn step(&self, t: f64, qs: &[Matrix3<f64>]) -> Result<Vec<Matrix3<f64>>> {
        let dt = self.cfg.dt;
        let add = |a: &[Matrix3<f64>], b: &[Matrix3<f64>], s: f64| -> Vec<Matrix3<f64>> {
            a.iter().zip(b).map(|(x, y)| x + y * s).collect()
        };
        let next = match self.cfg.integrator {
            Integrator::Euler => add(qs, &self.rate(t, qs)?, dt),
            Integrator::Rk4 => {
                let k1 = self.rate(t, qs)?;
                let k2 = self.rate(t + 0.5 * dt, &add(qs, &k1, 0.5 * dt))?;
                let k3 = self.rate(t + 0.5 * dt, &add(qs, &k2, 0.5 * dt))?;
                let k4 = self.rate(t + dt, &add(qs, &k3, dt))?;
                qs.iter()
                    .enumerate()
                    .map(|(i, q)| q + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0))
                    .collect()
            }
        };
        if self.cfg.mode.conforming() && !self.surface.is_static {
            Ok(project_conforming(&self.geometry(t + dt)?, &next))
        } else {
            Ok(next)
        }
    }

    fn record(&self, step: usize, t: f64, qs: &[Matrix3<f64>]) -> Result<EnergyRecord> {
        let geo = self.geometry(t)?;
        let e = energy(&geo, qs, &self.cfg.params);
        let (mut sym, mut tr): (f64, f64) = (0.0, 0.0);
        for q in qs {
            let (a, b) = q_residuals(q);
            sym = sym.max(a);
            tr = tr.max(b);
        }
        Ok(EnergyRecord {
            step,
            t,
            energy_elastic: e.elastic,
            energy_bulk: e.bulk,
            energy_total: e.total,
            max_trace_residual: tr,
            max_sym_residual: sym,
        })
    }

    /// Compares the decomposed conforming RHS with Π_CQ of the full RHS on a smooth interpolant.
    pub fn decomposition_check(&self, t: f64, qs: &[Matrix3<f64>]) -> Result<f64> {
        let geo = self.geometry(t)?;
        let splits: Vec<QSplit> = qs.iter().zip(&geo.nodes).map(|(q, g)| QSplit::from_cart_unchecked(q, g)).collect();
        let comp = |f: &dyn Fn(&QSplit) -> f64| TrigInterp::new(&self.grid, &splits.iter().map(f).collect::<Vec<_>>());
        let i11 = comp(&|s| s.q[(0, 0)]);
        let i12 = comp(&|s| 0.5 * (s.q[(0, 1)] + s.q[(1, 0)]));
        let i22 = comp(&|s| s.q[(1, 1)]);
        let ib = comp(&|s| s.beta);
        let qf = QField::new(&self.surface, move |e| {
            let y = e.y();
            let o = i12.eval(y);
            QSplit { q: Matrix2::new(i11.eval(y), o, o, i22.eval(y)), eta: Vector2::zeros(), beta: ib.eval(y) }
        });
        let n = self.grid.n;
        let mut worst: f64 = 0.0;
        for (a, b) in [(0, 0), (n[0] / 3, n[1] / 2), (n[0] / 2, n[1] / 5), (3 * n[0] / 4, 2 * n[1] / 3)] {
            let e = self.grid.event(t, self.grid.idx(a, b));
            let g = geometry_near(&self.surface, &e)?;
            let x = rhs_conforming_at(&qf, &self.cfg.params, &self.surface, &e)?.to_cart(&g);
            let y = rhs_projected_at(&qf, &self.cfg.params, &self.surface, &e)?.to_cart(&g);
            worst = worst.max((x - y).amax() / x.amax().max(y.amax()).max(1.0));
        }
        Ok(worst)
    }

    pub fn run(&self) -> Result<Trajectory> {
        let cfg = &self.cfg;
        let mut t = cfg.t0;
        let mut qs = initial_state(cfg, &self.geometry(t)?)?;
        let steps = cfg.steps();
        let mut records = vec![self.record(0, t, &qs)?];
        let mut checks = Vec::new();
        let mut snapshots = Vec::new();
        let monotone = self.surface.is_static && !self.kinematic;
        let mut last = records[0].energy_total;
        for step in 1..=steps {
            qs = self.step(t, &qs)?;
            t = cfg.t0 + step as f64 * cfg.dt;
            if monotone || step % cfg.output_every == 0 || step == steps {
                let rec = self.record(step, t, &qs)?;
                if monotone {
                    let increase = rec.energy_total - last;
                    if increase > ENERGY_TOL {
                        return Err(Error::EnergyIncrease { step, increase });
                    }
                    last = rec.energy_total;
                }
                if step % cfg.output_every == 0 || step == steps {
                    records.push(rec);
                }
            }
            if cfg.mode.conforming() && step % cfg.check_every == 0 {
                checks.push(DecompositionCheck { step, t, residual: self.decomposition_check(t, &qs)? });
            }
            if let Some(every) = cfg.snapshot_every {
                if step % every == 0 {
                    snapshots.push(Snapshot { step, t, grid: self.grid, values: qs.clone() });
                }
            }
        }
        Ok(Trajectory { records, checks, snapshots, final_state: Snapshot { step: steps, t, grid: self.grid, values: qs } })
    }
}

pub fn run_flow(cfg: &FlowConfig) -> Result<Trajectory> {
    FlowRunner::new(cfg.clone())?.run()
}
