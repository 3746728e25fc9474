//! Seeded smooth sample fields used by verification suites.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{Event, MovingSurface};
use crate::fields::{pi_q, Cart, QSplit, Split};
use crate::geometry::geometry_near;
use crate::timederiv::{FieldClosure, QField, TangentialField};

/// A smooth scalar wave c·sin(k·x + ω t + p) in ambient coordinates.
#[derive(Debug, Clone, Copy)]
struct Wave {
    c: f64,
    k: Vector3<f64>,
    w: f64,
    p: f64,
}

impl Wave {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Wave {
            c: rng.gen_range(-1.0..1.0),
            k: Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            w: rng.gen_range(-1.0..1.0),
            p: rng.gen_range(0.0..6.0),
        }
    }

    fn at(&self, t: f64, x: &Vector3<f64>) -> f64 {
        self.c * (self.k.dot(x) + self.w * t + self.p).sin()
    }
}

fn waves<const N: usize>(rng: &mut ChaCha8Rng) -> [Wave; N] {
    std::array::from_fn(|_| Wave::random(rng))
}

/// Chart-coordinate wave c·sin(k·y + ω t + p); periodic charts stay smooth because k is integral.
#[derive(Debug, Clone, Copy)]
struct ChartWave {
    c: f64,
    k: [f64; 2],
    w: f64,
    p: f64,
}

impl ChartWave {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        ChartWave {
            c: rng.gen_range(-1.0..1.0),
            k: [rng.gen_range(-2..=2) as f64, rng.gen_range(-2..=2) as f64],
            w: rng.gen_range(-1.0..1.0),
            p: rng.gen_range(0.0..6.0),
        }
    }

    fn at(&self, e: &Event) -> f64 {
        self.c * (self.k[0] * e.y1 + self.k[1] * e.y2 + self.w * e.t + self.p).sin()
    }
}

/// Vector field w(t, x) + φ(t, x) ν with a nonzero normal part.
pub fn vector_field(surface: &MovingSurface, seed: u64) -> FieldClosure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: [Wave; 4] = waves(&mut rng);
    FieldClosure::geometric(1, surface, move |e, geom| {
        let x = geom.x;
        Cart::Vector(Vector3::new(w[0].at(e.t, &x), w[1].at(e.t, &x), w[2].at(e.t, &x)) + w[3].at(e.t, &x) * geom.nu)
    })
}

/// General (non-symmetric) 2-tensor field with normal and mixed parts.
pub fn tensor_field(surface: &MovingSurface, seed: u64) -> FieldClosure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: [Wave; 12] = waves(&mut rng);
    FieldClosure::geometric(2, surface, move |e, geom| {
        let x = geom.x;
        let m = Matrix3::from_fn(|a, b| w[3 * a + b].at(e.t, &x));
        let p = Vector3::new(w[9].at(e.t, &x), w[10].at(e.t, &x), 0.5);
        Cart::Tensor(m + p * geom.nu.transpose() + w[11].at(e.t, &x) * geom.nu * geom.nu.transpose())
    })
}

/// Rank-2 field given by split components depending on chart coordinates.
pub fn split_tensor_field(surface: &MovingSurface, seed: u64) -> FieldClosure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: [ChartWave; 9] = std::array::from_fn(|_| ChartWave::random(&mut rng));
    FieldClosure::from_split(2, surface, move |e| Split::Tensor {
        r: Matrix2::new(c[0].at(e), c[1].at(e), c[2].at(e), c[3].at(e)),
        eta_l: Vector2::new(c[4].at(e), c[5].at(e)),
        eta_r: Vector2::new(c[6].at(e), c[7].at(e)),
        phi: c[8].at(e),
    })
}

/// Rank-1 field given by split components depending on chart coordinates.
pub fn split_vector_field(surface: &MovingSurface, seed: u64) -> FieldClosure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: [ChartWave; 3] = std::array::from_fn(|_| ChartWave::random(&mut rng));
    FieldClosure::from_split(1, surface, move |e| Split::Vector { r: Vector2::new(c[0].at(e), c[1].at(e)), phi: c[2].at(e) })
}

/// Tangential vector field by contravariant components.
pub fn tangential_vector(seed: u64) -> TangentialField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: [ChartWave; 2] = std::array::from_fn(|_| ChartWave::random(&mut rng));
    TangentialField::vector(move |e| Vector2::new(c[0].at(e), c[1].at(e)))
}

/// Tangential 2-tensor field by contravariant components.
pub fn tangential_tensor(seed: u64) -> TangentialField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: [ChartWave; 4] = std::array::from_fn(|_| ChartWave::random(&mut rng));
    TangentialField::tensor(move |e| Matrix2::new(c[0].at(e), c[1].at(e), c[2].at(e), c[3].at(e)))
}

/// Symmetric trace-free ambient field, generally not surface conforming.
pub fn q_field(surface: &MovingSurface, seed: u64) -> QField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: [Wave; 9] = waves(&mut rng);
    let s = surface.clone();
    QField::from_cart(surface, move |e| {
        let x = s.position(e);
        let m = Matrix3::from_fn(|a, b| w[3 * a + b].at(e.t, &x));
        let sym = 0.5 * (m + m.transpose());
        sym - sym.trace() / 3.0 * Matrix3::identity()
    })
}

/// Surface-conforming Q-tensor field (η = 0).
pub fn conforming_q_field(surface: &MovingSurface, seed: u64) -> QField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: [Wave; 10] = waves(&mut rng);
    let s = surface.clone();
    QField::from_fallible(surface, move |e| {
        let geom = geometry_near(&s, e)?;
        let x = geom.x;
        let m = Matrix3::from_fn(|a, b| w[3 * a + b].at(e.t, &x));
        let p = geom.proj();
        let q = pi_q(&(p * m * p), &geom);
        Ok(QSplit { q: geom.pull_mat(&q), eta: Vector2::zeros(), beta: w[9].at(e.t, &x) })
    })
}

/// Random symmetric tangential 2-tensor and Q-tensor pair (Cartesian) at a geometry sample.
pub fn random_pair(rng: &mut ChaCha8Rng, geom: &crate::geometry::GeometrySample) -> (Matrix3<f64>, Matrix3<f64>) {
    let p = geom.proj();
    let a = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let b = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let s = p * (a + a.transpose()) * p;
    let q = pi_q(&(p * b * p), geom);
    (s, q)
}
