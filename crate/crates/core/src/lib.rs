//! Time derivatives of scalar, vector and 2-tensor fields on moving surfaces in ℝ³,
//! Q-tensor specializations and surface Landau–de Gennes gradient flows.

pub mod chart;
pub mod diffops;
pub mod error;
pub mod fd;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod landau;
pub mod samples;
pub mod scenario;
pub mod suites;
pub mod thinfilm;
pub mod timederiv;

pub use chart::{make_observer_pair, ChartJet, ChartMotion, DiffMode, Domain, Event, MovingSurface, ObserverPair};
pub use error::{Error, Result};
pub use fields::{Cart, QSplit, Space, Split, TensorValue};
pub use geometry::{check_identities, geometry_at, motion_at, GeometrySample, IdentityReport, MotionSample};
pub use scenario::scenario;
pub use timederiv::{
    convected_dt, material_dt, q_dt, scalar_dot, tangential_dt, ConvectedPath, DerivKind, FieldClosure, MaterialPath, QField,
    TangentialField,
};
