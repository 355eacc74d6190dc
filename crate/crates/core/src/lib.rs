//! Exact decision procedures for cloning and broadcasting in polytopic
//! generalized probabilistic theories.

pub mod channel;
pub mod composite;
mod cone;
pub mod decide;
pub mod linalg;
pub mod lp;
pub mod polytope;
pub mod random;
pub mod scalar;
pub mod space;

pub use channel::{AffineChannel, ChannelError};
pub use composite::{max_tensor, min_tensor, CompositeSpace, TensorVariant};
pub use decide::{
    analyze, broadcaster_exists, cloner_exists, construct_broadcaster, construct_cloner, extract_simplex_cover,
    jointly_distinguishable, CesaroSettings, Certificate, CrossCheck, DecisionError, DecisionReport, SimplexCover, StateSet, Task,
    Witness,
};
pub use lp::{FarkasCertificate, LpSystem};
pub use polytope::{HRep, Polytope};
pub use scalar::{Scalar, Vector};
pub use space::{Effect, Measurement, StateSpace};
