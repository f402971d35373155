//! Hybrid trajectory semantics with exact rational arithmetic.
//!
//! Configurations pair a piecewise-affine flow with a time interval,
//! trajectories chain configurations from time 0, and hybrid transition
//! systems generate them. On top of that sit timed state relations,
//! asynchronous simulations, and timeful discretization.

pub mod casestudy;
pub mod error;
pub mod expr;
pub mod flow;
pub mod galois;
pub mod hts;
pub mod instances;
pub mod discretize;
pub mod homomorphism;
pub mod relation;
pub mod simulation;
pub mod random;
pub mod rational;
pub mod time;
pub mod trajectory;

pub use error::{Error, Result};
pub use flow::{AffineFlow, Configuration, State};
pub use rational::Q;
pub use time::{TimeInterval, TimePoint};
