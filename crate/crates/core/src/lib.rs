//! Finite algebraic patterns: inert–active factorization systems on finite
//! categories, Segal conditions for set-valued functors, free Segal objects,
//! Kan extensions along pattern morphisms and the completed pattern.

pub mod completion;
pub mod error;
pub mod fincat;
pub mod freemonad;
pub mod io;
pub mod patmorph;
pub mod pattern;
pub mod setfun;

pub use error::{Error, Result};
pub mod zoo;
