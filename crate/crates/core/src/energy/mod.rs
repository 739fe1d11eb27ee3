//! The energy functional `J`, the small-scale expansions of the bubble
//! integrals under variable exponents, and the comparison of the
//! mountain-pass level with the compactness threshold `(1/n) K(n,p)^{-n}`.

mod expansion;
mod model;
mod mountain;

pub use expansion::*;
pub use model::*;
pub use mountain::*;
