//! Numerical toolkit for critical problems with variable exponents: special
//! functions and an adaptive quadrature oracle, the Aubin–Talenti bubble and
//! its moments, variable-exponent modulars and Luxemburg norms, and the
//! energy expansions that decide whether the mountain-pass level falls below
//! the compactness threshold.

pub mod energy;
pub mod error;
pub mod instanton;
pub mod modular;
pub mod quadrature;
pub mod special;

pub use energy::{
    EnergyProblem, ExpansionReport, ExponentModel, MPReport, Expansion, GeometryReport,
};
pub use error::{Error, Result};
pub use instanton::{BubbleParams, Moment, MomentSet};
pub use modular::{DiscreteFunction, ExponentField, RadialGrid};
pub use quadrature::{Estimate, QuadSpec};
pub use special::DimParams;
