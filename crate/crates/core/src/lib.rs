//! Certified numerics for an upper bound on the Hausdorff dimension of the
//! Julia set of the Feigenbaum renormalisation fixed point.

pub mod arith;
pub mod bigfix;
pub mod certify;
pub mod cover;
pub mod domain;
pub mod koebe;
pub mod map;
pub mod plot;
pub mod solver;

pub use arith::{Ball, RoundoffModel};
pub use map::{FeigenbaumMap, LanfordPolynomial};
