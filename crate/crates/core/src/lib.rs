//! Scaled-graph over-approximations of LTI, reset and piecewise-linear
//! systems from families of circle-parametrized LMIs, with an exact
//! construction for normal LTI systems, a time-domain sampling oracle and a
//! feedback separation check.

pub mod error;
pub mod exact;
pub mod feedback;
pub mod lmi;
pub mod model;
pub mod par;
pub mod presets;
pub mod regions;
pub mod sim;
pub mod sdp;
pub mod solve;
pub mod svg;

pub use error::{Error, Result};
