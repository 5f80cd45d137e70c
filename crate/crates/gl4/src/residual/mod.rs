//! Approximate solution around Γ_ε, its residual, kernel projections, weighted norms and the ω form.

pub mod approx;
pub mod jet;
pub mod lemmas;
pub mod linear;
pub mod pert;
pub mod norms;
pub mod omega;
pub mod projection;
pub mod reduction;

pub use approx::*;
pub use lemmas::*;
pub use linear::*;
pub use pert::*;
pub use norms::*;
pub use omega::*;
pub use projection::*;
pub use reduction::*;
