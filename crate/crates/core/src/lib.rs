//! Traveling-wave solver for the reactive Boussinesq system in a 3D channel.
//!
//! The library computes steady front solutions `(c, T, u)` of
//!
//! ```text
//!   -c T_x - ΔT + u·∇T          = f(T)
//!   -c u_x + d u·∇u - νΔu + ∇p  = T ρ⃗        div u = 0
//! ```
//!
//! posed on an infinite cylinder `D = ℝ × Ω` with a bounded cross-section
//! `Ω ⊂ ℝ²`, no-flux lateral conditions for the temperature and no-slip
//! conditions for the flow. The wave speed `c` is pinned by the normalization
//! `max { T(x,x̃) : x ∈ [0,a] } = θ₀`, with `θ₀` the ignition temperature of
//! the reaction rate `f`.
//!
//! Numerically the temperature problem lives on a truncated channel
//! `R_a = [-a,a] × Ω` and the flow problem on a longer truncation
//! `[-A,A] × Ω`, coupled through two extension operators (a reflection
//! extension for `T` and a divergence-free reflection extension for the
//! velocity). A damped fixed-point iteration with a homotopy parameter
//! `τ ∈ [0,1]` (multiplying reaction, buoyancy and advection coupling)
//! drives the solve from the decoupled planar state at `τ = 0` to the full
//! problem at `τ = 1`.
//!
//! Besides the solver, the crate ships a diagnostics layer
//! ([`diagnostics`]) that audits explicit energy inequalities and
//! identities on computed states, and a small binary dump / CSV layer for
//! persisting states ([`fields::dump`]).

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod fixedpoint;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod reaction;
pub mod temperature;

pub use error::{Error, Result};
