//! Multi-orthogonal polynomials for Nikishin systems on star-like sets.
//!
//! A Nikishin system here is generated by `p` positive measures living on the
//! segments `[a_k, b_k]` (the push-forwards of rotationally invariant measures
//! on the stars `Γ_k = {z : z^{p+1} ∈ [a_k, b_k]}`). The crate constructs the
//! nested measure hierarchies, solves for the multi-orthogonal polynomials
//! `Q_n(z) = z^ℓ 𝒬_d(z^{p+1})`, extracts the order-(p+1) three-term recurrence
//! `z Q_n = Q_{n+1} + a_n Q_{n-p}`, evaluates the functions of the second kind
//! together with their zero polynomials and normalization constants, solves the
//! associated vector equilibrium problem, and builds the Hermite-Padé
//! approximants to the Cauchy transforms of the system.
//!
//! All segment-side numerics run at a configurable binary precision (default
//! 256 bits) on top of MPFR via the `rug` crate; the equilibrium solver works
//! in `f64`, which is ample for the potential-theoretic comparisons.

pub mod asymptotics;
pub mod equilibrium;
pub mod error;
pub mod hermite_pade;
pub mod indexcomb;
pub mod mop;
pub mod poly;
pub mod quad;
pub mod recurrence;
pub mod secondkind;
pub mod star;

pub use error::{Error, Result};
pub use indexcomb::IndexData;
pub use mop::QnRecord;
pub use poly::MonicPoly;
pub use star::{DensitySpec, DiscreteMeasure, StarSystem};
