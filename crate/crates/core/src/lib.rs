//! Non-commutative differential calculus and free-probability verification.
//!
//! The crate is organised bottom-up:
//!
//! * [`ncpoly`]: sparse polynomials `ℂ⟨Z₁,…,Zₙ⟩` and the tensor square, with
//!   `♯`, flip, adjoints and projective-norm bounds.
//! * [`moments`]: trace oracles (free semicirculars, free products with
//!   semicircular perturbations, matrix models).
//! * [`calculus`]: derivations `∂ⱼ`, partial traces, the `Δ_{p,j}` maps and
//!   the adjoint `∂ⱼ*`.
//! * [`fisher`]: conjugate systems, free Fisher information, the perturbation
//!   curve, `χ*` and the entropy-dimension estimate.
//! * [`analysis`]: matrix-scale inequality checks, kernel balance, the
//!   leading-coefficient reduction engine, zero-divisor probes and atom scans.

pub mod analysis;
pub mod calculus;
pub mod error;
pub mod fisher;
pub mod linalg;
pub mod moments;
pub mod ncpoly;
pub mod random;

pub use error::{Error, Result};
pub use moments::{MatrixTuple, OracleDescriptor, SemicircularOracle, TraceOracle};
pub use ncpoly::{Letter, NcPoly, NcTensor, Scalar, Word};
