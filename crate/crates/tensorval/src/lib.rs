//! Exact algebra of translation-invariant, O(n)-covariant tensor valuations
//! on convex bodies, together with a numeric geometry layer.
//!
//! The crate has two halves that check each other:
//!
//! * an exact symbolic half ([`exact`], [`valalg`], [`kinops`], [`spherical`])
//!   implementing the closed-form operator tables on the basis Q^a Φ_{k,s} —
//!   Alesker-Fourier transform, product, convolution, Crofton operators,
//!   Poincaré pairings and the additive/intersectional kinematic operators;
//! * a numeric half ([`symtensor`], [`bodies`], [`mcharness`]) that evaluates
//!   Minkowski tensors on polytopes and balls and verifies the
//!   integral-geometric formulas by Monte Carlo integration at desk scale.

pub mod bodies;
pub mod exact;
pub mod kinops;
pub mod mcharness;
pub mod spherical;
pub mod symtensor;
pub mod valalg;
