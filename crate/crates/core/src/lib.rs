//! Deformation-quantization toolkit for a two-oscillator system with a
//! single energy constraint: graded polynomial observables with one ghost
//! pair, Wick-type and Weyl star products truncated in ħ, the BRST charge
//! of the constraint, action-angle geometry of the energy surface, and
//! first-order quantizability analysis (polynomial correction solver plus
//! closed-orbit obstruction certificates on resonant Liouville tori).
//!
//! All values are immutable after construction and all operations are pure
//! functions, so everything here is safe to evaluate in parallel.

pub mod brst;
pub mod fixture;
pub mod graded;
pub mod linalg;
pub mod obstruction;
pub mod rng;
pub mod star;
pub mod torus;

pub use num_complex::Complex64;
