//! The versioned default parameter set used by tests, reports, and the CLI
//! defaults, together with the derived resonant-torus data.
//!
//! The derived values (`energy` and the torus coordinates) were produced by
//! the derivation oracle in `tests/oracles.rs`, which scans energies,
//! root-finds the resonance-line/energy-curve intersections by bisection,
//! and checks first-quadrant membership. That test re-derives everything
//! from scratch on every run and fails if this file drifts.

use serde::{Deserialize, Serialize};

use crate::brst::ConstraintSystem;

/// Frozen coordinates and frequencies of one resonant torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusFixture {
    pub s1: f64,
    pub s2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

/// The default system, star-product parameters, and derived torus data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub system: ConstraintSystem,
    pub alpha: f64,
    pub beta: f64,
    /// Torus with Ω₂ = 0 (maximum of s₁ on the surface).
    pub t1: TorusFixture,
    /// Torus with Ω₁ = 0 (maximum of s₂ on the surface).
    pub t2: TorusFixture,
    pub provenance: String,
}

const FIXTURE_JSON: &str = include_str!("../fixtures/default_system.json");

/// The embedded default fixture.
pub fn default_fixture() -> Fixture {
    serde_json::from_str(FIXTURE_JSON).expect("embedded fixture parses")
}
