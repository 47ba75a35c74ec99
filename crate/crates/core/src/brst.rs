//! The constraint system, its BRST charge, and the master-equation and
//! closedness machinery for the single (abelian) constraint `T = H − E`.
//!
//! # Observable convention
//!
//! A ghost-number-zero observable with classical part `f` and ghost witness
//! `V` is represented as
//!
//! ```text
//! F = f + V·(C*P)
//! ```
//!
//! With the bracket convention of [`crate::graded`] this makes the
//! classical closedness condition come out component-wise as
//!
//! ```text
//! {Q, F} = C · (X_H f − (H − E) V)          with  X_H f = {H, f},
//! ```
//!
//! so `δF = 0` is exactly `X_H f = (H − E)V`. This identity is what pins
//! every Grassmann sign choice in the crate, and it is asserted verbatim in
//! the tests below.
//!
//! # The quantum differential
//!
//! [`brst_delta`] returns `[Q, F]_∗ / (iħ)`. The graded star commutator of
//! `Q` with anything has no ħ⁰ term (its D₀ part cancels by graded
//! commutativity), and the first-order compatibility of the product makes
//! the first surviving term `i{Q, F₀}`; dividing by `iħ` therefore yields a
//! series whose ħ⁰ coefficient is the classical differential `{Q, F₀}`.
//! Internally the commutator is computed one order beyond the requested
//! truncation so no information is lost in the division.

use std::fmt;

use num_complex::Complex64;

use crate::graded::{GhostMask, GradedPoly, HbarSeries};
use crate::star::{star_commutator, w_contraction, SchemeSpec, StarError};

/// Parameters of the constrained system: oscillator frequencies, the
/// quadratic perturbation, and the energy level defining the constraint
/// surface `Σ = {H = E}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConstraintSystem {
    pub omega1: f64,
    pub omega2: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub energy: f64,
}

impl ConstraintSystem {
    /// Whether the perturbation form `[[a, c], [c, b]]` is positive
    /// definite, the condition for the constraint equation to cut an
    /// ellipse in the action plane.
    pub fn positive_definite(&self) -> bool {
        self.a > 0.0 && self.a * self.b - self.c * self.c > 0.0
    }

    /// Unperturbed harmonic case `a = b = c = 0`.
    pub fn is_unperturbed(&self) -> bool {
        self.a == 0.0 && self.b == 0.0 && self.c == 0.0
    }

    /// `H` as a function of the action variables.
    pub fn h_of_actions(&self, s1: f64, s2: f64) -> f64 {
        self.omega1 * s1
            + self.omega2 * s2
            + self.a * s1 * s1
            + self.b * s2 * s2
            + 2.0 * self.c * s1 * s2
    }

    /// The frequencies `Ω₁ = ω₁ + 2a s₁ + 2c s₂`, `Ω₂ = ω₂ + 2b s₂ + 2c s₁`.
    pub fn frequencies_at(&self, s1: f64, s2: f64) -> (f64, f64) {
        (
            self.omega1 + 2.0 * self.a * s1 + 2.0 * self.c * s2,
            self.omega2 + 2.0 * self.b * s2 + 2.0 * self.c * s1,
        )
    }
}

/// Errors from BRST-level operations.
#[derive(Debug, Clone, PartialEq)]
pub enum BrstError {
    Star(StarError),
    /// An entry of the correction chain does not solve its equation.
    ChainPrecondition { level: usize, residual: f64 },
    /// A chain entry carries odd ghost components.
    OddObservable { level: usize },
    /// `correction_rhs` called with too few lower-order entries.
    MissingChainEntries { needed: usize, got: usize },
}

impl fmt::Display for BrstError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BrstError::Star(e) => write!(f, "{e}"),
            BrstError::ChainPrecondition { level, residual } => write!(
                f,
                "chain entry {level} does not solve its equation (residual {residual:.3e})"
            ),
            BrstError::OddObservable { level } => {
                write!(f, "chain entry {level} has odd ghost components")
            }
            BrstError::MissingChainEntries { needed, got } => {
                write!(f, "correction chain needs {needed} lower-order entries, got {got}")
            }
        }
    }
}

impl std::error::Error for BrstError {}

impl From<StarError> for BrstError {
    fn from(e: StarError) -> Self {
        BrstError::Star(e)
    }
}

/// The `H` of the system as a ghost-free degree-4 polynomial in `(x, p)`:
/// `ω₁s₁ + ω₂s₂ + a s₁² + b s₂² + 2c s₁s₂` with `sᵢ = (pᵢ² + xᵢ²)/2`.
pub fn build_hamiltonian(sys: &ConstraintSystem) -> GradedPoly {
    let s1 = GradedPoly::action(1);
    let s2 = GradedPoly::action(2);
    let r = |x: f64| Complex64::new(x, 0.0);
    s1.scale(r(sys.omega1))
        .add(&s2.scale(r(sys.omega2)))
        .add(&s1.mul(&s1).scale(r(sys.a)))
        .add(&s2.mul(&s2).scale(r(sys.b)))
        .add(&s1.mul(&s2).scale(r(2.0 * sys.c)))
}

/// The constraint polynomial `T = H − E`.
pub fn constraint_poly(sys: &ConstraintSystem) -> GradedPoly {
    build_hamiltonian(sys).sub(&GradedPoly::constant(Complex64::new(sys.energy, 0.0)))
}

/// The BRST charge `Q = C·(H − E)`: Grassmann-odd, ghost number +1, with no
/// ħ corrections (for a single constraint none are needed; `Q ∗ Q = 0`
/// holds as is because `C² = 0` and `Q` contains no `P`).
#[derive(Debug, Clone, PartialEq)]
pub struct BrstCharge {
    q: HbarSeries,
}

impl BrstCharge {
    pub fn series(&self) -> &HbarSeries {
        &self.q
    }

    pub fn classical(&self) -> &GradedPoly {
        self.q.coeff(0)
    }
}

pub fn build_brst_charge(sys: &ConstraintSystem, order: usize) -> BrstCharge {
    let q0 = GradedPoly::ghost(GhostMask::C).mul(&constraint_poly(sys));
    BrstCharge { q: HbarSeries::from_poly(q0, order) }
}

/// Assemble an observable `F = f + V·(C*P)` from its classical part and
/// ghost witness; see the module docs for why this ordering.
pub fn observable(f: &GradedPoly, v: &GradedPoly) -> GradedPoly {
    f.add(&v.mul(&GradedPoly::ghost(GhostMask::CP)))
}

/// Hamiltonian vector field action `X_H f = {H, f}`.
pub fn x_h(h: &GradedPoly, f: &GradedPoly) -> GradedPoly {
    h.poisson(f)
}

/// The quantum BRST differential `[Q, F]_∗ / (iħ)` at the truncation order
/// of `F`. Its ħ⁰ coefficient is the classical differential `{Q, F₀}`.
pub fn brst_delta(
    f: &HbarSeries,
    q: &BrstCharge,
    scheme: &SchemeSpec,
) -> Result<HbarSeries, BrstError> {
    let n = f.order();
    let fq = f.extended(1);
    // The charge lives entirely at ħ⁰, so re-truncating it is lossless.
    let qq = HbarSeries::from_poly(q.classical().clone(), fq.order());
    let comm = star_commutator(&qq, &fq, scheme)?;
    debug_assert!(comm.coeff(0).max_abs_coeff() < 1e-9, "commutator must start at order ħ");
    let minus_i = Complex64::new(0.0, -1.0);
    let mut out = HbarSeries::zero(n);
    for k in 0..=n {
        out.set_coeff(k, comm.coeff(k + 1).scale(minus_i));
    }
    Ok(out)
}

/// Decompose a ghost-number-zero chain entry into `(f, V)`.
fn split_observable(entry: &GradedPoly, level: usize) -> Result<(GradedPoly, GradedPoly), BrstError> {
    if !entry.component(GhostMask::C).is_zero() || !entry.component(GhostMask::P).is_zero() {
        return Err(BrstError::OddObservable { level });
    }
    Ok((entry.component(GhostMask::One), entry.component(GhostMask::CP)))
}

/// Right-hand side of the order-`n` correction equation
///
/// ```text
/// X_H f_n = R_n + (H − E) V_n ,
/// R_n = Σ_{k=2}^{n+1} [ D_k(H, f_{n+1−k}) − D_k(f_{n+1−k}, H) + D_{k−1}(H, v_{n+1−k}) ]
/// ```
///
/// where `D_k` is the k-fold W-contraction and `F_l = f_l + v_l·(C*P)` are
/// the lower-order entries (which must solve their own equations up to
/// `chain_tol`; `F₀` must be classically closed). For `n = 1` this is the
/// first-order obstruction density
/// `D₂(H, f) − D₂(f, H) + D₁(H, V)`.
pub fn correction_rhs(
    f_lower: &[GradedPoly],
    q: &BrstCharge,
    n: usize,
    scheme: &SchemeSpec,
    chain_tol: f64,
) -> Result<GradedPoly, BrstError> {
    assert!(n >= 1, "the chain starts at n = 1");
    if f_lower.len() < n {
        return Err(BrstError::MissingChainEntries { needed: n, got: f_lower.len() });
    }
    let h = q.classical().component(GhostMask::C); // recovers H − E
    let mut parts: Vec<(GradedPoly, GradedPoly)> = Vec::with_capacity(n);
    for (level, entry) in f_lower.iter().take(n).enumerate() {
        parts.push(split_observable(entry, level)?);
    }
    // Verify the chain up to level n − 1; level 0 must be classically closed.
    for level in 0..n {
        let (f_l, v_l) = &parts[level];
        let mut defect = x_h(&h, f_l).sub(&h.mul(v_l));
        if level > 0 {
            defect = defect.sub(&rhs_at(&h, &parts, level, scheme));
        }
        let residual = defect.max_abs_coeff();
        if residual > chain_tol {
            return Err(BrstError::ChainPrecondition { level, residual });
        }
    }
    Ok(rhs_at(&h, &parts, n, scheme))
}

fn rhs_at(
    h: &GradedPoly,
    parts: &[(GradedPoly, GradedPoly)],
    n: usize,
    scheme: &SchemeSpec,
) -> GradedPoly {
    let mut rhs = GradedPoly::zero();
    for k in 2..=n + 1 {
        let (f_l, v_l) = &parts[n + 1 - k];
        rhs = rhs
            .add(&w_contraction(h, f_l, k, scheme))
            .sub(&w_contraction(f_l, h, k, scheme))
            .add(&w_contraction(h, v_l, k - 1, scheme));
    }
    rhs
}
