//! Graded polynomial algebra on the extended phase space.
//!
//! The base phase space is ℝ⁴ with canonical coordinates
//! `(ξ¹, ξ², ξ³, ξ⁴) = (x₁, p₁, x₂, p₂)` and bracket `{xᵢ, pⱼ} = δᵢⱼ`.
//! It is extended by one pair of odd ghost generators `C` (degree +1) and
//! `P` (degree −1) with `C² = P² = 0` and `{C, P} = 1`.
//!
//! # Sign conventions
//!
//! All Grassmann signs in this crate are fixed by the following choices and
//! are exercised by tests (graded Leibniz, graded Jacobi, and the BRST
//! component identity in [`crate::brst`]):
//!
//! * normal order: `C` before `P`; the two-ghost basis monomial is `C*P`;
//! * left derivatives strip a generator from the front of a normal-ordered
//!   monomial, right derivatives from the back:
//!
//!   | monomial | ∂C→ (left) | ←∂C (right) | ∂P→ (left) | ←∂P (right) |
//!   |----------|------------|-------------|------------|-------------|
//!   | `C`      | `1`        | `1`         | `0`        | `0`         |
//!   | `P`      | `0`        | `0`         | `1`        | `1`         |
//!   | `C*P`    | `P`        | `-P`        | `-C`       | `C`         |
//!
//! * the graded Poisson bracket is
//!
//!   ```text
//!   {F, G} = Σᵢ (∂F/∂xᵢ ∂G/∂pᵢ − ∂F/∂pᵢ ∂G/∂xᵢ)
//!          + (F←∂C)(∂P→G) + (F←∂P)(∂C→G)
//!   ```
//!
//!   which reproduces `{C, P} = {P, C} = 1` and satisfies the graded
//!   Leibniz and Jacobi identities.
//!
//! Coefficients are complex doubles; after every arithmetic operation terms
//! with magnitude below [`ZERO_TOL`] are pruned, so "the zero polynomial"
//! is representable exactly.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::rng::SplitMix64;

/// Number of even canonical variables.
pub const NVARS: usize = 4;

/// Display names of the even canonical variables, in storage order.
pub const VAR_NAMES: [&str; 4] = ["x1", "p1", "x2", "p2"];

/// Default pruning threshold for polynomial coefficients.
pub const ZERO_TOL: f64 = 1e-12;

/// Errors from graded-algebra operations.
#[derive(Debug, Clone, PartialEq)]
pub enum GradedError {
    /// Evaluation of a ghost-bearing polynomial at a phase-space point.
    GhostInEval { term: String },
}

impl fmt::Display for GradedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GradedError::GhostInEval { term } => {
                write!(f, "cannot evaluate ghost-bearing term {term} at a phase-space point")
            }
        }
    }
}

impl std::error::Error for GradedError {}

/// Grassmann parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Ghost content of a monomial. `C² = P² = 0`, so each odd generator
/// appears at most once; the two-ghost sector is stored as `C*P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GhostMask {
    /// No ghost factor.
    One,
    /// Single `C` factor (ghost number +1).
    C,
    /// Single `P` factor (ghost number −1).
    P,
    /// Normal-ordered product `C*P` (ghost number 0).
    CP,
}

impl GhostMask {
    pub fn ghost_number(self) -> i64 {
        match self {
            GhostMask::One | GhostMask::CP => 0,
            GhostMask::C => 1,
            GhostMask::P => -1,
        }
    }

    pub fn parity(self) -> Parity {
        match self {
            GhostMask::One | GhostMask::CP => Parity::Even,
            GhostMask::C | GhostMask::P => Parity::Odd,
        }
    }

    /// Product of two ghost monomials in normal order: `None` when the
    /// product vanishes, otherwise the resulting mask and the Koszul sign.
    pub fn product(self, other: GhostMask) -> Option<(GhostMask, f64)> {
        use GhostMask::*;
        match (self, other) {
            (One, g) | (g, One) => Some((g, 1.0)),
            (C, P) => Some((CP, 1.0)),
            (P, C) => Some((CP, -1.0)),
            _ => None,
        }
    }

    /// Left derivative `∂θ→` acting on this mask. Returns the resulting
    /// mask and sign, or `None` when the derivative vanishes.
    fn deriv_left(self, var: GhostVar) -> Option<(GhostMask, f64)> {
        use GhostMask::*;
        match (var, self) {
            (GhostVar::C, C) => Some((One, 1.0)),
            (GhostVar::C, CP) => Some((P, 1.0)),
            (GhostVar::P, P) => Some((One, 1.0)),
            (GhostVar::P, CP) => Some((C, -1.0)),
            _ => None,
        }
    }

    /// Right derivative `←∂θ` acting on this mask.
    fn deriv_right(self, var: GhostVar) -> Option<(GhostMask, f64)> {
        use GhostMask::*;
        match (var, self) {
            (GhostVar::C, C) => Some((One, 1.0)),
            (GhostVar::C, CP) => Some((P, -1.0)),
            (GhostVar::P, P) => Some((One, 1.0)),
            (GhostVar::P, CP) => Some((C, 1.0)),
            _ => None,
        }
    }

    fn label(self) -> &'static str {
        match self {
            GhostMask::One => "",
            GhostMask::C => "C",
            GhostMask::P => "P",
            GhostMask::CP => "C*P",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GhostVar {
    C,
    P,
}

/// A generator of the extended algebra, for [`GradedPoly::deriv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Even variable by index: 0 = x₁, 1 = p₁, 2 = x₂, 3 = p₂.
    Xi(usize),
    GhostC,
    GhostP,
}

/// Sidedness of a Grassmann derivative. Ignored for even variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A monomial `x₁^a p₁^b x₂^c p₂^d · γ` with `γ` a ghost mask.
///
/// Ordered graded-lexicographically: total even degree first, then the
/// exponent tuple, then the ghost mask. This ordering fixes the canonical
/// serialization of polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub exps: [u16; NVARS],
    pub ghost: GhostMask,
}

impl Monomial {
    pub fn unit() -> Self {
        Monomial { exps: [0; NVARS], ghost: GhostMask::One }
    }

    pub fn degree(&self) -> usize {
        self.exps.iter().map(|&e| e as usize).sum()
    }

    fn string(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (i, &e) in self.exps.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(VAR_NAMES[i].to_string()),
                _ => parts.push(format!("{}^{}", VAR_NAMES[i], e)),
            }
        }
        let ghost = self.ghost.label();
        if !ghost.is_empty() {
            parts.push(ghost.to_string());
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.degree(), self.exps, self.ghost).cmp(&(other.degree(), other.exps, other.ghost))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial on the extended phase space with complex coefficients,
/// stored as a sorted map from monomials to coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradedPoly {
    terms: BTreeMap<Monomial, Complex64>,
}

impl GradedPoly {
    pub fn zero() -> Self {
        GradedPoly { terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant(c: Complex64) -> Self {
        let mut p = GradedPoly::zero();
        p.add_term(Monomial::unit(), c);
        p
    }

    pub fn one() -> Self {
        GradedPoly::constant(Complex64::new(1.0, 0.0))
    }

    /// The even variable `ξ^i` (0 = x₁, 1 = p₁, 2 = x₂, 3 = p₂).
    pub fn xi(i: usize) -> Self {
        assert!(i < NVARS, "variable index out of range");
        let mut exps = [0u16; NVARS];
        exps[i] = 1;
        let mut p = GradedPoly::zero();
        p.add_term(Monomial { exps, ghost: GhostMask::One }, Complex64::new(1.0, 0.0));
        p
    }

    pub fn ghost(mask: GhostMask) -> Self {
        let mut p = GradedPoly::zero();
        p.add_term(Monomial { exps: [0; NVARS], ghost: mask }, Complex64::new(1.0, 0.0));
        p
    }

    /// The action variable `sᵢ = (pᵢ² + xᵢ²)/2` of oscillator `i` (1 or 2).
    pub fn action(i: usize) -> Self {
        assert!(i == 1 || i == 2, "oscillator index must be 1 or 2");
        let x = GradedPoly::xi(2 * (i - 1));
        let p = GradedPoly::xi(2 * (i - 1) + 1);
        x.mul(&x).add(&p.mul(&p)).scale(Complex64::new(0.5, 0.0))
    }

    /// Add a single term, merging and pruning.
    pub fn add_term(&mut self, mon: Monomial, coeff: Complex64) {
        let entry = self.terms.entry(mon).or_insert(Complex64::new(0.0, 0.0));
        *entry += coeff;
        if entry.norm() < ZERO_TOL {
            self.terms.remove(&mon);
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Complex64)>>(iter: I) -> Self {
        let mut p = GradedPoly::zero();
        for (m, c) in iter {
            p.add_term(m, c);
        }
        p
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, mon: &Monomial) -> Complex64 {
        self.terms.get(mon).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Total even degree of the polynomial (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, -c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        GradedPoly::from_terms(self.terms.iter().map(|(m, v)| (*m, v * c)))
    }

    /// Graded-commutative product. Koszul signs come from the ghost masks;
    /// odd generators square to zero.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = GradedPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                if let Some((ghost, sign)) = m1.ghost.product(m2.ghost) {
                    let mut exps = m1.exps;
                    for i in 0..NVARS {
                        exps[i] += m2.exps[i];
                    }
                    out.add_term(Monomial { exps, ghost }, c1 * c2 * sign);
                }
            }
        }
        out
    }

    /// Partial derivative with respect to one generator. `side` matters only
    /// for the odd generators; see the module docs for the sign table.
    pub fn deriv(&self, var: Generator, side: Side) -> Self {
        match var {
            Generator::Xi(i) => self.deriv_xi(i),
            Generator::GhostC => self.deriv_ghost(GhostVar::C, side),
            Generator::GhostP => self.deriv_ghost(GhostVar::P, side),
        }
    }

    fn deriv_xi(&self, i: usize) -> Self {
        assert!(i < NVARS);
        let mut out = GradedPoly::zero();
        for (m, c) in &self.terms {
            if m.exps[i] > 0 {
                let mut exps = m.exps;
                exps[i] -= 1;
                out.add_term(
                    Monomial { exps, ghost: m.ghost },
                    c * (m.exps[i] as f64),
                );
            }
        }
        out
    }

    fn deriv_ghost(&self, var: GhostVar, side: Side) -> Self {
        let mut out = GradedPoly::zero();
        for (m, c) in &self.terms {
            let d = match side {
                Side::Left => m.ghost.deriv_left(var),
                Side::Right => m.ghost.deriv_right(var),
            };
            if let Some((ghost, sign)) = d {
                out.add_term(Monomial { exps: m.exps, ghost }, c * sign);
            }
        }
        out
    }

    /// Graded Poisson bracket; see the module docs for the convention.
    pub fn poisson(&self, other: &Self) -> Self {
        let mut out = GradedPoly::zero();
        // Even part: Σ ∂F/∂xᵢ ∂G/∂pᵢ − ∂F/∂pᵢ ∂G/∂xᵢ.
        for osc in 0..2 {
            let x = 2 * osc;
            let p = 2 * osc + 1;
            out = out.add(&self.deriv_xi(x).mul(&other.deriv_xi(p)));
            out = out.sub(&self.deriv_xi(p).mul(&other.deriv_xi(x)));
        }
        // Ghost part: (F←∂C)(∂P→G) + (F←∂P)(∂C→G).
        out = out.add(
            &self
                .deriv_ghost(GhostVar::C, Side::Right)
                .mul(&other.deriv_ghost(GhostVar::P, Side::Left)),
        );
        out = out.add(
            &self
                .deriv_ghost(GhostVar::P, Side::Right)
                .mul(&other.deriv_ghost(GhostVar::C, Side::Left)),
        );
        out
    }

    /// Evaluate a ghost-free polynomial at a phase-space point.
    pub fn eval(&self, point: [f64; NVARS]) -> Result<Complex64, GradedError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            if m.ghost != GhostMask::One {
                return Err(GradedError::GhostInEval { term: m.string() });
            }
            let mut v = 1.0;
            for i in 0..NVARS {
                v *= point[i].powi(m.exps[i] as i32);
            }
            acc += c * v;
        }
        Ok(acc)
    }

    /// Ghost number if the polynomial is homogeneous in it, else `None`.
    /// The zero polynomial reports `Some(0)`.
    pub fn ghost_number(&self) -> Option<i64> {
        let mut n: Option<i64> = None;
        for m in self.terms.keys() {
            let g = m.ghost.ghost_number();
            match n {
                None => n = Some(g),
                Some(prev) if prev != g => return None,
                _ => {}
            }
        }
        Some(n.unwrap_or(0))
    }

    /// Grassmann parity if definite, else `None`. Zero is `Even`.
    pub fn parity(&self) -> Option<Parity> {
        let mut p: Option<Parity> = None;
        for m in self.terms.keys() {
            let q = m.ghost.parity();
            match p {
                None => p = Some(q),
                Some(prev) if prev != q => return None,
                _ => {}
            }
        }
        Some(p.unwrap_or(Parity::Even))
    }

    /// The ghost-free polynomial multiplying the given ghost mask, i.e. the
    /// component `f_γ` in the unique decomposition `F = Σ_γ f_γ · γ`.
    pub fn component(&self, mask: GhostMask) -> GradedPoly {
        GradedPoly::from_terms(self.terms.iter().filter_map(|(m, c)| {
            (m.ghost == mask).then_some((Monomial { exps: m.exps, ghost: GhostMask::One }, *c))
        }))
    }

    /// Projection onto a fixed ghost number (keeps ghost factors).
    pub fn ghost_number_component(&self, n: i64) -> GradedPoly {
        GradedPoly::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.ghost.ghost_number() == n)
                .map(|(m, c)| (*m, *c)),
        )
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop all terms with coefficient magnitude below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        GradedPoly::from_terms(
            self.terms.iter().filter(|(_, c)| c.norm() >= tol).map(|(m, c)| (*m, *c)),
        )
    }

    /// Apply a permutation to the even variables: `out(ξ) = self(ξ∘perm)`,
    /// i.e. exponent `exps[i]` moves to slot `perm[i]`.
    pub fn permute_vars(&self, perm: [usize; NVARS]) -> Self {
        GradedPoly::from_terms(self.terms.iter().map(|(m, c)| {
            let mut exps = [0u16; NVARS];
            for i in 0..NVARS {
                exps[perm[i]] = m.exps[i];
            }
            (Monomial { exps, ghost: m.ghost }, *c)
        }))
    }

    /// Canonical text form: terms sorted by monomial order, each printed as
    /// `(re±imi)*monomial`. The zero polynomial prints as `0`.
    pub fn canonical_string(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| format!("({})*{}", fmt_complex(*c), m.string()))
            .collect();
        parts.join(" + ")
    }

    /// Random polynomial for property and residual checks: `n_terms` draws of
    /// monomials with even degree ≤ `max_degree`, ghost mask drawn from
    /// `masks`, and small integer coefficients (so products stay exact).
    pub fn random(
        rng: &mut SplitMix64,
        max_degree: usize,
        masks: &[GhostMask],
        n_terms: usize,
    ) -> Self {
        let mut p = GradedPoly::zero();
        for _ in 0..n_terms {
            let mut exps = [0u16; NVARS];
            let degree = rng.next_index(max_degree + 1);
            for _ in 0..degree {
                exps[rng.next_index(NVARS)] += 1;
            }
            let ghost = masks[rng.next_index(masks.len())];
            let re = rng.next_int(-3, 3) as f64;
            let im = rng.next_int(-3, 3) as f64;
            p.add_term(Monomial { exps, ghost }, Complex64::new(re, im));
        }
        p
    }
}

impl fmt::Display for GradedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

/// Polynomials appear in JSON reports in their canonical text form.
impl serde::Serialize for GradedPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.canonical_string())
    }
}

fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x}")
}

/// Format a complex number as `re±imi`, e.g. `1.5-0.3i`.
pub fn fmt_complex(c: Complex64) -> String {
    let sign = if c.im < 0.0 { '-' } else { '+' };
    format!("{}{}{}i", fmt_f64(c.re), sign, fmt_f64(c.im.abs()))
}

/// Truncated formal power series in ħ with [`GradedPoly`] coefficients.
///
/// `coeffs[k]` is the coefficient of ħ^k; all operations discard terms of
/// order above the truncation order, which every binary operation requires
/// to agree between operands.
#[derive(Debug, Clone, PartialEq)]
pub struct HbarSeries {
    coeffs: Vec<GradedPoly>,
}

impl HbarSeries {
    /// Zero series with the given truncation order.
    pub fn zero(order: usize) -> Self {
        HbarSeries { coeffs: vec![GradedPoly::zero(); order + 1] }
    }

    /// A classical (order-ħ⁰) element, truncated at `order`.
    pub fn from_poly(p: GradedPoly, order: usize) -> Self {
        let mut s = HbarSeries::zero(order);
        s.coeffs[0] = p;
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &GradedPoly {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[GradedPoly] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, k: usize, p: GradedPoly) {
        self.coeffs[k] = p;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(GradedPoly::is_zero)
    }

    /// Same series viewed at a higher truncation order.
    pub fn extended(&self, extra: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.extend(std::iter::repeat_with(GradedPoly::zero).take(extra));
        HbarSeries { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.order(), other.order(), "truncation orders must match");
        HbarSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.order(), other.order(), "truncation orders must match");
        HbarSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        HbarSeries { coeffs: self.coeffs.iter().map(|p| p.scale(c)).collect() }
    }

    /// Multiply by ħ^k, discarding overflow beyond the truncation order.
    pub fn shift_up(&self, k: usize) -> Self {
        let mut out = HbarSeries::zero(self.order());
        for (i, p) in self.coeffs.iter().enumerate() {
            if i + k <= self.order() {
                out.coeffs[i + k] = p.clone();
            }
        }
        out
    }

    /// Largest coefficient magnitude across all orders.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(GradedPoly::max_abs_coeff).fold(0.0, f64::max)
    }

    /// Parity if every coefficient agrees on one, else `None`.
    pub fn parity(&self) -> Option<Parity> {
        let mut p: Option<Parity> = None;
        for c in &self.coeffs {
            if c.is_zero() {
                continue;
            }
            let q = c.parity()?;
            match p {
                None => p = Some(q),
                Some(prev) if prev != q => return None,
                _ => {}
            }
        }
        Some(p.unwrap_or(Parity::Even))
    }

    /// Ghost number if every coefficient agrees on one, else `None`.
    pub fn ghost_number(&self) -> Option<i64> {
        let mut n: Option<i64> = None;
        for c in &self.coeffs {
            if c.is_zero() {
                continue;
            }
            let g = c.ghost_number()?;
            match n {
                None => n = Some(g),
                Some(prev) if prev != g => return None,
                _ => {}
            }
        }
        Some(n.unwrap_or(0))
    }

    /// Canonical text form, one entry per ħ power.
    pub fn canonical_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(GradedPoly::canonical_string).collect()
    }
}
