//! Formal star products on the extended algebra.
//!
//! The product is the bidifferential exponential
//!
//! ```text
//! F ∗ G = F · exp( ←∂/∂ξ^A  ħ W^{AB}  ∂→/∂ξ^B  +  ←∂/∂C  iħ  ∂→/∂P ) · G
//! ```
//!
//! truncated at the series order. `W` is the scheme matrix: the Wick form
//! built from nonzero reals `α`, `β`, or the Weyl form `(i/2)·J` with `J`
//! the canonical symplectic matrix. In both cases `W − Wᵀ = iJ`, which is
//! exactly what makes the antisymmetrized first-order term reproduce
//! `i{F, G}`.
//!
//! The ghost factor terminates after one application because the odd
//! derivatives square to zero. Its normalization carries an explicit `i`
//! so that the first-order compatibility
//!
//! ```text
//! D₁(F,G) − (−1)^{|F||G|} D₁(G,F) = i{F,G}
//! ```
//!
//! holds in every ghost sector, not only for ghost-free arguments; this is
//! checked exhaustively by the test suite.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::graded::{GhostMask, GradedPoly, Generator, HbarSeries, Parity, Side, NVARS};
use crate::rng::SplitMix64;

/// Errors from star-product operations.
#[derive(Debug, Clone, PartialEq)]
pub enum StarError {
    /// Binary operation on series with different truncation orders.
    OrderMismatch { left: usize, right: usize },
    /// Graded commutator of two arguments that both mix parities.
    IndefiniteParity,
    /// Scheme construction with invalid parameters.
    InvalidScheme(String),
}

impl fmt::Display for StarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StarError::OrderMismatch { left, right } => {
                write!(f, "truncation-order mismatch: {left} vs {right}")
            }
            StarError::IndefiniteParity => {
                write!(f, "graded commutator needs at least one argument of definite parity")
            }
            StarError::InvalidScheme(msg) => write!(f, "invalid scheme: {msg}"),
        }
    }
}

impl std::error::Error for StarError {}

/// Which star product to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    /// Wick-type product; `alpha` and `beta` are nonzero reals.
    Wick { alpha: f64, beta: f64 },
    /// Weyl (symmetric) product.
    Weyl,
}

/// A star-product scheme: the kind plus its derived 4×4 matrix `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec {
    kind: SchemeKind,
    w: [[Complex64; NVARS]; NVARS],
}

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl SchemeSpec {
    /// Wick scheme with block matrix
    /// `W = ½ [[α, i], [−i, 1/α]] ⊕ ½ [[β, i], [−i, 1/β]]`.
    pub fn wick(alpha: f64, beta: f64) -> Result<Self, StarError> {
        if alpha == 0.0 || beta == 0.0 || !alpha.is_finite() || !beta.is_finite() {
            return Err(StarError::InvalidScheme(format!(
                "alpha and beta must be nonzero finite reals (got alpha={alpha}, beta={beta})"
            )));
        }
        let mut w = [[Complex64::new(0.0, 0.0); NVARS]; NVARS];
        for (blk, &g) in [alpha, beta].iter().enumerate() {
            let o = 2 * blk;
            w[o][o] = re(g / 2.0);
            w[o][o + 1] = I / 2.0;
            w[o + 1][o] = -I / 2.0;
            w[o + 1][o + 1] = re(1.0 / (2.0 * g));
        }
        Ok(SchemeSpec { kind: SchemeKind::Wick { alpha, beta }, w })
    }

    /// Weyl scheme, `W = (i/2)·J`.
    pub fn weyl() -> Self {
        let mut w = [[Complex64::new(0.0, 0.0); NVARS]; NVARS];
        for blk in 0..2 {
            let o = 2 * blk;
            w[o][o + 1] = I / 2.0;
            w[o + 1][o] = -I / 2.0;
        }
        SchemeSpec { kind: SchemeKind::Weyl, w }
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn w(&self) -> &[[Complex64; NVARS]; NVARS] {
        &self.w
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SchemeKind::Wick { .. } => "wick",
            SchemeKind::Weyl => "weyl",
        }
    }

    /// Residual of `W − Wᵀ = iJ`, zero for both schemes.
    pub fn symplectic_defect(&self) -> f64 {
        let mut j = [[Complex64::new(0.0, 0.0); NVARS]; NVARS];
        for blk in 0..2 {
            let o = 2 * blk;
            j[o][o + 1] = re(1.0);
            j[o + 1][o] = re(-1.0);
        }
        let mut worst: f64 = 0.0;
        for a in 0..NVARS {
            for b in 0..NVARS {
                worst = worst.max((self.w[a][b] - self.w[b][a] - I * j[a][b]).norm());
            }
        }
        worst
    }

    /// The rank-2 kernel of the Wick form: with `λ₁ = (i, −α, 0, 0)` and
    /// `λ₂ = (0, 0, i, −β)` one has `W^{AB} λ_B = 0` and, by Hermiticity,
    /// `conj(λ_A) W^{AB} = 0`. Returns the worst entry magnitude over both
    /// identities and both covectors, or `None` for the Weyl scheme (whose
    /// `W` has full rank).
    pub fn wick_kernel_residual(&self) -> Option<f64> {
        let SchemeKind::Wick { alpha, beta } = self.kind else {
            return None;
        };
        let lambdas = [
            [I, re(-alpha), re(0.0), re(0.0)],
            [re(0.0), re(0.0), I, re(-beta)],
        ];
        let mut worst: f64 = 0.0;
        for l in &lambdas {
            for a in 0..NVARS {
                let right: Complex64 = (0..NVARS).map(|b| self.w[a][b] * l[b]).sum();
                worst = worst.max(right.norm());
            }
            for b in 0..NVARS {
                let left: Complex64 = (0..NVARS).map(|a| l[a].conj() * self.w[a][b]).sum();
                worst = worst.max(left.norm());
            }
        }
        Some(worst)
    }

    /// The nonzero entries of `W` as `(row, col, value)`.
    fn entries(&self) -> Vec<(usize, usize, Complex64)> {
        let mut v = Vec::new();
        for a in 0..NVARS {
            for b in 0..NVARS {
                if self.w[a][b].norm() > 0.0 {
                    v.push((a, b, self.w[a][b]));
                }
            }
        }
        v
    }
}

/// Table of iterated even derivatives of `p`, keyed by derivative
/// multi-index, up to total order `kmax`. Vanishing derivatives are omitted.
fn deriv_table(p: &GradedPoly, kmax: usize) -> BTreeMap<[u16; NVARS], GradedPoly> {
    let mut table = BTreeMap::new();
    if p.is_zero() {
        return table;
    }
    table.insert([0u16; NVARS], p.clone());
    let mut frontier: Vec<[u16; NVARS]> = vec![[0; NVARS]];
    for _ in 0..kmax {
        let mut next = Vec::new();
        for mu in frontier {
            let base = table[&mu].clone();
            for i in 0..NVARS {
                let mut nu = mu;
                nu[i] += 1;
                if table.contains_key(&nu) {
                    continue;
                }
                let d = base.deriv(Generator::Xi(i), Side::Left);
                if !d.is_zero() {
                    table.insert(nu, d);
                    next.push(nu);
                }
            }
        }
        frontier = next;
    }
    table
}

/// The order-k term of `exp(Σ W^{AB} ∂_A ⊗ ∂_B)` applied to `(f, g)`:
/// sum over multisets of W entries with total multiplicity k, weighted by
/// `Π (W^{ab})^{m_ab} / m_ab!`. Equals the k-fold contraction divided by k!.
fn dk_even_from_tables(
    ftab: &BTreeMap<[u16; NVARS], GradedPoly>,
    gtab: &BTreeMap<[u16; NVARS], GradedPoly>,
    k: usize,
    scheme: &SchemeSpec,
) -> GradedPoly {
    let entries = scheme.entries();
    let mut out = GradedPoly::zero();
    let mut mu = [0u16; NVARS];
    let mut nu = [0u16; NVARS];
    distribute(
        &entries,
        0,
        k,
        Complex64::new(1.0, 0.0),
        &mut mu,
        &mut nu,
        &mut |coeff, mu, nu| {
            if let (Some(fd), Some(gd)) = (ftab.get(mu), gtab.get(nu)) {
                out = out.add(&fd.mul(gd).scale(coeff));
            }
        },
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn distribute(
    entries: &[(usize, usize, Complex64)],
    idx: usize,
    remaining: usize,
    coeff: Complex64,
    mu: &mut [u16; NVARS],
    nu: &mut [u16; NVARS],
    emit: &mut impl FnMut(Complex64, &[u16; NVARS], &[u16; NVARS]),
) {
    if idx == entries.len() {
        if remaining == 0 {
            emit(coeff, mu, nu);
        }
        return;
    }
    let (a, b, w) = entries[idx];
    let mut c = coeff;
    for m in 0..=remaining {
        if m > 0 {
            c = c * w / (m as f64);
            mu[a] += 1;
            nu[b] += 1;
        }
        distribute(entries, idx + 1, remaining - m, c, mu, nu, emit);
        if m == remaining {
            mu[a] -= m as u16;
            nu[b] -= m as u16;
            break;
        }
    }
}

/// Right C-derivative of `F`, used by the ghost factor of the product.
fn ghost_right_c(f: &GradedPoly) -> GradedPoly {
    f.deriv(Generator::GhostC, Side::Right)
}

/// Left P-derivative of `G`, used by the ghost factor of the product.
fn ghost_left_p(g: &GradedPoly) -> GradedPoly {
    g.deriv(Generator::GhostP, Side::Left)
}

/// The coefficient of ħ^k in `F ∗ G` for polynomial (order-ħ⁰) arguments;
/// `k = 0` is the graded pointwise product.
pub fn extract_dk(f: &GradedPoly, g: &GradedPoly, k: usize, scheme: &SchemeSpec) -> GradedPoly {
    if k == 0 {
        return f.mul(g);
    }
    let ftab = deriv_table(f, k);
    let gtab = deriv_table(g, k);
    let fc = ghost_right_c(f);
    let gp = ghost_left_p(g);
    let fctab = deriv_table(&fc, k - 1);
    let gptab = deriv_table(&gp, k - 1);
    let even = dk_even_from_tables(&ftab, &gtab, k, scheme);
    let ghost = dk_even_from_tables(&fctab, &gptab, k - 1, scheme).scale(I);
    even.add(&ghost)
}

/// The k-fold W-contraction `∂^k f ·W^⊗k· ∂^k g` of ghost-free arguments,
/// i.e. the order-k exponential term multiplied back by k!.
pub fn w_contraction(f: &GradedPoly, g: &GradedPoly, k: usize, scheme: &SchemeSpec) -> GradedPoly {
    let mut factorial = 1.0;
    for j in 1..=k {
        factorial *= j as f64;
    }
    let ftab = deriv_table(f, k);
    let gtab = deriv_table(g, k);
    dk_even_from_tables(&ftab, &gtab, k, scheme).scale(re(factorial))
}

/// Star product of two series with matching truncation order.
pub fn star(f: &HbarSeries, g: &HbarSeries, scheme: &SchemeSpec) -> Result<HbarSeries, StarError> {
    if f.order() != g.order() {
        return Err(StarError::OrderMismatch { left: f.order(), right: g.order() });
    }
    let n = f.order();
    let mut out = HbarSeries::zero(n);
    for l in 0..=n {
        if f.coeff(l).is_zero() {
            continue;
        }
        for m in 0..=n - l {
            if g.coeff(m).is_zero() {
                continue;
            }
            let budget = n - l - m;
            let fl = f.coeff(l);
            let gm = g.coeff(m);
            let ftab = deriv_table(fl, budget);
            let gtab = deriv_table(gm, budget);
            let fctab = deriv_table(&ghost_right_c(fl), budget.saturating_sub(1));
            let gptab = deriv_table(&ghost_left_p(gm), budget.saturating_sub(1));
            for t in 0..=budget {
                let mut term = dk_even_from_tables(&ftab, &gtab, t, scheme);
                if t >= 1 {
                    term = term.add(
                        &dk_even_from_tables(&fctab, &gptab, t - 1, scheme).scale(I),
                    );
                }
                if !term.is_zero() {
                    let k = l + m + t;
                    out.set_coeff(k, out.coeff(k).add(&term));
                }
            }
        }
    }
    Ok(out)
}

/// Graded star commutator `[F, G]_∗ = F∗G − (−1)^{|F||G|} G∗F`.
///
/// At least one argument must have definite Grassmann parity; the other is
/// split into its even and odd parts and the commutator extended
/// bilinearly.
pub fn star_commutator(
    f: &HbarSeries,
    g: &HbarSeries,
    scheme: &SchemeSpec,
) -> Result<HbarSeries, StarError> {
    if f.order() != g.order() {
        return Err(StarError::OrderMismatch { left: f.order(), right: g.order() });
    }
    match (f.parity(), g.parity()) {
        (Some(pf), _) => {
            let (ge, go) = split_parity(g);
            let mut out = commutator_definite(f, &ge, pf, Parity::Even, scheme)?;
            out = out.add(&commutator_definite(f, &go, pf, Parity::Odd, scheme)?);
            Ok(out)
        }
        (None, Some(pg)) => {
            let (fe, fo) = split_parity(f);
            let mut out = commutator_definite(&fe, g, Parity::Even, pg, scheme)?;
            out = out.add(&commutator_definite(&fo, g, Parity::Odd, pg, scheme)?);
            Ok(out)
        }
        (None, None) => Err(StarError::IndefiniteParity),
    }
}

fn split_parity(f: &HbarSeries) -> (HbarSeries, HbarSeries) {
    let mut even = HbarSeries::zero(f.order());
    let mut odd = HbarSeries::zero(f.order());
    for k in 0..=f.order() {
        let c = f.coeff(k);
        even.set_coeff(k, c.ghost_number_component(0));
        odd.set_coeff(
            k,
            c.ghost_number_component(1).add(&c.ghost_number_component(-1)),
        );
    }
    (even, odd)
}

fn commutator_definite(
    f: &HbarSeries,
    g: &HbarSeries,
    pf: Parity,
    pg: Parity,
    scheme: &SchemeSpec,
) -> Result<HbarSeries, StarError> {
    if f.is_zero() || g.is_zero() {
        return Ok(HbarSeries::zero(f.order()));
    }
    let fg = star(f, g, scheme)?;
    let gf = star(g, f, scheme)?;
    let sign = if pf == Parity::Odd && pg == Parity::Odd { 1.0 } else { -1.0 };
    Ok(fg.add(&gf.scale(re(sign))))
}

/// Max associativity residual `‖(F∗G)∗K − F∗(G∗K)‖` over random triples
/// drawn across all ghost sectors, at the given truncation order.
pub fn check_associativity(
    scheme: &SchemeSpec,
    samples: usize,
    degree_cap: usize,
    order: usize,
    seed: u64,
) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let masks = [GhostMask::One, GhostMask::C, GhostMask::P, GhostMask::CP];
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let f = HbarSeries::from_poly(GradedPoly::random(&mut rng, degree_cap, &masks, 4), order);
        let g = HbarSeries::from_poly(GradedPoly::random(&mut rng, degree_cap, &masks, 4), order);
        let k = HbarSeries::from_poly(GradedPoly::random(&mut rng, degree_cap, &masks, 4), order);
        let lhs = star(&star(&f, &g, scheme).unwrap(), &k, scheme).unwrap();
        let rhs = star(&f, &star(&g, &k, scheme).unwrap(), scheme).unwrap();
        worst = worst.max(lhs.sub(&rhs).max_abs_coeff());
    }
    worst
}

/// Max residual of the first-order compatibility identity
/// `D₁(F,G) − (−1)^{|F||G|} D₁(G,F) − i{F,G}` over random pairs of
/// definite parity, covering all ghost sectors.
pub fn check_d1_identity(
    scheme: &SchemeSpec,
    samples: usize,
    degree_cap: usize,
    seed: u64,
) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let even = [GhostMask::One, GhostMask::CP];
    let odd = [GhostMask::C, GhostMask::P];
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (f, pf) = random_definite(&mut rng, degree_cap, &even, &odd);
        let (g, pg) = random_definite(&mut rng, degree_cap, &even, &odd);
        let sign = if pf == Parity::Odd && pg == Parity::Odd { 1.0 } else { -1.0 };
        let anti = extract_dk(&f, &g, 1, scheme)
            .add(&extract_dk(&g, &f, 1, scheme).scale(re(sign)));
        let target = f.poisson(&g).scale(I);
        worst = worst.max(anti.sub(&target).max_abs_coeff());
    }
    worst
}

fn random_definite(
    rng: &mut SplitMix64,
    degree_cap: usize,
    even: &[GhostMask],
    odd: &[GhostMask],
) -> (GradedPoly, Parity) {
    if rng.next_index(2) == 0 {
        (GradedPoly::random(rng, degree_cap, even, 4), Parity::Even)
    } else {
        (GradedPoly::random(rng, degree_cap, odd, 4), Parity::Odd)
    }
}

/// Max residual of the Weyl symmetry `D_k(F,G) = (−1)^k D_k(G,F)` for
/// ghost-free arguments, over `k ≤ kmax`.
pub fn check_weyl_symmetry(samples: usize, degree_cap: usize, kmax: usize, seed: u64) -> f64 {
    let scheme = SchemeSpec::weyl();
    let mut rng = SplitMix64::new(seed);
    let masks = [GhostMask::One];
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let f = GradedPoly::random(&mut rng, degree_cap, &masks, 4);
        let g = GradedPoly::random(&mut rng, degree_cap, &masks, 4);
        for k in 1..=kmax {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let diff = extract_dk(&f, &g, k, &scheme)
                .sub(&extract_dk(&g, &f, k, &scheme).scale(re(sign)));
            worst = worst.max(diff.max_abs_coeff());
        }
    }
    worst
}
