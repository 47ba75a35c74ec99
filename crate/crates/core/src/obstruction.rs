//! First-order quantizability analysis.
//!
//! Two independent instruments look at the correction equation
//! `X_H f₁ = Δ + (H − E) V₁` with density
//! `Δ = D₂(H,f) − D₂(f,H) + D₁(H,V)`:
//!
//! 1. [`solve_polynomial_correction`] assembles the linear map
//!    `(f₁, V₁) ↦ X_H f₁ − (H − E)V₁` on monomial coefficients up to a
//!    degree cap and solves against `Δ` in the least-squares sense. A large
//!    residual means "no polynomial solution up to this degree" — not yet a
//!    smoothness obstruction.
//! 2. [`orbit_average_certificate`] integrates `Δ` over a verified-closed
//!    gauge orbit on a resonant torus. The flow term `X_H f₁` averages to
//!    zero over any closed orbit and `(H − E)V₁` vanishes on the surface,
//!    so a nonzero average certifies that no smooth `f₁` exists at all.
//!
//! [`quantizability_report`] combines both into a verdict per observable.

use num_complex::Complex64;
use serde::Serialize;

use crate::brst::{
    build_brst_charge, build_hamiltonian, constraint_poly, correction_rhs, observable, x_h,
    BrstError, ConstraintSystem,
};
use crate::graded::{GhostMask, GradedPoly, Monomial};
use crate::linalg::{lstsq_qr, vec_norm, CMatrix};
use crate::rng::SplitMix64;
use crate::star::{SchemeKind, SchemeSpec, StarError};
use crate::torus::{
    angle_to_canonical, find_resonant_tori, integrate_orbit, sigma_samples, Resonance, TorusError,
    TorusSpec,
};

/// Tunable tolerances and sizes for the analysis pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabParams {
    /// Truncation order of ħ-series work.
    pub hbar_order: usize,
    /// Coefficient pruning threshold for reported polynomials.
    pub zero_tol: f64,
    /// Certificate tolerance; scaled by the analytic magnitude when one is
    /// available, absolute otherwise.
    pub cert_tol: f64,
    /// Threshold on the least-squares residual (relative to the data norm)
    /// below which a polynomial correction counts as found.
    pub solve_tol: f64,
    /// Degree cap for the polynomial correction ansatz.
    pub degree_cap: usize,
    /// Number of fixed angles in the certificate grid.
    pub phi_grid: usize,
    /// Quadrature points per orbit average.
    pub quad_points: usize,
    /// Steps for the closed-orbit verification integration.
    pub orbit_steps: usize,
    /// Euclidean tolerance for orbit closure.
    pub closure_tol: f64,
    /// Coefficient tolerance for correction-chain preconditions.
    pub chain_tol: f64,
    /// Seed for the deterministic surface sampling.
    pub seed: u64,
}

impl Default for LabParams {
    fn default() -> Self {
        LabParams {
            hbar_order: 4,
            zero_tol: 1e-12,
            cert_tol: 1e-6,
            solve_tol: 1e-8,
            degree_cap: 8,
            phi_grid: 8,
            quad_points: 256,
            orbit_steps: 10_000,
            closure_tol: 1e-6,
            chain_tol: 1e-10,
            seed: 42,
        }
    }
}

/// Errors from the analysis pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum ObstructionError {
    /// Certificate requested on a non-resonant torus.
    NotResonant,
    /// The verification orbit failed to close.
    OrbitNotClosed { error: f64, tol: f64 },
    /// The observable is not classically closed on the surface.
    PreconditionFailed { residual: f64 },
    Torus(TorusError),
    Brst(BrstError),
    Star(StarError),
}

impl std::fmt::Display for ObstructionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ObstructionError::NotResonant => write!(f, "certificate needs a resonant torus"),
            ObstructionError::OrbitNotClosed { error, tol } => {
                write!(f, "orbit did not close: error {error:.3e} exceeds tolerance {tol:.3e}")
            }
            ObstructionError::PreconditionFailed { residual } => write!(
                f,
                "observable is not classically closed (surface residual {residual:.3e})"
            ),
            ObstructionError::Torus(e) => write!(f, "{e}"),
            ObstructionError::Brst(e) => write!(f, "{e}"),
            ObstructionError::Star(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ObstructionError {}

impl From<TorusError> for ObstructionError {
    fn from(e: TorusError) -> Self {
        ObstructionError::Torus(e)
    }
}

impl From<BrstError> for ObstructionError {
    fn from(e: BrstError) -> Self {
        ObstructionError::Brst(e)
    }
}

impl From<StarError> for ObstructionError {
    fn from(e: StarError) -> Self {
        ObstructionError::Star(e)
    }
}

/// Complex number in report JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Cx { re: z.re, im: z.im }
    }
}

/// Outcome of the first-order analysis for one observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Anomalous,
    NotObstructedAtOrder1,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Anomalous => "Anomalous",
            Verdict::NotObstructedAtOrder1 => "NotObstructedAtOrder1",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

/// Result of the polynomial least-squares attempt.
#[derive(Debug, Clone, Serialize)]
pub struct CorrectionSolveResult {
    pub degree_cap: usize,
    pub unknowns: usize,
    pub equations: usize,
    /// ℓ₂ residual of the solved system, recomputed from the original data.
    pub residual: f64,
    /// ℓ₂ norm of the density coefficient vector.
    pub rhs_norm: f64,
    /// `(f₁, V₁)` when the residual is below threshold.
    pub f1: Option<GradedPoly>,
    pub v1: Option<GradedPoly>,
    /// Max pointwise defect of the returned solution at sample points.
    pub defect: Option<f64>,
}

impl CorrectionSolveResult {
    pub fn solved(&self) -> bool {
        self.f1.is_some()
    }
}

/// One certificate row: orbit averages of the density over the closed
/// orbits of a resonant torus, one per fixed angle.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateEntry {
    pub torus: TorusSpec,
    pub phi_grid: Vec<f64>,
    pub averages: Vec<Cx>,
    pub max_abs_average: f64,
    /// Absolute threshold this entry is judged against.
    pub threshold: f64,
    pub closure_error: f64,
    pub quad_points: usize,
    pub ode_cross_check: OdeCrossCheck,
    /// Predicted averages on the same grid, when an analytic form applies.
    pub analytic_prediction: Option<Vec<Cx>>,
}

/// Agreement between the angle-quadrature average and a time average along
/// the numerically integrated orbit, at one fixed angle.
#[derive(Debug, Clone, Serialize)]
pub struct OdeCrossCheck {
    pub phi_fixed: f64,
    pub quad_average: Cx,
    pub ode_average: Cx,
    pub abs_difference: f64,
}

/// Full first-order report for one observable.
#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub report_version: u32,
    pub observable: String,
    pub scheme: String,
    pub polynomial_solve: CorrectionSolveResult,
    pub tori: Vec<CertificateEntry>,
    /// The density polynomial `Δ` itself, in canonical text form.
    pub density: GradedPoly,
    /// Closed-form density for the action observables under the Wick
    /// scheme, and the coefficient-level difference from the computed one.
    pub analytic_density: Option<GradedPoly>,
    pub density_minus_analytic: Option<f64>,
    pub verdict: Verdict,
}

/// The first-order obstruction density `Δ = D₂(H,f) − D₂(f,H) + D₁(H,V)`.
pub fn obstruction_density(
    sys: &ConstraintSystem,
    scheme: &SchemeSpec,
    f: &GradedPoly,
    v: &GradedPoly,
    chain_tol: f64,
) -> Result<GradedPoly, ObstructionError> {
    let q = build_brst_charge(sys, 2);
    Ok(correction_rhs(&[observable(f, v)], &q, 1, scheme, chain_tol)?)
}

/// Deterministic monomial basis of all ghost-free monomials with total
/// degree at most `cap`, in the canonical monomial order.
fn monomial_basis(cap: usize) -> Vec<Monomial> {
    let mut out = Vec::new();
    let cap = cap as u16;
    for e0 in 0..=cap {
        for e1 in 0..=cap - e0 {
            for e2 in 0..=cap - e0 - e1 {
                for e3 in 0..=cap - e0 - e1 - e2 {
                    out.push(Monomial { exps: [e0, e1, e2, e3], ghost: GhostMask::One });
                }
            }
        }
    }
    out.sort();
    out
}

fn poly_of(mon: Monomial) -> GradedPoly {
    GradedPoly::from_terms([(mon, Complex64::new(1.0, 0.0))])
}

/// Attempt to solve `X_H f₁ − (H − E)V₁ = Δ` in polynomial space with
/// `deg f₁ ≤ cap`, `deg V₁ ≤ cap − 2`, by dense least squares over the
/// monomial coefficients.
pub fn solve_polynomial_correction(
    sys: &ConstraintSystem,
    scheme: &SchemeSpec,
    f: &GradedPoly,
    v: &GradedPoly,
    degree_cap: usize,
    params: &LabParams,
) -> Result<CorrectionSolveResult, ObstructionError> {
    let h = build_hamiltonian(sys);
    let t = constraint_poly(sys);

    // Precondition: f must be classically closed on the surface.
    let defect0 = x_h(&h, f).sub(&t.mul(v));
    let samples = sigma_samples(sys, 64, params.seed)?;
    let mut worst: f64 = 0.0;
    for pt in &samples {
        worst = worst.max(eval_ghost_free(&defect0, *pt));
    }
    if worst > params.solve_tol.max(1e-8) {
        return Err(ObstructionError::PreconditionFailed { residual: worst });
    }

    let rhs = obstruction_density(sys, scheme, f, v, params.chain_tol)?;

    let f_basis = monomial_basis(degree_cap);
    let v_cap = degree_cap.saturating_sub(2);
    let v_basis = monomial_basis(v_cap);
    // The image must hold X_H f₁ (degree ≤ cap + 2), (H − E)V₁ (degree
    // ≤ v_cap + 4), and the density itself.
    let image_cap = (degree_cap + 2).max(v_cap + 4).max(rhs.degree());
    let image = monomial_basis(image_cap);
    let index: std::collections::BTreeMap<Monomial, usize> =
        image.iter().enumerate().map(|(i, m)| (*m, i)).collect();

    let rows = image.len();
    let cols = f_basis.len() + v_basis.len();
    let mut a = CMatrix::zeros(rows, cols);
    for (j, mon) in f_basis.iter().enumerate() {
        let col = x_h(&h, &poly_of(*mon));
        for (m, c) in col.iter() {
            a.set(index[m], j, *c);
        }
    }
    for (j, mon) in v_basis.iter().enumerate() {
        let col = t.mul(&poly_of(*mon)).neg();
        for (m, c) in col.iter() {
            a.set(index[m], f_basis.len() + j, *c);
        }
    }
    let mut b = vec![Complex64::new(0.0, 0.0); rows];
    for (m, c) in rhs.iter() {
        b[index[m]] = *c;
    }
    let rhs_norm = vec_norm(&b);

    let (x, residual) = lstsq_qr(&a, &b);

    let solved = residual <= params.solve_tol * rhs_norm.max(1.0);
    let (f1, v1, defect) = if solved {
        let mut f1 = GradedPoly::zero();
        for (j, mon) in f_basis.iter().enumerate() {
            f1.add_term(*mon, x[j]);
        }
        let mut v1 = GradedPoly::zero();
        for (j, mon) in v_basis.iter().enumerate() {
            v1.add_term(*mon, x[f_basis.len() + j]);
        }
        let f1 = f1.pruned(params.zero_tol);
        let v1 = v1.pruned(params.zero_tol);
        let defect_poly = x_h(&h, &f1).sub(&t.mul(&v1)).sub(&rhs);
        let mut rng = SplitMix64::new(params.seed ^ 0x5eed);
        let mut worst: f64 = 0.0;
        for pt in &samples {
            worst = worst.max(eval_ghost_free(&defect_poly, *pt));
        }
        for _ in 0..32 {
            let pt = [
                rng.range_f64(-1.5, 1.5),
                rng.range_f64(-1.5, 1.5),
                rng.range_f64(-1.5, 1.5),
                rng.range_f64(-1.5, 1.5),
            ];
            worst = worst.max(eval_ghost_free(&defect_poly, pt));
        }
        (Some(f1), Some(v1), Some(worst))
    } else {
        (None, None, None)
    };

    Ok(CorrectionSolveResult {
        degree_cap,
        unknowns: cols,
        equations: rows,
        residual,
        rhs_norm,
        f1,
        v1,
        defect,
    })
}

/// Evaluation magnitude of a polynomial known to be ghost-free (densities,
/// defects, and classical closedness defects of even observables).
fn eval_ghost_free(p: &GradedPoly, pt: [f64; 4]) -> f64 {
    p.eval(pt).expect("density and defect polynomials are ghost-free").norm()
}

/// Orbit averages `A(φ) = (1/2π) ∮ Δ dφ_rot` of the density over the
/// closed orbits of a resonant torus, one per fixed angle in `phi_grid`.
/// The orbit is first verified to close by direct integration of the flow.
///
/// `tol_scale` sets the certificate threshold `cert_tol · tol_scale`
/// (absolute `cert_tol` when the scale is zero).
#[allow(clippy::too_many_arguments)]
pub fn orbit_average_certificate(
    sys: &ConstraintSystem,
    scheme: &SchemeSpec,
    f: &GradedPoly,
    v: &GradedPoly,
    torus: &TorusSpec,
    phi_grid: &[f64],
    tol_scale: f64,
    params: &LabParams,
) -> Result<CertificateEntry, ObstructionError> {
    if torus.resonance == Resonance::None {
        return Err(ObstructionError::NotResonant);
    }
    let rotating = torus.rotating_oscillator().unwrap();
    let omega_rot = torus.rotating_frequency().unwrap();
    let density = obstruction_density(sys, scheme, f, v, params.chain_tol)?;

    // Closure check along the actual flow.
    let phi_fixed_probe = std::f64::consts::FRAC_PI_4;
    let start = start_point(torus, rotating, phi_fixed_probe, 0.0)?;
    let period = 2.0 * std::f64::consts::PI / omega_rot.abs();
    let traj = integrate_orbit(sys, start, period, params.orbit_steps)?;
    let closure_error = traj.closure_error();
    if closure_error > params.closure_tol {
        return Err(ObstructionError::OrbitNotClosed {
            error: closure_error,
            tol: params.closure_tol,
        });
    }

    let quad = |phi_fixed: f64| -> Result<Complex64, ObstructionError> {
        let n = params.quad_points;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let pt = start_point(torus, rotating, phi_fixed, theta)?;
            acc += density.eval(pt).expect("density is ghost-free");
        }
        Ok(acc / n as f64)
    };

    let mut averages = Vec::with_capacity(phi_grid.len());
    let mut max_abs: f64 = 0.0;
    for &phi in phi_grid {
        let a = quad(phi)?;
        max_abs = max_abs.max(a.norm());
        averages.push(Cx::from(a));
    }

    let quad_probe = quad(phi_fixed_probe)?;
    let ode_probe =
        traj.time_average(|st| density.eval(*st).expect("density is ghost-free"));
    let cross = OdeCrossCheck {
        phi_fixed: phi_fixed_probe,
        quad_average: Cx::from(quad_probe),
        ode_average: Cx::from(ode_probe),
        abs_difference: (quad_probe - ode_probe).norm(),
    };

    let threshold = if tol_scale > 0.0 { params.cert_tol * tol_scale } else { params.cert_tol };
    Ok(CertificateEntry {
        torus: *torus,
        phi_grid: phi_grid.to_vec(),
        averages,
        max_abs_average: max_abs,
        threshold,
        closure_error,
        quad_points: params.quad_points,
        ode_cross_check: cross,
        analytic_prediction: None,
    })
}

/// Canonical coordinates of the point with the given fixed and rotating
/// angles on a resonant torus.
fn start_point(
    torus: &TorusSpec,
    rotating: usize,
    phi_fixed: f64,
    phi_rot: f64,
) -> Result<[f64; 4], ObstructionError> {
    let (phi1, phi2) =
        if rotating == 2 { (phi_fixed, phi_rot) } else { (phi_rot, phi_fixed) };
    Ok(angle_to_canonical(torus.point, phi1, phi2)?)
}

/// The default certificate grid: `n` equispaced fixed angles on `[0, 2π)`.
pub fn default_phi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect()
}

/// Run the full first-order analysis for the action observables `s₁` and
/// `s₂`: polynomial solve plus certificates on every physical resonant
/// torus, combined into a verdict each.
pub fn quantizability_report(
    sys: &ConstraintSystem,
    scheme: &SchemeSpec,
    params: &LabParams,
) -> Result<(ObstructionReport, ObstructionReport), ObstructionError> {
    let tori = find_resonant_tori(sys)?;
    let s1 = report_for_action(sys, scheme, 1, &tori, params)?;
    let s2 = report_for_action(sys, scheme, 2, &tori, params)?;
    Ok((s1, s2))
}

/// Analysis of a single action observable `s_i`.
pub fn report_for_action(
    sys: &ConstraintSystem,
    scheme: &SchemeSpec,
    osc: usize,
    tori: &[TorusSpec],
    params: &LabParams,
) -> Result<ObstructionReport, ObstructionError> {
    assert!(osc == 1 || osc == 2);
    let f = GradedPoly::action(osc);
    let v = GradedPoly::zero();
    let label = if osc == 1 { "s1" } else { "s2" };

    // Analytic density: −2i·a(α − 1/α)·x₁p₁ (and the 1↔2 mirror image).
    let (perturb, gamma) = match (osc, scheme.kind()) {
        (1, SchemeKind::Wick { alpha, .. }) => (sys.a, Some(alpha)),
        (2, SchemeKind::Wick { beta, .. }) => (sys.b, Some(beta)),
        (_, SchemeKind::Weyl) => (0.0, None),
        _ => unreachable!(),
    };
    let density_coef = gamma
        .map(|g| Complex64::new(0.0, -2.0 * perturb * (g - 1.0 / g)))
        .unwrap_or(Complex64::new(0.0, 0.0));
    let xp = if osc == 1 {
        GradedPoly::xi(0).mul(&GradedPoly::xi(1))
    } else {
        GradedPoly::xi(2).mul(&GradedPoly::xi(3))
    };
    let analytic_density = xp.scale(density_coef);

    let density = obstruction_density(sys, scheme, &f, &v, params.chain_tol)?;
    let density_minus_analytic = density.sub(&analytic_density).max_abs_coeff();

    let solve = solve_polynomial_correction(sys, scheme, &f, &v, params.degree_cap, params)?;

    let grid = default_phi_grid(params.phi_grid);
    let critical = if osc == 1 { Resonance::Omega1Zero } else { Resonance::Omega2Zero };
    let mut entries = Vec::with_capacity(tori.len());
    let mut anomalous = false;
    for torus in tori {
        let s_here = if osc == 1 { torus.point.s1 } else { torus.point.s2 };
        let scale = density_coef.norm() * s_here;
        let mut entry =
            orbit_average_certificate(sys, scheme, &f, &v, torus, &grid, scale, params)?;
        // On the critical torus the fixed angle is the observable's own
        // angle and the average is the density itself; elsewhere the
        // rotation averages it away.
        let prediction: Vec<Cx> = grid
            .iter()
            .map(|&phi| {
                if torus.resonance == critical {
                    Cx::from(density_coef * s_here * (2.0 * phi).sin())
                } else {
                    Cx { re: 0.0, im: 0.0 }
                }
            })
            .collect();
        entry.analytic_prediction = Some(prediction);
        if entry.max_abs_average > entry.threshold {
            anomalous = true;
        }
        entries.push(entry);
    }

    let verdict = if anomalous {
        Verdict::Anomalous
    } else if tori.is_empty() {
        Verdict::Inconclusive
    } else if solve.solved() {
        Verdict::NotObstructedAtOrder1
    } else {
        Verdict::Inconclusive
    };

    Ok(ObstructionReport {
        report_version: 1,
        observable: label.to_string(),
        scheme: scheme.name().to_string(),
        polynomial_solve: solve,
        tori: entries,
        density: density.pruned(params.zero_tol),
        analytic_density: gamma.map(|_| analytic_density),
        density_minus_analytic: gamma.map(|_| density_minus_analytic),
        verdict,
    })
}
