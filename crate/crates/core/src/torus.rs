//! Action-angle geometry of the constraint surface: the energy ellipse in
//! the action plane, frequencies, resonant tori, closed-orbit integration,
//! and the bifurcation graph of an action integral.
//!
//! Angle convention: `xᵢ = √(2sᵢ)·cos φᵢ`, `pᵢ = √(2sᵢ)·sin φᵢ`, chosen so
//! that `{sᵢ, φᵢ} = +1` and the flow of `X_H = {H, −}` rotates the angles
//! with `φ̇ᵢ = +Ωᵢ`. In canonical coordinates that flow reads
//! `ẋᵢ = −Ωᵢ pᵢ`, `ṗᵢ = +Ωᵢ xᵢ`.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::brst::ConstraintSystem;
use crate::rng::SplitMix64;

/// A point in the action plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionPoint {
    pub s1: f64,
    pub s2: f64,
}

/// Resonance tag of a torus on the energy surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resonance {
    None,
    Omega1Zero,
    Omega2Zero,
}

/// A Liouville torus on the energy surface with its frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub point: ActionPoint,
    pub omega1: f64,
    pub omega2: f64,
    pub resonance: Resonance,
}

impl TorusSpec {
    /// Index (1 or 2) of the angle that rotates along the closed orbit of a
    /// resonant torus, i.e. the oscillator whose frequency is nonzero.
    pub fn rotating_oscillator(&self) -> Option<usize> {
        match self.resonance {
            Resonance::Omega1Zero => Some(2),
            Resonance::Omega2Zero => Some(1),
            Resonance::None => None,
        }
    }

    /// Frequency of the rotating angle.
    pub fn rotating_frequency(&self) -> Option<f64> {
        match self.resonance {
            Resonance::Omega1Zero => Some(self.omega2),
            Resonance::Omega2Zero => Some(self.omega1),
            Resonance::None => None,
        }
    }
}

/// Which action integral a bifurcation graph is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralChoice {
    S1,
    S2,
}

impl IntegralChoice {
    pub fn value(self, p: ActionPoint) -> f64 {
        match self {
            IntegralChoice::S1 => p.s1,
            IntegralChoice::S2 => p.s2,
        }
    }

    /// The resonance at which this integral has its interior extremum on
    /// the energy surface (s₂ is extremal where Ω₁ = 0 and vice versa).
    pub fn critical_resonance(self) -> Resonance {
        match self {
            IntegralChoice::S1 => Resonance::Omega2Zero,
            IntegralChoice::S2 => Resonance::Omega1Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Black,
    White,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomenkoVertex {
    pub kind: VertexKind,
    pub point: ActionPoint,
    pub integral_value: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomenkoEdge {
    pub from: usize,
    pub to: usize,
    /// Closed range `[lo, hi]` of the integral along this torus family.
    pub integral_range: [f64; 2],
}

/// Bifurcation graph of one action integral on the energy surface:
/// black vertices mark degenerate tori (circles, at `s₁ = 0` or `s₂ = 0`),
/// the white vertex marks the maximal torus at the integral's interior
/// extremum when the corresponding resonant torus is physical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomenkoGraph {
    pub integral: IntegralChoice,
    pub vertices: Vec<FomenkoVertex>,
    pub edges: Vec<FomenkoEdge>,
}

/// Errors from torus-geometry operations.
#[derive(Debug, Clone, PartialEq)]
pub enum TorusError {
    NegativeAction { s: f64 },
    /// The quadratic form is neither zero nor positive definite, so the
    /// constraint set in the action plane is not an ellipse.
    DegenerateEllipse,
    /// The energy curve does not meet the closed first quadrant.
    EmptyArc,
    /// Fewer integration steps than the contract allows.
    TooFewSteps { steps: usize },
}

impl fmt::Display for TorusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TorusError::NegativeAction { s } => write!(f, "negative action variable {s}"),
            TorusError::DegenerateEllipse => {
                write!(f, "quadratic form is not positive definite: no ellipse in the action plane")
            }
            TorusError::EmptyArc => write!(f, "energy curve misses the physical quadrant"),
            TorusError::TooFewSteps { steps } => {
                write!(f, "orbit integration needs at least 100 steps, got {steps}")
            }
        }
    }
}

impl std::error::Error for TorusError {}

/// Map action-angle coordinates to canonical ones.
pub fn angle_to_canonical(
    point: ActionPoint,
    phi1: f64,
    phi2: f64,
) -> Result<[f64; 4], TorusError> {
    for s in [point.s1, point.s2] {
        if s < 0.0 {
            return Err(TorusError::NegativeAction { s });
        }
    }
    let r1 = (2.0 * point.s1).sqrt();
    let r2 = (2.0 * point.s2).sqrt();
    Ok([r1 * phi1.cos(), r1 * phi1.sin(), r2 * phi2.cos(), r2 * phi2.sin()])
}

/// Recover the action variables from a canonical point.
pub fn actions_of(state: [f64; 4]) -> ActionPoint {
    ActionPoint {
        s1: 0.5 * (state[0] * state[0] + state[1] * state[1]),
        s2: 0.5 * (state[2] * state[2] + state[3] * state[3]),
    }
}

/// Frequencies `(Ω₁, Ω₂)` at an action point.
pub fn frequencies(sys: &ConstraintSystem, point: ActionPoint) -> (f64, f64) {
    sys.frequencies_at(point.s1, point.s2)
}

/// Resonance-tagging tolerance on `|Ωᵢ|` for returned tori.
const FREQ_TOL: f64 = 1e-10;

/// Solve `{H = E, Ωᵢ = 0}` for `i = 1, 2` and return the solutions in the
/// open first quadrant, tagged by which frequency vanishes. The
/// unperturbed system has constant positive frequencies and returns an
/// empty list; any other non-positive-definite form is an error.
pub fn find_resonant_tori(sys: &ConstraintSystem) -> Result<Vec<TorusSpec>, TorusError> {
    if sys.is_unperturbed() {
        return Ok(Vec::new());
    }
    if !sys.positive_definite() {
        return Err(TorusError::DegenerateEllipse);
    }
    let mut out = Vec::new();
    // Ω₁ = ω₁ + 2a s₁ + 2c s₂ = 0  →  s₁ = −(ω₁ + 2c s₂)/(2a); substitute
    // into H = E and solve the resulting quadratic in s₂. Mirrored for Ω₂.
    for (tag, om_i, ai, ci) in [
        (Resonance::Omega1Zero, sys.omega1, sys.a, sys.c),
        (Resonance::Omega2Zero, sys.omega2, sys.b, sys.c),
    ] {
        // In the (u, v) frame: u is the action solved for, v the free one.
        // u = −(ω_u + 2c v)/(2 a_u); H(u, v) = E.
        let (om_v, av) = match tag {
            Resonance::Omega1Zero => (sys.omega2, sys.b),
            _ => (sys.omega1, sys.a),
        };
        let slope = -ci / ai;
        let inter = -om_i / (2.0 * ai);
        // H(u(v), v) with u = inter + slope·v:
        // quadratic q2 v² + q1 v + q0 − E = 0.
        let q2 = ai * slope * slope + av + 2.0 * ci * slope;
        let q1 = om_i * slope + om_v + 2.0 * ai * inter * slope + 2.0 * ci * inter;
        let q0 = om_i * inter + ai * inter * inter - sys.energy;
        for v in solve_quadratic(q2, q1, q0) {
            let u = inter + slope * v;
            let (s1, s2) = match tag {
                Resonance::Omega1Zero => (u, v),
                _ => (v, u),
            };
            if s1 > 0.0 && s2 > 0.0 {
                let (omega1, omega2) = sys.frequencies_at(s1, s2);
                debug_assert!((sys.h_of_actions(s1, s2) - sys.energy).abs() < 1e-9);
                out.push(TorusSpec { point: ActionPoint { s1, s2 }, omega1, omega2, resonance: tag });
            }
        }
    }
    out.retain(|t| match t.resonance {
        Resonance::Omega1Zero => t.omega1.abs() < FREQ_TOL,
        Resonance::Omega2Zero => t.omega2.abs() < FREQ_TOL,
        Resonance::None => false,
    });
    out.sort_by(|x, y| {
        (format!("{:?}", x.resonance), x.point.s1)
            .partial_cmp(&(format!("{:?}", y.resonance), y.point.s1))
            .unwrap()
    });
    Ok(out)
}

/// Real roots of `q2 x² + q1 x + q0 = 0`, numerically stable form.
fn solve_quadratic(q2: f64, q1: f64, q0: f64) -> Vec<f64> {
    if q2.abs() < 1e-300 {
        if q1.abs() < 1e-300 {
            return Vec::new();
        }
        return vec![-q0 / q1];
    }
    let disc = q1 * q1 - 4.0 * q2 * q0;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let r = if q1 >= 0.0 { (-q1 - sq) / 2.0 } else { (-q1 + sq) / 2.0 };
    if r == 0.0 {
        return vec![0.0, -q1 / q2];
    }
    vec![r / q2, q0 / r]
}

/// A fixed-step trajectory of the flow of `X_H = {H, −}`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 4]>,
}

impl Trajectory {
    pub fn start(&self) -> [f64; 4] {
        self.states[0]
    }

    pub fn end(&self) -> [f64; 4] {
        *self.states.last().unwrap()
    }

    /// Euclidean distance between endpoint and start.
    pub fn closure_error(&self) -> f64 {
        let a = self.start();
        let b = self.end();
        (0..4).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum::<f64>().sqrt()
    }

    /// Max relative drift of `H` along the trajectory.
    pub fn max_h_drift(&self, sys: &ConstraintSystem) -> f64 {
        let h0 = {
            let s = actions_of(self.start());
            sys.h_of_actions(s.s1, s.s2)
        };
        let scale = h0.abs().max(1e-300);
        self.states
            .iter()
            .map(|&st| {
                let s = actions_of(st);
                (sys.h_of_actions(s.s1, s.s2) - h0).abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// Max relative drift of the action variables along the trajectory.
    pub fn max_action_drift(&self) -> f64 {
        let s0 = actions_of(self.start());
        let scale = (s0.s1.abs() + s0.s2.abs()).max(1e-300);
        self.states
            .iter()
            .map(|&st| {
                let s = actions_of(st);
                ((s.s1 - s0.s1).abs() + (s.s2 - s0.s2).abs()) / scale
            })
            .fold(0.0, f64::max)
    }

    /// Trapezoid time-average of a state function over the trajectory.
    pub fn time_average(&self, f: impl Fn(&[f64; 4]) -> Complex64) -> Complex64 {
        let n = self.states.len();
        if n < 2 {
            return f(&self.states[0]);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, st) in self.states.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += f(st) * w;
        }
        acc / ((n - 1) as f64)
    }
}

/// Integrate the flow of `X_H = {H, −}` with a fixed-step 4th-order
/// Runge–Kutta scheme: `ẋᵢ = −Ωᵢ pᵢ`, `ṗᵢ = +Ωᵢ xᵢ`.
pub fn integrate_orbit(
    sys: &ConstraintSystem,
    start: [f64; 4],
    duration: f64,
    steps: usize,
) -> Result<Trajectory, TorusError> {
    if steps < 100 {
        return Err(TorusError::TooFewSteps { steps });
    }
    let rhs = |st: &[f64; 4]| -> [f64; 4] {
        let s = actions_of(*st);
        let (o1, o2) = sys.frequencies_at(s.s1, s.s2);
        [-o1 * st[1], o1 * st[0], -o2 * st[3], o2 * st[2]]
    };
    let h = duration / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut st = start;
    times.push(0.0);
    states.push(st);
    for k in 0..steps {
        let k1 = rhs(&st);
        let k2 = rhs(&add_scaled(&st, &k1, h / 2.0));
        let k3 = rhs(&add_scaled(&st, &k2, h / 2.0));
        let k4 = rhs(&add_scaled(&st, &k3, h));
        for i in 0..4 {
            st[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        times.push(h * (k + 1) as f64);
        states.push(st);
    }
    Ok(Trajectory { times, states })
}

fn add_scaled(a: &[f64; 4], b: &[f64; 4], s: f64) -> [f64; 4] {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]]
}

/// The intersections of the energy curve with the action axes:
/// `(0, s₂ᴬ)` and `(s₁ᴮ, 0)`. These exist for any admissible system since
/// the origin lies strictly inside the energy region.
pub fn arc_endpoints(sys: &ConstraintSystem) -> Result<(ActionPoint, ActionPoint), TorusError> {
    let pos_root = |quad: f64, lin: f64, cst: f64| -> Option<f64> {
        solve_quadratic(quad, lin, cst)
            .into_iter()
            .filter(|&r| r >= 0.0)
            .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |prev| prev.min(r))))
    };
    let s2a = pos_root(sys.b, sys.omega2, -sys.energy).ok_or(TorusError::EmptyArc)?;
    let s1b = pos_root(sys.a, sys.omega1, -sys.energy).ok_or(TorusError::EmptyArc)?;
    Ok((ActionPoint { s1: 0.0, s2: s2a }, ActionPoint { s1: s1b, s2: 0.0 }))
}

/// Sample `n` points of the physical arc of the energy curve (its
/// intersection with the closed first quadrant), ordered from the
/// `s₁ = 0` endpoint to the `s₂ = 0` endpoint.
pub fn sample_arc(sys: &ConstraintSystem, n: usize) -> Result<Vec<ActionPoint>, TorusError> {
    assert!(n >= 2, "need at least the two endpoints");
    if sys.energy <= 0.0 {
        return Err(TorusError::EmptyArc);
    }
    if sys.is_unperturbed() {
        // Straight segment ω₁s₁ + ω₂s₂ = E.
        let (a, b) = (
            ActionPoint { s1: 0.0, s2: sys.energy / sys.omega2 },
            ActionPoint { s1: sys.energy / sys.omega1, s2: 0.0 },
        );
        return Ok((0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                ActionPoint { s1: a.s1 + t * (b.s1 - a.s1), s2: a.s2 + t * (b.s2 - a.s2) }
            })
            .collect());
    }
    if !sys.positive_definite() {
        return Err(TorusError::DegenerateEllipse);
    }
    let ell = EllipseFrame::new(sys)?;
    let (pa, pb) = arc_endpoints(sys)?;
    let ta = ell.angle_of(pa);
    let tb = ell.angle_of(pb);
    // Walk from ta to tb through the quadrant: pick the direction whose
    // midpoint stays physical.
    let span_ccw = normalize_angle(tb - ta);
    let mid_ccw = ell.point_at(ta + span_ccw / 2.0);
    let span = if mid_ccw.s1 >= -1e-9 && mid_ccw.s2 >= -1e-9 {
        span_ccw
    } else {
        span_ccw - 2.0 * std::f64::consts::PI
    };
    Ok((0..n)
        .map(|k| {
            let t = ta + span * (k as f64 / (n - 1) as f64);
            let mut p = ell.point_at(t);
            // Tolerate boundary tangency: clamp tiny negatives.
            if p.s1 < 0.0 && p.s1 > -1e-10 {
                p.s1 = 0.0;
            }
            if p.s2 < 0.0 && p.s2 > -1e-10 {
                p.s2 = 0.0;
            }
            p
        })
        .collect())
}

fn normalize_angle(t: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = t % two_pi;
    if t < 0.0 {
        t += two_pi;
    }
    t
}

/// Principal-axes parametrization of the energy ellipse.
struct EllipseFrame {
    center: [f64; 2],
    axis1: [f64; 2],
    axis2: [f64; 2],
    r1: f64,
    r2: f64,
}

impl EllipseFrame {
    fn new(sys: &ConstraintSystem) -> Result<Self, TorusError> {
        if !sys.positive_definite() {
            return Err(TorusError::DegenerateEllipse);
        }
        // Center: ∇H = 0 → 2M s = −ω.
        let det = sys.a * sys.b - sys.c * sys.c;
        let cs1 = -(sys.b * sys.omega1 - sys.c * sys.omega2) / (2.0 * det);
        let cs2 = -(sys.a * sys.omega2 - sys.c * sys.omega1) / (2.0 * det);
        let level = sys.energy - sys.h_of_actions(cs1, cs2);
        if level <= 0.0 {
            return Err(TorusError::EmptyArc);
        }
        // Eigen-decomposition of the symmetric 2×2 form M.
        let tr = sys.a + sys.b;
        let gap = (((sys.a - sys.b) / 2.0).powi(2) + sys.c * sys.c).sqrt();
        let l1 = tr / 2.0 - gap;
        let l2 = tr / 2.0 + gap;
        let axis1 = eigvec2(sys.a, sys.c, sys.b, l1);
        let axis2 = [-axis1[1], axis1[0]];
        Ok(EllipseFrame {
            center: [cs1, cs2],
            axis1,
            axis2,
            r1: (level / l1).sqrt(),
            r2: (level / l2).sqrt(),
        })
    }

    fn point_at(&self, t: f64) -> ActionPoint {
        let (c, s) = (t.cos(), t.sin());
        ActionPoint {
            s1: self.center[0] + self.r1 * c * self.axis1[0] + self.r2 * s * self.axis2[0],
            s2: self.center[1] + self.r1 * c * self.axis1[1] + self.r2 * s * self.axis2[1],
        }
    }

    fn angle_of(&self, p: ActionPoint) -> f64 {
        let d = [p.s1 - self.center[0], p.s2 - self.center[1]];
        let u = (d[0] * self.axis1[0] + d[1] * self.axis1[1]) / self.r1;
        let v = (d[0] * self.axis2[0] + d[1] * self.axis2[1]) / self.r2;
        v.atan2(u)
    }
}

fn eigvec2(a: f64, c: f64, b: f64, lambda: f64) -> [f64; 2] {
    // (M − λ) v = 0 for M = [[a, c], [c, b]].
    let v = if c.abs() > 1e-14 {
        [c, lambda - a]
    } else if (a - lambda).abs() < (b - lambda).abs() {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

/// Deterministic sample of points on the energy surface `Σ`, produced by
/// drawing arc points and angle pairs from a seeded generator.
pub fn sigma_samples(
    sys: &ConstraintSystem,
    n: usize,
    seed: u64,
) -> Result<Vec<[f64; 4]>, TorusError> {
    let arc = sample_arc(sys, 257)?;
    let mut rng = SplitMix64::new(seed);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let p = arc[rng.next_index(arc.len())];
        let phi1 = rng.range_f64(0.0, two_pi);
        let phi2 = rng.range_f64(0.0, two_pi);
        out.push(angle_to_canonical(p, phi1, phi2)?);
    }
    Ok(out)
}

/// Minimum of `|∇H|` over sampled points of the physical arc (at angle
/// grid points), reported as a regularity diagnostic for the surface.
pub fn min_grad_h_on_arc(sys: &ConstraintSystem, n: usize) -> Result<f64, TorusError> {
    let arc = sample_arc(sys, n)?;
    let mut worst = f64::INFINITY;
    for p in arc {
        let (o1, o2) = sys.frequencies_at(p.s1, p.s2);
        // |∇H|² = Σᵢ Ωᵢ²(xᵢ² + pᵢ²) = 2 s₁Ω₁² + 2 s₂Ω₂².
        let g = (2.0 * p.s1 * o1 * o1 + 2.0 * p.s2 * o2 * o2).sqrt();
        worst = worst.min(g);
    }
    Ok(worst)
}

/// Build the bifurcation graph of one action integral.
pub fn fomenko_graph(
    sys: &ConstraintSystem,
    integral: IntegralChoice,
) -> Result<FomenkoGraph, TorusError> {
    if sys.energy <= 0.0 {
        return Err(TorusError::EmptyArc);
    }
    if sys.is_unperturbed() {
        let (pa, pb) = (
            ActionPoint { s1: 0.0, s2: sys.energy / sys.omega2 },
            ActionPoint { s1: sys.energy / sys.omega1, s2: 0.0 },
        );
        let va = black_vertex(pa, integral);
        let vb = black_vertex(pb, integral);
        let range = order_range(va.integral_value, vb.integral_value);
        return Ok(FomenkoGraph {
            integral,
            vertices: vec![va, vb],
            edges: vec![FomenkoEdge { from: 0, to: 1, integral_range: range }],
        });
    }
    if !sys.positive_definite() {
        return Err(TorusError::DegenerateEllipse);
    }
    let (pa, pb) = arc_endpoints(sys)?;
    let va = black_vertex(pa, integral);
    let vb = black_vertex(pb, integral);
    let critical = find_resonant_tori(sys)?
        .into_iter()
        .filter(|t| t.resonance == integral.critical_resonance())
        .max_by(|x, y| integral.value(x.point).partial_cmp(&integral.value(y.point)).unwrap());
    match critical {
        Some(t)
            if integral.value(t.point) > va.integral_value
                && integral.value(t.point) > vb.integral_value =>
        {
            let white = FomenkoVertex {
                kind: VertexKind::White,
                point: t.point,
                integral_value: integral.value(t.point),
                label: match integral {
                    IntegralChoice::S1 => "maximal torus T1".to_string(),
                    IntegralChoice::S2 => "maximal torus T2".to_string(),
                },
            };
            let ra = order_range(va.integral_value, white.integral_value);
            let rb = order_range(vb.integral_value, white.integral_value);
            Ok(FomenkoGraph {
                integral,
                vertices: vec![va, vb, white],
                edges: vec![
                    FomenkoEdge { from: 0, to: 2, integral_range: ra },
                    FomenkoEdge { from: 2, to: 1, integral_range: rb },
                ],
            })
        }
        _ => {
            let range = order_range(va.integral_value, vb.integral_value);
            Ok(FomenkoGraph {
                integral,
                vertices: vec![va, vb],
                edges: vec![FomenkoEdge { from: 0, to: 1, integral_range: range }],
            })
        }
    }
}

fn black_vertex(p: ActionPoint, integral: IntegralChoice) -> FomenkoVertex {
    let which = if p.s1 == 0.0 { "s1=0" } else { "s2=0" };
    FomenkoVertex {
        kind: VertexKind::Black,
        point: p,
        integral_value: integral.value(p),
        label: format!("degenerate circle ({which})"),
    }
}

fn order_range(a: f64, b: f64) -> [f64; 2] {
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Write action-plane points as CSV with header `s1,s2`.
pub fn write_points_csv<W: Write>(w: &mut W, pts: &[ActionPoint]) -> std::io::Result<()> {
    writeln!(w, "s1,s2")?;
    for p in pts {
        writeln!(w, "{},{}", p.s1, p.s2)?;
    }
    Ok(())
}

/// Write a trajectory as CSV with header `t,x1,p1,x2,p2`.
pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &Trajectory) -> std::io::Result<()> {
    writeln!(w, "t,x1,p1,x2,p2")?;
    for (t, st) in traj.times.iter().zip(&traj.states) {
        writeln!(w, "{},{},{},{},{}", t, st[0], st[1], st[2], st[3])?;
    }
    Ok(())
}

/// Sample the line `Ωᵢ = 0` over the plot window `[0, smax]²` for overlay
/// plots next to the energy curve.
pub fn resonance_line_samples(
    sys: &ConstraintSystem,
    which: Resonance,
    smax: f64,
    n: usize,
) -> Vec<ActionPoint> {
    assert!(n >= 2);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = smax * k as f64 / (n - 1) as f64;
        let p = match which {
            // ω₁ + 2a s₁ + 2c s₂ = 0, parametrized by s₂ = t.
            Resonance::Omega1Zero if sys.a != 0.0 => {
                ActionPoint { s1: -(sys.omega1 + 2.0 * sys.c * t) / (2.0 * sys.a), s2: t }
            }
            Resonance::Omega2Zero if sys.b != 0.0 => {
                ActionPoint { s1: t, s2: -(sys.omega2 + 2.0 * sys.c * t) / (2.0 * sys.b) }
            }
            _ => continue,
        };
        if p.s1 >= 0.0 && p.s1 <= smax && p.s2 >= 0.0 && p.s2 <= smax {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_sys() -> ConstraintSystem {
        ConstraintSystem { omega1: 1.0, omega2: 1.0, a: 1.0, b: 1.0, c: -0.9, energy: 1.0 }
    }

    #[test]
    fn angle_map_basics() {
        let pt = angle_to_canonical(ActionPoint { s1: 0.5, s2: 0.0 }, 0.0, 0.0).unwrap();
        assert_eq!(pt, [1.0, 0.0, 0.0, 0.0]);
        // x₁p₁ = s₁ sin 2φ₁ at φ₁ = π/4, s₁ = 1.
        let pt = angle_to_canonical(
            ActionPoint { s1: 1.0, s2: 0.0 },
            std::f64::consts::FRAC_PI_4,
            0.0,
        )
        .unwrap();
        assert!((pt[0] * pt[1] - 1.0).abs() < 1e-12);
        assert!(angle_to_canonical(ActionPoint { s1: -0.1, s2: 0.0 }, 0.0, 0.0).is_err());
    }

    #[test]
    fn action_reconstruction_roundtrip() {
        let p = ActionPoint { s1: 0.37, s2: 1.21 };
        let st = angle_to_canonical(p, 0.9, 2.4).unwrap();
        let q = actions_of(st);
        assert!((q.s1 - p.s1).abs() < 1e-14);
        assert!((q.s2 - p.s2).abs() < 1e-14);
    }

    #[test]
    fn bracket_s_phi_by_finite_differences() {
        // {s₁, φ₁} = +1 with φ₁ = atan2(p₁, x₁).
        let mut rng = SplitMix64::new(3);
        for _ in 0..20 {
            let x = rng.range_f64(0.3, 1.5);
            let p = rng.range_f64(0.3, 1.5);
            let h = 1e-6;
            let s = |x: f64, p: f64| 0.5 * (x * x + p * p);
            let phi = |x: f64, p: f64| p.atan2(x);
            let ds_dx = (s(x + h, p) - s(x - h, p)) / (2.0 * h);
            let ds_dp = (s(x, p + h) - s(x, p - h)) / (2.0 * h);
            let dphi_dx = (phi(x + h, p) - phi(x - h, p)) / (2.0 * h);
            let dphi_dp = (phi(x, p + h) - phi(x, p - h)) / (2.0 * h);
            let bracket = ds_dx * dphi_dp - ds_dp * dphi_dx;
            assert!((bracket - 1.0).abs() < 1e-6, "bracket {bracket}");
        }
    }

    #[test]
    fn frequencies_limits() {
        let sys = ConstraintSystem { a: 0.0, b: 0.0, c: 0.0, ..fixture_sys() };
        let (o1, o2) = frequencies(&sys, ActionPoint { s1: 0.4, s2: 0.8 });
        assert_eq!((o1, o2), (1.0, 1.0));
    }

    #[test]
    fn resonant_tori_for_fixture() {
        let sys = fixture_sys();
        let tori = find_resonant_tori(&sys).unwrap();
        assert_eq!(tori.len(), 2);
        let t2 = tori.iter().find(|t| t.resonance == Resonance::Omega1Zero).unwrap();
        let t1 = tori.iter().find(|t| t.resonance == Resonance::Omega2Zero).unwrap();
        assert!(t2.point.s1 > 0.0 && t2.point.s2 > 0.0);
        assert!(t2.omega1.abs() < 1e-10 && t2.omega2.abs() > 1e-3);
        assert!(t1.omega2.abs() < 1e-10 && t1.omega1.abs() > 1e-3);
        // Symmetric fixture: T₁ is the mirror of T₂.
        assert!((t1.point.s1 - t2.point.s2).abs() < 1e-10);
        assert!((t1.point.s2 - t2.point.s1).abs() < 1e-10);
        assert!((sys.h_of_actions(t2.point.s1, t2.point.s2) - sys.energy).abs() < 1e-10);
    }

    #[test]
    fn unperturbed_has_no_resonant_tori() {
        let sys = ConstraintSystem { a: 0.0, b: 0.0, c: 0.0, ..fixture_sys() };
        assert!(find_resonant_tori(&sys).unwrap().is_empty());
    }

    #[test]
    fn indefinite_form_is_rejected() {
        let sys = ConstraintSystem { c: 1.5, ..fixture_sys() };
        assert_eq!(find_resonant_tori(&sys), Err(TorusError::DegenerateEllipse));
    }

    #[test]
    fn parameter_swap_exchanges_tori() {
        let sys = ConstraintSystem { omega1: 1.1, omega2: 0.9, a: 1.2, b: 0.8, c: -0.7, energy: 1.0 };
        let swapped = ConstraintSystem {
            omega1: sys.omega2,
            omega2: sys.omega1,
            a: sys.b,
            b: sys.a,
            ..sys
        };
        let tori = find_resonant_tori(&sys).unwrap();
        let tori_sw = find_resonant_tori(&swapped).unwrap();
        assert_eq!(tori.len(), tori_sw.len());
        for t in &tori {
            let mirror = tori_sw.iter().find(|u| {
                (u.point.s1 - t.point.s2).abs() < 1e-9 && (u.point.s2 - t.point.s1).abs() < 1e-9
            });
            assert!(mirror.is_some(), "no mirror for {t:?}");
        }
    }

    #[test]
    fn closed_orbit_on_resonant_torus() {
        let sys = fixture_sys();
        let tori = find_resonant_tori(&sys).unwrap();
        let t2 = tori.iter().find(|t| t.resonance == Resonance::Omega1Zero).unwrap();
        let start = angle_to_canonical(t2.point, 0.7, 0.0).unwrap();
        let period = 2.0 * std::f64::consts::PI / t2.omega2.abs();
        let traj = integrate_orbit(&sys, start, period, 10_000).unwrap();
        assert!(traj.closure_error() < 1e-6, "closure {}", traj.closure_error());
        assert!(traj.max_h_drift(&sys) < 1e-9);
        assert!(traj.max_action_drift() < 1e-8);
    }

    #[test]
    fn non_resonant_orbit_does_not_close() {
        let sys = ConstraintSystem {
            omega1: 1.0,
            omega2: std::f64::consts::SQRT_2,
            a: 0.0,
            b: 0.0,
            c: 0.0,
            energy: 1.0,
        };
        let start = angle_to_canonical(ActionPoint { s1: 0.3, s2: 0.4 }, 0.0, 0.0).unwrap();
        let period = 2.0 * std::f64::consts::PI / sys.omega1;
        let traj = integrate_orbit(&sys, start, period, 10_000).unwrap();
        assert!(traj.closure_error() > 1e-2, "closure {}", traj.closure_error());
    }

    #[test]
    fn too_few_steps_is_an_error() {
        let sys = fixture_sys();
        assert!(matches!(
            integrate_orbit(&sys, [1.0, 0.0, 0.0, 0.0], 1.0, 10),
            Err(TorusError::TooFewSteps { steps: 10 })
        ));
    }

    #[test]
    fn arc_sampling_stays_on_curve_and_in_quadrant() {
        let sys = fixture_sys();
        let pts = sample_arc(&sys, 200).unwrap();
        assert_eq!(pts.len(), 200);
        for p in &pts {
            assert!(p.s1 >= 0.0 && p.s2 >= 0.0, "left quadrant: {p:?}");
            assert!((sys.h_of_actions(p.s1, p.s2) - sys.energy).abs() < 1e-9);
        }
        // Endpoints are the axis crossings.
        assert!(pts[0].s1.abs() < 1e-9);
        assert!(pts[199].s2.abs() < 1e-9);
    }

    #[test]
    fn sigma_samples_lie_on_surface() {
        let sys = fixture_sys();
        let h = crate::brst::build_hamiltonian(&sys);
        for pt in sigma_samples(&sys, 100, 9).unwrap() {
            let v = h.eval(pt).unwrap();
            assert!((v.re - sys.energy).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_regular_on_fixture_arc() {
        assert!(min_grad_h_on_arc(&fixture_sys(), 256).unwrap() > 0.1);
    }

    #[test]
    fn fomenko_fixture_is_a_y_graph() {
        let g = fomenko_graph(&fixture_sys(), IntegralChoice::S2).unwrap();
        let blacks = g.vertices.iter().filter(|v| v.kind == VertexKind::Black).count();
        let whites = g.vertices.iter().filter(|v| v.kind == VertexKind::White).count();
        assert_eq!((blacks, whites), (2, 1));
        assert_eq!(g.edges.len(), 2);
        // Both edges meet at the white vertex.
        let white_idx = g.vertices.iter().position(|v| v.kind == VertexKind::White).unwrap();
        for e in &g.edges {
            assert!(e.from == white_idx || e.to == white_idx);
        }
    }

    #[test]
    fn fomenko_unperturbed_is_a_segment() {
        let sys = ConstraintSystem { a: 0.0, b: 0.0, c: 0.0, ..fixture_sys() };
        let g = fomenko_graph(&sys, IntegralChoice::S1).unwrap();
        assert_eq!(g.vertices.len(), 2);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].integral_range, [0.0, sys.energy / sys.omega1]);
        assert!(g.vertices.iter().all(|v| v.kind == VertexKind::Black));
    }

    #[test]
    fn fomenko_graphs_swap_with_parameters() {
        let sys = ConstraintSystem { omega1: 1.0, omega2: 1.0, a: 1.0, b: 1.1, c: -0.95, energy: 1.0 };
        let swapped = ConstraintSystem {
            omega1: sys.omega2,
            omega2: sys.omega1,
            a: sys.b,
            b: sys.a,
            ..sys
        };
        let g1 = fomenko_graph(&sys, IntegralChoice::S1).unwrap();
        let g2 = fomenko_graph(&swapped, IntegralChoice::S2).unwrap();
        assert_eq!(g1.vertices.len(), g2.vertices.len());
        assert_eq!(g1.edges.len(), g2.edges.len());
        // Same multiset of (kind, integral value); the endpoint listing
        // order swaps with the axes.
        let key =
            |v: &FomenkoVertex| (v.kind == VertexKind::White, (v.integral_value * 1e12).round() as i64);
        let mut k1: Vec<_> = g1.vertices.iter().map(key).collect();
        let mut k2: Vec<_> = g2.vertices.iter().map(key).collect();
        k1.sort();
        k2.sort();
        assert_eq!(k1, k2);
    }

    #[test]
    fn csv_row_counts() {
        let sys = fixture_sys();
        let pts = sample_arc(&sys, 64).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 65); // header + rows
        assert!(text.starts_with("s1,s2\n"));
    }
}
