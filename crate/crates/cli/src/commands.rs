//! The four pipelines behind the CLI subcommands, each producing one JSON
//! report that embeds the resolved configuration and the fixture
//! provenance string.

use std::fs;

use qanomaly::fixture::default_fixture;
use qanomaly::obstruction::{report_for_action, ObstructionReport, Verdict};
use qanomaly::star::{check_associativity, check_d1_identity, check_weyl_symmetry};
use qanomaly::torus::{
    angle_to_canonical, find_resonant_tori, fomenko_graph, integrate_orbit, min_grad_h_on_arc,
    resonance_line_samples, sample_arc, write_points_csv, write_trajectory_csv, FomenkoGraph,
    IntegralChoice, Resonance, TorusError,
};
use serde::Serialize;

use crate::config::{RunConfig, SchemeChoice};

/// Exit-code contract: success / expected verdict.
pub const EXIT_OK: i32 = 0;
/// Internal error or failed check / unexpected verdict.
pub const EXIT_FAIL: i32 = 1;
/// Configuration or validation error.
pub const EXIT_CONFIG: i32 = 2;
/// Inconclusive verdict or empty geometry.
pub const EXIT_INCONCLUSIVE: i32 = 3;

pub struct CmdError {
    pub exit: i32,
    pub message: String,
}

impl CmdError {
    pub fn config(msg: impl Into<String>) -> Self {
        CmdError { exit: EXIT_CONFIG, message: msg.into() }
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CmdError { exit: EXIT_FAIL, message: msg.into() }
    }
}

fn provenance() -> String {
    default_fixture().provenance
}

fn write_output(out: Option<&str>, json: &str) -> Result<(), CmdError> {
    match out {
        Some(path) => fs::write(path, json.as_bytes())
            .map_err(|e| CmdError::internal(format!("cannot write {path}: {e}"))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CmdError> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CmdError::internal(format!("serialization failed: {e}")))
}

// ---------------------------------------------------------------------------
// starcheck
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ResidualCheck {
    samples: usize,
    degree_cap: usize,
    max_residual: f64,
}

#[derive(Serialize)]
struct StarcheckReport {
    report_version: u32,
    command: &'static str,
    config: RunConfig,
    provenance: String,
    symplectic_defect: f64,
    wick_kernel_residual: Option<f64>,
    d1_compatibility: ResidualCheck,
    associativity: ResidualCheck,
    weyl_even_order_symmetry: Option<ResidualCheck>,
    pass: bool,
}

pub fn run_starcheck(cfg: &RunConfig, out: Option<&str>) -> Result<i32, CmdError> {
    cfg.validate(false).map_err(|e| CmdError::config(e.message))?;
    let scheme = cfg.scheme_spec().map_err(|e| CmdError::config(e.message))?;

    let d1 = check_d1_identity(&scheme, 200, 4, cfg.seed);
    let assoc = check_associativity(&scheme, 100, 3, cfg.hbar_order, cfg.seed ^ 0xa5);
    let weyl_sym = match cfg.scheme {
        SchemeChoice::Weyl => Some(check_weyl_symmetry(100, 4, cfg.hbar_order, cfg.seed ^ 0x57)),
        SchemeChoice::Wick => None,
    };
    let mut residuals = vec![d1, assoc, scheme.symplectic_defect()];
    if let Some(r) = scheme.wick_kernel_residual() {
        residuals.push(r);
    }
    if let Some(w) = weyl_sym {
        residuals.push(w);
    }
    let pass = residuals.iter().all(|&r| r <= cfg.zero_tol);
    let report = StarcheckReport {
        report_version: 1,
        command: "starcheck",
        config: cfg.clone(),
        provenance: provenance(),
        symplectic_defect: scheme.symplectic_defect(),
        wick_kernel_residual: scheme.wick_kernel_residual(),
        d1_compatibility: ResidualCheck { samples: 200, degree_cap: 4, max_residual: d1 },
        associativity: ResidualCheck { samples: 100, degree_cap: 3, max_residual: assoc },
        weyl_even_order_symmetry: weyl_sym
            .map(|r| ResidualCheck { samples: 100, degree_cap: 4, max_residual: r }),
        pass,
    };
    write_output(out, &to_json(&report)?)?;
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableChoice {
    S1,
    S2,
    Both,
}

impl ObservableChoice {
    pub fn parse(s: &str) -> Result<Self, CmdError> {
        match s {
            "s1" => Ok(ObservableChoice::S1),
            "s2" => Ok(ObservableChoice::S2),
            "both" => Ok(ObservableChoice::Both),
            other => Err(CmdError::config(format!("--observable must be s1|s2|both, got `{other}`"))),
        }
    }

    fn oscillators(self) -> Vec<usize> {
        match self {
            ObservableChoice::S1 => vec![1],
            ObservableChoice::S2 => vec![2],
            ObservableChoice::Both => vec![1, 2],
        }
    }
}

#[derive(Serialize)]
struct CertifyReport {
    report_version: u32,
    command: &'static str,
    config: RunConfig,
    provenance: String,
    resonant_tori: usize,
    observables: Vec<ObstructionReport>,
}

pub fn run_certify(
    cfg: &RunConfig,
    observable: ObservableChoice,
    expect: Option<&str>,
    out: Option<&str>,
    orbit_csv: Option<&str>,
) -> Result<i32, CmdError> {
    cfg.validate(true).map_err(|e| CmdError::config(e.message))?;
    let scheme = cfg.scheme_spec().map_err(|e| CmdError::config(e.message))?;
    let sys = cfg.system();
    let params = cfg.lab_params();

    let tori = find_resonant_tori(&sys).map_err(|e| CmdError::internal(e.to_string()))?;
    let mut observables = Vec::new();
    for osc in observable.oscillators() {
        let report = report_for_action(&sys, &scheme, osc, &tori, &params)
            .map_err(|e| CmdError::internal(e.to_string()))?;
        observables.push(report);
    }

    if let Some(base) = orbit_csv {
        for t in &tori {
            let rotating = t.rotating_oscillator().unwrap_or(1);
            let omega = t.rotating_frequency().unwrap_or(1.0);
            let start = angle_to_canonical(
                t.point,
                if rotating == 2 { std::f64::consts::FRAC_PI_4 } else { 0.0 },
                if rotating == 2 { 0.0 } else { std::f64::consts::FRAC_PI_4 },
            )
            .map_err(|e| CmdError::internal(e.to_string()))?;
            let period = 2.0 * std::f64::consts::PI / omega.abs();
            let traj = integrate_orbit(&sys, start, period, cfg.orbit_steps)
                .map_err(|e| CmdError::internal(e.to_string()))?;
            let tag = match t.resonance {
                Resonance::Omega1Zero => "omega1_zero",
                Resonance::Omega2Zero => "omega2_zero",
                Resonance::None => "none",
            };
            let path = format!("{base}.{tag}.csv");
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &traj)
                .map_err(|e| CmdError::internal(e.to_string()))?;
            fs::write(&path, buf)
                .map_err(|e| CmdError::internal(format!("cannot write {path}: {e}")))?;
        }
    }

    let report = CertifyReport {
        report_version: 1,
        command: "certify",
        config: cfg.clone(),
        provenance: provenance(),
        resonant_tori: tori.len(),
        observables,
    };
    write_output(out, &to_json(&report)?)?;

    if let Some(expected) = expect {
        let ok = report.observables.iter().all(|r| r.verdict.as_str() == expected);
        return Ok(if ok { EXIT_OK } else { EXIT_FAIL });
    }
    let inconclusive =
        report.observables.iter().any(|r| r.verdict == Verdict::Inconclusive);
    Ok(if inconclusive { EXIT_INCONCLUSIVE } else { EXIT_OK })
}

// ---------------------------------------------------------------------------
// fomenko
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FomenkoReport {
    report_version: u32,
    command: &'static str,
    config: RunConfig,
    provenance: String,
    graph: FomenkoGraph,
    min_grad_h_on_arc: f64,
    csv_files: Vec<String>,
}

pub fn run_fomenko(
    cfg: &RunConfig,
    integral: IntegralChoice,
    out: Option<&str>,
    csv_base: Option<&str>,
) -> Result<i32, CmdError> {
    cfg.validate(true).map_err(|e| CmdError::config(e.message))?;
    let sys = cfg.system();
    let graph = match fomenko_graph(&sys, integral) {
        Ok(g) => g,
        Err(TorusError::EmptyArc) => {
            eprintln!("error: energy curve misses the physical quadrant");
            return Ok(EXIT_INCONCLUSIVE);
        }
        Err(e) => return Err(CmdError::internal(e.to_string())),
    };
    let grad = min_grad_h_on_arc(&sys, cfg.samples)
        .map_err(|e| CmdError::internal(e.to_string()))?;

    let mut csv_files = Vec::new();
    if let Some(base) = csv_base {
        let arc = sample_arc(&sys, cfg.samples).map_err(|e| CmdError::internal(e.to_string()))?;
        let smax = arc
            .iter()
            .flat_map(|p| [p.s1, p.s2])
            .fold(0.0f64, f64::max)
            .max(1e-6)
            * 1.2;
        let files = [
            (format!("{base}.ellipse.csv"), arc),
            (
                format!("{base}.omega1_zero.csv"),
                resonance_line_samples(&sys, Resonance::Omega1Zero, smax, cfg.samples),
            ),
            (
                format!("{base}.omega2_zero.csv"),
                resonance_line_samples(&sys, Resonance::Omega2Zero, smax, cfg.samples),
            ),
        ];
        for (path, pts) in files {
            let mut buf = Vec::new();
            write_points_csv(&mut buf, &pts).map_err(|e| CmdError::internal(e.to_string()))?;
            fs::write(&path, buf)
                .map_err(|e| CmdError::internal(format!("cannot write {path}: {e}")))?;
            csv_files.push(path);
        }
    }

    let report = FomenkoReport {
        report_version: 1,
        command: "fomenko",
        config: cfg.clone(),
        provenance: provenance(),
        graph,
        min_grad_h_on_arc: grad,
        csv_files,
    };
    write_output(out, &to_json(&report)?)?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SweepSpec {
    key: String,
    values: Vec<String>,
}

#[derive(Serialize)]
struct GridCoord {
    key: String,
    value: String,
}

#[derive(Serialize)]
struct ScanPoint {
    grid: Vec<GridCoord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    observables: Vec<ObstructionReport>,
}

#[derive(Serialize)]
struct ScanReport {
    report_version: u32,
    command: &'static str,
    config: RunConfig,
    provenance: String,
    sweep: Vec<SweepSpec>,
    points: Vec<ScanPoint>,
}

pub fn run_scan(
    cfg: &RunConfig,
    sweeps: &[(String, Vec<String>)],
    observable: ObservableChoice,
    out: Option<&str>,
) -> Result<i32, CmdError> {
    cfg.validate(false).map_err(|e| CmdError::config(e.message))?;

    // Cartesian grid, first declared sweep varying slowest.
    let mut grid: Vec<Vec<(String, String)>> = if sweeps.is_empty() {
        Vec::new()
    } else {
        vec![Vec::new()]
    };
    for (key, values) in sweeps {
        let mut next = Vec::with_capacity(grid.len() * values.len());
        for partial in &grid {
            for v in values {
                let mut row = partial.clone();
                row.push((key.clone(), v.clone()));
                next.push(row);
            }
        }
        grid = next;
    }

    let mut points = Vec::with_capacity(grid.len());
    for assignment in grid {
        let coords: Vec<GridCoord> = assignment
            .iter()
            .map(|(k, v)| GridCoord { key: k.clone(), value: v.clone() })
            .collect();
        let point = match scan_point(cfg, &assignment, observable) {
            Ok(observables) => ScanPoint { grid: coords, error: None, observables },
            Err(msg) => ScanPoint { grid: coords, error: Some(msg), observables: Vec::new() },
        };
        points.push(point);
    }

    let report = ScanReport {
        report_version: 1,
        command: "scan",
        config: cfg.clone(),
        provenance: provenance(),
        sweep: sweeps
            .iter()
            .map(|(k, v)| SweepSpec { key: k.clone(), values: v.clone() })
            .collect(),
        points,
    };
    write_output(out, &to_json(&report)?)?;
    Ok(EXIT_OK)
}

fn scan_point(
    base: &RunConfig,
    assignment: &[(String, String)],
    observable: ObservableChoice,
) -> Result<Vec<ObstructionReport>, String> {
    let mut cfg = base.clone();
    for (k, v) in assignment {
        cfg.set(k, v).map_err(|e| e.message)?;
    }
    cfg.validate(true).map_err(|e| e.message)?;
    let scheme = cfg.scheme_spec().map_err(|e| e.message)?;
    let sys = cfg.system();
    let params = cfg.lab_params();
    let tori = find_resonant_tori(&sys).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for osc in observable.oscillators() {
        out.push(
            report_for_action(&sys, &scheme, osc, &tori, &params).map_err(|e| e.to_string())?,
        );
    }
    Ok(out)
}
