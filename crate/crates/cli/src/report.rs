//! Machine-readable report blocks.
//!
//! Every matrix carries its full-precision entries and a two-decimal
//! `display` rendering for side-by-side comparison with printed tables.

use mphd_core::gsim::GateReport;
use mphd_core::mbqc::{GateMatrix, GateProgram, MeasurementPlan};
use mphd_core::synth::ApproxResult;
use mphd_core::{CMatrix, FeasibilityReport, RMatrix, SynthesisSolution};
use serde::{Deserialize, Serialize};

use crate::config::ConfigDoc;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexBlock {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    pub display: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealBlock {
    pub values: Vec<Vec<f64>>,
    pub display: Vec<String>,
}

/// Two decimals with negative zero folded to `0.00`.
fn fmt2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn fmt_complex(re: f64, im: f64) -> String {
    let i = fmt2(im);
    match i.strip_prefix('-') {
        Some(mag) => format!("{}-{mag}i", fmt2(re)),
        None => format!("{}+{i}i", fmt2(re)),
    }
}

impl ComplexBlock {
    pub fn new(m: &CMatrix) -> Self {
        let rows = |f: fn(&mphd_core::Complex64) -> f64| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().map(f).collect()).collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
            display: m
                .row_iter()
                .map(|r| r.iter().map(|z| fmt_complex(z.re, z.im)).collect::<Vec<_>>().join(" "))
                .collect(),
        }
    }
}

impl RealBlock {
    pub fn new(m: &RMatrix) -> Self {
        Self {
            values: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
            display: m
                .row_iter()
                .map(|r| r.iter().map(|&x| fmt2(x)).collect::<Vec<_>>().join(" "))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityBlock {
    pub feasible: bool,
    pub tol: f64,
    pub offdiag_residual: f64,
    pub modulus_residual: f64,
    pub u_prime: ComplexBlock,
    /// `U'ᵀU'`.
    pub d_candidate: ComplexBlock,
}

impl FeasibilityBlock {
    pub fn new(r: &FeasibilityReport) -> Self {
        Self {
            feasible: r.feasible,
            tol: r.tol,
            offdiag_residual: r.offdiag_residual,
            modulus_residual: r.modulus_residual,
            u_prime: ComplexBlock::new(&r.u_prime),
            d_candidate: ComplexBlock::new(&r.d_candidate),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionBlock {
    #[serde(default)]
    pub branch: Option<String>,
    /// Radians.
    pub delta_lo_phases: Vec<f64>,
    #[serde(default)]
    pub delta_lo_entries: Option<ComplexBlock>,
    pub o: RealBlock,
    #[serde(default)]
    pub u_mphd: Option<ComplexBlock>,
    #[serde(default)]
    pub residual: f64,
}

impl SolutionBlock {
    pub fn new(s: &SynthesisSolution) -> Self {
        Self {
            branch: s.branch.as_ref().map(ToString::to_string),
            delta_lo_phases: s.delta_lo.phases().to_vec(),
            delta_lo_entries: Some(ComplexBlock::new(&s.delta_lo.to_matrix())),
            o: RealBlock::new(s.o.matrix()),
            u_mphd: Some(ComplexBlock::new(&s.u_mphd)),
            residual: s.residual,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxBlock {
    pub solution: SolutionBlock,
    pub distance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restart_residuals: Vec<f64>,
    pub objective_trace: Vec<f64>,
}

impl ApproxBlock {
    pub fn new(a: &ApproxResult) -> Self {
        Self {
            solution: SolutionBlock::new(&a.solution),
            distance: a.solution.residual,
            iterations: a.iterations,
            converged: a.converged,
            restart_residuals: a.restart_residuals.clone(),
            objective_trace: a.objective_trace.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GateVerification {
    pub r: f64,
    pub shots: usize,
    pub cov_distance: f64,
    pub relative_deviation: f64,
    pub large_deviation: bool,
    /// Largest `‖mean_out − target‖` over all shots.
    pub max_mean_distance: f64,
    pub mean_mean_distance: f64,
    pub output_cov: RealBlock,
    pub target_cov: RealBlock,
    pub target_mean: Vec<f64>,
    pub feedforward: RealBlock,
}

impl GateVerification {
    pub fn new(r: f64, output_cov: &RMatrix, first: &GateReport, mean_distances: &[f64]) -> Self {
        let n = mean_distances.len().max(1) as f64;
        Self {
            r,
            shots: mean_distances.len(),
            cov_distance: first.cov_distance,
            relative_deviation: first.relative_deviation,
            large_deviation: first.large_deviation,
            max_mean_distance: mean_distances.iter().copied().fold(0.0, f64::max),
            mean_mean_distance: mean_distances.iter().sum::<f64>() / n,
            output_cov: RealBlock::new(output_cov),
            target_cov: RealBlock::new(&first.target_cov),
            target_mean: first.target_mean.iter().copied().collect(),
            feedforward: RealBlock::new(&first.feedforward),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GateBlock {
    pub target_gate: GateMatrix,
    pub plan: MeasurementPlan,
    /// Phase-space shift applied to the input before the target gate.
    pub input_shift: [f64; 2],
    pub d_meas_phases: Vec<f64>,
}

impl GateBlock {
    pub fn new(p: &GateProgram) -> Self {
        Self {
            target_gate: p.target_gate,
            plan: p.plan.clone(),
            input_shift: p.input_shift,
            d_meas_phases: p.d_meas.phases().to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationBlock {
    pub r: f64,
    pub shots: usize,
    pub seed: u64,
    pub plan_angles: Vec<f64>,
    pub sample_means: Vec<f64>,
    pub analytic_means: Vec<f64>,
    pub sample_cov: RealBlock,
    pub analytic_cov: RealBlock,
    pub max_cov_error: f64,
    /// Largest entry of `|cov_staged − cov_direct|`.
    pub staged_vs_direct: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterBlock {
    pub nodes: usize,
    pub adjacency: RealBlock,
    pub a: RealBlock,
    pub x: RealBlock,
    pub y: RealBlock,
    pub u: ComplexBlock,
    pub orthogonal_freedom: RealBlock,
    pub validation: mphd_core::cluster::ClusterValidation,
}

/// Wall-clock seconds per stage; the only non-deterministic part of a report.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timing {
    pub stages: Vec<(String, f64)>,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: ConfigDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<ComplexBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<ComplexBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityBlock>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub solutions: Vec<SolutionBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub approx: Option<ApproxBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<GateVerification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationBlock>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub timing: Timing,
}

impl Report {
    pub fn new(command: &str, config: ConfigDoc) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config,
            target: None,
            g: None,
            cluster: None,
            gate: None,
            feasibility: None,
            solutions: Vec::new(),
            approx: None,
            verification: None,
            simulation: None,
            notes: Vec::new(),
            timing: Timing::default(),
        }
    }
}
