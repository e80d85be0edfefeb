//! The four workflows. Each returns a report plus the process exit code.

use std::time::Instant;

use anyhow::{bail, Result};
use log::{info, warn};
use mphd_core::cluster::{cluster_unitary, validate_cluster};
use mphd_core::gsim::{direct_state, run_gate_program, simulate_mphd, HomodyneRecord};
use mphd_core::mbqc::MeasurementPlan;
use mphd_core::synth::{enumerate_solutions, feasibility, solve_approx, solve_exact};
use mphd_core::{
    BranchId, CMatrix, DetectionSetup, DiagonalUnitary, FeasibilityReport, MphdError, SynthesisSolution,
};

use crate::config::{load_solution, ConfigDoc};
use crate::report::{
    ApproxBlock, ClusterBlock, ComplexBlock, FeasibilityBlock, GateBlock, GateVerification, RealBlock, Report,
    SimulationBlock, SolutionBlock, Timing,
};

/// Above this many modes only one branch is reported instead of all `2^N`.
pub const ENUMERATE_MAX_MODES: usize = 8;
pub const DEFAULT_R: f64 = 1.0;
pub const DEFAULT_SHOTS: usize = 1000;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;

pub struct Outcome {
    pub report: Report,
    pub exit: u8,
    pub records: Vec<HomodyneRecord>,
}

impl Outcome {
    fn new(report: Report, exit: u8) -> Self {
        Self { report, exit, records: Vec::new() }
    }
}

struct Timer {
    start: Instant,
    last: Instant,
    stages: Vec<(String, f64)>,
}

impl Timer {
    fn new() -> Self {
        let now = Instant::now();
        Self { start: now, last: now, stages: Vec::new() }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.stages.push((name.into(), (now - self.last).as_secs_f64()));
        self.last = now;
    }

    fn finish(self) -> Timing {
        Timing { stages: self.stages, total: self.start.elapsed().as_secs_f64() }
    }
}

/// Exact solutions on the requested branch, or all of them for small `N`.
fn exact_solutions(
    feas: &FeasibilityReport,
    g: &CMatrix,
    u: &CMatrix,
    branch: Option<&BranchId>,
    notes: &mut Vec<String>,
) -> Result<Vec<SynthesisSolution>> {
    let n = u.nrows();
    if let Some(b) = branch {
        if b.len() != n {
            bail!("branch {b} has {} bits, problem has {n} modes", b.len());
        }
        return Ok(vec![solve_exact(feas, g, u, b)?]);
    }
    if n > ENUMERATE_MAX_MODES {
        notes.push(format!("{n} modes: reporting the principal branch only"));
        return Ok(vec![solve_exact(feas, g, u, &BranchId::principal(n))?]);
    }
    Ok(enumerate_solutions(feas, g, u)?)
}

/// Feasibility, then exact or approximate solutions; fills `report` and returns the exit code.
fn synthesize_into(
    report: &mut Report,
    doc: &ConfigDoc,
    setup: &DetectionSetup,
    u: &CMatrix,
    timer: &mut Timer,
) -> Result<u8> {
    report.target = Some(ComplexBlock::new(u));
    report.g = Some(ComplexBlock::new(&setup.g));
    let feas = feasibility(u, &setup.g, doc.tol())?;
    timer.lap("feasibility");
    report.feasibility = Some(FeasibilityBlock::new(&feas));
    if feas.feasible {
        let sols = exact_solutions(&feas, &setup.g, u, doc.branch.as_ref(), &mut report.notes)?;
        info!("{} exact solutions", sols.len());
        report.solutions = sols.iter().map(SolutionBlock::new).collect();
        timer.lap("solve_exact");
        Ok(EXIT_OK)
    } else {
        info!("infeasible (off-diagonal {:.3e}); running approximate synthesis", feas.offdiag_residual);
        let approx = solve_approx(u, &setup.g, &doc.optimizer())?;
        report.approx = Some(ApproxBlock::new(&approx));
        timer.lap("solve_approx");
        Ok(EXIT_INFEASIBLE)
    }
}

pub fn synthesize(doc: &ConfigDoc) -> Result<Outcome> {
    let mut timer = Timer::new();
    let (setup, u) = doc.problem()?;
    timer.lap("setup");
    let mut report = Report::new("synthesize", doc.clone());
    let exit = synthesize_into(&mut report, doc, &setup, &u, &mut timer)?;
    report.timing = timer.finish();
    Ok(Outcome::new(report, exit))
}

pub fn cluster(doc: &ConfigDoc) -> Result<Outcome> {
    let mut timer = Timer::new();
    let v = doc.graph()?;
    let n = v.dim();
    let freedom = doc.freedom()?;
    let mut report = Report::new("cluster", doc.clone());
    let sol = match cluster_unitary(&v, freedom.as_ref()) {
        Ok(sol) => sol,
        Err(e @ MphdError::ClusterInfeasible { .. }) => {
            report.notes.push(e.to_string());
            report.timing = timer.finish();
            return Ok(Outcome::new(report, EXIT_INFEASIBLE));
        }
        Err(e) => return Err(e.into()),
    };
    timer.lap("cluster_unitary");
    let validation = validate_cluster(&sol.u, &v, doc.tol())?;
    if !validation.passed {
        warn!("cluster validation residual {:.3e} exceeds tol", validation.max_residual());
    }
    report.cluster = Some(ClusterBlock {
        nodes: n,
        adjacency: RealBlock::new(v.matrix()),
        a: RealBlock::new(&sol.a),
        x: RealBlock::new(&sol.x),
        y: RealBlock::new(&sol.y),
        u: ComplexBlock::new(&sol.u),
        orthogonal_freedom: RealBlock::new(sol.orthogonal_freedom.matrix()),
        validation,
    });
    timer.lap("validate");

    // MPHD feasibility under the configured (or flip-mode) front end is informational
    let setup = match &doc.setup {
        Some(s) => Some(s.build(n)?),
        None => match DetectionSetup::flip(n, DiagonalUnitary::identity(n)) {
            Ok(s) => Some(s),
            Err(e) => {
                report.notes.push(format!("no default detection setup: {e}"));
                None
            }
        },
    };
    if let Some(setup) = setup {
        report.g = Some(ComplexBlock::new(&setup.g));
        match feasibility(&sol.u, &setup.g, doc.tol()) {
            Ok(feas) => {
                if feas.feasible {
                    let sols = exact_solutions(&feas, &setup.g, &sol.u, doc.branch.as_ref(), &mut report.notes)?;
                    report.solutions = sols.iter().map(SolutionBlock::new).collect();
                }
                report.feasibility = Some(FeasibilityBlock::new(&feas));
            }
            Err(e) if doc.setup.is_none() => report.notes.push(format!("default detection setup unusable: {e}")),
            Err(e) => return Err(e.into()),
        }
        timer.lap("feasibility");
    }
    report.timing = timer.finish();
    Ok(Outcome::new(report, EXIT_OK))
}

pub fn gate(doc: &ConfigDoc) -> Result<Outcome> {
    let mut timer = Timer::new();
    let (program, setup) = doc.gate_problem()?;
    timer.lap("program");
    let mut report = Report::new("gate", doc.clone());
    report.gate = Some(GateBlock::new(&program));
    let exit = synthesize_into(&mut report, doc, &setup, &program.u_th, &mut timer)?;

    if let Some(r) = doc.r {
        let input = doc.input_state()?;
        let shots = doc.shots.unwrap_or(1);
        let seed = doc.seed();
        let mut distances = Vec::with_capacity(shots);
        let mut first = None;
        for shot in 0..shots {
            let (out, rep) = run_gate_program(&program, &input, r, seed.wrapping_add(shot as u64))?;
            distances.push(rep.mean_distance);
            if first.is_none() {
                first = Some((out, rep));
            }
        }
        if let Some((out, rep)) = first {
            if rep.large_deviation {
                warn!("gate output deviates from the target (relative {:.3e})", rep.relative_deviation);
            }
            report.verification = Some(GateVerification::new(r, out.cov(), &rep, &distances));
        }
        timer.lap("verify");
    }
    report.timing = timer.finish();
    Ok(Outcome::new(report, exit))
}

pub fn simulate(doc: &ConfigDoc) -> Result<Outcome> {
    let mut timer = Timer::new();
    let mut report = Report::new("simulate", doc.clone());
    let tol = doc.tol();

    let has_problem = doc.preset.is_some() || doc.target.is_some() || doc.gate.is_some() || doc.graph.is_some();
    let (setup, target, default_plan) = if doc.gate.is_some() {
        let (program, setup) = doc.gate_problem()?;
        (setup, Some(program.u_th), Some(program.plan))
    } else if has_problem {
        let (setup, u) = doc.problem()?;
        (setup, Some(u), None)
    } else {
        let Some(spec) = &doc.setup else {
            bail!("simulate needs a preset, a target or an explicit setup");
        };
        let Some(sol) = &doc.solution else {
            bail!("simulate without a target needs a \"solution\"");
        };
        let n = load_solution(sol, tol)?.0.len();
        (spec.build(n)?, None, None)
    };
    timer.lap("setup");

    let sol = match (&doc.solution, &target) {
        (Some(spec), _) => {
            let (delta_lo, o) = load_solution(spec, tol)?;
            let fallback;
            let reference = match &target {
                Some(u) => u,
                None => {
                    fallback = mphd_core::synth::mphd_product(&delta_lo, &o, &setup.g)?;
                    &fallback
                }
            };
            SynthesisSolution::assemble(delta_lo, o, &setup.g, reference, None)?
        }
        (None, Some(u)) => {
            let feas = feasibility(u, &setup.g, tol)?;
            if feas.feasible {
                let branch = doc.branch.clone().unwrap_or_else(|| BranchId::principal(u.nrows()));
                solve_exact(&feas, &setup.g, u, &branch)?
            } else {
                report.notes.push("target is infeasible; simulating the approximate solution".into());
                solve_approx(u, &setup.g, &doc.optimizer())?.solution
            }
        }
        (None, None) => unreachable!("checked above"),
    };
    report.solutions = vec![SolutionBlock::new(&sol)];
    timer.lap("solution");

    let n = setup.mode_count();
    let plan = match (&doc.plan, default_plan) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => p,
        (None, None) => MeasurementPlan::p_quadratures(n),
    };
    let r = doc.r.unwrap_or(DEFAULT_R);
    let shots = doc.shots.unwrap_or(DEFAULT_SHOTS);
    let seed = doc.seed();
    let sim = simulate_mphd(&setup, &sol, &plan, r, shots, seed)?;
    timer.lap("simulate");

    let direct = direct_state(&sol.u_mphd, r)?;
    let staged_vs_direct = (sim.state.cov() - direct.cov()).amax();
    let max_cov_error = if shots > 1 { (&sim.sample_cov - &sim.analytic_cov).amax() } else { 0.0 };
    report.simulation = Some(SimulationBlock {
        r,
        shots,
        seed,
        plan_angles: plan.angles.clone(),
        sample_means: sim.means.clone(),
        analytic_means: sim.analytic_mean.clone(),
        sample_cov: RealBlock::new(&sim.sample_cov),
        analytic_cov: RealBlock::new(&sim.analytic_cov),
        max_cov_error,
        staged_vs_direct,
        target_residual: target.as_ref().map(|_| sol.residual),
    });
    report.timing = timer.finish();
    Ok(Outcome { report, exit: EXIT_OK, records: sim.records })
}
