//! Feasibility test and synthesis of `(Δ_LO, O)`.
//!
//! A target `U_th` is realizable as `O·Δ_LO·G` iff `U'ᵀU'` is diagonal with
//! unit-modulus entries, where `U' = U_th·G†`. Every square root `Δ_LO` of
//! that diagonal then yields a real orthogonal `O = U'·Δ_LO⁻¹`.

use std::f64::consts::TAU;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MphdError, Result};
use crate::matcore::{
    diag_sqrt_branches, frobenius_distance, procrustes_best_orthogonal, real_part,
    unitarity_residual, BranchId, BranchSelector, CMatrix, DiagonalUnitary, RMatrix,
    RealOrthogonal,
};

/// Outcome of the feasibility test.
#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    /// `U' = U_th·G†`.
    pub u_prime: CMatrix,
    /// `U'ᵀ·U'`.
    pub d_candidate: CMatrix,
    /// Largest off-diagonal modulus of `d_candidate`.
    pub offdiag_residual: f64,
    /// Largest `||d_ii| − 1|`.
    pub modulus_residual: f64,
    pub feasible: bool,
    pub tol: f64,
}

impl FeasibilityReport {
    pub fn mode_count(&self) -> usize {
        self.u_prime.nrows()
    }

    /// Diagonal of `d_candidate` as a diagonal unitary (phases only).
    pub fn diagonal(&self) -> DiagonalUnitary {
        let phases = self.d_candidate.diagonal().iter().map(|z| z.arg()).collect();
        DiagonalUnitary::new(phases).expect("phases of finite entries are finite")
    }

    fn consistency_tol(&self) -> f64 {
        10.0 * self.mode_count() as f64 * self.tol.max(1e-12)
    }
}

fn check_square_pair(u_th: &CMatrix, g: &CMatrix) -> Result<()> {
    if !u_th.is_square() || !g.is_square() || u_th.shape() != g.shape() {
        return Err(MphdError::Dimension(format!(
            "U_th {:?} and G {:?} must be square of equal size",
            u_th.shape(),
            g.shape()
        )));
    }
    Ok(())
}

fn check_unitary(m: &CMatrix, name: &str, tol: f64) -> Result<()> {
    let residual = unitarity_residual(m)?;
    if residual > tol {
        return Err(MphdError::NotUnitary {
            name: name.into(),
            residual,
            tol,
        });
    }
    Ok(())
}

pub fn feasibility(u_th: &CMatrix, g: &CMatrix, tol: f64) -> Result<FeasibilityReport> {
    check_square_pair(u_th, g)?;
    check_unitary(u_th, "U_th", tol)?;
    check_unitary(g, "G", tol)?;

    let u_prime = u_th * g.adjoint();
    let d = u_prime.transpose() * &u_prime;
    let n = d.nrows();
    let mut offdiag: f64 = 0.0;
    let mut modulus: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                modulus = modulus.max((d[(i, i)].norm() - 1.0).abs());
            } else {
                offdiag = offdiag.max(d[(i, j)].norm());
            }
        }
    }
    debug!("feasibility: offdiag {offdiag:.3e}, modulus {modulus:.3e}");
    Ok(FeasibilityReport {
        u_prime,
        d_candidate: d,
        offdiag_residual: offdiag,
        modulus_residual: modulus,
        feasible: offdiag <= tol && modulus <= tol,
        tol,
    })
}

/// A compiled experiment: LO pixel phases and digital gains.
#[derive(Clone, Debug)]
pub struct SynthesisSolution {
    pub delta_lo: DiagonalUnitary,
    pub o: RealOrthogonal,
    /// `O·Δ_LO·G`.
    pub u_mphd: CMatrix,
    /// `‖U_MPHD − U_th‖_F`.
    pub residual: f64,
    /// Square-root branch for exact solutions.
    pub branch: Option<BranchId>,
}

impl SynthesisSolution {
    pub fn assemble(
        delta_lo: DiagonalUnitary,
        o: RealOrthogonal,
        g: &CMatrix,
        u_th: &CMatrix,
        branch: Option<BranchId>,
    ) -> Result<Self> {
        let u_mphd = mphd_product(&delta_lo, &o, g)?;
        let residual = frobenius_distance(&u_mphd, u_th)?;
        Ok(Self {
            delta_lo,
            o,
            u_mphd,
            residual,
            branch,
        })
    }
}

/// `O·Δ_LO·G`.
pub fn mphd_product(delta_lo: &DiagonalUnitary, o: &RealOrthogonal, g: &CMatrix) -> Result<CMatrix> {
    if o.dim() != delta_lo.len() {
        return Err(MphdError::Dimension(format!(
            "O is {0}×{0} but Δ_LO has {1} phases",
            o.dim(),
            delta_lo.len()
        )));
    }
    Ok(o.to_complex() * delta_lo.apply_left(g)?)
}

fn solution_for_root(
    report: &FeasibilityReport,
    g: &CMatrix,
    u_th: &CMatrix,
    branch: BranchId,
    root: DiagonalUnitary,
) -> Result<SynthesisSolution> {
    // O = U'·Δ⁻¹ scales column k by e^{−iφ_k}
    let mut o_c = report.u_prime.clone();
    for (k, z) in root.inverse().entries().into_iter().enumerate() {
        o_c.column_mut(k).iter_mut().for_each(|x| *x *= z);
    }
    let tol = report.consistency_tol();
    let max_im = o_c.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let o = RealOrthogonal::new(real_part(&o_c), tol).map_err(|e| {
        MphdError::Consistency(format!("branch {branch}: {e}"))
    })?;
    if max_im > tol {
        return Err(MphdError::Consistency(format!(
            "branch {branch}: O has imaginary part {max_im:.3e}"
        )));
    }
    SynthesisSolution::assemble(root, o, g, u_th, Some(branch))
}

fn require_feasible(report: &FeasibilityReport) -> Result<()> {
    if !report.feasible {
        return Err(MphdError::Infeasible {
            offdiag: report.offdiag_residual,
            modulus: report.modulus_residual,
        });
    }
    Ok(())
}

/// Exact solution on one square-root branch.
pub fn solve_exact(
    report: &FeasibilityReport,
    g: &CMatrix,
    u_th: &CMatrix,
    branch: &BranchId,
) -> Result<SynthesisSolution> {
    require_feasible(report)?;
    check_square_pair(u_th, g)?;
    let root = report.diagonal().sqrt_branch(branch)?;
    solution_for_root(report, g, u_th, branch.clone(), root)
}

/// All `2^N` exact solutions, ordered by branch index.
pub fn enumerate_solutions(
    report: &FeasibilityReport,
    g: &CMatrix,
    u_th: &CMatrix,
) -> Result<Vec<SynthesisSolution>> {
    require_feasible(report)?;
    check_square_pair(u_th, g)?;
    diag_sqrt_branches(&report.diagonal(), &BranchSelector::All)?
        .into_iter()
        .map(|(b, root)| solution_for_root(report, g, u_th, b, root))
        .collect()
}

/// Recomputes `O·Δ_LO·G` from the stored parameters and returns its distance to `U_th`.
pub fn verify_solution(sol: &SynthesisSolution, u_th: &CMatrix, g: &CMatrix) -> Result<f64> {
    frobenius_distance(&mphd_product(&sol.delta_lo, &sol.o, g)?, u_th)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxOptions {
    /// Phase sweeps per restart.
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Objective value treated as an exact hit.
    pub tol: f64,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            restarts: 8,
            seed: 0,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ApproxResult {
    pub solution: SynthesisSolution,
    /// Best objective so far, recorded after every sweep of every restart.
    pub objective_trace: Vec<f64>,
    /// Total sweeps over all restarts.
    pub iterations: usize,
    pub converged: bool,
    /// Final objective of each restart.
    pub restart_residuals: Vec<f64>,
}

const COARSE_SAMPLES: usize = 24;
const GOLDEN_TOL: f64 = 1e-11;
const STATIONARY_TOL: f64 = 1e-14;

/// `min_O ‖O·Δ(φ)·G − U_th‖_F` with `O` from the Procrustes solution.
pub(crate) struct ProfiledObjective<'a> {
    g: &'a CMatrix,
    u_th: &'a CMatrix,
}

impl<'a> ProfiledObjective<'a> {
    pub(crate) fn new(g: &'a CMatrix, u_th: &'a CMatrix) -> Self {
        Self { g, u_th }
    }

    pub(crate) fn best_gains(&self, phases: &[f64]) -> Result<(RealOrthogonal, f64)> {
        let delta = DiagonalUnitary::new(phases.to_vec())?;
        let w = delta.apply_left(self.g)?;
        let b: RMatrix = real_part(&(&w * self.u_th.adjoint()));
        let o = procrustes_best_orthogonal(&b)?;
        let value = (o.to_complex() * w - self.u_th).norm();
        Ok((o, value))
    }

    fn value(&self, phases: &[f64]) -> f64 {
        self.best_gains(phases).map(|(_, v)| v).unwrap_or(f64::INFINITY)
    }
}

/// Minimizes the objective in coordinate `k` by a coarse periodic scan
/// followed by golden-section refinement. Returns the new value if it beats
/// `current`.
fn line_search(
    obj: &ProfiledObjective<'_>,
    phases: &mut [f64],
    k: usize,
    current: f64,
) -> f64 {
    let origin = phases[k];
    let mut trial = phases.to_vec();
    let mut eval = |x: f64| {
        trial[k] = x;
        obj.value(&trial)
    };

    let step = TAU / COARSE_SAMPLES as f64;
    let (mut best_x, mut best_f) = (origin, current);
    for j in 1..COARSE_SAMPLES {
        let x = origin + j as f64 * step;
        let f = eval(x);
        if f < best_f {
            best_x = x;
            best_f = f;
        }
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best_x - step, best_x + step);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    while b - a > GOLDEN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    for (x, f) in [(c, fc), (d, fd)] {
        if f < best_f {
            best_x = x;
            best_f = f;
        }
    }

    if best_f < current {
        phases[k] = crate::matcore::wrap_angle(best_x);
        best_f
    } else {
        current
    }
}

/// Best approximate `(Δ_LO, O)` for a target that may be infeasible.
///
/// Each restart runs coordinate sweeps over the `N` LO phases; every
/// objective evaluation re-solves `O` in closed form. Restart 0 starts from
/// `φ = 0`, the others from uniform random phases drawn from a ChaCha8
/// generator seeded with `opts.seed`.
pub fn solve_approx(u_th: &CMatrix, g: &CMatrix, opts: &ApproxOptions) -> Result<ApproxResult> {
    check_square_pair(u_th, g)?;
    check_unitary(u_th, "U_th", opts.tol.max(1e-9))?;
    check_unitary(g, "G", opts.tol.max(1e-9))?;
    if opts.restarts == 0 {
        return Err(MphdError::InvalidInput("need at least one restart".into()));
    }

    let n = g.nrows();
    let obj = ProfiledObjective::new(g, u_th);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut best_converged = false;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut restart_residuals = Vec::with_capacity(opts.restarts);

    for restart in 0..opts.restarts {
        let mut phases: Vec<f64> = if restart == 0 {
            vec![0.0; n]
        } else {
            (0..n).map(|_| rng.random_range(0.0..TAU)).collect()
        };
        let mut f = obj.value(&phases);
        let mut converged = f <= opts.tol;
        let mut sweeps = 0;
        while !converged && sweeps < opts.max_iters {
            let before = f;
            for k in 0..n {
                f = line_search(&obj, &mut phases, k, f);
            }
            sweeps += 1;
            let running = best.as_ref().map_or(f, |(_, b)| b.min(f));
            trace.push(running);
            converged = f <= opts.tol || before - f <= STATIONARY_TOL * (1.0 + before);
        }
        iterations += sweeps;
        debug!("restart {restart}: objective {f:.3e} after {sweeps} sweeps");
        restart_residuals.push(f);

        if best.as_ref().is_none_or(|(_, b)| f < *b) {
            best = Some((phases, f));
            best_converged = converged;
        }
        if let Some((_, b)) = &best {
            if *b <= opts.tol && restart + 1 < opts.restarts {
                // exact hit; remaining restarts cannot improve on it
                break;
            }
        }
    }

    let (phases, _) = best.expect("at least one restart ran");
    let (o, _) = obj.best_gains(&phases)?;
    let solution = SynthesisSolution::assemble(DiagonalUnitary::new(phases)?, o, g, u_th, None)?;
    if trace.is_empty() {
        trace.push(solution.residual);
    }
    Ok(ApproxResult {
        solution,
        objective_trace: trace,
        iterations,
        converged: best_converged,
        restart_residuals,
    })
}
