//! Gaussian covariance simulator with `[q, p] = 2i` (vacuum variance 1).
//!
//! Phase-space vectors are ordered `(q_1..q_N, p_1..p_N)`. Homodyne angle `θ`
//! reads `q·sinθ + p·cosθ`, so `θ = 0` is a `p` measurement.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cluster::AdjacencyMatrix;
use crate::error::{MphdError, Result};
use crate::matcore::{imag_part, real_part, unitarity_residual, CMatrix, RMatrix};
use crate::mbqc::{GateMatrix, GateProgram, MeasurementPlan};
use crate::modes::DetectionSetup;
use crate::synth::SynthesisSolution;

/// LO phase selecting the `p` quadrature.
pub const LO_PHASE_P: f64 = 3.0 * PI / 2.0;
/// Relative covariance error above which a gate run is flagged.
pub const LARGE_DEVIATION: f64 = 0.05;
const PINV_EPS: f64 = 1e-14;

pub type RVector = DVector<f64>;

/// Symplectic form for `N` modes in this convention.
pub fn symplectic_form(n: usize) -> RMatrix {
    let mut w = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        w[(i, n + i)] = 1.0;
        w[(n + i, i)] = -1.0;
    }
    w
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    mean: RVector,
    cov: RMatrix,
}

impl GaussianState {
    pub fn new(mean: RVector, cov: RMatrix) -> Result<Self> {
        let d = mean.len();
        if d == 0 || !d.is_multiple_of(2) || cov.shape() != (d, d) {
            return Err(MphdError::Dimension(format!(
                "mean of length {d} and covariance {:?} do not describe N modes",
                cov.shape()
            )));
        }
        if (&cov - cov.transpose()).amax() > 1e-9 * (1.0 + cov.amax()) {
            return Err(MphdError::InvalidInput("covariance is not symmetric".into()));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(n: usize) -> Self {
        Self {
            mean: RVector::zeros(2 * n),
            cov: RMatrix::identity(2 * n, 2 * n),
        }
    }

    /// Single mode with covariance `diag(var_q, var_p)` and mean `(q, p)`.
    pub fn single_mode(mean: [f64; 2], var_q: f64, var_p: f64) -> Result<Self> {
        Self::new(
            RVector::from_column_slice(&mean),
            RMatrix::from_diagonal(&RVector::from_column_slice(&[var_q, var_p])),
        )
    }

    pub fn mode_count(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &RVector {
        &self.mean
    }

    pub fn cov(&self) -> &RMatrix {
        &self.cov
    }

    /// Smallest eigenvalue of `cov + iΩ`; non-negative for physical states.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let n = self.mode_count();
        let w = symplectic_form(n);
        let h = CMatrix::from_fn(2 * n, 2 * n, |i, j| Complex64::new(self.cov[(i, j)], w[(i, j)]));
        SymmetricEigen::new(h).eigenvalues.min()
    }

    /// Tensor product; modes of `self` come first.
    pub fn join(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (self.mode_count(), other.mode_count());
        let n = a + b;
        // index of each block coordinate in the joint ordering
        let ia = |k: usize| if k < a { k } else { n + k - a };
        let ib = |k: usize| if k < b { a + k } else { n + a + k - b };
        let mut mean = RVector::zeros(2 * n);
        let mut cov = RMatrix::zeros(2 * n, 2 * n);
        for i in 0..2 * a {
            mean[ia(i)] = self.mean[i];
            for j in 0..2 * a {
                cov[(ia(i), ia(j))] = self.cov[(i, j)];
            }
        }
        for i in 0..2 * b {
            mean[ib(i)] = other.mean[i];
            for j in 0..2 * b {
                cov[(ib(i), ib(j))] = other.cov[(i, j)];
            }
        }
        GaussianState { mean, cov }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.mode_count() {
            return Err(MphdError::InvalidInput(format!(
                "mode {mode} out of range for {} modes",
                self.mode_count()
            )));
        }
        Ok(())
    }

    /// Phase-space indices that survive removing `mode`.
    fn kept_indices(&self, mode: usize) -> Vec<usize> {
        let n = self.mode_count();
        (0..2 * n).filter(|&i| i != mode && i != n + mode).collect()
    }
}

/// Measured-quadrature row `q_k·sinθ + p_k·cosθ` for an `N`-mode state.
pub fn quadrature_row(n: usize, mode: usize, theta: f64) -> RVector {
    let mut v = RVector::zeros(2 * n);
    v[mode] = theta.sin();
    v[n + mode] = theta.cos();
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMap(RMatrix);

impl SymplecticMap {
    pub fn matrix(&self) -> &RMatrix {
        &self.0
    }

    pub fn mode_count(&self) -> usize {
        self.0.nrows() / 2
    }

    /// Max entry of `SΩSᵀ − Ω`.
    pub fn symplectic_residual(&self) -> f64 {
        let w = symplectic_form(self.mode_count());
        (&self.0 * &w * self.0.transpose() - w).amax()
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &SymplecticMap) -> SymplecticMap {
        SymplecticMap(&next.0 * &self.0)
    }
}

/// `U = X + iY ↦ [[X, −Y], [Y, X]]`.
pub fn symplectic_from_unitary(u: &CMatrix) -> Result<SymplecticMap> {
    let residual = unitarity_residual(u)?;
    if residual > 1e-9 {
        return Err(MphdError::NotUnitary {
            name: "U".into(),
            residual,
            tol: 1e-9,
        });
    }
    let (x, y) = (real_part(u), imag_part(u));
    let n = u.nrows();
    let mut s = RMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(&x);
    s.view_mut((0, n), (n, n)).copy_from(&(-&y));
    s.view_mut((n, 0), (n, n)).copy_from(&y);
    s.view_mut((n, n), (n, n)).copy_from(&x);
    Ok(SymplecticMap(s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SqueezeAxis {
    Q,
    P,
}

/// Squeezed vacua with variance `e^{−2r}` on the squeezed quadrature.
pub fn squeezed_input(n: usize, r: f64, axes: &[SqueezeAxis]) -> Result<GaussianState> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(MphdError::InvalidInput(format!("squeezing r = {r} must be finite and ≥ 0")));
    }
    if axes.len() != n {
        return Err(MphdError::Dimension(format!("{} axes for {n} modes", axes.len())));
    }
    let (small, large) = ((-2.0 * r).exp(), (2.0 * r).exp());
    let mut diag = RVector::zeros(2 * n);
    for (k, axis) in axes.iter().enumerate() {
        let (vq, vp) = match axis {
            SqueezeAxis::P => (large, small),
            SqueezeAxis::Q => (small, large),
        };
        diag[k] = vq;
        diag[n + k] = vp;
    }
    Ok(GaussianState {
        mean: RVector::zeros(2 * n),
        cov: RMatrix::from_diagonal(&diag),
    })
}

pub fn p_squeezed(n: usize, r: f64) -> Result<GaussianState> {
    squeezed_input(n, r, &vec![SqueezeAxis::P; n])
}

pub fn apply(s: &SymplecticMap, state: &GaussianState) -> Result<GaussianState> {
    if s.0.nrows() != state.mean.len() {
        return Err(MphdError::Dimension(format!(
            "map acts on {} modes, state has {}",
            s.mode_count(),
            state.mode_count()
        )));
    }
    let cov = &s.0 * &state.cov * s.0.transpose();
    Ok(GaussianState {
        mean: &s.0 * &state.mean,
        cov: (&cov + cov.transpose()) * 0.5,
    })
}

/// Conditions on outcome `x` of quadrature `θ` of `mode` and drops that mode.
pub fn homodyne_condition(state: &GaussianState, mode: usize, theta: f64, x: f64) -> Result<GaussianState> {
    state.check_mode(mode)?;
    let v = quadrature_row(state.mode_count(), mode, theta);
    let sv = &state.cov * &v;
    let var = v.dot(&sv);
    let inv = if var > PINV_EPS { 1.0 / var } else { 0.0 };
    let kept = state.kept_indices(mode);
    let innovation = x - v.dot(&state.mean);
    let mean = RVector::from_iterator(
        kept.len(),
        kept.iter().map(|&i| state.mean[i] + sv[i] * inv * innovation),
    );
    let cov = RMatrix::from_fn(kept.len(), kept.len(), |a, b| {
        let (i, j) = (kept[a], kept[b]);
        state.cov[(i, j)] - sv[i] * sv[j] * inv
    });
    Ok(GaussianState {
        cov: (&cov + cov.transpose()) * 0.5,
        mean,
    })
}

/// Samples quadrature `θ` of `mode` and returns the outcome and the conditioned rest.
pub fn homodyne_measure<R: Rng + ?Sized>(
    state: &GaussianState,
    mode: usize,
    theta: f64,
    rng: &mut R,
) -> Result<(f64, GaussianState)> {
    state.check_mode(mode)?;
    let v = quadrature_row(state.mode_count(), mode, theta);
    let var = v.dot(&(&state.cov * &v)).max(0.0);
    let z: f64 = rng.sample(StandardNormal);
    let x = v.dot(&state.mean) + var.sqrt() * z;
    Ok((x, homodyne_condition(state, mode, theta, x)?))
}

/// Variances of `p_i − Σ_j V_ij q_j`.
pub fn nullifier_variances(state: &GaussianState, v: &AdjacencyMatrix) -> Result<Vec<f64>> {
    let n = state.mode_count();
    if v.dim() != n {
        return Err(MphdError::Dimension(format!("graph has {} nodes, state {n} modes", v.dim())));
    }
    Ok((0..n)
        .map(|i| {
            let mut w = RVector::zeros(2 * n);
            w[n + i] = 1.0;
            for j in 0..n {
                w[j] = -v.matrix()[(i, j)];
            }
            w.dot(&(&state.cov * &w))
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomodyneRecord {
    pub shot: usize,
    pub mode: usize,
    /// In `[0, 2π)`.
    pub angle: f64,
    pub outcome: f64,
    pub lo_phase: f64,
}

impl HomodyneRecord {
    fn new(shot: usize, mode: usize, angle: f64, outcome: f64) -> Self {
        let angle = angle.rem_euclid(TAU);
        Self {
            shot,
            mode,
            angle,
            outcome,
            lo_phase: (LO_PHASE_P + angle).rem_euclid(TAU),
        }
    }
}

/// Symmetric square root of a PSD matrix, negative eigenvalues clamped.
fn psd_sqrt(m: &RMatrix) -> RMatrix {
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

fn diagonal_symplectic(phases: &[f64]) -> Result<SymplecticMap> {
    let u = CMatrix::from_diagonal(&DVector::from_iterator(
        phases.len(),
        phases.iter().map(|&p| Complex64::from_polar(1.0, p)),
    ));
    symplectic_from_unitary(&u)
}

/// The three pipeline stages `S(G)`, `S(Δ_LO)`, `S(O)` in application order.
pub fn staged_maps(setup: &DetectionSetup, sol: &SynthesisSolution) -> Result<[SymplecticMap; 3]> {
    let n = setup.mode_count();
    if sol.delta_lo.len() != n || sol.o.dim() != n {
        return Err(MphdError::Dimension(format!(
            "solution has {} modes, setup {n}",
            sol.delta_lo.len()
        )));
    }
    Ok([
        symplectic_from_unitary(&setup.g)?,
        diagonal_symplectic(sol.delta_lo.phases())?,
        symplectic_from_unitary(&sol.o.to_complex())?,
    ])
}

/// Output state of the staged pipeline on p-squeezed inputs.
pub fn staged_state(setup: &DetectionSetup, sol: &SynthesisSolution, r: f64) -> Result<GaussianState> {
    let mut state = p_squeezed(setup.mode_count(), r)?;
    for s in staged_maps(setup, sol)? {
        state = apply(&s, &state)?;
    }
    Ok(state)
}

/// Output state of the target network `U` on p-squeezed inputs.
pub fn direct_state(u: &CMatrix, r: f64) -> Result<GaussianState> {
    apply(&symplectic_from_unitary(u)?, &p_squeezed(u.nrows(), r)?)
}

#[derive(Clone, Debug)]
pub struct SimulationResult {
    /// Sample mean of each mode's recorded outcome.
    pub means: Vec<f64>,
    /// Unbiased sample covariance of recorded outcomes (zero for one shot).
    pub sample_cov: RMatrix,
    /// Exact covariance of recorded outcomes.
    pub analytic_cov: RMatrix,
    /// Exact mean of recorded outcomes.
    pub analytic_mean: Vec<f64>,
    /// Full phase-space state after the pipeline.
    pub state: GaussianState,
    pub records: Vec<HomodyneRecord>,
}

/// Runs the staged MPHD pipeline on `r`-squeezed inputs and samples all
/// plan quadratures jointly for `shots` shots.
pub fn simulate_mphd(
    setup: &DetectionSetup,
    sol: &SynthesisSolution,
    plan: &MeasurementPlan,
    r: f64,
    shots: usize,
    seed: u64,
) -> Result<SimulationResult> {
    plan.validate()?;
    let n = setup.mode_count();
    if plan.mode_count() != n {
        return Err(MphdError::Dimension(format!("plan has {} modes, setup {n}", plan.mode_count())));
    }
    if shots == 0 {
        return Err(MphdError::InvalidInput("shots must be at least 1".into()));
    }
    let state = staged_state(setup, sol, r)?;

    let rows = RMatrix::from_fn(n, 2 * n, |k, j| {
        let row = quadrature_row(n, k, plan.angles[k]);
        row[j] * plan.gains[k]
    });
    let offsets = RVector::from_column_slice(&plan.offsets);
    let mean = &rows * state.mean() + &offsets;
    let cov = &rows * state.cov() * rows.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    let root = psd_sqrt(&cov);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(shots * n);
    let mut sum = RVector::zeros(n);
    let mut outer = RMatrix::zeros(n, n);
    for shot in 0..shots {
        let z = RVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        let x = &mean + &root * z;
        for k in 0..n {
            records.push(HomodyneRecord::new(shot, k, plan.angles[k], x[k]));
        }
        sum += &x;
        outer += &x * x.transpose();
    }
    let m = shots as f64;
    let sample_mean = &sum / m;
    let sample_cov = if shots > 1 {
        (outer - &sample_mean * sample_mean.transpose() * m) / (m - 1.0)
    } else {
        RMatrix::zeros(n, n)
    };
    Ok(SimulationResult {
        means: sample_mean.iter().copied().collect(),
        sample_cov,
        analytic_cov: cov,
        analytic_mean: mean.iter().copied().collect(),
        state,
        records,
    })
}

#[derive(Clone, Debug)]
pub struct GateReport {
    /// `‖cov_out − M·cov_in·Mᵀ‖_F`.
    pub cov_distance: f64,
    /// `‖mean_out − M·(mean_in + shift)‖`.
    pub mean_distance: f64,
    /// `cov_distance / ‖M·cov_in·Mᵀ‖_F`.
    pub relative_deviation: f64,
    pub large_deviation: bool,
    pub target_cov: RMatrix,
    pub target_mean: RVector,
    /// Feedforward gain applied to the recorded outcomes.
    pub feedforward: RMatrix,
    pub records: Vec<HomodyneRecord>,
}

/// Runs a gate program on a one-mode input and `r`-squeezed cluster modes.
///
/// `U_th` already contains the measurement rotation, so modes `in`, 1, 2
/// are measured in `p`. The surviving mode's mean is corrected by the
/// linear feedforward that cancels the outcome dependence.
pub fn run_gate_program(
    program: &GateProgram,
    input: &GaussianState,
    r: f64,
    seed: u64,
) -> Result<(GaussianState, GateReport)> {
    if input.mode_count() != 1 {
        return Err(MphdError::Dimension("gate input must be a single mode".into()));
    }
    let plan = &program.plan;
    let joint = input.join(&p_squeezed(3, r)?);
    let state = apply(&symplectic_from_unitary(&program.u_th)?, &joint)?;

    let measured = [4, 5, 6];
    let out = [3, 7];
    let smm = RMatrix::from_fn(3, 3, |a, b| state.cov()[(measured[a], measured[b])]);
    let som = RMatrix::from_fn(2, 3, |a, b| state.cov()[(out[a], measured[b])]);
    let pinv = smm
        .pseudo_inverse(PINV_EPS)
        .map_err(|e| MphdError::Numerical(e.to_string()))?;
    // gain on recorded outcomes g·x + s
    let gains_inv = RMatrix::from_diagonal(&RVector::from_iterator(3, plan.gains[..3].iter().map(|g| 1.0 / g)));
    let feedforward = som * pinv * gains_inv;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = state;
    let mut recorded = RVector::zeros(3);
    let mut records = Vec::with_capacity(3);
    for k in 0..3 {
        // earlier measured modes were removed, so the next one is always mode 0
        let (x, next) = homodyne_measure(&current, 0, 0.0, &mut rng)?;
        recorded[k] = plan.gains[k] * x + plan.offsets[k];
        records.push(HomodyneRecord::new(0, k, plan.angles[k], recorded[k]));
        current = next;
    }
    let mean = current.mean() - &feedforward * &recorded;
    let output = GaussianState::new(mean, current.cov().clone())?;

    let m = gate_dmatrix(&program.target_gate);
    let target_cov = &m * input.cov() * m.transpose();
    let shifted = input.mean() + RVector::from_column_slice(&program.input_shift);
    let target_mean = &m * shifted;
    let cov_distance = (output.cov() - &target_cov).norm();
    let relative_deviation = cov_distance / target_cov.norm();
    let report = GateReport {
        cov_distance,
        mean_distance: (output.mean() - &target_mean).norm(),
        relative_deviation,
        large_deviation: relative_deviation > LARGE_DEVIATION,
        target_cov,
        target_mean,
        feedforward,
        records,
    };
    Ok((output, report))
}

fn gate_dmatrix(g: &GateMatrix) -> RMatrix {
    RMatrix::from_fn(2, 2, |i, j| g.matrix()[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{linear_cluster_4, AdjacencyMatrix};
    use crate::mbqc::{displacement_program, fourier_program};

    #[test]
    fn phase_rotation_map() {
        let t = 0.7f64;
        let s = symplectic_from_unitary(&CMatrix::from_element(1, 1, Complex64::from_polar(1.0, t))).unwrap();
        let expected = RMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        assert!((s.matrix() - expected).amax() < 1e-15);
        assert_eq!(symplectic_from_unitary(&CMatrix::identity(3, 3)).unwrap().matrix(), &RMatrix::identity(6, 6));
        assert!(symplectic_from_unitary(&(CMatrix::identity(2, 2) * Complex64::new(2.0, 0.0))).is_err());
    }

    #[test]
    fn cluster_map_is_symplectic() {
        let s = symplectic_from_unitary(&linear_cluster_4()).unwrap();
        assert!(s.symplectic_residual() < 1e-10);
    }

    #[test]
    fn squeezing_definitions() {
        assert_eq!(p_squeezed(1, 0.0).unwrap(), GaussianState::vacuum(1));
        let s = p_squeezed(1, 1.0).unwrap();
        assert!((s.cov()[(1, 1)] - (-2f64).exp()).abs() < 1e-15);
        let s4 = squeezed_input(4, 2.0, &[SqueezeAxis::P, SqueezeAxis::Q, SqueezeAxis::P, SqueezeAxis::Q]).unwrap();
        assert!((s4.cov().determinant() - 1.0).abs() < 1e-9);
        assert!(squeezed_input(1, -1.0, &[SqueezeAxis::P]).is_err());
        assert!(squeezed_input(2, 1.0, &[SqueezeAxis::P]).is_err());
    }

    #[test]
    fn quarter_rotation_swaps_variances() {
        let s = symplectic_from_unitary(&CMatrix::from_element(1, 1, Complex64::new(0.0, 1.0))).unwrap();
        let out = apply(&s, &p_squeezed(1, 1.0).unwrap()).unwrap();
        assert!((out.cov()[(0, 0)] - (-2f64).exp()).abs() < 1e-12);
        assert!((out.cov()[(1, 1)] - 2f64.exp()).abs() < 1e-12);
        assert!(apply(&s, &GaussianState::vacuum(2)).is_err());
    }

    #[test]
    fn vacuum_measurement_leaves_product_partner() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, rest) = homodyne_measure(&GaussianState::vacuum(2), 0, 0.3, &mut rng).unwrap();
        assert_eq!(rest, GaussianState::vacuum(1));
        assert!(homodyne_measure(&GaussianState::vacuum(2), 2, 0.0, &mut rng).is_err());
    }

    #[test]
    fn beam_splitter_conditioning_matches_closed_form() {
        let h = 1.0 / 2f64.sqrt();
        let bs = CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(h, 0.0), Complex64::new(0.0, h), Complex64::new(0.0, h), Complex64::new(h, 0.0)],
        );
        let r = 1.0f64;
        let input = squeezed_input(2, r, &[SqueezeAxis::P, SqueezeAxis::P]).unwrap();
        let input = GaussianState::new(input.mean().clone(), {
            let mut c = input.cov().clone();
            c[(1, 1)] = 1.0;
            c[(3, 3)] = 1.0;
            c
        })
        .unwrap();
        let out = apply(&symplectic_from_unitary(&bs).unwrap(), &input).unwrap();
        // closed form: conditional variance of q_2 given p_1 is σ_qq − σ_pq²/σ_pp
        let (spp, spq, sqq) = (out.cov()[(2, 2)], out.cov()[(2, 1)], out.cov()[(1, 1)]);
        assert!(spq.abs() > 0.1);
        let cond = homodyne_condition(&out, 0, 0.0, 0.4).unwrap();
        assert!((cond.cov()[(0, 0)] - (sqq - spq * spq / spp)).abs() < 1e-12);
        assert!(cond.cov()[(0, 0)] < sqq);
        assert!(cond.uncertainty_min_eigenvalue() > -1e-9);
    }

    #[test]
    fn seeded_outcomes_repeat() {
        let st = p_squeezed(2, 0.5).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| homodyne_measure(&st, 1, 0.2, &mut rng).unwrap().0).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn nullifiers_of_vacuum_and_cluster() {
        let v0 = AdjacencyMatrix::empty(3).unwrap();
        let vars = nullifier_variances(&GaussianState::vacuum(3), &v0).unwrap();
        assert!(vars.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let v = AdjacencyMatrix::path(4).unwrap();
        let st = direct_state(&linear_cluster_4(), 8.0).unwrap();
        assert!(nullifier_variances(&st, &v).unwrap().iter().all(|x| *x < 1e-6));
        assert!(nullifier_variances(&st, &v0).is_err());
    }

    #[test]
    fn gate_program_flags_unsqueezed_cluster() {
        let input = squeezed_input(1, 1.0, &[SqueezeAxis::Q]).unwrap();
        let (_, rep) = run_gate_program(&fourier_program().unwrap(), &input, 0.0, 3).unwrap();
        assert!(rep.large_deviation);
        let (out, rep) = run_gate_program(&fourier_program().unwrap(), &input, 6.0, 3).unwrap();
        assert!(!rep.large_deviation);
        assert!(out.uncertainty_min_eigenvalue() > -1e-9);
    }

    #[test]
    fn displacement_shifts_output_mean() {
        let input = GaussianState::vacuum(1);
        let (out, rep) = run_gate_program(&displacement_program(2.0).unwrap(), &input, 8.0, 5).unwrap();
        assert!((rep.target_mean[0] + 2.0).abs() < 1e-15);
        assert!(rep.mean_distance < 1e-3, "{}", rep.mean_distance);
        assert!(out.mean()[1].abs() < 1e-3);
    }
}
