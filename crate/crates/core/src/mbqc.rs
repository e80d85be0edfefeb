//! Measurement-induced single-mode Gaussian gates on a three-mode linear cluster.
//!
//! Mode order is `(in, 1, 2, 3)`: the input couples to cluster mode 1 through a
//! balanced beam splitter, modes `in`, 1 and 2 are measured and mode 3 carries
//! the output. A [`GateMatrix`] acts on the column `(q, p)`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cluster::{linear_cluster_3_asym, validate_cluster, AdjacencyMatrix};
use crate::error::{MphdError, Result};
use crate::matcore::{CMatrix, DiagonalUnitary};

/// `|cos θ₋|` below this makes the teleportation matrix singular.
pub const TELE_SINGULAR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")]
pub struct GateMatrix(pub Matrix2<f64>);

impl GateMatrix {
    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    /// Quadrature rotation `(q, p) → (−p, q)`.
    pub fn fourier() -> Self {
        Self(Matrix2::new(0.0, -1.0, 1.0, 0.0))
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    pub fn then(&self, next: &GateMatrix) -> GateMatrix {
        GateMatrix(next.0 * self.0)
    }
}

impl From<[[f64; 2]; 2]> for GateMatrix {
    fn from(r: [[f64; 2]; 2]) -> Self {
        Self(Matrix2::new(r[0][0], r[0][1], r[1][0], r[1][1]))
    }
}

impl From<GateMatrix> for [[f64; 2]; 2] {
    fn from(g: GateMatrix) -> Self {
        let m = g.0;
        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
    }
}

/// `sin_cos` that returns exact values at multiples of `π/2`.
fn sin_cos_snapped(x: f64) -> (f64, f64) {
    let k = x / FRAC_PI_2;
    let n = k.round();
    if (k - n).abs() > 4.0 * f64::EPSILON * n.abs().max(1.0) {
        return x.sin_cos();
    }
    match (n as i64).rem_euclid(4) {
        0 => (0.0, 1.0),
        1 => (1.0, 0.0),
        2 => (0.0, -1.0),
        _ => (-1.0, 0.0),
    }
}

/// Gate enacted by the teleportation step measured at `(θ_in, θ_1)`.
pub fn m_tele(theta_in: f64, theta_1: f64) -> Result<GateMatrix> {
    let plus = theta_in + theta_1;
    let minus = theta_in - theta_1;
    let c = sin_cos_snapped(minus).1;
    if c.abs() < TELE_SINGULAR_TOL {
        return Err(MphdError::Singular(format!(
            "teleportation singular at θ_in − θ_1 = {minus}"
        )));
    }
    let (sm, _) = sin_cos_snapped(minus);
    let (sp, cp) = sin_cos_snapped(plus);
    Ok(GateMatrix(Matrix2::new(cp, sm - sp, sm + sp, cp) * (-1.0 / c)))
}

/// Shear gate from one cluster measurement with parameter `s`.
pub fn m_shear(s: f64) -> GateMatrix {
    GateMatrix(Matrix2::new(-s, -1.0, 1.0, 0.0))
}

/// Gain and quadrature angle realizing shear `s`: `(√(1+s²), arctan s)`.
pub fn quadrature_for_shear(s: f64) -> (f64, f64) {
    ((1.0 + s * s).sqrt(), s.atan())
}

/// Product of gates given in application order.
pub fn compose(gates: &[GateMatrix]) -> Result<GateMatrix> {
    let (first, rest) = gates
        .split_first()
        .ok_or_else(|| MphdError::InvalidInput("compose needs at least one gate".into()))?;
    Ok(rest.iter().fold(*first, |acc, g| acc.then(g)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementPlan {
    /// Measured quadrature `q·sinθ + p·cosθ` per mode.
    pub angles: Vec<f64>,
    /// Added to each recorded outcome.
    pub offsets: Vec<f64>,
    /// Multiplies each raw outcome.
    pub gains: Vec<f64>,
}

impl MeasurementPlan {
    pub fn new(angles: Vec<f64>, offsets: Vec<f64>, gains: Vec<f64>) -> Result<Self> {
        let plan = Self {
            angles,
            offsets,
            gains,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Measures `p` on every mode with unit gain.
    pub fn p_quadratures(n: usize) -> Self {
        Self {
            angles: vec![0.0; n],
            offsets: vec![0.0; n],
            gains: vec![1.0; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.angles.len();
        if self.offsets.len() != n || self.gains.len() != n {
            return Err(MphdError::Dimension(format!(
                "plan lengths differ: {} angles, {} offsets, {} gains",
                n,
                self.offsets.len(),
                self.gains.len()
            )));
        }
        let all = self.angles.iter().chain(&self.offsets).chain(&self.gains);
        if all.clone().any(|x| !x.is_finite()) {
            return Err(MphdError::InvalidInput("plan has non-finite entries".into()));
        }
        if let Some(g) = self.gains.iter().find(|g| **g < 1.0) {
            return Err(MphdError::InvalidInput(format!("gain {g} is below 1")));
        }
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.angles.len()
    }
}

#[derive(Clone, Debug)]
pub struct GateProgram {
    pub plan: MeasurementPlan,
    pub target_gate: GateMatrix,
    pub d_meas: DiagonalUnitary,
    /// `D_meas·U_BS·(1 ⊕ U_lin3)`.
    pub u_th: CMatrix,
    /// Shift of the input `(q, p)` implied by the plan offsets; the target
    /// output is `target_gate·(x_in + input_shift)`.
    pub input_shift: [f64; 2],
}

/// Balanced beam splitter on modes `(in, 1)`, identity on modes 2 and 3.
pub fn beam_splitter_in_1() -> CMatrix {
    let h = 1.0 / 2f64.sqrt();
    let mut m = CMatrix::identity(4, 4);
    m[(0, 0)] = Complex64::new(h, 0.0);
    m[(0, 1)] = Complex64::new(0.0, h);
    m[(1, 0)] = Complex64::new(0.0, h);
    m[(1, 1)] = Complex64::new(h, 0.0);
    m
}

/// `D_meas·U_BS·(1 ⊕ U_lin3)` for an arbitrary measurement rotation.
pub fn build_u_tf_with(u_lin3: &CMatrix, d_meas: &DiagonalUnitary) -> Result<CMatrix> {
    if d_meas.len() != 4 {
        return Err(MphdError::Dimension("D_meas must have 4 phases".into()));
    }
    let path = AdjacencyMatrix::path(3)?;
    let check = validate_cluster(u_lin3, &path, 1e-9)?;
    if !check.passed {
        return Err(MphdError::InvalidInput(format!(
            "U_lin3 is not a 3-mode linear cluster unitary (max residual {:.3e})",
            check.max_residual()
        )));
    }
    let mut embedded = CMatrix::identity(4, 4);
    embedded.view_mut((1, 1), (3, 3)).copy_from(u_lin3);
    d_meas.apply_left(&(beam_splitter_in_1() * embedded))
}

/// `U_tf` for the Fourier angles with readout angle `θ_3`.
pub fn build_u_tf(u_lin3: &CMatrix, theta_3: f64) -> Result<CMatrix> {
    build_u_tf_with(u_lin3, &DiagonalUnitary::new(vec![FRAC_PI_2, FRAC_PI_2, 0.0, theta_3])?)
}

fn program_for(plan: MeasurementPlan, target_gate: GateMatrix, input_shift: [f64; 2]) -> Result<GateProgram> {
    plan.validate()?;
    if plan.mode_count() != 4 {
        return Err(MphdError::Dimension("gate programs act on 4 modes".into()));
    }
    let d_meas = DiagonalUnitary::new(plan.angles.clone())?;
    let u_th = build_u_tf_with(&linear_cluster_3_asym(), &d_meas)?;
    Ok(GateProgram {
        plan,
        target_gate,
        d_meas,
        u_th,
        input_shift,
    })
}

pub fn fourier_program() -> Result<GateProgram> {
    displacement_program(0.0)
}

/// Fourier angles with `s` added to the mode-2 outcome; enacts `F·e^{iq̂s}`.
pub fn displacement_program(s: f64) -> Result<GateProgram> {
    let plan = MeasurementPlan::new(
        vec![FRAC_PI_2, FRAC_PI_2, 0.0, 0.0],
        vec![0.0, 0.0, s, 0.0],
        vec![1.0; 4],
    )?;
    program_for(plan, GateMatrix::fourier(), [0.0, s])
}

/// Arbitrary angles; the mode-2 measurement realizes shear `tan θ_2`.
pub fn custom_program(theta_in: f64, theta_1: f64, theta_2: f64, theta_3: f64) -> Result<GateProgram> {
    if theta_2.cos().abs() < TELE_SINGULAR_TOL {
        return Err(MphdError::Singular("θ_2 = π/2 gives an unbounded shear".into()));
    }
    let s = theta_2.tan();
    let (gain, _) = quadrature_for_shear(s);
    let target = compose(&[m_tele(theta_in, theta_1)?, m_shear(s)])?;
    let plan = MeasurementPlan::new(
        vec![theta_in, theta_1, theta_2, theta_3],
        vec![0.0; 4],
        vec![1.0, 1.0, gain, 1.0],
    )?;
    program_for(plan, target, [0.0, 0.0])
}
