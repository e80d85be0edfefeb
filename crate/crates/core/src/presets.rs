//! Named worked examples: detection setups paired with target unitaries.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::cluster::{linear_cluster_4, AdjacencyMatrix};
use crate::error::{MphdError, Result};
use crate::matcore::{CMatrix, DiagonalUnitary};
use crate::mbqc::{displacement_program, fourier_program};
use crate::modes::DetectionSetup;

/// OPO phases giving `Δ_OPO* = diag(1, i, i, 1)`.
pub const LIN4_OPO_PHASES: [f64; 4] = [0.0, -FRAC_PI_2, -FRAC_PI_2, 0.0];
/// OPO phases giving `Δ_OPO* = diag(1, 1, i, −i)`.
pub const TF_OPO_PHASES: [f64; 4] = [0.0, 0.0, -FRAC_PI_2, FRAC_PI_2];

pub fn identity_setup() -> Result<DetectionSetup> {
    DetectionSetup::flip(4, DiagonalUnitary::identity(4))
}

pub fn lin4_setup() -> Result<DetectionSetup> {
    DetectionSetup::flip(4, DiagonalUnitary::new(LIN4_OPO_PHASES.to_vec())?)
}

pub fn tf_setup() -> Result<DetectionSetup> {
    DetectionSetup::flip(4, DiagonalUnitary::new(TF_OPO_PHASES.to_vec())?)
}

pub fn u_lin4() -> CMatrix {
    linear_cluster_4()
}

/// Two-mode controlled-phase cluster `(I + iV)/√2` with `G = I`.
///
/// Its `U'ᵀU'` has off-diagonal entries `±i`, so no exact solution exists.
pub fn cz2_problem() -> Result<(DetectionSetup, CMatrix)> {
    let setup = DetectionSetup::from_matrices(CMatrix::identity(2, 2), DiagonalUnitary::identity(2))?;
    let v = AdjacencyMatrix::path(2)?;
    let h = 1.0 / 2f64.sqrt();
    let u = CMatrix::from_fn(2, 2, |i, j| {
        let re = if i == j { h } else { 0.0 };
        Complex64::new(re, v.matrix()[(i, j)] * h)
    });
    Ok((setup, u))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    Identity,
    Lin4,
    Fourier,
    Displacement(f64),
    Cz2,
}

impl Preset {
    /// Detection setup and target unitary.
    pub fn problem(&self) -> Result<(DetectionSetup, CMatrix)> {
        match *self {
            Preset::Identity => {
                let s = identity_setup()?;
                let g = s.g.clone();
                Ok((s, g))
            }
            Preset::Lin4 => Ok((lin4_setup()?, u_lin4())),
            Preset::Fourier => Ok((tf_setup()?, fourier_program()?.u_th)),
            Preset::Displacement(s) => Ok((tf_setup()?, displacement_program(s)?.u_th)),
            Preset::Cz2 => cz2_problem(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Identity => f.write_str("identity"),
            Preset::Lin4 => f.write_str("lin4"),
            Preset::Fourier => f.write_str("fourier"),
            Preset::Displacement(_) => f.write_str("displacement"),
            Preset::Cz2 => f.write_str("cz2"),
        }
    }
}

impl FromStr for Preset {
    type Err = MphdError;

    /// Accepts the display names; `displacement` takes `s = 0`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Preset::Identity),
            "lin4" => Ok(Preset::Lin4),
            "fourier" => Ok(Preset::Fourier),
            "displacement" => Ok(Preset::Displacement(0.0)),
            "cz2" => Ok(Preset::Cz2),
            other => Err(MphdError::InvalidInput(format!("unknown preset {other:?}"))),
        }
    }
}
