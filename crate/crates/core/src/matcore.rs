//! Dense matrix helpers shared by every other module.
//!
//! Complex matrices are plain `nalgebra` matrices over [`Complex64`]. Diagonal
//! unitaries are stored as phase angles so that every diagonal entry has unit
//! modulus by construction.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MphdError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Default tolerance for structure checks on analytically exact inputs.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest mode count for which all `2^N` square-root branches are enumerated.
pub const MAX_ENUMERATION_MODES: usize = 20;

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.im)
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn require_square<T>(m: &DMatrix<T>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(MphdError::Dimension(format!(
            "{what} must be square, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `‖M†M − I‖_F`.
pub fn unitarity_residual(m: &CMatrix) -> Result<f64> {
    require_square(m, "matrix")?;
    let n = m.nrows();
    Ok((m.adjoint() * m - CMatrix::identity(n, n)).norm())
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> Result<bool> {
    Ok(unitarity_residual(m)? <= tol)
}

/// `‖MᵀM − I‖_F` for a real matrix.
pub fn orthogonality_residual(m: &RMatrix) -> Result<f64> {
    require_square(m, "matrix")?;
    let n = m.nrows();
    Ok((m.transpose() * m - RMatrix::identity(n, n)).norm())
}

/// True iff every imaginary part is within `tol` and `‖MᵀM − I‖_F ≤ tol`.
pub fn is_real_orthogonal(m: &CMatrix, tol: f64) -> Result<bool> {
    require_square(m, "matrix")?;
    if m.iter().any(|z| z.im.abs() > tol) {
        return Ok(false);
    }
    Ok(orthogonality_residual(&real_part(m))? <= tol)
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(MphdError::Dimension(format!(
            "cannot compare {:?} with {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok((a - b).norm())
}

/// A diagonal unitary `diag(e^{iφ_1}, …, e^{iφ_N})` stored by its phases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalUnitary {
    phases: Vec<f64>,
}

impl DiagonalUnitary {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(MphdError::InvalidInput("non-finite phase".into()));
        }
        Ok(Self { phases })
    }

    pub fn identity(n: usize) -> Self {
        Self { phases: vec![0.0; n] }
    }

    /// Reads phases off unit-modulus complex entries.
    pub fn from_entries(entries: &[Complex64], tol: f64) -> Result<Self> {
        for (i, z) in entries.iter().enumerate() {
            if (z.norm() - 1.0).abs() > tol {
                return Err(MphdError::InvalidInput(format!(
                    "diagonal entry {i} has modulus {}",
                    z.norm()
                )));
            }
        }
        Self::new(entries.iter().map(|z| z.arg()).collect())
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn entries(&self) -> Vec<Complex64> {
        self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.entries()))
    }

    pub fn conj(&self) -> Self {
        Self {
            phases: self.phases.iter().map(|p| -p).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        self.conj()
    }

    pub fn squared(&self) -> Self {
        Self {
            phases: self.phases.iter().map(|p| 2.0 * p).collect(),
        }
    }

    /// Principal square root: half of the argument taken in `(−π, π]`.
    pub fn principal_sqrt(&self) -> Self {
        Self {
            phases: self.phases.iter().map(|&p| 0.5 * wrap_angle(p)).collect(),
        }
    }

    /// Square root on the given branch; bit `k` set flips the sign of the
    /// principal root in mode `k`.
    pub fn sqrt_branch(&self, branch: &BranchId) -> Result<Self> {
        if branch.len() != self.len() {
            return Err(MphdError::Dimension(format!(
                "branch has {} bits for {} modes",
                branch.len(),
                self.len()
            )));
        }
        let mut root = self.principal_sqrt();
        for (phase, flip) in root.phases.iter_mut().zip(branch.bits()) {
            if *flip {
                *phase += PI;
            }
        }
        Ok(root)
    }

    /// Left-multiplies a matrix: row `i` is scaled by `e^{iφ_i}`.
    pub fn apply_left(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.len() {
            return Err(MphdError::Dimension(format!(
                "diagonal of size {} cannot act on {} rows",
                self.len(),
                m.nrows()
            )));
        }
        let mut out = m.clone();
        for (i, z) in self.entries().into_iter().enumerate() {
            for x in out.row_mut(i).iter_mut() {
                *x *= z;
            }
        }
        Ok(out)
    }
}

/// Selects square-root branches by sign flips relative to the principal root.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BranchId(Vec<bool>);

impl BranchId {
    pub fn principal(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Bit `k` of `index` becomes the flip of mode `k`.
    pub fn from_index(index: u64, n: usize) -> Self {
        Self((0..n).map(|k| (index >> k) & 1 == 1).collect())
    }

    pub fn index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(k, _)| 1u64 << k)
            .sum()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BranchId {
    type Err = MphdError;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(MphdError::InvalidInput(format!(
                    "branch bits must be 0/1, found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl From<BranchId> for String {
    fn from(b: BranchId) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for BranchId {
    type Error = MphdError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BranchSelector {
    Single(BranchId),
    All,
}

/// Square roots of a diagonal unitary. `All` returns the `2^N` branches in
/// [`BranchId::from_index`] order.
pub fn diag_sqrt_branches(
    d: &DiagonalUnitary,
    selector: &BranchSelector,
) -> Result<Vec<(BranchId, DiagonalUnitary)>> {
    match selector {
        BranchSelector::Single(b) => Ok(vec![(b.clone(), d.sqrt_branch(b)?)]),
        BranchSelector::All => {
            let n = d.len();
            if n > MAX_ENUMERATION_MODES {
                return Err(MphdError::Capacity {
                    modes: n,
                    max: MAX_ENUMERATION_MODES,
                });
            }
            (0..1u64 << n)
                .map(|idx| {
                    let b = BranchId::from_index(idx, n);
                    d.sqrt_branch(&b).map(|root| (b, root))
                })
                .collect()
        }
    }
}

/// A real orthogonal matrix (the digital gain matrix).
#[derive(Clone, Debug, PartialEq)]
pub struct RealOrthogonal(RMatrix);

impl RealOrthogonal {
    pub fn new(m: RMatrix, tol: f64) -> Result<Self> {
        let residual = orthogonality_residual(&m)?;
        if residual > tol || m.iter().any(|x| !x.is_finite()) {
            return Err(MphdError::InvalidInput(format!(
                "matrix is not orthogonal (‖OᵀO − I‖_F = {residual:.3e})"
            )));
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(RMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.0
    }

    pub fn into_inner(self) -> RMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    pub fn to_complex(&self) -> CMatrix {
        to_complex(&self.0)
    }
}

/// Orthogonal `O` maximizing `trace(O·B)`, i.e. `Q·Pᵀ` for `B = P·Σ·Qᵀ`.
pub fn procrustes_best_orthogonal(b: &RMatrix) -> Result<RealOrthogonal> {
    require_square(b, "Procrustes input")?;
    if b.iter().any(|x| !x.is_finite()) {
        return Err(MphdError::Numerical("non-finite Procrustes input".into()));
    }
    let svd = b.clone().svd(true, true);
    let (p, qt) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(MphdError::Numerical("SVD failed".into())),
    };
    Ok(RealOrthogonal(qt.transpose() * p.transpose()))
}
