//! Cluster-state unitaries from graph adjacency matrices.
//!
//! A unitary `U = X + iY` generates the cluster of graph `V` from
//! p-squeezed vacua when `Y = VX`, `XXᵀ + YYᵀ = I`, `XᵀY = YᵀX` and
//! `XYᵀ = YXᵀ`. With `A = XXᵀ` this reduces to `VAV = I − A`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MphdError, Result};
use crate::matcore::{imag_part, real_part, unitarity_residual, CMatrix, RMatrix, RealOrthogonal};

/// Eigenvalues down to this value are accepted and clamped to zero.
pub const PSD_TOL: f64 = 1e-10;
/// Residual bound on `‖VAV − (I − A)‖_F`.
pub const LINEAR_SYSTEM_TOL: f64 = 1e-10;

/// Real symmetric graph matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct AdjacencyMatrix(RMatrix);

impl AdjacencyMatrix {
    pub fn new(v: RMatrix) -> Result<Self> {
        if !v.is_square() || v.nrows() == 0 {
            return Err(MphdError::Dimension(format!(
                "adjacency matrix must be square and non-empty, got {:?}",
                v.shape()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(MphdError::InvalidInput("adjacency matrix has non-finite entries".into()));
        }
        let n = v.nrows();
        for i in 0..n {
            if v[(i, i)] != 0.0 {
                return Err(MphdError::InvalidInput(format!("nonzero diagonal at node {i}")));
            }
            for j in 0..i {
                if v[(i, j)] != v[(j, i)] {
                    return Err(MphdError::InvalidInput(format!(
                        "adjacency matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self(v))
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(RMatrix::zeros(n, n))
    }

    /// Unit-weight graph on `n` nodes.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut v = RMatrix::zeros(n, n);
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(MphdError::InvalidInput(format!("bad edge ({a}, {b}) for {n} nodes")));
            }
            v[(a, b)] = 1.0;
            v[(b, a)] = 1.0;
        }
        Self::new(v)
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(MphdError::InvalidInput("a cycle needs at least 3 nodes".into()));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    /// Node 0 joined to every other node.
    pub fn star(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for AdjacencyMatrix {
    type Error = MphdError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(MphdError::Dimension("adjacency rows must all have length N".into()));
        }
        Self::new(RMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

impl From<AdjacencyMatrix> for Vec<Vec<f64>> {
    fn from(v: AdjacencyMatrix) -> Self {
        v.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// Solution of `VAV = I − A` with minimum Frobenius norm.
pub fn solve_a(v: &AdjacencyMatrix) -> Result<RMatrix> {
    let n = v.dim();
    let vm = v.matrix();
    // V commutes with (I + V²)⁻¹, which solves the system; on the kernel of
    // V⊗V + I the identity has no component, so this is also the minimum-norm solution
    let m = RMatrix::identity(n, n) + vm * vm;
    let a = m
        .cholesky()
        .ok_or_else(|| MphdError::Numerical("I + V² is not positive definite".into()))?
        .inverse();
    let a = (&a + a.transpose()) * 0.5;

    let residual = (vm * &a * vm - (RMatrix::identity(n, n) - &a)).norm();
    if residual > LINEAR_SYSTEM_TOL {
        return Err(MphdError::ClusterInfeasible { residual });
    }
    let min_eig = a.symmetric_eigenvalues().min();
    if min_eig < -PSD_TOL {
        return Err(MphdError::ClusterInfeasible { residual: -min_eig });
    }
    Ok(a)
}

/// Principal square root of a symmetric PSD matrix.
pub fn symmetric_x(a: &RMatrix) -> Result<RMatrix> {
    if !a.is_square() {
        return Err(MphdError::Dimension(format!("A must be square, got {:?}", a.shape())));
    }
    let eig = SymmetricEigen::new((a + a.transpose()) * 0.5);
    let min = eig.eigenvalues.min();
    if min < -PSD_TOL {
        return Err(MphdError::NotPsd { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

#[derive(Clone, Debug)]
pub struct ClusterSolution {
    pub a: RMatrix,
    pub x: RMatrix,
    pub y: RMatrix,
    pub u: CMatrix,
    pub orthogonal_freedom: RealOrthogonal,
}

/// `U = (I + iV)·X_s·𝒪`, with `𝒪 = I` when `freedom` is `None`.
pub fn cluster_unitary(
    v: &AdjacencyMatrix,
    freedom: Option<&RealOrthogonal>,
) -> Result<ClusterSolution> {
    let n = v.dim();
    let freedom = match freedom {
        Some(o) if o.dim() != n => {
            return Err(MphdError::Dimension(format!(
                "freedom is {0}×{0}, graph has {n} nodes",
                o.dim()
            )))
        }
        Some(o) => o.clone(),
        None => RealOrthogonal::identity(n),
    };
    let a = solve_a(v)?;
    let x = symmetric_x(&a)? * freedom.matrix();
    let y = v.matrix() * &x;
    let u = CMatrix::from_fn(n, n, |i, j| Complex64::new(x[(i, j)], y[(i, j)]));
    Ok(ClusterSolution {
        a,
        x,
        y,
        u,
        orthogonal_freedom: freedom,
    })
}

/// 3×3 rotation `R_z(ψ)·R_y(θ)·R_z(φ)` with the factor signs used throughout.
pub fn euler_orthogonal(psi: f64, theta: f64, phi: f64) -> RealOrthogonal {
    let rz = |a: f64| {
        let (s, c) = a.sin_cos();
        RMatrix::from_row_slice(3, 3, &[c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0])
    };
    let (s, c) = theta.sin_cos();
    let ry = RMatrix::from_row_slice(3, 3, &[c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c]);
    RealOrthogonal::new(rz(psi) * ry * rz(phi), 1e-12).expect("product of rotations")
}

/// Max-entry residuals of the cluster conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterValidation {
    /// `Y − VX`
    pub graph: f64,
    /// `XXᵀ + YYᵀ − I`
    pub normalization: f64,
    /// `XᵀY − YᵀX`
    pub left_symmetry: f64,
    /// `XYᵀ − YXᵀ`
    pub right_symmetry: f64,
    /// `U†U − I` (Frobenius)
    pub unitarity: f64,
    pub passed: bool,
}

impl ClusterValidation {
    pub fn max_residual(&self) -> f64 {
        [self.graph, self.normalization, self.left_symmetry, self.right_symmetry, self.unitarity]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn amax(m: &RMatrix) -> f64 {
    m.amax()
}

pub fn validate_cluster(u: &CMatrix, v: &AdjacencyMatrix, tol: f64) -> Result<ClusterValidation> {
    if u.shape() != (v.dim(), v.dim()) {
        return Err(MphdError::Dimension(format!(
            "U is {:?}, graph has {} nodes",
            u.shape(),
            v.dim()
        )));
    }
    let x = real_part(u);
    let y = imag_part(u);
    let n = v.dim();
    let mut out = ClusterValidation {
        graph: amax(&(&y - v.matrix() * &x)),
        normalization: amax(&(&x * x.transpose() + &y * y.transpose() - RMatrix::identity(n, n))),
        left_symmetry: amax(&(x.transpose() * &y - y.transpose() * &x)),
        right_symmetry: amax(&(&x * y.transpose() - &y * x.transpose())),
        unitarity: unitarity_residual(u)?,
        passed: false,
    };
    out.passed = out.max_residual() <= tol;
    Ok(out)
}

/// Four-mode linear cluster unitary.
pub fn linear_cluster_4() -> CMatrix {
    let a = 1.0 / 2f64.sqrt();
    let b = 1.0 / 10f64.sqrt();
    let r = |x: f64| Complex64::new(x, 0.0);
    let i = |x: f64| Complex64::new(0.0, x);
    CMatrix::from_row_slice(
        4,
        4,
        &[
            r(a), r(b), i(2.0 * b), r(0.0),
            i(a), i(-b), r(2.0 * b), r(0.0),
            r(0.0), r(-2.0 * b), i(b), i(a),
            r(0.0), i(-2.0 * b), r(-b), r(a),
        ],
    )
}

/// Asymmetric three-mode linear cluster unitary used by the Fourier program.
pub fn linear_cluster_3_asym() -> CMatrix {
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let r = |x: f64| Complex64::new(x, 0.0);
    let i = |x: f64| Complex64::new(0.0, x);
    CMatrix::from_row_slice(
        3,
        3,
        &[
            r(0.0), r(-(2.0f64 / 3.0).sqrt()), i(-1.0 / s3),
            i(-1.0 / s2), i(-1.0 / s6), r(-1.0 / s3),
            r(-1.0 / s2), r(1.0 / s6), i(-1.0 / s3),
        ],
    )
}
