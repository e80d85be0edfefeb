//! Synthesis of multi-pixel homodyne detection (MPHD) parameters.
//!
//! A multi-pixel homodyne detector with a phase-shaped local oscillator and
//! digitally recombined pixel signals realizes the mode transformation
//! `U_MPHD = O · Δ_LO · G`, where `G = U_T · Δ_OPO*` is fixed by the optical
//! front end, `Δ_LO` is the diagonal matrix of local-oscillator pixel phases
//! and `O` is a real orthogonal gain matrix. This crate decides whether a
//! target unitary can be emulated that way, constructs every exact solution,
//! finds approximate ones when no exact solution exists, and checks the
//! result against a finite-squeezing Gaussian simulation.
//!
//! Modules:
//!
//! * [`matcore`]: dense matrix helpers (structure checks, diagonal square
//!   roots, Procrustes).
//! * [`modes`]: mode bases, pixel partitions and the detection matrix.
//! * [`synth`]: feasibility test, exact and approximate synthesis.
//! * [`cluster`]: cluster-state unitaries from graph adjacency matrices.
//! * [`mbqc`]: measurement-based gate calculus and gate programs.
//! * [`gsim`]: Gaussian covariance simulator.
//! * [`presets`]: the worked examples as ready-made problems.

pub mod cluster;
pub mod error;
pub mod gsim;
pub mod matcore;
pub mod mbqc;
pub mod modes;
pub mod presets;
pub mod synth;

pub use error::{MphdError, Result};
pub use matcore::{
    BranchId, BranchSelector, CMatrix, DiagonalUnitary, RMatrix, RealOrthogonal, DEFAULT_TOL,
};
pub use modes::{DetectionSetup, ModeBasis, PixelPartition};
pub use synth::{ApproxOptions, ApproxResult, FeasibilityReport, SynthesisSolution};

pub use num_complex::Complex64;
