//! JSON configuration documents and their resolution into core types.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use mphd_core::cluster::{cluster_unitary, euler_orthogonal, AdjacencyMatrix};
use mphd_core::gsim::GaussianState;
use mphd_core::mbqc::{custom_program, displacement_program, fourier_program, GateProgram, MeasurementPlan};
use mphd_core::modes::{flip_mode_basis, DEFAULT_DOMAIN, DEFAULT_GRID_POINTS};
use mphd_core::presets::{tf_setup, Preset};
use mphd_core::{
    ApproxOptions, BranchId, CMatrix, Complex64, DetectionSetup, DiagonalUnitary, ModeBasis, PixelPartition,
    RMatrix, RealOrthogonal, DEFAULT_TOL,
};
use serde::{Deserialize, Serialize};

/// Orthonormality tolerance for sampled bases read from file.
const BASIS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Displacement amount for the `displacement` preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup: Option<SetupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freedom: Option<FreedomSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<MeasurementPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<BranchId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<ApproxOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Mode basis, pixel partition and OPO phases; or `u_t` given directly.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Plain-text sampled basis, read instead of generating `family`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixels: Option<PixelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opo_phases: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_t: Option<ComplexMatrixSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PixelSpec {
    Count(usize),
    Boundaries(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexMatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetSpec {
    Preset(String),
    Matrix(ComplexMatrixSpec),
    Graph(GraphSpec),
    Gate(GateSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Path(usize),
    Cycle(usize),
    Star(usize),
    Empty(usize),
    Edges { nodes: usize, edges: Vec<(usize, usize)> },
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FreedomSpec {
    /// `[ψ, θ, φ]` for three-node graphs.
    Euler([f64; 3]),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GateSpec {
    Fourier,
    Displacement { s: f64 },
    /// `[θ_in, θ_1, θ_2, θ_3]`.
    Custom { angles: [f64; 4] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    #[serde(default)]
    pub mean: [f64; 2],
    #[serde(default = "unit")]
    pub var_q: f64,
    #[serde(default = "unit")]
    pub var_p: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SolutionSpec {
    Inline(InlineSolution),
    Report(ReportRef),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSolution {
    pub delta_lo_phases: Vec<f64>,
    pub o: Vec<Vec<f64>>,
}

/// Solution `index` of an earlier synthesize or gate report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRef {
    pub report: PathBuf,
    #[serde(default)]
    pub index: usize,
}

/// Command-line overrides applied on top of the document.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub branch: Option<BranchId>,
    pub tol: Option<f64>,
}

impl ConfigDoc {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut doc: ConfigDoc =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        // relative file references resolve against the config location
        let dir = path.parent().unwrap_or(Path::new("."));
        if let Some(SetupSpec { basis_file: Some(f), .. }) = doc.setup.as_mut() {
            *f = dir.join(&*f);
        }
        if let Some(SolutionSpec::Report(ReportRef { report, .. })) = doc.solution.as_mut() {
            *report = dir.join(&*report);
        }
        doc.validate()?;
        Ok(doc)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.branch.is_some() {
            self.branch = o.branch.clone();
        }
        if o.tol.is_some() {
            self.tol = o.tol;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.preset {
            p.parse::<Preset>()?;
        }
        if let Some(TargetSpec::Preset(p)) = &self.target {
            p.parse::<Preset>()?;
        }
        if self.s.is_some() && self.preset.as_deref() != Some("displacement") {
            bail!("\"s\" only applies to the displacement preset");
        }
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                bail!("tol must be positive, got {t}");
            }
        }
        if let Some(r) = self.r {
            if !(r.is_finite() && r >= 0.0) {
                bail!("r must be a non-negative squeezing parameter, got {r}");
            }
        }
        if self.shots == Some(0) {
            bail!("shots must be at least 1");
        }
        if let Some(plan) = &self.plan {
            plan.validate()?;
        }
        Ok(())
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn preset(&self) -> Result<Option<Preset>> {
        let Some(name) = &self.preset else { return Ok(None) };
        Ok(Some(match name.parse::<Preset>()? {
            Preset::Displacement(_) => Preset::Displacement(self.s.unwrap_or(0.0)),
            p => p,
        }))
    }

    /// Detection setup and target unitary for synthesis.
    pub fn problem(&self) -> Result<(DetectionSetup, CMatrix)> {
        let preset = self.preset()?;
        let from_preset = preset.map(|p| p.problem()).transpose()?;
        let target = match (&self.target, &self.gate, &self.graph) {
            (Some(t), _, _) => Some(self.resolve_target(t)?),
            (None, Some(g), _) => Some(gate_program(g)?.u_th),
            (None, None, Some(g)) => Some(cluster_unitary(&g.build()?, self.freedom()?.as_ref())?.u),
            _ => None,
        };
        let (setup, target) = match (from_preset, target) {
            (Some((setup, u)), None) => (setup, u),
            (Some((setup, _)), Some(u)) => (self.setup_or(setup, u.nrows())?, u),
            (None, Some(u)) => {
                let n = u.nrows();
                (self.setup_or(DetectionSetup::flip(n, DiagonalUnitary::identity(n))?, n)?, u)
            }
            (None, None) => bail!("config needs a preset or a target"),
        };
        Ok((setup, target))
    }

    /// Explicit setup if configured, otherwise `fallback`.
    pub fn setup_or(&self, fallback: DetectionSetup, n: usize) -> Result<DetectionSetup> {
        match &self.setup {
            Some(s) => s.build(n),
            None => Ok(fallback),
        }
    }

    fn resolve_target(&self, t: &TargetSpec) -> Result<CMatrix> {
        Ok(match t {
            TargetSpec::Preset(p) => p.parse::<Preset>()?.problem()?.1,
            TargetSpec::Matrix(m) => m.build()?,
            TargetSpec::Graph(g) => cluster_unitary(&g.build()?, self.freedom()?.as_ref())?.u,
            TargetSpec::Gate(g) => gate_program(g)?.u_th,
        })
    }

    pub fn graph(&self) -> Result<AdjacencyMatrix> {
        match (&self.graph, &self.target) {
            (Some(g), _) | (None, Some(TargetSpec::Graph(g))) => g.build(),
            _ => bail!("cluster needs a \"graph\""),
        }
    }

    pub fn freedom(&self) -> Result<Option<RealOrthogonal>> {
        self.freedom.as_ref().map(|f| f.build(self.tol())).transpose()
    }

    /// Gate program and its detection setup (the Fourier-gate front end by default).
    pub fn gate_problem(&self) -> Result<(GateProgram, DetectionSetup)> {
        let spec = match (&self.gate, &self.target, self.preset()?) {
            (Some(g), _, _) | (None, Some(TargetSpec::Gate(g)), _) => g.clone(),
            (None, _, Some(Preset::Fourier)) => GateSpec::Fourier,
            (None, _, Some(Preset::Displacement(s))) => GateSpec::Displacement { s },
            _ => bail!("gate needs a \"gate\" program or the fourier/displacement preset"),
        };
        let program = gate_program(&spec)?;
        let n = program.u_th.nrows();
        Ok((program, self.setup_or(tf_setup()?, n)?))
    }

    pub fn input_state(&self) -> Result<GaussianState> {
        Ok(match &self.input {
            Some(i) => GaussianState::single_mode(i.mean, i.var_q, i.var_p)?,
            None => GaussianState::vacuum(1),
        })
    }

    pub fn optimizer(&self) -> ApproxOptions {
        let mut o = self.optimizer.clone().unwrap_or_default();
        if let Some(seed) = self.seed {
            o.seed = seed;
        }
        o
    }
}

impl SetupSpec {
    /// Builds the setup; `n` is the mode count implied by the target.
    pub fn build(&self, n: usize) -> Result<DetectionSetup> {
        let modes = self.modes.unwrap_or(n);
        if modes != n {
            bail!("setup has {modes} modes but the target is {n}×{n}");
        }
        let phases = self.opo_phases.clone().unwrap_or_else(|| vec![0.0; n]);
        let delta_opo = DiagonalUnitary::new(phases)?;
        if let Some(u_t) = &self.u_t {
            if self.basis_file.is_some() || self.family.is_some() || self.pixels.is_some() {
                bail!("setup.u_t excludes basis_file, family and pixels");
            }
            return Ok(DetectionSetup::from_matrices(u_t.build()?, delta_opo)?);
        }
        let basis = match (&self.basis_file, self.family.as_deref()) {
            (Some(_), Some(_)) => bail!("setup takes either basis_file or family"),
            (Some(f), None) => {
                let text = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
                ModeBasis::from_text(&text, BASIS_TOL)?
            }
            (None, None | Some("flip")) => flip_mode_basis(
                n,
                self.grid_points.unwrap_or(DEFAULT_GRID_POINTS.max(64 * n)),
                self.domain.unwrap_or(DEFAULT_DOMAIN),
            )?,
            (None, Some(other)) => bail!("unknown mode family {other:?} (supported: flip)"),
        };
        let partition = match &self.pixels {
            None => PixelPartition::equal(n, basis.domain())?,
            Some(PixelSpec::Count(p)) => PixelPartition::equal(*p, basis.domain())?,
            Some(PixelSpec::Boundaries(b)) => PixelPartition::new(b.clone())?,
        };
        Ok(DetectionSetup::from_basis(&basis, self.lo_index.unwrap_or(0), &partition, delta_opo)?)
    }
}

impl ComplexMatrixSpec {
    pub fn build(&self) -> Result<CMatrix> {
        let re = rows_to_matrix(&self.re)?;
        let im = match &self.im {
            Some(im) => rows_to_matrix(im)?,
            None => RMatrix::zeros(re.nrows(), re.ncols()),
        };
        if im.shape() != re.shape() {
            bail!("re is {:?} but im is {:?}", re.shape(), im.shape());
        }
        Ok(CMatrix::from_fn(re.nrows(), re.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)])))
    }
}

impl GraphSpec {
    pub fn build(&self) -> Result<AdjacencyMatrix> {
        Ok(match self {
            GraphSpec::Path(n) => AdjacencyMatrix::path(*n)?,
            GraphSpec::Cycle(n) => AdjacencyMatrix::cycle(*n)?,
            GraphSpec::Star(n) => AdjacencyMatrix::star(*n)?,
            GraphSpec::Empty(n) => AdjacencyMatrix::empty(*n)?,
            GraphSpec::Edges { nodes, edges } => AdjacencyMatrix::from_edges(*nodes, edges)?,
            GraphSpec::Matrix(rows) => AdjacencyMatrix::try_from(rows.clone())?,
        })
    }
}

impl FreedomSpec {
    pub fn build(&self, tol: f64) -> Result<RealOrthogonal> {
        Ok(match self {
            FreedomSpec::Euler([psi, theta, phi]) => euler_orthogonal(*psi, *theta, *phi),
            FreedomSpec::Matrix(rows) => RealOrthogonal::new(rows_to_matrix(rows)?, tol)?,
        })
    }
}

pub fn gate_program(spec: &GateSpec) -> Result<GateProgram> {
    Ok(match spec {
        GateSpec::Fourier => fourier_program()?,
        GateSpec::Displacement { s } => displacement_program(*s)?,
        GateSpec::Custom { angles: [a, b, c, d] } => custom_program(*a, *b, *c, *d)?,
    })
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<RMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        bail!("empty matrix");
    }
    if rows.iter().any(|r| r.len() != m) {
        bail!("ragged matrix rows");
    }
    Ok(RMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Loads `(Δ_LO, O)` from the config, reading a prior report if referenced.
pub fn load_solution(spec: &SolutionSpec, tol: f64) -> Result<(DiagonalUnitary, RealOrthogonal)> {
    let (phases, o) = match spec {
        SolutionSpec::Inline(s) => (s.delta_lo_phases.clone(), rows_to_matrix(&s.o)?),
        SolutionSpec::Report(ReportRef { report, index }) => {
            let text = fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
            let doc: serde_json::Value = serde_json::from_str(&text)?;
            let sol = doc
                .get("solutions")
                .and_then(|s| s.get(*index))
                .or_else(|| if *index == 0 { doc.pointer("/approx/solution") } else { None })
                .ok_or_else(|| anyhow!("{} has no solution {index}", report.display()))?;
            let parsed: crate::report::SolutionBlock = serde_json::from_value(sol.clone())
                .with_context(|| format!("solution {index} in {}", report.display()))?;
            (parsed.delta_lo_phases, rows_to_matrix(&parsed.o.values)?)
        }
    };
    Ok((DiagonalUnitary::new(phases)?, RealOrthogonal::new(o, tol.max(1e-9))?))
}
