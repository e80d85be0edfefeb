//! Mode bases, pixel partitions and the detection matrix `U_T`.
//!
//! Mode functions live on a 1-D detector coordinate sampled on a uniform grid
//! and are integrated with the composite midpoint rule. Flip positions and
//! pixel boundaries are snapped to cell edges, so integrals of the step
//! profiles used here are exact up to rounding.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{MphdError, Result};
use crate::matcore::{CMatrix, DiagonalUnitary};

pub const DEFAULT_GRID_POINTS: usize = 4096;
pub const DEFAULT_DOMAIN: (f64, f64) = (0.0, 1.0);

/// Orthonormality tolerance for constructed flip bases.
const FLIP_ORTHO_TOL: f64 = 1e-10;

/// `N` sampled mode functions on a uniform grid.
///
/// `samples` is `grid_points × N`, one mode per column, sampled at cell
/// midpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeBasis {
    domain: (f64, f64),
    samples: CMatrix,
}

impl ModeBasis {
    /// Wraps sampled modes after checking orthonormality within `tol`.
    pub fn from_samples(domain: (f64, f64), samples: CMatrix, tol: f64) -> Result<Self> {
        if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 < domain.1) {
            return Err(MphdError::InvalidInput(format!(
                "bad domain [{}, {}]",
                domain.0, domain.1
            )));
        }
        if samples.ncols() == 0 || samples.nrows() == 0 {
            return Err(MphdError::InvalidInput("empty mode basis".into()));
        }
        if !crate::matcore::is_finite(&samples) {
            return Err(MphdError::InvalidInput("non-finite mode samples".into()));
        }
        let basis = Self { domain, samples };
        let err = basis.orthonormality_error();
        if err > tol {
            return Err(MphdError::InvalidInput(format!(
                "modes are not orthonormal (max |⟨u_k,u_l⟩ − δ_kl| = {err:.3e})"
            )));
        }
        Ok(basis)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn mode_count(&self) -> usize {
        self.samples.ncols()
    }

    pub fn grid_points(&self) -> usize {
        self.samples.nrows()
    }

    pub fn samples(&self) -> &CMatrix {
        &self.samples
    }

    pub fn cell_width(&self) -> f64 {
        (self.domain.1 - self.domain.0) / self.grid_points() as f64
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        self.domain.0 + (cell as f64 + 0.5) * self.cell_width()
    }

    /// Midpoint-rule Gram matrix `⟨u_k, u_l⟩ = ∫ u_k* u_l`.
    pub fn gram(&self) -> CMatrix {
        self.samples.adjoint() * &self.samples * Complex64::new(self.cell_width(), 0.0)
    }

    pub fn orthonormality_error(&self) -> f64 {
        let n = self.mode_count();
        (self.gram() - CMatrix::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Parses the plain-text format: a header `rho_min rho_max grid_points`
    /// followed by one row per grid cell with one column per mode. Entries are
    /// reals or complex numbers such as `0.5-1.2i`. Blank lines and `#`
    /// comments are skipped.
    pub fn from_text(text: &str, tol: f64) -> Result<Self> {
        let mut rows = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = rows.next().ok_or(MphdError::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(MphdError::Parse {
                line: hline,
                msg: "header must be `rho_min rho_max grid_points`".into(),
            });
        }
        let parse_f = |s: &str| {
            s.parse::<f64>().map_err(|e| MphdError::Parse {
                line: hline,
                msg: e.to_string(),
            })
        };
        let lo = parse_f(fields[0])?;
        let hi = parse_f(fields[1])?;
        let m: usize = fields[2].parse().map_err(|_| MphdError::Parse {
            line: hline,
            msg: format!("bad grid size {:?}", fields[2]),
        })?;

        let mut data: Vec<Complex64> = Vec::new();
        let mut ncols = None;
        let mut nrows = 0;
        for (line, row) in rows {
            let vals = row
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<Complex64>().map_err(|_| MphdError::Parse {
                        line,
                        msg: format!("bad entry {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            match ncols {
                None => ncols = Some(vals.len()),
                Some(n) if n != vals.len() => {
                    return Err(MphdError::Parse {
                        line,
                        msg: format!("expected {n} columns, found {}", vals.len()),
                    })
                }
                _ => {}
            }
            data.extend(vals);
            nrows += 1;
        }
        if nrows != m {
            return Err(MphdError::Parse {
                line: hline,
                msg: format!("header announces {m} grid points, found {nrows} rows"),
            });
        }
        let n = ncols.unwrap_or(0);
        let samples = CMatrix::from_row_slice(m, n, &data);
        Self::from_samples((lo, hi), samples, tol)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {}\n",
            self.domain.0,
            self.domain.1,
            self.grid_points()
        );
        for row in self.samples.row_iter() {
            let line: Vec<String> = row
                .iter()
                .map(|z| {
                    if z.im == 0.0 {
                        format!("{}", z.re)
                    } else {
                        format!("{}{:+}i", z.re, z.im)
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Sign tables of the first `levels` Walsh functions in sequency order.
fn walsh_sequency(levels: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = (0..levels)
        .map(|i| {
            (0..levels)
                .map(|t| if (i & t).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect();
    rows.sort_by_key(|r| r.windows(2).filter(|w| w[0] != w[1]).count());
    rows
}

/// Square flip modes: mode `n` (1-indexed) has constant magnitude and `n − 1`
/// sign flips, placed as in the sequency-ordered Walsh functions. Mode 1 is
/// flat and positive; every other mode is negative on its last segment.
pub fn flip_mode_basis(n: usize, grid_points: usize, domain: (f64, f64)) -> Result<ModeBasis> {
    if n == 0 {
        return Err(MphdError::InvalidInput("need at least one mode".into()));
    }
    if grid_points < 64 * n {
        return Err(MphdError::Resolution(format!(
            "{grid_points} grid points cannot resolve {n} flip modes (need ≥ {})",
            64 * n
        )));
    }
    let levels = n.next_power_of_two();
    let table = walsh_sequency(levels);
    let edges: Vec<usize> = (0..=levels)
        .map(|t| ((t * grid_points) as f64 / levels as f64).round() as usize)
        .collect();

    let mut samples = CMatrix::zeros(grid_points, n);
    for (mode, signs) in table.iter().take(n).enumerate() {
        let orient = if mode == 0 { 1.0 } else { -signs[levels - 1] };
        for seg in 0..levels {
            for cell in edges[seg]..edges[seg + 1] {
                samples[(cell, mode)] = Complex64::new(orient * signs[seg], 0.0);
            }
        }
    }
    let width = (domain.1 - domain.0) / grid_points as f64;
    for mut col in samples.column_iter_mut() {
        let norm = (col.iter().map(|z| z.norm_sqr()).sum::<f64>() * width).sqrt();
        col.unscale_mut(norm);
    }
    ModeBasis::from_samples(domain, samples, FLIP_ORTHO_TOL).map_err(|_| {
        MphdError::Resolution(format!(
            "{grid_points} grid points do not place flips at multiples of 1/{levels} exactly"
        ))
    })
}

/// Contiguous pixels `S_i = [b_i, b_{i+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelPartition {
    boundaries: Vec<f64>,
}

impl PixelPartition {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(MphdError::InvalidInput("a partition needs ≥ 2 boundaries".into()));
        }
        if boundaries.iter().any(|b| !b.is_finite()) || boundaries.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(MphdError::InvalidInput(
                "pixel boundaries must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self { boundaries })
    }

    pub fn equal(pixels: usize, domain: (f64, f64)) -> Result<Self> {
        if pixels == 0 {
            return Err(MphdError::InvalidInput("need at least one pixel".into()));
        }
        let w = (domain.1 - domain.0) / pixels as f64;
        let mut b: Vec<f64> = (0..pixels).map(|i| domain.0 + i as f64 * w).collect();
        b.push(domain.1);
        Self::new(b)
    }

    pub fn pixel_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Pixel containing `x`; the right domain edge belongs to the last pixel.
    pub fn pixel_of(&self, x: f64) -> Option<usize> {
        let b = &self.boundaries;
        if x < b[0] || x > b[b.len() - 1] {
            return None;
        }
        let idx = b.partition_point(|&e| e <= x);
        Some(idx.saturating_sub(1).min(self.pixel_count() - 1))
    }

    fn check_covers(&self, domain: (f64, f64)) -> Result<()> {
        let b = &self.boundaries;
        let scale = (domain.1 - domain.0).abs().max(1.0);
        if (b[0] - domain.0).abs() > 1e-12 * scale || (b[b.len() - 1] - domain.1).abs() > 1e-12 * scale
        {
            return Err(MphdError::InvalidInput(format!(
                "pixels span [{}, {}] but the basis lives on [{}, {}]",
                b[0],
                b[b.len() - 1],
                domain.0,
                domain.1
            )));
        }
        Ok(())
    }

    /// Pixel index of every grid cell of `basis`.
    fn assign(&self, basis: &ModeBasis) -> Result<Vec<usize>> {
        self.check_covers(basis.domain())?;
        Ok((0..basis.grid_points())
            .map(|k| self.pixel_of(basis.midpoint(k)).unwrap_or(self.pixel_count() - 1))
            .collect())
    }
}

fn check_lo(basis: &ModeBasis, lo_index: usize) -> Result<()> {
    if lo_index >= basis.mode_count() {
        return Err(MphdError::InvalidInput(format!(
            "local oscillator index {lo_index} out of range for {} modes",
            basis.mode_count()
        )));
    }
    Ok(())
}

fn kappas(basis: &ModeBasis, lo_index: usize, cells: &[usize], pixels: usize) -> Result<Vec<f64>> {
    let h = basis.cell_width();
    let mut intensity = vec![0.0; pixels];
    for (k, &p) in cells.iter().enumerate() {
        intensity[p] += basis.samples()[(k, lo_index)].norm_sqr() * h;
    }
    intensity
        .iter()
        .enumerate()
        .map(|(p, &w)| {
            if w <= f64::MIN_POSITIVE {
                Err(MphdError::SingularPixel { pixel: p })
            } else {
                Ok(1.0 / w.sqrt())
            }
        })
        .collect()
}

/// Pixel modes `v_i = κ_i · u_LO · 1_{S_i}` (one per column) and the constants `κ_i`.
pub fn pixel_modes(
    basis: &ModeBasis,
    lo_index: usize,
    partition: &PixelPartition,
) -> Result<(CMatrix, Vec<f64>)> {
    check_lo(basis, lo_index)?;
    let cells = partition.assign(basis)?;
    let pixels = partition.pixel_count();
    let kappa = kappas(basis, lo_index, &cells, pixels)?;
    let mut modes = CMatrix::zeros(basis.grid_points(), pixels);
    for (k, &p) in cells.iter().enumerate() {
        modes[(k, p)] = basis.samples()[(k, lo_index)] * kappa[p];
    }
    Ok((modes, kappa))
}

/// `U_T[i][j] = κ_i ∫_{S_i} u_LO* u_j`, shape `P × N`.
pub fn detection_matrix(
    basis: &ModeBasis,
    lo_index: usize,
    partition: &PixelPartition,
) -> Result<CMatrix> {
    Ok(detection_matrix_with_kappa(basis, lo_index, partition)?.0)
}

fn detection_matrix_with_kappa(
    basis: &ModeBasis,
    lo_index: usize,
    partition: &PixelPartition,
) -> Result<(CMatrix, Vec<f64>)> {
    let (modes, kappa) = pixel_modes(basis, lo_index, partition)?;
    let h = Complex64::new(basis.cell_width(), 0.0);
    Ok((modes.adjoint() * basis.samples() * h, kappa))
}

/// `G = U_T · Δ_OPO*`.
pub fn build_g(u_t: &CMatrix, delta_opo: &DiagonalUnitary) -> Result<CMatrix> {
    if u_t.ncols() != delta_opo.len() {
        return Err(MphdError::Dimension(format!(
            "U_T has {} columns but Δ_OPO has {} phases",
            u_t.ncols(),
            delta_opo.len()
        )));
    }
    Ok(u_t * delta_opo.conj().to_matrix())
}

/// The fixed optical front end.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionSetup {
    pub u_t: CMatrix,
    pub delta_opo: DiagonalUnitary,
    pub g: CMatrix,
    /// Basis index of the local oscillator; `None` when `U_T` was given directly.
    pub lo_index: Option<usize>,
    pub kappa: Vec<f64>,
}

impl DetectionSetup {
    pub fn from_basis(
        basis: &ModeBasis,
        lo_index: usize,
        partition: &PixelPartition,
        delta_opo: DiagonalUnitary,
    ) -> Result<Self> {
        let (u_t, kappa) = detection_matrix_with_kappa(basis, lo_index, partition)?;
        let g = build_g(&u_t, &delta_opo)?;
        Ok(Self {
            u_t,
            delta_opo,
            g,
            lo_index: Some(lo_index),
            kappa,
        })
    }

    pub fn from_matrices(u_t: CMatrix, delta_opo: DiagonalUnitary) -> Result<Self> {
        let g = build_g(&u_t, &delta_opo)?;
        Ok(Self {
            u_t,
            delta_opo,
            g,
            lo_index: None,
            kappa: Vec::new(),
        })
    }

    /// `n` flip modes on the default grid, `n` equal pixels, flat LO.
    pub fn flip(n: usize, delta_opo: DiagonalUnitary) -> Result<Self> {
        let basis = flip_mode_basis(n, DEFAULT_GRID_POINTS.max(64 * n), DEFAULT_DOMAIN)?;
        let partition = PixelPartition::equal(n, DEFAULT_DOMAIN)?;
        Self::from_basis(&basis, 0, &partition, delta_opo)
    }

    pub fn mode_count(&self) -> usize {
        self.g.ncols()
    }
}
