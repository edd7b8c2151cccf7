//! Coefficient recovery from boundary traces of the first two harmonics.
//!
//! The pipeline has two stages: `(β, γ)` from first-harmonic traces by
//! adjoint Gauss–Newton ([`recover_mu`]), then α from second-harmonic traces
//! through the linear reciprocity identity ([`recover_alpha`]). The second
//! stage only accepts a [`MuStage`], which is built from explicit coefficients
//! or from a first-stage result.

mod alpha;
mod dataset;
mod liouville;
mod mu;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Grid, Medium};

pub use alpha::{alpha_identity_residual, assemble_alpha_system, recover_alpha, AlphaOptions, AlphaSystem, LCurvePoint};
pub use dataset::{synthesize_rtd, RtDDataset, RtDRecord, SynthesisOptions};
pub use liouville::{
    compute_potential, distinguishability_test, liouville_check, potential_deviation, DistinguishReport, LiouvilleReport,
};
pub use mu::{recover_mu, GradientCheck, MuOptions, MuProblem};

/// Partition of the domain into `px × py` equal rectangles. Cell `c = cy·px + cx`.
///
/// Nodes on an interior cell edge belong to the cell above/right of it, so
/// every node lies in exactly one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelBasis {
    pub px: usize,
    pub py: usize,
    origin: [f64; 2],
    size: [f64; 2],
    labels: Vec<usize>,
}

impl PixelBasis {
    pub fn new(grid: &Grid, px: usize, py: usize) -> Result<Self> {
        if px == 0 || py == 0 || px >= grid.nx || py >= grid.ny {
            return Err(Error::InvalidArgument(format!(
                "pixel basis {px}×{py} does not fit a {}×{} grid",
                grid.nx, grid.ny
            )));
        }
        let size = [grid.width / px as f64, grid.height / py as f64];
        let mut basis = Self { px, py, origin: grid.origin, size, labels: Vec::new() };
        basis.labels = (0..grid.len()).map(|k| basis.cell_of(grid.position(k))).collect();
        Ok(basis)
    }

    pub fn cells(&self) -> usize {
        self.px * self.py
    }

    pub fn cell_of(&self, [x, y]: [f64; 2]) -> usize {
        let idx = |v: f64, o: f64, s: f64, n: usize| {
            // nodes sit on cell edges up to roundoff; snap before flooring
            let t = (v - o) / s;
            let r = t.round();
            let t = if (t - r).abs() < 1e-9 { r } else { t };
            (t.floor().max(0.0) as usize).min(n - 1)
        };
        idx(y, self.origin[1], self.size[1], self.py) * self.px + idx(x, self.origin[0], self.size[0], self.px)
    }

    /// Cell index of every grid node.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn indicator(&self, c: usize) -> Vec<f64> {
        self.labels.iter().map(|&l| if l == c { 1.0 } else { 0.0 }).collect()
    }

    /// Nodal field `Σ_c x_c χ_c`.
    pub fn field(&self, coeffs: &[f64]) -> Vec<f64> {
        self.labels.iter().map(|&l| coeffs[l]).collect()
    }

    /// Cell averages of a nodal field under the grid quadrature.
    pub fn project(&self, grid: &Grid, values: &[f64]) -> Vec<f64> {
        let mut num = vec![0.0; self.cells()];
        let mut den = vec![0.0; self.cells()];
        for ((&l, &v), &w) in self.labels.iter().zip(values).zip(&grid.interior_weight) {
            num[l] += w * v;
            den[l] += w;
        }
        num.iter().zip(&den).map(|(n, d)| n / d).collect()
    }

    /// Differences across every shared cell edge, one row per edge.
    pub fn gradient_rows(&self) -> Vec<(usize, usize)> {
        let mut rows = Vec::new();
        for cy in 0..self.py {
            for cx in 0..self.px {
                let c = cy * self.px + cx;
                if cx + 1 < self.px {
                    rows.push((c, c + 1));
                }
                if cy + 1 < self.py {
                    rows.push((c, c + self.px));
                }
            }
        }
        rows
    }
}

/// First-stage output required by [`recover_alpha`].
#[derive(Debug, Clone, PartialEq)]
pub struct MuStage {
    medium: Medium,
    recovered: bool,
}

impl MuStage {
    /// Known `(β, γ, λ, η)`; α in `medium` is ignored.
    pub fn provided(grid: &Grid, medium: &Medium) -> Result<Self> {
        let medium = medium.with_alpha(vec![0.0; grid.len()]);
        medium.validate(grid)?;
        Ok(Self { medium, recovered: false })
    }

    /// Coefficients from a [`recover_mu`] result.
    pub fn from_result(grid: &Grid, result: &ReconstructionResult, lambda: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        let get = |name: &str| {
            result
                .field(name)
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::InvalidArgument(format!("reconstruction has no {name} field")))
        };
        let medium = Medium::new(grid, vec![0.0; grid.len()], get("beta")?, get("gamma")?, lambda, eta)?;
        Ok(Self { medium, recovered: true })
    }

    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    pub fn is_recovered(&self) -> bool {
        self.recovered
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedField {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// Cell coefficients, one block per recovered field.
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    pub fields: Vec<NamedField>,
    /// Objective after every accepted iterate (one entry for linear solves).
    pub misfit_history: Vec<f64>,
    pub reg_weight: f64,
    /// Relative L²(Ω) error against the ground truth, if it was supplied.
    pub relative_error: Option<f64>,
    pub max_abs: f64,
    pub projection_active: bool,
    pub effective_rank: Option<usize>,
    pub rank_deficient: bool,
    pub gradient_norm: Option<f64>,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl ReconstructionResult {
    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields.iter().find(|f| f.name == name).map(|f| f.values.as_slice())
    }

    /// `<name>.csv` per field (`x,y,value`) plus `result.json`.
    pub fn write_to_dir(&self, grid: &Grid, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for f in &self.fields {
            let mut w = BufWriter::new(fs::File::create(dir.join(format!("{}.csv", f.name)))?);
            writeln!(w, "x,y,value")?;
            for (k, v) in f.values.iter().enumerate() {
                let [x, y] = grid.position(k);
                writeln!(w, "{x:.16e},{y:.16e},{v:.16e}")?;
            }
        }
        fs::write(dir.join("result.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Reads back what [`write_to_dir`](Self::write_to_dir) wrote, loading
    /// the named field dumps.
    pub fn read_from_dir(grid: &Grid, dir: &Path, names: &[&str]) -> Result<Self> {
        let mut out: Self = serde_json::from_str(&fs::read_to_string(dir.join("result.json"))?)?;
        for &name in names {
            let path = dir.join(format!("{name}.csv"));
            let text = fs::read_to_string(&path)?;
            let values = text
                .lines()
                .skip(1)
                .map(|line| {
                    line.rsplit(',')
                        .next()
                        .and_then(|v| v.trim().parse::<f64>().ok())
                        .ok_or_else(|| Error::InvalidArgument(format!("malformed line in {}: {line}", path.display())))
                })
                .collect::<Result<Vec<f64>>>()?;
            grid.check_nodes(values.len())?;
            out.fields.push(NamedField { name: name.into(), values });
        }
        Ok(out)
    }
}

/// `‖a − b‖ / ‖b‖` in the grid L² norm, `None` when `b` vanishes.
pub fn relative_l2(grid: &Grid, a: &[f64], b: &[f64]) -> Option<f64> {
    let sq = |f: &dyn Fn(usize) -> f64| -> f64 { grid.interior_weight.iter().enumerate().map(|(k, w)| w * f(k).powi(2)).sum() };
    let den = sq(&|k| b[k]);
    (den > 0.0).then(|| (sq(&|k| a[k] - b[k]) / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixels_tile_the_grid() {
        let g = Grid::build(1.0, 1.0, 65, 65).unwrap();
        let b = PixelBasis::new(&g, 8, 8).unwrap();
        let mut counts = vec![0usize; 64];
        b.labels().iter().for_each(|&l| counts[l] += 1);
        assert!(counts.iter().all(|&c| c > 0));
        assert_eq!(counts.iter().sum::<usize>(), g.len());
        let area: f64 = (0..64).map(|c| b.indicator(c).iter().zip(&g.interior_weight).map(|(x, w)| x * w).sum::<f64>()).sum();
        assert!((area - 1.0).abs() < 1e-12);
        assert_eq!(b.cell_of([0.0, 0.0]), 0);
        assert_eq!(b.cell_of([1.0, 1.0]), 63);
        assert_eq!(b.cell_of([0.125, 0.0]), 1);
        assert_eq!(b.gradient_rows().len(), 2 * 7 * 8);
        let coeffs: Vec<f64> = (0..64).map(f64::from).collect();
        let back = b.project(&g, &b.field(&coeffs));
        assert!(back.iter().zip(&coeffs).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(PixelBasis::new(&g, 65, 2).is_err());
    }
}
