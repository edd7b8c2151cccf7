use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{run_cascade_with, TruncationReason, DEFAULT_K_MAX, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::field::BoundaryField;
use crate::helmholtz::Helmholtz;
use crate::{BoundarySource, Grid, Medium};

/// One excitation and its first- and second-harmonic boundary traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtDRecord {
    pub g: Vec<Complex64>,
    pub trace1: Vec<Complex64>,
    pub trace2: Vec<Complex64>,
}

/// Robin-to-Dirichlet samples at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtDDataset {
    pub omega: f64,
    pub boundary_nodes: Vec<[f64; 2]>,
    pub records: Vec<RtDRecord>,
    pub medium_tag: String,
    pub noise_level: f64,
}

impl RtDDataset {
    /// Checks that the dataset was sampled on the boundary of `grid`.
    pub fn check(&self, grid: &Grid) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::InvalidArgument("dataset has no records".into()));
        }
        grid.check_boundary(self.boundary_nodes.len())?;
        let off = grid
            .boundary
            .iter()
            .zip(&self.boundary_nodes)
            .any(|(b, p)| {
                let q = grid.position(b.index);
                (q[0] - p[0]).abs() + (q[1] - p[1]).abs() > 1e-9 * (grid.width + grid.height)
            });
        if off {
            return Err(Error::InvalidArgument("dataset boundary nodes do not match the grid".into()));
        }
        for r in &self.records {
            for v in [&r.g, &r.trace1, &r.trace2] {
                grid.check_boundary(v.len())?;
            }
        }
        Ok(())
    }

    pub fn sources(&self, grid: &Grid) -> Result<Vec<BoundarySource>> {
        self.records
            .iter()
            .map(|r| BoundarySource::new(grid, BoundaryField::from_vec(r.g.clone()), self.omega))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisOptions {
    /// Noise standard deviation relative to each trace's RMS; 0 for clean data.
    pub noise_level: f64,
    pub seed: u64,
    pub k_max: usize,
    pub tol: f64,
    pub medium_tag: String,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { noise_level: 0.0, seed: 0, k_max: DEFAULT_K_MAX, tol: DEFAULT_TOL, medium_tag: "synthetic".into() }
    }
}

/// Runs the full cascade for every source and records the boundary traces of
/// `u₁` and `u₂`.
pub fn synthesize_rtd(
    grid: &Grid,
    medium: &Medium,
    sources: &[BoundaryField<f64>],
    omega: f64,
    opts: &SynthesisOptions,
) -> Result<RtDDataset> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument("at least one source is required".into()));
    }
    if !(opts.noise_level >= 0.0 && opts.noise_level.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise level must be ≥ 0, got {}", opts.noise_level)));
    }
    let solver = Helmholtz::new(grid, medium)?;
    let record = |(i, g): (usize, &BoundaryField<f64>)| -> Result<RtDRecord> {
        let src = BoundarySource::new(grid, g.clone(), omega)?;
        let (stack, diag) = run_cascade_with(&solver, &src, opts.k_max, opts.tol)?;
        if stack.truncation_reason == TruncationReason::DivergenceDetected {
            return Err(Error::CascadeDivergence { source_index: i, empirical_r: diag.empirical_r });
        }
        Ok(RtDRecord {
            g: g.values().to_vec(),
            trace1: stack.harmonics[1].trace(grid).into_vec(),
            trace2: stack.harmonics[2].trace(grid).into_vec(),
        })
    };
    // the first cascade fills the factorization cache the rest share
    let first = record((0, &sources[0]))?;
    let rest: Vec<RtDRecord> = sources.par_iter().enumerate().skip(1).map(record).collect::<Result<_>>()?;
    let mut records: Vec<RtDRecord> = std::iter::once(first).chain(rest).collect();

    if opts.noise_level > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for r in &mut records {
            add_noise(&mut r.trace1, opts.noise_level, &mut rng);
            add_noise(&mut r.trace2, opts.noise_level, &mut rng);
        }
    }
    Ok(RtDDataset {
        omega,
        boundary_nodes: grid.boundary.iter().map(|b| grid.position(b.index)).collect(),
        records,
        medium_tag: opts.medium_tag.clone(),
        noise_level: opts.noise_level,
    })
}

fn add_noise(trace: &mut [Complex64], level: f64, rng: &mut ChaCha8Rng) {
    let rms = (trace.iter().map(|v| v.norm_sqr()).sum::<f64>() / trace.len() as f64).sqrt();
    let sigma = level * rms / std::f64::consts::SQRT_2;
    for v in trace {
        let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
        *v += Complex64::new(a, b) * sigma;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::helmholtz::solve_fundamental;
    use crate::medium::fourier_modes;

    fn setup() -> (Grid, Medium, Vec<BoundaryField<f64>>) {
        let g = Grid::build(1.0, 1.0, 17, 17).unwrap();
        let m = Medium::constant(&g, 1.0, 0.05, 1.0, 1.0, 1.0).unwrap();
        let modes = fourier_modes(&g, 1);
        (g, m, modes)
    }

    #[test]
    fn traces_match_direct_solves() {
        let (g, m, src) = setup();
        let d = synthesize_rtd(&g, &m, &src, 6.0, &SynthesisOptions::default()).unwrap();
        d.check(&g).unwrap();
        for (r, s) in d.records.iter().zip(&src) {
            let (u1, _) = solve_fundamental(&g, &m, &BoundarySource::new(&g, s.clone(), 6.0).unwrap()).unwrap();
            assert_eq!(u1.trace(&g).values(), r.trace1.as_slice());
            assert!(r.trace2.iter().any(|v| v.norm() > 0.0));
        }
        let zero = synthesize_rtd(&g, &m.with_alpha(vec![0.0; g.len()]), &src, 6.0, &SynthesisOptions::default()).unwrap();
        assert!(zero.records.iter().all(|r| r.trace2.iter().all(|v| v.norm() == 0.0)));
        assert_eq!(synthesize_rtd(&g, &m, &src, 6.0, &SynthesisOptions::default()).unwrap(), d);
    }

    #[test]
    fn noise_is_seeded_and_scaled() {
        let (g, m, src) = setup();
        let opts = SynthesisOptions { noise_level: 1e-2, seed: 7, ..Default::default() };
        let a = synthesize_rtd(&g, &m, &src, 6.0, &opts).unwrap();
        assert_eq!(a, synthesize_rtd(&g, &m, &src, 6.0, &opts).unwrap());
        let clean = synthesize_rtd(&g, &m, &src, 6.0, &SynthesisOptions::default()).unwrap();
        let rel: Vec<f64> = a
            .records
            .iter()
            .zip(&clean.records)
            .map(|(n, c)| {
                let d: f64 = n.trace1.iter().zip(&c.trace1).map(|(x, y)| (x - y).norm_sqr()).sum();
                let s: f64 = c.trace1.iter().map(|x| x.norm_sqr()).sum();
                (d / s).sqrt()
            })
            .collect();
        assert!(rel.iter().all(|&r| r > 2e-3 && r < 5e-2), "{rel:?}");
    }

    #[test]
    fn json_roundtrip() {
        let (g, m, src) = setup();
        let d = synthesize_rtd(&g, &m, &src[..1], 6.0, &SynthesisOptions::default()).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.contains("\"boundary_nodes\":[[0.0,0.0]"));
        let back: RtDDataset = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }
}
