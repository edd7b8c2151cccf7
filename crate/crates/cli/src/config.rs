//! Scenario configuration: one JSON file per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use westervelt::cascade::{DEFAULT_K_MAX, DEFAULT_TOL};
use westervelt::estimates::{InteriorSource, Quantity, SweepSpec};
use westervelt::field::BoundaryField;
use westervelt::inverse::MuOptions;
use westervelt::medium::{fourier_modes, MediumSpec, Profile, SourceProfile};
use westervelt::time_oracle::TimeStepperConfig;
use westervelt::{BoundarySource, Grid, Medium};

use crate::Failure;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub domain: Domain,
    pub medium: MediumSpec,
    pub excitation: Excitation,
    pub cascade: CascadeSettings,
    pub oracle: TimeStepperConfig,
    pub bounds: BoundsSettings,
    pub inverse: InverseSettings,
    pub distinguish: DistinguishSettings,
    pub output: OutputSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Domain {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for Domain {
    fn default() -> Self {
        Self { width: 1.0, height: 1.0, nx: 65, ny: 65 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Excitation {
    pub omega: f64,
    pub source_profile: SourceProfile,
    /// Highest boundary Fourier order of the source family used by the
    /// multi-source commands (`2J + 1` modes).
    pub fourier_order: usize,
}

impl Default for Excitation {
    fn default() -> Self {
        Self { omega: 40.0, source_profile: SourceProfile::Uniform { amplitude: 1.0 }, fourier_order: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeSettings {
    pub k_max: usize,
    pub tol: f64,
}

impl Default for CascadeSettings {
    fn default() -> Self {
        Self { k_max: DEFAULT_K_MAX, tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    Lemma1,
    Lemma2,
    Stability,
    Decay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSettings {
    pub omega_values: Vec<f64>,
    pub sweeps: Vec<Sweep>,
    pub lemma1_resolution: usize,
    pub lemma2_resolution: usize,
    /// Grid for the stability and decay sweeps.
    pub stability_resolution: usize,
    pub k_values: Vec<usize>,
    pub interior_source: InteriorSource,
    /// Self-test hook: multiplies one quantity by ω² so `--strict` must fail.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub misscale: Option<Quantity>,
}

impl Default for BoundsSettings {
    fn default() -> Self {
        Self {
            omega_values: vec![40.0, 80.0, 160.0, 320.0],
            sweeps: vec![Sweep::Lemma1, Sweep::Lemma2, Sweep::Stability, Sweep::Decay],
            lemma1_resolution: 129,
            lemma2_resolution: 257,
            stability_resolution: 129,
            k_values: vec![2, 4, 8],
            interior_source: InteriorSource::CascadeSquare { omega: 40.0 },
            misscale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseSettings {
    pub px: usize,
    pub py: usize,
    /// Tikhonov weight for α; `None` picks a scale-aware default.
    pub reg_weight: Option<f64>,
    /// Sources are the first `source_count` of the excitation Fourier family.
    pub source_count: usize,
    pub probe_order: usize,
    pub probe_count: usize,
    pub noise_level: f64,
    pub seed: u64,
    pub mu_px: usize,
    pub mu_py: usize,
    /// Constant starting `(β, γ)`; defaults to the medium's value at the origin corner.
    pub mu_initial: Option<[f64; 2]>,
    pub mu_options: MuOptions,
    /// Nodal `‖α̂‖∞` below which α inversions count as "no nonlinearity".
    pub zero_threshold: f64,
}

impl Default for InverseSettings {
    fn default() -> Self {
        Self {
            px: 8,
            py: 8,
            reg_weight: None,
            source_count: 12,
            probe_order: 6,
            probe_count: 12,
            noise_level: 0.0,
            seed: 0,
            mu_px: 3,
            mu_py: 3,
            mu_initial: None,
            mu_options: MuOptions::default(),
            zero_threshold: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistinguishSettings {
    /// Comparison medium; defaults to the scenario medium with a Gaussian α bump added.
    pub medium_tilde: Option<MediumSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub directory: PathBuf,
    /// Any of `"csv"` (field dumps) and `"json"` (reports). Reports are always written.
    pub formats: Vec<String>,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec!["csv".into(), "json".into()] }
    }
}

impl OutputSettings {
    pub fn csv(&self) -> bool {
        self.formats.iter().any(|f| f == "csv")
    }
}

impl ScenarioConfig {
    /// Parses and validates; the medium must satisfy its invariants on the configured grid.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let grid = self.grid()?;
        self.medium()?;
        if let Some(t) = &self.distinguish.medium_tilde {
            t.build(&grid)?;
        }
        self.oracle.validate()?;
        if !(self.excitation.omega > 0.0 && self.excitation.omega.is_finite()) {
            return Err(Failure::Input(format!("excitation.omega must be positive, got {}", self.excitation.omega)));
        }
        if let Some(f) = self.output.formats.iter().find(|f| !matches!(f.as_str(), "csv" | "json")) {
            return Err(Failure::Input(format!("unknown output format {f:?}")));
        }
        let inv = &self.inverse;
        let modes = 2 * self.excitation.fourier_order + 1;
        if inv.source_count == 0 || inv.source_count > modes {
            return Err(Failure::Input(format!("inverse.source_count must be in 1..={modes}")));
        }
        if inv.probe_count == 0 || inv.probe_count > 2 * inv.probe_order + 1 {
            return Err(Failure::Input(format!("inverse.probe_count must be in 1..={}", 2 * inv.probe_order + 1)));
        }
        if !(inv.noise_level >= 0.0 && inv.noise_level.is_finite()) {
            return Err(Failure::Input(format!("inverse.noise_level must be ≥ 0, got {}", inv.noise_level)));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, Failure> {
        let d = self.domain;
        Ok(Grid::build(d.width, d.height, d.nx, d.ny)?)
    }

    pub fn medium(&self) -> Result<Medium, Failure> {
        Ok(self.medium.build(&self.grid()?)?)
    }

    pub fn medium_tilde(&self) -> Result<Medium, Failure> {
        let grid = self.grid()?;
        if let Some(spec) = &self.distinguish.medium_tilde {
            return Ok(spec.build(&grid)?);
        }
        let d = self.domain;
        let bump = Profile::GaussianBump {
            base: 0.0,
            amplitude: 0.3,
            center: [0.5 * d.width, 0.5 * d.height],
            width: 0.1 * d.width.min(d.height),
        };
        let medium = self.medium()?;
        let alpha = medium.alpha.iter().zip(bump.sample(&grid)).map(|(a, b)| a + b).collect();
        Ok(medium.with_alpha(alpha))
    }

    pub fn source(&self) -> Result<BoundarySource, Failure> {
        let grid = self.grid()?;
        Ok(BoundarySource::new(&grid, self.excitation.source_profile.sample(&grid), self.excitation.omega)?)
    }

    /// First `inverse.source_count` boundary Fourier modes.
    pub fn sources(&self, grid: &Grid) -> Vec<BoundaryField<f64>> {
        let mut modes = fourier_modes(grid, self.excitation.fourier_order);
        modes.truncate(self.inverse.source_count);
        modes
    }

    pub fn probes(&self, grid: &Grid) -> Vec<BoundaryField<f64>> {
        let mut modes = fourier_modes(grid, self.inverse.probe_order);
        modes.truncate(self.inverse.probe_count);
        modes
    }

    pub fn sweep_spec(&self, resolution: usize, quantities: Vec<Quantity>) -> SweepSpec {
        let b = &self.bounds;
        SweepSpec {
            omega_values: b.omega_values.clone(),
            grid_resolutions: vec![resolution],
            width: self.domain.width,
            height: self.domain.height,
            medium: self.medium.clone(),
            source: self.excitation.source_profile,
            quantities,
            k_values: b.k_values.clone(),
            k_max: self.cascade.k_max,
            tol: self.cascade.tol,
            misscale: b.misscale,
        }
    }
}
