//! Coefficient bundle, boundary sources and the named analytic profiles used
//! to build them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::BoundaryField;
use crate::Grid;

/// `α, β, γ` at every node; `λ, η` at every boundary node (grid boundary order).
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub eta: Vec<f64>,
}

fn check(name: &str, bound: &str, v: &[f64], allow_zero: bool) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidMedium(format!("{name} has non-finite value {x}")));
    }
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = if allow_zero { min >= 0.0 } else { min > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidMedium(format!("{bound} required, but min {name} = {min}")))
    }
}

impl Medium {
    pub fn new(
        grid: &Grid,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        gamma: Vec<f64>,
        lambda: Vec<f64>,
        eta: Vec<f64>,
    ) -> Result<Self> {
        let m = Self { alpha, beta, gamma, lambda, eta };
        m.validate(grid)?;
        Ok(m)
    }

    pub fn constant(grid: &Grid, alpha: f64, beta: f64, gamma: f64, lambda: f64, eta: f64) -> Result<Self> {
        let (n, nb) = (grid.len(), grid.boundary.len());
        Self::new(grid, vec![alpha; n], vec![beta; n], vec![gamma; n], vec![lambda; nb], vec![eta; nb])
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        for v in [&self.alpha, &self.beta, &self.gamma] {
            grid.check_nodes(v.len())?;
        }
        for v in [&self.lambda, &self.eta] {
            grid.check_boundary(v.len())?;
        }
        check("α", "α ≥ 0", &self.alpha, true)?;
        check("β", "β ≥ β₀ > 0", &self.beta, false)?;
        check("γ", "γ ≥ γ₀ > 0", &self.gamma, false)?;
        check("λ", "λ ≥ λ₀ > 0", &self.lambda, false)?;
        check("η", "η ≥ η₀ > 0", &self.eta, false)
    }

    pub fn with_alpha(&self, alpha: Vec<f64>) -> Self {
        Self { alpha, ..self.clone() }
    }

    /// `μ_k = γ − i kω β` at every node.
    pub fn mu(&self, k_omega: f64) -> Vec<Complex64> {
        self.gamma
            .iter()
            .zip(&self.beta)
            .map(|(&g, &b)| Complex64::new(g, -k_omega * b))
            .collect()
    }
}

/// Boundary datum `g` of the forcing `g e^{−iωt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySource {
    pub g: BoundaryField<f64>,
    pub omega: f64,
}

impl BoundarySource {
    pub fn new(grid: &Grid, g: BoundaryField<f64>, omega: f64) -> Result<Self> {
        grid.check_boundary(g.len())?;
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!("ω must be positive, got {omega}")));
        }
        if !g.is_finite() {
            return Err(Error::InvalidArgument("boundary source has non-finite values".into()));
        }
        Ok(Self { g, omega })
    }
}

/// Named analytic coefficient profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `base + amplitude · exp(−|x − center|² / (2 width²))`.
    GaussianBump {
        base: f64,
        amplitude: f64,
        center: [f64; 2],
        width: f64,
    },
    /// Disk of radius `radius` with a tanh edge of thickness `smoothness`.
    SmoothInclusion {
        base: f64,
        contrast: f64,
        center: [f64; 2],
        radius: f64,
        smoothness: f64,
    },
}

impl Profile {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::GaussianBump { base, amplitude, center, width } => {
                let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                base + amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            Profile::SmoothInclusion { base, contrast, center, radius, smoothness } => {
                let r = (x - center[0]).hypot(y - center[1]);
                base + contrast * 0.5 * (1.0 - ((r - radius) / smoothness).tanh())
            }
        }
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len())
            .map(|k| {
                let [x, y] = grid.position(k);
                self.eval(x, y)
            })
            .collect()
    }

    pub fn sample_boundary(&self, grid: &Grid) -> Vec<f64> {
        grid.boundary
            .iter()
            .map(|b| {
                let [x, y] = grid.position(b.index);
                self.eval(x, y)
            })
            .collect()
    }
}

/// Boundary source profile in terms of the arclength parameter `s ∈ [0, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceProfile {
    Uniform { amplitude: f64 },
    /// `amplitude · cos(2π m s/P)` or the sine counterpart.
    Fourier { order: usize, sine: bool, amplitude: f64 },
}

impl SourceProfile {
    pub fn sample(&self, grid: &Grid) -> BoundaryField<f64> {
        match *self {
            SourceProfile::Uniform { amplitude } => BoundaryField::constant(grid, Complex64::new(amplitude, 0.0)),
            SourceProfile::Fourier { order, sine, amplitude } => fourier_mode(grid, order, sine).scale(amplitude.into()),
        }
    }
}

fn fourier_mode(grid: &Grid, order: usize, sine: bool) -> BoundaryField<f64> {
    let p = grid.perimeter();
    BoundaryField::from_fn(grid, |b, _| {
        let t = std::f64::consts::TAU * order as f64 * b.arclength / p;
        Complex64::new(if sine { t.sin() } else { t.cos() }, 0.0)
    })
}

/// Low-order boundary Fourier modes `1, cos s, sin s, …, cos Js, sin Js`
/// (2J + 1 fields), the default source and probe family.
pub fn fourier_modes(grid: &Grid, max_order: usize) -> Vec<BoundaryField<f64>> {
    let mut out = vec![fourier_mode(grid, 0, false)];
    for m in 1..=max_order {
        out.push(fourier_mode(grid, m, false));
        out.push(fourier_mode(grid, m, true));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_messages_name_the_bound() {
        let g = Grid::build(1.0, 1.0, 5, 5).unwrap();
        let err = Medium::constant(&g, 1.0, 0.0, 1.0, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("β ≥ β₀ > 0"), "{err}");
        assert!(Medium::constant(&g, -1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(Medium::constant(&g, 0.0, 1.0, f64::NAN, 1.0, 1.0).is_err());
        assert!(Medium::constant(&g, 0.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(Medium::constant(&g, 0.0, 1.0, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn profiles() {
        let bump = Profile::GaussianBump { base: 1.0, amplitude: 2.0, center: [0.5, 0.5], width: 0.1 };
        assert_eq!(bump.eval(0.5, 0.5), 3.0);
        assert!((bump.eval(0.0, 0.0) - 1.0).abs() < 1e-10);
        let inc = Profile::SmoothInclusion { base: 1.0, contrast: 0.5, center: [0.5, 0.5], radius: 0.2, smoothness: 0.02 };
        assert!((inc.eval(0.5, 0.5) - 1.5).abs() < 1e-8);
        assert!((inc.eval(0.0, 0.0) - 1.0).abs() < 1e-8);
        let json = serde_json::to_string(&bump).unwrap();
        assert!(json.contains("\"kind\":\"gaussian_bump\""));
        assert_eq!(serde_json::from_str::<Profile>(&json).unwrap(), bump);
    }

    #[test]
    fn fourier_family() {
        let g = Grid::build(1.0, 1.0, 17, 17).unwrap();
        let modes = fourier_modes(&g, 3);
        assert_eq!(modes.len(), 7);
        // distinct modes are orthogonal under the trapezoidal boundary rule
        let ip = |a: &BoundaryField<f64>, b: &BoundaryField<f64>| -> f64 {
            g.boundary.iter().zip(a.iter().zip(b.iter())).map(|(n, (x, y))| n.weight * (x * y).re).sum()
        };
        assert!(ip(&modes[1], &modes[2]).abs() < 1e-12);
        assert!(ip(&modes[1], &modes[3]).abs() < 1e-12);
        assert!((ip(&modes[0], &modes[0]) - 4.0).abs() < 1e-12);
    }
}

/// Grid-independent medium description: profiles for the interior
/// coefficients, constants on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub alpha: Profile,
    pub beta: Profile,
    pub gamma: Profile,
    pub lambda: f64,
    pub eta: f64,
}

impl Default for MediumSpec {
    /// Weakly nonlinear, strongly damped unit-square medium with a stiff
    /// impedance boundary.
    fn default() -> Self {
        Self {
            alpha: Profile::Constant { value: 10.0 },
            beta: Profile::Constant { value: 0.2 },
            gamma: Profile::Constant { value: 1.0 },
            lambda: 3.0,
            eta: 250.0,
        }
    }
}

impl MediumSpec {
    pub fn build(&self, grid: &Grid) -> Result<Medium> {
        let nb = grid.boundary.len();
        Medium::new(
            grid,
            self.alpha.sample(grid),
            self.beta.sample(grid),
            self.gamma.sample(grid),
            vec![self.lambda; nb],
            vec![self.eta; nb],
        )
    }
}
