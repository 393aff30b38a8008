use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{PilotError, Result, NORM_TOL};

/// One configuration-space axis discretized on a periodic uniform grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / self.points as f64
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    pub fn node(&self, j: usize) -> f64 {
        self.min + j as f64 * self.spacing()
    }

    /// Angular wavenumber of FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.points as i64;
        let j = j as i64;
        let m = if j < n / 2 { j } else { j - n };
        2.0 * std::f64::consts::PI * m as f64 / self.length()
    }
}

/// Grid over one or two configuration axes (ħ = 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(PilotError::InvalidGrid(format!("{} axes; 1 or 2 supported", axes.len())));
        }
        for (k, a) in axes.iter().enumerate() {
            if !(a.min < a.max) || !a.min.is_finite() || !a.max.is_finite() {
                return Err(PilotError::InvalidGrid(format!("axis {k}: empty extent")));
            }
            if a.points < 64 || !a.points.is_power_of_two() {
                return Err(PilotError::InvalidGrid(format!(
                    "axis {k}: {} points; need a power of two >= 64",
                    a.points
                )));
            }
        }
        Ok(GridSpec { axes })
    }

    pub fn line(min: f64, max: f64, points: usize) -> Result<Self> {
        GridSpec::new(vec![Axis { min, max, points }])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Row-major node index; the first axis varies slowest.
    pub fn index(&self, j: [usize; 2]) -> usize {
        if self.dim() == 1 {
            j[0]
        } else {
            j[0] * self.axes[1].points + j[1]
        }
    }

    pub fn multi_index(&self, i: usize) -> [usize; 2] {
        if self.dim() == 1 {
            [i, 0]
        } else {
            [i / self.axes[1].points, i % self.axes[1].points]
        }
    }

    pub fn position(&self, i: usize) -> [f64; 2] {
        let j = self.multi_index(i);
        let mut q = [0.0; 2];
        for (k, a) in self.axes.iter().enumerate() {
            q[k] = a.node(j[k]);
        }
        q
    }

    pub fn contains(&self, q: &[f64; 2], margin_cells: f64) -> bool {
        self.axes.iter().enumerate().all(|(k, a)| {
            let m = margin_cells * a.spacing();
            q[k] >= a.min + m && q[k] <= a.max - m
        })
    }
}

/// ψ(q, t) sampled on the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridWavefunction {
    pub(crate) grid: GridSpec,
    pub(crate) values: Vec<Complex64>,
    pub(crate) time: f64,
}

impl GridWavefunction {
    /// Requires unit discrete norm within 1e-10 and finite values.
    pub fn new(grid: GridSpec, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(PilotError::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(PilotError::NonFinite);
        }
        let psi = GridWavefunction { grid, values, time };
        let n = psi.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(PilotError::NotNormalized(n));
        }
        Ok(psi)
    }

    pub fn normalized(grid: GridSpec, mut values: Vec<Complex64>, time: f64) -> Result<Self> {
        let dv = grid.cell_volume();
        let n = (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dv).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(PilotError::NotNormalized(n));
        }
        for v in &mut values {
            *v /= n;
        }
        GridWavefunction::new(grid, values, time)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Discrete L² norm, sqrt(Σ|ψ|² ΔV).
    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Probability mass of each node's cell.
    pub fn cell_masses(&self) -> Vec<f64> {
        let dv = self.grid.cell_volume();
        self.values.iter().map(|v| v.norm_sqr() * dv).collect()
    }

    /// Mean and standard deviation of |ψ|² along `axis`.
    pub fn moments(&self, axis: usize) -> (f64, f64) {
        let masses = self.cell_masses();
        let total: f64 = masses.iter().sum();
        let mut mean = 0.0;
        for (i, m) in masses.iter().enumerate() {
            mean += m * self.grid.position(i)[axis];
        }
        mean /= total;
        let mut var = 0.0;
        for (i, m) in masses.iter().enumerate() {
            let d = self.grid.position(i)[axis] - mean;
            var += m * d * d;
        }
        (mean, (var / total).sqrt())
    }

    /// ⟨ψ|φ⟩ with the grid's volume element.
    pub fn inner(&self, other: &GridWavefunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(PilotError::GridMismatch);
        }
        let dv = self.grid.cell_volume();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * dv)
    }

    /// |⟨ψ|φ⟩|²
    pub fn fidelity(&self, other: &GridWavefunction) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Largest |ψ| on the outermost node layer of any axis.
    pub fn boundary_amplitude(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.values.len() {
            let j = self.grid.multi_index(i);
            let edge = self
                .grid
                .axes()
                .iter()
                .enumerate()
                .any(|(k, a)| j[k] == 0 || j[k] == a.points - 1);
            if edge {
                m = m.max(self.values[i].norm());
            }
        }
        m
    }
}

/// Parameters of a Gaussian packet along each axis.
///
/// `width` is the standard deviation of |ψ|², so the amplitude is
/// exp(−(q−c)²/(4 width²) + i p q).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: Vec<f64>,
    pub width: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl Gaussian {
    pub fn line(center: f64, width: f64, momentum: f64) -> Self {
        Gaussian {
            center: vec![center],
            width: vec![width],
            momentum: vec![momentum],
        }
    }

    fn amplitude(&self, q: &[f64; 2], dim: usize) -> Complex64 {
        let mut out = Complex64::new(1.0, 0.0);
        for k in 0..dim {
            let d = q[k] - self.center[k];
            let s = self.width[k];
            let norm = (2.0 * std::f64::consts::PI * s * s).powf(-0.25);
            out *= Complex64::from_polar(norm * (-d * d / (4.0 * s * s)).exp(), self.momentum[k] * q[k]);
        }
        out
    }

    /// |ψ|² mass of the continuum packet that falls outside the grid.
    fn leakage(&self, grid: &GridSpec) -> f64 {
        let mut inside = 1.0;
        for (k, a) in grid.axes().iter().enumerate() {
            let s = self.width[k] * std::f64::consts::SQRT_2;
            let lo = 0.5 * erfc((self.center[k] - a.min) / s);
            let hi = 0.5 * erfc((a.max - self.center[k]) / s);
            inside *= 1.0 - lo - hi;
        }
        1.0 - inside
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.center.len() != dim || self.width.len() != dim || self.momentum.len() != dim {
            return Err(PilotError::InvalidProfile(format!("gaussian needs {dim} components per field")));
        }
        if self.width.iter().any(|w| !(*w > 0.0)) {
            return Err(PilotError::InvalidProfile("gaussian width must be positive".into()));
        }
        Ok(())
    }
}

/// Named initial wavefunctions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Gaussian(Gaussian),
    /// a·ψ_a + b·ψ_b, renormalized on the grid. With two packets displaced
    /// along one axis this is the double-slit initial state.
    TwoGaussian {
        first: Gaussian,
        second: Gaussian,
        weights: [f64; 2],
    },
}

impl Profile {
    /// Symmetric pair of packets at ±`separation`/2 on a line.
    pub fn double_slit(separation: f64, width: f64) -> Self {
        Profile::TwoGaussian {
            first: Gaussian::line(-separation / 2.0, width, 0.0),
            second: Gaussian::line(separation / 2.0, width, 0.0),
            weights: [1.0, 1.0],
        }
    }
}

/// Maximum continuum mass allowed outside the grid.
pub const MAX_LEAKAGE: f64 = 1e-6;

/// Samples a named profile on the grid and normalizes it.
pub fn init_wavefunction(grid: &GridSpec, profile: &Profile) -> Result<GridWavefunction> {
    let dim = grid.dim();
    let values: Vec<Complex64> = match profile {
        Profile::Gaussian(g) => {
            g.validate(dim)?;
            let leak = g.leakage(grid);
            if leak > MAX_LEAKAGE {
                return Err(PilotError::Leakage(leak));
            }
            (0..grid.len()).map(|i| g.amplitude(&grid.position(i), dim)).collect()
        }
        Profile::TwoGaussian { first, second, weights } => {
            first.validate(dim)?;
            second.validate(dim)?;
            let leak = first.leakage(grid).max(second.leakage(grid));
            if leak > MAX_LEAKAGE {
                return Err(PilotError::Leakage(leak));
            }
            (0..grid.len())
                .map(|i| {
                    let q = grid.position(i);
                    first.amplitude(&q, dim) * weights[0] + second.amplitude(&q, dim) * weights[1]
                })
                .collect()
        }
    };
    GridWavefunction::normalized(grid.clone(), values, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::line(-1.0, 1.0, 100).is_err());
        assert!(GridSpec::line(-1.0, 1.0, 32).is_err());
        assert!(GridSpec::line(1.0, 1.0, 64).is_err());
        assert!(GridSpec::new(vec![]).is_err());
        let a = Axis { min: 0.0, max: 1.0, points: 64 };
        assert!(GridSpec::new(vec![a, a, a]).is_err());
        assert!(GridSpec::new(vec![a, a]).is_ok());
    }

    #[test]
    fn gaussian_is_normalized() {
        let grid = GridSpec::line(-20.0, 20.0, 512).unwrap();
        let psi = init_wavefunction(&grid, &Profile::Gaussian(Gaussian::line(0.0, 1.0, 0.0))).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-10);
        let (mean, sd) = psi.moments(0);
        assert!(mean.abs() < 1e-12);
        assert!((sd - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_gaussian_halves_are_even() {
        let grid = GridSpec::line(-20.0, 20.0, 512).unwrap();
        let psi = init_wavefunction(&grid, &Profile::double_slit(8.0, 1.0)).unwrap();
        let masses = psi.cell_masses();
        // the node at q = 0 straddles both halves
        let mid = grid.len() / 2;
        let upper: f64 = masses[mid + 1..].iter().sum::<f64>() + 0.5 * masses[mid];
        assert!((upper - 0.5).abs() < 1e-6, "{upper}");
    }

    #[test]
    fn wide_profile_rejected() {
        let grid = GridSpec::line(-5.0, 5.0, 128).unwrap();
        let r = init_wavefunction(&grid, &Profile::Gaussian(Gaussian::line(0.0, 2.0, 0.0)));
        assert!(matches!(r, Err(PilotError::Leakage(_))));
    }

    #[test]
    fn mismatched_components_rejected() {
        let grid = GridSpec::line(-20.0, 20.0, 128).unwrap();
        let g = Gaussian { center: vec![0.0, 0.0], width: vec![1.0], momentum: vec![0.0] };
        assert!(init_wavefunction(&grid, &Profile::Gaussian(g)).is_err());
    }
}
