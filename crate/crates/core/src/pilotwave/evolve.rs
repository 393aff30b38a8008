use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectral::Spectral;
use super::{GridSpec, GridWavefunction, PilotError, Result};

/// Named potentials V(q).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Free,
    /// Σ ½ m_k ω_k² (q_k − c_k)²
    Harmonic { omega: Vec<f64>, center: Vec<f64> },
    /// Wall of height `height` across axis 0 at `position` (thickness
    /// `thickness`), pierced by slits of width `slit_width` centred at
    /// `slit_centers` along axis 1. Needs a 2D grid.
    DoubleSlit {
        position: f64,
        thickness: f64,
        height: f64,
        slit_centers: [f64; 2],
        slit_width: f64,
    },
}

/// Masses per configuration axis and the potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub masses: Vec<f64>,
    pub potential: Potential,
}

impl PhysicsParams {
    pub fn free(masses: Vec<f64>) -> Self {
        PhysicsParams {
            masses,
            potential: Potential::Free,
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if self.masses.len() != grid.dim() {
            return Err(PilotError::InvalidParams(format!(
                "{} masses for {} axes",
                self.masses.len(),
                grid.dim()
            )));
        }
        if self.masses.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(PilotError::InvalidParams("masses must be positive".into()));
        }
        match &self.potential {
            Potential::Free => {}
            Potential::Harmonic { omega, center } => {
                if omega.len() != grid.dim() || center.len() != grid.dim() {
                    return Err(PilotError::InvalidParams("harmonic needs one ω and centre per axis".into()));
                }
            }
            Potential::DoubleSlit { thickness, slit_width, .. } => {
                if grid.dim() != 2 {
                    return Err(PilotError::InvalidParams("double-slit barrier needs two axes".into()));
                }
                if !(*thickness > 0.0) || !(*slit_width > 0.0) {
                    return Err(PilotError::InvalidParams("barrier dimensions must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn potential_at(&self, q: &[f64; 2], dim: usize) -> f64 {
        match &self.potential {
            Potential::Free => 0.0,
            Potential::Harmonic { omega, center } => (0..dim)
                .map(|k| {
                    let d = q[k] - center[k];
                    0.5 * self.masses[k] * omega[k] * omega[k] * d * d
                })
                .sum(),
            Potential::DoubleSlit {
                position,
                thickness,
                height,
                slit_centers,
                slit_width,
            } => {
                let in_wall = (q[0] - position).abs() <= thickness / 2.0;
                let in_slit = slit_centers.iter().any(|c| (q[1] - c).abs() <= slit_width / 2.0);
                if in_wall && !in_slit {
                    *height
                } else {
                    0.0
                }
            }
        }
    }

    /// Potential on every grid node.
    pub fn sample(&self, grid: &GridSpec) -> Vec<f64> {
        (0..grid.len()).map(|i| self.potential_at(&grid.position(i), grid.dim())).collect()
    }

    /// Largest allowed time step: 0.25·m·Δq² on every axis and 0.1/max|V|.
    pub fn max_dt(&self, grid: &GridSpec) -> f64 {
        let mut bound = f64::INFINITY;
        for (a, m) in grid.axes().iter().zip(&self.masses) {
            bound = bound.min(0.25 * m * a.spacing() * a.spacing());
        }
        let vmax = self.sample(grid).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if vmax > 0.0 {
            bound = bound.min(0.1 / vmax);
        }
        bound
    }
}

/// Strang split-operator propagator for a fixed time step:
/// half potential kick, exact kinetic step in Fourier space, half kick.
pub struct SplitOperator {
    spectral: Spectral,
    half_kick: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    dt: f64,
}

impl SplitOperator {
    pub fn new(grid: &GridSpec, params: &PhysicsParams, dt: f64) -> Result<Self> {
        params.validate(grid)?;
        let bound = params.max_dt(grid);
        if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
            return Err(PilotError::StepTooLarge { dt, bound });
        }
        Ok(SplitOperator::unchecked(grid, params, dt))
    }

    /// Skips the step-size bound. Used for half steps of an already validated step.
    pub(crate) fn unchecked(grid: &GridSpec, params: &PhysicsParams, dt: f64) -> Self {
        let spectral = Spectral::new(grid);
        let half_kick = params
            .sample(grid)
            .into_iter()
            .map(|v| Complex64::from_polar(1.0, -v * dt / 2.0))
            .collect();
        let kinetic = spectral
            .wavenumbers()
            .into_iter()
            .map(|k| {
                let e: f64 = (0..grid.dim()).map(|a| k[a] * k[a] / (2.0 * params.masses[a])).sum();
                Complex64::from_polar(1.0, -e * dt)
            })
            .collect();
        SplitOperator {
            spectral,
            half_kick,
            kinetic,
            dt,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, psi: &GridWavefunction) -> GridWavefunction {
        let mut buf: Vec<Complex64> = psi.values.iter().zip(&self.half_kick).map(|(v, k)| v * k).collect();
        self.spectral.forward(&mut buf);
        for (v, k) in buf.iter_mut().zip(&self.kinetic) {
            *v *= k;
        }
        self.spectral.inverse(&mut buf);
        for (v, k) in buf.iter_mut().zip(&self.half_kick) {
            *v *= k;
        }
        GridWavefunction {
            grid: psi.grid.clone(),
            values: buf,
            time: psi.time + self.dt,
        }
    }
}

/// One second-order step of i∂ψ/∂t = −Σ 1/(2m_k) Δ_k ψ + Vψ.
pub fn step_schrodinger(psi: &GridWavefunction, params: &PhysicsParams, dt: f64) -> Result<GridWavefunction> {
    Ok(SplitOperator::new(psi.grid(), params, dt)?.step(psi))
}

/// `steps` repeated steps with one propagator.
pub fn evolve(psi: &GridWavefunction, params: &PhysicsParams, dt: f64, steps: usize) -> Result<GridWavefunction> {
    let prop = SplitOperator::new(psi.grid(), params, dt)?;
    let mut cur = psi.clone();
    for _ in 0..steps {
        cur = prop.step(&cur);
    }
    Ok(cur)
}
