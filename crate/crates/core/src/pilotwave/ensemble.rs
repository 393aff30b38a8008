use rand::Rng;
use rayon::prelude::*;

use super::evolve::SplitOperator;
use super::guidance::VelocityField;
use super::spectral::Spectral;
use super::{GridWavefunction, PhysicsParams, PilotError, Result};

/// Trajectories stop once they come within this many cells of the grid edge.
pub const ABSORB_MARGIN_CELLS: f64 = 4.0;

/// Bohmian configurations with their saved histories.
///
/// `history[s][i]` is trajectory `i` at `times[s]`. Absorbed trajectories
/// keep their last position and are flagged; they are excluded from the
/// statistics checks.
#[derive(Clone, Debug, PartialEq)]
pub struct BohmianEnsemble {
    pub dim: usize,
    pub positions: Vec<[f64; 2]>,
    pub absorbed: Vec<bool>,
    pub times: Vec<f64>,
    pub history: Vec<Vec<[f64; 2]>>,
}

impl BohmianEnsemble {
    /// A fresh ensemble whose history holds only the starting positions.
    pub fn new(dim: usize, positions: Vec<[f64; 2]>, time: f64) -> Self {
        let n = positions.len();
        BohmianEnsemble {
            dim,
            history: vec![positions.clone()],
            positions,
            absorbed: vec![false; n],
            times: vec![time],
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn absorbed_count(&self) -> usize {
        self.absorbed.iter().filter(|&&a| a).count()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("history is never empty")
    }

    /// Positions along `axis` of the trajectories still in flight.
    pub fn active_coordinates(&self, axis: usize) -> Vec<f64> {
        self.positions
            .iter()
            .zip(&self.absorbed)
            .filter(|(_, &a)| !a)
            .map(|(q, _)| q[axis])
            .collect()
    }
}

/// i.i.d. draws from |ψ|²: pick a cell by inverse CDF, then jitter uniformly
/// inside the cell centred on its node.
pub fn sample_equilibrium<R: Rng + ?Sized>(psi: &GridWavefunction, n: usize, rng: &mut R) -> Result<BohmianEnsemble> {
    if n == 0 {
        return Err(PilotError::EmptyEnsemble);
    }
    let masses = psi.cell_masses();
    let mut cdf = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for m in &masses {
        acc += m;
        cdf.push(acc);
    }
    let total = acc;
    let grid = psi.grid();
    let positions = (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * total;
            let cell = cdf.partition_point(|&c| c <= u).min(masses.len() - 1);
            let mut q = grid.position(cell);
            for (k, a) in grid.axes().iter().enumerate() {
                q[k] += (rng.gen::<f64>() - 0.5) * a.spacing();
            }
            q
        })
        .collect();
    Ok(BohmianEnsemble::new(grid.dim(), positions, psi.time()))
}

/// Result of co-evolving ψ and the configurations.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub psi: GridWavefunction,
    pub ensemble: BohmianEnsemble,
    /// ψ at every saved time, aligned with `ensemble.times`.
    pub snapshots: Vec<GridWavefunction>,
    /// Largest |‖ψ‖ − 1| seen over the run.
    pub max_norm_drift: f64,
}

/// Co-evolves ψ with the split-operator scheme and every trajectory with
/// classical RK4 on the interpolated guiding field. The field at t + dt/2
/// comes from a half step of ψ. Saves positions (and ψ) every `save_every`
/// steps and at the last step.
pub fn integrate_trajectories(
    psi0: &GridWavefunction,
    params: &PhysicsParams,
    ensemble: &BohmianEnsemble,
    dt: f64,
    steps: usize,
    save_every: usize,
) -> Result<Evolution> {
    if save_every == 0 {
        return Err(PilotError::InvalidParams("save_every must be at least 1".into()));
    }
    if ensemble.dim != psi0.grid().dim() {
        return Err(PilotError::GridMismatch);
    }
    let grid = psi0.grid().clone();
    let full = SplitOperator::new(&grid, params, dt)?;
    let half = SplitOperator::unchecked(&grid, params, dt / 2.0);
    let spec = Spectral::new(&grid);

    let mut ens = ensemble.clone();
    for (q, a) in ens.positions.iter().zip(ens.absorbed.iter_mut()) {
        if !grid.contains(q, ABSORB_MARGIN_CELLS) {
            *a = true;
        }
    }
    let mut psi = psi0.clone();
    let mut field_now = VelocityField::with_spectral(&psi, params, &spec);
    let mut snapshots = vec![psi.clone()];
    let mut max_norm_drift = (psi.norm() - 1.0).abs();

    for step in 1..=steps {
        let psi_half = half.step(&psi);
        let psi_next = full.step(&psi);
        let field_half = VelocityField::with_spectral(&psi_half, params, &spec);
        let field_next = VelocityField::with_spectral(&psi_next, params, &spec);

        ens.positions
            .par_iter_mut()
            .zip(ens.absorbed.par_iter_mut())
            .for_each(|(q, absorbed)| {
                if *absorbed {
                    return;
                }
                let add = |a: &[f64; 2], b: [f64; 2], h: f64| [a[0] + h * b[0], a[1] + h * b[1]];
                let k1 = field_now.at(q);
                let k2 = field_half.at(&add(q, k1, dt / 2.0));
                let k3 = field_half.at(&add(q, k2, dt / 2.0));
                let k4 = field_next.at(&add(q, k3, dt));
                let next = [
                    q[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    q[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                ];
                if grid.contains(&next, ABSORB_MARGIN_CELLS) && next.iter().all(|x| x.is_finite()) {
                    *q = next;
                } else {
                    *absorbed = true;
                }
            });

        psi = psi_next;
        field_now = field_next;
        max_norm_drift = max_norm_drift.max((psi.norm() - 1.0).abs());
        if step % save_every == 0 || step == steps {
            ens.times.push(psi.time());
            ens.history.push(ens.positions.clone());
            snapshots.push(psi.clone());
        }
    }
    Ok(Evolution {
        psi,
        ensemble: ens,
        snapshots,
        max_norm_drift,
    })
}
