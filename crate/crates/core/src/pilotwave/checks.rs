use std::collections::HashSet;

use serde::Serialize;

use super::{BohmianEnsemble, Evolution, GridWavefunction, PilotError, Result};

/// Largest tolerated fraction of absorbed trajectories in a statistics check.
pub const MAX_ABSORBED_FRACTION: f64 = 0.01;

/// 99% critical value of the one-sample Kolmogorov–Smirnov distance.
pub fn ks_threshold_99(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Kolmogorov–Smirnov distance between samples and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// CDF of the marginal of |ψ|² along `axis`, uniform within each node's cell
/// (the same convention `sample_equilibrium` draws from).
pub fn marginal_cdf(psi: &GridWavefunction, axis: usize) -> impl Fn(f64) -> f64 {
    let grid = psi.grid().clone();
    let a = grid.axes()[axis];
    let mut masses = vec![0.0; a.points];
    for (i, m) in psi.cell_masses().into_iter().enumerate() {
        masses[grid.multi_index(i)[axis]] += m;
    }
    let total: f64 = masses.iter().sum();
    let mut prefix = vec![0.0; a.points + 1];
    for j in 0..a.points {
        prefix[j + 1] = prefix[j] + masses[j] / total;
    }
    move |q: f64| {
        let dx = a.spacing();
        let s = (q - a.min + dx / 2.0) / dx;
        if s <= 0.0 {
            return 0.0;
        }
        let j = s.floor() as usize;
        if j >= a.points {
            return 1.0;
        }
        prefix[j] + (s - j as f64) * (prefix[j + 1] - prefix[j])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivarianceVerdict {
    Pass,
    Fail,
    /// Too many absorbed trajectories for the comparison to mean anything.
    Invalid,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivarianceReport {
    pub time: f64,
    pub ks: f64,
    pub threshold: f64,
    pub n: usize,
    pub absorbed: usize,
    pub verdict: EquivarianceVerdict,
}

/// KS distance between the ensemble's current positions and |ψ(·, t)|²
/// (maximum over axes for 2D). Passes iff the distance is below `threshold`.
pub fn check_equivariance(ens: &BohmianEnsemble, psi_t: &GridWavefunction, threshold: f64) -> Result<EquivarianceReport> {
    check_at(ens.final_time(), &ens.positions, &ens.absorbed, psi_t, threshold)
}

fn check_at(
    time: f64,
    positions: &[[f64; 2]],
    absorbed: &[bool],
    psi_t: &GridWavefunction,
    threshold: f64,
) -> Result<EquivarianceReport> {
    if (time - psi_t.time()).abs() > 1e-9 * (1.0 + time.abs()) {
        return Err(PilotError::TimeMismatch {
            ensemble: time,
            wavefunction: psi_t.time(),
        });
    }
    let n_absorbed = absorbed.iter().filter(|&&a| a).count();
    let mut ks = 0.0f64;
    let mut n = 0;
    for axis in 0..psi_t.grid().dim() {
        let xs: Vec<f64> = positions
            .iter()
            .zip(absorbed)
            .filter(|(_, &a)| !a)
            .map(|(q, _)| q[axis])
            .collect();
        n = xs.len();
        ks = ks.max(ks_distance(&xs, marginal_cdf(psi_t, axis)));
    }
    let verdict = if positions.is_empty() || n_absorbed as f64 > MAX_ABSORBED_FRACTION * positions.len() as f64 {
        EquivarianceVerdict::Invalid
    } else if ks < threshold {
        EquivarianceVerdict::Pass
    } else {
        EquivarianceVerdict::Fail
    };
    Ok(EquivarianceReport {
        time,
        ks,
        threshold,
        n,
        absorbed: n_absorbed,
        verdict,
    })
}

/// Equivariance at every saved time of a run, against the 99% KS threshold.
/// Trajectories absorbed by the end are excluded at every time.
pub fn check_equivariance_history(run: &Evolution) -> Result<Vec<EquivarianceReport>> {
    let ens = &run.ensemble;
    let threshold = ks_threshold_99(ens.len() - ens.absorbed_count());
    ens.times
        .iter()
        .zip(&ens.history)
        .zip(&run.snapshots)
        .map(|((&t, positions), psi)| check_at(t, positions, &ens.absorbed, psi, threshold))
        .collect()
}

/// Number of trajectory pairs whose order flips between any two consecutive
/// saved times. Only meaningful on a line; absorbed trajectories are skipped.
pub fn check_noncrossing(ens: &BohmianEnsemble) -> Result<usize> {
    if ens.dim != 1 {
        return Err(PilotError::NotOneDimensional);
    }
    let active: Vec<usize> = (0..ens.len()).filter(|&i| !ens.absorbed[i]).collect();
    let mut flipped: HashSet<(usize, usize)> = HashSet::new();
    for w in ens.history.windows(2) {
        let (before, after) = (&w[0], &w[1]);
        let mut order = active.clone();
        order.sort_by(|&a, &b| before[a][0].total_cmp(&before[b][0]));
        // Cheap screen: is the order still sorted afterwards?
        let sorted = order.windows(2).all(|p| after[p[0]][0] <= after[p[1]][0]);
        if sorted {
            continue;
        }
        for (x, &i) in order.iter().enumerate() {
            for &j in &order[x + 1..] {
                let s0 = (before[i][0] - before[j][0]).signum();
                let s1 = (after[i][0] - after[j][0]).signum();
                if s0 != 0.0 && s1 != 0.0 && s0 != s1 {
                    flipped.insert((i.min(j), i.max(j)));
                }
            }
        }
    }
    Ok(flipped.len())
}
