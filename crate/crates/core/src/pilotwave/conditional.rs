use num_complex::Complex64;

use super::{GridSpec, GridWavefunction, PilotError, Result};

/// Slices whose squared norm falls below this are rejected.
pub const SLICE_NORM_FLOOR: f64 = 1e-12;

/// ψ(·, q_fixed) on the remaining axis, renormalized. `value` is located on
/// the fixed axis by linear interpolation between its neighbouring nodes
/// (periodically, like the grid itself).
pub fn conditional_wavefunction(psi: &GridWavefunction, fixed_axis: usize, value: f64) -> Result<GridWavefunction> {
    let grid = psi.grid();
    if grid.dim() != 2 {
        return Err(PilotError::NotTwoDimensional);
    }
    if fixed_axis > 1 {
        return Err(PilotError::InvalidGrid(format!("axis {fixed_axis} does not exist")));
    }
    if !value.is_finite() {
        return Err(PilotError::NonFinite);
    }
    let fixed = grid.axes()[fixed_axis];
    let free_axis = 1 - fixed_axis;
    let free = grid.axes()[free_axis];

    let s = (value - fixed.min) / fixed.spacing();
    let f = s.floor();
    let lo = (f as i64).rem_euclid(fixed.points as i64) as usize;
    let hi = (lo + 1) % fixed.points;
    let w = s - f;

    let at = |fixed_j: usize, free_j: usize| {
        let mut j = [0usize; 2];
        j[fixed_axis] = fixed_j;
        j[free_axis] = free_j;
        psi.values()[grid.index(j)]
    };
    let slice: Vec<Complex64> = (0..free.points).map(|j| at(lo, j) * (1.0 - w) + at(hi, j) * w).collect();

    let norm_sq = slice.iter().map(|v| v.norm_sqr()).sum::<f64>() * free.spacing();
    if norm_sq < SLICE_NORM_FLOOR {
        return Err(PilotError::NodeSlice(norm_sq));
    }
    GridWavefunction::normalized(GridSpec::new(vec![free])?, slice, psi.time())
}
