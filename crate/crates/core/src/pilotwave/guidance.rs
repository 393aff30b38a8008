use super::spectral::Spectral;
use super::{GridSpec, GridWavefunction, PhysicsParams};

/// Relative density floor under which guiding velocities are regularized.
pub const NODE_FLOOR: f64 = 1e-12;

/// Guiding-equation ingredients on the grid: the current numerator
/// J_k = Im(ψ* ∂_k ψ), the density |ψ|² and the node velocities. Away from
/// nodes of ψ the velocity itself is interpolated (bi)linearly; where a
/// stencil touches a node, J and |ψ|² are interpolated separately.
#[derive(Clone, Debug)]
pub struct VelocityField {
    grid: GridSpec,
    current: Vec<Vec<f64>>,
    density: Vec<f64>,
    velocity: Vec<Vec<f64>>,
    floor: f64,
    masses: Vec<f64>,
}

impl VelocityField {
    pub fn new(psi: &GridWavefunction, params: &PhysicsParams) -> Self {
        let spec = Spectral::new(psi.grid());
        VelocityField::with_spectral(psi, params, &spec)
    }

    pub(crate) fn with_spectral(psi: &GridWavefunction, params: &PhysicsParams, spec: &Spectral) -> Self {
        let re: Vec<f64> = psi.values().iter().map(|v| v.re).collect();
        let im: Vec<f64> = psi.values().iter().map(|v| v.im).collect();
        let density: Vec<f64> = psi.values().iter().map(|v| v.norm_sqr()).collect();
        let im_is_zero = im.iter().all(|&x| x == 0.0);
        let re_is_zero = re.iter().all(|&x| x == 0.0);
        // Im(ψ*∂ψ) = Re ψ · ∂Im ψ − Im ψ · ∂Re ψ
        let current: Vec<Vec<f64>> = (0..psi.grid().dim())
            .map(|axis| {
                let d_im = if im_is_zero { vec![0.0; im.len()] } else { spec.derivative_real(&im, axis) };
                let d_re = if re_is_zero { vec![0.0; re.len()] } else { spec.derivative_real(&re, axis) };
                (0..re.len()).map(|i| re[i] * d_im[i] - im[i] * d_re[i]).collect()
            })
            .collect();
        let max = density.iter().fold(0.0f64, |m, &d| m.max(d));
        let floor = NODE_FLOOR * max;
        let velocity = current
            .iter()
            .zip(&params.masses)
            .map(|(j, m)| j.iter().zip(&density).map(|(j, rho)| j / (m * rho.max(floor))).collect())
            .collect();
        VelocityField {
            grid: psi.grid().clone(),
            current,
            density,
            velocity,
            floor,
            masses: params.masses.clone(),
        }
    }

    /// Interpolation stencil: node indices and weights around `q`.
    fn stencil(&self, q: &[f64; 2]) -> ([usize; 4], [f64; 4], usize) {
        let axes = self.grid.axes();
        let mut lo = [0usize; 2];
        let mut frac = [0.0; 2];
        for (k, a) in axes.iter().enumerate() {
            let s = (q[k] - a.min) / a.spacing();
            let f = s.floor();
            let n = a.points as i64;
            lo[k] = (f as i64).rem_euclid(n) as usize;
            frac[k] = s - f;
        }
        if axes.len() == 1 {
            let hi = (lo[0] + 1) % axes[0].points;
            ([lo[0], hi, 0, 0], [1.0 - frac[0], frac[0], 0.0, 0.0], 2)
        } else {
            let hi0 = (lo[0] + 1) % axes[0].points;
            let hi1 = (lo[1] + 1) % axes[1].points;
            let idx = [
                self.grid.index([lo[0], lo[1]]),
                self.grid.index([hi0, lo[1]]),
                self.grid.index([lo[0], hi1]),
                self.grid.index([hi0, hi1]),
            ];
            let w = [
                (1.0 - frac[0]) * (1.0 - frac[1]),
                frac[0] * (1.0 - frac[1]),
                (1.0 - frac[0]) * frac[1],
                frac[0] * frac[1],
            ];
            (idx, w, 4)
        }
    }

    /// v_k = J_k / (m_k · max(|ψ|², ε)) at an arbitrary configuration.
    pub fn at(&self, q: &[f64; 2]) -> [f64; 2] {
        let (idx, w, n) = self.stencil(q);
        if idx[..n].iter().all(|&i| self.density[i] > self.floor) {
            let mut v = [0.0; 2];
            for (k, vel) in self.velocity.iter().enumerate() {
                v[k] = (0..n).map(|s| w[s] * vel[idx[s]]).sum();
            }
            return v;
        }
        let mut rho = 0.0;
        for s in 0..n {
            rho += w[s] * self.density[idx[s]];
        }
        let rho = rho.max(self.floor);
        let mut v = [0.0; 2];
        for (k, j) in self.current.iter().enumerate() {
            let mut num = 0.0;
            for s in 0..n {
                num += w[s] * j[idx[s]];
            }
            v[k] = num / (self.masses[k] * rho);
        }
        v
    }

    /// Interpolated |ψ|² at `q`.
    pub fn density_at(&self, q: &[f64; 2]) -> f64 {
        let (idx, w, n) = self.stencil(q);
        (0..n).map(|s| w[s] * self.density[idx[s]]).sum()
    }
}

/// Velocities of the given configurations under ψ.
pub fn velocity_field(psi: &GridWavefunction, params: &PhysicsParams, positions: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let field = VelocityField::new(psi, params);
    positions.iter().map(|q| field.at(q)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pilotwave::{evolve, init_wavefunction, Gaussian, Profile};

    fn line() -> GridSpec {
        GridSpec::line(-20.0, 20.0, 512).unwrap()
    }

    #[test]
    fn real_wavefunction_has_no_velocity() {
        let grid = line();
        let psi = init_wavefunction(&grid, &Profile::double_slit(6.0, 1.0)).unwrap();
        let field = VelocityField::new(&psi, &PhysicsParams::free(vec![1.0]));
        let mut max = 0.0f64;
        for i in 0..400 {
            let q = -19.0 + 38.0 * i as f64 / 400.0 + 0.013;
            max = max.max(field.at(&[q, 0.0])[0].abs());
        }
        assert!(max < 1e-10, "{max}");
    }

    #[test]
    fn plane_phase_gives_de_broglie_velocity() {
        let grid = line();
        let psi = init_wavefunction(&grid, &Profile::Gaussian(Gaussian::line(0.0, 1.0, 1.5))).unwrap();
        let v = velocity_field(&psi, &PhysicsParams::free(vec![2.0]), &[[0.0, 0.0], [0.037, 0.0]]);
        assert!((v[0][0] - 0.75).abs() < 1e-6, "{:?}", v[0]);
        assert!((v[1][0] - 0.75).abs() < 1e-6);
    }

    #[test]
    fn spreading_packet_velocity_profile() {
        // closed form: v(q,t) = q (t / (4 m² σ₀⁴)) / (1 + (t / (2 m σ₀²))²)
        let grid = line();
        let psi0 = init_wavefunction(&grid, &Profile::Gaussian(Gaussian::line(0.0, 1.0, 0.0))).unwrap();
        let params = PhysicsParams::free(vec![1.0]);
        let psi = evolve(&psi0, &params, 0.001, 1500).unwrap();
        let t = psi.time();
        let field = VelocityField::new(&psi, &params);
        for q in [-3.0, -1.2, 0.0, 0.5, 2.0, 3.9] {
            let want = q * (t / 4.0) / (1.0 + (t / 2.0) * (t / 2.0));
            let got = field.at(&[q, 0.0])[0];
            assert!((got - want).abs() < 1e-3, "q={q}: {got} vs {want}");
        }
    }
}
