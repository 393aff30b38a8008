use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::GridSpec;

/// Forward/inverse FFTs over a 1D or 2D periodic grid.
pub(crate) struct Spectral {
    grid: GridSpec,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.axes().iter().map(|a| planner.plan_fft_forward(a.points)).collect();
        let inverse = grid.axes().iter().map(|a| planner.plan_fft_inverse(a.points)).collect();
        Spectral {
            grid: grid.clone(),
            forward,
            inverse,
        }
    }

    fn run(&self, plans: &[Arc<dyn Fft<f64>>], data: &mut [Complex64]) {
        let axes = self.grid.axes();
        if axes.len() == 1 {
            plans[0].process(data);
            return;
        }
        let (n0, n1) = (axes[0].points, axes[1].points);
        for row in data.chunks_mut(n1) {
            plans[1].process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n0];
        for j in 0..n1 {
            for i in 0..n0 {
                col[i] = data[i * n1 + j];
            }
            plans[0].process(&mut col);
            for i in 0..n0 {
                data[i * n1 + j] = col[i];
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(&self.forward, data);
    }

    /// Inverse transform including the 1/N factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(&self.inverse, data);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Wavenumber vector of each spectral bin, in the same layout as the data.
    pub fn wavenumbers(&self) -> Vec<[f64; 2]> {
        (0..self.grid.len())
            .map(|i| {
                let j = self.grid.multi_index(i);
                let mut k = [0.0; 2];
                for (a, axis) in self.grid.axes().iter().enumerate() {
                    k[a] = axis.wavenumber(j[a]);
                }
                k
            })
            .collect()
    }

    /// ∂f/∂q_axis of real samples `f`, returned real. The Nyquist bin is dropped
    /// so the derivative of real data stays exactly real.
    pub fn derivative_real(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut buf);
        let n_axis = self.grid.axes()[axis].points;
        for (i, v) in buf.iter_mut().enumerate() {
            let j = self.grid.multi_index(i)[axis];
            if j == n_axis / 2 {
                *v = Complex64::new(0.0, 0.0);
            } else {
                let k = self.grid.axes()[axis].wavenumber(j);
                *v *= Complex64::new(0.0, k);
            }
        }
        self.inverse(&mut buf);
        buf.into_iter().map(|v| v.re).collect()
    }
}

/// ⟨p⟩ per axis from the momentum-space distribution |ψ̂(k)|².
pub fn expected_momentum(psi: &super::GridWavefunction) -> Vec<f64> {
    let spec = Spectral::new(psi.grid());
    let mut buf = psi.values().to_vec();
    spec.forward(&mut buf);
    let ks = spec.wavenumbers();
    let total: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
    (0..psi.grid().dim())
        .map(|a| buf.iter().zip(&ks).map(|(v, k)| v.norm_sqr() * k[a]).sum::<f64>() / total)
        .collect()
}
