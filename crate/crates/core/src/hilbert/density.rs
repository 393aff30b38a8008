use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::space::validate_subset;
use super::{max_abs_diff, CMatrix, HilbertError, Result, Space, StateVector, UnitaryMap, TOL};

/// Smallest eigenvalue tolerated before a matrix stops counting as positive.
const MIN_EIGENVALUE: f64 = -1e-10;

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: Space,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(space: Space, matrix: CMatrix) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(HilbertError::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        let dev = max_abs_diff(&matrix, &matrix.adjoint());
        if dev > TOL {
            return Err(HilbertError::InvalidDensity(format!("not Hermitian ({dev:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(HilbertError::InvalidDensity(format!("trace {tr}")));
        }
        let rho = DensityMatrix { space, matrix };
        let min = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < MIN_EIGENVALUE {
            return Err(HilbertError::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// |ψ⟩⟨ψ|
    pub fn pure(state: &StateVector) -> Self {
        let v = state.amplitudes();
        DensityMatrix {
            space: state.space().clone(),
            matrix: v * v.adjoint(),
        }
    }

    /// Σ w_k |ψ_k⟩⟨ψ_k| with weights summing to one.
    pub fn mixture(parts: &[(f64, StateVector)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| HilbertError::InvalidDensity("empty mixture".into()))?;
        let space = first.1.space().clone();
        let dim = space.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (w, s) in parts {
            if s.space() != &space {
                return Err(HilbertError::SpaceMismatch);
            }
            if *w < 0.0 {
                return Err(HilbertError::InvalidDensity(format!("negative weight {w}")));
            }
            let v = s.amplitudes();
            m += v * v.adjoint() * Complex64::new(*w, 0.0);
        }
        DensityMatrix::from_matrix(space, m)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Tr ρ²
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ|ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect()
    }

    /// U ρ U†
    pub fn conjugate(&self, u: &UnitaryMap) -> Result<Self> {
        if u.space() != &self.space {
            return Err(HilbertError::SpaceMismatch);
        }
        Ok(DensityMatrix {
            space: self.space.clone(),
            matrix: u.matrix() * &self.matrix * u.matrix().adjoint(),
        })
    }

    /// Traces out every factor not listed in `keep` (ascending factor indices).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let nf = self.space.factors().len();
        validate_subset(keep, nf)?;
        let kept_space = self.space.subspace(keep)?;
        let traced: Vec<usize> = (0..nf).filter(|k| !keep.contains(k)).collect();
        let dims = self.space.factor_dims();
        let dim = self.space.dim();
        let kd = kept_space.dim();

        let split = |idx: usize| -> (usize, usize) {
            let digits = self.space.digits(idx);
            let k = keep.iter().fold(0, |acc, &f| acc * dims[f] + digits[f]);
            let t = traced.iter().fold(0, |acc, &f| acc * dims[f] + digits[f]);
            (k, t)
        };
        let parts: Vec<(usize, usize)> = (0..dim).map(split).collect();

        let mut out = CMatrix::zeros(kd, kd);
        for r in 0..dim {
            for c in 0..dim {
                if parts[r].1 == parts[c].1 {
                    out[(parts[r].0, parts[c].0)] += self.matrix[(r, c)];
                }
            }
        }
        Ok(DensityMatrix {
            space: kept_space,
            matrix: out,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> StateVector {
        let s = Space::paths("L").product(&Space::paths("R"));
        StateVector::from_real(s, &[1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn product_state_reduces_to_pure() {
        let a = StateVector::from_label(Space::paths("L"), &["1"]).unwrap();
        let b = StateVector::from_label(Space::paths("R"), &["2"]).unwrap();
        let rho = DensityMatrix::pure(&a.tensor(&b));
        let red = rho.partial_trace(&[0]).unwrap();
        assert!(max_abs_diff(red.matrix(), DensityMatrix::pure(&a).matrix()) < 1e-15);
        assert!((red.purity() - 1.0).abs() < TOL);
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let red = DensityMatrix::pure(&bell()).partial_trace(&[0]).unwrap();
        let half = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        assert!(max_abs_diff(red.matrix(), &half) < 1e-15);
        assert!((red.purity() - 0.5).abs() < TOL);
        assert!((red.trace() - 1.0).abs() < TOL);
    }

    #[test]
    fn keep_everything_is_identity() {
        let rho = DensityMatrix::pure(&bell());
        assert_eq!(rho.partial_trace(&[0, 1]).unwrap(), rho);
    }

    #[test]
    fn invalid_subset_rejected() {
        let rho = DensityMatrix::pure(&bell());
        assert!(rho.partial_trace(&[]).is_err());
        assert!(rho.partial_trace(&[3]).is_err());
    }

    #[test]
    fn maximally_mixed_purity_is_half() {
        let half = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        let rho = DensityMatrix::from_matrix(Space::paths("P"), half).unwrap();
        assert!((rho.purity() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_trace_and_negative_spectrum() {
        let m = CMatrix::identity(2, 2);
        assert!(DensityMatrix::from_matrix(Space::paths("P"), m).is_err());
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(DensityMatrix::from_matrix(Space::paths("P"), m).is_err());
    }

    #[test]
    fn entangler_lowers_reduced_purity() {
        let space = Space::paths("L").product(&Space::paths("R"));
        let plus = StateVector::from_real(Space::paths("L"), &[1.0, 1.0]).unwrap();
        let zero = StateVector::from_label(Space::paths("R"), &["1"]).unwrap();
        let rho = DensityMatrix::pure(&plus.tensor(&zero));
        let before = rho.partial_trace(&[0]).unwrap().purity();
        let u = UnitaryMap::controlled_not(space).unwrap();
        let after_rho = rho.conjugate(&u).unwrap();
        assert!((after_rho.purity() - rho.purity()).abs() < TOL);
        let after = after_rho.partial_trace(&[0]).unwrap().purity();
        assert!(after < before - 1e-6);
    }
}
