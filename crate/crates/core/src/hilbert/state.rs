use num_complex::Complex64;

use super::{CVector, HilbertError, Result, Space, UnitaryMap, TOL};

/// A unit vector on a labeled basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: Space,
    amps: CVector,
}

impl StateVector {
    /// Requires the amplitudes to have norm 1 within [`TOL`].
    pub fn new(space: Space, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(HilbertError::DimensionMismatch {
                expected: space.dim(),
                got: amps.len(),
            });
        }
        let amps = CVector::from_vec(amps);
        let norm = amps.norm();
        if (norm - 1.0).abs() > TOL {
            return Err(HilbertError::NotNormalized(norm));
        }
        Ok(StateVector { space, amps })
    }

    /// Rescales the amplitudes to unit norm.
    pub fn normalized(space: Space, amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(HilbertError::NotNormalized(norm));
        }
        let scaled = amps.into_iter().map(|a| a / norm).collect();
        StateVector::new(space, scaled)
    }

    pub fn from_real(space: Space, amps: &[f64]) -> Result<Self> {
        StateVector::normalized(space, amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn basis(space: Space, index: usize) -> Result<Self> {
        let dim = space.dim();
        if index >= dim {
            return Err(HilbertError::DimensionMismatch { expected: dim, got: index });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector::new(space, amps)
    }

    pub fn from_label(space: Space, labels: &[&str]) -> Result<Self> {
        let idx = space
            .index_of(labels)
            .ok_or_else(|| HilbertError::InvalidBasis(format!("no basis vector {labels:?}")))?;
        StateVector::basis(space, idx)
    }

    pub(crate) fn from_vector_unchecked(space: Space, amps: CVector) -> Self {
        StateVector { space, amps }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.space != other.space {
            return Err(HilbertError::SpaceMismatch);
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// |⟨self|other⟩|²
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Tensor product in the composite order `self ⊗ other`.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let space = self.space.product(&other.space);
        let amps = self.amps.kronecker(&other.amps);
        StateVector { space, amps }
    }

    pub fn evolve(&self, u: &UnitaryMap) -> Result<StateVector> {
        if u.space() != &self.space {
            if u.dim() != self.dim() {
                return Err(HilbertError::DimensionMismatch {
                    expected: self.dim(),
                    got: u.dim(),
                });
            }
            return Err(HilbertError::SpaceMismatch);
        }
        Ok(StateVector {
            space: self.space.clone(),
            amps: u.matrix() * &self.amps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn tensor_of_basis_states() {
        let a = StateVector::from_label(Space::paths("L"), &["1"]).unwrap();
        let b = StateVector::from_label(Space::paths("R"), &["2"]).unwrap();
        let ab = a.tensor(&b);
        let idx = ab.space().index_of(&["1", "2"]).unwrap();
        assert_eq!(ab.amplitude(idx), c(1.0));
        assert!((ab.norm() - 1.0).abs() < TOL);
    }

    #[test]
    fn tensor_is_linear() {
        let plus = StateVector::from_real(Space::paths("L"), &[1.0, 1.0]).unwrap();
        let one = StateVector::from_label(Space::paths("R"), &["1"]).unwrap();
        let s = plus.tensor(&one);
        let want = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0];
        for (i, w) in want.iter().enumerate() {
            assert!((s.amplitude(i) - c(*w)).norm() < 1e-15);
        }
    }

    #[test]
    fn tensor_dimension_product() {
        let a = StateVector::basis(Space::indexed("a", 2).unwrap(), 0).unwrap();
        let b = StateVector::basis(Space::indexed("b", 3).unwrap(), 1).unwrap();
        assert_eq!(a.tensor(&b).dim(), 6);
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(matches!(
            StateVector::new(Space::paths("L"), vec![c(1.0), c(1.0)]),
            Err(HilbertError::NotNormalized(_))
        ));
        assert!(StateVector::normalized(Space::paths("L"), vec![c(0.0), c(0.0)]).is_err());
    }

    #[test]
    fn evolve_rejects_wrong_dimension() {
        let s = StateVector::basis(Space::indexed("a", 3).unwrap(), 0).unwrap();
        let u = UnitaryMap::identity(Space::paths("L"));
        assert!(matches!(s.evolve(&u), Err(HilbertError::DimensionMismatch { .. })));
    }
}
