use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::observable::embed;
use super::{max_abs_diff, CMatrix, HilbertError, Result, Space, TOL};

/// Where a unitary came from.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Gate(String),
    /// exp(−iHt) for a Hamiltonian matrix H.
    Hamiltonian { duration: f64 },
}

/// A unitary map on a fixed space, with U†U = 1 checked at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMap {
    space: Space,
    matrix: CMatrix,
    provenance: Provenance,
}

impl UnitaryMap {
    pub fn from_matrix(space: Space, matrix: CMatrix, name: &str) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(HilbertError::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let dev = max_abs_diff(&(matrix.adjoint() * &matrix), &CMatrix::identity(dim, dim));
        if dev > TOL {
            return Err(HilbertError::NotUnitary(dev));
        }
        Ok(UnitaryMap {
            space,
            matrix,
            provenance: Provenance::Gate(name.to_string()),
        })
    }

    /// exp(−iHt), computed from the eigendecomposition of H.
    pub fn from_hamiltonian(space: Space, hamiltonian: &CMatrix, duration: f64) -> Result<Self> {
        let dim = space.dim();
        if hamiltonian.nrows() != dim || hamiltonian.ncols() != dim {
            return Err(HilbertError::DimensionMismatch {
                expected: dim,
                got: hamiltonian.nrows(),
            });
        }
        let dev = max_abs_diff(hamiltonian, &hamiltonian.adjoint());
        if dev > TOL {
            return Err(HilbertError::NotHermitian(dev));
        }
        let eig = SymmetricEigen::new(hamiltonian.clone());
        let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e * duration)),
        ));
        let v = &eig.eigenvectors;
        let matrix = v * phases * v.adjoint();
        let mut u = UnitaryMap::from_matrix(space, matrix, "hamiltonian")?;
        u.provenance = Provenance::Hamiltonian { duration };
        Ok(u)
    }

    pub fn identity(space: Space) -> Self {
        let dim = space.dim();
        UnitaryMap {
            space,
            matrix: CMatrix::identity(dim, dim),
            provenance: Provenance::Gate("identity".into()),
        }
    }

    /// Beam splitter on a two-label space:
    /// |1⟩ → cosθ|1⟩ + sinθ|2⟩, |2⟩ → e^{iφ}(sinθ|1⟩ − cosθ|2⟩).
    /// At θ = π/4, φ = 0 it sends |1⟩ to |+⟩ and |2⟩ to |−⟩.
    pub fn beam_splitter(space: Space, theta: f64, phase: f64) -> Result<Self> {
        if space.dim() != 2 {
            return Err(HilbertError::DimensionMismatch { expected: 2, got: space.dim() });
        }
        let (c, s) = (theta.cos(), theta.sin());
        let e = Complex64::from_polar(1.0, phase);
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(c, 0.0), e * s, Complex64::new(s, 0.0), -e * c],
        );
        UnitaryMap::from_matrix(space, m, "beam-splitter")
    }

    /// Controlled-NOT on a two-factor space of two-level systems; the first
    /// factor's second label is the control.
    pub fn controlled_not(space: Space) -> Result<Self> {
        if space.factor_dims() != [2, 2] {
            return Err(HilbertError::InvalidBasis("entangler needs two two-level factors".into()));
        }
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        #[rustfmt::skip]
        let m = CMatrix::from_row_slice(4, 4, &[
            one, zero, zero, zero,
            zero, one, zero, zero,
            zero, zero, zero, one,
            zero, zero, one, zero,
        ]);
        UnitaryMap::from_matrix(space, m, "cnot")
    }

    /// Lifts a unitary on factor `factor` to the whole space.
    pub fn lift(space: &Space, factor: usize, local: &UnitaryMap) -> Result<Self> {
        let dims = space.factor_dims();
        if factor >= dims.len() {
            return Err(HilbertError::InvalidFactorSubset(vec![factor]));
        }
        if dims[factor] != local.dim() {
            return Err(HilbertError::DimensionMismatch {
                expected: dims[factor],
                got: local.dim(),
            });
        }
        Ok(UnitaryMap {
            space: space.clone(),
            matrix: embed(&dims, factor, &local.matrix),
            provenance: local.provenance.clone(),
        })
    }

    /// `self` after `first`.
    pub fn after(&self, first: &UnitaryMap) -> Result<Self> {
        if self.space != first.space {
            return Err(HilbertError::SpaceMismatch);
        }
        Ok(UnitaryMap {
            space: self.space.clone(),
            matrix: &self.matrix * &first.matrix,
            provenance: Provenance::Gate("composite".into()),
        })
    }

    pub fn adjoint(&self) -> Self {
        UnitaryMap {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::StateVector;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    #[test]
    fn beam_splitter_makes_plus() {
        let space = Space::paths("P");
        let bs = UnitaryMap::beam_splitter(space.clone(), FRAC_PI_4, 0.0).unwrap();
        let one = StateVector::from_label(space, &["1"]).unwrap();
        let out = one.evolve(&bs).unwrap();
        assert!((out.amplitude(0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((out.amplitude(1).re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn round_trip_with_adjoint() {
        let space = Space::paths("P");
        let bs = UnitaryMap::beam_splitter(space.clone(), 0.3, 1.1).unwrap();
        let s = StateVector::from_real(space, &[0.6, 0.8]).unwrap();
        let back = s.evolve(&bs).unwrap().evolve(&bs.adjoint()).unwrap();
        assert!(back.fidelity(&s).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn hamiltonian_evolution_matches_rotation() {
        // H = σx: exp(-iσx t)|1⟩ = cos t|1⟩ − i sin t|2⟩
        let space = Space::paths("P");
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let h = CMatrix::from_row_slice(2, 2, &[zero, one, one, zero]);
        let t = 0.7;
        let u = UnitaryMap::from_hamiltonian(space.clone(), &h, t).unwrap();
        let out = StateVector::from_label(space, &["1"]).unwrap().evolve(&u).unwrap();
        assert!((out.amplitude(0) - Complex64::new(t.cos(), 0.0)).norm() < 1e-12);
        assert!((out.amplitude(1) - Complex64::new(0.0, -t.sin())).norm() < 1e-12);
        assert_eq!(u.provenance(), &Provenance::Hamiltonian { duration: t });
    }

    #[test]
    fn non_unitary_rejected() {
        let m = CMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(
            UnitaryMap::from_matrix(Space::paths("P"), m, "bad"),
            Err(HilbertError::NotUnitary(_))
        ));
    }
}
