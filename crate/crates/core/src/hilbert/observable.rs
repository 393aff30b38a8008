use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;

use super::{max_abs_diff, CMatrix, HilbertError, Result, Space, StateVector, IMPOSSIBLE, EIGEN_MERGE_TOL, TOL};

/// One eigenvalue of an observable with its spectral projector.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub label: String,
    pub value: f64,
    pub projector: CMatrix,
}

/// A Hermitian operator given by its spectral decomposition.
///
/// Projectors are idempotent, mutually orthogonal and sum to the identity.
/// Eigenvalues closer than [`EIGEN_MERGE_TOL`] (relative) share one
/// eigenspace, so degenerate outcomes project onto the whole eigenspace.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    space: Space,
    matrix: CMatrix,
    outcomes: Vec<Outcome>,
}

impl Observable {
    /// Diagonalizes a Hermitian matrix. Outcomes are labelled by their eigenvalue.
    pub fn from_hermitian(space: Space, matrix: CMatrix) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(HilbertError::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let dev = max_abs_diff(&matrix, &matrix.adjoint());
        if dev > TOL {
            return Err(HilbertError::NotHermitian(dev));
        }
        let eig = SymmetricEigen::new(matrix.clone());
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
        for &i in &order {
            let v = eig.eigenvalues[i];
            match groups.last_mut() {
                Some((vals, idx)) if (v - vals[vals.len() - 1]).abs() <= EIGEN_MERGE_TOL * scale => {
                    vals.push(v);
                    idx.push(i);
                }
                _ => groups.push((vec![v], vec![i])),
            }
        }
        let outcomes = groups
            .into_iter()
            .map(|(vals, idx)| {
                let value = vals.iter().sum::<f64>() / vals.len() as f64;
                let mut p = CMatrix::zeros(dim, dim);
                for i in idx {
                    let v = eig.eigenvectors.column(i);
                    p += v * v.adjoint();
                }
                Outcome {
                    label: format_value(value),
                    value,
                    projector: p,
                }
            })
            .collect();
        Ok(Observable { space, matrix, outcomes })
    }

    /// Builds an observable from labelled spectral projectors, validating them.
    pub fn from_projectors(space: Space, parts: Vec<(String, f64, CMatrix)>) -> Result<Self> {
        let dim = space.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        let mut matrix = CMatrix::zeros(dim, dim);
        for (k, (label, value, p)) in parts.iter().enumerate() {
            if p.nrows() != dim || p.ncols() != dim {
                return Err(HilbertError::DimensionMismatch { expected: dim, got: p.nrows() });
            }
            if max_abs_diff(p, &p.adjoint()) > TOL {
                return Err(HilbertError::InvalidProjectors(format!("`{label}` is not Hermitian")));
            }
            if max_abs_diff(&(p * p), p) > TOL {
                return Err(HilbertError::InvalidProjectors(format!("`{label}` is not idempotent")));
            }
            for (other_label, _, q) in &parts[k + 1..] {
                if (p * q).iter().any(|z| z.norm() > TOL) {
                    return Err(HilbertError::InvalidProjectors(format!(
                        "`{label}` and `{other_label}` are not orthogonal"
                    )));
                }
                if other_label == label {
                    return Err(HilbertError::InvalidProjectors(format!("duplicate label `{label}`")));
                }
            }
            sum += p;
            matrix += p * Complex64::new(*value, 0.0);
        }
        if max_abs_diff(&sum, &CMatrix::identity(dim, dim)) > TOL {
            return Err(HilbertError::InvalidProjectors("projectors do not sum to identity".into()));
        }
        let outcomes = parts
            .into_iter()
            .map(|(label, value, projector)| Outcome { label, value, projector })
            .collect();
        Ok(Observable { space, matrix, outcomes })
    }

    /// Measurement in the computational basis; outcome labels are the basis labels
    /// and values their ordinal plus one.
    pub fn basis(space: Space) -> Self {
        let dim = space.dim();
        let parts = (0..dim)
            .map(|i| {
                let mut p = CMatrix::zeros(dim, dim);
                p[(i, i)] = Complex64::new(1.0, 0.0);
                (space.label(i).name, (i + 1) as f64, p)
            })
            .collect();
        Observable::from_projectors(space, parts).expect("basis projectors are valid")
    }

    /// Rank-one projective measurement onto an orthonormal set of states.
    pub fn from_states(space: Space, states: Vec<(String, StateVector)>) -> Result<Self> {
        let parts = states
            .into_iter()
            .enumerate()
            .map(|(i, (label, s))| {
                let v = s.amplitudes();
                (label, (i + 1) as f64, v * v.adjoint())
            })
            .collect();
        Observable::from_projectors(space, parts)
    }

    /// Lifts an observable on factor `factor` of `space` to the whole space.
    pub fn lift(space: &Space, factor: usize, local: &Observable) -> Result<Self> {
        let dims = space.factor_dims();
        if factor >= dims.len() {
            return Err(HilbertError::InvalidFactorSubset(vec![factor]));
        }
        if dims[factor] != local.space.dim() {
            return Err(HilbertError::DimensionMismatch {
                expected: dims[factor],
                got: local.space.dim(),
            });
        }
        let parts = local
            .outcomes
            .iter()
            .map(|o| (o.label.clone(), o.value, embed(&dims, factor, &o.projector)))
            .collect();
        Observable::from_projectors(space.clone(), parts)
    }

    /// Joint measurement of two commuting observables on `a ⊗ b`.
    /// Outcome labels are `"{a},{b}"`.
    pub fn tensor(a: &Observable, b: &Observable) -> Self {
        let space = a.space.product(&b.space);
        let mut parts = Vec::new();
        for oa in &a.outcomes {
            for ob in &b.outcomes {
                parts.push((
                    format!("{},{}", oa.label, ob.label),
                    (parts.len() + 1) as f64,
                    oa.projector.kronecker(&ob.projector),
                ));
            }
        }
        Observable::from_projectors(space, parts).expect("tensor of valid projectors is valid")
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o.label == label)
    }

    pub fn labels(&self) -> Vec<String> {
        self.outcomes.iter().map(|o| o.label.clone()).collect()
    }
}

/// Embeds a single-factor operator as `1 ⊗ … ⊗ op ⊗ … ⊗ 1`.
pub(crate) fn embed(dims: &[usize], factor: usize, op: &CMatrix) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let piece = if k == factor { op.clone() } else { CMatrix::identity(d, d) };
        out = out.kronecker(&piece);
    }
    out
}

fn format_value(v: f64) -> String {
    let r = (v * 1e9).round() / 1e9;
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

/// Born probabilities of every outcome, in the observable's outcome order.
#[derive(Clone, Debug, PartialEq)]
pub struct BornTable {
    pub entries: Vec<(String, f64)>,
}

impl BornTable {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries.iter().find(|(l, _)| l == label).map(|(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

fn check_space(state: &StateVector, obs: &Observable) -> Result<()> {
    if state.dim() != obs.space.dim() {
        return Err(HilbertError::DimensionMismatch {
            expected: obs.space.dim(),
            got: state.dim(),
        });
    }
    Ok(())
}

fn projection_weight(state: &StateVector, p: &CMatrix) -> f64 {
    let v = state.amplitudes();
    (v.adjoint() * p * v)[(0, 0)].re.max(0.0)
}

/// Probability of each eigenvalue: ‖P_I ψ‖².
pub fn born_distribution(state: &StateVector, obs: &Observable) -> Result<BornTable> {
    check_space(state, obs)?;
    let entries = obs
        .outcomes
        .iter()
        .map(|o| (o.label.clone(), projection_weight(state, &o.projector)))
        .collect();
    Ok(BornTable { entries })
}

fn collapse_index(state: &StateVector, obs: &Observable, index: usize) -> Result<StateVector> {
    let o = &obs.outcomes[index];
    let projected = &o.projector * state.amplitudes();
    let norm = projected.norm();
    let probability = norm * norm;
    if probability <= IMPOSSIBLE {
        return Err(HilbertError::ImpossibleOutcome {
            label: o.label.clone(),
            probability,
        });
    }
    Ok(StateVector::from_vector_unchecked(
        state.space().clone(),
        projected / Complex64::new(norm, 0.0),
    ))
}

/// Projects onto the outcome's eigenspace and renormalizes (Lüders rule).
pub fn collapse(state: &StateVector, obs: &Observable, outcome: &str) -> Result<StateVector> {
    check_space(state, obs)?;
    let index = obs
        .outcome_index(outcome)
        .ok_or_else(|| HilbertError::UnknownOutcome(outcome.to_string()))?;
    collapse_index(state, obs, index)
}

/// Samples an outcome from the Born distribution and returns it with the
/// updated state. Returns the outcome's index in `obs.outcomes()`.
pub fn measure<R: Rng + ?Sized>(
    state: &StateVector,
    obs: &Observable,
    rng: &mut R,
) -> Result<(usize, StateVector)> {
    let table = born_distribution(state, obs)?;
    let total = table.total();
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, (_, p)) in table.entries.iter().enumerate() {
        if *p <= IMPOSSIBLE {
            continue;
        }
        acc += p;
        chosen = Some(i);
        if u < acc {
            break;
        }
    }
    let index = chosen.expect("a normalized state has at least one possible outcome");
    let post = collapse_index(state, obs, index)?;
    Ok((index, post))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn plus() -> StateVector {
        StateVector::from_real(Space::paths("P"), &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn eigenstate_is_certain() {
        let obs = Observable::basis(Space::paths("P"));
        let one = StateVector::from_label(Space::paths("P"), &["1"]).unwrap();
        let t = born_distribution(&one, &obs).unwrap();
        assert_eq!(t.get("1"), Some(1.0));
        assert_eq!(t.get("2"), Some(0.0));
        assert_eq!(collapse(&one, &obs, "1").unwrap(), one);
    }

    #[test]
    fn plus_is_even() {
        let obs = Observable::basis(Space::paths("P"));
        let t = born_distribution(&plus(), &obs).unwrap();
        assert!((t.get("1").unwrap() - 0.5).abs() < 1e-15);
        assert!((t.total() - 1.0).abs() < TOL);
        let post = collapse(&plus(), &obs, "1").unwrap();
        assert!((post.amplitude(0).re - 1.0).abs() < 1e-15);
        assert!(post.amplitude(1).norm() < 1e-15);
    }

    #[test]
    fn impossible_outcome_is_an_error() {
        let obs = Observable::basis(Space::paths("P"));
        let one = StateVector::from_label(Space::paths("P"), &["1"]).unwrap();
        assert!(matches!(
            collapse(&one, &obs, "2"),
            Err(HilbertError::ImpossibleOutcome { .. })
        ));
        assert!(matches!(collapse(&one, &obs, "7"), Err(HilbertError::UnknownOutcome(_))));
    }

    #[test]
    fn degenerate_eigenvalues_merge() {
        let space = Space::indexed("q", 3).unwrap();
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(1, 1)] = Complex64::new(1.0 + 1e-12, 0.0);
        m[(2, 2)] = Complex64::new(-1.0, 0.0);
        let obs = Observable::from_hermitian(space.clone(), m).unwrap();
        assert_eq!(obs.outcomes().len(), 2);
        // Lüders: collapse keeps the relative amplitudes inside the eigenspace
        let s = StateVector::from_real(space, &[1.0, 2.0, 3.0]).unwrap();
        let label = obs.outcomes()[1].label.clone();
        let post = collapse(&s, &obs, &label).unwrap();
        assert!((post.amplitude(1).re / post.amplitude(0).re - 2.0).abs() < 1e-9);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            Observable::from_hermitian(Space::paths("P"), m),
            Err(HilbertError::NotHermitian(_))
        ));
    }

    #[test]
    fn projectors_must_cover_identity() {
        let mut p = CMatrix::zeros(2, 2);
        p[(0, 0)] = Complex64::new(1.0, 0.0);
        assert!(Observable::from_projectors(Space::paths("P"), vec![("a".into(), 1.0, p)]).is_err());
    }

    #[test]
    fn measure_then_remeasure_repeats() {
        let obs = Observable::basis(Space::paths("P"));
        let mut r = rng::stream(11, 0);
        for _ in 0..1000 {
            let (i, post) = measure(&plus(), &obs, &mut r).unwrap();
            let (j, _) = measure(&post, &obs, &mut r).unwrap();
            assert_eq!(i, j);
        }
    }

    #[test]
    fn measure_frequency_within_three_sigma() {
        let obs = Observable::basis(Space::paths("P"));
        let n = 100_000;
        let mut r = rng::stream(5, 0);
        let ones = (0..n).filter(|_| measure(&plus(), &obs, &mut r).unwrap().0 == 0).count();
        let f = ones as f64 / n as f64;
        assert!((f - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "freq {f}");
    }

    #[test]
    fn measure_rejects_dimension_mismatch() {
        let obs = Observable::basis(Space::indexed("q", 3).unwrap());
        let mut r = rng::stream(1, 0);
        assert!(measure(&plus(), &obs, &mut r).is_err());
    }
}
