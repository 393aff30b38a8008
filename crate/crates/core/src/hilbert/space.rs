use super::{HilbertError, Result};

/// One basis vector of a space: its name and its ordinal in the declared order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub name: String,
    pub index: usize,
}

/// A named tensor factor with an ordered list of basis labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    name: String,
    labels: Vec<String>,
}

impl Factor {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }
}

/// An ordered basis, possibly a tensor product of factors.
///
/// Composite basis vectors are ordered lexicographically with the first
/// factor most significant, so `(1,1), (1,2), (2,1), (2,2)` for two qubits.
/// The ordering is fixed at construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Space {
    factors: Vec<Factor>,
}

impl Space {
    pub fn new(name: &str, labels: &[&str]) -> Result<Self> {
        if labels.is_empty() {
            return Err(HilbertError::InvalidBasis(format!("factor `{name}` has no labels")));
        }
        let mut seen = std::collections::HashSet::new();
        for l in labels {
            if !seen.insert(*l) {
                return Err(HilbertError::InvalidBasis(format!("duplicate label `{l}` in `{name}`")));
            }
        }
        Ok(Space {
            factors: vec![Factor {
                name: name.to_string(),
                labels: labels.iter().map(|s| s.to_string()).collect(),
            }],
        })
    }

    /// Two-path space with labels `1` and `2`.
    pub fn paths(name: &str) -> Self {
        Space::new(name, &["1", "2"]).expect("static labels are valid")
    }

    /// Basis of size `dim` labelled `0..dim`.
    pub fn indexed(name: &str, dim: usize) -> Result<Self> {
        let labels: Vec<String> = (0..dim).map(|i| i.to_string()).collect();
        let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        Space::new(name, &refs)
    }

    pub fn product(&self, other: &Space) -> Space {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Space { factors }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor_dims(&self) -> Vec<usize> {
        self.factors.iter().map(Factor::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(Factor::dim).product()
    }

    /// Per-factor label indices of a composite index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let dims = self.factor_dims();
        let mut out = vec![0; dims.len()];
        for (k, d) in dims.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    pub fn compose(&self, digits: &[usize]) -> usize {
        self.factor_dims().iter().zip(digits).fold(0, |acc, (d, x)| acc * d + x)
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        let digits = self.digits(index);
        let parts: Vec<&str> = digits
            .iter()
            .zip(&self.factors)
            .map(|(&i, f)| f.labels[i].as_str())
            .collect();
        BasisLabel {
            name: parts.join(","),
            index,
        }
    }

    pub fn labels(&self) -> Vec<BasisLabel> {
        (0..self.dim()).map(|i| self.label(i)).collect()
    }

    /// Index of the composite basis vector with the given per-factor labels.
    pub fn index_of(&self, labels: &[&str]) -> Option<usize> {
        if labels.len() != self.factors.len() {
            return None;
        }
        let mut digits = Vec::with_capacity(labels.len());
        for (l, f) in labels.iter().zip(&self.factors) {
            digits.push(f.labels.iter().position(|x| x == l)?);
        }
        Some(self.compose(&digits))
    }

    /// The sub-space made of the listed factors, in the listed order.
    pub fn subspace(&self, keep: &[usize]) -> Result<Space> {
        validate_subset(keep, self.factors.len())?;
        Ok(Space {
            factors: keep.iter().map(|&k| self.factors[k].clone()).collect(),
        })
    }
}

pub(crate) fn validate_subset(keep: &[usize], n: usize) -> Result<()> {
    let ok = !keep.is_empty() && keep.iter().all(|&k| k < n) && keep.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(HilbertError::InvalidFactorSubset(keep.to_vec()))
    }
}
