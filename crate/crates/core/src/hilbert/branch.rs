use super::observable::{born_distribution, collapse};
use super::{Observable, Result, StateVector, IMPOSSIBLE};

/// One world after a measurement: its weight, the outcome seen there and
/// the state inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub outcome: String,
    pub state: StateVector,
}

/// All outcomes of a measurement kept side by side instead of sampling one.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchSet {
    pub branches: Vec<Branch>,
}

impl BranchSet {
    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    pub fn weight_of(&self, outcome: &str) -> f64 {
        self.branches
            .iter()
            .filter(|b| b.outcome == outcome)
            .map(|b| b.weight)
            .sum()
    }
}

/// One branch per possible outcome, weighted by its Born probability and
/// holding the collapsed state. Impossible outcomes produce no branch.
pub fn branch(state: &StateVector, obs: &Observable) -> Result<BranchSet> {
    let table = born_distribution(state, obs)?;
    let mut branches = Vec::new();
    for (label, p) in table.entries {
        if p <= IMPOSSIBLE {
            continue;
        }
        let post = collapse(state, obs, &label)?;
        branches.push(Branch {
            weight: p,
            outcome: label,
            state: post,
        });
    }
    Ok(BranchSet { branches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Space, TOL};

    #[test]
    fn eigenstate_has_single_branch() {
        let s = StateVector::from_label(Space::paths("P"), &["2"]).unwrap();
        let b = branch(&s, &Observable::basis(Space::paths("P"))).unwrap();
        assert_eq!(b.branches.len(), 1);
        assert_eq!(b.branches[0].weight, 1.0);
        assert_eq!(b.branches[0].state, s);
    }

    #[test]
    fn plus_splits_evenly_into_orthogonal_branches() {
        let s = StateVector::from_real(Space::paths("P"), &[1.0, 1.0]).unwrap();
        let b = branch(&s, &Observable::basis(Space::paths("P"))).unwrap();
        assert_eq!(b.branches.len(), 2);
        assert!((b.total_weight() - 1.0).abs() < TOL);
        assert!((b.weight_of("1") - 0.5).abs() < 1e-15);
        let overlap = b.branches[0].state.inner(&b.branches[1].state).unwrap();
        assert!(overlap.norm() < 1e-15);
    }
}
