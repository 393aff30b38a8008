use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::hilbert::{born_distribution, branch, collapse, measure, Observable, StateVector, IMPOSSIBLE};
use crate::rng;

use super::stats::{wilson_interval, Z99};
use super::{InferenceError, Mode, Result, TestReport, Verdict};

/// Probability that two immediately repeated measurements disagree. With
/// `collapse` the second measurement sees the updated state; without it the
/// Born rule is applied twice to the original state.
pub fn repeatability_probability(state: &StateVector, obs: &Observable, collapse_on: bool) -> Result<f64> {
    let table = born_distribution(state, obs)?;
    if !collapse_on {
        return Ok(1.0 - table.entries.iter().map(|(_, p)| p * p).sum::<f64>());
    }
    let mut differ = 0.0;
    for (label, p) in &table.entries {
        if *p <= IMPOSSIBLE {
            continue;
        }
        let post = collapse(state, obs, label)?;
        let again = born_distribution(&post, obs)?.get(label).unwrap_or(0.0);
        differ += p * (1.0 - again);
    }
    Ok(differ)
}

/// Measures `n` times in immediate succession and counts disagreements.
/// Repeatability holds only when no trial disagrees.
pub fn repeatability_test(
    n: usize,
    state: &StateVector,
    obs: &Observable,
    collapse_on: bool,
    seed: u64,
) -> Result<TestReport> {
    if n == 0 {
        return Err(InferenceError::Invalid("need at least one trial".into()));
    }
    let differ = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let (first, post) = measure(state, obs, &mut r)?;
            let source = if collapse_on { &post } else { state };
            let (second, _) = measure(source, obs, &mut r)?;
            Ok(usize::from(first != second))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();
    let ci = wilson_interval(differ as f64, n as f64, Z99);
    Ok(TestReport {
        test: if collapse_on {
            "repeatability_with_collapse"
        } else {
            "repeatability_without_collapse"
        }
        .into(),
        statistic: differ as f64 / n as f64,
        threshold: 0.0,
        verdict: if differ == 0 { Verdict::Satisfied } else { Verdict::Violated },
        n,
        mode: Mode::MonteCarlo,
        details: json!({
            "collapse": collapse_on,
            "disagreements": differ,
            "expected": repeatability_probability(state, obs, collapse_on)?,
            "ci99": [ci.lo, ci.hi],
        }),
    })
}

/// Agreement between many-worlds branching and sampled collapse for one
/// state and observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquivalenceCheck {
    /// Largest |branch weight − Born probability|.
    pub weight_error: f64,
    /// Largest 1 − fidelity between a branch state and the collapsed state.
    pub state_error: f64,
    /// Pearson statistic of sampled collapse frequencies against the weights.
    pub chi2: f64,
    pub dof: usize,
    pub n: usize,
}

/// Tolerance on weights and states.
pub const EQUIVALENCE_TOL: f64 = 1e-12;

impl EquivalenceCheck {
    /// Standardized Pearson statistic, (χ² − dof)/√(2 dof).
    pub fn z(&self) -> f64 {
        if self.dof == 0 {
            0.0
        } else {
            (self.chi2 - self.dof as f64) / (2.0 * self.dof as f64).sqrt()
        }
    }

    pub fn exact_parts_agree(&self) -> bool {
        self.weight_error <= EQUIVALENCE_TOL && self.state_error <= EQUIVALENCE_TOL
    }

    /// Pools independent checks: errors take the maximum, χ² and degrees of
    /// freedom add.
    pub fn combine(checks: &[EquivalenceCheck]) -> EquivalenceCheck {
        checks.iter().fold(
            EquivalenceCheck {
                weight_error: 0.0,
                state_error: 0.0,
                chi2: 0.0,
                dof: 0,
                n: 0,
            },
            |a, c| EquivalenceCheck {
                weight_error: a.weight_error.max(c.weight_error),
                state_error: a.state_error.max(c.state_error),
                chi2: a.chi2 + c.chi2,
                dof: a.dof + c.dof,
                n: a.n + c.n,
            },
        )
    }

    pub fn to_report(&self) -> TestReport {
        let ok = self.exact_parts_agree() && self.z().abs() <= 3.0;
        TestReport {
            test: "branch_collapse_equivalence".into(),
            statistic: self.z().abs(),
            threshold: 3.0,
            verdict: if ok { Verdict::Satisfied } else { Verdict::Violated },
            n: self.n,
            mode: Mode::MonteCarlo,
            details: json!(self),
        }
    }
}

/// Branches `state` on `obs`, compares branch weights and states with the
/// Born rule and with collapse, then samples `n` collapses.
pub fn branch_collapse_check(state: &StateVector, obs: &Observable, n: usize, seed: u64) -> Result<EquivalenceCheck> {
    if n == 0 {
        return Err(InferenceError::Invalid("need at least one trial".into()));
    }
    let table = born_distribution(state, obs)?;
    let branches = branch(state, obs)?;
    let mut weight_error = 0.0f64;
    let mut state_error = 0.0f64;
    for (label, p) in &table.entries {
        weight_error = weight_error.max((branches.weight_of(label) - p).abs());
    }
    for b in &branches.branches {
        let c = collapse(state, obs, &b.outcome)?;
        state_error = state_error.max(1.0 - c.fidelity(&b.state)?);
    }
    let k = obs.outcomes().len();
    let counts = (0..n)
        .into_par_iter()
        .map(|i| measure(state, obs, &mut rng::stream(seed, i as u64)).map(|(idx, _)| idx))
        .collect::<std::result::Result<Vec<usize>, _>>()?
        .into_iter()
        .fold(vec![0usize; k], |mut c, idx| {
            c[idx] += 1;
            c
        });
    let mut chi2 = 0.0;
    let mut possible = 0usize;
    for (idx, b) in obs.outcomes().iter().enumerate() {
        let w = branches.weight_of(&b.label);
        if w <= IMPOSSIBLE {
            continue;
        }
        possible += 1;
        let expected = w * n as f64;
        chi2 += (counts[idx] as f64 - expected).powi(2) / expected;
    }
    Ok(EquivalenceCheck {
        weight_error,
        state_error,
        chi2,
        dof: possible.saturating_sub(1),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Space;

    fn plus() -> StateVector {
        StateVector::from_real(Space::paths("P"), &[1.0, 1.0]).unwrap()
    }

    fn path_obs() -> Observable {
        Observable::basis(Space::paths("P"))
    }

    #[test]
    fn collapse_makes_measurements_repeatable() {
        let rep = repeatability_test(10_000, &plus(), &path_obs(), true, 1).unwrap();
        assert_eq!(rep.statistic, 0.0);
        assert_eq!(rep.verdict, Verdict::Satisfied);
    }

    #[test]
    fn without_collapse_half_the_repeats_disagree() {
        let n = 10_000;
        let rep = repeatability_test(n, &plus(), &path_obs(), false, 1).unwrap();
        // oracle: 1 − Σp² = 1/2, binomial σ = √(1/4n)
        assert!((rep.statistic - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
        assert_eq!(rep.verdict, Verdict::Violated);
        assert!((rep.details["expected"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eigenstates_repeat_either_way() {
        let e = StateVector::basis(Space::paths("P"), 1).unwrap();
        for c in [true, false] {
            assert_eq!(repeatability_test(2000, &e, &path_obs(), c, 3).unwrap().statistic, 0.0);
            assert_eq!(repeatability_probability(&e, &path_obs(), c).unwrap(), 0.0);
        }
    }

    #[test]
    fn branching_matches_collapse() {
        let s = StateVector::from_real(Space::indexed("Q", 3).unwrap(), &[0.2, 0.5, 0.7]).unwrap();
        let obs = Observable::basis(Space::indexed("Q", 3).unwrap());
        let c = branch_collapse_check(&s, &obs, 50_000, 8).unwrap();
        assert!(c.exact_parts_agree());
        assert_eq!(c.dof, 2);
        assert!(c.z().abs() <= 3.0, "{}", c.z());
        assert_eq!(c.to_report().verdict, Verdict::Satisfied);
    }

    #[test]
    fn pooled_checks_add_degrees_of_freedom() {
        let c = EquivalenceCheck {
            weight_error: 1e-15,
            state_error: 0.0,
            chi2: 3.0,
            dof: 2,
            n: 10,
        };
        let p = EquivalenceCheck::combine(&[c, c]);
        assert_eq!((p.chi2, p.dof, p.n), (6.0, 4, 20));
        assert!((p.z() - 2.0 / 8f64.sqrt()).abs() < 1e-15);
    }
}
