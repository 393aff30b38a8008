use serde::{Deserialize, Serialize};

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Half-width of the band around zero inside which a Monte-Carlo interval
/// counts as showing no effect.
pub const EQUIVALENCE_MARGIN: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: f64, n: f64, z: f64) -> Interval {
    if n <= 0.0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let p = k / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        lo: (centre - half).max(0.0),
        hi: (centre + half).min(1.0),
    }
}

/// Newcombe hybrid score interval for p₁ − p₂ from independent samples.
pub fn newcombe_difference(k1: f64, n1: f64, k2: f64, n2: f64, z: f64) -> Interval {
    let (p1, p2) = (k1 / n1, k2 / n2);
    let (a, b) = (wilson_interval(k1, n1, z), wilson_interval(k2, n2, z));
    let d = p1 - p2;
    Interval {
        lo: d - ((p1 - a.lo).powi(2) + (b.hi - p2).powi(2)).sqrt(),
        hi: d + ((a.hi - p1).powi(2) + (p2 - b.lo).powi(2)).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn z99_is_the_normal_quantile() {
        let n = Normal::new(0.0, 1.0).unwrap();
        assert!((n.inverse_cdf(0.995) - Z99).abs() < 1e-9);
    }

    #[test]
    fn wilson_reference_values() {
        // closed form at p = 1/2: centre 1/2, half-width z√(n/4 + z²/4)/(n + z²)
        let (n, z) = (100.0, Z99);
        let ci = wilson_interval(50.0, n, z);
        let half = z * (n / 4.0 + z * z / 4.0).sqrt() / (n + z * z);
        assert!((ci.lo - (0.5 - half)).abs() < 1e-12);
        assert!((ci.hi - (0.5 + half)).abs() < 1e-12);
        let zero = wilson_interval(0.0, 1e4, z);
        assert_eq!(zero.lo, 0.0);
        assert!((zero.hi - z * z / (1e4 + z * z)).abs() < 1e-15);
    }

    #[test]
    fn newcombe_covers_the_difference() {
        let ci = newcombe_difference(60.0, 100.0, 40.0, 100.0, Z99);
        assert!(ci.contains(0.2));
        assert!(ci.lo > 0.0 - 1e-9 || ci.contains(0.0));
        let same = newcombe_difference(50.0, 100.0, 50.0, 100.0, Z99);
        assert!((same.lo + same.hi).abs() < 1e-12);
    }
}
