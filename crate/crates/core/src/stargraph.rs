//! Star graphs `G_n`: one center vertex joined to `n` rim vertices by unit
//! edges, with a piecewise-constant diffusion coefficient taking finitely
//! many values.
//!
//! Edges are indexed `ℓ = 1..=n` and oriented with `t = 0` at the center and
//! `t = 1` at the rim, where the solution vanishes. Groups are indexed from
//! zero in code; output files print them one-based.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Name of the generator behind every random draw in the crate. Echoed into
/// output headers.
pub const PRNG_NAME: &str = "ChaCha8Rng::seed_from_u64";

/// Coefficient values `(K_1, K_2)` used throughout the experiments.
pub const EXPERIMENT_VALUES: [f64; 2] = [1.0, 2.0];

/// Default group probabilities for the random coefficient.
pub const EXPERIMENT_PROBS: [f64; 2] = [1.0 / 3.0, 2.0 / 3.0];

const PROB_SUM_TOL: f64 = 1e-12;

/// Edge directions `ℓ mod 2π` for `ℓ = 1..=n`.
pub fn vertex_angles(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("vertex_angles needs n >= 1"));
    }
    Ok((1..=n).map(angle_of).collect())
}

pub(crate) fn angle_of(edge: usize) -> f64 {
    (edge as f64).rem_euclid(TAU)
}

/// The deterministic coefficient: 1 on every third edge, 2 elsewhere.
pub fn coefficient_deterministic(edge: usize) -> f64 {
    if edge % 3 == 0 {
        1.0
    } else {
        2.0
    }
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::invalid("at least one group probability is required"));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid("group probabilities must be finite and >= 0"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::invalid(format!(
            "group probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Draws group indices for edges `1..=n`.
///
/// Edge `ℓ` consumes the `ℓ`-th uniform draw of the seeded stream, so the
/// realization at stage `n` is a prefix of the realization at any larger
/// stage.
pub fn random_groups(n: usize, seed: u64, probs: &[f64]) -> Result<Vec<usize>> {
    check_probs(probs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = probs.len() - 1;
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
            // u landed in the rounding gap above the cumulative sum
            (0..=last).rev().find(|&i| probs[i] > 0.0).unwrap_or(last)
        })
        .collect())
}

/// Random coefficient sequence with `P(K = values[i]) = probs[i]`.
pub fn coefficient_random(n: usize, seed: u64, probs: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    if probs.len() != values.len() {
        return Err(Error::invalid("one probability per group value is required"));
    }
    Ok(random_groups(n, seed, probs)?
        .into_iter()
        .map(|g| values[g])
        .collect())
}

/// Where the per-edge coefficient comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSource {
    /// `K_d`: values `(1, 2)`, group 1 on edges with `ℓ ≡ 0 (mod 3)`.
    Deterministic,
    /// `K_p`: i.i.d. draws from `values` with probabilities `probs`.
    Random {
        seed: u64,
        probs: Vec<f64>,
        values: Vec<f64>,
    },
}

impl CoefficientSource {
    pub fn random(seed: u64) -> Self {
        CoefficientSource::Random {
            seed,
            probs: EXPERIMENT_PROBS.to_vec(),
            values: EXPERIMENT_VALUES.to_vec(),
        }
    }

    pub fn group_values(&self) -> Vec<f64> {
        match self {
            CoefficientSource::Deterministic => EXPERIMENT_VALUES.to_vec(),
            CoefficientSource::Random { values, .. } => values.clone(),
        }
    }

    /// Limiting group fractions `s_i`.
    pub fn limit_fractions(&self) -> Vec<f64> {
        match self {
            CoefficientSource::Deterministic => vec![1.0 / 3.0, 2.0 / 3.0],
            CoefficientSource::Random { probs, .. } => probs.clone(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            CoefficientSource::Deterministic => None,
            CoefficientSource::Random { seed, .. } => Some(*seed),
        }
    }
}

/// Geometry and coefficients of one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StarStage {
    angles: Vec<f64>,
    coeffs: Vec<f64>,
    group_of: Vec<usize>,
    group_values: Vec<f64>,
    c_k: f64,
}

impl StarStage {
    /// Builds a star from explicit group assignments.
    ///
    /// Unlike [`build_stage`] this accepts a single edge, in which case the
    /// center carries a natural (flux) condition. The upscaled problem with
    /// one group needs that.
    pub fn from_groups(group_of: Vec<usize>, group_values: Vec<f64>) -> Result<Self> {
        if group_of.is_empty() {
            return Err(Error::invalid("a star needs at least one edge"));
        }
        if group_values.is_empty() {
            return Err(Error::invalid("at least one group value is required"));
        }
        if group_values.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::invalid("coefficient values must be finite and > 0"));
        }
        if let Some(g) = group_of.iter().find(|&&g| g >= group_values.len()) {
            return Err(Error::invalid(format!("group index {g} out of range")));
        }
        let coeffs = group_of.iter().map(|&g| group_values[g]).collect();
        let c_k = group_values.iter().copied().fold(f64::INFINITY, f64::min);
        let angles = (1..=group_of.len()).map(angle_of).collect();
        Ok(StarStage {
            angles,
            coeffs,
            group_of,
            group_values,
            c_k,
        })
    }

    /// Builds a star whose groups are the distinct coefficient values, in
    /// increasing order.
    pub fn from_coefficients(coeffs: &[f64]) -> Result<Self> {
        let mut values: Vec<f64> = coeffs.to_vec();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let group_of = coeffs
            .iter()
            .map(|k| values.iter().position(|v| v == k).unwrap_or(0))
            .collect();
        Self::from_groups(group_of, values)
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of edge `ℓ` (one-based).
    pub fn coeff(&self, edge: usize) -> f64 {
        self.coeffs[edge - 1]
    }

    pub fn group_of(&self) -> &[usize] {
        &self.group_of
    }

    /// Zero-based group of edge `ℓ` (one-based).
    pub fn group(&self, edge: usize) -> usize {
        self.group_of[edge - 1]
    }

    pub fn group_values(&self) -> &[f64] {
        &self.group_values
    }

    pub fn group_count(&self) -> usize {
        self.group_values.len()
    }

    /// Lower bound `c_K` on the coefficient.
    pub fn c_k(&self) -> f64 {
        self.c_k
    }

    /// One-based indices of the edges in `group`.
    pub fn edges_in_group(&self, group: usize) -> impl Iterator<Item = usize> + '_ {
        self.group_of
            .iter()
            .enumerate()
            .filter(move |(_, &g)| g == group)
            .map(|(i, _)| i + 1)
    }

    pub fn group_stats(&self) -> GroupStats {
        let mut counts = vec![0usize; self.group_count()];
        for &g in &self.group_of {
            counts[g] += 1;
        }
        let n = self.n() as f64;
        let fractions = counts.iter().map(|&c| c as f64 / n).collect();
        let kbar = self.coeffs.iter().sum::<f64>() / n;
        GroupStats {
            counts,
            fractions,
            kbar,
        }
    }
}

/// Group sizes at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub counts: Vec<usize>,
    /// `counts / n`, the finite-stage estimate of `s_i`.
    pub fractions: Vec<f64>,
    /// Mean coefficient `(1/n) Σ K(e)`.
    pub kbar: f64,
}

/// Stage `n` of the graph sequence. The center must be interior, so `n >= 2`.
pub fn build_stage(n: usize, source: &CoefficientSource) -> Result<StarStage> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "stage needs n >= 2 edges so the center is interior, got {n}"
        )));
    }
    match source {
        CoefficientSource::Deterministic => {
            let groups = (1..=n)
                .map(|l| if coefficient_deterministic(l) == 1.0 { 0 } else { 1 })
                .collect();
            StarStage::from_groups(groups, EXPERIMENT_VALUES.to_vec())
        }
        CoefficientSource::Random {
            seed,
            probs,
            values,
        } => {
            if probs.len() != values.len() {
                return Err(Error::invalid("one probability per group value is required"));
            }
            StarStage::from_groups(random_groups(n, *seed, probs)?, values.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn angles_wrap_into_circle() {
        assert_eq!(vertex_angles(1).unwrap(), vec![1.0]);
        let a = vertex_angles(7).unwrap();
        assert!((a[6] - (7.0 - TAU)).abs() < 1e-15);
        assert!((a[6] - 0.71681).abs() < 1e-5);
        assert!(a.iter().all(|&x| (0.0..TAU).contains(&x)));
        assert!(vertex_angles(0).is_err());
    }

    #[test]
    fn angles_equidistribute_on_half_circle() {
        let a = vertex_angles(100_000).unwrap();
        let frac = a.iter().filter(|&&x| x <= std::f64::consts::PI).count() as f64 / 1e5;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }

    #[test]
    fn deterministic_rule() {
        assert_eq!(coefficient_deterministic(3), 1.0);
        assert_eq!(coefficient_deterministic(4), 2.0);
        let ones = (1..=1000).filter(|&l| coefficient_deterministic(l) == 1.0).count();
        assert_eq!(ones, 333);
    }

    #[test]
    fn random_rule_contracts() {
        let probs = [1.0 / 3.0, 2.0 / 3.0];
        let a = coefficient_random(1000, 7, &probs, &EXPERIMENT_VALUES).unwrap();
        let b = coefficient_random(1000, 7, &probs, &EXPERIMENT_VALUES).unwrap();
        assert_eq!(a, b);
        let frac = a.iter().filter(|&&k| k == 1.0).count() as f64 / 1000.0;
        assert!((frac - 1.0 / 3.0).abs() < 0.05, "{frac}");

        let all_first = coefficient_random(500, 3, &[1.0, 0.0], &EXPERIMENT_VALUES).unwrap();
        assert!(all_first.iter().all(|&k| k == 1.0));

        assert!(coefficient_random(10, 1, &[0.5, 0.6], &EXPERIMENT_VALUES).is_err());
    }

    #[test]
    fn random_stages_are_nested() {
        let src = CoefficientSource::random(11);
        let small = build_stage(50, &src).unwrap();
        let large = build_stage(200, &src).unwrap();
        assert_eq!(small.coeffs(), &large.coeffs()[..50]);
    }

    #[test]
    fn random_rule_over_many_seeds() {
        let good = (0..100u64)
            .filter(|&seed| {
                let s = build_stage(1000, &CoefficientSource::random(seed)).unwrap();
                (s.group_stats().fractions[0] - 1.0 / 3.0).abs() <= 0.05
            })
            .count();
        assert!(good >= 95, "{good}");
    }

    #[test]
    fn small_deterministic_stage() {
        let s = build_stage(6, &CoefficientSource::Deterministic).unwrap();
        let g = s.group_stats();
        assert_eq!(g.counts, vec![2, 4]);
        assert!((g.fractions[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.fractions[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.edges_in_group(0).collect::<Vec<_>>(), vec![3, 6]);
    }

    #[test]
    fn thousand_edge_deterministic_stage() {
        let s = build_stage(1000, &CoefficientSource::Deterministic).unwrap();
        let g = s.group_stats();
        assert!((g.kbar - 1.667).abs() < 1e-12);
        assert!((g.fractions[0] - 1.0 / 3.0).abs() < 1e-3);
        assert!((g.fractions[1] - 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_degenerate_stages() {
        assert!(build_stage(0, &CoefficientSource::Deterministic).is_err());
        assert!(build_stage(1, &CoefficientSource::Deterministic).is_err());
        assert!(StarStage::from_groups(vec![0], vec![1.0]).is_ok());
        assert!(StarStage::from_groups(vec![0, 2], vec![1.0, 2.0]).is_err());
        assert!(StarStage::from_groups(vec![0], vec![0.0]).is_err());
    }

    #[test]
    fn from_coefficients_orders_groups() {
        let s = StarStage::from_coefficients(&[2.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.group_values(), &[1.0, 2.0]);
        assert_eq!(s.group_of(), &[1, 0, 1]);
        assert_eq!(s.c_k(), 1.0);
    }

    proptest! {
        #[test]
        fn stats_are_consistent(n in 2usize..3000, seed in any::<u64>(), random in any::<bool>()) {
            let src = if random { CoefficientSource::random(seed) } else { CoefficientSource::Deterministic };
            let s = build_stage(n, &src).unwrap();
            let g = s.group_stats();
            prop_assert_eq!(g.counts.iter().sum::<usize>(), n);
            prop_assert!((g.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let kbar: f64 = g.fractions.iter().zip(s.group_values()).map(|(f, k)| f * k).sum();
            prop_assert!((kbar - g.kbar).abs() < 1e-12);
            prop_assert!(g.kbar >= s.c_k());
            for (l, k) in s.coeffs().iter().enumerate() {
                prop_assert_eq!(*k, s.group_values()[s.group_of()[l]]);
            }
            if !random {
                prop_assert!((g.fractions[0] - 1.0 / 3.0).abs() <= 1.0 / n as f64);
            }
        }
    }
}
