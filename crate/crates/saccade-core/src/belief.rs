//! Probability vector over the digit classes, with entropy, log-odds update
//! and the stopping predicate of the exploration loop.
//!
//! Entropies are in nats throughout; the stopping thresholds (1e-4, 1e-5)
//! are natural-log values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Posterior over the latent classes. Components are non-negative and sum
/// to 1 within 1e-12; all updates run in log domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    pub fn uniform(n_classes: usize) -> Self {
        Belief {
            probs: vec![1.0 / n_classes as f64; n_classes],
        }
    }

    /// Builds a belief from raw probabilities, validating normalization.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Argument("belief needs at least one class".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Numeric("belief components must be finite and >= 0".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("belief sums to {sum}, not 1")));
        }
        Ok(Belief { probs })
    }

    /// Normalizes a vector of log-weights into a belief (softmax).
    pub fn from_log_weights(log_w: &[f64]) -> Result<Self> {
        if log_w.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Numeric("log weights must not be NaN or +inf".into()));
        }
        let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::Numeric("all log weights are -inf".into()));
        }
        let mut probs: Vec<f64> = log_w.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        Ok(Belief { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_classes(&self) -> usize {
        self.probs.len()
    }

    /// Shannon entropy in nats, with 0 * log 0 taken as 0.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    /// Bayes update in log-odds form: softmax(log self + log_q).
    ///
    /// Zero-probability components stay at zero; the additive normalizer of
    /// `log_q` cancels in the softmax.
    pub fn log_odds_update(&self, log_q: &[f64]) -> Result<Belief> {
        if log_q.len() != self.probs.len() {
            return Err(Error::Argument(format!(
                "log_q has {} components, belief has {}",
                log_q.len(),
                self.probs.len()
            )));
        }
        if log_q.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("log_q must be finite".into()));
        }
        let odd: Vec<f64> = self
            .probs
            .iter()
            .zip(log_q)
            .map(|(&p, &lq)| if p > 0.0 { p.ln() + lq } else { f64::NEG_INFINITY })
            .collect();
        Self::from_log_weights(&odd)
    }

    /// Stop when enough evidence is gathered: entropy at or below `h_ref`.
    pub fn should_stop(&self, h_ref: f64) -> Result<bool> {
        if !(h_ref >= 0.0) {
            return Err(Error::Argument(format!("h_ref must be >= 0, got {h_ref}")));
        }
        Ok(self.entropy() <= h_ref)
    }

    /// Index of the most probable class (smallest index wins ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LN_10: f64 = 2.302585092994046;
    const LN_2: f64 = 0.6931471805599453;

    fn one_hot(n: usize, k: usize) -> Belief {
        let mut p = vec![0.0; n];
        p[k] = 1.0;
        Belief::from_probs(p).unwrap()
    }

    #[test]
    fn entropy_uniform_is_ln_10() {
        assert!((Belief::uniform(10).entropy() - LN_10).abs() < 1e-12);
    }

    #[test]
    fn entropy_one_hot_is_zero() {
        assert_eq!(one_hot(10, 3).entropy(), 0.0);
    }

    #[test]
    fn entropy_two_way_split_is_ln_2() {
        let mut p = vec![0.0; 10];
        p[0] = 0.5;
        p[1] = 0.5;
        let b = Belief::from_probs(p).unwrap();
        assert!((b.entropy() - LN_2).abs() < 1e-12);
    }

    #[test]
    fn equal_log_q_leaves_belief_unchanged() {
        let b = Belief::from_probs(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let updated = b.log_odds_update(&[7.5; 4]).unwrap();
        for (a, c) in b.probs().iter().zip(updated.probs()) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn strong_log_q_concentrates_posterior() {
        let b = Belief::uniform(10);
        let mut log_q = vec![-50.0; 10];
        log_q[5] = 0.0;
        let updated = b.log_odds_update(&log_q).unwrap();
        assert!(updated.probs()[5] > 0.999999);
        assert_eq!(updated.argmax(), 5);
    }

    #[test]
    fn chained_updates_equal_summed_update() {
        // Direct computation: applying q1 then q2 must match applying q1+q2.
        let b = Belief::from_probs(vec![0.25, 0.25, 0.3, 0.2]).unwrap();
        let q1 = [0.4, -1.2, 0.05, 2.0];
        let q2 = [-0.3, 0.8, 1.1, -2.5];
        let summed: Vec<f64> = q1.iter().zip(&q2).map(|(a, b)| a + b).collect();

        let chained = b.log_odds_update(&q1).unwrap().log_odds_update(&q2).unwrap();
        let one_shot = b.log_odds_update(&summed).unwrap();
        for (a, c) in chained.probs().iter().zip(one_shot.probs()) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_prior_dominates() {
        let b = one_hot(10, 3);
        let mut log_q = vec![0.0; 10];
        log_q[7] = 30.0; // strong evidence elsewhere cannot revive a zero prior
        let updated = b.log_odds_update(&log_q).unwrap();
        assert_eq!(updated.probs()[3], 1.0);
        assert_eq!(updated.probs()[7], 0.0);
    }

    #[test]
    fn should_stop_threshold_cases() {
        assert!(one_hot(10, 0).should_stop(1e-4).unwrap());
        assert!(!Belief::uniform(10).should_stop(1e-4).unwrap());
        assert!(matches!(
            Belief::uniform(10).should_stop(-0.1),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn non_finite_log_q_rejected() {
        let b = Belief::uniform(3);
        assert!(matches!(
            b.log_odds_update(&[0.0, f64::NAN, 0.0]),
            Err(Error::Numeric(_))
        ));
        assert!(matches!(
            b.log_odds_update(&[0.0, f64::INFINITY, 0.0]),
            Err(Error::Numeric(_))
        ));
    }

    proptest! {
        #[test]
        fn entropy_invariant_under_permutation(mut probs in proptest::collection::vec(0.0f64..1.0, 10)) {
            let sum: f64 = probs.iter().sum();
            prop_assume!(sum > 1e-6);
            for p in &mut probs {
                *p /= sum;
            }
            let b = Belief::from_log_weights(&probs.iter().map(|p| if *p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect::<Vec<_>>());
            let b = match b { Ok(b) => b, Err(_) => return Ok(()) };
            let mut shuffled = b.probs().to_vec();
            shuffled.reverse();
            let b2 = Belief { probs: shuffled };
            prop_assert!((b.entropy() - b2.entropy()).abs() < 1e-9);
        }

        #[test]
        fn update_stays_normalized(probs in proptest::collection::vec(1e-6f64..1.0, 10),
                                   log_q in proptest::collection::vec(-40.0f64..40.0, 10)) {
            let sum: f64 = probs.iter().sum();
            let b = Belief::from_probs(probs.iter().map(|p| p / sum).collect()).unwrap();
            let updated = b.log_odds_update(&log_q).unwrap();
            let total: f64 = updated.probs().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(updated.probs().iter().all(|p| p.is_finite() && *p >= 0.0));
            // zero log_q preserves entropy
            let same = b.log_odds_update(&vec![0.0; 10]).unwrap();
            prop_assert!((same.entropy() - b.entropy()).abs() < 1e-9);
        }
    }
}
