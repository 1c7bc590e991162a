//! Gaze-selection strategies over the dynamic actions set: the two-steps
//! ahead predictive policy, a Monte-Carlo expected-entropy oracle, the
//! precomputed per-class saliency maps and a uniform random baseline.
//!
//! Every policy only ever returns an available gaze, and consuming a gaze
//! removes exactly its unread ancestor viewpoints (inhibition of return).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::haar::{CoeffTriplet, Geometry, Viewpoint};
use crate::models::ModelBank;

/// Which gaze-selection strategy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    /// Point-estimate look-ahead (argmax guess by default; `sampled` draws
    /// the guess from the belief instead).
    Predictive { sampled: bool },
    /// Table lookup in the precomputed per-class saliency maps.
    Saliency,
    /// Uniform draw over the available gazes.
    Random,
    /// Seeded Monte-Carlo minimization of expected posterior entropy.
    OracleMc { n_samples: usize },
}

impl PolicyKind {
    pub fn predictive() -> Self {
        PolicyKind::Predictive { sampled: false }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicyKind::Predictive { sampled: false } => write!(f, "predictive"),
            PolicyKind::Predictive { sampled: true } => write!(f, "predictive-sampled"),
            PolicyKind::Saliency => write!(f, "saliency"),
            PolicyKind::Random => write!(f, "random"),
            PolicyKind::OracleMc { n_samples } => write!(f, "oracle-mc({n_samples})"),
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p" | "pred" | "predictive" => Ok(PolicyKind::predictive()),
            "predictive-sampled" => Ok(PolicyKind::Predictive { sampled: true }),
            "s" | "sal" | "saliency" => Ok(PolicyKind::Saliency),
            "r" | "rand" | "random" => Ok(PolicyKind::Random),
            other => {
                if let Some(n) = other.strip_prefix("oracle-mc:") {
                    let n_samples = n
                        .parse()
                        .map_err(|_| Error::Argument(format!("bad sample count in '{other}'")))?;
                    return Ok(PolicyKind::OracleMc { n_samples });
                }
                if other == "oracle-mc" {
                    return Ok(PolicyKind::OracleMc { n_samples: 100 });
                }
                Err(Error::Argument(format!("unknown policy '{other}'")))
            }
        }
    }
}

/// The dynamic actions set: which viewpoints are still unread. A gaze is
/// available while at least one of its ancestor viewpoints is unread.
#[derive(Debug, Clone)]
pub struct ActionSet {
    geometry: Geometry,
    unread: Vec<bool>,
    unread_count: usize,
}

impl ActionSet {
    pub fn full(geometry: Geometry) -> Self {
        let n = geometry.viewpoint_count();
        ActionSet {
            geometry,
            unread: vec![true; n],
            unread_count: n,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn unread_count(&self) -> usize {
        self.unread_count
    }

    pub fn is_unread(&self, vp: Viewpoint) -> Result<bool> {
        Ok(self.unread[self.geometry.viewpoint_id(vp)?])
    }

    /// True when every viewpoint has been read (no gaze available).
    pub fn is_exhausted(&self) -> bool {
        self.unread_count == 0
    }

    pub fn is_available(&self, row: usize, col: usize) -> Result<bool> {
        Ok(!self.unread_ancestor_ids(row, col)?.is_empty())
    }

    /// Available gazes in lexicographic (row, col) order.
    pub fn available_gazes(&self) -> Vec<(usize, usize)> {
        let (gr, gc) = self.geometry.gaze_dims();
        let mut out = Vec::new();
        for row in 0..gr {
            for col in 0..gc {
                if self
                    .unread_ancestor_ids(row, col)
                    .map(|v| !v.is_empty())
                    .unwrap_or(false)
                {
                    out.push((row, col));
                }
            }
        }
        out
    }

    fn unread_ancestor_ids(&self, row: usize, col: usize) -> Result<Vec<(usize, Viewpoint)>> {
        let ancestors = self.geometry.ancestors(row, col)?;
        Ok(ancestors
            .into_iter()
            .filter_map(|vp| {
                let id = self.geometry.viewpoint_id(vp).expect("ancestor in grid");
                self.unread[id].then_some((id, vp))
            })
            .collect())
    }

    /// The still-unread viewpoints a fixation at `(row, col)` would read,
    /// finest level first.
    pub fn unread_ancestors(&self, row: usize, col: usize) -> Result<Vec<Viewpoint>> {
        Ok(self
            .unread_ancestor_ids(row, col)?
            .into_iter()
            .map(|(_, vp)| vp)
            .collect())
    }

    /// Marks the gaze's ancestors as read and returns the viewpoints that
    /// were actually consumed.
    pub fn consume(&mut self, row: usize, col: usize) -> Result<Vec<Viewpoint>> {
        let read = self.unread_ancestor_ids(row, col)?;
        for (id, _) in &read {
            self.unread[*id] = false;
            self.unread_count -= 1;
        }
        Ok(read.into_iter().map(|(_, vp)| vp).collect())
    }
}

/// Precomputed per-class score table over the gaze grid. Scores are the
/// uniform-prior look-ahead posterior mass of the map's class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyMap {
    class: usize,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(class: usize, rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Argument(format!(
                "saliency map needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(SaliencyMap {
            class,
            rows,
            cols,
            values,
        })
    }

    pub fn class(&self) -> usize {
        self.class
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn score(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Most probable observation at `(class, viewpoint)`: the null triplet when
/// the Bernoulli favors the null branch, the Gaussian mean otherwise.
pub fn predict_observation(bank: &ModelBank, class: usize, vp: Viewpoint) -> Result<CoeffTriplet> {
    Ok(bank.weak_model(class, vp)?.predict())
}

/// Two-steps-ahead point-estimate policy with a fixed guess class: predict
/// the unread triplets of every available gaze under the guess, run the
/// look-ahead posterior with the current belief as prior, and pick the gaze
/// that most confirms the guess. Ties break toward the smallest (row, col).
pub fn predictive_policy_with_guess(
    bank: &ModelBank,
    belief: &Belief,
    actions: &ActionSet,
    guess: usize,
) -> Result<(usize, usize)> {
    let gazes = actions.available_gazes();
    let mut best: Option<((usize, usize), f64)> = None;
    for (row, col) in gazes {
        let predicted: Vec<(usize, CoeffTriplet)> = actions
            .unread_ancestor_ids(row, col)?
            .into_iter()
            .map(|(id, _)| (id, bank.weak_by_id(guess, id).predict()))
            .collect();
        let look_ahead = bank.posterior_by_ids(&predicted, belief)?;
        let score = look_ahead.probs()[guess];
        if best.map_or(true, |(_, s)| score > s) {
            best = Some(((row, col), score));
        }
    }
    best.map(|(gaze, _)| gaze).ok_or(Error::Exhausted)
}

/// Predictive policy with the deterministic argmax guess.
pub fn predictive_policy(
    bank: &ModelBank,
    belief: &Belief,
    actions: &ActionSet,
) -> Result<(usize, usize)> {
    predictive_policy_with_guess(bank, belief, actions, belief.argmax())
}

/// Draws a class index from the belief.
pub fn sample_class<R: Rng + ?Sized>(belief: &Belief, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (z, &p) in belief.probs().iter().enumerate() {
        acc += p;
        if u < acc {
            return z;
        }
    }
    belief.probs().len() - 1
}

/// Monte-Carlo expected-entropy oracle: for each available gaze, draw
/// `n_samples` joint (class, observation) samples from the generative model
/// under the current belief and average `-log posterior(class)`; return the
/// minimizing gaze. Fully driven by the caller's RNG.
pub fn oracle_mc_policy<R: Rng + ?Sized>(
    bank: &ModelBank,
    belief: &Belief,
    actions: &ActionSet,
    n_samples: usize,
    rng: &mut R,
) -> Result<(usize, usize)> {
    if n_samples == 0 {
        return Err(Error::Argument("n_samples must be >= 1".into()));
    }
    let gazes = actions.available_gazes();
    if gazes.is_empty() {
        return Err(Error::Exhausted);
    }
    let mut best: Option<((usize, usize), f64)> = None;
    for (row, col) in gazes {
        let ids: Vec<usize> = actions
            .unread_ancestor_ids(row, col)?
            .into_iter()
            .map(|(id, _)| id)
            .collect();
        let mut total = 0.0;
        let mut obs = Vec::with_capacity(ids.len());
        for _ in 0..n_samples {
            let z = sample_class(belief, rng);
            obs.clear();
            for &id in &ids {
                obs.push((id, bank.weak_by_id(z, id).sample(rng)));
            }
            let post = bank.posterior_by_ids(&obs, belief)?;
            total -= post.probs()[z].ln();
        }
        let score = total / n_samples as f64;
        if best.map_or(true, |(_, s)| score < s) {
            best = Some(((row, col), score));
        }
    }
    Ok(best.expect("at least one gaze").0)
}

/// Builds one saliency map per class: predict the gaze's own finest-level
/// triplet under the map's class, take the uniform-prior posterior and
/// store the posterior mass of that class. A pure function of the bank.
///
/// Using only the finest triplet keeps the score specific to the gaze:
/// neighboring gazes share their four coarse ancestors, and folding those
/// into the prediction flattens the ranking into plateaus (sparse classes
/// then score near 1 over the whole empty periphery).
pub fn build_saliency_maps(bank: &ModelBank) -> Result<Vec<SaliencyMap>> {
    let geom = bank.geometry();
    let (gr, gc) = geom.gaze_dims();
    let uniform = Belief::uniform(bank.n_classes());
    let mut maps = Vec::with_capacity(bank.n_classes());
    for class in 0..bank.n_classes() {
        let mut values = Vec::with_capacity(gr * gc);
        for row in 0..gr {
            for col in 0..gc {
                let finest = Viewpoint {
                    level: geom.levels(),
                    row,
                    col,
                };
                let id = geom.viewpoint_id(finest)?;
                let predicted = [(id, bank.weak_by_id(class, id).predict())];
                let post = bank.posterior_by_ids(&predicted, &uniform)?;
                values.push(post.probs()[class]);
            }
        }
        maps.push(SaliencyMap::new(class, gr, gc, values)?);
    }
    Ok(maps)
}

/// Table-lookup policy: the available gaze with the highest score in the
/// map of the current guess. No model evaluation happens here.
pub fn saliency_policy(
    maps: &[SaliencyMap],
    belief: &Belief,
    actions: &ActionSet,
) -> Result<(usize, usize)> {
    let guess = belief.argmax();
    let map = maps.get(guess).ok_or_else(|| {
        Error::Config(format!("no saliency map for class {guess} ({} maps)", maps.len()))
    })?;
    let gazes = actions.available_gazes();
    if gazes.is_empty() {
        return Err(Error::Exhausted);
    }
    let mut best: Option<((usize, usize), f64)> = None;
    for (row, col) in gazes {
        let score = map.score(row, col);
        if best.map_or(true, |(_, s)| score > s) {
            best = Some(((row, col), score));
        }
    }
    Ok(best.expect("at least one gaze").0)
}

/// Uniform draw over the available gazes.
pub fn random_policy<R: Rng + ?Sized>(actions: &ActionSet, rng: &mut R) -> Result<(usize, usize)> {
    let gazes = actions.available_gazes();
    if gazes.is_empty() {
        return Err(Error::Exhausted);
    }
    Ok(gazes[rng.gen_range(0..gazes.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{RootModel, WeakModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: f64) -> [f64; 9] {
        [v, 0.0, 0.0, 0.0, v, 0.0, 0.0, 0.0, v]
    }

    fn tiny_geometry() -> Geometry {
        Geometry::new(4, 4, 2).unwrap()
    }

    /// 2-class bank over the 4x4 geometry: identical everywhere except one
    /// finest-level viewpoint where the horizontal mean separates classes.
    fn discriminating_bank(disc: Viewpoint, sep: f64, rho: f64) -> ModelBank {
        let geom = tiny_geometry();
        let mut weak = Vec::new();
        for z in 0..2 {
            for vp in geom.viewpoints() {
                let mu = if vp == disc && z == 1 {
                    [sep, 0.0, 0.0]
                } else {
                    [0.0; 3]
                };
                weak.push(WeakModel::new(rho, 100, mu, diag(0.25)).unwrap());
            }
        }
        let root = RootModel::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        ModelBank::from_parts(geom, 2, weak, root, 0).unwrap()
    }

    fn symmetric_bank(n_classes: usize) -> ModelBank {
        let geom = tiny_geometry();
        let weak: Vec<WeakModel> = (0..n_classes * geom.viewpoint_count())
            .map(|_| WeakModel::new(0.7, 100, [0.1, 0.0, 0.0], diag(0.25)).unwrap())
            .collect();
        let root = RootModel::new(vec![0.0; n_classes], vec![1.0; n_classes]).unwrap();
        ModelBank::from_parts(geom, n_classes, weak, root, 0).unwrap()
    }

    #[test]
    fn predicted_observation_follows_bernoulli_map() {
        let geom = tiny_geometry();
        let vp = Viewpoint { level: 2, row: 0, col: 0 };
        let confident = WeakModel::new(0.9, 10, [0.3, -0.1, 0.2], diag(1.0)).unwrap();
        assert_eq!(confident.predict(), CoeffTriplet::new(0.3, -0.1, 0.2));
        let sparse = WeakModel::new(0.1, 10, [0.3, -0.1, 0.2], diag(1.0)).unwrap();
        assert!(sparse.predict().is_null());
        // and through the bank API
        let bank = symmetric_bank(2);
        let t = predict_observation(&bank, 0, vp).unwrap();
        assert_eq!(t, CoeffTriplet::new(0.1, 0.0, 0.0));
    }

    #[test]
    fn action_set_tracks_unread_ancestors() {
        let geom = tiny_geometry();
        let mut actions = ActionSet::full(geom.clone());
        assert_eq!(actions.unread_count(), 5);
        assert_eq!(actions.available_gazes().len(), 4);

        let read = actions.consume(0, 0).unwrap();
        assert_eq!(read.len(), 2); // finest (0,0,2) plus the shared root-level (0,0,1)
        assert!(!actions.is_available(0, 0).unwrap());
        assert_eq!(actions.available_gazes(), vec![(0, 1), (1, 0), (1, 1)]);

        // remaining gazes now read exactly one viewpoint each
        for (row, col) in [(0, 1), (1, 0), (1, 1)] {
            assert_eq!(actions.unread_ancestors(row, col).unwrap().len(), 1);
        }
        for (row, col) in [(0, 1), (1, 0), (1, 1)] {
            assert_eq!(actions.consume(row, col).unwrap().len(), 1);
        }
        assert!(actions.is_exhausted());
        assert!(actions.available_gazes().is_empty());
    }

    #[test]
    fn no_gaze_repeats_under_inhibition_of_return() {
        let geom = Geometry::mnist();
        let mut actions = ActionSet::full(geom);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seen = std::collections::HashSet::new();
        while !actions.is_exhausted() {
            let gaze = random_policy(&actions, &mut rng).unwrap();
            assert!(seen.insert(gaze), "gaze {gaze:?} repeated");
            let read = actions.consume(gaze.0, gaze.1).unwrap();
            assert!(!read.is_empty());
        }
        assert!(matches!(random_policy(&actions, &mut rng), Err(Error::Exhausted)));
    }

    #[test]
    fn single_available_gaze_is_returned_by_all_policies() {
        let bank = symmetric_bank(2);
        let mut actions = ActionSet::full(bank.geometry().clone());
        for (row, col) in [(0, 0), (0, 1), (1, 0)] {
            actions.consume(row, col).unwrap();
        }
        let belief = Belief::uniform(2);
        let maps = build_saliency_maps(&bank).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(predictive_policy(&bank, &belief, &actions).unwrap(), (1, 1));
        assert_eq!(saliency_policy(&maps, &belief, &actions).unwrap(), (1, 1));
        assert_eq!(random_policy(&actions, &mut rng).unwrap(), (1, 1));
        assert_eq!(
            oracle_mc_policy(&bank, &belief, &actions, 16, &mut rng).unwrap(),
            (1, 1)
        );
    }

    #[test]
    fn symmetric_bank_ties_break_lexicographically() {
        let bank = symmetric_bank(4);
        let actions = ActionSet::full(bank.geometry().clone());
        let belief = Belief::uniform(4);
        assert_eq!(predictive_policy(&bank, &belief, &actions).unwrap(), (0, 0));
        let maps = build_saliency_maps(&bank).unwrap();
        assert_eq!(saliency_policy(&maps, &belief, &actions).unwrap(), (0, 0));
    }

    #[test]
    fn predictive_policy_finds_the_discriminating_gaze() {
        // viewpoint (1,0) at level 2 discriminates; its gaze is (1,0)
        let disc = Viewpoint { level: 2, row: 1, col: 0 };
        let bank = discriminating_bank(disc, 1.5, 0.9);
        let belief = Belief::from_probs(vec![0.4, 0.6]).unwrap();
        let actions = ActionSet::full(bank.geometry().clone());
        assert_eq!(predictive_policy(&bank, &belief, &actions).unwrap(), (1, 0));
    }

    #[test]
    fn oracle_mc_agrees_and_is_reproducible() {
        let disc = Viewpoint { level: 2, row: 0, col: 1 };
        let bank = discriminating_bank(disc, 2.0, 0.9);
        let belief = Belief::from_probs(vec![0.5, 0.5]).unwrap();
        let actions = ActionSet::full(bank.geometry().clone());

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let a = oracle_mc_policy(&bank, &belief, &actions, 4000, &mut rng).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let b = oracle_mc_policy(&bank, &belief, &actions, 4000, &mut rng).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, (0, 1));
    }

    #[test]
    fn random_policy_is_uniform_over_four_gazes() {
        let geom = tiny_geometry();
        let actions = ActionSet::full(geom);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            let gaze = random_policy(&actions, &mut rng).unwrap();
            *counts.entry(gaze).or_insert(0usize) += 1;
        }
        // binomial: p = 1/4, 3 sigma = 3 * sqrt(0.25 * 0.75 / n) ~ 0.013
        for (&gaze, &count) in &counts {
            let freq = count as f64 / n as f64;
            assert!((freq - 0.25).abs() < 0.013, "gaze {gaze:?} freq {freq}");
        }
        assert_eq!(counts.len(), 4);
    }

    #[test]
    fn same_seed_same_sequence() {
        let geom = Geometry::mnist();
        let run = |seed: u64| {
            let mut actions = ActionSet::full(geom.clone());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut seq = Vec::new();
            for _ in 0..20 {
                let gaze = random_policy(&actions, &mut rng).unwrap();
                actions.consume(gaze.0, gaze.1).unwrap();
                seq.push(gaze);
            }
            seq
        };
        assert_eq!(run(123), run(123));
        assert_ne!(run(123), run(124));
    }

    #[test]
    fn saliency_maps_of_symmetric_bank_are_flat() {
        let bank = symmetric_bank(5);
        let maps = build_saliency_maps(&bank).unwrap();
        assert_eq!(maps.len(), 5);
        for map in &maps {
            for &v in map.values() {
                assert!((v - 0.2).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn saliency_maps_are_byte_identical_across_builds() {
        let disc = Viewpoint { level: 2, row: 1, col: 1 };
        let bank = discriminating_bank(disc, 1.0, 0.8);
        let a = build_saliency_maps(&bank).unwrap();
        let b = build_saliency_maps(&bank).unwrap();
        for (ma, mb) in a.iter().zip(&b) {
            for (va, vb) in ma.values().iter().zip(mb.values()) {
                assert_eq!(va.to_bits(), vb.to_bits());
            }
        }
    }

    #[test]
    fn saliency_policy_walks_down_the_ranking_and_switches_maps() {
        let geom = tiny_geometry();
        // hand-built maps: class 0 ranks (0,1) best then (1,0); class 1 ranks (1,1) best
        let map0 = SaliencyMap::new(0, 2, 2, vec![0.1, 0.9, 0.8, 0.2]).unwrap();
        let map1 = SaliencyMap::new(1, 2, 2, vec![0.1, 0.2, 0.3, 0.9]).unwrap();
        let maps = vec![map0, map1];

        let mut actions = ActionSet::full(geom);
        let guess0 = Belief::from_probs(vec![0.8, 0.2]).unwrap();
        assert_eq!(saliency_policy(&maps, &guess0, &actions).unwrap(), (0, 1));
        actions.consume(0, 1).unwrap();
        // top gaze consumed: the second-ranked one follows
        assert_eq!(saliency_policy(&maps, &guess0, &actions).unwrap(), (1, 0));
        // belief flips mid-exploration: next gaze comes from map 1
        let guess1 = Belief::from_probs(vec![0.3, 0.7]).unwrap();
        assert_eq!(saliency_policy(&maps, &guess1, &actions).unwrap(), (1, 1));
    }

    #[test]
    fn missing_map_is_a_configuration_error() {
        let bank = symmetric_bank(3);
        let actions = ActionSet::full(bank.geometry().clone());
        let belief = Belief::from_probs(vec![0.1, 0.1, 0.8]).unwrap();
        let maps = build_saliency_maps(&bank).unwrap();
        assert!(saliency_policy(&maps[..2], &belief, &actions).is_err());
    }

    #[test]
    fn predictive_costs_one_posterior_per_available_gaze() {
        let bank = symmetric_bank(3);
        let mut actions = ActionSet::full(bank.geometry().clone());
        let belief = Belief::uniform(3);

        let before = bank.posterior_eval_count();
        predictive_policy(&bank, &belief, &actions).unwrap();
        let delta = bank.posterior_eval_count() - before;
        assert_eq!(delta, 4 * 3); // |available gazes| x n_classes

        actions.consume(0, 0).unwrap();
        let before = bank.posterior_eval_count();
        predictive_policy(&bank, &belief, &actions).unwrap();
        assert_eq!(bank.posterior_eval_count() - before, 3 * 3);

        // the saliency policy never touches the models at decision time
        let maps = build_saliency_maps(&bank).unwrap();
        let before = bank.posterior_eval_count();
        saliency_policy(&maps, &belief, &actions).unwrap();
        assert_eq!(bank.posterior_eval_count(), before);
    }
}
