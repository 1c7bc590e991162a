//! The scene-exploration loop: start from the root-coefficient guess, then
//! repeatedly choose a gaze, read its unread triplets, update the belief and
//! inhibit the gaze, until the entropy threshold, exhaustion or the saccade
//! cap. Emits a full per-image trace.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{CoeffTriplet, Viewpoint, WaveletPyramid};
use crate::models::ModelBank;
use crate::policy::{
    oracle_mc_policy, predictive_policy_with_guess, random_policy, saliency_policy, sample_class,
    ActionSet, PolicyKind, SaliencyMap,
};

#[derive(Debug, Clone, Copy)]
pub struct ExplorationConfig {
    /// Entropy stopping threshold in nats.
    pub h_ref: f64,
    pub policy: PolicyKind,
    /// Hard cap on the number of fixations; exhaustion is otherwise the
    /// only guarantee of termination since entropy need not decrease.
    pub max_saccades: usize,
    pub seed: u64,
}

impl ExplorationConfig {
    pub fn new(h_ref: f64, policy: PolicyKind) -> Self {
        ExplorationConfig {
            h_ref,
            policy,
            max_saccades: usize::MAX,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Threshold,
    Exhausted,
    Cap,
}

/// Identity of the image being explored, carried into the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageId {
    pub index: usize,
    pub split: String,
    pub label: usize,
}

/// One fixation: the gaze, the viewpoints actually read, and the belief
/// after the update.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaccadeStep {
    pub gaze: (usize, usize),
    pub viewpoints: Vec<Viewpoint>,
    pub belief: Vec<f64>,
    pub entropy: f64,
}

/// Complete record of one exploration, serializable as one JSON line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplorationTrace {
    pub image_index: usize,
    pub split: String,
    pub true_label: usize,
    pub policy: String,
    pub h_ref: f64,
    pub seed: u64,
    pub initial_belief: Vec<f64>,
    pub initial_entropy: f64,
    pub steps: Vec<SaccadeStep>,
    pub triplets_read: usize,
    pub total_viewpoints: usize,
    pub stop_reason: StopReason,
    pub predicted_label: usize,
    pub correct: bool,
}

impl ExplorationTrace {
    pub fn saccade_count(&self) -> usize {
        self.steps.len()
    }

    /// Every viewpoint read over the whole trace.
    pub fn viewpoints_read(&self) -> impl Iterator<Item = Viewpoint> + '_ {
        self.steps.iter().flat_map(|s| s.viewpoints.iter().copied())
    }
}

/// Fraction of the triplet census left unread when exploration stopped.
/// The root coefficient is consumed at initialization and excluded.
pub fn compression_ratio(trace: &ExplorationTrace) -> f64 {
    1.0 - trace.triplets_read as f64 / trace.total_viewpoints as f64
}

/// Runs one exploration of `pyramid` under `config`. `maps` must be present
/// exactly when the saliency policy is selected.
pub fn explore(
    pyramid: &WaveletPyramid,
    bank: &ModelBank,
    maps: Option<&[SaliencyMap]>,
    config: &ExplorationConfig,
    image: &ImageId,
) -> Result<ExplorationTrace> {
    if pyramid.geometry() != bank.geometry() {
        return Err(Error::Config(
            "pyramid and model bank geometries differ".into(),
        ));
    }
    if config.policy == PolicyKind::Saliency && maps.is_none() {
        return Err(Error::Config(
            "saliency policy requires precomputed saliency maps".into(),
        ));
    }
    if !(config.h_ref >= 0.0) {
        return Err(Error::Argument(format!(
            "h_ref must be >= 0, got {}",
            config.h_ref
        )));
    }
    if config.max_saccades == 0 {
        return Err(Error::Argument("max_saccades must be >= 1".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut belief = bank.root_prior(pyramid.root());
    let initial_belief = belief.clone();
    let mut actions = ActionSet::full(bank.geometry().clone());
    let mut steps = Vec::new();
    let mut triplets_read = 0usize;

    let stop_reason = loop {
        if belief.should_stop(config.h_ref)? {
            break StopReason::Threshold;
        }
        if actions.is_exhausted() {
            break StopReason::Exhausted;
        }
        if steps.len() >= config.max_saccades {
            break StopReason::Cap;
        }

        let gaze = match config.policy {
            PolicyKind::Predictive { sampled } => {
                let guess = if sampled {
                    sample_class(&belief, &mut rng)
                } else {
                    belief.argmax()
                };
                predictive_policy_with_guess(bank, &belief, &actions, guess)?
            }
            PolicyKind::Saliency => {
                saliency_policy(maps.expect("checked above"), &belief, &actions)?
            }
            PolicyKind::Random => random_policy(&actions, &mut rng)?,
            PolicyKind::OracleMc { n_samples } => {
                oracle_mc_policy(bank, &belief, &actions, n_samples, &mut rng)?
            }
        };

        let viewpoints = actions.consume(gaze.0, gaze.1)?;
        let observations: Vec<(Viewpoint, CoeffTriplet)> = viewpoints
            .iter()
            .map(|&vp| Ok((vp, pyramid.triplet(vp)?)))
            .collect::<Result<_>>()?;
        belief = bank.posterior_from_observation(&observations, &belief)?;
        triplets_read += viewpoints.len();
        steps.push(SaccadeStep {
            gaze,
            viewpoints,
            belief: belief.probs().to_vec(),
            entropy: belief.entropy(),
        });
    };

    let predicted_label = belief.argmax();
    Ok(ExplorationTrace {
        image_index: image.index,
        split: image.split.clone(),
        true_label: image.label,
        policy: config.policy.to_string(),
        h_ref: config.h_ref,
        seed: config.seed,
        initial_entropy: initial_belief.entropy(),
        initial_belief: initial_belief.probs().to_vec(),
        steps,
        triplets_read,
        total_viewpoints: bank.geometry().viewpoint_count(),
        stop_reason,
        predicted_label,
        correct: predicted_label == image.label,
    })
}

/// Writes traces as newline-delimited JSON records.
pub fn write_traces<W: Write>(mut writer: W, traces: &[ExplorationTrace]) -> Result<()> {
    for trace in traces {
        let line = serde_json::to_string(trace)
            .map_err(|e| Error::Argument(format!("trace serialization failed: {e}")))?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Reads newline-delimited trace records; blank lines are skipped.
pub fn read_traces<R: BufRead>(reader: R) -> Result<Vec<ExplorationTrace>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Corruption(format!("bad trace record: {e}")))?,
        );
    }
    Ok(out)
}
