//! Batch evaluation: exhaustive-scan baseline, policy x threshold sweeps
//! with accuracy and saccade statistics, CSV and SVG report emission.
//!
//! Sweeps are parallel over images with deterministic per-image seeds and
//! order-fixed aggregation, so a fixed spec seed reproduces reports byte
//! for byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::explore::{compression_ratio, explore, ExplorationConfig, ExplorationTrace, ImageId};
use crate::haar::WaveletPyramid;
use crate::mnist::LabeledImage;
use crate::models::ModelBank;
use crate::policy::{PolicyKind, SaliencyMap};

/// Posterior from the root prior plus every triplet in the pyramid.
pub fn exhaustive_posterior(bank: &ModelBank, pyramid: &WaveletPyramid) -> Result<Belief> {
    let geom = bank.geometry();
    let observations: Vec<_> = geom
        .viewpoints()
        .map(|vp| Ok((vp, pyramid.triplet(vp)?)))
        .collect::<Result<_>>()?;
    bank.posterior_from_observation(&observations, &bank.root_prior(pyramid.root()))
}

/// Classifies every image from all triplets plus the root prior and returns
/// the fraction of correct decisions — the accuracy upper bound that
/// sequential policies approach from below.
pub fn exhaustive_baseline(bank: &ModelBank, examples: &[LabeledImage]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Argument("baseline needs at least one image".into()));
    }
    let correct: Vec<Result<bool>> = examples
        .par_iter()
        .map(|example| {
            let pyramid = WaveletPyramid::forward(bank.geometry(), example.pixels)?;
            let posterior = exhaustive_posterior(bank, &pyramid)?;
            Ok(posterior.argmax() == example.label)
        })
        .collect();
    let mut hits = 0usize;
    for c in correct {
        if c? {
            hits += 1;
        }
    }
    Ok(hits as f64 / examples.len() as f64)
}

/// What to sweep: thresholds must be strictly decreasing.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub thresholds: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    pub n_images: usize,
    pub seed: u64,
    pub max_saccades: usize,
    pub keep_traces: bool,
}

impl SweepSpec {
    pub fn new(thresholds: Vec<f64>, policies: Vec<PolicyKind>, n_images: usize, seed: u64) -> Self {
        SweepSpec {
            thresholds,
            policies,
            n_images,
            seed,
            max_saccades: usize::MAX,
            keep_traces: false,
        }
    }

    /// The default threshold grid bracketing the two quoted operating
    /// points (1e-4 and 1e-5).
    pub fn default_thresholds() -> Vec<f64> {
        vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
    }

    fn validate(&self, available_images: usize) -> Result<()> {
        if self.thresholds.is_empty() || self.policies.is_empty() {
            return Err(Error::Argument("sweep needs thresholds and policies".into()));
        }
        if !self.thresholds.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::Argument("thresholds must be strictly decreasing".into()));
        }
        if self.n_images == 0 || self.n_images > available_images {
            return Err(Error::Argument(format!(
                "n_images must be in [1, {available_images}], got {}",
                self.n_images
            )));
        }
        Ok(())
    }
}

/// Aggregated statistics for one (policy, threshold) cell.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub policy: PolicyKind,
    pub h_ref: f64,
    pub accuracy: f64,
    pub mean_saccades: f64,
    pub median_saccades: f64,
    pub q1_saccades: f64,
    pub q3_saccades: f64,
    pub mean_compression: f64,
    /// (saccade count, image count), sorted by saccade count.
    pub histogram: Vec<(usize, usize)>,
    /// Per-image traces when the spec requested them.
    pub traces: Option<Vec<ExplorationTrace>>,
    /// Set by `emit_report` when traces are written out.
    pub trace_file: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub n_images: usize,
    /// Exhaustive-scan accuracy over the same images, for the report's
    /// reference line.
    pub baseline: Option<f64>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Linear-interpolation quantile of a sorted sample.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Runs `explore` for every (image, policy, threshold) combination and
/// aggregates per-cell statistics. Deterministic for a fixed seed.
pub fn run_sweep(
    bank: &ModelBank,
    maps: Option<&[SaliencyMap]>,
    examples: &[LabeledImage],
    split: &str,
    spec: &SweepSpec,
) -> Result<SweepResult> {
    spec.validate(examples.len())?;
    if spec.policies.contains(&PolicyKind::Saliency) && maps.is_none() {
        return Err(Error::Config(
            "sweep includes the saliency policy but no maps were supplied".into(),
        ));
    }
    let subset = &examples[..spec.n_images];
    let pyramids: Vec<WaveletPyramid> = subset
        .par_iter()
        .map(|e| WaveletPyramid::forward(bank.geometry(), e.pixels))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (p_idx, &policy) in spec.policies.iter().enumerate() {
        for (t_idx, &h_ref) in spec.thresholds.iter().enumerate() {
            let cell_seed = splitmix64(spec.seed ^ splitmix64((p_idx as u64) << 32 | t_idx as u64));
            let traces: Vec<ExplorationTrace> = subset
                .par_iter()
                .zip(&pyramids)
                .enumerate()
                .map(|(i, (example, pyramid))| {
                    let config = ExplorationConfig {
                        h_ref,
                        policy,
                        max_saccades: spec.max_saccades,
                        seed: splitmix64(cell_seed ^ i as u64),
                    };
                    let id = ImageId {
                        index: i,
                        split: split.to_string(),
                        label: example.label,
                    };
                    explore(pyramid, bank, maps, &config, &id)
                })
                .collect::<Result<_>>()?;

            let n = traces.len() as f64;
            let accuracy = traces.iter().filter(|t| t.correct).count() as f64 / n;
            let mut saccades: Vec<f64> = traces.iter().map(|t| t.saccade_count() as f64).collect();
            saccades.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean_saccades = saccades.iter().sum::<f64>() / n;
            let mean_compression = traces.iter().map(compression_ratio).sum::<f64>() / n;
            let mut histogram = std::collections::BTreeMap::new();
            for t in &traces {
                *histogram.entry(t.saccade_count()).or_insert(0usize) += 1;
            }
            cells.push(SweepCell {
                policy,
                h_ref,
                accuracy,
                mean_saccades,
                median_saccades: quantile(&saccades, 0.5),
                q1_saccades: quantile(&saccades, 0.25),
                q3_saccades: quantile(&saccades, 0.75),
                mean_compression,
                histogram: histogram.into_iter().collect(),
                traces: spec.keep_traces.then_some(traces),
                trace_file: None,
            });
        }
    }
    Ok(SweepResult {
        cells,
        n_images: spec.n_images,
        baseline: None,
    })
}

fn policy_slug(policy: PolicyKind) -> String {
    match policy {
        PolicyKind::Predictive { sampled: false } => "predictive".into(),
        PolicyKind::Predictive { sampled: true } => "predictive-sampled".into(),
        PolicyKind::Saliency => "saliency".into(),
        PolicyKind::Random => "random".into(),
        PolicyKind::OracleMc { n_samples } => format!("oracle-mc{n_samples}"),
    }
}

/// Writes `sweep.csv`, per-cell saccade histograms, the SVG plots and any
/// requested trace files into `out_dir`. Returns the paths written.
pub fn emit_report(result: &mut SweepResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let csv_path = out_dir.join("sweep.csv");
    let mut csv = String::from(
        "policy,h_ref,accuracy,mean_saccades,median_saccades,q1,q3,mean_compression\n",
    );
    for cell in &result.cells {
        csv.push_str(&format!(
            "{},{},{:.6},{:.4},{:.4},{:.4},{:.4},{:.6}\n",
            policy_slug(cell.policy),
            cell.h_ref,
            cell.accuracy,
            cell.mean_saccades,
            cell.median_saccades,
            cell.q1_saccades,
            cell.q3_saccades,
            cell.mean_compression,
        ));
    }
    fs::write(&csv_path, csv)?;
    written.push(csv_path);

    for cell in &mut result.cells {
        let stem = format!("{}_{:e}", policy_slug(cell.policy), cell.h_ref);
        let hist_path = out_dir.join(format!("hist_{stem}.csv"));
        let mut hist = String::from("saccades,count\n");
        for (saccades, count) in &cell.histogram {
            hist.push_str(&format!("{saccades},{count}\n"));
        }
        fs::write(&hist_path, hist)?;
        written.push(hist_path);

        if let Some(traces) = &cell.traces {
            let trace_path = out_dir.join(format!("traces_{stem}.jsonl"));
            let mut file = fs::File::create(&trace_path)?;
            crate::explore::write_traces(&mut file, traces)?;
            file.flush()?;
            cell.trace_file = Some(trace_path.display().to_string());
            written.push(trace_path);
        }
    }

    if !result.cells.is_empty() {
        let acc_path = out_dir.join("accuracy.svg");
        fs::write(&acc_path, accuracy_svg(result))?;
        written.push(acc_path);
        let sac_path = out_dir.join("saccades.svg");
        fs::write(&sac_path, saccades_svg(result))?;
        written.push(sac_path);
    }
    Ok(written)
}

const POLICY_COLORS: &[(&str, &str)] = &[
    ("predictive", "#1f77b4"),
    ("predictive-sampled", "#17becf"),
    ("saliency", "#2ca02c"),
    ("random", "#d62728"),
];

fn color_for(policy: PolicyKind) -> &'static str {
    let slug = policy_slug(policy);
    POLICY_COLORS
        .iter()
        .find(|(name, _)| *name == slug)
        .map(|(_, c)| *c)
        .unwrap_or("#9467bd")
}

struct Frame {
    width: f64,
    height: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        self.left + t * (self.width - self.left - self.right)
    }
    fn y(&self, t: f64) -> f64 {
        self.height - self.bottom - t * (self.height - self.top - self.bottom)
    }
}

fn svg_header(frame: &Frame, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{tx:.1}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n",
        w = frame.width,
        h = frame.height,
        tx = frame.width / 2.0,
    )
}

fn unique_sorted_thresholds(result: &SweepResult) -> Vec<f64> {
    let mut thresholds: Vec<f64> = Vec::new();
    for cell in &result.cells {
        if !thresholds.iter().any(|t| *t == cell.h_ref) {
            thresholds.push(cell.h_ref);
        }
    }
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds
}

fn unique_policies(result: &SweepResult) -> Vec<PolicyKind> {
    let mut policies = Vec::new();
    for cell in &result.cells {
        if !policies.contains(&cell.policy) {
            policies.push(cell.policy);
        }
    }
    policies
}

/// Classification rate per policy against the (decreasing) threshold axis,
/// with the exhaustive baseline as a dashed reference line.
fn accuracy_svg(result: &SweepResult) -> String {
    let frame = Frame {
        width: 640.0,
        height: 400.0,
        left: 70.0,
        right: 30.0,
        top: 40.0,
        bottom: 60.0,
    };
    let thresholds = unique_sorted_thresholds(result);
    let policies = unique_policies(result);
    let xpos = |h: f64| {
        let idx = thresholds.iter().position(|t| *t == h).unwrap();
        if thresholds.len() == 1 {
            0.5
        } else {
            idx as f64 / (thresholds.len() - 1) as f64
        }
    };

    let mut svg = svg_header(&frame, "Classification rate vs recognition threshold");
    // axes
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        frame.x(0.0), frame.y(0.0), frame.x(1.0), frame.y(0.0)
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        frame.x(0.0), frame.y(0.0), frame.x(0.0), frame.y(1.0)
    ));
    for k in 0..=10 {
        let v = k as f64 / 10.0;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{v:.1}</text>\n",
            frame.x(0.0) - 6.0,
            frame.y(v) + 3.0
        ));
    }
    for &h in &thresholds {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{h:e}</text>\n",
            frame.x(xpos(h)),
            frame.y(0.0) + 18.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">recognition threshold (nats)</text>\n",
        frame.x(0.5),
        frame.height - 14.0
    ));

    if let Some(baseline) = result.baseline {
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"red\" stroke-dasharray=\"6 4\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"red\">exhaustive {baseline:.3}</text>\n",
            frame.x(0.0), frame.y(baseline), frame.x(1.0), frame.y(baseline),
            frame.x(0.02), frame.y(baseline) - 5.0
        ));
    }

    for (k, &policy) in policies.iter().enumerate() {
        let color = color_for(policy);
        let mut points = Vec::new();
        for &h in &thresholds {
            if let Some(cell) = result
                .cells
                .iter()
                .find(|c| c.policy == policy && c.h_ref == h)
            {
                points.push(format!(
                    "{:.1},{:.1}",
                    frame.x(xpos(h)),
                    frame.y(cell.accuracy)
                ));
            }
        }
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            frame.x(0.02),
            frame.top + 14.0 * k as f64,
            policy_slug(policy)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Saccade-count distribution per (policy, threshold): first/third quartile
/// boxes with a median bar and a mean marker.
fn saccades_svg(result: &SweepResult) -> String {
    let frame = Frame {
        width: 640.0,
        height: 400.0,
        left: 70.0,
        right: 30.0,
        top: 40.0,
        bottom: 60.0,
    };
    let thresholds = unique_sorted_thresholds(result);
    let policies = unique_policies(result);
    let y_max = result
        .cells
        .iter()
        .map(|c| c.q3_saccades.max(c.mean_saccades))
        .fold(1.0f64, f64::max)
        * 1.15;

    let mut svg = svg_header(&frame, "Saccades vs recognition threshold (boxes: quartiles)");
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        frame.x(0.0), frame.y(0.0), frame.x(1.0), frame.y(0.0)
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        frame.x(0.0), frame.y(0.0), frame.x(0.0), frame.y(1.0)
    ));
    for k in 0..=5 {
        let v = y_max * k as f64 / 5.0;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{v:.0}</text>\n",
            frame.x(0.0) - 6.0,
            frame.y(k as f64 / 5.0) + 3.0
        ));
    }

    let group = 1.0 / thresholds.len() as f64;
    let slot = group / (policies.len() as f64 + 1.0);
    for (t_idx, &h) in thresholds.iter().enumerate() {
        let x0 = t_idx as f64 * group;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{h:e}</text>\n",
            frame.x(x0 + group / 2.0),
            frame.y(0.0) + 18.0
        ));
        for (p_idx, &policy) in policies.iter().enumerate() {
            let Some(cell) = result
                .cells
                .iter()
                .find(|c| c.policy == policy && c.h_ref == h)
            else {
                continue;
            };
            let color = color_for(policy);
            let cx = x0 + slot * (p_idx as f64 + 1.0);
            let half = slot * 0.35;
            let ynorm = |v: f64| (v / y_max).min(1.0);
            svg.push_str(&format!(
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"{color}\" fill-opacity=\"0.35\" stroke=\"{color}\"/>\n",
                frame.x(cx - half),
                frame.y(ynorm(cell.q3_saccades)),
                frame.x(cx + half) - frame.x(cx - half),
                (frame.y(ynorm(cell.q1_saccades)) - frame.y(ynorm(cell.q3_saccades))).max(1.0),
            ));
            svg.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                frame.x(cx - half),
                frame.y(ynorm(cell.median_saccades)),
                frame.x(cx + half),
                frame.y(ynorm(cell.median_saccades)),
            ));
            svg.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                frame.x(cx),
                frame.y(ynorm(cell.mean_saccades)),
            ));
        }
    }
    for (k, &policy) in policies.iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{}\">{}</text>\n",
            frame.x(0.02),
            frame.top + 14.0 * k as f64,
            color_for(policy),
            policy_slug(policy)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{CoeffTriplet, Geometry};
    use crate::models::{ModelBank, RootModel, WeakModel};
    use crate::policy::build_saliency_maps;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: f64) -> [f64; 9] {
        [v, 0.0, 0.0, 0.0, v, 0.0, 0.0, 0.0, v]
    }

    /// Well-separated 2-class bank over the pad-free 4x4 geometry.
    fn separable_bank() -> ModelBank {
        let geom = Geometry::new(4, 4, 2).unwrap();
        let mut weak = Vec::new();
        for z in 0..2 {
            for _ in geom.viewpoints() {
                weak.push(
                    WeakModel::new(0.95, 100, [3.0 * z as f64 - 1.5, 0.0, 0.0], diag(0.04))
                        .unwrap(),
                );
            }
        }
        let root = RootModel::new(vec![1.0, 3.0], vec![0.25, 0.25]).unwrap();
        ModelBank::from_parts(geom, 2, weak, root, 0).unwrap()
    }

    /// Samples images from the bank's own generative models; the 4x4
    /// geometry is pad-free so forward(inverse(.)) is exact.
    fn sample_images(bank: &ModelBank, per_class: usize, seed: u64) -> Vec<(Vec<f64>, usize)> {
        let geom = bank.geometry().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for z in 0..bank.n_classes() {
            for _ in 0..per_class {
                let grids: Vec<Vec<CoeffTriplet>> = (1..=geom.levels())
                    .map(|level| {
                        let (dr, dc) = geom.level_dims(level);
                        (0..dr * dc)
                            .map(|k| {
                                let vp = crate::haar::Viewpoint {
                                    level,
                                    row: k / dc,
                                    col: k % dc,
                                };
                                let vid = geom.viewpoint_id(vp).unwrap();
                                bank.weak_by_id(z, vid).sample(&mut rng)
                            })
                            .collect()
                    })
                    .collect();
                let root = bank.root_model().means()[z];
                let pyr = WaveletPyramid::from_parts(geom.clone(), root, grids).unwrap();
                out.push((pyr.inverse().unwrap().pixels, z));
            }
        }
        out
    }

    fn as_examples(images: &[(Vec<f64>, usize)]) -> Vec<LabeledImage<'_>> {
        images
            .iter()
            .map(|(px, label)| LabeledImage {
                pixels: px,
                label: *label,
            })
            .collect()
    }

    #[test]
    fn separable_classes_reach_perfect_baseline() {
        let bank = separable_bank();
        let images = sample_images(&bank, 40, 7);
        let examples = as_examples(&images);
        let accuracy = exhaustive_baseline(&bank, &examples).unwrap();
        assert_eq!(accuracy, 1.0);
    }

    #[test]
    fn single_correct_image_scores_one() {
        let bank = separable_bank();
        let images = sample_images(&bank, 1, 3);
        let examples = as_examples(&images[..1]);
        assert_eq!(exhaustive_baseline(&bank, &examples).unwrap(), 1.0);
    }

    #[test]
    fn sweep_statistics_are_consistent() {
        let bank = separable_bank();
        let maps = build_saliency_maps(&bank).unwrap();
        let images = sample_images(&bank, 30, 21);
        let examples = as_examples(&images);
        let spec = SweepSpec::new(
            vec![0.5, 1e-2, 1e-5],
            vec![PolicyKind::predictive(), PolicyKind::Saliency, PolicyKind::Random],
            examples.len(),
            42,
        );
        let result = run_sweep(&bank, Some(&maps), &examples, "synthetic", &spec).unwrap();
        assert_eq!(result.cells.len(), 9);
        for cell in &result.cells {
            assert!((0.0..=1.0).contains(&cell.accuracy));
            assert!(cell.q1_saccades <= cell.median_saccades);
            assert!(cell.median_saccades <= cell.q3_saccades);
            assert!((0.0..=1.0).contains(&cell.mean_compression));
            let total: usize = cell.histogram.iter().map(|(_, c)| c).sum();
            assert_eq!(total, examples.len());
        }
        // aggregated monotone workload: lower threshold, never fewer saccades
        for policy_cells in result.cells.chunks(3) {
            for pair in policy_cells.windows(2) {
                assert!(pair[1].mean_saccades >= pair[0].mean_saccades - 1e-12);
            }
        }
    }

    #[test]
    fn sweep_is_deterministic_and_reports_byte_identical() {
        let bank = separable_bank();
        let images = sample_images(&bank, 20, 5);
        let examples = as_examples(&images);
        let spec = SweepSpec::new(
            vec![0.5, 1e-3],
            vec![PolicyKind::Random, PolicyKind::predictive()],
            examples.len(),
            1234,
        );
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut ra = run_sweep(&bank, None, &examples, "synthetic", &spec).unwrap();
        let mut rb = run_sweep(&bank, None, &examples, "synthetic", &spec).unwrap();
        emit_report(&mut ra, dir_a.path()).unwrap();
        emit_report(&mut rb, dir_b.path()).unwrap();
        let csv_a = std::fs::read(dir_a.path().join("sweep.csv")).unwrap();
        let csv_b = std::fs::read(dir_b.path().join("sweep.csv")).unwrap();
        assert!(!csv_a.is_empty());
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn empty_result_emits_header_only_csv() {
        let mut result = SweepResult {
            cells: Vec::new(),
            n_images: 0,
            baseline: None,
        };
        let dir = tempfile::tempdir().unwrap();
        emit_report(&mut result, dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(
            csv,
            "policy,h_ref,accuracy,mean_saccades,median_saccades,q1,q3,mean_compression\n"
        );
    }

    #[test]
    fn one_cell_csv_row_matches_the_struct() {
        let bank = separable_bank();
        let images = sample_images(&bank, 10, 9);
        let examples = as_examples(&images);
        let spec = SweepSpec::new(vec![1e-2], vec![PolicyKind::predictive()], examples.len(), 77);
        let mut result = run_sweep(&bank, None, &examples, "synthetic", &spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_report(&mut result, dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        let row = csv.lines().nth(1).unwrap();
        let cell = &result.cells[0];
        let expected = format!(
            "predictive,0.01,{:.6},{:.4},{:.4},{:.4},{:.4},{:.6}",
            cell.accuracy,
            cell.mean_saccades,
            cell.median_saccades,
            cell.q1_saccades,
            cell.q3_saccades,
            cell.mean_compression
        );
        assert_eq!(row, expected);
    }

    #[test]
    fn keep_traces_writes_trace_files() {
        let bank = separable_bank();
        let images = sample_images(&bank, 5, 2);
        let examples = as_examples(&images);
        let mut spec = SweepSpec::new(vec![1e-2], vec![PolicyKind::Random], examples.len(), 8);
        spec.keep_traces = true;
        let mut result = run_sweep(&bank, None, &examples, "synthetic", &spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_report(&mut result, dir.path()).unwrap();
        let trace_file = result.cells[0].trace_file.clone().unwrap();
        let traces =
            crate::explore::read_traces(std::io::BufReader::new(fs::File::open(trace_file).unwrap()))
                .unwrap();
        assert_eq!(traces.len(), examples.len());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bank = separable_bank();
        let images = sample_images(&bank, 3, 2);
        let examples = as_examples(&images);
        // thresholds not strictly decreasing
        let spec = SweepSpec::new(vec![1e-2, 1e-2], vec![PolicyKind::Random], 2, 0);
        assert!(run_sweep(&bank, None, &examples, "synthetic", &spec).is_err());
        // more images than available
        let spec = SweepSpec::new(vec![1e-2], vec![PolicyKind::Random], 1000, 0);
        assert!(run_sweep(&bank, None, &examples, "synthetic", &spec).is_err());
        // saliency without maps
        let spec = SweepSpec::new(vec![1e-2], vec![PolicyKind::Saliency], 2, 0);
        assert!(matches!(
            run_sweep(&bank, None, &examples, "synthetic", &spec),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(quantile(&xs, 0.25), 1.75);
    }
}
