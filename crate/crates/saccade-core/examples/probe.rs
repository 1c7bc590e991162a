// scratch: measure baseline accuracy and root-prior entropy on real MNIST
use std::path::Path;
use std::time::Instant;

use saccade_core::eval::exhaustive_baseline;
use saccade_core::haar::{Geometry, WaveletPyramid};
use saccade_core::mnist::{load_dir, Split, NUM_CLASSES};
use saccade_core::models::ModelBank;

fn main() {
    let data = std::env::var("SACCADE_DATA_DIR").unwrap_or_else(|_| "data/mnist".into());
    let t0 = Instant::now();
    let train = load_dir(Path::new(&data), Split::Train).unwrap();
    let test = load_dir(Path::new(&data), Split::Test).unwrap();
    println!("loaded {} train / {} test in {:?}", train.len(), test.len(), t0.elapsed());

    let t0 = Instant::now();
    let examples = train.as_examples();
    let bank = ModelBank::train(&Geometry::mnist(), NUM_CLASSES, &examples[..55_000]).unwrap();
    println!("trained in {:?}", t0.elapsed());

    let t0 = Instant::now();
    let test_examples = test.as_examples();
    let acc = exhaustive_baseline(&bank, &test_examples).unwrap();
    println!("exhaustive baseline accuracy = {acc:.4} in {:?}", t0.elapsed());

    // root prior entropy
    let mut total = 0.0;
    for ex in &test_examples {
        let pyr = WaveletPyramid::forward(bank.geometry(), ex.pixels).unwrap();
        total += bank.root_prior(pyr.root()).entropy();
    }
    println!("mean root-prior entropy = {:.4} nats (ln 10 = {:.4})", total / test_examples.len() as f64, 10f64.ln());

    // policy sweep at the two quoted operating points
    use saccade_core::eval::{run_sweep, SweepSpec};
    use saccade_core::policy::{build_saliency_maps, PolicyKind};
    let maps = build_saliency_maps(&bank).unwrap();
    let spec = SweepSpec::new(
        vec![1e-4, 1e-5],
        vec![PolicyKind::predictive(), PolicyKind::Saliency, PolicyKind::Random],
        2000,
        42,
    );
    let t0 = Instant::now();
    let result = run_sweep(&bank, Some(&maps), &test_examples, "test", &spec).unwrap();
    println!("sweep in {:?}", t0.elapsed());
    for cell in &result.cells {
        println!(
            "{:<11} h_ref={:<8} acc={:.4} mean_sac={:>6.2} med={:>5.1} q1={:>5.1} q3={:>5.1} comp={:.4}",
            cell.policy.to_string(), cell.h_ref, cell.accuracy, cell.mean_saccades,
            cell.median_saccades, cell.q1_saccades, cell.q3_saccades, cell.mean_compression
        );
    }
}
