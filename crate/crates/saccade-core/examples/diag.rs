// scratch: inspect saliency maps and trace shapes on real MNIST
use std::path::Path;

use saccade_core::explore::{explore, ExplorationConfig, ImageId};
use saccade_core::haar::{Geometry, WaveletPyramid};
use saccade_core::mnist::{load_dir, Split, NUM_CLASSES};
use saccade_core::models::ModelBank;
use saccade_core::policy::{build_saliency_maps, PolicyKind};

fn main() {
    let data = std::env::var("SACCADE_DATA_DIR").unwrap_or_else(|_| "data/mnist".into());
    let train = load_dir(Path::new(&data), Split::Train).unwrap();
    let test = load_dir(Path::new(&data), Split::Test).unwrap();
    let examples = train.as_examples();
    let bank = ModelBank::train(&Geometry::mnist(), NUM_CLASSES, &examples[..55_000]).unwrap();
    let maps = build_saliency_maps(&bank).unwrap();

    for class in 1..=3 {
        let map = &maps[class];
        println!("== saliency map class {class} ==");
        for i in 0..14 {
            let row: String = (0..14)
                .map(|j| {
                    let v = map.score(i, j);
                    match (v * 10.0) as usize {
                        0 => '.',
                        1 => '1',
                        2 => '2',
                        3 => '3',
                        4 => '4',
                        5 => '5',
                        6 => '6',
                        7 => '7',
                        8 => '8',
                        _ => '#',
                    }
                })
                .collect();
            println!("  {row}");
        }
        let mut scored: Vec<((usize, usize), f64)> = (0..14)
            .flat_map(|i| (0..14).map(move |j| ((i, j), 0.0)))
            .collect();
        for entry in &mut scored {
            entry.1 = map.score(entry.0 .0, entry.0 .1);
        }
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        println!("top-10: {:?}", &scored[..10].iter().map(|(g, s)| (*g, (s * 1000.0).round() / 1000.0)).collect::<Vec<_>>());
        let top20 = &scored[..20];
        let central = top20
            .iter()
            .filter(|((i, j), _)| (2..12).contains(i) && (2..12).contains(j))
            .count();
        println!("top-20 in central 10x10: {central}/20");
    }

    // trace shapes for a few test images
    for policy in [PolicyKind::predictive(), PolicyKind::Saliency] {
        println!("== {policy} traces at 1e-5 ==");
        for idx in [0usize, 1, 2, 3] {
            let img = &test.images[idx];
            let pyr = WaveletPyramid::forward(bank.geometry(), &img.pixels).unwrap();
            let config = ExplorationConfig {
                h_ref: 1e-5,
                policy,
                max_saccades: 196,
                seed: 1,
            };
            let id = ImageId { index: idx, split: "test".into(), label: img.label as usize };
            let maps_opt = (policy == PolicyKind::Saliency).then_some(&maps[..]);
            let trace = explore(&pyr, &bank, maps_opt, &config, &id).unwrap();
            let gazes: Vec<(usize, usize)> = trace.steps.iter().take(12).map(|s| s.gaze).collect();
            let guesses: Vec<usize> = trace
                .steps
                .iter()
                .take(12)
                .map(|s| {
                    s.belief
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                        .unwrap()
                        .0
                })
                .collect();
            println!(
                "  img {idx} (label {}): {} saccades, pred {}, gazes {:?} guesses {:?}",
                img.label,
                trace.saccade_count(),
                trace.predicted_label,
                gazes,
                guesses
            );
        }
    }
}
