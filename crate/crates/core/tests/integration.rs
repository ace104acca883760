//! Cross-module integration tests.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skillsphere::adversarial::{matched_batch, ExpansionConfig, DiscriminatorModel};
use skillsphere::encoder::{compute_class_means, train_encoder, EncoderConfig, EncoderModel};
use skillsphere::metrics::{dataset_coverage, motion_completeness, SimilarityConfig};
use skillsphere::motion::{load_dataset, synth_dataset, write_dataset};
use skillsphere::nn::{Activation, DenseNet, LayerSpec, Matrix};
use skillsphere::sphere::{log_normalizer, make_simplex_etf};
use skillsphere::RngSeed;

use common::*;

#[test]
fn dataset_round_trip_then_encoder_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synth_dataset(4, 4, 30.0, (2.0, 3.0), RngSeed(9)).unwrap();
    let manifest = write_dataset(&ds, dir.path()).unwrap();
    let loaded = load_dataset(&manifest).unwrap();
    assert_eq!(loaded.class_names(), ds.class_names());
    assert_eq!(loaded.total_frames(), ds.total_frames());

    let cfg = EncoderConfig { latent_dim: 8, epochs: 30, seed: RngSeed(9), ..EncoderConfig::default() };
    let (model, trace) = train_encoder(&loaded, &cfg).unwrap();
    assert!(trace.last().loss < trace.initial.loss);

    let path = dir.path().join("enc.ncse");
    model.save(&path).unwrap();
    let back = EncoderModel::load(&path).unwrap();
    let a = compute_class_means(&model, &loaded).unwrap();
    let b = compute_class_means(&back, &loaded).unwrap();
    assert_eq!(a.means, b.means);

    let batch = matched_batch(&loaded, &a.means, ExpansionConfig::default(), 16, RngSeed(1)).unwrap();
    let disc = DiscriminatorModel::init(batch[0].transition.s_t.len(), 8, &[32], RngSeed(2)).unwrap();
    let out = disc.outputs(&batch).unwrap();
    assert!(out.iter().all(|&o| o > 0.0 && o < 1.0));
}

#[test]
fn generated_copy_of_one_clip_covers_only_that_clip() {
    let ds = synth_dataset(4, 4, 30.0, (2.0, 3.0), RngSeed(4)).unwrap();
    let cfg = SimilarityConfig::default();
    let gen = ds.clip(2).frames.clone();
    let cov = dataset_coverage(&ds, &gen, &cfg, 0.5).unwrap();
    assert!(cov.covered_fraction >= 0.25 && cov.covered_fraction < 1.0);
    assert_eq!(motion_completeness(ds.clip(2), &gen, &cfg).unwrap(), 1.0);
}

#[test]
fn etf_means_feed_the_discriminator_batches() {
    let ds = synth_dataset(3, 4, 30.0, (2.0, 3.0), RngSeed(5)).unwrap();
    let means = make_simplex_etf(3, 8, RngSeed(5)).unwrap().into_centers();
    let batch = matched_batch(&ds, &means, ExpansionConfig::default(), 50, RngSeed(6)).unwrap();
    assert!(batch.iter().any(|s| s.at_center) && batch.iter().any(|s| !s.at_center));
    for s in &batch {
        assert_eq!(s.embedding.as_slice().len(), 8);
        if s.at_center {
            assert_eq!(s.embedding.as_slice(), means[s.center_class].as_slice());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalizer_matches_quadrature(p in 2usize..96, kappa in 0.0f64..300.0) {
        let a = log_normalizer(p, kappa).unwrap();
        let q = log_normalizer_quadrature(p, kappa);
        prop_assert!(close(a, q, 1e-8, 1e-10), "p={p} κ={kappa}: {a} vs {q}");
    }

    #[test]
    fn penalty_equals_finite_difference_input_gradient(seed in 0u64..1000, rows in 1usize..5) {
        let net = DenseNet::init(7, &[LayerSpec::new(9, Activation::Tanh), LayerSpec::new(1, Activation::Sigmoid)], RngSeed(seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..rows * 7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = Matrix::from_vec(rows, 7, data).unwrap();
        let (pen, _) = net.input_gradient_penalty(&x, 0..4).unwrap();
        let mut fd = 0.0;
        for i in 0..rows {
            for j in 0..4 {
                let g = central_difference(|h| net.predict(&perturbed_input(&x, i, j, h)).unwrap().get(i, 0), 1e-5);
                fd += g * g;
            }
        }
        fd /= rows as f64;
        prop_assert!(close(pen, fd, 1e-5, 1e-12), "{pen} vs {fd}");
    }
}

#[test]
fn cli_training_run_reaches_the_etf_gap() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_skillsphere");
    let ds = dir.path().join("ds");
    let enc = dir.path().join("enc");
    let run = |args: &[&std::ffi::OsStr]| std::process::Command::new(bin).args(args).status().unwrap().code();
    assert_eq!(run(&["synth".as_ref(), "--clips".as_ref(), "8".as_ref(), "--seed".as_ref(), "1".as_ref(), "--out".as_ref(), ds.as_os_str()]), Some(0));
    let manifest = ds.join("manifest.json");
    assert_eq!(
        run(&[
            "train-encoder".as_ref(), "--manifest".as_ref(), manifest.as_os_str(), "--epochs".as_ref(), "400".as_ref(),
            "--latent-dim".as_ref(), "16".as_ref(), "--seed".as_ref(), "1".as_ref(), "--out".as_ref(), enc.as_os_str(),
        ]),
        Some(0)
    );
    let csv = std::fs::read_to_string(enc.join("encoder_trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 402);
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 400.0);
    assert!(last[3] <= 0.05, "final nc2_gap {}", last[3]);
}
