//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skillsphere::adversarial::{
    disc_loss, disc_loss_terms, imitation_reward, matched_batch, mismatched_batch, policy_stand_in_batch,
    train_discriminator, DiscConfig, DiscriminatorModel, ExpansionConfig,
};
use skillsphere::encoder::{
    compute_class_means, nc1_variability, nc2_etf_deviation, nearest_center, train_encoder, uniformity_variance,
    EncoderConfig, EncoderModel, WindowSet,
};
use skillsphere::metrics::{all_frames, dataset_coverage, frame_similarity, motion_completeness, SimilarityConfig};
use skillsphere::motion::{synth_dataset, Frame, MotionDataset};
use skillsphere::nn::{softmax_cross_entropy, Activation, DenseNet, Layer, Matrix};
use skillsphere::progress::{positional_encoding, progress_embed, DEFAULT_BASE};
use skillsphere::sphere::{
    log_normalizer, make_simplex_etf, mean_resultant_length, sample_uniform_sphere, UnitVector, VonMisesFisher,
};
use skillsphere::RngSeed;

use common::*;

const DATA_SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn nc_dataset() -> MotionDataset {
    synth_dataset(8, 4, 30.0, (2.0, 6.0), RngSeed(DATA_SEED)).unwrap()
}

fn nc_config() -> EncoderConfig {
    EncoderConfig {
        latent_dim: 16,
        epochs: 400,
        learning_rate: 0.01,
        seed: RngSeed(DATA_SEED),
        ..EncoderConfig::default()
    }
}

fn vmf_fidelity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (p, kappa) in [(3usize, 1.0), (16, 10.0), (64, 50.0)] {
        let mean = UnitVector::basis(p, 0).unwrap();
        let samples = VonMisesFisher::new(mean, kappa).unwrap().sample(20_000, RngSeed(p as u64)).unwrap();
        let mut sum = vec![0.0; p];
        for z in &samples {
            sum.iter_mut().zip(z.as_slice()).for_each(|(s, x)| *s += x);
        }
        let r = sum.iter().map(|x| x * x).sum::<f64>().sqrt() / samples.len() as f64;
        let target = mean_resultant_length(p, kappa).unwrap();
        worst = worst.max((r - target).abs());
        parts.push(format!("(p={p},κ={kappa}) R̄={r:.4} vs {target:.4}"));
    }
    let t = start.elapsed();
    outcome(worst <= 0.01 && t < Duration::from_secs(10), format!("{}; max |Δ|={worst:.4}; {t:.2?}", parts.join(", ")))
}

fn vmf_normalizer() -> Outcome {
    let mut worst_rel = 0.0f64;
    for p in [3usize, 16, 64] {
        for kappa in [0.0, 1.0, 50.0, 500.0] {
            let a = log_normalizer(p, kappa).unwrap();
            let q = log_normalizer_quadrature(p, kappa);
            worst_rel = worst_rel.max((a - q).abs() / q.abs());
        }
    }
    let mut worst_closed = 0.0f64;
    for kappa in [0.0, 1.0, 50.0, 500.0] {
        worst_closed = worst_closed.max((log_normalizer(3, kappa).unwrap() - log_normalizer_p3(kappa)).abs());
    }
    outcome(
        worst_rel <= 1e-6 && worst_closed <= 1e-10,
        format!("max rel err vs quadrature {worst_rel:.2e}; max p=3 closed-form err {worst_closed:.2e}"),
    )
}

/// Finite-difference check of sampled parameters of `net` under `loss`.
fn check_params(net: &DenseNet, analytic: &[f64], loss: &dyn Fn(&DenseNet) -> f64, per_tensor: usize, rng: &mut ChaCha8Rng) -> (usize, usize, f64) {
    let h = 1e-5;
    let mut checked = 0;
    let mut failed = 0;
    let mut worst = 0.0f64;
    let mut offset = 0;
    for len in net.params().iter().map(|s| s.len()).collect::<Vec<_>>() {
        for _ in 0..per_tensor.min(len) {
            let k = offset + rng.random_range(0..len);
            let numeric = central_difference(|d| loss(&perturbed(net, k, d)), h);
            let a = analytic[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
            checked += 1;
            worst = worst.max(rel);
            if !close(a, numeric, 1e-4, 1e-9) {
                failed += 1;
            }
        }
        offset += len;
    }
    (checked, failed, worst)
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ds = synth_dataset(8, 4, 30.0, (2.0, 3.0), RngSeed(7)).unwrap();
    let mut notes = Vec::new();
    let mut all_ok = true;

    // Encoder: default trunk and head, cross-entropy through the l2_normalize layer.
    let cfg = EncoderConfig { latent_dim: 16, seed: RngSeed(4), ..EncoderConfig::default() };
    let set = WindowSet::build(&ds, cfg.window_s, cfg.stride_s).unwrap();
    let idx: Vec<usize> = (0..set.len()).step_by(set.len().div_ceil(12)).collect();
    let x = set.inputs.select_rows(&idx);
    let labels: Vec<usize> = idx.iter().map(|&i| set.labels[i]).collect();
    for trained in [false, true] {
        let model = if trained {
            let c = EncoderConfig { epochs: 20, ..cfg.clone() };
            train_encoder(&ds, &c).unwrap().0
        } else {
            EncoderModel::init(set.inputs.cols(), 8, &cfg, ds.class_names()).unwrap()
        };
        let ce = |net: &DenseNet| softmax_cross_entropy(&net.predict(&x).unwrap(), &labels).unwrap().0;
        let (logits, cache) = model.net.forward(&x).unwrap();
        let (_, dl) = softmax_cross_entropy(&logits, &labels).unwrap();
        let grads = model.net.backward(&cache, &dl).unwrap();
        let (c, f, w) = check_params(&model.net, &grads.as_slices().concat(), &ce, 40, &mut rng);
        all_ok &= f == 0;
        notes.push(format!("encoder{} {c} params {f} fail (worst {w:.1e})", if trained { "(trained)" } else { "" }));
    }

    // Discriminator: default architecture, full loss with w_gp = 5.
    let means = make_simplex_etf(8, 16, RngSeed(5)).unwrap().into_centers();
    let exp = ExpansionConfig::default();
    let m = matched_batch(&ds, &means, exp, 8, RngSeed(1)).unwrap();
    let mm = mismatched_batch(&ds, &means, exp, 8, RngSeed(2)).unwrap();
    let pol = policy_stand_in_batch(&ds, &means, exp, 8, 0.3, RngSeed(3)).unwrap();
    let d = m[0].transition.s_t.len();
    let disc = DiscriminatorModel::init(d, 16, &[256, 128], RngSeed(6)).unwrap();
    let loss = |net: &DenseNet| {
        let probe = DiscriminatorModel::from_net(net.clone(), d, 16).unwrap();
        disc_loss(&probe, &m, &mm, &pol, 5.0).unwrap().0
    };
    let (_, grads) = disc_loss(&disc, &m, &mm, &pol, 5.0).unwrap();
    let (c, f, w) = check_params(&disc.net, &grads.as_slices().concat(), &loss, 40, &mut rng);
    all_ok &= f == 0;
    notes.push(format!("discriminator loss {c} params {f} fail (worst {w:.1e})"));

    // Penalty value against a finite-difference input gradient.
    let x = disc.batch_inputs(&m).unwrap();
    let (penalty, _) = disc_loss_terms(&disc, &m, &mm, &pol, 5.0).map(|(t, g)| (t.penalty, g)).unwrap();
    let mut fd_penalty = 0.0;
    for i in 0..x.rows() {
        for j in 0..2 * d {
            let g = central_difference(|h| disc.net.predict(&perturbed_input(&x, i, j, h)).unwrap().get(i, 0), 1e-5);
            fd_penalty += g * g;
        }
    }
    fd_penalty /= x.rows() as f64;
    let pen_ok = close(penalty, fd_penalty, 1e-4, 1e-12);
    all_ok &= pen_ok;
    notes.push(format!("penalty {penalty:.6e} vs FD {fd_penalty:.6e}"));

    // Penalty parameter gradients on a smooth net (tanh) and on the default relu net.
    for (name, net) in [
        ("tanh", DenseNet::init(2 * d + 16, &[skillsphere::nn::LayerSpec::new(32, Activation::Tanh), skillsphere::nn::LayerSpec::new(1, Activation::Sigmoid)], RngSeed(8)).unwrap()),
        ("relu", disc.net.clone()),
    ] {
        let (_, pg) = net.input_gradient_penalty(&x, 0..2 * d).unwrap();
        let pen = |n: &DenseNet| n.input_gradient_penalty(&x, 0..2 * d).unwrap().0;
        let (c, f, w) = check_params(&net, &pg.as_slices().concat(), &pen, 40, &mut rng);
        all_ok &= f == 0;
        notes.push(format!("penalty-grad({name}) {c} params {f} fail (worst {w:.1e})"));
    }
    outcome(all_ok, notes.join("; "))
}

fn neural_collapse(shared: &mut Option<(MotionDataset, EncoderModel)>) -> Outcome {
    let start = Instant::now();
    let ds = nc_dataset();
    let (model, trace) = train_encoder(&ds, &nc_config()).unwrap();
    let t = start.elapsed();
    let means = compute_class_means(&model, &ds).unwrap();
    let nc2 = nc2_etf_deviation(&means.means).unwrap();
    let last = trace.last();
    let target = -1.0 / 7.0;
    let quarter = &trace.epochs[trace.epochs.len() / 4 - 1];
    let set = WindowSet::build(&ds, model.window_s, model.stride_s).unwrap();
    let feats = model.features(&set.inputs).unwrap();
    let recovered = feats
        .row_iter()
        .zip(&set.labels)
        .filter(|(f, &l)| nearest_center(&UnitVector::new(f.to_vec()).unwrap(), &means.means).unwrap() == l)
        .count() as f64
        / set.len() as f64;
    let nc1 = nc1_variability(&model, &ds, &means).unwrap();
    let pass = last.loss < 0.05
        && last.nc1 < 0.2 * trace.initial.nc1
        && (nc2.mean_cosine - target).abs() <= 0.05
        && t < Duration::from_secs(300);
    let detail = format!(
        "loss {:.4}; NC1 {:.2e} vs 0.2·{:.2e}; mean cos {:.4} (target {target:.4}, std {:.4}); NC1(E/4) {:.2e}; nearest-center recovery {:.3}; consistent NC1 {:.2e}; {t:.2?}",
        last.loss, last.nc1, trace.initial.nc1, nc2.mean_cosine, nc2.cosine_std, quarter.nc1, recovered, nc1
    );
    *shared = Some((ds, model));
    outcome(pass, detail)
}

fn uniformity(shared: &Option<(MotionDataset, EncoderModel)>) -> Outcome {
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    let mut etf = Vec::new();
    let mut random = Vec::new();
    for seed in 0..20u64 {
        let e = make_simplex_etf(16, 64, RngSeed(seed)).unwrap().into_centers();
        etf.push(uniformity_variance(&e, 1000, RngSeed(1000 + seed)).unwrap().1);
        let r = sample_uniform_sphere(64, 16, RngSeed(seed)).unwrap();
        random.push(uniformity_variance(&r, 1000, RngSeed(1000 + seed)).unwrap().1);
    }
    let (me, mr) = (median(etf), median(random));
    let (ds, trained) = shared.as_ref().expect("criterion 4 runs first");
    let untrained = EncoderModel::init(trained.net.input_dim(), ds.len(), &nc_config(), ds.class_names()).unwrap();
    let vt = uniformity_variance(&compute_class_means(trained, ds).unwrap().means, 1000, RngSeed(77)).unwrap().1;
    let vu = uniformity_variance(&compute_class_means(&untrained, ds).unwrap().means, 1000, RngSeed(77)).unwrap().1;
    outcome(
        me < mr && vt < vu,
        format!("median variance ETF {me:.1} vs random {mr:.1}; trained encoder {vt:.1} vs untrained {vu:.1}"),
    )
}

fn constant_disc(d: usize, p: usize) -> DiscriminatorModel {
    let layer = Layer { weights: Matrix::zeros(1, 2 * d + p), bias: vec![0.0], activation: Activation::Sigmoid };
    DiscriminatorModel::from_net(DenseNet::new(vec![layer]).unwrap(), d, p).unwrap()
}

fn objective_constants() -> Outcome {
    let ds = synth_dataset(4, 4, 30.0, (2.0, 3.0), RngSeed(2)).unwrap();
    let means = make_simplex_etf(4, 8, RngSeed(2)).unwrap().into_centers();
    let exp = ExpansionConfig::default();
    let m = matched_batch(&ds, &means, exp, 32, RngSeed(1)).unwrap();
    let mm = mismatched_batch(&ds, &means, exp, 32, RngSeed(2)).unwrap();
    let pol = policy_stand_in_batch(&ds, &means, exp, 32, 0.3, RngSeed(3)).unwrap();
    let d = constant_disc(m[0].transition.s_t.len(), 8);
    let (loss, _) = disc_loss(&d, &m, &mm, &pol, 0.0).unwrap();
    let (terms, _) = disc_loss_terms(&d, &m, &mm, &pol, 5.0).unwrap();
    let s = &m[0].transition;
    let r = imitation_reward(&d, &s.s_t, &s.s_next, &m[0].embedding).unwrap();
    let ln2 = std::f64::consts::LN_2;
    let (e1, e2) = ((loss - 3.0 * ln2).abs(), (r - ln2).abs());
    outcome(
        e1 <= 1e-12 && e2 <= 1e-12 && terms.penalty == 0.0,
        format!("|loss − 3 ln 2| = {e1:.1e}; |reward − ln 2| = {e2:.1e}; penalty {}", terms.penalty),
    )
}

fn discriminator_learnability(shared: &Option<(MotionDataset, EncoderModel)>) -> Outcome {
    let (ds, model) = shared.as_ref().expect("criterion 4 runs first");
    let means = compute_class_means(model, ds).unwrap().means;
    let cfg = DiscConfig {
        steps: 2000,
        w_gp: 5.0,
        expansion: ExpansionConfig { kappa: 50.0, p_center: 0.5, ..ExpansionConfig::default() },
        seed: RngSeed(DATA_SEED),
        ..DiscConfig::default()
    };
    let start = Instant::now();
    let (_, trace) = train_discriminator(ds, &means, &cfg).unwrap();
    let t = start.elapsed();
    let last = trace.last().unwrap();
    outcome(
        last.acc_matched >= 0.9 && last.acc_mismatched >= 0.9 && t < Duration::from_secs(300),
        format!("step {}: acc matched {:.3}, mismatched {:.3}; loss {:.4}; {t:.2?}", last.step, last.acc_matched, last.acc_mismatched, last.loss),
    )
}

fn metrics_consistency() -> Outcome {
    let ds = synth_dataset(8, 4, 30.0, (2.0, 4.0), RngSeed(3)).unwrap();
    let cfg = SimilarityConfig::default();
    let cov = dataset_coverage(&ds, &all_frames(&ds), &cfg, 0.5).unwrap();
    let self_cov = cov.covered_fraction;
    let partial = dataset_coverage(&ds, &ds.clip(0).frames, &cfg, 0.5).unwrap();
    let thresholds: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let fractions: Vec<f64> = thresholds.iter().map(|&t| partial.fraction_above(t)).collect();
    let monotone = fractions.windows(2).all(|w| w[0] >= w[1]);
    let self_complete = ds.clips().iter().all(|c| motion_completeness(c, &c.frames, &cfg).unwrap() == 1.0);
    let clip = two_pose_clip();
    let half = motion_completeness(&clip, &clip.frames[..20], &cfg).unwrap();
    let half_ok = (half - 0.5).abs() <= 1.0 / 40.0 + 1e-15;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let random_frame = |rng: &mut ChaCha8Rng| {
        let joints = (0..4).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let mut f = Frame::new([0.0; 3], 0.0, joints);
        f.root_velocity = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0)];
        f
    };
    for _ in 0..1000 {
        let (a, b) = (random_frame(&mut rng), random_frame(&mut rng));
        let (alpha_jp, alpha_v) = (rng.random_range(0.1..5.0), rng.random_range(0.01..1.0));
        let (jp, v) = frame_similarity(&a, &b, &SimilarityConfig::new(alpha_jp, alpha_v).unwrap()).unwrap();
        let (ojp, ov) = kernels_by_hand(&a, &b, alpha_jp, alpha_v);
        worst = worst.max((jp - ojp).abs()).max((v - ov).abs());
    }
    outcome(
        self_cov == 1.0 && monotone && self_complete && half_ok && worst <= 1e-12,
        format!("self-coverage {self_cov}; threshold-monotone {monotone}; self-completeness {self_complete}; half-clip {half}; kernel oracle max err {worst:.1e}"),
    )
}

fn progress_encoding() -> Outcome {
    let mut worst = 0.0f64;
    for d in [2usize, 20, 64, 128] {
        for k in 0..256u64 {
            let pe = positional_encoding(k, d, DEFAULT_BASE).unwrap();
            worst = worst.max((pe.iter().map(|x| x * x).sum::<f64>() - d as f64 / 2.0).abs());
        }
    }
    let s: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
    let identity = [2.0, 2.5, 10.0].iter().all(|&t| progress_embed(&s, t, 0.5, 2.0, DEFAULT_BASE).unwrap() == s);
    let a = progress_embed(&s, 0.99, 0.5, 2.0, DEFAULT_BASE).unwrap();
    let b = progress_embed(&s, 1.01, 0.5, 2.0, DEFAULT_BASE).unwrap();
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    outcome(
        worst <= 1e-12 && identity && diff > 0.0,
        format!("max | ||PE||² − d/2 | = {worst:.1e}; identity for t ≥ L {identity}; boundary offset difference {diff:.3}"),
    )
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_skillsphere"))
        .args(args)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let run_all = |dir: &Path| -> Vec<String> {
        let s = |p: &Path| p.to_str().unwrap().to_owned();
        let ds = dir.join("ds");
        let manifest = ds.join("manifest.json");
        let enc = dir.join("enc");
        let means = enc.join("class_means.json");
        let gen = ds.join("clips/skill01.json");
        let steps: Vec<(&str, Vec<String>)> = vec![
            ("synth", vec!["synth".into(), "--clips".into(), "4".into(), "--seed".into(), "3".into(), "--out".into(), s(&ds)]),
            ("train-encoder", vec!["train-encoder".into(), "--manifest".into(), s(&manifest), "--epochs".into(), "10".into(), "--latent-dim".into(), "8".into(), "--seed".into(), "3".into(), "--out".into(), s(&enc)]),
            ("uniformity", vec!["uniformity".into(), "--centers".into(), "random".into(), "--n".into(), "6".into(), "--dim".into(), "8".into(), "--seed".into(), "3".into(), "--out".into(), s(&dir.join("uniformity.json"))]),
            ("expand", vec!["expand".into(), "--means".into(), s(&means), "--clip".into(), "skill02".into(), "--count".into(), "200".into(), "--seed".into(), "3".into(), "--out".into(), s(&dir.join("expand.csv"))]),
            ("train-disc", vec!["train-disc".into(), "--manifest".into(), s(&manifest), "--means".into(), s(&means), "--steps".into(), "20".into(), "--seed".into(), "3".into(), "--out".into(), s(&dir.join("disc"))]),
            ("score", vec!["score".into(), "--manifest".into(), s(&manifest), "--generated".into(), s(&gen), "--out".into(), s(&dir.join("score"))]),
            ("pca", vec!["pca".into(), "--centers".into(), "means".into(), "--means".into(), s(&means), "--seed".into(), "3".into(), "--out".into(), s(&dir.join("pca"))]),
            ("pe-dump", vec!["pe-dump".into(), "--stages".into(), "16".into(), "--dim".into(), "8".into(), "--out".into(), s(&dir.join("pe.csv"))]),
        ];
        let mut failed = Vec::new();
        for (name, args) in steps {
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            if !run_cli(&refs) {
                failed.push(name.to_owned());
            }
        }
        failed
    };
    let a = root.path().join("a");
    let b = root.path().join("b");
    let fa = run_all(&a);
    let fb = run_all(&b);
    let (ba, bb) = (dir_bytes(&a), dir_bytes(&b));
    let same = ba == bb;
    let differing: Vec<&str> = ba.iter().zip(&bb).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    outcome(
        fa.is_empty() && fb.is_empty() && same && !ba.is_empty(),
        format!("{} files compared across 8 commands; failures {fa:?}/{fb:?}; differing {differing:?}", ba.len()),
    )
}

fn main() {
    let mut shared = None;
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut Option<(MotionDataset, EncoderModel)>) -> Outcome>)> = vec![
        ("1 vMF sampler fidelity", Box::new(|_| vmf_fidelity())),
        ("2 vMF normalizer", Box::new(|_| vmf_normalizer())),
        ("3 gradient correctness", Box::new(|_| gradient_correctness())),
        ("4 neural collapse", Box::new(neural_collapse)),
        ("5 uniformity diagnostic", Box::new(|s| uniformity(s))),
        ("6 objective constants", Box::new(|_| objective_constants())),
        ("7 discriminator learnability", Box::new(|s| discriminator_learnability(s))),
        ("8 metrics self-consistency", Box::new(|_| metrics_consistency())),
        ("9 progress encoding", Box::new(|_| progress_encoding())),
        ("10 CLI determinism", Box::new(|_| determinism())),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let o = check(&mut shared);
        if !o.pass {
            failures += 1;
        }
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
