//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::*;
use crate::adversarial::{expansion_samples, train_discriminator, DiscConfig, ExpansionConfig};
use crate::encoder::{train_encoder, uniformity_variance, ClassMeans, EncoderConfig};
use crate::fsio;
use crate::metrics::{dataset_coverage, motion_completeness, SimilarityConfig};
use crate::motion::{load_clip, load_dataset, synth_dataset, write_dataset};
use crate::progress::positional_encoding;
use crate::rng::{streams, RngSeed};
use crate::sphere::{make_simplex_etf, pca_project, sample_uniform_sphere, UnitVector};

type CmdResult = std::result::Result<(), CliError>;

/// Class centers as written by `train-encoder`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeansFile {
    pub class_names: Vec<String>,
    pub means: Vec<Vec<f64>>,
}

impl MeansFile {
    fn from_means(names: Vec<String>, means: &ClassMeans) -> Self {
        MeansFile {
            class_names: names,
            means: means.means.iter().map(|m| m.as_slice().to_vec()).collect(),
        }
    }

    fn load(path: &Path) -> std::result::Result<(Vec<String>, Vec<UnitVector>), CliError> {
        let bad = |reason: String| CliError::Run(Error::BadModelFile(format!("{}: {reason}", path.display())));
        let file: MeansFile = serde_json::from_slice(&fsio::read(path)?).map_err(|e| bad(e.to_string()))?;
        if file.class_names.len() != file.means.len() || file.means.len() < 2 {
            return Err(bad("need at least two named means".into()));
        }
        let dim = file.means[0].len();
        if dim < 2 || file.means.iter().any(|m| m.len() != dim) {
            return Err(bad("means must share a dimension of at least 2".into()));
        }
        let means = file
            .means
            .into_iter()
            .map(|m| UnitVector::new(m).map_err(|e| bad(e.to_string())))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok((file.class_names, means))
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    Ok(fsio::write_atomic(path, &json_bytes(value))?)
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    Ok(fsio::write_atomic(path, text.as_bytes())?)
}

fn vector_csv(header_prefix: &str, dim: usize, rows: &[UnitVector]) -> String {
    let header: Vec<String> = (0..dim).map(|i| format!("{header_prefix}{i}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.as_slice().iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub(super) fn dispatch(cli: Cli) -> CmdResult {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Synth(a) => synth(&cfg, a),
        Command::TrainEncoder(a) => train_enc(&cfg, a),
        Command::Uniformity(a) => uniformity(&cfg, a),
        Command::Expand(a) => expand(&cfg, a),
        Command::TrainDisc(a) => train_disc(&cfg, a),
        Command::Score(a) => score(&cfg, a),
        Command::Pca(a) => pca(&cfg, a),
        Command::PeDump(a) => pe_dump(&cfg, a),
    }
}

fn synth(cfg: &RunConfig, a: SynthArgs) -> CmdResult {
    let clips = a.clips.ok_or_else(|| CliError::Usage("--clips is required".into()))?;
    let out = cfg.out(a.out)?;
    let ds = synth_dataset(
        clips as usize,
        a.joints as usize,
        a.fps,
        (a.min_duration, a.max_duration),
        RngSeed(cfg.seed(a.seed)),
    )?;
    write_dataset(&ds, &out)?;
    Ok(())
}

fn train_enc(cfg: &RunConfig, a: TrainEncoderArgs) -> CmdResult {
    let manifest = cfg.manifest(a.manifest)?;
    let out = cfg.out(a.out)?;
    if a.batch_size == 0 {
        return Err(CliError::Usage("--batch-size must be positive".into()));
    }
    let enc_cfg = EncoderConfig {
        latent_dim: cfg.latent_dim(a.latent_dim)?,
        epochs: cfg.epochs(a.epochs)?,
        learning_rate: cfg.lr(a.lr, 0.01)?,
        batch_size: a.batch_size,
        window_s: cfg.window_s(a.window_s)?,
        stride_s: cfg.stride_s(a.stride_s)?,
        seed: RngSeed(cfg.seed(a.seed)),
        ..EncoderConfig::default()
    };
    let ds = load_dataset(&manifest)?;
    let (model, trace) = train_encoder(&ds, &enc_cfg)?;
    let means = crate::encoder::compute_class_means(&model, &ds)?;
    model.save(&out.join("encoder.ncse"))?;
    write_text(&out.join("encoder_trace.csv"), &trace.to_csv())?;
    write_json(&out.join("class_means.json"), &MeansFile::from_means(ds.class_names(), &means))
}

/// Centers for `uniformity` and `pca`.
fn centers(source: CenterSource, n: usize, dim: usize, means: Option<&Path>, seed: RngSeed) -> std::result::Result<(Vec<String>, Vec<UnitVector>), CliError> {
    let names = |n: usize| (0..n).map(|i| format!("c{i}")).collect::<Vec<_>>();
    match source {
        CenterSource::Etf => {
            if n < 2 {
                return Err(CliError::Usage("--n must be at least 2".into()));
            }
            Ok((names(n), make_simplex_etf(n, dim, seed.stream(streams::CENTERS))?.into_centers()))
        }
        CenterSource::Random => {
            if n < 2 || dim < 2 {
                return Err(CliError::Usage("--n and --dim must be at least 2".into()));
            }
            Ok((names(n), sample_uniform_sphere(dim, n, seed.stream(streams::CENTERS))?))
        }
        CenterSource::Means => {
            let path = means.ok_or_else(|| CliError::Usage("--centers means needs --means".into()))?;
            MeansFile::load(path)
        }
    }
}

#[derive(Serialize)]
struct UniformityReport {
    n: usize,
    p: usize,
    samples_per_center: usize,
    seed: u64,
    counts: Vec<usize>,
    variance: f64,
}

fn uniformity(cfg: &RunConfig, a: UniformityArgs) -> CmdResult {
    let out = cfg.out(a.out)?;
    let seed = cfg.seed(a.seed);
    let dim = cfg.latent_dim(a.dim)?;
    if a.samples_per_center == 0 {
        return Err(CliError::Usage("--samples-per-center must be positive".into()));
    }
    let (_, means) = centers(a.centers, a.n, dim, a.means.as_deref(), RngSeed(seed))?;
    let (counts, variance) = uniformity_variance(&means, a.samples_per_center, RngSeed(seed))?;
    write_json(
        &out,
        &UniformityReport {
            n: means.len(),
            p: means[0].dim(),
            samples_per_center: a.samples_per_center,
            seed,
            counts,
            variance,
        },
    )
}

fn expansion_cfg(cfg: &RunConfig, kappa: Option<f64>, p_center: Option<f64>, interval_s: Option<f64>) -> std::result::Result<ExpansionConfig, CliError> {
    Ok(ExpansionConfig {
        kappa: cfg.kappa(kappa)?,
        p_center: cfg.p_center(p_center)?,
        interval_s: cfg.interval_s(interval_s)?,
    })
}

fn expand(cfg: &RunConfig, a: ExpandArgs) -> CmdResult {
    let out = cfg.out(a.out)?;
    let exp = expansion_cfg(cfg, a.kappa, a.p_center, None)?;
    let (names, means) = MeansFile::load(&a.means)?;
    let class = names
        .iter()
        .position(|n| n == &a.clip)
        .ok_or_else(|| CliError::from(Error::UnknownClip(a.clip.clone())))?;
    let seed = RngSeed(cfg.seed(a.seed)).stream(streams::EXPANSION);
    let samples = if a.count == 0 { Vec::new() } else { expansion_samples(&means[class], exp, a.count, seed)? };
    write_text(&out, &vector_csv("z", means[class].dim(), &samples))
}

fn train_disc(cfg: &RunConfig, a: TrainDiscArgs) -> CmdResult {
    let manifest = cfg.manifest(a.manifest)?;
    let out = cfg.out(a.out)?;
    let ds = load_dataset(&manifest)?;
    if ds.len() < 2 {
        return Err(CliError::Run(Error::SingleClassDataset(ds.len())));
    }
    let seed = RngSeed(cfg.seed(a.seed));
    let means = match &a.means {
        Some(path) => {
            let (names, means) = MeansFile::load(path)?;
            if names != ds.class_names() {
                return Err(CliError::Run(Error::BadModelFile(format!(
                    "{}: class names do not match the dataset",
                    path.display()
                ))));
            }
            means
        }
        None => make_simplex_etf(ds.len(), cfg.latent_dim(a.latent_dim)?, seed.stream(streams::CENTERS))?.into_centers(),
    };
    if !(a.noise_sigma >= 0.0) || a.steps == 0 {
        return Err(CliError::Usage("--noise-sigma must be ≥ 0 and --steps ≥ 1".into()));
    }
    let disc_cfg = DiscConfig {
        steps: a.steps,
        learning_rate: cfg.lr(a.lr, 1e-3)?,
        w_gp: cfg.w_gp(a.w_gp)?,
        expansion: expansion_cfg(cfg, a.kappa, a.p_center, a.interval_s)?,
        noise_sigma: a.noise_sigma,
        seed,
        ..DiscConfig::default()
    };
    let (model, trace) = train_discriminator(&ds, &means, &disc_cfg)?;
    model.save(&out.join("disc.ncse"))?;
    write_text(&out.join("disc_trace.csv"), &trace.to_csv())
}

fn score(cfg: &RunConfig, a: ScoreArgs) -> CmdResult {
    let manifest = cfg.manifest(a.manifest)?;
    let out = cfg.out(a.out)?;
    let sim = SimilarityConfig {
        alpha_jp: cfg.alpha_jp(a.alpha_jp)?,
        alpha_v: cfg.alpha_v(a.alpha_v)?,
    };
    if !a.threshold.is_finite() {
        return Err(CliError::Usage("--threshold must be finite".into()));
    }
    let ds = load_dataset(&manifest)?;
    let generated = load_clip(&a.generated, "generated")?;
    if generated.joint_count() != ds.joint_count() {
        return Err(CliError::Run(Error::JointCountMismatch {
            expected: ds.joint_count(),
            actual: generated.joint_count(),
        }));
    }
    let coverage = dataset_coverage(&ds, &generated.frames, &sim, a.threshold)?;
    let completeness = ds
        .clips()
        .iter()
        .map(|c| Ok((c.name.clone(), motion_completeness(c, &generated.frames, &sim)?)))
        .collect::<crate::Result<std::collections::BTreeMap<_, _>>>()?;
    write_json(&out.join("coverage.json"), &coverage.report(&ds))?;
    write_text(&out.join("histogram.csv"), &coverage.histogram.to_csv())?;
    write_json(&out.join("completeness.json"), &completeness)
}

#[derive(Serialize)]
struct PcaReport {
    points: usize,
    explained_variance: Vec<f64>,
    total_variance: f64,
    orthonormality_error: f64,
}

fn pca(cfg: &RunConfig, a: PcaArgs) -> CmdResult {
    let out = cfg.out(a.out)?;
    let seed = RngSeed(cfg.seed(a.seed));
    let dim = cfg.latent_dim(a.dim)?;
    let exp = expansion_cfg(cfg, a.kappa, a.p_center, None)?;
    let (names, means) = centers(a.centers, a.n, dim, a.means.as_deref(), seed)?;
    let mut points: Vec<(String, &str, UnitVector)> = Vec::new();
    for (name, m) in names.iter().zip(&means) {
        points.push((name.clone(), "center", m.clone()));
    }
    for (i, (name, m)) in names.iter().zip(&means).enumerate() {
        if a.samples_per_center == 0 {
            break;
        }
        let s = seed.stream(streams::EXPANSION).stream(i as u64);
        for z in expansion_samples(m, exp, a.samples_per_center, s)? {
            points.push((name.clone(), "sample", z));
        }
    }
    let vectors: Vec<&UnitVector> = points.iter().map(|(_, _, z)| z).collect();
    let proj = pca_project(&vectors.iter().map(|z| z.as_slice()).collect::<Vec<_>>(), 2)?;
    let mut csv = String::from("kind,class,pc1,pc2\n");
    for ((name, kind, _), xy) in points.iter().zip(&proj.projected) {
        writeln!(csv, "{kind},{name},{},{}", xy[0], xy[1]).unwrap();
    }
    write_text(&out.join("pca.csv"), &csv)?;
    write_json(
        &out.join("pca.json"),
        &PcaReport {
            points: points.len(),
            explained_variance: proj.explained_variance.clone(),
            total_variance: proj.total_variance,
            orthonormality_error: proj.orthonormality_error(),
        },
    )
}

fn pe_dump(cfg: &RunConfig, a: PeDumpArgs) -> CmdResult {
    let out = cfg.out(a.out)?;
    if a.dim == 0 || a.dim % 2 != 0 {
        return Err(CliError::Usage(format!("--dim must be a positive even number, got {}", a.dim)));
    }
    if !(a.base > 0.0) {
        return Err(CliError::Usage("--base must be positive".into()));
    }
    let mut csv = String::from("k");
    for i in 0..a.dim {
        write!(csv, ",c{i}").unwrap();
    }
    csv.push('\n');
    for k in 0..a.stages {
        let pe = positional_encoding(k, a.dim, a.base)?;
        write!(csv, "{k}").unwrap();
        for v in pe {
            write!(csv, ",{v}").unwrap();
        }
        csv.push('\n');
    }
    write_text(&out, &csv)
}
