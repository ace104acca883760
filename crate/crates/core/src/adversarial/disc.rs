//! Discriminator model, loss, rewards and a data-only training loop.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    make_matched_batch, make_mismatched_batch, make_policy_stand_in_batch, ConditionedSample, Expander,
    ExpansionConfig, DEFAULT_NOISE_SIGMA,
};
use crate::encoder::sidecar_path;
use crate::error::{Error, Result};
use crate::fsio;
use crate::motion::{state_dim, MotionDataset};
use crate::nn::{adam_step, format, Activation, AdamState, DenseNet, Gradients, LayerSpec, Matrix};
use crate::rng::{streams, RngSeed};
use crate::sphere::UnitVector;

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_W_GP: f64 = 5.0;

/// `D(s_t, s_{t+1}, z)`: a scalar sigmoid network over the concatenated input.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorModel {
    pub net: DenseNet,
    pub state_dim: usize,
    pub latent_dim: usize,
    pub epsilon: f64,
    pub w_gp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscSidecar {
    pub d: usize,
    pub p: usize,
    pub epsilon: f64,
    pub w_gp: f64,
}

impl DiscriminatorModel {
    pub fn init(state_dim: usize, latent_dim: usize, hidden: &[usize], seed: RngSeed) -> Result<Self> {
        let mut specs: Vec<LayerSpec> = hidden.iter().map(|&w| LayerSpec::new(w, Activation::Relu)).collect();
        specs.push(LayerSpec::new(1, Activation::Sigmoid));
        Ok(DiscriminatorModel {
            net: DenseNet::init(2 * state_dim + latent_dim, &specs, seed)?,
            state_dim,
            latent_dim,
            epsilon: DEFAULT_EPSILON,
            w_gp: DEFAULT_W_GP,
        })
    }

    pub fn from_net(net: DenseNet, state_dim: usize, latent_dim: usize) -> Result<Self> {
        if net.input_dim() != 2 * state_dim + latent_dim || net.output_dim() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "discriminator must map {} inputs to 1 output, got {} → {}",
                2 * state_dim + latent_dim,
                net.input_dim(),
                net.output_dim()
            )));
        }
        Ok(DiscriminatorModel {
            net,
            state_dim,
            latent_dim,
            epsilon: DEFAULT_EPSILON,
            w_gp: DEFAULT_W_GP,
        })
    }

    pub fn input_row(&self, s_t: &[f64], s_next: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        for (len, expected) in [(s_t.len(), self.state_dim), (s_next.len(), self.state_dim), (z.len(), self.latent_dim)] {
            if len != expected {
                return Err(Error::DimensionMismatch { expected, actual: len });
            }
        }
        let mut row = Vec::with_capacity(2 * self.state_dim + self.latent_dim);
        row.extend_from_slice(s_t);
        row.extend_from_slice(s_next);
        row.extend_from_slice(z);
        Ok(row)
    }

    pub fn batch_inputs(&self, samples: &[ConditionedSample]) -> Result<Matrix> {
        let rows = samples
            .iter()
            .map(|s| self.input_row(&s.transition.s_t, &s.transition.s_next, s.embedding.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Ok(Matrix::zeros(0, self.net.input_dim()));
        }
        Matrix::from_rows(&rows)
    }

    pub fn clamp(&self, d: f64) -> f64 {
        d.clamp(self.epsilon, 1.0 - self.epsilon)
    }

    /// Raw sigmoid outputs, one per row.
    pub fn raw_outputs(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        Ok(self.net.predict(inputs)?.as_slice().to_vec())
    }

    /// Clamped outputs in `[ε, 1 − ε]`.
    pub fn outputs(&self, samples: &[ConditionedSample]) -> Result<Vec<f64>> {
        let x = self.batch_inputs(samples)?;
        if x.rows() == 0 {
            return Ok(Vec::new());
        }
        Ok(self.raw_outputs(&x)?.into_iter().map(|d| self.clamp(d)).collect())
    }

    pub fn evaluate(&self, s_t: &[f64], s_next: &[f64], z: &UnitVector) -> Result<f64> {
        let row = self.input_row(s_t, s_next, z.as_slice())?;
        let out = self.net.predict(&Matrix::from_vec(1, row.len(), row)?)?;
        Ok(self.clamp(out.get(0, 0)))
    }

    pub fn sidecar(&self) -> DiscSidecar {
        DiscSidecar {
            d: self.state_dim,
            p: self.latent_dim,
            epsilon: self.epsilon,
            w_gp: self.w_gp,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsio::write_atomic(path, &format::encode(&self.net))?;
        let mut json = serde_json::to_vec_pretty(&self.sidecar()).expect("serializable");
        json.push(b'\n');
        fsio::write_atomic(&sidecar_path(path), &json)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let net = format::decode(&fsio::read(path)?)?;
        let side_path = sidecar_path(path);
        let side: DiscSidecar = serde_json::from_slice(&fsio::read(&side_path)?)
            .map_err(|e| Error::BadModelFile(format!("{}: {e}", side_path.display())))?;
        let mut model = DiscriminatorModel::from_net(net, side.d, side.p)
            .map_err(|e| Error::BadModelFile(format!("{}: {e}", side_path.display())))?;
        model.epsilon = side.epsilon;
        model.w_gp = side.w_gp;
        Ok(model)
    }
}

/// The four terms of the discriminator objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    /// `−mean log D` over matched samples.
    pub matched: f64,
    /// `−mean log(1 − D)` over mismatched samples.
    pub mismatched: f64,
    /// `−mean log(1 − D)` over policy samples.
    pub policy: f64,
    /// `mean ||∇_{s_t, s_next} D||²` over matched samples.
    pub penalty: f64,
}

impl LossTerms {
    pub fn total(&self, w_gp: f64) -> f64 {
        self.matched + self.mismatched + self.policy + w_gp * self.penalty
    }
}

/// Adds the gradient of `mean −log D` (`real`) or `mean −log(1 − D)` to `acc`
/// and returns the term. Clamped outputs contribute no gradient.
fn cross_entropy_term(model: &DiscriminatorModel, samples: &[ConditionedSample], real: bool, acc: &mut Gradients) -> Result<f64> {
    let x = model.batch_inputs(samples)?;
    let (out, cache) = model.net.forward(&x)?;
    let n = samples.len() as f64;
    let mut loss = 0.0;
    let mut g = Matrix::zeros(out.rows(), 1);
    for i in 0..out.rows() {
        let raw = out.get(i, 0);
        let d = model.clamp(raw);
        let active = d == raw;
        if real {
            loss -= d.ln();
            if active {
                g.set(i, 0, -1.0 / (n * d));
            }
        } else {
            loss -= (1.0 - d).ln();
            if active {
                g.set(i, 0, 1.0 / (n * (1.0 - d)));
            }
        }
    }
    acc.add_scaled(&model.net.backward(&cache, &g)?, 1.0);
    Ok(loss / n)
}

/// Loss terms and the parameter gradient of `terms.total(w_gp)`.
pub fn disc_loss_terms(
    model: &DiscriminatorModel,
    matched: &[ConditionedSample],
    mismatched: &[ConditionedSample],
    policy: &[ConditionedSample],
    w_gp: f64,
) -> Result<(LossTerms, Gradients)> {
    for (batch, name) in [(matched, "matched"), (mismatched, "mismatched"), (policy, "policy")] {
        if batch.is_empty() {
            return Err(Error::EmptyBatch(name));
        }
    }
    let mut grads = Gradients::zeros_like(&model.net, 0);
    let m = cross_entropy_term(model, matched, true, &mut grads)?;
    let mm = cross_entropy_term(model, mismatched, false, &mut grads)?;
    let pol = cross_entropy_term(model, policy, false, &mut grads)?;
    let x = model.batch_inputs(matched)?;
    let (penalty, pen_grads) = model.net.input_gradient_penalty(&x, 0..2 * model.state_dim)?;
    if w_gp != 0.0 {
        grads.add_scaled(&pen_grads, w_gp);
    }
    Ok((
        LossTerms {
            matched: m,
            mismatched: mm,
            policy: pol,
            penalty,
        },
        grads,
    ))
}

pub fn disc_loss(
    model: &DiscriminatorModel,
    matched: &[ConditionedSample],
    mismatched: &[ConditionedSample],
    policy: &[ConditionedSample],
    w_gp: f64,
) -> Result<(f64, Gradients)> {
    let (terms, grads) = disc_loss_terms(model, matched, mismatched, policy, w_gp)?;
    Ok((terms.total(w_gp), grads))
}

/// `−log(1 − D(s_t, s_next, z))` with `D` clamped to `[ε, 1 − ε]`.
pub fn imitation_reward(model: &DiscriminatorModel, s_t: &[f64], s_next: &[f64], z: &UnitVector) -> Result<f64> {
    let d = model.evaluate(s_t, s_next, z)?;
    Ok(-(1.0 - d).ln())
}

/// `uᵀz`.
pub fn style_reward(u: &UnitVector, z: &UnitVector) -> Result<f64> {
    u.dot(z)
}

pub fn combined_reward(r_goal: f64, r_style: f64, w_goal: f64, w_style: f64) -> f64 {
    w_goal * r_goal + w_style * r_style
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub w_gp: f64,
    pub batch_size: usize,
    pub eval_size: usize,
    pub trace_every: usize,
    pub hidden: Vec<usize>,
    pub expansion: ExpansionConfig,
    pub noise_sigma: f64,
    pub seed: RngSeed,
}

impl Default for DiscConfig {
    fn default() -> Self {
        DiscConfig {
            steps: 2000,
            learning_rate: 1e-3,
            w_gp: DEFAULT_W_GP,
            batch_size: 64,
            eval_size: 512,
            trace_every: 10,
            hidden: vec![256, 128],
            expansion: ExpansionConfig::default(),
            noise_sigma: DEFAULT_NOISE_SIGMA,
            seed: RngSeed(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscTracePoint {
    pub step: usize,
    pub loss: f64,
    pub acc_matched: f64,
    pub acc_mismatched: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscTrace {
    pub points: Vec<DiscTracePoint>,
}

impl DiscTrace {
    pub fn last(&self) -> Option<&DiscTracePoint> {
        self.points.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss,acc_matched,acc_mismatched\n");
        for p in &self.points {
            writeln!(out, "{},{},{},{}", p.step, p.loss, p.acc_matched, p.acc_mismatched).unwrap();
        }
        out
    }
}

/// Fraction of matched outputs above 0.5 and of mismatched outputs below 0.5.
pub fn accuracies(model: &DiscriminatorModel, matched: &[ConditionedSample], mismatched: &[ConditionedSample]) -> Result<(f64, f64)> {
    let frac = |v: Vec<f64>, above: bool| {
        let n = v.len().max(1) as f64;
        v.iter().filter(|&&d| if above { d > 0.5 } else { d < 0.5 }).count() as f64 / n
    };
    Ok((frac(model.outputs(matched)?, true), frac(model.outputs(mismatched)?, false)))
}

/// Adam on freshly drawn batches every step. Every `trace_every` steps (and
/// after the last) the loss and accuracies are measured on a fixed
/// evaluation set drawn once from the evaluation stream.
pub fn train_discriminator(dataset: &MotionDataset, means: &[UnitVector], cfg: &DiscConfig) -> Result<(DiscriminatorModel, DiscTrace)> {
    if dataset.len() < 2 {
        return Err(Error::SingleClassDataset(dataset.len()));
    }
    if means.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            actual: means.len(),
        });
    }
    if cfg.batch_size == 0 || cfg.eval_size == 0 || cfg.trace_every == 0 {
        return Err(Error::InvalidArgument("batch_size, eval_size and trace_every must be positive".into()));
    }
    let expander = Expander::new(means, cfg.expansion)?;
    let d = state_dim(dataset.joint_count());
    let p = means[0].dim();
    let mut model = DiscriminatorModel::init(d, p, &cfg.hidden, cfg.seed.stream(streams::INIT))?;
    model.w_gp = cfg.w_gp;
    let mut adam = AdamState::for_params(cfg.learning_rate, &model.net.params());

    let mut eval_rng = cfg.seed.stream(streams::EVAL).rng();
    let eval_m = make_matched_batch(&mut eval_rng, dataset, &expander, cfg.eval_size)?;
    let eval_mm = make_mismatched_batch(&mut eval_rng, dataset, &expander, cfg.eval_size)?;
    let eval_pol = make_policy_stand_in_batch(&mut eval_rng, dataset, &expander, cfg.eval_size, cfg.noise_sigma)?;
    let trace_point = |model: &DiscriminatorModel, step: usize| -> Result<DiscTracePoint> {
        let (terms, _) = disc_loss_terms(model, &eval_m, &eval_mm, &eval_pol, cfg.w_gp)?;
        let (acc_matched, acc_mismatched) = accuracies(model, &eval_m, &eval_mm)?;
        Ok(DiscTracePoint {
            step,
            loss: terms.total(cfg.w_gp),
            acc_matched,
            acc_mismatched,
        })
    };

    let mut rng_m = cfg.seed.stream(streams::MATCHED).rng();
    let mut rng_mm = cfg.seed.stream(streams::MISMATCHED).rng();
    let mut rng_pol = cfg.seed.stream(streams::POLICY).rng();
    let mut trace = DiscTrace::default();
    trace.points.push(trace_point(&model, 0)?);
    for step in 1..=cfg.steps {
        let m = make_matched_batch(&mut rng_m, dataset, &expander, cfg.batch_size)?;
        let mm = make_mismatched_batch(&mut rng_mm, dataset, &expander, cfg.batch_size)?;
        let pol = make_policy_stand_in_batch(&mut rng_pol, dataset, &expander, cfg.batch_size, cfg.noise_sigma)?;
        let (_, grads) = disc_loss(&model, &m, &mm, &pol, cfg.w_gp)?;
        adam_step(&mut model.net, &grads, &mut adam)?;
        if step % cfg.trace_every == 0 || step == cfg.steps {
            trace.points.push(trace_point(&model, step)?);
        }
    }
    Ok((model, trace))
}
