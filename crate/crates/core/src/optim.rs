//! Adagrad and the epoch / mini-batch training loop.

use std::io::Write;
use std::time::Instant;

use crate::corpus::{sample_negatives, windowize, InteractionLog, Split, Target, TrainingInstance};
use crate::error::{Error, Result};
use crate::eval::{evaluate, CandidatePolicy};
use crate::model::{Gradients, ModelConfig, ModelParams};
use crate::numerics::{Matrix, Rng};

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// One Adagrad update: `G += g²; θ −= η·g / (√G + ε)`. Coordinates with a
/// zero gradient are left untouched.
pub fn adagrad_step(param: &mut Matrix, grad: &Matrix, accum: &mut Matrix, lr: f64, eps: f64) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != accum.shape() {
        return Err(Error::Shape {
            op: "adagrad_step",
            left: param.shape(),
            right: grad.shape(),
        });
    }
    let it = param
        .as_mut_slice()
        .iter_mut()
        .zip(grad.as_slice())
        .zip(accum.as_mut_slice());
    for ((theta, &g), acc) in it {
        if g == 0.0 {
            continue;
        }
        *acc += g * g;
        *theta -= lr * g / (acc.sqrt() + eps);
    }
    Ok(())
}

/// Squared-gradient accumulators, one per parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState {
    pub lr: f64,
    pub eps: f64,
    accum: Gradients,
}

impl AdagradState {
    pub fn new(params: &ModelParams, lr: f64, eps: f64) -> Self {
        AdagradState {
            lr,
            eps,
            accum: Gradients::zeros_like(params),
        }
    }

    pub fn accumulators(&self) -> &Gradients {
        &self.accum
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients) -> Result<()> {
        let (lr, eps) = (self.lr, self.eps);
        adagrad_step(&mut params.item_short, &grads.item_short, &mut self.accum.item_short, lr, eps)?;
        adagrad_step(&mut params.item_long, &grads.item_long, &mut self.accum.item_long, lr, eps)?;
        adagrad_step(&mut params.user, &grads.user, &mut self.accum.user, lr, eps)?;
        adagrad_step(&mut params.attention.w_query, &grads.w_query, &mut self.accum.w_query, lr, eps)?;
        if let (Some(w), Some(g), Some(a)) = (&mut params.attention.w_key, &grads.w_key, &mut self.accum.w_key) {
            adagrad_step(w, g, a, lr, eps)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub epsilon: f64,
    /// Sample negatives outside the user's whole train history instead of
    /// only outside the window's positives.
    pub negatives_exclude_history: bool,
    /// Cutoff used for validation-based model selection.
    pub eval_k: usize,
    pub candidate_policy: CandidatePolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            epochs: 50,
            batch_size: 1000,
            seed: 7,
            learning_rate: 0.05,
            epsilon: DEFAULT_EPSILON,
            negatives_exclude_history: false,
            eval_k: 50,
            candidate_policy: CandidatePolicy::ExcludeSeen,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = self.model.validate();
        if self.epochs == 0 {
            errs.push("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            errs.push("batch size must be at least 1".into());
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            errs.push("learning rate must be positive".into());
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            errs.push("epsilon must be positive".into());
        }
        if self.eval_k == 0 {
            errs.push("k must be at least 1".into());
        }
        errs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean objective per training instance.
    pub loss: f64,
    pub val_hr: f64,
    pub val_mrr: f64,
    /// Largest row norm over X, V and U after the epoch.
    pub max_norm: f64,
    /// Wall time of the optimization part of the epoch (not written to
    /// trace files, which must be reproducible).
    pub train_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation hit ratio.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub trace: Vec<EpochRecord>,
}

pub fn write_trace(trace: &[EpochRecord], k: usize, out: impl Write) -> std::io::Result<()> {
    write_trace_with(trace, k, &[], out)
}

/// [`write_trace`] preceded by `# config.key=value` lines.
pub fn write_trace_with(
    trace: &[EpochRecord],
    k: usize,
    echo: &[(String, String)],
    mut out: impl Write,
) -> std::io::Result<()> {
    for (key, v) in echo {
        writeln!(out, "# config.{key}={v}")?;
    }
    writeln!(out, "# epoch\tloss\tval_hr@{k}\tval_mrr")?;
    for r in trace {
        writeln!(out, "{}\t{:.9}\t{:.6}\t{:.6}", r.epoch, r.loss, r.val_hr, r.val_mrr)?;
    }
    Ok(())
}

pub fn train(log: &InteractionLog, split: &Split, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(log, split, config, |_| {})
}

/// [`train`] with a callback after each epoch.
pub fn train_with(
    log: &InteractionLog,
    split: &Split,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    let errs = config.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let model_cfg = &config.model;
    let instances = windowize(split, model_cfg.window, model_cfg.targets);
    if instances.is_empty() {
        return Err(Error::NoInstances {
            needed: model_cfg.window + model_cfg.targets,
        });
    }
    let num_items = log.num_items();
    if num_items <= model_cfg.targets {
        return Err(Error::Config(vec![format!(
            "need more than T = {} items to sample negatives, have {num_items}",
            model_cfg.targets
        )]));
    }

    let mut rng = Rng::seed(config.seed);
    let mut params = ModelParams::init(model_cfg.clone(), log.num_users(), num_items, &mut rng)?;
    if model_cfg.clip_norms {
        params.clip_norms();
    }
    let mut opt = AdagradState::new(&params, config.learning_rate, config.epsilon);
    let mut grads = Gradients::zeros_like(&params);

    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&TrainingInstance> = chunk.iter().map(|&i| &instances[i]).collect();
            let negatives: Vec<Vec<usize>> = batch
                .iter()
                .map(|inst| {
                    let history = config
                        .negatives_exclude_history
                        .then(|| split.train[inst.user].as_slice());
                    sample_negatives(inst, num_items, &mut rng, model_cfg.targets, history)
                })
                .collect();
            grads.clear();
            total += params.batch_gradient(&batch, &negatives, &mut grads)?;
            opt.step(&mut params, &grads)?;
            if model_cfg.clip_norms {
                params.clip_norms();
            }
        }
        let train_seconds = started.elapsed().as_secs_f64();
        let max_norm = params.max_embedding_norm();
        if model_cfg.clip_norms {
            debug_assert!(max_norm <= 1.0 + 1e-9, "row norm {max_norm} escaped the unit ball");
        }

        let report = evaluate(
            &params,
            split,
            model_cfg.window,
            config.eval_k,
            config.candidate_policy,
            Target::Validation,
        )?;
        let record = EpochRecord {
            epoch,
            loss: total / instances.len() as f64,
            val_hr: report.hr_at_k,
            val_mrr: report.mrr,
            max_norm,
            train_seconds,
        };
        on_epoch(&record);
        if best.as_ref().is_none_or(|(hr, _, _)| record.val_hr > *hr) {
            best = Some((record.val_hr, epoch, params.clone()));
        }
        trace.push(record);
    }

    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params,
        best_epoch,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_gradient_changes_nothing() {
        let mut p = Matrix::from_rows(&[[1.0, -2.0]]);
        let mut acc = Matrix::from_rows(&[[0.5, 0.0]]);
        adagrad_step(&mut p, &Matrix::zeros(1, 2), &mut acc, 0.05, 1e-8).unwrap();
        assert_eq!(p.as_slice(), &[1.0, -2.0]);
        assert_eq!(acc.as_slice(), &[0.5, 0.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Matrix::zeros(1, 1);
        let mut acc = Matrix::zeros(1, 1);
        adagrad_step(&mut p, &Matrix::from_rows(&[[1.0]]), &mut acc, 0.05, 1e-8).unwrap();
        assert_abs_diff_eq!(p[(0, 0)], -0.05 / (1.0 + 1e-8), epsilon = 1e-18);
    }

    #[test]
    fn constant_gradient_steps_shrink_like_inverse_sqrt() {
        let mut p = Matrix::zeros(1, 1);
        let mut acc = Matrix::zeros(1, 1);
        let g = Matrix::from_rows(&[[1.0]]);
        let mut prev_step = f64::INFINITY;
        for k in 1..=20 {
            let before = p[(0, 0)];
            adagrad_step(&mut p, &g, &mut acc, 0.05, 1e-8).unwrap();
            let step = before - p[(0, 0)];
            assert_abs_diff_eq!(step, 0.05 / ((k as f64).sqrt() + 1e-8), epsilon = 1e-15);
            assert!(step < prev_step);
            assert_eq!(acc[(0, 0)], k as f64);
            prev_step = step;
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = Matrix::zeros(2, 2);
        let mut acc = Matrix::zeros(2, 2);
        assert!(adagrad_step(&mut p, &Matrix::zeros(1, 2), &mut acc, 0.05, 1e-8).is_err());
    }

    fn toy_log() -> InteractionLog {
        InteractionLog::from_sequences(
            6,
            vec![vec![0, 1, 2, 3, 4, 5, 0, 1], vec![5, 4, 3, 2, 1, 0, 5, 4, 3]],
        )
    }

    fn toy_config() -> TrainConfig {
        TrainConfig {
            model: ModelConfig {
                dim: 4,
                window: 2,
                targets: 1,
                ..ModelConfig::default()
            },
            epochs: 3,
            batch_size: 2,
            seed: 5,
            eval_k: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn training_is_deterministic() {
        let log = toy_log();
        let split = crate::corpus::chronological_split(&log).unwrap();
        let a = train(&log, &split, &toy_config()).unwrap();
        let b = train(&log, &split, &toy_config()).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.best_epoch, b.best_epoch);
        let strip = |t: &[EpochRecord]| t.iter().map(|r| (r.loss, r.val_hr, r.val_mrr)).collect::<Vec<_>>();
        assert_eq!(strip(&a.trace), strip(&b.trace));
    }

    #[test]
    fn best_epoch_has_the_best_validation_score() {
        let log = toy_log();
        let split = crate::corpus::chronological_split(&log).unwrap();
        let out = train(&log, &split, &TrainConfig { epochs: 6, ..toy_config() }).unwrap();
        let best = out.trace[out.best_epoch - 1].val_hr;
        assert!(out.trace.iter().all(|r| r.val_hr <= best));
        assert!(out.trace[..out.best_epoch - 1].iter().all(|r| r.val_hr < best));
    }

    #[test]
    fn accumulators_never_decrease() {
        let log = toy_log();
        let split = crate::corpus::chronological_split(&log).unwrap();
        let cfg = toy_config();
        let mut rng = Rng::seed(1);
        let mut params = ModelParams::init(cfg.model.clone(), 2, 6, &mut rng).unwrap();
        let mut opt = AdagradState::new(&params, 0.05, 1e-8);
        let mut grads = Gradients::zeros_like(&params);
        let instances = windowize(&split, 2, 1);
        let batch: Vec<&TrainingInstance> = instances.iter().collect();
        let mut prev = opt.accumulators().clone();
        for _ in 0..5 {
            let neg: Vec<Vec<usize>> = batch.iter().map(|i| sample_negatives(i, 6, &mut rng, 1, None)).collect();
            grads.clear();
            params.batch_gradient(&batch, &neg, &mut grads).unwrap();
            opt.step(&mut params, &grads).unwrap();
            let now = opt.accumulators();
            for (a, b) in now.item_short.as_slice().iter().zip(prev.item_short.as_slice()) {
                assert!(a >= b && *a >= 0.0);
            }
            for (a, b) in now.w_query.as_slice().iter().zip(prev.w_query.as_slice()) {
                assert!(a >= b);
            }
            prev = now.clone();
        }
    }

    #[test]
    fn empty_instances_error() {
        let log = InteractionLog::from_sequences(4, vec![vec![0, 1, 2]]);
        let split = crate::corpus::chronological_split(&log).unwrap();
        assert!(matches!(train(&log, &split, &toy_config()), Err(Error::NoInstances { .. })));
    }

    #[test]
    fn trace_lines() {
        let rec = EpochRecord {
            epoch: 1,
            loss: 0.5,
            val_hr: 0.25,
            val_mrr: 0.125,
            max_norm: 1.0,
            train_seconds: 3.0,
        };
        let mut buf = Vec::new();
        write_trace(&[rec], 50, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# epoch\tloss\tval_hr@50\tval_mrr\n1\t0.500000000\t0.250000\t0.125000\n"
        );
    }
}
