//! Central finite differences of the slow, window-by-window objective.

use attrec::attention::Aggregation;
use attrec::corpus::TrainingInstance;
use attrec::model::{Gradients, ModelConfig, ModelParams};
use attrec::numerics::{Matrix, Rng};

const H: f64 = 1e-5;
/// Instances whose hinge margins, ReLU inputs or max/min competitors sit
/// closer than this to a kink are redrawn; a step of `H` cannot cross it.
const KINK: f64 = 1e-3;
/// Relative error is measured against max(|analytic|, |numeric|, FLOOR) so
/// that coordinates whose true gradient is ~0 are judged by absolute error.
const FLOOR: f64 = 1e-3;

pub struct Case {
    pub params: ModelParams,
    pub batch: Vec<TrainingInstance>,
    pub negatives: Vec<Vec<usize>>,
}

fn distinct(rng: &mut Rng, n: usize, count: usize, avoid: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.below(n);
        if !avoid.contains(&i) && !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

fn random_config(rng: &mut Rng, window: usize, targets: usize) -> ModelConfig {
    ModelConfig {
        dim: 4,
        window,
        targets,
        omega: rng.uniform(0.0, 1.0),
        margin: 0.5,
        l2: [0.0, 0.01, 0.1][rng.below(3)],
        clip_norms: rng.below(2) == 0,
        aggregation: Aggregation::ALL[rng.below(4)],
        use_attention: rng.below(5) != 0,
        use_time_encoding: rng.below(2) == 0,
        untied_projections: rng.below(3) == 0,
    }
}

fn near_kink(case: &Case) -> bool {
    let p = &case.params;
    let cfg = &p.config;
    for (inst, neg) in case.batch.iter().zip(&case.negatives) {
        let m = p.intent(&inst.context).unwrap();
        if cfg.use_attention {
            let out = p.attend_window(&inst.context).unwrap();
            let cache = out.cache.as_ref().unwrap();
            let pre = [Some(&cache.pre_query), cache.pre_key.as_ref()];
            if pre.into_iter().flatten().any(|z| z.as_slice().iter().any(|v| v.abs() < KINK)) {
                return true;
            }
            if matches!(cfg.aggregation, Aggregation::Max | Aggregation::Min) {
                let a = &out.attended;
                for c in 0..a.cols() {
                    let mut col: Vec<f64> = (0..a.rows()).map(|r| a[(r, c)]).collect();
                    col.sort_by(f64::total_cmp);
                    if col.windows(2).any(|w| w[1] - w[0] < KINK) {
                        return true;
                    }
                }
            }
        }
        for &i in &inst.positives {
            for &j in neg {
                let gap = p.score(inst.user, i, &m).unwrap() + cfg.margin - p.score(inst.user, j, &m).unwrap();
                if gap.abs() < KINK {
                    return true;
                }
            }
        }
    }
    false
}

pub fn random_case(rng: &mut Rng, users: usize, items: usize, window: usize, targets: usize) -> Case {
    loop {
        let config = random_config(rng, window, targets);
        let mut params = ModelParams::init(config, users, items, rng).unwrap();
        // Larger weights than the default init so every term matters.
        let mats = [&mut params.item_short, &mut params.item_long, &mut params.user, &mut params.attention.w_query];
        for m in mats.into_iter().chain(params.attention.w_key.as_mut()) {
            for x in m.as_mut_slice() {
                *x = rng.uniform(-1.0, 1.0);
            }
        }
        let batch_size = 1 + rng.below(3);
        let mut batch = Vec::new();
        let mut negatives = Vec::new();
        for _ in 0..batch_size {
            let context: Vec<usize> = (0..window).map(|_| rng.below(items)).collect();
            let positives = distinct(rng, items, targets, &[]);
            negatives.push(distinct(rng, items, targets, &positives));
            batch.push(TrainingInstance {
                user: rng.below(users),
                context,
                positives,
            });
        }
        let case = Case { params, batch, negatives };
        if !near_kink(&case) {
            return case;
        }
    }
}

fn objective(case: &Case, params: &ModelParams) -> f64 {
    let refs: Vec<&TrainingInstance> = case.batch.iter().collect();
    params.batch_loss(&refs, &case.negatives).unwrap()
}

/// Largest relative error over every coordinate of every parameter.
pub fn max_relative_error(case: &Case) -> f64 {
    let refs: Vec<&TrainingInstance> = case.batch.iter().collect();
    let mut grads = Gradients::zeros_like(&case.params);
    let loss = case.params.batch_gradient(&refs, &case.negatives, &mut grads).unwrap();
    let slow = objective(case, &case.params);
    assert!((loss - slow).abs() <= 1e-10 * slow.abs().max(1.0), "{loss} vs {slow}");

    type Pick = fn(&mut ModelParams) -> Option<&mut Matrix>;
    let picks: [(Pick, Option<&Matrix>); 5] = [
        (|p| Some(&mut p.item_short), Some(&grads.item_short)),
        (|p| Some(&mut p.item_long), Some(&grads.item_long)),
        (|p| Some(&mut p.user), Some(&grads.user)),
        (|p| Some(&mut p.attention.w_query), Some(&grads.w_query)),
        (|p| p.attention.w_key.as_mut(), grads.w_key.as_ref()),
    ];
    let mut worst: f64 = 0.0;
    let mut probe = case.params.clone();
    for (pick, analytic) in picks {
        let Some(analytic) = analytic else { continue };
        let len = analytic.as_slice().len();
        for idx in 0..len {
            let orig = pick(&mut probe).unwrap().as_slice()[idx];
            pick(&mut probe).unwrap().as_mut_slice()[idx] = orig + H;
            let up = objective(case, &probe);
            pick(&mut probe).unwrap().as_mut_slice()[idx] = orig - H;
            let down = objective(case, &probe);
            pick(&mut probe).unwrap().as_mut_slice()[idx] = orig;
            let numeric = (up - down) / (2.0 * H);
            let a = analytic.as_slice()[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            worst = worst.max(rel);
        }
    }
    worst
}
