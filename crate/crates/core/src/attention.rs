//! Short-term intent: masked scaled dot-product self-attention over the
//! latest items of a user, with sinusoidal position signals on the
//! query/key side and identity values.
//!
//! The forward pass is split in two so the training loop can reuse item
//! projections across a whole batch: [`attend`] projects the window through
//! `W` and then calls the projection-level kernel, while the trainer feeds
//! the kernel projections it computed once per batch.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{matmul, matmul_nt, matmul_tn, relu_scalar, softmax_in_place, Matrix};

/// Logit written onto the diagonal before the softmax.
pub const MASK_VALUE: f64 = -1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Aggregation {
    #[default]
    Mean,
    Sum,
    Max,
    Min,
}

impl Aggregation {
    pub const ALL: [Aggregation; 4] = [
        Aggregation::Mean,
        Aggregation::Sum,
        Aggregation::Max,
        Aggregation::Min,
    ];
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Aggregation::Mean),
            "sum" => Ok(Aggregation::Sum),
            "max" => Ok(Aggregation::Max),
            "min" => Ok(Aggregation::Min),
            other => Err(format!("unknown aggregation {other:?} (expected mean, sum, max, or min)")),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Mean => "mean",
            Aggregation::Sum => "sum",
            Aggregation::Max => "max",
            Aggregation::Min => "min",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    /// Query projection; also the key projection unless `w_key` is set.
    pub w_query: Matrix,
    /// Separate key projection for the untied variant.
    pub w_key: Option<Matrix>,
    pub window: usize,
    pub use_time_encoding: bool,
    pub aggregation: Aggregation,
}

impl AttentionParams {
    pub fn dim(&self) -> usize {
        self.w_query.rows()
    }

    pub fn w_key(&self) -> &Matrix {
        self.w_key.as_ref().unwrap_or(&self.w_query)
    }

    pub fn is_tied(&self) -> bool {
        self.w_key.is_none()
    }
}

/// Sinusoidal signal for window position `t`: `sin` on even dimensions,
/// `cos` on odd ones, with geometrically spaced timescales.
pub fn time_encoding(t: usize, dim: usize) -> Result<Vec<f64>> {
    if !dim.is_multiple_of(2) {
        return Err(Error::Config(vec![format!(
            "time encoding needs an even dimension, got d = {dim}"
        )]));
    }
    let mut te = vec![0.0; dim];
    for i in 0..dim / 2 {
        let angle = t as f64 / 10000f64.powf(2.0 * i as f64 / dim as f64);
        te[2 * i] = angle.sin();
        te[2 * i + 1] = angle.cos();
    }
    Ok(te)
}

/// Rows `0..rows` of the time encoding.
pub fn time_encoding_table(rows: usize, dim: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(rows, dim);
    for t in 0..rows {
        m.row_mut(t).copy_from_slice(&time_encoding(t, dim)?);
    }
    Ok(m)
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionCache {
    /// Raw window embeddings (the values).
    pub window: Matrix,
    /// Query/key inputs: the window plus time encoding. Only set by
    /// [`attend`]; the batched trainer keeps its own.
    pub inputs: Option<Matrix>,
    pub pre_query: Matrix,
    /// `None` when the projections are tied.
    pub pre_key: Option<Matrix>,
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    pub affinity: Matrix,
    pub attended: Matrix,
    pub intent: Vec<f64>,
    pub cache: Option<AttentionCache>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGradients {
    pub window: Matrix,
    pub w_query: Matrix,
    /// Present only for untied projections.
    pub w_key: Option<Matrix>,
}

fn check_window(window: &Matrix, params: &AttentionParams) -> Result<()> {
    let d = params.dim();
    if window.cols() != d || window.rows() == 0 || params.w_query.cols() != d {
        return Err(Error::Shape {
            op: "attend",
            left: window.shape(),
            right: params.w_query.shape(),
        });
    }
    if let Some(wk) = &params.w_key {
        if wk.shape() != (d, d) {
            return Err(Error::Shape {
                op: "attend",
                left: params.w_query.shape(),
                right: wk.shape(),
            });
        }
    }
    Ok(())
}

fn query_key_inputs(window: &Matrix, params: &AttentionParams) -> Result<Matrix> {
    let mut inputs = window.clone();
    if params.use_time_encoding {
        let te = time_encoding_table(window.rows(), window.cols())?;
        inputs.axpy(1.0, &te)?;
    }
    Ok(inputs)
}

/// Self-attention over `window` (one row per item, oldest first).
pub fn attend(window: &Matrix, params: &AttentionParams) -> Result<AttentionOutput> {
    check_window(window, params)?;
    let inputs = query_key_inputs(window, params)?;
    let pre_query = matmul(&inputs, &params.w_query)?;
    let pre_key = match &params.w_key {
        Some(wk) => Some(matmul(&inputs, wk)?),
        None => None,
    };
    let mut out = attend_projected(window.clone(), pre_query, pre_key, params.aggregation);
    if let Some(cache) = out.cache.as_mut() {
        cache.inputs = Some(inputs);
    }
    Ok(out)
}

/// Attention given precomputed pre-activation projections
/// `pre_query = inputs · W_Q` (and `pre_key` when untied).
pub fn attend_projected(
    window: Matrix,
    pre_query: Matrix,
    pre_key: Option<Matrix>,
    aggregation: Aggregation,
) -> AttentionOutput {
    let (rows, d) = window.shape();
    let scale = 1.0 / (d as f64).sqrt();
    let query = pre_query.as_slice().iter().map(|&x| relu_scalar(x)).collect::<Vec<_>>();
    let key = match &pre_key {
        Some(pk) => pk.as_slice().iter().map(|&x| relu_scalar(x)).collect::<Vec<_>>(),
        None => query.clone(),
    };

    let mut affinity = Matrix::zeros(rows, rows);
    for i in 0..rows {
        let qi = &query[i * d..(i + 1) * d];
        let row = affinity.row_mut(i);
        for (j, logit) in row.iter_mut().enumerate() {
            *logit = if rows > 1 && i == j {
                MASK_VALUE
            } else {
                let kj = &key[j * d..(j + 1) * d];
                qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale
            };
        }
        softmax_in_place(row);
    }

    let mut attended = Matrix::zeros(rows, d);
    for i in 0..rows {
        for j in 0..rows {
            let s = affinity[(i, j)];
            if s == 0.0 {
                continue;
            }
            let src = window.row(j);
            for (dst, x) in attended.row_mut(i).iter_mut().zip(src) {
                *dst += s * x;
            }
        }
    }
    let intent = aggregate(&attended, aggregation);

    AttentionOutput {
        affinity,
        attended,
        intent,
        cache: Some(AttentionCache {
            window,
            inputs: None,
            pre_query,
            pre_key,
            aggregation,
        }),
    }
}

/// Column-wise mean, sum, max, or min over the rows of `a`.
pub fn aggregate(a: &Matrix, method: Aggregation) -> Vec<f64> {
    let (rows, d) = a.shape();
    match method {
        Aggregation::Mean | Aggregation::Sum => {
            let mut out = vec![0.0; d];
            for i in 0..rows {
                for (o, x) in out.iter_mut().zip(a.row(i)) {
                    *o += x;
                }
            }
            if method == Aggregation::Mean {
                for o in &mut out {
                    *o /= rows as f64;
                }
            }
            out
        }
        Aggregation::Max | Aggregation::Min => (0..d).map(|c| a[(extreme_row(a, c, method), c)]).collect(),
    }
}

/// Row holding the column's max (or min); the first one on ties.
fn extreme_row(a: &Matrix, col: usize, method: Aggregation) -> usize {
    let mut best = 0;
    for i in 1..a.rows() {
        let better = match method {
            Aggregation::Max => a[(i, col)] > a[(best, col)],
            _ => a[(i, col)] < a[(best, col)],
        };
        if better {
            best = i;
        }
    }
    best
}

/// Gradients flowing out of the attention kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionGradients {
    /// Gradient w.r.t. the window through the value path only.
    pub window_value: Matrix,
    pub pre_query: Matrix,
    pub pre_key: Matrix,
}

/// Backpropagates `d_intent` through aggregation, the value product, the
/// masked softmax, the logit scaling and the ReLUs, stopping at the
/// pre-activation projections.
pub fn backward_projected(output: &AttentionOutput, d_intent: &[f64]) -> Result<ProjectionGradients> {
    let cache = output.cache.as_ref().ok_or(Error::MissingCache)?;
    let (rows, d) = cache.window.shape();
    if d_intent.len() != d {
        return Err(Error::Shape {
            op: "attend_backward",
            left: (1, d_intent.len()),
            right: cache.window.shape(),
        });
    }
    let scale = 1.0 / (d as f64).sqrt();
    let s = &output.affinity;

    let mut d_attended = Matrix::zeros(rows, d);
    match cache.aggregation {
        Aggregation::Mean | Aggregation::Sum => {
            let w = if cache.aggregation == Aggregation::Mean { 1.0 / rows as f64 } else { 1.0 };
            for i in 0..rows {
                for (g, dm) in d_attended.row_mut(i).iter_mut().zip(d_intent) {
                    *g = w * dm;
                }
            }
        }
        method => {
            for (c, &dm) in d_intent.iter().enumerate() {
                d_attended[(extreme_row(&output.attended, c, method), c)] = dm;
            }
        }
    }

    // attended = s · window
    let mut window_value = Matrix::zeros(rows, d);
    let mut d_affinity = Matrix::zeros(rows, rows);
    for i in 0..rows {
        let da = d_attended.row(i);
        for j in 0..rows {
            let xj = cache.window.row(j);
            d_affinity[(i, j)] = da.iter().zip(xj).map(|(a, b)| a * b).sum();
            let sij = s[(i, j)];
            if sij != 0.0 {
                for (g, a) in window_value.row_mut(j).iter_mut().zip(da) {
                    *g += sij * a;
                }
            }
        }
    }

    // softmax Jacobian; the masked diagonal is a constant
    let mut d_logits = Matrix::zeros(rows, rows);
    for i in 0..rows {
        let dot: f64 = (0..rows).map(|k| s[(i, k)] * d_affinity[(i, k)]).sum();
        for j in 0..rows {
            if rows > 1 && i == j {
                continue;
            }
            d_logits[(i, j)] = s[(i, j)] * (d_affinity[(i, j)] - dot);
        }
    }

    let pre_q = cache.pre_query.as_slice();
    let pre_k = cache.pre_key.as_ref().map_or(pre_q, |m| m.as_slice());
    let mut pre_query = Matrix::zeros(rows, d);
    let mut pre_key = Matrix::zeros(rows, d);
    for i in 0..rows {
        for j in 0..rows {
            let g = d_logits[(i, j)] * scale;
            if g == 0.0 {
                continue;
            }
            // logit(i, j) = <relu(pre_q[i]), relu(pre_k[j])> * scale
            let (qi, kj) = (&pre_q[i * d..(i + 1) * d], &pre_k[j * d..(j + 1) * d]);
            for c in 0..d {
                if qi[c] > 0.0 {
                    pre_query[(i, c)] += g * relu_scalar(kj[c]);
                }
                if kj[c] > 0.0 {
                    pre_key[(j, c)] += g * relu_scalar(qi[c]);
                }
            }
        }
    }

    Ok(ProjectionGradients {
        window_value,
        pre_query,
        pre_key,
    })
}

/// Exact gradient of `⟨d_intent, m⟩` w.r.t. the window embeddings and the
/// projection weights, through both the value path and the query/key path.
pub fn attend_backward(
    output: &AttentionOutput,
    d_intent: &[f64],
    params: &AttentionParams,
) -> Result<AttentionGradients> {
    let cache = output.cache.as_ref().ok_or(Error::MissingCache)?;
    let inputs = match &cache.inputs {
        Some(e) => e.clone(),
        None => query_key_inputs(&cache.window, params)?,
    };
    let grads = backward_projected(output, d_intent)?;
    let mut window = grads.window_value;
    let (w_query, w_key) = if params.is_tied() {
        let mut d_pre = grads.pre_query;
        d_pre.axpy(1.0, &grads.pre_key)?;
        window.axpy(1.0, &matmul_nt(&d_pre, &params.w_query)?)?;
        (matmul_tn(&inputs, &d_pre)?, None)
    } else {
        window.axpy(1.0, &matmul_nt(&grads.pre_query, &params.w_query)?)?;
        window.axpy(1.0, &matmul_nt(&grads.pre_key, params.w_key())?)?;
        (
            matmul_tn(&inputs, &grads.pre_query)?,
            Some(matmul_tn(&inputs, &grads.pre_key)?),
        )
    };
    Ok(AttentionGradients {
        window,
        w_query,
        w_key,
    })
}
