//! Parameters, the blended long/short-term distance score, the pairwise
//! hinge objective with its gradients, norm clipping, and checkpoints.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::attention::{self, Aggregation, AttentionParams};
use crate::corpus::TrainingInstance;
use crate::error::{Error, Result};
use crate::numerics::{l2_norm, matmul, matmul_nt, matmul_tn, squared_distance, Matrix, Rng};

/// Architecture and objective settings; everything a checkpoint needs to
/// rebuild the scoring function.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub dim: usize,
    /// Window length L.
    pub window: usize,
    /// Targets per window T.
    pub targets: usize,
    /// Weight of the long-term term.
    pub omega: f64,
    pub margin: f64,
    pub l2: f64,
    pub clip_norms: bool,
    pub aggregation: Aggregation,
    /// When off, the intent is the plain mean of the window embeddings.
    pub use_attention: bool,
    pub use_time_encoding: bool,
    pub untied_projections: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 100,
            window: 5,
            targets: 3,
            omega: 0.3,
            margin: 0.5,
            l2: 0.001,
            clip_norms: false,
            aggregation: Aggregation::Mean,
            use_attention: true,
            use_time_encoding: true,
            untied_projections: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.dim == 0 {
            errs.push("d must be at least 1".to_string());
        }
        if self.use_attention && self.use_time_encoding && !self.dim.is_multiple_of(2) {
            errs.push(format!("d must be even when time encoding is on (got {})", self.dim));
        }
        if self.window == 0 {
            errs.push("L must be at least 1".to_string());
        }
        if self.targets == 0 {
            errs.push("T must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.omega) {
            errs.push("omega must lie in [0,1]".to_string());
        }
        if self.margin.is_nan() || self.margin <= 0.0 {
            errs.push("margin must be positive".to_string());
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            errs.push("lambda must be nonnegative".to_string());
        }
        errs
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("d", self.dim.to_string()),
            ("L", self.window.to_string()),
            ("T", self.targets.to_string()),
            ("omega", self.omega.to_string()),
            ("margin", self.margin.to_string()),
            ("lambda", self.l2.to_string()),
            ("clip_norms", self.clip_norms.to_string()),
            ("aggregation", self.aggregation.to_string()),
            ("use_attention", self.use_attention.to_string()),
            ("use_time_encoding", self.use_time_encoding.to_string()),
            ("untied_projections", self.untied_projections.to_string()),
        ]
    }

    fn from_pairs(map: &HashMap<String, String>) -> Result<Self> {
        fn get<T: std::str::FromStr>(map: &HashMap<String, String>, key: &str) -> Result<T> {
            map.get(key)
                .ok_or_else(|| Error::Format(format!("checkpoint lacks {key}")))?
                .parse()
                .map_err(|_| Error::Format(format!("checkpoint has a bad {key}")))
        }
        Ok(ModelConfig {
            dim: get(map, "d")?,
            window: get(map, "L")?,
            targets: get(map, "T")?,
            omega: get(map, "omega")?,
            margin: get(map, "margin")?,
            l2: get(map, "lambda")?,
            clip_norms: get(map, "clip_norms")?,
            aggregation: map
                .get("aggregation")
                .ok_or_else(|| Error::Format("checkpoint lacks aggregation".into()))?
                .parse()
                .map_err(Error::Format)?,
            use_attention: get(map, "use_attention")?,
            use_time_encoding: get(map, "use_time_encoding")?,
            untied_projections: get(map, "untied_projections")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// Short-term item table: attention inputs and next-item targets.
    pub item_short: Matrix,
    /// Long-term item table.
    pub item_long: Matrix,
    pub user: Matrix,
    pub attention: AttentionParams,
}

/// Dense gradients, one array per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub item_short: Matrix,
    pub item_long: Matrix,
    pub user: Matrix,
    pub w_query: Matrix,
    pub w_key: Option<Matrix>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients {
            item_short: Matrix::zeros(params.item_short.rows(), params.item_short.cols()),
            item_long: Matrix::zeros(params.item_long.rows(), params.item_long.cols()),
            user: Matrix::zeros(params.user.rows(), params.user.cols()),
            w_query: Matrix::zeros(params.dim(), params.dim()),
            w_key: params
                .attention
                .w_key
                .as_ref()
                .map(|w| Matrix::zeros(w.rows(), w.cols())),
        }
    }

    pub fn clear(&mut self) {
        self.item_short.fill(0.0);
        self.item_long.fill(0.0);
        self.user.fill(0.0);
        self.w_query.fill(0.0);
        if let Some(w) = &mut self.w_key {
            w.fill(0.0);
        }
    }

    pub fn max_abs(&self) -> f64 {
        [&self.item_short, &self.item_long, &self.user, &self.w_query]
            .into_iter()
            .chain(self.w_key.as_ref())
            .map(Matrix::max_abs)
            .fold(0.0, f64::max)
    }
}

/// `Σ_{i ∈ pos, j ∈ neg} max(0, y_i + margin − y_j)`.
pub fn pairwise_hinge(pos: &[f64], neg: &[f64], margin: f64) -> f64 {
    pos.iter()
        .flat_map(|&yi| neg.iter().map(move |&yj| (yi + margin - yj).max(0.0)))
        .sum()
}

/// Full objective for one instance: pairwise hinge plus the ℓ2 term.
pub fn hinge_loss(pos: &[f64], neg: &[f64], params: &ModelParams) -> f64 {
    pairwise_hinge(pos, neg, params.config.margin) + params.regularization()
}

impl ModelParams {
    /// Uniform initialization in `[-1/√d, 1/√d]` for every array.
    pub fn init(config: ModelConfig, num_users: usize, num_items: usize, rng: &mut Rng) -> Result<Self> {
        let errs = config.validate();
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        let d = config.dim;
        let bound = 1.0 / (d as f64).sqrt();
        let item_short = Matrix::uniform(num_items, d, bound, rng);
        let item_long = Matrix::uniform(num_items, d, bound, rng);
        let user = Matrix::uniform(num_users, d, bound, rng);
        let w_query = Matrix::uniform(d, d, bound, rng);
        let w_key = config.untied_projections.then(|| Matrix::uniform(d, d, bound, rng));
        let attention = AttentionParams {
            w_query,
            w_key,
            window: config.window,
            use_time_encoding: config.use_time_encoding,
            aggregation: config.aggregation,
        };
        Ok(ModelParams {
            config,
            item_short,
            item_long,
            user,
            attention,
        })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn num_users(&self) -> usize {
        self.user.rows()
    }

    pub fn num_items(&self) -> usize {
        self.item_long.rows()
    }

    fn check_item(&self, item: usize) -> Result<()> {
        if item >= self.num_items() {
            return Err(Error::OutOfRange {
                what: "item",
                index: item,
                len: self.num_items(),
            });
        }
        Ok(())
    }

    fn check_user(&self, user: usize) -> Result<()> {
        if user >= self.num_users() {
            return Err(Error::OutOfRange {
                what: "user",
                index: user,
                len: self.num_users(),
            });
        }
        Ok(())
    }

    /// Short-term intent for a window of item indices, oldest first.
    pub fn intent(&self, window: &[usize]) -> Result<Vec<f64>> {
        for &i in window {
            self.check_item(i)?;
        }
        let rows = self.item_short.gather_rows(window);
        if self.config.use_attention {
            Ok(attention::attend(&rows, &self.attention)?.intent)
        } else {
            Ok(attention::aggregate(&rows, Aggregation::Mean))
        }
    }

    /// Attention output for a window (affinity map included).
    pub fn attend_window(&self, window: &[usize]) -> Result<attention::AttentionOutput> {
        for &i in window {
            self.check_item(i)?;
        }
        attention::attend(&self.item_short.gather_rows(window), &self.attention)
    }

    /// `ω‖U_u − V_i‖² + (1−ω)‖m − X_i‖²`; smaller is better.
    pub fn score(&self, user: usize, item: usize, intent: &[f64]) -> Result<f64> {
        self.check_user(user)?;
        self.check_item(item)?;
        if intent.len() != self.dim() {
            return Err(Error::Shape {
                op: "score",
                left: (1, intent.len()),
                right: self.item_short.shape(),
            });
        }
        Ok(self.score_unchecked(user, item, intent))
    }

    #[inline]
    fn score_unchecked(&self, user: usize, item: usize, intent: &[f64]) -> f64 {
        let w = self.config.omega;
        w * squared_distance(self.user.row(user), self.item_long.row(item))
            + (1.0 - w) * squared_distance(intent, self.item_short.row(item))
    }

    /// Scores of every item for one user and intent.
    pub fn score_all(&self, user: usize, intent: &[f64]) -> Result<Vec<f64>> {
        self.check_user(user)?;
        Ok((0..self.num_items())
            .map(|i| self.score_unchecked(user, i, intent))
            .collect())
    }

    /// `λ‖Θ_reg‖²`: the projections always, the embedding tables only when
    /// norm clipping is off.
    pub fn regularization(&self) -> f64 {
        let mut sq = self.attention.w_query.squared_norm();
        if let Some(w) = &self.attention.w_key {
            sq += w.squared_norm();
        }
        if !self.config.clip_norms {
            sq += self.item_short.squared_norm() + self.item_long.squared_norm() + self.user.squared_norm();
        }
        self.config.l2 * sq
    }

    fn add_regularization_gradient(&self, grads: &mut Gradients) -> Result<()> {
        let l2 = self.config.l2;
        if l2 == 0.0 {
            return Ok(());
        }
        grads.w_query.axpy(2.0 * l2, &self.attention.w_query)?;
        if let (Some(g), Some(w)) = (&mut grads.w_key, &self.attention.w_key) {
            g.axpy(2.0 * l2, w)?;
        }
        if !self.config.clip_norms {
            grads.item_short.axpy(2.0 * l2, &self.item_short)?;
            grads.item_long.axpy(2.0 * l2, &self.item_long)?;
            grads.user.axpy(2.0 * l2, &self.user)?;
        }
        Ok(())
    }

    /// Objective of one mini-batch, computed window by window through
    /// [`attention::attend`]. Slow; kept as the reference for
    /// [`Self::batch_gradient`].
    pub fn batch_loss(&self, instances: &[&TrainingInstance], negatives: &[Vec<usize>]) -> Result<f64> {
        let mut loss = 0.0;
        for (inst, neg) in instances.iter().zip(negatives) {
            let m = self.intent(&inst.context)?;
            let pos: Vec<f64> = inst
                .positives
                .iter()
                .map(|&i| self.score(inst.user, i, &m))
                .collect::<Result<_>>()?;
            let neg: Vec<f64> = neg.iter().map(|&j| self.score(inst.user, j, &m)).collect::<Result<_>>()?;
            loss += pairwise_hinge(&pos, &neg, self.config.margin);
        }
        Ok(loss + self.regularization())
    }

    /// Gradient of one instance's objective (hinge pairs plus ℓ2 term).
    pub fn loss_backward(&self, instance: &TrainingInstance, negatives: &[usize]) -> Result<(f64, Gradients)> {
        let mut grads = Gradients::zeros_like(self);
        let loss = self.batch_gradient(&[instance], &[negatives.to_vec()], &mut grads)?;
        Ok((loss, grads))
    }

    /// Accumulates the gradient of the mini-batch objective into `grads`
    /// (which the caller clears) and returns the objective.
    ///
    /// The window projections `(X_w + TE)·W` are formed from one product of
    /// the touched item rows with `W` per batch, and the `W` and item
    /// gradients flowing back through the projections are likewise gathered
    /// per item and per position and multiplied out once at the end.
    pub fn batch_gradient(
        &self,
        instances: &[&TrainingInstance],
        negatives: &[Vec<usize>],
        grads: &mut Gradients,
    ) -> Result<f64> {
        let d = self.dim();
        let cfg = &self.config;
        let omega = cfg.omega;
        for inst in instances {
            self.check_user(inst.user)?;
            for &i in inst.context.iter().chain(&inst.positives) {
                self.check_item(i)?;
            }
        }
        for neg in negatives {
            for &j in neg {
                self.check_item(j)?;
            }
        }

        let max_rows = instances.iter().map(|i| i.context.len()).max().unwrap_or(0);
        let attend = cfg.use_attention && max_rows > 0;
        let untied = !self.attention.is_tied();

        let mut local = vec![usize::MAX; self.num_items()];
        let mut touched = Vec::new();
        if attend {
            for inst in instances {
                for &i in &inst.context {
                    if local[i] == usize::MAX {
                        local[i] = touched.len();
                        touched.push(i);
                    }
                }
            }
        }
        let touched_rows = self.item_short.gather_rows(&touched);
        let te = if attend && cfg.use_time_encoding {
            attention::time_encoding_table(max_rows, d)?
        } else {
            Matrix::zeros(max_rows, d)
        };
        let (q_items, q_pos, k_items, k_pos) = if attend {
            let wq = &self.attention.w_query;
            let q = (matmul(&touched_rows, wq)?, matmul(&te, wq)?);
            let k = if untied {
                let wk = self.attention.w_key();
                Some((matmul(&touched_rows, wk)?, matmul(&te, wk)?))
            } else {
                None
            };
            let (ki, kp) = k.unzip();
            (q.0, q.1, ki, kp)
        } else {
            (Matrix::zeros(0, d), Matrix::zeros(0, d), None, None)
        };
        let mut gq_items = Matrix::zeros(touched.len(), d);
        let mut gq_pos = Matrix::zeros(max_rows, d);
        let mut gk_items = Matrix::zeros(if untied { touched.len() } else { 0 }, d);
        let mut gk_pos = Matrix::zeros(if untied { max_rows } else { 0 }, d);

        let mut loss = 0.0;
        let mut d_intent = vec![0.0; d];
        let mut diff = vec![0.0; d];
        for (inst, neg) in instances.iter().zip(negatives) {
            let rows = inst.context.len();
            let window = self.item_short.gather_rows(&inst.context);
            let projected = |items: &Matrix, pos: &Matrix| {
                let mut m = Matrix::zeros(rows, d);
                for (r, &i) in inst.context.iter().enumerate() {
                    let (a, b) = (items.row(local[i]), pos.row(r));
                    for ((o, x), y) in m.row_mut(r).iter_mut().zip(a).zip(b) {
                        *o = x + y;
                    }
                }
                m
            };
            let (out, intent) = if attend {
                let pre_q = projected(&q_items, &q_pos);
                let pre_k = k_items.as_ref().zip(k_pos.as_ref()).map(|(a, b)| projected(a, b));
                let out = attention::attend_projected(window, pre_q, pre_k, cfg.aggregation);
                let m = out.intent.clone();
                (Some(out), m)
            } else {
                (None, attention::aggregate(&window, Aggregation::Mean))
            };

            let u = inst.user;
            let pos_y: Vec<f64> = inst.positives.iter().map(|&i| self.score_unchecked(u, i, &intent)).collect();
            let neg_y: Vec<f64> = neg.iter().map(|&j| self.score_unchecked(u, j, &intent)).collect();
            let mut coef_pos = vec![0.0; pos_y.len()];
            let mut coef_neg = vec![0.0; neg_y.len()];
            for (a, &yi) in pos_y.iter().enumerate() {
                for (b, &yj) in neg_y.iter().enumerate() {
                    let arg = yi + cfg.margin - yj;
                    if arg > 0.0 {
                        loss += arg;
                        coef_pos[a] += 1.0;
                        coef_neg[b] -= 1.0;
                    }
                }
            }

            d_intent.fill(0.0);
            let mut active = false;
            let targets = inst.positives.iter().zip(&coef_pos).chain(neg.iter().zip(&coef_neg));
            for (&item, &c) in targets {
                if c == 0.0 {
                    continue;
                }
                active = true;
                // long-term term
                let g = 2.0 * omega * c;
                if g != 0.0 {
                    for (k, dk) in diff.iter_mut().enumerate() {
                        *dk = self.user[(u, k)] - self.item_long[(item, k)];
                    }
                    for (k, &dk) in diff.iter().enumerate() {
                        grads.user[(u, k)] += g * dk;
                        grads.item_long[(item, k)] -= g * dk;
                    }
                }
                // short-term term
                let g = 2.0 * (1.0 - omega) * c;
                if g != 0.0 {
                    for (k, dk) in diff.iter_mut().enumerate() {
                        *dk = intent[k] - self.item_short[(item, k)];
                    }
                    for (k, &dk) in diff.iter().enumerate() {
                        d_intent[k] += g * dk;
                        grads.item_short[(item, k)] -= g * dk;
                    }
                }
            }
            if !active || d_intent.iter().all(|&x| x == 0.0) {
                continue;
            }

            match &out {
                Some(out) => {
                    let pg = attention::backward_projected(out, &d_intent)?;
                    for (r, &i) in inst.context.iter().enumerate() {
                        let li = local[i];
                        for k in 0..d {
                            grads.item_short[(i, k)] += pg.window_value[(r, k)];
                            let gq = pg.pre_query[(r, k)];
                            let gk = pg.pre_key[(r, k)];
                            if untied {
                                gq_items[(li, k)] += gq;
                                gq_pos[(r, k)] += gq;
                                gk_items[(li, k)] += gk;
                                gk_pos[(r, k)] += gk;
                            } else {
                                gq_items[(li, k)] += gq + gk;
                                gq_pos[(r, k)] += gq + gk;
                            }
                        }
                    }
                }
                None => {
                    let w = 1.0 / rows as f64;
                    for &i in &inst.context {
                        for (g, dm) in grads.item_short.row_mut(i).iter_mut().zip(&d_intent) {
                            *g += w * dm;
                        }
                    }
                }
            }
        }

        if attend {
            let mut flush = |g_items: &Matrix, g_pos: &Matrix, w: &Matrix, dw: &mut Matrix| -> Result<()> {
                dw.axpy(1.0, &matmul_tn(&touched_rows, g_items)?)?;
                dw.axpy(1.0, &matmul_tn(&te, g_pos)?)?;
                let d_rows = matmul_nt(g_items, w)?;
                for (li, &i) in touched.iter().enumerate() {
                    for (g, x) in grads.item_short.row_mut(i).iter_mut().zip(d_rows.row(li)) {
                        *g += x;
                    }
                }
                Ok(())
            };
            let mut dwq = Matrix::zeros(d, d);
            flush(&gq_items, &gq_pos, &self.attention.w_query, &mut dwq)?;
            grads.w_query.axpy(1.0, &dwq)?;
            if untied {
                let mut dwk = Matrix::zeros(d, d);
                flush(&gk_items, &gk_pos, self.attention.w_key(), &mut dwk)?;
                if let Some(g) = &mut grads.w_key {
                    g.axpy(1.0, &dwk)?;
                }
            }
        }

        self.add_regularization_gradient(grads)?;
        Ok(loss + self.regularization())
    }

    /// Projects every row of X, V and U with norm above 1 onto the unit
    /// sphere. Rows within `CLIP_SLACK` of the sphere count as inside, which
    /// makes the projection idempotent under rounding.
    pub fn clip_norms(&mut self) {
        for m in [&mut self.item_short, &mut self.item_long, &mut self.user] {
            for r in 0..m.rows() {
                let row = m.row_mut(r);
                let norm = l2_norm(row);
                if norm > 1.0 + CLIP_SLACK {
                    for x in row.iter_mut() {
                        *x /= norm;
                    }
                }
            }
        }
    }

    pub fn max_embedding_norm(&self) -> f64 {
        [&self.item_short, &self.item_long, &self.user]
            .into_iter()
            .flat_map(crate::numerics::row_l2_norms)
            .fold(0.0, f64::max)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save_with(path, &[])
    }

    pub fn save_with(&self, path: impl AsRef<Path>, echo: &[(String, String)]) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_checkpoint_with(&mut buf, echo)
            .map_err(|e| Error::io(path, e))?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_checkpoint(BufReader::new(file))
    }

    /// Text header (`key=value` lines up to `end`) followed by the arrays as
    /// little-endian f64: X, V, U, W_Q and, when untied, W_K.
    pub fn write_checkpoint(&self, out: impl Write) -> std::io::Result<()> {
        self.write_checkpoint_with(out, &[])
    }

    /// [`Self::write_checkpoint`] with extra `config.key=value` header
    /// lines, ignored on read.
    pub fn write_checkpoint_with(&self, mut out: impl Write, echo: &[(String, String)]) -> std::io::Result<()> {
        writeln!(out, "{CHECKPOINT_MAGIC}")?;
        writeln!(out, "users={}", self.num_users())?;
        writeln!(out, "items={}", self.num_items())?;
        for (k, v) in self.config.to_pairs() {
            writeln!(out, "{k}={v}")?;
        }
        for (k, v) in echo {
            writeln!(out, "config.{k}={v}")?;
        }
        writeln!(out, "end")?;
        let arrays = [&self.item_short, &self.item_long, &self.user, &self.attention.w_query]
            .into_iter()
            .chain(self.attention.w_key.as_ref());
        for m in arrays {
            for x in m.as_slice() {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint(mut reader: impl BufRead) -> Result<Self> {
        let mut header = HashMap::new();
        let mut line = String::new();
        let mut first = true;
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(|e| Error::io("<checkpoint>", e))?;
            if n == 0 {
                return Err(Error::Format("checkpoint header is truncated".into()));
            }
            let l = line.trim_end();
            if first {
                if l != CHECKPOINT_MAGIC {
                    return Err(Error::Format(format!("missing {CHECKPOINT_MAGIC:?} header")));
                }
                first = false;
                continue;
            }
            if l == "end" {
                break;
            }
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad checkpoint header line {l:?}")))?;
            header.insert(k.to_string(), v.to_string());
        }
        let count = |key: &str| -> Result<usize> {
            header
                .get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Format(format!("checkpoint lacks {key}")))
        };
        let (users, items) = (count("users")?, count("items")?);
        let config = ModelConfig::from_pairs(&header)?;
        let d = config.dim;
        let mut read_matrix = |rows: usize, cols: usize| -> Result<Matrix> {
            let mut bytes = vec![0u8; rows * cols * 8];
            reader
                .read_exact(&mut bytes)
                .map_err(|_| Error::Format("checkpoint arrays are truncated".into()))?;
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            Matrix::from_vec(rows, cols, data)
        };
        let item_short = read_matrix(items, d)?;
        let item_long = read_matrix(items, d)?;
        let user = read_matrix(users, d)?;
        let w_query = read_matrix(d, d)?;
        let w_key = if config.untied_projections {
            Some(read_matrix(d, d)?)
        } else {
            None
        };
        let mut rest = Vec::new();
        reader
            .read_to_end(&mut rest)
            .map_err(|e| Error::io("<checkpoint>", e))?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes after checkpoint arrays", rest.len())));
        }
        let attention = AttentionParams {
            w_query,
            w_key,
            window: config.window,
            use_time_encoding: config.use_time_encoding,
            aggregation: config.aggregation,
        };
        Ok(ModelParams {
            config,
            item_short,
            item_long,
            user,
            attention,
        })
    }
}

const CHECKPOINT_MAGIC: &str = "attrec-checkpoint v1";

const CLIP_SLACK: f64 = 1e-12;
