//! Labeled-vs-unlabeled classifier and its out-of-bag score transform.
//!
//! A bagged ensemble of small networks is trained to separate `L` (target 1)
//! from `U` (target 0). Each point's out-of-bag score is a univariate
//! transform that preserves the canonical class prior, so the estimators can
//! run on scores instead of raw features.

mod network;
mod posterior;

pub use network::Mlp;
pub use posterior::{posterior, PosteriorParams};

use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::PuDataset;
use crate::error::{PuError, Result};
use crate::math::{auc, mean};
use crate::rng::{child_rng, derive_seed};

/// Format tag written into serialized models.
pub const MODEL_FORMAT: &str = "noisypu-score-model/1";

fn default_members() -> usize {
    100
}
fn default_hidden() -> usize {
    5
}
fn default_epochs() -> usize {
    200
}
fn default_learn_rate() -> f64 {
    0.1
}
fn default_lr_decay() -> f64 {
    0.01
}
fn default_batch_size() -> usize {
    32
}
fn default_init_range() -> f64 {
    0.5
}
fn default_max_retries() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    #[serde(default = "default_members")]
    pub members: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learn_rate")]
    pub learn_rate: f64,
    /// Epoch `e` uses `learn_rate / (1 + lr_decay·e)`.
    #[serde(default = "default_lr_decay")]
    pub lr_decay: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_init_range")]
    pub init_range: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: usize,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            members: default_members(),
            hidden: default_hidden(),
            epochs: default_epochs(),
            learn_rate: default_learn_rate(),
            lr_decay: default_lr_decay(),
            batch_size: default_batch_size(),
            init_range: default_init_range(),
            max_retries: default_max_retries(),
        }
    }
}

impl TransformConfig {
    pub fn validate(&self) -> Result<()> {
        if self.members == 0 || self.hidden == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(PuError::Config(
                "members, hidden, epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.learn_rate > 0.0) || self.lr_decay < 0.0 || !(self.init_range > 0.0) {
            return Err(PuError::Config(
                "learn_rate and init_range must be positive, lr_decay non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Bootstrap membership of one ensemble member, as a bitset over the pooled
/// sample (`U` rows first, then `L`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagMask {
    len: usize,
    words: Vec<u64>,
}

impl BagMask {
    fn empty(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn to_hex(&self) -> String {
        self.words.iter().map(|w| format!("{w:016x}")).collect()
    }

    fn from_hex(len: usize, s: &str) -> Result<Self> {
        let n = len.div_ceil(64);
        if s.len() != 16 * n {
            return Err(PuError::invalid("bag mask length mismatch"));
        }
        let words = (0..n)
            .map(|k| u64::from_str_radix(&s[16 * k..16 * (k + 1)], 16))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| PuError::invalid(format!("bad bag mask: {e}")))?;
        Ok(Self { len, words })
    }
}

impl Serialize for BagMask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.len, self.to_hex()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for BagMask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (len, hex) = <(usize, String)>::deserialize(d)?;
        BagMask::from_hex(len, &hex).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub network: Mlp,
    pub in_bag: BagMask,
    /// Learning rate the member finally trained with.
    pub learn_rate: f64,
    pub final_loss: f64,
}

/// Trained ensemble plus the input standardization it was fitted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreModel {
    pub format: String,
    pub config: TransformConfig,
    pub seed: u64,
    pub n_unlabeled: usize,
    pub n_labeled: usize,
    pub input_means: Vec<f64>,
    pub input_scales: Vec<f64>,
    pub members: Vec<Member>,
}

/// Out-of-bag scores of `U` and `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedPU {
    pub scores_unlabeled: Vec<f64>,
    pub scores_labeled: Vec<f64>,
    /// `|U| / |L|`.
    pub sample_ratio: f64,
}

impl TransformedPU {
    pub fn new(scores_unlabeled: Vec<f64>, scores_labeled: Vec<f64>) -> Result<Self> {
        if scores_unlabeled.is_empty() || scores_labeled.is_empty() {
            return Err(PuError::invalid("score samples must be non-empty"));
        }
        if scores_unlabeled.iter().chain(&scores_labeled).any(|s| !s.is_finite()) {
            return Err(PuError::invalid("scores must be finite"));
        }
        Ok(Self {
            sample_ratio: scores_unlabeled.len() as f64 / scores_labeled.len() as f64,
            scores_unlabeled,
            scores_labeled,
        })
    }

    /// AUC of `L` scores against `U` scores.
    pub fn auc(&self) -> f64 {
        auc(&self.scores_labeled, &self.scores_unlabeled)
    }

    /// Applies a map to every score.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.scores_unlabeled.iter().map(|s| f(*s)).collect(),
            self.scores_labeled.iter().map(|s| f(*s)).collect(),
        )
    }

    /// Scores as a one-column dataset, ready for MSGMM.
    pub fn to_dataset(&self) -> PuDataset {
        let col = |xs: &[f64]| Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).expect("length matches");
        PuDataset {
            unlabeled: col(&self.scores_unlabeled),
            labeled: col(&self.scores_labeled),
            truth: None,
        }
    }
}


/// One bootstrap resample: drawn indices (with repeats) and their set.
fn draw_bag(n: usize, seed: u64, stream: u64) -> (Vec<usize>, BagMask) {
    let mut rng = child_rng(seed, stream);
    let mut mask = BagMask::empty(n);
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    idx.iter().for_each(|&i| mask.insert(i));
    (idx, mask)
}

/// Bootstrap resamples for every member, redrawn until each point is
/// out-of-bag for at least one member.
fn draw_bags(n: usize, members: usize, seed: u64) -> Result<Vec<(Vec<usize>, BagMask)>> {
    if n < 2 {
        return Err(PuError::invalid("need at least two points to bootstrap"));
    }
    let mut bags: Vec<_> = (0..members).map(|k| draw_bag(n, seed, k as u64)).collect();
    let mut stream = members as u64;
    while let Some(i) = (0..n).find(|&i| bags.iter().all(|(_, b)| b.contains(i))) {
        // replace one member's bag with one that misses point i; points
        // covered only by that member are re-checked on the next pass
        let k = i % members;
        loop {
            let candidate = draw_bag(n, seed, stream);
            stream += 1;
            if !candidate.1.contains(i) {
                bags[k] = candidate;
                break;
            }
        }
        if stream > members as u64 + 10_000 {
            return Err(PuError::EstimationFailed("could not cover every point out-of-bag".into()));
        }
    }
    Ok(bags)
}

fn train_member(
    rows: &[&[f64]],
    targets: &[f64],
    bag: (Vec<usize>, BagMask),
    config: &TransformConfig,
    seed: u64,
) -> Result<Member> {
    let (mut index, mask) = bag;
    let d = rows[0].len();
    let mut learn_rate = config.learn_rate;
    let mut batch_x: Vec<&[f64]> = Vec::with_capacity(config.batch_size);
    let mut batch_y: Vec<f64> = Vec::with_capacity(config.batch_size);
    for attempt in 0..=config.max_retries {
        let mut rng = child_rng(seed, attempt as u64);
        let mut net = Mlp::random(d, config.hidden, config.init_range, &mut rng);
        let mut grad = vec![0.0; net.params.len()];
        let mut loss = f64::NAN;
        let mut diverged = false;
        'epochs: for epoch in 0..config.epochs {
            let lr = learn_rate / (1.0 + config.lr_decay * epoch as f64);
            index.shuffle(&mut rng);
            let mut total = 0.0;
            for chunk in index.chunks(config.batch_size) {
                batch_x.clear();
                batch_y.clear();
                for &i in chunk {
                    batch_x.push(rows[i]);
                    batch_y.push(targets[i]);
                }
                let l = net.loss_and_grad(&batch_x, &batch_y, &mut grad);
                if !l.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    diverged = true;
                    break 'epochs;
                }
                total += l * chunk.len() as f64;
                for (w, g) in net.params.iter_mut().zip(&grad) {
                    *w -= lr * g;
                }
            }
            loss = total / index.len() as f64;
        }
        if !diverged && loss.is_finite() {
            return Ok(Member {
                network: net,
                in_bag: mask,
                learn_rate,
                final_loss: loss,
            });
        }
        learn_rate /= 2.0;
        log::warn!("member diverged on attempt {attempt}; retrying with learn rate {learn_rate}");
    }
    Err(PuError::EstimationFailed(format!(
        "ensemble member diverged after {} retries",
        config.max_retries
    )))
}

/// Column means and standard deviations of the pooled sample (unit scale
/// for constant columns).
fn standardization(pooled: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let means = pooled.mean_axis(Axis(0)).expect("non-empty").to_vec();
    let scales = pooled
        .std_axis(Axis(0), 0.0)
        .iter()
        .map(|s| if *s > 0.0 && s.is_finite() { *s } else { 1.0 })
        .collect();
    (means, scales)
}

impl ScoreModel {
    fn standardize(&self, points: &Array2<f64>) -> Array2<f64> {
        let mut z = points.clone();
        for (j, mut col) in z.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - self.input_means[j]) / self.input_scales[j]);
        }
        z.as_standard_layout().to_owned()
    }

    pub fn dim(&self) -> usize {
        self.input_means.len()
    }

    /// Mean ensemble output at each row of `points` (every member votes).
    pub fn score(&self, points: &Array2<f64>) -> Result<Vec<f64>> {
        if points.ncols() != self.dim() {
            return Err(PuError::invalid(format!(
                "model expects {} columns, got {}",
                self.dim(),
                points.ncols()
            )));
        }
        let z = self.standardize(points);
        Ok(z.rows()
            .into_iter()
            .map(|r| {
                let x = r.to_slice().expect("standard layout");
                mean(&self.members.iter().map(|m| m.network.predict(x)).collect::<Vec<_>>())
            })
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let model: Self = serde_json::from_reader(file)?;
        if model.format != MODEL_FORMAT {
            return Err(PuError::invalid(format!(
                "unsupported model format {:?} (expected {MODEL_FORMAT})",
                model.format
            )));
        }
        Ok(model)
    }
}

/// Trains the labeled-vs-unlabeled ensemble: targets are 1 for `L` rows and
/// 0 for `U` rows, each member on its own bootstrap of the pooled sample.
/// Deterministic for a given seed.
pub fn fit_nontraditional(data: &PuDataset, config: &TransformConfig, seed: u64) -> Result<ScoreModel> {
    config.validate()?;
    data.validate()?;
    if data.n_unlabeled() < 10 || data.n_labeled() < 10 {
        return Err(PuError::invalid("the transform needs |U| >= 10 and |L| >= 10"));
    }
    if data.dim() == 0 {
        return Err(PuError::invalid("data has no feature columns"));
    }
    let pooled = data.pooled();
    let (input_means, input_scales) = standardization(&pooled);
    let mut model = ScoreModel {
        format: MODEL_FORMAT.to_string(),
        config: config.clone(),
        seed,
        n_unlabeled: data.n_unlabeled(),
        n_labeled: data.n_labeled(),
        input_means,
        input_scales,
        members: Vec::new(),
    };
    let z = model.standardize(&pooled);
    let rows: Vec<&[f64]> = z.rows().into_iter().map(|r| r.to_slice().expect("standard layout")).collect();
    let targets: Vec<f64> = (0..pooled.nrows())
        .map(|i| if i < data.n_unlabeled() { 0.0 } else { 1.0 })
        .collect();
    let bags = draw_bags(pooled.nrows(), config.members, derive_seed(seed, 0xb0))?;
    let members: Vec<Result<Member>> = bags
        .into_par_iter()
        .enumerate()
        .map(|(k, bag)| train_member(&rows, &targets, bag, config, derive_seed(seed, 0x1000 + k as u64)))
        .collect();
    model.members = members.into_iter().collect::<Result<_>>()?;
    Ok(model)
}

/// Out-of-bag score of every training point: the mean output of the
/// members whose bootstrap missed it.
pub fn oob_scores(model: &ScoreModel, data: &PuDataset) -> Result<TransformedPU> {
    if data.n_unlabeled() != model.n_unlabeled || data.n_labeled() != model.n_labeled || data.dim() != model.dim() {
        return Err(PuError::invalid("dataset does not match the one the model was trained on"));
    }
    let n = data.n_unlabeled() + data.n_labeled();
    if model.members.iter().any(|m| m.in_bag.len() != n) {
        return Err(PuError::invalid("bag masks do not match the dataset size"));
    }
    let z = model.standardize(&data.pooled());
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = z.row(i);
            let x = x.to_slice().expect("standard layout");
            let (sum, count) = model
                .members
                .iter()
                .filter(|m| !m.in_bag.contains(i))
                .fold((0.0, 0usize), |(s, c), m| (s + m.network.predict(x), c + 1));
            if count == 0 {
                Err(PuError::EstimationFailed(format!("point {i} is in-bag for every member")))
            } else {
                Ok(sum / count as f64)
            }
        })
        .collect::<Result<_>>()?;
    let (u, l) = scores.split_at(data.n_unlabeled());
    TransformedPU::new(u.to_vec(), l.to_vec())
}

/// Fits the ensemble and returns it together with the out-of-bag scores.
pub fn transform(data: &PuDataset, config: &TransformConfig, seed: u64) -> Result<(ScoreModel, TransformedPU)> {
    let model = fit_nontraditional(data, config, seed)?;
    let scores = oob_scores(&model, data)?;
    Ok((model, scores))
}
