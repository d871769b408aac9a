use ndarray::Array2;

use crate::alphamax::{alphamax_clean_samples, alphamax_n_samples, AlphaMaxConfig};
use crate::datagen::{zscore_pca, PuDataset};
use crate::error::{PuError, Result};
use crate::estimate::{Method, PriorEstimate};
use crate::msgmm::{self, MsGmmConfig};
use crate::rng::derive_seed;
use crate::transform::{self, TransformConfig, TransformedPU};

/// Preprocessing applied before the estimators run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preprocess {
    #[default]
    Raw,
    /// Out-of-bag scores of the labeled-vs-unlabeled ensemble.
    Transform,
    /// Top principal components of the z-scored pooled sample.
    Pca(usize),
}

impl Preprocess {
    pub fn from_flags(transform: bool, pca: usize) -> Result<Self> {
        match (transform, pca) {
            (true, 0) => Ok(Preprocess::Transform),
            (true, _) => Err(PuError::Config("transform and pca are mutually exclusive".into())),
            (false, 0) => Ok(Preprocess::Raw),
            (false, k) => Ok(Preprocess::Pca(k)),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EstimatorConfigs {
    pub msgmm: MsGmmConfig,
    pub alphamax: AlphaMaxConfig,
    pub network: TransformConfig,
}

/// Data the estimators see after preprocessing.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub data: PuDataset,
    pub scores: Option<TransformedPU>,
}

pub fn prepare(data: &PuDataset, pre: Preprocess, network: &TransformConfig, seed: u64) -> Result<Prepared> {
    match pre {
        Preprocess::Raw => Ok(Prepared {
            data: data.clone(),
            scores: None,
        }),
        Preprocess::Transform => {
            let (_, scores) = transform::transform(data, network, derive_seed(seed, 0x7f))?;
            Ok(Prepared {
                data: scores.to_dataset(),
                scores: Some(scores),
            })
        }
        Preprocess::Pca(k) => {
            let proj = zscore_pca(&data.pooled(), k)?;
            let n_u = data.n_unlabeled();
            let scores: &Array2<f64> = &proj.scores;
            let unlabeled = scores.slice(ndarray::s![..n_u, ..]).to_owned();
            let labeled = scores.slice(ndarray::s![n_u.., ..]).to_owned();
            Ok(Prepared {
                data: PuDataset {
                    unlabeled,
                    labeled,
                    truth: data.truth.clone(),
                },
                scores: None,
            })
        }
    }
}

/// Runs one estimator on prepared data.
pub fn run_method(method: Method, prepared: &Prepared, configs: &EstimatorConfigs, seed: u64) -> Result<PriorEstimate> {
    let d = &prepared.data;
    match method {
        Method::Msgmm => Ok(msgmm::fit(d, &configs.msgmm, derive_seed(seed, 0x63))?.estimate),
        Method::AlphaMaxN => alphamax_n_samples(d.unlabeled.view(), d.labeled.view(), &configs.alphamax),
        Method::AlphaMax => alphamax_clean_samples(d.unlabeled.view(), d.labeled.view(), &configs.alphamax),
    }
}

/// Preprocesses once and runs every requested method; per-method failures
/// are returned individually.
pub fn estimate_all(
    data: &PuDataset,
    methods: &[Method],
    pre: Preprocess,
    configs: &EstimatorConfigs,
    seed: u64,
) -> Result<Vec<(Method, Result<PriorEstimate>)>> {
    let prepared = prepare(data, pre, &configs.network, seed)?;
    Ok(methods
        .iter()
        .map(|&m| (m, run_method(m, &prepared, configs, seed)))
        .collect())
}
