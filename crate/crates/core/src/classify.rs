//! One-vs-rest linear SVMs over topic-proportion features, and stratified
//! k-fold cross-validation of the whole LDA + SVM categorizer.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::BugReport;
use crate::rng::Rng;
use crate::textprep::{preprocess, TokenSeq};
use crate::topics::{infer_theta_seeded, train_lda, LdaConfig, TopicError, TopicModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyper {
    /// L2 regularization strength.
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper { lambda: 0.01, epochs: 200 }
    }
}

/// Learned with step size `1 / (lambda * t)` at epoch `t`, weights projected
/// onto the ball of radius `1 / sqrt(lambda)`; the lowest-objective iterate
/// is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub labels: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub hyper: SvmHyper,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifyError {
    NoSamples,
    SingleClass(String),
    DimensionMismatch { expected: usize, got: usize },
    Unlabeled { id: String },
    TooFewFolds(usize),
    ClassTooSmall { label: String, size: usize, folds: usize },
    Topic(TopicError),
}

impl fmt::Display for ClassifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifyError::NoSamples => write!(f, "no training samples"),
            ClassifyError::SingleClass(l) => {
                write!(f, "need at least two distinct labels, all samples are {l:?}")
            }
            ClassifyError::DimensionMismatch { expected, got } => {
                write!(f, "feature vector has {got} entries, classifier expects {expected}")
            }
            ClassifyError::Unlabeled { id } => write!(f, "bug report {id:?} has no label"),
            ClassifyError::TooFewFolds(k) => write!(f, "need at least 2 folds, got {k}"),
            ClassifyError::ClassTooSmall { label, size, folds } => {
                write!(f, "class {label:?} has {size} reports, fewer than the {folds} folds")
            }
            ClassifyError::Topic(e) => write!(f, "topic model: {e}"),
        }
    }
}

impl core::error::Error for ClassifyError {}

impl From<TopicError> for ClassifyError {
    fn from(e: TopicError) -> Self {
        ClassifyError::Topic(e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `lambda/2 |w|^2 + mean_i max(0, 1 - y_i (w.x_i + b))`. The bias is not
/// regularized.
pub fn hinge_objective(w: &[f64], b: f64, xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * dot(w, w);
    let loss: f64 = xs.iter().zip(ys).map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0)).sum();
    reg + loss / xs.len() as f64
}

/// A subgradient of [`hinge_objective`]; at a kink the hinge term contributes
/// zero.
pub fn hinge_subgradient(w: &[f64], b: f64, xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mut gw: Vec<f64> = w.iter().map(|wi| lambda * wi).collect();
    let mut gb = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        if y * (dot(w, x) + b) < 1.0 {
            for (g, xi) in gw.iter_mut().zip(x) {
                *g -= y * xi / n;
            }
            gb -= y / n;
        }
    }
    (gw, gb)
}

fn train_binary(xs: &[Vec<f64>], ys: &[f64], hyper: &SvmHyper) -> (Vec<f64>, f64) {
    let dim = xs[0].len();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut best = (w.clone(), b, hinge_objective(&w, b, xs, ys, hyper.lambda));
    let radius = 1.0 / libm::sqrt(hyper.lambda);
    for t in 1..=hyper.epochs {
        let (gw, gb) = hinge_subgradient(&w, b, xs, ys, hyper.lambda);
        let eta = 1.0 / (hyper.lambda * t as f64);
        for (wi, gi) in w.iter_mut().zip(&gw) {
            *wi -= eta * gi;
        }
        b -= eta * gb;
        let norm = libm::sqrt(dot(&w, &w));
        if norm > radius {
            let s = radius / norm;
            w.iter_mut().for_each(|wi| *wi *= s);
        }
        let obj = hinge_objective(&w, b, xs, ys, hyper.lambda);
        if obj < best.2 {
            best = (w.clone(), b, obj);
        }
    }
    (best.0, best.1)
}

/// Trains one binary hinge-loss model per label (label vs. rest) by
/// deterministic full-batch subgradient descent. Labels are ordered
/// lexicographically.
pub fn train_svm(samples: &[(Vec<f64>, String)], hyper: &SvmHyper) -> Result<LinearClassifier, ClassifyError> {
    let Some(first) = samples.first() else {
        return Err(ClassifyError::NoSamples);
    };
    let dim = first.0.len();
    if let Some((x, _)) = samples.iter().find(|(x, _)| x.len() != dim) {
        return Err(ClassifyError::DimensionMismatch { expected: dim, got: x.len() });
    }
    let labels: Vec<String> = samples.iter().map(|(_, l)| l.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    if labels.len() < 2 {
        return Err(ClassifyError::SingleClass(labels[0].clone()));
    }
    let xs: Vec<Vec<f64>> = samples.iter().map(|(x, _)| x.clone()).collect();
    let mut weights = Vec::with_capacity(labels.len());
    let mut bias = Vec::with_capacity(labels.len());
    for label in &labels {
        let ys: Vec<f64> = samples.iter().map(|(_, l)| if l == label { 1.0 } else { -1.0 }).collect();
        let (w, b) = train_binary(&xs, &ys, hyper);
        weights.push(w);
        bias.push(b);
    }
    Ok(LinearClassifier { labels, weights, bias, hyper: *hyper })
}

impl LinearClassifier {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Per-label scores `w_c.x + b_c`, in label order.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>, ClassifyError> {
        if x.len() != self.dim() {
            return Err(ClassifyError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.weights.iter().zip(&self.bias).map(|(w, b)| dot(w, x) + b).collect())
    }

    /// Highest-scoring label; ties go to the earlier label.
    pub fn predict(&self, x: &[f64]) -> Result<(&str, Vec<f64>), ClassifyError> {
        let scores = self.scores(x)?;
        let best = crate::topics::argmax(&scores);
        Ok((self.labels[best].as_str(), scores))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
}

/// Cross-validation outcome. `confusion[i][j]` counts reports of true label
/// `i` predicted as `j`. A class never predicted (or never present) gets
/// precision (or recall) 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub labels: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    /// Micro-averaged over the pooled confusion matrix (equals accuracy).
    pub pooled_precision: f64,
    pub pooled_recall: f64,
    pub folds: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_confusion(labels: Vec<String>, confusion: Vec<Vec<usize>>, folds: usize) -> Self {
        let n = labels.len();
        let per_class: Vec<ClassMetrics> = (0..n)
            .map(|c| {
                let tp = confusion[c][c];
                let predicted: usize = (0..n).map(|r| confusion[r][c]).sum();
                let support: usize = confusion[c].iter().sum();
                ClassMetrics {
                    label: labels[c].clone(),
                    precision: ratio(tp, predicted),
                    recall: ratio(tp, support),
                    support,
                }
            })
            .collect();
        let macro_precision = per_class.iter().map(|m| m.precision).sum::<f64>() / n as f64;
        let macro_recall = per_class.iter().map(|m| m.recall).sum::<f64>() / n as f64;
        let tp: usize = (0..n).map(|c| confusion[c][c]).sum();
        let total: usize = confusion.iter().flatten().sum();
        EvalReport {
            labels,
            confusion,
            per_class,
            macro_precision,
            macro_recall,
            pooled_precision: ratio(tp, total),
            pooled_recall: ratio(tp, total),
            folds,
        }
    }

    /// Builds the report from parallel truth / prediction label indices.
    pub fn from_predictions(labels: Vec<String>, truth: &[usize], predicted: &[usize], folds: usize) -> Self {
        let n = labels.len();
        let mut confusion = vec![vec![0; n]; n];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        Self::from_confusion(labels, confusion, folds)
    }
}

/// Test-set indices for each of `k` folds, stratified by label. Each class is
/// shuffled with the seeded generator and dealt round-robin, continuing the
/// deal across classes so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[&str], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let classes: BTreeSet<&str> = labels.iter().copied().collect();
    let mut rng = Rng::new(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut members);
        for i in members {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub lda: LdaConfig,
    pub fold_in_iterations: usize,
    pub svm: SvmHyper,
    pub folds: usize,
    pub seed: u64,
}

/// Topic-proportion features for `docs` under `model` (fold-in, seeds derived
/// from `seed` and each document's content).
pub fn topic_features(model: &TopicModel, docs: &[TokenSeq], fold_in_iterations: usize, seed: u64) -> Vec<Vec<f64>> {
    docs.iter().map(|d| infer_theta_seeded(model, d, fold_in_iterations, seed)).collect()
}

/// Stratified k-fold cross-validation. For every fold the topic model is
/// retrained on the training split only; both splits get their features by
/// fold-in against that model. Fold `f` uses seed `seed + f`.
pub fn k_fold_cv(reports: &[BugReport], cfg: &CvConfig) -> Result<EvalReport, ClassifyError> {
    if cfg.folds < 2 {
        return Err(ClassifyError::TooFewFolds(cfg.folds));
    }
    let mut labels_of = Vec::with_capacity(reports.len());
    for r in reports {
        match &r.label {
            Some(l) => labels_of.push(l.as_str()),
            None => return Err(ClassifyError::Unlabeled { id: r.id.clone() }),
        }
    }
    let labels: Vec<String> = labels_of.iter().map(|l| String::from(*l)).collect::<BTreeSet<_>>().into_iter().collect();
    match labels.len() {
        0 => return Err(ClassifyError::NoSamples),
        1 => return Err(ClassifyError::SingleClass(labels[0].clone())),
        _ => {}
    }
    for l in &labels {
        let size = labels_of.iter().filter(|x| **x == l.as_str()).count();
        if size < cfg.folds {
            return Err(ClassifyError::ClassTooSmall { label: l.clone(), size, folds: cfg.folds });
        }
    }
    let label_index = |l: &str| labels.iter().position(|x| x == l).expect("known label");
    let docs: Vec<TokenSeq> = reports.iter().map(preprocess).collect();
    let folds = stratified_folds(&labels_of, cfg.folds, cfg.seed);

    let n = labels.len();
    let mut confusion = vec![vec![0; n]; n];
    for (f, test) in folds.iter().enumerate() {
        let fold_seed = cfg.seed.wrapping_add(f as u64);
        let in_test: BTreeSet<usize> = test.iter().copied().collect();
        let train: Vec<usize> = (0..reports.len()).filter(|i| !in_test.contains(i)).collect();
        let train_docs: Vec<TokenSeq> = train.iter().map(|&i| docs[i].clone()).collect();
        let model = train_lda(&train_docs, LdaConfig { seed: fold_seed, ..cfg.lda })?;
        let train_x = topic_features(&model, &train_docs, cfg.fold_in_iterations, fold_seed);
        let samples: Vec<(Vec<f64>, String)> =
            train_x.into_iter().zip(&train).map(|(x, &i)| (x, String::from(labels_of[i]))).collect();
        let clf = train_svm(&samples, &cfg.svm)?;
        for &i in test {
            let x = infer_theta_seeded(&model, &docs[i], cfg.fold_in_iterations, fold_seed);
            let (pred, _) = clf.predict(&x)?;
            confusion[label_index(labels_of[i])][label_index(pred)] += 1;
        }
    }
    Ok(EvalReport::from_confusion(labels, confusion, cfg.folds))
}
