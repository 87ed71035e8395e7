//! LDA topic model trained by collapsed Gibbs sampling, with fold-in
//! inference for unseen documents.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::rng::{document_seed, Rng};
use crate::textprep::TokenSeq;

/// Stem ↔ dense word id. Ids follow first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    id_of: BTreeMap<String, u32>,
    word_of: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `word`, inserting it if unseen.
    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.id_of.get(word) {
            return id;
        }
        let id = self.word_of.len() as u32;
        self.id_of.insert(String::from(word), id);
        self.word_of.push(String::from(word));
        id
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.id_of.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.word_of.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.word_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_of.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.word_of
    }

    /// Known word ids of `doc`, out-of-vocabulary stems dropped.
    pub fn encode(&self, doc: &TokenSeq) -> Vec<u32> {
        doc.tokens.iter().filter_map(|t| self.id(t)).collect()
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(words: Vec<String>) -> Self {
        let mut v = Vocabulary::new();
        for w in &words {
            v.intern(w);
        }
        v
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.word_of
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub num_topics: usize,
    /// Symmetric document-topic prior.
    pub alpha: f64,
    /// Symmetric topic-word prior.
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// K topics with the usual heuristics: alpha = 50/K, beta = 0.01.
    pub fn with_topics(num_topics: usize) -> Self {
        LdaConfig {
            num_topics,
            alpha: 50.0 / num_topics as f64,
            beta: 0.01,
            iterations: 1000,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self::with_topics(10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopicError {
    TooFewTopics(usize),
    NoIterations,
    EmptyCorpus,
    BadPrior,
    TopicOutOfRange { topic: usize, num_topics: usize },
}

impl fmt::Display for TopicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopicError::TooFewTopics(k) => write!(f, "need at least 2 topics, got {k}"),
            TopicError::NoIterations => write!(f, "need at least 1 Gibbs iteration"),
            TopicError::EmptyCorpus => write!(f, "every document is empty after preprocessing"),
            TopicError::BadPrior => write!(f, "alpha and beta must be positive and finite"),
            TopicError::TopicOutOfRange { topic, num_topics } => {
                write!(f, "topic {topic} out of range (model has {num_topics})")
            }
        }
    }
}

impl core::error::Error for TopicError {}

/// Trained LDA state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub num_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub vocabulary: Vocabulary,
    /// K × V, rows sum to one.
    pub phi: Vec<Vec<f64>>,
    /// D × K, rows sum to one.
    pub thetas: Vec<Vec<f64>>,
    /// Topic of every token of every training document.
    pub assignments: Vec<Vec<u32>>,
    pub iterations: usize,
    pub seed: u64,
}

impl TopicModel {
    pub fn dominant_topic(&self, doc: usize) -> usize {
        argmax(&self.thetas[doc])
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Collapsed Gibbs sampler. Exposed so callers can inspect intermediate
/// states; [`train_lda`] drives it for the configured number of sweeps.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    config: LdaConfig,
    vocabulary: Vocabulary,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u32>>,
    doc_topic: Vec<Vec<u32>>,
    /// K × V, row-major.
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
    rng: Rng,
    probs: Vec<f64>,
    sweeps: usize,
}

impl GibbsSampler {
    /// Builds the vocabulary and draws the initial topic assignments.
    pub fn new(docs: &[TokenSeq], config: LdaConfig) -> Result<Self, TopicError> {
        if config.num_topics < 2 {
            return Err(TopicError::TooFewTopics(config.num_topics));
        }
        if !(config.alpha > 0.0 && config.alpha.is_finite() && config.beta > 0.0 && config.beta.is_finite()) {
            return Err(TopicError::BadPrior);
        }
        let mut vocabulary = Vocabulary::new();
        let encoded: Vec<Vec<u32>> =
            docs.iter().map(|d| d.tokens.iter().map(|t| vocabulary.intern(t)).collect()).collect();
        if vocabulary.is_empty() {
            return Err(TopicError::EmptyCorpus);
        }
        let k = config.num_topics;
        let v = vocabulary.len();
        let mut rng = Rng::new(config.seed);
        let mut doc_topic = vec![vec![0u32; k]; encoded.len()];
        let mut topic_word = vec![0u32; k * v];
        let mut topic_total = vec![0u32; k];
        let z: Vec<Vec<u32>> = encoded
            .iter()
            .enumerate()
            .map(|(d, words)| {
                words
                    .iter()
                    .map(|&w| {
                        let t = rng.below(k);
                        doc_topic[d][t] += 1;
                        topic_word[t * v + w as usize] += 1;
                        topic_total[t] += 1;
                        t as u32
                    })
                    .collect()
            })
            .collect();
        Ok(GibbsSampler {
            config,
            vocabulary,
            docs: encoded,
            z,
            doc_topic,
            topic_word,
            topic_total,
            rng,
            probs: vec![0.0; k],
            sweeps: 0,
        })
    }

    /// One full pass resampling every token's topic.
    pub fn sweep(&mut self) {
        let k = self.config.num_topics;
        let v = self.vocabulary.len();
        let alpha = self.config.alpha;
        let beta = self.config.beta;
        let v_beta = v as f64 * beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i] as usize;
                let old = self.z[d][i] as usize;
                self.doc_topic[d][old] -= 1;
                self.topic_word[old * v + w] -= 1;
                self.topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (f64::from(self.doc_topic[d][t]) + alpha) * (f64::from(self.topic_word[t * v + w]) + beta)
                        / (f64::from(self.topic_total[t]) + v_beta);
                    total += p;
                    self.probs[t] = total;
                }
                let new = sample_cumulative(&self.probs, self.rng.next_f64() * total);

                self.z[d][i] = new as u32;
                self.doc_topic[d][new] += 1;
                self.topic_word[new * v + w] += 1;
                self.topic_total[new] += 1;
            }
        }
        self.sweeps += 1;
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Checks that the count tables agree with the assignments.
    pub fn counts_consistent(&self) -> bool {
        let k = self.config.num_topics;
        let v = self.vocabulary.len();
        let mut dt = vec![vec![0u32; k]; self.docs.len()];
        let mut tw = vec![0u32; k * v];
        for (d, zs) in self.z.iter().enumerate() {
            if zs.len() != self.docs[d].len() {
                return false;
            }
            for (i, &t) in zs.iter().enumerate() {
                dt[d][t as usize] += 1;
                tw[t as usize * v + self.docs[d][i] as usize] += 1;
            }
        }
        let totals: Vec<u32> = (0..k).map(|t| tw[t * v..(t + 1) * v].iter().sum()).collect();
        let per_topic_docs: Vec<u32> = (0..k).map(|t| dt.iter().map(|row| row[t]).sum()).collect();
        dt == self.doc_topic && tw == self.topic_word && totals == self.topic_total && totals == per_topic_docs
    }

    /// Smoothed point estimates from the current counts.
    pub fn model(&self) -> TopicModel {
        let k = self.config.num_topics;
        let v = self.vocabulary.len();
        let (alpha, beta) = (self.config.alpha, self.config.beta);
        let phi = (0..k)
            .map(|t| {
                let denom = f64::from(self.topic_total[t]) + v as f64 * beta;
                (0..v).map(|w| (f64::from(self.topic_word[t * v + w]) + beta) / denom).collect()
            })
            .collect();
        let thetas = self
            .doc_topic
            .iter()
            .zip(&self.docs)
            .map(|(counts, words)| smoothed_theta(counts, words.len(), alpha))
            .collect();
        TopicModel {
            num_topics: k,
            alpha,
            beta,
            vocabulary: self.vocabulary.clone(),
            phi,
            thetas,
            assignments: self.z.clone(),
            iterations: self.sweeps,
            seed: self.config.seed,
        }
    }
}

fn smoothed_theta(counts: &[u32], n_tokens: usize, alpha: f64) -> Vec<f64> {
    let denom = n_tokens as f64 + counts.len() as f64 * alpha;
    counts.iter().map(|&c| (f64::from(c) + alpha) / denom).collect()
}

fn sample_cumulative(cumulative: &[f64], u: f64) -> usize {
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

pub fn train_lda(docs: &[TokenSeq], config: LdaConfig) -> Result<TopicModel, TopicError> {
    if config.iterations == 0 {
        return Err(TopicError::NoIterations);
    }
    let mut sampler = GibbsSampler::new(docs, config)?;
    for _ in 0..config.iterations {
        sampler.sweep();
    }
    Ok(sampler.model())
}

/// Fold-in Gibbs sampling: phi stays fixed, only the new document's
/// assignments are resampled. Unknown stems are skipped; an empty or
/// all-unknown document gets the uniform vector.
pub fn infer_theta(model: &TopicModel, doc: &TokenSeq, iterations: usize, seed: u64) -> Vec<f64> {
    infer_theta_ids(model, &model.vocabulary.encode(doc), iterations, seed)
}

pub fn infer_theta_ids(model: &TopicModel, words: &[u32], iterations: usize, seed: u64) -> Vec<f64> {
    let k = model.num_topics;
    if words.is_empty() {
        return vec![1.0 / k as f64; k];
    }
    let mut rng = Rng::new(seed);
    let mut counts = vec![0u32; k];
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let t = rng.below(k);
            counts[t] += 1;
            t
        })
        .collect();
    let mut probs = vec![0.0; k];
    for _ in 0..iterations {
        for (i, &w) in words.iter().enumerate() {
            counts[z[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += (f64::from(counts[t]) + model.alpha) * model.phi[t][w as usize];
                probs[t] = total;
            }
            let t = sample_cumulative(&probs, rng.next_f64() * total);
            z[i] = t;
            counts[t] += 1;
        }
    }
    smoothed_theta(&counts, words.len(), model.alpha)
}

/// Fold-in with a seed derived from `seed` and the document's content.
pub fn infer_theta_seeded(model: &TopicModel, doc: &TokenSeq, iterations: usize, seed: u64) -> Vec<f64> {
    let ids = model.vocabulary.encode(doc);
    infer_theta_ids(model, &ids, iterations, document_seed(seed, &ids))
}

/// The `n` most probable stems of a topic, probabilities descending, ties by
/// ascending word id.
pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<(String, f64)>, TopicError> {
    let row = model.phi.get(topic).ok_or(TopicError::TopicOutOfRange { topic, num_topics: model.num_topics })?;
    let mut ids: Vec<usize> = (0..row.len()).collect();
    ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    Ok(ids.into_iter().take(n).map(|w| (String::from(model.vocabulary.word(w as u32).unwrap_or("")), row[w])).collect())
}

/// Sum over documents of `log Σ_k θ_k φ_kw` per known token, with θ from
/// fold-in (content-derived seeds).
pub fn held_out_log_likelihood(model: &TopicModel, docs: &[TokenSeq], fold_in_iterations: usize, seed: u64) -> f64 {
    docs.iter()
        .map(|doc| {
            let ids = model.vocabulary.encode(doc);
            let theta = infer_theta_ids(model, &ids, fold_in_iterations, document_seed(seed, &ids));
            ids.iter()
                .map(|&w| {
                    let p: f64 = (0..model.num_topics).map(|t| theta[t] * model.phi[t][w as usize]).sum();
                    libm::log(p)
                })
                .sum::<f64>()
        })
        .sum()
}
