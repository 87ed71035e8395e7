//! The persisted model: everything later pipeline stages need, in one value.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::classify::{topic_features, train_svm, ClassifyError, LinearClassifier, SvmHyper};
use crate::corpus::{check_reports, BugReport, Commit, CorpusError};
use crate::links::{join_links, normalize_links, BugLink};
use crate::patchlang::{cluster_and_rank, slice_commit, FixTemplate};
use crate::textprep::{preprocess, TokenSeq};
use crate::topics::{train_lda, LdaConfig, TopicError, TopicModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// The LDA seed is overridden by the bundle seed.
    pub lda: LdaConfig,
    /// Gibbs sweeps when folding a document into the trained model.
    pub fold_in_iterations: usize,
    pub svm: SvmHyper,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lda: LdaConfig::default(), fold_in_iterations: 50, svm: SvmHyper::default() }
    }
}

/// Per training report: its category (label if present, otherwise the
/// classifier's prediction) and its folded-in topic vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFeatures {
    pub id: String,
    pub category: Option<String>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub schema_version: u32,
    pub rng_seed: u64,
    pub config: TrainConfig,
    pub topic_model: TopicModel,
    /// Absent when the training reports carry fewer than two labels.
    pub classifier: Option<LinearClassifier>,
    pub reports: Vec<BugReport>,
    pub features: Vec<ReportFeatures>,
    /// Commits referenced by `links`.
    pub commits: Vec<Commit>,
    pub links: Vec<BugLink>,
    pub templates: Vec<FixTemplate>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    Corpus(CorpusError),
    Topic(TopicError),
    Classify(ClassifyError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Corpus(e) => write!(f, "{e}"),
            TrainError::Topic(e) => write!(f, "topic model: {e}"),
            TrainError::Classify(e) => write!(f, "classifier: {e}"),
        }
    }
}

impl core::error::Error for TrainError {}

impl From<CorpusError> for TrainError {
    fn from(e: CorpusError) -> Self {
        TrainError::Corpus(e)
    }
}

impl From<TopicError> for TrainError {
    fn from(e: TopicError) -> Self {
        TrainError::Topic(e)
    }
}

impl From<ClassifyError> for TrainError {
    fn from(e: ClassifyError) -> Self {
        TrainError::Classify(e)
    }
}

/// Trains topics on the short descriptions, folds every report back in to
/// get its feature vector, and fits the classifier on the labeled reports.
pub fn train_bundle(reports: &[BugReport], config: TrainConfig, seed: u64) -> Result<ModelBundle, TrainError> {
    check_reports(reports)?;
    let config = TrainConfig { lda: LdaConfig { seed, ..config.lda }, ..config };
    let docs: Vec<TokenSeq> = reports.iter().map(preprocess).collect();
    let topic_model = train_lda(&docs, config.lda)?;
    let thetas = topic_features(&topic_model, &docs, config.fold_in_iterations, seed);

    let samples: Vec<(Vec<f64>, String)> =
        reports.iter().zip(&thetas).filter_map(|(r, x)| r.label.clone().map(|l| (x.clone(), l))).collect();
    let distinct: BTreeSet<&str> = samples.iter().map(|(_, l)| l.as_str()).collect();
    let classifier = if distinct.len() >= 2 { Some(train_svm(&samples, &config.svm)?) } else { None };

    let mut features = Vec::with_capacity(reports.len());
    for (r, theta) in reports.iter().zip(thetas) {
        let category = match (&r.label, &classifier) {
            (Some(l), _) => Some(l.clone()),
            (None, Some(c)) => Some(String::from(c.predict(&theta)?.0)),
            (None, None) => None,
        };
        features.push(ReportFeatures { id: r.id.clone(), category, theta });
    }

    Ok(ModelBundle {
        schema_version: SCHEMA_VERSION,
        rng_seed: seed,
        config,
        topic_model,
        classifier,
        reports: reports.to_vec(),
        features,
        commits: Vec::new(),
        links: Vec::new(),
        templates: Vec::new(),
    })
}

impl ModelBundle {
    /// Replaces the link set. Only links whose report and commit are both
    /// known are kept, together with the commits they reference; the rest
    /// come back as human-readable diagnostics.
    pub fn set_links(&mut self, links: Vec<BugLink>, commits: &[Commit]) -> Vec<String> {
        let links = normalize_links(links);
        let join = join_links(&links, &self.reports, commits);
        let diagnostics = join.dangling.iter().map(|d| format!("{d}")).collect();
        let kept: BTreeSet<(&str, &str)> = join.pairs.iter().map(|(r, c)| (r.id.as_str(), c.hash.as_str())).collect();
        let hashes: BTreeSet<&str> = kept.iter().map(|(_, h)| *h).collect();
        self.commits = commits.iter().filter(|c| hashes.contains(c.hash.as_str())).cloned().collect();
        self.commits.sort_by(|a, b| a.hash.cmp(&b.hash));
        self.commits.dedup_by(|a, b| a.hash == b.hash);
        self.links =
            links.into_iter().filter(|l| kept.contains(&(l.bug_id.as_str(), l.commit_hash.as_str()))).collect();
        diagnostics
    }

    pub fn commit(&self, hash: &str) -> Option<&Commit> {
        self.commits.iter().find(|c| c.hash == hash)
    }

    /// Slices every linked commit into fix actions and clusters them into
    /// ranked templates, stored in the bundle. Returns diagnostics for
    /// commits whose diff does not parse.
    pub fn summarize(&mut self) -> Vec<String> {
        let mut diagnostics = Vec::new();
        let mut actions = Vec::new();
        for c in &self.commits {
            match slice_commit(c) {
                Ok(a) => actions.extend(a),
                Err(e) => diagnostics.push(format!("commit {}: {e}", c.hash)),
            }
        }
        self.templates = cluster_and_rank(&actions);
        diagnostics
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn reports() -> Vec<BugReport> {
        let a = ["null pointer dereference driver", "pointer dereference crash probe", "null pointer oops"];
        let b = ["page fault kernel paging", "paging request fault handler", "page table fault"];
        let mut out = Vec::new();
        for (i, t) in a.iter().enumerate() {
            out.push(BugReport::new(format!("a{i}"), *t).with_label("null"));
        }
        for (i, t) in b.iter().enumerate() {
            out.push(BugReport::new(format!("b{i}"), *t).with_label("paging"));
        }
        out.push(BugReport::new("u", "pointer dereference null"));
        out
    }

    fn small() -> TrainConfig {
        TrainConfig {
            lda: LdaConfig { num_topics: 2, alpha: 0.5, beta: 0.01, iterations: 50, seed: 0 },
            ..Default::default()
        }
    }

    #[test]
    fn trains_features_for_every_report() {
        let b = train_bundle(&reports(), small(), 7).unwrap();
        assert_eq!(b.features.len(), 7);
        assert_eq!(b.topic_model.seed, 7);
        assert!(b.classifier.is_some());
        assert!(b.features.iter().all(|f| f.category.is_some()));
        assert_eq!(b.features[0].category.as_deref(), Some("null"));
        assert_eq!(b, train_bundle(&reports(), small(), 7).unwrap());
    }

    #[test]
    fn unlabeled_corpus_has_no_classifier() {
        let rs: Vec<_> = reports()
            .into_iter()
            .map(|mut r| {
                r.label = None;
                r
            })
            .collect();
        let b = train_bundle(&rs, small(), 7).unwrap();
        assert!(b.classifier.is_none());
        assert!(b.features.iter().all(|f| f.category.is_none()));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let mut rs = reports();
        rs[1].id = "a0".into();
        assert!(matches!(train_bundle(&rs, small(), 7), Err(TrainError::Corpus(CorpusError::DuplicateId { .. }))));
    }

    #[test]
    fn set_links_keeps_joinable_links() {
        let mut b = train_bundle(&reports(), small(), 7).unwrap();
        let commits = vec![
            Commit { hash: "aaaaaaa".into(), message: "Bug #a0".into(), diff_text: String::new() },
            Commit { hash: "bbbbbbb".into(), message: "unrelated".into(), diff_text: String::new() },
        ];
        let link = |bug: &str| BugLink {
            bug_id: bug.to_string(),
            commit_hash: "aaaaaaa".into(),
            pattern_name: "bug-hash".into(),
            matched_text: format!("Bug #{bug}"),
        };
        let diags = b.set_links(vec![link("zz"), link("a0")], &commits);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].contains("zz"));
        assert_eq!(b.links, vec![link("a0")]);
        assert_eq!(b.commits.len(), 1);
        assert!(b.summarize().is_empty());
        assert!(b.templates.is_empty());
    }
}
