//! From a new bug report to ranked fix hints: categorize, find similar
//! fixed reports, summarize what their fixes have in common.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::bundle::ModelBundle;
use crate::classify::ClassifyError;
use crate::corpus::BugReport;
use crate::patchlang::{cluster_and_rank, slice_commit, FixTemplate};
use crate::textprep::preprocess;
use crate::topics::infer_theta_seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendOptions {
    pub k: usize,
    pub n_neighbors: usize,
    /// Fold-in seed. Use the bundle's seed to make a report whose text
    /// matches a training report land on exactly the same topic vector.
    pub seed: u64,
    /// Restrict neighbors to the predicted category.
    pub gate: bool,
}

impl RecommendOptions {
    pub fn for_bundle(bundle: &ModelBundle) -> Self {
        RecommendOptions { k: 5, n_neighbors: 20, seed: bundle.rng_seed, gate: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub bug_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Provenance {
    pub bug_id: String,
    pub commit_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hint {
    pub rendered: String,
    pub score: f64,
    pub template: FixTemplate,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub report_id: String,
    pub category: Option<String>,
    pub neighbors: Vec<Neighbor>,
    pub hints: Vec<Hint>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecommendError {
    /// The bundle has no trained reports to compare against.
    Untrained,
    ZeroK,
    Classify(ClassifyError),
}

impl fmt::Display for RecommendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecommendError::Untrained => write!(f, "bundle holds no trained reports"),
            RecommendError::ZeroK => write!(f, "k must be at least 1"),
            RecommendError::Classify(e) => write!(f, "classifier: {e}"),
        }
    }
}

impl core::error::Error for RecommendError {}

/// Cosine similarity, 0 when either vector is zero.
pub fn similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / libm::sqrt(na * nb)).clamp(0.0, 1.0)
}

/// The `n` linked past reports most similar to `theta`, optionally only
/// those in `category`. Ties go to the smaller bug id.
pub fn find_neighbors(bundle: &ModelBundle, theta: &[f64], category: Option<&str>, n: usize) -> Vec<Neighbor> {
    let linked: BTreeSet<&str> = bundle.links.iter().map(|l| l.bug_id.as_str()).collect();
    let mut out: Vec<Neighbor> = bundle
        .features
        .iter()
        .filter(|f| linked.contains(f.id.as_str()))
        .filter(|f| category.is_none() || f.category.as_deref() == category)
        .map(|f| Neighbor { bug_id: f.id.clone(), similarity: similarity(theta, &f.theta) })
        .collect();
    out.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then_with(|| a.bug_id.cmp(&b.bug_id)));
    out.truncate(n);
    out
}

pub fn recommend_top_k(
    bundle: &ModelBundle,
    report: &BugReport,
    opts: &RecommendOptions,
) -> Result<Recommendation, RecommendError> {
    if opts.k == 0 {
        return Err(RecommendError::ZeroK);
    }
    if bundle.features.is_empty() {
        return Err(RecommendError::Untrained);
    }
    let theta =
        infer_theta_seeded(&bundle.topic_model, &preprocess(report), bundle.config.fold_in_iterations, opts.seed);
    let category = match &bundle.classifier {
        Some(c) => Some(String::from(c.predict(&theta).map_err(RecommendError::Classify)?.0)),
        None => None,
    };
    let gate = if opts.gate { category.as_deref() } else { None };
    let neighbors = find_neighbors(bundle, &theta, gate, opts.n_neighbors);

    let mut diagnostics = Vec::new();
    if bundle.links.is_empty() {
        diagnostics.push(String::from("bundle has no bug links"));
    } else if neighbors.is_empty() {
        diagnostics.push(String::from("no linked reports in the predicted category"));
    }

    // commit hash -> neighbors (by position) linked to it
    let mut linked_to: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, n) in neighbors.iter().enumerate() {
        for l in bundle.links.iter().filter(|l| l.bug_id == n.bug_id) {
            linked_to.entry(l.commit_hash.as_str()).or_default().push(i);
        }
    }
    let mut actions = Vec::new();
    for hash in linked_to.keys() {
        let Some(c) = bundle.commit(hash) else {
            diagnostics.push(format!("commit {hash} is linked but missing from the bundle"));
            continue;
        };
        match slice_commit(c) {
            Ok(a) => actions.extend(a),
            Err(e) => diagnostics.push(format!("commit {hash}: {e}")),
        }
    }
    if !neighbors.is_empty() && actions.is_empty() {
        diagnostics.push(String::from("no fix actions recovered"));
    }

    let mut hints: Vec<Hint> = cluster_and_rank(&actions)
        .into_iter()
        .map(|t| {
            let mut contributing = BTreeSet::new();
            let mut provenance = BTreeSet::new();
            for s in &t.instances {
                for &i in linked_to.get(s.commit.as_str()).into_iter().flatten() {
                    contributing.insert(i);
                    provenance
                        .insert(Provenance { bug_id: neighbors[i].bug_id.clone(), commit_hash: s.commit.clone() });
                }
            }
            Hint {
                rendered: t.render(),
                score: contributing.iter().map(|&i| neighbors[i].similarity).sum(),
                template: t,
                provenance: provenance.into_iter().collect(),
            }
        })
        .collect();
    hints.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.rendered.cmp(&b.rendered)));
    hints.truncate(opts.k);

    Ok(Recommendation { report_id: report.id.clone(), category, neighbors, hints, diagnostics })
}
