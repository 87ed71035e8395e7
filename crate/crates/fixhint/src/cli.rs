//! The `fixhint` command line. Every subcommand prints one JSON document on
//! stdout; diagnostics and human-oriented tables go to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fixhint_core::bundle::{train_bundle, TrainConfig};
use fixhint_core::classify::{k_fold_cv, CvConfig, SvmHyper};
use fixhint_core::corpus::Commit;
use fixhint_core::recommend::{recommend_top_k, RecommendOptions};
use fixhint_core::rng::DEFAULT_SEED;
use fixhint_core::topics::{top_words, LdaConfig};
use serde_json::{json, Value};

use crate::error::Result;
use crate::io::{ingest_commits, ingest_gitlog, ingest_reports, read_json, write_jsonl, write_text};
use crate::linker::{default_patterns, extract_links, load_patterns};
use crate::store::{load_bundle, save_bundle};

#[derive(Debug, Parser)]
#[command(name = "fixhint", version, about = "Recommend fix hints for bug reports from past fixes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a bug-report JSONL file.
    IngestReports {
        #[arg(long)]
        reports: PathBuf,
        /// Write the validated reports back out as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read commits from a `git log -p` dump or a commit JSONL file.
    IngestCommits {
        #[command(flatten)]
        source: CommitSource,
        /// Write the commits as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the topic model and classifier, write a new bundle.
    Train {
        #[arg(long)]
        reports: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inspect the topic model.
    Topics {
        #[command(subcommand)]
        command: TopicsCommand,
    },
    /// Link bug reports to commits and store the links in the bundle.
    Link {
        #[arg(long)]
        bundle: PathBuf,
        #[command(flatten)]
        source: CommitSource,
        /// JSONL of `{"name", "regex"}` link patterns; defaults to `Bug #N`
        /// and Bugzilla URLs.
        #[arg(long)]
        patterns: Option<PathBuf>,
        /// Write every extracted link as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster the linked fixes into templates and store them in the bundle.
    Summarize {
        #[arg(long)]
        bundle: PathBuf,
        /// Write templates.jsonl and one .cocci file per template here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation of topics plus classifier.
    Evaluate {
        #[arg(long, required_unless_present = "bundle", conflicts_with = "bundle")]
        reports: Option<PathBuf>,
        /// Evaluate on the bundle's reports with the bundle's settings.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Recommend fix hints for a new bug report.
    Recommend {
        #[arg(long)]
        bundle: PathBuf,
        /// A single bug report as a JSON object.
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
        #[arg(long, default_value_t = 20)]
        neighbors: usize,
        /// Fold-in seed; defaults to the bundle's training seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Search neighbors across all categories.
        #[arg(long)]
        no_gate: bool,
    },
}

#[derive(Debug, Subcommand)]
enum TopicsCommand {
    Show {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value_t = 6)]
        words: usize,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct CommitSource {
    /// Output of `git log -p`.
    #[arg(long)]
    gitlog: Option<PathBuf>,
    /// Commit JSONL.
    #[arg(long)]
    commits: Option<PathBuf>,
}

impl CommitSource {
    fn load(&self) -> Result<Vec<Commit>> {
        match (&self.gitlog, &self.commits) {
            (Some(p), _) => ingest_gitlog(p),
            (None, Some(p)) => ingest_commits(p),
            (None, None) => unreachable!("clap requires one source"),
        }
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 10)]
    topics: usize,
    /// Defaults to 50 / topics.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 50)]
    fold_in_iters: usize,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
}

impl ModelArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lda: LdaConfig {
                num_topics: self.topics,
                alpha: self.alpha.unwrap_or(50.0 / self.topics as f64),
                beta: self.beta,
                iterations: self.iters,
                seed,
            },
            fold_in_iterations: self.fold_in_iters,
            svm: SvmHyper { lambda: self.lambda, epochs: self.epochs },
        }
    }
}

/// Runs one invocation. Exit codes: 0 success, 1 usage error, 2 data error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(cli.command, err) {
        Ok(value) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("json"));
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn warn_all(err: &mut dyn Write, diagnostics: &[String]) {
    for d in diagnostics {
        let _ = writeln!(err, "warning: {d}");
    }
}

fn execute(command: Command, err: &mut dyn Write) -> Result<Value> {
    match command {
        Command::IngestReports { reports, out } => {
            let rs = ingest_reports(&reports)?;
            if let Some(out) = &out {
                write_jsonl(out, &rs)?;
            }
            let mut labels = std::collections::BTreeMap::new();
            for l in rs.iter().filter_map(|r| r.label.as_deref()) {
                *labels.entry(l).or_insert(0usize) += 1;
            }
            Ok(json!({ "reports": rs.len(), "labels": labels }))
        }
        Command::IngestCommits { source, out } => {
            let cs = source.load()?;
            if let Some(out) = &out {
                write_jsonl(out, &cs)?;
            }
            let with_diff = cs.iter().filter(|c| !c.diff_text.is_empty()).count();
            Ok(json!({ "commits": cs.len(), "with_diff": with_diff }))
        }
        Command::Train { reports, model, seed, out } => {
            let rs = ingest_reports(&reports)?;
            let bundle = train_bundle(&rs, model.config(seed), seed)?;
            save_bundle(&bundle, &out)?;
            Ok(json!({
                "bundle": out,
                "reports": rs.len(),
                "vocabulary": bundle.topic_model.vocabulary.len(),
                "topics": bundle.topic_model.num_topics,
                "categories": bundle.classifier.as_ref().map(|c| c.labels.clone()).unwrap_or_default(),
            }))
        }
        Command::Topics { command: TopicsCommand::Show { bundle, words } } => {
            let b = load_bundle(&bundle)?;
            let mut topics = Vec::new();
            for t in 0..b.topic_model.num_topics {
                let top = top_words(&b.topic_model, t, words).expect("topic in range");
                let list: Vec<&str> = top.iter().map(|(w, _)| w.as_str()).collect();
                let _ = writeln!(err, "Topic {t}: {}", list.join(", "));
                let entries: Vec<Value> = top.iter().map(|(w, p)| json!({ "word": w, "p": p })).collect();
                topics.push(json!({ "topic": t, "words": entries }));
            }
            Ok(Value::Array(topics))
        }
        Command::Link { bundle, source, patterns, out } => {
            let mut b = load_bundle(&bundle)?;
            let commits = source.load()?;
            let patterns = match &patterns {
                Some(p) => load_patterns(p)?,
                None => default_patterns(),
            };
            let links = extract_links(&commits, &patterns)?;
            if let Some(out) = &out {
                write_jsonl(out, &links)?;
            }
            let extracted = links.len();
            let diagnostics = b.set_links(links, &commits);
            warn_all(err, &diagnostics);
            save_bundle(&b, &bundle)?;
            Ok(json!({
                "extracted": extracted,
                "linked": b.links.len(),
                "dangling": diagnostics.len(),
                "commits": b.commits.len(),
            }))
        }
        Command::Summarize { bundle, out_dir } => {
            let mut b = load_bundle(&bundle)?;
            let diagnostics = b.summarize();
            warn_all(err, &diagnostics);
            if let Some(dir) = &out_dir {
                write_templates(dir, &b.templates)?;
            }
            save_bundle(&b, &bundle)?;
            let top: Vec<Value> =
                b.templates.iter().map(|t| json!({ "support": t.support, "rendered": t.render() })).collect();
            Ok(json!({ "templates": top }))
        }
        Command::Evaluate { reports, bundle, model, folds, seed } => {
            let (rs, config) = match (&reports, &bundle) {
                (Some(p), _) => (ingest_reports(p)?, model.config(seed)),
                (None, Some(p)) => {
                    let b = load_bundle(p)?;
                    (b.reports, b.config)
                }
                (None, None) => unreachable!("clap requires one input"),
            };
            let cfg = CvConfig {
                lda: config.lda,
                fold_in_iterations: config.fold_in_iterations,
                svm: config.svm,
                folds,
                seed,
            };
            let report = k_fold_cv(&rs, &cfg)?;
            let _ = writeln!(
                err,
                "macro precision {:.3}, macro recall {:.3} over {folds} folds",
                report.macro_precision, report.macro_recall
            );
            Ok(serde_json::to_value(report).expect("json"))
        }
        Command::Recommend { bundle, report, top_k, neighbors, seed, no_gate } => {
            let b = load_bundle(&bundle)?;
            let r: fixhint_core::corpus::BugReport = read_json(&report)?;
            let opts =
                RecommendOptions { k: top_k, n_neighbors: neighbors, seed: seed.unwrap_or(b.rng_seed), gate: !no_gate };
            let rec = recommend_top_k(&b, &r, &opts)?;
            warn_all(err, &rec.diagnostics);
            Ok(serde_json::to_value(rec).expect("json"))
        }
    }
}

fn write_templates(dir: &Path, templates: &[fixhint_core::patchlang::FixTemplate]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(crate::error::Error::io(dir))?;
    write_jsonl(&dir.join("templates.jsonl"), templates)?;
    for (i, t) in templates.iter().enumerate() {
        write_text(&dir.join(format!("template-{i:03}.cocci")), &(t.render() + "\n"))?;
    }
    Ok(())
}
