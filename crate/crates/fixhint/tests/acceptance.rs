//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fixhint::cli::run;
use fixhint::io::{ingest_gitlog, ingest_reports};
use fixhint::linker::{default_patterns, extract_links};
use fixhint::store::{load_bundle, save_bundle};
use fixhint_core::bundle::{train_bundle, TrainConfig};
use fixhint_core::classify::{hinge_objective, hinge_subgradient, k_fold_cv, CvConfig, SvmHyper};
use fixhint_core::corpus::{BugReport, Commit};
use fixhint_core::patchlang::{
    anti_unify, cluster_and_rank, lex, matches, parse_unified_diff, slice_commit, ActionKind, ActionSource, FixAction,
    Hunk, MetaSort, PatternElem,
};
use fixhint_core::porter_stem;
use fixhint_core::rng::Rng;
use fixhint_core::textprep::TokenSeq;
use fixhint_core::topics::{GibbsSampler, LdaConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rows_stochastic(rows: &[Vec<f64>]) -> bool {
    rows.iter().all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= 1e-9)
}

fn lda_separation() -> Outcome {
    const A: [&str; 20] = [
        "null", "pointer", "deref", "oops", "probe", "driver", "crash", "private", "alloc", "check", "return",
        "memory", "struct", "field", "init", "module", "load", "fail", "error", "code",
    ];
    const B: [&str; 20] = [
        "page", "vmalloc", "mapping", "address", "fault", "table", "mmap", "virtual", "frame", "tlb", "flush", "huge",
        "swap", "pfn", "zone", "kmap", "pte", "pmd", "shadow", "dirty",
    ];
    let mut rng = Rng::new(1);
    let docs: Vec<TokenSeq> = (0..40)
        .map(|d| {
            let vocab = if d < 20 { &A } else { &B };
            TokenSeq { tokens: (0..25).map(|_| vocab[rng.below(20)].to_string()).collect() }
        })
        .collect();
    let start = Instant::now();
    let cfg = LdaConfig { num_topics: 2, alpha: 0.5, beta: 0.01, iterations: 500, seed: 42 };
    let mut sampler = GibbsSampler::new(&docs, cfg).map_err(|e| e.to_string())?;
    for sweep in 1..=500 {
        sampler.sweep();
        if sweep % 50 == 0 {
            let m = sampler.model();
            check(rows_stochastic(&m.phi) && rows_stochastic(&m.thetas), format!("row sums off at sweep {sweep}"))?;
        }
    }
    let m = sampler.model();
    let elapsed = start.elapsed();
    let topic_a = m.dominant_topic(0);
    let agree = (0..40).filter(|&d| (m.dominant_topic(d) == topic_a) == (d < 20)).count();
    let agree = agree.max(40 - agree);
    check(agree >= 38, format!("{agree}/40 docs partitioned"))?;
    check(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!("{agree}/40 docs partitioned, {:.2}s", elapsed.as_secs_f64()))
}

fn classification() -> Outcome {
    let vocab = [
        ["null", "pointer", "dereference", "oops", "probe", "driver", "crash", "private"],
        ["paging", "vmalloc", "mapping", "address", "fault", "table", "mmap", "virtual"],
        ["ethernet", "carrier", "packet", "socket", "bonding", "interface", "transmit", "link"],
    ];
    let labels = ["null-deref", "paging-fault", "network"];
    let mut rng = Rng::new(2);
    let reports: Vec<BugReport> = (0..60)
        .map(|i| {
            let c = i % 3;
            let words: Vec<&str> = (0..6).map(|_| vocab[c][rng.below(8)]).collect();
            BugReport::new(format!("r{i}"), words.join(" ")).with_label(labels[c])
        })
        .collect();
    let cfg = CvConfig {
        lda: LdaConfig { num_topics: 3, alpha: 0.1, beta: 0.01, iterations: 200, seed: 42 },
        fold_in_iterations: 30,
        svm: SvmHyper::default(),
        folds: 10,
        seed: 42,
    };
    let start = Instant::now();
    let r = k_fold_cv(&reports, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let summary =
        format!("macro P {:.3}, macro R {:.3}, {:.2}s", r.macro_precision, r.macro_recall, elapsed.as_secs_f64());
    check(r.macro_precision >= 0.9 && r.macro_recall >= 0.9, summary.clone())?;
    check(elapsed < Duration::from_secs(60), summary.clone())?;
    Ok(summary)
}

fn gradient_check() -> Outcome {
    let mut rng = Rng::new(3);
    let h = 1e-6;
    let (mut points, mut worst) = (0, 0.0f64);
    while points < 100 {
        let dim = 3 + rng.below(6);
        let n = 4 + rng.below(10);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.next_f64() * 2.0 - 1.0).collect()).collect();
        let ys: Vec<f64> = (0..n).map(|_| if rng.below(2) == 0 { -1.0 } else { 1.0 }).collect();
        let w: Vec<f64> = (0..dim).map(|_| rng.next_f64() * 4.0 - 2.0).collect();
        let b = rng.next_f64() - 0.5;
        let lambda = 0.001 + rng.next_f64();
        let kink = xs.iter().zip(&ys).any(|(x, y)| {
            let margin = y * (x.iter().zip(&w).map(|(p, q)| p * q).sum::<f64>() + b);
            (1.0 - margin).abs() < 1e-3
        });
        if kink {
            continue;
        }
        let f = |w: &[f64], b: f64| hinge_objective(w, b, &xs, &ys, lambda);
        let (gw, gb) = hinge_subgradient(&w, b, &xs, &ys, lambda);
        for j in 0..dim {
            let (mut hi, mut lo) = (w.clone(), w.clone());
            hi[j] += h;
            lo[j] -= h;
            worst = worst.max((gw[j] - (f(&hi, b) - f(&lo, b)) / (2.0 * h)).abs());
        }
        worst = worst.max((gb - (f(&w, b + h) - f(&w, b - h)) / (2.0 * h)).abs());
        points += 1;
    }
    check(worst <= 1e-5, format!("max deviation {worst:.2e}"))?;
    Ok(format!("100 points, max deviation {worst:.2e}"))
}

fn linking() -> Outcome {
    let commits = ingest_gitlog(&fixture("links.gitlog")).map_err(|e| e.to_string())?;
    check(commits.len() == 12, format!("{} commits in fixture", commits.len()))?;
    let truth: BTreeSet<(String, String)> = fs::read_to_string(fixture("links_truth.jsonl"))
        .map_err(|e| e.to_string())?
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (v["bug_id"].as_str().unwrap().to_string(), v["commit_hash"].as_str().unwrap().to_string())
        })
        .collect();
    let got: BTreeSet<(String, String)> = extract_links(&commits, &default_patterns())
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|l| (l.bug_id, l.commit_hash))
        .collect();
    let hits = got.intersection(&truth).count() as f64;
    let precision = if got.is_empty() { 0.0 } else { hits / got.len() as f64 };
    let recall = hits / truth.len() as f64;
    let summary = format!("{} planted, precision {precision:.2}, recall {recall:.2}", truth.len());
    check(truth.len() == 5 && precision == 1.0 && recall == 1.0, summary.clone())?;
    Ok(summary)
}

fn summarization() -> Outcome {
    let commits = ingest_gitlog(&fixture("patches.gitlog")).map_err(|e| e.to_string())?;
    check(commits.len() == 8, format!("{} patches in fixture", commits.len()))?;
    let mut actions = Vec::new();
    for c in &commits {
        actions.extend(slice_commit(c).map_err(|e| e.to_string())?);
    }
    let templates = cluster_and_rank(&actions);
    let top = templates.first().ok_or("no templates")?;
    let rendered = top.render();
    check(top.support == 5, format!("top support {} ({rendered:?})", top.support))?;
    let lits: Vec<&str> = top
        .pattern
        .iter()
        .filter_map(|e| match e {
            PatternElem::Lit(t) => Some(t.text.as_str()),
            PatternElem::Meta(_) => None,
        })
        .collect();
    let has_seq = lits.windows(2).any(|w| w == ["-", "ENOMEM"]);
    check(
        lits.contains(&"return") && has_seq && rendered.contains("-ENOMEM"),
        format!("literals missing: {rendered:?}"),
    )?;
    check(top.metavars.iter().any(|m| m.sort == MetaSort::Identifier), "no identifier metavariable")?;

    let uses = |t: &fixhint_core::patchlang::FixTemplate, name: &str| {
        t.pattern.iter().any(|e| matches!(e, PatternElem::Lit(tok) if tok.text == name))
    };
    let kz: Vec<_> = templates.iter().filter(|t| uses(t, "kzalloc")).collect();
    check(kz.len() == 1, format!("{} kzalloc templates", kz.len()))?;
    check(!uses(kz[0], "kmalloc") && kz[0].support == 2, format!("kzalloc cluster: {:?}", kz[0].render()))?;
    let kz_commits: BTreeSet<&str> = kz[0].instances.iter().map(|s| s.commit.as_str()).collect();
    check(
        top.instances.iter().all(|s| !kz_commits.contains(s.commit.as_str())),
        "null-check cluster absorbed a kzalloc patch",
    )?;
    Ok(format!("top support 5/8: {rendered:?}; kzalloc cluster separate (support 2)"))
}

const IDENTS: [&str; 5] = ["a", "b", "buf", "dev", "ENOMEM"];
const CALLS: [&str; 3] = ["kmalloc", "kzalloc", "foo"];
const NUMS: [&str; 3] = ["0", "1", "42"];
const EXPRS: [&str; 8] = ["x", "n + 1", "sizeof(*p)", "f(a, b)", "-1", "(len)", "dev", "p[i]"];
const SKELETONS: [&str; 8] = [
    "I = C ( E , GFP_KERNEL ) ;",
    "if ( ! I ) return - I ;",
    "I -> I = E ;",
    "C ( E , E ) ;",
    "return E ;",
    "I [ N ] = I ;",
    "while ( I < N ) I ++ ;",
    "if ( C ( E ) == N ) goto I ;",
];

fn instantiate(skeleton: &str, rng: &mut Rng) -> String {
    skeleton
        .split(' ')
        .map(|p| match p {
            "I" => IDENTS[rng.below(IDENTS.len())],
            "C" => CALLS[rng.below(CALLS.len())],
            "N" => NUMS[rng.below(NUMS.len())],
            "E" => EXPRS[rng.below(EXPRS.len())],
            lit => lit,
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn soundness() -> Outcome {
    let mut rng = Rng::new(6);
    let (mut unified, mut violations) = (0, 0);
    for i in 0..1000 {
        let s1 = SKELETONS[rng.below(SKELETONS.len())];
        let s2 = if rng.below(5) == 0 { SKELETONS[rng.below(SKELETONS.len())] } else { s1 };
        let kind = if rng.below(2) == 0 { ActionKind::Add } else { ActionKind::Remove };
        let mk = |src: String, commit: &str| FixAction {
            kind,
            tokens: lex(&src),
            source: ActionSource { commit: commit.into(), file: "f.c".into(), line: i },
            layout: Vec::new(),
        };
        let a = mk(instantiate(s1, &mut rng), "aaaaaaa");
        let b = mk(instantiate(s2, &mut rng), "bbbbbbb");
        if let Some(t) = anti_unify(&a, &b) {
            unified += 1;
            if !(matches(&t, &a) && matches(&t, &b)) {
                violations += 1;
            }
        }
    }
    check(violations == 0 && unified > 0, format!("{violations} violations among {unified} unified pairs"))?;
    Ok(format!("1000 pairs, {unified} unified, 0 violations"))
}

fn stemmer() -> Outcome {
    let vector = include_str!("../../core/tests/fixtures/porter_vector.tsv");
    let pairs: Vec<(&str, &str)> = vector.lines().filter_map(|l| l.split_once('\t')).collect();
    let wrong: Vec<String> = pairs
        .iter()
        .filter(|(w, s)| porter_stem(w) != *s)
        .map(|(w, s)| format!("{w}: expected {s}, got {}", porter_stem(w)))
        .collect();
    check(pairs.len() == 100, format!("vector has {} words", pairs.len()))?;
    check(wrong.is_empty(), wrong.join("; "))?;
    check(porter_stem("checking") == "check" && porter_stem("checked") == "check", "checking/checked")?;
    Ok("100/100 agree".into())
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("fixhint").chain(args.iter().copied()), &mut out, &mut err);
    if code == 0 {
        Ok(out)
    } else {
        Err(format!("{args:?} exited {code}: {}", String::from_utf8_lossy(&err)))
    }
}

fn full_run(dir: &Path) -> Result<(Vec<u8>, Vec<u8>), String> {
    let bundle = dir.join("model.json").display().to_string();
    let reports = fixture("reports.jsonl").display().to_string();
    let log = fixture("history.gitlog").display().to_string();
    let report = fixture("new_report.json").display().to_string();
    cli(&[
        "train",
        "--reports",
        &reports,
        "--topics",
        "3",
        "--alpha",
        "0.1",
        "--iters",
        "500",
        "--seed",
        "42",
        "--out",
        &bundle,
    ])?;
    cli(&["link", "--bundle", &bundle, "--gitlog", &log])?;
    cli(&["summarize", "--bundle", &bundle])?;
    let rec = cli(&["recommend", "--bundle", &bundle, "--report", &report, "--top-k", "5"])?;
    Ok((fs::read(&bundle).map_err(|e| e.to_string())?, rec))
}

fn determinism() -> Outcome {
    let (d1, d2) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let (b1, r1) = full_run(d1.path())?;
    let (b2, r2) = full_run(d2.path())?;
    check(b1 == b2, "bundles differ")?;
    check(r1 == r2, "recommendations differ")?;
    let rec: serde_json::Value = serde_json::from_slice(&r1).map_err(|e| e.to_string())?;
    let hints = rec["hints"].as_array().map_or(0, Vec::len);
    check(hints > 0, "no hints recommended")?;
    Ok(format!("bundle {} bytes and recommendation ({hints} hints) identical", b1.len()))
}

/// Hunk bodies cut straight out of the diff text, without the parser.
fn raw_hunk_bodies(diff: &str) -> Vec<String> {
    let mut bodies = Vec::new();
    let mut current: Option<String> = None;
    for line in diff.lines() {
        if line.starts_with("@@ ") {
            bodies.extend(current.take());
            current = Some(String::new());
        } else if line.starts_with("diff --git ") {
            bodies.extend(current.take());
        } else if let Some(body) = current.as_mut() {
            body.push_str(line);
            body.push('\n');
        }
    }
    bodies.extend(current);
    bodies
}

fn round_trip() -> Outcome {
    let reports = ingest_reports(&fixture("reports.jsonl")).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        lda: LdaConfig { num_topics: 3, alpha: 0.1, beta: 0.01, iterations: 200, seed: 0 },
        ..Default::default()
    };
    let mut bundle = train_bundle(&reports, cfg, 42).map_err(|e| e.to_string())?;
    let history = ingest_gitlog(&fixture("history.gitlog")).map_err(|e| e.to_string())?;
    bundle.set_links(extract_links(&history, &default_patterns()).map_err(|e| e.to_string())?, &history);
    bundle.summarize();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("m.json");
    save_bundle(&bundle, &path).map_err(|e| e.to_string())?;
    check(load_bundle(&path).map_err(|e| e.to_string())? == bundle, "loaded bundle differs")?;

    let mut commits: Vec<Commit> = ingest_gitlog(&fixture("patches.gitlog")).map_err(|e| e.to_string())?;
    commits.extend(history);
    let mut hunks = 0;
    for c in &commits {
        let parsed: Vec<String> = parse_unified_diff(&c.diff_text)
            .map_err(|e| format!("{}: {e}", c.hash))?
            .iter()
            .flat_map(|f| f.hunks.iter().map(Hunk::body))
            .collect();
        check(parsed == raw_hunk_bodies(&c.diff_text), format!("hunk bodies differ in {}", c.hash))?;
        hunks += parsed.len();
    }
    Ok(format!("bundle equal after save/load; {hunks} hunk bodies byte-identical"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("LDA separation", lda_separation),
        ("classification CV", classification),
        ("SVM gradient check", gradient_check),
        ("bug linking", linking),
        ("summarization", summarization),
        ("generalization soundness", soundness),
        ("stemmer oracle", stemmer),
        ("end-to-end determinism", determinism),
        ("round-trips", round_trip),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
