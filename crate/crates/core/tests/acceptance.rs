//! Acceptance criteria. Each check prints one `PASS`/`FAIL` line; the
//! process exits non-zero if any check fails.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surveval::acceptance::{
    build_dataset, permutation_importance, plant_ratio, plant_short_prompts_accepted, stratified_split, train,
    Dataset, Label, LabeledExample, SplitConfig, TrainConfig, DEFAULT_REPEATS,
};
use surveval::corpus::{filter_corpus, DropReason, FilterConfig};
use surveval::drift::{psi, run_drift, smooth, DriftConfig, Status, Thresholds};
use surveval::features::{extract_corpus_features, extract_features, FEATURE_NAMES};
use surveval::safeguards::{gate_prompt, GateConfig, GateDecision, RateLimiter, RejectReason};
use surveval::survey::Survey;
use surveval::synth::{generate, CountDist, GenSpec};
use surveval::textstats::{distinct_n, flesch_kincaid_grade, ngram_distribution, NGramOrder};

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn all(parts: Vec<Outcome>) -> Outcome {
    let ok = parts.iter().all(|p| p.ok);
    let detail = parts
        .iter()
        .map(|p| if p.ok { p.detail.clone() } else { format!("[failed] {}", p.detail) })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { ok, detail }
}

fn within(elapsed: Duration, limit: Duration) -> Outcome {
    check(elapsed < limit, format!("runtime {:.2}s < {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn c1_psi_math() -> Outcome {
    let t = Instant::now();
    let v = psi(&[0.5, 0.5], &[0.8, 0.2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = smooth(&[3, 5, 0, 9], 1e-4);
    let mut max_asym: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(2..12);
        let a: Vec<u64> = (0..k).map(|_| rng.random_range(0..50)).collect();
        let b: Vec<u64> = (0..k).map(|_| rng.random_range(0..50)).collect();
        let (sa, sb) = (smooth(&a, 1e-4), smooth(&b, 1e-4));
        max_asym = max_asym.max((psi(&sa, &sb).unwrap() - psi(&sb, &sa).unwrap()).abs());
    }
    all(vec![
        check((v - 0.4159).abs() <= 1e-3, format!("psi([.5,.5],[.8,.2]) = {v:.4} (0.4159 +/- 1e-3)")),
        check(psi(&p, &p).unwrap() == 0.0, "psi(p,p) = 0 exactly"),
        check(max_asym <= 1e-12, format!("max asymmetry over 100 pairs {max_asym:.1e} <= 1e-12")),
        within(t.elapsed(), Duration::from_secs(1)),
    ])
}

fn surveys_with_counts(prefix: &str, counts: &[(usize, usize)]) -> Vec<surveval::corpus::CorpusRecord> {
    let mut out = Vec::new();
    for &(n_questions, copies) in counts {
        for _ in 0..copies {
            let i = out.len();
            let mut r = common::record(i, &format!("{prefix}{i}"), common::open_survey(n_questions, 4));
            r.id = format!("{prefix}{i}");
            out.push(r);
        }
    }
    out
}

fn c2_threshold_semantics() -> Outcome {
    let t = Thresholds::default();
    let statuses = [t.status(0.05), t.status(0.15), t.status(0.25)];
    // 50:50 vs 70:30 over two question counts gives PSI ~0.17 (moderate)
    let base = extract_corpus_features(&surveys_with_counts("a", &[(5, 50), (6, 50)]));
    let cand = extract_corpus_features(&surveys_with_counts("b", &[(5, 70), (6, 30)]));
    let report = run_drift("A", &base, "B", &cand, &DriftConfig::default()).unwrap();
    let n_moderate = report.rows.iter().filter(|r| r.status == Status::Moderate).count();
    let n_fail = report.rows.iter().filter(|r| r.status == Status::Fail).count();
    all(vec![
        check(
            statuses == [Status::Pass, Status::Moderate, Status::Fail],
            format!("0.05/0.15/0.25 -> {}/{}/{}", statuses[0], statuses[1], statuses[2]),
        ),
        check(n_moderate > 0, format!("{n_moderate} moderate rows in fixture")),
        check(
            report.n_fail == n_fail && report.n_pass == report.rows.len() - n_fail,
            format!("totals FAIL {} / PASS {} fold moderate into PASS", report.n_fail, report.n_pass),
        ),
    ])
}

fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut coef = 1.0;
    for k in 0..=n {
        if k > 0 {
            coef *= (n - k + 1) as f64 / k as f64;
        }
        out.push(coef * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32));
    }
    out
}

fn shift_spec(n: usize, seed: u64, variant: &str, p_ms: f64) -> GenSpec {
    let mut s = GenSpec::example(n, seed, variant);
    s.question_count = CountDist::Fixed(8);
    s.type_mixture = BTreeMap::from([
        ("multiple_selection".to_string(), p_ms),
        ("open_ended".to_string(), 1.0 - p_ms),
    ]);
    s
}

fn c3_drift_detection() -> Outcome {
    let t = Instant::now();
    // With 8 questions each multiple-selection with probability p, the
    // per-survey count is Binomial(8, p).
    let base = extract_corpus_features(&generate(&shift_spec(1000, 11, "base", 0.25)).unwrap());
    let cand = extract_corpus_features(&generate(&shift_spec(1000, 12, "cand", 0.6)).unwrap());
    let cfg = DriftConfig::default();
    let report = run_drift("V1", &base, "V2", &cand, &cfg).unwrap();
    let self_a = run_drift("V1", &base, "V1", &base, &cfg).unwrap();
    let self_b = run_drift("V2", &cand, "V2", &cand, &cfg).unwrap();
    let elapsed = t.elapsed();

    let true_psi = psi(&binomial_pmf(8, 0.25), &binomial_pmf(8, 0.6)).unwrap();
    let ms = report.row("n_multiple_selection_questions").unwrap();
    let closed = report.row("n_closed_ended_questions").unwrap();
    let targets = ["n_multiple_selection_questions", "n_closed_ended_questions"];
    let others_pass = report
        .rows
        .iter()
        .filter(|r| !targets.contains(&r.feature.as_str()) && r.status != Status::Fail)
        .count();
    all(vec![
        check(true_psi >= 0.2, format!("generating-distribution PSI {true_psi:.3} >= 0.2")),
        check(ms.status == Status::Fail, format!("n_multiple_selection_questions PSI {:.3} FAIL", ms.psi)),
        check(closed.status == Status::Fail, format!("n_closed_ended_questions PSI {:.3} FAIL", closed.psi)),
        check(others_pass >= 15, format!("{others_pass}/19 other rows PASS (>= 15)")),
        check(self_a.n_fail == 0 && self_b.n_fail == 0, "self-comparisons have 0 FAIL"),
        within(elapsed, Duration::from_secs(10)),
    ])
}

fn c4_filtering() -> Outcome {
    let t = Instant::now();
    let (kept, report) = filter_corpus(&common::crafted_filter_corpus(), &FilterConfig::default());
    let boundary = common::boundary_corpus();
    let (kept_b, _) = filter_corpus(&boundary, &FilterConfig::default());
    let per_rule = [
        report.dropped[&DropReason::Duplicate],
        report.dropped[&DropReason::Pii],
        report.dropped[&DropReason::Language],
        report.prompt_length_breakdown.too_short,
        report.prompt_length_breakdown.too_long,
        report.dropped[&DropReason::QuestionCount],
    ];
    all(vec![
        check(report.kept_count == 1 && kept.len() == 1 && kept[0].id == "r0", format!("kept {}", report.kept_count)),
        check(per_rule == [1; 6], format!("per-rule drops {per_rule:?}")),
        check(report.dropped_total() == 6, format!("dropped total {}", report.dropped_total())),
        check(
            report.kept_count + report.dropped_total() == report.input_count,
            format!("{} + {} = {}", report.kept_count, report.dropped_total(), report.input_count),
        ),
        check(kept_b.len() == boundary.len(), "200/500-char and 5/12-question boundary records kept"),
        within(t.elapsed(), Duration::from_secs(1)),
    ])
}

fn c5_readability() -> Outcome {
    let text = "The cat sat on the mat.";
    let g = flesch_kincaid_grade(text).unwrap();
    let g2 = flesch_kincaid_grade(&format!("{text} {text}")).unwrap();
    all(vec![
        check((g - (-1.45)).abs() <= 0.01, format!("grade {g:.4} (-1.45 +/- 0.01)")),
        check((g - g2).abs() <= 1e-9, format!("duplication delta {:.1e}", (g - g2).abs())),
    ])
}

fn c6_distinct_n() -> Outcome {
    let d1 = distinct_n(&ngram_distribution(&["a b a b"], NGramOrder::Unigram)).unwrap();
    let d2 = distinct_n(&ngram_distribution(&["a b a b"], NGramOrder::Bigram)).unwrap();
    check(d1 == 0.5 && d2 == 2.0 / 3.0, format!("distinct-1 {d1}, distinct-2 {d2}"))
}

fn c7_partition() -> Outcome {
    let mut spec = GenSpec::example(1000, 99, "mix");
    spec.question_count = CountDist::Uniform { lo: 1, hi: 15 };
    spec.type_mixture = BTreeMap::from([
        ("open_ended".to_string(), 0.2),
        ("single_choice".to_string(), 0.2),
        ("multiple_selection".to_string(), 0.2),
        ("star_rating".to_string(), 0.1),
        ("nps".to_string(), 0.1),
        ("contact_info".to_string(), 0.1),
        ("other:matrix".to_string(), 0.1),
    ]);
    let records = generate(&spec).unwrap();
    let mut partition_failures = 0;
    let mut perm_failures = 0;
    for r in &records {
        let f = extract_features(&r.survey);
        let c = r.survey.type_counts();
        let sum = f.n_open_ended_questions
            + f.n_single_choice_questions
            + f.n_multiple_selection_questions
            + f.n_contact_info_questions
            + f.n_nps_questions
            + f.n_unsupported_questions
            + c.star_rating;
        if sum != f.n_generated_questions || c.total() != f.n_generated_questions {
            partition_failures += 1;
        }
        let base = f.values();
        let mut rev: Survey = r.survey.clone();
        rev.questions.reverse();
        let mut rot = r.survey.clone();
        let half = rot.questions.len() / 2;
        rot.questions.rotate_left(half);
        for s in [rev, rot] {
            let v = extract_features(&s).values();
            if base.iter().zip(&v).any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0)) {
                perm_failures += 1;
            }
        }
    }
    all(vec![
        check(partition_failures == 0, format!("partition holds on {} surveys", records.len())),
        check(perm_failures == 0, format!("{perm_failures} permutation mismatches over {} features", FEATURE_NAMES.len())),
    ])
}

fn separable_fixture() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut examples = Vec::new();
    while examples.len() < 200 {
        let (a, b): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let margin = a + 2.0 * b;
        if margin.abs() < 0.3 {
            continue;
        }
        let y = if margin > 0.0 { Label::Accept } else { Label::NotAccept };
        examples.push(LabeledExample { id: format!("p{}", examples.len()), x: vec![a, b], y });
    }
    Dataset { feature_names: vec!["a".into(), "b".into()], examples }
}

fn c8_acceptance_pipeline() -> Outcome {
    let t = Instant::now();
    let mut spec = GenSpec::example(1000, 3, "acc");
    spec.prompt_length = CountDist::Uniform { lo: 50, hi: 900 };
    let records = generate(&spec).unwrap();

    // 57:43 not-accept to accept
    let ds = build_dataset(&records, &plant_ratio(&records, 0.43, 8)).unwrap();
    let counts = ds.class_counts();
    let (tr, te) = stratified_split(&ds, SplitConfig { train_fraction: 0.8, seed: 4 }).unwrap();
    let split_ok = Label::ALL.iter().all(|l| {
        let want = 0.8 * counts[l] as f64;
        (tr.class_counts()[l] as f64 - want).abs() <= 1.0
    }) && tr.len() + te.len() == ds.len();

    let sep = separable_fixture();
    let model = train(&sep, &TrainConfig::default()).unwrap();
    let acc = surveval::acceptance::evaluate(&model, &sep).unwrap().accuracy;

    let planted = build_dataset(&records, &plant_short_prompts_accepted(&records, 0.43)).unwrap();
    let (ptr, pte) = stratified_split(&planted, SplitConfig { train_fraction: 0.8, seed: 4 }).unwrap();
    let pmodel = train(&ptr, &TrainConfig::default()).unwrap();
    let ranking = permutation_importance(&pmodel, &pte, 4, DEFAULT_REPEATS).unwrap();
    let rank = ranking.iter().position(|r| r.feature == "prompt_char_length").unwrap() + 1;

    all(vec![
        check(
            counts[&Label::NotAccept] == 570 && counts[&Label::Accept] == 430,
            format!("dataset {}:{}", counts[&Label::NotAccept], counts[&Label::Accept]),
        ),
        check(
            split_ok,
            format!(
                "train {}:{} test {}:{}",
                tr.class_counts()[&Label::NotAccept],
                tr.class_counts()[&Label::Accept],
                te.class_counts()[&Label::NotAccept],
                te.class_counts()[&Label::Accept]
            ),
        ),
        check(acc >= 0.99, format!("separable train accuracy {acc:.3} >= 0.99")),
        check(rank <= 3, format!("prompt_char_length importance rank {rank} <= 3")),
        within(t.elapsed(), Duration::from_secs(30)),
    ])
}

fn fixture_lines(name: &str) -> Vec<String> {
    std::fs::read_to_string(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR")))
        .unwrap()
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn c9_safeguards() -> Outcome {
    const LIMIT: usize = 10;
    const WINDOW: i64 = 3600;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut times: Vec<(usize, i64)> =
        (0..10_000).map(|_| (rng.random_range(0..5), rng.random_range(0..200_000))).collect();
    times.sort_by_key(|&(_, t)| t);
    let mut rl = RateLimiter::new(LIMIT, WINDOW).unwrap();
    let mut allowed: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
    for &(user, t) in &times {
        if rl.check_rate(&format!("u{user}"), t).unwrap().allowed {
            allowed.entry(user).or_default().push(t);
        }
    }
    // any window [s, s+W) holding N+1 allows would contain some allow i and allow i+N
    let violations: usize = allowed.values().map(|ts| ts.windows(LIMIT + 1).filter(|w| w[LIMIT] - w[0] < WINDOW).count()).sum();

    let cfg = GateConfig::with_default_rules(500).unwrap();
    let example = gate_prompt("Create a customer satisfaction survey for an e-commerce platform", &cfg);
    let leaks = fixture_lines("redteam_leak.txt");
    let missed: Vec<&String> = leaks
        .iter()
        .filter(|p| !matches!(gate_prompt(p, &cfg), GateDecision::Reject(RejectReason::LeakAttempt { .. })))
        .collect();
    all(vec![
        check(violations == 0, format!("10000 requests, {violations} windows over {LIMIT} allows")),
        check(example.is_allowed(), "example prompt allowed"),
        check(missed.is_empty(), format!("{}/{} leak fixtures rejected as leak_attempt", leaks.len() - missed.len(), leaks.len())),
    ])
}

fn c10_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_surveval");
    let fixtures = format!("{}/fixtures", env!("CARGO_MANIFEST_DIR"));
    let pipeline = |dir: &Path| -> Vec<Vec<u8>> {
        let f = |name: &str| dir.join(name).to_str().unwrap().to_string();
        let steps: Vec<Vec<String>> = vec![
            vec!["synth".into(), "--spec".into(), format!("{fixtures}/synth_base.json"), "--out".into(), f("base.jsonl")],
            vec!["synth".into(), "--spec".into(), format!("{fixtures}/synth_shifted.json"), "--out".into(), f("shifted.jsonl")],
            vec!["extract".into(), f("base.jsonl"), "--out".into(), f("features.csv"), "--pooled".into(), f("pooled.json")],
            vec!["drift".into(), f("base.jsonl"), f("shifted.jsonl"), "--out".into(), f("report.json")],
        ];
        for s in steps {
            Command::new(bin).arg("--quiet").args(&s).output().unwrap();
        }
        ["base.jsonl", "shifted.jsonl", "features.csv", "pooled.json", "report.json"]
            .iter()
            .map(|n| std::fs::read(dir.join(n)).unwrap_or_default())
            .collect()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (pipeline(a.path()), pipeline(b.path()));
    let nonempty = ra.iter().all(|x| !x.is_empty());
    check(nonempty && ra == rb, format!("{} artifacts byte-identical across two runs", ra.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("C1 psi math", c1_psi_math),
        ("C2 threshold semantics", c2_threshold_semantics),
        ("C3 end-to-end drift", c3_drift_detection),
        ("C4 filtering pipeline", c4_filtering),
        ("C5 readability", c5_readability),
        ("C6 distinct-n", c6_distinct_n),
        ("C7 feature partition", c7_partition),
        ("C8 acceptance pipeline", c8_acceptance_pipeline),
        ("C9 safeguards", c9_safeguards),
        ("C10 determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        println!("{} {name}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        if !o.ok {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
