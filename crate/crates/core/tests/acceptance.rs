//! Acceptance criteria, run sequentially so wall-time budgets are measured
//! without competing threads. Each criterion prints one PASS/FAIL line; the
//! binary exits nonzero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use adlens::embed::{
    ad_inputs, draw_terms, loss_and_grad, pair_loss, EmbeddingModel, EncoderKind, PerRelation, TrainConfig,
    WordVectors,
};
use adlens::graph::{AdGraph, AdNode, Edge, EdgeSets, NodeKind};
use adlens::infer::{evaluate, write_predictions, Gold, HoldoutRow, HoldoutSet, Prediction, Similarity};
use adlens::labels::{Issue, Stance};
use adlens::lexicon::{build_lexicon, IssueDoc, IssueDocCorpus};
use adlens::pipeline::{infer, train_model, weak_labels, CorpusBundle};
use adlens::report::{Report, RunManifest};
use adlens::stats::special::{chi2_sf, f_cdf, t_cdf};
use adlens::stats::{chi2_cdf, chi_square_test, granger_test_values, t_test, ContingencyTable, Df};
use adlens::synth::{generate, SynthSpec};
use adlens::textproc::{tokenize, TokenSeq};
use adlens::weaklabel::{classify_entity_name, derive_ad_stances, CueConfig, EntityStance};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Outcome of one criterion: pass flag plus the measured values.
struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("synthetic end-to-end", c1_synthetic_end_to_end),
        ("gradient correctness", c2_gradient_check),
        ("loss identities", c3_loss_identities),
        ("pmi oracle", c4_pmi_oracle),
        ("statistics oracles", c5_stats_oracles),
        ("granger calibration", c6_granger_calibration),
        ("weak-label parity", c7_weak_label_parity),
        ("determinism", c8_determinism),
        ("metric oracle", c9_metric_oracle),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {} ({name})", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run));
        let elapsed = started.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        failed += usize::from(!pass);
        println!("{} {label}: {detail} [{elapsed:.1}s]", if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

// ---------------------------------------------------------------- 1

fn synth_pipeline(spec: &SynthSpec, config: &TrainConfig) -> (adlens::synth::SynthCorpus, EmbeddingModel, Vec<Prediction>) {
    let s = generate(spec).expect("default spec is valid");
    let bundle = CorpusBundle::ingest(&s.ads_jsonl());
    let issues = IssueDocCorpus::from_jsonl(&s.issues_jsonl()).expect("generated issue docs parse");
    let lexicon = build_lexicon(&issues, 0.5).expect("lexicon builds");
    let labels = weak_labels(&bundle, &CueConfig::default());
    let vectors = WordVectors::new(spec.vector_dim, s.word_vectors.clone()).expect("vectors are consistent");
    let model = train_model(&bundle, &lexicon, &labels, &vectors, config).expect("training succeeds");
    let preds = infer(&bundle, &model, Similarity::Dot);
    (s, model, preds)
}

fn c1_synthetic_end_to_end() -> Outcome {
    let started = Instant::now();
    let spec = SynthSpec {
        explicit_entities: 4,
        implicit_entities: 36,
        ads_per_entity: 10,
        noise_rate: 0.2,
        seed: 42,
        ..SynthSpec::default()
    };
    assert_eq!(spec.issues.len(), 4);
    let config = TrainConfig {
        encoder_kind: EncoderKind::MeanPool,
        seed: 42,
        ..TrainConfig::default()
    };
    let (s, _, preds) = synth_pipeline(&spec, &config);
    let elapsed = started.elapsed();

    let by_id: BTreeMap<&str, &Prediction> = preds.iter().map(|p| (p.ad_id.as_str(), p)).collect();
    let (mut n, mut stance, mut stance_set, mut issue) = (0usize, 0usize, 0usize, 0usize);
    for g in s.gold.iter().filter(|g| !g.explicit) {
        let p = by_id[g.ad_id.as_str()];
        n += 1;
        stance += usize::from(p.stance == g.stance);
        stance_set += usize::from(g.stance_set().contains(&p.stance));
        issue += usize::from(p.issue == g.issue);
    }
    let stance_acc = stance as f64 / n as f64;
    let stance_set_acc = stance_set as f64 / n as f64;
    let issue_acc = issue as f64 / n as f64;
    let pass = stance_acc >= 0.85 && issue_acc >= 0.70 && elapsed < Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "{n} implicit-entity ads: stance accuracy {stance_acc:.3} (need >= 0.85; \
             any-gold-stance {stance_set_acc:.3}), issue accuracy {issue_acc:.3} (need >= 0.70), \
             pipeline {:.1}s (need < 300s)",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 2

/// 5 ads, 4 entities, 4 words plus the fixed 4 stance and 13 issue nodes.
fn gradient_fixture() -> (AdGraph, WordVectors) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let vocab = ["mask", "vote", "jobs", "tax", "wall", "court", "border"];
    let wv = WordVectors::new(
        5,
        vocab
            .iter()
            .map(|w| (w.to_string(), (0..5).map(|_| rng.random_range(-0.6..0.6)).collect()))
            .collect(),
    )
    .unwrap();
    let texts = [
        "mask vote now",
        "jobs tax border",
        "wall court vote",
        "tax tax jobs",
        "mask court jobs wall border",
    ];
    let ads = texts
        .iter()
        .enumerate()
        .map(|(i, t)| AdNode {
            id: format!("a{i}"),
            tokens: tokenize(t),
        })
        .collect();
    let e = |source, target| Edge { source, target };
    let edges = EdgeSets {
        entity_stance: vec![
            e(0, Stance::ProBiden.index()),
            e(1, Stance::AntiBiden.index()),
            e(2, Stance::ProTrump.index()),
            e(3, Stance::AntiTrump.index()),
        ],
        ad_stance: vec![
            e(0, Stance::ProBiden.index()),
            e(0, Stance::AntiTrump.index()),
            e(2, Stance::ProTrump.index()),
            e(3, Stance::AntiBiden.index()),
        ],
        ad_word: vec![e(0, 0), e(1, 1), e(1, 2), e(2, 3), e(3, 2), e(4, 0), e(4, 3)],
        word_issue: vec![
            e(0, Issue::Covid.index()),
            e(1, Issue::Economy.index()),
            e(2, Issue::Economy.index()),
            e(3, Issue::Immigration.index()),
        ],
    };
    let g = AdGraph {
        ads,
        entities: (0..4).map(|i| format!("E{i}")).collect(),
        words: vec!["mask".into(), "jobs".into(), "tax".into(), "wall".into()],
        edges,
    };
    g.validate().unwrap();
    (g, wv)
}

fn c2_gradient_check() -> Outcome {
    let started = Instant::now();
    let (g, wv) = gradient_fixture();
    let nodes: usize = [NodeKind::Entity, NodeKind::Stance, NodeKind::Issue, NodeKind::LexWord, NodeKind::Ad]
        .iter()
        .map(|k| g.population(*k))
        .sum();
    assert_eq!(nodes, 30, "fixture size");
    let lambda = PerRelation {
        entity_stance: 1.0,
        ad_stance: 0.8,
        ad_word: 1.2,
        word_issue: 0.6,
    };
    let mut worst = 0.0f64;
    let mut checked = 0;
    for kind in [EncoderKind::MeanPool, EncoderKind::Recurrent] {
        let cfg = TrainConfig {
            dim: 6,
            encoder_hidden: 3,
            encoder_kind: kind,
            ..TrainConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut m = EmbeddingModel::init(&g, &wv, &cfg, &mut rng);
        for p in m.params_mut() {
            *p = rng.random_range(-0.8..0.8);
        }
        let ads = ad_inputs(&m, &g);
        let terms = draw_terms(&g.adjacency(), &g.edges, &cfg.negatives, &mut rng);
        let mut grad = vec![0.0; m.params().len()];
        loss_and_grad(&m, &ads, &terms, &lambda, Some(&mut grad));

        // 20 parameters from each of the five groups.
        let dim = m.dim();
        let mut groups = Vec::new();
        for k in [NodeKind::Entity, NodeKind::Stance, NodeKind::Issue, NodeKind::LexWord] {
            let off = m.kind_offset(k).expect("free-embedding kind");
            groups.push(off..off + g.population(k) * dim);
        }
        groups.push(m.encoder_offset()..m.params().len());
        let h = 1e-5;
        for range in groups {
            for _ in 0..20 {
                let i = rng.random_range(range.clone());
                let orig = m.params()[i];
                m.params_mut()[i] = orig + h;
                let up = loss_and_grad(&m, &ads, &terms, &lambda, None);
                m.params_mut()[i] = orig - h;
                let down = loss_and_grad(&m, &ads, &terms, &lambda, None);
                m.params_mut()[i] = orig;
                let fd = (up - down) / (2.0 * h);
                worst = worst.max(rel_err(grad[i], fd, 1e-6));
                checked += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    outcome(
        worst < 1e-4 && elapsed < Duration::from_secs(30),
        format!("{checked} sampled parameters (100 per encoder kind), max relative error {worst:.2e} (need < 1e-4)"),
    )
}

// ---------------------------------------------------------------- 3

fn c3_loss_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_tie = 0.0f64;
    for _ in 0..1000 {
        let d = rng.random_range(1..12);
        let o: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let m: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        worst_tie = worst_tie.max((pair_loss(&o, &m, &m) - std::f64::consts::LN_2).abs());
    }
    // Reference values (50-digit arithmetic, rounded to f64) of ln(1 + e^-20) and 20 + ln(1 + e^-20).
    const NEG_LOG_SIG_POS20: f64 = 2.061_153_620_314_381e-9;
    const NEG_LOG_SIG_NEG20: f64 = 20.000_000_002_061_154;
    // o . mp - o . mn = +-20.
    let plus = pair_loss(&[1.0], &[20.0], &[0.0]);
    let minus = pair_loss(&[1.0], &[0.0], &[20.0]);
    let e_plus = rel_err(plus, NEG_LOG_SIG_POS20, 0.0);
    let e_minus = rel_err(minus, NEG_LOG_SIG_NEG20, 0.0);
    outcome(
        worst_tie <= 1e-12 && e_plus < 1e-9 && e_minus < 1e-9,
        format!("tie deviation {worst_tie:.1e}, -log sig(20) rel err {e_plus:.1e}, -log sig(-20) rel err {e_minus:.1e}"),
    )
}

// ---------------------------------------------------------------- 4

/// Recount from scratch: per-issue and global token tallies, argmax with
/// exact rational comparison, ties to the alphabetically first issue name.
fn brute_force_lexicon(docs: &[(Issue, Vec<String>)], threshold: f64) -> BTreeMap<String, (Issue, f64)> {
    let total = docs.iter().map(|(_, t)| t.len()).sum::<usize>();
    let mut issues: Vec<Issue> = docs.iter().filter(|(_, t)| !t.is_empty()).map(|(i, _)| *i).collect();
    issues.sort_by_key(|i| i.as_str());
    issues.dedup();
    let vocab: BTreeSet<&String> = docs.iter().flat_map(|(_, t)| t).collect();
    let mut out = BTreeMap::new();
    for w in vocab {
        let global = docs.iter().flat_map(|(_, t)| t).filter(|t| *t == w).count();
        let mut best: Option<(Issue, usize, usize)> = None;
        for &i in &issues {
            let size = docs.iter().filter(|(d, _)| *d == i).map(|(_, t)| t.len()).sum::<usize>();
            let count = docs.iter().filter(|(d, _)| *d == i).flat_map(|(_, t)| t).filter(|t| *t == w).count();
            // count/size > best_count/best_size
            if best.is_none_or(|(_, bc, bs)| count * bs > bc * size) {
                best = Some((i, count, size));
            }
        }
        let (issue, count, size) = best.expect("word occurs somewhere");
        let score = if count * total == global * size {
            0.0
        } else {
            ((count as f64 / size as f64) / (global as f64 / total as f64)).ln()
        };
        if count > 0 && score >= threshold {
            out.insert(w.clone(), (issue, score));
        }
    }
    out
}

fn c4_pmi_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let words: Vec<String> = ["vaccine", "mask", "tax", "jobs", "wall", "court", "guns", "school", "vote", "care"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut mismatches = 0;
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let n_issues = rng.random_range(1..=5);
        let issues: Vec<Issue> = Issue::ALL.choose_multiple(&mut rng, n_issues).copied().collect();
        let vocab = &words[..rng.random_range(2..=words.len())];
        let budget = rng.random_range(1..=50);
        let mut docs: Vec<(Issue, Vec<String>)> = Vec::new();
        let mut used = 0;
        while used < budget {
            let len = rng.random_range(0..=(budget - used).min(8));
            let toks: Vec<String> = (0..len).map(|_| vocab.choose(&mut rng).unwrap().clone()).collect();
            used += len.max(1);
            docs.push((*issues.choose(&mut rng).unwrap(), toks));
        }
        if docs.iter().all(|(_, t)| t.is_empty()) {
            docs[0].1.push(vocab[0].clone());
        }
        let threshold = [0.0, 0.5, rng.random_range(-0.5..2.0)][trial % 3];
        let corpus = IssueDocCorpus {
            docs: docs
                .iter()
                .map(|(i, t)| IssueDoc {
                    issue: *i,
                    tokens: TokenSeq::from_tokens(t.iter().cloned()),
                })
                .collect(),
        };
        let got = build_lexicon(&corpus, threshold).expect("nonempty corpus");
        let want = brute_force_lexicon(&docs, threshold);
        let same_keys = got.entries.keys().eq(want.keys());
        let mut ok = same_keys;
        if same_keys {
            for (w, e) in &got.entries {
                let (issue, pmi) = want[w];
                worst = worst.max((e.pmi - pmi).abs());
                ok &= e.issue == issue && (e.pmi - pmi).abs() <= 1e-12;
            }
        }
        mismatches += usize::from(!ok);
    }
    outcome(
        mismatches == 0,
        format!("1000 random corpora, {mismatches} mismatching lexicons, max PMI deviation {worst:.1e}"),
    )
}

// ---------------------------------------------------------------- 5

/// P(|Z| > z) by composite Simpson integration of the normal density.
fn normal_two_tail(z: f64) -> f64 {
    let (a, b, n) = (z, z + 40.0, 200_000);
    let h = (b - a) / n as f64;
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(a) + pdf(b);
    for k in 1..n {
        s += pdf(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * s * h / 3.0
}

/// Two-sided p of Student's t for even `nu`, from the finite-series CDF.
fn t_two_sided_even(t: f64, nu: u32) -> f64 {
    let u = t.abs() / (nu as f64 + t * t).sqrt();
    let mut term = 1.0;
    let mut sum = 0.0;
    for j in 0..nu / 2 {
        if j > 0 {
            term *= (2 * j - 1) as f64 / (2 * j) as f64;
        }
        sum += term * (1.0 - u * u).powi(j as i32);
    }
    1.0 - u * sum
}

fn c5_stats_oracles() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut check = |ok: bool, note: String| {
        pass &= ok;
        notes.push(note);
    };

    let table = ContingencyTable::from_counts(vec![vec![10.0, 20.0], vec![30.0, 40.0]]).unwrap();
    let chi = chi_square_test(&table).unwrap();
    // Hand value: 4 (1/12 + 1/18 + 1/28 + 1/42) = 50/63 = 0.793651 to six places.
    let hand: f64 = 50.0 / 63.0;
    let p_oracle = normal_two_tail(hand.sqrt());
    check(
        (chi.statistic - hand).abs() < 1e-9 && (chi.p_value - p_oracle).abs() < 1e-6 && chi.df == Df::One(1.0),
        format!("chi2 {:.9} p {:.6} (oracle {p_oracle:.6})", chi.statistic, chi.p_value),
    );
    check((chi2_sf(hand, 1.0).unwrap() - chi.p_value).abs() < 1e-15, "sf consistent".into());

    let c = chi2_cdf(3.841459, 1.0).unwrap();
    check((c - 0.95).abs() < 1e-6, format!("chi2_cdf(3.841459; 1) {c:.8}"));

    let mut worst_t = 0.0f64;
    let mut worst_f = 0.0f64;
    for nu in [1.0, 2.0, 3.5, 8.0, 30.0, 250.0] {
        for t in [0.0, 0.1, 0.7, 1.96, 3.0, 12.0] {
            worst_t = worst_t.max((t_cdf(-t, nu).unwrap() + t_cdf(t, nu).unwrap() - 1.0).abs());
        }
    }
    for (d1, d2) in [(1.0, 1.0), (2.0, 7.0), (5.0, 3.0), (12.0, 40.0)] {
        for x in [0.05, 0.5, 1.0, 2.5, 9.0] {
            worst_f = worst_f.max((f_cdf(x, d1, d2).unwrap() + f_cdf(1.0 / x, d2, d1).unwrap() - 1.0).abs());
        }
    }
    check(worst_t <= 1e-12 && worst_f <= 1e-12, format!("symmetry t {worst_t:.1e} f {worst_f:.1e}"));

    let w = t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
    let df = match w.df {
        Df::One(v) => v,
        Df::Two(..) => f64::NAN,
    };
    let p_hand = t_two_sided_even(-2.0, 8);
    check(
        (w.statistic + 2.0).abs() < 1e-9 && (df - 8.0).abs() < 1e-9 && (w.p_value - p_hand).abs() < 1e-9,
        format!("welch t {:.9} df {df:.9} p {:.9} (hand {p_hand:.9})", w.statistic, w.p_value),
    );
    outcome(pass, notes.join("; "))
}

// ---------------------------------------------------------------- 6

fn c6_granger_calibration() -> Outcome {
    let started = Instant::now();
    let n = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let noise = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let x: Vec<f64> = (0..n).map(|_| noise(&mut rng)).collect();
    let mut y = vec![0.0; n];
    for t in 1..n {
        y[t] = 0.3 * y[t - 1] + 0.6 * x[t - 1] + noise(&mut rng);
    }
    let coupled = granger_test_values(&x, &y, 1).unwrap()[0].result().expect("lag 1 tested").p_value;

    let mut quiet = 0;
    for _ in 0..100 {
        let a: Vec<f64> = (0..n).map(|_| noise(&mut rng)).collect();
        let b: Vec<f64> = (0..n).map(|_| noise(&mut rng)).collect();
        let p = granger_test_values(&a, &b, 1).unwrap()[0].result().expect("lag 1 tested").p_value;
        quiet += usize::from(p > 0.05);
    }
    let elapsed = started.elapsed();
    outcome(
        coupled < 0.01 && quiet >= 90 && elapsed < Duration::from_secs(10),
        format!("coupled p {coupled:.2e} (need < 0.01), independent trials with p > 0.05: {quiet}/100 (need >= 90)"),
    )
}

// ---------------------------------------------------------------- 7

fn c7_weak_label_parity() -> Outcome {
    let cues = CueConfig::default();
    let class = |name: &str| classify_entity_name(name, &cues).map(EntityStance::stance);
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, want) in [
        ("BIDEN FOR PRESIDENT", Some(Stance::ProBiden)),
        ("Keep Trump in office", Some(Stance::ProTrump)),
        ("Union 2020", None),
        ("Plains PAC", None),
    ] {
        let got = class(name);
        pass &= got == want;
        notes.push(format!("{name:?} -> {}", got.map_or("implicit".to_owned(), |s| s.to_string())));
    }
    let entity = classify_entity_name("Keep Trump in office", &cues).unwrap();
    let labels = derive_ad_stances(entity, &tokenize("Joe Biden will raise your taxes"), &cues);
    let got: BTreeSet<Stance> = labels.iter().collect();
    let want: BTreeSet<Stance> = [Stance::ProTrump, Stance::AntiBiden].into();
    pass &= got == want;
    notes.push(format!("cross-candidate {:?}", got.iter().map(|s| s.as_str()).collect::<Vec<_>>()));
    outcome(pass, notes.join(", "))
}

// ---------------------------------------------------------------- 8

fn run_artifacts() -> Vec<(&'static str, Vec<u8>)> {
    let spec = SynthSpec::default();
    let config = TrainConfig {
        seed: 42,
        ..TrainConfig::default()
    };
    let (s, model, preds) = synth_pipeline(&spec, &config);
    let mut pred_csv = Vec::new();
    write_predictions(&mut pred_csv, &preds).unwrap();
    let holdout = HoldoutSet::read_csv(s.gold_csv().as_bytes()).unwrap();
    let eval = evaluate(&preds, &holdout).unwrap();
    let report = Report {
        manifest: RunManifest::new("eval").seed(42).config(&config).input("holdout", s.gold_csv().as_bytes()),
        body: eval,
    };
    vec![
        ("model", model.to_bytes()),
        ("model manifest", serde_json::to_vec(&model.manifest()).unwrap()),
        ("predictions", pred_csv),
        ("eval report", report.to_json().into_bytes()),
    ]
}

fn c8_determinism() -> Outcome {
    let a = run_artifacts();
    let b = run_artifacts();
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0).collect();
    outcome(
        differing.is_empty(),
        format!(
            "two seeded runs, {} artifacts compared byte-for-byte, differing: {differing:?}",
            a.len()
        ),
    )
}

// ---------------------------------------------------------------- 9

/// Accuracy and macro-F1 from an explicit confusion matrix over `k` classes,
/// averaging F1 over classes present in gold. Per-class scores are summed in
/// label-name order.
fn confusion_metrics(gold: &[usize], pred: &[usize], k: usize, name: impl Fn(usize) -> String) -> (f64, f64, usize) {
    let mut cm = vec![vec![0usize; k]; k];
    for (g, p) in gold.iter().zip(pred) {
        cm[*g][*p] += 1;
    }
    let n: usize = cm.iter().flatten().sum();
    let trace: usize = (0..k).map(|c| cm[c][c]).sum();
    let mut f1s = BTreeMap::new();
    for c in 0..k {
        let row: usize = cm[c].iter().sum();
        if row == 0 {
            continue;
        }
        let col: usize = (0..k).map(|r| cm[r][c]).sum();
        let tp = cm[c][c];
        f1s.insert(name(c), 2.0 * tp as f64 / (row + col) as f64);
    }
    let macro_f1 = f1s.values().sum::<f64>() / f1s.len() as f64;
    (trace as f64 / n as f64, macro_f1, n)
}

fn c9_metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    let mut empty_cases = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..40);
        let mut preds = Vec::new();
        let mut rows = Vec::new();
        for i in 0..n {
            let id = format!("ad{i}");
            preds.push(Prediction {
                ad_id: id.clone(),
                stance: *Stance::ALL.choose(&mut rng).unwrap(),
                stance_score: rng.random(),
                issue: *Issue::ALL.choose(&mut rng).unwrap(),
                issue_score: rng.random(),
            });
            rows.push(HoldoutRow {
                ad_id: id,
                stance: if rng.random_bool(0.2) {
                    Gold::Unlabeled
                } else {
                    Gold::Label(*Stance::ALL.choose(&mut rng).unwrap())
                },
                issue: if rng.random_bool(0.3) {
                    Gold::Unlabeled
                } else {
                    Gold::Label(*Issue::ALL.choose(&mut rng).unwrap())
                },
            });
        }
        preds.shuffle(&mut rng);
        let (mut sg, mut sp, mut ig, mut ip) = (vec![], vec![], vec![], vec![]);
        for r in &rows {
            let p = preds.iter().find(|p| p.ad_id == r.ad_id).unwrap();
            if let Gold::Label(s) = r.stance {
                sg.push(s.index());
                sp.push(p.stance.index());
            }
            if let Gold::Label(i) = r.issue {
                ig.push(i.index());
                ip.push(p.issue.index());
            }
        }
        let got = evaluate(&preds, &HoldoutSet { rows });
        if sg.is_empty() || ig.is_empty() {
            empty_cases += 1;
            mismatches += usize::from(got.is_ok());
            continue;
        }
        let got = got.unwrap();
        let s = confusion_metrics(&sg, &sp, 4, |c| Stance::ALL[c].to_string());
        let i = confusion_metrics(&ig, &ip, 13, |c| Issue::ALL[c].to_string());
        let same = got.stance.accuracy == s.0
            && got.stance.macro_f1 == s.1
            && got.stance.support == s.2
            && got.issue.accuracy == i.0
            && got.issue.macro_f1 == i.1
            && got.issue.support == i.2;
        mismatches += usize::from(!same);
    }
    outcome(
        mismatches == 0,
        format!("1000 random fixtures ({empty_cases} with an empty side, expected to error), {mismatches} mismatches"),
    )
}
