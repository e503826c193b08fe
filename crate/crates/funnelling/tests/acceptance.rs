//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the verdict lines are always printed. Pass
//! criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 1 10`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::time::Instant;

use funnel_core::calibrate::fit_platt;
use funnel_core::corpus::{subsample_training, Document, LabelSet, LanguageDataset, MultilingualCorpus};
use funnel_core::funnel::{
    predict, predict_naive, predict_zeroshot, train_funnel, train_funnel_with_report, train_naive, train_zeroshot_with_report, EmptyLanguagePolicy, FallbackEvent, FunnelConfig, Variant,
};
use funnel_core::learn::{objective, objective_and_gradient, DenseMatrix};
use funnel_core::metrics::{
    confusion, f1, k_measure, micro_macro_aggregate, paired_ttest, pearson, ConfusionCounts, Measure,
};
use funnel_core::rng;
use funnel_core::synthetic::{SyntheticConfig, SyntheticWorld};
use funnelling::harness::{run_experiment, CorpusSource, ExperimentSpec, Mode};
use serde_json::Value;

// Tolerances and thresholds.
const METRIC_TOL: f64 = 1e-12;
const METRIC_TABLES: usize = 1000;
const METRIC_MAX_COUNT: u64 = 10_000;
const METRIC_SECONDS: f64 = 5.0;
const PLATT_NLL_TOL: f64 = 1e-3;
const PLATT_SEEDS: u64 = 10;
const PLATT_N: usize = 500;
const PLATT_GRID: usize = 400;
const PLATT_SECONDS: f64 = 30.0;
const BEAT_SEEDS: u64 = 5;
const BEAT_FRACTION: f64 = 0.1;
const BEAT_MIN_RELATIVE: f64 = 0.05;
const BEAT_SECONDS: f64 = 300.0;
const CURVE_SEEDS: usize = 3;
const KFCV_K: usize = 10;
const KFCV_DOCS: usize = 100;
const CALIBRATION_SEEDS: usize = 5;
const ZERO_SHOT_SEEDS: u64 = 5;
const ZERO_SHOT_MIN_WINS: usize = 4;
const STATS_TOL: f64 = 1e-6;
const STATS_FIXTURES: usize = 20;
const GRADIENT_TOL: f64 = 1e-5;
const GRADIENT_POINTS: usize = 50;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
/// Parsed JSON, timing-free CSV tables and raw text of one report directory.
type Payload = (Vec<Value>, Vec<Vec<Vec<String>>>, Vec<String>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Small deterministic generator for fixtures, independent of the library.
struct Lcg(u64);

impl Lcg {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 11
    }

    fn unit(&mut self) -> f64 {
        self.next_u64() as f64 / (1u64 << 53) as f64
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

// 1. Metrics against a document-level brute force.

/// Scores of one class computed from explicitly materialized documents.
struct BruteTable {
    docs: Vec<(bool, bool)>,
}

impl BruteTable {
    fn new(c: &ConfusionCounts) -> Self {
        let mut docs = Vec::with_capacity(c.total() as usize);
        docs.extend((0..c.tp).map(|_| (true, true)));
        docs.extend((0..c.fp).map(|_| (false, true)));
        docs.extend((0..c.fn_).map(|_| (true, false)));
        docs.extend((0..c.tn).map(|_| (false, false)));
        Self { docs }
    }
}

fn brute_f1(docs: &[(bool, bool)]) -> f64 {
    let gold = docs.iter().filter(|d| d.0).count() as f64;
    let predicted = docs.iter().filter(|d| d.1).count() as f64;
    let hits = docs.iter().filter(|d| d.0 && d.1).count() as f64;
    if gold == 0.0 && predicted == 0.0 {
        return 1.0;
    }
    if hits == 0.0 {
        return 0.0;
    }
    let precision = hits / predicted;
    let recall = hits / gold;
    2.0 * precision * recall / (precision + recall)
}

fn brute_k(docs: &[(bool, bool)]) -> f64 {
    let positives: Vec<bool> = docs.iter().filter(|d| d.0).map(|d| d.1).collect();
    let negatives: Vec<bool> = docs.iter().filter(|d| !d.0).map(|d| !d.1).collect();
    let rate = |v: &[bool]| v.iter().filter(|&&x| x).count() as f64 / v.len() as f64;
    match (positives.is_empty(), negatives.is_empty()) {
        (true, true) => 0.0,
        (true, false) => 2.0 * rate(&negatives) - 1.0,
        (false, true) => 2.0 * rate(&positives) - 1.0,
        (false, false) => rate(&positives) + rate(&negatives) - 1.0,
    }
}

fn random_table(r: &mut Lcg) -> ConfusionCounts {
    let cell = |r: &mut Lcg| match r.below(4) {
        0 => 0,
        1 => r.below(5),
        _ => r.below(METRIC_MAX_COUNT + 1),
    };
    ConfusionCounts::new(cell(r), cell(r), cell(r), cell(r))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = Lcg(1);
    let mut worst: f64 = 0.0;
    let mut branches = BTreeSet::new();
    for _ in 0..METRIC_TABLES {
        let n_classes = 1 + r.below(8) as usize;
        let mut tables: Vec<ConfusionCounts> = (0..n_classes).map(|_| random_table(&mut r)).collect();
        // Force the degenerate shapes regularly.
        match r.below(5) {
            0 => tables[0] = ConfusionCounts::default(),
            1 => tables[0] = ConfusionCounts::new(0, tables[0].fp, 0, tables[0].tn),
            2 => tables[0] = ConfusionCounts::new(tables[0].tp, 0, tables[0].fn_, 0),
            _ => {}
        }
        let brute: Vec<BruteTable> = tables.iter().map(BruteTable::new).collect();
        let mut pooled = Vec::new();
        for (c, b) in tables.iter().zip(&brute) {
            let pos = c.tp + c.fn_;
            let neg = c.fp + c.tn;
            branches.insert((pos == 0, neg == 0, c.tp + c.fp + c.fn_ == 0));
            worst = worst.max((f1(c) - brute_f1(&b.docs)).abs());
            worst = worst.max((k_measure(c) - brute_k(&b.docs)).abs());
            pooled.extend_from_slice(&b.docs);
        }
        for (m, brute_fn) in [(Measure::F1, brute_f1 as fn(&[(bool, bool)]) -> f64), (Measure::K, brute_k)] {
            let (micro, macro_) = micro_macro_aggregate(&tables, m).map_err(|e| e.to_string())?;
            let brute_macro = brute.iter().map(|b| brute_fn(&b.docs)).sum::<f64>() / n_classes as f64;
            worst = worst.max((micro - brute_fn(&pooled)).abs());
            worst = worst.max((macro_ - brute_macro).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= METRIC_TOL && secs < METRIC_SECONDS && branches.len() >= 4,
        format!("{METRIC_TABLES} tables, max |diff| {worst:.1e}, {} branch shapes, {secs:.2}s", branches.len()),
    )
}

// 2. Platt fit against a grid oracle.

fn softplus(t: f64) -> f64 {
    if t > 36.0 {
        t
    } else if t < -36.0 {
        t.exp()
    } else {
        t.exp().ln_1p()
    }
}

/// −Σ log-likelihood of p(positive | h) = 1 / (1 + e^{αh + β}).
fn oracle_nll(h: &[f64], y: &[bool], a: f64, b: f64) -> f64 {
    h.iter().zip(y).map(|(&x, &pos)| {
        let t = a * x + b;
        if pos {
            softplus(t)
        } else {
            softplus(t) - t
        }
    }).sum()
}

fn grid_min(h: &[f64], y: &[bool], a: (f64, f64), b: (f64, f64), n: usize) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..n {
        let alpha = a.0 + (a.1 - a.0) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let beta = b.0 + (b.1 - b.0) * j as f64 / (n - 1) as f64;
            let v = oracle_nll(h, y, alpha, beta);
            if v < best.0 {
                best = (v, alpha, beta);
            }
        }
    }
    best
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let results: Vec<Result<(f64, f64, f64), String>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..PLATT_SEEDS)
            .map(|seed| {
                s.spawn(move || {
                    let mut r = rng::stream(seed, 0xacc2);
                    let y: Vec<bool> = (0..PLATT_N).map(|i| i % 2 == 0).collect();
                    let h: Vec<f64> =
                        y.iter().map(|&pos| if pos { 1.0 } else { -1.0 } + rng::normal(&mut r)).collect();
                    let fit = fit_platt(&h, &y).map_err(|e| e.to_string())?;
                    let fitted = oracle_nll(&h, &y, fit.alpha, fit.beta);
                    let (grid, _, _) = grid_min(&h, &y, (-20.0, 0.0), (-10.0, 10.0), PLATT_GRID);
                    // A fine local grid around the fit checks it is a minimum
                    // from both sides.
                    let (local, _, _) =
                        grid_min(&h, &y, (fit.alpha - 0.02, fit.alpha + 0.02), (fit.beta - 0.02, fit.beta + 0.02), 41);
                    Ok((fitted - grid, fitted - local, fit.alpha))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_local = f64::NEG_INFINITY;
    let mut max_alpha = f64::NEG_INFINITY;
    for r in results {
        let (gap, local, alpha) = r?;
        worst_gap = worst_gap.max(gap);
        worst_local = worst_local.max(local);
        max_alpha = max_alpha.max(alpha);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_gap <= PLATT_NLL_TOL && worst_local <= 1e-9 && max_alpha < 0.0 && secs < PLATT_SECONDS,
        format!(
            "{PLATT_SEEDS} seeds, NLL(fit) - NLL(grid) <= {worst_gap:.2e}, local gap {worst_local:.1e}, max alpha {max_alpha:.3}, {secs:.1}s"
        ),
    )
}

// 3. Funnelling beats naive on an under-resourced target.

fn macro_f1_on(corpus: &MultilingualCorpus, lang: &str, decide: impl Fn(&Document) -> LabelSet) -> Result<f64, String> {
    let test = corpus.test_set(lang).map_err(|e| e.to_string())?;
    let pred: Vec<LabelSet> = test.documents().iter().map(&decide).collect();
    let counts = confusion(&test.labels(), &pred, corpus.n_classes()).map_err(|e| e.to_string())?;
    Ok(micro_macro_aggregate(&counts, Measure::F1).map_err(|e| e.to_string())?.1)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let target = "en";
    let mut wins = 0;
    let mut rel = Vec::new();
    let mut pairs = Vec::new();
    for seed in 0..BEAT_SEEDS {
        let corpus = SyntheticWorld::new(&SyntheticConfig::default().with_seed(seed))
            .and_then(|w| w.corpus())
            .map_err(|e| e.to_string())?;
        let sub = subsample_training(&corpus, target, BEAT_FRACTION, seed).map_err(|e| e.to_string())?;
        let cfg = FunnelConfig::tat().with_seed(seed);
        let fun = train_funnel(&sub, &cfg).map_err(|e| e.to_string())?;
        let naive = train_naive(&sub.only_language(target).map_err(|e| e.to_string())?, &cfg).map_err(|e| e.to_string())?;
        let f = macro_f1_on(&corpus, target, |d| predict(&fun, target, d).unwrap().decisions)?;
        let n = macro_f1_on(&corpus, target, |d| predict_naive(&naive, target, d).unwrap())?;
        wins += usize::from(f > n);
        rel.push(if n > 0.0 { (f - n) / n } else { f64::INFINITY });
        pairs.push(format!("{f:.3}/{n:.3}"));
    }
    let mean_rel = rel.iter().sum::<f64>() / rel.len() as f64;
    let secs = start.elapsed().as_secs_f64();
    check(
        wins == BEAT_SEEDS as usize && mean_rel >= BEAT_MIN_RELATIVE && secs < BEAT_SECONDS,
        format!(
            "fun/naive F1M on `{target}` at {:.0}%: {}; wins {wins}/{BEAT_SEEDS}, mean relative {:+.1}%, {secs:.0}s",
            100.0 * BEAT_FRACTION,
            pairs.join(" "),
            100.0 * mean_rel
        ),
    )
}

// 4. Learning curves.

fn json(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn criterion_4() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut spec = ExperimentSpec::new(Mode::Curves, CorpusSource::Synthetic(SyntheticConfig::default()));
    spec.trials = CURVE_SEEDS;
    spec.fractions = vec![0.1, 1.0];
    run_experiment(&spec, dir.path(), &mut |_| {}).map_err(|e| e.to_string())?;
    let summary = json(&dir.path().join("curves_summary.json"))?;
    let mut at: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for row in summary.as_array().ok_or("summary is not a list")? {
        if row["measure"] != "f1_macro" {
            continue;
        }
        let fraction = format!("{:.1}", row["fraction"].as_f64().unwrap_or(f64::NAN));
        let target = row["target"].as_str().unwrap_or("?").to_string();
        let improvement = row["relative_improvement"].as_f64().unwrap_or(f64::NAN);
        at.entry(fraction).or_default().push((target, improvement));
    }
    let small = at.get("0.1").ok_or("no rows at 0.1")?;
    let full = at.get("1.0").ok_or("no rows at 1.0")?;
    let mean = |v: &[(String, f64)]| v.iter().map(|x| x.1).sum::<f64>() / v.len() as f64;
    let all_positive = small.iter().all(|(_, v)| *v > 0.0);
    let per_lang: Vec<String> = small.iter().map(|(l, v)| format!("{l} {:+.1}%", 100.0 * v)).collect();
    check(
        all_positive && mean(small) > mean(full),
        format!(
            "relative F1M improvement at 10%: {} (mean {:+.1}%); at 100%: mean {:+.1}%",
            per_lang.join(", "),
            100.0 * mean(small),
            100.0 * mean(full)
        ),
    )
}

// 5. Trivial rejectors.

fn small_config(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        n_languages: 3,
        n_classes: 8,
        vocab_per_language: 400,
        docs_per_language_train: 100,
        docs_per_language_test: 100,
        class_prevalence_range: (0.1, 0.3),
        ..SyntheticConfig::default()
    }
    .with_seed(seed)
}

fn with_train_labels(
    corpus: &MultilingualCorpus,
    language: &str,
    edit: impl Fn(usize, &LabelSet) -> LabelSet,
) -> Result<MultilingualCorpus, String> {
    let mut train = corpus.train().clone();
    let ds = corpus.train_set(language).map_err(|e| e.to_string())?;
    let docs = ds
        .documents()
        .iter()
        .enumerate()
        .map(|(i, d)| Document::new(d.id.clone(), d.vector.clone(), edit(i, &d.labels)))
        .collect();
    train.insert(language.into(), LanguageDataset::new(language, docs, ds.vocabulary_size()).map_err(|e| e.to_string())?);
    MultilingualCorpus::new(corpus.class_names().to_vec(), train, corpus.test().clone(), false, None).map_err(|e| e.to_string())
}

fn criterion_5() -> Outcome {
    let (lang, class) = ("es", 3);
    let corpus = SyntheticWorld::new(&small_config(5)).and_then(|w| w.corpus()).map_err(|e| e.to_string())?;
    let stripped = with_train_labels(&corpus, lang, |_, l| l.iter().filter(|&c| c != class).collect())?;
    let mut docs = 0;
    let mut violations = 0;
    for variant in [Variant::Tat, Variant::Kfcv] {
        let cfg = FunnelConfig { variant, k: 5, ..FunnelConfig::default() };
        let model = train_funnel(&stripped, &cfg).map_err(|e| e.to_string())?;
        for d in stripped.test_set(lang).map_err(|e| e.to_string())?.documents() {
            let p = predict(&model, lang, d).map_err(|e| e.to_string())?;
            docs += 1;
            violations += usize::from(p.posterior[class] != 0.0 || p.decisions.contains(class));
        }
    }

    let target = "it";
    let sub = subsample_training(&corpus, target, 0.0, 5).map_err(|e| e.to_string())?;
    let test = corpus.test_set(target).map_err(|e| e.to_string())?;
    let classes_with_positives = (0..corpus.n_classes()).filter(|&c| test.labels().iter().any(|l| l.contains(c))).count();
    let cfg = FunnelConfig { empty_language: EmptyLanguagePolicy::TrivialRejector, ..FunnelConfig::default() };
    let model = train_funnel(&sub, &cfg).map_err(|e| e.to_string())?;
    let f1m = macro_f1_on(&corpus, target, |d| predict(&model, target, d).unwrap().decisions)?;
    check(
        violations == 0 && f1m == 0.0 && classes_with_positives == corpus.n_classes(),
        format!(
            "{violations} violations over {docs} predictions for a class without `{lang}` positives; fraction-0 `{target}` F1M = {f1m}"
        ),
    )
}

// 6. KFCV structure.

fn criterion_6() -> Outcome {
    let cfg_corpus = SyntheticConfig { docs_per_language_train: KFCV_DOCS, docs_per_language_test: 20, ..SyntheticConfig::default() };
    let base = SyntheticWorld::new(&cfg_corpus).and_then(|w| w.corpus()).map_err(|e| e.to_string())?;
    // Leave class 0 a single positive in "fr" so at least one fallback must fire.
    let fr = base.train_set("fr").map_err(|e| e.to_string())?;
    let keep = fr.documents().iter().position(|d| d.labels.contains(0)).ok_or("no positive of class 0 in fr")?;
    let corpus = with_train_labels(&base, "fr", |i, l| if i == keep { l.clone() } else { l.iter().filter(|&c| c != 0).collect() })?;
    let cfg = FunnelConfig::kfcv(KFCV_K);
    let (_, report) = train_funnel_with_report(&corpus, &cfg, &mut ()).map_err(|e| e.to_string())?;

    let sizes_ok = report.fold_train_sizes.len() == corpus.train().len()
        && report.fold_train_sizes.values().all(|v| v.len() == KFCV_K && v.iter().all(|&s| s == KFCV_DOCS - KFCV_DOCS / KFCV_K));
    let expected_sets = corpus.train().len() * KFCV_K;

    let mut expected = BTreeSet::new();
    for (lang, ds) in corpus.train() {
        let mut docs: Vec<&Document> = ds.documents().iter().collect();
        docs.sort_by(|a, b| a.id.cmp(&b.id));
        let folds = report.fold_assignments.get(lang).ok_or("missing fold assignment")?;
        for class in 0..corpus.n_classes() {
            let holding: BTreeSet<usize> =
                docs.iter().zip(folds).filter(|(d, _)| d.labels.contains(class)).map(|(_, &f)| f).collect();
            if let [fold] = holding.iter().copied().collect::<Vec<_>>()[..] {
                expected.insert(FallbackEvent { language: lang.clone(), fold, class });
            }
        }
    }
    let actual: BTreeSet<FallbackEvent> = report.fallbacks.iter().cloned().collect();
    check(
        sizes_ok && report.fold_calibrator_sets == expected_sets && actual == expected && !actual.is_empty(),
        format!(
            "fold training sizes all {}: {sizes_ok}; calibrator sets {} (expected {expected_sets}); fallbacks {} (expected {})",
            KFCV_DOCS - KFCV_DOCS / KFCV_K,
            report.fold_calibrator_sets,
            actual.len(),
            expected.len()
        ),
    )
}

// 7. Determinism across thread counts.

fn strip_json(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("train_seconds");
            map.remove("test_seconds");
            map.values_mut().for_each(strip_json);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_json),
        _ => {}
    }
}

fn strip_csv(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let keep: Vec<usize> =
        (0..headers.len()).filter(|&i| !matches!(&headers[i], "train_seconds" | "test_seconds")).collect();
    let mut rows = vec![keep.iter().map(|&i| headers[i].to_string()).collect()];
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        rows.push(keep.iter().map(|&i| rec[i].to_string()).collect());
    }
    Ok(rows)
}

fn report_payload(dir: &Path) -> Result<Payload, String> {
    let mut jsons = Vec::new();
    let mut csvs = Vec::new();
    let mut raw = Vec::new();
    for name in ["spec.json", "runs.json", "summary.json"] {
        let mut v = json(&dir.join(name))?;
        strip_json(&mut v);
        jsons.push(v);
    }
    for name in ["runs.csv", "summary.csv"] {
        csvs.push(strip_csv(&dir.join(name))?);
    }
    for name in ["spec.json", "summary.json", "summary.csv"] {
        raw.push(fs::read_to_string(dir.join(name)).map_err(|e| e.to_string())?);
    }
    Ok((jsons, csvs, raw))
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let synth = dir.path().join("synthetic.json");
    fs::write(&synth, serde_json::to_string(&small_config(0)).unwrap()).map_err(|e| e.to_string())?;
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut payloads = Vec::new();
    let mut runs = Vec::new();
    for threads in [1, 4, max, 1] {
        let out = dir.path().join(format!("run{}", runs.len()));
        let args = [
            "funnelling".to_string(),
            "--threads".into(),
            threads.to_string(),
            "experiment".into(),
            "mlclc".into(),
            "--synthetic".into(),
            synth.display().to_string(),
            "--trials".into(),
            "2".into(),
            "--method".into(),
            "naive,fun_tat,fun_kfcv".into(),
            "--k".into(),
            "5".into(),
            "--out".into(),
            out.display().to_string(),
        ];
        let mut sink = Vec::new();
        let mut err = Vec::new();
        let code = funnelling::cli::run(args, &mut sink, &mut err);
        if code != 0 {
            return Err(format!("experiment exited with {code}: {}", String::from_utf8_lossy(&err)));
        }
        payloads.push(report_payload(&out)?);
        runs.push(threads);
    }
    let identical = payloads.windows(2).all(|w| w[0] == w[1]);
    check(identical, format!("mlclc reports identical across thread counts {runs:?} (wall-clock fields excluded): {identical}"))
}

// 8. Calibration ablation.

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut spec = ExperimentSpec::new(Mode::Calibration, CorpusSource::Synthetic(SyntheticConfig::default()));
    spec.trials = CALIBRATION_SEEDS;
    run_experiment(&spec, dir.path(), &mut |_| {}).map_err(|e| e.to_string())?;
    let summary = json(&dir.path().join("summary.json"))?;
    let mut means = BTreeMap::new();
    for g in summary.as_array().ok_or("summary is not a list")? {
        if g["key"]["language"] != "all" {
            continue;
        }
        let mode = g["key"]["mode"].as_str().unwrap_or("?").to_string();
        let m = g["measures"].as_array().and_then(|ms| ms.iter().find(|m| m["measure"] == "f1_macro")).ok_or("no f1_macro")?;
        means.insert(mode, m["mean"].as_f64().unwrap_or(f64::NAN));
    }
    let get = |k: &str| means.get(k).copied().unwrap_or(f64::NAN);
    let (calib, nocalib, noprob) = (get("calib"), get("nocalib"), get("noprob"));
    check(
        calib >= nocalib,
        format!(
            "pooled F1M over {CALIBRATION_SEEDS} seeds: calib {calib:.4} nocalib {nocalib:.4}; reported only: noprob {noprob:.4} ({})",
            if calib >= noprob { "calib >= noprob" } else { "noprob > calib" }
        ),
    )
}

// 9. Zero-shot.

fn criterion_9() -> Outcome {
    let mut wins = 0;
    let mut rows_ok = true;
    let mut ks = Vec::new();
    for seed in 0..ZERO_SHOT_SEEDS {
        let world = SyntheticWorld::new(&SyntheticConfig::default().with_seed(seed)).map_err(|e| e.to_string())?;
        let corpus = world.corpus().map_err(|e| e.to_string())?;
        let emb = world.embeddings(32, 0.1).map_err(|e| e.to_string())?;
        let langs = corpus.languages();
        let (seen, unseen) = langs.split_at(3);
        let sub = corpus.with_train_languages(seen);
        let cfg = FunnelConfig::tat().with_seed(seed);
        let (model, report) = train_zeroshot_with_report(&sub, &emb, &cfg, &mut ()).map_err(|e| e.to_string())?;
        rows_ok &= report.meta_rows == 2 * sub.n_train_docs();
        let mut pooled = vec![ConfusionCounts::default(); corpus.n_classes()];
        for lang in unseen {
            let test = corpus.test_set(lang).map_err(|e| e.to_string())?;
            let pred = test
                .documents()
                .iter()
                .map(|d| predict_zeroshot(&model, lang, d, emb.get(lang)).map(|p| p.decisions))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let c = confusion(&test.labels(), &pred, corpus.n_classes()).map_err(|e| e.to_string())?;
            for (p, x) in pooled.iter_mut().zip(c) {
                *p = *p + x;
            }
        }
        let (k_micro, _) = micro_macro_aggregate(&pooled, Measure::K).map_err(|e| e.to_string())?;
        wins += usize::from(k_micro > 0.0);
        ks.push(format!("{k_micro:.3}"));
    }
    check(
        wins >= ZERO_SHOT_MIN_WINS && rows_ok,
        format!("unseen-language K micro per seed: {}; {wins}/{ZERO_SHOT_SEEDS} > 0; meta rows = 2 x training docs: {rows_ok}", ks.join(" ")),
    )
}

// 10. Statistics and gradient oracles.

/// Two-tailed Student-t tail probability by quadrature of the density,
/// substituting x = √ν·tan θ so both integrals run over finite intervals.
fn t_tail_quadrature(t: f64, df: f64) -> f64 {
    // With x = √ν tan θ the density is proportional to cos^{ν−1} θ on (−π/2, π/2).
    let g = |theta: f64| theta.cos().max(0.0).powf(df - 1.0);
    let simpson = |a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        let mut s = g(a) + g(b);
        for i in 1..n {
            s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let half = std::f64::consts::FRAC_PI_2;
    let from = (t.abs() / df.sqrt()).atan();
    simpson(from, half, 20_000) / simpson(0.0, half, 20_000)
}

fn fixture(r: &mut Lcg, n: usize) -> Vec<f64> {
    (0..n).map(|_| (r.unit() - 0.5) * 4.0).collect()
}

fn criterion_10() -> Outcome {
    let mut r = Lcg(10);
    let mut worst_t: f64 = 0.0;
    let mut worst_r: f64 = 0.0;
    for i in 0..STATS_FIXTURES {
        let n = 3 + i;
        let a = fixture(&mut r, n);
        let shift = (i as f64 - 10.0) * 0.08;
        let b: Vec<f64> = a.iter().map(|v| v + shift + (r.unit() - 0.5)).collect();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = mean / (var / n as f64).sqrt();
        let oracle = t_tail_quadrature(t, (n - 1) as f64);
        let got = paired_ttest(&a, &b).map_err(|e| e.to_string())?;
        worst_t = worst_t.max((got.p - oracle).abs());

        let n = 4 + i;
        let x = fixture(&mut r, n);
        let mix = (i as f64 / STATS_FIXTURES as f64) * 2.0 - 1.0;
        let y: Vec<f64> = x.iter().map(|v| mix * v + (r.unit() - 0.5) * 2.0).collect();
        let z = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
            v.iter().map(|x| (x - m) / s).collect::<Vec<f64>>()
        };
        let rho = z(&x).iter().zip(z(&y)).map(|(p, q)| p * q).sum::<f64>() / n as f64;
        let t = rho * ((n - 2) as f64 / (1.0 - rho * rho)).sqrt();
        let oracle = t_tail_quadrature(t, (n - 2) as f64);
        let got = pearson(&x, &y).map_err(|e| e.to_string())?;
        worst_r = worst_r.max((got.p - oracle).abs()).max((got.rho - rho).abs());
    }

    let mut worst_g: f64 = 0.0;
    for point in 0..GRADIENT_POINTS {
        let dim = 6;
        let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..dim).map(|_| (r.unit() - 0.5) * 2.0).collect()).collect();
        let y: Vec<bool> = (0..30).map(|_| r.unit() < 0.4).collect();
        let x = DenseMatrix::from_rows(dim, &rows);
        let theta: Vec<f64> = (0..=dim).map(|_| (r.unit() - 0.5) * 6.0).collect();
        let c = [0.1, 1.0, 10.0, 100.0][point % 4];
        let (_, g) = objective_and_gradient(&x, &y, c, &theta);
        let mut diff = 0.0;
        let mut norm = 0.0;
        for j in 0..=dim {
            let h = 1e-5 * theta[j].abs().max(1.0);
            let (mut up, mut down) = (theta.clone(), theta.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (objective(&x, &y, c, &up) - objective(&x, &y, c, &down)) / (2.0 * h);
            diff += (fd - g[j]).powi(2);
            norm += g[j].powi(2);
        }
        worst_g = worst_g.max(diff.sqrt() / norm.sqrt().max(1e-12));
    }
    check(
        worst_t <= STATS_TOL && worst_r <= STATS_TOL && worst_g <= GRADIENT_TOL,
        format!(
            "t-test p max |diff| {worst_t:.1e}, pearson max |diff| {worst_r:.1e} over {STATS_FIXTURES} fixtures each; gradient relative error {worst_g:.1e} at {GRADIENT_POINTS} points"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("metrics oracle equivalence", criterion_1),
        ("calibration optimality", criterion_2),
        ("funnelling beats naive on a 10% target", criterion_3),
        ("learning-curve positivity", criterion_4),
        ("trivial-rejector propagation", criterion_5),
        ("KFCV structure", criterion_6),
        ("determinism across thread counts", criterion_7),
        ("calibration ablation ordering", criterion_8),
        ("zero-shot structure", criterion_9),
        ("statistics and gradient oracles", criterion_10),
    ];
    let selected: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
