use std::collections::BTreeMap;

use funnel_core::calibrate::{fit_platt, platt_nll};
use funnel_core::corpus::{subsample_training, Document, LabelSet, LanguageDataset, MultilingualCorpus};
use funnel_core::features::{fit_weighting, transform};
use funnel_core::learn::{kfold_split, objective, objective_and_gradient, DenseMatrix, RbfFeatureMap};
use funnel_core::metrics::{
    confusion, f1, k_measure, micro_macro_aggregate, paired_ttest, pearson, ConfusionCounts, Measure,
};
use funnel_core::SparseVector;
use proptest::prelude::*;

fn counts() -> impl Strategy<Value = ConfusionCounts> {
    let cell = prop_oneof![Just(0u64), 0u64..20, 0u64..10_000];
    (cell.clone(), cell.clone(), cell.clone(), cell).prop_map(|(tp, fp, fn_, tn)| ConfusionCounts::new(tp, fp, fn_, tn))
}

proptest! {
    #[test]
    fn measures_stay_in_range(c in counts()) {
        prop_assert!((0.0..=1.0).contains(&f1(&c)));
        prop_assert!((-1.0..=1.0).contains(&k_measure(&c)));
    }

    #[test]
    fn micro_and_macro_bounded_by_per_class_extremes(tables in prop::collection::vec(counts(), 1..12)) {
        for m in [Measure::F1, Measure::K] {
            let (_, macro_) = micro_macro_aggregate(&tables, m).unwrap();
            let values: Vec<f64> = tables.iter().map(|c| m.apply(c)).collect();
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(macro_ >= lo - 1e-12 && macro_ <= hi + 1e-12);
        }
    }

    #[test]
    fn confusion_tables_cover_every_document(
        docs in prop::collection::vec((prop::collection::vec(0usize..5, 0..5), prop::collection::vec(0usize..5, 0..5)), 0..40)
    ) {
        let gold: Vec<LabelSet> = docs.iter().map(|(g, _)| LabelSet::new(g.clone())).collect();
        let pred: Vec<LabelSet> = docs.iter().map(|(_, p)| LabelSet::new(p.clone())).collect();
        let c = confusion(&gold, &pred, 5).unwrap();
        for (class, cc) in c.iter().enumerate() {
            prop_assert_eq!(cc.total() as usize, docs.len());
            prop_assert_eq!((cc.tp + cc.fn_) as usize, gold.iter().filter(|g| g.contains(class)).count());
        }
    }

    #[test]
    fn folds_partition_positions(n in 0usize..200, k in 2usize..12, seed in any::<u64>()) {
        let plan = kfold_split(n, k, seed).unwrap();
        let mut seen = vec![0; n];
        for x in 0..k {
            for i in plan.fold(x) {
                seen[i] += 1;
            }
            prop_assert_eq!(plan.fold(x).len() + plan.complement(x).len(), n);
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
        let sizes = plan.sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(plan, kfold_split(n, k, seed).unwrap());
    }

    #[test]
    fn platt_ignores_sample_order_and_keeps_ranking(
        pairs in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60),
        rotate in 0usize..60,
    ) {
        let (h, y): (Vec<f64>, Vec<bool>) = pairs.iter().copied().unzip();
        let fit = fit_platt(&h, &y).unwrap();
        let mut shuffled = pairs.clone();
        let r = rotate % shuffled.len();
        shuffled.rotate_left(r);
        shuffled.reverse();
        let (h2, y2): (Vec<f64>, Vec<bool>) = shuffled.into_iter().unzip();
        prop_assert_eq!(fit, fit_platt(&h2, &y2).unwrap());
        prop_assert!(fit.alpha <= 0.0);
        if !fit.trivial {
            prop_assert!(fit.probability(-1.0) <= fit.probability(1.0));
            // No worse than the best constant predictor.
            let pos = y.iter().filter(|&&v| v).count() as f64;
            let n = y.len() as f64;
            let base = if pos < n { -((n - pos) / pos).ln() } else { -10.0 };
            prop_assert!(platt_nll(&h, &y, fit.alpha, fit.beta) <= platt_nll(&h, &y, 0.0, -base) + 1e-6);
        }
    }

    #[test]
    fn weighted_vectors_are_unit_or_zero(
        docs in prop::collection::vec(prop::collection::vec((0u32..30, 1u32..5), 0..10), 1..20)
    ) {
        let documents: Vec<Document> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let entries = d.iter().map(|&(f, c)| (f, c as f64)).collect();
                Document::new(format!("d{i:03}"), SparseVector::from_unsorted(entries).unwrap(), LabelSet::empty())
            })
            .collect();
        let ds = LanguageDataset::new("xx", documents, 30).unwrap();
        let model = fit_weighting(&ds).unwrap();
        prop_assert!(model.idf.iter().all(|&v| v >= 0.0));
        for d in ds.documents() {
            let norm = transform(&model, &d.vector).unwrap().norm();
            prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn subsamples_are_nested(n in 1usize..80, a in 0.0f64..=1.0, b in 0.0f64..=1.0, seed in any::<u64>()) {
        let docs: Vec<Document> = (0..n)
            .map(|i| Document::new(format!("x-{i:03}"), SparseVector::zeros(), LabelSet::empty()))
            .collect();
        let mut train = BTreeMap::new();
        train.insert("xx".to_string(), LanguageDataset::new("xx", docs, 1).unwrap());
        let corpus = MultilingualCorpus::new(vec!["c".into()], train, BTreeMap::new(), false, None).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let ids = |f: f64| -> Vec<String> {
            subsample_training(&corpus, "xx", f, seed).unwrap().train_set("xx").unwrap().documents().iter().map(|d| d.id.clone()).collect()
        };
        let small = ids(lo);
        let large = ids(hi);
        prop_assert_eq!(small.len(), (lo * n as f64 - 1e-9).ceil().max(0.0) as usize);
        prop_assert!(small.iter().all(|id| large.contains(id)));
    }

    #[test]
    fn ttest_is_antisymmetric(a in prop::collection::vec(-10.0f64..10.0, 3..20), shift in -2.0f64..2.0) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v + shift + (i as f64 * 0.37).sin()).collect();
        let ab = paired_ttest(&a, &b).unwrap();
        let ba = paired_ttest(&b, &a).unwrap();
        prop_assert!((ab.t + ba.t).abs() <= 1e-9 * ab.t.abs().max(1.0));
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }

    #[test]
    fn pearson_symmetric_and_affine_invariant(
        xy in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30),
        scale in 0.1f64..10.0,
        offset in -5.0f64..5.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        if let (Ok(a), Ok(b)) = (pearson(&x, &y), pearson(&y, &x)) {
            prop_assert!((a.rho - b.rho).abs() < 1e-12);
            let x2: Vec<f64> = x.iter().map(|v| scale * v + offset).collect();
            let c = pearson(&x2, &y).unwrap();
            prop_assert!((a.rho - c.rho).abs() < 1e-9);
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences(seed in 0u64..1000, c in prop_oneof![Just(0.1), Just(1.0), Just(100.0)]) {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let rows: Vec<Vec<f64>> = (0..25).map(|_| (0..4).map(|_| next()).collect()).collect();
        let y: Vec<bool> = (0..25).map(|_| next() > 0.0).collect();
        let x = DenseMatrix::from_rows(4, &rows);
        let theta: Vec<f64> = (0..5).map(|_| 2.0 * next()).collect();
        let (_, g) = objective_and_gradient(&x, &y, c, &theta);
        let mut diff = 0.0;
        let mut norm = 0.0;
        for j in 0..5 {
            let h = 1e-5 * theta[j].abs().max(1.0);
            let mut up = theta.clone();
            up[j] += h;
            let mut down = theta.clone();
            down[j] -= h;
            let fd = (objective(&x, &y, c, &up) - objective(&x, &y, c, &down)) / (2.0 * h);
            diff += (fd - g[j]).powi(2);
            norm += g[j].powi(2);
        }
        prop_assert!(diff.sqrt() <= 1e-5 * norm.sqrt().max(1e-3));
    }
}

#[test]
fn random_features_approximate_the_rbf_kernel() {
    let gamma = 0.5;
    let map = RbfFeatureMap::new(3, 4000, gamma, 11).unwrap();
    let points = [[0.0, 0.0, 0.0], [0.3, -0.2, 0.5], [1.0, 1.0, -1.0], [-0.5, 0.1, 0.2]];
    let mut worst: f64 = 0.0;
    for a in &points {
        for b in &points {
            let za = map.map(a).unwrap();
            let zb = map.map(b).unwrap();
            let approx: f64 = za.iter().zip(&zb).map(|(x, y)| x * y).sum();
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            worst = worst.max((approx - (-gamma * d2).exp()).abs());
        }
    }
    assert!(worst < 0.06, "worst kernel error {worst}");
}
