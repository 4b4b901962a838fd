mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;

use common::{brute_force_dual, kkt_violation, knn_oracle, margins, n, pair_counting_auc};
use nodecount_core::bayes::{NaiveBayesConfig, NaiveBayesModel, PriorKind};
use nodecount_core::eta::{weighted_error, ErrorMatrix, PredictionDistribution};
use nodecount_core::knn::KnnModel;
use nodecount_core::metrics::{confusion, f1_per_class, roc_binary, roc_curve, Averaging};
use nodecount_core::split::{kept_count, subsample_folds};
use nodecount_core::svm::{solve, BinarySvmModel, Kernel, OvoSvmModel, SolverOptions, SvmConfig};
use nodecount_core::synth::histogram_overlap;
use nodecount_core::{
    cross_validate, generate, make_folds, read_csv, subsample, write_csv, Channel, ClassifierSpec,
    Dataset, FeatureSubset, GeneratorConfig, LabeledExample, NodeCount, Samples, SubsampleSpec,
    TimeOfDay,
};

fn example_strategy() -> impl Strategy<Value = LabeledExample> {
    (
        0.01f64..500.0,
        prop::sample::select(vec![0u8, 5, 10, 15, 20]),
        prop::sample::select(vec![1u8, 5, 10]),
        prop::sample::select(Channel::ALL.to_vec()),
        prop::sample::select(TimeOfDay::ALL.to_vec()),
        1u8..=4,
    )
        .prop_map(|(eta, p, d, ch, tod, label)| {
            LabeledExample::new(eta, p, d, ch, tod, n(label)).unwrap()
        })
}

/// Dataset with at least `min_per_class` rows in every class.
fn dataset_strategy(min_per_class: usize, max_extra: usize) -> impl Strategy<Value = Dataset> {
    (
        prop::collection::vec(example_strategy(), 4 * min_per_class),
        prop::collection::vec(example_strategy(), 0..max_extra),
    )
        .prop_map(move |(mut base, extra)| {
            for (i, e) in base.iter_mut().enumerate() {
                e.label = NodeCount::from_index(i % 4);
            }
            base.extend(extra);
            Dataset::new(base, FeatureSubset::EtaPowerDistance).unwrap()
        })
}

fn labeled_points(
    max: usize,
    dim: usize,
) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<NodeCount>)> {
    prop::collection::vec(
        (prop::collection::vec(-5.0f64..5.0, dim), 0usize..4),
        1..max,
    )
    .prop_map(|rows| {
        let labels = rows.iter().map(|r| NodeCount::from_index(r.1)).collect();
        (rows.into_iter().map(|r| r.0).collect(), labels)
    })
}

fn samples(rows: Vec<Vec<f64>>, labels: Vec<NodeCount>) -> Samples {
    let dim = rows[0].len();
    Samples::new(
        FeatureSubset::EtaPowerDistance.features()[..dim].to_vec(),
        rows,
        labels,
    )
    .unwrap()
}

fn binary_problem() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=3).prop_flat_map(|dim| {
        prop::collection::vec(
            (prop::collection::vec(-2.0f64..2.0, dim), any::<bool>()),
            2..=7,
        )
        .prop_map(|rows| {
            let mut y: Vec<f64> = rows.iter().map(|r| if r.1 { 1.0 } else { -1.0 }).collect();
            y[0] = 1.0;
            y[1] = -1.0;
            (rows.into_iter().map(|r| r.0).collect(), y)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn folds_partition_and_stratify(ds in dataset_strategy(5, 60), seed in any::<u64>()) {
        let plan = make_folds(&ds, 5, seed).unwrap();
        let labels = ds.labels();
        let mut seen = vec![0; ds.len()];
        for fold in 0..5 {
            for i in plan.test_indices(fold) {
                seen[i] += 1;
            }
            let train = plan.train_indices(fold);
            let test = plan.test_indices(fold);
            prop_assert_eq!(train.len() + test.len(), ds.len());
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        for k in NodeCount::ALL {
            let sizes: Vec<usize> = (0..5)
                .map(|f| plan.test_indices(f).iter().filter(|&&i| labels[i] == k).count())
                .collect();
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "class {} fold sizes {:?}", k, sizes);
        }
        prop_assert_eq!(make_folds(&ds, 5, seed).unwrap(), plan);
    }

    #[test]
    fn subsample_counts_and_monotone(
        ds in dataset_strategy(3, 80),
        small in prop::array::uniform4(0.05f64..1.0),
        bump in prop::array::uniform4(0.0f64..1.0),
        seed in any::<u64>(),
    ) {
        let large: Vec<f64> = small.iter().zip(bump).map(|(s, b)| (s + b * (1.0 - s)).min(1.0)).collect();
        let a = SubsampleSpec::new(small, seed).unwrap();
        let b = SubsampleSpec::new([large[0], large[1], large[2], large[3]], seed).unwrap();
        let sa = subsample(&ds, &a).unwrap();
        let sb = subsample(&ds, &b).unwrap();
        let counts = ds.class_counts();
        for k in 0..4 {
            prop_assert_eq!(sa.class_counts()[k], kept_count(counts[k], small[k]).min(counts[k]));
        }
        // every row kept at the smaller fraction is kept at the larger one
        for e in sa.examples() {
            let in_a = sa.examples().iter().filter(|x| *x == e).count();
            let in_b = sb.examples().iter().filter(|x| *x == e).count();
            prop_assert!(in_b >= in_a);
        }
        let full = SubsampleSpec::new([1.0; 4], seed).unwrap();
        prop_assert_eq!(subsample(&ds, &full).unwrap(), ds.clone());
    }

    #[test]
    fn per_fold_subsample_keeps_folds(ds in dataset_strategy(5, 60), seed in any::<u64>()) {
        let plan = make_folds(&ds, 5, seed).unwrap();
        let spec = SubsampleSpec::from_percentages("10-20-50-100", seed).unwrap();
        let (kept, restricted) = subsample_folds(&ds, &plan, &spec).unwrap();
        prop_assert_eq!(kept.len(), restricted.assignment.len());
        for (pos, &i) in kept.iter().enumerate() {
            prop_assert_eq!(restricted.assignment[pos], plan.assignment[i]);
        }
        prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn projection_keeps_eta_column(ds in dataset_strategy(1, 30)) {
        for subset in FeatureSubset::ALL {
            let p = ds.project(subset);
            prop_assert_eq!(p.len(), ds.len());
            prop_assert_eq!(p.dimension(), subset.dimension());
            for i in 0..ds.len() {
                prop_assert_eq!(p.feature_row(i)[0], ds.examples()[i].eta_s);
            }
        }
    }

    #[test]
    fn csv_round_trip(ds in dataset_strategy(1, 30)) {
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.examples(), ds.examples());
    }

    #[test]
    fn nb_posterior_is_normalized_and_ml_under_uniform_prior(
        (rows, labels) in labeled_points(60, 2),
        probe in prop::collection::vec(-6.0f64..6.0, 2),
    ) {
        let mut rows = rows;
        let mut labels = labels;
        // two rows per class so every variance is estimable
        for k in 0..4 {
            rows.push(vec![k as f64, -(k as f64)]);
            rows.push(vec![k as f64 + 0.5, 1.0 - k as f64]);
            labels.extend([NodeCount::from_index(k); 2]);
        }
        let train = samples(rows, labels);
        for prior in [PriorKind::Uniform, PriorKind::Empirical] {
            let config = NaiveBayesConfig { prior, conditioning: false, ..Default::default() };
            let model = NaiveBayesModel::fit(&train, config).unwrap();
            let post = model.posterior(&probe).unwrap();
            let total: f64 = post.probabilities.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(post.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
            if prior == PriorKind::Uniform {
                prop_assert_eq!(post.map_class(), post.ml_class());
            }
        }
    }

    #[test]
    fn nb_matches_gaussian_oracle(
        mu in prop::array::uniform2(-5.0f64..5.0),
        var in prop::array::uniform2(0.1f64..4.0),
        prior in 0.05f64..0.95,
        x in -10.0f64..10.0,
    ) {
        let model = NaiveBayesModel::from_gaussian_params(&[
            (n(1), mu[0], var[0], prior),
            (n(2), mu[1], var[1], 1.0 - prior),
        ]).unwrap();
        let joint: Vec<f64> = (0..2).map(|k| {
            let p = if k == 0 { prior } else { 1.0 - prior };
            p.ln() - 0.5 * (2.0 * std::f64::consts::PI * var[k]).ln() - (x - mu[k]).powi(2) / (2.0 * var[k])
        }).collect();
        let post = model.posterior(&[x]).unwrap();
        for k in 0..2 {
            prop_assert!((post.log_joint[k] - joint[k]).abs() <= 1e-9 * joint[k].abs().max(1.0));
        }
        // likelihood ratio is monotone in x for equal variances
        if (var[0] - var[1]).abs() < 1e-12 && mu[0] < mu[1] {
            let further = model.posterior(&[x + 1.0]).unwrap();
            prop_assert!(further.probabilities[1] >= post.probabilities[1]);
        }
    }

    #[test]
    fn nb_prior_scaling_leaves_argmax(
        mu in prop::array::uniform3(-5.0f64..5.0),
        priors in prop::array::uniform3(0.05f64..1.0),
        scale in 0.01f64..100.0,
        x in -8.0f64..8.0,
    ) {
        let params: Vec<_> = (0..3).map(|k| (NodeCount::from_index(k), mu[k], 1.0, priors[k])).collect();
        let scaled: Vec<_> = params.iter().map(|&(c, m, v, p)| (c, m, v, p * scale)).collect();
        let a = NaiveBayesModel::from_gaussian_params(&params).unwrap();
        let b = NaiveBayesModel::from_gaussian_params(&scaled).unwrap();
        prop_assert_eq!(a.predict(&[x]).unwrap(), b.predict(&[x]).unwrap());
    }

    #[test]
    fn svm_dual_is_optimal_and_kkt(
        (x, y) in binary_problem(),
        c in prop::sample::select(vec![0.1, 1.0, 10.0]),
        rbf in any::<bool>(),
    ) {
        let kernel = if rbf { Kernel::Rbf { gamma: 0.7 } } else { Kernel::Linear };
        let sol = solve(&x, &y, &vec![c; y.len()], kernel, SolverOptions::default());
        prop_assert!(sol.converged);
        prop_assert!(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        prop_assert!(balance.abs() < 1e-9);
        let (oracle, _) = brute_force_dual(&x, &y, c, kernel);
        prop_assert!((sol.objective - oracle).abs() <= 1e-3 * oracle.abs().max(1e-12));
        let kkt = kkt_violation(&margins(&x, &y, &sol.alpha, sol.bias, kernel), &sol.alpha, c);
        prop_assert!(kkt <= 1e-3, "violation {}", kkt);
    }

    #[test]
    fn linear_weights_reproduce_decision_values(
        (rows, labels) in labeled_points(40, 2),
        probe in prop::collection::vec(-5.0f64..5.0, 2),
    ) {
        let mut rows = rows;
        let mut labels = labels;
        rows.push(vec![-4.0, 0.0]);
        labels.push(n(1));
        rows.push(vec![4.0, 0.0]);
        labels.push(n(2));
        let train = samples(rows, labels);
        let model = BinarySvmModel::fit(&train, n(2), n(1), Kernel::Linear, 1.0, &[1.0; 4], SolverOptions::default()).unwrap();
        let w = model.weight_vector().unwrap();
        let explicit = w.iter().zip(&probe).map(|(a, b)| a * b).sum::<f64>() + model.bias;
        prop_assert!((explicit - model.decision_value(&probe).unwrap()).abs() < 1e-9);
        // only multipliers above zero are kept as support vectors
        prop_assert!(model.support_vectors.len() <= train.len());
        prop_assert!(model.coefficients.iter().all(|&c| c != 0.0 && c.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn rbf_gram_is_positive_semidefinite(
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..12),
        gamma in 0.05f64..3.0,
    ) {
        let k = Kernel::Rbf { gamma };
        let m = rows.len();
        let gram = DMatrix::from_fn(m, m, |i, j| k.eval(&rows[i], &rows[j]));
        let eig = gram.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&e| e > -1e-9), "eigenvalues {:?}", eig);
    }

    #[test]
    fn ovo_votes_sum_to_six(
        (rows, labels) in labeled_points(40, 2),
        probe in prop::collection::vec(-5.0f64..5.0, 2),
    ) {
        let mut rows = rows;
        let mut labels = labels;
        for k in 0..4 {
            rows.push(vec![k as f64, 0.0]);
            labels.push(NodeCount::from_index(k));
        }
        let model = OvoSvmModel::fit(&samples(rows, labels), SvmConfig::default()).unwrap();
        let p = model.predict(&probe).unwrap();
        prop_assert_eq!(p.votes.iter().sum::<u32>(), 6);
        let top = *p.votes.iter().max().unwrap();
        prop_assert_eq!(p.votes[p.class.index()], top);
        for k in 0..4 {
            prop_assert!(p.scores[k] > f64::from(p.votes[k]) && p.scores[k] < f64::from(p.votes[k]) + 1.0);
        }
    }

    #[test]
    fn knn_matches_full_sort(
        (rows, labels) in labeled_points(80, 3),
        probe in prop::collection::vec(-5.0f64..5.0, 3),
        k_raw in 1usize..20,
    ) {
        let k = k_raw.min(rows.len());
        let model = KnnModel::fit(&samples(rows.clone(), labels.clone()), k).unwrap();
        prop_assert_eq!(model.predict(&probe).unwrap().class, knn_oracle(&rows, &labels, k, &probe));
    }

    #[test]
    fn knn_one_recovers_distinct_training_points((rows, labels) in labeled_points(40, 2)) {
        let model = KnnModel::fit(&samples(rows.clone(), labels.clone()), 1).unwrap();
        for r in &rows {
            let first = rows.iter().position(|q| q == r).unwrap();
            prop_assert_eq!(model.predict(r).unwrap().class, labels[first]);
        }
    }

    #[test]
    fn knn_permutation_stable_without_ties(
        (rows, labels) in labeled_points(50, 2),
        probe in prop::collection::vec(-5.0f64..5.0, 2),
        k_raw in 1usize..8,
        rotate in 0usize..50,
    ) {
        let k = k_raw.min(rows.len());
        let model = KnnModel::fit(&samples(rows.clone(), labels.clone()), k).unwrap();
        let mut pr = rows.clone();
        let mut pl = labels.clone();
        let r = rotate % rows.len();
        pr.rotate_left(r);
        pl.rotate_left(r);
        let permuted = KnnModel::fit(&samples(pr, pl), k).unwrap();
        let mut all: Vec<f64> = rows.iter().map(|r| r.iter().zip(&probe).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()).collect();
        all.sort_by(|a, b| a.total_cmp(b));
        let tied = all.windows(2).any(|w| w[0] == w[1]);
        if !tied {
            let a = model.predict(&probe).unwrap();
            let b = permuted.predict(&probe).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn f1_is_bounded(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..200)) {
        let truth: Vec<NodeCount> = pairs.iter().map(|p| NodeCount::from_index(p.0)).collect();
        let pred: Vec<NodeCount> = pairs.iter().map(|p| NodeCount::from_index(p.1)).collect();
        let cm = confusion(&truth, &pred).unwrap();
        prop_assert_eq!(cm.total() as usize, pairs.len());
        let report = f1_per_class(&cm);
        for c in report.per_class {
            prop_assert!((0.0..=1.0).contains(&c.f1));
            prop_assert!(c.f1 <= c.precision.max(c.recall) + 1e-12);
            prop_assert!(c.f1 + 1e-12 >= c.precision.min(c.recall));
        }
    }

    #[test]
    fn roc_is_monotone_and_auc_counts_pairs(
        data in prop::collection::vec((any::<bool>(), 0u8..12), 2..150),
    ) {
        let mut positive: Vec<bool> = data.iter().map(|d| d.0).collect();
        positive[0] = true;
        positive[1] = false;
        let scores: Vec<f64> = data.iter().map(|d| f64::from(d.1)).collect();
        let roc = roc_binary(&positive, &scores).unwrap();
        prop_assert_eq!(roc.points[0].fpr, 0.0);
        prop_assert_eq!(roc.points[0].tpr, 0.0);
        let last = roc.points.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        prop_assert!(roc.points.windows(2).all(|w| w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr));
        prop_assert!((roc.auc - pair_counting_auc(&positive, &scores)).abs() <= 1e-9);
        // strictly increasing transforms leave the curve alone
        let warped: Vec<f64> = scores.iter().map(|s| (s * 0.3).exp() - 7.0).collect();
        let roc2 = roc_binary(&positive, &warped).unwrap();
        prop_assert_eq!(roc.auc, roc2.auc);
        let pts = |r: &nodecount_core::metrics::RocCurve| r.points.iter().map(|p| (p.fpr, p.tpr)).collect::<Vec<_>>();
        prop_assert_eq!(pts(&roc), pts(&roc2));
    }

    #[test]
    fn micro_roc_pools_every_class(
        rows in prop::collection::vec((0usize..4, prop::array::uniform4(0.0f64..1.0)), 2..60),
    ) {
        let mut truth: Vec<NodeCount> = rows.iter().map(|r| NodeCount::from_index(r.0)).collect();
        truth[0] = n(1);
        truth[1] = n(2);
        let scores: Vec<[f64; 4]> = rows.iter().map(|r| r.1).collect();
        let roc = roc_curve(&truth, &scores, Averaging::Micro).unwrap();
        let positive: Vec<bool> = truth.iter().flat_map(|t| (0..4).map(move |k| t.index() == k)).collect();
        let pooled: Vec<f64> = scores.iter().flatten().copied().collect();
        prop_assert!((roc.auc - pair_counting_auc(&positive, &pooled)).abs() <= 1e-9);
    }

    #[test]
    fn delta_is_a_convex_combination(
        err in prop::array::uniform4(prop::array::uniform4(0.0f64..50.0)),
        raw in prop::array::uniform4(prop::array::uniform4(0.01f64..1.0)),
    ) {
        let p = raw.map(|row| {
            let s: f64 = row.iter().sum();
            row.map(|v| v / s)
        });
        let dist = PredictionDistribution::new(p).unwrap();
        let errors = ErrorMatrix::new(err, None).unwrap();
        let d = weighted_error(&errors, &dist);
        for r in 0..4 {
            let lo = err[r].iter().copied().fold(f64::INFINITY, f64::min);
            let hi = err[r].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(d.delta[r] >= lo - 1e-9 && d.delta[r] <= hi + 1e-9);
        }
        let doubled = ErrorMatrix::new(err.map(|row| row.map(|v| 2.0 * v)), None).unwrap();
        let d2 = weighted_error(&doubled, &dist);
        for r in 0..4 {
            prop_assert!((d2.delta[r] - 2.0 * d.delta[r]).abs() < 1e-9);
        }
        let diag = weighted_error(&errors, &PredictionDistribution::identity());
        prop_assert_eq!(diag.delta, errors.diagonal());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn generator_is_balanced_and_monotone(seed in any::<u64>(), reps in 1usize..4) {
        let config = GeneratorConfig { seed, repetitions: reps, ..Default::default() };
        let ds = generate(&config).unwrap();
        prop_assert_eq!(ds.len(), 540 * reps);
        prop_assert_eq!(ds.class_counts(), [135 * reps; 4]);
        prop_assert_eq!(generate(&config).unwrap(), ds.clone());
        for p in 0..5 {
            for d in 0..3 {
                let means: Vec<f64> = NodeCount::ALL.iter().map(|&k| config.mean_free_eta(p, d, k)).collect();
                prop_assert!(means.windows(2).all(|w| w[1] > w[0]));
                if d > 0 {
                    prop_assert!(config.mean_free_eta(p, d, n(2)) >= config.mean_free_eta(p, d - 1, n(2)));
                }
                if p > 0 {
                    prop_assert!(config.mean_free_eta(p, d, n(2)) <= config.mean_free_eta(p - 1, d, n(2)));
                }
            }
        }
    }
}

/// Bhattacharyya coefficient of two samples over a shared equal-width binning.
fn overlap_oracle(a: &[f64], b: &[f64]) -> f64 {
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = ((a.len() + b.len()) as f64).sqrt().ceil().max(2.0) as usize;
    let density = |xs: &[f64]| {
        let mut h = vec![0.0; bins];
        for &v in xs {
            let i = ((v - lo) / (hi - lo) * bins as f64).floor() as usize;
            h[i.min(bins - 1)] += 1.0 / xs.len() as f64;
        }
        h
    };
    density(a)
        .iter()
        .zip(density(b))
        .map(|(p, q)| (p * q).sqrt())
        .sum()
}

#[test]
fn generator_overlap_ordering() {
    let ds = generate(&GeneratorConfig::default()).unwrap();
    let class = |k: u8| -> Vec<f64> {
        ds.examples()
            .iter()
            .filter(|e| e.label == n(k))
            .map(|e| e.eta_s)
            .collect()
    };
    let o12 = overlap_oracle(&class(1), &class(2));
    let o34 = overlap_oracle(&class(3), &class(4));
    assert!(o34 > o12, "overlap(3,4) = {o34}, overlap(1,2) = {o12}");
    assert!((histogram_overlap(&class(3), &class(4)) - o34).abs() < 1e-9);
}

#[test]
fn zero_noise_has_disjoint_cells() {
    let config = GeneratorConfig {
        noise_sigma: [[0.0; 3]; 3],
        repetitions: 1,
        ..Default::default()
    };
    let report = nodecount_core::calibration_report(&generate(&config).unwrap()).unwrap();
    assert!(report.pairs.iter().all(|p| p.within_cell == 0.0));
}

#[test]
fn cross_validation_scores_every_example_once() {
    let config = GeneratorConfig {
        repetitions: 1,
        ..Default::default()
    };
    let ds = generate(&config).unwrap().project(FeatureSubset::EtaOnly);
    let plan = make_folds(&ds, 5, 3).unwrap();
    for spec in ClassifierSpec::standard_grid() {
        let cv = cross_validate(&ds, &plan, spec).unwrap();
        assert!(cv.evaluations.iter().all(|&e| e == 1));
        assert_eq!(cv.confusion.total() as usize, ds.len());
    }
}
