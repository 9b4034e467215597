//! Acceptance checks. Each check prints one PASS/FAIL line; the process exits non-zero if
//! any check fails. Pass check numbers as arguments to run a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use falls_core::blogit::{fit_map, sigmoid, softplus, LogitFit, LogitModel, LogitProblem, GRADIENT_TOLERANCE};
use falls_core::cohort::{build_view, generate_synthetic, FeatureView, Horizon, ItemSchema, Scenario, Scheme};
use falls_core::dtree::{best_split, SplitCriterion, TreeConfig};
use falls_core::eval::stats::normal_sf;
use falls_core::eval::{
    auc_concordance, auc_trapezoid, chi_square_2x2, confusion_at, mann_whitney, roc_and_auc, ConfusionCounts, ScoredRow,
};
use falls_core::eval::{write_report_csv, write_roc_csv};
use falls_core::methods::{Method, MethodConfig};
use falls_core::msearch::{
    bma_average, bma_predict, forward_select, run_scheme_suite, weights_from_lml, write_grid_csv, write_selected_csv,
    BmaMember, ModelAverage, SuiteConfig, SuiteReport, Weighting,
};
use falls_core::rforest::ForestConfig;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = fn() -> Outcome;

fn main() {
    let checks: [(&str, u64, Check); 10] = [
        ("split oracle", 5, split_oracle),
        ("evidence oracle", 30, evidence_oracle),
        ("gradient check", 60, gradient_check),
        ("AUC identity", 60, auc_identity),
        ("confusion identities", 60, confusion_identities),
        ("forward-selection recovery", 120, selection_recovery),
        ("BMA convexity and normalization", 60, bma_convexity),
        ("scheme ranking fidelity", 600, scheme_ranking),
        ("statistical test oracles", 60, stats_oracles),
        ("grid determinism", 600, grid_determinism),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, limit, check)) in checks.iter().enumerate() {
        let number = k + 1;
        if !wanted.is_empty() && !wanted.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let limit = Duration::from_secs(*limit);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= limit, o.detail),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "[{number:>2}] {name}: {} ({detail}; {:.2}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}

fn view_from(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> FeatureView {
    let p = rows.first().map_or(0, Vec::len);
    FeatureView::new((0..p).map(|j| format!("x{j}")).collect(), rows, labels).unwrap()
}

// ---------------------------------------------------------------------------------------

/// Gini as `2 p q`, computed from index lists.
fn gini_pairs(labels: &[bool], idx: &[usize]) -> f64 {
    let n = idx.len() as f64;
    let pos = idx.iter().filter(|&&i| labels[i]).count() as f64;
    2.0 * (pos / n) * ((n - pos) / n)
}

/// Enumerates every feature and every cut between adjacent distinct observed values.
fn split_enumeration(rows: &[Vec<f64>], labels: &[bool], min_node: usize) -> Option<(f64, usize, f64)> {
    let n = rows.len();
    let all: Vec<usize> = (0..n).collect();
    let parent = gini_pairs(labels, &all);
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..rows[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let left: Vec<usize> = all.iter().copied().filter(|&i| rows[i][f] <= w[0]).collect();
            let right: Vec<usize> = all.iter().copied().filter(|&i| rows[i][f] > w[0]).collect();
            if left.len() < min_node || right.len() < min_node {
                continue;
            }
            let d = (parent
                - left.len() as f64 / n as f64 * gini_pairs(labels, &left)
                - right.len() as f64 / n as f64 * gini_pairs(labels, &right))
            .max(0.0);
            let t = (w[0] + w[1]) / 2.0;
            let replace = match best {
                None => true,
                Some((bd, bf, bt)) => d > bd + 1e-12 || (d >= bd - 1e-12 && (f, t) < (bf, bt)),
            };
            if replace {
                best = Some((d, f, t));
            }
        }
    }
    best
}

fn split_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5117);
    let mut mismatches = 0;
    let mut max_diff: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=12);
        let p = rng.random_range(1..=3);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..p).map(|_| f64::from(rng.random_range(0u8..=4))).collect()).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let min_node = rng.random_range(1..=3);
        let config = TreeConfig {
            min_node_size: min_node,
            min_impurity_decrease: 0.0,
            max_depth: 5,
            criterion: SplitCriterion::Gini,
        };
        let got = best_split(&rows, &labels, &(0..p).collect::<Vec<_>>(), &config);
        let want = split_enumeration(&rows, &labels, min_node);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some((d, f, t))) => {
                max_diff = max_diff.max((g.decrease - d).abs());
                if (g.decrease - d).abs() > 1e-12 || g.rule.feature != f || g.rule.threshold != t {
                    mismatches += 1;
                }
            }
            _ => mismatches += 1,
        }
    }
    outcome(mismatches == 0, format!("200 instances, {mismatches} mismatches, max |delta| {max_diff:.1e}"))
}

// ---------------------------------------------------------------------------------------

const V0: f64 = 1000.0;

fn log_joint_2d(xs: &[f64], ys: &[bool], b0: f64, b1: f64) -> f64 {
    let ll: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let eta = b0 + b1 * x;
            if y {
                eta - softplus(eta)
            } else {
                -softplus(eta)
            }
        })
        .sum();
    ll - (b0 * b0 + b1 * b1) / (2.0 * V0) - (2.0 * std::f64::consts::PI * V0).ln()
}

fn log_joint_1d(ys: &[bool], b: f64) -> f64 {
    let pos = ys.iter().filter(|&&y| y).count() as f64;
    pos * b - ys.len() as f64 * softplus(b) - b * b / (2.0 * V0) - 0.5 * (2.0 * std::f64::consts::PI * V0).ln()
}

fn simpson_weights(m: usize) -> Vec<f64> {
    (0..=m)
        .map(|k| {
            if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            }
        })
        .collect()
}

/// Log evidence by Simpson's rule over the region where the integrand is within e^-40 of
/// its peak, located by stepping outward from a coarse maximum.
fn quad_1d(ys: &[bool]) -> f64 {
    let f = |b: f64| log_joint_1d(ys, b);
    let mut peak_b = 0.0;
    let mut peak = f64::NEG_INFINITY;
    for k in -8000..=8000 {
        let b = f64::from(k) * 0.01;
        if f(b) > peak {
            peak = f(b);
            peak_b = b;
        }
    }
    let mut lo = peak_b;
    while f(lo) > peak - 40.0 {
        lo -= 0.5;
    }
    let mut hi = peak_b;
    while f(hi) > peak - 40.0 {
        hi += 0.5;
    }
    let m = 40_000;
    let h = (hi - lo) / m as f64;
    let s: f64 = simpson_weights(m).iter().enumerate().map(|(k, w)| w * (f(lo + k as f64 * h) - peak).exp()).sum();
    peak + (s * h / 3.0).ln()
}

/// Log evidence by a coarse scan (widened until the e^-30 region is interior) followed by
/// tensor Simpson on the bounding box of that region.
fn quad_2d(xs: &[f64], ys: &[bool]) -> f64 {
    let f = |a: f64, b: f64| log_joint_2d(xs, ys, a, b);
    let half = 160i32;
    let mut reach = 40.0;
    let (peak, a_lo, a_hi, b_lo, b_hi) = loop {
        let step = reach / f64::from(half);
        let grid = |k: i32| f64::from(k) * step;
        let mut values = Vec::with_capacity(((2 * half + 1) * (2 * half + 1)) as usize);
        for i in -half..=half {
            for j in -half..=half {
                values.push((grid(i), grid(j), f(grid(i), grid(j))));
            }
        }
        let peak = values.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
        let (mut a_lo, mut a_hi, mut b_lo, mut b_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(a, b, _) in values.iter().filter(|v| v.2 > peak - 30.0) {
            a_lo = a_lo.min(a);
            a_hi = a_hi.max(a);
            b_lo = b_lo.min(b);
            b_hi = b_hi.max(b);
        }
        let pad = 3.0 * step;
        let inside = a_lo - pad > -reach && a_hi + pad < reach && b_lo - pad > -reach && b_hi + pad < reach;
        if inside {
            break (peak, a_lo - pad, a_hi + pad, b_lo - pad, b_hi + pad);
        }
        reach *= 2.0;
    };
    let m = 800;
    let (ha, hb) = ((a_hi - a_lo) / m as f64, (b_hi - b_lo) / m as f64);
    let w = simpson_weights(m);
    let mut s = 0.0;
    for i in 0..=m {
        let a = a_lo + i as f64 * ha;
        for j in 0..=m {
            s += w[i] * w[j] * (f(a, b_lo + j as f64 * hb) - peak).exp();
        }
    }
    peak + (s * ha * hb / 9.0).ln()
}

fn evidence_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE71D);
    let mut worst_1d: f64 = 0.0;
    let mut worst_2d: f64 = 0.0;
    for _ in 0..50 {
        let ys: Vec<bool> = loop {
            let n = rng.random_range(2..=8);
            let ys: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            if ys.iter().any(|&y| y) && ys.iter().any(|&y| !y) {
                break ys;
            }
        };
        let v = view_from(vec![vec![]; ys.len()], ys.clone());
        let fit = fit_map(&v, &LogitModel::intercept_only(V0)).unwrap();
        worst_1d = worst_1d.max((fit.lml - quad_1d(&ys)).abs());
    }
    for _ in 0..20 {
        let (xs, ys) = loop {
            let n = rng.random_range(6..=8);
            let xs: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0u8..=4))).collect();
            let ys: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let pos: Vec<f64> = xs.iter().zip(&ys).filter(|(_, &y)| y).map(|(&x, _)| x).collect();
            let neg: Vec<f64> = xs.iter().zip(&ys).filter(|(_, &y)| !y).map(|(&x, _)| x).collect();
            if pos.len() < 2 || neg.len() < 2 {
                continue;
            }
            let max = |v: &[f64]| v.iter().copied().fold(f64::MIN, f64::max);
            let min = |v: &[f64]| v.iter().copied().fold(f64::MAX, f64::min);
            if max(&neg) > min(&pos) && max(&pos) > min(&neg) {
                break (xs, ys);
            }
        };
        let v = view_from(xs.iter().map(|&x| vec![x]).collect(), ys.clone());
        let fit = fit_map(&v, &LogitModel::new(vec!["x0".into()], V0)).unwrap();
        worst_2d = worst_2d.max((fit.lml - quad_2d(&xs, &ys)).abs());
    }
    outcome(
        worst_1d < 0.1 && worst_2d < 0.1,
        format!("max |error| intercept-only {worst_1d:.4}, two-parameter {worst_2d:.4} nats"),
    )
}

// ---------------------------------------------------------------------------------------

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6AD);
    let mut worst_norm: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    let mut unconverged = 0;
    for _ in 0..50 {
        let n = rng.random_range(10..=40);
        let p = rng.random_range(1..=3);
        let truth: Vec<f64> = (0..=p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..p).map(|_| f64::from(rng.random_range(0u8..=4))).collect()).collect();
        let labels: Vec<bool> = rows
            .iter()
            .map(|r| {
                let eta = truth[0] + r.iter().zip(&truth[1..]).map(|(x, b)| x * b).sum::<f64>()
                    - 2.0 * truth[1..].iter().sum::<f64>();
                rng.random::<f64>() < sigmoid(eta)
            })
            .collect();
        let v = view_from(rows.clone(), labels.clone());
        let names = v.feature_names().to_vec();
        let fit = fit_map(&v, &LogitModel::new(names, V0)).unwrap();
        let problem = LogitProblem::from_rows(&rows, &labels, V0).unwrap();
        if !fit.converged {
            unconverged += 1;
        }
        worst_norm = worst_norm.max(problem.gradient(&fit.beta_mode).amax());
        let beta = DVector::from_iterator(p + 1, (0..=p).map(|_| rng.sample::<f64, _>(StandardNormal) * 0.5));
        let g = problem.gradient(&beta);
        let h = 1e-5;
        let fd = DVector::from_iterator(
            p + 1,
            (0..=p).map(|j| {
                let mut up = beta.clone();
                let mut down = beta.clone();
                up[j] += h;
                down[j] -= h;
                (problem.log_joint(&up) - problem.log_joint(&down)) / (2.0 * h)
            }),
        );
        worst_rel = worst_rel.max((&fd - &g).amax() / g.amax().max(1e-8));
    }
    outcome(
        unconverged == 0 && worst_norm < GRADIENT_TOLERANCE && worst_rel < 1e-4,
        format!("50 instances, {unconverged} unconverged, max |grad| at mode {worst_norm:.1e}, max relative FD error {worst_rel:.1e}"),
    )
}

// ---------------------------------------------------------------------------------------

fn auc_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA0C);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 100 {
        let n = rng.random_range(4..=40);
        let scores: Vec<ScoredRow> = (0..n)
            .map(|i| ScoredRow::new(format!("s{i}"), rng.random(), f64::from(rng.random_range(0u8..=10)) / 10.0))
            .collect();
        let Ok(curve) = roc_and_auc(&scores) else { continue };
        worst = worst.max((auc_concordance(&scores).unwrap() - auc_trapezoid(&curve)).abs());
        done += 1;
    }
    outcome(worst <= 1e-12, format!("100 score sets, max |concordance - trapezoid| {worst:.1e}"))
}

// ---------------------------------------------------------------------------------------

fn confusion_identities() -> Outcome {
    let mut checked = 0u64;
    let mut violations = 0u64;
    let mut scores = Vec::with_capacity(60);
    for tp in 0..=60u64 {
        for fp in 0..=60 - tp {
            for tn in 0..=60 - tp - fp {
                for fn_ in 0..=60 - tp - fp - tn {
                    scores.clear();
                    let mut push = |count: u64, label: bool, score: f64| {
                        for _ in 0..count {
                            scores.push(ScoredRow { id: String::new(), label, score });
                        }
                    };
                    push(tp, true, 0.9);
                    push(fn_, true, 0.1);
                    push(fp, false, 0.9);
                    push(tn, false, 0.1);
                    let c = confusion_at(&scores, 0.5);
                    let m = c.metrics();
                    let total = tp + fp + tn + fn_;
                    let acc = c.accuracy_ratio();
                    let sens = c.sensitivity_ratio();
                    let spec = c.specificity_ratio();
                    let exact = |v: f64, num: u64, den: u64| {
                        if den == 0 {
                            v.is_nan()
                        } else {
                            v == num as f64 / den as f64 && (v * den as f64).round() as u64 == num
                        }
                    };
                    let ok = c == ConfusionCounts { tp, fp, tn, fn_ }
                        && acc.num == tp + tn
                        && acc.den == total
                        && sens.num == tp
                        && sens.den == tp + fn_
                        && spec.num == tn
                        && spec.den == tn + fp
                        && exact(m.accuracy, tp + tn, total)
                        && exact(m.sensitivity, tp, tp + fn_)
                        && exact(m.specificity, tn, tn + fp);
                    if !ok {
                        violations += 1;
                    }
                    checked += 1;
                }
            }
        }
    }
    outcome(violations == 0, format!("{checked} tuples, {violations} violations"))
}

// ---------------------------------------------------------------------------------------

/// Probabilities of scores 0..=4 for the generator's default item distribution.
fn score_distribution() -> [f64; 5] {
    let (mean, sd) = (0.4 * 4.0, 0.3 * 4.0);
    let cdf = |v: f64| 1.0 - normal_sf((v - mean) / sd);
    let mut p = [0.0; 5];
    for (k, slot) in p.iter_mut().enumerate() {
        let lo = if k == 0 { 0.0 } else { cdf(k as f64 - 0.5) };
        let hi = if k == 4 { 1.0 } else { cdf(k as f64 + 0.5) };
        *slot = hi - lo;
    }
    p
}

/// Slope `b` (with logit `b (x - 1.5)`) giving the requested Bayes accuracy.
fn slope_for_bayes_accuracy(target: f64) -> f64 {
    let dist = score_distribution();
    let acc = |b: f64| {
        dist.iter()
            .enumerate()
            .map(|(k, p)| {
                let q = sigmoid(b * (k as f64 - 1.5));
                p * q.max(1.0 - q)
            })
            .sum::<f64>()
    };
    let (mut lo, mut hi) = (0.0, 20.0);
    for _ in 0..100 {
        let mid = (lo + hi) / 2.0;
        if acc(mid) < target {
            lo = mid
        } else {
            hi = mid
        }
    }
    (lo + hi) / 2.0
}

fn selection_recovery() -> Outcome {
    let schema = ItemSchema::reference();
    let b = slope_for_bayes_accuracy(0.85);
    let causal =
        Scenario { intercept: -1.5 * b, coefficients: [(10u8, b)].into_iter().collect(), ..Scenario::default() };
    let null = Scenario::default();
    let mut recovered = 0;
    let mut empty = 0;
    for run in 0..100u64 {
        let d = generate_synthetic(&causal, &schema, 1000 + run).unwrap();
        let v = build_view(&d, Scheme::Updrs2, Horizon::M6).unwrap();
        assert_eq!(v.n_features(), 13);
        let trace = forward_select(&v, V0).unwrap();
        if trace.steps.first().is_some_and(|s| s.added_feature == "item_10") {
            recovered += 1;
        }
        let d = generate_synthetic(&null, &schema, 5000 + run).unwrap();
        let v = build_view(&d, Scheme::Updrs2, Horizon::M6).unwrap();
        if forward_select(&v, V0).unwrap().preferred_model.is_empty() {
            empty += 1;
        }
    }
    outcome(
        recovered >= 80 && empty >= 80,
        format!("slope {b:.3}: causal item first in {recovered}/100, intercept-only under noise in {empty}/100"),
    )
}

// ---------------------------------------------------------------------------------------

fn bma_convexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB3A);
    let mut worst_sum: f64 = 0.0;
    let mut outside = 0;
    for k in 0..100 {
        let p = 4;
        let avg = if k % 2 == 0 {
            let n = rng.random_range(15..=40);
            let rows: Vec<Vec<f64>> =
                (0..n).map(|_| (0..p).map(|_| f64::from(rng.random_range(0u8..=4))).collect()).collect();
            let labels: Vec<bool> = rows.iter().map(|r| rng.random::<f64>() < sigmoid(0.8 * (r[0] - 2.0))).collect();
            let v = view_from(rows, labels);
            let trace = forward_select(&v, V0).unwrap();
            bma_average(&trace, &v, Weighting::PosteriorSoftmax).unwrap()
        } else {
            let m = rng.random_range(1..=6);
            let lml: Vec<f64> = (0..m).map(|_| rng.random_range(-80.0..-5.0)).collect();
            let weighting = if k % 4 == 1 { Weighting::PosteriorSoftmax } else { Weighting::LmlRatio };
            let weights = weights_from_lml(&lml, weighting).unwrap();
            let members = weights
                .into_iter()
                .map(|weight| {
                    let columns: Vec<usize> = (0..p).filter(|_| rng.random::<bool>()).collect();
                    let features: Vec<String> = columns.iter().map(|c| format!("x{c}")).collect();
                    let beta: Vec<f64> = (0..=columns.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
                    let d = beta.len();
                    BmaMember {
                        fit: LogitFit::from_parts(features.clone(), beta, DMatrix::identity(d, d), 0.0),
                        features,
                        columns,
                        weight,
                    }
                })
                .collect();
            ModelAverage::new(members, weighting, p).unwrap()
        };
        worst_sum = worst_sum.max((avg.members.iter().map(|m| m.weight).sum::<f64>() - 1.0).abs());
        for _ in 0..20 {
            let row: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..5.0)).collect();
            let pred = bma_predict(&avg, &row).unwrap();
            let member_preds: Vec<f64> = avg
                .members
                .iter()
                .map(|m| {
                    falls_core::predict_prob(&m.fit, &m.columns.iter().map(|&c| row[c]).collect::<Vec<_>>()).unwrap()
                })
                .collect();
            let lo = member_preds.iter().copied().fold(f64::MAX, f64::min);
            let hi = member_preds.iter().copied().fold(f64::MIN, f64::max);
            if pred < lo - 1e-12 || pred > hi + 1e-12 {
                outside += 1;
            }
        }
    }
    outcome(
        worst_sum <= 1e-10 && outside == 0,
        format!("100 averages, max |sum w - 1| {worst_sum:.1e}, {outside} predictions outside the member hull"),
    )
}

// ---------------------------------------------------------------------------------------

/// Cohort with causal items in Parts II and III and pure-noise Parts I and IV.
fn calibrated_scenario() -> Scenario {
    Scenario::parse(
        "intercept = -5.1\nintercept_12m = -4.6\n\
         coef.item_13 = 0.8\ncoef.item_14 = 0.8\ncoef.item_29 = 0.8\ncoef.item_30 = 0.8\n\
         loading.item_13 = 0.9\nloading.item_14 = 0.9\nloading.item_29 = 0.9\nloading.item_30 = 0.9",
    )
    .unwrap()
}

const RANKING_TREES: usize = 100;

fn ranking_config(seed: u64) -> SuiteConfig {
    SuiteConfig {
        schemes: vec![Scheme::Updrs1, Scheme::Updrs2, Scheme::Updrs3, Scheme::Updrs4],
        method: MethodConfig {
            forest: ForestConfig { n_trees: RANKING_TREES, ..ForestConfig::default() },
            ..MethodConfig::default()
        },
        seed,
        ..SuiteConfig::default()
    }
}

fn parts_ranked(report: &SuiteReport) -> bool {
    let auc = |s: Scheme, h: Horizon, m: Method| match &report.cell(s, h, m).unwrap().outcome {
        Ok(o) => o.report.roc.auc,
        Err(_) => f64::NAN,
    };
    Horizon::ALL.iter().all(|&h| {
        Method::ALL.iter().all(|&m| {
            let good = auc(Scheme::Updrs2, h, m).min(auc(Scheme::Updrs3, h, m));
            let bad = auc(Scheme::Updrs1, h, m).max(auc(Scheme::Updrs4, h, m));
            good > bad
        })
    })
}

fn scheme_ranking() -> Outcome {
    let schema = ItemSchema::reference();
    let scenario = calibrated_scenario();
    let mut ranked = 0;
    for rep in 0..100u64 {
        let d = generate_synthetic(&scenario, &schema, 20_000 + rep).unwrap();
        let report = run_scheme_suite(&d, &ranking_config(rep));
        if parts_ranked(&report) {
            ranked += 1;
        }
    }
    outcome(
        ranked >= 70,
        format!(
            "parts II and III ranked above I and IV in {ranked}/100 replications ({RANKING_TREES} trees per forest)"
        ),
    )
}

// ---------------------------------------------------------------------------------------

/// Two-sided p by enumerating every assignment of the pooled values to the two groups.
fn mwu_enumeration(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let u_of = |mask: u32| {
        let mut u = 0.0;
        for i in (0..n).filter(|i| mask >> i & 1 == 1) {
            for j in (0..n).filter(|j| mask >> j & 1 == 0) {
                u += if pooled[i] > pooled[j] {
                    1.0
                } else if pooled[i] == pooled[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
        u
    };
    let observed = u_of((1u32 << a.len()) - 1);
    let centre = (a.len() * b.len()) as f64 / 2.0;
    let (mut total, mut extreme) = (0u32, 0u32);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        total += 1;
        if (u_of(mask) - centre).abs() >= (observed - centre).abs() - 1e-9 {
            extreme += 1;
        }
    }
    (observed, f64::from(extreme) / f64::from(total))
}

/// `P(chi2_1 > x) = 2 * integral_{sqrt x}^inf phi(s) ds`, by adaptive Simpson.
fn chi_tail_quadrature(x: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f((a + b) / 2.0) + f(b))
    }
    fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = (a + b) / 2.0;
        let (l, r) = (simpson(f, a, m), simpson(f, m, b));
        if depth == 0 || (l + r - whole).abs() < 15.0 * tol {
            return l + r + (l + r - whole) / 15.0;
        }
        adaptive(f, a, m, l, tol / 2.0, depth - 1) + adaptive(f, m, b, r, tol / 2.0, depth - 1)
    }
    let phi = |s: f64| (-s * s / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let (a, b) = (x.sqrt(), x.sqrt() + 40.0);
    2.0 * adaptive(&phi, a, b, simpson(&phi, a, b), 1e-13, 50)
}

fn stats_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x57A7);
    let mut u_mismatch = 0;
    let mut worst_p: f64 = 0.0;
    let mut cases = 0;
    for na in 1..=6 {
        for nb in 1..=6 {
            for _ in 0..5 {
                let a: Vec<f64> = (0..na).map(|_| f64::from(rng.random_range(0u8..6))).collect();
                let b: Vec<f64> = (0..nb).map(|_| f64::from(rng.random_range(0u8..6))).collect();
                let Ok(r) = mann_whitney(&a, &b) else { continue };
                let (u, p) = mwu_enumeration(&a, &b);
                if r.u != u {
                    u_mismatch += 1;
                }
                worst_p = worst_p.max((r.p_two_sided - p).abs());
                cases += 1;
            }
        }
    }
    let mut worst_stat: f64 = 0.0;
    let mut worst_chi_p: f64 = 0.0;
    let mut tables = vec![[[16u64, 22], [9, 4]], [[19, 19], [9, 4]], [[3, 2], [22, 24]], [[20, 0], [0, 20]]];
    while tables.len() < 60 {
        let t =
            [[rng.random_range(0..30), rng.random_range(0..30)], [rng.random_range(0..30), rng.random_range(0..30)]];
        tables.push(t);
    }
    for t in tables {
        let Ok(r) = chi_square_2x2(t) else { continue };
        let n: f64 = t.iter().flatten().sum::<u64>() as f64;
        let rows = [t[0][0] + t[0][1], t[1][0] + t[1][1]].map(|v| v as f64);
        let cols = [t[0][0] + t[1][0], t[0][1] + t[1][1]].map(|v| v as f64);
        let mut closed = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let e = rows[i] * cols[j] / n;
                closed += (t[i][j] as f64 - e).powi(2) / e;
            }
        }
        worst_stat = worst_stat.max((r.statistic - closed).abs());
        worst_chi_p = worst_chi_p.max((r.p - chi_tail_quadrature(r.statistic)).abs());
    }
    outcome(
        u_mismatch == 0 && worst_p <= 0.02 && worst_stat <= 1e-10 && worst_chi_p <= 1e-6,
        format!(
            "{cases} rank tests: {u_mismatch} U mismatches, max |p - exact| {worst_p:.1e}; chi-square max |stat| error {worst_stat:.1e}, max |p| error {worst_chi_p:.1e}"
        ),
    )
}

// ---------------------------------------------------------------------------------------

fn grid_bytes(seed: u64) -> Vec<u8> {
    let d = generate_synthetic(&calibrated_scenario(), &ItemSchema::reference(), 77).unwrap();
    let report = run_scheme_suite(&d, &SuiteConfig { seed, ..SuiteConfig::default() });
    let mut out = Vec::new();
    for h in Horizon::ALL {
        write_grid_csv(&report, h, &mut out).unwrap();
    }
    write_selected_csv(&report, &mut out).unwrap();
    for cell in &report.cells {
        if let Ok(o) = &cell.outcome {
            write_report_csv(&o.report, &mut out).unwrap();
            write_roc_csv(&o.report.roc, &mut out).unwrap();
        }
    }
    out
}

fn grid_determinism() -> Outcome {
    let a = grid_bytes(42);
    let b = grid_bytes(42);
    outcome(a == b, format!("56-cell grid serialised to {} bytes twice, identical: {}", a.len(), a == b))
}
