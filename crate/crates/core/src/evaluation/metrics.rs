use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature indices ordered by descending score; equal scores keep ascending
/// index order. Every ranking in the crate (top-k, charts) goes through here.
pub fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order = descending_order(scores);
    order.truncate(k);
    order
}

/// Share of the truth's top-k features that also appear in the candidate's top-k.
pub fn recall_at_k(truth: &[f64], candidate: &[f64], k: usize) -> Result<f64> {
    if truth.len() != candidate.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: candidate.len(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if k > truth.len() {
        return Err(Error::InvalidConfig(format!(
            "k = {k} exceeds the number of features ({})",
            truth.len()
        )));
    }
    let t = top_k(truth, k);
    let c = top_k(candidate, k);
    Ok(t.iter().filter(|i| c.contains(i)).count() as f64 / k as f64)
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            ranks[p] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman's rho with average ranks for ties. A constant input gives 0.
pub fn spearman_rank_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidConfig("spearman needs at least two values".into()));
    }
    Ok(pearson(&average_ranks(a), &average_ranks(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub f1_macro: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
}

impl ClassificationMetrics {
    pub fn mean(items: &[ClassificationMetrics]) -> Option<ClassificationMetrics> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let avg = |f: fn(&ClassificationMetrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        Some(ClassificationMetrics {
            accuracy: avg(|m| m.accuracy),
            f1_macro: avg(|m| m.f1_macro),
            precision_macro: avg(|m| m.precision_macro),
            recall_macro: avg(|m| m.recall_macro),
        })
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy plus macro precision/recall/F1 over the classes present in `y_true`.
pub fn classification_metrics(y_true: &[usize], y_pred: &[usize]) -> Result<ClassificationMetrics> {
    if y_true.is_empty() {
        return Err(Error::Empty("label vectors"));
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    let mut classes: Vec<usize> = y_true.to_vec();
    classes.sort_unstable();
    classes.dedup();

    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for &c in &classes {
        let tp = y_true.iter().zip(y_pred).filter(|&(&t, &p)| t == c && p == c).count();
        let predicted = y_pred.iter().filter(|&&p| p == c).count();
        let actual = y_true.iter().filter(|&&t| t == c).count();
        let p = ratio(tp, predicted);
        let r = ratio(tp, actual);
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        p_sum += p;
        r_sum += r;
        f_sum += f;
    }
    let k = classes.len() as f64;
    let correct = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(ClassificationMetrics {
        accuracy: ratio(correct, y_true.len()),
        f1_macro: f_sum / k,
        precision_macro: p_sum / k,
        recall_macro: r_sum / k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recall_examples() {
        let t = [0.9, 0.8, 0.7, 0.1, 0.0, 0.05];
        assert_eq!(recall_at_k(&t, &t, 3).unwrap(), 1.0);
        let c = [0.9, 0.8, 0.0, 0.1, 0.0, 0.7];
        assert!((recall_at_k(&t, &c, 3).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let d = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        assert_eq!(recall_at_k(&t, &d, 3).unwrap(), 0.0);
        assert!(recall_at_k(&t, &t, 7).is_err());
        assert!(recall_at_k(&t, &t, 0).is_err());
    }

    #[test]
    fn ties_prefer_low_index() {
        assert_eq!(top_k(&[1.0, 2.0, 2.0, 2.0], 2), vec![1, 2]);
        assert_eq!(descending_order(&[0.0; 4]), vec![0, 1, 2, 3]);
    }

    #[test]
    fn spearman_examples() {
        let a = [1.0, 2.0, 3.0];
        assert!((spearman_rank_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman_rank_correlation(&a, &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // d = (0, 1, 1): 1 − 6·2 / (3·8) = 0.5
        assert!((spearman_rank_correlation(&a, &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(spearman_rank_correlation(&a, &[4.0; 3]).unwrap(), 0.0);
        assert!(spearman_rank_correlation(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn metric_examples() {
        let perfect = classification_metrics(&[0, 1, 2, 1], &[0, 1, 2, 1]).unwrap();
        assert_eq!(perfect, ClassificationMetrics { accuracy: 1.0, f1_macro: 1.0, precision_macro: 1.0, recall_macro: 1.0 });

        // confusion: class 0 tp=2 fp=2, class 1 tp=0 fn=2
        let m = classification_metrics(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.recall_macro, 0.5);
        assert_eq!(m.precision_macro, 0.25);
        assert!((m.f1_macro - 1.0 / 3.0).abs() < 1e-15);

        let single = classification_metrics(&[2, 2, 2], &[2, 2, 2]).unwrap();
        assert_eq!(single.f1_macro, 1.0);
        assert!(classification_metrics(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn recall_is_permutation_equivariant(
            pairs in prop::collection::vec((0u8..6, 0u8..6), 4..12),
            shift in 0usize..12,
        ) {
            let t: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let c: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let d = t.len();
            // relabel features by a rotation; ties break by index, so compare
            // on strictly distinct scores only
            let jitter = |v: &[f64]| -> Vec<f64> { v.iter().enumerate().map(|(i, x)| x + i as f64 * 1e-3).collect() };
            let (t, c) = (jitter(&t), jitter(&c));
            let perm: Vec<usize> = (0..d).map(|i| (i + shift) % d).collect();
            let tp: Vec<f64> = perm.iter().map(|&i| t[i]).collect();
            let cp: Vec<f64> = perm.iter().map(|&i| c[i]).collect();
            prop_assert_eq!(recall_at_k(&t, &c, 3).unwrap(), recall_at_k(&tp, &cp, 3).unwrap());
        }

        #[test]
        fn spearman_monotone_invariance(v in prop::collection::vec(-5.0f64..5.0, 2..15), w in prop::collection::vec(-5.0f64..5.0, 15)) {
            let w = &w[..v.len()];
            let base = spearman_rank_correlation(&v, w).unwrap();
            let t: Vec<f64> = v.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
            prop_assert!((spearman_rank_correlation(&t, w).unwrap() - base).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&base));
            let distinct = v.iter().any(|x| *x != v[0]);
            if distinct {
                prop_assert!((spearman_rank_correlation(&v, &v).unwrap() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn macro_metrics_ignore_class_names(
            pairs in prop::collection::vec((0usize..4, 0usize..4), 1..40),
            offset in 1usize..5,
        ) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.iter().cloned().unzip();
            let rename = |c: usize| (3 - c) * 7 + offset;
            let tr: Vec<usize> = t.iter().map(|&c| rename(c)).collect();
            let pr: Vec<usize> = p.iter().map(|&c| rename(c)).collect();
            let a = classification_metrics(&t, &p).unwrap();
            let b = classification_metrics(&tr, &pr).unwrap();
            prop_assert!((a.accuracy - b.accuracy).abs() < 1e-12);
            prop_assert!((a.f1_macro - b.f1_macro).abs() < 1e-12);
            prop_assert!((a.precision_macro - b.precision_macro).abs() < 1e-12);
            prop_assert!((a.recall_macro - b.recall_macro).abs() < 1e-12);
            for v in [a.accuracy, a.f1_macro, a.precision_macro, a.recall_macro] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
