//! Regression metrics: correlation-based r², MAE/MSE, Spearman rank.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::math;

/// Variance below this is treated as a constant column.
const VAR_EPS: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Metrics {
    /// Mean over columns of the squared Pearson correlation. Note this is
    /// correlation-based, not the coefficient of determination: a constant
    /// offset (or even a negated, zero-mean column) still scores 1.
    pub r2: f64,
    pub mae: f64,
    pub mse: f64,
    /// Standard coefficient of determination (1 - SS_res/SS_tot), averaged
    /// over columns, emitted alongside for transparency.
    pub r2_cod: f64,
    /// Count of zero-variance columns where the correlation convention
    /// (1 if identical, else 0) was applied.
    pub degenerate_columns: usize,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    let mut n = 0usize;
    for x in v {
        acc += x;
        n += 1;
    }
    acc / n.max(1) as f64
}

/// Pearson correlation; `None` when either side has (numerically) zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let ma = mean(a.iter().copied());
    let mb = mean(b.iter().copied());
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    let n = a.len() as f64;
    if va / n < VAR_EPS || vb / n < VAR_EPS {
        return None;
    }
    Some(cov / math::sqrt(va * vb))
}

/// Column-wise metrics of `predicted` against `reference` (rows are samples).
pub fn compute_metrics(predicted: &[Vec<f64>], reference: &[Vec<f64>]) -> Metrics {
    assert_eq!(predicted.len(), reference.len());
    assert!(!predicted.is_empty());
    let n_cols = predicted[0].len();
    let n_rows = predicted.len();

    let mut mae = 0.0;
    let mut mse = 0.0;
    let mut r2_sum = 0.0;
    let mut cod_sum = 0.0;
    let mut degenerate = 0usize;
    for c in 0..n_cols {
        let p: Vec<f64> = predicted.iter().map(|row| row[c]).collect();
        let r: Vec<f64> = reference.iter().map(|row| row[c]).collect();
        match pearson(&p, &r) {
            Some(rho) => r2_sum += rho * rho,
            None => {
                degenerate += 1;
                let identical = p.iter().zip(&r).all(|(x, y)| x == y);
                r2_sum += if identical { 1.0 } else { 0.0 };
            }
        }
        let rm = mean(r.iter().copied());
        let ss_res: f64 = p.iter().zip(&r).map(|(x, y)| (x - y) * (x - y)).sum();
        let ss_tot: f64 = r.iter().map(|y| (y - rm) * (y - rm)).sum();
        cod_sum += if ss_tot / (n_rows as f64) < VAR_EPS {
            if ss_res == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            1.0 - ss_res / ss_tot
        };
        for (x, y) in p.iter().zip(&r) {
            mae += math::abs(x - y);
            mse += (x - y) * (x - y);
        }
    }
    let cells = (n_rows * n_cols) as f64;
    Metrics {
        r2: r2_sum / n_cols as f64,
        mae: mae / cells,
        mse: mse / cells,
        r2_cod: cod_sum / n_cols as f64,
        degenerate_columns: degenerate,
    }
}

/// Average ranks with tie correction.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut out = alloc::vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&ranks(a), &ranks(b))
}
