//! ROC and precision-recall curves over a fixed threshold grid.
//!
//! A sample is flagged when its score is strictly greater than the
//! threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid(Vec<f64>);

/// `(start, end, step)` segments of the default grid.
const DEFAULT_SEGMENTS: [(f64, f64, f64); 7] = [
    (0.0, 1e-4, 1e-5),
    (1e-4, 1e-3, 1e-4),
    (1e-3, 0.5, 1e-3),
    (0.5, 5.0, 1e-2),
    (5.0, 300.0, 1.0),
    (300.0, 1000.0, 100.0),
    (1000.0, 1e4, 1000.0),
];

impl ThresholdGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("grid has a non-finite threshold".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("thresholds must be strictly increasing".into()));
        }
        Ok(Self(points))
    }

    /// Piecewise grid from 0 to 1e4: steps of 1e-5 up to 1e-4, 1e-4 up to
    /// 1e-3, 1e-3 up to 0.5, 1e-2 up to 5, 1 up to 300, 100 up to 1000 and
    /// 1000 up to 1e4. Segment endpoints appear once.
    pub fn standard() -> Self {
        let mut points: Vec<f64> = Vec::new();
        for (start, end, step) in DEFAULT_SEGMENTS {
            let first = (start / step).round() as i64;
            let last = (end / step).round() as i64;
            for i in first..=last {
                let v = i as f64 * step;
                match points.last() {
                    Some(&prev) if v <= prev * (1.0 + 1e-9) => {}
                    _ => points.push(v),
                }
            }
        }
        Self::new(points).expect("static grid is valid")
    }

    /// Evenly spaced thresholds.
    pub fn linear(start: f64, end: f64, count: usize) -> Result<Self> {
        if count < 2 || !(end > start) {
            return Err(Error::InvalidGrid("linear grid needs count >= 2 and end > start".into()));
        }
        let step = (end - start) / (count - 1) as f64;
        Self::new((0..count).map(|i| start + i as f64 * step).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self::standard()
    }
}

/// Per-threshold rates plus curve areas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurves {
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub precision: Vec<f64>,
    pub auroc: f64,
    pub auprc: f64,
}

fn trapezoid(mut points: Vec<(f64, f64)>) -> f64 {
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Sweeps `grid` over `scores`. `faulty[i]` marks positives.
///
/// AUROC is the trapezoid area under the `(FPR, TPR)` points with `(0, 0)`
/// and `(1, 1)` added. AUPRC is the trapezoid area under the
/// `(recall, precision)` points as observed, without anchors.
pub fn roc_prc(scores: &[f64], faulty: &[bool], grid: &ThresholdGrid) -> Result<RocCurves> {
    if scores.len() != faulty.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            faulty.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("score {i} is not finite")));
    }
    let mut pos: Vec<f64> = scores.iter().zip(faulty).filter(|p| *p.1).map(|p| *p.0).collect();
    let mut neg: Vec<f64> = scores.iter().zip(faulty).filter(|p| !*p.1).map(|p| *p.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidCounts(
            "curves need both faulty and faultless samples".into(),
        ));
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let above = |sorted: &[f64], t: f64| (sorted.len() - sorted.partition_point(|&s| s <= t)) as f64;

    let n = grid.len();
    let (mut fpr, mut tpr, mut precision) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &t in grid.points() {
        let tp = above(&pos, t);
        let fp = above(&neg, t);
        fpr.push(fp / neg.len() as f64);
        tpr.push(tp / pos.len() as f64);
        precision.push(if tp + fp == 0.0 { 1.0 } else { tp / (tp + fp) });
    }
    let mut roc: Vec<(f64, f64)> = fpr.iter().copied().zip(tpr.iter().copied()).collect();
    roc.push((0.0, 0.0));
    roc.push((1.0, 1.0));
    let prc: Vec<(f64, f64)> = tpr.iter().copied().zip(precision.iter().copied()).collect();
    Ok(RocCurves {
        thresholds: grid.points().to_vec(),
        auroc: trapezoid(roc),
        auprc: trapezoid(prc),
        fpr,
        tpr,
        precision,
    })
}
