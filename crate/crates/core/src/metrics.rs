//! Correlation metrics and evaluation reports.
//!
//! A metric is `NaN` when one of its inputs has no spread; reports serialize
//! such values as `null`.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::Sample;
use crate::model::{predict, HybridNetParams, Mode};
use crate::tensor::Real;
use crate::{Error, Result};

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {}",
            a.len()
        )));
    }
    Ok(())
}

/// Pearson correlation, two-pass.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(f64::NAN);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn mid_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    pearson(&mid_ranks(a), &mid_ranks(b))
}

/// Number of tied pairs within runs of equal values in `v` (already grouped).
fn tied_pairs<T: PartialEq>(v: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for k in 1..=v.len() {
        if k < v.len() && v[k] == v[k - 1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total
}

/// Stable merge sort counting the inversions it removes.
fn sort_counting_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps =
        sort_counting_swaps(&mut v[..mid], buf) + sort_counting_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall tau-b in `O(n log n)` (Knight's algorithm).
pub fn kendall(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as u64;
    // Adding zero maps -0.0 to 0.0, so total_cmp orders exactly as == groups.
    let mut pairs: Vec<(f64, f64)> = a.iter().zip(b).map(|(&x, &y)| (x + 0.0, y + 0.0)).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let ties_a = tied_pairs(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let ties_joint = tied_pairs(&pairs);
    let mut bs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(bs.len());
    let swaps = sort_counting_swaps(&mut bs, &mut buf);
    let ties_b = tied_pairs(&bs);
    let n0 = n * (n - 1) / 2;
    let num = n0 as i128 - ties_a as i128 - ties_b as i128 + ties_joint as i128 - 2 * swaps as i128;
    let den = ((n0 - ties_a) as f64) * ((n0 - ties_b) as f64);
    if den == 0.0 {
        return Ok(f64::NAN);
    }
    Ok((num as f64 / den.sqrt()).clamp(-1.0, 1.0))
}

fn nan_as_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn null_as_nan<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Pearson, Spearman and Kendall over one vector pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    #[serde(serialize_with = "nan_as_null", deserialize_with = "null_as_nan")]
    pub pearson: f64,
    #[serde(serialize_with = "nan_as_null", deserialize_with = "null_as_nan")]
    pub spearman: f64,
    #[serde(serialize_with = "nan_as_null", deserialize_with = "null_as_nan")]
    pub kendall: f64,
}

impl Correlations {
    pub fn of(pred: &[f64], target: &[f64]) -> Result<Self> {
        Ok(Correlations {
            pearson: pearson(pred, target)?,
            spearman: spearman(pred, target)?,
            kendall: kendall(pred, target)?,
        })
    }

    /// True if any metric is undefined because an input has no spread.
    pub fn degenerate(&self) -> bool {
        !(self.pearson.is_finite() && self.spearman.is_finite() && self.kendall.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub name: String,
    #[serde(flatten)]
    pub metrics: Correlations,
    pub n: usize,
}

/// Pooled metrics over all designs, the unweighted mean over designs, and a
/// per-design breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: Mode,
    #[serde(flatten)]
    pub pooled: Correlations,
    pub n: usize,
    pub design_mean: Correlations,
    pub per_design: Vec<DesignReport>,
}

impl EvalReport {
    /// Builds a report from `(name, prediction, target)` triples.
    pub fn from_predictions(mode: Mode, designs: &[(String, Vec<f64>, Vec<f64>)]) -> Result<Self> {
        if designs.is_empty() {
            return Err(Error::InvalidArgument("no designs to evaluate".into()));
        }
        let mut all_p = Vec::new();
        let mut all_t = Vec::new();
        let mut per_design = Vec::with_capacity(designs.len());
        for (name, p, t) in designs {
            per_design.push(DesignReport {
                name: name.clone(),
                metrics: Correlations::of(p, t)?,
                n: p.len(),
            });
            all_p.extend_from_slice(p);
            all_t.extend_from_slice(t);
        }
        let k = per_design.len() as f64;
        let avg =
            |f: fn(&Correlations) -> f64| per_design.iter().map(|d| f(&d.metrics)).sum::<f64>() / k;
        let design_mean = Correlations {
            pearson: avg(|c| c.pearson),
            spearman: avg(|c| c.spearman),
            kendall: avg(|c| c.kendall),
        };
        Ok(EvalReport {
            mode,
            pooled: Correlations::of(&all_p, &all_t)?,
            n: all_p.len(),
            design_mean,
            per_design,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Fixed-width text table.
    pub fn to_table(&self, per_design: bool) -> String {
        let mut s = String::new();
        let fmt = |v: f64| {
            if v.is_finite() {
                format!("{v:>9.4}")
            } else {
                format!("{:>9}", "nan")
            }
        };
        let _ = writeln!(
            s,
            "{:<16} {:>9} {:>9} {:>9} {:>7}",
            "design", "pearson", "spearman", "kendall", "n"
        );
        let mut row = |name: &str, c: &Correlations, n: Option<usize>| {
            let n = n.map_or(String::new(), |n| n.to_string());
            let _ = writeln!(
                s,
                "{name:<16} {} {} {} {n:>7}",
                fmt(c.pearson),
                fmt(c.spearman),
                fmt(c.kendall)
            );
        };
        if per_design {
            for d in &self.per_design {
                row(&d.name, &d.metrics, Some(d.n));
            }
        }
        row("pooled", &self.pooled, Some(self.n));
        row("design-mean", &self.design_mean, None);
        s
    }
}

/// Runs the model over `samples` and scores predictions against the
/// standardized targets.
pub fn evaluate<T: Real>(
    params: &HybridNetParams<T>,
    samples: &[Sample<T>],
    mode: Mode,
) -> Result<EvalReport> {
    let mut rows = Vec::with_capacity(samples.len());
    for s in samples {
        let pred = predict(params, &s.graph, mode)?;
        rows.push((
            s.name.clone(),
            pred.iter().map(|v| v.to_f64().expect("float")).collect(),
            s.target_f64(),
        ));
    }
    EvalReport::from_predictions(mode, &rows)
}
