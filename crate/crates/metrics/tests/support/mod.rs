#![allow(dead_code)]

use ndarray::Array2;
use rand::rngs::StdRng;
use rand::Rng;
use sua_metrics::Histogram;

fn hist(v: &[f64]) -> Histogram {
    Histogram::new(v.to_vec()).unwrap()
}

pub fn random_hist(rng: &mut StdRng, n: usize) -> Histogram {
    let raw: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random() }).collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        return hist(&v);
    }
    hist(&raw.iter().map(|x| x / total).collect::<Vec<_>>())
}

// Literal transcription of the distance formula with textbook means.
pub fn bhat_oracle(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] * b[i]).sqrt();
    }
    let inner = 1.0 - s / (ma * mb * n * n).sqrt();
    inner.max(0.0).min(1.0).sqrt()
}

// Two-pass textbook Pearson.
pub fn pearson_oracle(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let da: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>().sqrt();
    let db: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>().sqrt();
    num / (da * db)
}

/// Independent per-pixel counting oracle for one-vs-rest metrics.
pub fn seg_oracle(pred: &Array2<u16>, gt: &Array2<u16>, classes: u16) -> Option<[f64; 6]> {
    let mut rows = Vec::new();
    for k in 1..classes {
        let (mut tp, mut fp, mut fneg, mut tn) = (0.0, 0.0, 0.0, 0.0);
        for (p, g) in pred.iter().zip(gt.iter()) {
            if *p == k && *g == k {
                tp += 1.0;
            } else if *p == k {
                fp += 1.0;
            } else if *g == k {
                fneg += 1.0;
            } else {
                tn += 1.0;
            }
        }
        if tp + fp + fneg == 0.0 {
            continue;
        }
        let safe = |n: f64, d: f64, e: f64| if d == 0.0 { e } else { n / d };
        rows.push([
            (tp + tn) / (tp + tn + fp + fneg),
            2.0 * tp / (2.0 * tp + fp + fneg),
            tp / (tp + fp + fneg),
            safe(tp, tp + fneg, 1.0),
            safe(tn, tn + fp, 1.0),
            safe(fp, tp + fp, 0.0),
        ]);
    }
    if rows.is_empty() {
        return None;
    }
    let mut out = [0.0; 6];
    for r in &rows {
        for i in 0..6 {
            out[i] += r[i] / rows.len() as f64;
        }
    }
    Some(out)
}

