//! Causal softmax attention with a priority channel.

use super::tensor::{dot, Matrix};
use crate::error::{Error, Result};

/// One head. The logit of position `j` seen from `i` is
/// `lambda * (Q x_i).(K x_j) + mu * (r . x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
    /// Priority read-out; `None` means all priorities are zero.
    pub r: Option<Vec<f64>>,
    pub lambda: f64,
    pub mu: f64,
}

impl Head {
    pub fn d_in(&self) -> usize {
        self.q.cols
    }

    pub fn d_out(&self) -> usize {
        self.v.rows
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.q.cols;
        let ok = self.k.cols == d
            && self.v.cols == d
            && self.q.rows == self.k.rows
            && self.r.as_ref().is_none_or(|r| r.len() == d);
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch("head matrices disagree on widths".into()))
        }
    }

    pub fn query(&self, x: &[f64]) -> Vec<f64> {
        (0..self.q.rows).map(|r| dot(self.q.row(r), x)).collect()
    }

    pub fn key(&self, x: &[f64]) -> Vec<f64> {
        (0..self.k.rows).map(|r| dot(self.k.row(r), x)).collect()
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        (0..self.v.rows).map(|r| dot(self.v.row(r), x)).collect()
    }

    pub fn priority(&self, x: &[f64]) -> f64 {
        self.r.as_ref().map_or(0.0, |r| dot(r, x))
    }

    pub fn max_abs_weight(&self) -> f64 {
        let r = self.r.as_ref().map_or(0.0, |r| r.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
        [self.q.max_abs(), self.k.max_abs(), self.v.max_abs(), r, self.lambda.abs(), self.mu.abs()]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Keys, values and priorities of the positions seen so far, so a new
/// position costs one pass over the cache.
#[derive(Debug, Clone, Default)]
pub struct HeadCache {
    pub keys: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub priorities: Vec<f64>,
}

impl HeadCache {
    pub fn push(&mut self, head: &Head, x: &[f64]) {
        self.keys.push(head.key(x));
        self.values.push(head.value(x));
        self.priorities.push(head.priority(x));
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Output at the newest position given its query, plus the weights.
    pub fn attend(&self, head: &Head, q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let logits: Vec<f64> = self
            .keys
            .iter()
            .zip(&self.priorities)
            .map(|(k, r)| head.lambda * dot(q, k) + head.mu * r)
            .collect();
        let w = softmax(&logits);
        let mut out = vec![0.0; head.d_out()];
        for (a, v) in w.iter().zip(&self.values) {
            if *a != 0.0 {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += a * x;
                }
            }
        }
        (out, w)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// All heads over a whole sequence; outputs are concatenated per head in
/// order.
pub fn attention_forward(heads: &[Head], x: &Matrix) -> Result<Matrix> {
    for h in heads {
        h.validate()?;
        if h.d_in() != x.cols {
            return Err(Error::DimensionMismatch(format!("head reads {} columns, input has {}", h.d_in(), x.cols)));
        }
    }
    let width: usize = heads.iter().map(Head::d_out).sum();
    let mut out = Matrix::zeros(x.rows, width);
    let mut col = 0;
    for h in heads {
        let mut cache = HeadCache::default();
        for i in 0..x.rows {
            cache.push(h, x.row(i));
            let (o, _) = cache.attend(h, &h.query(x.row(i)));
            out.row_mut(i)[col..col + o.len()].copy_from_slice(&o);
        }
        col += h.d_out();
    }
    Ok(out)
}

/// Attention weights of one head, row `i` covering `j <= i`.
pub fn attention_weights(h: &Head, x: &Matrix) -> Vec<Vec<f64>> {
    let mut cache = HeadCache::default();
    (0..x.rows)
        .map(|i| {
            cache.push(h, x.row(i));
            cache.attend(h, &h.query(x.row(i))).1
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn head(q: f64) -> Head {
        Head {
            q: Matrix::from_rows(&[vec![q, 0.0]]).unwrap(),
            k: Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(),
            v: Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap(),
            r: None,
            lambda: 1.0,
            mu: 0.0,
        }
    }

    #[test]
    fn single_position_and_uniform() {
        let x = Matrix::from_rows(&[vec![1.0, 5.0]]).unwrap();
        assert_eq!(attention_forward(&[head(3.0)], &x).unwrap().get(0, 0), 5.0);
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 4.0], vec![1.0, 9.0]]).unwrap();
        let o = attention_forward(&[head(0.0)], &x).unwrap();
        assert!((o.get(2, 0) - 5.0).abs() < 1e-12);
        for row in attention_weights(&head(0.7), &x) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let x = Matrix::zeros(2, 3);
        assert!(matches!(attention_forward(&[head(1.0)], &x), Err(Error::DimensionMismatch(_))));
    }
}
