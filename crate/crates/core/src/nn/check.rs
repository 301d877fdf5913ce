//! Scan of the score-gap and priority-gap conditions for a head.

use super::attention::Head;
use super::tensor::{dot, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Score neither within `rho` of zero nor at most `-delta`.
    Score { i: usize, j: usize, score: f64 },
    /// Two priorities closer than `delta` without being equal.
    Priority { i: usize, j: usize, gap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub pairs: usize,
    /// Largest `|score|` among matching pairs.
    pub max_match: f64,
    /// Largest score among non-matching pairs (should be `<= -delta`).
    pub max_nonmatch: f64,
    pub first_violation: Option<Violation>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Priorities closer than this are treated as equal.
pub const PRIORITY_TIE: f64 = 1e-9;

/// Scores are the raw `q_i . k_j` before the head's `lambda`; every pair
/// `(i, j)` is checked, not only causal ones.
pub fn check_attention_assumption(x: &Matrix, q: &Matrix, k: &Matrix, r: Option<&[f64]>, rho: f64, delta: f64) -> AssumptionReport {
    let qs: Vec<Vec<f64>> = (0..x.rows).map(|i| q.apply(x.row(i)).expect("query width")).collect();
    let ks: Vec<Vec<f64>> = (0..x.rows).map(|i| k.apply(x.row(i)).expect("key width")).collect();
    let mut rep = AssumptionReport {
        pairs: 0,
        max_match: 0.0,
        max_nonmatch: f64::NEG_INFINITY,
        first_violation: None,
    };
    for i in 0..x.rows {
        for j in 0..x.rows {
            let s = dot(&qs[i], &ks[j]);
            rep.pairs += 1;
            if s.abs() <= rho {
                rep.max_match = rep.max_match.max(s.abs());
            } else if s <= -delta {
                rep.max_nonmatch = rep.max_nonmatch.max(s);
            } else if rep.first_violation.is_none() {
                rep.first_violation = Some(Violation::Score { i, j, score: s });
            }
        }
    }
    if let (Some(r), None) = (r, &rep.first_violation) {
        let rs: Vec<f64> = (0..x.rows).map(|i| dot(r, x.row(i))).collect();
        'outer: for i in 0..x.rows {
            for j in i + 1..x.rows {
                let gap = (rs[i] - rs[j]).abs();
                if gap > PRIORITY_TIE && gap < delta {
                    rep.first_violation = Some(Violation::Priority { i, j, gap });
                    break 'outer;
                }
            }
        }
    }
    rep
}

pub fn check_head(x: &Matrix, h: &Head, rho: f64, delta: f64) -> AssumptionReport {
    check_attention_assumption(x, &h.q, &h.k, h.r.as_deref(), rho, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squares_pass_and_injected_fails() {
        // Score -(x_i - x_j)^2 from features (x, x^2, 1).
        let xs = [1.0, 2.0, 2.0, 5.0];
        let x = Matrix::from_rows(&xs.iter().map(|&v| vec![v, v * v, 1.0]).collect::<Vec<_>>()).unwrap();
        let q = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let k = Matrix::from_rows(&[vec![2.0, 0.0, 0.0], vec![0.0, 0.0, -1.0], vec![0.0, -1.0, 0.0]]).unwrap();
        let rep = check_attention_assumption(&x, &q, &k, None, 1e-9, 1.0);
        assert!(rep.passed(), "{rep:?}");
        let x2 = Matrix::from_rows(&[vec![1.0, 1.0, 1.0], vec![1.5, 2.25, 1.0]]).unwrap();
        let rep = check_attention_assumption(&x2, &q, &k, None, 1e-9, 1.0);
        assert_eq!(rep.first_violation, Some(Violation::Score { i: 0, j: 1, score: -0.25 }));
    }
}
