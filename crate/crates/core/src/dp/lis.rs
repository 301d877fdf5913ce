//! Longest increasing subsequence.

use super::{run_dp, Agg, DpSpec, DpTrace};
use crate::error::Result;
use crate::sample::{CotSample, Task};

/// `dp[i]` = length of the longest increasing subsequence ending at `i`.
pub fn lis_experiment(seq: &[i64]) -> Vec<i64> {
    let mut dp = vec![1i64; seq.len()];
    for i in 0..seq.len() {
        for j in 0..i {
            if seq[j] < seq[i] {
                dp[i] = dp[i].max(dp[j] + 1);
            }
        }
    }
    dp
}

pub fn lis_answer(seq: &[i64]) -> i64 {
    lis_experiment(seq).into_iter().max().unwrap_or(0)
}

/// Two-index formulation: `dp(j,k)` is the longest increasing subsequence
/// ending at `j` whose previous element lies among the first `k` positions.
/// States are 1-based `(j,k)` with `0 <= k < j`.
pub struct LisFramework {
    pub n: usize,
}

impl DpSpec for LisFramework {
    type State = (usize, usize);
    type Token = i64;

    fn states(&self) -> Vec<(usize, usize)> {
        (1..=self.n).flat_map(|j| (0..j).map(move |k| (j, k))).collect()
    }

    fn inputs(&self, &(j, k): &(usize, usize)) -> Vec<Option<usize>> {
        vec![Some(j - 1), if k > 0 { Some(k - 1) } else { None }]
    }

    fn predecessors(&self, &(j, k): &(usize, usize)) -> Vec<Option<(usize, usize)>> {
        if k == 0 {
            vec![None, None]
        } else {
            vec![Some((j, k - 1)), Some((k, k - 1))]
        }
    }

    fn transition(&self, _: &(usize, usize), t: &[Option<&i64>], d: &[Option<i64>]) -> i64 {
        match (t[1], d[0], d[1]) {
            (Some(sk), Some(prev), Some(ending_k)) => {
                let inc = if t[0].unwrap() > sk { 1 } else { 0 };
                prev.max(ending_k * inc + 1)
            }
            _ => 1,
        }
    }

    fn aggregation(&self) -> Agg {
        Agg::Max
    }

    fn in_answer(&self, &(j, k): &(usize, usize)) -> bool {
        k + 1 == j
    }
}

pub fn lis_framework(seq: &[i64]) -> Result<DpTrace<(usize, usize)>> {
    run_dp(&LisFramework { n: seq.len() }, seq)
}

pub fn lis_sample(seq: &[i64]) -> CotSample {
    let dp = lis_experiment(seq);
    CotSample {
        task: Task::Lis,
        problem: seq.iter().map(|v| v.to_string()).collect(),
        steps: vec![dp.iter().map(|v| v.to_string()).collect()],
        answer: vec![dp.iter().max().copied().unwrap_or(0).to_string()],
    }
}

/// `(i, dp(i))` pair serialization of a trace.
pub fn pairs_text(dp: &[i64]) -> String {
    dp.iter().enumerate().map(|(i, v)| format!("( {} , {} )", i + 1, v)).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: [i64; 13] = [103, 107, 109, 112, 101, 103, 105, 107, 115, 109, 111, 113, 102];

    #[test]
    fn worked_sequence() {
        assert_eq!(lis_experiment(&WORKED), vec![1, 2, 3, 4, 1, 2, 3, 4, 5, 5, 6, 7, 2]);
        assert_eq!(lis_framework(&WORKED).unwrap().answer, 7);
        let s = lis_sample(&WORKED);
        assert_eq!(
            s.to_text(),
            "103 107 109 112 101 103 105 107 115 109 111 113 102 [SEP] 1 2 3 4 1 2 3 4 5 5 6 7 2 [SEP] 7"
        );
    }

    #[test]
    fn trivial() {
        assert_eq!(lis_experiment(&[5]), vec![1]);
        assert_eq!(lis_framework(&[5]).unwrap().answer, 1);
        assert_eq!(lis_experiment(&[5, 4, 3]), vec![1, 1, 1]);
        assert_eq!(pairs_text(&[1, 2]), "( 1 , 1 ) ( 2 , 2 )");
    }
}
