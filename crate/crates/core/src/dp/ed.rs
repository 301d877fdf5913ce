//! Edit distance with separate insert, delete and replace costs.

use super::{run_dp, Agg, DpSpec, DpTrace};
use crate::error::Result;
use crate::sample::{CotSample, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdCosts {
    pub insert: i64,
    pub delete: i64,
    pub replace: i64,
}

impl EdCosts {
    /// Costs used for the datasets.
    pub const EXPERIMENT: EdCosts = EdCosts { insert: 2, delete: 2, replace: 3 };
}

/// States `(j,k)` for `0<=j<=n1`, `0<=k<=n2`, row-major. Input positions
/// index the concatenation `s1 ++ s2`.
pub struct EdSpec {
    pub n1: usize,
    pub n2: usize,
    pub costs: EdCosts,
}

impl DpSpec for EdSpec {
    type State = (usize, usize);
    type Token = char;

    fn states(&self) -> Vec<(usize, usize)> {
        (0..=self.n1).flat_map(|j| (0..=self.n2).map(move |k| (j, k))).collect()
    }

    fn inputs(&self, &(j, k): &(usize, usize)) -> Vec<Option<usize>> {
        if j == 0 || k == 0 {
            vec![None, None]
        } else {
            vec![Some(j - 1), Some(self.n1 + k - 1)]
        }
    }

    fn predecessors(&self, &(j, k): &(usize, usize)) -> Vec<Option<(usize, usize)>> {
        if j == 0 || k == 0 {
            vec![None, None, None]
        } else {
            vec![Some((j, k - 1)), Some((j - 1, k)), Some((j - 1, k - 1))]
        }
    }

    fn transition(&self, &(j, k): &(usize, usize), t: &[Option<&char>], d: &[Option<i64>]) -> i64 {
        let c = self.costs;
        if j == 0 {
            return c.insert * k as i64;
        }
        if k == 0 {
            return c.delete * j as i64;
        }
        let diff = if t[0] != t[1] { c.replace } else { 0 };
        (d[0].unwrap() + c.insert).min(d[1].unwrap() + c.delete).min(d[2].unwrap() + diff)
    }

    fn aggregation(&self) -> Agg {
        Agg::Min
    }

    fn in_answer(&self, &(j, k): &(usize, usize)) -> bool {
        j == self.n1 && k == self.n2
    }
}

pub fn ed_trace(s1: &[char], s2: &[char], costs: EdCosts) -> Result<DpTrace<(usize, usize)>> {
    let input: Vec<char> = s1.iter().chain(s2).copied().collect();
    run_dp(&EdSpec { n1: s1.len(), n2: s2.len(), costs }, &input)
}

/// Plain table version, independent of the framework.
pub fn ed_table(s1: &[char], s2: &[char], c: EdCosts) -> Vec<Vec<i64>> {
    let (n1, n2) = (s1.len(), s2.len());
    let mut dp = vec![vec![0i64; n2 + 1]; n1 + 1];
    for (k, v) in dp[0].iter_mut().enumerate() {
        *v = c.insert * k as i64;
    }
    for j in 1..=n1 {
        dp[j][0] = c.delete * j as i64;
        for k in 1..=n2 {
            let diff = if s1[j - 1] != s2[k - 1] { c.replace } else { 0 };
            dp[j][k] = (dp[j][k - 1] + c.insert).min(dp[j - 1][k] + c.delete).min(dp[j - 1][k - 1] + diff);
        }
    }
    dp
}

pub fn ed(s1: &[char], s2: &[char], c: EdCosts) -> i64 {
    ed_table(s1, s2, c)[s1.len()][s2.len()]
}

/// Problem `a s | p a s s`, one step per row `j=1..n1` (columns `k=1..n2`).
pub fn ed_sample(s1: &[char], s2: &[char], c: EdCosts) -> CotSample {
    let t = ed_table(s1, s2, c);
    let mut problem: Vec<String> = s1.iter().map(|ch| ch.to_string()).collect();
    problem.push("|".into());
    problem.extend(s2.iter().map(|ch| ch.to_string()));
    CotSample {
        task: Task::Ed,
        problem,
        steps: (1..=s1.len()).map(|j| t[j][1..].iter().map(|v| v.to_string()).collect()).collect(),
        answer: vec![t[s1.len()][s2.len()].to_string()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cs(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn worked_example() {
        let s = ed_sample(&cs("as"), &cs("pass"), EdCosts::EXPERIMENT);
        assert_eq!(s.to_text(), "a s | p a s s [SEP] 3 2 4 6 [SEP] 5 4 2 4 [SEP] 4");
        assert_eq!(ed_trace(&cs("as"), &cs("pass"), EdCosts::EXPERIMENT).unwrap().answer, 4);
    }

    #[test]
    fn identical_strings() {
        let c = EdCosts { insert: 1, delete: 5, replace: 7 };
        assert_eq!(ed(&cs("abcab"), &cs("abcab"), c), 0);
        assert_eq!(ed(&cs(""), &cs("ab"), c), 2);
    }
}
