//! Exponential-time reference answers for small instances.

use super::cfg::{Cfg, Sym};
use super::ed::EdCosts;
use crate::error::{Error, Result};
use std::collections::{HashMap, HashSet, VecDeque};

pub const LIS_MAX: usize = 16;
pub const ED_MAX: usize = 8;
pub const CFG_MAX: usize = 6;

/// Checks every subset of positions.
pub fn lis_brute(seq: &[i64]) -> Result<i64> {
    if seq.len() > LIS_MAX {
        return Err(Error::InstanceTooLarge(format!("lis length {} > {LIS_MAX}", seq.len())));
    }
    let n = seq.len();
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let picked: Vec<i64> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| seq[i]).collect();
        if picked.windows(2).all(|w| w[0] < w[1]) {
            best = best.max(picked.len() as i64);
        }
    }
    Ok(best)
}

/// Top-down recursion over suffixes with a memo table.
pub fn ed_brute(s1: &[char], s2: &[char], c: EdCosts) -> Result<i64> {
    if s1.len() > ED_MAX || s2.len() > ED_MAX {
        return Err(Error::InstanceTooLarge(format!("ed lengths {}/{} > {ED_MAX}", s1.len(), s2.len())));
    }
    fn go(a: &[char], b: &[char], c: EdCosts, memo: &mut HashMap<(usize, usize), i64>) -> i64 {
        if let Some(&v) = memo.get(&(a.len(), b.len())) {
            return v;
        }
        let v = match (a.first(), b.first()) {
            (None, _) => c.insert * b.len() as i64,
            (_, None) => c.delete * a.len() as i64,
            (Some(x), Some(y)) => {
                let sub = go(&a[1..], &b[1..], c, memo) + if x == y { 0 } else { c.replace };
                let del = go(&a[1..], b, c, memo) + c.delete;
                let ins = go(a, &b[1..], c, memo) + c.insert;
                sub.min(del).min(ins)
            }
        };
        memo.insert((a.len(), b.len()), v);
        v
    }
    Ok(go(s1, s2, c, &mut HashMap::new()))
}

const CFG_BUDGET: usize = 2_000_000;

/// Breadth-first search over leftmost sentential forms. Forms whose matched
/// prefix disagrees with the word, whose shortest possible yield is too long,
/// or which exceed the length any minimal derivation needs are pruned.
pub fn cfg_brute(g: &Cfg, word: &[char]) -> Result<bool> {
    let n = word.len();
    if n > CFG_MAX {
        return Err(Error::InstanceTooLarge(format!("cfg word length {n} > {CFG_MAX}")));
    }
    g.validate()?;
    let min_len = g.min_len();
    let sym_len = |s: &Sym| match s {
        Sym::T(_) => 1,
        Sym::N(x) => min_len[*x],
    };
    let cap = g.nv() * (n + 1) + 1;
    let mut seen: HashSet<(usize, Vec<Sym>)> = HashSet::new();
    let mut queue = VecDeque::new();
    let start = (0usize, vec![Sym::N(g.start)]);
    seen.insert(start.clone());
    queue.push_back(start);
    while let Some((matched, form)) = queue.pop_front() {
        if seen.len() > CFG_BUDGET {
            return Err(Error::InstanceTooLarge("cfg search budget exhausted".into()));
        }
        let Some(&head) = form.first() else {
            if matched == n {
                return Ok(true);
            }
            continue;
        };
        let mut next = Vec::new();
        match head {
            Sym::T(c) => {
                if matched < n && word[matched] == c {
                    next.push((matched + 1, form[1..].to_vec()));
                }
            }
            Sym::N(a) => {
                for r in g.rules.iter().filter(|r| r.lhs == a) {
                    let mut f = Vec::with_capacity(form.len() + 1);
                    if let Some((b, c)) = r.rhs {
                        f.push(b);
                        f.push(c);
                    }
                    f.extend_from_slice(&form[1..]);
                    next.push((matched, f));
                }
            }
        }
        for (mt, f) in next {
            let need = f.iter().map(sym_len).fold(0usize, |a, b| a.saturating_add(b));
            if f.len() > cap || need > n - mt {
                continue;
            }
            let st = (mt, f);
            if seen.insert(st.clone()) {
                queue.push_back(st);
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_answers() {
        let seq = [103, 107, 109, 112, 101, 103, 105, 107, 115, 109, 111, 113, 102];
        assert_eq!(lis_brute(&seq).unwrap(), 7);
        assert!(lis_brute(&[0; 17]).is_err());
        let a: Vec<char> = "as".chars().collect();
        let b: Vec<char> = "pass".chars().collect();
        assert_eq!(ed_brute(&a, &b, EdCosts::EXPERIMENT).unwrap(), 4);
        let g = Cfg::parse("S -> ε").unwrap();
        assert!(cfg_brute(&g, &[]).unwrap());
        assert!(!cfg_brute(&g, &['a']).unwrap());
    }
}
