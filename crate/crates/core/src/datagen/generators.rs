//! Random problem generators for every task.

use super::rng::SplitMix64;
use crate::arith::{Expr, Op, Tok};
use crate::dp::cfg::{Cfg, Rule, Sym};
use crate::equation::{solve_direct, LinearSystem};
use crate::field::raw;

/// Build an expression with `n` operators whose value is a sampled answer.
///
/// Starting from one numeral, each round replaces a random numeral `v` by
/// `t1 op t2` with `op(t1, t2) = v`, wrapping it in brackets only when the
/// surrounding operators would otherwise change the parse. `t2` is uniform
/// over valid values (nonzero for `×` and `÷`) and `t1` is solved in Z_p.
pub fn gen_arithmetic(rng: &mut SplitMix64, n: usize, p: u64) -> (Expr, u64) {
    let answer = rng.below(p);
    let mut s = vec![Tok::Num(answer)];
    for _ in 0..n {
        let nums: Vec<usize> = (0..s.len()).filter(|&i| matches!(s[i], Tok::Num(_))).collect();
        let pos = *rng.choose(&nums);
        let Tok::Num(v) = s[pos] else { unreachable!() };
        let op = *rng.choose(&Op::ALL);
        let t2 = match op {
            Op::Add | Op::Sub => rng.below(p),
            Op::Mul | Op::Div => 1 + rng.below(p - 1),
        };
        let t1 = match op {
            Op::Add => raw::sub(v, t2, p),
            Op::Sub => raw::add(v, t2, p),
            Op::Mul => raw::div(v, t2, p).unwrap(),
            Op::Div => raw::mul(v, t2, p),
        };
        let before = if pos > 0 { Some(s[pos - 1]) } else { None };
        let after = s.get(pos + 1).copied();
        let bracket = before == Some(Tok::Op(Op::Div))
            || (op.is_additive() && matches!(before, Some(Tok::Op(Op::Sub)) | Some(Tok::Op(Op::Mul))))
            || (op.is_additive() && after.map(Tok::is_mul_div).unwrap_or(false));
        let mut ins = vec![Tok::Num(t1), Tok::Op(op), Tok::Num(t2)];
        if bracket {
            ins.insert(0, Tok::LParen);
            ins.push(Tok::RParen);
        }
        s.splice(pos..=pos, ins);
    }
    (Expr { tokens: s, p }, answer)
}

/// `b` uniform, then `A` resampled until it is invertible mod p.
pub fn gen_equation(rng: &mut SplitMix64, m: usize, p: u64) -> LinearSystem {
    let b: Vec<u64> = (0..m).map(|_| rng.below(p)).collect();
    loop {
        let a: Vec<Vec<u64>> = (0..m).map(|_| (0..m).map(|_| rng.below(p)).collect()).collect();
        let sys = LinearSystem::new(p, a, b.clone()).expect("valid dimensions");
        if solve_direct(&sys).is_ok() {
            return sys;
        }
    }
}

pub const LIS_LO: i64 = 101;
pub const LIS_HI: i64 = 250;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LisPlan {
    /// Length of the planted part.
    pub l: usize,
    /// Number of sorted runs.
    pub t: usize,
}

impl LisPlan {
    pub fn lower_bound(&self) -> usize {
        self.l.div_ceil(self.t)
    }
}

/// `t` sorted runs covering `l` values, then `n - l` values inserted at
/// random positions. Requires `3 <= n <= 150`.
pub fn gen_lis(rng: &mut SplitMix64, n: usize) -> (Vec<i64>, LisPlan) {
    assert!((3..=150).contains(&n), "sequence length must be in 3..=150");
    let l = rng.range(3, n as i64) as usize;
    let t = rng.range(1, 3) as usize;
    let mut a = vec![0usize];
    if t == 2 {
        a.push(rng.range(1, (l / 2 + 1) as i64) as usize);
    } else if t == 3 {
        let j = rng.range(1, (l / 3 + 1) as i64) as usize;
        let k = rng.range(1, ((l - j) / 2 + 1) as i64) as usize;
        a.push(j);
        a.push(j + k);
    }
    a.push(l);
    // Distinct draws keep each sorted run strictly increasing.
    let mut pool: Vec<i64> = (LIS_LO..=LIS_HI).collect();
    rng.shuffle(&mut pool);
    let mut s: Vec<i64> = pool[..l].to_vec();
    for w in a.windows(2) {
        s[w[0]..w[1]].sort_unstable();
    }
    for _ in 0..n - l {
        let v = rng.range(LIS_LO, LIS_HI);
        let at = rng.index(s.len() + 1);
        s.insert(at, v);
    }
    (s, LisPlan { l, t })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdSample {
    pub s1: Vec<char>,
    pub s2: Vec<char>,
    pub alphabet: Vec<char>,
    /// True when `s2` was sampled independently of `s1`.
    pub independent: bool,
}

/// Requires `n >= 3` so the target length window is nonempty.
pub fn gen_ed(rng: &mut SplitMix64, n: usize) -> EdSample {
    let size = rng.range(3, 10) as usize;
    let mut letters: Vec<char> = ('a'..='z').collect();
    rng.shuffle(&mut letters);
    let alphabet: Vec<char> = letters[..size].to_vec();
    let s1: Vec<char> = (0..n).map(|_| *rng.choose(&alphabet)).collect();
    let lo = n.saturating_sub(3);
    let hi = n + 2;
    if rng.unit() < 0.4 {
        let l = rng.range(lo as i64, hi as i64) as usize;
        let s2 = (0..l).map(|_| *rng.choose(&alphabet)).collect();
        return EdSample { s1, s2, alphabet, independent: true };
    }
    loop {
        let mut s2 = s1.clone();
        for _ in 0..n {
            let letter = *rng.choose(&alphabet);
            if s2.is_empty() {
                s2.push(letter);
                continue;
            }
            let pos = rng.index(s2.len());
            match rng.below(3) {
                0 => {
                    s2.remove(pos);
                }
                1 => s2[pos] = letter,
                _ => s2.insert(pos, letter),
            }
        }
        if (lo..=hi).contains(&s2.len()) {
            return EdSample { s1, s2, alphabet, independent: false };
        }
    }
}

/// Random canonical grammar over terminals `a`, `b`.
pub fn gen_cfg(rng: &mut SplitMix64, max_nonterminals: usize, max_rules: usize) -> Cfg {
    let nv = rng.range(1, max_nonterminals as i64) as usize;
    let nr = rng.range(1, max_rules as i64) as usize;
    let names: Vec<char> = "SABCDEFG".chars().take(nv).collect();
    let terminals = vec!['a', 'b'];
    let sym = |rng: &mut SplitMix64| {
        if rng.below(2) == 0 {
            Sym::N(rng.index(nv))
        } else {
            Sym::T(*rng.choose(&terminals))
        }
    };
    let rules = (0..nr)
        .map(|_| {
            let lhs = rng.index(nv);
            let rhs = if rng.below(4) == 0 { None } else { Some((sym(rng), sym(rng))) };
            Rule { lhs, rhs }
        })
        .collect();
    Cfg::new(names, terminals, rules, 0).expect("generated grammar is canonical")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_is_planted() {
        let mut r = SplitMix64::new(3);
        for n in 0..8 {
            let (e, ans) = gen_arithmetic(&mut r, n, 11);
            let e = Expr::from_tokens(e.tokens, 11).unwrap();
            assert_eq!(e.op_count(), n);
            assert_eq!(e.evaluate().unwrap(), ans);
        }
    }

    #[test]
    fn lis_bounds() {
        let mut r = SplitMix64::new(5);
        for _ in 0..200 {
            let (s, plan) = gen_lis(&mut r, 20);
            assert_eq!(s.len(), 20);
            assert!(crate::dp::lis::lis_answer(&s) as usize >= plan.lower_bound());
            assert!(s.iter().all(|v| (LIS_LO..=LIS_HI).contains(v)));
        }
    }

    #[test]
    fn ed_lengths() {
        let mut r = SplitMix64::new(9);
        for _ in 0..200 {
            let e = gen_ed(&mut r, 6);
            assert!((3..=8).contains(&e.s2.len()));
            assert!(e.s1.iter().chain(&e.s2).all(|c| e.alphabet.contains(c)));
        }
    }
}
