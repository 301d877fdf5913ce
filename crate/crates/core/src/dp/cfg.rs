//! Context-free membership with a CYK-style recurrence.
//!
//! Grammars are in canonical form: every rule is `A -> ε` or `A -> B C`
//! with `B`, `C` nonterminals or terminals. The value
//! `dp(t, i, j, k, A, r)` is 1 when, using at most `t` rounds, `A` derives
//! `v[i+1..=j]` through a rule among the first `r` whose split point is at
//! most `k`. A reference to the same span `(i, j)` reads round `t - 1`,
//! which keeps the state graph acyclic.

use super::{run_dp, Agg, DpSpec, DpTrace};
use crate::error::{Error, Result};
use crate::sample::{CotSample, Task};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sym {
    N(usize),
    T(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rule {
    pub lhs: usize,
    pub rhs: Option<(Sym, Sym)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    /// Names of the nonterminals; index 0.. are the ids used in rules.
    pub names: Vec<char>,
    pub terminals: Vec<char>,
    pub rules: Vec<Rule>,
    pub start: usize,
}

impl Cfg {
    pub fn new(names: Vec<char>, terminals: Vec<char>, rules: Vec<Rule>, start: usize) -> Result<Cfg> {
        let g = Cfg { names, terminals, rules, start };
        g.validate()?;
        Ok(g)
    }

    pub fn nv(&self) -> usize {
        self.names.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::NonCanonicalGrammar(m));
        if self.start >= self.nv() {
            return bad("start symbol out of range".into());
        }
        for (idx, r) in self.rules.iter().enumerate() {
            if r.lhs >= self.nv() {
                return bad(format!("rule {idx} has an unknown left-hand side"));
            }
            if let Some((b, c)) = r.rhs {
                for s in [b, c] {
                    match s {
                        Sym::N(x) if x >= self.nv() => return bad(format!("rule {idx} uses unknown nonterminal")),
                        Sym::T(ch) if !self.terminals.contains(&ch) => {
                            return bad(format!("rule {idx} uses unknown terminal {ch:?}"))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }

    /// Parse rules such as `S -> A b ; A -> ε ; A -> a S`. Uppercase letters
    /// are nonterminals, lowercase letters terminals; `S` starts if present.
    /// An optional `S A B :` header fixes the nonterminals, their order and
    /// the start symbol (the first), as [`Display`](fmt::Display) writes.
    /// Without one, nonterminals are numbered by first appearance except
    /// that `S` is moved to the front.
    pub fn parse(text: &str) -> Result<Cfg> {
        let mut names: Vec<char> = Vec::new();
        let mut terminals: Vec<char> = Vec::new();
        let mut raw = Vec::new();
        let (header, text) = match text.split_once(':') {
            Some((h, rest)) => (Some(h), rest),
            None => (None, text),
        };
        for tok in header.into_iter().flat_map(str::split_whitespace) {
            let mut cs = tok.chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) if c.is_ascii_uppercase() && !names.contains(&c) => names.push(c),
                _ => return Err(Error::NonCanonicalGrammar(format!("bad nonterminal {tok:?} in header"))),
            }
        }
        let declared = header.is_some();
        for (idx, part) in text.split(';').map(str::trim).filter(|s| !s.is_empty()).enumerate() {
            let (l, r) = part
                .split_once("->")
                .ok_or_else(|| Error::Parse { pos: idx, msg: "rule needs '->'".into() })?;
            let l = l.trim();
            let lhs = l.chars().next().filter(|c| c.is_ascii_uppercase() && l.len() == 1).ok_or_else(|| {
                Error::NonCanonicalGrammar(format!("left-hand side {l:?} is not a single nonterminal"))
            })?;
            let rhs: Vec<char> = r.split_whitespace().flat_map(|s| s.chars()).filter(|c| *c != 'ε').collect();
            if !(rhs.is_empty() || rhs.len() == 2) {
                return Err(Error::NonCanonicalGrammar(format!("rule {part:?} has {} symbols", rhs.len())));
            }
            for &c in std::iter::once(&lhs).chain(&rhs) {
                if c.is_ascii_uppercase() {
                    if !names.contains(&c) {
                        if declared {
                            return Err(Error::NonCanonicalGrammar(format!("{c} is not declared")));
                        }
                        names.push(c);
                    }
                } else if c.is_ascii_lowercase() || c.is_ascii_digit() {
                    if !terminals.contains(&c) {
                        terminals.push(c);
                    }
                } else {
                    return Err(Error::NonCanonicalGrammar(format!("bad symbol {c:?}")));
                }
            }
            raw.push((lhs, rhs));
        }
        if raw.is_empty() {
            return Err(Error::NonCanonicalGrammar("no rules".into()));
        }
        if let Some(k) = names.iter().position(|&c| c == 'S').filter(|_| !declared) {
            let s = names.remove(k);
            names.insert(0, s);
        }
        let id = |c: char| names.iter().position(|&n| n == c).unwrap();
        let sym = |c: char| if c.is_ascii_uppercase() { Sym::N(id(c)) } else { Sym::T(c) };
        let rules = raw
            .iter()
            .map(|(l, r)| Rule { lhs: id(*l), rhs: if r.is_empty() { None } else { Some((sym(r[0]), sym(r[1]))) } })
            .collect();
        Cfg::new(names.clone(), terminals, rules, 0)
    }

    /// Nullable flags per nonterminal.
    pub fn nullable(&self) -> Vec<bool> {
        let mut n = vec![false; self.nv()];
        loop {
            let mut changed = false;
            for r in &self.rules {
                let ok = match r.rhs {
                    None => true,
                    Some((b, c)) => [b, c].iter().all(|s| matches!(s, Sym::N(x) if n[*x])),
                };
                if ok && !n[r.lhs] {
                    n[r.lhs] = true;
                    changed = true;
                }
            }
            if !changed {
                return n;
            }
        }
    }

    /// Shortest yield length per nonterminal (`usize::MAX` if none).
    pub fn min_len(&self) -> Vec<usize> {
        let mut len = vec![usize::MAX; self.nv()];
        let sl = |s: Sym, len: &Vec<usize>| match s {
            Sym::T(_) => 1,
            Sym::N(x) => len[x],
        };
        loop {
            let mut changed = false;
            for r in &self.rules {
                let l = match r.rhs {
                    None => 0,
                    Some((b, c)) => sl(b, &len).saturating_add(sl(c, &len)),
                };
                if l < len[r.lhs] {
                    len[r.lhs] = l;
                    changed = true;
                }
            }
            if !changed {
                return len;
            }
        }
    }
}

impl fmt::Display for Cfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |x: Sym| match x {
            Sym::N(i) => self.names[i],
            Sym::T(c) => c,
        };
        let parts: Vec<String> = self
            .rules
            .iter()
            .map(|r| match r.rhs {
                None => format!("{} -> ε", self.names[r.lhs]),
                Some((b, c)) => format!("{} -> {} {}", self.names[r.lhs], s(b), s(c)),
            })
            .collect();
        let mut names: Vec<char> = vec![self.names[self.start]];
        names.extend(self.names.iter().enumerate().filter(|(i, _)| *i != self.start).map(|(_, c)| *c));
        let header: Vec<String> = names.iter().map(char::to_string).collect();
        write!(f, "{} : {}", header.join(" "), parts.join(" ; "))
    }
}

/// State `(t, i, j, k, A, r)`.
pub type CfgState = (usize, usize, usize, usize, usize, usize);

pub struct CfgSpec<'g> {
    pub g: &'g Cfg,
    pub n: usize,
}

impl DpSpec for CfgSpec<'_> {
    type State = CfgState;
    type Token = char;

    fn states(&self) -> Vec<CfgState> {
        let (nv, m, n) = (self.g.nv(), self.g.rules.len(), self.n);
        let mut out = Vec::new();
        for t in 0..=nv {
            for len in 0..=n {
                for i in 0..=n - len {
                    let j = i + len;
                    for k in i..=j {
                        for a in 0..nv {
                            for r in 0..=m {
                                out.push((t, i, j, k, a, r));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn inputs(&self, &(_, _, j, k, _, _): &CfgState) -> Vec<Option<usize>> {
        vec![k.checked_sub(1), j.checked_sub(1)]
    }

    fn predecessors(&self, &(t, i, j, k, a, r): &CfgState) -> Vec<Option<CfgState>> {
        let m = self.g.rules.len();
        if t == 0 {
            return vec![None, None, None];
        }
        if r == 0 {
            let prev = if k == i { (t - 1, i, j, j, a, m) } else { (t, i, j, k - 1, a, m) };
            return vec![Some(prev), None, None];
        }
        let rule = self.g.rules[r - 1];
        let mut deps = vec![Some((t, i, j, k, a, r - 1)), None, None];
        if let (true, Some((b, c))) = (rule.lhs == a, rule.rhs) {
            if let Sym::N(bx) = b {
                deps[1] = Some((if k == j { t - 1 } else { t }, i, k, k, bx, m));
            }
            if let Sym::N(cx) = c {
                deps[2] = Some((if k == i { t - 1 } else { t }, k, j, j, cx, m));
            }
        }
        deps
    }

    fn transition(&self, &(t, i, j, k, a, r): &CfgState, tok: &[Option<&char>], d: &[Option<i64>]) -> i64 {
        if t == 0 {
            let eps = i == j && self.g.rules[..r].iter().any(|ru| ru.lhs == a && ru.rhs.is_none());
            return eps as i64;
        }
        if r == 0 {
            return d[0].unwrap();
        }
        if d[0] == Some(1) {
            return 1;
        }
        let rule = self.g.rules[r - 1];
        let Some((b, c)) = rule.rhs.filter(|_| rule.lhs == a) else { return 0 };
        let left = match b {
            Sym::T(ch) => k == i + 1 && tok[0] == Some(&ch),
            Sym::N(_) => d[1] == Some(1),
        };
        let right = match c {
            Sym::T(ch) => j == k + 1 && tok[1] == Some(&ch),
            Sym::N(_) => d[2] == Some(1),
        };
        (left && right) as i64
    }

    fn aggregation(&self) -> Agg {
        Agg::Max
    }

    fn in_answer(&self, s: &CfgState) -> bool {
        *s == (self.g.nv(), 0, self.n, self.n, self.g.start, self.g.rules.len())
    }
}

pub fn cfg_membership(g: &Cfg, word: &[char]) -> Result<(bool, DpTrace<CfgState>)> {
    g.validate()?;
    let tr = run_dp(&CfgSpec { g, n: word.len() }, word)?;
    Ok((tr.answer == 1, tr))
}

/// One step per span length: for every start `i` and nonterminal `A`, a bit
/// telling whether `A` derives `word[i..i + len]`.
pub fn cfg_sample(g: &Cfg, word: &[char]) -> Result<CotSample> {
    let (ok, tr) = cfg_membership(g, word)?;
    let map = tr.as_map();
    let (nv, m, n) = (g.nv(), g.rules.len(), word.len());
    let steps = (0..=n)
        .map(|len| {
            let mut row = Vec::new();
            for i in 0..=n - len {
                for a in 0..nv {
                    row.push(map[&(nv, i, i + len, i + len, a, m)].to_string());
                }
            }
            row
        })
        .collect();
    let mut problem: Vec<String> = g.to_string().split_whitespace().map(String::from).collect();
    problem.push("|".into());
    problem.extend(word.iter().map(|c| c.to_string()));
    Ok(CotSample { task: Task::Cfg, problem, steps, answer: vec![(ok as u8).to_string()] })
}
