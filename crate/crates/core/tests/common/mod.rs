//! Oracles written from scratch for the tests, sharing no code with the
//! library they check.

#![allow(dead_code)]

pub fn modpow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Recursive-descent value of a space-separated expression over Z_p, using
/// Fermat inverses. `None` on division by zero or a malformed input.
pub fn eval_expr(tokens: &[String], p: u64) -> Option<u64> {
    fn atom(t: &[String], i: &mut usize, p: u64) -> Option<u64> {
        let s = t.get(*i)?;
        *i += 1;
        if s == "(" {
            let v = sum(t, i, p)?;
            (t.get(*i)? == ")").then(|| *i += 1)?;
            Some(v)
        } else {
            s.parse::<u64>().ok().filter(|v| *v < p)
        }
    }
    fn prod(t: &[String], i: &mut usize, p: u64) -> Option<u64> {
        let mut v = atom(t, i, p)?;
        while let Some(op) = t.get(*i).filter(|s| *s == "×" || *s == "÷") {
            let op = op.clone();
            *i += 1;
            let w = atom(t, i, p)?;
            v = if op == "×" {
                v * w % p
            } else {
                if w == 0 {
                    return None;
                }
                v * modpow(w, p - 2, p) % p
            };
        }
        Some(v)
    }
    fn sum(t: &[String], i: &mut usize, p: u64) -> Option<u64> {
        let mut v = prod(t, i, p)?;
        while let Some(op) = t.get(*i).filter(|s| *s == "+" || *s == "−") {
            let op = op.clone();
            *i += 1;
            let w = prod(t, i, p)?;
            v = if op == "+" { (v + w) % p } else { (v + p - w) % p };
        }
        Some(v)
    }
    let mut i = 0;
    let v = sum(tokens, &mut i, p)?;
    (i == tokens.len()).then_some(v)
}

/// Reads `x_j = v ,` rows into an assignment.
pub fn read_assignment(tokens: &[String], m: usize) -> Option<Vec<u64>> {
    let mut x = vec![None; m];
    for row in tokens.split(|t| t == ",").filter(|r| !r.is_empty()) {
        match row {
            [var, eq, v] if eq == "=" => {
                let j: usize = var.strip_prefix('x')?.parse().ok()?;
                *x.get_mut(j.checked_sub(1)?)? = Some(v.parse().ok()?);
            }
            _ => return None,
        }
    }
    x.into_iter().collect()
}

pub fn satisfies(a: &[Vec<u64>], b: &[u64], x: &[u64], p: u64) -> bool {
    a.iter().zip(b).all(|(row, &bj)| row.iter().zip(x).map(|(c, v)| c * v % p).sum::<u64>() % p == bj % p)
}

/// Longest strictly increasing subsequence by trying every subset.
pub fn lis_subsets(seq: &[i64]) -> usize {
    let n = seq.len();
    (0u32..1 << n)
        .filter(|mask| {
            let picked: Vec<i64> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| seq[i]).collect();
            picked.windows(2).all(|w| w[0] < w[1])
        })
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

/// Edit distance with the given insert, delete and replace costs, by
/// memoized recursion on prefixes.
pub fn edit_distance(a: &[char], b: &[char], ins: i64, del: i64, rep: i64) -> i64 {
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    fn go(a: &[char], b: &[char], i: usize, j: usize, c: (i64, i64, i64), memo: &mut Vec<Vec<Option<i64>>>) -> i64 {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if i == 0 {
            c.0 * j as i64
        } else if j == 0 {
            c.1 * i as i64
        } else {
            let sub = go(a, b, i - 1, j - 1, c, memo) + if a[i - 1] == b[j - 1] { 0 } else { c.2 };
            sub.min(go(a, b, i - 1, j, c, memo) + c.1).min(go(a, b, i, j - 1, c, memo) + c.0)
        };
        memo[i][j] = Some(v);
        v
    }
    go(a, b, a.len(), b.len(), (ins, del, rep), &mut memo)
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// Whether `g` derives `word`, by closing the set of facts
/// "symbol derives word[i..j]" under the rules until nothing changes.
pub fn cfg_derives(g: &cotlab::dp::cfg::Cfg, word: &[char]) -> bool {
    use cotlab::dp::cfg::Sym;
    let n = word.len();
    let nv = g.names.len();
    let mut d = vec![vec![vec![false; n + 1]; n + 1]; nv];
    let holds = |d: &Vec<Vec<Vec<bool>>>, s: Sym, i: usize, j: usize| match s {
        Sym::T(c) => j == i + 1 && word[i] == c,
        Sym::N(a) => d[a][i][j],
    };
    loop {
        let mut changed = false;
        for r in &g.rules {
            for i in 0..=n {
                for j in i..=n {
                    if d[r.lhs][i][j] {
                        continue;
                    }
                    let ok = match r.rhs {
                        None => i == j,
                        Some((x, y)) => (i..=j).any(|k| holds(&d, x, i, k) && holds(&d, y, k, j)),
                    };
                    if ok {
                        d[r.lhs][i][j] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return d[g.start][0][n];
        }
    }
}

/// Truth value of a formula written with `0 1 ¬ ∧ ∨` and brackets, binding
/// `¬` tightest, then `∧`, then `∨`.
pub fn bool_value(text: &str) -> Option<bool> {
    fn atom(c: &[char], i: &mut usize) -> Option<bool> {
        let ch = *c.get(*i)?;
        *i += 1;
        match ch {
            '0' => Some(false),
            '1' => Some(true),
            '¬' => atom(c, i).map(|v| !v),
            '(' => {
                let v = or(c, i)?;
                (c.get(*i) == Some(&')')).then(|| *i += 1)?;
                Some(v)
            }
            _ => None,
        }
    }
    fn and(c: &[char], i: &mut usize) -> Option<bool> {
        let mut v = atom(c, i)?;
        while c.get(*i) == Some(&'∧') {
            *i += 1;
            v &= atom(c, i)?;
        }
        Some(v)
    }
    fn or(c: &[char], i: &mut usize) -> Option<bool> {
        let mut v = and(c, i)?;
        while c.get(*i) == Some(&'∨') {
            *i += 1;
            v |= and(c, i)?;
        }
        Some(v)
    }
    let c: Vec<char> = text.chars().filter(|ch| !ch.is_whitespace()).collect();
    let mut i = 0;
    let v = or(&c, &mut i)?;
    (i == c.len()).then_some(v)
}

/// Final state of a table-driven DFA on `word` (symbol indices).
pub fn dfa_final(delta: &[Vec<usize>], start: usize, word: &[usize]) -> usize {
    word.iter().fold(start, |q, &a| delta[q][a])
}

/// Rows `c1 x1 + c2 x2 = b ,` of an equation block, as dense coefficient
/// vectors over `m` unknowns. A bare `xj` has coefficient 1.
pub fn read_rows(tokens: &[String], m: usize) -> Option<Vec<(Vec<u64>, u64)>> {
    let mut rows = Vec::new();
    for row in tokens.split(|t| t == ",").filter(|r| !r.is_empty()) {
        let eq = row.iter().position(|t| t == "=")?;
        let [b] = &row[eq + 1..] else { return None };
        let mut coef = vec![0; m];
        for term in row[..eq].split(|t| t == "+") {
            let (c, v) = match term {
                [v] => (1, v),
                [c, v] => (c.parse().ok()?, v),
                _ => return None,
            };
            let j: usize = v.strip_prefix('x')?.parse().ok()?;
            *coef.get_mut(j.checked_sub(1)?)? += c;
        }
        rows.push((coef, b.parse().ok()?));
    }
    Some(rows)
}
