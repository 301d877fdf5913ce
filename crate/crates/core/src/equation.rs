//! Linear systems over Z_p and the elimination chain of thought.
//!
//! Step `i` picks the first row at or below `i` whose coefficient on `x_i`
//! is nonzero (rows above `i` already hold earlier pivots), swaps it into
//! row `i`, scales it so `x_i` has coefficient 1, and clears `x_i` from
//! every other row. After `m` steps each row reads `x_j = v_j`.

use crate::error::{Error, Result};
use crate::field::{is_prime, raw};
use crate::sample::{CotSample, Task};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearSystem {
    pub m: usize,
    pub p: u64,
    pub a: Vec<Vec<u64>>,
    pub b: Vec<u64>,
}

impl LinearSystem {
    pub fn new(p: u64, a: Vec<Vec<u64>>, b: Vec<u64>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let m = a.len();
        if m == 0 || b.len() != m || a.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(format!("expected square system, got {m} rows")));
        }
        let a = a.into_iter().map(|r| r.into_iter().map(|v| v % p).collect()).collect();
        let b = b.into_iter().map(|v| v % p).collect();
        Ok(LinearSystem { m, p, a, b })
    }

    /// Parse `c x1 + c x2 + … = c ,` equations. A missing coefficient means 1,
    /// a missing variable means 0.
    pub fn parse(text: &str, p: u64) -> Result<Self> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let mut rows: Vec<(Vec<(usize, u64)>, u64)> = Vec::new();
        let mut pos = 0;
        let err = |pos: usize, msg: &str| Error::Parse { pos, msg: msg.to_string() };
        let num = |s: &str, pos: usize| -> Result<u64> {
            let v: u64 = s.parse().map_err(|_| err(pos, "expected a numeral"))?;
            if v >= p {
                return Err(err(pos, "numeral out of range"));
            }
            Ok(v)
        };
        while pos < toks.len() {
            let mut terms = Vec::new();
            loop {
                let mut coef = 1;
                if let Some(t) = toks.get(pos) {
                    if t.chars().all(|c| c.is_ascii_digit()) {
                        coef = num(t, pos)?;
                        pos += 1;
                    }
                }
                let var = toks
                    .get(pos)
                    .and_then(|t| parse_var(t))
                    .ok_or_else(|| err(pos, "expected a variable"))?;
                terms.push((var, coef));
                pos += 1;
                match toks.get(pos) {
                    Some(&"+") => pos += 1,
                    Some(&"=") => {
                        pos += 1;
                        break;
                    }
                    _ => return Err(err(pos, "expected '+' or '='")),
                }
            }
            let rhs = num(toks.get(pos).ok_or_else(|| err(pos, "missing right-hand side"))?, pos)?;
            pos += 1;
            if toks.get(pos) != Some(&",") {
                return Err(err(pos, "expected ','"));
            }
            pos += 1;
            rows.push((terms, rhs));
        }
        let m = rows.len();
        if m == 0 {
            return Err(err(0, "no equations"));
        }
        let mut a = vec![vec![0; m]; m];
        let mut b = vec![0; m];
        for (j, (terms, rhs)) in rows.into_iter().enumerate() {
            for (var, c) in terms {
                if var == 0 || var > m {
                    return Err(err(0, "variable index out of range"));
                }
                a[j][var - 1] = c;
            }
            b[j] = rhs;
        }
        LinearSystem::new(p, a, b)
    }

    /// Full rendering with every coefficient explicit.
    pub fn render(&self) -> String {
        GaussState::start(self).render()
    }

    pub fn tokens(&self) -> Vec<String> {
        GaussState::start(self).tokens()
    }

    pub fn residual(&self, x: &[u64]) -> Vec<u64> {
        (0..self.m)
            .map(|j| {
                let lhs = (0..self.m).fold(0, |acc, k| raw::add(acc, raw::mul(self.a[j][k], x[k], self.p), self.p));
                raw::sub(lhs, self.b[j], self.p)
            })
            .collect()
    }

    pub fn trace(&self) -> Result<CotSample> {
        let mut st = GaussState::start(self);
        let mut steps = Vec::new();
        while st.step < self.m {
            st = st.next()?;
            steps.push(st.tokens());
        }
        Ok(CotSample { task: Task::Equation, problem: self.tokens(), answer: steps.last().unwrap().clone(), steps })
    }
}

pub fn parse_var(t: &str) -> Option<usize> {
    t.strip_prefix('x').and_then(|d| d.parse().ok())
}

/// The system after `step` elimination steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussState {
    pub step: usize,
    pub sys: LinearSystem,
    /// Row index (0-based) chosen as pivot in the last step.
    pub last_pivot: Option<usize>,
}

impl GaussState {
    pub fn start(sys: &LinearSystem) -> Self {
        GaussState { step: 0, sys: sys.clone(), last_pivot: None }
    }

    pub fn next(&self) -> Result<GaussState> {
        let s = &self.sys;
        let (m, p) = (s.m, s.p);
        let i = self.step; // 0-based column being eliminated
        if i >= m {
            return Err(Error::Invalid("all variables already eliminated".into()));
        }
        let k = (i..m)
            .find(|&k| (0..i).all(|c| s.a[k][c] == 0) && s.a[k][i] != 0)
            .ok_or(Error::SingularSystem)?;
        let mut a = s.a.clone();
        let mut b = s.b.clone();
        a.swap(i, k);
        b.swap(i, k);
        let inv = raw::inv(a[i][i], p).unwrap();
        for c in 0..m {
            a[i][c] = raw::mul(a[i][c], inv, p);
        }
        b[i] = raw::mul(b[i], inv, p);
        for j in 0..m {
            if j == i {
                continue;
            }
            let f = a[j][i];
            for c in 0..m {
                a[j][c] = raw::sub(a[j][c], raw::mul(f, a[i][c], p), p);
            }
            b[j] = raw::sub(b[j], raw::mul(f, b[i], p), p);
        }
        Ok(GaussState { step: i + 1, sys: LinearSystem { m, p, a, b }, last_pivot: Some(k) })
    }

    /// Rows `j <= step` read `x_j + Σ_{k>step} a x_k = b`; later rows list
    /// every `k > step` with explicit coefficients.
    pub fn tokens(&self) -> Vec<String> {
        let s = &self.sys;
        let i = self.step;
        let mut out = Vec::new();
        for j in 0..s.m {
            let mut first = true;
            if j < i {
                out.push(format!("x{}", j + 1));
                first = false;
            }
            for k in i..s.m {
                if !first {
                    out.push("+".into());
                }
                first = false;
                out.push(s.a[j][k].to_string());
                out.push(format!("x{}", k + 1));
            }
            out.push("=".into());
            out.push(s.b[j].to_string());
            out.push(",".into());
        }
        out
    }

    pub fn render(&self) -> String {
        self.tokens().join(" ")
    }
}

/// Independent solver: Gauss-Jordan choosing the last usable pivot row.
pub fn solve_direct(sys: &LinearSystem) -> Result<Vec<u64>> {
    let (m, p) = (sys.m, sys.p);
    let mut aug: Vec<Vec<u64>> = (0..m)
        .map(|j| {
            let mut r = sys.a[j].clone();
            r.push(sys.b[j]);
            r
        })
        .collect();
    let mut used = vec![false; m];
    let mut pivot_row = vec![0; m];
    for c in 0..m {
        let r = (0..m).rev().find(|&r| !used[r] && aug[r][c] != 0).ok_or(Error::SingularSystem)?;
        used[r] = true;
        pivot_row[c] = r;
        let inv = raw::inv(aug[r][c], p).unwrap();
        for v in aug[r].iter_mut() {
            *v = raw::mul(*v, inv, p);
        }
        let pr = aug[r].clone();
        for (q, row) in aug.iter_mut().enumerate() {
            if q != r && row[c] != 0 {
                let f = row[c];
                for (v, pv) in row.iter_mut().zip(&pr) {
                    *v = raw::sub(*v, raw::mul(f, *pv, p), p);
                }
            }
        }
    }
    Ok((0..m).map(|c| aug[pivot_row[c]][m]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = "2 x1 + 3 x2 + 3 x3 = 8 , 1 x1 + 7 x2 + 0 x3 = 0 , 0 x1 + 2 x2 + 1 x3 = 1 ,";

    #[test]
    fn parse_round_trip() {
        let s = LinearSystem::parse(WORKED, 11).unwrap();
        assert_eq!(s.a, vec![vec![2, 3, 3], vec![1, 7, 0], vec![0, 2, 1]]);
        assert_eq!(s.b, vec![8, 0, 1]);
        assert_eq!(s.render(), WORKED);
        let one = LinearSystem::parse("5 x1 = 3 ,", 11).unwrap();
        assert_eq!((one.a.clone(), one.b.clone()), (vec![vec![5]], vec![3]));
        assert!(LinearSystem::parse("5 x1 3 ,", 11).is_err());
    }

    #[test]
    fn worked_blocks() {
        let s = LinearSystem::parse(WORKED, 11).unwrap();
        let s1 = GaussState::start(&s).next().unwrap();
        assert_eq!(s1.render(), "x1 + 7 x2 + 7 x3 = 4 , 0 x2 + 4 x3 = 7 , 2 x2 + 1 x3 = 1 ,");
        let s2 = s1.next().unwrap();
        assert_eq!(s2.render(), "x1 + 9 x3 = 6 , x2 + 6 x3 = 6 , 4 x3 = 7 ,");
        assert_eq!(s2.last_pivot, Some(2));
        let s3 = s2.next().unwrap();
        assert_eq!(s3.render(), "x1 = 4 , x2 = 1 , x3 = 10 ,");
        assert_eq!(solve_direct(&s).unwrap(), vec![4, 1, 10]);
        let t = s.trace().unwrap();
        assert_eq!(t.steps.len(), 3);
        assert_eq!(t.answer.join(" "), "x1 = 4 , x2 = 1 , x3 = 10 ,");
    }

    #[test]
    fn singular_and_trivial() {
        let s = LinearSystem::new(5, vec![vec![1, 2], vec![2, 4]], vec![0, 0]).unwrap();
        assert_eq!(solve_direct(&s), Err(Error::SingularSystem));
        assert_eq!(s.trace(), Err(Error::SingularSystem));
        let id = LinearSystem::new(7, vec![vec![1, 0], vec![0, 1]], vec![3, 5]).unwrap();
        assert_eq!(solve_direct(&id).unwrap(), vec![3, 5]);
        let one = LinearSystem::parse("5 x1 = 3 ,", 11).unwrap();
        assert_eq!(one.trace().unwrap().answer.join(" "), "x1 = 5 ,");
    }
}
