//! Arithmetic expressions over Z_p and their step-by-step reduction.
//!
//! Each chain-of-thought step evaluates the leftmost *handle*: a triple
//! `a op b` of neighbouring numerals whose context lets it be computed
//! before anything else. A bracket pair left wrapping a single numeral is
//! dropped in the same step.

use crate::error::{Error, Result};
use crate::field::raw;
use crate::sample::{CotSample, Task};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "−",
            Op::Mul => "×",
            Op::Div => "÷",
        }
    }

    pub fn is_additive(self) -> bool {
        matches!(self, Op::Add | Op::Sub)
    }

    pub fn apply(self, a: u64, b: u64, p: u64) -> Result<u64> {
        Ok(match self {
            Op::Add => raw::add(a, b, p),
            Op::Sub => raw::sub(a, b, p),
            Op::Mul => raw::mul(a, b, p),
            Op::Div => raw::div(a, b, p).ok_or(Error::DivisionByZero)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tok {
    Num(u64),
    Op(Op),
    LParen,
    RParen,
    Eq,
}

impl Tok {
    pub fn is_mul_div(self) -> bool {
        matches!(self, Tok::Op(Op::Mul) | Tok::Op(Op::Div))
    }

    pub fn parse_one(s: &str, p: u64) -> Option<Tok> {
        Some(match s {
            "+" => Tok::Op(Op::Add),
            "−" | "-" => Tok::Op(Op::Sub),
            "×" | "*" | "x" => Tok::Op(Op::Mul),
            "÷" | "/" => Tok::Op(Op::Div),
            "(" => Tok::LParen,
            ")" => Tok::RParen,
            "=" => Tok::Eq,
            _ => {
                let v: u64 = s.parse().ok()?;
                if v >= p {
                    return None;
                }
                Tok::Num(v)
            }
        })
    }
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Op(o) => f.write_str(o.symbol()),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::Eq => f.write_str("="),
        }
    }
}

/// Split text into raw token strings. Whitespace separates tokens; symbols
/// also separate themselves, so compact text like `1+5×(1−2)` works too.
pub fn lex(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut num = String::new();
    for ch in text.chars() {
        if ch.is_ascii_digit() {
            num.push(ch);
            continue;
        }
        if !num.is_empty() {
            out.push(std::mem::take(&mut num));
        }
        if !ch.is_whitespace() {
            out.push(ch.to_string());
        }
    }
    if !num.is_empty() {
        out.push(num);
    }
    out
}

/// A validated expression, optionally followed by one `=`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Expr {
    pub tokens: Vec<Tok>,
    pub p: u64,
}

impl Expr {
    pub fn parse(text: &str, p: u64) -> Result<Expr> {
        let raw = lex(text);
        let mut tokens = Vec::with_capacity(raw.len());
        for (pos, s) in raw.iter().enumerate() {
            let t = Tok::parse_one(s, p)
                .ok_or_else(|| Error::Parse { pos, msg: format!("unknown token {s:?}") })?;
            tokens.push(t);
        }
        Expr::from_tokens(tokens, p)
    }

    pub fn from_tokens(tokens: Vec<Tok>, p: u64) -> Result<Expr> {
        if !crate::field::is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        validate(&tokens)?;
        Ok(Expr { tokens, p })
    }

    /// Tokens without a trailing `=`.
    pub fn body(&self) -> &[Tok] {
        match self.tokens.last() {
            Some(Tok::Eq) => &self.tokens[..self.tokens.len() - 1],
            _ => &self.tokens,
        }
    }

    pub fn op_count(&self) -> usize {
        self.body().iter().filter(|t| matches!(t, Tok::Op(_))).count()
    }

    pub fn render(&self) -> String {
        render_tokens(&self.tokens)
    }

    pub fn compact(&self) -> String {
        self.tokens.iter().map(|t| t.to_string()).collect()
    }

    pub fn evaluate(&self) -> Result<u64> {
        let body = self.body();
        let mut pos = 0;
        let v = parse_sum(body, &mut pos, self.p)?;
        debug_assert_eq!(pos, body.len());
        Ok(v)
    }

    pub fn handles(&self) -> Vec<Handle> {
        find_handles(self.body())
    }

    /// Reduce the leftmost handle.
    pub fn step(&self) -> Result<Expr> {
        let body = self.body();
        let h = *find_handles(body)
            .first()
            .ok_or_else(|| Error::Invalid("expression has no operator".into()))?;
        let v = h.op.apply(num(body[h.start]), num(body[h.start + 2]), self.p)?;
        let bracketed = h.start > 0
            && body[h.start - 1] == Tok::LParen
            && body.get(h.start + 3) == Some(&Tok::RParen);
        let (lo, hi) = if bracketed { (h.start - 1, h.start + 4) } else { (h.start, h.start + 3) };
        let mut out = body[..lo].to_vec();
        out.push(Tok::Num(v));
        out.extend_from_slice(&body[hi..]);
        Ok(Expr { tokens: out, p: self.p })
    }

    pub fn trace(&self) -> Result<CotSample> {
        let mut steps = Vec::new();
        let mut cur = Expr { tokens: self.body().to_vec(), p: self.p };
        while cur.op_count() > 0 {
            cur = cur.step()?;
            steps.push(cur.clone());
        }
        let answer = cur.tokens.iter().map(|t| t.to_string()).collect();
        Ok(CotSample {
            task: Task::Arithmetic,
            problem: self.body().iter().map(|t| t.to_string()).collect(),
            steps: steps.iter().map(|e| e.tokens.iter().map(|t| t.to_string()).collect()).collect(),
            answer,
        })
    }
}

pub fn render_tokens(tokens: &[Tok]) -> String {
    tokens.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
}

fn num(t: Tok) -> u64 {
    match t {
        Tok::Num(v) => v,
        _ => unreachable!("handle operand is not a numeral"),
    }
}

/// A reducible triple starting at token index `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Handle {
    pub start: usize,
    pub op: Op,
}

/// Every handle of a body (no trailing `=`), left to right.
pub fn find_handles(body: &[Tok]) -> Vec<Handle> {
    let mut out = Vec::new();
    if body.len() < 3 {
        return out;
    }
    for k in 0..body.len() - 2 {
        let (Tok::Num(_), Tok::Op(op), Tok::Num(_)) = (body[k], body[k + 1], body[k + 2]) else {
            continue;
        };
        let s1 = if k == 0 { Tok::Eq } else { body[k - 1] };
        let s2 = body.get(k + 3).copied().unwrap_or(Tok::Eq);
        if is_handle(s1, op, s2) {
            out.push(Handle { start: k, op });
        }
    }
    out
}

/// Context rule for `s1 a op b s2`; boundaries are passed as `Tok::Eq`.
pub fn is_handle(s1: Tok, op: Op, s2: Tok) -> bool {
    if op.is_additive() {
        matches!(s1, Tok::LParen | Tok::Eq) && !s2.is_mul_div()
    } else {
        !s1.is_mul_div()
    }
}

fn validate(tokens: &[Tok]) -> Result<()> {
    let body = match tokens.iter().position(|t| *t == Tok::Eq) {
        Some(i) if i + 1 == tokens.len() => &tokens[..i],
        Some(i) => return Err(Error::Parse { pos: i, msg: "'=' only allowed at the end".into() }),
        None => tokens,
    };
    if body.is_empty() {
        return Err(Error::Parse { pos: 0, msg: "empty expression".into() });
    }
    // Operand position expects a numeral or '('; operator position expects an op or ')'.
    let mut want_operand = true;
    let mut depth = 0usize;
    for (pos, t) in body.iter().enumerate() {
        match (want_operand, t) {
            (true, Tok::Num(_)) => want_operand = false,
            (true, Tok::LParen) => depth += 1,
            (false, Tok::Op(_)) => want_operand = true,
            (false, Tok::RParen) => {
                if depth == 0 {
                    return Err(Error::UnbalancedBrackets(pos));
                }
                depth -= 1;
            }
            _ => return Err(Error::Parse { pos, msg: format!("unexpected token {t}") }),
        }
    }
    if want_operand {
        return Err(Error::Parse { pos: body.len(), msg: "expression ends with an operator".into() });
    }
    if depth != 0 {
        return Err(Error::UnbalancedBrackets(body.len()));
    }
    Ok(())
}

fn parse_sum(t: &[Tok], pos: &mut usize, p: u64) -> Result<u64> {
    let mut acc = parse_product(t, pos, p)?;
    while let Some(Tok::Op(op)) = t.get(*pos) {
        if !op.is_additive() {
            break;
        }
        *pos += 1;
        let rhs = parse_product(t, pos, p)?;
        acc = op.apply(acc, rhs, p)?;
    }
    Ok(acc)
}

fn parse_product(t: &[Tok], pos: &mut usize, p: u64) -> Result<u64> {
    let mut acc = parse_atom(t, pos, p)?;
    while let Some(Tok::Op(op)) = t.get(*pos) {
        if op.is_additive() {
            break;
        }
        *pos += 1;
        let rhs = parse_atom(t, pos, p)?;
        acc = op.apply(acc, rhs, p)?;
    }
    Ok(acc)
}

fn parse_atom(t: &[Tok], pos: &mut usize, p: u64) -> Result<u64> {
    match t.get(*pos) {
        Some(Tok::Num(v)) => {
            *pos += 1;
            Ok(*v)
        }
        Some(Tok::LParen) => {
            *pos += 1;
            let v = parse_sum(t, pos, p)?;
            *pos += 1; // ')', guaranteed by validation
            Ok(v)
        }
        _ => Err(Error::Parse { pos: *pos, msg: "expected operand".into() }),
    }
}

/// Bracket pairing for one position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bracket {
    Open { partner: usize },
    Close { partner: usize },
    Inside { open: usize, close: usize },
    TopLevel,
}

/// Pair brackets with a stack scan. Works on any token type.
pub fn match_brackets_by<T>(
    tokens: &[T],
    is_open: impl Fn(&T) -> bool,
    is_close: impl Fn(&T) -> bool,
) -> Result<Vec<Bracket>> {
    let n = tokens.len();
    let mut partner = vec![usize::MAX; n];
    let mut stack = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if is_open(t) {
            stack.push(i);
        } else if is_close(t) {
            let j = stack.pop().ok_or(Error::UnbalancedBrackets(i))?;
            partner[i] = j;
            partner[j] = i;
        }
    }
    if let Some(&j) = stack.last() {
        return Err(Error::UnbalancedBrackets(j));
    }
    let mut out = Vec::with_capacity(n);
    let mut enclosing: Vec<usize> = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if is_open(t) {
            out.push(Bracket::Open { partner: partner[i] });
            enclosing.push(i);
        } else if is_close(t) {
            enclosing.pop();
            out.push(Bracket::Close { partner: partner[i] });
        } else {
            out.push(match enclosing.last() {
                Some(&o) => Bracket::Inside { open: o, close: partner[o] },
                None => Bracket::TopLevel,
            });
        }
    }
    Ok(out)
}

pub fn match_brackets(tokens: &[Tok]) -> Result<Vec<Bracket>> {
    match_brackets_by(tokens, |t| *t == Tok::LParen, |t| *t == Tok::RParen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        Expr::parse(s, 11).unwrap()
    }

    #[test]
    fn parse_and_render() {
        let x = e("1 + 5 × ( 1 − 2 ) =");
        assert_eq!(x.tokens.len(), 10);
        assert_eq!(x.render(), "1 + 5 × ( 1 − 2 ) =");
        assert_eq!(Expr::parse(&x.render(), 11).unwrap(), x);
        assert_eq!(e("3").tokens, vec![Tok::Num(3)]);
        assert!(Expr::parse("( 1 +", 11).is_err());
        assert!(Expr::parse("− 3", 11).is_err());
        assert!(Expr::parse("1 + 11", 11).is_err());
        assert!(Expr::parse("1 = 2", 11).is_err());
    }

    #[test]
    fn evaluation() {
        assert_eq!(e("1+5×(1−2)").evaluate().unwrap(), 7);
        assert_eq!(e("3+5×(4−8÷(1+3))").evaluate().unwrap(), 2);
        assert_eq!(e("4").evaluate().unwrap(), 4);
        assert_eq!(e("1÷(2−2)").evaluate(), Err(Error::DivisionByZero));
    }

    #[test]
    fn handles() {
        let x = e("7×(6+5+4×5)");
        let hs: Vec<usize> = x.handles().iter().map(|h| h.start).collect();
        assert_eq!(hs, vec![3, 7]);
        assert_eq!(e("1+5×10").handles(), vec![Handle { start: 2, op: Op::Mul }]);
        assert_eq!(e("2+3").handles(), vec![Handle { start: 0, op: Op::Add }]);
    }

    #[test]
    fn steps_and_trace() {
        assert_eq!(e("1+5×(1−2)").step().unwrap().compact(), "1+5×10");
        assert_eq!(e("1+5×10").step().unwrap().compact(), "1+6");
        assert_eq!(e("7×(6+5+4×5)").step().unwrap().compact(), "7×(0+4×5)");
        let t = e("1+5×(1−2)=").trace().unwrap();
        assert_eq!(t.to_text(), "1 + 5 × ( 1 − 2 ) = 1 + 5 × 10 = 1 + 6 = 7");
        assert_eq!(t.answer, vec!["7"]);
        let z = e("5").trace().unwrap();
        assert!(z.steps.is_empty());
        assert_eq!(z.answer, vec!["5"]);
    }

    #[test]
    fn brackets() {
        let toks: Vec<&str> = "( ( ) ( ) )".split(' ').collect();
        let r = match_brackets_by(&toks, |t| *t == "(", |t| *t == ")").unwrap();
        assert_eq!(r[0], Bracket::Open { partner: 5 });
        assert_eq!(r[1], Bracket::Open { partner: 2 });
        assert_eq!(r[3], Bracket::Open { partner: 4 });
        let r = match_brackets_by(&["(", "a", ")"], |t| *t == "(", |t| *t == ")").unwrap();
        assert_eq!(r[1], Bracket::Inside { open: 0, close: 2 });
        assert_eq!(match_brackets(&[Tok::Num(1)]).unwrap(), vec![Bracket::TopLevel]);
        assert_eq!(match_brackets(&[Tok::LParen]), Err(Error::UnbalancedBrackets(0)));
    }
}
