//! Encodings of Boolean formulas as arithmetic and of automaton runs as
//! linear systems.

use crate::arith::{Expr, Op, Tok};
use crate::equation::LinearSystem;
use crate::error::{Error, Result};
use crate::field::is_prime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Paren(Box<Formula>),
}

impl Formula {
    pub fn eval(&self) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Not(f) => !f.eval(),
            Formula::And(a, b) => a.eval() && b.eval(),
            Formula::Or(a, b) => a.eval() || b.eval(),
            Formula::Paren(f) => f.eval(),
        }
    }

    pub fn text(&self) -> String {
        match self {
            Formula::Const(b) => (*b as u8).to_string(),
            Formula::Not(f) => format!("¬{}", f.text()),
            Formula::And(a, b) => format!("{}∧{}", a.text(), b.text()),
            Formula::Or(a, b) => format!("{}∨{}", a.text(), b.text()),
            Formula::Paren(f) => format!("({})", f.text()),
        }
    }

    /// Parse `0`, `1`, `(¬φ)`, `(φ∧φ)`, `(φ∨φ)`; the outermost bracket pair
    /// may be omitted.
    pub fn parse(text: &str) -> Result<Formula> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let f = parse_inner(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(Error::Parse { pos, msg: "trailing input".into() });
        }
        Ok(f)
    }

    /// Every fully bracketed formula with exactly `k` connectives.
    pub fn enumerate(k: usize) -> Vec<Formula> {
        let mut table: Vec<Vec<Formula>> = vec![vec![Formula::Const(false), Formula::Const(true)]];
        for c in 1..=k {
            let mut out = Vec::new();
            for f in &table[c - 1] {
                out.push(Formula::Paren(Box::new(Formula::Not(Box::new(f.clone())))));
            }
            for left in 0..c {
                let right = c - 1 - left;
                for a in &table[left] {
                    for b in &table[right] {
                        out.push(Formula::Paren(Box::new(Formula::And(Box::new(a.clone()), Box::new(b.clone())))));
                        out.push(Formula::Paren(Box::new(Formula::Or(Box::new(a.clone()), Box::new(b.clone())))));
                    }
                }
            }
            table.push(out);
        }
        table.swap_remove(k)
    }
}

fn parse_atom(c: &[char], pos: &mut usize) -> Result<Formula> {
    match c.get(*pos) {
        Some('0') | Some('1') => {
            *pos += 1;
            Ok(Formula::Const(c[*pos - 1] == '1'))
        }
        Some('(') => {
            *pos += 1;
            let f = parse_inner(c, pos)?;
            if c.get(*pos) != Some(&')') {
                return Err(Error::Parse { pos: *pos, msg: "expected ')'".into() });
            }
            *pos += 1;
            Ok(Formula::Paren(Box::new(f)))
        }
        _ => Err(Error::Parse { pos: *pos, msg: "expected 0, 1 or '('".into() }),
    }
}

fn parse_inner(c: &[char], pos: &mut usize) -> Result<Formula> {
    if c.get(*pos) == Some(&'¬') {
        *pos += 1;
        return Ok(Formula::Not(Box::new(parse_atom(c, pos)?)));
    }
    let a = parse_atom(c, pos)?;
    match c.get(*pos) {
        Some('∧') => {
            *pos += 1;
            Ok(Formula::And(Box::new(a), Box::new(parse_atom(c, pos)?)))
        }
        Some('∨') => {
            *pos += 1;
            Ok(Formula::Or(Box::new(a), Box::new(parse_atom(c, pos)?)))
        }
        _ => Ok(a),
    }
}

fn translate(f: &Formula, out: &mut Vec<Tok>) {
    let one = Tok::Num(1);
    let minus = Tok::Op(Op::Sub);
    match f {
        Formula::Const(b) => out.push(Tok::Num(*b as u64)),
        Formula::Not(g) => {
            out.extend([one, minus]);
            translate(g, out);
        }
        Formula::And(a, b) => {
            translate(a, out);
            out.push(Tok::Op(Op::Mul));
            translate(b, out);
        }
        Formula::Or(a, b) => {
            out.extend([one, minus, Tok::LParen, one, minus]);
            translate(a, out);
            out.extend([Tok::RParen, Tok::Op(Op::Mul), Tok::LParen, one, minus]);
            translate(b, out);
            out.push(Tok::RParen);
        }
        Formula::Paren(g) => {
            out.push(Tok::LParen);
            translate(g, out);
            out.push(Tok::RParen);
        }
    }
}

pub fn reduce_boolean(f: &Formula, p: u64) -> Result<Expr> {
    let mut toks = Vec::new();
    translate(f, &mut toks);
    Expr::from_tokens(toks, p)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    pub states: usize,
    pub alphabet: Vec<char>,
    /// `delta[q][a]` is the successor of state `q` on `alphabet[a]`.
    pub delta: Vec<Vec<usize>>,
    pub accept: Vec<bool>,
    pub start: usize,
}

impl Automaton {
    pub fn new(alphabet: Vec<char>, delta: Vec<Vec<usize>>, accept: Vec<bool>, start: usize) -> Result<Self> {
        let states = delta.len();
        let total = delta.iter().all(|row| row.len() == alphabet.len() && row.iter().all(|&q| q < states));
        if states == 0 || !total || accept.len() != states || start >= states {
            return Err(Error::Invalid("transition table must be total".into()));
        }
        Ok(Automaton { states, alphabet, delta, accept, start })
    }

    fn symbol(&self, c: char) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|&a| a == c)
            .ok_or_else(|| Error::Invalid(format!("symbol {c:?} not in alphabet")))
    }

    pub fn run(&self, word: &[char]) -> Result<Vec<usize>> {
        let mut q = self.start;
        let mut path = vec![q];
        for &c in word {
            q = self.delta[q][self.symbol(c)?];
            path.push(q);
        }
        Ok(path)
    }

    pub fn accepts(&self, word: &[char]) -> Result<bool> {
        Ok(self.accept[*self.run(word)?.last().unwrap()])
    }
}

/// Index of variable `x_{i,q}`; `x*` is variable 0.
pub fn state_var(a: &Automaton, i: usize, q: usize) -> usize {
    1 + i * a.states + q
}

/// One variable `x*` plus `x_{i,q}` for every prefix length and state.
/// Returns the system and the index of `x*`.
pub fn reduce_automaton(a: &Automaton, word: &[char], p: u64) -> Result<(LinearSystem, usize)> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let n = word.len();
    let m = 1 + (n + 1) * a.states;
    let neg1 = p - 1;
    let mut mat = vec![vec![0u64; m]; m];
    let mut rhs = vec![0u64; m];
    mat[0][0] = 1;
    for q in (0..a.states).filter(|&q| a.accept[q]) {
        mat[0][state_var(a, n, q)] = neg1;
    }
    for q in 0..a.states {
        let row = state_var(a, 0, q);
        mat[row][row] = 1;
        rhs[row] = (q == a.start) as u64;
    }
    for i in 1..=n {
        let sym = a.symbol(word[i - 1])?;
        for q in 0..a.states {
            let row = state_var(a, i, q);
            mat[row][row] = 1;
            for r in 0..a.states {
                if a.delta[r][sym] == q {
                    let c = &mut mat[row][state_var(a, i - 1, r)];
                    *c = (*c + neg1) % p;
                }
            }
        }
    }
    Ok((LinearSystem::new(p, mat, rhs)?, 0))
}
