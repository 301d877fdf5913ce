//! A generic dynamic-programming engine.
//!
//! A problem is a list of states in a valid topological order. Each state
//! reads at most `J` input tokens and at most `K` earlier states, then
//! combines them with a transition function. The answer aggregates the
//! values of a designated subset of states and maps the result.
//!
//! `None` in the input or predecessor lists plays the role of the empty
//! placeholder: the transition sees it and ignores it.

pub mod brute;
pub mod cfg;
pub mod ed;
pub mod lis;

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::hash::Hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agg {
    Min,
    Max,
    Sum,
}

impl Agg {
    pub fn fold(self, vals: impl Iterator<Item = i64>) -> Option<i64> {
        let mut it = vals;
        let first = it.next()?;
        Some(it.fold(first, |a, v| match self {
            Agg::Min => a.min(v),
            Agg::Max => a.max(v),
            Agg::Sum => a + v,
        }))
    }
}

pub trait DpSpec {
    type State: Clone + Eq + Hash + std::fmt::Debug;
    type Token;

    fn states(&self) -> Vec<Self::State>;
    /// Input positions read by a state (the `g` map).
    fn inputs(&self, s: &Self::State) -> Vec<Option<usize>>;
    /// Earlier states read by a state (the `h` map).
    fn predecessors(&self, s: &Self::State) -> Vec<Option<Self::State>>;
    /// The `f` map.
    fn transition(&self, s: &Self::State, tokens: &[Option<&Self::Token>], deps: &[Option<i64>]) -> i64;
    fn aggregation(&self) -> Agg;
    /// Membership in the answer set.
    fn in_answer(&self, s: &Self::State) -> bool;
    /// The final map `u`.
    fn finalize(&self, v: i64) -> i64 {
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpTrace<S> {
    pub values: Vec<(S, i64)>,
    pub answer: i64,
}

impl<S: Eq + Hash + Clone> DpTrace<S> {
    pub fn value(&self, s: &S) -> Option<i64> {
        self.values.iter().find(|(t, _)| t == s).map(|(_, v)| *v)
    }

    pub fn as_map(&self) -> HashMap<S, i64> {
        self.values.iter().cloned().collect()
    }
}

pub fn run_dp<D: DpSpec>(spec: &D, input: &[D::Token]) -> Result<DpTrace<D::State>> {
    let states = spec.states();
    let mut done: HashMap<D::State, i64> = HashMap::with_capacity(states.len());
    let mut values = Vec::with_capacity(states.len());
    for s in &states {
        if done.contains_key(s) {
            return Err(Error::SpecViolation(format!("state {s:?} enumerated twice")));
        }
        let toks: Vec<Option<&D::Token>> = spec
            .inputs(s)
            .into_iter()
            .map(|g| match g {
                Some(i) => input.get(i).map(Some).ok_or_else(|| {
                    Error::SpecViolation(format!("state {s:?} reads input {i} beyond length {}", input.len()))
                }),
                None => Ok(None),
            })
            .collect::<Result<_>>()?;
        let deps: Vec<Option<i64>> = spec
            .predecessors(s)
            .into_iter()
            .map(|h| match h {
                Some(t) => done
                    .get(&t)
                    .copied()
                    .map(Some)
                    .ok_or_else(|| Error::SpecViolation(format!("state {s:?} reads {t:?} before it is computed"))),
                None => Ok(None),
            })
            .collect::<Result<_>>()?;
        let v = spec.transition(s, &toks, &deps);
        done.insert(s.clone(), v);
        values.push((s.clone(), v));
    }
    let agg = spec
        .aggregation()
        .fold(values.iter().filter(|(s, _)| spec.in_answer(s)).map(|(_, v)| *v))
        .ok_or_else(|| Error::SpecViolation("answer set is empty".into()))?;
    Ok(DpTrace { values, answer: spec.finalize(agg) })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Broken;
    impl DpSpec for Broken {
        type State = usize;
        type Token = i64;
        fn states(&self) -> Vec<usize> {
            vec![0, 1]
        }
        fn inputs(&self, _: &usize) -> Vec<Option<usize>> {
            vec![]
        }
        fn predecessors(&self, s: &usize) -> Vec<Option<usize>> {
            vec![Some(1 - s)]
        }
        fn transition(&self, _: &usize, _: &[Option<&i64>], _: &[Option<i64>]) -> i64 {
            0
        }
        fn aggregation(&self) -> Agg {
            Agg::Max
        }
        fn in_answer(&self, _: &usize) -> bool {
            true
        }
    }

    #[test]
    fn forward_reference_is_rejected() {
        assert!(matches!(run_dp(&Broken, &[]), Err(Error::SpecViolation(_))));
    }
}
