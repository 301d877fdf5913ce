mod common;

use common::*;
use cotlab::arith::Expr;
use cotlab::datagen::corrupt::{corrupt, task_vocab};
use cotlab::datagen::generators::{gen_arithmetic, gen_cfg, gen_ed, gen_equation, gen_lis};
use cotlab::datagen::reduce::{reduce_automaton, reduce_boolean, Automaton, Formula};
use cotlab::datagen::rng::{derive, SplitMix64};
use cotlab::dp::brute::cfg_brute;
use cotlab::dp::cfg::cfg_membership;
use cotlab::dp::ed::{ed, ed_trace, EdCosts};
use cotlab::dp::lis::{lis_experiment, lis_framework};
use cotlab::equation::{solve_direct, LinearSystem};
use cotlab::field::{self, FieldElement};
use cotlab::sample::{CotSample, Task};
use proptest::prelude::*;

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 101];

fn check_arith_trace(s: &CotSample, p: u64) {
    let v = eval_expr(&s.problem, p).expect("problem evaluates");
    for (k, step) in s.steps.iter().enumerate() {
        assert_eq!(eval_expr(step, p), Some(v), "step {k} of {}", s.to_text());
        let prev = if k == 0 { &s.problem } else { &s.steps[k - 1] };
        assert!(step.len() < prev.len(), "step {k} does not shrink");
    }
    assert_eq!(s.answer, vec![v.to_string()]);
}

fn check_eq_trace(sys: &LinearSystem) {
    let s = sys.trace().unwrap();
    let x = read_assignment(&s.answer, sys.m).expect("answer is an assignment");
    assert!(satisfies(&sys.a, &sys.b, &x, sys.p));
    for step in &s.steps {
        let rows = read_rows(step, sys.m).expect("well-formed block");
        assert_eq!(rows.len(), sys.m);
        let (a, b): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        assert!(satisfies(&a, &b, &x, sys.p), "block {:?}", step.join(" "));
    }
}

proptest! {
    #[test]
    fn field_axioms(pi in 0..PRIMES.len(), a in 0u64..1000, b in 0u64..1000, c in 0u64..1000) {
        let p = PRIMES[pi];
        let f = |v: u64| FieldElement::new(v as i64 % p as i64, p).unwrap();
        let (x, y, z) = (f(a), f(b), f(c));
        prop_assert_eq!(x.add(&y).unwrap(), y.add(&x).unwrap());
        prop_assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap());
        prop_assert_eq!(x.mul(&y.add(&z).unwrap()).unwrap(), x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap());
        prop_assert_eq!(x.add(&y).unwrap().sub(&y).unwrap(), x);
        prop_assert_eq!(x.add(&x.neg()).unwrap().value(), 0);
        if x.value() != 0 {
            prop_assert_eq!(x.mul(&x.inv().unwrap()).unwrap().value(), 1);
            prop_assert_eq!(x.pow(p - 1).value(), 1);
            prop_assert_eq!(y.div(&x).unwrap().mul(&x).unwrap(), y);
        } else {
            prop_assert!(x.inv().is_err());
        }
        prop_assert_eq!(field::raw::mul(x.value(), y.value(), p), a % p * (b % p) % p);
        prop_assert_eq!(x.pow(3).value(), modpow(a, 3, p));
    }

    #[test]
    fn arithmetic_steps_preserve_value(seed in any::<u64>(), n in 0usize..12, pi in 1..PRIMES.len()) {
        let p = PRIMES[pi];
        let (e, ans) = gen_arithmetic(&mut SplitMix64::new(seed), n, p);
        let s = e.trace().unwrap();
        check_arith_trace(&s, p);
        prop_assert_eq!(e.evaluate().unwrap(), ans);
        prop_assert_eq!(e.op_count(), n);
        let again = Expr::parse(&e.compact(), p).unwrap();
        prop_assert_eq!(again.body(), e.body());
    }

    #[test]
    fn equation_traces_satisfy_substitution(seed in any::<u64>(), m in 1usize..6, pi in 2..PRIMES.len()) {
        let sys = gen_equation(&mut SplitMix64::new(seed), m, PRIMES[pi]);
        check_eq_trace(&sys);
        let x = solve_direct(&sys).unwrap();
        prop_assert!(satisfies(&sys.a, &sys.b, &x, sys.p));
    }

    #[test]
    fn lis_matches_subsets(seq in proptest::collection::vec(0i64..8, 1..11)) {
        let want = lis_subsets(&seq) as i64;
        prop_assert_eq!(lis_framework(&seq).unwrap().answer, want);
        prop_assert_eq!(lis_experiment(&seq).into_iter().max().unwrap_or(0), want);
    }

    #[test]
    fn ed_matches_recursion(
        a in "[abc]{0,7}",
        b in "[abc]{0,7}",
        ins in 1i64..6, del in 1i64..6, rep in 1i64..9,
    ) {
        let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let c = EdCosts { insert: ins, delete: del, replace: rep };
        let want = edit_distance(&a, &b, ins, del, rep);
        prop_assert_eq!(ed(&a, &b, c), want);
        prop_assert_eq!(ed_trace(&a, &b, c).unwrap().answer, want);
    }

    #[test]
    fn cfg_matches_fixpoint(seed in any::<u64>(), len in 0usize..6) {
        let mut rng = SplitMix64::new(seed);
        let g = gen_cfg(&mut rng, 3, 6);
        let word: Vec<char> = (0..len).map(|_| *rng.choose(&g.terminals)).collect();
        let want = cfg_derives(&g, &word);
        prop_assert_eq!(cfg_membership(&g, &word).unwrap().0, want);
        prop_assert_eq!(cfg_brute(&g, &word).unwrap(), want);
    }

    #[test]
    fn text_round_trip(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = SplitMix64::new(seed);
        let s = gen_arithmetic(&mut rng, n, 11).0.trace().unwrap();
        prop_assert_eq!(CotSample::from_text(Task::Arithmetic, &s.to_text(), false).unwrap(), s);
        let s = gen_equation(&mut rng, n.min(4), 7).trace().unwrap();
        prop_assert_eq!(CotSample::from_text(Task::Equation, &s.to_text(), false).unwrap(), s);
    }

    #[test]
    fn corruption_keeps_answer(seed in any::<u64>(), gamma in 0.0f64..1.0) {
        let mut rng = SplitMix64::new(seed);
        let s = gen_arithmetic(&mut rng, 6, 11).0.trace().unwrap();
        let (c, st) = corrupt(&s, gamma, &mut rng, &task_vocab(Task::Arithmetic, 11, 6));
        prop_assert_eq!(&c.problem, &s.problem);
        prop_assert_eq!(&c.answer, &s.answer);
        prop_assert_eq!(st.steps, s.steps.len() - 1);
        prop_assert_eq!(c.steps.len(), s.steps.len() - st.dropped);
        prop_assert!(st.corrupted <= st.steps - st.dropped);
    }

    #[test]
    fn automaton_reduction_matches_simulation(seed in any::<u64>(), len in 0usize..6) {
        let mut rng = SplitMix64::new(seed);
        let states = 1 + rng.index(3);
        let delta: Vec<Vec<usize>> = (0..states).map(|_| (0..2).map(|_| rng.index(states)).collect()).collect();
        let accept: Vec<bool> = (0..states).map(|_| rng.bernoulli(0.5)).collect();
        let a = Automaton::new(vec!['a', 'b'], delta.clone(), accept.clone(), 0).unwrap();
        let word: Vec<usize> = (0..len).map(|_| rng.index(2)).collect();
        let chars: Vec<char> = word.iter().map(|&i| ['a', 'b'][i]).collect();
        let (sys, star) = reduce_automaton(&a, &chars, 11).unwrap();
        let x = solve_direct(&sys).unwrap();
        prop_assert_eq!(x[star], accept[dfa_final(&delta, 0, &word)] as u64);
    }
}

#[test]
fn worked_arithmetic_trace() {
    let s = Expr::parse("1+5×(1−2)", 11).unwrap().trace().unwrap();
    let compact: Vec<String> = std::iter::once(&s.problem).chain(&s.steps).map(|b| b.concat()).collect();
    assert_eq!(compact.join("="), "1+5×(1−2)=1+5×10=1+6=7");
    check_arith_trace(&s, 11);
}

#[test]
fn seeded_sweeps() {
    for i in 0..300 {
        let mut rng = SplitMix64::new(derive(99, i));
        let n = 3 + rng.index(4);
        let e = gen_ed(&mut rng, n);
        let (s1, s2) = (e.s1, e.s2);
        let c = EdCosts::EXPERIMENT;
        assert_eq!(ed(&s1, &s2, c), edit_distance(&s1, &s2, c.insert, c.delete, c.replace));
        let n = 3 + rng.index(10);
        let (seq, plan) = gen_lis(&mut rng, n);
        let l = lis_subsets(&seq);
        assert_eq!(lis_framework(&seq).unwrap().answer, l as i64);
        assert!(l >= plan.lower_bound());
    }
}

/// Count of fully bracketed formulas with `k` connectives: one unary and
/// two binary connectives over the constants 0 and 1.
fn formula_count(k: usize) -> usize {
    let mut a = vec![2usize];
    for c in 1..=k {
        let bin: usize = (0..c).map(|l| a[l] * a[c - 1 - l]).sum();
        a.push(a[c - 1] + 2 * bin);
    }
    a[k]
}

#[test]
fn boolean_enumeration_and_reduction() {
    assert_eq!([0, 1, 2, 3].map(formula_count), [2, 10, 90, 1010]);
    assert_eq!(formula_count(5), 170_810);
    for k in 0..=3 {
        let fs = Formula::enumerate(k);
        assert_eq!(fs.len(), formula_count(k));
        for f in fs {
            let truth = bool_value(&f.text()).expect("oracle parses");
            assert_eq!(f.eval(), truth);
            let e = reduce_boolean(&f, 11).unwrap();
            assert_eq!(eval_expr(&cotlab::arith::lex(&e.compact()), 11), Some(truth as u64));
        }
    }
}

#[test]
fn frozen_sizes() {
    use cotlab::constructed::arithmetic::arithmetic_max_len;
    use cotlab::constructed::equation::equation_max_len;
    // A prompt of n tokens shrinks by two per step down to one token, so
    // the run holds n + (n - 2) + ... + 1 tokens, each block followed by `=`.
    let by_hand = |n: usize| {
        let top = if n.is_multiple_of(2) { n - 1 } else { n - 2 };
        (0..=top).rev().step_by(2).map(|k| k + 1).sum::<usize>()
    };
    for n in 3..80 {
        assert_eq!(arithmetic_max_len(n), by_hand(n));
    }
    assert_eq!(arithmetic_max_len(64), 1056);
    // m + 1 blocks of m rows, each row at most 3m + 2 tokens, plus [SEP].
    assert_eq!(equation_max_len(1), 12);
    assert_eq!(equation_max_len(3), 136);
}
