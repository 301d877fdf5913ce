//! Numerical certification of the gadgets against their stated accuracy.
//!
//! Each check builds the gadget from its formula (never tuning `lambda` by
//! hand), evaluates it on a grid or on seeded random inputs, and reports the
//! worst error next to the tolerance it must meet.

use super::attention::attention_forward;
use super::check::check_head;
use super::gadgets::{
    build_copy_head, build_lookup_mlp, build_mean_head, build_mult_mlp, build_relu_sim, build_selection_mlp,
    GadgetParams,
};
use super::mlp::{Mlp, ReluNet};
use super::tensor::Matrix;
use crate::datagen::rng::{derive, SplitMix64};
use crate::error::Result;
use crate::field::raw;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaConfig {
    /// Accuracy every gadget is built for, and the tolerance it is held to.
    pub eps: f64,
    /// Random inputs (or sequences) per randomized check.
    pub trials: usize,
    pub seed: u64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        LemmaConfig { eps: 1e-3, trials: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaResult {
    pub name: &'static str,
    pub cases: usize,
    pub max_err: f64,
    pub tol: f64,
    /// Extra failure beyond the error bound, e.g. a wrong argmax.
    pub defect: Option<String>,
}

impl LemmaResult {
    pub fn passed(&self) -> bool {
        self.max_err <= self.tol && self.defect.is_none()
    }
}

impl fmt::Display for LemmaResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<10} {:>7} cases  max err {:.3e}  tol {:.1e}  {}",
            self.name,
            self.cases,
            self.max_err,
            self.tol,
            if self.passed() { "PASS" } else { "FAIL" }
        )?;
        if let Some(d) = &self.defect {
            write!(f, "  ({d})")?;
        }
        Ok(())
    }
}

fn uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.unit()
}

/// Product of two reals in `[-m, m]`, on a 101 x 101 grid.
pub fn certify_mult(m: f64, eps: f64) -> LemmaResult {
    let f = build_mult_mlp(m, eps);
    let mut max_err: f64 = 0.0;
    let pts: Vec<f64> = (0..=100).map(|k| -m + 2.0 * m * k as f64 / 100.0).collect();
    for &a in &pts {
        for &b in &pts {
            let y = f.forward(&[a, b]).expect("width 2")[0];
            max_err = max_err.max((y - a * b).abs());
        }
    }
    LemmaResult { name: "mult", cases: pts.len() * pts.len(), max_err, tol: eps, defect: None }
}

/// GeLU imitation of random ReLU nets, sampled on `[-10, 10]^d`.
pub fn certify_relu_sim(cfg: &LemmaConfig) -> LemmaResult {
    let mut max_err: f64 = 0.0;
    let nets = 10;
    let per = cfg.trials.div_ceil(nets).max(1);
    for t in 0..nets {
        let mut rng = SplitMix64::new(derive(cfg.seed, 100 + t as u64));
        let (d_in, hidden, d_out) = (1 + rng.index(4), 2 + rng.index(15), 1 + rng.index(3));
        let mut net = ReluNet::new(d_in, d_out);
        for _ in 0..hidden {
            let ins: Vec<(usize, f64)> = (0..d_in).map(|c| (c, uniform(&mut rng, -2.0, 2.0))).collect();
            let outs: Vec<(usize, f64)> = (0..d_out).map(|c| (c, uniform(&mut rng, -2.0, 2.0))).collect();
            let b = uniform(&mut rng, -2.0, 2.0);
            net.unit(&ins, b, &outs);
        }
        let relu = net.to_mlp();
        let g = build_relu_sim(&relu, cfg.eps);
        for _ in 0..per {
            let x: Vec<f64> = (0..d_in).map(|_| uniform(&mut rng, -10.0, 10.0)).collect();
            let (a, b) = (relu.forward_relu(&x).unwrap(), g.forward(&x).unwrap());
            for (u, v) in a.iter().zip(&b) {
                max_err = max_err.max((u - v).abs());
            }
        }
    }
    LemmaResult { name: "relu-sim", cases: nets * per, max_err, tol: cfg.eps, defect: None }
}

/// Selector with `|x|, |y| <= 10` and the switch at `|t| >= 1/2`, both branches.
pub fn certify_selection(cfg: &LemmaConfig) -> LemmaResult {
    let (d, m, alpha) = (3, 10.0, 0.5);
    let g = build_selection_mlp(d, m, alpha, cfg.eps);
    let mut rng = SplitMix64::new(derive(cfg.seed, 200));
    let mut max_err: f64 = 0.0;
    for k in 0..cfg.trials {
        let x: Vec<f64> = (0..2 * d).map(|_| uniform(&mut rng, -m, m)).collect();
        let mag = alpha + uniform(&mut rng, 0.0, 5.0);
        let t = if k % 2 == 0 { mag } else { -mag };
        let mut input = x.clone();
        input.push(t);
        let y = g.forward(&input).unwrap();
        let want = if t > 0.0 { &x[..d] } else { &x[d..] };
        for (u, v) in y.iter().zip(want) {
            max_err = max_err.max((u - v).abs());
        }
    }
    LemmaResult { name: "selection", cases: cfg.trials, max_err, tol: cfg.eps, defect: None }
}

/// The multiplication table of Z_5 and a random 3-argument table, on every
/// one-hot input: outputs within `eps` of the target one-hot.
pub fn certify_lookup(cfg: &LemmaConfig) -> Result<LemmaResult> {
    let mut max_err: f64 = 0.0;
    let mut defect = None;
    let mut cases = 0;
    let mut rng = SplitMix64::new(derive(cfg.seed, 300));
    let mul5: Vec<usize> = (0..25).map(|i| raw::mul(i / 5, i % 5, 5) as usize).collect();
    let rand3: Vec<usize> = (0..64).map(|_| rng.index(4)).collect();
    for (table, k, d) in [(mul5, 2usize, 5usize), (rand3, 3, 4)] {
        let g: Mlp = build_lookup_mlp(&table, k, d, cfg.eps)?;
        for (idx, &out) in table.iter().enumerate() {
            let mut x = vec![0.0; k * d];
            let mut rest = idx;
            for t in (0..k).rev() {
                x[t * d + rest % d] = 1.0;
                rest /= d;
            }
            let y = g.forward(&x)?;
            for (c, v) in y.iter().enumerate() {
                max_err = max_err.max((v - (c == out) as u8 as f64).abs());
            }
            let arg = (0..y.len()).max_by(|a, b| y[*a].total_cmp(&y[*b])).unwrap_or(0);
            if arg != out && defect.is_none() {
                defect = Some(format!("table entry {idx}: argmax {arg}, want {out}"));
            }
            cases += 1;
        }
    }
    Ok(LemmaResult { name: "lookup", cases, max_err, tol: cfg.eps, defect })
}

/// Random sequence for the attention checks. Column layout: label one-hot
/// (5), value (2), priority, one. The query asks for the position's own
/// label, so the matching set is never empty.
fn attention_sequence(rng: &mut SplitMix64, n: usize, labels: usize) -> (Matrix, Vec<usize>, Vec<f64>) {
    let d = labels + 4;
    let mut x = Matrix::zeros(n, d);
    let mut lab = Vec::with_capacity(n);
    let mut prio: Vec<f64> = (1..=n).map(|v| v as f64).collect();
    rng.shuffle(&mut prio);
    for i in 0..n {
        let a = rng.index(labels);
        lab.push(a);
        x.set(i, a, 1.0);
        x.set(i, labels, uniform(rng, -1.0, 1.0));
        x.set(i, labels + 1, uniform(rng, -1.0, 1.0));
        x.set(i, labels + 2, prio[i]);
        x.set(i, labels + 3, 1.0);
    }
    (x, lab, prio)
}

fn attention_mats(labels: usize) -> (Matrix, Matrix, Matrix) {
    let d = labels + 4;
    // Score a_i . a_j - 1: zero on a label match, -1 otherwise.
    let mut q = Matrix::zeros(labels + 1, d);
    let mut k = Matrix::zeros(labels + 1, d);
    for a in 0..labels {
        q.set(a, a, 1.0);
        k.set(a, a, 1.0);
    }
    q.set(labels, labels + 3, 1.0);
    k.set(labels, labels + 3, -1.0);
    let mut v = Matrix::zeros(2, d);
    v.set(0, labels, 1.0);
    v.set(1, labels + 1, 1.0);
    (q, k, v)
}

fn certify_attention(cfg: &LemmaConfig, mean: bool) -> Result<LemmaResult> {
    let (n, labels) = (32, 5);
    let (q, k, v) = attention_mats(labels);
    let delta = 1.0;
    let m = if mean { 1.0 } else { n as f64 };
    let mut p = GadgetParams { m, eps: cfg.eps, delta, rho: 0.0, n };
    p.rho = if mean { p.mean_rho_max() } else { p.copy_rho_max() };
    let mut r = vec![0.0; labels + 4];
    r[labels + 2] = 1.0;
    let head = if mean {
        build_mean_head(q, k, v, &p)?
    } else {
        build_copy_head(q, k, v, Some(r), &p)?
    };
    let mut max_err: f64 = 0.0;
    let mut defect = None;
    let mut rng = SplitMix64::new(derive(cfg.seed, if mean { 500 } else { 400 }));
    for _ in 0..cfg.trials {
        let (x, lab, prio) = attention_sequence(&mut rng, n, labels);
        let rep = check_head(&x, &head, p.rho, delta);
        if let (Some(viol), None) = (&rep.first_violation, &defect) {
            defect = Some(format!("assumption violated: {viol:?}"));
        }
        let out = attention_forward(std::slice::from_ref(&head), &x)?;
        for i in 0..n {
            let matches: Vec<usize> = (0..=i).filter(|&j| lab[j] == lab[i]).collect();
            let want: Vec<f64> = if mean {
                (0..2)
                    .map(|c| matches.iter().map(|&j| x.get(j, labels + c)).sum::<f64>() / matches.len() as f64)
                    .collect()
            } else {
                let best = *matches.iter().max_by(|a, b| prio[**a].total_cmp(&prio[**b])).unwrap();
                (0..2).map(|c| x.get(best, labels + c)).collect()
            };
            for c in 0..2 {
                max_err = max_err.max((out.get(i, c) - want[c]).abs());
            }
        }
    }
    Ok(LemmaResult { name: if mean { "mean" } else { "copy" }, cases: cfg.trials, max_err, tol: cfg.eps, defect })
}

/// COPY on random 32-token sequences with shuffled, 1-separated priorities.
pub fn certify_copy(cfg: &LemmaConfig) -> Result<LemmaResult> {
    certify_attention(cfg, false)
}

/// MEAN on random 32-token sequences.
pub fn certify_mean(cfg: &LemmaConfig) -> Result<LemmaResult> {
    certify_attention(cfg, true)
}

/// Every check, in order: multiplication at `M = 5`, ReLU imitation,
/// selection, look-up, COPY, MEAN.
pub fn certify_all(cfg: &LemmaConfig) -> Result<Vec<LemmaResult>> {
    Ok(vec![
        certify_mult(5.0, cfg.eps),
        certify_relu_sim(cfg),
        certify_selection(cfg),
        certify_lookup(cfg)?,
        certify_copy(cfg)?,
        certify_mean(cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_pass_small() {
        let cfg = LemmaConfig { trials: 50, ..Default::default() };
        for r in certify_all(&cfg).unwrap() {
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn mult_at_one_percent() {
        let r = certify_mult(5.0, 1e-2);
        assert!(r.passed(), "{r}");
        assert_eq!(r.cases, 101 * 101);
    }
}
