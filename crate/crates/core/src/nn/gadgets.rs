//! Explicit weights for multiplication, ReLU imitation, linear maps,
//! selection, table look-up, and COPY / MEAN attention heads.

use super::attention::Head;
use super::mlp::{Mlp, ReluNet};
use super::tensor::Matrix;
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Constants shared by the attention gadgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GadgetParams {
    /// Bound on every input entry, priorities included.
    pub m: f64,
    pub eps: f64,
    /// Gap below zero for non-matching scores and between priorities.
    pub delta: f64,
    /// Tolerance around zero for matching scores.
    pub rho: f64,
    /// Longest sequence.
    pub n: usize,
}

impl GadgetParams {
    pub fn validate(&self) -> Result<()> {
        let GadgetParams { m, eps, delta, rho, n } = *self;
        if !(eps > 0.0 && delta > 0.0 && rho > 0.0 && m >= delta && n >= 1) {
            return Err(Error::Invalid(format!("need eps, delta, rho > 0, M >= delta, n >= 1; got {self:?}")));
        }
        Ok(())
    }

    fn log_copy(&self) -> f64 {
        (2.0 * self.n as f64 * self.m / self.eps).ln()
    }

    fn log_mean(&self) -> f64 {
        (4.0 * self.m * self.n as f64 / self.eps).ln()
    }

    pub fn copy_lambda(&self) -> f64 {
        8.0 * self.m * self.log_copy() / (self.delta * self.delta)
    }

    pub fn copy_mu(&self) -> f64 {
        3.0 * self.log_copy() / self.delta
    }

    pub fn copy_rho_max(&self) -> f64 {
        self.delta * self.delta / (8.0 * self.m)
    }

    pub fn mean_lambda(&self) -> f64 {
        self.log_mean() / self.delta
    }

    pub fn mean_rho_max(&self) -> f64 {
        self.delta * self.eps / (16.0 * self.m * self.log_mean())
    }
}

/// Four hidden units computing `a * b` on `[-m, m]^2` within `eps`, with
/// `lambda = max(ceil(10 m^3 / (3 eps)), 2m + 1)`.
pub fn build_mult_mlp(m: f64, eps: f64) -> Mlp {
    let lambda = (10.0 * m.powi(3) / (3.0 * eps)).ceil().max(2.0 * m + 1.0);
    let s = 1.0 / lambda;
    let w1 = Matrix::from_rows(&[vec![s, s], vec![-s, -s], vec![s, -s], vec![-s, s]]).unwrap();
    let c = (2.0 * PI).sqrt() * lambda * lambda / 8.0;
    let w2 = Matrix::from_rows(&[vec![c, c, -c, -c]]).unwrap();
    Mlp::new(w1, vec![0.0; 4], w2).unwrap()
}

/// Scale used when imitating a ReLU net with largest weight `m` and
/// `d` hidden units.
pub fn relu_sim_lambda(m: f64, d: usize, eps: f64) -> f64 {
    m * d as f64 / ((2.0 * PI).sqrt() * eps)
}

/// GeLU network `(1/lambda) W2 gelu(lambda (W1 x + b1))` within `eps` of
/// the ReLU network with the same weights, everywhere.
pub fn build_relu_sim(relu: &Mlp, eps: f64) -> Mlp {
    let m = relu.max_abs_weight();
    if m == 0.0 || relu.hidden() == 0 {
        return relu.clone();
    }
    let lambda = relu_sim_lambda(m, relu.hidden(), eps);
    let b1 = relu.b1.iter().map(|b| b * lambda).collect();
    Mlp::new(relu.w1.scale(lambda), b1, relu.w2.scale(1.0 / lambda)).unwrap()
}

/// `x -> W x` through `relu(Wx) - relu(-Wx)`.
pub fn build_linear_mlp(w: &Matrix, eps: f64) -> Mlp {
    let mut net = ReluNet::new(w.cols, w.rows);
    for r in 0..w.rows {
        let ins: Vec<(usize, f64)> = (0..w.cols).map(|c| (c, w.get(r, c))).filter(|(_, v)| *v != 0.0).collect();
        net.linear(&ins, 0.0, r, 1.0);
    }
    build_relu_sim(&net.to_mlp(), eps)
}

/// ReLU form of the selector on inputs `(x, y, t)` of width `2d + 1`:
/// returns `x` when `t >= alpha` and `y` when `t <= -alpha`, provided
/// `|x|, |y| <= m`.
pub fn selection_relu(d: usize, m: f64, alpha: f64) -> Mlp {
    let k = m / alpha;
    let t = 2 * d;
    let mut net = ReluNet::new(2 * d + 1, d);
    for i in 0..d {
        net.unit(&[(i, 1.0), (t, k)], 0.0, &[(i, 1.0)]);
    }
    for i in 0..d {
        net.unit(&[(d + i, 1.0), (t, -k)], 0.0, &[(i, 1.0)]);
    }
    let all: Vec<(usize, f64)> = (0..d).map(|i| (i, -1.0)).collect();
    net.unit(&[(t, k)], 0.0, &all);
    net.unit(&[(t, -k)], 0.0, &all);
    net.to_mlp()
}

pub fn build_selection_mlp(d: usize, m: f64, alpha: f64, eps: f64) -> Mlp {
    build_relu_sim(&selection_relu(d, m, alpha), eps)
}

/// ReLU form of a `k`-argument table over one-hot inputs of width `d`.
/// `table[i_1 * d^(k-1) + ... + i_k]` is the output index.
pub fn lookup_relu(table: &[usize], k: usize, d: usize) -> Result<Mlp> {
    let size = d.checked_pow(k as u32).ok_or_else(|| Error::Invalid("table too large".into()))?;
    if table.len() != size || table.iter().any(|&v| v >= d) {
        return Err(Error::DimensionMismatch(format!("table needs {size} entries below {d}")));
    }
    let mut net = ReluNet::new(k * d, d);
    for (idx, &out) in table.iter().enumerate() {
        let mut rest = idx;
        let mut ins = vec![(0, 0.0); k];
        for t in (0..k).rev() {
            ins[t] = (t * d + rest % d, 2.0);
            rest /= d;
        }
        net.unit(&ins, 1.0 - 2.0 * k as f64, &[(out, 1.0)]);
    }
    Ok(net.to_mlp())
}

pub fn build_lookup_mlp(table: &[usize], k: usize, d: usize, eps: f64) -> Result<Mlp> {
    Ok(build_relu_sim(&lookup_relu(table, k, d)?, eps))
}

fn check_head_shapes(q: &Matrix, k: &Matrix, v: &Matrix, r: &Option<Vec<f64>>) -> Result<()> {
    let d = q.cols;
    if k.cols != d || v.cols != d || q.rows != k.rows || r.as_ref().is_some_and(|r| r.len() != d) {
        return Err(Error::DimensionMismatch("head matrices disagree on widths".into()));
    }
    if v.max_abs() > 1.0 {
        return Err(Error::AssumptionViolated("value matrix entries must be at most 1".into()));
    }
    Ok(())
}

/// Head copying the value at the highest-priority matching position.
pub fn build_copy_head(q: Matrix, k: Matrix, v: Matrix, r: Option<Vec<f64>>, p: &GadgetParams) -> Result<Head> {
    p.validate()?;
    check_head_shapes(&q, &k, &v, &r)?;
    if p.rho > p.copy_rho_max() {
        return Err(Error::AssumptionViolated(format!(
            "COPY needs rho <= delta^2/(8M) = {:e}, got {:e}",
            p.copy_rho_max(),
            p.rho
        )));
    }
    Ok(Head { q, k, v, r, lambda: p.copy_lambda(), mu: p.copy_mu() })
}

/// Head averaging the values over the matching positions.
pub fn build_mean_head(q: Matrix, k: Matrix, v: Matrix, p: &GadgetParams) -> Result<Head> {
    p.validate()?;
    check_head_shapes(&q, &k, &v, &None)?;
    if p.eps > p.m {
        return Err(Error::AssumptionViolated("MEAN needs eps <= M".into()));
    }
    if p.rho > p.mean_rho_max() {
        return Err(Error::AssumptionViolated(format!(
            "MEAN needs rho <= delta*eps/(16 M ln(4Mn/eps)) = {:e}, got {:e}",
            p.mean_rho_max(),
            p.rho
        )));
    }
    Ok(Head { q, k, v, r: None, lambda: p.mean_lambda(), mu: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mult_small_cases() {
        let f = build_mult_mlp(5.0, 1e-2);
        assert!(f.forward(&[0.0, 0.0]).unwrap()[0].abs() <= 1e-2);
        assert!((f.forward(&[2.0, 3.0]).unwrap()[0] - 6.0).abs() <= 1e-2);
    }

    #[test]
    fn selection_branches() {
        let g = build_selection_mlp(2, 10.0, 0.5, 1e-6);
        let x = g.forward(&[3.0, -4.0, 7.0, 9.0, 1.0]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-6 && (x[1] + 4.0).abs() < 1e-6);
        let y = g.forward(&[3.0, -4.0, 7.0, 9.0, -1.0]).unwrap();
        assert!((y[0] - 7.0).abs() < 1e-6 && (y[1] - 9.0).abs() < 1e-6);
    }

    #[test]
    fn head_preconditions() {
        let p = GadgetParams { m: 10.0, eps: 1e-3, delta: 1.0, rho: 0.5, n: 8 };
        let id = Matrix::identity(2);
        assert!(matches!(
            build_copy_head(id.clone(), id.clone(), id.clone(), None, &p),
            Err(Error::AssumptionViolated(_))
        ));
        let ok = GadgetParams { rho: p.copy_rho_max(), ..p };
        assert!(build_copy_head(id.clone(), id.clone(), id.clone(), None, &ok).is_ok());
        assert!(build_copy_head(id.clone(), id.clone(), id.scale(2.0), None, &ok).is_err());
    }
}
