//! Position-wise two-layer MLPs.

use super::tensor::Matrix;
use crate::error::{Error, Result};
use statrs::function::erf::erf;
use std::f64::consts::SQRT_2;

/// `x * Phi(x)` with the exact Gaussian CDF.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + erf(x / SQRT_2))
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// `W2 * act(W1 x + b1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
}

impl Mlp {
    pub fn new(w1: Matrix, b1: Vec<f64>, w2: Matrix) -> Result<Mlp> {
        if b1.len() != w1.rows || w2.cols != w1.rows {
            return Err(Error::DimensionMismatch(format!(
                "w1 {}x{}, b1 {}, w2 {}x{}",
                w1.rows,
                w1.cols,
                b1.len(),
                w2.rows,
                w2.cols
            )));
        }
        let rows = (0..w1.rows)
            .map(|h| w1.row(h).iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(c, w)| (c, *w)).collect())
            .collect();
        let cols = (0..w2.cols)
            .map(|h| (0..w2.rows).filter(|&o| w2.get(o, h) != 0.0).map(|o| (o, w2.get(o, h))).collect())
            .collect();
        Ok(Mlp { w1, b1, w2, rows, cols })
    }

    pub fn zeros(d_in: usize, hidden: usize, d_out: usize) -> Mlp {
        Mlp::new(Matrix::zeros(hidden, d_in), vec![0.0; hidden], Matrix::zeros(d_out, hidden)).unwrap()
    }

    pub fn d_in(&self) -> usize {
        self.w1.cols
    }

    pub fn hidden(&self) -> usize {
        self.w1.rows
    }

    pub fn d_out(&self) -> usize {
        self.w2.rows
    }

    pub fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.b1)
            .map(|(row, b)| b + row.iter().map(|&(c, w)| w * x[c]).sum::<f64>())
            .collect()
    }

    fn run(&self, x: &[f64], act: fn(f64) -> f64) -> Result<Vec<f64>> {
        if x.len() != self.d_in() {
            return Err(Error::DimensionMismatch(format!("mlp reads {} inputs, got {}", self.d_in(), x.len())));
        }
        let mut out = vec![0.0; self.d_out()];
        for (h, z) in self.hidden_pre(x).into_iter().enumerate() {
            let a = act(z);
            if a != 0.0 {
                for &(o, w) in &self.cols[h] {
                    out[o] += w * a;
                }
            }
        }
        Ok(out)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.run(x, gelu)
    }

    /// Same weights with ReLU; used for the networks the GeLU gadgets imitate.
    pub fn forward_relu(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.run(x, relu)
    }

    pub fn forward_rows(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(x.rows, self.d_out());
        for i in 0..x.rows {
            let y = self.forward(x.row(i))?;
            out.row_mut(i).copy_from_slice(&y);
        }
        Ok(out)
    }

    pub fn max_abs_weight(&self) -> f64 {
        let b = self.b1.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        self.w1.max_abs().max(self.w2.max_abs()).max(b)
    }

    /// Hidden units of all parts side by side; inputs and outputs shared.
    pub fn concat(parts: &[Mlp]) -> Result<Mlp> {
        let d_in = parts.first().map_or(0, Mlp::d_in);
        let d_out = parts.first().map_or(0, Mlp::d_out);
        if parts.iter().any(|p| p.d_in() != d_in || p.d_out() != d_out) {
            return Err(Error::DimensionMismatch("concatenated parts differ in width".into()));
        }
        let hidden: usize = parts.iter().map(Mlp::hidden).sum();
        let mut w1 = Matrix::zeros(hidden, d_in);
        let mut w2 = Matrix::zeros(d_out, hidden);
        let mut b1 = Vec::with_capacity(hidden);
        let mut h0 = 0;
        for p in parts {
            for h in 0..p.hidden() {
                w1.row_mut(h0 + h).copy_from_slice(p.w1.row(h));
                for o in 0..d_out {
                    w2.set(o, h0 + h, p.w2.get(o, h));
                }
            }
            b1.extend_from_slice(&p.b1);
            h0 += p.hidden();
        }
        Mlp::new(w1, b1, w2)
    }

    /// Re-wire a gadget: its inputs become `input * x` for a stream `x` of
    /// width `input.cols`, and output `o` lands in column `outputs[o]` of a
    /// `d_out`-wide result.
    pub fn embed(&self, input: &Matrix, outputs: &[usize], d_out: usize) -> Result<Mlp> {
        if input.rows != self.d_in() || outputs.len() != self.d_out() {
            return Err(Error::DimensionMismatch("gadget wiring does not match gadget size".into()));
        }
        let w1 = self.w1.matmul(input)?;
        let mut w2 = Matrix::zeros(d_out, self.hidden());
        for (o, &col) in outputs.iter().enumerate() {
            for h in 0..self.hidden() {
                w2.set(col, h, self.w2.get(o, h));
            }
        }
        Mlp::new(w1, self.b1.clone(), w2)
    }
}

/// Unit-by-unit builder for ReLU networks `W2 relu(W1 x + b1)`.
#[derive(Debug, Clone)]
pub struct ReluNet {
    pub d_in: usize,
    pub d_out: usize,
    pub units: Vec<(Vec<(usize, f64)>, f64, Vec<(usize, f64)>)>,
}

impl ReluNet {
    pub fn new(d_in: usize, d_out: usize) -> Self {
        ReluNet { d_in, d_out, units: Vec::new() }
    }

    /// Adds `relu(sum w x + b)` to the given outputs with the given weights.
    pub fn unit(&mut self, inputs: &[(usize, f64)], bias: f64, outputs: &[(usize, f64)]) {
        self.units.push((inputs.to_vec(), bias, outputs.to_vec()));
    }

    /// `y_out += x` exactly, as `relu(x) - relu(-x)`.
    pub fn linear(&mut self, inputs: &[(usize, f64)], bias: f64, out: usize, w: f64) {
        let neg: Vec<(usize, f64)> = inputs.iter().map(|&(c, v)| (c, -v)).collect();
        self.unit(inputs, bias, &[(out, w)]);
        self.unit(&neg, -bias, &[(out, -w)]);
    }

    pub fn to_mlp(&self) -> Mlp {
        let h = self.units.len();
        let mut w1 = Matrix::zeros(h, self.d_in);
        let mut w2 = Matrix::zeros(self.d_out, h);
        let mut b1 = Vec::with_capacity(h);
        for (u, (ins, b, outs)) in self.units.iter().enumerate() {
            for &(c, w) in ins {
                w1.add_to(u, c, w);
            }
            for &(o, w) in outs {
                w2.add_to(o, u, w);
            }
            b1.push(*b);
        }
        Mlp::new(w1, b1, w2).expect("consistent by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gelu_sanity() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(40.0) - 40.0).abs() < 1e-12);
        assert!(gelu(-40.0).abs() < 1e-12);
        let m = Mlp::zeros(3, 4, 2);
        assert_eq!(m.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn relu_net_linear_is_exact() {
        let mut n = ReluNet::new(2, 1);
        n.linear(&[(0, 2.0), (1, -1.0)], 0.5, 0, 1.0);
        let m = n.to_mlp();
        assert_eq!(m.forward_relu(&[3.0, 10.0]).unwrap(), vec![-3.5]);
    }
}
