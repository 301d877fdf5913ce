//! Round-to-nearest mantissa truncation.

use super::tensor::Matrix;

/// Keep `bits` explicit mantissa bits of `x`, rounding half away from
/// zero. `bits >= 52` is the identity.
pub fn quantize_value(x: f64, bits: u32) -> f64 {
    if bits >= 52 || !x.is_finite() || x == 0.0 {
        return x;
    }
    let shift = 52 - bits;
    let raw = x.to_bits();
    let rounded = (raw + (1u64 << (shift - 1))) & !((1u64 << shift) - 1);
    f64::from_bits(rounded)
}

pub fn quantize_slice(xs: &mut [f64], bits: u32) {
    for x in xs {
        *x = quantize_value(*x, bits);
    }
}

pub fn quantize(m: &Matrix, bits: u32) -> Matrix {
    Matrix { data: m.data.iter().map(|&v| quantize_value(v, bits)).collect(), ..m.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(quantize_value(1.0 + 2f64.powi(-30), 20), 1.0);
        assert_eq!(quantize_value(1.0 + 2f64.powi(-20), 20), 1.0 + 2f64.powi(-20));
        assert_eq!(quantize_value(1.75, 1), 2.0);
        assert_eq!(quantize_value(-1.25, 1), -1.5);
        let x = std::f64::consts::PI;
        assert_eq!(quantize_value(x, 52), x);
        let q = quantize_value(x, 12);
        assert_eq!(quantize_value(q, 12), q);
    }
}
