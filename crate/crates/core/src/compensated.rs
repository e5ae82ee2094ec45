//! Double-double accumulation for residual checks whose plain floating-point
//! evaluation would be swamped by cancellation (e.g. `Q^T M Q` with an
//! ill-conditioned Gram matrix `M`).

use nalgebra::DMatrix;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Sum with a running error term (Ogita–Rump–Oishi `Sum2`).
#[derive(Debug, Default, Clone, Copy)]
pub struct Accumulator {
    hi: f64,
    lo: f64,
}

impl Accumulator {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        self.hi = s;
        self.lo += e;
    }

    /// Adds the product `a * b` exactly (up to the final rounding).
    #[inline]
    pub fn add_prod(&mut self, a: f64, b: f64) {
        let (p, e) = two_prod(a, b);
        self.add(p);
        self.lo += e;
    }

    /// Adds `a * b * c` with the leading two error terms retained.
    #[inline]
    pub fn add_triple(&mut self, a: f64, b: f64, c: f64) {
        let (p, e) = two_prod(a, b);
        self.add_prod(p, c);
        self.lo += e * c;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// `X^T A Y` with every entry accumulated in double-double precision.
pub fn congruence(x: &DMatrix<f64>, a: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(x.nrows(), a.nrows());
    assert_eq!(a.ncols(), y.nrows());
    DMatrix::from_fn(x.ncols(), y.ncols(), |i, j| {
        let mut acc = Accumulator::default();
        for k in 0..a.nrows() {
            let xk = x[(k, i)];
            if xk == 0.0 {
                continue;
            }
            for l in 0..a.ncols() {
                acc.add_triple(xk, a[(k, l)], y[(l, j)]);
            }
        }
        acc.value()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_sum() {
        let mut acc = Accumulator::default();
        for x in [1e16, 1.0, -1e16, 1e-3] {
            acc.add(x);
        }
        assert_eq!(acc.value(), 1.001);
    }

    #[test]
    fn congruence_matches_plain_product_on_benign_input() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let c = congruence(&x, &a, &x);
        assert!((c - x.transpose() * &a * &x).amax() < 1e-13);
    }
}
