//! Adaptive Gauss-Kronrod (7/15) quadrature. Used as an independent oracle
//! against the Gauss-Legendre plans.

use num_complex::Complex64;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub trait Quantity: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Quantity for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Quantity for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn gk15<T: Quantity>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).magnitude())
}

/// Integrates f over [a, b] until the summed error estimate is below
/// max(abs_tol, rel_tol·|I|), or `max_segments` is reached.
pub fn adaptive<T: Quantity>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Integral<T> {
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&f, a, b);
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut evals = 15;
    let mut converged = false;
    while heap.len() < max_segments {
        if err <= abs_tol.max(rel_tol * total.magnitude()) {
            converged = true;
            break;
        }
        let s = heap.pop().unwrap();
        let m = 0.5 * (s.a + s.b);
        let (v1, e1) = gk15(&f, s.a, m);
        let (v2, e2) = gk15(&f, m, s.b);
        evals += 30;
        total = total - s.value + v1 + v2;
        err = err - s.error + e1 + e2;
        heap.push(Segment { a: s.a, b: m, value: v1, error: e1 });
        heap.push(Segment { a: m, b: s.b, value: v2, error: e2 });
    }
    if !converged && err <= abs_tol.max(rel_tol * total.magnitude()) {
        converged = true;
    }
    // re-sum to shed accumulated cancellation in the running totals
    let mut value = T::zero();
    let mut error = 0.0;
    for s in heap.iter() {
        value = value + s.value;
        error += s.error;
    }
    Integral { value, error, evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_integrals() {
        let r = adaptive(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-14, 1e-14, 1000);
        assert!((r.value - 2.0).abs() < 1e-13);
        assert!(r.converged);
        let r = adaptive(|x: f64| (-x * x).exp(), -10.0, 10.0, 1e-14, 1e-14, 1000);
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn complex_integral() {
        let r = adaptive(|x: f64| Complex64::new(0.0, x).exp(), 0.0, 1.0, 1e-14, 1e-14, 100);
        let want = Complex64::new(1f64.sin(), 1.0 - 1f64.cos());
        assert!((r.value - want).norm() < 1e-14);
    }

    #[test]
    fn kinked_integrand_converges() {
        let r = adaptive(|x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-10, 1e-12, 5000);
        assert!((r.value - 4.0 / 3.0).abs() < 1e-9);
    }
}
