//! Compensated (Kahan–Neumaier) accumulation for real and complex values.

use std::ops::AddAssign;

use num_complex::Complex;

use crate::scalar::Real;

/// Running sum with Neumaier's correction term.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum<T> {
    s: T,
    c: T,
}

impl<T: Real> NeumaierSum<T> {
    pub fn new() -> Self {
        Self {
            s: T::zero(),
            c: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    pub fn merge(&mut self, other: &Self) {
        self.add(other.s);
        self.add(other.c);
    }

    #[inline]
    pub fn sum(&self) -> T {
        self.s + self.c
    }
}

impl<T: Real> AddAssign<T> for NeumaierSum<T> {
    fn add_assign(&mut self, rhs: T) {
        self.add(rhs);
    }
}

/// Component-wise compensated complex sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum<T> {
    re: NeumaierSum<T>,
    im: NeumaierSum<T>,
}

impl<T: Real> ComplexSum<T> {
    pub fn new() -> Self {
        Self {
            re: NeumaierSum::new(),
            im: NeumaierSum::new(),
        }
    }

    #[inline]
    pub fn add(&mut self, z: Complex<T>) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &Self) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    #[inline]
    pub fn sum(&self) -> Complex<T> {
        Complex::new(self.re.sum(), self.im.sum())
    }
}

impl<T: Real> AddAssign<Complex<T>> for ComplexSum<T> {
    fn add_assign(&mut self, rhs: Complex<T>) {
        self.add(rhs);
    }
}

pub fn sum_real<T: Real, I: IntoIterator<Item = T>>(it: I) -> T {
    let mut acc = NeumaierSum::new();
    for x in it {
        acc.add(x);
    }
    acc.sum()
}

pub fn sum_complex<T: Real, I: IntoIterator<Item = Complex<T>>>(it: I) -> Complex<T> {
    let mut acc = ComplexSum::new();
    for z in it {
        acc.add(z);
    }
    acc.sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_lost_by_naive_sum() {
        let xs = [1.0e16, 1.0, -1.0e16, 1.0];
        let naive: f64 = xs.iter().sum();
        assert_eq!(sum_real(xs), 2.0);
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn unit_circle_terms_cancel() {
        let n = 1_000_000;
        let z = sum_complex((0..n).map(|j| crate::phase::e_ratio::<f64>(j, n as u64)));
        assert!(z.norm() < 1e-9, "{z}");
    }
}
