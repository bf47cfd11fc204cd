// SPDX-License-Identifier: MIT OR Apache-2.0

//! Small numerical helpers shared by the pipeline: compensated summation
//! and adaptive Simpson quadrature.

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_initial(value: f64) -> Self {
        Self { sum: value, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of terms.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    terms.into_iter().collect::<CompensatedSum>().value()
}

/// Compensated dot product.
pub fn compensated_dot(x: &[f64], y: &[f64]) -> f64 {
    compensated_sum(x.iter().zip(y).map(|(a, b)| a * b))
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[lo, hi]`.
///
/// The interval is first split into `panels` equal pieces and every piece is
/// refined until the Richardson error estimate drops below its share of `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let width = (hi - lo) / panels as f64;
    let mut total = CompensatedSum::new();
    for p in 0..panels {
        let a = lo + width * p as f64;
        let b = if p + 1 == panels { hi } else { a + width };
        let fa = f(a);
        let fb = f(b);
        let m = 0.5 * (a + b);
        let fm = f(m);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total.add(simpson_step(&f, a, b, fa, fm, fb, whole, tol / panels as f64, MAX_DEPTH));
    }
    total.value()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let terms = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(terms), 2.0);
    }

    #[test]
    fn simpson_integrates_polynomials_and_trig() {
        let cubic = adaptive_simpson(|x| x * x * x - x, 0.0, 2.0, 1e-12, 1);
        assert!((cubic - 2.0).abs() < 1e-12);
        let cos2 = adaptive_simpson(|x| (2.0 * std::f64::consts::PI * x).cos().powi(2), 0.0, 1.0, 1e-10, 4);
        assert!((cos2 - 0.5).abs() < 1e-10);
    }
}
