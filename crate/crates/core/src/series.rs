//! Truncated Taylor series with an explicit expansion center.
//!
//! A [`TruncatedSeries`] stores coefficients `c[0..=order]` of the polynomial
//! `sum c[k] (t - center)^k`. Coefficient `k` equals the k-th derivative at
//! the center divided by k!, so the same vector doubles as a table of scaled
//! derivatives: that is what the per-segment recurrences produce and consume.
//!
//! Conventions that hold for every operation here:
//!
//! * values are immutable; operations take `&self` and return new series
//! * binary operations require both operands to share the center exactly
//! * truncation order `n` is an explicit argument wherever degree can grow
//!   (products, division, exponentials); nothing truncates silently
//! * coefficients past the stored order are zero, and [`coeff`] reads them
//!   that way, so callers never pad by hand
//!
//! [`coeff`]: TruncatedSeries::coeff

use crate::error::{Error, Result};

/// Absolute floor scale for series division, relative to the numerator's
/// leading coefficient. See [`TruncatedSeries::div`].
pub const DIVISION_FLOOR: f64 = 1e-12;

/// Polynomial `sum coeffs[k] (t - center)^k`, coefficient list never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    center: f64,
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// Builds a series, rejecting empty coefficient lists and non-finite data.
    pub fn new(center: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidSeries("empty coefficient list".into()));
        }
        if !center.is_finite() {
            return Err(Error::InvalidSeries(format!("non-finite center {center}")));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite coefficient {c}")));
        }
        Ok(Self { center, coeffs })
    }

    /// Internal constructor for results of arithmetic on validated inputs.
    /// Overflow can still produce non-finite coefficients; the solver checks
    /// for that where it matters (see `run_plan`).
    pub(crate) fn raw(center: f64, coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { center, coeffs }
    }

    /// The constant `value` as a degree-0 series about `center`.
    pub fn constant(center: f64, value: f64) -> Self {
        Self { center, coeffs: vec![value] }
    }

    /// The identity `t` about `center`: coefficients `[center, 1]`.
    pub fn time_var(center: f64) -> Self {
        Self { center, coeffs: vec![center, 1.0] }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Polynomial order (number of coefficients minus one).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `k`, zero past the stored order.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Horner evaluation at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let s = t - self.center;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    /// Coefficient-wise sum. Errors unless centers match exactly.
    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    /// Coefficient-wise difference. Errors unless centers match exactly.
    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.center != rhs.center {
            return Err(Error::CenterMismatch { left: self.center, right: rhs.center });
        }
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..len).map(|k| f(self.coeff(k), rhs.coeff(k))).collect();
        Ok(Self::raw(self.center, coeffs))
    }

    /// Every coefficient multiplied by `factor`.
    pub fn scale(&self, factor: f64) -> Self {
        Self::raw(self.center, self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Cauchy product truncated at order `n`:
    /// `c[k] = sum_{l=0..=k} a[l] b[k-l]` for `k <= n`.
    pub fn mul(&self, rhs: &Self, n: usize) -> Result<Self> {
        if self.center != rhs.center {
            return Err(Error::CenterMismatch { left: self.center, right: rhs.center });
        }
        let len = (self.order() + rhs.order()).min(n) + 1;
        let mut coeffs = vec![0.0; len];
        for (l, a) in self.coeffs.iter().enumerate() {
            if l >= len || *a == 0.0 {
                continue;
            }
            for (m, b) in rhs.coeffs.iter().take(len - l).enumerate() {
                coeffs[l + m] += a * b;
            }
        }
        Ok(Self::raw(self.center, coeffs))
    }

    /// Series of the p-th derivative about the same center:
    /// coefficient `k` becomes `((k+p)!/k!) c[k+p]`. The order drops by `p`,
    /// so `p` must not exceed the stored order.
    pub fn derivative(&self, p: usize) -> Result<Self> {
        if p > self.order() {
            return Err(Error::OrderTooLow { requested: p, order: self.order() });
        }
        if p == 0 {
            return Ok(self.clone());
        }
        let len = self.coeffs.len() - p;
        let coeffs = (0..len)
            .map(|k| {
                let factor: f64 = (k + 1..=k + p).map(|i| i as f64).product();
                self.coeffs[k + p] * factor
            })
            .collect();
        Ok(Self::raw(self.center, coeffs))
    }

    /// Quotient series to order `n` by the forward recurrence
    /// `q[k] = (num[k] - sum_{l=1..=k} den[l] q[k-l]) / den[0]`.
    ///
    /// Rejects denominators whose leading coefficient is at or below
    /// `DIVISION_FLOOR * max(1, |num[0]|)`: the recurrence divides by `den[0]`
    /// at every order, so a tiny leading coefficient amplifies noise
    /// geometrically rather than failing loudly later.
    pub fn div(&self, den: &Self, n: usize) -> Result<Self> {
        if self.center != den.center {
            return Err(Error::CenterMismatch { left: self.center, right: den.center });
        }
        let floor = DIVISION_FLOOR * self.coeffs[0].abs().max(1.0);
        let lead = den.coeffs[0];
        if lead.abs() <= floor {
            return Err(Error::DivisionBySmallLeadingCoefficient { leading: lead, floor });
        }
        let mut q = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut s = self.coeff(k);
            for l in 1..=k.min(den.order()) {
                s -= den.coeffs[l] * q[k - l];
            }
            q.push(s / lead);
        }
        Ok(Self::raw(self.center, q))
    }

    /// Series of `exp(g)` to order `n` for `g = self`, via
    /// `E[0] = exp(g[0])`, `E[k] = (1/k) sum_{l=1..=k} l g[l] E[k-l]`.
    pub fn exp_series(&self, n: usize) -> Self {
        let mut e = Vec::with_capacity(n + 1);
        e.push(self.coeffs[0].exp());
        for k in 1..=n {
            let mut s = 0.0;
            for l in 1..=k.min(self.order()) {
                s += l as f64 * self.coeffs[l] * e[k - l];
            }
            e.push(s / k as f64);
        }
        Self::raw(self.center, e)
    }

    /// Re-expands the same polynomial about `new_center` (exact change of
    /// expansion point, no truncation). Runs the synthetic-division form of
    /// Horner's rule; in debug builds the result is cross-checked against the
    /// direct binomial double sum to 1e-10 relative.
    pub fn taylor_shift(&self, new_center: f64) -> Self {
        let d = new_center - self.center;
        let mut b = self.coeffs.clone();
        let m = b.len();
        if d != 0.0 {
            for i in 0..m.saturating_sub(1) {
                for j in (i..m - 1).rev() {
                    b[j] += d * b[j + 1];
                }
            }
        }

        #[cfg(debug_assertions)]
        {
            // b[k] must equal sum_{y=k..order} C(y,k) d^(y-k) c[y].
            for k in 0..m {
                let mut expect = 0.0;
                let mut binom = 1.0;
                let mut dpow = 1.0;
                for y in k..m {
                    expect += binom * dpow * self.coeffs[y];
                    binom *= (y + 1) as f64 / (y + 1 - k) as f64;
                    dpow *= d;
                }
                let scale = expect.abs().max(b[k].abs()).max(1.0);
                debug_assert!(
                    (b[k] - expect).abs() <= 1e-10 * scale,
                    "taylor_shift check failed at k={k}: {} vs {expect}",
                    b[k]
                );
            }
        }

        Self::raw(new_center, b)
    }

    /// Series of `t -> u^(p)(t - tau)` about `target_center`, truncated at
    /// order `n`, where `u` is this series. Shifts to `target_center - tau`,
    /// differentiates `p` times, then relabels the center: substituting
    /// `x = t - tau` turns a series about `target_center - tau` in `x` into
    /// one about `target_center` in `t` with identical coefficients.
    ///
    /// When `target_center - tau` lands exactly on the stored center the
    /// shift is skipped, so aligned reuse stays bit-exact.
    pub fn delayed_term(&self, p: usize, tau: f64, target_center: f64, n: usize) -> Result<Self> {
        let lookup = target_center - tau;
        if lookup == self.center {
            return self.delayed_term_aligned(p, target_center, n);
        }
        let shifted = self.taylor_shift(lookup);
        let deriv = shifted.derivative(p)?;
        Ok(Self::raw(target_center, truncate_coeffs(deriv.coeffs, n)))
    }

    /// The exactly-aligned case of [`delayed_term`]: the delayed argument's
    /// center coincides with this series' center, so coefficients are reused
    /// directly (differentiate and relabel, no shift).
    ///
    /// [`delayed_term`]: TruncatedSeries::delayed_term
    pub fn delayed_term_aligned(&self, p: usize, target_center: f64, n: usize) -> Result<Self> {
        let deriv = self.derivative(p)?;
        Ok(Self::raw(target_center, truncate_coeffs(deriv.coeffs, n)))
    }

    /// Drops coefficients past order `n`. Never pads.
    pub fn truncated(&self, n: usize) -> Self {
        Self::raw(self.center, truncate_coeffs(self.coeffs.clone(), n))
    }

    /// Zero-pads up to order `n` (no-op if already at least that long).
    pub fn pad_to(&self, n: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(coeffs.len().max(n + 1), 0.0);
        Self::raw(self.center, coeffs)
    }
}

fn truncate_coeffs(mut coeffs: Vec<f64>, n: usize) -> Vec<f64> {
    coeffs.truncate(n + 1);
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn s(center: f64, coeffs: &[f64]) -> TruncatedSeries {
        TruncatedSeries::new(center, coeffs.to_vec()).unwrap()
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(TruncatedSeries::new(0.0, vec![]).is_err());
        assert!(TruncatedSeries::new(0.0, vec![f64::NAN]).is_err());
        assert!(TruncatedSeries::new(f64::INFINITY, vec![1.0]).is_err());
    }

    #[test]
    fn eval_is_horner_about_the_center() {
        let p = s(1.0, &[4.0, 4.0, 1.0]); // (t+1)^2 about 1
        assert_relative_eq!(p.eval(1.0), 4.0);
        assert_relative_eq!(p.eval(2.0), 9.0);
        assert_relative_eq!(p.eval(0.0), 1.0);
    }

    #[test]
    fn add_requires_matching_centers() {
        let a = s(0.0, &[1.0]);
        let b = s(0.5, &[1.0]);
        assert!(matches!(a.add(&b), Err(Error::CenterMismatch { .. })));
        let c = a.add(&s(0.0, &[2.0, 3.0])).unwrap();
        assert_eq!(c.coeffs(), &[3.0, 3.0]);
    }

    #[test]
    fn cauchy_product_squares_binomial() {
        let a = s(0.0, &[1.0, 1.0]);
        let sq = a.mul(&a, 8).unwrap();
        assert_eq!(sq.coeffs(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn cauchy_product_truncates_at_n() {
        let a = s(0.0, &[1.0, 1.0, 1.0]);
        let p = a.mul(&a, 2).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn derivative_scales_and_shifts_coefficients() {
        let p = s(0.0, &[1.0, 1.0, 1.0, 1.0]);
        let d2 = p.derivative(2).unwrap();
        assert_eq!(d2.coeffs(), &[2.0, 6.0]);
        assert_eq!(p.derivative(0).unwrap(), p);
        assert!(matches!(
            p.derivative(4),
            Err(Error::OrderTooLow { requested: 4, order: 3 })
        ));
    }

    #[test]
    fn division_reproduces_geometric_series() {
        // 1 / (1 - x) = 1 + x + x^2 + ...
        let num = s(0.0, &[1.0]);
        let den = s(0.0, &[1.0, -1.0]);
        let q = num.div(&den, 5).unwrap();
        assert_eq!(q.coeffs(), &[1.0; 6]);
    }

    #[test]
    fn division_round_trip() {
        let a = s(0.0, &[0.5, -1.25, 2.0, 0.75]);
        let b = s(0.0, &[2.0, 0.5, -0.25]);
        let q = a.mul(&b, 8).unwrap().div(&b, 3).unwrap();
        for k in 0..=3 {
            assert_relative_eq!(q.coeff(k), a.coeff(k), epsilon = 1e-12);
        }
    }

    #[test]
    fn division_floor_scales_with_numerator() {
        let num = s(0.0, &[1.0]);
        let den = s(0.0, &[1e-13, 1.0]);
        match num.div(&den, 3) {
            Err(Error::DivisionBySmallLeadingCoefficient { floor, .. }) => {
                assert_relative_eq!(floor, 1e-12);
            }
            other => panic!("expected floor error, got {other:?}"),
        }
        // A large numerator raises the floor proportionally.
        let num = s(0.0, &[1e6]);
        assert!(num.div(&s(0.0, &[1e-7, 1.0]), 3).is_err());
    }

    #[test]
    fn exp_series_of_identity_gives_inverse_factorials() {
        let e = s(0.0, &[0.0, 1.0]).exp_series(6);
        let mut fact = 1.0;
        for k in 0..=6 {
            if k > 0 {
                fact *= k as f64;
            }
            assert_relative_eq!(e.coeff(k), 1.0 / fact, epsilon = 1e-15);
        }
    }

    #[test]
    fn exp_series_of_affine_argument() {
        // exp(a + lambda (t - c)): coefficient k is e^a lambda^k / k!.
        let (a, lambda) = (0.7, -1.3);
        let e = s(2.0, &[a, lambda]).exp_series(8);
        let mut expect = a.exp();
        for k in 0..=8 {
            if k > 0 {
                expect *= lambda / k as f64;
            }
            assert_relative_eq!(e.coeff(k), expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn taylor_shift_moves_the_time_variable() {
        let t = TruncatedSeries::time_var(0.0);
        let moved = t.taylor_shift(3.5);
        assert_eq!(moved.center(), 3.5);
        assert_eq!(moved.coeffs(), &[3.5, 1.0]);
    }

    #[test]
    fn taylor_shift_is_exact_on_dyadic_data() {
        // (1 + t)^2 about 0 re-expanded about 1 is 4 + 4(t-1) + (t-1)^2.
        let p = s(0.0, &[1.0, 2.0, 1.0]);
        let q = p.taylor_shift(1.0);
        assert_eq!(q.coeffs(), &[4.0, 4.0, 1.0]);
        // Round trip restores the original exactly for dyadic shifts.
        assert_eq!(q.taylor_shift(0.0).coeffs(), p.coeffs());
    }

    #[test]
    fn taylor_shift_preserves_values() {
        let p = s(0.25, &[0.3, -1.7, 0.9, 2.1, -0.4]);
        let q = p.taylor_shift(-1.75);
        for i in 0..50 {
            let t = -3.0 + 0.1 * i as f64;
            assert_relative_eq!(q.eval(t), p.eval(t), epsilon = 1e-11, max_relative = 1e-11);
        }
    }

    #[test]
    fn delayed_term_aligned_reuses_coefficients() {
        let u = s(0.0, &[1.0, -2.0, 2.0, -4.0 / 3.0]);
        let slot = u.delayed_term(0, 0.1, 0.1, 4).unwrap();
        assert_eq!(slot.center(), 0.1);
        assert_eq!(slot.coeffs(), u.coeffs());
    }

    #[test]
    fn delayed_term_general_and_aligned_paths_agree_when_aligned() {
        let u = s(0.5, &[0.2, 1.4, -0.7, 0.05]);
        // 0.75 - 0.25 == 0.5 exactly in binary floating point.
        let general = u.delayed_term(1, 0.25, 0.75, 8).unwrap();
        let aligned = u.delayed_term_aligned(1, 0.75, 8).unwrap();
        assert_eq!(general, aligned);
    }

    #[test]
    fn delayed_term_differentiates_after_the_shift() {
        // u(x) = x^2: u'(t - 0.5) = 2t - 1.
        let u = s(0.0, &[0.0, 0.0, 1.0]);
        let slot = u.delayed_term(1, 0.5, 1.0, 8).unwrap();
        assert_eq!(slot.center(), 1.0);
        assert_relative_eq!(slot.eval(1.0), 1.0);
        assert_relative_eq!(slot.eval(1.5), 2.0);
    }

    #[test]
    fn delayed_term_truncates_at_n() {
        let u = s(0.0, &[1.0, 1.0, 1.0, 1.0, 1.0]);
        let slot = u.delayed_term(0, 0.25, 0.5, 2).unwrap();
        assert_eq!(slot.order(), 2);
    }
}
