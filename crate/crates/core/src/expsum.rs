//! Closed-form exponential sums `Σ c · e^{αx + βy}` on `[0,1]` or `[0,1]²`.
//!
//! Every range and weight function of the perturbations is of this shape, so
//! constant-coefficient differential operators, traces and inner products are
//! all exact.

use std::f64::consts::PI;

use crate::{Error, Result, C64};

pub type Rate = [C64; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTerm {
    pub coeff: C64,
    pub rate: Rate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpSum {
    dim: usize,
    terms: Vec<ExpTerm>,
}

/// `e^z`, snapped to `±1` when `z` is an exact imaginary multiple of `π`.
pub fn exp_exact(z: C64) -> C64 {
    if z.re == 0.0 {
        let t = z.im / PI;
        let m = t.round();
        if (t - m).abs() < 1e-12 {
            return if (m as i64).rem_euclid(2) == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(-1.0, 0.0)
            };
        }
    }
    z.exp()
}

/// `∫₀¹ e^{zt} dt`.
pub fn exp_integral(z: C64) -> C64 {
    if z == C64::new(0.0, 0.0) {
        return C64::new(1.0, 0.0);
    }
    if z.re == 0.0 {
        let t = z.im / (2.0 * PI);
        if (t - t.round()).abs() < 1e-12 {
            return C64::new(0.0, 0.0);
        }
    }
    if z.norm() < 0.5 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..24 {
            term = term * z / (k as f64 + 1.0);
            sum += term;
        }
        return sum;
    }
    (exp_exact(z) - 1.0) / z
}

fn zero_rate() -> Rate {
    [C64::new(0.0, 0.0); 2]
}

impl ExpSum {
    pub fn zero(dim: usize) -> Self {
        assert!(dim == 1 || dim == 2, "dimension must be 1 or 2");
        ExpSum {
            dim,
            terms: Vec::new(),
        }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        let mut s = ExpSum::zero(dim);
        s.push(c, zero_rate());
        s
    }

    /// `coeff · e^{αx}` on the interval.
    pub fn exp1(coeff: C64, alpha: C64) -> Self {
        let mut s = ExpSum::zero(1);
        s.push(coeff, [alpha, C64::new(0.0, 0.0)]);
        s
    }

    /// `coeff · e^{αx + βy}` on the square.
    pub fn exp2(coeff: C64, alpha: C64, beta: C64) -> Self {
        let mut s = ExpSum::zero(2);
        s.push(coeff, [alpha, beta]);
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds a term, merging equal rates; exact zeros are dropped.
    pub fn push(&mut self, coeff: C64, rate: Rate) {
        let rate = if self.dim == 1 {
            [rate[0], C64::new(0.0, 0.0)]
        } else {
            rate
        };
        if let Some(pos) = self.terms.iter().position(|t| t.rate == rate) {
            self.terms[pos].coeff += coeff;
            if self.terms[pos].coeff == C64::new(0.0, 0.0) {
                self.terms.remove(pos);
            }
        } else if coeff != C64::new(0.0, 0.0) {
            self.terms.push(ExpTerm { coeff, rate });
        }
    }

    fn check_dim(&self, other: &ExpSum) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "exponential sums of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &ExpSum) -> Result<ExpSum> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.coeff, t.rate);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &ExpSum) -> Result<ExpSum> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> ExpSum {
        let mut out = ExpSum::zero(self.dim);
        for t in &self.terms {
            out.push(c * t.coeff, t.rate);
        }
        out
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> ExpSum {
        let mut out = ExpSum::zero(self.dim);
        for t in &self.terms {
            out.push(t.coeff.conj(), [t.rate[0].conj(), t.rate[1].conj()]);
        }
        out
    }

    pub fn eval(&self, p: [f64; 2]) -> C64 {
        self.terms
            .iter()
            .map(|t| t.coeff * exp_exact(t.rate[0] * p[0] + t.rate[1] * p[1]))
            .sum()
    }

    pub fn eval1(&self, x: f64) -> C64 {
        self.eval([x, 0.0])
    }

    /// Constant-coefficient operator given by its symbol on `e^{αx+βy}`.
    pub fn apply_symbol<F: Fn(Rate) -> C64>(&self, symbol: F) -> ExpSum {
        let mut out = ExpSum::zero(self.dim);
        for t in &self.terms {
            out.push(t.coeff * symbol(t.rate), t.rate);
        }
        out
    }

    pub fn dx(&self) -> ExpSum {
        self.apply_symbol(|r| r[0])
    }

    pub fn dy(&self) -> ExpSum {
        self.apply_symbol(|r| r[1])
    }

    /// `u(x0, ·)` as a one-dimensional sum in `y`.
    pub fn trace_x(&self, x0: f64) -> Result<ExpSum> {
        self.require_dim(2, "trace in x")?;
        let mut out = ExpSum::zero(1);
        for t in &self.terms {
            out.push(t.coeff * exp_exact(t.rate[0] * x0), [t.rate[1], C64::new(0.0, 0.0)]);
        }
        Ok(out)
    }

    /// `u(·, y0)` as a one-dimensional sum in `x`.
    pub fn trace_y(&self, y0: f64) -> Result<ExpSum> {
        self.require_dim(2, "trace in y")?;
        let mut out = ExpSum::zero(1);
        for t in &self.terms {
            out.push(t.coeff * exp_exact(t.rate[1] * y0), [t.rate[0], C64::new(0.0, 0.0)]);
        }
        Ok(out)
    }

    fn require_dim(&self, dim: usize, what: &str) -> Result<()> {
        if self.dim != dim {
            return Err(Error::Unsupported(format!(
                "{what} needs a {dim}-dimensional function, got {}",
                self.dim
            )));
        }
        Ok(())
    }

    /// `∫ u` over the unit interval or square.
    pub fn integral(&self) -> C64 {
        self.terms
            .iter()
            .map(|t| {
                let iy = if self.dim == 2 {
                    exp_integral(t.rate[1])
                } else {
                    C64::new(1.0, 0.0)
                };
                t.coeff * exp_integral(t.rate[0]) * iy
            })
            .sum()
    }

    /// `⟨self, other⟩ = ∫ self · conj(other)`.
    pub fn inner(&self, other: &ExpSum) -> Result<C64> {
        self.check_dim(other)?;
        let mut s = C64::new(0.0, 0.0);
        for a in &self.terms {
            for b in &other.terms {
                s += a.coeff * b.coeff.conj() * rate_inner(self.dim, a.rate, b.rate);
            }
        }
        Ok(s)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).map(|v| v.re.max(0.0).sqrt()).unwrap_or(0.0)
    }
}

/// `⟨e^{ρ}, e^{σ}⟩` for single exponentials.
pub fn rate_inner(dim: usize, rho: Rate, sigma: Rate) -> C64 {
    let ix = exp_integral(rho[0] + sigma[0].conj());
    if dim == 2 {
        ix * exp_integral(rho[1] + sigma[1].conj())
    } else {
        ix
    }
}

/// Finite-rank operator `Σ M_pq e^{ρ_p} ⟨·, e^{σ_q}⟩` with exact coefficient
/// bookkeeping, so identical terms cancel exactly.
#[derive(Clone, Debug)]
pub struct OuterSum {
    dim: usize,
    left: Vec<Rate>,
    right: Vec<Rate>,
    entries: Vec<(usize, usize, C64)>,
}

impl OuterSum {
    pub fn new(dim: usize) -> Self {
        OuterSum {
            dim,
            left: Vec::new(),
            right: Vec::new(),
            entries: Vec::new(),
        }
    }

    fn index(list: &mut Vec<Rate>, r: Rate) -> usize {
        match list.iter().position(|x| *x == r) {
            Some(p) => p,
            None => {
                list.push(r);
                list.len() - 1
            }
        }
    }

    /// Adds `scale · u ⟨·, v⟩`.
    pub fn add_outer(&mut self, scale: C64, u: &ExpSum, v: &ExpSum) -> Result<()> {
        if u.dim != self.dim || v.dim != self.dim {
            return Err(Error::Dimension("outer product of mismatched sums".into()));
        }
        for a in &u.terms {
            for b in &v.terms {
                let p = Self::index(&mut self.left, a.rate);
                let q = Self::index(&mut self.right, b.rate);
                let val = scale * a.coeff * b.coeff.conj();
                match self.entries.iter_mut().find(|e| e.0 == p && e.1 == q) {
                    Some(e) => e.2 += val,
                    None => self.entries.push((p, q, val)),
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, f: &ExpSum) -> Result<ExpSum> {
        let mut out = ExpSum::zero(self.dim);
        for &(p, q, m) in &self.entries {
            let proj = f.inner(&ExpSum {
                dim: self.dim,
                terms: vec![ExpTerm {
                    coeff: C64::new(1.0, 0.0),
                    rate: self.right[q],
                }],
            })?;
            out.push(m * proj, self.left[p]);
        }
        Ok(out)
    }

    /// Hilbert–Schmidt norm on `L₂`.
    pub fn hs_norm(&self) -> f64 {
        let nz: Vec<_> = self
            .entries
            .iter()
            .filter(|e| e.2 != C64::new(0.0, 0.0))
            .collect();
        let mut s = C64::new(0.0, 0.0);
        for &&(p, q, m) in &nz {
            for &&(p2, q2, m2) in &nz {
                s += m
                    * m2.conj()
                    * rate_inner(self.dim, self.left[p], self.left[p2])
                    * rate_inner(self.dim, self.right[q2], self.right[q]);
            }
        }
        s.re.max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn integral_of_exp() {
        let f = ExpSum::exp1(c(1.0, 0.0), c(1.0, 0.0));
        assert!((f.integral().re - (std::f64::consts::E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn small_rate_series_matches_limit() {
        let z = c(1e-9, 0.0);
        assert!((exp_integral(z) - c(1.0 + 0.5e-9, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn fourier_modes_are_orthonormal() {
        let u = ExpSum::exp2(c(1.0, 0.0), c(0.0, PI), c(0.0, 3.0 * PI));
        let v = ExpSum::exp2(c(1.0, 0.0), c(0.0, -PI), c(0.0, 3.0 * PI));
        assert_eq!(u.inner(&v).unwrap(), c(0.0, 0.0));
        assert!((u.inner(&u).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn antiperiodic_trace_is_exact() {
        let u = ExpSum::exp1(c(1.0, 0.0), c(0.0, 5.0 * PI));
        assert_eq!(u.eval1(0.0) + u.eval1(1.0), c(0.0, 0.0));
    }

    #[test]
    fn push_cancels() {
        let mut u = ExpSum::exp1(c(2.0, 1.0), c(-1.0, 0.0));
        u.push(c(-2.0, -1.0), [c(-1.0, 0.0), c(0.0, 0.0)]);
        assert!(u.is_zero());
    }

    #[test]
    fn outer_hs_norm_of_rank_one() {
        let u = ExpSum::exp1(c(1.0, 0.0), c(1.0, 0.0));
        let v = ExpSum::constant(1, c(1.0, 0.0));
        let mut o = OuterSum::new(1);
        o.add_outer(c(2.0, 0.0), &u, &v).unwrap();
        let want = 2.0 * u.norm() * v.norm();
        assert!((o.hs_norm() - want).abs() < 1e-14);
        o.add_outer(c(-2.0, 0.0), &u, &v).unwrap();
        assert_eq!(o.hs_norm(), 0.0);
    }

    #[test]
    fn traces_of_square_function() {
        let u = ExpSum::exp2(c(1.0, 0.0), c(0.0, PI), c(-PI, 0.0));
        let t = u.trace_x(1.0).unwrap();
        assert!((t.eval1(0.5) - c(-(-PI * 0.5).exp(), 0.0)).norm() < 1e-15);
        assert!(ExpSum::exp1(c(1.0, 0.0), c(1.0, 0.0)).trace_x(0.0).is_err());
    }
}
