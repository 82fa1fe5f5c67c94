//! The Cauchy–Riemann operator `∂/∂x + i∂/∂y` on the unit square with the
//! anti-periodic fixed extension, in the truncated basis
//! `e^{(2k+1)πix + (2n+1)πiy}`, and its rank-1 convolution perturbations.

use std::f64::consts::PI;
use std::sync::OnceLock;

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, UPLO};
use rayon::prelude::*;
use serde::Serialize;

use crate::expsum::{exp_exact, rate_inner, ExpSum, Rate};
use crate::extension::{self, AnalyticModel, ExampleProvider, FiniteRankPerturbation};
use crate::linops::{self, Basis, GridFunction, LinearMap};
use crate::{Error, Result, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `e^π − e^{−π}`.
pub fn sinh_gap() -> f64 {
    PI.exp() - (-PI).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeSet {
    m: usize,
}

impl ModeSet {
    pub fn new(m: usize) -> Result<Self> {
        if m < 4 {
            return Err(Error::TruncationTooSmall(m));
        }
        Ok(ModeSet { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn side(&self) -> usize {
        2 * self.m + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, k: i64, n: i64) -> Option<usize> {
        let m = self.m as i64;
        if k.abs() > m || n.abs() > m {
            return None;
        }
        Some((k + m) as usize * self.side() + (n + m) as usize)
    }

    pub fn mode(&self, idx: usize) -> (i64, i64) {
        let m = self.m as i64;
        ((idx / self.side()) as i64 - m, (idx % self.side()) as i64 - m)
    }

    pub fn range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.m as i64)..=self.m as i64
    }
}

fn odd(k: i64) -> f64 {
    (2 * k + 1) as f64
}

/// Basis mode `e^{(2k+1)πix + (2n+1)πiy}`.
pub fn mode_function(k: i64, n: i64) -> ExpSum {
    ExpSum::exp2(c(1.0, 0.0), c(0.0, odd(k) * PI), c(0.0, odd(n) * PI))
}

/// Eigenvalue of `L_N` on the mode `(k, n)`.
pub fn ln_eigenvalue(k: i64, n: i64) -> C64 {
    c(-odd(n) * PI, odd(k) * PI)
}

/// `1/((2k+1)πi − (2n+1)π)`.
pub fn ln_inverse_coeff(k: i64, n: i64) -> C64 {
    ln_eigenvalue(k, n).inv()
}

/// Closed-form operators of the example.
#[derive(Clone, Copy, Debug, Default)]
pub struct CrModel;

pub const TRACE_SAMPLES: usize = 64;

fn sample_coords() -> impl Iterator<Item = f64> {
    (0..TRACE_SAMPLES).map(|j| (j as f64 + 0.5) / TRACE_SAMPLES as f64)
}

impl AnalyticModel for CrModel {
    fn label(&self) -> &'static str {
        "cauchy-riemann"
    }

    fn dim(&self) -> usize {
        2
    }

    fn lhat_symbol(&self, r: Rate) -> C64 {
        r[0] + c(0.0, 1.0) * r[1]
    }

    fn mhat_symbol(&self, r: Rate) -> C64 {
        -r[0] + c(0.0, 1.0) * r[1]
    }

    fn ker_lhat_basis(&self) -> Vec<ExpSum> {
        vec![ExpSum::exp2(c(1.0, 0.0), c(0.0, PI), c(-PI, 0.0))]
    }

    fn ker_mhat_basis(&self) -> Vec<ExpSum> {
        vec![ExpSum::exp2(c(1.0, 0.0), c(0.0, PI), c(PI, 0.0))]
    }

    fn ker_lhat_complete(&self) -> bool {
        false
    }

    /// `u(0,y) + u(1,y)` then `u(x,0) + u(x,1)` at 64 midpoints each.
    fn boundary_values(&self, u: &ExpSum) -> Result<Vec<C64>> {
        if u.dim() != 2 {
            return Err(Error::Unsupported("traces need a function on the square".into()));
        }
        let left = u.trace_x(0.0)?.add(&u.trace_x(1.0)?)?;
        let bottom = u.trace_y(0.0)?.add(&u.trace_y(1.0)?)?;
        Ok(sample_coords()
            .map(|y| left.eval1(y))
            .chain(sample_coords().map(|x| bottom.eval1(x)))
            .collect())
    }

    fn domain_test_functions(&self, count: usize) -> Vec<ExpSum> {
        let r = (count as f64).sqrt().ceil() as i64 + 1;
        let mut modes: Vec<(i64, i64)> = (-r..=r).flat_map(|k| (-r..=r).map(move |n| (k, n))).collect();
        modes.sort_by_key(|&(k, n)| ((2 * k + 1).pow(2) + (2 * n + 1).pow(2), k, n));
        modes.into_iter().take(count).map(|(k, n)| mode_function(k, n)).collect()
    }
}

/// Diagonal fixed inverse in the truncated anti-periodic basis.
#[derive(Debug)]
pub struct CrProvider {
    modes: ModeSet,
    basis: Basis,
    inverse: LinearMap,
    adjoint: OnceLock<LinearMap>,
}

impl CrProvider {
    pub fn new(modes: ModeSet) -> Result<Self> {
        let d: Vec<C64> = (0..modes.len())
            .map(|i| {
                let (k, n) = modes.mode(i);
                ln_inverse_coeff(k, n)
            })
            .collect();
        let basis = Basis::Orthonormal(modes.len());
        Ok(CrProvider {
            inverse: LinearMap::from_diagonal(&d, basis.clone())?,
            modes,
            basis,
            adjoint: OnceLock::new(),
        })
    }

    pub fn with_truncation(m: usize) -> Result<Self> {
        CrProvider::new(ModeSet::new(m)?)
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if *u.basis() != self.basis {
            return Err(Error::Dimension("coefficients not in the provider basis".into()));
        }
        Ok(())
    }

    fn diagonal_apply(&self, u: &GridFunction, f: impl Fn(i64, i64) -> C64) -> Result<GridFunction> {
        self.check(u)?;
        let v = u
            .values()
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let (k, n) = self.modes.mode(i);
                x * f(k, n)
            })
            .collect();
        GridFunction::new(v, self.basis.clone())
    }
}

impl AnalyticModel for CrProvider {
    fn label(&self) -> &'static str {
        CrModel.label()
    }
    fn dim(&self) -> usize {
        2
    }
    fn lhat_symbol(&self, r: Rate) -> C64 {
        CrModel.lhat_symbol(r)
    }
    fn mhat_symbol(&self, r: Rate) -> C64 {
        CrModel.mhat_symbol(r)
    }
    fn ker_lhat_basis(&self) -> Vec<ExpSum> {
        CrModel.ker_lhat_basis()
    }
    fn ker_mhat_basis(&self) -> Vec<ExpSum> {
        CrModel.ker_mhat_basis()
    }
    fn ker_lhat_complete(&self) -> bool {
        false
    }
    fn boundary_values(&self, u: &ExpSum) -> Result<Vec<C64>> {
        CrModel.boundary_values(u)
    }
    fn domain_test_functions(&self, count: usize) -> Vec<ExpSum> {
        CrModel.domain_test_functions(count)
    }
}

impl ExampleProvider for CrProvider {
    fn basis(&self) -> &Basis {
        &self.basis
    }

    fn resolution(&self) -> usize {
        self.modes.m()
    }

    fn at_resolution(&self, m: usize) -> Result<Self> {
        CrProvider::with_truncation(m)
    }

    fn base_inverse(&self) -> &LinearMap {
        &self.inverse
    }

    fn base_inverse_adjoint(&self) -> &LinearMap {
        self.adjoint.get_or_init(|| self.inverse.weighted_adjoint())
    }

    fn lhat_discrete(&self, u: &GridFunction) -> Result<GridFunction> {
        self.diagonal_apply(u, ln_eigenvalue)
    }

    fn mhat_discrete(&self, u: &GridFunction) -> Result<GridFunction> {
        self.diagonal_apply(u, |k, n| c(-odd(n) * PI, -odd(k) * PI))
    }

    fn boundary_values_discrete(&self, u: &GridFunction) -> Result<Vec<C64>> {
        self.check(u)?;
        let mut out = vec![c(0.0, 0.0); 2 * TRACE_SAMPLES];
        for (i, v) in u.values().iter().enumerate() {
            if *v == c(0.0, 0.0) {
                continue;
            }
            let (k, n) = self.modes.mode(i);
            let ax = c(0.0, odd(k) * PI);
            let ay = c(0.0, odd(n) * PI);
            let sx = 1.0 + exp_exact(ax);
            let sy = 1.0 + exp_exact(ay);
            for (j, t) in sample_coords().enumerate() {
                out[j] += v * sx * exp_exact(ay * t);
                out[TRACE_SAMPLES + j] += v * sy * exp_exact(ax * t);
            }
        }
        Ok(out)
    }

    fn represent(&self, f: &ExpSum) -> Result<GridFunction> {
        if f.dim() != 2 {
            return Err(Error::Dimension("the square example needs 2-D functions".into()));
        }
        let side: Vec<i64> = self.modes.range().collect();
        let mut v = Array1::<C64>::zeros(self.modes.len());
        for t in f.terms() {
            let ix: Vec<C64> = side
                .iter()
                .map(|&k| rate_inner(1, [t.rate[0], c(0.0, 0.0)], [c(0.0, odd(k) * PI), c(0.0, 0.0)]))
                .collect();
            let iy: Vec<C64> = side
                .iter()
                .map(|&n| rate_inner(1, [t.rate[1], c(0.0, 0.0)], [c(0.0, odd(n) * PI), c(0.0, 0.0)]))
                .collect();
            for (a, x) in ix.iter().enumerate() {
                if *x == c(0.0, 0.0) {
                    continue;
                }
                for (b, y) in iy.iter().enumerate() {
                    v[a * side.len() + b] += t.coeff * x * y;
                }
            }
        }
        GridFunction::with_closed_form(v, self.basis.clone(), f.clone())
    }

    fn commutator_order(&self) -> f64 {
        1.0
    }
}

/// `Kf = a e^{iπx−πy} ∫∫ e^{−iπξ+πη} f(ξ,η) dξ dη`.
pub fn build_k_cr(a: C64) -> FiniteRankPerturbation {
    FiniteRankPerturbation::new(
        CrModel.ker_lhat_basis(),
        CrModel.ker_mhat_basis(),
        Array2::from_elem((1, 1), a),
    )
    .expect("fixed independent factors")
}

/// `|2a₂ + (a₁² + a₂²)(e^π − e^{−π})|`.
pub fn normality_condition_residual(a: C64) -> f64 {
    (2.0 * a.im + a.norm_sqr() * sinh_gap()).abs()
}

/// `a = i · 2/(e^{−π} − e^π)`.
pub fn case_one_parameter() -> C64 {
    c(0.0, 2.0 / ((-PI).exp() - PI.exp()))
}

/// Real `a₂` solving the normality condition for the given `a₁`.
pub fn branch_solutions(a1: f64) -> Vec<f64> {
    let s = sinh_gap();
    let disc = 1.0 - (a1 * s).powi(2);
    if disc.abs() <= 1e-12 {
        vec![-1.0 / s]
    } else if disc < 0.0 {
        Vec::new()
    } else {
        let r = disc.sqrt();
        vec![(-1.0 + r) / s, (-1.0 - r) / s]
    }
}

/// The printed eigenfunctions of the normal extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticePoint {
    /// `e^{2nπiy + iπx}`, `λ = iπ − 2nπ`.
    First { n: i64 },
    /// `e^{(2k+1)πix + (2n+1)πiy}` with `k ≠ 0`, `λ = (2k+1)πi − (2n+1)π`.
    Second { k: i64, n: i64 },
}

impl LatticePoint {
    fn validate(&self) -> Result<()> {
        match *self {
            LatticePoint::Second { k: 0, n } => Err(Error::InvalidIndex(format!(
                "second family needs k != 0 (got k = 0, n = {n})"
            ))),
            _ => Ok(()),
        }
    }

    pub fn eigenfunction(&self) -> Result<ExpSum> {
        self.validate()?;
        Ok(match *self {
            LatticePoint::First { n } => {
                ExpSum::exp2(c(1.0, 0.0), c(0.0, PI), c(0.0, (2 * n) as f64 * PI))
            }
            LatticePoint::Second { k, n } => mode_function(k, n),
        })
    }

    pub fn eigenvalue(&self) -> Result<C64> {
        self.validate()?;
        Ok(match *self {
            LatticePoint::First { n } => c(-((2 * n) as f64) * PI, PI),
            LatticePoint::Second { k, n } => ln_eigenvalue(k, n),
        })
    }

    pub fn label(&self) -> String {
        match *self {
            LatticePoint::First { n } => format!("first(n={n})"),
            LatticePoint::Second { k, n } => format!("second(k={k};n={n})"),
        }
    }
}

/// Printed `λ` and `‖L̂u − λu‖/‖u‖` computed in closed form.
pub fn eigenbasis_check(p: LatticePoint) -> Result<(C64, f64)> {
    let u = p.eigenfunction()?;
    let lambda = p.eigenvalue()?;
    let r = CrModel.lhat(&u).sub(&u.scale(lambda))?;
    Ok((lambda, r.norm() / u.norm()))
}

/// `max |⟨uᵢ, uⱼ⟩ − δᵢⱼ|` by closed-form integrals.
pub fn orthonormality_defect(points: &[LatticePoint]) -> Result<f64> {
    let fs: Vec<ExpSum> = points.iter().map(|p| p.eigenfunction()).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (i, f) in fs.iter().enumerate() {
        for (j, g) in fs.iter().enumerate() {
            let d = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((f.inner(g)? - d).norm());
        }
    }
    Ok(worst)
}

/// Printed lattice point closest to `lambda`.
pub fn nearest_lattice(lambda: C64) -> (LatticePoint, f64) {
    let n0 = (-lambda.re / (2.0 * PI)).round() as i64;
    let k0 = ((lambda.im / PI - 1.0) / 2.0).round() as i64;
    let m0 = ((-lambda.re / PI - 1.0) / 2.0).round() as i64;
    let mut cands = Vec::new();
    for d in -1..=1 {
        cands.push(LatticePoint::First { n: n0 + d });
        for e in -1..=1 {
            let k = k0 + d;
            if k != 0 {
                cands.push(LatticePoint::Second { k, n: m0 + e });
            }
        }
    }
    for k in [-1, 1] {
        for e in -1..=1 {
            cands.push(LatticePoint::Second { k, n: m0 + e });
        }
    }
    cands
        .into_iter()
        .map(|p| {
            let d = (p.eigenvalue().expect("valid candidate") - lambda).norm();
            (p, d)
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("candidates")
}

/// Residuals of the two boundary conditions of `D(L)` for `u`, as maxima
/// over 64 midpoints of each edge.
pub fn bc_membership_check(u: &ExpSum, a: C64) -> Result<(f64, f64)> {
    if u.dim() != 2 {
        return Err(Error::Unsupported("membership needs traces on all four edges".into()));
    }
    let side = u.trace_x(0.0)?.add(&u.trace_x(1.0)?)?;
    let bottom = u.trace_y(0.0)?;
    let top = u.trace_y(1.0)?;
    let wave = ExpSum::exp1(c(1.0, 0.0), c(0.0, PI));
    let j1 = top.inner(&wave)?;
    let j0 = bottom.inner(&wave)?;
    let i = c(0.0, 1.0);
    let k1 = i * a * (PI.exp() + 1.0) * j1;
    let k0 = i * a * ((-PI).exp() + 1.0) * j0;
    let sum = bottom.add(&top)?;
    let r1 = sample_coords().map(|y| side.eval1(y).norm()).fold(0.0, f64::max);
    let r2 = sample_coords()
        .map(|x| {
            let e = exp_exact(c(0.0, PI * x));
            (sum.eval1(x) - k1 * e + k0 * e).norm()
        })
        .fold(0.0, f64::max);
    Ok((r1, r2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub a1: f64,
    pub a2: f64,
    pub commutator: f64,
    pub condition_residual: f64,
}

/// Commutator norm of the assembled inverse for every `a`.
pub fn commutator_sweep(points: &[C64], modes: ModeSet) -> Result<Vec<SweepPoint>> {
    let p = CrProvider::new(modes)?;
    points
        .par_iter()
        .map(|&a| {
            let inv = extension::assemble_inverse(&p, &build_k_cr(a))?;
            Ok(SweepPoint {
                a1: a.re,
                a2: a.im,
                commutator: linops::commutator_norm(&inv)?,
                condition_residual: normality_condition_residual(a),
            })
        })
        .collect()
}

/// Distance from `a` to the circle `2a₂ + |a|²(e^π − e^{−π}) = 0`.
pub fn zero_set_distance(a: C64) -> f64 {
    let r = 1.0 / sinh_gap();
    ((a - c(0.0, -r)).norm() - r).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub argmin: SweepPoint,
    /// Distance of the minimizer to the analytic zero set.
    pub argmin_distance: f64,
    /// Smallest commutator norm among points at least `far` from the set.
    pub far_min: Option<f64>,
    pub within_cell: bool,
    pub separated: Option<bool>,
}

/// Locates the sweep minimum relative to the zero set; `cell` is the grid
/// cell diagonal and `floor` bounds the minimum from below in the ratio.
pub fn summarize_sweep(
    points: &[SweepPoint],
    cell: f64,
    far: f64,
    ratio: f64,
    floor: f64,
) -> Result<SweepSummary> {
    let argmin = *points
        .iter()
        .min_by(|x, y| x.commutator.total_cmp(&y.commutator))
        .ok_or_else(|| Error::Dimension("empty sweep".into()))?;
    let dist = |p: &SweepPoint| zero_set_distance(c(p.a1, p.a2));
    let far_min = points
        .iter()
        .filter(|p| dist(p) >= far)
        .map(|p| p.commutator)
        .reduce(f64::min);
    let argmin_distance = dist(&argmin);
    Ok(SweepSummary {
        argmin,
        argmin_distance,
        far_min,
        within_cell: argmin_distance <= cell,
        separated: far_min.map(|f| f >= ratio * argmin.commutator.max(floor)),
    })
}

/// Extreme eigenvalues of the Gram matrix of the normalized vectors.
pub fn frame_bounds(vectors: &[GridFunction]) -> Result<(f64, f64)> {
    if vectors.is_empty() {
        return Err(Error::Dimension("empty family".into()));
    }
    let m = vectors.len();
    let norms: Vec<f64> = vectors.iter().map(linops::norm).collect();
    let mut g = Array2::<C64>::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] = linops::inner(&vectors[j], &vectors[i])? / (norms[i] * norms[j]);
        }
    }
    let ev = g.eigvalsh(UPLO::Lower)?;
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}
