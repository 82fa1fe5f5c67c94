//! The operator `y'' + y'` on `(0, 1)` with the anti-periodic fixed extension
//! `y(0) + y(1) = 0, y'(0) + y'(1) = 0` and its rank-2 perturbations.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use ndarray::{Array1, Array2};
use ndarray_linalg::SVD;
use rayon::prelude::*;
use serde::Serialize;

use crate::expsum::{ExpSum, Rate};
use crate::extension::{self, AnalyticModel, ExampleProvider, FiniteRankPerturbation};
use crate::linops::{Basis, EigenValue, Grid, GridFunction, LinearMap};
use crate::{Error, Result, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OdeParams {
    pub a11: C64,
    pub a12: C64,
    pub a21: C64,
    pub a22: C64,
}

impl OdeParams {
    pub fn new(a11: C64, a12: C64, a21: C64, a22: C64) -> Self {
        OdeParams { a11, a12, a21, a22 }
    }

    pub fn zero() -> Self {
        Self::from_array([c(0.0, 0.0); 4])
    }

    pub fn as_array(&self) -> [C64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn from_array(a: [C64; 4]) -> Self {
        OdeParams::new(a[0], a[1], a[2], a[3])
    }

    /// Real parts followed by imaginary parts.
    pub fn to_reals(&self) -> [f64; 8] {
        let a = self.as_array();
        let mut x = [0.0; 8];
        for k in 0..4 {
            x[k] = a[k].re;
            x[k + 4] = a[k].im;
        }
        x
    }

    pub fn from_reals(x: &[f64]) -> Self {
        OdeParams::new(c(x[0], x[4]), c(x[1], x[5]), c(x[2], x[6]), c(x[3], x[7]))
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn distance(&self, other: &OdeParams) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array().iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.distance(&OdeParams::zero())
    }

    pub fn matrix(&self) -> Array2<C64> {
        ndarray::array![[self.a11, self.a12], [self.a21, self.a22]]
    }
}

/// Kernel of `L_N⁻¹`.
pub fn ln_inverse_kernel(x: f64, t: f64) -> C64 {
    let volterra = if x > t { 1.0 - (t - x).exp() } else { 0.0 };
    real(volterra - 0.5 + (1.0 - x).exp() * (t - 1.0).exp() / (1.0 + E))
}

/// Kernel of `(L_N*)⁻¹`, `conj(k(t, x))`.
pub fn ln_inverse_adjoint_kernel(x: f64, t: f64) -> C64 {
    ln_inverse_kernel(t, x).conj()
}

/// `L_N⁻¹ 1 = x − 3/2 + 2e^{1−x}/(1+e)`.
pub fn ln_inverse_of_one(x: f64) -> f64 {
    x - 1.5 + 2.0 * (1.0 - x).exp() / (1.0 + E)
}

/// Closed-form operators of the example.
#[derive(Clone, Copy, Debug, Default)]
pub struct OdeModel;

fn ode_test_function(k: usize) -> ExpSum {
    // k = 0, 1, 2, ... ↦ m = 0, −1, 1, −2, 2, ...
    let m = if k.is_multiple_of(2) { (k / 2) as i64 } else { -(k.div_ceil(2) as i64) };
    ExpSum::exp1(real(1.0), c(0.0, (2 * m + 1) as f64 * PI))
}

impl AnalyticModel for OdeModel {
    fn label(&self) -> &'static str {
        "ode"
    }

    fn dim(&self) -> usize {
        1
    }

    fn lhat_symbol(&self, r: Rate) -> C64 {
        r[0] * r[0] + r[0]
    }

    fn mhat_symbol(&self, r: Rate) -> C64 {
        r[0] * r[0] - r[0]
    }

    fn ker_lhat_basis(&self) -> Vec<ExpSum> {
        vec![ExpSum::constant(1, real(1.0)), ExpSum::exp1(real(1.0), real(-1.0))]
    }

    fn ker_mhat_basis(&self) -> Vec<ExpSum> {
        vec![ExpSum::constant(1, real(1.0)), ExpSum::exp1(real(1.0), real(1.0))]
    }

    fn ker_lhat_complete(&self) -> bool {
        true
    }

    fn boundary_values(&self, u: &ExpSum) -> Result<Vec<C64>> {
        let b = boundary_data(u)?;
        Ok(vec![b[0] + b[1], b[2] + b[3]])
    }

    fn domain_test_functions(&self, count: usize) -> Vec<ExpSum> {
        (0..count).map(ode_test_function).collect()
    }
}

/// `(y(0), y(1), y'(0), y'(1))`.
pub fn boundary_data(u: &ExpSum) -> Result<[C64; 4]> {
    if u.dim() != 1 {
        return Err(Error::Dimension("boundary data of a non-interval function".into()));
    }
    let d = u.dx();
    Ok([u.eval1(0.0), u.eval1(1.0), d.eval1(0.0), d.eval1(1.0)])
}

fn fd_first(u: &Array1<C64>, h: f64) -> Array1<C64> {
    let n = u.len();
    let mut d = Array1::zeros(n);
    let s = 1.0 / (12.0 * h);
    let b0 = [-25.0, 48.0, -36.0, 16.0, -3.0];
    let b1 = [-3.0, -10.0, 18.0, -6.0, 1.0];
    let dot = |coef: &[f64], idx: &dyn Fn(usize) -> usize| -> C64 {
        coef.iter().enumerate().map(|(k, w)| u[idx(k)] * *w).sum()
    };
    d[0] = dot(&b0, &|k| k) * s;
    d[1] = dot(&b1, &|k| k) * s;
    d[n - 1] = -dot(&b0, &|k| n - 1 - k) * s;
    d[n - 2] = -dot(&b1, &|k| n - 1 - k) * s;
    for i in 2..n - 2 {
        d[i] = (u[i - 2] - u[i - 1] * 8.0 + u[i + 1] * 8.0 - u[i + 2]) * s;
    }
    d
}

fn fd_second(u: &Array1<C64>, h: f64) -> Array1<C64> {
    let n = u.len();
    let mut d = Array1::zeros(n);
    let s = 1.0 / (12.0 * h * h);
    let b0 = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
    let b1 = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];
    let dot = |coef: &[f64], idx: &dyn Fn(usize) -> usize| -> C64 {
        coef.iter().enumerate().map(|(k, w)| u[idx(k)] * *w).sum()
    };
    d[0] = dot(&b0, &|k| k) * s;
    d[1] = dot(&b1, &|k| k) * s;
    d[n - 1] = dot(&b0, &|k| n - 1 - k) * s;
    d[n - 2] = dot(&b1, &|k| n - 1 - k) * s;
    for i in 2..n - 2 {
        d[i] = (-u[i - 2] + u[i - 1] * 16.0 - u[i] * 30.0 + u[i + 1] * 16.0 - u[i + 2]) * s;
    }
    d
}

/// Nyström discretization on a uniform trapezoid grid.
#[derive(Clone, Debug)]
pub struct OdeProvider {
    grid: Arc<Grid>,
    basis: Basis,
    inverse: LinearMap,
    inverse_adjoint: LinearMap,
}

impl OdeProvider {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::Dimension("the interval example needs a 1-D grid".into()));
        }
        let grid = Arc::new(grid);
        let basis = Basis::Grid(grid.clone());
        let n = grid.len();
        let x = grid.axis();
        let w = grid.weights();
        let a = Array2::from_shape_fn((n, n), |(i, j)| ln_inverse_kernel(x[i], x[j]) * w[j]);
        let b = Array2::from_shape_fn((n, n), |(i, j)| {
            ln_inverse_adjoint_kernel(x[i], x[j]) * w[j]
        });
        Ok(OdeProvider {
            inverse: LinearMap::new(a, basis.clone())?,
            inverse_adjoint: LinearMap::new(b, basis.clone())?,
            grid,
            basis,
        })
    }

    pub fn with_nodes(n: usize) -> Result<Self> {
        OdeProvider::new(Grid::uniform(n)?)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if *u.basis() != self.basis {
            return Err(Error::Dimension("function not on the provider grid".into()));
        }
        Ok(())
    }

    pub fn derivative(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check(u)?;
        GridFunction::new(fd_first(u.values(), self.grid.spacing()), self.basis.clone())
    }
}

impl AnalyticModel for OdeProvider {
    fn label(&self) -> &'static str {
        OdeModel.label()
    }
    fn dim(&self) -> usize {
        1
    }
    fn lhat_symbol(&self, r: Rate) -> C64 {
        OdeModel.lhat_symbol(r)
    }
    fn mhat_symbol(&self, r: Rate) -> C64 {
        OdeModel.mhat_symbol(r)
    }
    fn ker_lhat_basis(&self) -> Vec<ExpSum> {
        OdeModel.ker_lhat_basis()
    }
    fn ker_mhat_basis(&self) -> Vec<ExpSum> {
        OdeModel.ker_mhat_basis()
    }
    fn ker_lhat_complete(&self) -> bool {
        true
    }
    fn boundary_values(&self, u: &ExpSum) -> Result<Vec<C64>> {
        OdeModel.boundary_values(u)
    }
    fn domain_test_functions(&self, count: usize) -> Vec<ExpSum> {
        OdeModel.domain_test_functions(count)
    }
}

impl ExampleProvider for OdeProvider {
    fn basis(&self) -> &Basis {
        &self.basis
    }

    fn resolution(&self) -> usize {
        self.grid.n()
    }

    fn at_resolution(&self, n: usize) -> Result<Self> {
        OdeProvider::with_nodes(n)
    }

    fn base_inverse(&self) -> &LinearMap {
        &self.inverse
    }

    fn base_inverse_adjoint(&self) -> &LinearMap {
        &self.inverse_adjoint
    }

    fn lhat_discrete(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check(u)?;
        let h = self.grid.spacing();
        let v = fd_second(u.values(), h) + fd_first(u.values(), h);
        GridFunction::new(v, self.basis.clone())
    }

    fn mhat_discrete(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check(u)?;
        let h = self.grid.spacing();
        let v = fd_second(u.values(), h) - fd_first(u.values(), h);
        GridFunction::new(v, self.basis.clone())
    }

    fn boundary_values_discrete(&self, u: &GridFunction) -> Result<Vec<C64>> {
        self.check(u)?;
        let v = u.values();
        let d = fd_first(v, self.grid.spacing());
        let n = v.len();
        Ok(vec![v[0] + v[n - 1], d[0] + d[n - 1]])
    }

    fn represent(&self, f: &ExpSum) -> Result<GridFunction> {
        GridFunction::sample(&self.grid, f)
    }

    fn commutator_order(&self) -> f64 {
        2.0
    }
}

/// `Kf = ∫f(ā₁₁ + ā₁₂eᵗ)dt + e^{−x}∫f(ā₂₁ + ā₂₂eᵗ)dt`.
pub fn build_k(a: &OdeParams) -> FiniteRankPerturbation {
    FiniteRankPerturbation::new(
        OdeModel.ker_lhat_basis(),
        OdeModel.ker_mhat_basis(),
        a.matrix().mapv(|v| v.conj()),
    )
    .expect("fixed independent factors")
}

/// `Γ_{L_N} y = (y(0)+y(1))/2 + (1/2 − e^{1−x}/(1+e))(y'(0)+y'(1))`.
pub fn gamma_printed(y: &ExpSum) -> Result<ExpSum> {
    let b = boundary_data(y)?;
    let (s, d) = (b[0] + b[1], b[2] + b[3]);
    let mut out = ExpSum::constant(1, s * 0.5 + d * 0.5);
    out.push(-d * (E / (1.0 + E)), [real(-1.0), real(0.0)]);
    Ok(out)
}

/// `Γ_{L_N*} y = (y(0)+y(1))/2 + (eˣ/(1+e) − 1/2)(y'(0)+y'(1))`.
pub fn gamma_adjoint_printed(y: &ExpSum) -> Result<ExpSum> {
    let b = boundary_data(y)?;
    let (s, d) = (b[0] + b[1], b[2] + b[3]);
    let mut out = ExpSum::constant(1, s * 0.5 - d * 0.5);
    out.push(d / (1.0 + E), [real(1.0), real(0.0)]);
    Ok(out)
}

/// The four printed algebraic equations in `aᵢⱼ` and their conjugates.
pub fn system_residual(a: &OdeParams) -> [C64; 4] {
    let [a11, a12, a21, a22] = a.as_array();
    let (b11, b12, b21, b22) = (a11.conj(), a12.conj(), a21.conj(), a22.conj());
    let e = E;
    let aux = b11 * (2.0 * (e - 1.0))
        + b12 * (e * e - 1.0)
        + (b21 * (e - 1.0) + b22 * ((e * e - 1.0) / 2.0)) * ((e + 1.0) / e);
    let r1 = (a11 + b11) * 4.0 + (b21 / e + a12) * aux * (2.0 * (e + 1.0));
    let r2 = -(a11 - b11) * 4.0
        - (a12 - b12) * (2.0 * (e + 1.0))
        - (a21 - b21) * (2.0 * (e + 1.0) / e)
        - (a22 - b22) * ((e + 1.0) * (e + 1.0) / e)
        + (a12 * 4.0 + a22 * (2.0 * (e + 1.0) / e)) * aux;
    let tail = b21 * (e - 1.0) + b22 * ((e * e - 1.0) / 2.0);
    let r3 = -b21 / e + a12 + a12 * tail * (2.0 / e);
    let r4 = -(b21 * 2.0 + b22 * (1.0 + e)) / e
        - a12 * 2.0
        - a22 * ((e + 1.0) / e)
        - a12 * (b21 + b22 * ((e * e - 1.0) / 2.0)) * (4.0 / e)
        - a22 * tail * (2.0 * (e + 1.0) / (e * e));
    [r1, r2, r3, r4]
}

pub fn system_residual_norm(a: &OdeParams) -> f64 {
    system_residual(a).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Two linear conditions on `(y(0), y(1), y'(0), y'(1))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryConditionMatrix {
    pub rows: [[C64; 4]; 2],
}

impl BoundaryConditionMatrix {
    pub fn from_real(rows: [[f64; 4]; 2]) -> Self {
        let mut m = [[c(0.0, 0.0); 4]; 2];
        for i in 0..2 {
            for j in 0..4 {
                m[i][j] = real(rows[i][j]);
            }
        }
        BoundaryConditionMatrix { rows: m }
    }

    pub fn to_array(&self) -> Array2<C64> {
        Array2::from_shape_fn((2, 4), |(i, j)| self.rows[i][j])
    }

    pub fn apply(&self, b: &[C64; 4]) -> [C64; 2] {
        let r = |i: usize| (0..4).map(|j| self.rows[i][j] * b[j]).sum();
        [r(0), r(1)]
    }

    pub fn rank(&self, tol: f64) -> Result<usize> {
        let (_, s, _) = self.to_array().svd(false, false)?;
        let top = s.iter().cloned().fold(0.0, f64::max);
        Ok(s.iter().filter(|&&v| v > tol * top.max(1e-300)).count())
    }
}

/// Row of `y ↦ ⟨L̂y, w⟩` after integrating by parts (`M̂w = 0`).
fn lhat_green_row(w: &ExpSum) -> Result<[C64; 4]> {
    let b = boundary_data(&w.conj())?;
    Ok([-(b[0] - b[2]), b[1] - b[3], -b[0], b[1]])
}

/// Row of `y ↦ ⟨M̂y, r⟩` after integrating by parts (`L̂r = 0`).
fn mhat_green_row(r: &ExpSum) -> Result<[C64; 4]> {
    let b = boundary_data(&r.conj())?;
    Ok([b[2] + b[0], -b[3] - b[1], -b[0], b[1]])
}

fn perturbed_conditions(
    k: &FiniteRankPerturbation,
    green: fn(&ExpSum) -> Result<[C64; 4]>,
) -> Result<BoundaryConditionMatrix> {
    let mut rows = BoundaryConditionMatrix::from_real([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]]).rows;
    for i in 0..k.rank() {
        let t = OdeModel.boundary_values(&k.range()[i])?;
        for j in 0..k.rank() {
            let g = green(&k.weights()[j])?;
            let cij = k.coefficients()[(i, j)];
            for r in 0..2 {
                for col in 0..4 {
                    rows[r][col] -= cij * t[r] * g[col];
                }
            }
        }
    }
    Ok(BoundaryConditionMatrix { rows })
}

/// `D(L) = {y : T(y − KL̂y) = 0}` as a matrix.
pub fn boundary_matrix(a: &OdeParams) -> BoundaryConditionMatrix {
    perturbed_conditions(&build_k(a), lhat_green_row).expect("closed-form factors")
}

/// `D(L*) = {y : T(y − K*M̂y) = 0}` as a matrix.
pub fn adjoint_boundary_matrix(a: &OdeParams) -> BoundaryConditionMatrix {
    perturbed_conditions(&build_k(a).adjoint(), mhat_green_row).expect("closed-form factors")
}

/// `σ₃/σ₁` of the stacked conditions of `D(L)` and `D(L*)`; zero iff the
/// domains coincide.
pub fn domain_coincidence(a: &OdeParams) -> Result<f64> {
    let b = boundary_matrix(a);
    let bs = adjoint_boundary_matrix(a);
    let m = Array2::from_shape_fn((4, 4), |(i, j)| if i < 2 { b.rows[i][j] } else { bs.rows[i - 2][j] });
    let (_, s, _) = m.svd(false, false)?;
    let mut s: Vec<f64> = s.to_vec();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s[2] / s[0])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `y(0) = 0, y(1) = 0`.
    Dirichlet,
    /// `y(0) = c y(1), y'(0) = c y'(1)` with `c = (a−i)/(a+i)`.
    QuasiAntiperiodic { multiplier: C64, a_real: f64 },
    /// `a y(0) + b̄ y(1) = 0, y(1) = b y'(0) + a y'(1)` with `|b|² = a²`.
    Mixed { a: f64, b: C64 },
    Other,
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Family::Dirichlet => "I",
            Family::QuasiAntiperiodic { .. } => "II",
            Family::Mixed { .. } => "III",
            Family::Other => "other",
        }
    }
}

pub const FAMILY_TOL: f64 = 1e-9;

fn rref(b: &BoundaryConditionMatrix, tol: f64) -> ([[C64; 4]; 2], Vec<usize>) {
    let mut m = b.rows;
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.norm())).max(1e-300);
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..4 {
        if r == 2 {
            break;
        }
        let k = (r..2)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .expect("rows");
        if m[k][col].norm() <= tol * scale {
            continue;
        }
        m.swap(r, k);
        let p = m[r][col];
        for v in m[r].iter_mut() {
            *v /= p;
        }
        for o in 0..2 {
            if o != r {
                let f = m[o][col];
                for j in 0..4 {
                    let sub = f * m[r][j];
                    m[o][j] -= sub;
                }
                m[o][col] = c(0.0, 0.0);
            }
        }
        pivots.push(col);
        r += 1;
    }
    (m, pivots)
}

/// Reduced row-echelon form and pivot columns.
pub fn row_reduce(b: &BoundaryConditionMatrix) -> ([[C64; 4]; 2], Vec<usize>) {
    rref(b, FAMILY_TOL)
}

/// Matches the conditions against the three printed families.
pub fn classify_family(b: &BoundaryConditionMatrix) -> Result<Family> {
    let rank = b.rank(FAMILY_TOL)?;
    if rank < 2 {
        return Err(Error::RankDeficient(rank));
    }
    let tol = FAMILY_TOL;
    let (r, piv) = rref(b, tol);
    let small = |v: C64| v.norm() <= tol;
    if piv == [0, 1] && small(r[0][2]) && small(r[0][3]) && small(r[1][2]) && small(r[1][3]) {
        return Ok(Family::Dirichlet);
    }
    if piv == [0, 1] {
        let a = -r[1][3];
        let b = -r[1][2];
        if a.norm() > tol
            && a.im.abs() <= tol * a.norm().max(1.0)
            && small(r[0][3] - b.conj())
            && small(r[0][2] - b.norm_sqr() / a.re)
            && (b.norm_sqr() - a.re * a.re).abs() <= tol * (a.re * a.re).max(1.0)
        {
            return Ok(Family::Mixed { a: a.re, b });
        }
    }
    if piv == [0, 2] && small(r[0][3]) && small(r[1][1]) {
        let beta = r[0][1];
        let delta = r[1][3];
        let mult = -beta;
        if small(delta - beta) && (mult.norm() - 1.0).abs() <= tol && (mult - 1.0).norm() > tol {
            let a_real = (c(0.0, 1.0) * (1.0 + mult) / (1.0 - mult)).re;
            return Ok(Family::QuasiAntiperiodic {
                multiplier: mult,
                a_real,
            });
        }
    }
    Ok(Family::Other)
}

/// `c = (a−i)/(a+i)`.
pub fn family_ii_multiplier(a_real: f64) -> C64 {
    (real(a_real) - c(0.0, 1.0)) / (real(a_real) + c(0.0, 1.0))
}

/// Parameters `(a₁₁, 0, 0, a₂₂)` whose domain is the family-II domain with
/// multiplier `(a_real − i)/(a_real + i)`.
pub fn match_family_ii(a_real: f64) -> Result<OdeParams> {
    if !a_real.is_finite() {
        return Err(Error::NonFinite("family parameter".into()));
    }
    let mult = family_ii_multiplier(a_real);
    // Conditions B₀₁ + cB₀₀ = 0 and B₁₃ + cB₁₂ = 0 are affine in (ā₁₁, ā₂₂).
    let f = |b11: C64, b22: C64| -> [C64; 2] {
        let b = boundary_matrix(&OdeParams::new(b11.conj(), c(0.0, 0.0), c(0.0, 0.0), b22.conj()));
        [b.rows[0][1] + mult * b.rows[0][0], b.rows[1][3] + mult * b.rows[1][2]]
    };
    let f0 = f(c(0.0, 0.0), c(0.0, 0.0));
    let f1 = f(real(1.0), c(0.0, 0.0));
    let f2 = f(c(0.0, 0.0), real(1.0));
    let j = [[f1[0] - f0[0], f2[0] - f0[0]], [f1[1] - f0[1], f2[1] - f0[1]]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let scale = j.iter().flatten().fold(0.0f64, |s, v| s.max(v.norm()));
    if det.norm() <= 1e-12 * scale * scale {
        return Err(Error::SingularMatch { multiplier: mult });
    }
    let x = (-f0[0] * j[1][1] + f0[1] * j[0][1]) / det;
    let y = (-f0[1] * j[0][0] + f0[0] * j[1][0]) / det;
    let p = OdeParams::new(x.conj(), c(0.0, 0.0), c(0.0, 0.0), y.conj());
    match classify_family(&boundary_matrix(&p))? {
        Family::QuasiAntiperiodic { .. } => Ok(p),
        _ => Err(Error::SingularMatch { multiplier: mult }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemForm {
    /// The four printed equations.
    Printed,
    /// The boundary form over eight test functions of `D(L_N)`.
    BoundaryForm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub form: SystemForm,
    pub max_iter: usize,
    pub tol: f64,
    pub dedup: f64,
    pub fd_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            form: SystemForm::Printed,
            max_iter: 200,
            tol: 1e-11,
            dedup: 1e-8,
            fd_step: 1e-7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemSolution {
    pub params: OdeParams,
    pub residual: f64,
    pub iterations: usize,
    pub seed_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedFailure {
    pub seed_index: usize,
    pub seed: OdeParams,
    pub residual: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveOutcome {
    pub solutions: Vec<SystemSolution>,
    pub failures: Vec<SeedFailure>,
}

/// Boundary-form system: the domain-equality vectors over eight tests.
pub fn boundary_form_residual(a: &OdeParams) -> Vec<C64> {
    extension::domain_equality_vectors(&OdeModel, &build_k(a), 8)
        .expect("closed-form factors")
        .into_iter()
        .flatten()
        .collect()
}

fn real_system(form: SystemForm, x: &[f64]) -> Array1<f64> {
    let a = OdeParams::from_reals(x);
    let v: Vec<C64> = match form {
        SystemForm::Printed => system_residual(&a).to_vec(),
        SystemForm::BoundaryForm => boundary_form_residual(&a),
    };
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

fn l2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

fn pinv_step(j: &Array2<f64>, f: &Array1<f64>) -> Result<Array1<f64>> {
    let (u, s, vt) = j.svd(true, true)?;
    let (u, vt) = (u.expect("u"), vt.expect("vt"));
    let top = s.iter().cloned().fold(0.0, f64::max);
    let mut step = Array1::<f64>::zeros(j.ncols());
    for (k, &sk) in s.iter().enumerate() {
        if sk > 1e-10 * top {
            let coef = u.column(k).dot(f) / sk;
            step.scaled_add(-coef, &vt.row(k));
        }
    }
    Ok(step)
}

fn newton(seed: &OdeParams, opts: &SolveOptions) -> std::result::Result<(OdeParams, f64, usize), (f64, String)> {
    let mut x = Array1::from(seed.to_reals().to_vec());
    let mut fx = real_system(opts.form, x.as_slice().expect("contiguous"));
    let mut r = l2(&fx);
    for it in 0..=opts.max_iter {
        if !r.is_finite() {
            return Err((r, "non-finite residual".into()));
        }
        if r <= opts.tol {
            return Ok((OdeParams::from_reals(x.as_slice().expect("contiguous")), r, it));
        }
        if it == opts.max_iter {
            break;
        }
        let mut jac = Array2::<f64>::zeros((fx.len(), 8));
        for k in 0..8 {
            let mut xp = x.clone();
            xp[k] += opts.fd_step;
            let fp = real_system(opts.form, xp.as_slice().expect("contiguous"));
            jac.column_mut(k).assign(&((&fp - &fx) / opts.fd_step));
        }
        let step = pinv_step(&jac, &fx).map_err(|e| (r, e.to_string()))?;
        let mut alpha = 1.0;
        loop {
            let xn = &x + &(&step * alpha);
            let fnew = real_system(opts.form, xn.as_slice().expect("contiguous"));
            let rn = l2(&fnew);
            if rn < r {
                x = xn;
                fx = fnew;
                r = rn;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                return Err((r, format!("line search stalled after {it} iterations")));
            }
        }
    }
    Err((r, format!("no convergence after {} iterations", opts.max_iter)))
}

/// Damped Gauss–Newton over the eight real unknowns from each seed.
pub fn solve_system(seeds: &[OdeParams], opts: &SolveOptions) -> SolveOutcome {
    let results: Vec<_> = seeds.par_iter().map(|s| newton(s, opts)).collect();
    let mut out = SolveOutcome::default();
    for (seed_index, (seed, res)) in seeds.iter().zip(results).enumerate() {
        match res {
            Ok((params, residual, iterations)) => {
                if out
                    .solutions
                    .iter()
                    .all(|s| s.params.distance(&params) >= opts.dedup)
                {
                    out.solutions.push(SystemSolution {
                        params,
                        residual,
                        iterations,
                        seed_index,
                    });
                }
            }
            Err((residual, reason)) => out.failures.push(SeedFailure {
                seed_index,
                seed: *seed,
                residual,
                reason,
            }),
        }
    }
    out
}

/// Eigenvalues of `L` at the grid, ascending in modulus; residuals are the
/// relative eigen-residuals of `L⁻¹`.
pub fn spectrum(a: &OdeParams, grid: Grid) -> Result<Vec<EigenValue>> {
    let p = OdeProvider::new(grid)?;
    extension::extension_spectrum(&p, &build_k(a))
}

fn boundary_column(mu: C64) -> [C64; 4] {
    let em = mu.exp();
    [real(1.0), em, mu, mu * em]
}

fn boundary_column_dmu(mu: C64) -> [C64; 4] {
    let em = mu.exp();
    [c(0.0, 0.0), em, real(1.0), (1.0 + mu) * em]
}

/// `det(B [b(μ₁) b(μ₂)])/(μ₁ − μ₂)` with `μ² + μ = λ`; zero iff `λ` is an
/// eigenvalue of `L`.
pub fn characteristic_determinant(a: &OdeParams, lambda: C64) -> C64 {
    let b = boundary_matrix(a);
    let disc = (1.0 + lambda * 4.0).sqrt();
    let mu1 = (-1.0 + disc) * 0.5;
    let mu2 = (-1.0 - disc) * 0.5;
    let det = |u: [C64; 4], v: [C64; 4]| {
        let bu = b.apply(&u);
        let bv = b.apply(&v);
        bu[0] * bv[1] - bu[1] * bv[0]
    };
    if (mu1 - mu2).norm() < 1e-6 {
        det(boundary_column(mu1), boundary_column_dmu(mu1))
    } else {
        det(boundary_column(mu1), boundary_column(mu2)) / (mu1 - mu2)
    }
}

/// Complex Newton on the characteristic determinant from `lambda0`.
pub fn refine_characteristic_root(a: &OdeParams, lambda0: C64) -> Option<C64> {
    let mut l = lambda0;
    for _ in 0..60 {
        let f = characteristic_determinant(a, l);
        let h = 1e-6 * (1.0 + l.norm());
        let d = (characteristic_determinant(a, l + h) - characteristic_determinant(a, l - h)) / (2.0 * h);
        if d.norm() == 0.0 || !d.re.is_finite() {
            return None;
        }
        let step = f / d;
        l -= step;
        if step.norm() <= 1e-13 * (1.0 + l.norm()) {
            return Some(l);
        }
    }
    let f = characteristic_determinant(a, l);
    (f.norm() < 1e-9).then_some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_corner_values() {
        assert!((ln_inverse_kernel(0.0, 0.0).re - (-0.5 + 1.0 / (1.0 + E))).abs() < 1e-15);
        let want = (1.0 - (-1.0f64).exp()) - 0.5 + (-1.0f64).exp() / (1.0 + E);
        assert!((ln_inverse_kernel(1.0, 0.0).re - want).abs() < 1e-15);
    }

    #[test]
    fn zero_params_give_fixed_conditions() {
        let b = boundary_matrix(&OdeParams::zero());
        assert_eq!(b, BoundaryConditionMatrix::from_real([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]]));
    }

    #[test]
    fn fd_stencils_are_fourth_order() {
        let mut errs = Vec::new();
        for n in [51usize, 101] {
            let g = Grid::uniform(n).unwrap();
            let u: Array1<C64> = g.axis().iter().map(|&x| real((2.0 * x).sin())).collect();
            let d1 = fd_first(&u, g.spacing());
            let d2 = fd_second(&u, g.spacing());
            let e = g
                .axis()
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    (d1[i].re - 2.0 * (2.0 * x).cos())
                        .abs()
                        .max((d2[i].re + 4.0 * (2.0 * x).sin()).abs())
                })
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
    }

    #[test]
    fn printed_first_equation_is_eight_at_unit_a11() {
        let r = system_residual(&OdeParams::new(real(1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)));
        assert!((r[0] - real(8.0)).norm() < 1e-14);
    }

    #[test]
    fn rank_deficient_classification_is_rejected() {
        let b = BoundaryConditionMatrix::from_real([[1.0, 1.0, 0.0, 0.0], [2.0, 2.0, 0.0, 0.0]]);
        assert!(matches!(classify_family(&b), Err(Error::RankDeficient(1))));
    }
}
