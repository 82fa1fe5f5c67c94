//! Dense complex linear algebra over quadrature-weighted inner products.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, SVD};

use crate::expsum::ExpSum;
use crate::{Error, Result, C64};

/// Uniform composite-trapezoid grid on `[0,1]` or `[0,1]²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    axis: Vec<f64>,
    axis_weights: Vec<f64>,
}

impl Grid {
    pub fn uniform(n: usize) -> Result<Self> {
        Self::build(1, n)
    }

    pub fn uniform_square(n: usize) -> Result<Self> {
        Self::build(2, n)
    }

    fn build(dim: usize, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::GridTooSmall(n));
        }
        let h = 1.0 / (n - 1) as f64;
        let axis = (0..n).map(|i| i as f64 * h).collect();
        let mut axis_weights = vec![h; n];
        axis_weights[0] = 0.5 * h;
        axis_weights[n - 1] = 0.5 * h;
        Ok(Grid {
            dim,
            n,
            axis,
            axis_weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node `i`; on the square, row-major with `x` outer.
    pub fn point(&self, i: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.axis[i], 0.0]
        } else {
            [self.axis[i / self.n], self.axis[i % self.n]]
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        if self.dim == 1 {
            self.axis_weights[i]
        } else {
            self.axis_weights[i / self.n] * self.axis_weights[i % self.n]
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Compensated sum of the weights.
    pub fn total_weight(&self) -> f64 {
        let (mut s, mut comp) = (0.0f64, 0.0f64);
        for i in 0..self.len() {
            let w = self.weight(i);
            let t = s + w;
            comp += if s.abs() >= w.abs() { (s - t) + w } else { (w - t) + s };
            s = t;
        }
        s + comp
    }
}

/// Representation basis of discrete functions and maps.
#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    /// Samples at grid nodes, weighted inner product.
    Grid(Arc<Grid>),
    /// Coefficients in an orthonormal basis of the given size.
    Orthonormal(usize),
}

impl Basis {
    pub fn len(&self) -> usize {
        match self {
            Basis::Grid(g) => g.len(),
            Basis::Orthonormal(m) => *m,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> Vec<f64> {
        match self {
            Basis::Grid(g) => g.weights(),
            Basis::Orthonormal(m) => vec![1.0; *m],
        }
    }

    pub fn grid(&self) -> Option<&Grid> {
        match self {
            Basis::Grid(g) => Some(g),
            Basis::Orthonormal(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridFunction {
    values: Array1<C64>,
    basis: Basis,
    closed_form: Option<ExpSum>,
}

impl GridFunction {
    pub fn new(values: Array1<C64>, basis: Basis) -> Result<Self> {
        if values.len() != basis.len() {
            return Err(Error::Dimension(format!(
                "{} values for a basis of size {}",
                values.len(),
                basis.len()
            )));
        }
        Ok(GridFunction {
            values,
            basis,
            closed_form: None,
        })
    }

    /// Attaches a closed form; on a grid the samples must agree to 1e-13.
    pub fn with_closed_form(values: Array1<C64>, basis: Basis, f: ExpSum) -> Result<Self> {
        let mut gf = GridFunction::new(values, basis)?;
        if let Basis::Grid(g) = &gf.basis {
            for (i, v) in gf.values.iter().enumerate() {
                let exact = f.eval(g.point(i));
                if (exact - v).norm() > 1e-13 * (1.0 + exact.norm()) {
                    return Err(Error::Unsupported(format!(
                        "closed form disagrees with sample {i}"
                    )));
                }
            }
        }
        gf.closed_form = Some(f);
        Ok(gf)
    }

    /// Samples a closed form on a grid.
    pub fn sample(grid: &Arc<Grid>, f: &ExpSum) -> Result<Self> {
        if grid.dim() != f.dim() {
            return Err(Error::Dimension(format!(
                "{}-D function on a {}-D grid",
                f.dim(),
                grid.dim()
            )));
        }
        let values = (0..grid.len()).map(|i| f.eval(grid.point(i))).collect();
        Ok(GridFunction {
            values,
            basis: Basis::Grid(grid.clone()),
            closed_form: Some(f.clone()),
        })
    }

    pub fn zeros(basis: Basis) -> Self {
        GridFunction {
            values: Array1::zeros(basis.len()),
            basis,
            closed_form: None,
        }
    }

    pub fn values(&self) -> &Array1<C64> {
        &self.values
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn closed_form(&self) -> Option<&ExpSum> {
        self.closed_form.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn combine(&self, other: &GridFunction, s: C64) -> Result<GridFunction> {
        if self.basis != other.basis {
            return Err(Error::Dimension("functions on different bases".into()));
        }
        let closed_form = match (&self.closed_form, &other.closed_form) {
            (Some(a), Some(b)) => Some(a.add(&b.scale(s))?),
            _ => None,
        };
        Ok(GridFunction {
            values: &self.values + &other.values.mapv(|v| v * s),
            basis: self.basis.clone(),
            closed_form,
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.combine(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.combine(other, C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: C64) -> GridFunction {
        GridFunction {
            values: self.values.mapv(|v| v * c),
            basis: self.basis.clone(),
            closed_form: self.closed_form.as_ref().map(|f| f.scale(c)),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// `Σ wᵢ f(xᵢ)`.
pub fn quadrature(g: &Grid, f: &GridFunction) -> Result<C64> {
    if f.len() != g.len() {
        return Err(Error::Dimension(format!(
            "{} samples on a grid of {} nodes",
            f.len(),
            g.len()
        )));
    }
    Ok(f.values
        .iter()
        .enumerate()
        .map(|(i, v)| v * g.weight(i))
        .sum())
}

/// Discrete `⟨f, g⟩` in the basis inner product.
pub fn inner(f: &GridFunction, g: &GridFunction) -> Result<C64> {
    if f.basis != g.basis {
        return Err(Error::Dimension("inner product across bases".into()));
    }
    Ok(weighted_dot(&f.basis.weights(), &f.values, &g.values))
}

pub(crate) fn weighted_dot(w: &[f64], a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter()
        .zip(b.iter())
        .zip(w.iter())
        .map(|((x, y), w)| x * y.conj() * *w)
        .sum()
}

pub fn norm(f: &GridFunction) -> f64 {
    let w = f.basis.weights();
    f.values
        .iter()
        .zip(w.iter())
        .map(|(v, w)| v.norm_sqr() * w)
        .sum::<f64>()
        .sqrt()
}

/// Square dense matrix acting in a representation basis.
#[derive(Clone, Debug)]
pub struct LinearMap {
    matrix: Array2<C64>,
    basis: Basis,
}

impl LinearMap {
    pub fn new(matrix: Array2<C64>, basis: Basis) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c {
            return Err(Error::Dimension(format!("non-square {r}x{c} map")));
        }
        if r != basis.len() {
            return Err(Error::Dimension(format!(
                "{r}x{r} map on a basis of size {}",
                basis.len()
            )));
        }
        if matrix.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("linear map".into()));
        }
        Ok(LinearMap { matrix, basis })
    }

    pub fn identity(basis: Basis) -> Self {
        LinearMap {
            matrix: Array2::eye(basis.len()),
            basis,
        }
    }

    pub fn zeros(basis: Basis) -> Self {
        let n = basis.len();
        LinearMap {
            matrix: Array2::zeros((n, n)),
            basis,
        }
    }

    pub fn from_diagonal(d: &[C64], basis: Basis) -> Result<Self> {
        let m = Array2::from_diag(&Array1::from(d.to_vec()));
        LinearMap::new(m, basis)
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.basis != self.basis {
            return Err(Error::Dimension("map and function on different bases".into()));
        }
        GridFunction::new(self.matrix.dot(&f.values), self.basis.clone())
    }

    fn same_basis(&self, other: &LinearMap) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::Dimension("maps on different bases".into()));
        }
        Ok(())
    }

    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap> {
        self.same_basis(other)?;
        Ok(LinearMap {
            matrix: self.matrix.dot(&other.matrix),
            basis: self.basis.clone(),
        })
    }

    pub fn add(&self, other: &LinearMap) -> Result<LinearMap> {
        self.same_basis(other)?;
        Ok(LinearMap {
            matrix: &self.matrix + &other.matrix,
            basis: self.basis.clone(),
        })
    }

    pub fn sub(&self, other: &LinearMap) -> Result<LinearMap> {
        self.same_basis(other)?;
        Ok(LinearMap {
            matrix: &self.matrix - &other.matrix,
            basis: self.basis.clone(),
        })
    }

    /// Adjoint in the basis inner product, `W⁻¹AᴴW`.
    pub fn weighted_adjoint(&self) -> LinearMap {
        let w = self.basis.weights();
        let n = self.len();
        let m = Array2::from_shape_fn((n, n), |(i, j)| self.matrix[(j, i)].conj() * (w[j] / w[i]));
        LinearMap {
            matrix: m,
            basis: self.basis.clone(),
        }
    }

    /// `W^{1/2} A W^{-1/2}`: the same operator in an orthonormal frame.
    pub fn orthonormal_frame(&self) -> Array2<C64> {
        let s: Vec<f64> = self.basis.weights().iter().map(|w| w.sqrt()).collect();
        let n = self.len();
        Array2::from_shape_fn((n, n), |(i, j)| self.matrix[(i, j)] * (s[i] / s[j]))
    }

    pub fn max_abs_diff(&self, other: &LinearMap) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Index sets of the invariant blocks of `m` (connected components of the
/// symmetric nonzero pattern), each sorted, ordered by first index.
pub fn coupled_blocks(m: &Array2<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for ((i, j), v) in m.indexed_iter() {
        if i != j && *v != C64::new(0.0, 0.0) {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

fn sub_matrix(m: &Array2<C64>, idx: &[usize]) -> Array2<C64> {
    Array2::from_shape_fn((idx.len(), idx.len()), |(i, j)| m[(idx[i], idx[j])])
}

/// Largest singular value.
pub fn spectral_norm(m: &Array2<C64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    let (_, s, _) = m.svd(false, false)?;
    Ok(s.iter().cloned().fold(0.0, f64::max))
}

/// Numerical rank with singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &Array2<C64>, rel_tol: f64) -> Result<usize> {
    let (_, s, _) = m.svd(false, false)?;
    let top = s.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > rel_tol * top).count())
}

/// `‖AA† − A†A‖₂` in the basis inner product.
pub fn commutator_norm(a: &LinearMap) -> Result<f64> {
    let s = a.orthonormal_frame();
    let mut worst: f64 = 0.0;
    for block in coupled_blocks(&s) {
        if block.len() == 1 {
            continue;
        }
        let b = sub_matrix(&s, &block);
        let bh = b.t().mapv(|v| v.conj());
        let c = b.dot(&bh) - bh.dot(&b);
        worst = worst.max(spectral_norm(&c)?);
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: C64,
    pub vector: GridFunction,
    pub residual: f64,
}

/// Eigenvalue with its residual `‖Av − λv‖/‖v‖`, without the vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenValue {
    pub value: C64,
    pub residual: f64,
}

struct RawPair {
    value: C64,
    block: usize,
    local: Array1<C64>,
    residual: f64,
}

fn raw_eigen(a: &LinearMap) -> Result<(Vec<Vec<usize>>, Vec<RawPair>)> {
    let w = a.basis.weights();
    let blocks = coupled_blocks(&a.matrix);
    let mut out = Vec::with_capacity(a.len());
    for (bi, block) in blocks.iter().enumerate() {
        if block.len() == 1 {
            out.push(RawPair {
                value: a.matrix[(block[0], block[0])],
                block: bi,
                local: Array1::from(vec![C64::new(1.0, 0.0)]),
                residual: 0.0,
            });
            continue;
        }
        let sub = sub_matrix(&a.matrix, block);
        let (vals, vecs) = sub.eig().map_err(|e| Error::EigenFailure {
            index: block[0],
            detail: e.to_string(),
        })?;
        let wb: Vec<f64> = block.iter().map(|&i| w[i]).collect();
        for (k, lam) in vals.iter().enumerate() {
            let v = vecs.column(k).to_owned();
            let r = sub.dot(&v) - v.mapv(|x| x * lam);
            let nv = weighted_dot(&wb, &v, &v).re.sqrt();
            let nr = weighted_dot(&wb, &r, &r).re.sqrt();
            let residual = if nv > 0.0 { nr / nv } else { f64::INFINITY };
            if !lam.re.is_finite() || !lam.im.is_finite() {
                return Err(Error::EigenFailure {
                    index: block[0] + k,
                    detail: "non-finite eigenvalue".into(),
                });
            }
            out.push(RawPair {
                value: *lam,
                block: bi,
                local: v,
                residual,
            });
        }
    }
    out.sort_by(|x, y| {
        x.value
            .norm()
            .total_cmp(&y.value.norm())
            .then(x.value.re.total_cmp(&y.value.re))
            .then(x.value.im.total_cmp(&y.value.im))
    });
    Ok((blocks, out))
}

fn check_residuals(raw: &[RawPair], tol: f64) -> Result<()> {
    for (index, p) in raw.iter().enumerate() {
        if !(p.residual <= tol) {
            return Err(Error::EigenResidual {
                index,
                residual: p.residual,
                tol,
            });
        }
    }
    Ok(())
}

pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// Full non-Hermitian eigendecomposition sorted by ascending `|λ|`.
pub fn eigenpairs(a: &LinearMap) -> Result<Vec<EigenPair>> {
    let (blocks, raw) = raw_eigen(a)?;
    check_residuals(&raw, EIGEN_RESIDUAL_TOL)?;
    raw.into_iter()
        .map(|p| {
            let mut v = Array1::zeros(a.len());
            for (k, &i) in blocks[p.block].iter().enumerate() {
                v[i] = p.local[k];
            }
            Ok(EigenPair {
                value: p.value,
                vector: GridFunction::new(v, a.basis.clone())?,
                residual: p.residual,
            })
        })
        .collect()
}

/// Eigenvalues and residuals only (same ordering and checks as [`eigenpairs`]).
pub fn eigenvalues(a: &LinearMap) -> Result<Vec<EigenValue>> {
    let (_, raw) = raw_eigen(a)?;
    check_residuals(&raw, EIGEN_RESIDUAL_TOL)?;
    Ok(raw
        .into_iter()
        .map(|p| EigenValue {
            value: p.value,
            residual: p.residual,
        })
        .collect())
}
