//! Finite-rank perturbations `K` of a fixed inverse and the residual forms of
//! the admissibility, domain-equality and normality criteria.

use ndarray::{Array1, Array2};
use ndarray_linalg::{LeastSquaresSvd, SVD};
use serde::Serialize;

use crate::expsum::{ExpSum, OuterSum, Rate};
use crate::linops::{self, Basis, GridFunction, LinearMap};
use crate::thresholds::Thresholds;
use crate::{Error, Result, C64};

/// The closed-form part of an example: differential symbols, kernels of the
/// maximal operators, the boundary operator of `D(L_S)` and a test basis of
/// `D(L_S)`.
pub trait AnalyticModel: Sync {
    fn label(&self) -> &'static str;
    fn dim(&self) -> usize;
    /// Symbol of `L̂` on `e^{αx+βy}`.
    fn lhat_symbol(&self, rate: Rate) -> C64;
    /// Symbol of `M̂` on `e^{αx+βy}`.
    fn mhat_symbol(&self, rate: Rate) -> C64;
    fn ker_lhat_basis(&self) -> Vec<ExpSum>;
    fn ker_mhat_basis(&self) -> Vec<ExpSum>;
    /// True when `ker_lhat_basis` spans all of `Ker L̂`.
    fn ker_lhat_complete(&self) -> bool;
    /// Boundary functionals `T_{L_S} u`.
    fn boundary_values(&self, u: &ExpSum) -> Result<Vec<C64>>;
    /// `count` independent functions of `D(L_S)`.
    fn domain_test_functions(&self, count: usize) -> Vec<ExpSum>;

    fn lhat(&self, u: &ExpSum) -> ExpSum {
        u.apply_symbol(|r| self.lhat_symbol(r))
    }

    fn mhat(&self, u: &ExpSum) -> ExpSum {
        u.apply_symbol(|r| self.mhat_symbol(r))
    }
}

/// A discretized example: the fixed inverse `L_S⁻¹`, its adjoint, and
/// discrete actions of `L̂`, `M̂` and `T` in one representation basis.
pub trait ExampleProvider: AnalyticModel {
    fn basis(&self) -> &Basis;
    /// Grid nodes `n` or mode truncation `M`.
    fn resolution(&self) -> usize;
    fn at_resolution(&self, resolution: usize) -> Result<Self>
    where
        Self: Sized;
    fn base_inverse(&self) -> &LinearMap;
    fn base_inverse_adjoint(&self) -> &LinearMap;
    fn lhat_discrete(&self, u: &GridFunction) -> Result<GridFunction>;
    fn mhat_discrete(&self, u: &GridFunction) -> Result<GridFunction>;
    fn boundary_values_discrete(&self, u: &GridFunction) -> Result<Vec<C64>>;
    fn represent(&self, f: &ExpSum) -> Result<GridFunction>;
    /// Expected decay order of commutator norms in the resolution.
    fn commutator_order(&self) -> f64;

    fn apply_lhat(&self, u: &GridFunction) -> Result<GridFunction> {
        match u.closed_form() {
            Some(f) => self.represent(&self.lhat(f)),
            None => self.lhat_discrete(u),
        }
    }

    fn apply_mhat(&self, u: &GridFunction) -> Result<GridFunction> {
        match u.closed_form() {
            Some(f) => self.represent(&self.mhat(f)),
            None => self.mhat_discrete(u),
        }
    }
}

/// `K f = Σᵢⱼ Cᵢⱼ rᵢ ⟨f, wⱼ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteRankPerturbation {
    range: Vec<ExpSum>,
    weights: Vec<ExpSum>,
    coefficients: Array2<C64>,
}

fn gram(fs: &[ExpSum]) -> Result<Array2<C64>> {
    let m = fs.len();
    let mut g = Array2::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] = fs[i].inner(&fs[j])?;
        }
    }
    Ok(g)
}

fn first_dependent(fs: &[ExpSum]) -> Result<Option<usize>> {
    for k in 1..=fs.len() {
        let g = gram(&fs[..k])?;
        let (_, s, _) = g.svd(false, false)?;
        let top = s.iter().cloned().fold(0.0, f64::max);
        let low = s.iter().cloned().fold(f64::INFINITY, f64::min);
        if top == 0.0 || low <= 1e-10 * top {
            return Ok(Some(k - 1));
        }
    }
    Ok(None)
}

impl FiniteRankPerturbation {
    pub fn new(range: Vec<ExpSum>, weights: Vec<ExpSum>, coefficients: Array2<C64>) -> Result<Self> {
        let m = range.len();
        if m == 0 || weights.len() != m || coefficients.dim() != (m, m) {
            return Err(Error::Dimension(format!(
                "{} range and {} weight functions with a {:?} coefficient matrix",
                m,
                weights.len(),
                coefficients.dim()
            )));
        }
        let dim = range[0].dim();
        if range.iter().chain(weights.iter()).any(|f| f.dim() != dim) {
            return Err(Error::Dimension("factors of mixed dimension".into()));
        }
        if coefficients.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("perturbation coefficients".into()));
        }
        for (kind, fs) in [("range", &range), ("weight", &weights)] {
            if let Some(index) = first_dependent(fs)? {
                return Err(Error::Inadmissible {
                    kind,
                    index,
                    detail: "linearly dependent on the preceding functions".into(),
                });
            }
        }
        Ok(FiniteRankPerturbation {
            range,
            weights,
            coefficients,
        })
    }

    pub fn dim(&self) -> usize {
        self.range[0].dim()
    }

    pub fn rank(&self) -> usize {
        self.range.len()
    }

    pub fn range(&self) -> &[ExpSum] {
        &self.range
    }

    pub fn weights(&self) -> &[ExpSum] {
        &self.weights
    }

    pub fn coefficients(&self) -> &Array2<C64> {
        &self.coefficients
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `K* g = Σ conj(Cᵢⱼ) wⱼ ⟨g, rᵢ⟩`.
    pub fn adjoint(&self) -> FiniteRankPerturbation {
        FiniteRankPerturbation {
            range: self.weights.clone(),
            weights: self.range.clone(),
            coefficients: self.coefficients.t().mapv(|v| v.conj()),
        }
    }

    pub fn scaled(&self, c: C64) -> FiniteRankPerturbation {
        let mut k = self.clone();
        k.coefficients.mapv_inplace(|v| v * c);
        k
    }

    /// Adds `delta` to coefficient `(i, j)`.
    pub fn perturbed(&self, i: usize, j: usize, delta: C64) -> Result<FiniteRankPerturbation> {
        if i >= self.rank() || j >= self.rank() {
            return Err(Error::InvalidIndex(format!("coefficient ({i}, {j})")));
        }
        let mut k = self.clone();
        k.coefficients[(i, j)] += delta;
        Ok(k)
    }

    pub fn apply(&self, f: &ExpSum) -> Result<ExpSum> {
        let proj: Vec<C64> = self
            .weights
            .iter()
            .map(|w| f.inner(w))
            .collect::<Result<_>>()?;
        self.combine(&proj)
    }

    fn combine(&self, proj: &[C64]) -> Result<ExpSum> {
        let mut out = ExpSum::zero(self.dim());
        for (i, r) in self.range.iter().enumerate() {
            let c: C64 = (0..self.rank())
                .map(|j| self.coefficients[(i, j)] * proj[j])
                .sum();
            out = out.add(&r.scale(c))?;
        }
        Ok(out)
    }

    /// `K f` for a discrete `f`, projections by the basis inner product.
    pub fn apply_discrete<P: ExampleProvider>(&self, f: &GridFunction, p: &P) -> Result<ExpSum> {
        let proj: Vec<C64> = self
            .weights
            .iter()
            .map(|w| linops::inner(f, &p.represent(w)?))
            .collect::<Result<_>>()?;
        self.combine(&proj)
    }

    pub fn to_outer(&self) -> Result<OuterSum> {
        let mut o = OuterSum::new(self.dim());
        for i in 0..self.rank() {
            for j in 0..self.rank() {
                o.add_outer(self.coefficients[(i, j)], &self.range[i], &self.weights[j])?;
            }
        }
        Ok(o)
    }

    /// Matrix of `K` in the provider's basis (exact rank-`m` update).
    pub fn matrix<P: ExampleProvider>(&self, p: &P) -> Result<LinearMap> {
        let basis = p.basis().clone();
        let n = basis.len();
        let w = basis.weights();
        let m = self.rank();
        let mut rho = Array2::<C64>::zeros((n, m));
        let mut sig = Array2::<C64>::zeros((m, n));
        for k in 0..m {
            let r = p.represent(&self.range[k])?;
            rho.column_mut(k).assign(r.values());
            let s = p.represent(&self.weights[k])?;
            for (i, v) in s.values().iter().enumerate() {
                sig[(k, i)] = v.conj() * w[i];
            }
        }
        let mat = rho.dot(&self.coefficients).dot(&sig);
        LinearMap::new(mat, basis)
    }
}

fn sample_points(dim: usize, count: usize) -> Vec<[f64; 2]> {
    const G1: f64 = 0.754_877_666_246_692_8;
    const G2: f64 = 0.569_840_290_998_053_2;
    (1..=count)
        .map(|k| {
            let x = (0.5 + k as f64 * G1).fract();
            let y = if dim == 2 { (0.5 + k as f64 * G2).fract() } else { 0.0 };
            [x, y]
        })
        .collect()
}

pub const ADMISSIBILITY_POINTS: usize = 32;
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

/// `L̂rᵢ = 0` and `M̂wⱼ = 0` in closed form, checked at 32 points.
pub fn check_admissible<A: AnalyticModel + ?Sized>(
    model: &A,
    k: &FiniteRankPerturbation,
) -> Result<()> {
    if k.dim() != model.dim() {
        return Err(Error::Dimension(format!(
            "{}-D perturbation for a {}-D example",
            k.dim(),
            model.dim()
        )));
    }
    let pts = sample_points(model.dim(), ADMISSIBILITY_POINTS);
    let checks: [(&'static str, &[ExpSum], bool); 2] =
        [("range", k.range(), true), ("weight", k.weights(), false)];
    for (kind, fs, is_range) in checks {
        for (index, f) in fs.iter().enumerate() {
            let img = if is_range { model.lhat(f) } else { model.mhat(f) };
            for pt in &pts {
                let v = img.eval(*pt).norm();
                if v > ADMISSIBILITY_TOL {
                    return Err(Error::Inadmissible {
                        kind,
                        index,
                        detail: format!(
                            "differential image is {v:e} at ({:.4}, {:.4})",
                            pt[0], pt[1]
                        ),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Matrix of `L⁻¹ = L_S⁻¹ + K`.
pub fn assemble_inverse<P: ExampleProvider>(p: &P, k: &FiniteRankPerturbation) -> Result<LinearMap> {
    check_admissible(p, k)?;
    p.base_inverse().add(&k.matrix(p)?)
}

/// `Γ_{L_S} u` for a closed form: the element of `Ker L̂` with the same
/// boundary data as `u`.
pub fn gamma_closed<A: AnalyticModel + ?Sized>(model: &A, u: &ExpSum) -> Result<ExpSum> {
    if !model.ker_lhat_complete() {
        return Err(Error::Unsupported(format!(
            "closed-form projection needs a finite basis of Ker L̂ ({})",
            model.label()
        )));
    }
    let ker = model.ker_lhat_basis();
    let tu = Array1::from(model.boundary_values(u)?);
    let mut t = Array2::<C64>::zeros((tu.len(), ker.len()));
    for (j, e) in ker.iter().enumerate() {
        for (i, v) in model.boundary_values(e)?.into_iter().enumerate() {
            t[(i, j)] = v;
        }
    }
    let sol = t.least_squares(&tu)?;
    let mut out = ExpSum::zero(model.dim());
    for (c, e) in sol.solution.iter().zip(ker.iter()) {
        out = out.add(&e.scale(*c))?;
    }
    Ok(out)
}

/// `u − L_S⁻¹(L̂u)` from the discretization.
pub fn gamma_discrete<P: ExampleProvider>(p: &P, u: &GridFunction) -> Result<GridFunction> {
    let lu = p.apply_lhat(u)?;
    let back = p.base_inverse().apply(&lu)?;
    GridFunction::new(u.values() - back.values(), u.basis().clone())
}

/// `Γ_{L_S} u`, closed form when both `u` and `Ker L̂` allow it.
pub fn gamma_apply<P: ExampleProvider>(p: &P, u: &GridFunction) -> Result<GridFunction> {
    match u.closed_form() {
        Some(f) if p.ker_lhat_complete() => p.represent(&gamma_closed(p, f)?),
        _ => gamma_discrete(p, u),
    }
}

fn smooth_tests<A: AnalyticModel + ?Sized>(model: &A, count: usize) -> Vec<ExpSum> {
    let mut v = model.domain_test_functions(count);
    v.extend(model.ker_lhat_basis());
    v.extend(model.ker_mhat_basis());
    v
}

/// `max_v ‖(I − KL̂)(I + KL̂)v − v‖ / ‖v‖` over smooth closed-form tests.
pub fn involution_residual<A: AnalyticModel + ?Sized>(
    model: &A,
    k: &FiniteRankPerturbation,
) -> Result<f64> {
    check_admissible(model, k)?;
    let mut worst: f64 = 0.0;
    for v in smooth_tests(model, 8) {
        let w = v.add(&k.apply(&model.lhat(&v))?)?;
        let back = w.sub(&k.apply(&model.lhat(&w))?)?;
        worst = worst.max(back.sub(&v)?.norm() / v.norm());
    }
    Ok(worst)
}

/// Boundary vectors `T(K*M̂ − KL̂ + K*M̂KL̂)v` over `basis_size` test
/// functions of `D(L_S)`, each divided by `‖v‖`.
pub fn domain_equality_vectors<A: AnalyticModel + ?Sized>(
    model: &A,
    k: &FiniteRankPerturbation,
    basis_size: usize,
) -> Result<Vec<Vec<C64>>> {
    if basis_size == 0 {
        return Err(Error::InvalidIndex("empty test basis".into()));
    }
    check_admissible(model, k)?;
    let ks = k.adjoint();
    let mut out = Vec::with_capacity(basis_size);
    for v in model.domain_test_functions(basis_size) {
        let klv = k.apply(&model.lhat(&v))?;
        let x = ks
            .apply(&model.mhat(&v))?
            .sub(&klv)?
            .add(&ks.apply(&model.mhat(&klv))?)?;
        let nv = v.norm();
        out.push(model.boundary_values(&x)?.into_iter().map(|t| t / nv).collect());
    }
    Ok(out)
}

/// Max norm of the boundary-form vectors; zero iff `D(L) = D(L*)`.
pub fn domain_equality_residual<A: AnalyticModel + ?Sized>(
    model: &A,
    k: &FiniteRankPerturbation,
    basis_size: usize,
) -> Result<f64> {
    Ok(domain_equality_vectors(model, k, basis_size)?
        .iter()
        .flatten()
        .fold(0.0, |m, v| m.max(v.norm())))
}

/// Hilbert–Schmidt norm of `L̂K* − (M̂K)*`, from closed forms.
pub fn coupling_condition_residual<A: AnalyticModel + ?Sized>(
    k: &FiniteRankPerturbation,
    model: &A,
) -> Result<f64> {
    let mut o = OuterSum::new(k.dim());
    let c = k.coefficients();
    for i in 0..k.rank() {
        for j in 0..k.rank() {
            let cc = c[(i, j)].conj();
            o.add_outer(cc, &model.lhat(&k.weights()[j]), &k.range()[i])?;
            o.add_outer(-cc, &k.weights()[j], &model.mhat(&k.range()[i]))?;
        }
    }
    Ok(o.hs_norm())
}

/// `‖Γ_{L_S*}(I − K*M̂)L⁻¹f‖`: small when `L⁻¹f ∈ D(L*)`.
pub fn adjoint_domain_residual<P: ExampleProvider>(
    p: &P,
    k: &FiniteRankPerturbation,
    f: &GridFunction,
) -> Result<f64> {
    check_admissible(p, k)?;
    let ks = k.adjoint();
    let base = p.base_inverse().apply(f)?;
    let kf = k.apply_discrete(f, p)?;
    let u = base.add(&p.represent(&kf)?)?;
    let mu = GridFunction::new(
        p.mhat_discrete(&base)?.values() + p.represent(&p.mhat(&kf))?.values(),
        p.basis().clone(),
    )?;
    let ksmu = ks.apply_discrete(&mu, p)?;
    let v = GridFunction::new(u.values() - p.represent(&ksmu)?.values(), p.basis().clone())?;
    let mv = GridFunction::new(
        mu.values() - p.represent(&p.mhat(&ksmu))?.values(),
        p.basis().clone(),
    )?;
    let g = GridFunction::new(
        v.values() - p.base_inverse_adjoint().apply(&mv)?.values(),
        p.basis().clone(),
    )?;
    Ok(linops::norm(&g))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    NormalCandidate,
    NotNormal,
    Inconclusive,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::NormalCandidate => "normal-candidate",
            Classification::NotNormal => "not-normal",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

/// How commutator norms behaved under refinement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Refinement {
    /// Every level at the roundoff floor.
    Roundoff,
    /// Successive ratios inside the expected-order window.
    OrderWindow,
    /// Neither.
    NoDecay,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommutatorLevel {
    pub n: usize,
    pub commutator: f64,
    pub floor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NegativeControl {
    pub delta: f64,
    pub n: usize,
    pub commutator: f64,
    pub separated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub provider: String,
    pub admissibility_ok: bool,
    pub involution_residual: f64,
    pub domain_equality_residual: f64,
    pub domain_equality_tol: f64,
    pub coupling_condition_residual: f64,
    pub coupling_condition_tol: f64,
    pub commutator_norms: Vec<CommutatorLevel>,
    pub refinement_ratios: Vec<f64>,
    pub refinement: Refinement,
    pub negative_control: Option<NegativeControl>,
    pub classification: Classification,
    /// Smallest-modulus eigenvalues of `L` at the finest level, `[re, im]`.
    pub spectrum: Vec<[f64; 2]>,
    pub notes: Vec<String>,
}

/// Tolerance for the boundary-form domain check.
pub fn domain_equality_tol(k: &FiniteRankPerturbation, th: &Thresholds) -> f64 {
    th.quadrature * (1.0 + k.coefficient_norm()).powi(2)
}

pub fn coupling_condition_tol(k: &FiniteRankPerturbation, th: &Thresholds) -> f64 {
    th.analytic * (1.0 + k.coefficient_norm())
}

fn frobenius(m: &Array2<C64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Classifies a refinement sequence.
pub fn refinement_verdict(
    levels: &[CommutatorLevel],
    order: f64,
    th: &Thresholds,
) -> (Refinement, Vec<f64>) {
    let ratios: Vec<f64> = levels
        .windows(2)
        .map(|w| w[0].commutator / w[1].commutator)
        .collect();
    if !levels.is_empty() && levels.iter().all(|l| l.commutator <= l.floor) {
        return (Refinement::Roundoff, ratios);
    }
    let in_window = !ratios.is_empty()
        && levels.windows(2).zip(ratios.iter()).all(|(w, r)| {
            let expected = (w[1].n as f64 / w[0].n as f64).powf(order);
            *r >= th.order_window.0 * expected && *r <= th.order_window.1 * expected
        });
    if in_window {
        (Refinement::OrderWindow, ratios)
    } else {
        (Refinement::NoDecay, ratios)
    }
}

pub const REPORT_SPECTRUM_COUNT: usize = 10;

/// Commutator norm of the assembled inverse at one resolution.
pub fn commutator_level<P: ExampleProvider>(
    p: &P,
    k: &FiniteRankPerturbation,
    th: &Thresholds,
) -> Result<CommutatorLevel> {
    let a = assemble_inverse(p, k)?;
    let commutator = linops::commutator_norm(&a)?;
    let floor = th.roundoff_floor * frobenius(a.matrix()).powi(2).max(1.0);
    Ok(CommutatorLevel {
        n: p.resolution(),
        commutator,
        floor,
    })
}

/// Eigenvalues of `L` (reciprocals of the nonzero eigenvalues of `L⁻¹`),
/// ascending in modulus.
pub fn extension_spectrum<P: ExampleProvider>(
    p: &P,
    k: &FiniteRankPerturbation,
) -> Result<Vec<linops::EigenValue>> {
    let a = assemble_inverse(p, k)?;
    let vals = linops::eigenvalues(&a)?;
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.value.norm()));
    let mut out: Vec<linops::EigenValue> = vals
        .into_iter()
        .filter(|v| v.value.norm() > 1e-13 * top.max(1e-300))
        .map(|v| linops::EigenValue {
            value: v.value.inv(),
            residual: v.residual / v.value.norm(),
        })
        .collect();
    out.sort_by(|x, y| {
        x.value
            .norm()
            .total_cmp(&y.value.norm())
            .then(x.value.re.total_cmp(&y.value.re))
            .then(x.value.im.total_cmp(&y.value.im))
    });
    Ok(out)
}

/// Runs every criterion for `K` across the given resolutions.
pub fn normality_report<P: ExampleProvider>(
    p: &P,
    k: &FiniteRankPerturbation,
    sizes: &[usize],
    th: &Thresholds,
) -> Result<CriterionReport> {
    if sizes.is_empty() {
        return Err(Error::InvalidIndex("no resolutions given".into()));
    }
    check_admissible(p, k)?;
    let mut notes = Vec::new();
    let involution = involution_residual(p, k)?;
    let dom = domain_equality_residual(p, k, th.domain_basis_size)?;
    let dom_tol = domain_equality_tol(k, th);
    let coupling = coupling_condition_residual(k, p)?;
    let coupling_tol = coupling_condition_tol(k, th);

    let mut levels = Vec::with_capacity(sizes.len());
    let mut finest = None;
    for &s in sizes {
        let q = p.at_resolution(s)?;
        levels.push(commutator_level(&q, k, th)?);
        finest = Some(q);
    }
    let finest = finest.expect("nonempty sizes");
    let base = *levels.last().expect("nonempty sizes");
    let (refinement, ratios) = refinement_verdict(&levels, p.commutator_order(), th);
    if refinement == Refinement::Roundoff {
        notes.push("commutator norms at the roundoff floor on every level".into());
    }

    let delta = th.negative_control_delta;
    let perturbed = k.perturbed(0, 0, C64::new(delta, 0.0))?;
    let nc = commutator_level(&finest, &perturbed, th)?;
    let negative = NegativeControl {
        delta,
        n: nc.n,
        commutator: nc.commutator,
        separated: nc.commutator >= th.negative_control_min
            && nc.commutator >= th.separation_ratio * base.commutator.max(base.floor),
    };

    let classification = if dom > dom_tol || coupling > coupling_tol {
        if dom > dom_tol {
            notes.push(format!("domain-equality residual {dom:e} exceeds {dom_tol:e}"));
        }
        if coupling > coupling_tol {
            notes.push(format!("coupling_condition residual {coupling:e} exceeds {coupling_tol:e}"));
        }
        Classification::NotNormal
    } else if refinement != Refinement::NoDecay && negative.separated {
        Classification::NormalCandidate
    } else {
        if refinement == Refinement::NoDecay {
            notes.push("commutator norms do not decay at the expected order".into());
        }
        if !negative.separated {
            notes.push("negative control is not separated from zero".into());
        }
        Classification::Inconclusive
    };

    let spectrum = extension_spectrum(&finest, k)?
        .into_iter()
        .take(REPORT_SPECTRUM_COUNT)
        .map(|v| [v.value.re, v.value.im])
        .collect();

    Ok(CriterionReport {
        provider: p.label().to_string(),
        admissibility_ok: true,
        involution_residual: involution,
        domain_equality_residual: dom,
        domain_equality_tol: dom_tol,
        coupling_condition_residual: coupling,
        coupling_condition_tol: coupling_tol,
        commutator_norms: levels,
        refinement_ratios: ratios,
        refinement,
        negative_control: Some(negative),
        classification,
        spectrum,
        notes,
    })
}
