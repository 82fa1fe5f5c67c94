use std::time::Instant;

use extlab::cauchy_riemann::{
    build_k_cr, case_one_parameter, commutator_sweep, nearest_lattice, summarize_sweep,
    CrProvider, ModeSet, SweepPoint, SweepSummary,
};
use extlab::extension::{self, normality_report, Classification, CriterionReport};
use extlab::linops::Grid;
use extlab::ode::{
    self, boundary_matrix, build_k, classify_family, refine_characteristic_root, solve_system,
    system_residual_norm, OdeModel, OdeParams, OdeProvider, SolveOptions, SystemForm,
};
use extlab::spec::{Params, SpecDocument, Task, MODES_RANGE, NODES_RANGE};
use extlab::thresholds::Thresholds;
use extlab::{Error, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::report::{GridEntry, TaskReport};

#[derive(Debug)]
pub enum Failure {
    /// Bad input: spec, seeds, flags. Exit code 2.
    Spec(String),
    /// Numerical breakdown. Exit code 3.
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(p) => Failure::Spec(p.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

pub fn thresholds(doc: &SpecDocument) -> Thresholds {
    Thresholds::with_overrides(doc.tol_analytic, doc.tol_quadrature)
}

/// `lo:hi:steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range1 {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Range1 {
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        (0..self.steps)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }

    pub fn step(&self) -> f64 {
        if self.steps <= 1 {
            0.0
        } else {
            (self.hi - self.lo).abs() / (self.steps - 1) as f64
        }
    }
}

impl std::str::FromStr for Range1 {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:steps, got '{s}'"));
        }
        let num = |t: &str| -> std::result::Result<f64, String> {
            let v: f64 = t.trim().parse().map_err(|_| format!("'{t}' is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("'{t}' is not finite"))
            }
        };
        let steps: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("'{}' is not a step count", parts[2]))?;
        if steps == 0 || steps > 1001 {
            return Err(format!("step count {steps} outside 1..=1001"));
        }
        Ok(Range1 {
            lo: num(parts[0])?,
            hi: num(parts[1])?,
            steps,
        })
    }
}

pub const DEFAULT_SWEEP: Range1 = Range1 {
    lo: -0.1,
    hi: 0.1,
    steps: 21,
};

pub fn default_grids(doc: &SpecDocument) -> Vec<usize> {
    let r = doc.resolution;
    vec![r, 2 * r, 4 * r]
}

pub fn check_grids(doc: &SpecDocument, grids: &[usize]) -> Outcome<()> {
    if grids.is_empty() {
        return Err(Failure::Spec("--grids needs at least one size".into()));
    }
    if grids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Spec(format!("--grids must be strictly ascending, got {grids:?}")));
    }
    let (range, what) = match doc.example {
        extlab::spec::Example::Ode => (NODES_RANGE, "node count"),
        extlab::spec::Example::CauchyRiemann => (MODES_RANGE, "mode truncation"),
    };
    if let Some(g) = grids.iter().find(|g| !range.contains(g)) {
        return Err(Failure::Spec(format!(
            "{what} {g} outside the supported range {}..={}",
            range.start(),
            range.end()
        )));
    }
    Ok(())
}

fn timed<T>(f: impl FnOnce() -> Outcome<T>) -> Outcome<(T, f64)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64() * 1e3))
}

fn criterion_task(r: &CriterionReport, th: &Thresholds) -> TaskReport {
    let mut t = TaskReport::new("verify");
    t.residual("involution", r.involution_residual);
    t.residual("domain_equality", r.domain_equality_residual);
    t.residual("coupling_condition", r.coupling_condition_residual);
    if let Some(nc) = r.negative_control {
        t.residual("negative_control", nc.commutator);
    }
    for (i, ratio) in r.refinement_ratios.iter().enumerate() {
        t.residual(&format!("refinement_ratio_{}", i + 1), *ratio);
    }
    t.grids = r
        .commutator_norms
        .iter()
        .map(|l| GridEntry {
            n: l.n,
            commutator: l.commutator,
        })
        .collect();
    t.require_at_most("involution_residual", r.involution_residual, th.involution);
    t.require_at_most("domain_equality_residual", r.domain_equality_residual, r.domain_equality_tol);
    t.require_at_most("coupling_condition_residual", r.coupling_condition_residual, r.coupling_condition_tol);
    match r.classification {
        Classification::NormalCandidate | Classification::NotNormal => {}
        Classification::Inconclusive => {
            if r.refinement == extension::Refinement::NoDecay {
                let worst = r
                    .refinement_ratios
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                t.violate("commutator_refinement_ratio", worst, th.order_window.0);
            }
            if let Some(nc) = r.negative_control {
                if !nc.separated {
                    t.inconclusive(format!(
                        "negative control {:e} not separated from the base level",
                        nc.commutator
                    ));
                }
            }
        }
    }
    t.notes.extend(r.notes.iter().cloned());
    t.detail = serde_json::to_value(r).unwrap_or(serde_json::Value::Null);
    t
}

pub fn verify_task(doc: &SpecDocument, grids: &[usize], th: &Thresholds) -> Outcome<TaskReport> {
    check_grids(doc, grids)?;
    let (report, ms) = timed(|| {
        Ok(match doc.params {
            Params::Ode(a) => {
                let p = OdeProvider::with_nodes(grids[0])?;
                normality_report(&p, &build_k(&a), grids, th)?
            }
            Params::CauchyRiemann(a) => {
                let p = CrProvider::with_truncation(grids[0])?;
                normality_report(&p, &build_k_cr(a), grids, th)?
            }
        })
    })?;
    let mut t = criterion_task(&report, th);
    t.wall_ms = Some(ms);
    Ok(t)
}

pub fn cr_parameter(doc: &SpecDocument, command: &str) -> Outcome<C64> {
    match doc.params {
        Params::CauchyRiemann(a) => Ok(a),
        Params::Ode(_) => Err(Failure::Spec(format!(
            "{command} needs a cauchy-riemann spec, got example '{}'",
            doc.example.as_str()
        ))),
    }
}

pub fn ode_parameter(doc: &SpecDocument, command: &str) -> Outcome<OdeParams> {
    match doc.params {
        Params::Ode(a) => Ok(a),
        Params::CauchyRiemann(_) => Err(Failure::Spec(format!(
            "{command} needs an ode spec, got example '{}'",
            doc.example.as_str()
        ))),
    }
}

pub fn sweep_points(re: &Range1, im: &Range1) -> Vec<C64> {
    let ys = im.points();
    re.points()
        .into_iter()
        .flat_map(|x| ys.iter().map(move |&y| C64::new(x, y)))
        .collect()
}

pub fn sweep(doc: &SpecDocument, re: &Range1, im: &Range1) -> Outcome<Vec<SweepPoint>> {
    cr_parameter(doc, "sweep")?;
    Ok(commutator_sweep(&sweep_points(re, im), ModeSet::new(doc.resolution)?)?)
}

pub fn sweep_task(doc: &SpecDocument, re: &Range1, im: &Range1, th: &Thresholds) -> Outcome<TaskReport> {
    let (points, ms) = timed(|| sweep(doc, re, im))?;
    let cell = re.step().hypot(im.step());
    let s: SweepSummary = summarize_sweep(
        &points,
        cell,
        th.sweep_far_distance,
        th.separation_ratio,
        th.roundoff_floor,
    )?;
    let mut t = TaskReport::new("sweep");
    t.wall_ms = Some(ms);
    t.residual("argmin_commutator", s.argmin.commutator);
    t.residual("argmin_zero_set_distance", s.argmin_distance);
    t.require_at_most("argmin_zero_set_distance", s.argmin_distance, cell);
    match s.far_min {
        Some(f) => {
            t.residual("far_min_commutator", f);
            let need = th.separation_ratio * s.argmin.commutator.max(th.roundoff_floor);
            t.require_at_least("far_min_commutator", f, need);
        }
        None => t.notes.push(format!(
            "no sweep point lies {} or more from the zero set",
            th.sweep_far_distance
        )),
    }
    t.detail = json!({
        "modes": doc.resolution,
        "grid_re": [re.lo, re.hi, re.steps],
        "grid_im": [im.lo, im.hi, im.steps],
        "cell_diagonal": cell,
        "summary": s,
    });
    Ok(t)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumRow {
    pub value: [f64; 2],
    pub residual: f64,
    /// Lattice label (square) or "root" (interval).
    pub reference: Option<String>,
    pub reference_value: Option<[f64; 2]>,
    pub distance: Option<f64>,
}

pub fn spectrum_rows(doc: &SpecDocument, count: usize) -> Outcome<Vec<SpectrumRow>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    Ok(match doc.params {
        Params::Ode(a) => ode::spectrum(&a, Grid::uniform(doc.resolution)?)?
            .into_iter()
            .take(count)
            .map(|e| {
                let root = refine_characteristic_root(&a, e.value);
                SpectrumRow {
                    value: [e.value.re, e.value.im],
                    residual: e.residual,
                    reference: root.map(|_| "root".to_string()),
                    reference_value: root.map(|r| [r.re, r.im]),
                    distance: root.map(|r| (r - e.value).norm()),
                }
            })
            .collect(),
        Params::CauchyRiemann(a) => {
            let p = CrProvider::with_truncation(doc.resolution)?;
            extension::extension_spectrum(&p, &build_k_cr(a))?
                .into_iter()
                .take(count)
                .map(|e| {
                    let (lp, d) = nearest_lattice(e.value);
                    let v = lp.eigenvalue().expect("nearest lattice point is valid");
                    SpectrumRow {
                        value: [e.value.re, e.value.im],
                        residual: e.residual,
                        reference: Some(lp.label()),
                        reference_value: Some([v.re, v.im]),
                        distance: Some(d),
                    }
                })
                .collect()
        }
    })
}

/// Lattice assertions apply at the case-I parameter.
pub fn lattice_asserted(a: C64) -> bool {
    (a - case_one_parameter()).norm() <= 1e-3
}

pub fn spectrum_task(doc: &SpecDocument, count: usize, th: &Thresholds) -> Outcome<TaskReport> {
    let (rows, ms) = timed(|| spectrum_rows(doc, count))?;
    let mut t = TaskReport::new("spectrum");
    t.wall_ms = Some(ms);
    let worst_res = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    t.residual("max_eigen_residual", worst_res);
    t.require_at_most("max_eigen_residual", worst_res, th.spectrum_residual);
    match doc.params {
        Params::Ode(_) => {
            let mut worst: f64 = 0.0;
            for r in &rows {
                match (r.distance, r.reference_value) {
                    (Some(d), Some(v)) => worst = worst.max(d / v[0].hypot(v[1]).max(1.0)),
                    _ => worst = f64::INFINITY,
                }
            }
            t.residual("max_relative_root_distance", worst);
            t.require_at_most("max_relative_root_distance", worst, th.spectrum_relative);
        }
        Params::CauchyRiemann(a) => {
            let worst = rows.iter().filter_map(|r| r.distance).fold(0.0, f64::max);
            t.residual("max_lattice_distance", worst);
            if lattice_asserted(a) {
                t.require_at_most("max_lattice_distance", worst, 5.0 / doc.resolution as f64);
            } else {
                t.notes.push("lattice distances reported without an expected value".into());
            }
        }
    }
    t.detail = json!({ "count": rows.len(), "eigenvalues": rows });
    Ok(t)
}

#[derive(Clone, Debug, Serialize)]
pub struct SolutionRow {
    pub seed_index: usize,
    pub params: [[f64; 2]; 4],
    pub residual: f64,
    pub system_residual: f64,
    pub boundary_residual: f64,
    pub boundary_tol: f64,
    pub family: String,
    pub agrees: bool,
}

pub fn random_seeds(count: usize, seed: u64) -> Vec<OdeParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut z = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            OdeParams::new(z(), z(), z(), z())
        })
        .collect()
}

/// `{‖printed system‖ ≤ 1e-8}` against `{boundary-form residual ≤ scaled tol}`.
pub fn cross_validate(a: &OdeParams, th: &Thresholds) -> Outcome<(f64, f64, f64, bool)> {
    let k = build_k(a);
    let sys = system_residual_norm(a);
    let dom = extension::domain_equality_residual(&OdeModel, &k, th.domain_basis_size)?;
    let tol = extension::domain_equality_tol(&k, th);
    Ok((sys, dom, tol, (sys <= 1e-8) == (dom <= tol)))
}

pub struct Solved {
    pub rows: Vec<SolutionRow>,
    pub failed: Vec<(usize, f64, String)>,
}

pub fn solve(seeds: &[OdeParams], form: SystemForm, th: &Thresholds) -> Outcome<Solved> {
    let out = solve_system(seeds, &SolveOptions { form, ..SolveOptions::default() });
    let mut rows = Vec::new();
    for s in &out.solutions {
        let (sys, dom, tol, agrees) = cross_validate(&s.params, th)?;
        let family = match classify_family(&boundary_matrix(&s.params)) {
            Ok(f) => f.label().to_string(),
            Err(Error::RankDeficient(r)) => format!("rank-{r}"),
            Err(e) => return Err(e.into()),
        };
        rows.push(SolutionRow {
            seed_index: s.seed_index,
            params: s.params.as_array().map(|v| [v.re, v.im]),
            residual: s.residual,
            system_residual: sys,
            boundary_residual: dom,
            boundary_tol: tol,
            family,
            agrees,
        });
    }
    let failed = out
        .failures
        .into_iter()
        .map(|f| (f.seed_index, f.residual, f.reason))
        .collect();
    Ok(Solved { rows, failed })
}

pub const TASK_RANDOM_SEEDS: usize = 16;

pub fn solve_task(doc: &SpecDocument, th: &Thresholds) -> Outcome<TaskReport> {
    let a = ode_parameter(doc, "solve-system")?;
    let mut seeds = vec![a];
    seeds.extend(random_seeds(TASK_RANDOM_SEEDS, 0));
    let (solved, ms) = timed(|| solve(&seeds, SystemForm::Printed, th))?;
    let mut t = TaskReport::new("solve-system");
    t.wall_ms = Some(ms);
    let disagree = solved.rows.iter().filter(|r| !r.agrees).count();
    t.residual("converged", solved.rows.len() as f64);
    t.residual("disagreements", disagree as f64);
    if solved.rows.is_empty() {
        t.inconclusive("no seed converged");
    }
    t.require_at_most("cross_validation_disagreements", disagree as f64, 0.0);
    let others = solved.rows.iter().filter(|r| r.family == "other").count();
    if others > 0 {
        t.notes.push(format!("{others} solutions match none of the families I-III"));
    }
    t.detail = json!({
        "seeds": seeds.len(),
        "random_seed": 0,
        "solutions": solved.rows,
        "failed_seeds": solved.failed.iter().map(|f| f.0).collect::<Vec<_>>(),
    });
    Ok(t)
}

pub fn run_task(
    doc: &SpecDocument,
    task: Task,
    grids: &[usize],
    th: &Thresholds,
) -> Outcome<TaskReport> {
    match task {
        Task::Verify => verify_task(doc, grids, th),
        Task::Sweep => sweep_task(doc, &DEFAULT_SWEEP, &DEFAULT_SWEEP, th),
        Task::Spectrum => spectrum_task(doc, extension::REPORT_SPECTRUM_COUNT, th),
        Task::SolveSystem => solve_task(doc, th),
    }
}
