//! Acceptance criteria 1 to 10. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero when any criterion fails.

use std::f64::consts::{E, PI};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Child, Command, ExitCode, Stdio};
use std::time::Instant;

use extlab::cauchy_riemann::*;
use extlab::expsum::ExpSum;
use extlab::extension::*;
use extlab::linops::GridFunction;
use extlab::ode::*;
use extlab::spec::*;
use extlab::thresholds::Thresholds;
use extlab::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORDER_RATIO: (f64, f64) = (3.0, 5.0);
const C1_FINEST_MAX: f64 = 1e-6;
const IDEMPOTENCE_TOL: f64 = 1e-10;
const KERNEL_FIX_TOL: f64 = 1e-12;
const INVOLUTION_TOL: f64 = 1e-10;
const COUPLING_ZERO_TOL: f64 = 1e-13;
const SYSTEM_TOL: f64 = 1e-8;
const FAMILY_SYSTEM_TOL: f64 = 1e-10;
const CONTROL_DELTA: f64 = 0.1;
const CONTROL_MIN: f64 = 1e-2;
const CIRCLE_TOL: f64 = 1e-14;
const SWEEP_STEPS: usize = 21;
const SWEEP_HALF_WIDTH: f64 = 0.1;
const SWEEP_MODES: usize = 16;
const SEPARATION: f64 = 10.0;
const FAR: f64 = 0.1;
const LATTICE_MODES: usize = 32;
const LATTICE_COUNT: usize = 25;
const ORTHONORMAL_TOL: f64 = 1e-14;
const ROUND_TRIPS: usize = 200;
const FUZZ_CASES: usize = 10_000;

/// Name, runtime budget in seconds, check.
type Criterion = (&'static str, f64, fn() -> Check);

struct Check {
    pass: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn r(v: f64) -> C64 {
    c(v, 0.0)
}

fn in_window(x: f64, w: (f64, f64)) -> bool {
    x >= w.0 && x <= w.1
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[0] / w[1]).collect()
}

fn ode_commutators(a: &OdeParams, th: &Thresholds) -> Vec<f64> {
    [100, 200, 400]
        .iter()
        .map(|&n| {
            let p = OdeProvider::with_nodes(n).unwrap();
            commutator_level(&p, &build_k(a), th).unwrap().commutator
        })
        .collect()
}

fn criterion_1() -> Check {
    let th = Thresholds::default();
    let norms = ode_commutators(&OdeParams::zero(), &th);
    let rs = ratios(&norms);
    let ok_ratio = rs.iter().all(|&x| in_window(x, ORDER_RATIO));
    let decreasing = norms.windows(2).all(|w| w[1] < w[0]);
    let ok_value = norms[2] <= C1_FINEST_MAX;
    Check {
        pass: ok_ratio && decreasing && ok_value,
        detail: format!("norms {}, ratios {rs:.3?} (window {ORDER_RATIO:?}), finest <= {C1_FINEST_MAX:e}", sci(&norms)),
    }
}

fn criterion_2() -> Check {
    // x − 3/2 + 2e^{1−x}/(1+e) solves y'' + y' = 1 with y(0)+y(1) = 0, y'(0)+y'(1) = 0.
    let exact = |x: f64| x - 1.5 + 2.0 * (1.0 - x).exp() / (1.0 + E);
    let mut errs = Vec::new();
    for n in [100, 200, 400] {
        let p = OdeProvider::with_nodes(n).unwrap();
        let one = p.represent(&ExpSum::constant(1, r(1.0))).unwrap();
        let u = p.base_inverse().apply(&one).unwrap();
        let e = p
            .grid()
            .axis()
            .iter()
            .zip(u.values().iter())
            .map(|(&x, v)| (v - r(exact(x))).norm())
            .fold(0.0, f64::max);
        errs.push(e);
    }
    let rs = ratios(&errs);
    Check {
        pass: rs.iter().all(|&x| in_window(x, ORDER_RATIO)),
        detail: format!("sup errors {}, ratios {rs:.3?} (window {ORDER_RATIO:?})", sci(&errs)),
    }
}

fn random_smooth(rng: &mut ChaCha8Rng) -> ExpSum {
    let mut f = ExpSum::zero(1);
    for _ in 0..4 {
        let coeff = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let rate = c(rng.gen_range(-2.0..2.0), rng.gen_range(-6.0..6.0));
        f = f.add(&ExpSum::exp1(coeff, rate)).unwrap();
    }
    f
}

fn random_params(rng: &mut ChaCha8Rng) -> OdeParams {
    let mut z = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    OdeParams::new(z(), z(), z(), z())
}

fn criterion_3() -> Check {
    let p = OdeProvider::with_nodes(200).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut idem: f64 = 0.0;
    for _ in 0..16 {
        let u = p.represent(&random_smooth(&mut rng)).unwrap();
        let g = gamma_apply(&p, &u).unwrap();
        let gg = gamma_apply(&p, &g).unwrap();
        idem = idem.max(gg.sub(&g).unwrap().max_abs());
    }
    let mut fix: f64 = 0.0;
    for f in [ExpSum::constant(1, r(1.0)), ExpSum::exp1(r(1.0), r(-1.0))] {
        let u: GridFunction = p.represent(&f).unwrap();
        fix = fix.max(gamma_apply(&p, &u).unwrap().sub(&u).unwrap().max_abs());
        fix = fix.max(gamma_closed(&OdeModel, &f).unwrap().sub(&f).unwrap().norm());
    }
    let mut inv: f64 = 0.0;
    for _ in 0..16 {
        inv = inv.max(involution_residual(&OdeModel, &build_k(&random_params(&mut rng))).unwrap());
    }
    Check {
        pass: idem <= IDEMPOTENCE_TOL && fix <= KERNEL_FIX_TOL && inv <= INVOLUTION_TOL,
        detail: format!("idempotence {idem:.2e}, kernel fix {fix:.2e}, involution {inv:.2e}"),
    }
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cases: Vec<OdeParams> = Vec::new();
    for i in 0..64 {
        let mut a = random_params(&mut rng);
        match i % 4 {
            0 => {
                a.a12 = r(0.0);
                a.a21 = r(0.0);
            }
            1 => a.a12 = r(0.0),
            2 => a.a21 = r(0.0),
            _ => {}
        }
        cases.push(a);
    }
    for unit in [r(1.0), c(0.0, 1.0)] {
        for k in 0..4 {
            let mut v = [r(0.0); 4];
            v[k] = unit;
            cases.push(OdeParams::from_array(v));
        }
    }
    cases.push(OdeParams::zero());
    let mut wrong = 0;
    let (mut zero_max, mut nonzero_min) = (0.0f64, f64::INFINITY);
    for a in &cases {
        let res = coupling_condition_residual(&build_k(a), &OdeModel).unwrap();
        let diagonal = a.a12 == r(0.0) && a.a21 == r(0.0);
        if diagonal {
            zero_max = zero_max.max(res);
        } else {
            nonzero_min = nonzero_min.min(res);
        }
        if diagonal != (res <= COUPLING_ZERO_TOL) {
            wrong += 1;
        }
    }
    Check {
        pass: wrong == 0,
        detail: format!(
            "{} cases, {wrong} misclassified; max residual with a12 = a21 = 0: {zero_max:.2e}, min otherwise: {nonzero_min:.2e}",
            cases.len()
        ),
    }
}

fn unit_ball(rng: &mut ChaCha8Rng) -> OdeParams {
    loop {
        let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            return OdeParams::from_reals(&x);
        }
    }
}

fn criterion_5() -> Check {
    let th = Thresholds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let random: Vec<OdeParams> = (0..64).map(|_| unit_ball(&mut rng)).collect();
    let mut points: Vec<(String, OdeParams)> = random.iter().map(|a| ("random".into(), *a)).collect();
    let seeds: Vec<OdeParams> = random.iter().take(16).copied().chain([OdeParams::zero()]).collect();
    for (label, form) in [("printed", SystemForm::Printed), ("boundary", SystemForm::BoundaryForm)] {
        let opts = SolveOptions {
            form,
            ..SolveOptions::default()
        };
        for s in solve_system(&seeds, &opts).solutions {
            points.push((format!("{label} newton"), s.params));
        }
    }
    let mut disagreements = Vec::new();
    for (label, a) in &points {
        let k = build_k(a);
        let sys = system_residual_norm(a);
        let dom = domain_equality_residual(&OdeModel, &k, th.domain_basis_size).unwrap();
        let tol = domain_equality_tol(&k, &th);
        if (sys <= SYSTEM_TOL) != (dom <= tol) {
            disagreements.push(format!("{label}: system {sys:.1e} vs boundary {dom:.1e} (tol {tol:.1e})"));
        }
    }
    let shown: Vec<&String> = disagreements.iter().take(3).collect();
    Check {
        pass: disagreements.is_empty(),
        detail: format!("{} points, {} disagreements {shown:?}", points.len(), disagreements.len()),
    }
}

fn criterion_6() -> Check {
    let th = Thresholds::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for a_real in [0.0, 1.0, -2.0] {
        let a = match match_family_ii(a_real) {
            Ok(a) => a,
            Err(e) => {
                ok = false;
                parts.push(format!("a={a_real}: {e}"));
                continue;
            }
        };
        let sys = system_residual_norm(&a);
        let coupling = coupling_condition_residual(&build_k(&a), &OdeModel).unwrap();
        let norms = ode_commutators(&a, &th);
        let rs = ratios(&norms);
        let mut b = a;
        b.a11 += r(CONTROL_DELTA);
        let p = OdeProvider::with_nodes(400).unwrap();
        let control = commutator_level(&p, &build_k(&b), &th).unwrap().commutator;
        let this = sys <= FAMILY_SYSTEM_TOL
            && coupling <= COUPLING_ZERO_TOL
            && rs.iter().all(|&x| in_window(x, ORDER_RATIO))
            && control >= CONTROL_MIN;
        ok &= this;
        parts.push(format!(
            "a={a_real}: system {sys:.1e}, coupling {coupling:.1e}, norms {}, ratios {rs:.2?}, control {control:.2e}",
            sci(&norms)
        ));
    }
    Check {
        pass: ok,
        detail: parts.join("; "),
    }
}

fn criterion_7() -> Check {
    let s = PI.exp() - (-PI).exp();
    // Circle 2a₂ + |a|²(e^π − e^{−π}) = 0, case I at a = 2i/(e^{−π} − e^π).
    let circle = |a: C64| (2.0 * a.im + a.norm_sqr() * s).abs();
    let case_one = c(0.0, 2.0 / ((-PI).exp() - PI.exp()));
    let mut worst = normality_condition_residual(case_one).max(circle(case_one));
    let on_lib = (case_one_parameter() - case_one).norm();
    for i in 0..=20 {
        let a1 = -1.0 / s + 2.0 / s * i as f64 / 20.0;
        for a2 in branch_solutions(a1) {
            let a = c(a1, a2);
            worst = worst.max(normality_condition_residual(a)).max(circle(a));
        }
    }
    let step = 2.0 * SWEEP_HALF_WIDTH / (SWEEP_STEPS - 1) as f64;
    let mut pts = Vec::new();
    for i in 0..SWEEP_STEPS {
        for j in 0..SWEEP_STEPS {
            pts.push(c(-SWEEP_HALF_WIDTH + i as f64 * step, -SWEEP_HALF_WIDTH + j as f64 * step));
        }
    }
    let sweep = commutator_sweep(&pts, ModeSet::new(SWEEP_MODES).unwrap()).unwrap();
    let cell = step * 2f64.sqrt();
    let argmin = sweep.iter().min_by(|x, y| x.commutator.total_cmp(&y.commutator)).unwrap();
    let center = c(0.0, -1.0 / s);
    let dist = |p: &SweepPoint| ((c(p.a1, p.a2) - center).norm() - 1.0 / s).abs();
    let far_min = sweep
        .iter()
        .filter(|p| dist(p) >= FAR)
        .map(|p| p.commutator)
        .fold(f64::INFINITY, f64::min);
    let floor = Thresholds::default().roundoff_floor;
    let within = dist(argmin) <= cell;
    let separated = far_min.is_finite() && far_min >= SEPARATION * argmin.commutator.max(floor);
    Check {
        pass: worst <= CIRCLE_TOL && on_lib <= CIRCLE_TOL && within && separated,
        detail: format!(
            "circle residual {worst:.1e}, argmin ({:.3}, {:.3}) at distance {:.2e} (cell {cell:.3}), min {:.2e}, far min {far_min:.2e}",
            argmin.a1,
            argmin.a2,
            dist(argmin),
            argmin.commutator
        ),
    }
}

fn criterion_8() -> Check {
    let p = CrProvider::with_truncation(LATTICE_MODES).unwrap();
    let a = c(0.0, 2.0 / ((-PI).exp() - PI.exp()));
    let ev = extension_spectrum(&p, &build_k_cr(a)).unwrap();
    let bound = 5.0 / LATTICE_MODES as f64;
    // First family iπ − 2nπ, second family (2k+1)πi − (2n+1)π with k ≠ 0.
    let first = |n: i64| c(-2.0 * n as f64 * PI, PI);
    let second = |k: i64, n: i64| c(-(2 * n + 1) as f64 * PI, (2 * k + 1) as f64 * PI);
    let mut worst: f64 = 0.0;
    let mut matched = Vec::new();
    let mut stray_k0 = 0;
    for e in ev.iter().take(LATTICE_COUNT) {
        let mut best = (f64::INFINITY, None);
        for n in -20..=20 {
            let d = (e.value - first(n)).norm();
            if d < best.0 {
                best = (d, Some(LatticePoint::First { n }));
            }
            for k in -20..=20 {
                if k == 0 {
                    if (e.value - second(0, n)).norm() <= bound {
                        stray_k0 += 1;
                    }
                    continue;
                }
                let d = (e.value - second(k, n)).norm();
                if d < best.0 {
                    best = (d, Some(LatticePoint::Second { k, n }));
                }
            }
        }
        worst = worst.max(best.0);
        if let Some(lp) = best.1 {
            if !matched.contains(&lp) {
                matched.push(lp);
            }
        }
    }
    let missing: Vec<i64> = (-2..=2).filter(|n| !matched.contains(&LatticePoint::First { n: *n })).collect();
    let eig = matched.iter().map(|lp| eigenbasis_check(*lp).unwrap().1).fold(0.0, f64::max);
    let ortho = orthonormality_defect(&matched).unwrap();
    Check {
        pass: worst <= bound && missing.is_empty() && stray_k0 == 0 && eig == 0.0 && ortho <= ORTHONORMAL_TOL,
        detail: format!(
            "max distance {worst:.3e} (bound {bound:.3e}), first family missing {missing:?}, k=0 hits {stray_k0}, eigen residual {eig:e}, orthonormality {ortho:.1e}"
        ),
    }
}

fn random_value(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..3) {
        0 => 0.0,
        1 => rng.gen_range(-1.0..1.0),
        _ => rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-300..300)),
    }
}

fn random_document(rng: &mut ChaCha8Rng) -> SpecDocument {
    let z = |rng: &mut ChaCha8Rng| c(random_value(rng), random_value(rng));
    let (example, params, resolution) = if rng.gen_bool(0.5) {
        let a = OdeParams::new(z(rng), z(rng), z(rng), z(rng));
        (Example::Ode, Params::Ode(a), rng.gen_range(8..=4096))
    } else {
        (Example::CauchyRiemann, Params::CauchyRiemann(z(rng)), rng.gen_range(4..=64))
    };
    let tasks = (0..rng.gen_range(1..5)).map(|_| Task::ALL[rng.gen_range(0..4)]).collect();
    let tol = |rng: &mut ChaCha8Rng| rng.gen_bool(0.4).then(|| 10f64.powf(rng.gen_range(-15.0..-1.0)));
    SpecDocument {
        example,
        params,
        resolution,
        tasks,
        tol_analytic: tol(rng),
        tol_quadrature: tol(rng),
    }
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bad_trips = 0;
    for _ in 0..ROUND_TRIPS {
        let d = random_document(&mut rng);
        let text = d.to_text();
        match parse_spec(&text) {
            Ok(back) if back == d && back.to_text() == text => {}
            _ => bad_trips += 1,
        }
    }
    let valid = b"example=cauchy-riemann\na=-0.0866i\nM=16\ntask=sweep\n";
    let alphabet = b"=+-.ie0123456789#\n\r axyMnt_";
    let (mut crashes, mut unstructured, mut errors) = (0, 0, 0);
    for case in 0..FUZZ_CASES {
        let bytes: Vec<u8> = match case % 3 {
            0 => (0..rng.gen_range(0..=512)).map(|_| rng.gen()).collect(),
            1 => (0..rng.gen_range(0..=256)).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect(),
            _ => {
                let mut v = valid.to_vec();
                for _ in 0..rng.gen_range(1..4) {
                    let i = rng.gen_range(0..v.len());
                    v[i] = rng.gen();
                }
                v
            }
        };
        match catch_unwind(AssertUnwindSafe(|| parse_spec_bytes(&bytes))) {
            Ok(Ok(_)) => {}
            Ok(Err(e)) => {
                errors += 1;
                if e.line == 0 || e.column == 0 || e.message.is_empty() {
                    unstructured += 1;
                }
            }
            Err(_) => crashes += 1,
        }
    }
    Check {
        pass: bad_trips == 0 && crashes == 0 && unstructured == 0,
        detail: format!(
            "{ROUND_TRIPS} round trips, {bad_trips} failed; {FUZZ_CASES} fuzz cases, {errors} errors, {unstructured} unstructured, {crashes} crashes"
        ),
    }
}

fn criterion_10() -> Check {
    let specs = Path::new(env!("CARGO_MANIFEST_DIR")).join("specs");
    let mut names: Vec<String> = fs::read_dir(&specs)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".spec"))
        .collect();
    names.sort();
    let expected = |n: &str| if n == "ode-coupled.spec" { 1 } else { 0 };
    let run = |args: &[&str]| Command::new(env!("CARGO_BIN_EXE_extlab")).args(args).output().unwrap();
    let mut problems = Vec::new();
    let spawn = |path: &str| {
        Command::new(env!("CARGO_BIN_EXE_extlab"))
            .args(["verify", path, "--no-timestamp"])
            .stdout(Stdio::piped())
            .spawn()
            .unwrap()
    };
    let children: Vec<(String, Child, Child)> = names
        .iter()
        .map(|n| {
            let path = specs.join(n).display().to_string();
            (n.clone(), spawn(&path), spawn(&path))
        })
        .collect();
    for (n, a, b) in children {
        let (a, b) = (a.wait_with_output().unwrap(), b.wait_with_output().unwrap());
        if a.stdout != b.stdout || a.stdout.is_empty() {
            problems.push(format!("{n}: reports differ"));
        }
        if a.status.code() != Some(expected(&n)) || b.status.code() != a.status.code() {
            problems.push(format!("{n}: exit {:?}, expected {}", a.status.code(), expected(&n)));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.spec");
    fs::write(&bad, "example=ode\na11=1+\n").unwrap();
    if run(&["verify", bad.to_str().unwrap()]).status.code() != Some(2) {
        problems.push("malformed spec did not exit 2".into());
    }
    let big = dir.path().join("big.spec");
    fs::write(&big, "example=ode\na11=1e300\na12=1e300\na21=0\na22=0\nn=16\ntask=verify\n").unwrap();
    if run(&["verify", big.to_str().unwrap()]).status.code() != Some(3) {
        problems.push("non-finite arithmetic did not exit 3".into());
    }
    Check {
        pass: problems.is_empty() && !names.is_empty(),
        detail: format!("{} bundled specs run twice; problems {problems:?}", names.len()),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("fixed-extension normality under refinement", 10.0, criterion_1),
        ("closed-form fixed inverse at second order", 2.0, criterion_2),
        ("projection identities and involution", 5.0, criterion_3),
        ("coupling condition iff a12 = a21 = 0", 2.0, criterion_4),
        ("printed system against boundary form", 30.0, criterion_5),
        ("quasi-antiperiodic normal family", 60.0, criterion_6),
        ("square normality circle and sweep", 300.0, criterion_7),
        ("square eigenlattice", 180.0, criterion_8),
        ("parser round trips and fuzz", 30.0, criterion_9),
        ("command-line contract", 60.0, criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(f).unwrap_or_else(|e| Check {
            pass: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
            ),
        });
        let secs = t.elapsed().as_secs_f64();
        let pass = outcome.pass && secs <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {} [{secs:.2} s, budget {budget} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
