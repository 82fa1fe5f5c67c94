use std::f64::consts::PI;

use extlab::cauchy_riemann::{build_k_cr, case_one_parameter, CrModel, CrProvider};
use extlab::expsum::ExpSum;
use extlab::extension::*;
use extlab::linops::{self, numerical_rank, GridFunction};
use extlab::ode::{build_k, ln_inverse_of_one, match_family_ii, OdeModel, OdeParams, OdeProvider};
use extlab::thresholds::Thresholds;
use extlab::{Error, C64};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn ode_a(a11: f64, a12: f64, a21: f64, a22: f64) -> OdeParams {
    OdeParams::new(c(a11, 0.0), c(a12, 0.0), c(a21, 0.0), c(a22, 0.0))
}

fn random_params(rng: &mut ChaCha8Rng) -> OdeParams {
    let mut z = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    OdeParams::new(z(), z(), z(), z())
}

fn cos_pi() -> ExpSum {
    ExpSum::exp1(c(0.5, 0.0), c(0.0, PI))
        .add(&ExpSum::exp1(c(0.5, 0.0), c(0.0, -PI)))
        .unwrap()
}

#[test]
fn zero_perturbation_keeps_base_inverse() {
    let p = OdeProvider::with_nodes(50).unwrap();
    let a = assemble_inverse(&p, &build_k(&OdeParams::zero())).unwrap();
    assert_eq!(a.max_abs_diff(p.base_inverse()), 0.0);
}

#[test]
fn assembled_inverse_of_one_matches_closed_form() {
    let a = ode_a(1.0, 0.0, 0.0, 0.0);
    let mut errs = Vec::new();
    for n in [100, 200, 400] {
        let p = OdeProvider::with_nodes(n).unwrap();
        let inv = assemble_inverse(&p, &build_k(&a)).unwrap();
        let one = p.represent(&ExpSum::constant(1, c(1.0, 0.0))).unwrap();
        let u = inv.apply(&one).unwrap();
        let e = p
            .grid()
            .axis()
            .iter()
            .zip(u.values().iter())
            .map(|(&x, v)| (v - c(ln_inverse_of_one(x) + 1.0, 0.0)).norm())
            .fold(0.0, f64::max);
        errs.push(e);
    }
    assert!(errs[0] < 1e-5, "{errs:?}");
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((3.5..=4.5).contains(&r), "{errs:?}");
    }
}

#[test]
fn perturbation_has_nominal_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = OdeProvider::with_nodes(80).unwrap();
    let a = random_params(&mut rng);
    let k = build_k(&a);
    let inv = assemble_inverse(&p, &k).unwrap();
    let diff = inv.sub(p.base_inverse()).unwrap();
    assert_eq!(numerical_rank(diff.matrix(), 1e-10).unwrap(), k.rank());
}

#[test]
fn inadmissible_range_is_rejected_with_index() {
    let k = FiniteRankPerturbation::new(
        vec![ExpSum::constant(1, c(1.0, 0.0)), ExpSum::exp1(c(1.0, 0.0), c(1.0, 0.0))],
        OdeModel.ker_mhat_basis(),
        Array2::eye(2),
    )
    .unwrap();
    let p = OdeProvider::with_nodes(20).unwrap();
    match assemble_inverse(&p, &k) {
        Err(Error::Inadmissible { kind, index, .. }) => {
            assert_eq!(kind, "range");
            assert_eq!(index, 1);
        }
        other => panic!("expected rejection, got {other:?}"),
    }
    let k = FiniteRankPerturbation::new(
        OdeModel.ker_lhat_basis(),
        vec![ExpSum::constant(1, c(1.0, 0.0)), ExpSum::exp1(c(1.0, 0.0), c(-1.0, 0.0))],
        Array2::eye(2),
    )
    .unwrap();
    assert!(matches!(
        check_admissible(&OdeModel, &k),
        Err(Error::Inadmissible { kind: "weight", index: 1, .. })
    ));
}

#[test]
fn dependent_factors_are_rejected() {
    let r = vec![
        ExpSum::constant(1, c(1.0, 0.0)),
        ExpSum::constant(1, c(2.0, 0.0)),
    ];
    assert!(matches!(
        FiniteRankPerturbation::new(r, OdeModel.ker_mhat_basis(), Array2::eye(2)),
        Err(Error::Inadmissible { kind: "range", index: 1, .. })
    ));
}

#[test]
fn gamma_annihilates_domain_elements() {
    let p = OdeProvider::with_nodes(200).unwrap();
    let u = p.represent(&cos_pi()).unwrap();
    assert!(gamma_apply(&p, &u).unwrap().max_abs() <= 1e-12);
    let mut errs = Vec::new();
    for n in [100, 200] {
        let q = OdeProvider::with_nodes(n).unwrap();
        let v = q.represent(&cos_pi()).unwrap();
        errs.push(gamma_discrete(&q, &v).unwrap().max_abs());
    }
    assert!(errs[0] < 1e-4 && errs[0] / errs[1] > 3.5, "{errs:?}");
}

#[test]
fn gamma_fixes_kernel_functions() {
    let p = OdeProvider::with_nodes(200).unwrap();
    for f in OdeModel.ker_lhat_basis() {
        let u = p.represent(&f).unwrap();
        let g = gamma_apply(&p, &u).unwrap();
        assert!(g.sub(&u).unwrap().max_abs() <= 1e-12);
        let closed = gamma_closed(&OdeModel, &f).unwrap();
        assert!(closed.sub(&f).unwrap().norm() <= 1e-12);
    }
}

#[test]
fn gamma_closed_needs_finite_kernel() {
    assert!(matches!(
        gamma_closed(&CrModel, &ExpSum::constant(2, c(1.0, 0.0))),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn involution_vanishes() {
    let zero = build_k(&OdeParams::zero());
    assert_eq!(involution_residual(&OdeModel, &zero).unwrap(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..16 {
        let k = build_k(&random_params(&mut rng));
        assert!(involution_residual(&OdeModel, &k).unwrap() <= 1e-10);
    }
    let kcr = build_k_cr(c(1.0, 1.0));
    assert!(involution_residual(&CrModel, &kcr).unwrap() <= 1e-10);
}

#[test]
fn domain_equality_basics() {
    let zero = build_k(&OdeParams::zero());
    assert_eq!(domain_equality_residual(&OdeModel, &zero, 8).unwrap(), 0.0);
    let k = build_k(&ode_a(1.0, 0.0, 0.0, 0.0));
    let r = domain_equality_residual(&OdeModel, &k, 8).unwrap();
    assert!(r > 1.0, "{r}");
    for ar in [0.0, 1.0, -2.0, 0.5] {
        let k = build_k(&match_family_ii(ar).unwrap());
        assert!(domain_equality_residual(&OdeModel, &k, 8).unwrap() <= 1e-9);
    }
    assert!(domain_equality_residual(&OdeModel, &zero, 0).is_err());
}

#[test]
fn domain_equality_basis_size_is_a_parameter() {
    let k = build_k(&ode_a(0.3, 0.0, 0.0, -0.2));
    let v4 = domain_equality_vectors(&OdeModel, &k, 4).unwrap();
    let v12 = domain_equality_vectors(&OdeModel, &k, 12).unwrap();
    assert_eq!(v4.len(), 4);
    assert_eq!(v12.len(), 12);
    assert_eq!(v4[..], v12[..4]);
}

#[test]
fn coupling_condition_on_ode_axes() {
    for (a11, a22) in [(0.0, 0.0), (1.0, 0.0), (0.0, -2.5), (0.7, 0.3)] {
        let k = build_k(&OdeParams::new(c(a11, 0.2), c(0.0, 0.0), c(0.0, 0.0), c(a22, -1.0)));
        assert!(coupling_condition_residual(&k, &OdeModel).unwrap() <= 1e-13);
    }
    let k = build_k(&ode_a(0.0, 1.0, 0.0, 0.0));
    let one = ExpSum::constant(1, c(1.0, 0.0));
    let ex = ExpSum::exp1(c(1.0, 0.0), c(1.0, 0.0));
    let want = 2.0 * ex.norm() * one.norm();
    let got = coupling_condition_residual(&k, &OdeModel).unwrap();
    assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
}

#[test]
fn coupling_condition_vanishes_for_every_cr_parameter() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..32 {
        let a = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        assert!(coupling_condition_residual(&build_k_cr(a), &CrModel).unwrap() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coupling_condition_is_unimodular_invariant(
        re in prop::array::uniform4(-1.0f64..1.0),
        im in prop::array::uniform4(-1.0f64..1.0),
        theta in 0.0f64..(2.0 * PI),
    ) {
        let a = OdeParams::new(c(re[0], im[0]), c(re[1], im[1]), c(re[2], im[2]), c(re[3], im[3]));
        let k = build_k(&a);
        let base = coupling_condition_residual(&k, &OdeModel).unwrap();
        let rot = coupling_condition_residual(&k.scaled(C64::from_polar(1.0, theta)), &OdeModel).unwrap();
        prop_assert!((base - rot).abs() <= 1e-12 * (1.0 + base));
    }
}

fn smooth_f(p: &OdeProvider) -> GridFunction {
    let v = p
        .grid()
        .axis()
        .iter()
        .map(|&x| c((3.0 * x).sin() + 0.5 * (2.0 * x).cos(), 0.3 * x * x))
        .collect();
    GridFunction::new(v, p.basis().clone()).unwrap()
}

#[test]
fn adjoint_domain_residual_spot_checks() {
    let p = OdeProvider::with_nodes(400).unwrap();
    let f = smooth_f(&p);
    let zero = build_k(&OdeParams::zero());
    assert!(adjoint_domain_residual(&p, &zero, &f).unwrap() <= 1e-6);
    let k = build_k(&match_family_ii(1.0).unwrap());
    assert!(adjoint_domain_residual(&p, &k, &f).unwrap() <= 1e-6);
}

#[test]
fn adjoint_domain_residual_negative_control_persists() {
    let k = build_k(&ode_a(1.0, 0.0, 0.0, 0.0));
    let mut r = Vec::new();
    for n in [100, 200, 400] {
        let p = OdeProvider::with_nodes(n).unwrap();
        let one = p.represent(&ExpSum::constant(1, c(1.0, 0.0))).unwrap();
        let one = GridFunction::new(one.values().clone(), p.basis().clone()).unwrap();
        r.push(adjoint_domain_residual(&p, &k, &one).unwrap());
    }
    assert!(r.iter().all(|&v| v > 0.1), "{r:?}");
    assert!((r[2] / r[0] - 1.0).abs() < 0.05, "{r:?}");
}

#[test]
fn report_for_base_extension_is_normal_candidate() {
    let p = OdeProvider::with_nodes(100).unwrap();
    let r = normality_report(&p, &build_k(&OdeParams::zero()), &[100, 200, 400], &Thresholds::default()).unwrap();
    assert_eq!(r.classification, Classification::NormalCandidate);
    assert_eq!(r.commutator_norms.len(), 3);
    assert!(r.commutator_norms.iter().all(|l| l.commutator <= 1e-6));
    assert!(r.negative_control.unwrap().separated);
    let first = r.spectrum[0];
    assert!((first[0] + PI * PI).abs() < 1e-3 && (first[1].abs() - PI).abs() < 1e-3);
}

#[test]
fn report_flags_coupling_condition_violation() {
    let p = OdeProvider::with_nodes(100).unwrap();
    let r = normality_report(&p, &build_k(&ode_a(0.0, 1.0, 0.0, 0.0)), &[100, 200], &Thresholds::default()).unwrap();
    assert!(r.coupling_condition_residual > 0.0);
    assert_eq!(r.classification, Classification::NotNormal);
    assert!(r.notes.iter().any(|n| n.contains("coupling_condition")));
}

#[test]
fn report_for_cr_case_one_is_normal_candidate() {
    let p = CrProvider::with_truncation(8).unwrap();
    let r = normality_report(&p, &build_k_cr(case_one_parameter()), &[8, 16], &Thresholds::default()).unwrap();
    assert_eq!(r.classification, Classification::NormalCandidate);
    assert!(r.commutator_norms[1].commutator < r.commutator_norms[0].commutator);
}

#[test]
fn refinement_verdicts() {
    let th = Thresholds::default();
    let lv = |n, v| CommutatorLevel { n, commutator: v, floor: 1e-12 };
    let (r, _) = refinement_verdict(&[lv(100, 4e-3), lv(200, 1e-3), lv(400, 2.5e-4)], 2.0, &th);
    assert_eq!(r, Refinement::OrderWindow);
    let (r, _) = refinement_verdict(&[lv(100, 4e-3), lv(200, 3.9e-3)], 2.0, &th);
    assert_eq!(r, Refinement::NoDecay);
    let (r, ratios) = refinement_verdict(&[lv(100, 3e-18), lv(200, 2e-18)], 2.0, &th);
    assert_eq!(r, Refinement::Roundoff);
    assert_eq!(ratios.len(), 1);
}

#[test]
fn discrete_and_closed_perturbation_agree() {
    let p = OdeProvider::with_nodes(400).unwrap();
    let k = build_k(&ode_a(0.3, -0.2, 0.5, 0.1));
    let f = ExpSum::exp1(c(1.0, 0.0), c(0.0, 2.0));
    let exact = k.apply(&f).unwrap();
    let disc = k.apply_discrete(&p.represent(&f).unwrap(), &p).unwrap();
    assert!(exact.sub(&disc).unwrap().norm() < 1e-5);
    let m = k.matrix(&p).unwrap();
    let via = m.apply(&p.represent(&f).unwrap()).unwrap();
    let ex = p.represent(&exact).unwrap();
    assert!(linops::norm(&via.sub(&GridFunction::new(ex.values().clone(), p.basis().clone()).unwrap()).unwrap()) < 1e-5);
}

#[test]
fn printed_adjoint_of_k() {
    let a = OdeParams::new(c(0.3, 0.1), c(-0.2, 0.4), c(0.5, -0.3), c(0.1, 0.2));
    let ks = build_k(&a).adjoint();
    let f = ExpSum::exp1(c(1.0, 0.0), c(0.5, 1.0));
    // (a11 + a12 eˣ)∫f + (a21 + a22 eˣ)∫e^{−t}f
    let i1 = f.integral();
    let i2 = f.inner(&ExpSum::exp1(c(1.0, 0.0), c(-1.0, 0.0))).unwrap();
    let want = ExpSum::constant(1, a.a11 * i1 + a.a21 * i2)
        .add(&ExpSum::exp1(a.a12 * i1 + a.a22 * i2, c(1.0, 0.0)))
        .unwrap();
    assert!(ks.apply(&f).unwrap().sub(&want).unwrap().norm() < 1e-15);
}
