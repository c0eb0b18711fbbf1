use cyclebound::harness::{self, Figure, SweepSpec, CSV_HEADER, EXIT_OK};
use cyclebound::model::{Case, Params};
use cyclebound::simulator::SimConfig;
use proptest::prelude::*;

#[test]
fn csv_is_identical_across_worker_counts() {
    let mut spec = SweepSpec::grid(&[0.02, 0.05], &[0.01, 0.05], &[0.1, 1.0, 3.0]);
    spec.jobs = 1;
    let one = harness::run_sweep(&spec).unwrap().to_csv();
    spec.jobs = 8;
    let eight = harness::run_sweep(&spec).unwrap().to_csv();
    assert_eq!(one, eight);
    assert_eq!(one.lines().count(), 13);
}

#[test]
fn rows_sorted_by_a_lambda_m() {
    let spec = SweepSpec::grid(&[0.05, 0.01], &[0.05, 0.01], &[2.0, 0.3]);
    let rep = harness::run_sweep(&spec).unwrap();
    let keys: Vec<(f64, f64, f64)> = rep.rows.iter().map(|r| (r.a, r.lambda, r.m)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(keys, sorted);
}

#[test]
fn branch_b_rows_pass() {
    let spec = SweepSpec::grid(&[0.1], &[0.01], &[0.3, 1.0, 3.0]);
    let rep = harness::run_sweep(&spec).unwrap();
    assert!(rep.rows.iter().all(|r| r.proven && r.pass), "{rep:?}");
    assert_eq!(rep.exit_code(), EXIT_OK);
}

#[test]
fn forced_hopf_side_rows_are_unproven() {
    let mut spec = SweepSpec::grid(&[0.1], &[0.1], &[0.3, 1.0]);
    spec.force = true;
    let rep = harness::run_sweep(&spec).unwrap();
    assert_eq!(rep.rows.len(), 2);
    assert!(rep.rows.iter().all(|r| !r.proven && r.bounds.is_some()));
    assert_eq!(rep.summary().proven_rows, 0);
}

#[test]
fn failing_points_do_not_abort() {
    // 2λ + a > 1 has no cycle
    let mut spec = SweepSpec::grid(&[0.05, 0.95], &[0.05], &[1.0]);
    spec.force = true;
    let rep = harness::run_sweep(&spec).unwrap();
    assert_eq!(rep.rows.len(), 2);
    assert!(rep.rows[0].pass);
    assert!(rep.rows[1].error.is_some());
    let line = rep.to_csv().lines().nth(2).unwrap().to_string();
    assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
}

#[test]
fn figure_files_have_fifty_points() {
    let dir = tempfile::tempdir().unwrap();
    let files = harness::emit_figures_for(
        &[Figure::Fig2, Figure::Fig5],
        &[(0.02, 0.02)],
        dir.path(),
        &SimConfig::default(),
    )
    .unwrap();
    assert_eq!(files.len(), 2);
    for f in files {
        let text = std::fs::read_to_string(f).unwrap();
        assert_eq!(text.lines().count(), 51);
    }
}

#[test]
fn proofcheck_case_a_all_pass() {
    let rep = harness::proof_spotchecks(Case::A);
    assert_eq!(rep.checks.len(), 7);
    for c in &rep.checks {
        assert!(c.margin.is_finite() && !c.argmin.is_empty(), "{c:?}");
        assert!(c.pass, "{c:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lemma1_signs(a in 0.0f64..0.5, l in 0.0f64..0.999, m in 0.0f64..10.0) {
        let (c0, sum) = harness::lemma1_coefficients(&Params::limit(a, l, m).unwrap());
        prop_assert!(c0 < 0.0);
        prop_assert!(sum <= 0.0);
    }

    #[test]
    fn random_star_star_points_pass(a in 0.005f64..0.05, l in 0.005f64..0.05, lm in -2.0f64..0.7) {
        let spec = SweepSpec::grid(&[a], &[l], &[10f64.powf(lm)]);
        let rep = harness::run_sweep(&spec).unwrap();
        let r = &rep.rows[0];
        prop_assert!(r.pass, "{:?}", r);
    }
}
