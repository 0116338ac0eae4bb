//! Acceptance criteria. Each test prints one PASS/FAIL line (written straight
//! to stderr so it shows even when output capture is on) and fails when its
//! criterion does.

use std::io::Write;
use std::sync::LazyLock;

use hyperlattice::suites::AcceptanceSuite;

static SUITE: LazyLock<AcceptanceSuite> = LazyLock::new(AcceptanceSuite::default);

fn check(id: u8) {
    let report = SUITE.run(id);
    let _ = writeln!(std::io::stderr().lock(), "{report}");
    assert!(report.passed, "{report}");
}

#[test]
fn criterion_01_partition_identities() {
    check(1);
}

#[test]
fn criterion_02_class_ii_fourth_cumulant_constant() {
    check(2);
}

#[test]
fn criterion_03_variance_formula_vs_monte_carlo() {
    check(3);
}

#[test]
fn criterion_04_clt_d2_square_integrable() {
    check(4);
}

#[test]
fn criterion_05_clt_d3() {
    check(5);
}

#[test]
fn criterion_06_stable_limit_alpha_1_5() {
    check(6);
}

#[test]
fn criterion_07_class_ii_non_gaussianity() {
    check(7);
}

#[test]
fn criterion_08_stationary_reduction() {
    check(8);
}

#[test]
fn criterion_09_poisson_summation() {
    check(9);
}

#[test]
fn criterion_10_riemann_sum() {
    check(10);
}
