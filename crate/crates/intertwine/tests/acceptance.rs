//! Acceptance suite: each test runs one criterion of the certificate batch
//! and prints its one-line verdict. `cargo test --test acceptance` (add
//! `-- --nocapture` to see the per-criterion details even on success).

use intertwine::selftest;

fn run(result: selftest::CriterionResult) {
    println!("{}", result.line());
    assert!(result.passed, "{}", result.line());
}

#[test]
fn criterion_1_exact_spectral_certificates() {
    run(selftest::criterion_1());
}

#[test]
fn criterion_2_exact_intertwining_certificates() {
    run(selftest::criterion_2());
}

#[test]
fn criterion_3_feasibility_boundaries() {
    run(selftest::criterion_3());
}

#[test]
fn criterion_4_triviality_certificates() {
    run(selftest::criterion_4());
}

#[test]
fn criterion_5_misaligned_kernel_is_rejected() {
    run(selftest::criterion_5());
}

#[test]
fn criterion_6_hypoexponential_law() {
    run(selftest::criterion_6());
}

#[test]
fn criterion_7_coupling_contract() {
    run(selftest::criterion_7());
}

#[test]
fn criterion_8_convergence_bound_chain() {
    run(selftest::criterion_8());
}

#[test]
fn criterion_9_determinism() {
    run(selftest::criterion_9());
}
