//! Acceptance gate: one test per criterion, plus the two injected faults
//! that the suite must catch.

use std::time::{Duration, Instant};

use magic_harvest::field_kernel::{RegulatedField, TwoPointFunction, WightmanKernel};
use magic_harvest::phase_space::{root_of_unity, weyl, PhaseSpace};
use magic_harvest::verify::{CriterionReport, Suite};
use num_complex::Complex64;

fn check(id: u8, budget: Duration) {
    let suite = Suite::standard().unwrap();
    let start = Instant::now();
    let report = suite.criterion(id);
    let elapsed = start.elapsed();
    println!("{report} ({:.2} s)", elapsed.as_secs_f64());
    assert!(report.passed, "{report}");
    assert!(elapsed < budget, "criterion {id} took {elapsed:?}, budget {budget:?}");
}

#[test]
fn criterion_1_phase_space_algebra() {
    check(1, Duration::from_secs(5));
}

#[test]
fn criterion_2_stabilizer_zeros() {
    check(2, Duration::from_secs(5));
}

#[test]
fn criterion_3_family_formula() {
    check(3, Duration::from_secs(5));
}

#[test]
fn criterion_4_q_oracle() {
    check(4, Duration::from_secs(30));
}

#[test]
fn criterion_5_beta_oracle() {
    check(5, Duration::from_secs(30));
}

#[test]
fn criterion_6_lambda4_scaling() {
    check(6, Duration::from_secs(5));
}

#[test]
fn criterion_7_mana_curve() {
    check(7, Duration::from_secs(30));
}

#[test]
fn criterion_8_selection_rules() {
    check(8, Duration::from_secs(5));
}

/// Conjugated kernel: `W(tau2, tau1)` where `W(tau1, tau2)` belongs.
struct SwappedField;

struct SwappedKernel(WightmanKernel);

impl TwoPointFunction for SwappedKernel {
    fn value(&self, t1: f64, t2: f64) -> Complex64 {
        self.0.value(t2, t1)
    }

    fn value_separated(&self, t1: f64, t2: f64, sep: f64) -> Complex64 {
        self.0.value_separated(t2, t1, -sep)
    }
}

impl RegulatedField for SwappedField {
    type Kernel = SwappedKernel;

    fn kernel(&self, eps: f64) -> magic_harvest::Result<SwappedKernel> {
        Ok(SwappedKernel(WightmanKernel::new(eps)?))
    }
}

fn expect_failure(report: CriterionReport) {
    println!("mutant: {report}");
    assert!(!report.passed, "mutation survived: {report}");
}

#[test]
fn mutation_kernel_sign_flip_fails_q_oracle() {
    let standard = Suite::standard().unwrap();
    let suite = Suite {
        spaces: standard.spaces,
        field: SwappedField,
        seed: standard.seed,
    };
    expect_failure(suite.criterion(4));
}

#[test]
fn mutation_weyl_phase_error_fails_algebra() {
    let mut suite = Suite::standard().unwrap();
    // w^{+(n+1)/2 a a'} instead of w^{-(n+1)/2 a a'}
    suite.spaces = [3usize, 5, 7]
        .into_iter()
        .map(|n| {
            PhaseSpace::with_weyl(n, |idx| {
                let k = (n as i64 + 1) * idx.a as i64 * idx.a_prime as i64;
                weyl(n, idx).unwrap() * root_of_unity(n, k)
            })
            .unwrap()
        })
        .collect();
    expect_failure(suite.criterion(1));
}

#[test]
fn full_report() {
    let report = Suite::standard().unwrap().run();
    println!("{report}");
    assert!(report.all_passed());
}
