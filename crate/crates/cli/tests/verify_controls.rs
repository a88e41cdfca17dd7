//! Controls for the acceptance suite itself: a corrupted solver must be
//! caught, and tightened tolerances must separate exact checks from
//! extrapolated ones.

use grid_entropy::verify::{run, VerifyOptions};
use grid_entropy_core::prokhorov::FlowProblem;

fn shortchanged(p: &FlowProblem) -> f64 {
    p.max_flow() * 0.999
}

#[test]
fn corrupted_flow_fails_the_oracle_criterion() {
    let opts = VerifyOptions {
        flow: shortchanged,
        only: Some(vec![1]),
        ..VerifyOptions::default()
    };
    let report = run(&opts);
    assert!(!report.get(1).unwrap().pass, "{}", report.table());

    let clean = run(&VerifyOptions {
        only: Some(vec![1]),
        ..VerifyOptions::default()
    });
    assert!(clean.get(1).unwrap().pass);
}

#[test]
fn tightened_tolerances_fail_only_extrapolations() {
    let opts = VerifyOptions {
        tolerance_scale: 0.01,
        only: Some(vec![1, 2, 3, 4, 7, 8, 12]),
        ..VerifyOptions::default()
    };
    let report = run(&opts);
    println!("{}", report.table());
    for id in [1, 2, 3, 4, 8] {
        assert!(report.get(id).unwrap().pass, "exact criterion {id} failed");
    }
    for id in [7, 12] {
        assert!(!report.get(id).unwrap().pass, "extrapolated criterion {id} still passed");
    }
}
