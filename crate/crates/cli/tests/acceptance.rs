//! Runs all twelve acceptance criteria at their stated scale and prints one
//! line per criterion.

use grid_entropy::verify::{run, VerifyOptions, CRITERIA};

#[test]
fn acceptance_criteria() {
    let report = run(&VerifyOptions::default());
    assert_eq!(report.criteria.len(), usize::from(CRITERIA));
    for c in &report.criteria {
        println!("criterion {}", c.line());
    }
    let failed: Vec<u8> = report.criteria.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}\n{}", report.table());
}
