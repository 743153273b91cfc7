use warpmass::suite::{criterion_count, run_criterion, SuiteOptions};

#[test]
fn acceptance_criteria() {
    let opts = SuiteOptions::default();
    let mut failed = Vec::new();
    for id in 1..=criterion_count() {
        let result = run_criterion(id, &opts);
        println!("{}", result.line());
        if !result.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
