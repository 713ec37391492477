use ncpnorm::suite::{run_suite, SuiteConfig, ANCHORS};

#[test]
fn default_suite_passes_and_is_deterministic() {
    let cfg = SuiteConfig::default();
    let a = run_suite(&cfg).unwrap();
    for r in &a.records {
        println!("{:<40} {:>5} {:e} {:e} {:.0}ms {:?}", r.name, r.pass, r.measured, r.tolerance, r.runtime_ms, r.error);
        assert!(ANCHORS.contains(&r.anchor.as_str()));
    }
    assert!(a.all_passed());
    assert_eq!(a.summary.passed + a.summary.failed, a.records.len());
    let mut names: Vec<_> = a.records.iter().map(|r| r.name.clone()).collect();
    names.sort();
    assert_eq!(names, a.records.iter().map(|r| r.name.clone()).collect::<Vec<_>>());

    let b = run_suite(&cfg).unwrap();
    let measured = |d: &ncpnorm::suite::ReportDocument| d.records.iter().map(|r| r.measured.to_bits()).collect::<Vec<_>>();
    assert_eq!(measured(&a), measured(&b));
}
