use sekit_core::{dilation_invariants, render_report, CorrMatrix};

fn check(rows: &[&[u64]], golden: &str) {
    let report = dilation_invariants(&CorrMatrix::from_rows(rows)).unwrap();
    assert_eq!(render_report(&report), golden);
}

#[test]
fn full_two_shift_report() {
    check(&[&[2]], include_str!("golden/two.txt"));
}

#[test]
fn golden_mean_report() {
    check(&[&[1, 1], &[1, 0]], include_str!("golden/golden_mean.txt"));
}

#[test]
fn identity_report() {
    check(&[&[1, 0], &[0, 1]], include_str!("golden/identity2.txt"));
}

#[test]
fn degenerate_report_marks_k_theory_absent() {
    let report = dilation_invariants(&CorrMatrix::from_rows(&[&[1, 0], &[1, 0]])).unwrap();
    let text = render_report(&report);
    assert!(text.contains("regular: false\nfull: false\nnondegenerate: true\n"));
    assert!(text.contains("k0: absent\nk1_rank: absent\n"));
}
