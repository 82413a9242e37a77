//! The acceptance criteria that are known not to hold in full, asserted as
//! stated. Run with `cargo test -- --ignored`.

mod common;

#[test]
#[ignore = "the erfc lower envelope fails for δ ∈ {0.05, 0.1} at small x"]
fn lemma_suite_strict() {
    let v = common::c7();
    assert!(v.pass, "{}", v.detail);
}

#[test]
#[ignore = "spike-and-slab posterior ball mass stays below 0.9 on this grid"]
fn suboptimality_trend_strict() {
    let v = common::c9();
    assert!(v.pass, "{}", v.detail);
}

#[test]
fn small_delta_envelope_failure_is_confined_to_small_x() {
    for d in [0.05, 0.1] {
        let s = common::erfc_scan(d);
        assert!(s.upper_ok);
        assert!(s.last_lower_failure.is_some_and(|x| x < 20.0), "δ={d}: {:?}", s.last_lower_failure);
    }
    assert!(common::erfc_scan(0.5).lower_ok);
}
