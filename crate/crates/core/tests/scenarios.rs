use confluence::scenario::{asymmetric_fixture, symmetric_fixture};
use confluence::{load_scenario, Error, Scenario};

#[test]
fn bundled_files_match_the_fixtures() {
    let sym = Scenario::from_scn_str(include_str!("../../../scenarios/symmetric.scn")).unwrap();
    let asym = Scenario::from_scn_str(include_str!("../../../scenarios/asymmetric.scn")).unwrap();
    assert_eq!(sym, symmetric_fixture());
    assert_eq!(asym, asymmetric_fixture());
}

#[test]
fn missing_file_is_an_error() {
    assert!(load_scenario("/definitely/not/here.scn").is_err());
}

#[test]
fn garbage_reports_a_line() {
    let text = "name = x\nl1 = -1\nwhat is this\n";
    match Scenario::from_scn_str(text) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn broken_stefan_balance_fails_validation() {
    let mut sc = asymmetric_fixture();
    sc.gamma1_plus.coeffs[0] += 0.1;
    assert!(matches!(sc.validate(), Err(Error::Validation(_))));
}
