use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_confluence"));
    c.env("CONFLUENCE_THREADS", "1");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_with_three() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(3));
    assert_eq!(run(&["fronts"]).status.code(), Some(3));
    assert_eq!(run(&["verify", "--scenario", "x.scn", "--sum-rule", "nonsense"]).status.code(), Some(3));
}

#[test]
fn missing_scenario_is_not_a_crash() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["fronts", "--scenario", "/no/such/file.scn", "--out", out.path().to_str().unwrap()]);
    let code = o.status.code().unwrap();
    assert!(code == 3 || code == 4, "{code}");
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn malformed_scenario_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scn");
    fs::write(&bad, "name = x\nthis is not a key value pair\n").unwrap();
    let o = run(&["fronts", "--scenario", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn fronts_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("asymmetric.scn");
    let o = run(&["fronts", "--scenario", sc.to_str().unwrap(), "--nt", "50", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("fronts.csv");
    assert_eq!(header(&csv), "t,tau,eta,beta,rho,phi1,phi2,phi1_t,phi2_t");
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 51);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("command = fronts"));
    assert!(manifest.contains("output = fronts.csv sha256:"));
}

#[test]
fn kernel_dump_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["kernels", "dump", "--eta-max", "5", "--nodes", "20", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        header(&dir.path().join("kernels.csv")),
        "eta,c_hat,d_hat,b_omega,bz_omega,c_omega,b_tilde,b_dot00,bz_dot00,beta"
    );
}

#[test]
fn field_u_grid_shape() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("symmetric.scn");
    let o = run(&[
        "field", "u", "--scenario", sc.to_str().unwrap(), "--nx", "11", "--nt", "3", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let body = fs::read_to_string(dir.path().join("field_u.csv")).unwrap();
    assert_eq!(body.lines().next().unwrap(), "t,x,u,u_t,u_x");
    assert_eq!(body.lines().count(), 1 + 11 * 3);
}

#[test]
fn pde_run_writes_fields_and_fronts() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("symmetric.scn");
    let o = run(&["pde", "--scenario", sc.to_str().unwrap(), "--epsilon", "0.1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&dir.path().join("fd_fields.csv")), "t,x,u,theta");
    assert_eq!(header(&dir.path().join("fd_fronts.csv")), "t,count,front1,front2");
}

#[test]
fn verify_is_byte_for_byte_repeatable() {
    let sc = scenario("asymmetric.scn");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&[
            "verify", "--scenario", sc.to_str().unwrap(), "--ladder", "0.1,0.07,0.05,0.035", "--times", "2", "--out",
            dir.path().to_str().unwrap(),
        ]);
        let code = o.status.code().unwrap();
        assert!(code == 0 || code == 2, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(header(&dir.path().join("residuals.csv")), "functional,test_fn,t,epsilon,value");
        assert_eq!(
            header(&dir.path().join("report.csv")),
            "slope5,slope5_se,slope6,slope6_se,mu_fit,v2_max,gap_slope,gap_slope_se,pass5,pass6,pass_v2,pass_gap"
        );
        let files: Vec<Vec<u8>> = ["residuals.csv", "ladder.csv", "report.csv", "manifest.txt"]
            .iter()
            .map(|f| fs::read(dir.path().join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0][..3], outputs[1][..3]);
}
