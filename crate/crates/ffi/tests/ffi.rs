use std::ffi::CStr;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::ptr;

use dcone_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(dcone_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn linear_solve_and_certificate() {
    let mut lin = DconeLinear::default();
    assert_eq!(unsafe { dcone_linear_solve(&mut lin) }, DconeStatus::Ok);
    assert!(lin.fold_length > 2.42 && lin.fold_length < 2.43);
    assert_eq!(lin.fold_length, 2.0 * lin.s_hat);

    let mut cert = DconeCertificate::default();
    assert_eq!(unsafe { dcone_certify(&mut cert) }, DconeStatus::Ok);
    assert!(cert.passed);
    assert!(cert.one_fold_energy <= 67.4 && cert.two_fold_energy >= 80.0);
}

#[test]
fn null_outputs_are_reported() {
    assert_eq!(unsafe { dcone_linear_solve(ptr::null_mut()) }, DconeStatus::NullPointer);
    assert!(last_error().contains("out"));
    let mut x = 0.0;
    assert_eq!(unsafe { dcone_limit_energy(ptr::null(), 4, &mut x) }, DconeStatus::NullPointer);
    assert_eq!(unsafe { dcone_solution_len(ptr::null()) }, 0);
    assert!(unsafe { dcone_solution_energy(ptr::null()) }.is_nan());
    unsafe {
        dcone_solution_free(ptr::null_mut());
        dcone_recovery_free(ptr::null_mut());
        dcone_string_free(ptr::null_mut());
    }
}

#[test]
fn elastica_handle_round_trip() {
    let mut sol = ptr::null_mut();
    let st = unsafe { dcone_elastica_solve(0.1, 512, DconeInit::OneBump, &mut sol) };
    assert_eq!(st, DconeStatus::Ok, "{}", last_error());
    unsafe {
        assert!(dcone_solution_converged(sol));
        assert_eq!(dcone_solution_lift_count(sol), 1);
        let n = dcone_solution_len(sol);
        assert_eq!(n, 512);
        let mut alpha = vec![0.0; n];
        assert_eq!(dcone_solution_alpha(sol, alpha.as_mut_ptr(), n), DconeStatus::Ok);
        assert!(alpha.iter().all(|&a| a >= 0.1));
        assert_eq!(dcone_solution_alpha(sol, alpha.as_mut_ptr(), n - 1), DconeStatus::InvalidArgument);

        let mut json = ptr::null_mut();
        assert_eq!(dcone_solution_report_json(sol, &mut json), DconeStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        dcone_string_free(json);
        let report = dcone_core::elastica::SolveReport::from_json(&text).unwrap();
        assert_eq!(report.final_energy, dcone_solution_energy(sol));
        dcone_solution_free(sol);
    }
}

#[test]
fn regime_error_leaves_no_handle() {
    let mut sol = ptr::null_mut();
    let st = unsafe { dcone_elastica_solve(0.9, 512, DconeInit::OneBump, &mut sol) };
    assert_eq!(st, DconeStatus::Regime);
    assert!(sol.is_null());
    assert!(last_error().contains("0.9"));
}

fn equator(n: usize) -> Vec<f64> {
    (0..n)
        .flat_map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            [t.cos(), t.sin(), 0.0]
        })
        .collect()
}

#[test]
fn limit_energy_and_recovery_of_the_equator() {
    let pts = equator(256);
    let mut e0 = f64::NAN;
    assert_eq!(unsafe { dcone_limit_energy(pts.as_ptr(), 256, &mut e0) }, DconeStatus::Ok);
    assert!(e0.abs() < 1e-12, "{e0}");

    let hs = [1e-2, 1e-3];
    let mut t = ptr::null_mut();
    let st = unsafe { dcone_recovery(pts.as_ptr(), 256, hs.as_ptr(), 2, &mut t) };
    assert_eq!(st, DconeStatus::Ok, "{}", last_error());
    unsafe {
        assert!((dcone_recovery_slope(t) - 1.0).abs() < 0.15);
        let a = dcone_recovery_coefficient(t);
        let mut gaps = [0.0; 2];
        assert_eq!(dcone_recovery_gaps(t, gaps.as_mut_ptr(), 2), DconeStatus::Ok);
        for (g, h) in gaps.iter().zip(hs) {
            assert!((g * h.ln().abs() - a).abs() < 1e-6 * a);
        }
        dcone_recovery_free(t);
    }

    let half: Vec<f64> = pts.iter().map(|x| 0.5 * x).collect();
    assert_eq!(unsafe { dcone_limit_energy(half.as_ptr(), 256, &mut e0) }, DconeStatus::InvalidCurve);
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(dcone_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/dcone.h")).unwrap();
    for name in [
        "dcone_linear_solve",
        "dcone_elastica_solve",
        "dcone_solution_free",
        "dcone_recovery",
        "dcone_last_error",
        "DCONE_STATUS_REGIME = 3",
        "typedef struct DconeSolution DconeSolution",
    ] {
        assert!(header.contains(name), "{name}");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"dcone.h\"\n\
         int main(void) {\n\
           DconeSolution *s = NULL;\n\
           DconeStatus st = dcone_elastica_solve(0.05, 1024, DCONE_INIT_ONE_BUMP, &s);\n\
           if (st == DCONE_STATUS_OK) dcone_solution_free(s);\n\
           return (int)st;\n\
         }\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .output()
        .expect("a C compiler on PATH");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
