use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use regge_ics_ffi::*;

/// S(J) = (J - z)/(J - p) sampled at J = 0..n-1.
fn rational(z: RiComplex, p: RiComplex, n: usize) -> Vec<RiComplex> {
    (0..n)
        .map(|j| {
            let j = j as f64;
            let (nr, ni) = (j - z.re, -z.im);
            let (dr, di) = (j - p.re, -p.im);
            let d2 = dr * dr + di * di;
            RiComplex {
                re: (nr * dr + ni * di) / d2,
                im: (ni * dr - nr * di) / d2,
            }
        })
        .collect()
}

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        ri_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

/// Plain interpolant: phase passes would make exact rational data non-rational.
fn fit(s: &[RiComplex]) -> *mut RiModel {
    let opts = RiFitOptions { niter: 0, ..ri_fit_options_default(s.len()) };
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ri_model_fit(s.as_ptr(), s.len(), &opts, &mut m) }, RiStatus::Ok, "{}", last_error());
    assert!(!m.is_null());
    m
}

#[test]
fn recovers_a_single_pole_and_its_residue() {
    let z = RiComplex { re: 3.0, im: -0.7 };
    let p = RiComplex { re: 4.5, im: 0.3 };
    let m = fit(&rational(z, p, 12));
    unsafe {
        let mut resid = f64::NAN;
        assert_eq!(ri_model_fit_residual(m, &mut resid), RiStatus::Ok);
        assert!(resid < 1e-10, "{resid}");

        let mut n = 0;
        assert_eq!(ri_model_pole_count(m, &mut n), RiStatus::Ok);
        let mut found = None;
        for i in 0..n {
            let mut q = RiComplex::default();
            assert_eq!(ri_model_pole(m, i, &mut q), RiStatus::Ok);
            if (q.re - p.re).hypot(q.im - p.im) < 1e-8 {
                found = Some(i);
            }
        }
        let i = found.expect("true pole recovered");
        // Res (J - z)/(J - p) at p is p - z.
        let mut r = RiComplex::default();
        assert_eq!(ri_model_residue(m, i, &mut r), RiStatus::Ok);
        assert!((r.re - (p.re - z.re)).hypot(r.im - (p.im - z.im)) < 1e-7, "{r:?}");

        let mut v = RiComplex::default();
        assert_eq!(ri_model_eval(m, RiComplex { re: 5.0, im: 0.0 }, &mut v), RiStatus::Ok);
        let want = rational(z, p, 6)[5];
        assert!((v.re - want.re).hypot(v.im - want.im) < 1e-10);
        ri_model_free(m);
    }
}

#[test]
fn null_and_range_errors_set_a_message() {
    let m = fit(&rational(RiComplex { re: 1.0, im: 1.0 }, RiComplex { re: 2.0, im: 0.5 }, 10));
    unsafe {
        let mut n = 0;
        assert_eq!(ri_model_pole_count(ptr::null(), &mut n), RiStatus::NullPointer);
        assert!(last_error().contains("model"));
        assert_eq!(ri_model_pole_count(m, ptr::null_mut()), RiStatus::NullPointer);

        ri_model_pole_count(m, &mut n);
        let mut q = RiComplex::default();
        assert_eq!(ri_model_pole(m, n, &mut q), RiStatus::OutOfRange);
        assert!(last_error().contains("out of range"));

        assert_eq!(ri_model_pole_count(m, &mut n), RiStatus::Ok);
        assert_eq!(ri_last_error(ptr::null_mut(), 0), 0);
        ri_model_free(m);
        ri_model_free(ptr::null_mut());
    }
}

#[test]
fn too_few_values_is_invalid() {
    let s = rational(RiComplex { re: 1.0, im: 1.0 }, RiComplex { re: 2.0, im: 0.5 }, 3);
    let opts = ri_fit_options_default(s.len());
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ri_model_fit(s.as_ptr(), s.len(), &opts, &mut m) }, RiStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn shell_row_matches_the_library() {
    let p = regge_ics::shell_model::ShellModelParams::bound_example();
    let c = RiShellParams { r: p.r, d: p.d, v_well: p.v_well, omega_delta: p.omega_delta, mu: p.mu };
    let mut out = vec![RiComplex::default(); 21];
    assert_eq!(unsafe { ri_shell_s_matrix(&c, 30.0, out.as_mut_ptr(), out.len()) }, RiStatus::Ok);
    let row = regge_ics::shell_model::s_matrix_row(&p, 30.0, 20).unwrap();
    for (a, b) in out.iter().zip(&row) {
        assert_eq!((a.re, a.im), (b.re, b.im));
        // Unitary for a single open channel.
        assert!((a.re.hypot(a.im) - 1.0).abs() < 1e-12);
    }
    assert_eq!(unsafe { ri_shell_s_matrix(&c, -1.0, out.as_mut_ptr(), out.len()) }, RiStatus::InvalidArgument);
}

fn compiles_with(compiler: &str, lang: &str) {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use_header.c");
    std::fs::write(
        &src,
        "#include \"regge_ics.h\"\n\
         int main(void) {\n\
           RiFitOptions o = ri_fit_options_default(10);\n\
           RiModel *m = NULL;\n\
           RiStatus s = ri_model_fit(NULL, 0, &o, &m);\n\
           ri_model_free(m);\n\
           return s == RI_STATUS_OK;\n\
         }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = Command::new(compiler)
        .args(["-x", lang, "-fsyntax-only", "-Wall", "-Werror", "-I", include])
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "{compiler} rejected the header"),
        Err(e) => eprintln!("skipping: {compiler} unavailable ({e})"),
    }
}

#[test]
fn header_is_valid_c_and_cpp() {
    compiles_with("cc", "c");
    compiles_with("c++", "c++");
}
