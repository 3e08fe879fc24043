use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use sunbloch_ffi::*;

fn last_error() -> String {
    let p = sb_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn dimer_round_trip() {
    unsafe {
        let params = sb_dimer_params_reference(6);
        let mut model = ptr::null_mut();
        assert_eq!(sb_dimer_model_new(&params, &mut model), SbStatus::Ok);
        assert_eq!(sb_model_levels(model), 6);
        let mut compiled = ptr::null_mut();
        assert_eq!(sb_compile(model, &mut compiled), SbStatus::Ok);
        sb_model_free(model);
        assert_eq!(sb_compiled_dimension(compiled), 35);
        assert!(sb_compiled_nnz(compiled) > 0);

        let mut p = [0.0; 6];
        let mut v = [0.0; 35];
        let dt = params.period / 200.0;
        let status = sb_propagate(compiled, dt, params.period, p.as_mut_ptr(), 6, v.as_mut_ptr(), 35);
        assert_eq!(status, SbStatus::Ok);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(v.iter().any(|&x| x != 0.0));

        let mut small = [0.0; 5];
        let status = sb_propagate(compiled, dt, params.period, small.as_mut_ptr(), 5, ptr::null_mut(), 0);
        assert_eq!(status, SbStatus::BufferTooSmall);
        assert!(last_error().contains("need 6"));

        let status = sb_propagate(compiled, 0.3, 3.0, p.as_mut_ptr(), 6, ptr::null_mut(), 0);
        assert_eq!(status, SbStatus::InvalidArgument);
        sb_compiled_free(compiled);
    }
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(sb_dimer_model_new(ptr::null(), &mut model), SbStatus::NullPointer);
        assert!(model.is_null());
        let mut params = sb_dimer_params_reference(4);
        params.gamma = -1.0;
        assert_eq!(sb_dimer_model_new(&params, &mut model), SbStatus::InvalidArgument);
        assert!(last_error().contains("gamma"));
        params = sb_dimer_params_reference(4);
        params.initial_fock = 4;
        assert_eq!(sb_dimer_model_new(&params, &mut model), SbStatus::InvalidArgument);
        let mut out = ptr::null_mut();
        assert_eq!(sb_compile(ptr::null(), &mut out), SbStatus::NullPointer);
        assert_eq!(sb_model_levels(ptr::null()), 0);
        sb_model_free(ptr::null_mut());
        sb_compiled_free(ptr::null_mut());
    }
}

#[test]
fn structure_counts() {
    let (mut f, mut d) = (0u64, 0u64);
    unsafe {
        assert_eq!(sb_structure_counts(3, &mut f, &mut d), SbStatus::Ok);
        assert_eq!((f, d), (54, 58));
        assert_eq!(sb_structure_counts(1, &mut f, &mut d), SbStatus::InvalidArgument);
    }
}

#[test]
fn model_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "model.type = dimer\nmodel.n = 5\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(sb_model_load(c.as_ptr(), &mut model), SbStatus::Ok);
        assert_eq!(sb_model_levels(model), 5);
        sb_model_free(model);
        let missing = CString::new(dir.path().join("nope.cfg").to_str().unwrap()).unwrap();
        assert_eq!(sb_model_load(missing.as_ptr(), &mut model), SbStatus::Io);
    }
    std::fs::write(&path, "model.type = dimer\n").unwrap();
    unsafe {
        assert_eq!(sb_model_load(c.as_ptr(), &mut model), SbStatus::Config);
    }
    assert!(last_error().contains("model.n"));
}

#[test]
fn status_messages_are_static() {
    let msg = unsafe { CStr::from_ptr(sb_status_message(SbStatus::Cache)) };
    assert_eq!(msg.to_str().unwrap(), "cache integrity failure");
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/sunbloch.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["sb_compile", "sb_propagate", "sb_last_error_message", "SB_STATUS_CACHE"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"sunbloch.h\"\nint f(void) { SbModel *m = 0; SbDimerParams p = sb_dimer_params_reference(4);\n return sb_dimer_model_new(&p, &m) == SB_STATUS_OK; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .output()
        .expect("C compiler available");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
