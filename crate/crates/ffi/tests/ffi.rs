use std::ffi::{CStr, CString};
use std::ptr;

use twobubble_ffi::*;

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    tb_string_free(s);
    out
}

#[test]
fn constants_round_trip() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(tb_config_new(&mut cfg), TbStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(tb_constants_json(cfg, &mut s), TbStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(v["N"], 13);
        assert!((v["C_tilde"].as_f64().unwrap() - 40.379).abs() < 1e-3);
        tb_config_free(cfg);
    }
}

#[test]
fn config_errors_carry_codes() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let text = CString::new("N=13\nbogus=1\n").unwrap();
        assert_eq!(tb_config_parse(text.as_ptr(), &mut cfg), TbStatus::Config);
        assert!(cfg.is_null());
        let msg = take(tb_last_error());
        assert!(msg.contains("bogus"), "{msg}");
        let dup = CString::new("seed=1\nseed=2").unwrap();
        assert_eq!(tb_config_parse(dup.as_ptr(), &mut cfg), TbStatus::Config);
        assert_eq!(tb_config_parse(ptr::null(), &mut cfg), TbStatus::NullPointer);
    }
}

#[test]
fn set_and_reject_small_dimension() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(tb_config_new(&mut cfg), TbStatus::Ok);
        let (k, v) = (CString::new("N").unwrap(), CString::new("11").unwrap());
        assert_eq!(tb_config_set(cfg, k.as_ptr(), v.as_ptr()), TbStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(tb_ode_csv(cfg, &mut s), TbStatus::Config);
        assert!(s.is_null());
        let mut j = ptr::null_mut();
        assert_eq!(tb_config_json(cfg, &mut j), TbStatus::Ok);
        assert!(take(j).contains("\"N\":11"));
        tb_config_free(cfg);
    }
}

#[test]
fn grid_handle() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(tb_grid_new(13, 200.0, 2048, 1.0, &mut g), TbStatus::Ok);
        let n = tb_grid_len(g);
        assert_eq!(n, 2048);
        let mut buf = vec![0.0; n];
        assert_eq!(tb_grid_nodes(g, buf.as_mut_ptr(), n), TbStatus::Ok);
        assert!(buf.windows(2).all(|w| w[0] < w[1]));
        let mut r = 0.0;
        assert_eq!(tb_grid_w_residual(g, 0.01, 50.0, &mut r), TbStatus::Ok);
        assert!(r < 1e-5);
        tb_grid_free(g);
        assert_eq!(tb_grid_new(13, -1.0, 2048, 1.0, &mut g), TbStatus::Config);
        assert_eq!(tb_grid_len(ptr::null()), 0);
    }
}

#[test]
fn header_declares_the_interface() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/twobubble.h")).unwrap();
    for name in ["tb_config_new", "tb_check_jsonl", "tb_string_free", "tb_simulate", "TB_STATUS_CONFIG", "typedef struct TbConfig"] {
        assert!(h.contains(name), "{name}");
    }
}
