use std::ffi::CStr;
use std::ptr;

use orlicz_duality_ffi::*;

fn last_error() -> String {
    let p = od_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn binomial_dual_and_primal_agree() {
    unsafe {
        let mut u = ptr::null_mut();
        assert_eq!(od_utility_exponential(1.0, &mut u), OdStatus::Ok);
        let mut m = ptr::null_mut();
        assert_eq!(od_market_binomial(1.0, 2.0, 0.5, 0.75, 1, &mut m), OdStatus::Ok);
        let mut paths = 0usize;
        assert_eq!(od_market_path_count(m, &mut paths), OdStatus::Ok);
        assert_eq!(paths, 2);

        let mut d = ptr::null_mut();
        assert_eq!(od_dual_optimize(u, m, 0.0, &mut d), OdStatus::Ok);
        let mut dv = 0.0;
        assert_eq!(od_dual_value(d, &mut dv), OdStatus::Ok);
        assert!((dv + 0.6814202223120523).abs() < 1e-12);
        let mut q = [0.0; 2];
        let mut len = 0usize;
        assert_eq!(od_dual_measure(d, q.as_mut_ptr(), q.len(), &mut len), OdStatus::Ok);
        assert_eq!(len, 2);
        assert!((q[0] - 1.0 / 3.0).abs() < 1e-10);

        let mut p = ptr::null_mut();
        assert_eq!(od_primal_optimize(u, m, 0.0, f64::NAN, &mut p), OdStatus::Ok);
        let mut pv = 0.0;
        assert_eq!(od_primal_value(p, &mut pv), OdStatus::Ok);
        assert!((pv - dv).abs() < 1e-10);
        let mut h = [0.0; 1];
        assert_eq!(od_primal_strategy(p, h.as_mut_ptr(), 1, &mut len), OdStatus::Ok);
        assert!((h[0] - 6f64.ln() / 1.5).abs() < 1e-9);

        od_primal_free(p);
        od_dual_free(d);
        od_market_free(m);
        od_utility_free(u);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut u = ptr::null_mut();
        assert_eq!(od_utility_exponential(-1.0, &mut u), OdStatus::InvalidInput);
        assert!(u.is_null());
        assert!(last_error().contains("gamma"));

        assert_eq!(od_utility_log_shifted(-2.0, &mut u), OdStatus::Ok);
        let mut m = ptr::null_mut();
        assert_eq!(od_market_binomial(1.0, 2.0, 1.1, 0.5, 1, &mut m), OdStatus::Ok);
        let mut p = ptr::null_mut();
        assert_eq!(od_primal_optimize(u, m, 0.0, f64::NAN, &mut p), OdStatus::Unbounded);
        assert!(last_error().contains("arbitrage"));
        let mut d = ptr::null_mut();
        assert_eq!(od_primal_optimize(u, m, -3.0, f64::NAN, &mut p), OdStatus::Domain);
        assert_eq!(od_dual_optimize(ptr::null(), m, 0.0, &mut d), OdStatus::NullPointer);
        od_market_free(m);
        od_utility_free(u);
        od_utility_free(ptr::null_mut());
    }
}

#[test]
fn small_buffer_reports_length() {
    unsafe {
        let mut u = ptr::null_mut();
        od_utility_exponential(1.0, &mut u);
        let json = c"{\"kind\":\"trinomial\",\"s0\":1,\"factors\":[2,1,0.5],\"probs\":[0.25,0.5,0.25]}";
        let mut m = ptr::null_mut();
        assert_eq!(od_market_from_json(json.as_ptr(), 0, &mut m), OdStatus::Ok);
        let mut d = ptr::null_mut();
        assert_eq!(od_dual_optimize(u, m, 0.0, &mut d), OdStatus::Ok);
        let mut len = 0usize;
        let mut one = [0.0; 1];
        assert_eq!(od_dual_measure(d, one.as_mut_ptr(), 1, &mut len), OdStatus::BufferTooSmall);
        assert_eq!(len, 3);
        let bad = c"{\"kind\":\"binomial\"}";
        let mut m2 = ptr::null_mut();
        assert_eq!(od_market_from_json(bad.as_ptr(), 0, &mut m2), OdStatus::InvalidInput);
        od_dual_free(d);
        od_market_free(m);
        od_utility_free(u);
    }
}

#[test]
fn luxemburg_norm_of_constant() {
    unsafe {
        let mut u = ptr::null_mut();
        od_utility_log_shifted(-2.0, &mut u);
        let v = [1.0, 1.0];
        let p = [0.5, 0.5];
        let mut n = 0.0;
        assert_eq!(od_luxemburg_norm(u, v.as_ptr(), p.as_ptr(), 2, &mut n), OdStatus::Ok);
        let e = std::f64::consts::E;
        assert!((n - e / (2.0 * e - 2.0)).abs() < 1e-9);
        od_utility_free(u);
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(od_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
