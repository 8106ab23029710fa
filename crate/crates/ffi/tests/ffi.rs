use std::ffi::{CStr, CString};
use std::ptr;

use ordinal_threshold_ffi::*;

fn last_error() -> String {
    let p = ot_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn named(name: &str) -> *mut OtDistribution {
    let name = CString::new(name).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(
        unsafe { ot_distribution_from_name(name.as_ptr(), &mut d) },
        OtStatus::Ok
    );
    assert!(ot_last_error().is_null());
    d
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(ot_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn named_distribution_dimensions() {
    let d = named("O-1/3-3");
    let (mut n, mut k) = (0, 0);
    unsafe {
        assert_eq!(ot_distribution_num_points(d, &mut n), OtStatus::Ok);
        assert_eq!(ot_distribution_num_classes(d, &mut k), OtStatus::Ok);
        ot_distribution_free(d);
    }
    assert_eq!((n, k), (100, 10));
}

#[test]
fn fit_threshold_and_evaluate() {
    let d = named("H-1");
    let method = CString::new("logi-at-o").unwrap();
    let mut f = ptr::null_mut();
    unsafe {
        assert_eq!(ot_fit(d, method.as_ptr(), 2000, &mut f), OtStatus::Ok);
        let mut risk = 0.0;
        assert_eq!(ot_fit_risk(f, &mut risk), OtStatus::Ok);
        assert!(risk.is_finite() && risk > 0.0);

        let mut a = vec![0.0; 100];
        let mut b = vec![0.0; 9];
        assert_eq!(ot_fit_a(f, a.as_mut_ptr(), a.len()), OtStatus::Ok);
        assert_eq!(ot_fit_b(f, b.as_mut_ptr(), b.len()), OtStatus::Ok);
        assert_eq!(b[0], 0.0);
        assert!(b.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(ot_fit_b(f, b.as_mut_ptr(), 8), OtStatus::BufferTooSmall);

        let mut t = vec![0.0; 9];
        let mut dp_risk = 0.0;
        assert_eq!(
            ot_optimal_thresholds(
                d,
                a.as_ptr(),
                a.len(),
                OtTask::Absolute,
                t.as_mut_ptr(),
                t.len(),
                &mut dp_risk
            ),
            OtStatus::Ok
        );
        let (mut err, mut bayes) = (0.0, 0.0);
        assert_eq!(
            ot_approximation_error(d, a.as_ptr(), a.len(), t.as_ptr(), t.len(), OtTask::Absolute, &mut err),
            OtStatus::Ok
        );
        assert_eq!(ot_bayes_error(d, OtTask::Absolute, &mut bayes), OtStatus::Ok);
        assert!((err - dp_risk).abs() < 1e-12);
        assert!(err >= bayes - 1e-9);

        assert_eq!(
            ot_approximation_error(d, a.as_ptr(), 99, t.as_ptr(), t.len(), OtTask::Absolute, &mut err),
            OtStatus::DimensionMismatch
        );
        ot_fit_free(f);
        ot_distribution_free(d);
    }
}

#[test]
fn table_distribution_and_bayes_error() {
    let support = [0.0, 1.0];
    let cpds = [0.7, 0.2, 0.1, 0.1, 0.3, 0.6];
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(
            ot_distribution_new(support.as_ptr(), cpds.as_ptr(), ptr::null(), 2, 3, &mut d),
            OtStatus::Ok
        );
        let mut mze = 0.0;
        assert_eq!(ot_bayes_error(d, OtTask::ZeroOne, &mut mze), OtStatus::Ok);
        assert!((mze - 0.5 * (0.3 + 0.4)).abs() < 1e-15);
        ot_distribution_free(d);

        let bad = [0.5, 0.2, 0.1, 0.1, 0.3, 0.6];
        assert_eq!(
            ot_distribution_new(support.as_ptr(), bad.as_ptr(), ptr::null(), 2, 3, &mut d),
            OtStatus::InvalidArgument
        );
        assert!(last_error().contains("probability"));
        let w = [0.5, 0.6];
        assert_eq!(
            ot_distribution_new(support.as_ptr(), cpds.as_ptr(), w.as_ptr(), 2, 3, &mut d),
            OtStatus::InvalidArgument
        );
    }
}

#[test]
fn surrogate_loss_values() {
    let method = CString::new("hing-it-o").unwrap();
    let b = [0.0, 2.0];
    let mut v = 0.0;
    unsafe {
        // y = 2: φ(a - b₁) + φ(b₂ - a) = (1 - 1)₊ + (1 - 1)₊
        assert_eq!(
            ot_surrogate_loss(method.as_ptr(), 1.0, b.as_ptr(), 2, 2, &mut v),
            OtStatus::Ok
        );
        assert_eq!(v, 0.0);
        assert_eq!(
            ot_surrogate_loss(method.as_ptr(), 1.0, b.as_ptr(), 2, 1, &mut v),
            OtStatus::Ok
        );
        assert_eq!(v, 2.0);
        assert_eq!(
            ot_surrogate_loss(method.as_ptr(), 1.0, b.as_ptr(), 2, 4, &mut v),
            OtStatus::InvalidArgument
        );
    }
}

#[test]
fn errors_are_reported() {
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(ot_distribution_from_name(ptr::null(), &mut d), OtStatus::NullPointer);
        let bad = CString::new("Z-1").unwrap();
        assert_eq!(ot_distribution_from_name(bad.as_ptr(), &mut d), OtStatus::Parse);
        assert!(last_error().contains("Z-1"));
        let invalid = [0xffu8, 0];
        assert_eq!(
            ot_distribution_from_name(invalid.as_ptr().cast(), &mut d),
            OtStatus::InvalidUtf8
        );

        let h = named("H-3");
        let mut f = ptr::null_mut();
        let m = CString::new("logi-zz-o").unwrap();
        assert_eq!(ot_fit(h, m.as_ptr(), 10, &mut f), OtStatus::Parse);
        assert!(f.is_null());
        assert_eq!(ot_fit(ptr::null(), m.as_ptr(), 10, &mut f), OtStatus::NullPointer);
        let mut n = 0;
        assert_eq!(ot_distribution_num_points(h, ptr::null_mut()), OtStatus::NullPointer);
        assert_eq!(ot_distribution_num_points(h, &mut n), OtStatus::Ok);
        assert!(ot_last_error().is_null());
        ot_distribution_free(h);
        ot_distribution_free(ptr::null_mut());
        ot_fit_free(ptr::null_mut());
    }
}
