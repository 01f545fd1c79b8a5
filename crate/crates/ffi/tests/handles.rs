use std::ffi::{CStr, CString};
use std::ptr;

use hypercross_ffi::*;

fn last_error() -> String {
    let p = hc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn rat(num: i64, den: i64) -> HcRational {
    HcRational { num, den }
}

#[test]
fn tree_round_trip_through_json() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(hc_tree_random(6, 3, &mut t), HcStatus::Ok);
        let mut n = 0;
        assert_eq!(hc_tree_leaf_count(t, &mut n), HcStatus::Ok);
        assert_eq!(n, 6);
        let mut json = ptr::null_mut();
        assert_eq!(hc_tree_to_json(t, &mut json), HcStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(hc_tree_from_json(json, &mut back), HcStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(hc_tree_to_json(back, &mut again), HcStatus::Ok);
        assert_eq!(CStr::from_ptr(json), CStr::from_ptr(again));
        hc_string_free(json);
        hc_string_free(again);
        hc_tree_free(t);
        hc_tree_free(back);
    }
}

#[test]
fn h_tree_distances_and_table() {
    let json = CString::new(
        r#"{"nodes":["a","b","c","d","u","v"],
            "edges":[["a","u","1"],["b","u","1"],["u","v","2"],["v","c","1"],["v","d","1"]],
            "leaves":["a","b","c","d"]}"#,
    )
    .unwrap();
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(hc_tree_from_json(json.as_ptr(), &mut t), HcStatus::Ok);
        let mut d = rat(0, 1);
        let (a, c) = (CString::new("a").unwrap(), CString::new("c").unwrap());
        assert_eq!(hc_tree_distance(t, a.as_ptr(), c.as_ptr(), &mut d), HcStatus::Ok);
        assert_eq!(d, rat(4, 1));
        let mut tbl = ptr::null_mut();
        assert_eq!(hc_tree_leaf_table(t, &mut tbl), HcStatus::Ok);
        let mut v = rat(0, 1);
        let mut inf = true;
        assert_eq!(hc_table_value(tbl, 0, 1, 2, 3, &mut v, &mut inf), HcStatus::Ok);
        assert!(!inf);
        assert_eq!(v, rat(2, 1));
        assert_eq!(hc_table_value(tbl, 0, 2, 1, 3, &mut v, &mut inf), HcStatus::Ok);
        assert_eq!(v, rat(0, 1));
        let mut k = rat(1, 1);
        assert_eq!(hc_table_hyperbolicity(tbl, &mut k), HcStatus::Ok);
        assert_eq!(k, rat(0, 1));
        let mut fitted = ptr::null_mut();
        let mut dev = rat(1, 1);
        assert_eq!(hc_table_fit(tbl, &mut fitted, &mut dev), HcStatus::Ok);
        assert_eq!(dev, rat(0, 1));
        hc_tree_free(fitted);
        hc_table_free(tbl);
        hc_tree_free(t);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(hc_tree_from_json(ptr::null(), &mut t), HcStatus::NullPointer);
        assert!(last_error().contains("json"));
        let bad = CString::new("{\"nodes\": [").unwrap();
        assert_eq!(hc_tree_from_json(bad.as_ptr(), &mut t), HcStatus::InvalidInput);
        assert!(last_error().contains("line 1"));
        assert_eq!(hc_tree_random(1, 0, &mut t), HcStatus::InvalidInput);
        let mut n = 0;
        assert_eq!(hc_tree_leaf_count(ptr::null(), &mut n), HcStatus::NullPointer);
        assert_eq!(hc_tree_random(4, 0, &mut t), HcStatus::Ok);
        assert!(hc_last_error().is_null());
        let (x, y) = (CString::new("l0").unwrap(), CString::new("nowhere").unwrap());
        let mut d = rat(0, 1);
        assert_eq!(hc_tree_distance(t, x.as_ptr(), y.as_ptr(), &mut d), HcStatus::InvalidInput);
        assert!(last_error().contains("nowhere"));
        let invalid = [0xffu8, 0];
        assert_eq!(
            hc_tree_distance(t, invalid.as_ptr().cast(), x.as_ptr(), &mut d),
            HcStatus::InvalidUtf8
        );
        let mut tbl = ptr::null_mut();
        assert_eq!(hc_tree_leaf_table(t, &mut tbl), HcStatus::Ok);
        let mut inf = false;
        assert_eq!(hc_table_value(tbl, 0, 1, 2, 9, &mut d, &mut inf), HcStatus::InvalidInput);
        hc_table_free(tbl);
        hc_tree_free(t);
        hc_tree_free(ptr::null_mut());
        hc_table_free(ptr::null_mut());
        hc_string_free(ptr::null_mut());
    }
}

#[test]
fn infinite_entries_are_flagged() {
    let json = CString::new(r#"{"ground":["a","b","c","d"],"entries":[["a","b","c","d","inf"]]}"#).unwrap();
    unsafe {
        let mut tbl = ptr::null_mut();
        let s = hc_table_from_json(json.as_ptr(), &mut tbl);
        if s != HcStatus::Ok {
            panic!("{}", last_error());
        }
        let mut v = rat(7, 1);
        let mut inf = false;
        assert_eq!(hc_table_value(tbl, 0, 1, 2, 3, &mut v, &mut inf), HcStatus::Ok);
        assert!(inf);
        assert_eq!(v, rat(7, 1));
        hc_table_free(tbl);
    }
}

#[test]
fn suites_and_finite_groups() {
    unsafe {
        let name = CString::new("finite-sharp").unwrap();
        let mut report = ptr::null_mut();
        let mut pass = false;
        assert_eq!(hc_suite_run(name.as_ptr(), 7, &mut report, &mut pass), HcStatus::Ok);
        assert!(pass);
        let text = CStr::from_ptr(report).to_str().unwrap().to_owned();
        hc_string_free(report);
        assert_eq!(text.lines().count(), 9);
        let unknown = CString::new("nope").unwrap();
        assert_eq!(hc_suite_run(unknown.as_ptr(), 7, &mut report, &mut pass), HcStatus::InvalidInput);
        let mut sharp = false;
        assert_eq!(hc_pgl2_sharp(5, 3, &mut sharp), HcStatus::Ok);
        assert!(sharp);
        assert_eq!(hc_pgl2_sharp(5, 2, &mut sharp), HcStatus::Ok);
        assert!(!sharp);
        assert_eq!(hc_pgl2_sharp(6, 3, &mut sharp), HcStatus::InvalidInput);
        assert!(CStr::from_ptr(hc_version()).to_str().unwrap().starts_with("0."));
    }
}
