use std::ffi::{c_char, CStr, CString};
use std::ptr;

use bairelab_ffi::*;
use serde_json::Value;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> Value {
    assert!(!s.is_null());
    let v = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
    bl_string_free(s);
    v
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bl_last_error_message()) }
        .to_str()
        .unwrap()
        .to_string()
}

#[test]
fn tree_round_trip() {
    unsafe {
        let mut tree = ptr::null_mut();
        assert_eq!(bl_tree_generate_full_kary(2, 3, &mut tree), BlStatus::Ok);
        let mut n = 0usize;
        assert_eq!(bl_tree_node_count(tree, &mut n), BlStatus::Ok);
        assert_eq!(n, 15);
        let mut rank = 0usize;
        assert_eq!(bl_tree_order_index(tree, &mut rank), BlStatus::Ok);
        assert_eq!(rank, 4);

        let mut json = ptr::null_mut();
        assert_eq!(bl_tree_to_json(tree, &mut json), BlStatus::Ok);
        let text = CString::new(CStr::from_ptr(json).to_bytes()).unwrap();
        bl_string_free(json);
        let mut again = ptr::null_mut();
        assert_eq!(bl_tree_from_json(text.as_ptr(), &mut again), BlStatus::Ok);
        bl_tree_node_count(again, &mut n);
        assert_eq!(n, 15);
        bl_tree_free(again);
        bl_tree_free(tree);
    }
}

#[test]
fn norms_match_oracle() {
    unsafe {
        let mut tree = ptr::null_mut();
        assert_eq!(bl_tree_generate_spine(2, &mut tree), BlStatus::Ok);
        let doc = c(r#"{"entries":[{"node":[0],"coef":"3/4"},{"node":[0,0],"coef":"1"}]}"#);
        let mut x = ptr::null_mut();
        assert_eq!(
            bl_vector_from_json(doc.as_ptr(), tree, &mut x),
            BlStatus::Ok
        );
        for (basis, p) in [("l1", "2"), ("l2", "1"), ("c0", "3/2"), ("l1", "zero")] {
            let (basis, p) = (c(basis), c(p));
            let mut fast = ptr::null_mut();
            assert_eq!(
                bl_baire_norm(x, basis.as_ptr(), p.as_ptr(), 1, &mut fast),
                BlStatus::Ok
            );
            let mut slow = ptr::null_mut();
            assert_eq!(
                bl_baire_norm_oracle(x, basis.as_ptr(), p.as_ptr(), &mut slow),
                BlStatus::Ok
            );
            let (fast, slow) = (take(fast), take(slow));
            assert_eq!(fast["exact"], slow["exact"]);
        }
        let mut out = ptr::null_mut();
        let (l1, two) = (c("l1"), c("2"));
        bl_baire_norm(x, l1.as_ptr(), two.as_ptr(), 0, &mut out);
        assert_eq!(take(out)["exact"]["power_base"], "49/16");
        bl_vector_free(x);
        bl_tree_free(tree);
    }
}

#[test]
fn bush_and_family_checks() {
    unsafe {
        let mut bush = ptr::null_mut();
        assert_eq!(bl_bush_rademacher(4, &mut bush), BlStatus::Ok);
        let (half, one) = (c("1/2"), c("1"));
        let mut out = ptr::null_mut();
        assert_eq!(
            bl_bush_check(bush, half.as_ptr(), one.as_ptr(), &mut out),
            BlStatus::Ok
        );
        assert_eq!(take(out)["status"], "pass");
        assert_eq!(
            bl_bush_check(bush, one.as_ptr(), one.as_ptr(), &mut out),
            BlStatus::Ok
        );
        assert_eq!(take(out)["witness"]["k"], 1);
        bl_bush_free(bush);

        let doc = c(r#"{"space":"l1-step","vectors":[
            {"resolution":1,"values":["1","-1"]},
            {"resolution":1,"values":["-1","1"]}]}"#);
        let mut family = ptr::null_mut();
        assert_eq!(bl_family_from_json(doc.as_ptr(), &mut family), BlStatus::Ok);
        assert_eq!(
            bl_check_bs(family, half.as_ptr(), 0, &mut out),
            BlStatus::Ok
        );
        assert!(take(out)["status"].is_string());
        bl_family_free(family);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut tree = ptr::null_mut();
        assert_eq!(
            bl_tree_from_json(ptr::null(), &mut tree),
            BlStatus::NullPointer
        );
        assert!(tree.is_null());
        let broken = c("{\"nodes\": [[]");
        assert_eq!(
            bl_tree_from_json(broken.as_ptr(), &mut tree),
            BlStatus::ParseError
        );
        assert!(!last_error().is_empty());
        let orphan = c(r#"{"nodes": [[], [0, 1]]}"#);
        assert_eq!(
            bl_tree_from_json(orphan.as_ptr(), &mut tree),
            BlStatus::ValidationError
        );
        let bad = [0xffu8, 0];
        assert_eq!(
            bl_tree_from_json(bad.as_ptr().cast(), &mut tree),
            BlStatus::InvalidUtf8
        );
        assert_eq!(
            bl_tree_generate_spine(1, ptr::null_mut()),
            BlStatus::NullPointer
        );

        bl_tree_generate_spine(1, &mut tree);
        let doc = c(r#"{"entries":[{"node":[0],"coef":"1"}]}"#);
        let mut x = ptr::null_mut();
        assert_eq!(
            bl_vector_from_json(doc.as_ptr(), tree, &mut x),
            BlStatus::Ok
        );
        let (basis, p) = (c("l3"), c("2"));
        let mut out = ptr::null_mut();
        assert_eq!(
            bl_baire_norm(x, basis.as_ptr(), p.as_ptr(), 0, &mut out),
            BlStatus::ValidationError
        );
        assert!(last_error().contains("l3"));
        let (basis, p) = (c("l1"), c("1/2"));
        assert_eq!(
            bl_baire_norm(x, basis.as_ptr(), p.as_ptr(), 0, &mut out),
            BlStatus::ValidationError
        );
        bl_vector_free(x);
        let mut y = ptr::null_mut();
        assert_eq!(
            bl_vector_from_json(doc.as_ptr(), ptr::null(), &mut y),
            BlStatus::ValidationError
        );
        assert!(y.is_null());
        bl_tree_free(tree);
        bl_string_free(ptr::null_mut());
    }
}
