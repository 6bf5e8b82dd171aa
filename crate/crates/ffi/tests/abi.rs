use std::ffi::{CStr, CString};
use std::ptr;

use nosql_advisor::advisor::{predict_all, AdvisorBundle, CANONICAL_BUNDLE};
use nosql_advisor::dataset::{Area, FeatureVector, CANONICAL_CSV};
use nosql_advisor::tree::Label;
use nosql_advisor_ffi::*;

fn last_error() -> Option<String> {
    let p = nsa_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn canonical() -> *mut NsaBundle {
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { nsa_bundle_canonical(&mut b) }, NsaStatus::Ok);
    assert!(!b.is_null());
    b
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { nsa_string_free(p) };
    s
}

#[test]
fn verdicts_match_the_library_on_every_input() {
    let b = canonical();
    let lib = AdvisorBundle::canonical();
    for x in FeatureVector::domain() {
        let bits = x.as_bits();
        let mut out = [9u8; NSA_AREA_COUNT];
        assert_eq!(unsafe { nsa_predict(b, bits.as_ptr(), out.as_mut_ptr()) }, NsaStatus::Ok);
        let r = predict_all(&lib, &x).unwrap();
        for a in Area::ALL {
            assert_eq!(out[a.index()], (r.verdict(a) == Label::Suitable) as u8, "{x} {a}");
        }
    }
    unsafe { nsa_bundle_free(b) };
}

#[test]
fn json_report_round_trips() {
    let b = canonical();
    let bits = [1u8, 0, 0, 0, 1, 0, 1, 1, 0];
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { nsa_predict_json(b, bits.as_ptr(), &mut out) }, NsaStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    let expected = predict_all(&AdvisorBundle::canonical(), &FeatureVector::from_slice(&bits).unwrap()).unwrap();
    assert_eq!(v, serde_json::to_value(expected).unwrap());
    unsafe { nsa_bundle_free(b) };
}

#[test]
fn what_if_reports_changed_areas_as_a_mask() {
    let b = canonical();
    let lib = AdvisorBundle::canonical();
    for x in FeatureVector::domain().step_by(7) {
        for toggle in 0..NSA_FEATURE_COUNT {
            let (mut before, mut after, mut mask) = ([0u8; 6], [0u8; 6], 0u32);
            let st = unsafe {
                nsa_what_if(b, x.as_bits().as_ptr(), toggle, before.as_mut_ptr(), after.as_mut_ptr(), &mut mask)
            };
            assert_eq!(st, NsaStatus::Ok);
            let w = nosql_advisor::advisor::what_if(&lib, &x, toggle).unwrap();
            let expected = w.changed_areas.iter().fold(0u32, |m, a| m | 1 << a.index());
            assert_eq!(mask, expected);
            for i in 0..6 {
                assert_eq!(mask >> i & 1 == 1, before[i] != after[i]);
            }
        }
    }
    let (mut before, mut after, mut mask) = ([0u8; 6], [0u8; 6], 0u32);
    let st = unsafe { nsa_what_if(b, [0u8; 9].as_ptr(), 9, before.as_mut_ptr(), after.as_mut_ptr(), &mut mask) };
    assert_eq!(st, NsaStatus::BadFeatureIndex);
    assert!(last_error().is_some());
    unsafe { nsa_bundle_free(b) };
}

#[test]
fn bad_inputs_map_to_status_codes() {
    let b = canonical();
    let mut out = [0u8; 6];
    let bad = [1u8, 0, 0, 0, 2, 0, 1, 1, 0];
    assert_eq!(unsafe { nsa_predict(b, bad.as_ptr(), out.as_mut_ptr()) }, NsaStatus::BadFeatureVector);
    assert!(last_error().unwrap().contains("0 or 1"));
    assert_eq!(unsafe { nsa_predict(ptr::null(), bad.as_ptr(), out.as_mut_ptr()) }, NsaStatus::NullPointer);
    assert_eq!(unsafe { nsa_predict(b, ptr::null(), out.as_mut_ptr()) }, NsaStatus::NullPointer);
    assert_eq!(unsafe { nsa_predict(b, [0u8; 9].as_ptr(), ptr::null_mut()) }, NsaStatus::NullPointer);
    // a successful call clears the error
    assert_eq!(unsafe { nsa_predict(b, [1u8, 0, 0, 0, 1, 0, 1, 1, 0].as_ptr(), out.as_mut_ptr()) }, NsaStatus::Ok);
    assert_eq!(last_error(), None);
    assert_eq!(unsafe { nsa_bundle_canonical(ptr::null_mut()) }, NsaStatus::NullPointer);
    unsafe {
        nsa_bundle_free(b);
        nsa_bundle_free(ptr::null_mut());
        nsa_string_free(ptr::null_mut());
    }
}

#[test]
fn bundles_load_from_disk_with_typed_failures() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("bundle.json");
    std::fs::write(&good, CANONICAL_BUNDLE).unwrap();
    let corrupt = dir.path().join("corrupt.json");
    std::fs::write(&corrupt, "{\"format_version\": 1").unwrap();
    let newer = dir.path().join("newer.json");
    std::fs::write(&newer, CANONICAL_BUNDLE.replacen("\"format_version\": 1", "\"format_version\": 99", 1)).unwrap();

    let load = |p: &std::path::Path| {
        let c = CString::new(p.to_str().unwrap()).unwrap();
        let mut b = ptr::null_mut();
        let st = unsafe { nsa_bundle_load(c.as_ptr(), &mut b) };
        (st, b)
    };
    let (st, b) = load(&good);
    assert_eq!(st, NsaStatus::Ok);
    assert_eq!(take_string(unsafe { nsa_bundle_dataset_version(b) }), "ds-836d15ab652b3c74");
    unsafe { nsa_bundle_free(b) };

    for p in [corrupt.as_path(), newer.as_path()] {
        let (st, b) = load(p);
        assert_eq!(st, NsaStatus::CorruptBundle, "{}", p.display());
        assert!(b.is_null());
        assert!(last_error().unwrap().contains(p.to_str().unwrap()));
    }
    assert_eq!(load(&dir.path().join("missing.json")).0, NsaStatus::Io);
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { nsa_bundle_load(ptr::null(), &mut b) }, NsaStatus::NullPointer);
    let not_utf8 = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { nsa_bundle_load(not_utf8.as_ptr().cast(), &mut b) }, NsaStatus::InvalidUtf8);
}

#[test]
fn datasets_validate_and_pair_with_bundles() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { nsa_dataset_canonical(&mut d) }, NsaStatus::Ok);
    assert_eq!(unsafe { nsa_dataset_len(d) }, 80);
    assert_eq!(take_string(unsafe { nsa_dataset_version(d) }), "ds-836d15ab652b3c74");
    let mut count = usize::MAX;
    assert_eq!(unsafe { nsa_dataset_violations(d, &mut count) }, NsaStatus::Ok);
    assert_eq!(count, 0);
    let b = canonical();
    assert_eq!(unsafe { nsa_bundle_matches_dataset(b, d) }, NsaStatus::Ok);
    unsafe { nsa_dataset_free(d) };

    // drop one record: loads, still valid, but no longer matches the bundle
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.csv");
    let text: Vec<&str> = CANONICAL_CSV.lines().collect();
    std::fs::write(&path, text[..text.len() - 1].join("\n") + "\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { nsa_dataset_load(c.as_ptr(), &mut d) }, NsaStatus::Ok);
    assert_eq!(unsafe { nsa_dataset_len(d) }, 79);
    assert_eq!(unsafe { nsa_bundle_matches_dataset(b, d) }, NsaStatus::DatasetMismatch);
    unsafe { nsa_dataset_free(d) };

    std::fs::write(&path, "garbage\n").unwrap();
    assert_eq!(unsafe { nsa_dataset_load(c.as_ptr(), &mut d) }, NsaStatus::BadDataset);
    assert_eq!(unsafe { nsa_dataset_len(ptr::null()) }, 0);
    unsafe { nsa_bundle_free(b) };
}

#[test]
fn errors_are_per_thread() {
    let b = canonical() as usize;
    let mut out = [0u8; 6];
    let bad = [3u8; 9];
    assert_eq!(unsafe { nsa_predict(b as *const _, bad.as_ptr(), out.as_mut_ptr()) }, NsaStatus::BadFeatureVector);
    std::thread::spawn(|| assert_eq!(last_error(), None)).join().unwrap();
    assert!(last_error().is_some());
    unsafe { nsa_bundle_free(b as *mut _) };
}
