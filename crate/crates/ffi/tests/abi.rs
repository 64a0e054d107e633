use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use kpe_ffi::*;

fn toy(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/toy").join(name);
    CString::new(p.display().to_string()).unwrap()
}

fn last_error() -> String {
    let p = kpe_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { kpe_string_free(p) };
    s
}

#[test]
fn dataset_roundtrip() {
    let mut ds = ptr::null_mut();
    let status = unsafe {
        kpe_dataset_load(
            toy("segments.tsv").as_ptr(),
            toy("outputs.tsv").as_ptr(),
            toy("judgments.tsv").as_ptr(),
            &mut ds,
        )
    };
    assert_eq!(status, KpeStatus::Ok);
    assert_eq!(kpe_dataset_segment_count(ds), 60);
    assert_eq!(kpe_dataset_output_count(ds), 240);
    assert_eq!(kpe_dataset_judgment_count(ds), 150);
    unsafe { kpe_dataset_free(ds) };
    assert_eq!(kpe_dataset_segment_count(ptr::null()), 0);
    unsafe { kpe_dataset_free(ptr::null_mut()) };
}

#[test]
fn dataset_errors_carry_messages() {
    let mut ds = ptr::null_mut();
    let missing = CString::new("/nonexistent/segments.tsv").unwrap();
    let status = unsafe { kpe_dataset_load(missing.as_ptr(), toy("outputs.tsv").as_ptr(), toy("judgments.tsv").as_ptr(), &mut ds) };
    assert_eq!(status, KpeStatus::Corpus);
    assert!(ds.is_null());
    assert!(last_error().contains("/nonexistent/segments.tsv"), "{}", last_error());

    let status = unsafe { kpe_dataset_load(ptr::null(), ptr::null(), ptr::null(), &mut ds) };
    assert_eq!(status, KpeStatus::NullArgument);
    assert_eq!(last_error(), "segments is NULL");

    let bad = [0xffu8, 0];
    let status = unsafe { kpe_dataset_load(bad.as_ptr().cast(), missing.as_ptr(), missing.as_ptr(), &mut ds) };
    assert_eq!(status, KpeStatus::InvalidUtf8);
}

#[test]
fn render_and_parse() {
    let reg = kpe_registry_builtin();
    let id = CString::new("kpe_perplexity").unwrap();
    let name = CString::new("target_seg").unwrap();
    let value = CString::new("Der Hund bellt.").unwrap();
    let names = [name.as_ptr()];
    let values = [value.as_ptr()];
    let mut text = ptr::null_mut();
    let status = unsafe { kpe_registry_render(reg, id.as_ptr(), names.as_ptr(), values.as_ptr(), 1, &mut text) };
    assert_eq!(status, KpeStatus::Ok);
    assert!(take_string(text).contains("Der Hund bellt."));

    let status = unsafe { kpe_registry_render(reg, id.as_ptr(), ptr::null(), ptr::null(), 0, &mut text) };
    assert_eq!(status, KpeStatus::Prompt);
    assert!(text.is_null());
    assert!(last_error().contains("target_seg"), "{}", last_error());

    let mut ordinal = -1i64;
    let answer = CString::new("Class: Perfect translation").unwrap();
    let status = unsafe { kpe_parse_response(reg, id.as_ptr(), answer.as_ptr(), &mut ordinal) };
    assert_eq!(status, KpeStatus::Ok);
    assert_eq!(ordinal, 4);

    let garbage = CString::new("no idea").unwrap();
    let status = unsafe { kpe_parse_response(reg, id.as_ptr(), garbage.as_ptr(), &mut ordinal) };
    assert_eq!(status, KpeStatus::Parse);
    assert_eq!(ordinal, 4, "untouched on failure");

    let unknown = CString::new("no_such_template").unwrap();
    let status = unsafe { kpe_parse_response(reg, unknown.as_ptr(), answer.as_ptr(), &mut ordinal) };
    assert_eq!(status, KpeStatus::Prompt);
    unsafe { kpe_registry_free(reg) };
}

#[test]
fn kendall_handle() {
    let k = kpe_kendall_new();
    let mut tau = 0.0;
    assert_eq!(unsafe { kpe_kendall_tau(k, &mut tau) }, KpeStatus::Undefined);
    // five concordant, one tie, one missing
    for (b, w) in [(4, 1), (3, 2), (2, 0), (4, 3), (1, 0), (2, 2)] {
        assert_eq!(unsafe { kpe_kendall_record(k, b, true, w, true) }, KpeStatus::Ok);
    }
    assert_eq!(unsafe { kpe_kendall_record(k, 0, false, 1, true) }, KpeStatus::Ok);
    let (mut c, mut d, mut e) = (0usize, 0usize, 0usize);
    assert_eq!(unsafe { kpe_kendall_counts(k, &mut c, &mut d, &mut e) }, KpeStatus::Ok);
    assert_eq!((c, d, e), (5, 1, 1));
    assert_eq!(unsafe { kpe_kendall_tau(k, &mut tau) }, KpeStatus::Ok);
    assert!((tau - 4.0 / 6.0).abs() < 1e-12);
    assert_eq!(unsafe { kpe_kendall_counts(k, ptr::null_mut(), &mut d, ptr::null_mut()) }, KpeStatus::Ok);
    unsafe { kpe_kendall_free(k) };
}

#[test]
fn pairwise() {
    let metric = [3.0, 2.0, 1.0, 0.5];
    let human = [10.0, 9.0, 7.0, 8.0];
    let mut acc = 0.0;
    let status = unsafe { kpe_pairwise_accuracy(metric.as_ptr(), human.as_ptr(), 4, &mut acc) };
    assert_eq!(status, KpeStatus::Ok);
    assert!((acc - 5.0 / 6.0).abs() < 1e-12);
    let status = unsafe { kpe_pairwise_accuracy(metric.as_ptr(), human.as_ptr(), 1, &mut acc) };
    assert_eq!(status, KpeStatus::Metrics);
}

#[test]
fn heatmap() {
    let src: Vec<CString> = ["a", "b"].iter().map(|s| CString::new(*s).unwrap()).collect();
    let mt: Vec<CString> = ["x", "y", "<z>"].iter().map(|s| CString::new(*s).unwrap()).collect();
    let src_p: Vec<*const c_char> = src.iter().map(|s| s.as_ptr()).collect();
    let mt_p: Vec<*const c_char> = mt.iter().map(|s| s.as_ptr()).collect();
    let cells = [1.0, 0.0, 0.5, 0.0, 1.0, 0.25];
    let mut svg = ptr::null_mut();
    let status = unsafe { kpe_heatmap_svg(src_p.as_ptr(), 2, mt_p.as_ptr(), 3, cells.as_ptr(), &mut svg) };
    assert_eq!(status, KpeStatus::Ok);
    let text = take_string(svg);
    assert_eq!(text.matches("<rect class=\"cell\"").count(), 6);
    assert!(text.contains("&lt;z&gt;"));

    let bad = CString::new("has space").unwrap();
    let bad_p = [bad.as_ptr()];
    let status = unsafe { kpe_heatmap_svg(bad_p.as_ptr(), 1, mt_p.as_ptr(), 3, cells.as_ptr(), &mut svg) };
    assert_eq!(status, KpeStatus::Align);
    assert!(svg.is_null());
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/kpe.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15, "{exports:?}");
    for f in exports {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    for t in ["typedef struct KpeDataset KpeDataset;", "typedef struct KpeRegistry KpeRegistry;", "KPE_STATUS_OK = 0", "KPE_STATUS_PANIC = 99"] {
        assert!(h.contains(t), "{t}");
    }
}

#[test]
fn header_compiles_as_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("use.c");
    std::fs::write(
        &file,
        "#include \"kpe.h\"\n\
         int main(void) {\n\
           KpeRegistry *r = kpe_registry_builtin();\n\
           int64_t ord = 0;\n\
           KpeStatus s = kpe_parse_response(r, \"kpe_perplexity\", \"Class: Perfect translation\", &ord);\n\
           kpe_registry_free(r);\n\
           return s == KPE_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let out = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header().parent().unwrap())
        .arg(&file)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
