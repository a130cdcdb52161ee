//! Drives the C surface the way a foreign caller would: nul-terminated
//! strings in, caller buffers out, status codes checked on every call.

use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use retaudit_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ra_last_error()) }
        .to_str()
        .unwrap()
        .to_string()
}

fn write_corpus(dir: &Path) -> CString {
    let path = dir.join("corpus.jsonl");
    std::fs::write(
        &path,
        concat!(
            r#"{"id":"ds1","type":"dataset","title":"wind speed hourly","body":"offshore wind measurements"}"#,
            "\n",
            r#"{"id":"ds2","type":"dataset","title":"sea level pressure","body":"pressure and wind records"}"#,
            "\n",
            r#"{"id":"pub1","type":"publication","title":"wind energy study","body":"analysis of wind farms"}"#,
            "\n",
        ),
    )
    .unwrap();
    CString::new(path.to_str().unwrap()).unwrap()
}

fn load(path: &CString) -> *mut RaCorpus {
    let mut corpus = std::ptr::null_mut();
    assert_eq!(unsafe { ra_corpus_load(path.as_ptr(), &mut corpus) }, RaStatus::Ok);
    assert!(!corpus.is_null());
    corpus
}

fn build(corpus: *const RaCorpus, category: Option<&CString>) -> *mut RaIndex {
    let mut index = std::ptr::null_mut();
    let cat = category.map_or(std::ptr::null(), |c| c.as_ptr());
    assert_eq!(unsafe { ra_index_build(corpus, cat, &mut index) }, RaStatus::Ok);
    assert!(!index.is_null());
    index
}

fn doc_id(index: *const RaIndex, ordinal: u32) -> String {
    let mut buf = [0 as c_char; 64];
    let mut written = 0usize;
    let status =
        unsafe { ra_index_doc_id(index, ordinal, buf.as_mut_ptr(), buf.len(), &mut written) };
    assert_eq!(status, RaStatus::Ok);
    let id = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string();
    assert_eq!(written, id.len() + 1);
    id
}

#[test]
fn version_is_a_static_c_string() {
    let version = unsafe { CStr::from_ptr(ra_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn corpus_index_search_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_corpus(tmp.path());
    let corpus = load(&path);
    assert_eq!(unsafe { ra_corpus_doc_count(corpus) }, 3);

    let index = build(corpus, None);
    assert_eq!(unsafe { ra_index_doc_count(index) }, 3);
    assert!(unsafe { ra_index_avg_doc_length(index) } > 0.0);

    let query = CString::new("wind").unwrap();
    let mut hits = [RaHit { rank: 0, doc: 0, score: 0.0 }; 8];
    let mut n = 0usize;
    let status = unsafe {
        ra_index_search(
            index,
            query.as_ptr(),
            RA_DEFAULT_K1,
            RA_DEFAULT_B,
            8,
            hits.as_mut_ptr(),
            hits.len(),
            &mut n,
        )
    };
    assert_eq!(status, RaStatus::Ok);
    assert_eq!(n, 3, "every document mentions wind");
    for (i, hit) in hits[..n].iter().enumerate() {
        assert_eq!(hit.rank as usize, i + 1);
        assert!(hit.score > 0.0);
        if i > 0 {
            assert!(hit.score <= hits[i - 1].score, "scores must be descending");
        }
    }
    // "wind" appears twice in ds1's indexed text, once each elsewhere.
    assert_eq!(doc_id(index, hits[0].doc), "ds1");

    unsafe {
        ra_index_free(index);
        ra_corpus_free(corpus);
    }
}

#[test]
fn category_filter_limits_the_index() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_corpus(tmp.path());
    let corpus = load(&path);
    let category = CString::new("publication").unwrap();
    let index = build(corpus, Some(&category));
    assert_eq!(unsafe { ra_index_doc_count(index) }, 1);
    assert_eq!(doc_id(index, 0), "pub1");
    unsafe {
        ra_index_free(index);
        ra_corpus_free(corpus);
    }
}

#[test]
fn search_reports_required_capacity() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_corpus(tmp.path());
    let corpus = load(&path);
    let index = build(corpus, None);
    let query = CString::new("wind").unwrap();
    let mut n = 0usize;
    let status = unsafe {
        ra_index_search(
            index,
            query.as_ptr(),
            RA_DEFAULT_K1,
            RA_DEFAULT_B,
            8,
            std::ptr::null_mut(),
            0,
            &mut n,
        )
    };
    assert_eq!(status, RaStatus::BufferTooSmall);
    assert_eq!(n, 3, "probe call reports the required capacity");
    assert!(last_error().contains("capacity"));
    unsafe {
        ra_index_free(index);
        ra_corpus_free(corpus);
    }
}

#[test]
fn doc_id_buffer_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_corpus(tmp.path());
    let corpus = load(&path);
    let index = build(corpus, None);

    let mut written = 0usize;
    let status = unsafe { ra_index_doc_id(index, 0, std::ptr::null_mut(), 0, &mut written) };
    assert_eq!(status, RaStatus::BufferTooSmall);
    assert_eq!(written, 4, "\"ds1\" plus nul");

    let status = unsafe { ra_index_doc_id(index, 99, std::ptr::null_mut(), 0, &mut written) };
    assert_eq!(status, RaStatus::UnknownDoc);
    assert!(last_error().contains("ordinal 99"));

    unsafe {
        ra_index_free(index);
        ra_corpus_free(corpus);
    }
}

#[test]
fn null_and_invalid_arguments_are_reported() {
    let mut corpus = std::ptr::null_mut();
    assert_eq!(
        unsafe { ra_corpus_load(std::ptr::null(), &mut corpus) },
        RaStatus::NullPointer
    );
    assert_eq!(last_error(), "path is null");

    let missing = CString::new("/no/such/file.jsonl").unwrap();
    assert_eq!(unsafe { ra_corpus_load(missing.as_ptr(), &mut corpus) }, RaStatus::Io);

    let wrong_ext = CString::new("/tmp/corpus.xml").unwrap();
    assert_eq!(
        unsafe { ra_corpus_load(wrong_ext.as_ptr(), &mut corpus) },
        RaStatus::InvalidArgument
    );
    assert!(last_error().contains(".jsonl or .tsv"));

    let not_utf8 = CString::new([0xffu8, 0xfe].as_slice()).unwrap();
    assert_eq!(
        unsafe { ra_corpus_load(not_utf8.as_ptr(), &mut corpus) },
        RaStatus::InvalidUtf8
    );

    let mut out = 0.0;
    assert_eq!(unsafe { ra_gini(std::ptr::null(), 3, &mut out) }, RaStatus::NullPointer);
    assert_eq!(unsafe { ra_gini(std::ptr::null(), 0, &mut out) }, RaStatus::InvalidArgument);
}

#[test]
fn bad_search_parameters_are_invalid_arguments() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_corpus(tmp.path());
    let corpus = load(&path);
    let index = build(corpus, None);
    let query = CString::new("wind").unwrap();
    let mut hits = [RaHit { rank: 0, doc: 0, score: 0.0 }; 4];
    let mut n = 0usize;

    let status = unsafe {
        ra_index_search(index, query.as_ptr(), -1.0, 0.75, 4, hits.as_mut_ptr(), 4, &mut n)
    };
    assert_eq!(status, RaStatus::InvalidArgument);
    assert!(last_error().contains("k1"));

    let status = unsafe {
        ra_index_search(index, query.as_ptr(), 1.2, 0.75, 0, hits.as_mut_ptr(), 4, &mut n)
    };
    assert_eq!(status, RaStatus::InvalidArgument);

    unsafe {
        ra_index_free(index);
        ra_corpus_free(corpus);
    }
}

#[test]
fn inequality_wrappers_match_known_values() {
    let mut out = 0.0;
    assert_eq!(unsafe { ra_gini([1.0, 2.0, 3.0, 4.0].as_ptr(), 4, &mut out) }, RaStatus::Ok);
    assert_eq!(out, 0.25);

    let values = [0.0, 0.0, 10.0];
    let mut points = [RaPoint { population_share: 0.0, value_share: 0.0 }; 4];
    let mut written = 0usize;
    let status =
        unsafe { ra_lorenz(values.as_ptr(), 3, points.as_mut_ptr(), points.len(), &mut written) };
    assert_eq!(status, RaStatus::Ok);
    assert_eq!(written, 4);
    assert_eq!(
        (points[0].population_share, points[0].value_share),
        (0.0, 0.0)
    );
    assert_eq!(
        (points[3].population_share, points[3].value_share),
        (1.0, 1.0)
    );
    assert_eq!(points[2].value_share, 0.0, "two-thirds of the docs hold nothing");

    let status = unsafe { ra_lorenz(values.as_ptr(), 3, std::ptr::null_mut(), 0, &mut written) };
    assert_eq!(status, RaStatus::BufferTooSmall);
    assert_eq!(written, 4);
}

#[test]
fn rank_measure_wrappers_match_known_values() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    let ys = [4.0, 3.0, 2.0, 1.0];
    let mut out = 0.0;
    assert_eq!(unsafe { ra_kendall_tau(xs.as_ptr(), ys.as_ptr(), 4, &mut out) }, RaStatus::Ok);
    assert_eq!(out, -1.0);
    assert_eq!(unsafe { ra_spearman_rho(xs.as_ptr(), ys.as_ptr(), 4, &mut out) }, RaStatus::Ok);
    assert_eq!(out, -1.0);

    let a = CString::new("a").unwrap();
    let b = CString::new("b").unwrap();
    let ab = [a.as_ptr(), b.as_ptr()];
    let ba = [b.as_ptr(), a.as_ptr()];
    assert_eq!(unsafe { ra_rbo(ab.as_ptr(), 2, ab.as_ptr(), 2, 0.9, &mut out) }, RaStatus::Ok);
    assert_eq!(out, 1.0);
    assert_eq!(unsafe { ra_rbo(ab.as_ptr(), 2, ba.as_ptr(), 2, 0.9, &mut out) }, RaStatus::Ok);
    assert!((out - 0.9 / 1.9).abs() <= 1e-12);
    assert_eq!(
        unsafe { ra_rbo(ab.as_ptr(), 2, ba.as_ptr(), 2, 1.5, &mut out) },
        RaStatus::InvalidArgument
    );

    assert_eq!(unsafe { ra_jaccard_topk(ab.as_ptr(), 2, ba.as_ptr(), 2, 2, &mut out) }, RaStatus::Ok);
    assert_eq!(out, 1.0, "same members, different order");
    assert_eq!(unsafe { ra_jaccard_topk(ab.as_ptr(), 2, ba.as_ptr(), 2, 1, &mut out) }, RaStatus::Ok);
    assert_eq!(out, 0.0, "top-1 sets are disjoint");
}

#[test]
fn scores_agree_with_the_core_library() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_corpus(tmp.path());
    let corpus = load(&path);
    let index = build(corpus, None);
    let query = CString::new("wind speed").unwrap();
    let mut hits = [RaHit { rank: 0, doc: 0, score: 0.0 }; 8];
    let mut n = 0usize;
    let status = unsafe {
        ra_index_search(
            index,
            query.as_ptr(),
            RA_DEFAULT_K1,
            RA_DEFAULT_B,
            8,
            hits.as_mut_ptr(),
            hits.len(),
            &mut n,
        )
    };
    assert_eq!(status, RaStatus::Ok);

    // Rebuild the same index through the Rust API and compare bit for bit.
    let analyzer = retaudit::analyze::Analyzer::new();
    let (native, _) = retaudit::corpus::ingest_corpus(
        Path::new(unsafe { CStr::from_ptr(path.as_ptr()) }.to_str().unwrap()),
        retaudit::corpus::CorpusFormat::Jsonl,
    )
    .unwrap();
    let native_index = retaudit::engine::build_index(&native, &analyzer, None);
    let native_hits = retaudit::engine::search(
        &native_index,
        retaudit::engine::Bm25Params::default(),
        &analyzer.analyze("wind speed"),
        8,
    )
    .unwrap();
    assert_eq!(n, native_hits.len());
    for (c_hit, native_hit) in hits[..n].iter().zip(&native_hits) {
        assert_eq!(c_hit.rank, native_hit.rank);
        assert_eq!(c_hit.score, native_hit.score);
        assert_eq!(doc_id(index, c_hit.doc), native_hit.doc_id);
    }

    unsafe {
        ra_index_free(index);
        ra_corpus_free(corpus);
    }
}
