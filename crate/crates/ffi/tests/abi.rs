use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use milrec::data::synthetic::low_rank_corpus;
use milrec::data::{popularity, split, write_data_dir, SplitDataset};
use milrec::eval::{evaluate, EvalOptions, ModelScorer};
use milrec::losses::{mil, MilParams};
use milrec::model::predict_topk;
use milrec::numeric::RngState;
use milrec::train::{load_checkpoint, save_checkpoint, train, Checkpoint, TrainConfig};
use milrec_ffi::*;

struct Fixture {
    _dir: tempfile::TempDir,
    data_dir: CString,
    ckpt_path: CString,
    data: SplitDataset,
    ckpt: Checkpoint,
}

fn fixture(seed: u64) -> Fixture {
    fixture_sized(seed, 60, 40)
}

fn fixture_sized(seed: u64, n_users: usize, n_items: usize) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let corpus = low_rank_corpus(n_users, n_items, 3, 0.15, &mut RngState::new(seed)).unwrap();
    let data = split(&corpus, 0.1, 0.2, &mut RngState::new(1)).unwrap();
    let data_path = dir.path().join("data");
    write_data_dir(&data_path, &data).unwrap();
    let mut cfg = TrainConfig::preset("mil-lin-sig").unwrap();
    cfg.dim = 8;
    cfg.iterations = 50;
    cfg.batch_size = 10;
    cfg.eval_every = Some(0);
    let (ckpt, _) = train(&cfg, &data).unwrap();
    let ckpt_path = dir.path().join("model.ckpt");
    save_checkpoint(&ckpt, &ckpt_path).unwrap();
    // parameters are stored at f32 precision; compare against what was written
    let ckpt = load_checkpoint(&ckpt_path).unwrap();
    Fixture { data_dir: c(&data_path), ckpt_path: c(&ckpt_path), _dir: dir, data, ckpt }
}

fn c(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = milrec_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn open(f: &Fixture) -> (*mut MilrecModel, *mut MilrecDataset) {
    let mut m = ptr::null_mut();
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(milrec_model_load(f.ckpt_path.as_ptr(), &mut m), MilrecStatus::Ok);
        assert_eq!(milrec_dataset_open(f.data_dir.as_ptr(), &mut d), MilrecStatus::Ok);
    }
    (m, d)
}

fn close(m: *mut MilrecModel, d: *mut MilrecDataset) {
    unsafe {
        milrec_model_free(m);
        milrec_dataset_free(d);
    }
}

#[test]
fn dims_match_the_core_objects() {
    let f = fixture(3);
    let (m, d) = open(&f);
    let (mut nu, mut ni, mut dim) = (0u32, 0u32, 0u32);
    unsafe {
        assert_eq!(milrec_model_dims(m, &mut nu, &mut ni, &mut dim), MilrecStatus::Ok);
        assert_eq!((nu as usize, ni as usize, dim), (f.ckpt.n_users, f.ckpt.n_items(), 8));
        assert_eq!(milrec_dataset_dims(d, &mut nu, &mut ni), MilrecStatus::Ok);
        assert_eq!((nu as usize, ni as usize), (f.data.n_users(), f.data.n_items()));
        assert_eq!(milrec_model_check_dataset(m, d), MilrecStatus::Ok);
    }
    close(m, d);
}

#[test]
fn topk_and_scores_agree_with_the_library() {
    let f = fixture(4);
    let (m, d) = open(&f);
    let scorer = ModelScorer::new(&f.ckpt.params, &f.data.train, f.ckpt.config.normalize_input);
    for u in 0..f.data.n_users() {
        let want = predict_topk(&f.ckpt.params, scorer.input(u).unwrap(), &f.data.seen_items(u), 5).unwrap();
        let mut items = [0u32; 5];
        let mut scores = [0f64; 5];
        let mut n = 0u32;
        let st = unsafe { milrec_predict_topk(m, d, u as u32, 5, items.as_mut_ptr(), scores.as_mut_ptr(), &mut n) };
        assert_eq!(st, MilrecStatus::Ok);
        assert_eq!(n as usize, want.len());
        for (j, &(i, s)) in want.iter().enumerate() {
            assert_eq!(items[j], i);
            assert_eq!(scores[j].to_bits(), s.to_bits());
        }
        let mut all = vec![0f64; f.data.n_items()];
        let st = unsafe { milrec_model_scores(m, d, u as u32, all.as_mut_ptr(), all.len()) };
        assert_eq!(st, MilrecStatus::Ok);
        if let Some(&(i, s)) = want.first() {
            assert_eq!(all[i as usize].to_bits(), s.to_bits());
        }
    }
    close(m, d);
}

#[test]
fn evaluate_json_matches_the_library_report() {
    let f = fixture(5);
    let (m, d) = open(&f);
    let ks = [1u32, 5, 10];
    let mut json: *mut c_char = ptr::null_mut();
    let st = unsafe { milrec_evaluate_json(m, d, ks.as_ptr(), ks.len(), 2, &mut json) };
    assert_eq!(st, MilrecStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { milrec_string_free(json) };
    let got: serde_json::Value = serde_json::from_str(&text).unwrap();

    let scorer = ModelScorer::new(&f.ckpt.params, &f.data.train, f.ckpt.config.normalize_input);
    let pop = popularity(&f.data.train).unwrap();
    let want = evaluate(&scorer, &f.data, &pop, &EvalOptions { ks: vec![1, 5, 10], ..EvalOptions::default() }).unwrap();
    assert_eq!(got, want.to_json());
    close(m, d);
}

#[test]
fn errors_carry_codes_and_messages() {
    let f = fixture(6);
    let (m, d) = open(&f);
    let mut h = ptr::null_mut();
    let missing = CString::new("/nonexistent/model.ckpt").unwrap();
    assert_eq!(unsafe { milrec_model_load(missing.as_ptr(), &mut h) }, MilrecStatus::Io);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    let mut buf = [0f64; 1];
    let st = unsafe { milrec_model_scores(m, d, 0, buf.as_mut_ptr(), 1) };
    assert_eq!(st, MilrecStatus::InvalidArgument);
    assert!(last_error().contains("buffer"));

    let mut n = 7u32;
    let st = unsafe { milrec_predict_topk(m, d, 10_000, 3, buf.as_mut_ptr().cast(), buf.as_mut_ptr(), &mut n) };
    assert_eq!(st, MilrecStatus::InvalidArgument);
    assert_eq!(n, 0);

    let st = unsafe { milrec_dataset_dims(ptr::null(), ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(st, MilrecStatus::NullPointer);
    close(m, d);
}

#[test]
fn other_vocabularies_are_rejected() {
    let a = fixture(7);
    let b = fixture_sized(8, 70, 45);
    let mut m = ptr::null_mut();
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(milrec_model_load(a.ckpt_path.as_ptr(), &mut m), MilrecStatus::Ok);
        assert_eq!(milrec_dataset_open(b.data_dir.as_ptr(), &mut d), MilrecStatus::Ok);
        assert_eq!(milrec_model_check_dataset(m, d), MilrecStatus::Input);
        let mut json = ptr::null_mut();
        assert_eq!(milrec_evaluate_json(m, d, ptr::null(), 0, 1, &mut json), MilrecStatus::Input);
        assert!(json.is_null());
    }
    close(m, d);
}

#[test]
fn point_loss_matches_the_library() {
    let name = CString::new("mil").unwrap();
    for &(label, pred) in &[(1i8, 0.3), (0, 0.7), (0, 0.01), (1, 0.999)] {
        let (mut l, mut g) = (0.0, 0.0);
        let st = unsafe { milrec_point_loss(name.as_ptr(), label, pred, &mut l, &mut g) };
        assert_eq!(st, MilrecStatus::Ok);
        let want = mil(label, pred, &MilParams::default()).unwrap();
        assert_eq!((l.to_bits(), g.to_bits()), (want.loss.to_bits(), want.grad.to_bits()));
    }
    let bad = CString::new("hinge").unwrap();
    let (mut l, mut g) = (0.0, 0.0);
    assert_eq!(unsafe { milrec_point_loss(bad.as_ptr(), 1, 0.5, &mut l, &mut g) }, MilrecStatus::InvalidArgument);
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/milrec.h")).unwrap();
    for sym in [
        "milrec_last_error",
        "milrec_version",
        "milrec_dataset_open",
        "milrec_dataset_free",
        "milrec_dataset_dims",
        "milrec_model_load",
        "milrec_model_free",
        "milrec_model_dims",
        "milrec_model_check_dataset",
        "milrec_model_scores",
        "milrec_predict_topk",
        "milrec_evaluate_json",
        "milrec_string_free",
        "milrec_point_loss",
        "MILREC_STATUS_PANIC = 8",
    ] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"milrec.h\"\nint main(void) { MilrecModel *m = 0; milrec_model_free(m); return MILREC_STATUS_OK; }\n",
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let status = match std::process::Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I", include])
            .arg(&src)
            .status()
        {
            Ok(s) => s,
            // no toolchain in this environment
            Err(_) => continue,
        };
        assert!(status.success(), "{compiler} rejected the header");
    }
}
