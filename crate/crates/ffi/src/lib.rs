//! C ABI over `milrec`.
//!
//! Every entry point returns a [`MilrecStatus`]; on failure the thread-local
//! message from [`milrec_last_error`] describes the cause. Handles are opaque
//! and owned by the caller until passed to the matching `*_free`. Panics never
//! cross the boundary: they surface as [`MilrecStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use milrec::data::{popularity, read_data_dir, SplitDataset};
use milrec::eval::{evaluate, EvalOptions, ModelScorer, ScoreSource, UndefinedNovelty, DEFAULT_KS};
use milrec::losses::LossKind;
use milrec::model::top_k;
use milrec::train::{load_checkpoint, Checkpoint};
use milrec::Error;

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilrecStatus {
    Ok = 0,
    InvalidArgument = 1,
    Input = 2,
    Format = 3,
    Numeric = 4,
    Evaluation = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
}

/// A trained model loaded from a checkpoint and its `.meta` sidecar.
pub struct MilrecModel {
    ckpt: Checkpoint,
}

/// A prepared data directory (vocabularies plus train/valid/test split).
pub struct MilrecDataset {
    data: SplitDataset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    // interior NULs would truncate the C string; replace them
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> MilrecStatus {
    match err {
        Error::InvalidArgument(_) => MilrecStatus::InvalidArgument,
        Error::Input { .. } => MilrecStatus::Input,
        Error::Format(_) => MilrecStatus::Format,
        Error::NumericFailure(_) => MilrecStatus::Numeric,
        Error::Evaluation(_) => MilrecStatus::Evaluation,
        Error::Io(_) => MilrecStatus::Io,
    }
}

enum Fail {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MilrecStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MilrecStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            MilrecStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            MilrecStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn path_arg(p: *const c_char, what: &'static str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| Error::InvalidArgument(format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

fn check_user(m: &MilrecModel, d: &MilrecDataset, user: u32) -> Result<usize, Fail> {
    let u = user as usize;
    if u >= d.data.n_users() || u >= m.ckpt.n_users {
        return Err(Error::InvalidArgument(format!("user {u} out of range")).into());
    }
    Ok(u)
}

fn scorer<'a>(m: &'a MilrecModel, d: &'a MilrecDataset) -> ModelScorer<'a> {
    ModelScorer::new(&m.ckpt.params, &d.data.train, m.ckpt.config.normalize_input)
}

/// Message for the last failed call on this thread, or NULL. Valid until the next call.
#[no_mangle]
pub extern "C" fn milrec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn milrec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opens a directory written by `milrec prep`.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milrec_dataset_open(dir: *const c_char, out_handle: *mut *mut MilrecDataset) -> MilrecStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        *slot = ptr::null_mut();
        let data = read_data_dir(&path_arg(dir, "dir")?)?;
        *slot = Box::into_raw(Box::new(MilrecDataset { data }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`milrec_dataset_open`] and not be freed twice. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn milrec_dataset_free(handle: *mut MilrecDataset) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live dataset; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn milrec_dataset_dims(
    handle: *const MilrecDataset,
    n_users: *mut u32,
    n_items: *mut u32,
) -> MilrecStatus {
    guard(|| {
        let d = deref(handle, "handle")?;
        *out(n_users, "n_users")? = d.data.n_users() as u32;
        *out(n_items, "n_items")? = d.data.n_items() as u32;
        Ok(())
    })
}

/// Loads a checkpoint and its `.meta` sidecar.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milrec_model_load(path: *const c_char, out_handle: *mut *mut MilrecModel) -> MilrecStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        *slot = ptr::null_mut();
        let ckpt = load_checkpoint(&path_arg(path, "path")?)?;
        *slot = Box::into_raw(Box::new(MilrecModel { ckpt }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`milrec_model_load`] and not be freed twice. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn milrec_model_free(handle: *mut MilrecModel) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live model; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn milrec_model_dims(
    handle: *const MilrecModel,
    n_users: *mut u32,
    n_items: *mut u32,
    dim: *mut u32,
) -> MilrecStatus {
    guard(|| {
        let m = deref(handle, "handle")?;
        *out(n_users, "n_users")? = m.ckpt.n_users as u32;
        *out(n_items, "n_items")? = m.ckpt.n_items() as u32;
        *out(dim, "dim")? = m.ckpt.params.dim() as u32;
        Ok(())
    })
}

/// Fails with `MILREC_STATUS_INPUT` unless the dataset has the model's vocabularies.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn milrec_model_check_dataset(
    model: *const MilrecModel,
    dataset: *const MilrecDataset,
) -> MilrecStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let d = deref(dataset, "dataset")?;
        m.ckpt.check_vocabularies(&d.data.users.fingerprint(), &d.data.items.fingerprint())?;
        Ok(())
    })
}

/// Writes the model's score for every item (`n_items` values) for `user`.
///
/// # Safety
/// Handles must be live; `scores` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn milrec_model_scores(
    model: *const MilrecModel,
    dataset: *const MilrecDataset,
    user: u32,
    scores: *mut f64,
    len: usize,
) -> MilrecStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let d = deref(dataset, "dataset")?;
        if scores.is_null() {
            return Err(Fail::Null("scores"));
        }
        let u = check_user(m, d, user)?;
        let s = scorer(m, d).scores(u)?;
        if len < s.len() {
            return Err(Error::InvalidArgument(format!("buffer holds {len} scores, need {}", s.len())).into());
        }
        std::slice::from_raw_parts_mut(scores, s.len()).copy_from_slice(&s);
        Ok(())
    })
}

/// Ranks the `k` best items for `user`, skipping items seen in train or validation.
/// Ties go to the lower index. `*written` receives the number of entries filled.
///
/// # Safety
/// Handles must be live; `items` and `scores` must hold `k` entries each.
#[no_mangle]
pub unsafe extern "C" fn milrec_predict_topk(
    model: *const MilrecModel,
    dataset: *const MilrecDataset,
    user: u32,
    k: u32,
    items: *mut u32,
    scores: *mut f64,
    written: *mut u32,
) -> MilrecStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let d = deref(dataset, "dataset")?;
        let written = out(written, "written")?;
        *written = 0;
        if items.is_null() || scores.is_null() {
            return Err(Fail::Null("items/scores"));
        }
        let u = check_user(m, d, user)?;
        let all = scorer(m, d).scores(u)?;
        let ranked = top_k(&all, &d.data.seen_items(u), k as usize);
        let items = std::slice::from_raw_parts_mut(items, ranked.len());
        let scores = std::slice::from_raw_parts_mut(scores, ranked.len());
        for (slot, &(i, s)) in ranked.iter().enumerate() {
            items[slot] = i;
            scores[slot] = s;
        }
        *written = ranked.len() as u32;
        Ok(())
    })
}

/// Test-split metrics as a JSON object (`recall@K`, `ndcg@K`, `nov_ndcg@K`, `users`,
/// `nov_excluded_pairs`). `ks` may be NULL with `n_ks == 0` for the default cutoffs.
/// The string must be released with [`milrec_string_free`].
///
/// # Safety
/// Handles must be live; `ks` must hold `n_ks` values; `json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milrec_evaluate_json(
    model: *const MilrecModel,
    dataset: *const MilrecDataset,
    ks: *const u32,
    n_ks: usize,
    threads: u32,
    json: *mut *mut c_char,
) -> MilrecStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let d = deref(dataset, "dataset")?;
        let slot = out(json, "json")?;
        *slot = ptr::null_mut();
        let ks = if n_ks == 0 {
            DEFAULT_KS.to_vec()
        } else if ks.is_null() {
            return Err(Fail::Null("ks"));
        } else {
            std::slice::from_raw_parts(ks, n_ks).iter().map(|&k| k as usize).collect()
        };
        m.ckpt.check_vocabularies(&d.data.users.fingerprint(), &d.data.items.fingerprint())?;
        let opts = EvalOptions {
            ks,
            threads: threads.max(1) as usize,
            undefined_novelty: UndefinedNovelty::Exclude,
            ..EvalOptions::default()
        };
        let report = evaluate(&scorer(m, d), &d.data, &popularity(&d.data.train)?, &opts)?;
        let text = report.to_json().to_string();
        *slot = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn milrec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Point-wise loss and its derivative with respect to `pred`, using the default
/// hyper-parameters of the named objective (`square_conf`, `ce_point` or `mil`).
///
/// # Safety
/// `loss_name` must be a NUL-terminated string; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn milrec_point_loss(
    loss_name: *const c_char,
    label: i8,
    pred: f64,
    loss: *mut f64,
    grad: *mut f64,
) -> MilrecStatus {
    guard(|| {
        if loss_name.is_null() {
            return Err(Fail::Null("loss_name"));
        }
        let name = CStr::from_ptr(loss_name).to_str().map_err(|_| Error::InvalidArgument("loss name is not UTF-8".into()))?;
        let kind: LossKind = name.parse()?;
        let lg = kind.default_spec().point(label, pred)?;
        *out(loss, "loss")? = lg.loss;
        *out(grad, "grad")? = lg.grad;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_arguments_are_reported_not_dereferenced() {
        let mut h: *mut MilrecModel = ptr::null_mut();
        let st = unsafe { milrec_model_load(ptr::null(), &mut h) };
        assert_eq!(st, MilrecStatus::NullPointer);
        assert!(h.is_null());
        let msg = unsafe { CStr::from_ptr(milrec_last_error()) }.to_str().unwrap();
        assert!(msg.contains("path"), "{msg}");
    }

    #[test]
    fn success_clears_the_last_error() {
        unsafe { milrec_model_free(ptr::null_mut()) };
        let _ = unsafe { milrec_dataset_open(ptr::null(), ptr::null_mut()) };
        assert!(!milrec_last_error().is_null());
        let (mut l, mut g) = (0.0, 0.0);
        let st = unsafe { milrec_point_loss(b"mil\0".as_ptr().cast(), 1, 0.5, &mut l, &mut g) };
        assert_eq!(st, MilrecStatus::Ok);
        assert!(milrec_last_error().is_null());
    }

    #[test]
    fn status_mapping_covers_every_error() {
        assert_eq!(status_of(&Error::Format("x".into())), MilrecStatus::Format);
        assert_eq!(status_of(&Error::NumericFailure("x".into())), MilrecStatus::Numeric);
        assert_eq!(status_of(&Error::Io(std::io::Error::other("x"))), MilrecStatus::Io);
    }
}
