//! Binary checkpoint format, little-endian:
//!
//! ```text
//! magic "MILREC01" | u8 kind | u8 encoder | u8 decoder | u32 D | u32 n_users | u32 n_items
//! f32 W | f32 b | f32 W' | f32 b' | u64 byte length of everything before it
//! ```
//!
//! A `key = value` sidecar (`<path>.meta`) carries the config snapshot, the
//! vocabulary fingerprints and the iteration count.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::{parse_kv, TrainConfig};
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelParams};
use crate::numeric::{ActivationKind, Matrix};

pub const MAGIC: &[u8; 8] = b"MILREC01";
const HEADER_LEN: usize = 8 + 3 + 12;
const META_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub config: TrainConfig,
    pub n_users: usize,
    pub users_fingerprint: String,
    pub items_fingerprint: String,
    pub iteration: usize,
}

impl Checkpoint {
    pub fn n_items(&self) -> usize {
        self.params.n_items()
    }

    /// Checks that the checkpoint was trained on these vocabularies.
    pub fn check_vocabularies(&self, users_fingerprint: &str, items_fingerprint: &str) -> Result<()> {
        if self.users_fingerprint != users_fingerprint || self.items_fingerprint != items_fingerprint {
            return Err(Error::input("checkpoint vocabularies do not match the dataset"));
        }
        Ok(())
    }

    pub fn meta_text(&self) -> String {
        let mut s = format!(
            "format = {META_VERSION}\nkind = {}\niteration = {}\nn_users = {}\nusers_fingerprint = {}\nitems_fingerprint = {}\n",
            self.params.kind, self.iteration, self.n_users, self.users_fingerprint, self.items_fingerprint
        );
        for (k, v) in self.config.to_kv() {
            s.push_str(&format!("config.{k} = {v}\n"));
        }
        s
    }
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn u32_dim(x: usize, what: &str) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::format(format!("{what} = {x} exceeds the format's u32 range")))
}

/// Serializes the parameters (and `n_users`) in the binary format.
pub fn write_checkpoint(params: &ModelParams, n_users: usize) -> Result<Vec<u8>> {
    if params.kind == ModelKind::Mf && params.n_inputs() != n_users {
        return Err(Error::invalid("MF encoder width must equal the user count"));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * params.n_params() + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[params.kind.code(), params.encoder.code(), params.decoder.code()]);
    for (x, what) in [(params.dim(), "D"), (n_users, "n_users"), (params.n_items(), "n_items")] {
        out.extend_from_slice(&u32_dim(x, what)?.to_le_bytes());
    }
    for block in [params.w.as_slice(), &params.b, params.w_dec.as_slice(), &params.b_dec] {
        for &x in block {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    let len = out.len() as u64;
    out.extend_from_slice(&len.to_le_bytes());
    Ok(out)
}

/// Parses the binary format into parameters and the stored user count.
pub fn read_checkpoint(bytes: &[u8]) -> Result<(ModelParams, usize)> {
    if bytes.len() < HEADER_LEN + 8 {
        return Err(Error::format(format!("checkpoint is {} bytes, shorter than its header", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::format("bad checkpoint magic"));
    }
    let kind = ModelKind::from_code(bytes[8]).ok_or_else(|| Error::format(format!("unknown model kind code {}", bytes[8])))?;
    let act = |c: u8| ActivationKind::from_code(c).ok_or_else(|| Error::format(format!("unknown activation code {c}")));
    let (encoder, decoder) = (act(bytes[9])?, act(bytes[10])?);
    let dim_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as u128;
    let (d, n_users, n_items) = (dim_at(11), dim_at(15), dim_at(19));
    if d == 0 || n_users == 0 || n_items == 0 {
        return Err(Error::format("checkpoint declares a zero dimension"));
    }
    let n_inputs = match kind {
        ModelKind::Dae => n_items,
        ModelKind::Mf => n_users,
    };
    let floats = d * n_inputs + d + n_items * d + n_items;
    let payload = (HEADER_LEN as u128) + 4 * floats;
    if payload + 8 != bytes.len() as u128 {
        return Err(Error::format(format!(
            "checkpoint declares {payload} payload bytes but the file holds {}",
            bytes.len().saturating_sub(8)
        )));
    }
    let payload = payload as usize;
    let trailer = u64::from_le_bytes(bytes[payload..].try_into().expect("8 bytes"));
    if trailer != payload as u64 {
        return Err(Error::format(format!("length trailer {trailer} does not match payload {payload}")));
    }
    let mut values = bytes[HEADER_LEN..payload]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64);
    let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
    let (d, n_inputs, n_items) = (d as usize, n_inputs as usize, n_items as usize);
    let w = Matrix::from_vec(d, n_inputs, take(d * n_inputs))?;
    let b = take(d);
    let w_dec = Matrix::from_vec(n_items, d, take(n_items * d))?;
    let b_dec = take(n_items);
    Ok((ModelParams::new(kind, encoder, decoder, w, b, w_dec, b_dec)?, n_users as usize))
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let bytes = write_checkpoint(&ckpt.params, ckpt.n_users)?;
    fs::File::create(path)?.write_all(&bytes)?;
    fs::write(meta_path(path), ckpt.meta_text())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let (params, n_users) = read_checkpoint(&fs::read(path)?)?;
    let meta_file = meta_path(path);
    let text = fs::read_to_string(&meta_file)
        .map_err(|e| Error::format(format!("cannot read checkpoint metadata {}: {e}", meta_file.display())))?;
    let mut config = TrainConfig::default();
    let (mut iteration, mut users_fp, mut items_fp, mut meta_users, mut kind) = (None, None, None, None, None);
    for (k, v) in parse_kv(&text)? {
        let fmt_err = |e: Error| Error::format(format!("checkpoint metadata `{k}`: {e}"));
        match k.as_str() {
            "format" if v == META_VERSION => {}
            "format" => return Err(Error::format(format!("unsupported metadata version {v}"))),
            "iteration" => iteration = Some(v.parse::<usize>().map_err(|_| Error::format("bad iteration count"))?),
            "n_users" => meta_users = Some(v.parse::<usize>().map_err(|_| Error::format("bad user count"))?),
            "kind" => kind = Some(v.parse::<ModelKind>().map_err(fmt_err)?),
            "users_fingerprint" => users_fp = Some(v),
            "items_fingerprint" => items_fp = Some(v),
            key => {
                let ck = key.strip_prefix("config.").ok_or_else(|| Error::format(format!("unknown metadata key `{key}`")))?;
                // the snapshot lists `preset` first and every field after it
                config.set(ck, &v).map_err(fmt_err)?;
            }
        }
    }
    let missing = |what: &str| Error::format(format!("checkpoint metadata lacks `{what}`"));
    if meta_users.ok_or_else(|| missing("n_users"))? != n_users || kind.ok_or_else(|| missing("kind"))? != params.kind {
        return Err(Error::format("checkpoint metadata disagrees with the binary header"));
    }
    Ok(Checkpoint {
        params,
        config,
        n_users,
        users_fingerprint: users_fp.ok_or_else(|| missing("users_fingerprint"))?,
        items_fingerprint: items_fp.ok_or_else(|| missing("items_fingerprint"))?,
        iteration: iteration.ok_or_else(|| missing("iteration"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngState;

    fn random(kind: ModelKind, seed: u64) -> ModelParams {
        let mut rng = RngState::new(seed);
        let n_in = if kind == ModelKind::Dae { 9 } else { 5 };
        let mut p = ModelParams::zeros(kind, ActivationKind::Tanh, ActivationKind::Sigmoid, 3, n_in, 9);
        let flat: Vec<f64> = (0..p.n_params()).map(|_| rng.next_gaussian()).collect();
        p.set_flat(&flat);
        p
    }

    #[test]
    fn round_trip_at_f32_precision() {
        for kind in [ModelKind::Dae, ModelKind::Mf] {
            let p = random(kind, 4);
            let (q, n_users) = read_checkpoint(&write_checkpoint(&p, 5).unwrap()).unwrap();
            assert_eq!(n_users, 5);
            assert_eq!((q.kind, q.encoder, q.decoder), (p.kind, p.encoder, p.decoder));
            for (a, b) in p.to_flat().iter().zip(q.to_flat()) {
                assert_eq!(b, *a as f32 as f64);
            }
        }
    }

    #[test]
    fn layout_is_exact() {
        let p = random(ModelKind::Dae, 1);
        let bytes = write_checkpoint(&p, 5).unwrap();
        assert_eq!(&bytes[..8], b"MILREC01");
        assert_eq!(&bytes[8..11], &[0, 2, 1]);
        assert_eq!(u32::from_le_bytes(bytes[11..15].try_into().unwrap()), 3);
        let n = 27 + 3 + 27 + 9;
        assert_eq!(bytes.len(), 23 + 4 * n + 8);
        let trailer = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
        assert_eq!(trailer as usize, bytes.len() - 8);
    }

    #[test]
    fn corrupt_files_are_format_errors() {
        let good = write_checkpoint(&random(ModelKind::Mf, 2), 5).unwrap();
        let is_format = |b: &[u8]| matches!(read_checkpoint(b), Err(Error::Format(_)));
        assert!(is_format(&[]));
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(is_format(&bad));
        assert!(is_format(&good[..good.len() - 1]));
        let mut grown = good.clone();
        grown[15..19].copy_from_slice(&6u32.to_le_bytes());
        assert!(is_format(&grown));
        let mut huge = good.clone();
        huge[11..15].copy_from_slice(&u32::MAX.to_le_bytes());
        huge[19..23].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(is_format(&huge));
        let mut trailer = good.clone();
        let n = trailer.len();
        trailer[n - 1] ^= 1;
        assert!(is_format(&trailer));
    }

    #[test]
    fn save_and_load_with_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ck = Checkpoint {
            params: random(ModelKind::Dae, 3),
            config: TrainConfig { dim: 3, ..TrainConfig::preset("mil-sig-sig").unwrap() },
            n_users: 5,
            users_fingerprint: "aa".into(),
            items_fingerprint: "bb".into(),
            iteration: 17,
        };
        save_checkpoint(&ck, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.config, ck.config);
        assert_eq!((back.iteration, back.n_users), (17, 5));
        assert!(back.check_vocabularies("aa", "bb").is_ok());
        assert!(matches!(back.check_vocabularies("aa", "cc"), Err(Error::Input { .. })));
        fs::remove_file(meta_path(&path)).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Format(_))));
    }
}
