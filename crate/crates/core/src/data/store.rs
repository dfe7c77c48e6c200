//! On-disk layout of a prepared dataset directory.
//!
//! * `users.tsv`, `items.tsv`: `index\tid`, one line per vocabulary entry.
//! * `split.tsv`: `user_index\titem_index\tsplit_tag` per pair, tags
//!   `train`, `valid`, `test`, ordered by user, then item.
//! * `stats.txt`: `key = value` summary.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{popularity, tail_intervals, vocab_from_ids, Interactions, SplitDataset, Vocabulary};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "split.tsv";
pub const USERS_FILE: &str = "users.tsv";
pub const ITEMS_FILE: &str = "items.tsv";
pub const STATS_FILE: &str = "stats.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub train_pairs: usize,
    pub valid_pairs: usize,
    pub test_pairs: usize,
    pub n33: usize,
    pub n66: usize,
}

impl DatasetStats {
    pub fn of(split: &SplitDataset) -> Result<Self> {
        let t = tail_intervals(&popularity(&split.train)?)?;
        Ok(DatasetStats {
            users: split.n_users(),
            items: split.n_items(),
            train_pairs: split.train.n_pairs(),
            valid_pairs: split.valid.n_pairs(),
            test_pairs: split.test.n_pairs(),
            n33: t.n33,
            n66: t.n66,
        })
    }

    pub fn render(&self) -> String {
        format!(
            "users = {}\nitems = {}\ntrain_pairs = {}\nvalid_pairs = {}\ntest_pairs = {}\nshort_to_medium = {}\nmedium_to_long = {}\n",
            self.users, self.items, self.train_pairs, self.valid_pairs, self.test_pairs, self.n33, self.n66
        )
    }
}

pub fn write_manifest<W: Write>(mut out: W, split: &SplitDataset) -> Result<()> {
    let mut buf = String::new();
    for u in 0..split.n_users() {
        let mut rows: Vec<(u32, &str)> = Vec::new();
        rows.extend(split.train.items_of(u).iter().map(|&i| (i, "train")));
        rows.extend(split.valid.items_of(u).iter().map(|&i| (i, "valid")));
        rows.extend(split.test.items_of(u).iter().map(|&i| (i, "test")));
        rows.sort_unstable();
        for (i, tag) in rows {
            writeln!(buf, "{u}\t{i}\t{tag}").expect("write to string");
        }
        if buf.len() > 1 << 20 {
            out.write_all(buf.as_bytes())?;
            buf.clear();
        }
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    let mut s = String::new();
    for (k, id) in vocab.ids().iter().enumerate() {
        writeln!(s, "{k}\t{id}").expect("write to string");
    }
    fs::write(path, s)?;
    Ok(())
}

/// Writes the vocabularies, manifest and stats summary into `dir`, creating it if needed.
pub fn write_data_dir(dir: &Path, split: &SplitDataset) -> Result<DatasetStats> {
    fs::create_dir_all(dir)?;
    write_vocab(&dir.join(USERS_FILE), &split.users)?;
    write_vocab(&dir.join(ITEMS_FILE), &split.items)?;
    let file = fs::File::create(dir.join(MANIFEST_FILE))?;
    let mut w = std::io::BufWriter::new(file);
    write_manifest(&mut w, split)?;
    w.flush()?;
    let stats = DatasetStats::of(split)?;
    fs::write(dir.join(STATS_FILE), stats.render())?;
    Ok(stats)
}

fn read_vocab(path: &Path) -> Result<Vocabulary> {
    let text = fs::read_to_string(path).map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    let mut ids = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let (idx, id) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(format!("{}:{}: expected `index<TAB>id`", path.display(), k + 1)))?;
        if idx.parse::<usize>().ok() != Some(k) {
            return Err(Error::format(format!("{}:{}: index {idx} out of sequence", path.display(), k + 1)));
        }
        ids.push(id.to_string());
    }
    vocab_from_ids(ids)
}

/// Parses a manifest against known catalogue sizes.
pub fn read_manifest<R: BufRead>(input: R, n_users: usize, n_items: usize) -> Result<[Interactions; 3]> {
    let mut parts: [Vec<Vec<u32>>; 3] = [vec![Vec::new(); n_users], vec![Vec::new(); n_users], vec![Vec::new(); n_users]];
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::format(format!("manifest line {}: {what}", k + 1));
        let mut f = line.split('\t');
        let (u, i, tag) = match (f.next(), f.next(), f.next(), f.next()) {
            (Some(u), Some(i), Some(t), None) => (u, i, t),
            _ => return Err(bad("expected 3 tab-separated fields")),
        };
        let u: usize = u.parse().map_err(|_| bad("bad user index"))?;
        let i: u32 = i.parse().map_err(|_| bad("bad item index"))?;
        if u >= n_users || i as usize >= n_items {
            return Err(bad("index out of range"));
        }
        let part = match tag {
            "train" => 0,
            "valid" => 1,
            "test" => 2,
            _ => return Err(bad("unknown split tag")),
        };
        parts[part][u].push(i);
    }
    Ok(parts.map(|lists| Interactions::from_lists(n_items, lists)))
}

pub fn read_data_dir(dir: &Path) -> Result<SplitDataset> {
    let users = read_vocab(&dir.join(USERS_FILE))?;
    let items = read_vocab(&dir.join(ITEMS_FILE))?;
    let path = dir.join(MANIFEST_FILE);
    let file = fs::File::open(&path).map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    let [train, valid, test] = read_manifest(BufReader::new(file), users.len(), items.len())?;
    SplitDataset::new(train, valid, test, users, items).map_err(|e| Error::format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{binarize, split, RatingRecord, RawRatings};
    use crate::numeric::RngState;

    fn sample_split() -> SplitDataset {
        let mut records = Vec::new();
        for u in 0..8 {
            for i in 0..6 {
                if (u + i) % 3 != 0 {
                    records.push(RatingRecord { user: format!("u{u}"), item: format!("m{i}"), rating: 5.0, timestamp: None });
                }
            }
        }
        let c = binarize(&RawRatings { records, malformed: 0 }, 4.0);
        split(&c, 0.2, 0.2, &mut RngState::new(4)).unwrap()
    }

    #[test]
    fn data_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample_split();
        let stats = write_data_dir(dir.path(), &s).unwrap();
        assert_eq!(stats.users, 8);
        let back = read_data_dir(dir.path()).unwrap();
        assert_eq!(back.users, s.users);
        assert_eq!(back.items, s.items);
        for (a, b) in [(&back.train, &s.train), (&back.valid, &s.valid), (&back.test, &s.test)] {
            assert_eq!(a.pairs().collect::<Vec<_>>(), b.pairs().collect::<Vec<_>>());
        }
        let text = fs::read_to_string(dir.path().join(STATS_FILE)).unwrap();
        assert!(text.contains("items = 6"));
    }

    #[test]
    fn manifest_rejects_garbage() {
        assert!(read_manifest("0\t1\ttrain\n".as_bytes(), 1, 1).is_err());
        assert!(read_manifest("0\t0\tholdout\n".as_bytes(), 1, 1).is_err());
        assert!(read_manifest("0\t0\n".as_bytes(), 1, 1).is_err());
        let [t, v, s] = read_manifest("0\t0\ttest\n".as_bytes(), 1, 1).unwrap();
        assert_eq!((t.n_pairs(), v.n_pairs(), s.n_pairs()), (0, 0, 1));
    }
}
