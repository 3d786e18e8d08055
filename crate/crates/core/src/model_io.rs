//! Model directories: `vocab.tsv`, `merges.tsv` and `meta.json`.
//!
//! ```text
//! vocab.tsv   id<TAB>hex           (lowercase hex of the token bytes)
//! merges.tsv  rank<TAB>left<TAB>right<TAB>result
//! meta.json   {"boundary_mode": "whitespace", "format_version": 1}
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bpe::{BoundaryMode, BpeModel};
use crate::error::{Error, Result};
use crate::vocab::{hex, unhex, MergeRule, TokenId, Vocabulary};

pub const FORMAT_VERSION: u32 = 1;
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const MERGES_FILE: &str = "merges.tsv";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    boundary_mode: BoundaryMode,
    format_version: u32,
}

pub fn save_model(model: &BpeModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_vocab(model.vocab(), dir)?;
    let mut merges = String::new();
    for m in model.merges() {
        merges.push_str(&format!("{}\t{}\t{}\t{}\n", m.rank, m.left, m.right, m.result));
    }
    write_file(&dir.join(MERGES_FILE), &merges)?;
    write_meta(model.boundary_mode(), dir)
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<BpeModel> {
    let dir = dir.as_ref();
    let mode = read_meta(dir)?;
    let vocab = read_vocab(dir)?;
    let path = dir.join(MERGES_FILE);
    let text = read_file(&path)?;
    let mut merges = Vec::new();
    for (lineno, line) in lines(&text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                &path,
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let num = |s: &str, what: &str| -> Result<u32> {
            s.parse::<u32>()
                .map_err(|_| Error::parse(&path, lineno, format!("invalid {what} {s:?}")))
        };
        merges.push(MergeRule {
            rank: num(fields[0], "rank")?,
            left: num(fields[1], "left id")?,
            right: num(fields[2], "right id")?,
            result: num(fields[3], "result id")?,
        });
    }
    if vocab.len() != 256 + merges.len() {
        return Err(Error::Validation(format!(
            "{}: {} tokens but {} merges",
            dir.display(),
            vocab.len(),
            merges.len()
        )));
    }
    BpeModel::new(vocab, merges, mode)
}

pub(crate) fn write_vocab(vocab: &Vocabulary, dir: &Path) -> Result<()> {
    let mut out = String::new();
    for (id, tok) in vocab.iter() {
        out.push_str(&format!("{id}\t{}\n", hex(tok)));
    }
    write_file(&dir.join(VOCAB_FILE), &out)
}

pub(crate) fn read_vocab(dir: &Path) -> Result<Vocabulary> {
    let path = dir.join(VOCAB_FILE);
    let text = read_file(&path)?;
    let mut tokens = Vec::new();
    for (lineno, line) in lines(&text) {
        let (id, hx) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(&path, lineno, "expected id<TAB>hex"))?;
        let id: TokenId = id
            .parse()
            .map_err(|_| Error::parse(&path, lineno, format!("invalid id {id:?}")))?;
        if id as usize != tokens.len() {
            return Err(Error::parse(
                &path,
                lineno,
                format!("id {id} out of order (expected {})", tokens.len()),
            ));
        }
        let bytes = unhex(hx)
            .filter(|b| !b.is_empty())
            .ok_or_else(|| Error::parse(&path, lineno, format!("invalid hex {hx:?}")))?;
        tokens.push(bytes);
    }
    Vocabulary::from_tokens(tokens)
}

pub(crate) fn write_meta(mode: BoundaryMode, dir: &Path) -> Result<()> {
    write_file(
        &dir.join(META_FILE),
        &format!("{{\"boundary_mode\": \"{mode}\", \"format_version\": {FORMAT_VERSION}}}\n"),
    )
}

pub(crate) fn read_meta(dir: &Path) -> Result<BoundaryMode> {
    let path = dir.join(META_FILE);
    let text = read_file(&path)?;
    let meta: Meta = serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.line(), e.to_string()))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "{}: unsupported format_version {}",
            path.display(),
            meta.format_version
        )));
    }
    Ok(meta.boundary_mode)
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::Encoding {
        path: PathBuf::from(path),
        offset: e.utf8_error().valid_up_to(),
    })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Non-empty lines with 1-based line numbers. Only LF terminators are accepted.
pub(crate) fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::bpe_train;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let model = bpe_train(&["aaabdaaabac"], 259, BoundaryMode::None).unwrap();
        save_model(&model, dir.path()).unwrap();
        let loaded = load_model(dir.path()).unwrap();
        assert_eq!(loaded, model);

        assert_eq!(
            fs::read_to_string(dir.path().join(MERGES_FILE)).unwrap(),
            "0\t97\t97\t256\n1\t256\t97\t257\n2\t257\t98\t258\n"
        );
        assert_eq!(
            fs::read_to_string(dir.path().join(META_FILE)).unwrap(),
            "{\"boundary_mode\": \"none\", \"format_version\": 1}\n"
        );
        let vocab = fs::read_to_string(dir.path().join(VOCAB_FILE)).unwrap();
        assert!(vocab.starts_with("0\t00\n1\t01\n"));
        assert!(vocab.ends_with("256\t6161\n257\t616161\n258\t61616162\n"));

        let dir2 = tempfile::tempdir().unwrap();
        save_model(&loaded, dir2.path()).unwrap();
        for f in [VOCAB_FILE, MERGES_FILE, META_FILE] {
            assert_eq!(
                fs::read(dir.path().join(f)).unwrap(),
                fs::read(dir2.path().join(f)).unwrap()
            );
        }
    }

    #[test]
    fn byte_only_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        save_model(&BpeModel::byte_only(BoundaryMode::Whitespace), dir.path()).unwrap();
        let m = load_model(dir.path()).unwrap();
        assert_eq!(m.vocab().len(), 256);
        assert!(m.merges().is_empty());
        assert_eq!(m.boundary_mode(), BoundaryMode::Whitespace);
        assert_eq!(fs::read_to_string(dir.path().join(MERGES_FILE)).unwrap(), "");
    }

    #[test]
    fn duplicate_rank_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let model = bpe_train(&["aaabdaaabac"], 259, BoundaryMode::None).unwrap();
        save_model(&model, dir.path()).unwrap();
        write_file(
            &dir.path().join(MERGES_FILE),
            "0\t97\t97\t256\n0\t256\t97\t257\n2\t257\t98\t258\n",
        )
        .unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let model = bpe_train(&["aaabdaaabac"], 259, BoundaryMode::None).unwrap();
        save_model(&model, dir.path()).unwrap();
        write_file(&dir.path().join(MERGES_FILE), "0\t97\t97\t256\n1\tx\t97\t257\n").unwrap();
        match load_model(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        save_model(&model, dir.path()).unwrap();
        let vocab = fs::read_to_string(dir.path().join(VOCAB_FILE)).unwrap();
        write_file(&dir.path().join(VOCAB_FILE), &vocab.replace("3\t03\n", "3\tXY\n")).unwrap();
        match load_model(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_meta() {
        let dir = tempfile::tempdir().unwrap();
        save_model(&BpeModel::byte_only(BoundaryMode::None), dir.path()).unwrap();
        write_file(
            &dir.path().join(META_FILE),
            "{\"boundary_mode\": \"none\", \"format_version\": 2}",
        )
        .unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::Validation(_))));
        write_file(
            &dir.path().join(META_FILE),
            "{\"boundary_mode\": \"tabs\", \"format_version\": 1}",
        )
        .unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::Parse { .. })));
    }
}
