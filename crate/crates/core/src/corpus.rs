//! Line-aligned parallel corpora and monolingual training text.
//!
//! On disk a parallel corpus is a directory holding one `<code>.txt` file per
//! language and a `manifest.json`:
//!
//! ```json
//! {"pivot": "eng_Latn", "languages": {"eng_Latn": "eng_Latn.txt", "bul_Cyrl": "bul_Cyrl.txt"}, "format_version": 1}
//! ```
//!
//! Files are UTF-8 without BOM, LF-terminated, one sentence per line. Line `i`
//! of every file is a translation of line `i` of every other file.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::model_io::{write_file, FORMAT_VERSION};

pub const MANIFEST_FILE: &str = "manifest.json";

/// FLORES-style language identifier such as `eng_Latn`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        if code.is_empty() || code.chars().any(char::is_whitespace) {
            return Err(Error::Validation(format!("invalid language code {code:?}")));
        }
        Ok(Self(code))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LanguageCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

impl TryFrom<String> for LanguageCode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Self::new(s)
    }
}

impl From<LanguageCode> for String {
    fn from(code: LanguageCode) -> Self {
        code.0
    }
}

impl std::borrow::Borrow<str> for LanguageCode {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Apply NFC normalization to every sentence.
    pub nfc: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pivot: Option<LanguageCode>,
    languages: BTreeMap<LanguageCode, Vec<String>>,
    n_sentences: usize,
}

impl ParallelCorpus {
    pub fn new(
        languages: impl IntoIterator<Item = (LanguageCode, Vec<String>)>,
        pivot: Option<LanguageCode>,
    ) -> Result<Self> {
        let mut map: BTreeMap<LanguageCode, Vec<String>> = BTreeMap::new();
        let mut first: Option<(LanguageCode, usize)> = None;
        for (code, sentences) in languages {
            if let Some(i) = sentences.iter().position(|s| s.contains(['\n', '\r'])) {
                return Err(Error::Validation(format!(
                    "{code}: sentence {i} contains a line terminator"
                )));
            }
            match &first {
                None => first = Some((code.clone(), sentences.len())),
                Some((c, n)) if *n != sentences.len() => {
                    return Err(Error::Alignment {
                        left: c.to_string(),
                        left_count: *n,
                        right: code.to_string(),
                        right_count: sentences.len(),
                    })
                }
                _ => {}
            }
            if map.contains_key(&code) {
                return Err(Error::Validation(format!("duplicate language code {code}")));
            }
            map.insert(code, sentences);
        }
        if let Some(p) = &pivot {
            if !map.contains_key(p) {
                return Err(Error::Validation(format!("pivot {p} is not in the corpus")));
            }
        }
        Ok(Self {
            pivot,
            n_sentences: first.map_or(0, |(_, n)| n),
            languages: map,
        })
    }

    pub fn pivot(&self) -> Option<&LanguageCode> {
        self.pivot.as_ref()
    }

    pub fn n_sentences(&self) -> usize {
        self.n_sentences
    }

    pub fn languages(&self) -> impl Iterator<Item = &LanguageCode> {
        self.languages.keys()
    }

    pub fn len(&self) -> usize {
        self.languages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.languages.is_empty()
    }

    pub fn contains(&self, code: &str) -> bool {
        self.languages.contains_key(code)
    }

    pub fn sentences(&self, code: &str) -> Option<&[String]> {
        self.languages.get(code).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LanguageCode, &[String])> {
        self.languages.iter().map(|(c, s)| (c, s.as_slice()))
    }

    /// Line indices that are empty in at least one language. These pairs are
    /// left out of premium sums.
    pub fn empty_line_indices(&self) -> Vec<usize> {
        (0..self.n_sentences)
            .filter(|&i| self.languages.values().any(|s| s[i].is_empty()))
            .collect()
    }

    /// Line indices that are non-empty in every language.
    pub fn aligned_line_indices(&self) -> Vec<usize> {
        (0..self.n_sentences)
            .filter(|&i| self.languages.values().all(|s| !s[i].is_empty()))
            .collect()
    }
}

/// Codepoint total per language over the aligned line pairs.
pub fn char_counts(corpus: &ParallelCorpus) -> BTreeMap<LanguageCode, u64> {
    let aligned = corpus.aligned_line_indices();
    corpus
        .iter()
        .map(|(code, sents)| {
            let n = aligned.iter().map(|&i| sents[i].chars().count() as u64).sum();
            (code.clone(), n)
        })
        .collect()
}

struct ManifestEntries(Vec<(String, String)>);

impl<'de> Deserialize<'de> for ManifestEntries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = ManifestEntries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of language code to file path")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some(entry) = map.next_entry::<String, String>()? {
                    entries.push(entry);
                }
                Ok(ManifestEntries(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    pivot: String,
    languages: ManifestEntries,
    format_version: u32,
}

#[derive(Serialize)]
struct ManifestOut<'a> {
    pivot: &'a str,
    languages: BTreeMap<&'a str, String>,
    format_version: u32,
}

pub fn load_parallel(manifest_path: impl AsRef<Path>) -> Result<ParallelCorpus> {
    load_parallel_with(manifest_path, LoadOptions::default())
}

/// Loads a corpus from a manifest file, or from a directory containing
/// `manifest.json`.
pub fn load_parallel_with(manifest_path: impl AsRef<Path>, options: LoadOptions) -> Result<ParallelCorpus> {
    let mut path = manifest_path.as_ref().to_path_buf();
    if path.is_dir() {
        path = path.join(MANIFEST_FILE);
    }
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_slice(&bytes).map_err(|e| Error::parse(&path, e.line(), e.to_string()))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "{}: unsupported format_version {}",
            path.display(),
            manifest.format_version
        )));
    }
    let entries = manifest.languages.0;
    if entries.len() < 2 {
        return Err(Error::Validation(format!(
            "{}: a parallel corpus needs at least 2 languages, found {}",
            path.display(),
            entries.len()
        )));
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();

    let mut seen = BTreeMap::new();
    for (code, _) in &entries {
        if seen.insert(code.as_str(), ()).is_some() {
            return Err(Error::Validation(format!("duplicate language code {code}")));
        }
    }
    let mut languages = Vec::with_capacity(entries.len());
    for (code, rel) in &entries {
        let code = LanguageCode::new(code.as_str())?;
        let file = base.join(rel);
        let mut sentences = read_lines(&file)?;
        if options.nfc {
            for s in &mut sentences {
                *s = s.nfc().collect();
            }
        }
        languages.push((code, sentences));
    }
    // Alignment errors name languages in code order, whatever the manifest order.
    languages.sort_by(|a, b| a.0.cmp(&b.0));
    let pivot = LanguageCode::new(manifest.pivot)?;
    let corpus = ParallelCorpus::new(languages, Some(pivot))?;
    let empty = corpus.empty_line_indices().len();
    if empty > 0 {
        log::info!("{}: {empty} line pairs contain an empty sentence", path.display());
    }
    Ok(corpus)
}

/// Writes `<code>.txt` files plus `manifest.json` into `dir`.
pub fn write_parallel(corpus: &ParallelCorpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = BTreeMap::new();
    for (code, sents) in corpus.iter() {
        let name = format!("{code}.txt");
        let mut text = String::with_capacity(sents.iter().map(|s| s.len() + 1).sum());
        for s in sents {
            text.push_str(s);
            text.push('\n');
        }
        write_file(&dir.join(&name), &text)?;
        files.insert(code.as_str(), name);
    }
    let pivot = corpus
        .pivot()
        .or_else(|| corpus.languages().next())
        .map(LanguageCode::as_str)
        .unwrap_or_default();
    let manifest = ManifestOut {
        pivot,
        languages: files,
        format_version: FORMAT_VERSION,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write_file(&dir.join(MANIFEST_FILE), &json)
}

/// Reads a UTF-8 text file as LF-separated lines. A final newline is
/// optional; CR and a leading BOM are rejected.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Encoding {
        path: PathBuf::from(path),
        offset: e.utf8_error().valid_up_to(),
    })?;
    if text.starts_with('\u{feff}') {
        return Err(Error::parse(path, 1, "byte order mark is not allowed"));
    }
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let body = text.strip_suffix('\n').unwrap_or(&text);
    body.split('\n')
        .enumerate()
        .map(|(i, line)| {
            if line.contains('\r') {
                Err(Error::parse(path, i + 1, "CR line terminators are not allowed"))
            } else {
                Ok(line.to_owned())
            }
        })
        .collect()
}

/// Monolingual training documents: the non-empty lines of a file, or of every
/// `.txt` file in a directory (in file-name order).
pub fn load_documents(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut docs = Vec::new();
    for f in files {
        docs.extend(read_lines(&f)?.into_iter().filter(|l| !l.is_empty()));
    }
    Ok(docs)
}
