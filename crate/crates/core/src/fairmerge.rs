//! Parity-driven merging of monolingual vocabularies.
//!
//! One BPE model is trained per language. Starting from the 256 byte tokens,
//! the shared vocabulary then repeatedly receives the most frequent unused
//! token of whichever language currently has the highest premium. The merged
//! vocabulary is encoded by greedy longest match, since merge ranks from
//! different monolingual models do not interleave.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use memchr::memmem;
use rayon::prelude::*;

use crate::bpe::{bpe_train, BoundaryMode, BpeModel};
use crate::corpus::{LanguageCode, ParallelCorpus};
use crate::encoding::{Encoding, Tokenizer};
use crate::error::{Error, Result};
use crate::longest_match::{ByteTrie, LongestMatch};
use crate::model_io::{lines, read_file, read_meta, read_vocab, write_file, write_meta, write_vocab};
use crate::parity::{corpus_premiums, Aggregation, PremiumReport};
use crate::vocab::{hex, unhex, TokenId, Vocabulary, BYTE_BASE};

pub const PROVENANCE_FILE: &str = "provenance.tsv";

/// A language's BPE model plus its merge tokens ordered for adoption.
#[derive(Debug, Clone, PartialEq)]
pub struct MonolingualModel {
    pub lang: LanguageCode,
    pub model: BpeModel,
    /// Merge-result ids by descending frequency, ties by ascending rank.
    pub candidate_queue: Vec<TokenId>,
    /// Non-overlapping occurrence count of each merge token in the corpus.
    pub frequencies: BTreeMap<TokenId, u64>,
}

impl MonolingualModel {
    pub fn train(
        lang: LanguageCode,
        sentences: &[String],
        vocab_size: usize,
        boundary_mode: BoundaryMode,
    ) -> Result<Self> {
        let docs: Vec<&str> = sentences.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
        let model = bpe_train(&docs, vocab_size, boundary_mode)?;
        Ok(Self::from_model(lang, model, sentences))
    }

    /// Ranks `model`'s merge tokens by their frequency in `sentences`.
    pub fn from_model(lang: LanguageCode, model: BpeModel, sentences: &[String]) -> Self {
        let frequencies: BTreeMap<TokenId, u64> = model
            .merges()
            .par_iter()
            .map(|m| {
                let tok = model.vocab().token(m.result).unwrap_or_default();
                let finder = memmem::Finder::new(tok);
                let n = sentences
                    .iter()
                    .map(|s| finder.find_iter(s.as_bytes()).count() as u64)
                    .sum();
                (m.result, n)
            })
            .collect();
        let mut candidate_queue: Vec<TokenId> = model.merges().iter().map(|m| m.result).collect();
        // Result ids ascend with rank, so the id is the rank tie-break.
        candidate_queue.sort_by(|a, b| frequencies[b].cmp(&frequencies[a]).then(a.cmp(b)));
        Self {
            lang,
            model,
            candidate_queue,
            frequencies,
        }
    }

    pub fn candidate_bytes(&self, id: TokenId) -> &[u8] {
        self.model.vocab().token(id).unwrap_or_default()
    }
}

/// Trains one model per language, each on that language's sentences only.
pub fn train_monolingual_all(
    corpus: &ParallelCorpus,
    per_lang_vocab_size: usize,
    boundary_mode: BoundaryMode,
) -> Result<BTreeMap<LanguageCode, MonolingualModel>> {
    let langs: Vec<(&LanguageCode, &[String])> = corpus.iter().collect();
    let models = langs
        .par_iter()
        .map(|(code, sents)| MonolingualModel::train((*code).clone(), sents, per_lang_vocab_size, boundary_mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(models.into_iter().map(|m| (m.lang.clone(), m)).collect())
}

/// Denominator of the premiums tracked while merging.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Reference {
    /// The language with the fewest tokens at each step.
    #[default]
    Auto,
    Language(LanguageCode),
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::Auto => f.write_str("auto"),
            Reference::Language(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Reference::Auto),
            code => Ok(Reference::Language(LanguageCode::new(code)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeState {
    pub shared_vocab: Vocabulary,
    pub per_lang_token_totals: BTreeMap<LanguageCode, u64>,
    pub premiums: BTreeMap<LanguageCode, f64>,
    /// Tokens added so far.
    pub step: usize,
}

impl MergeState {
    pub fn max_premium(&self) -> f64 {
        self.premiums.values().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One addition made by [`FairMerger::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    pub id: TokenId,
    pub source: LanguageCode,
    /// The source language's premium before the addition.
    pub source_premium: f64,
}

struct LangLines<'a> {
    code: LanguageCode,
    lines: Vec<&'a [u8]>,
    counts: Vec<u64>,
}

/// Incremental driver for the greedy merge.
pub struct FairMerger<'a> {
    models: &'a BTreeMap<LanguageCode, MonolingualModel>,
    reference: Reference,
    langs: Vec<LangLines<'a>>,
    cursors: BTreeMap<LanguageCode, usize>,
    trie: ByteTrie,
    state: MergeState,
    provenance: BTreeMap<TokenId, LanguageCode>,
}

impl<'a> FairMerger<'a> {
    pub fn new(
        corpus: &'a ParallelCorpus,
        models: &'a BTreeMap<LanguageCode, MonolingualModel>,
        reference: Reference,
    ) -> Result<Self> {
        if let Some(code) = models.keys().find(|c| !corpus.contains(c.as_str())) {
            return Err(Error::Validation(format!("model for {code} has no corpus")));
        }
        if let Reference::Language(code) = &reference {
            if !corpus.contains(code.as_str()) {
                return Err(Error::Validation(format!("reference {code} is not in the corpus")));
            }
        }
        let aligned = corpus.aligned_line_indices();
        let shared_vocab = Vocabulary::byte_base();
        let trie = ByteTrie::from_vocab(&shared_vocab);
        let langs: Vec<LangLines> = corpus
            .iter()
            .map(|(code, sents)| {
                let lines: Vec<&[u8]> = aligned.iter().map(|&i| sents[i].as_bytes()).collect();
                let counts = lines.iter().map(|l| l.len() as u64).collect();
                LangLines {
                    code: code.clone(),
                    lines,
                    counts,
                }
            })
            .collect();
        let cursors = models.keys().map(|c| (c.clone(), 0)).collect();
        let mut merger = Self {
            models,
            reference,
            langs,
            cursors,
            trie,
            state: MergeState {
                shared_vocab,
                per_lang_token_totals: BTreeMap::new(),
                premiums: BTreeMap::new(),
                step: 0,
            },
            provenance: BTreeMap::new(),
        };
        merger.refresh_totals()?;
        Ok(merger)
    }

    pub fn state(&self) -> &MergeState {
        &self.state
    }

    pub fn provenance(&self) -> &BTreeMap<TokenId, LanguageCode> {
        &self.provenance
    }

    fn refresh_totals(&mut self) -> Result<()> {
        let totals: BTreeMap<LanguageCode, u64> = self
            .langs
            .iter()
            .map(|l| (l.code.clone(), l.counts.iter().sum()))
            .collect();
        let reference_total = match &self.reference {
            Reference::Auto => totals.values().copied().min().unwrap_or(0),
            Reference::Language(code) => totals[code],
        };
        if reference_total == 0 {
            return Err(Error::DegenerateDenominator(format!(
                "reference ({}) has zero tokens",
                self.reference
            )));
        }
        self.state.premiums = totals
            .iter()
            .map(|(c, &t)| (c.clone(), t as f64 / reference_total as f64))
            .collect();
        self.state.per_lang_token_totals = totals;
        Ok(())
    }

    /// Drops queue heads that are already in the shared vocabulary.
    fn skip_present(&mut self) {
        for (code, cursor) in self.cursors.iter_mut() {
            let m = &self.models[code];
            while *cursor < m.candidate_queue.len()
                && self
                    .state
                    .shared_vocab
                    .contains(m.candidate_bytes(m.candidate_queue[*cursor]))
            {
                *cursor += 1;
            }
        }
    }

    /// Languages that still have a candidate to contribute.
    pub fn eligible(&mut self) -> Vec<LanguageCode> {
        self.skip_present();
        self.cursors
            .iter()
            .filter(|(c, &cur)| cur < self.models[*c].candidate_queue.len())
            .map(|(c, _)| c.clone())
            .collect()
    }

    /// Adds one token from the highest-premium language (ties go to the
    /// smallest language code) and re-encodes the affected lines.
    pub fn step(&mut self) -> Result<MergeStep> {
        let eligible = self.eligible();
        // Premiums share one denominator, so the largest total has the largest premium.
        let mut source: Option<&LanguageCode> = None;
        for code in &eligible {
            let better = match source {
                None => true,
                Some(best) => self.state.per_lang_token_totals[code] > self.state.per_lang_token_totals[best],
            };
            if better {
                source = Some(code);
            }
        }
        let source = source.ok_or(Error::Exhausted)?.clone();
        let source_premium = self.state.premiums[&source];

        let model = &self.models[&source];
        let cursor = self.cursors.get_mut(&source).expect("eligible language has a cursor");
        let token = model.candidate_bytes(model.candidate_queue[*cursor]).to_vec();
        *cursor += 1;

        let id = self.state.shared_vocab.push(token.clone())?;
        self.trie.insert(&token, id);
        self.provenance.insert(id, source.clone());

        let finder = memmem::Finder::new(&token);
        let trie = &self.trie;
        self.langs.par_iter_mut().for_each(|lang| {
            for (line, count) in lang.lines.iter().zip(lang.counts.iter_mut()) {
                if finder.find(line).is_some() {
                    *count = trie.count(line) as u64;
                }
            }
        });
        self.state.step += 1;
        self.refresh_totals()?;
        log::debug!(
            "step {}: +{} from {source} (premium {source_premium:.4}, max now {:.4})",
            self.state.step,
            hex(&token),
            self.state.max_premium()
        );
        Ok(MergeStep {
            id,
            source,
            source_premium,
        })
    }

    pub fn into_tokenizer(self) -> FairTokenizer {
        FairTokenizer::new(self.state.shared_vocab, self.provenance).expect("merge provenance covers every added token")
    }
}

/// Runs the greedy merge until the vocabulary reaches `target_vocab_size` or
/// every candidate queue is used up.
pub fn fair_merge(
    corpus: &ParallelCorpus,
    models: &BTreeMap<LanguageCode, MonolingualModel>,
    target_vocab_size: usize,
    reference: Reference,
) -> Result<(FairTokenizer, MergeState)> {
    if target_vocab_size < BYTE_BASE {
        return Err(Error::InvalidArgument(format!(
            "target vocabulary size {target_vocab_size} is below the {BYTE_BASE} byte tokens"
        )));
    }
    let mut merger = FairMerger::new(corpus, models, reference)?;
    while merger.state().shared_vocab.len() < target_vocab_size {
        match merger.step() {
            Ok(_) => {}
            Err(Error::Exhausted) => break,
            Err(e) => return Err(e),
        }
    }
    let state = merger.state().clone();
    Ok((merger.into_tokenizer(), state))
}

/// Shared vocabulary with greedy longest-match encoding and byte fallback.
#[derive(Debug, Clone)]
pub struct FairTokenizer {
    matcher: LongestMatch,
    provenance: BTreeMap<TokenId, LanguageCode>,
}

impl PartialEq for FairTokenizer {
    fn eq(&self, other: &Self) -> bool {
        self.provenance == other.provenance && self.vocab() == other.vocab()
    }
}

impl FairTokenizer {
    /// Every id from 256 up needs exactly one provenance entry.
    pub fn new(vocab: Vocabulary, provenance: BTreeMap<TokenId, LanguageCode>) -> Result<Self> {
        let expected = vocab.len() - BYTE_BASE;
        let covered = provenance
            .keys()
            .all(|&id| id as usize >= BYTE_BASE && (id as usize) < vocab.len());
        if provenance.len() != expected || !covered {
            return Err(Error::Validation(format!(
                "provenance has {} entries for {expected} added tokens",
                provenance.len()
            )));
        }
        Ok(Self {
            matcher: LongestMatch::new(vocab),
            provenance,
        })
    }

    pub fn byte_only() -> Self {
        Self::new(Vocabulary::byte_base(), BTreeMap::new()).expect("byte base has no added tokens")
    }

    pub fn vocab(&self) -> &Vocabulary {
        self.matcher.vocab()
    }

    pub fn provenance(&self) -> &BTreeMap<TokenId, LanguageCode> {
        &self.provenance
    }

    /// Writes `vocab.tsv`, `meta.json` and `provenance.tsv` (no merges).
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_vocab(self.vocab(), dir)?;
        write_meta(BoundaryMode::None, dir)?;
        let mut out = String::new();
        for (id, lang) in &self.provenance {
            let tok = self.vocab().token(*id).unwrap_or_default();
            out.push_str(&format!("{id}\t{}\t{lang}\n", hex(tok)));
        }
        write_file(&dir.join(PROVENANCE_FILE), &out)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        read_meta(dir)?;
        let vocab = read_vocab(dir)?;
        let path = dir.join(PROVENANCE_FILE);
        let text = read_file(&path)?;
        let mut provenance = BTreeMap::new();
        for (lineno, line) in lines(&text) {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(
                    &path,
                    lineno,
                    format!("expected 3 fields, found {}", f.len()),
                ));
            }
            let id: TokenId = f[0]
                .parse()
                .map_err(|_| Error::parse(&path, lineno, format!("invalid id {:?}", f[0])))?;
            let bytes = unhex(f[1]).ok_or_else(|| Error::parse(&path, lineno, "invalid hex"))?;
            if vocab.token(id) != Some(bytes.as_slice()) {
                return Err(Error::Validation(format!(
                    "{}:{lineno}: token {id} does not match vocab.tsv",
                    path.display()
                )));
            }
            let lang = LanguageCode::new(f[2])?;
            if provenance.insert(id, lang).is_some() {
                return Err(Error::Validation(format!(
                    "{}:{lineno}: token {id} listed twice",
                    path.display()
                )));
            }
        }
        Self::new(vocab, provenance)
    }
}

impl Tokenizer for FairTokenizer {
    fn encode(&self, text: &str) -> Encoding {
        self.matcher.encode(text)
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String> {
        self.matcher.decode(ids)
    }

    fn count(&self, text: &str) -> usize {
        self.matcher.count(text)
    }
}

/// Premium report for a merged tokenizer (total-ratio aggregation).
pub fn evaluate(tokenizer: &FairTokenizer, corpus: &ParallelCorpus, pivot: &str) -> Result<PremiumReport> {
    corpus_premiums(tokenizer, corpus, pivot, Aggregation::TotalRatio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> LanguageCode {
        LanguageCode::new(s).unwrap()
    }

    fn corpus(langs: &[(&str, &[&str])]) -> ParallelCorpus {
        ParallelCorpus::new(
            langs
                .iter()
                .map(|(c, s)| (code(c), s.iter().map(|x| x.to_string()).collect())),
            None,
        )
        .unwrap()
    }

    #[test]
    fn queue_orders_by_frequency() {
        let c = corpus(&[("a", &["abab abab xy", "abab"])]);
        let models = train_monolingual_all(&c, 300, BoundaryMode::Whitespace).unwrap();
        let m = &models["a"];
        assert_eq!(m.candidate_queue.len(), m.model.merges().len());
        let freqs: Vec<u64> = m.candidate_queue.iter().map(|id| m.frequencies[id]).collect();
        assert!(freqs.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(m.candidate_bytes(m.candidate_queue[0]), b"ab");
        assert_eq!(m.frequencies[&m.candidate_queue[0]], 6);
    }

    #[test]
    fn empty_language_gets_byte_model() {
        let c = corpus(&[("a", &["", ""]), ("b", &["xx", "yy"])]);
        let models = train_monolingual_all(&c, 300, BoundaryMode::Whitespace).unwrap();
        assert!(models["a"].candidate_queue.is_empty());
        assert_eq!(models["a"].model.vocab().len(), 256);
    }

    #[test]
    fn identical_languages_alternate() {
        let text: &[&str] = &["the cat sat on the mat", "the dog ate the hat"];
        let c = corpus(&[("aaa", text), ("bbb", text)]);
        let models = train_monolingual_all(&c, 280, BoundaryMode::Whitespace).unwrap();
        assert_eq!(models["aaa"].candidate_queue, models["bbb"].candidate_queue);
        let mut merger = FairMerger::new(&c, &models, Reference::Auto).unwrap();
        // Every token of "aaa" is also "bbb"'s next candidate, so "bbb" never contributes.
        for _ in 0..10 {
            let s = merger.step().unwrap();
            assert_eq!(s.source.as_str(), "aaa");
            assert!(merger.state().premiums.values().all(|&p| p == 1.0));
        }
        assert_eq!(merger.state().step, 10);
        assert_eq!(merger.state().shared_vocab.len(), 266);
    }

    #[test]
    fn highest_premium_language_goes_first() {
        let c = corpus(&[("a", &["xy xy"]), ("b", &["pqrs pqrs"])]);
        let models = train_monolingual_all(&c, 300, BoundaryMode::Whitespace).unwrap();
        let mut merger = FairMerger::new(&c, &models, Reference::Auto).unwrap();
        assert_eq!(merger.state().premiums[&code("b")], 9.0 / 5.0);
        let s = merger.step().unwrap();
        assert_eq!(s.source.as_str(), "b");
        assert_eq!(s.source_premium, 9.0 / 5.0);
    }

    #[test]
    fn exhaustion() {
        let c = corpus(&[("a", &["ab"]), ("b", &["cd"])]);
        let models = train_monolingual_all(&c, 300, BoundaryMode::Whitespace).unwrap();
        let mut merger = FairMerger::new(&c, &models, Reference::Auto).unwrap();
        merger.step().unwrap();
        merger.step().unwrap();
        assert!(matches!(merger.step(), Err(Error::Exhausted)));
        let (tok, state) = fair_merge(&c, &models, 1000, Reference::Auto).unwrap();
        assert_eq!(tok.vocab().len(), 258);
        assert_eq!(state.step, 2);
    }

    #[test]
    fn target_256_is_byte_only() {
        let c = corpus(&[("a", &["abab"]), ("b", &["cdcd"])]);
        let models = train_monolingual_all(&c, 300, BoundaryMode::Whitespace).unwrap();
        let (tok, _) = fair_merge(&c, &models, 256, Reference::Auto).unwrap();
        assert_eq!(tok, FairTokenizer::byte_only());
        assert!(fair_merge(&c, &models, 255, Reference::Auto).is_err());
    }

    #[test]
    fn explicit_reference() {
        let c = corpus(&[("a", &["xy"]), ("b", &["pqrs"])]);
        let models = train_monolingual_all(&c, 256, BoundaryMode::Whitespace).unwrap();
        let m = FairMerger::new(&c, &models, Reference::Language(code("b"))).unwrap();
        assert_eq!(m.state().premiums[&code("a")], 0.5);
        assert!(FairMerger::new(&c, &models, Reference::Language(code("zz"))).is_err());
    }

    #[test]
    fn save_and_load() {
        let c = corpus(&[("a", &["hello hello"]), ("b", &["bonjour bonjour"])]);
        let models = train_monolingual_all(&c, 270, BoundaryMode::Whitespace).unwrap();
        let (tok, _) = fair_merge(&c, &models, 270, Reference::Auto).unwrap();
        let dir = tempfile::tempdir().unwrap();
        tok.save(dir.path()).unwrap();
        assert!(!dir.path().join("merges.tsv").exists());
        let loaded = FairTokenizer::load(dir.path()).unwrap();
        assert_eq!(loaded, tok);
        let s = "hello bonjour ж";
        assert_eq!(loaded.decode(&loaded.encode(s).ids).unwrap(), s);
    }

    #[test]
    fn provenance_must_cover_added_tokens() {
        let mut v = Vocabulary::byte_base();
        v.push(b"ab".to_vec()).unwrap();
        assert!(FairTokenizer::new(v.clone(), BTreeMap::new()).is_err());
        assert!(FairTokenizer::new(v, [(256, code("a"))].into()).is_ok());
    }
}
