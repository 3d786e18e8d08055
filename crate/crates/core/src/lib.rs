//! Tokenization parity toolkit.
//!
//! Measures how many more tokens one language needs than another for the same
//! content (the tokenization premium), models what that costs in money,
//! latency and context space, and builds byte-level vocabularies that keep
//! premiums balanced across languages.
//!
//! ```
//! use tokeq_core::{sentence_premium, ByteTokenizer};
//!
//! let p = sentence_premium(&ByteTokenizer, "защо", "why").unwrap();
//! assert_eq!(p, 8.0 / 3.0);
//! ```

pub mod ablation;
pub mod bpe;
pub mod corpus;
pub mod encoding;
pub mod error;
pub mod fairmerge;
pub mod longest_match;
pub mod model_io;
pub mod parity;
pub mod reference;
pub mod vocab;

pub use ablation::{ablate, AblationCurve, AblationPoint};
pub use bpe::{bpe_encode, bpe_train, segments, BoundaryMode, BpeModel};
pub use corpus::{
    char_counts, load_documents, load_parallel, load_parallel_with, write_parallel, LanguageCode, LoadOptions,
    ParallelCorpus,
};
pub use encoding::{unk_fraction, Encoding, Tokenizer};
pub use error::{Error, Result};
pub use fairmerge::{
    evaluate, fair_merge, train_monolingual_all, FairMerger, FairTokenizer, MergeState, MergeStep, MonolingualModel,
    Reference,
};
pub use longest_match::{longest_match_encode, ByteTrie, LongestMatch};
pub use model_io::{load_model, save_model};
pub use parity::{
    apply_unk_filter, context_capacity, corpus_premiums, cost_table, effective_context, latency_table,
    sentence_premium, Aggregation, CostRow, PremiumReport, PremiumRow, PricingKind, PricingScheme,
    DEFAULT_UNK_THRESHOLD,
};
pub use reference::{codepoint_encode, utf8_byte_encode, ByteTokenizer, ClosedCharTokenizer, CodepointTokenizer};
pub use vocab::{MergeRule, TokenId, Vocabulary, BYTE_BASE};
