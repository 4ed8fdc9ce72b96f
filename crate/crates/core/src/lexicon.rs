//! AFINN-style sentiment lexicon and bag-of-words text scoring.
//!
//! A document's score is the sum of the lexicon scores of its tokens, so a
//! word occurring `c` times contributes `c * score`. Tokens absent from the
//! lexicon contribute nothing.

use rustc_hash::FxHashMap;
use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{self, ExecMode};

/// Published AFINN-111 word list (2477 entries, 15 of them multi-word).
pub const AFINN_111: &str = include_str!("../data/AFINN-111.txt");

pub const MIN_SCORE: i32 = -5;
pub const MAX_SCORE: i32 = 5;

#[derive(Debug, Clone, Serialize)]
pub struct SentimentLexicon {
    entries: FxHashMap<String, i32>,
    dropped_multiword: usize,
}

impl SentimentLexicon {
    /// The embedded AFINN-111 lexicon.
    pub fn afinn_111() -> Self {
        Self::parse(AFINN_111).expect("embedded AFINN-111 is well formed")
    }

    pub fn load<R: Read>(mut source: R) -> Result<Self> {
        let mut text = String::new();
        source.read_to_string(&mut text)?;
        Self::parse(&text)
    }

    /// Parses `token<TAB>score` lines. Entries whose token contains internal
    /// whitespace are skipped and counted in [`dropped_multiword`].
    ///
    /// [`dropped_multiword`]: SentimentLexicon::dropped_multiword
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = FxHashMap::default();
        let mut dropped_multiword = 0;
        let mut seen_any = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            seen_any = true;
            let err = |reason: &str| Error::LexiconParse {
                line: line_no,
                reason: reason.to_string(),
            };
            let (token, score) = line.split_once('\t').ok_or_else(|| err("missing tab"))?;
            let score: i32 = score
                .trim()
                .parse()
                .map_err(|_| err(&format!("non-integer score `{score}`")))?;
            if !(MIN_SCORE..=MAX_SCORE).contains(&score) {
                return Err(err(&format!("score {score} outside [-5, 5]")));
            }
            let token = token.trim().to_lowercase();
            if token.is_empty() {
                return Err(err("empty token"));
            }
            if token.contains(char::is_whitespace) {
                dropped_multiword += 1;
                continue;
            }
            if entries.insert(token.clone(), score).is_some() {
                return Err(err(&format!("duplicate token `{token}`")));
            }
        }

        if !seen_any {
            return Err(Error::EmptyLexicon);
        }
        Ok(Self {
            entries,
            dropped_multiword,
        })
    }

    pub fn get(&self, token: &str) -> Option<i32> {
        self.entries.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dropped_multiword(&self) -> usize {
        self.dropped_multiword
    }

    /// Entries sorted by token.
    pub fn entries(&self) -> Vec<(&str, i32)> {
        let mut out: Vec<_> = self.entries.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        out.sort_unstable();
        out
    }

    /// Sentiment of `text`: the sum of lexicon scores over its tokens.
    pub fn score_text(&self, text: &str) -> i64 {
        self.score_and_count(text).0
    }

    /// Sentiment and token count of `text` in one pass.
    pub fn score_and_count(&self, text: &str) -> (i64, usize) {
        let mut score = 0i64;
        let mut count = 0;
        for t in raw_tokens(text) {
            count += 1;
            let hit = if t.chars().any(char::is_uppercase) {
                self.get(&t.to_lowercase())
            } else {
                self.get(t)
            };
            score += i64::from(hit.unwrap_or(0));
        }
        (score, count)
    }

    /// Scores an optional text; absent text scores 0.
    pub fn score_opt(&self, text: Option<&str>) -> i64 {
        text.map_or(0, |t| self.score_text(t))
    }

    /// Scores many documents, in input order.
    pub fn score_all<S: AsRef<str> + Sync>(&self, mode: ExecMode, texts: &[S]) -> Vec<i64> {
        par::map(mode, texts, |t| self.score_text(t.as_ref()))
    }
}

/// Splits `text` into lowercase word tokens.
///
/// Splits on runs of whitespace, then strips every leading and trailing
/// character that is not a letter, digit or apostrophe. Internal punctuation
/// (`it's`, `half-price`) is kept. Tokens left empty are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    raw_tokens(text).map(str::to_lowercase).collect()
}

/// Number of tokens [`tokenize`] would return, without allocating.
pub fn token_count(text: &str) -> usize {
    raw_tokens(text).count()
}

fn raw_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !(c.is_alphanumeric() || c == '\'')))
        .filter(|w| !w.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_single_entry() {
        let lex = SentimentLexicon::parse("abandon\t-2\n").unwrap();
        assert_eq!(lex.get("abandon"), Some(-2));
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.dropped_multiword(), 0);
    }

    #[test]
    fn empty_source_is_error() {
        assert!(matches!(SentimentLexicon::parse(""), Err(Error::EmptyLexicon)));
        assert!(matches!(
            SentimentLexicon::load("".as_bytes()),
            Err(Error::EmptyLexicon)
        ));
    }

    #[test]
    fn multiword_entries_are_dropped() {
        let lex = SentimentLexicon::parse("can't stand\t-3\ngood\t3\n").unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.get("good"), Some(3));
        assert_eq!(lex.dropped_multiword(), 1);
    }

    #[test]
    fn malformed_lines_name_the_line() {
        let cases = ["good\t3\nbad -3\n", "good\t3\nbad\tx\n", "good\t3\nbad\t-6\n"];
        for src in cases {
            match SentimentLexicon::parse(src) {
                Err(Error::LexiconParse { line, .. }) => assert_eq!(line, 2),
                other => panic!("expected parse error, got {other:?}"),
            }
        }
        assert!(SentimentLexicon::parse("good\t3\ngood\t2\n").is_err());
    }

    #[test]
    fn tokens_are_lowercased() {
        let lex = SentimentLexicon::parse("Good\t3\r\n").unwrap();
        assert_eq!(lex.get("good"), Some(3));
    }

    #[test]
    fn afinn_111_shape() {
        let lex = SentimentLexicon::afinn_111();
        assert_eq!(lex.len() + lex.dropped_multiword(), 2477);
        assert_eq!(lex.dropped_multiword(), 15);
        assert_eq!(lex.get("bad"), Some(-3));
        assert_eq!(lex.get("good"), Some(3));
        assert_eq!(lex.get("abandon"), Some(-2));
        for (token, score) in lex.entries() {
            assert!((MIN_SCORE..=MAX_SCORE).contains(&score));
            assert!(!token.is_empty());
            assert!(!token.contains(char::is_whitespace));
            assert_eq!(token, token.to_lowercase());
        }
    }

    #[test]
    fn tokenize_rules() {
        assert_eq!(tokenize("Great location!"), vec!["great", "location"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("it's  very   cool"), vec!["it's", "very", "cool"]);
        assert_eq!(tokenize("  ...  !! "), Vec::<String>::new());
        assert_eq!(tokenize("(half-price)"), vec!["half-price"]);
    }

    #[test]
    fn score_examples() {
        let lex = SentimentLexicon::afinn_111();
        assert_eq!(lex.score_text(""), 0);
        assert_eq!(lex.score_text("bad bad"), -6);
        assert_eq!(lex.score_opt(None), 0);
        assert_eq!(lex.score_text("GOOD, good."), 6);
    }
}
