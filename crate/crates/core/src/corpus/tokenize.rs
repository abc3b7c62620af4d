//! Whitespace-and-punctuation tokenization and sentence segmentation.
//!
//! The rules are deliberately simple so that span/token alignment stays
//! deterministic across languages:
//!
//! * tokens are whitespace-delimited words with leading and trailing
//!   non-alphanumeric characters detached as single-character tokens
//!   (`"(2009)."` → `(`, `2009`, `)`, `.`), word-internal punctuation
//!   left alone (`aujourd'hui` stays one token);
//! * sentences end after `.`, `!`, or `?` followed by whitespace or
//!   end-of-text — except inside an annotated span, so an annotation can
//!   never be bisected.

use crate::labels::AnnotatedSpan;

/// A surface token with its byte range in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Byte offset of the first character, inclusive.
    pub start: usize,
    /// Byte offset past the last character, exclusive.
    pub end: usize,
}

/// Splits `text` into sentence byte ranges.
///
/// A sentence ends after `.`, `!`, or `?` when the next character is
/// whitespace (or the text ends), unless that punctuation falls inside
/// one of `spans`. Leading/trailing whitespace is excluded from the
/// ranges and whitespace-only stretches produce no sentence.
pub fn segment_sentences(text: &str, spans: &[AnnotatedSpan]) -> Vec<(usize, usize)> {
    let inside_span = |pos: usize| spans.iter().any(|s| s.start <= pos && pos < s.end);

    let mut sentences = Vec::new();
    let mut sent_start: Option<usize> = None;
    let mut iter = text.char_indices().peekable();
    while let Some((pos, c)) = iter.next() {
        if c.is_whitespace() {
            continue;
        }
        if sent_start.is_none() {
            sent_start = Some(pos);
        }
        let sentence_final = matches!(c, '.' | '!' | '?')
            && !inside_span(pos)
            && iter.peek().map_or(true, |&(_, next)| next.is_whitespace());
        if sentence_final {
            let start = sent_start.take().expect("sentence start recorded above");
            sentences.push((start, pos + c.len_utf8()));
        }
    }
    if let Some(start) = sent_start {
        let end = text.trim_end().len();
        if end > start {
            sentences.push((start, end));
        }
    }
    sentences
}

/// Tokenizes `slice`, reporting byte offsets shifted by `base` (the
/// slice's position within the full document text).
pub fn tokenize_with_offsets(slice: &str, base: usize) -> Vec<Token> {
    let mut tokens = Vec::new();
    for (word_start, word) in split_words(slice) {
        emit_word(word, base + word_start, &mut tokens);
    }
    tokens
}

/// Whitespace-splits `slice` into (byte offset, word) pairs.
fn split_words(slice: &str) -> Vec<(usize, &str)> {
    let mut words = Vec::new();
    let mut start: Option<usize> = None;
    for (pos, c) in slice.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                words.push((s, &slice[s..pos]));
            }
        } else if start.is_none() {
            start = Some(pos);
        }
    }
    if let Some(s) = start {
        words.push((s, &slice[s..]));
    }
    words
}

/// Emits one whitespace-delimited word as tokens: leading and trailing
/// non-alphanumeric characters split off one by one (as long as more
/// than one character remains), then the residual core.
fn emit_word(word: &str, base: usize, out: &mut Vec<Token>) {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    let mut lo = 0usize;
    let mut hi = chars.len();

    let mut leading = Vec::new();
    while hi - lo > 1 && !chars[lo].1.is_alphanumeric() {
        leading.push(chars[lo]);
        lo += 1;
    }
    let mut trailing = Vec::new();
    while hi - lo > 1 && !chars[hi - 1].1.is_alphanumeric() {
        trailing.push(chars[hi - 1]);
        hi -= 1;
    }
    trailing.reverse();

    let push_char = |out: &mut Vec<Token>, (off, c): (usize, char)| {
        out.push(Token {
            text: c.to_string(),
            start: base + off,
            end: base + off + c.len_utf8(),
        });
    };

    for lc in leading {
        push_char(out, lc);
    }
    let core_start = chars[lo].0;
    let core_end = chars[hi - 1].0 + chars[hi - 1].1.len_utf8();
    out.push(Token {
        text: word[core_start..core_end].to_string(),
        start: base + core_start,
        end: base + core_end,
    });
    for tc in trailing {
        push_char(out, tc);
    }
}
