//! Documents, sentences and UD tokens with character-offset spans.
//!
//! Offsets count Unicode scalar values, not bytes.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::upos::Upos;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: sentence {sentence}: token {token} ({form:?}) does not match the text at its span")]
    SpanMismatch {
        line: usize,
        sentence: String,
        token: usize,
        form: String,
    },
    #[error("span {span} is outside a sentence of length {len}")]
    OutOfBounds { span: Span, len: usize },
    #[error("span {0} covers no token")]
    EmptySpan(Span),
}

impl CorpusError {
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::Schema { .. } => "SCHEMA_ERROR",
            CorpusError::SpanMismatch { .. } => "SPAN_MISMATCH",
            CorpusError::OutOfBounds { .. } => "OUT_OF_BOUNDS",
            CorpusError::EmptySpan(_) => "EMPTY_SPAN",
        }
    }
}

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }

    /// True when `0 <= start < end <= len`.
    pub fn is_within(&self, len: usize) -> bool {
        self.start < self.end && self.end <= len
    }

    pub fn intersects(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position in the sentence, as in CoNLL-U.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: Upos,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub document_id: String,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Length in characters.
    pub fn len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn full_span(&self) -> Span {
        Span::new(0, self.len())
    }

    /// Text covered by a character span.
    pub fn slice(&self, span: Span) -> Option<String> {
        if span.start > span.end || span.end > self.len() {
            return None;
        }
        Some(self.text.chars().skip(span.start).take(span.len()).collect())
    }

    /// Tokens intersecting `span`, in order.
    pub fn tokens_in_span(&self, span: Span) -> Result<&[Token], CorpusError> {
        if !span.is_within(self.len()) {
            return Err(CorpusError::OutOfBounds {
                span,
                len: self.len(),
            });
        }
        // Tokens are ordered and disjoint, so the hits are one contiguous run.
        let first = self.tokens.partition_point(|t| t.span.end <= span.start);
        let last = first + self.tokens[first..].partition_point(|t| t.span.start < span.end);
        Ok(&self.tokens[first..last])
    }

    /// Lemma and POS of the material under `span`. Multi-token spans join
    /// lemmas with single spaces and take the POS of the last token.
    pub fn span_lemma_pos(&self, span: Span) -> Result<(String, Upos), CorpusError> {
        let tokens = self.tokens_in_span(span)?;
        let last = tokens.last().ok_or(CorpusError::EmptySpan(span))?;
        let lemma = tokens
            .iter()
            .map(|t| t.lemma.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        Ok((lemma, last.upos))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn sentence(&self, id: &str) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.id == id)
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDocument {
    id: String,
    #[serde(default)]
    title: String,
    sentences: Vec<RawSentence>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawSentence {
    id: String,
    text: String,
    tokens: Vec<RawToken>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawToken {
    form: String,
    lemma: String,
    upos: Upos,
    start: usize,
    end: usize,
}

/// Reads one document per line. Blank lines are skipped.
pub fn load_corpus<R: BufRead>(source: R) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    let mut doc_ids = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::Schema {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = serde_json::from_str(&line).map_err(|e| CorpusError::Schema {
            line: line_no,
            message: e.to_string(),
        })?;
        if !doc_ids.insert(raw.id.clone()) {
            return Err(CorpusError::Schema {
                line: line_no,
                message: format!("duplicate document id {}", raw.id),
            });
        }
        docs.push(build_document(raw, line_no)?);
    }
    Ok(docs)
}

fn build_document(raw: RawDocument, line: usize) -> Result<Document, CorpusError> {
    let schema = |message: String| CorpusError::Schema { line, message };
    let mut sentence_ids = HashSet::new();
    let mut sentences = Vec::with_capacity(raw.sentences.len());
    for rs in raw.sentences {
        if !sentence_ids.insert(rs.id.clone()) {
            return Err(schema(format!("duplicate sentence id {}", rs.id)));
        }
        let mut sentence = Sentence {
            id: rs.id,
            document_id: raw.id.clone(),
            text: rs.text,
            tokens: Vec::with_capacity(rs.tokens.len()),
        };
        let len = sentence.len();
        let mut prev_end = 0;
        for (ti, rt) in rs.tokens.into_iter().enumerate() {
            let span = Span::new(rt.start, rt.end);
            if !span.is_within(len) {
                return Err(schema(format!(
                    "sentence {}: token {} span {span} outside text of length {len}",
                    sentence.id,
                    ti + 1
                )));
            }
            if span.start < prev_end {
                return Err(schema(format!(
                    "sentence {}: token {} overlaps or precedes its predecessor",
                    sentence.id,
                    ti + 1
                )));
            }
            if sentence.slice(span).as_deref() != Some(rt.form.as_str()) {
                return Err(CorpusError::SpanMismatch {
                    line,
                    sentence: sentence.id.clone(),
                    token: ti + 1,
                    form: rt.form,
                });
            }
            prev_end = span.end;
            sentence.tokens.push(Token {
                index: ti + 1,
                form: rt.form,
                lemma: rt.lemma,
                upos: rt.upos,
                span,
            });
        }
        sentences.push(sentence);
    }
    Ok(Document {
        id: raw.id,
        title: raw.title,
        sentences,
    })
}

/// Writes documents in the line-per-document interchange format.
pub fn write_corpus<W: Write>(docs: &[Document], mut out: W) -> std::io::Result<()> {
    for doc in docs {
        let raw = RawDocument {
            id: doc.id.clone(),
            title: doc.title.clone(),
            sentences: doc
                .sentences
                .iter()
                .map(|s| RawSentence {
                    id: s.id.clone(),
                    text: s.text.clone(),
                    tokens: s
                        .tokens
                        .iter()
                        .map(|t| RawToken {
                            form: t.form.clone(),
                            lemma: t.lemma.clone(),
                            upos: t.upos,
                            start: t.span.start,
                            end: t.span.end,
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &raw)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::fixtures::sentence;
    use super::*;

    const ONE_DOC: &str = r#"{"id":"d1","title":"T","sentences":[{"id":"s1","text":"Ele correu ontem","tokens":[{"form":"Ele","lemma":"ele","upos":"PRON","start":0,"end":3},{"form":"correu","lemma":"correr","upos":"VERB","start":4,"end":10},{"form":"ontem","lemma":"ontem","upos":"ADV","start":11,"end":16}]}]}"#;

    fn example() -> Sentence {
        sentence(
            "d1",
            "s1",
            &[
                ("Ele", "ele", Upos::Pron),
                ("se", "se", Upos::Pron),
                ("deu", "dar", Upos::Verb),
                ("conta", "conta", Upos::Noun),
            ],
        )
    }

    #[test]
    fn loads_single_document() {
        let docs = load_corpus(ONE_DOC.as_bytes()).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].sentences[0].tokens.len(), 3);
        assert_eq!(docs[0].sentences[0].document_id, "d1");
    }

    #[test]
    fn form_mismatch_is_reported() {
        let bad = ONE_DOC.replace(r#""form":"correu""#, r#""form":"corria""#);
        let err = load_corpus(bad.as_bytes()).unwrap_err();
        assert_eq!(err.code(), "SPAN_MISMATCH");
    }

    #[test]
    fn schema_error_carries_line_number() {
        let input = format!("{ONE_DOC}\n{{\"id\":\"d2\"}}\n");
        match load_corpus(input.as_bytes()).unwrap_err() {
            CorpusError::Schema { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn offsets_are_characters_not_bytes() {
        let json = r#"{"id":"d","sentences":[{"id":"s","text":"Ação já","tokens":[{"form":"Ação","lemma":"ação","upos":"NOUN","start":0,"end":4},{"form":"já","lemma":"já","upos":"ADV","start":5,"end":7}]}]}"#;
        let docs = load_corpus(json.as_bytes()).unwrap();
        assert_eq!(docs[0].sentences[0].len(), 7);
    }

    #[test]
    fn tokens_in_span_cases() {
        let s = example();
        // "Ele se deu conta": se = [4,6), deu = [7,10)
        let second = s.tokens_in_span(Span::new(4, 6)).unwrap();
        assert_eq!(second.iter().map(|t| t.index).collect::<Vec<_>>(), [2]);

        let straddling = s.tokens_in_span(Span::new(5, 10)).unwrap();
        assert_eq!(straddling.iter().map(|t| t.index).collect::<Vec<_>>(), [2, 3]);

        assert!(s.tokens_in_span(Span::new(6, 7)).unwrap().is_empty());
        assert_eq!(s.tokens_in_span(s.full_span()).unwrap().len(), 4);
        assert_eq!(
            s.tokens_in_span(Span::new(3, 99)).unwrap_err().code(),
            "OUT_OF_BOUNDS"
        );
    }

    #[test]
    fn span_lemma_pos_cases() {
        let s = example();
        assert_eq!(s.span_lemma_pos(Span::new(7, 10)).unwrap(), ("dar".into(), Upos::Verb));
        assert_eq!(s.span_lemma_pos(Span::new(7, 16)).unwrap(), ("dar conta".into(), Upos::Noun));
        assert_eq!(s.span_lemma_pos(Span::new(6, 7)).unwrap_err().code(), "EMPTY_SPAN");
    }

    #[test]
    fn write_then_load_round_trips() {
        let docs = load_corpus(ONE_DOC.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_corpus(&docs, &mut buf).unwrap();
        assert_eq!(load_corpus(buf.as_slice()).unwrap(), docs);
    }
}
