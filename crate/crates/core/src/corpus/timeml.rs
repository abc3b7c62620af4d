//! TIMEX3/TimeML XML ingestion.
//!
//! Reads a TimeML document and produces a [`Document`]: the running text
//! with one annotated span per `TIMEX3` element. When the file has a
//! `<TEXT>` element (the usual TimeML shape), only its content counts —
//! header metadata such as the document-creation-time `TIMEX3` is not an
//! extraction target and is reported as a warning instead. Files without
//! a `<TEXT>` wrapper are read whole.
//!
//! Only the `type` attribute is consumed; everything else (`tid`,
//! `value`, ...) is annotation metadata outside this pipeline's scope.
//! Nested `TIMEX3` elements are rejected.

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::CorpusError;
use crate::labels::{AnnotatedSpan, Document, TimexType};

const TEXT_ELEMENT: &[u8] = b"TEXT";
const TIMEX_ELEMENT: &[u8] = b"TIMEX3";

/// Parses TimeML into a [`Document`] with byte-offset annotations.
///
/// `doc_id` is a caller-chosen identifier (typically the file stem);
/// `language` the lower-case code for the document's language.
pub fn parse_timeml(xml_text: &str, language: &str, doc_id: &str) -> Result<Document, CorpusError> {
    let scope_to_text = contains_text_element(xml_text)?;

    let mut reader = Reader::from_str(xml_text);
    let mut text = String::new();
    let mut spans: Vec<AnnotatedSpan> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut text_depth: usize = 0;
    let mut open_timex: Option<(usize, TimexType)> = None;

    loop {
        let position = reader.buffer_position();
        let in_scope = !scope_to_text || text_depth > 0;
        match reader.read_event().map_err(|e| CorpusError::Xml {
            position: reader.buffer_position(),
            message: e.to_string(),
        })? {
            Event::Eof => break,
            Event::Start(e) => {
                let name = e.local_name();
                if name.as_ref() == TEXT_ELEMENT {
                    text_depth += 1;
                } else if name.as_ref() == TIMEX_ELEMENT {
                    if !in_scope {
                        warnings.push(format!(
                            "ignored TIMEX3 outside the TEXT element at byte {position}"
                        ));
                    } else {
                        if open_timex.is_some() {
                            return Err(CorpusError::NestedTimex { position });
                        }
                        let ty = timex_type_attr(&e, position)?;
                        open_timex = Some((text.len(), ty));
                    }
                }
            }
            Event::Empty(e) => {
                let name = e.local_name();
                if name.as_ref() == TIMEX_ELEMENT {
                    if in_scope {
                        return Err(CorpusError::EmptyTimex { position });
                    }
                    warnings.push(format!(
                        "ignored TIMEX3 outside the TEXT element at byte {position}"
                    ));
                }
            }
            Event::End(e) => {
                let name = e.local_name();
                if name.as_ref() == TEXT_ELEMENT {
                    text_depth = text_depth.saturating_sub(1);
                } else if name.as_ref() == TIMEX_ELEMENT && in_scope {
                    if let Some((start, timex_type)) = open_timex.take() {
                        if text.len() == start {
                            return Err(CorpusError::EmptyTimex { position });
                        }
                        spans.push(AnnotatedSpan {
                            start,
                            end: text.len(),
                            timex_type,
                        });
                    }
                }
            }
            Event::Text(t) => {
                if in_scope {
                    // Entity references arrive as separate GeneralRef
                    // events, so text content only needs decoding and
                    // end-of-line normalization.
                    let chunk = t.xml10_content().map_err(|e| CorpusError::Xml {
                        position,
                        message: e.to_string(),
                    })?;
                    text.push_str(&chunk);
                }
            }
            Event::CData(c) => {
                if in_scope {
                    let raw = c.into_inner();
                    let chunk = std::str::from_utf8(&raw).map_err(|e| CorpusError::Xml {
                        position,
                        message: format!("CDATA is not UTF-8: {e}"),
                    })?;
                    text.push_str(chunk);
                }
            }
            Event::GeneralRef(r) => {
                if in_scope {
                    text.push_str(&resolve_entity(r.as_ref(), position)?);
                }
            }
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
        }
    }

    let doc = Document {
        doc_id: doc_id.to_string(),
        language: language.to_ascii_lowercase(),
        text,
        spans,
        warnings,
    };
    doc.validate()?;
    Ok(doc)
}

/// First pass: does the document contain a `<TEXT>` element at all?
fn contains_text_element(xml_text: &str) -> Result<bool, CorpusError> {
    let mut reader = Reader::from_str(xml_text);
    loop {
        match reader.read_event().map_err(|e| CorpusError::Xml {
            position: reader.buffer_position(),
            message: e.to_string(),
        })? {
            Event::Eof => return Ok(false),
            Event::Start(e) | Event::Empty(e) => {
                if e.local_name().as_ref() == TEXT_ELEMENT {
                    return Ok(true);
                }
            }
            _ => {}
        }
    }
}

/// Extracts and parses the mandatory `type` attribute of a TIMEX3 tag.
fn timex_type_attr(e: &BytesStart<'_>, position: u64) -> Result<TimexType, CorpusError> {
    for attr in e.attributes() {
        let attr = attr.map_err(|err| CorpusError::Xml {
            position,
            message: err.to_string(),
        })?;
        if attr.key.as_ref().eq_ignore_ascii_case(b"type") {
            let value = attr.unescape_value().map_err(|err| CorpusError::Xml {
                position,
                message: err.to_string(),
            })?;
            return value
                .parse()
                .map_err(|source| CorpusError::BadTimexType { position, source });
        }
    }
    Err(CorpusError::MissingTimexType { position })
}

/// Resolves a general entity reference (`&amp;` and friends, plus
/// numeric character references) to its text.
fn resolve_entity(name: &[u8], position: u64) -> Result<String, CorpusError> {
    let as_str = std::str::from_utf8(name).map_err(|e| CorpusError::Xml {
        position,
        message: format!("entity name is not UTF-8: {e}"),
    })?;
    let resolved = match as_str {
        "amp" => "&".to_string(),
        "lt" => "<".to_string(),
        "gt" => ">".to_string(),
        "quot" => "\"".to_string(),
        "apos" => "'".to_string(),
        _ => {
            let code = as_str
                .strip_prefix("#x")
                .or_else(|| as_str.strip_prefix("#X"))
                .map(|hex| u32::from_str_radix(hex, 16))
                .or_else(|| as_str.strip_prefix('#').map(|dec| dec.parse::<u32>()));
            match code {
                Some(Ok(c)) => char::from_u32(c)
                    .map(String::from)
                    .ok_or_else(|| CorpusError::Xml {
                        position,
                        message: format!("invalid character reference &{as_str};"),
                    })?,
                _ => {
                    return Err(CorpusError::Xml {
                        position,
                        message: format!("unsupported entity reference &{as_str};"),
                    })
                }
            }
        }
    };
    Ok(resolved)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_timex_becomes_one_span() {
        let xml = r#"<TimeML><TEXT>The plane crashed <TIMEX3 tid="t1" type="DATE">last year</TIMEX3>.</TEXT></TimeML>"#;
        let doc = parse_timeml(xml, "en", "d1").unwrap();
        assert_eq!(doc.text, "The plane crashed last year.");
        assert_eq!(doc.spans.len(), 1);
        let span = doc.spans[0];
        assert_eq!(&doc.text[span.start..span.end], "last year");
        assert_eq!(span.timex_type, TimexType::Date);
        // Oracle: offsets agree with plain string search.
        assert_eq!(doc.text.find("last year").unwrap(), span.start);
    }

    #[test]
    fn zero_timex_gives_empty_span_list() {
        let doc = parse_timeml("<TimeML><TEXT>No dates here.</TEXT></TimeML>", "en", "d").unwrap();
        assert_eq!(doc.text, "No dates here.");
        assert!(doc.spans.is_empty());
    }

    #[test]
    fn adjacent_timex_elements_become_abutting_spans() {
        let xml = r#"<TEXT>Meet <TIMEX3 type="DATE">tomorrow</TIMEX3><TIMEX3 type="TIME"> at noon</TIMEX3> please.</TEXT>"#;
        let doc = parse_timeml(xml, "en", "d").unwrap();
        assert_eq!(doc.spans.len(), 2);
        // String-search oracle for both offsets.
        let first = &doc.text[doc.spans[0].start..doc.spans[0].end];
        let second = &doc.text[doc.spans[1].start..doc.spans[1].end];
        assert_eq!(first, "tomorrow");
        assert_eq!(second, " at noon");
        assert_eq!(doc.text.find(first).unwrap(), doc.spans[0].start);
        assert_eq!(doc.spans[0].end, doc.spans[1].start, "spans abut");
    }

    #[test]
    fn text_outside_text_element_is_excluded() {
        let xml = r#"<TimeML>
<DOCID>wsj_0006</DOCID>
<DCT><TIMEX3 tid="t0" type="DATE">1989-10-26</TIMEX3></DCT>
<TEXT>Shares fell <TIMEX3 tid="t1" type="DATE">yesterday</TIMEX3>.</TEXT>
</TimeML>"#;
        let doc = parse_timeml(xml, "en", "wsj_0006").unwrap();
        assert_eq!(doc.text, "Shares fell yesterday.");
        assert_eq!(doc.spans.len(), 1, "the DCT annotation is not extracted");
        assert_eq!(doc.warnings.len(), 1);
        assert!(doc.warnings[0].contains("outside the TEXT element"));
    }

    #[test]
    fn documents_without_text_wrapper_are_read_whole() {
        let xml = r#"<doc>Due <TIMEX3 type="DURATION">three months</TIMEX3> from now.</doc>"#;
        let doc = parse_timeml(xml, "en", "d").unwrap();
        assert_eq!(doc.text, "Due three months from now.");
        assert_eq!(doc.spans.len(), 1);
    }

    #[test]
    fn unknown_type_is_a_validation_error_naming_the_value() {
        let xml = r#"<TEXT><TIMEX3 type="EVENT">x</TIMEX3></TEXT>"#;
        match parse_timeml(xml, "en", "d") {
            Err(CorpusError::BadTimexType { source, .. }) => {
                assert!(source.to_string().contains("EVENT"));
            }
            other => panic!("expected BadTimexType, got {other:?}"),
        }
    }

    #[test]
    fn missing_type_attribute_is_an_error() {
        let xml = r#"<TEXT><TIMEX3 tid="t1">x</TIMEX3></TEXT>"#;
        assert!(matches!(
            parse_timeml(xml, "en", "d"),
            Err(CorpusError::MissingTimexType { .. })
        ));
    }

    #[test]
    fn nested_timex_is_rejected() {
        let xml = r#"<TEXT><TIMEX3 type="DATE">the <TIMEX3 type="TIME">3 pm</TIMEX3> slot</TIMEX3></TEXT>"#;
        assert!(matches!(
            parse_timeml(xml, "en", "d"),
            Err(CorpusError::NestedTimex { .. })
        ));
    }

    #[test]
    fn empty_timex_content_is_rejected() {
        for xml in [
            r#"<TEXT><TIMEX3 type="DATE"></TIMEX3>after</TEXT>"#,
            r#"<TEXT>before <TIMEX3 type="DATE"/> after</TEXT>"#,
        ] {
            assert!(matches!(
                parse_timeml(xml, "en", "d"),
                Err(CorpusError::EmptyTimex { .. })
            ));
        }
    }

    #[test]
    fn malformed_xml_reports_a_position() {
        let xml = "<TEXT>unclosed <TIMEX3 type=\"DATE\">oops</TEXT>";
        match parse_timeml(xml, "en", "d") {
            Err(CorpusError::Xml { position, .. }) => assert!(position > 0),
            other => panic!("expected Xml error, got {other:?}"),
        }
    }

    #[test]
    fn entities_and_cdata_are_resolved_into_text() {
        let xml = r#"<TEXT>Q&amp;A on <TIMEX3 type="DATE">May &#x33;rd</TIMEX3><![CDATA[ & more]]></TEXT>"#;
        let doc = parse_timeml(xml, "en", "d").unwrap();
        assert_eq!(doc.text, "Q&A on May 3rd & more");
        let span = doc.spans[0];
        assert_eq!(&doc.text[span.start..span.end], "May 3rd");
    }

    #[test]
    fn accented_text_keeps_correct_offsets() {
        let xml = r#"<TEXT>Publié <TIMEX3 type="DATE">l'année dernière</TIMEX3> à Paris.</TEXT>"#;
        let doc = parse_timeml(xml, "fr", "d").unwrap();
        let span = doc.spans[0];
        assert_eq!(&doc.text[span.start..span.end], "l'année dernière");
        assert_eq!(doc.language, "fr");
    }
}
