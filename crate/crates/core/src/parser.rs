//! Reader and writer for the plain-text annotation format.
//!
//! ```text
//! [1st translation unit]
//! And demonstrations also occurred in Ni'lin.
//! Ni'lin은 또한 시위가 일어나는 것을 목격했습니다.
//!
//! Accuracy: Ni'lin(untranslated text/major), And(omission/minor), 목격했습니다.(mistranslation/major)
//! Fluency: Ni'lin(untranslated text/major), 또한(unnaturalness/minor)
//! Style: Ni'lin은 또한 시위가 일어나는 것을 목격했습니다.(structure/major)
//! ```
//!
//! A dimension line reading `-` means "annotated, no errors". Entries are
//! separated by `), `, so a span may contain commas but not that sequence.
//! The header may carry a unit id as ` #<id>`; without it, ids are
//! positional (`unit-1`, `unit-2`, ...). The ordinal in the header is not
//! trusted, document order is. See `docs/annotation-format.md` for the grammar.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{
    locate_span, validate_against_text, Corpus, Dimension, ErrorAnnotation, Severity, SpanSide, SubErrorType, TranslationUnit,
    UnitAnnotation, Violation,
};

const HEADER_SUFFIX: &str = " translation unit]";
const ENTRY_DELIMITER: &str = "), ";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EntryError {
    #[error("entry does not end in a `(sub-error type/severity)` group")]
    MissingMetadata,
    #[error("empty error span")]
    EmptySpan,
    #[error("unknown sub-error type `{0}`")]
    UnknownSubtype(String),
    #[error("unknown severity `{0}` (expected major or minor)")]
    UnknownSeverity(String),
    #[error("`{subtype}` is not a sub-error type of {dimension}")]
    SubtypeDimensionMismatch { subtype: SubErrorType, dimension: Dimension },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("block {block}, line {line}: {message}")]
    MalformedBlock { block: usize, line: usize, message: String },
    #[error("block {block}, line {line}: malformed entry `{entry}`: {cause}")]
    MalformedEntry { block: usize, line: usize, entry: String, cause: EntryError },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::MalformedBlock { line, .. } | ParseError::MalformedEntry { line, .. } => *line,
        }
    }
}

#[derive(Debug, Error)]
pub enum SerializeError {
    #[error("unit `{unit_id}` has an invalid annotation: {}", join_violations(.violations))]
    InvalidAnnotation { unit_id: String, violations: Vec<Violation> },
    #[error("unit `{unit_id}`: {message}")]
    Unrepresentable { unit_id: String, message: String },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// One unit of an annotation document.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AnnotatedBlock {
    pub unit_id: String,
    pub source: String,
    pub hypothesis: String,
    pub annotation: UnitAnnotation,
}

impl AnnotatedBlock {
    pub fn from_unit(unit: &TranslationUnit, annotation: UnitAnnotation) -> Self {
        Self { unit_id: unit.id.clone(), source: unit.source.clone(), hypothesis: unit.hypothesis_text().to_string(), annotation }
    }

    /// Builds the unit skeleton; the document format carries no corpus or reference.
    pub fn to_unit(&self, corpus: Corpus) -> TranslationUnit {
        TranslationUnit::new(&self.unit_id, corpus, &self.source, None, &self.hypothesis)
    }

    pub fn violations(&self) -> Vec<Violation> {
        validate_against_text(&self.source, Some(&self.hypothesis), &self.annotation)
    }
}

/// Parses one `span(subtype/severity)` entry. Accuracy omissions are
/// placed on the source side.
pub fn parse_entry(text: &str, dimension: Dimension) -> Result<ErrorAnnotation, EntryError> {
    parse_entry_in_context(text, dimension, None)
}

/// Like [`parse_entry`], but an accuracy omission whose span occurs in
/// `hypothesis` stays on the hypothesis side.
pub fn parse_entry_in_context(text: &str, dimension: Dimension, hypothesis: Option<&str>) -> Result<ErrorAnnotation, EntryError> {
    let body = text.trim().strip_suffix(')').ok_or(EntryError::MissingMetadata)?;
    let slash = body.rfind('/').ok_or(EntryError::MissingMetadata)?;
    let open = body[..slash].rfind('(').ok_or(EntryError::MissingMetadata)?;

    let span = body[..open].trim();
    if span.is_empty() {
        return Err(EntryError::EmptySpan);
    }
    let subtype_name = body[open + 1..slash].trim();
    let severity_name = body[slash + 1..].trim();
    let subtype: SubErrorType = subtype_name.parse().map_err(|_| EntryError::UnknownSubtype(subtype_name.to_string()))?;
    let severity: Severity = severity_name.parse().map_err(|_| EntryError::UnknownSeverity(severity_name.to_string()))?;
    if !subtype.is_valid_for(dimension) {
        return Err(EntryError::SubtypeDimensionMismatch { subtype, dimension });
    }

    let mut ann = ErrorAnnotation::new(dimension, subtype, severity, span);
    if dimension == Dimension::Accuracy && subtype == SubErrorType::Omission {
        let in_hypothesis = hypothesis.is_some_and(|h| locate_span(h, span).is_some());
        if !in_hypothesis {
            ann.span_side = SpanSide::Source;
        }
    }
    Ok(ann)
}

/// Splits a dimension-line body into entries on `), `, restoring the
/// closing parenthesis of every entry but the last.
fn split_entries(body: &str) -> Vec<String> {
    let mut parts: Vec<String> = body.split(ENTRY_DELIMITER).map(str::to_string).collect();
    let last = parts.len() - 1;
    for part in &mut parts[..last] {
        part.push(')');
    }
    parts
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { lines: text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect(), pos: 0 }
    }

    fn skip_blank(&mut self) {
        while self.pos < self.lines.len() && self.lines[self.pos].trim().is_empty() {
            self.pos += 1;
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.lines.len()
    }

    /// Returns the next line and its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let line = self.lines.get(self.pos).copied()?;
        self.pos += 1;
        Some((self.pos, line))
    }

    fn line_no(&self) -> usize {
        (self.pos + 1).min(self.lines.len().max(1))
    }
}

/// Parses a header line, returning the explicit unit id if present.
fn parse_header(line: &str) -> Option<Option<String>> {
    let line = line.trim_end();
    let rest = line.strip_prefix('[')?;
    let close = rest.find(HEADER_SUFFIX)?;
    let ordinal = &rest[..close];
    if ordinal.is_empty() || ordinal.contains(']') {
        return None;
    }
    let tail = &rest[close + HEADER_SUFFIX.len()..];
    if tail.is_empty() {
        return Some(None);
    }
    let id = tail.strip_prefix(" #")?.trim();
    if id.is_empty() {
        return None;
    }
    Some(Some(id.to_string()))
}

/// Parses a whole annotation document into blocks, in document order.
pub fn parse_document(text: &str) -> Result<Vec<AnnotatedBlock>, ParseError> {
    let mut lines = Lines::new(text);
    let mut blocks = Vec::new();

    loop {
        lines.skip_blank();
        if lines.at_end() {
            break;
        }
        let block_no = blocks.len() + 1;
        let malformed = |line: usize, message: String| ParseError::MalformedBlock { block: block_no, line, message };

        let (header_line, header) = lines.next().expect("not at end");
        let explicit_id = parse_header(header)
            .ok_or_else(|| malformed(header_line, format!("expected `[n-th translation unit]` header, got `{header}`")))?;
        let unit_id = explicit_id.unwrap_or_else(|| format!("unit-{block_no}"));

        let mut text_line = |what: &str| -> Result<String, ParseError> {
            let line_no = lines.line_no();
            match lines.next() {
                Some((_, l)) if !l.trim().is_empty() => Ok(l.trim().to_string()),
                _ => Err(malformed(line_no, format!("missing {what} line"))),
            }
        };
        let source = text_line("source")?;
        let hypothesis = text_line("hypothesis")?;

        lines.skip_blank();
        let mut errors = Vec::new();
        for dimension in Dimension::ALL {
            let line_no = lines.line_no();
            let Some((line_no, line)) = lines.next() else {
                return Err(malformed(line_no, format!("missing `{}:` line", dimension.label())));
            };
            let body = line
                .strip_prefix(dimension.label())
                .and_then(|r| r.strip_prefix(':'))
                .ok_or_else(|| malformed(line_no, format!("expected `{}:` line, got `{line}`", dimension.label())))?
                .trim();
            if body.is_empty() {
                return Err(malformed(line_no, format!("`{}:` line is empty (use `-` for no errors)", dimension.label())));
            }
            if body == "-" {
                continue;
            }
            for entry in split_entries(body) {
                let ann = parse_entry_in_context(&entry, dimension, Some(&hypothesis)).map_err(|cause| ParseError::MalformedEntry {
                    block: block_no,
                    line: line_no,
                    entry: entry.trim().to_string(),
                    cause,
                })?;
                errors.push(ann);
            }
        }

        // the block must end here
        if let Some(&next) = lines.lines.get(lines.pos) {
            if !next.trim().is_empty() {
                return Err(malformed(lines.pos + 1, format!("unexpected line after `Style:`: `{next}`")));
            }
        }

        blocks.push(AnnotatedBlock { annotation: UnitAnnotation::new(unit_id.clone(), errors), unit_id, source, hypothesis });
    }
    Ok(blocks)
}

/// English ordinal: 1st, 2nd, 3rd, 4th, 11th, 21st.
pub fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

/// Renders a single entry in canonical form, e.g. `And(omission/minor)`.
pub fn render_entry(error: &ErrorAnnotation) -> String {
    format!("{}({}/{})", error.span_text, error.subtype, error.severity.as_str())
}

fn check_representable(block: &AnnotatedBlock) -> Result<(), SerializeError> {
    let fail = |message: String| SerializeError::Unrepresentable { unit_id: block.unit_id.clone(), message };
    if block.annotation.unit_id != block.unit_id {
        return Err(fail(format!("annotation belongs to `{}`", block.annotation.unit_id)));
    }
    if block.unit_id.trim() != block.unit_id || block.unit_id.contains(char::is_whitespace) {
        return Err(fail("unit id must not contain whitespace".into()));
    }
    for (what, text) in [("source", &block.source), ("hypothesis", &block.hypothesis)] {
        if text.contains('\n') || text.contains('\r') || text.trim() != text {
            return Err(fail(format!("{what} must be a single trimmed line")));
        }
    }
    for error in &block.annotation.errors {
        let span = &error.span_text;
        if span.contains('\n') || span.contains('\r') {
            return Err(fail(format!("span `{span}` spans several lines")));
        }
        if span.trim() != span {
            return Err(fail(format!("span `{span}` has surrounding whitespace")));
        }
        if span.contains(ENTRY_DELIMITER) {
            return Err(fail(format!("span `{span}` contains the entry delimiter `), `")));
        }
        if error.dimension == Dimension::Accuracy && error.subtype == SubErrorType::Omission {
            let in_hyp = locate_span(&block.hypothesis, span).is_some();
            if error.span_side == SpanSide::Source && in_hyp {
                return Err(fail(format!(
                    "source-side omission `{span}` also occurs in the hypothesis and would read back as hypothesis-side"
                )));
            }
        }
    }
    Ok(())
}

/// Writes blocks in the canonical layout. Entries are grouped by
/// dimension, keeping their given order within each dimension.
pub fn serialize_document(blocks: &[AnnotatedBlock]) -> Result<String, SerializeError> {
    let mut out = String::new();
    for (i, block) in blocks.iter().enumerate() {
        let violations: Vec<_> = block.violations().into_iter().filter(Violation::is_error).collect();
        if !violations.is_empty() {
            return Err(SerializeError::InvalidAnnotation { unit_id: block.unit_id.clone(), violations });
        }
        check_representable(block)?;

        let position = i + 1;
        if i > 0 {
            out.push('\n');
        }
        write!(out, "[{}{HEADER_SUFFIX}", ordinal(position)).unwrap();
        if block.unit_id != format!("unit-{position}") {
            write!(out, " #{}", block.unit_id).unwrap();
        }
        out.push('\n');
        writeln!(out, "{}\n{}\n", block.source, block.hypothesis).unwrap();
        for dimension in Dimension::ALL {
            let entries: Vec<String> = block.annotation.in_dimension(dimension).map(render_entry).collect();
            let body = if entries.is_empty() { "-".to_string() } else { entries.join(", ") };
            writeln!(out, "{}: {body}", dimension.label()).unwrap();
        }
    }
    Ok(out)
}

/// Re-renders a document in canonical form.
pub fn canonicalize(text: &str) -> Result<String, CanonicalizeError> {
    let blocks = parse_document(text)?;
    Ok(serialize_document(&blocks)?)
}

#[derive(Debug, Error)]
pub enum CanonicalizeError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Serialize(#[from] SerializeError),
}
