//! Domain types shared across the toolkit: translation units, the adapted
//! MQM error taxonomy, and annotation validation.
//!
//! The taxonomy has three dimensions (accuracy, fluency, style) and two
//! severities (major = 5, minor = 1). Terminology, locale conventions,
//! audience appropriateness and design/markup are not part of it.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Source corpus a unit was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Corpus {
    #[serde(rename = "global_voices", alias = "gv", alias = "GlobalVoices")]
    GlobalVoices,
    #[serde(rename = "ted_talks_2020", alias = "ted", alias = "TedTalks2020")]
    TedTalks2020,
}

impl Corpus {
    pub const ALL: [Corpus; 2] = [Corpus::GlobalVoices, Corpus::TedTalks2020];

    /// Short code used for auto-assigned unit ids (`gv-3`, `ted-12`).
    pub fn short_code(self) -> &'static str {
        match self {
            Corpus::GlobalVoices => "gv",
            Corpus::TedTalks2020 => "ted",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Corpus::GlobalVoices => "Global Voices",
            Corpus::TedTalks2020 => "TED Talks 2020",
        }
    }
}

impl fmt::Display for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corpus::GlobalVoices => "global_voices",
            Corpus::TedTalks2020 => "ted_talks_2020",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown {kind} `{value}`")]
pub struct UnknownName {
    pub kind: &'static str,
    pub value: String,
}

impl FromStr for Corpus {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_token(s).as_str() {
            "gv" | "globalvoices" => Ok(Corpus::GlobalVoices),
            "ted" | "tedtalks2020" | "tedtalks" => Ok(Corpus::TedTalks2020),
            _ => Err(UnknownName { kind: "corpus", value: s.to_string() }),
        }
    }
}

/// One source/reference/hypothesis triple.
///
/// `hypothesis` is absent only before hypothesis generation has run;
/// annotation, scoring and feature extraction all require it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationUnit {
    pub id: String,
    pub corpus: Corpus,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<String>,
}

impl TranslationUnit {
    pub fn new(
        id: impl Into<String>,
        corpus: Corpus,
        source: impl Into<String>,
        reference: Option<String>,
        hypothesis: impl Into<String>,
    ) -> Self {
        Self { id: id.into(), corpus, source: source.into(), reference, hypothesis: Some(hypothesis.into()) }
    }

    pub fn hypothesis_text(&self) -> &str {
        self.hypothesis.as_deref().unwrap_or("")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Accuracy,
    Fluency,
    Style,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Accuracy, Dimension::Fluency, Dimension::Style];

    /// Label used on annotation lines (`Accuracy:`).
    pub fn label(self) -> &'static str {
        match self {
            Dimension::Accuracy => "Accuracy",
            Dimension::Fluency => "Fluency",
            Dimension::Style => "Style",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Dimension {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_token(s).as_str() {
            "accuracy" => Ok(Dimension::Accuracy),
            "fluency" => Ok(Dimension::Fluency),
            "style" => Ok(Dimension::Style),
            _ => Err(UnknownName { kind: "dimension", value: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Major,
    Minor,
}

impl Severity {
    /// Penalty weight: major errors cost 5 points, minor errors 1.
    pub fn weight(self) -> u32 {
        match self {
            Severity::Major => 5,
            Severity::Minor => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Major => "major",
            Severity::Minor => "minor",
        }
    }
}

impl FromStr for Severity {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_token(s).as_str() {
            "major" => Ok(Severity::Major),
            "minor" => Ok(Severity::Minor),
            _ => Err(UnknownName { kind: "severity", value: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubErrorType {
    // accuracy
    Addition,
    Omission,
    ShiftInMeaning,
    Mistranslation,
    // accuracy and fluency
    UntranslatedText,
    // fluency
    Grammar,
    Spelling,
    Punctuation,
    Encoding,
    Formatting,
    Unnaturalness,
    // style
    Formality,
    Structure,
}

impl SubErrorType {
    pub const ALL: [SubErrorType; 13] = [
        SubErrorType::Addition,
        SubErrorType::Omission,
        SubErrorType::ShiftInMeaning,
        SubErrorType::Mistranslation,
        SubErrorType::UntranslatedText,
        SubErrorType::Grammar,
        SubErrorType::Spelling,
        SubErrorType::Punctuation,
        SubErrorType::Encoding,
        SubErrorType::Formatting,
        SubErrorType::Unnaturalness,
        SubErrorType::Formality,
        SubErrorType::Structure,
    ];

    /// Dimensions under which this subtype may be annotated.
    pub fn permitted_dimensions(self) -> &'static [Dimension] {
        use SubErrorType::*;
        match self {
            Addition | Omission | ShiftInMeaning | Mistranslation => &[Dimension::Accuracy],
            UntranslatedText => &[Dimension::Accuracy, Dimension::Fluency],
            Grammar | Spelling | Punctuation | Encoding | Formatting | Unnaturalness => &[Dimension::Fluency],
            Formality | Structure => &[Dimension::Style],
        }
    }

    pub fn is_valid_for(self, dimension: Dimension) -> bool {
        self.permitted_dimensions().contains(&dimension)
    }

    /// Subtypes that may appear under `dimension`, in taxonomy order.
    pub fn for_dimension(dimension: Dimension) -> impl Iterator<Item = SubErrorType> {
        Self::ALL.into_iter().filter(move |s| s.is_valid_for(dimension))
    }

    /// Lower-case name as written in annotation entries.
    pub fn canonical_name(self) -> &'static str {
        use SubErrorType::*;
        match self {
            Addition => "addition",
            Omission => "omission",
            ShiftInMeaning => "shift in meaning",
            Mistranslation => "mistranslation",
            UntranslatedText => "untranslated text",
            Grammar => "grammar",
            Spelling => "spelling",
            Punctuation => "punctuation",
            Encoding => "encoding",
            Formatting => "formatting",
            Unnaturalness => "unnaturalness",
            Formality => "formality",
            Structure => "structure",
        }
    }
}

impl fmt::Display for SubErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

impl FromStr for SubErrorType {
    type Err = UnknownName;

    /// Case-insensitive; spaces, underscores and hyphens are ignored, so
    /// `untranslated text`, `Untranslated_Text` and `UntranslatedText` agree.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = normalize_token(s);
        Self::ALL
            .into_iter()
            .find(|t| normalize_token(t.canonical_name()) == key)
            .ok_or_else(|| UnknownName { kind: "sub-error type", value: s.to_string() })
    }
}

fn normalize_token(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace() && *c != '_' && *c != '-').flat_map(char::to_lowercase).collect()
}

/// Which sentence an error span lives in. Only omissions point into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpanSide {
    #[default]
    Hypothesis,
    Source,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorAnnotation {
    pub dimension: Dimension,
    pub subtype: SubErrorType,
    pub severity: Severity,
    pub span_text: String,
    #[serde(default)]
    pub span_side: SpanSide,
}

impl ErrorAnnotation {
    pub fn new(dimension: Dimension, subtype: SubErrorType, severity: Severity, span_text: impl Into<String>) -> Self {
        Self { dimension, subtype, severity, span_text: span_text.into(), span_side: SpanSide::Hypothesis }
    }

    pub fn on_source(mut self) -> Self {
        self.span_side = SpanSide::Source;
        self
    }

    /// Whitespace-separated tokens of the span; punctuation stays attached.
    /// Whitespace tokens of the span, not counting a ` .. ` elision marker.
    pub fn word_count(&self) -> u32 {
        self.span_text.split_whitespace().filter(|w| *w != "..").count() as u32
    }
}

/// All error annotations recorded for one unit, across the three dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UnitAnnotation {
    pub unit_id: String,
    #[serde(default)]
    pub errors: Vec<ErrorAnnotation>,
}

impl UnitAnnotation {
    pub fn new(unit_id: impl Into<String>, errors: Vec<ErrorAnnotation>) -> Self {
        Self { unit_id: unit_id.into(), errors }
    }

    pub fn in_dimension(&self, dimension: Dimension) -> impl Iterator<Item = &ErrorAnnotation> {
        self.errors.iter().filter(move |e| e.dimension == dimension)
    }

    /// Violations of the type-level invariants that need no sentence text.
    pub fn intrinsic_violations(&self) -> Vec<Violation> {
        self.errors.iter().flat_map(intrinsic_checks).collect()
    }
}

/// Major/minor error units for one dimension (words for accuracy and
/// fluency, spans for style).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub major_units: u32,
    pub minor_units: u32,
}

/// Dimension scores and total, in MQM penalty points. Higher is worse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct MqmScore {
    pub accuracy: u32,
    pub fluency: u32,
    pub style: u32,
    pub total: u32,
}

impl MqmScore {
    pub fn from_dimensions(accuracy: u32, fluency: u32, style: u32) -> Self {
        Self { accuracy, fluency, style, total: accuracy + fluency + style }
    }

    pub fn get(&self, dimension: Dimension) -> u32 {
        match dimension {
            Dimension::Accuracy => self.accuracy,
            Dimension::Fluency => self.fluency,
            Dimension::Style => self.style,
        }
    }

    pub fn dimensions(&self) -> [u32; 3] {
        [self.accuracy, self.fluency, self.style]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    EmptySpan,
    SubtypeDimensionMismatch,
    SourceSideNotOmission,
    SpanNotFound,
    UnitIdMismatch,
    EmptySource,
    MissingHypothesis,
    OverlappingSpans,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::EmptySpan => "EMPTY_SPAN",
            ViolationCode::SubtypeDimensionMismatch => "SUBTYPE_DIMENSION_MISMATCH",
            ViolationCode::SourceSideNotOmission => "SOURCE_SIDE_NOT_OMISSION",
            ViolationCode::SpanNotFound => "SPAN_NOT_FOUND",
            ViolationCode::UnitIdMismatch => "UNIT_ID_MISMATCH",
            ViolationCode::EmptySource => "EMPTY_SOURCE",
            ViolationCode::MissingHypothesis => "MISSING_HYPOTHESIS",
            ViolationCode::OverlappingSpans => "OVERLAPPING_SPANS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationLevel {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub level: ViolationLevel,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<String>,
}

impl Violation {
    fn error(code: ViolationCode, message: String, span: Option<&str>) -> Self {
        Self { code, level: ViolationLevel::Error, message, span: span.map(str::to_string) }
    }

    pub fn is_error(&self) -> bool {
        self.level == ViolationLevel::Error
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            ViolationLevel::Error => "error",
            ViolationLevel::Warning => "warning",
        };
        write!(f, "{level} {}: {}", self.code.as_str(), self.message)
    }
}

fn intrinsic_checks(error: &ErrorAnnotation) -> Vec<Violation> {
    let mut out = Vec::new();
    let span = Some(error.span_text.as_str());
    if error.span_text.trim().is_empty() {
        out.push(Violation::error(ViolationCode::EmptySpan, format!("empty span under {}", error.dimension), span));
    }
    if !error.subtype.is_valid_for(error.dimension) {
        out.push(Violation::error(
            ViolationCode::SubtypeDimensionMismatch,
            format!("`{}` is not a sub-error type of {}", error.subtype, error.dimension),
            span,
        ));
    }
    if error.span_side == SpanSide::Source && !(error.dimension == Dimension::Accuracy && error.subtype == SubErrorType::Omission) {
        out.push(Violation::error(
            ViolationCode::SourceSideNotOmission,
            format!("only accuracy omissions may point into the source (got {})", error.subtype),
            span,
        ));
    }
    out
}

/// Locates `span` in `text`, returning the byte range of the leftmost match.
///
/// Spans may elide a middle part with ` .. ` (as in
/// `인도주의 분야는 .. 경험하고 있습니다.`); the pieces must then occur in order
/// and the returned range covers first to last piece.
pub fn locate_span(text: &str, span: &str) -> Option<Range<usize>> {
    if span.is_empty() {
        return None;
    }
    if let Some(start) = text.find(span) {
        return Some(start..start + span.len());
    }
    if !span.contains(" .. ") {
        return None;
    }
    let mut pieces = span.split(" .. ").map(str::trim).filter(|p| !p.is_empty());
    let first = pieces.next()?;
    let start = text.find(first)?;
    let mut end = start + first.len();
    for piece in pieces {
        let at = text[end..].find(piece)? + end;
        end = at + piece.len();
    }
    Some(start..end)
}

/// Checks an annotation against the unit it annotates.
///
/// Errors and warnings come back in one list; overlapping spans within a
/// dimension are warnings.
pub fn validate_annotation(unit: &TranslationUnit, ann: &UnitAnnotation) -> Vec<Violation> {
    let mut out = Vec::new();
    if ann.unit_id != unit.id {
        out.push(Violation::error(
            ViolationCode::UnitIdMismatch,
            format!("annotation is for `{}` but unit is `{}`", ann.unit_id, unit.id),
            None,
        ));
    }
    out.extend(validate_against_text(&unit.source, unit.hypothesis.as_deref(), ann));
    out
}

/// Same checks as [`validate_annotation`] but against raw sentence text.
pub fn validate_against_text(source: &str, hypothesis: Option<&str>, ann: &UnitAnnotation) -> Vec<Violation> {
    let mut out = Vec::new();
    if source.trim().is_empty() {
        out.push(Violation::error(ViolationCode::EmptySource, "source is empty".into(), None));
    }
    let hypothesis = match hypothesis {
        Some(h) if !h.trim().is_empty() => h,
        _ => {
            out.push(Violation::error(ViolationCode::MissingHypothesis, "hypothesis is missing or empty".into(), None));
            ""
        }
    };

    // (dimension, side, byte range, subtype, span) of every located span
    let mut located = Vec::new();
    for error in &ann.errors {
        out.extend(intrinsic_checks(error));
        if error.span_text.trim().is_empty() {
            continue;
        }
        let (text, side_name) = match error.span_side {
            SpanSide::Hypothesis => (hypothesis, "hypothesis"),
            SpanSide::Source => (source, "source"),
        };
        match locate_span(text, &error.span_text) {
            Some(range) => located.push((error.dimension, error.span_side, range, error)),
            None => out.push(Violation::error(
                ViolationCode::SpanNotFound,
                format!("`{}` does not occur in the {side_name}", error.span_text),
                Some(&error.span_text),
            )),
        }
    }

    for (i, (dim_a, side_a, range_a, a)) in located.iter().enumerate() {
        for (dim_b, side_b, range_b, b) in &located[i + 1..] {
            if dim_a == dim_b && side_a == side_b && range_a.start < range_b.end && range_b.start < range_a.end {
                out.push(Violation {
                    code: ViolationCode::OverlappingSpans,
                    level: ViolationLevel::Warning,
                    message: format!("{dim_a} spans `{}` ({}) and `{}` ({}) overlap", a.span_text, a.subtype, b.span_text, b.subtype),
                    span: Some(b.span_text.clone()),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nilin_unit() -> TranslationUnit {
        TranslationUnit::new(
            "nilin",
            Corpus::GlobalVoices,
            "And demonstrations also occurred in Ni'lin.",
            None,
            "Ni'lin은 또한 시위가 일어나는 것을 목격했습니다.",
        )
    }

    fn nilin_annotation() -> UnitAnnotation {
        use Dimension::*;
        use Severity::*;
        use SubErrorType::*;
        UnitAnnotation::new(
            "nilin",
            vec![
                ErrorAnnotation::new(Accuracy, UntranslatedText, Major, "Ni'lin"),
                ErrorAnnotation::new(Accuracy, Omission, Minor, "And").on_source(),
                ErrorAnnotation::new(Accuracy, Mistranslation, Major, "목격했습니다."),
                ErrorAnnotation::new(Fluency, UntranslatedText, Major, "Ni'lin"),
                ErrorAnnotation::new(Fluency, Unnaturalness, Minor, "또한"),
                ErrorAnnotation::new(Style, Structure, Major, "Ni'lin은 또한 시위가 일어나는 것을 목격했습니다."),
            ],
        )
    }

    #[test]
    fn nilin_validates_clean() {
        assert!(validate_annotation(&nilin_unit(), &nilin_annotation()).is_empty());
    }

    #[test]
    fn structure_under_accuracy_is_rejected() {
        let ann =
            UnitAnnotation::new("nilin", vec![ErrorAnnotation::new(Dimension::Accuracy, SubErrorType::Structure, Severity::Major, "또한")]);
        let v = validate_annotation(&nilin_unit(), &ann);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::SubtypeDimensionMismatch);
    }

    #[test]
    fn missing_span_is_reported() {
        let ann = UnitAnnotation::new(
            "nilin",
            vec![ErrorAnnotation::new(Dimension::Fluency, SubErrorType::Spelling, Severity::Minor, "없는단어")],
        );
        let v = validate_annotation(&nilin_unit(), &ann);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::SpanNotFound);
    }

    #[test]
    fn source_side_only_for_omission() {
        let ann = UnitAnnotation::new(
            "nilin",
            vec![ErrorAnnotation::new(Dimension::Accuracy, SubErrorType::Addition, Severity::Minor, "And").on_source()],
        );
        let codes: Vec<_> = validate_annotation(&nilin_unit(), &ann).into_iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![ViolationCode::SourceSideNotOmission]);
    }

    #[test]
    fn overlap_within_dimension_is_a_warning() {
        let ann = UnitAnnotation::new(
            "nilin",
            vec![
                ErrorAnnotation::new(Dimension::Fluency, SubErrorType::Grammar, Severity::Major, "시위가 일어나는"),
                ErrorAnnotation::new(Dimension::Fluency, SubErrorType::Unnaturalness, Severity::Minor, "일어나는 것을"),
                // same words, different dimension: allowed
                ErrorAnnotation::new(Dimension::Accuracy, SubErrorType::Mistranslation, Severity::Minor, "일어나는"),
            ],
        );
        let v = validate_annotation(&nilin_unit(), &ann);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::OverlappingSpans);
        assert_eq!(v[0].level, ViolationLevel::Warning);
    }

    #[test]
    fn unit_id_mismatch() {
        let mut ann = nilin_annotation();
        ann.unit_id = "other".into();
        let v = validate_annotation(&nilin_unit(), &ann);
        assert_eq!(v.iter().map(|v| v.code).collect::<Vec<_>>(), vec![ViolationCode::UnitIdMismatch]);
    }

    #[test]
    fn elided_span_is_located() {
        let hyp = "인도주의 분야는 데이터 통합의 중추적 순간을 경험하고 있습니다.";
        let r = locate_span(hyp, "인도주의 분야는 .. 경험하고 있습니다.").unwrap();
        assert_eq!(r, 0..hyp.len());
        assert!(locate_span(hyp, "경험하고 .. 인도주의").is_none());
    }

    #[test]
    fn taxonomy_scoping() {
        for s in SubErrorType::ALL {
            assert!(!s.permitted_dimensions().is_empty());
        }
        assert_eq!(SubErrorType::UntranslatedText.permitted_dimensions(), &[Dimension::Accuracy, Dimension::Fluency]);
        assert_eq!(SubErrorType::for_dimension(Dimension::Accuracy).count(), 5);
        assert_eq!(SubErrorType::for_dimension(Dimension::Fluency).count(), 7);
        assert_eq!(SubErrorType::for_dimension(Dimension::Style).count(), 2);
    }

    #[test]
    fn severity_weights() {
        assert_eq!(Severity::Major.weight(), 5);
        assert_eq!(Severity::Minor.weight(), 1);
        assert!("critical".parse::<Severity>().is_err());
    }

    #[test]
    fn subtype_names_normalize() {
        for s in SubErrorType::ALL {
            assert_eq!(s.canonical_name().parse::<SubErrorType>().unwrap(), s);
        }
        assert_eq!("Untranslated_Text".parse::<SubErrorType>(), Ok(SubErrorType::UntranslatedText));
        assert_eq!("ShiftInMeaning".parse::<SubErrorType>(), Ok(SubErrorType::ShiftInMeaning));
        assert!("addtion".parse::<SubErrorType>().is_err());
    }

    #[test]
    fn validation_is_deterministic() {
        let unit = nilin_unit();
        let mut ann = nilin_annotation();
        ann.errors.push(ErrorAnnotation::new(Dimension::Style, SubErrorType::Grammar, Severity::Minor, "nope"));
        assert_eq!(validate_annotation(&unit, &ann), validate_annotation(&unit, &ann));
    }
}
