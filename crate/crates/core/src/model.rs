//! Domain types shared by every stage: the language registry, query and
//! response records, scored responses and preference pairs.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::jsonl;

/// Resource tier of a language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    HighResource,
    LowResource,
}

/// Writing system used for tokenization and detection decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Script {
    Latin,
    Cyrillic,
    Han,
    KanaHan,
    Hangul,
    Arabic,
}

impl Script {
    /// Scripts whose words are separated by whitespace, so matching can use
    /// word boundaries. The rest fall back to substring matching.
    pub fn is_segmentable(self) -> bool {
        matches!(self, Script::Latin | Script::Cyrillic | Script::Arabic)
    }
}

/// One of the 13 supported languages. Ordering follows registry order and
/// is used for every canonical serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Language {
    En,
    Ru,
    De,
    Zh,
    Ja,
    Fr,
    Es,
    Pt,
    Uk,
    Bg,
    Tr,
    Ar,
    Ko,
}

impl Language {
    pub const ALL: [Language; 13] = [
        Language::En,
        Language::Ru,
        Language::De,
        Language::Zh,
        Language::Ja,
        Language::Fr,
        Language::Es,
        Language::Pt,
        Language::Uk,
        Language::Bg,
        Language::Tr,
        Language::Ar,
        Language::Ko,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Ru => "ru",
            Language::De => "de",
            Language::Zh => "zh",
            Language::Ja => "ja",
            Language::Fr => "fr",
            Language::Es => "es",
            Language::Pt => "pt",
            Language::Uk => "uk",
            Language::Bg => "bg",
            Language::Tr => "tr",
            Language::Ar => "ar",
            Language::Ko => "ko",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Language::En => "English",
            Language::Ru => "Russian",
            Language::De => "German",
            Language::Zh => "Chinese",
            Language::Ja => "Japanese",
            Language::Fr => "French",
            Language::Es => "Spanish",
            Language::Pt => "Portuguese",
            Language::Uk => "Ukrainian",
            Language::Bg => "Bulgarian",
            Language::Tr => "Turkish",
            Language::Ar => "Arabic",
            Language::Ko => "Korean",
        }
    }

    pub fn script(self) -> Script {
        match self {
            Language::En
            | Language::De
            | Language::Fr
            | Language::Es
            | Language::Pt
            | Language::Tr => Script::Latin,
            Language::Ru | Language::Uk | Language::Bg => Script::Cyrillic,
            Language::Zh => Script::Han,
            Language::Ja => Script::KanaHan,
            Language::Ko => Script::Hangul,
            Language::Ar => Script::Arabic,
        }
    }

    /// Tier under the default ">1% of world population" convention.
    pub fn default_tier(self) -> Tier {
        match self {
            Language::En
            | Language::Ru
            | Language::De
            | Language::Zh
            | Language::Ja
            | Language::Fr
            | Language::Es
            | Language::Pt => Tier::HighResource,
            Language::Uk | Language::Bg | Language::Tr | Language::Ar | Language::Ko => {
                Tier::LowResource
            }
        }
    }

    /// Case-insensitive lookup by two-letter code.
    pub fn from_code(code: &str) -> Result<Language> {
        let lower = code.trim().to_ascii_lowercase();
        Language::ALL
            .iter()
            .copied()
            .find(|l| l.code() == lower)
            .ok_or_else(|| Error::UnknownLanguage {
                code: code.to_string(),
                valid: valid_codes(),
            })
    }
}

fn valid_codes() -> String {
    Language::ALL
        .iter()
        .map(|l| l.code())
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Language::from_code(s)
    }
}

impl Serialize for Language {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Language {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        Language::from_code(&code).map_err(serde::de::Error::custom)
    }
}

/// Full registry entry for a language, with its configured tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LanguageInfo {
    pub language: Language,
    pub code: &'static str,
    pub name: &'static str,
    pub tier: Tier,
    pub script: Script,
}

/// Language registry with configurable tier assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    tiers: BTreeMap<Language, Tier>,
}

impl Default for Registry {
    fn default() -> Self {
        Registry {
            tiers: Language::ALL
                .iter()
                .map(|&l| (l, l.default_tier()))
                .collect(),
        }
    }
}

impl Registry {
    /// Registry where exactly the listed languages are high-resource.
    pub fn with_high_resource(codes: &[Language]) -> Self {
        let high: HashSet<Language> = codes.iter().copied().collect();
        Registry {
            tiers: Language::ALL
                .iter()
                .map(|&l| {
                    let tier = if high.contains(&l) {
                        Tier::HighResource
                    } else {
                        Tier::LowResource
                    };
                    (l, tier)
                })
                .collect(),
        }
    }

    pub fn tier(&self, language: Language) -> Tier {
        self.tiers[&language]
    }

    pub fn info(&self, language: Language) -> LanguageInfo {
        LanguageInfo {
            language,
            code: language.code(),
            name: language.name(),
            tier: self.tier(language),
            script: language.script(),
        }
    }

    pub fn lookup(&self, code: &str) -> Result<LanguageInfo> {
        Language::from_code(code).map(|l| self.info(l))
    }

    pub fn languages(&self) -> impl Iterator<Item = LanguageInfo> + '_ {
        Language::ALL.iter().map(move |&l| self.info(l))
    }
}

/// Looks a language up in the default registry.
pub fn language_of(code: &str) -> Result<LanguageInfo> {
    Registry::default().lookup(code)
}

/// NFC-normalizes a string.
pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// One hallucination-aware source item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    pub image_ref: String,
    pub queries: BTreeMap<Language, String>,
    pub answer_nh: String,
    pub answer_h: String,
}

impl QueryRecord {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Validation("query id is empty".into()));
        }
        if !self.queries.contains_key(&Language::En) {
            return Err(Error::Validation(format!(
                "query {:?} has no English query text",
                self.id
            )));
        }
        if self.answer_nh == self.answer_h {
            return Err(Error::Validation(format!(
                "query {:?} has identical hallucination and non-hallucination answers",
                self.id
            )));
        }
        Ok(())
    }

    fn normalize(&mut self) {
        self.id = nfc(&self.id);
        self.image_ref = nfc(&self.image_ref);
        for text in self.queries.values_mut() {
            *text = nfc(text);
        }
        self.answer_nh = nfc(&self.answer_nh);
        self.answer_h = nfc(&self.answer_h);
    }
}

/// One sampled response for a (query, language).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedResponse {
    pub query_id: String,
    pub language: Language,
    pub index: u32,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub english_translation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ext_loss_vs_nh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ext_loss_vs_h: Option<f64>,
}

impl GeneratedResponse {
    pub fn key(&self) -> (&str, Language, u32) {
        (&self.query_id, self.language, self.index)
    }

    pub fn validate(&self, n: u32) -> Result<()> {
        if self.index == 0 || self.index > n {
            return Err(Error::Validation(format!(
                "response ({}, {}, {}) has index outside [1, {n}]",
                self.query_id, self.language, self.index
            )));
        }
        for loss in [self.ext_loss_vs_nh, self.ext_loss_vs_h].into_iter().flatten() {
            if !(loss.is_finite() && loss >= 0.0) {
                return Err(Error::Validation(format!(
                    "response ({}, {}, {}) has an invalid external loss {loss}",
                    self.query_id, self.language, self.index
                )));
            }
        }
        Ok(())
    }

    fn normalize(&mut self) {
        self.query_id = nfc(&self.query_id);
        self.text = nfc(&self.text);
        if let Some(t) = self.english_translation.as_mut() {
            *t = nfc(t);
        }
    }
}

/// A response annotated with its distances to both reference answers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredResponse {
    pub response: GeneratedResponse,
    pub d_nh: f64,
    pub d_h: f64,
    pub scorer_id: String,
}

/// Flat `scores.jsonl` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub query_id: String,
    pub language: Language,
    pub index: u32,
    pub d_nh: f64,
    pub d_h: f64,
    pub scorer_id: String,
}

impl From<&ScoredResponse> for ScoreRecord {
    fn from(s: &ScoredResponse) -> Self {
        ScoreRecord {
            query_id: s.response.query_id.clone(),
            language: s.response.language,
            index: s.response.index,
            d_nh: s.d_nh,
            d_h: s.d_h,
            scorer_id: s.scorer_id.clone(),
        }
    }
}

/// Origin of a preference pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    Explicit,
    Implicit,
    Translated,
}

impl PairSource {
    pub const ALL: [PairSource; 3] = [
        PairSource::Explicit,
        PairSource::Implicit,
        PairSource::Translated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PairSource::Explicit => "explicit",
            PairSource::Implicit => "implicit",
            PairSource::Translated => "translated",
        }
    }
}

impl fmt::Display for PairSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A DPO training item.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreferencePair {
    pub query_id: String,
    pub language: Language,
    pub context: String,
    pub y_pos: String,
    pub y_neg: String,
    pub source: PairSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_index: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg_index: Option<u32>,
    /// Opaque visual input reference, prefixed to the context for the policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

impl PreferencePair {
    pub fn validate(&self) -> Result<()> {
        if self.y_pos == self.y_neg {
            return Err(Error::Validation(format!(
                "pair for query {:?} ({}) has identical positive and negative",
                self.query_id, self.language
            )));
        }
        let has_indices = self.pos_index.is_some() || self.neg_index.is_some();
        match self.source {
            PairSource::Translated if has_indices => Err(Error::Validation(format!(
                "translated pair for query {:?} carries response indices",
                self.query_id
            ))),
            PairSource::Explicit | PairSource::Implicit
                if self.pos_index.is_none() || self.neg_index.is_none() =>
            {
                Err(Error::Validation(format!(
                    "{} pair for query {:?} is missing response indices",
                    self.source, self.query_id
                )))
            }
            _ => Ok(()),
        }
    }

    /// Context string seen by the policy: the image reference (if any)
    /// followed by the query text.
    pub fn policy_context(&self) -> String {
        match &self.image_ref {
            Some(image) => format!("<image:{image}> {}", self.context),
            None => self.context.clone(),
        }
    }

    fn normalize(&mut self) {
        self.query_id = nfc(&self.query_id);
        self.context = nfc(&self.context);
        self.y_pos = nfc(&self.y_pos);
        self.y_neg = nfc(&self.y_neg);
        if let Some(i) = self.image_ref.as_mut() {
            *i = nfc(i);
        }
    }
}

/// Loads and validates a `queries.jsonl` file.
pub fn load_queries(path: &Path) -> Result<Vec<QueryRecord>> {
    let mut records: Vec<QueryRecord> = jsonl::read(path)?;
    let mut seen = HashSet::new();
    for record in &mut records {
        record.normalize();
        record.validate()?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id.clone()));
        }
    }
    Ok(records)
}

/// Loads a `responses.jsonl` file, checking key uniqueness and index range.
pub fn load_responses(path: &Path, n: u32) -> Result<Vec<GeneratedResponse>> {
    let mut records: Vec<GeneratedResponse> = jsonl::read(path)?;
    let mut seen = HashSet::new();
    for r in &mut records {
        r.normalize();
        r.validate(n)?;
        if !seen.insert((r.query_id.clone(), r.language, r.index)) {
            return Err(Error::Validation(format!(
                "duplicate response ({}, {}, {})",
                r.query_id, r.language, r.index
            )));
        }
    }
    Ok(records)
}

/// Loads a `pairs.jsonl` file and validates every pair.
pub fn load_pairs(path: &Path) -> Result<Vec<PreferencePair>> {
    let mut pairs: Vec<PreferencePair> = jsonl::read(path)?;
    for p in &mut pairs {
        p.normalize();
        p.validate()?;
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_ukrainian() {
        let info = language_of("uk").unwrap();
        assert_eq!(info.name, "Ukrainian");
        assert_eq!(info.tier, Tier::LowResource);
        assert_eq!(info.script, Script::Cyrillic);
    }

    #[test]
    fn lookup_is_case_insensitive() {
        let info = language_of("EN").unwrap();
        assert_eq!(info.language, Language::En);
        assert_eq!(info.tier, Tier::HighResource);
        assert_eq!(info.script, Script::Latin);
    }

    #[test]
    fn unknown_code_lists_valid_codes() {
        let err = language_of("xx").unwrap_err();
        match err {
            Error::UnknownLanguage { code, valid } => {
                assert_eq!(code, "xx");
                assert!(valid.contains("ko"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn default_registry_partition() {
        let reg = Registry::default();
        let high = reg.languages().filter(|l| l.tier == Tier::HighResource).count();
        let low = reg.languages().filter(|l| l.tier == Tier::LowResource).count();
        assert_eq!((high, low), (8, 5));
        let codes: HashSet<_> = reg.languages().map(|l| l.code).collect();
        assert_eq!(codes.len(), 13);
    }

    #[test]
    fn configured_tiers_override_default() {
        let reg = Registry::with_high_resource(&[Language::En, Language::Ko]);
        assert_eq!(reg.tier(Language::Ko), Tier::HighResource);
        assert_eq!(reg.tier(Language::Ru), Tier::LowResource);
    }

    fn pair(source: PairSource, idx: Option<(u32, u32)>) -> PreferencePair {
        PreferencePair {
            query_id: "q".into(),
            language: Language::Ru,
            context: "c".into(),
            y_pos: "a".into(),
            y_neg: "b".into(),
            source,
            pos_index: idx.map(|i| i.0),
            neg_index: idx.map(|i| i.1),
            image_ref: None,
        }
    }

    #[test]
    fn pair_index_rules() {
        assert!(pair(PairSource::Translated, None).validate().is_ok());
        assert!(pair(PairSource::Translated, Some((1, 2))).validate().is_err());
        assert!(pair(PairSource::Explicit, None).validate().is_err());
        assert!(pair(PairSource::Implicit, Some((1, 2))).validate().is_ok());
        let mut same = pair(PairSource::Translated, None);
        same.y_neg = same.y_pos.clone();
        assert!(same.validate().is_err());
    }
}
