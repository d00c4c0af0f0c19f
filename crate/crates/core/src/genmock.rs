//! Generation boundary and a deterministic mock multilingual model.
//!
//! A real deployment samples `n` responses per (query, language) from a
//! vision-language model, machine-translates them to English and writes
//! `responses.jsonl`. The mock does the same without any model: each
//! response is faithful, hallucinated (carries a planted marker object) or
//! invalid, and its `english_translation` is filled directly, so scoring
//! works with no MT system.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::tokenize;
use crate::error::{Error, Result};
use crate::model::{GeneratedResponse, Language, QueryRecord};
use crate::seeds;

const DEFAULT_TEMPLATES: &str = include_str!("../data/mock_templates.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Faithful,
    Hallucinated,
    Invalid,
}

/// How categories are assigned to the `n` responses of one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategorySampling {
    /// An independent draw per response.
    Independent,
    /// Exactly `round(rate * n)` hallucinated and invalid responses, in a
    /// seeded random order.
    Stratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnglishTemplates {
    /// Applied to the non-hallucinated answer; `{answer}` / `{answer_lc}`.
    pub faithful: Vec<String>,
    /// Applied to the hallucinated answer; also takes `{marker}`.
    pub hallucinated: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageTemplates {
    pub query: String,
    /// Target-language framing around the English content; `{content}`.
    pub frames: Vec<String>,
    pub invalid: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSet {
    pub english: EnglishTemplates,
    pub markers: Vec<String>,
    pub languages: BTreeMap<Language, LanguageTemplates>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_TEMPLATES).expect("shipped templates parse")
    }
}

impl TemplateSet {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let set: TemplateSet = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.english.faithful.is_empty() || self.english.hallucinated.is_empty() {
            return Err(Error::Config("english templates must be non-empty".into()));
        }
        if self.markers.is_empty() {
            return Err(Error::Config("marker list is empty".into()));
        }
        for (lang, t) in &self.languages {
            if t.frames.is_empty() || t.invalid.is_empty() {
                return Err(Error::Config(format!("templates for {lang} need frames and invalid strings")));
            }
        }
        let markers: HashSet<&str> = self.markers.iter().map(String::as_str).collect();
        for template in &self.english.faithful {
            if let Some(m) = tokenize(template).iter().find(|t| markers.contains(t.as_str())) {
                return Err(Error::Config(format!("faithful template {template:?} contains marker {m:?}")));
            }
        }
        Ok(())
    }

    fn language(&self, language: Language) -> Result<&LanguageTemplates> {
        self.languages
            .get(&language)
            .ok_or_else(|| Error::Config(format!("no mock templates for {language}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockGenConfig {
    pub n: u32,
    pub hallucination_rate: f64,
    pub invalid_rate: f64,
    pub seed: u64,
    pub sampling: CategorySampling,
    #[serde(skip)]
    pub templates: TemplateSet,
}

impl Default for MockGenConfig {
    fn default() -> Self {
        MockGenConfig {
            n: 20,
            hallucination_rate: 0.4,
            invalid_rate: 0.0,
            seed: 0,
            sampling: CategorySampling::Independent,
            templates: TemplateSet::default(),
        }
    }
}

impl MockGenConfig {
    pub fn validate(&self) -> Result<()> {
        let h = self.hallucination_rate;
        let inv = self.invalid_rate;
        if !(0.0..=1.0).contains(&h) || !(0.0..=1.0).contains(&inv) || h + inv > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "need rates in [0, 1] with hallucination_rate + invalid_rate <= 1, got {h} + {inv}"
            )));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        self.templates.validate()
    }
}

/// A generated response with its ground-truth category and planted marker.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledResponse {
    pub response: GeneratedResponse,
    pub category: Category,
    pub marker: Option<String>,
}

fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn fill(template: &str, answer: &str, marker: &str) -> String {
    template
        .replace("{answer_lc}", &lowercase_first(answer))
        .replace("{answer}", answer)
        .replace("{marker}", marker)
}

fn categories(config: &MockGenConfig, rng: &mut impl Rng) -> Vec<Category> {
    let n = config.n as usize;
    match config.sampling {
        CategorySampling::Independent => (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                if u < config.hallucination_rate {
                    Category::Hallucinated
                } else if u < config.hallucination_rate + config.invalid_rate {
                    Category::Invalid
                } else {
                    Category::Faithful
                }
            })
            .collect(),
        CategorySampling::Stratified => {
            let h = ((config.hallucination_rate * n as f64).round() as usize).min(n);
            let inv = ((config.invalid_rate * n as f64).round() as usize).min(n - h);
            let mut cats = vec![Category::Hallucinated; h];
            cats.extend(std::iter::repeat_n(Category::Invalid, inv));
            cats.extend(std::iter::repeat_n(Category::Faithful, n - h - inv));
            cats.shuffle(rng);
            cats
        }
    }
}

/// Generates `n` labeled responses for one (query, language); deterministic
/// in (seed, query id, language).
pub fn generate_labeled(
    query: &QueryRecord,
    language: Language,
    config: &MockGenConfig,
) -> Result<Vec<LabeledResponse>> {
    config.validate()?;
    if !query.queries.contains_key(&language) {
        return Err(Error::Validation(format!(
            "query {:?} has no {} query text",
            query.id, language
        )));
    }
    let lang_templates = config.templates.language(language)?;
    let english = &config.templates.english;
    let answer_tokens: HashSet<String> = tokenize(&query.answer_nh).into_iter().collect();
    let markers: Vec<&String> = config
        .templates
        .markers
        .iter()
        .filter(|m| !answer_tokens.contains(m.as_str()))
        .collect();
    if markers.is_empty() {
        return Err(Error::Config(format!(
            "every marker object already appears in the answer of query {:?}",
            query.id
        )));
    }

    let mut rng = seeds::rng(config.seed, &["generation", &query.id, language.code()]);
    let cats = categories(config, &mut rng);
    let mut out = Vec::with_capacity(cats.len());
    for (i, category) in cats.into_iter().enumerate() {
        let (english_text, marker) = match category {
            Category::Faithful => {
                let t = english.faithful.choose(&mut rng).unwrap();
                (fill(t, &query.answer_nh, ""), None)
            }
            Category::Hallucinated => {
                let t = english.hallucinated.choose(&mut rng).unwrap();
                let m = (*markers.choose(&mut rng).unwrap()).clone();
                (fill(t, &query.answer_h, &m), Some(m))
            }
            Category::Invalid => {
                let s = lang_templates.invalid.choose(&mut rng).unwrap().clone();
                (s, None)
            }
        };
        let text = match category {
            Category::Invalid => english_text.clone(),
            _ => lang_templates
                .frames
                .choose(&mut rng)
                .unwrap()
                .replace("{content}", &english_text),
        };
        out.push(LabeledResponse {
            response: GeneratedResponse {
                query_id: query.id.clone(),
                language,
                index: i as u32 + 1,
                text,
                english_translation: Some(english_text),
                ext_loss_vs_nh: None,
                ext_loss_vs_h: None,
            },
            category,
            marker,
        });
    }
    Ok(out)
}

/// Generates `n` responses for one (query, language).
pub fn generate(query: &QueryRecord, language: Language, config: &MockGenConfig) -> Result<Vec<GeneratedResponse>> {
    Ok(generate_labeled(query, language, config)?
        .into_iter()
        .map(|l| l.response)
        .collect())
}

/// Synthetic hallucination dataset: `count` records with templated queries
/// in every language that has templates.
pub fn mock_queries(count: usize, seed: u64, templates: &TemplateSet) -> Vec<QueryRecord> {
    const COLORS: [&str; 8] = ["brown", "white", "black", "red", "small", "large", "gray", "yellow"];
    const SUBJECTS: [&str; 8] = ["dog", "cat", "man", "woman", "child", "horse", "bird", "cow"];
    const VERBS: [&str; 5] = ["sitting on", "standing next to", "lying on", "walking past", "looking at"];
    const OBJECTS: [&str; 8] = ["bench", "table", "sofa", "fence", "road", "bed", "car", "boat"];
    const EXTRAS: [&str; 6] = ["cup", "bottle", "chair", "book", "bowl", "laptop"];

    let mut rng = seeds::rng(seed, &["mock-queries"]);
    (0..count)
        .map(|i| {
            let subject = SUBJECTS.choose(&mut rng).unwrap();
            let object = OBJECTS.choose(&mut rng).unwrap();
            let answer_nh = format!(
                "A {} {} is {} a {} {}.",
                COLORS.choose(&mut rng).unwrap(),
                subject,
                VERBS.choose(&mut rng).unwrap(),
                COLORS.choose(&mut rng).unwrap(),
                object
            );
            let extra = EXTRAS.choose(&mut rng).unwrap();
            let answer_h = format!("{} with a {extra} next to it.", answer_nh.trim_end_matches('.'));
            QueryRecord {
                id: format!("q{:05}", i + 1),
                image_ref: format!("mock/{:06}.jpg", i + 1),
                queries: templates
                    .languages
                    .iter()
                    .map(|(l, t)| (*l, t.query.clone()))
                    .collect(),
                answer_nh,
                answer_h,
            }
        })
        .collect()
}

/// Key of one expected response slot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub query_id: String,
    pub language: Language,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaError {
    pub line: usize,
    pub message: String,
}

/// Result of checking a responses file against the expected slots.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContractReport {
    pub records: usize,
    /// Expected slots with no record.
    pub gaps: Vec<Slot>,
    /// Slots with more than one record.
    pub duplicates: Vec<Slot>,
    /// Records outside the expected queries, languages or index range.
    pub unexpected: Vec<Slot>,
    pub schema_errors: Vec<SchemaError>,
}

impl ContractReport {
    pub fn is_clean(&self) -> bool {
        self.gaps.is_empty()
            && self.duplicates.is_empty()
            && self.unexpected.is_empty()
            && self.schema_errors.is_empty()
    }
}

/// Checks that `path` holds exactly indices `1..=n` for every expected
/// (query, language). Problems are reported, never raised, except for an
/// unreadable file.
pub fn adapter_contract(
    path: &Path,
    query_ids: &[String],
    languages: &[Language],
    n: u32,
) -> Result<ContractReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut report = ContractReport::default();
    let mut seen: BTreeMap<Slot, usize> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<GeneratedResponse>(line) {
            Ok(r) => {
                report.records += 1;
                let slot = Slot {
                    query_id: r.query_id,
                    language: r.language,
                    index: r.index,
                };
                *seen.entry(slot).or_insert(0) += 1;
            }
            Err(e) => report.schema_errors.push(SchemaError {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    let ids: BTreeSet<&str> = query_ids.iter().map(String::as_str).collect();
    let langs: BTreeSet<Language> = languages.iter().copied().collect();
    for (slot, count) in &seen {
        if *count > 1 {
            report.duplicates.push(slot.clone());
        }
        if !ids.contains(slot.query_id.as_str())
            || !langs.contains(&slot.language)
            || slot.index == 0
            || slot.index > n
        {
            report.unexpected.push(slot.clone());
        }
    }
    for qid in query_ids {
        for &language in languages {
            for index in 1..=n {
                let slot = Slot {
                    query_id: qid.clone(),
                    language,
                    index,
                };
                if !seen.contains_key(&slot) {
                    report.gaps.push(slot);
                }
            }
        }
    }
    Ok(report)
}
