//! Two-stage language identification: Unicode script counts, then
//! character-trigram cosine similarity within Latin and Cyrillic.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::model::Language;

const SEED_CORPORA: [(Language, &str); 9] = [
    (Language::En, include_str!("../../data/langid/en.txt")),
    (Language::De, include_str!("../../data/langid/de.txt")),
    (Language::Fr, include_str!("../../data/langid/fr.txt")),
    (Language::Es, include_str!("../../data/langid/es.txt")),
    (Language::Pt, include_str!("../../data/langid/pt.txt")),
    (Language::Tr, include_str!("../../data/langid/tr.txt")),
    (Language::Ru, include_str!("../../data/langid/ru.txt")),
    (Language::Uk, include_str!("../../data/langid/uk.txt")),
    (Language::Bg, include_str!("../../data/langid/bg.txt")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScriptClass {
    Latin,
    Cyrillic,
    Han,
    Kana,
    Hangul,
    Arabic,
}

impl ScriptClass {
    pub fn of(c: char) -> Option<ScriptClass> {
        let u = c as u32;
        let class = match u {
            0x41..=0x5A | 0x61..=0x7A => ScriptClass::Latin,
            0xC0..=0x24F if u != 0xD7 && u != 0xF7 => ScriptClass::Latin,
            0x1E00..=0x1EFF => ScriptClass::Latin,
            0x400..=0x52F => ScriptClass::Cyrillic,
            0x3040..=0x30FF | 0x31F0..=0x31FF | 0xFF66..=0xFF9F => ScriptClass::Kana,
            0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0x20000..=0x2A6DF => ScriptClass::Han,
            0x1100..=0x11FF | 0x3130..=0x318F | 0xAC00..=0xD7AF => ScriptClass::Hangul,
            0x600..=0x6FF | 0x750..=0x77F | 0x8A0..=0x8FF | 0xFB50..=0xFDFF | 0xFE70..=0xFEFF => ScriptClass::Arabic,
            _ => return None,
        };
        Some(class)
    }

    /// Candidate languages resolved by trigram profiles.
    fn candidates(self) -> &'static [Language] {
        match self {
            ScriptClass::Latin => &[Language::En, Language::De, Language::Fr, Language::Es, Language::Pt, Language::Tr],
            ScriptClass::Cyrillic => &[Language::Ru, Language::Uk, Language::Bg],
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LangIdConfig {
    /// Earlier scripts win exact ties in codepoint counts.
    pub tie_precedence: Vec<ScriptClass>,
}

impl Default for LangIdConfig {
    fn default() -> Self {
        LangIdConfig {
            tie_precedence: vec![
                ScriptClass::Han,
                ScriptClass::Kana,
                ScriptClass::Hangul,
                ScriptClass::Arabic,
                ScriptClass::Cyrillic,
                ScriptClass::Latin,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub language: Language,
    pub confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Profile {
    counts: BTreeMap<String, f64>,
    norm: f64,
}

impl Profile {
    fn build(text: &str, script: ScriptClass) -> Profile {
        let mut cleaned = String::new();
        for c in text.nfc().flat_map(char::to_lowercase) {
            cleaned.push(if ScriptClass::of(c) == Some(script) { c } else { ' ' });
        }
        let mut counts = BTreeMap::new();
        for word in cleaned.split_whitespace() {
            let padded: Vec<char> = std::iter::once(' ').chain(word.chars()).chain(std::iter::once(' ')).collect();
            for w in padded.windows(3) {
                *counts.entry(w.iter().collect::<String>()).or_insert(0.0) += 1.0;
            }
        }
        let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
        Profile { counts, norm }
    }

    fn cosine(&self, other: &Profile) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        let dot: f64 = self
            .counts
            .iter()
            .filter_map(|(g, a)| other.counts.get(g).map(|b| a * b))
            .sum();
        dot / (self.norm * other.norm)
    }
}

#[derive(Debug, Clone)]
pub struct LanguageDetector {
    config: LangIdConfig,
    profiles: BTreeMap<Language, Profile>,
}

impl Default for LanguageDetector {
    fn default() -> Self {
        LanguageDetector::new(LangIdConfig::default())
    }
}

impl LanguageDetector {
    pub fn new(config: LangIdConfig) -> Self {
        let profiles = SEED_CORPORA
            .iter()
            .map(|(lang, text)| {
                let script = if lang.script() == crate::model::Script::Cyrillic {
                    ScriptClass::Cyrillic
                } else {
                    ScriptClass::Latin
                };
                (*lang, Profile::build(text, script))
            })
            .collect();
        LanguageDetector { config, profiles }
    }

    /// Dominant script by codepoint count, ties resolved by precedence.
    pub fn dominant_script(&self, text: &str) -> Option<(ScriptClass, BTreeMap<ScriptClass, usize>)> {
        let mut counts: BTreeMap<ScriptClass, usize> = BTreeMap::new();
        for c in text.chars() {
            if let Some(s) = ScriptClass::of(c) {
                *counts.entry(s).or_insert(0) += 1;
            }
        }
        let best = *counts.values().max()?;
        let rank = |s: &ScriptClass| {
            self.config
                .tie_precedence
                .iter()
                .position(|p| p == s)
                .unwrap_or(usize::MAX)
        };
        let winner = counts
            .iter()
            .filter(|(_, &n)| n == best)
            .map(|(s, _)| *s)
            .min_by_key(|s| (rank(s), *s))?;
        Some((winner, counts))
    }

    pub fn detect(&self, text: &str) -> Result<Detection> {
        if text.trim().is_empty() {
            return Err(Error::InvalidInput("cannot detect the language of empty text".into()));
        }
        let Some((script, counts)) = self.dominant_script(text) else {
            return Ok(Detection {
                language: Language::En,
                confidence: 0.0,
            });
        };
        let letters: usize = counts.values().sum();
        let share = counts[&script] as f64 / letters as f64;
        let fixed = |language| Ok(Detection { language, confidence: share });
        match script {
            ScriptClass::Han | ScriptClass::Kana => {
                if counts.contains_key(&ScriptClass::Kana) {
                    fixed(Language::Ja)
                } else {
                    fixed(Language::Zh)
                }
            }
            ScriptClass::Hangul => fixed(Language::Ko),
            ScriptClass::Arabic => fixed(Language::Ar),
            ScriptClass::Latin | ScriptClass::Cyrillic => Ok(self.by_profile(text, script)),
        }
    }

    fn by_profile(&self, text: &str, script: ScriptClass) -> Detection {
        let query = Profile::build(text, script);
        let mut scored: Vec<(f64, Language)> = script
            .candidates()
            .iter()
            .map(|l| (query.cosine(&self.profiles[l]), *l))
            .collect();
        // Highest similarity first; candidate order breaks exact ties.
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (best, language) = scored[0];
        let second = scored.get(1).map_or(0.0, |s| s.0);
        let confidence = if best > 0.0 { (best - second) / best } else { 0.0 };
        Detection { language, confidence }
    }
}

/// Detection with the shipped profiles and default tie precedence.
pub fn detect_language(text: &str) -> Result<(Language, f64)> {
    static DETECTOR: OnceLock<LanguageDetector> = OnceLock::new();
    let d = DETECTOR.get_or_init(LanguageDetector::default).detect(text)?;
    Ok((d.language, d.confidence))
}
