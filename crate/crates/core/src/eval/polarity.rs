//! Yes/no answer parsing with per-language polarity lexicons.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::text::SurfaceMatcher;
use crate::error::{Error, Result};
use crate::model::Language;

const DEFAULT_LEXICON: &str = include_str!("../../data/polarity.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Yes,
    No,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarityWords {
    pub yes: Vec<String>,
    pub no: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolarityLexicon(pub BTreeMap<Language, PolarityWords>);

impl Default for PolarityLexicon {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_LEXICON).expect("shipped polarity lexicon parses")
    }
}

impl PolarityLexicon {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn require(&self, language: Language) -> Result<()> {
        if self.0.contains_key(&language) {
            Ok(())
        } else {
            Err(Error::Config(format!("polarity lexicon has no entry for {language}")))
        }
    }
}

/// Matchers compiled once per language.
#[derive(Debug, Clone)]
pub struct PolarityParser {
    matchers: BTreeMap<Language, SurfaceMatcher<Polarity>>,
}

impl PolarityParser {
    pub fn new(lexicon: &PolarityLexicon) -> Self {
        let matchers = lexicon
            .0
            .iter()
            .map(|(&lang, words)| (lang, compile(lang, words)))
            .collect();
        PolarityParser { matchers }
    }

    /// `Yes` or `No` when exactly one polarity occurs; `Invalid` when both,
    /// neither, or the language has no lexicon.
    pub fn parse(&self, text: &str, language: Language) -> Polarity {
        match self.matchers.get(&language) {
            Some(m) => decide(&m.find_all(text)),
            None => Polarity::Invalid,
        }
    }
}

fn compile(language: Language, words: &PolarityWords) -> SurfaceMatcher<Polarity> {
    let entries = words
        .yes
        .iter()
        .map(|w| (w.as_str(), Polarity::Yes))
        .chain(words.no.iter().map(|w| (w.as_str(), Polarity::No)));
    SurfaceMatcher::new(entries, language.script().is_segmentable())
}

fn decide(found: &[Polarity]) -> Polarity {
    let yes = found.contains(&Polarity::Yes);
    let no = found.contains(&Polarity::No);
    match (yes, no) {
        (true, false) => Polarity::Yes,
        (false, true) => Polarity::No,
        _ => Polarity::Invalid,
    }
}

pub fn parse_polarity(text: &str, language: Language, lexicon: &PolarityLexicon) -> Polarity {
    match lexicon.0.get(&language) {
        Some(words) => decide(&compile(language, words).find_all(text)),
        None => Polarity::Invalid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Language::*;
    use Polarity::*;

    fn p(text: &str, lang: Language) -> Polarity {
        parse_polarity(text, lang, &PolarityLexicon::default())
    }

    #[test]
    fn shipped_lexicon_covers_every_language() {
        let lex = PolarityLexicon::default();
        for lang in Language::ALL {
            lex.require(lang).unwrap();
        }
    }

    #[test]
    fn english() {
        assert_eq!(p("Yes, there is a dog.", En), Yes);
        assert_eq!(p("No.", En), No);
        assert_eq!(p("YesNo", En), Invalid);
        assert_eq!(p("Yes No", En), Invalid);
        assert_eq!(p("There is a dog.", En), Invalid);
        assert_eq!(p("Nobody knows", En), Invalid);
    }

    #[test]
    fn segmented_languages() {
        assert_eq!(p("Да, на картинке есть собака.", Ru), Yes);
        assert_eq!(p("ДаНет", Ru), Invalid);
        assert_eq!(p("Ні, собаки немає.", Uk), No);
        assert_eq!(p("Nein.", De), No);
        assert_eq!(p("Sí, hay un perro.", Es), Yes);
        assert_eq!(p("Não", Pt), No);
        assert_eq!(p("HAYIR", Tr), No);
        assert_eq!(p("نعم، يوجد كلب.", Ar), Yes);
        assert_eq!(p("نعملا", Ar), Invalid);
    }

    #[test]
    fn unsegmented_languages() {
        assert_eq!(p("是的", Zh), Yes);
        assert_eq!(p("不是。", Zh), No);
        assert_eq!(p("没有狗", Zh), No);
        assert_eq!(p("是不是", Zh), Invalid);
        assert_eq!(p("はい、犬がいます。", Ja), Yes);
        assert_eq!(p("いいえ", Ja), No);
        assert_eq!(p("はいいいえ", Ja), Invalid);
        assert_eq!(p("네, 있습니다.", Ko), Yes);
        assert_eq!(p("아니요, 없습니다.", Ko), No);
        assert_eq!(p("네아니요", Ko), Invalid);
    }

    #[test]
    fn wrong_language_is_invalid() {
        assert_eq!(p("Yes, there is a dog.", Zh), Invalid);
    }

    #[test]
    fn parser_agrees_with_free_function() {
        let lex = PolarityLexicon::default();
        let parser = PolarityParser::new(&lex);
        for (t, l) in [("Oui", Fr), ("Non, merci", Fr), ("evet var", Tr), ("Так", Uk)] {
            assert_eq!(parser.parse(t, l), parse_polarity(t, l, &lex));
        }
    }
}
