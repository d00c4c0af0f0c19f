//! Paired yes/no perception scores: ACC, ACC+ and their sum per subtask.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::polarity::{Polarity, PolarityLexicon, PolarityParser};
use super::pope::Gold;
use super::report::{EvalReport, ReportRow};
use crate::error::{Error, Result};
use crate::model::Language;

fn english() -> Language {
    Language::En
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmeItem {
    #[serde(default = "english")]
    pub language: Language,
    pub image_id: String,
    pub subtask: String,
    pub question_index: u8,
    pub gold: Gold,
    pub prediction_text: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MmeSubtaskScore {
    /// Percent of questions answered correctly.
    pub acc: f64,
    /// Percent of images with both questions correct.
    pub acc_plus: f64,
    pub score: f64,
    pub images: usize,
    pub invalid: usize,
}

#[derive(Default)]
struct Tally {
    correct: usize,
    both_correct: usize,
    images: usize,
    invalid: usize,
}

impl Tally {
    fn score(&self) -> MmeSubtaskScore {
        let acc = 100.0 * self.correct as f64 / (2 * self.images) as f64;
        let acc_plus = 100.0 * self.both_correct as f64 / self.images as f64;
        MmeSubtaskScore {
            acc,
            acc_plus,
            score: acc + acc_plus,
            images: self.images,
            invalid: self.invalid,
        }
    }
}

fn correct(gold: Gold, prediction: Polarity) -> bool {
    matches!((gold, prediction), (Gold::Yes, Polarity::Yes) | (Gold::No, Polarity::No))
}

/// Scores per (language, subtask). Every (language, image, subtask) must
/// carry exactly questions 1 and 2.
pub fn mme_subtask_scores(
    items: &[MmeItem],
    lexicon: &PolarityLexicon,
) -> Result<BTreeMap<Language, BTreeMap<String, MmeSubtaskScore>>> {
    if items.is_empty() {
        return Err(Error::InvalidInput("no MME items".into()));
    }
    let mut pairs: BTreeMap<(Language, &str, &str), [Option<&MmeItem>; 2]> = BTreeMap::new();
    for item in items {
        lexicon.require(item.language)?;
        if !(1..=2).contains(&item.question_index) {
            return Err(Error::Validation(format!(
                "{}/{}: question_index must be 1 or 2, got {}",
                item.subtask, item.image_id, item.question_index
            )));
        }
        let slot = &mut pairs
            .entry((item.language, item.subtask.as_str(), item.image_id.as_str()))
            .or_default()[item.question_index as usize - 1];
        if slot.is_some() {
            return Err(Error::Validation(format!(
                "{}/{}: question {} appears twice",
                item.subtask, item.image_id, item.question_index
            )));
        }
        *slot = Some(item);
    }

    let parser = PolarityParser::new(lexicon);
    let mut tallies: BTreeMap<Language, BTreeMap<String, Tally>> = BTreeMap::new();
    for ((lang, subtask, image), questions) in &pairs {
        let [Some(q1), Some(q2)] = questions else {
            return Err(Error::Validation(format!(
                "{subtask}/{image} ({lang}): unpaired question"
            )));
        };
        let tally = tallies
            .entry(*lang)
            .or_default()
            .entry(subtask.to_string())
            .or_default();
        let mut both = true;
        for q in [q1, q2] {
            let p = parser.parse(&q.prediction_text, q.language);
            if p == Polarity::Invalid {
                tally.invalid += 1;
            }
            if correct(q.gold, p) {
                tally.correct += 1;
            } else {
                both = false;
            }
        }
        tally.images += 1;
        if both {
            tally.both_correct += 1;
        }
    }
    Ok(tallies
        .into_iter()
        .map(|(lang, subtasks)| (lang, subtasks.into_iter().map(|(s, t)| (s, t.score())).collect()))
        .collect())
}

/// Report with one row per (language, subtask) and a `total` row per
/// language summing subtask scores. With `subtasks` given, the total covers
/// exactly that set and each must be present.
pub fn mme_scores(items: &[MmeItem], lexicon: &PolarityLexicon, subtasks: Option<&[String]>) -> Result<EvalReport> {
    let scores = mme_subtask_scores(items, lexicon)?;
    let mut rows = Vec::new();
    for (lang, per_subtask) in &scores {
        let mut total = 0.0;
        let mut images = 0;
        let mut invalid = 0;
        for (name, s) in per_subtask {
            rows.push(ReportRow {
                language: lang.code().into(),
                group: name.clone(),
                metrics: BTreeMap::from([
                    ("acc".to_string(), s.acc),
                    ("acc_plus".to_string(), s.acc_plus),
                    ("score".to_string(), s.score),
                ]),
                total: 2 * s.images,
                invalid: s.invalid,
                partial: false,
            });
        }
        let counted: Vec<&String> = match subtasks {
            Some(set) => set.iter().collect(),
            None => per_subtask.keys().collect(),
        };
        for name in counted {
            let s = per_subtask.get(name).ok_or_else(|| {
                Error::Validation(format!("configured subtask {name:?} has no items for {lang}"))
            })?;
            total += s.score;
            images += s.images;
            invalid += s.invalid;
        }
        rows.push(ReportRow {
            language: lang.code().into(),
            group: "total".into(),
            metrics: BTreeMap::from([("score".to_string(), total)]),
            total: 2 * images,
            invalid,
            partial: false,
        });
    }
    let mut settings = BTreeMap::new();
    if let Some(set) = subtasks {
        settings.insert("subtasks".to_string(), set.join(","));
    }
    Ok(EvalReport {
        benchmark: "mme".into(),
        settings,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(image: &str, subtask: &str, index: u8, gold: Gold, text: &str) -> MmeItem {
        MmeItem {
            language: Language::En,
            image_id: image.into(),
            subtask: subtask.into(),
            question_index: index,
            gold,
            prediction_text: text.into(),
        }
    }

    fn lex() -> PolarityLexicon {
        PolarityLexicon::default()
    }

    #[test]
    fn one_image_both_correct() {
        let items = [q("a", "existence", 1, Gold::Yes, "Yes"), q("a", "existence", 2, Gold::No, "No")];
        let s = &mme_subtask_scores(&items, &lex()).unwrap()[&Language::En]["existence"];
        assert_eq!((s.acc, s.acc_plus, s.score), (100.0, 100.0, 200.0));
    }

    #[test]
    fn worked_fixture() {
        let items = [
            q("a", "count", 1, Gold::Yes, "Yes"),
            q("a", "count", 2, Gold::No, "No"),
            q("b", "count", 1, Gold::Yes, "Yes"),
            q("b", "count", 2, Gold::No, "Yes"),
        ];
        let r = mme_scores(&items, &lex(), None).unwrap();
        let row = r.row("en", "count").unwrap();
        assert_eq!(
            (row.metric("acc"), row.metric("acc_plus"), row.metric("score")),
            (Some(75.0), Some(50.0), Some(125.0))
        );
        assert_eq!(r.row("en", "total").unwrap().metric("score"), Some(125.0));
    }

    #[test]
    fn all_invalid_scores_zero() {
        let items = [q("a", "color", 1, Gold::Yes, "YesNo"), q("a", "color", 2, Gold::No, "??")];
        let r = mme_scores(&items, &lex(), None).unwrap();
        assert_eq!(r.row("en", "total").unwrap().metric("score"), Some(0.0));
        assert_eq!(r.row("en", "color").unwrap().invalid, 2);
    }

    #[test]
    fn pairing_is_enforced() {
        let items = [q("a", "count", 1, Gold::Yes, "Yes")];
        assert!(matches!(mme_scores(&items, &lex(), None), Err(Error::Validation(_))));
        let items = [q("a", "count", 1, Gold::Yes, "Yes"), q("a", "count", 1, Gold::No, "No")];
        assert!(mme_scores(&items, &lex(), None).is_err());
        let items = [q("a", "count", 3, Gold::Yes, "Yes")];
        assert!(mme_scores(&items, &lex(), None).is_err());
    }

    #[test]
    fn configured_subtask_set() {
        let items = [
            q("a", "count", 1, Gold::Yes, "Yes"),
            q("a", "count", 2, Gold::No, "No"),
            q("a", "color", 1, Gold::Yes, "No"),
            q("a", "color", 2, Gold::No, "No"),
        ];
        let r = mme_scores(&items, &lex(), Some(&["count".to_string()])).unwrap();
        assert_eq!(r.row("en", "total").unwrap().metric("score"), Some(200.0));
        let r = mme_scores(&items, &lex(), None).unwrap();
        assert_eq!(r.row("en", "total").unwrap().metric("score"), Some(250.0));
        assert!(mme_scores(&items, &lex(), Some(&["position".to_string()])).is_err());
    }
}
