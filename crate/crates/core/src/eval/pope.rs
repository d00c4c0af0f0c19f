//! Multilingual yes/no object-probing accuracy, precision, recall and F1.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::polarity::{Polarity, PolarityLexicon, PolarityParser};
use super::report::{EvalReport, ReportRow, ALL};
use crate::error::{Error, Result};
use crate::model::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopeDataset {
    Mscoco,
    Aokvqa,
    Gqa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopeSampling {
    Random,
    Popular,
    Adversarial,
}

impl PopeDataset {
    pub const ALL: [PopeDataset; 3] = [PopeDataset::Mscoco, PopeDataset::Aokvqa, PopeDataset::Gqa];

    pub fn as_str(self) -> &'static str {
        match self {
            PopeDataset::Mscoco => "mscoco",
            PopeDataset::Aokvqa => "aokvqa",
            PopeDataset::Gqa => "gqa",
        }
    }
}

impl PopeSampling {
    pub const ALL: [PopeSampling; 3] = [PopeSampling::Random, PopeSampling::Popular, PopeSampling::Adversarial];

    pub fn as_str(self) -> &'static str {
        match self {
            PopeSampling::Random => "random",
            PopeSampling::Popular => "popular",
            PopeSampling::Adversarial => "adversarial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gold {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopeItem {
    pub id: String,
    pub language: Language,
    pub dataset: PopeDataset,
    pub sampling: PopeSampling,
    pub gold: Gold,
    pub prediction_text: String,
}

/// How invalid answers enter precision and recall. Accuracy always counts
/// them as incorrect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidMode {
    /// Invalid on gold yes is a false negative; invalid on gold no is
    /// neither a true nor a false negative.
    #[default]
    Strict,
    /// Invalid answers are left out of precision and recall.
    ValidOnly,
}

impl InvalidMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InvalidMode::Strict => "strict",
            InvalidMode::ValidOnly => "valid_only",
        }
    }
}

/// Integer confusion counts; mergeable exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PopeCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub invalid_yes: usize,
    pub invalid_no: usize,
}

impl PopeCounts {
    pub fn add(&mut self, gold: Gold, prediction: Polarity) {
        match (gold, prediction) {
            (Gold::Yes, Polarity::Yes) => self.tp += 1,
            (Gold::No, Polarity::Yes) => self.fp += 1,
            (Gold::No, Polarity::No) => self.tn += 1,
            (Gold::Yes, Polarity::No) => self.fn_ += 1,
            (Gold::Yes, Polarity::Invalid) => self.invalid_yes += 1,
            (Gold::No, Polarity::Invalid) => self.invalid_no += 1,
        }
    }

    pub fn merge(&mut self, other: &PopeCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
        self.invalid_yes += other.invalid_yes;
        self.invalid_no += other.invalid_no;
    }

    pub fn invalid(&self) -> usize {
        self.invalid_yes + self.invalid_no
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_ + self.invalid()
    }

    /// accuracy, precision, recall, f1, unknown_prop and yes_ratio (share of
    /// answers parsed as yes). A ratio with a zero denominator is 1 when the
    /// kind of error it measures cannot have occurred, else 0.
    pub fn metrics(&self, mode: InvalidMode) -> BTreeMap<String, f64> {
        let total = self.total() as f64;
        let false_neg = match mode {
            InvalidMode::Strict => self.fn_ + self.invalid_yes,
            InvalidMode::ValidOnly => self.fn_,
        };
        let ratio = |num: usize, den: usize, other_errors: usize| {
            if den > 0 {
                num as f64 / den as f64
            } else if other_errors == 0 {
                1.0
            } else {
                0.0
            }
        };
        let precision = ratio(self.tp, self.tp + self.fp, false_neg);
        let recall = ratio(self.tp, self.tp + false_neg, self.fp);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        BTreeMap::from([
            ("accuracy".to_string(), (self.tp + self.tn) as f64 / total),
            ("precision".to_string(), precision),
            ("recall".to_string(), recall),
            ("f1".to_string(), f1),
            ("unknown_prop".to_string(), self.invalid() as f64 / total),
            ("yes_ratio".to_string(), (self.tp + self.fp) as f64 / total),
        ])
    }
}

fn row(language: String, group: String, counts: &PopeCounts, mode: InvalidMode) -> ReportRow {
    ReportRow {
        language,
        group,
        metrics: counts.metrics(mode),
        total: counts.total(),
        invalid: counts.invalid(),
        partial: false,
    }
}

/// Rows per (language, dataset/sampling), per language (`all`) and overall
/// (`all`, `all`).
pub fn pope_metrics(items: &[PopeItem], lexicon: &PolarityLexicon, mode: InvalidMode) -> Result<EvalReport> {
    if items.is_empty() {
        return Err(Error::InvalidInput("no POPE items".into()));
    }
    let mut seen = HashSet::new();
    for item in items {
        lexicon.require(item.language)?;
        if !seen.insert((item.language, item.id.as_str())) {
            return Err(Error::DuplicateId(format!("{}/{}", item.language, item.id)));
        }
    }
    let parser = PolarityParser::new(lexicon);
    let mut groups: BTreeMap<(Language, PopeDataset, PopeSampling), PopeCounts> = BTreeMap::new();
    for item in items {
        let prediction = parser.parse(&item.prediction_text, item.language);
        groups
            .entry((item.language, item.dataset, item.sampling))
            .or_default()
            .add(item.gold, prediction);
    }

    let mut rows = Vec::new();
    let mut per_language: BTreeMap<Language, PopeCounts> = BTreeMap::new();
    let mut overall = PopeCounts::default();
    for ((lang, dataset, sampling), counts) in &groups {
        rows.push(row(
            lang.code().into(),
            format!("{}/{}", dataset.as_str(), sampling.as_str()),
            counts,
            mode,
        ));
        per_language.entry(*lang).or_default().merge(counts);
        overall.merge(counts);
    }
    for (lang, counts) in &per_language {
        rows.push(row(lang.code().into(), ALL.into(), counts, mode));
    }
    rows.push(row(ALL.into(), ALL.into(), &overall, mode));
    Ok(EvalReport {
        benchmark: "pope".into(),
        settings: BTreeMap::from([("invalid_mode".to_string(), mode.as_str().to_string())]),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn item(i: usize, gold: Gold, text: &str) -> PopeItem {
        PopeItem {
            id: format!("p{i}"),
            language: Language::En,
            dataset: PopeDataset::Mscoco,
            sampling: PopeSampling::Random,
            gold,
            prediction_text: text.into(),
        }
    }

    /// 6 correct, 2 wrong, 2 invalid.
    fn fixture() -> Vec<PopeItem> {
        let cases = [
            (Gold::Yes, "Yes."),
            (Gold::Yes, "Yes, there is."),
            (Gold::Yes, "yes"),
            (Gold::No, "No."),
            (Gold::No, "No, there is not."),
            (Gold::No, "no"),
            (Gold::Yes, "No."),
            (Gold::No, "Yes."),
            (Gold::Yes, "YesNo"),
            (Gold::No, "I cannot tell."),
        ];
        cases.iter().enumerate().map(|(i, (g, t))| item(i, *g, t)).collect()
    }

    #[test]
    fn worked_fixture() {
        let lex = PolarityLexicon::default();
        let r = pope_metrics(&fixture(), &lex, InvalidMode::Strict).unwrap();
        let all = r.row("all", "all").unwrap();
        assert_eq!(all.metric("accuracy"), Some(0.6));
        assert_eq!(all.metric("unknown_prop"), Some(0.2));
        assert_eq!((all.total, all.invalid), (10, 2));
        // strict: tp 3, fp 1, fn 1 + 1 invalid-on-yes
        assert_eq!(all.metric("precision"), Some(0.75));
        assert_eq!(all.metric("recall"), Some(0.6));
        let v = pope_metrics(&fixture(), &lex, InvalidMode::ValidOnly).unwrap();
        let all = v.row("all", "all").unwrap();
        assert_eq!(all.metric("accuracy"), Some(0.6));
        assert_eq!(all.metric("recall"), Some(0.75));
    }

    #[test]
    fn gold_equal_predictions_are_perfect() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let langs = [Language::En, Language::Zh, Language::Uk, Language::Ko];
        let answers = |l: Language, g: Gold| match (l, g) {
            (Language::En, Gold::Yes) => "Yes",
            (Language::En, Gold::No) => "No",
            (Language::Zh, Gold::Yes) => "是的",
            (Language::Zh, Gold::No) => "不是",
            (Language::Uk, Gold::Yes) => "Так",
            (Language::Uk, Gold::No) => "Ні",
            (_, Gold::Yes) => "네",
            (_, Gold::No) => "아니요",
        };
        let items: Vec<PopeItem> = (0..400)
            .map(|i| {
                let language = langs[i % 4];
                let gold = if rng.gen() { Gold::Yes } else { Gold::No };
                PopeItem {
                    id: format!("p{i}"),
                    language,
                    dataset: *PopeDataset::ALL.choose(&mut rng).unwrap(),
                    sampling: *PopeSampling::ALL.choose(&mut rng).unwrap(),
                    gold,
                    prediction_text: answers(language, gold).into(),
                }
            })
            .collect();
        for mode in [InvalidMode::Strict, InvalidMode::ValidOnly] {
            let r = pope_metrics(&items, &PolarityLexicon::default(), mode).unwrap();
            for row in &r.rows {
                for m in ["accuracy", "precision", "recall", "f1"] {
                    assert_eq!(row.metric(m), Some(1.0), "{} {} {m}", row.language, row.group);
                }
                assert_eq!(row.metric("unknown_prop"), Some(0.0));
            }
        }
    }

    #[test]
    fn permutation_invariant() {
        let lex = PolarityLexicon::default();
        let mut items = fixture();
        let a = pope_metrics(&items, &lex, InvalidMode::Strict).unwrap();
        items.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, pope_metrics(&items, &lex, InvalidMode::Strict).unwrap());
    }

    #[test]
    fn rejects_empty_and_duplicates() {
        let lex = PolarityLexicon::default();
        assert!(pope_metrics(&[], &lex, InvalidMode::Strict).is_err());
        let items = vec![item(1, Gold::Yes, "Yes"), item(1, Gold::No, "No")];
        assert!(matches!(
            pope_metrics(&items, &lex, InvalidMode::Strict),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn counts_merge_exactly() {
        let mut a = PopeCounts::default();
        let mut b = PopeCounts::default();
        let mut whole = PopeCounts::default();
        let preds = [Polarity::Yes, Polarity::No, Polarity::Invalid];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..100 {
            let g = if rng.gen() { Gold::Yes } else { Gold::No };
            let p = *preds.choose(&mut rng).unwrap();
            if i % 2 == 0 { a.add(g, p) } else { b.add(g, p) }
            whole.add(g, p);
        }
        a.merge(&b);
        assert_eq!(a, whole);
    }
}
