//! Generative object-hallucination metrics (CHAIR, Cover, Hal) and the
//! language-consistency rate QC.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::langid::LanguageDetector;
use super::report::{EvalReport, ReportRow};
use super::text::SurfaceMatcher;
use crate::error::{Error, Result};
use crate::model::Language;

const DEFAULT_LEXICON: &str = include_str!("../../data/object_lexicon.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmberAnnotation {
    pub image_id: String,
    pub truth_objects: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmberResponse {
    pub language: Language,
    pub image_id: String,
    pub caption: String,
}

/// Per-language surface form to canonical object name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectLexicon(pub BTreeMap<Language, BTreeMap<String, String>>);

impl Default for ObjectLexicon {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_LEXICON).expect("shipped object lexicon parses")
    }
}

impl ObjectLexicon {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn canonical_objects(&self) -> BTreeSet<&str> {
        self.0.values().flat_map(|m| m.values().map(String::as_str)).collect()
    }

    pub fn matcher(&self, language: Language) -> Option<SurfaceMatcher<String>> {
        self.0.get(&language).map(|forms| {
            SurfaceMatcher::new(
                forms.iter().map(|(s, c)| (s.as_str(), c.clone())),
                language.script().is_segmentable(),
            )
        })
    }
}

/// Set arithmetic for one caption.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseScore {
    pub mentioned: BTreeSet<String>,
    pub hallucinated: usize,
    pub covered: usize,
    pub truth: usize,
}

impl ResponseScore {
    pub fn new(mentioned: BTreeSet<String>, truth: &BTreeSet<String>) -> Self {
        let hallucinated = mentioned.difference(truth).count();
        let covered = mentioned.intersection(truth).count();
        ResponseScore {
            mentioned,
            hallucinated,
            covered,
            truth: truth.len(),
        }
    }

    pub fn chair(&self) -> f64 {
        if self.mentioned.is_empty() {
            0.0
        } else {
            self.hallucinated as f64 / self.mentioned.len() as f64
        }
    }

    pub fn cover(&self) -> f64 {
        self.covered as f64 / self.truth as f64
    }

    pub fn hal(&self) -> bool {
        self.hallucinated > 0
    }
}

fn index_annotations<'a>(
    annotations: &'a [AmberAnnotation],
    lexicon: &ObjectLexicon,
) -> Result<HashMap<&'a str, &'a AmberAnnotation>> {
    let known = lexicon.canonical_objects();
    let mut by_id = HashMap::new();
    for a in annotations {
        if a.truth_objects.is_empty() {
            return Err(Error::Validation(format!("image {:?} has no truth objects", a.image_id)));
        }
        if let Some(o) = a.truth_objects.iter().find(|o| !known.contains(o.as_str())) {
            return Err(Error::Validation(format!(
                "image {:?}: truth object {o:?} is not in the object lexicon",
                a.image_id
            )));
        }
        if by_id.insert(a.image_id.as_str(), a).is_some() {
            return Err(Error::DuplicateId(a.image_id.clone()));
        }
    }
    Ok(by_id)
}

/// One row per language with chair, cover, hal and qc. Languages without
/// an object lexicon get qc only and are marked partial.
pub fn amber_metrics(
    responses: &[AmberResponse],
    annotations: &[AmberAnnotation],
    lexicon: &ObjectLexicon,
    detector: &LanguageDetector,
) -> Result<EvalReport> {
    if responses.is_empty() {
        return Err(Error::InvalidInput("no AMBER responses".into()));
    }
    let by_id = index_annotations(annotations, lexicon)?;
    for r in responses {
        if !by_id.contains_key(r.image_id.as_str()) {
            return Err(Error::DanglingReference(format!("caption for unannotated image {:?}", r.image_id)));
        }
    }
    let matchers: BTreeMap<Language, SurfaceMatcher<String>> = responses
        .iter()
        .map(|r| r.language)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter_map(|l| lexicon.matcher(l).map(|m| (l, m)))
        .collect();

    let per_response: Vec<(Option<ResponseScore>, bool)> = responses
        .par_iter()
        .map(|r| {
            let score = matchers.get(&r.language).map(|m| {
                let mentioned = m.find_all(&r.caption).into_iter().collect();
                ResponseScore::new(mentioned, &by_id[r.image_id.as_str()].truth_objects)
            });
            let qc = match detector.detect(&r.caption) {
                Ok(d) => d.language == r.language,
                Err(_) => false,
            };
            (score, qc)
        })
        .collect();

    #[derive(Default)]
    struct Sums {
        n: usize,
        chair: f64,
        cover: f64,
        hal: usize,
        qc: usize,
        partial: bool,
    }
    let mut sums: BTreeMap<Language, Sums> = BTreeMap::new();
    for (r, (score, qc)) in responses.iter().zip(&per_response) {
        let s = sums.entry(r.language).or_default();
        s.n += 1;
        s.qc += *qc as usize;
        match score {
            Some(score) => {
                s.chair += score.chair();
                s.cover += score.cover();
                s.hal += score.hal() as usize;
            }
            None => s.partial = true,
        }
    }
    let rows = sums
        .into_iter()
        .map(|(lang, s)| {
            let n = s.n as f64;
            let mut metrics = BTreeMap::from([("qc".to_string(), s.qc as f64 / n)]);
            if !s.partial {
                metrics.insert("chair".into(), s.chair / n);
                metrics.insert("cover".into(), s.cover / n);
                metrics.insert("hal".into(), s.hal as f64 / n);
            }
            ReportRow {
                language: lang.code().into(),
                group: "all".into(),
                metrics,
                total: s.n,
                invalid: 0,
                partial: s.partial,
            }
        })
        .collect();
    Ok(EvalReport {
        benchmark: "amber".into(),
        settings: BTreeMap::from([("object_matching".to_string(), "original_language".to_string())]),
        rows,
    })
}
