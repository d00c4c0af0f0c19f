//! Cross-lingual alignment: semantic distance between a response's English
//! translation and the English reference answers, and deterministic ranking.
//!
//! Three scorers are available:
//!
//! * `Bleu` - distance is `1 - BLEU(translation, reference)`.
//! * `ExternalLoss` - a translation-model cross-entropy computed elsewhere and
//!   stored on the response record.
//! * `SurrogateNgramCe` - a self-contained stand-in for that loss: mean
//!   negative log-likelihood of the translation under a smoothed character
//!   n-gram model of the reference.
//!
//! Smaller distance always means better alignment.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GeneratedResponse, QueryRecord, ScoredResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    Bleu,
    ExternalLoss,
    SurrogateNgramCe,
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "bleu" => Ok(ScorerKind::Bleu),
            "external_loss" | "loss" => Ok(ScorerKind::ExternalLoss),
            "surrogate_ngram_ce" | "surrogate" => Ok(ScorerKind::SurrogateNgramCe),
            other => Err(Error::Config(format!(
                "unknown scorer {other:?}; expected bleu, external-loss or surrogate-ngram-ce"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    /// Zero-match orders use `(0 + 1) / (total + 1)`.
    AddOneClipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    pub kind: ScorerKind,
    pub bleu_max_n: usize,
    pub bleu_smoothing: Smoothing,
    pub surrogate_n: usize,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            kind: ScorerKind::ExternalLoss,
            bleu_max_n: 4,
            bleu_smoothing: Smoothing::AddOneClipped,
            surrogate_n: 3,
        }
    }
}

impl ScorerConfig {
    pub fn bleu() -> Self {
        ScorerConfig {
            kind: ScorerKind::Bleu,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.bleu_max_n) {
            return Err(Error::Config(format!(
                "bleu_max_n must be in [1, 4], got {}",
                self.bleu_max_n
            )));
        }
        if !(2..=5).contains(&self.surrogate_n) {
            return Err(Error::Config(format!(
                "surrogate_n must be in [2, 5], got {}",
                self.surrogate_n
            )));
        }
        Ok(())
    }

    /// Identifier written next to every score.
    pub fn scorer_id(&self) -> String {
        match self.kind {
            ScorerKind::Bleu => {
                let smoothing = match self.bleu_smoothing {
                    Smoothing::None => "none",
                    Smoothing::AddOneClipped => "add1",
                };
                format!("bleu{}-{smoothing}", self.bleu_max_n)
            }
            ScorerKind::ExternalLoss => "external-loss".to_string(),
            ScorerKind::SurrogateNgramCe => format!("surrogate-ce{}", self.surrogate_n),
        }
    }
}

/// Which reference answer a distance is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    NonHallucinated,
    Hallucinated,
}

/// Ranking key for [`rank_ascending`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankKey {
    DNh,
    DH,
}

/// BLEU tokenization: lowercase, split on whitespace, then peel leading and
/// trailing punctuation off each chunk into single-character tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.to_lowercase().split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let start = chars
            .iter()
            .position(|c| !c.is_ascii_punctuation() && !is_unicode_punct(*c))
            .unwrap_or(chars.len());
        let end = chars
            .iter()
            .rposition(|c| !c.is_ascii_punctuation() && !is_unicode_punct(*c))
            .map_or(start, |p| p + 1);
        for c in &chars[..start] {
            tokens.push(c.to_string());
        }
        if start < end {
            tokens.push(chars[start..end].iter().collect());
        }
        for c in &chars[end.max(start)..] {
            tokens.push(c.to_string());
        }
    }
    tokens
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        c,
        '«' | '»' | '“' | '”' | '‘' | '’' | '…' | '—' | '–' | '¿' | '¡' | '。' | '、' | '，' | '！'
            | '？' | '：' | '；' | '؟' | '،'
    )
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            let key: Vec<&str> = window.iter().map(|t| t.as_ref()).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and total candidate n-grams of order `n`.
pub fn modified_precision<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refc = ngram_counts(reference, n);
    let matched = cand
        .iter()
        .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
        .sum();
    let total = if candidate.len() >= n {
        candidate.len() - n + 1
    } else {
        0
    };
    (matched, total)
}

/// Sentence BLEU of `candidate` against a single `reference`.
///
/// Orders longer than the candidate have no n-grams and are left out of the
/// geometric mean, so `bleu(x, x) == 1` for every non-empty `x`.
pub fn bleu<S: AsRef<str>>(candidate: &[S], reference: &[S], config: &ScorerConfig) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::InvalidInput("BLEU reference is empty".into()));
    }
    if candidate.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=config.bleu_max_n {
        let (matched, total) = modified_precision(candidate, reference, n);
        if total == 0 {
            continue;
        }
        let p = if matched == 0 {
            match config.bleu_smoothing {
                Smoothing::None => return Ok(0.0),
                Smoothing::AddOneClipped => 1.0 / (total as f64 + 1.0),
            }
        } else {
            matched as f64 / total as f64
        };
        log_sum += p.ln();
        orders += 1;
    }
    let c = candidate.len() as f64;
    let r = reference.len() as f64;
    let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    Ok(bp * (log_sum / orders as f64).exp())
}

/// Translation cross-entropy: the negated sum of per-token log-probabilities.
pub fn ce_loss_from_logprobs(token_logprobs: &[f64]) -> Result<f64> {
    let mut loss = 0.0;
    for (t, &lp) in token_logprobs.iter().enumerate() {
        if lp.is_nan() || lp > 0.0 {
            return Err(Error::InvalidInput(format!(
                "log-probability at position {t} is {lp}, expected <= 0"
            )));
        }
        loss -= lp;
    }
    Ok(loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Sym {
    Bos,
    Char(char),
    Eos,
    Unk,
}

fn symbols(text: &str, n: usize) -> Vec<Sym> {
    let mut seq = vec![Sym::Bos; n - 1];
    seq.extend(text.chars().map(Sym::Char));
    seq.push(Sym::Eos);
    seq
}

/// Mean negative log-likelihood (nats per symbol) of `candidate` under an
/// add-one smoothed character `n`-gram model estimated from `reference`.
///
/// Both strings are framed with `n - 1` start symbols and one end symbol.
/// The event alphabet is the reference characters plus end-of-text plus one
/// shared unknown class.
pub fn surrogate_ngram_ce(candidate: &str, reference: &str, n: usize) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::InvalidInput("surrogate reference is empty".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!("n-gram order must be >= 2, got {n}")));
    }
    let ref_seq = symbols(reference, n);
    let mut alphabet: Vec<char> = reference.chars().collect();
    alphabet.sort_unstable();
    alphabet.dedup();
    let vocab = (alphabet.len() + 2) as f64;

    let mut joint: HashMap<&[Sym], HashMap<Sym, usize>> = HashMap::new();
    let mut history_totals: HashMap<&[Sym], usize> = HashMap::new();
    for t in (n - 1)..ref_seq.len() {
        let h = &ref_seq[t + 1 - n..t];
        *joint.entry(h).or_default().entry(ref_seq[t]).or_insert(0) += 1;
        *history_totals.entry(h).or_insert(0) += 1;
    }

    let cand_seq: Vec<Sym> = symbols(candidate, n)
        .into_iter()
        .map(|s| match s {
            Sym::Char(c) if alphabet.binary_search(&c).is_err() => Sym::Unk,
            other => other,
        })
        .collect();
    let mut nll = 0.0;
    let events = cand_seq.len() - (n - 1);
    for t in (n - 1)..cand_seq.len() {
        let h = &cand_seq[t + 1 - n..t];
        let joint_count = joint
            .get(h)
            .and_then(|m| m.get(&cand_seq[t]))
            .copied()
            .unwrap_or(0);
        let total = history_totals.get(h).copied().unwrap_or(0);
        nll -= ((joint_count as f64 + 1.0) / (total as f64 + vocab)).ln();
    }
    Ok(nll / events as f64)
}

/// Distance from one response to one reference answer under `config`.
pub fn distance(
    response: &GeneratedResponse,
    reference_text: &str,
    which: Reference,
    config: &ScorerConfig,
) -> Result<f64> {
    let missing = || Error::MissingScoreInput {
        query_id: response.query_id.clone(),
        language: response.language.code().to_string(),
        index: response.index,
    };
    match config.kind {
        ScorerKind::Bleu => {
            let translation = response.english_translation.as_deref().ok_or_else(missing)?;
            let score = bleu(&tokenize(translation), &tokenize(reference_text), config)?;
            Ok(1.0 - score)
        }
        ScorerKind::ExternalLoss => {
            let loss = match which {
                Reference::NonHallucinated => response.ext_loss_vs_nh,
                Reference::Hallucinated => response.ext_loss_vs_h,
            };
            loss.ok_or_else(missing)
        }
        ScorerKind::SurrogateNgramCe => {
            let translation = response.english_translation.as_deref().ok_or_else(missing)?;
            surrogate_ngram_ce(translation, reference_text, config.surrogate_n)
        }
    }
}

/// Scores every response against its query's two reference answers.
///
/// Output order matches input order. Scoring fans out over the current rayon
/// pool; the first error in input order is reported.
pub fn score_all(
    responses: &[GeneratedResponse],
    queries: &[QueryRecord],
    config: &ScorerConfig,
) -> Result<Vec<ScoredResponse>> {
    config.validate()?;
    let by_id: HashMap<&str, &QueryRecord> = queries.iter().map(|q| (q.id.as_str(), q)).collect();
    if let Some(r) = responses.iter().find(|r| !by_id.contains_key(r.query_id.as_str())) {
        return Err(Error::DanglingReference(format!(
            "response ({}, {}, {}) refers to unknown query {:?}",
            r.query_id, r.language, r.index, r.query_id
        )));
    }
    let scorer_id = config.scorer_id();
    let results: Vec<Result<ScoredResponse>> = responses
        .par_iter()
        .map(|r| {
            let q = by_id[r.query_id.as_str()];
            Ok(ScoredResponse {
                response: r.clone(),
                d_nh: distance(r, &q.answer_nh, Reference::NonHallucinated, config)?,
                d_h: distance(r, &q.answer_h, Reference::Hallucinated, config)?,
                scorer_id: scorer_id.clone(),
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Positions of `scored` sorted by the chosen distance ascending, ties broken
/// by response index ascending.
pub fn rank_ascending(scored: &[ScoredResponse], key: RankKey) -> Vec<usize> {
    let value = |s: &ScoredResponse| match key {
        RankKey::DNh => s.d_nh,
        RankKey::DH => s.d_h,
    };
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        value(&scored[a])
            .total_cmp(&value(&scored[b]))
            .then_with(|| scored[a].response.index.cmp(&scored[b].response.index))
    });
    order
}
