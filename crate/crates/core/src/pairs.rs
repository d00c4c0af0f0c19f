//! Hallucination-aware preference pairs.
//!
//! *Explicit* pairs take the Top-K responses closest to the non-hallucinated
//! answer as positives and the Top-K closest to the hallucinated answer as
//! negatives. *Implicit* pairs rank once against the non-hallucinated answer
//! and pair its head with its tail. *Translated* pairs are ingested from a
//! pre-translated file. [`Mixer`] draws from all three with fixed ratios.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{rank_ascending, RankKey};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::model::{
    nfc, Language, PairSource, PreferencePair, QueryRecord, Registry, ScoredResponse, Tier,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairBuildConfig {
    pub k: usize,
    pub n: usize,
    pub dedupe_identical_text: bool,
}

impl Default for PairBuildConfig {
    fn default() -> Self {
        PairBuildConfig {
            k: 3,
            n: 20,
            dedupe_identical_text: true,
        }
    }
}

impl PairBuildConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.n < 2 * self.k {
            return Err(Error::InsufficientResponses {
                have: self.n,
                need: 2 * self.k,
            });
        }
        Ok(())
    }
}

/// Pairs built from one (query, language) group, with exclusion counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairBatch {
    pub pairs: Vec<PreferencePair>,
    pub excluded_self_pairs: usize,
    pub excluded_identical_text: usize,
}

fn check_group(scored: &[ScoredResponse], query: &QueryRecord) -> Result<Language> {
    let first = scored.first().ok_or(Error::EmptyPool)?;
    let language = first.response.language;
    for s in scored {
        if s.response.query_id != query.id || s.response.language != language {
            return Err(Error::Validation(format!(
                "response ({}, {}, {}) does not belong to group ({}, {})",
                s.response.query_id, s.response.language, s.response.index, query.id, language
            )));
        }
    }
    Ok(language)
}

fn make_pair(
    query: &QueryRecord,
    language: Language,
    pos: &ScoredResponse,
    neg: &ScoredResponse,
    source: PairSource,
) -> PreferencePair {
    let context = query
        .queries
        .get(&language)
        .or_else(|| query.queries.get(&Language::En))
        .cloned()
        .unwrap_or_default();
    PreferencePair {
        query_id: query.id.clone(),
        language,
        context,
        y_pos: pos.response.text.clone(),
        y_neg: neg.response.text.clone(),
        source,
        pos_index: Some(pos.response.index),
        neg_index: Some(neg.response.index),
        image_ref: Some(query.image_ref.clone()),
    }
}

/// Explicit pairs for one (query, language) group: the Cartesian product of
/// the Top-K by `d_nh` and the Top-K by `d_h`, minus self-pairs and (when
/// configured) identical-text pairs.
pub fn build_explicit(
    scored: &[ScoredResponse],
    query: &QueryRecord,
    config: &PairBuildConfig,
) -> Result<PairBatch> {
    let language = check_group(scored, query)?;
    let k = config.k.min(scored.len());
    let positives = &rank_ascending(scored, RankKey::DNh)[..k];
    let negatives = &rank_ascending(scored, RankKey::DH)[..k];
    let mut batch = PairBatch::default();
    for &p in positives {
        for &n in negatives {
            let (pos, neg) = (&scored[p], &scored[n]);
            if pos.response.index == neg.response.index {
                batch.excluded_self_pairs += 1;
            } else if config.dedupe_identical_text && pos.response.text == neg.response.text {
                batch.excluded_identical_text += 1;
            } else {
                batch
                    .pairs
                    .push(make_pair(query, language, pos, neg, PairSource::Explicit));
            }
        }
    }
    Ok(batch)
}

/// Implicit pairs for one (query, language) group: head K of the `d_nh`
/// ranking against its last K.
pub fn build_implicit(
    scored: &[ScoredResponse],
    query: &QueryRecord,
    config: &PairBuildConfig,
) -> Result<PairBatch> {
    let need = 2 * config.k;
    if scored.len() < need {
        return Err(Error::InsufficientResponses {
            have: scored.len(),
            need,
        });
    }
    let language = check_group(scored, query)?;
    let order = rank_ascending(scored, RankKey::DNh);
    let positives = &order[..config.k];
    let negatives = &order[order.len() - config.k..];
    let mut batch = PairBatch::default();
    for &p in positives {
        for &n in negatives {
            batch.pairs.push(make_pair(
                query,
                language,
                &scored[p],
                &scored[n],
                PairSource::Implicit,
            ));
        }
    }
    Ok(batch)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TranslatedRecord {
    query_id: String,
    language: Language,
    context: String,
    y_pos: String,
    y_neg: String,
    #[serde(default)]
    source: Option<PairSource>,
    #[serde(default)]
    image_ref: Option<String>,
}

/// Reads pre-translated pairs for `language`. Every record becomes one
/// `Translated` pair.
pub fn ingest_translated(path: &Path, language: Language) -> Result<Vec<PreferencePair>> {
    let records: Vec<TranslatedRecord> = jsonl::read(path)?;
    records
        .into_iter()
        .map(|r| {
            if r.language != language {
                return Err(Error::Validation(format!(
                    "translated pair for query {:?} is tagged {} but {} was expected",
                    r.query_id, r.language, language
                )));
            }
            if let Some(src) = r.source.filter(|s| *s != PairSource::Translated) {
                return Err(Error::Validation(format!(
                    "translated pair for query {:?} has source {src}",
                    r.query_id
                )));
            }
            let pair = PreferencePair {
                query_id: nfc(&r.query_id),
                language,
                context: nfc(&r.context),
                y_pos: nfc(&r.y_pos),
                y_neg: nfc(&r.y_neg),
                source: PairSource::Translated,
                pos_index: None,
                neg_index: None,
                image_ref: r.image_ref.as_deref().map(nfc),
            };
            pair.validate()?;
            Ok(pair)
        })
        .collect()
}

/// Counts reported alongside `pairs.jsonl`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildSummary {
    /// language code -> source -> pair count
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
    pub total: usize,
    pub groups: usize,
    pub excluded_self_pairs: usize,
    pub excluded_identical_text: usize,
    /// Groups that produced fewer than K² explicit pairs.
    pub short_explicit_groups: usize,
}

impl BuildSummary {
    fn add(&mut self, pair: &PreferencePair) {
        *self
            .counts
            .entry(pair.language.code().to_string())
            .or_default()
            .entry(pair.source.as_str().to_string())
            .or_insert(0) += 1;
        self.total += 1;
    }

    pub fn count(&self, language: Language, source: PairSource) -> usize {
        self.counts
            .get(language.code())
            .and_then(|m| m.get(source.as_str()))
            .copied()
            .unwrap_or(0)
    }
}

/// Builds explicit and implicit pairs for every non-English (query, language)
/// group, appends `translated`, and orders the result by
/// (query_id, language, source).
pub fn build_all(
    scored: &[ScoredResponse],
    queries: &[QueryRecord],
    translated: Vec<PreferencePair>,
    config: &PairBuildConfig,
) -> Result<(Vec<PreferencePair>, BuildSummary)> {
    config.validate()?;
    let by_id: BTreeMap<&str, &QueryRecord> = queries.iter().map(|q| (q.id.as_str(), q)).collect();
    let mut groups: BTreeMap<(&str, Language), Vec<ScoredResponse>> = BTreeMap::new();
    for s in scored {
        if s.response.language == Language::En {
            continue;
        }
        if !by_id.contains_key(s.response.query_id.as_str()) {
            return Err(Error::DanglingReference(format!(
                "score for unknown query {:?}",
                s.response.query_id
            )));
        }
        groups
            .entry((s.response.query_id.as_str(), s.response.language))
            .or_default()
            .push(s.clone());
    }
    let groups: Vec<_> = groups.into_iter().collect();
    let built: Vec<Result<(PairBatch, PairBatch)>> = groups
        .par_iter()
        .map(|((qid, _), group)| {
            let q = by_id[qid];
            Ok((build_explicit(group, q, config)?, build_implicit(group, q, config)?))
        })
        .collect();

    let mut summary = BuildSummary {
        groups: groups.len(),
        ..Default::default()
    };
    let mut pairs = Vec::new();
    for result in built {
        let (explicit, implicit) = result?;
        summary.excluded_self_pairs += explicit.excluded_self_pairs;
        summary.excluded_identical_text += explicit.excluded_identical_text;
        if explicit.pairs.len() < config.k * config.k {
            summary.short_explicit_groups += 1;
        }
        pairs.extend(explicit.pairs);
        pairs.extend(implicit.pairs);
    }
    pairs.extend(translated);
    pairs.sort_by(|a, b| {
        (a.query_id.as_str(), a.language, a.source).cmp(&(b.query_id.as_str(), b.language, b.source))
    });
    for p in &pairs {
        summary.add(p);
    }
    Ok((pairs, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixConfig {
    pub ratio_explicit: f64,
    pub ratio_implicit: f64,
    pub ratio_translated: f64,
    /// Relative weight of (high-resource, low-resource) languages.
    pub high_low_ratio: [f64; 2],
    pub seed: u64,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig {
            ratio_explicit: 1.0,
            ratio_implicit: 1.0,
            ratio_translated: 1.0,
            high_low_ratio: [1.0, 1.0],
            seed: 0,
        }
    }
}

impl MixConfig {
    pub fn validate(&self) -> Result<()> {
        let ratios = [self.ratio_explicit, self.ratio_implicit, self.ratio_translated];
        let ok = |r: &[f64]| r.iter().all(|x| x.is_finite() && *x >= 0.0) && r.iter().any(|x| *x > 0.0);
        if !ok(&ratios) {
            return Err(Error::Config(format!(
                "source ratios must be >= 0 with at least one > 0, got {ratios:?}"
            )));
        }
        if !ok(&self.high_low_ratio) {
            return Err(Error::Config(format!(
                "high_low_ratio must be >= 0 with at least one > 0, got {:?}",
                self.high_low_ratio
            )));
        }
        Ok(())
    }

    fn source_weight(&self, source: PairSource) -> f64 {
        match source {
            PairSource::Explicit => self.ratio_explicit,
            PairSource::Implicit => self.ratio_implicit,
            PairSource::Translated => self.ratio_translated,
        }
    }
}

fn tier_slot(tier: Tier) -> usize {
    match tier {
        Tier::HighResource => 0,
        Tier::LowResource => 1,
    }
}

/// Picks an index in proportion to `weights`; zero weights are never picked.
fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = i;
        if target < w {
            return i;
        }
        target -= w;
    }
    last
}

/// Infinite seeded sampler over (source, tier) buckets, with replacement.
///
/// Each draw picks a source in proportion to its ratio, then a tier in
/// proportion to `high_low_ratio`, then a uniform pair from that bucket.
/// Empty buckets drop out and the remaining weights renormalize.
#[derive(Debug, Clone)]
pub struct Mixer<'a> {
    // [source][tier]
    buckets: Buckets<'a>,
    source_weights: [f64; 3],
    tier_weights: [[f64; 2]; 3],
    rng: ChaCha8Rng,
}

type Buckets<'a> = [[Vec<&'a PreferencePair>; 2]; 3];

fn source_slot(source: PairSource) -> usize {
    match source {
        PairSource::Explicit => 0,
        PairSource::Implicit => 1,
        PairSource::Translated => 2,
    }
}

impl<'a> Mixer<'a> {
    /// Mixer over three separately built lists; list position, not the
    /// pair's `source` tag, decides the bucket.
    pub fn new(
        explicit: &'a [PreferencePair],
        implicit: &'a [PreferencePair],
        translated: &'a [PreferencePair],
        config: &MixConfig,
        registry: &Registry,
    ) -> Result<Self> {
        let mut buckets: Buckets<'a> = Default::default();
        for (slot, list) in [explicit, implicit, translated].into_iter().enumerate() {
            for p in list {
                buckets[slot][tier_slot(registry.tier(p.language))].push(p);
            }
        }
        Self::from_buckets(buckets, config)
    }

    /// Mixer over one combined list, bucketed by each pair's `source` tag.
    pub fn from_pairs(
        pairs: &'a [PreferencePair],
        config: &MixConfig,
        registry: &Registry,
    ) -> Result<Self> {
        let mut buckets: Buckets<'a> = Default::default();
        for p in pairs {
            buckets[source_slot(p.source)][tier_slot(registry.tier(p.language))].push(p);
        }
        Self::from_buckets(buckets, config)
    }

    fn from_buckets(buckets: Buckets<'a>, config: &MixConfig) -> Result<Self> {
        config.validate()?;
        let mut tier_weights = [[0.0; 2]; 3];
        let mut source_weights = [0.0; 3];
        for source in PairSource::ALL {
            let slot = source_slot(source);
            for t in 0..2 {
                if !buckets[slot][t].is_empty() {
                    tier_weights[slot][t] = config.high_low_ratio[t];
                }
            }
            if tier_weights[slot].iter().any(|w| *w > 0.0) {
                source_weights[slot] = config.source_weight(source);
            }
        }
        if source_weights.iter().all(|w| *w <= 0.0) {
            return Err(Error::NothingToSample);
        }
        Ok(Mixer {
            buckets,
            source_weights,
            tier_weights,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    /// Draws the next pair.
    pub fn draw(&mut self) -> &'a PreferencePair {
        let source = pick_weighted(&mut self.rng, &self.source_weights);
        let tier = pick_weighted(&mut self.rng, &self.tier_weights[source]);
        let bucket = &self.buckets[source][tier];
        bucket[self.rng.gen_range(0..bucket.len())]
    }

    /// Draws `count` pairs into an owned list.
    pub fn take_owned(&mut self, count: usize) -> Vec<PreferencePair> {
        (0..count).map(|_| self.draw().clone()).collect()
    }
}

impl<'a> Iterator for Mixer<'a> {
    type Item = &'a PreferencePair;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.draw())
    }
}
