//! Run configuration and the stage runners behind the `halluc` tool.
//!
//! Every stage reads its inputs from the run directory (or configured
//! external paths), writes its outputs there, and leaves a manifest with
//! input and output digests. All randomness comes from the root seed through
//! named sub-streams, so a stage can be rerun on its own.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alignment::{score_all, ScorerConfig, ScorerKind};
use crate::dpo::{self, build_vocab, dpo_batch_loss, sft_step, tokenize, train_dpo, DpoConfig, ToyPolicy};
use crate::error::{Error, Result};
use crate::eval::{
    amber_metrics, mme_scores, pope_metrics, AmberAnnotation, AmberResponse, EvalReport, InvalidMode,
    LangIdConfig, LanguageDetector, MmeItem, ObjectLexicon, PolarityLexicon, PopeItem,
};
use crate::genmock::{self, CategorySampling, MockGenConfig, TemplateSet};
use crate::jsonl;
use crate::model::{
    load_pairs, load_queries, load_responses, GeneratedResponse, Language, PreferencePair, QueryRecord,
    Registry, ScoreRecord, ScoredResponse, Tier,
};
use crate::pairs::{build_all, ingest_translated, BuildSummary, MixConfig, Mixer, PairBuildConfig};
use crate::seeds;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const QUERIES: &str = "queries.jsonl";
pub const RESPONSES: &str = "responses.jsonl";
pub const SCORES: &str = "scores.jsonl";
pub const PAIRS: &str = "pairs.jsonl";
pub const MIXED: &str = "mixed.jsonl";
pub const POLICY: &str = "policy.json";
pub const REFERENCE: &str = "reference.json";
pub const HISTORY: &str = "history.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub hallucination_rate: f64,
    pub invalid_rate: f64,
    pub sampling: CategorySampling,
    /// Mock template set; the shipped one when absent.
    pub templates: Option<PathBuf>,
    /// Number of synthetic queries when no query file is configured.
    pub mock_queries: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            hallucination_rate: 0.4,
            invalid_rate: 0.05,
            sampling: CategorySampling::Independent,
            templates: None,
            mock_queries: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub buckets: usize,
    pub context_window: usize,
    /// Supervised steps on positive responses before the reference is frozen.
    pub sft_steps: usize,
    pub sft_learning_rate: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            buckets: 256,
            context_window: 2,
            sft_steps: 50,
            sft_learning_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub invalid_mode: InvalidMode,
    /// Subtasks summed into the MME total; all present ones when absent.
    pub mme_subtasks: Option<Vec<String>>,
    pub polarity_lexicon: Option<PathBuf>,
    pub object_lexicon: Option<PathBuf>,
    pub langid: LangIdConfig,
    /// Also write a CSV next to each report.
    pub csv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub out_dir: PathBuf,
    /// Query records; synthetic queries when absent.
    pub queries: Option<PathBuf>,
    /// Externally generated responses; the mock generator when absent.
    pub responses: Option<PathBuf>,
    /// Pre-translated preference pairs per language.
    pub translated: BTreeMap<Language, PathBuf>,
    pub pope: Option<PathBuf>,
    pub mme: Option<PathBuf>,
    pub amber_responses: Option<PathBuf>,
    pub amber_annotations: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            out_dir: PathBuf::from("run"),
            queries: None,
            responses: None,
            translated: BTreeMap::new(),
            pope: None,
            mme: None,
            amber_responses: None,
            amber_annotations: None,
        }
    }
}

/// One file describing a whole run. Seeds inside `mix` and `dpo` are
/// replaced by sub-seeds of `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub languages: Vec<Language>,
    pub n: u32,
    pub k: usize,
    pub dedupe_identical_text: bool,
    /// High-resource languages; the built-in partition when absent.
    pub high_resource: Option<Vec<Language>>,
    /// Pairs drawn by `mix`; `dpo.steps * dpo.batch_size` when absent.
    pub mix_count: Option<usize>,
    /// Defaults to the self-contained surrogate loss so a mock run needs no
    /// external files.
    pub scorer: ScorerConfig,
    pub generation: GenerationConfig,
    pub mix: MixConfig,
    pub dpo: DpoConfig,
    pub policy: PolicyConfig,
    pub eval: EvalConfig,
    pub paths: PathsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            languages: Language::ALL.into_iter().filter(|l| *l != Language::En).collect(),
            n: 20,
            k: 3,
            dedupe_identical_text: true,
            high_resource: None,
            mix_count: None,
            scorer: ScorerConfig {
                kind: ScorerKind::SurrogateNgramCe,
                ..Default::default()
            },
            generation: GenerationConfig::default(),
            mix: MixConfig::default(),
            dpo: DpoConfig::default(),
            policy: PolicyConfig::default(),
            eval: EvalConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    /// Parses a TOML file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut cfg.paths;
        resolve(base, &mut p.out_dir);
        for opt in [
            &mut p.queries,
            &mut p.responses,
            &mut p.pope,
            &mut p.mme,
            &mut p.amber_responses,
            &mut p.amber_annotations,
            &mut cfg.generation.templates,
            &mut cfg.eval.polarity_lexicon,
            &mut cfg.eval.object_lexicon,
        ] {
            if let Some(x) = opt.as_mut() {
                resolve(base, x);
            }
        }
        for x in p.translated.values_mut() {
            resolve(base, x);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.languages.is_empty() {
            return Err(Error::Config("languages must not be empty".into()));
        }
        self.pair_config().validate()?;
        self.scorer.validate()?;
        self.mix.validate()?;
        self.dpo.validate()?;
        self.mock_config()?.validate()?;
        if self.policy.buckets == 0 || self.policy.context_window == 0 {
            return Err(Error::Config("policy buckets and context_window must be >= 1".into()));
        }
        let p = &self.paths;
        let inputs = [&p.queries, &p.responses, &self.eval.polarity_lexicon, &self.eval.object_lexicon];
        for path in inputs.into_iter().flatten().chain(p.translated.values()) {
            if !path.exists() {
                return Err(Error::Config(format!("configured path {} does not exist", path.display())));
            }
        }
        Ok(())
    }

    /// Digest of the configuration, ignoring where outputs go.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths.out_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.paths.out_dir.join(name)
    }

    pub fn pair_config(&self) -> PairBuildConfig {
        PairBuildConfig {
            k: self.k,
            n: self.n as usize,
            dedupe_identical_text: self.dedupe_identical_text,
        }
    }

    pub fn registry(&self) -> Registry {
        match &self.high_resource {
            Some(high) => Registry::with_high_resource(high),
            None => Registry::default(),
        }
    }

    pub fn mock_config(&self) -> Result<MockGenConfig> {
        let templates = match &self.generation.templates {
            Some(p) => TemplateSet::load(p)?,
            None => TemplateSet::default(),
        };
        Ok(MockGenConfig {
            n: self.n,
            hallucination_rate: self.generation.hallucination_rate,
            invalid_rate: self.generation.invalid_rate,
            seed: seeds::derive(self.seed, &["generation"]),
            sampling: self.generation.sampling,
            templates,
        })
    }

    pub fn mix_config(&self) -> MixConfig {
        MixConfig {
            seed: seeds::derive(self.seed, &["mixing"]),
            ..self.mix.clone()
        }
    }

    pub fn dpo_config(&self) -> DpoConfig {
        DpoConfig {
            seed: seeds::derive(self.seed, &["training"]),
            ..self.dpo.clone()
        }
    }

    pub fn mix_count(&self) -> usize {
        self.mix_count.unwrap_or(self.dpo.steps * self.dpo.batch_size)
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores when
/// `None`).
pub fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn digest(cfg: &RunConfig, path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
    let shown = path.strip_prefix(&cfg.paths.out_dir).unwrap_or(path);
    Ok(FileDigest {
        path: shown.to_string_lossy().into_owned(),
        sha256: sha256_file(path)?,
        bytes,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes") + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn finish<S: Serialize>(cfg: &RunConfig, stage: &str, inputs: &[PathBuf], outputs: &[PathBuf], summary: &S) -> Result<()> {
    let summary_path = cfg.out(&format!("{stage}_summary.json"));
    write_json(&summary_path, summary)?;
    let mut outs = outputs.to_vec();
    outs.push(summary_path);
    let manifest = Manifest {
        stage: stage.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        inputs: inputs.iter().map(|p| digest(cfg, p)).collect::<Result<_>>()?,
        outputs: outs.iter().map(|p| digest(cfg, p)).collect::<Result<_>>()?,
    };
    write_json(&cfg.out(&format!("{stage}.manifest.json")), &manifest)
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    let dir = &cfg.paths.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub source: String,
    pub queries: usize,
    pub languages: Vec<Language>,
    pub n: u32,
    pub records: usize,
    /// Mock category counts; empty for external responses.
    pub categories: BTreeMap<String, usize>,
}

/// Writes `queries.jsonl` and `responses.jsonl`: mock generation, or an
/// external responses file checked against the adapter contract.
pub fn generate(cfg: &RunConfig) -> Result<GenerateSummary> {
    cfg.validate()?;
    ensure_out_dir(cfg)?;
    let mock = cfg.mock_config()?;
    let mut inputs = Vec::new();
    let queries = match &cfg.paths.queries {
        Some(p) => {
            inputs.push(p.clone());
            load_queries(p)?
        }
        None => genmock::mock_queries(
            cfg.generation.mock_queries,
            seeds::derive(cfg.seed, &["queries"]),
            &mock.templates,
        ),
    };
    jsonl::write(&cfg.out(QUERIES), &queries)?;

    let mut categories = BTreeMap::new();
    let (source, mut responses) = match &cfg.paths.responses {
        Some(p) => {
            inputs.push(p.clone());
            let ids: Vec<String> = queries.iter().map(|q| q.id.clone()).collect();
            let report = genmock::adapter_contract(p, &ids, &cfg.languages, cfg.n)?;
            write_json(&cfg.out("contract_report.json"), &report)?;
            if !report.is_clean() {
                return Err(Error::Validation(format!(
                    "{} violates the response contract: {} gaps, {} duplicates, {} unexpected, {} schema errors (see contract_report.json)",
                    p.display(),
                    report.gaps.len(),
                    report.duplicates.len(),
                    report.unexpected.len(),
                    report.schema_errors.len()
                )));
            }
            ("external", load_responses(p, cfg.n)?)
        }
        None => {
            let jobs: Vec<(&QueryRecord, Language)> = queries
                .iter()
                .flat_map(|q| cfg.languages.iter().map(move |l| (q, *l)))
                .collect();
            let labeled: Vec<Result<Vec<genmock::LabeledResponse>>> = jobs
                .par_iter()
                .map(|(q, l)| genmock::generate_labeled(q, *l, &mock))
                .collect();
            let mut responses = Vec::new();
            for group in labeled {
                for item in group? {
                    let name = serde_json::to_value(item.category).expect("category serializes");
                    *categories.entry(name.as_str().unwrap_or_default().to_string()).or_insert(0) += 1;
                    responses.push(item.response);
                }
            }
            ("mock", responses)
        }
    };
    responses.sort_by(|a, b| a.key().cmp(&b.key()));
    jsonl::write(&cfg.out(RESPONSES), &responses)?;
    let summary = GenerateSummary {
        source: source.into(),
        queries: queries.len(),
        languages: cfg.languages.clone(),
        n: cfg.n,
        records: responses.len(),
        categories,
    };
    finish(cfg, "generate", &inputs, &[cfg.out(QUERIES), cfg.out(RESPONSES)], &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub records: usize,
    pub scorer_id: String,
    pub mean_d_nh: f64,
    pub mean_d_h: f64,
}

/// Responses the external-loss scorer cannot score.
pub fn missing_score_inputs(responses: &[GeneratedResponse], scorer: &ScorerConfig) -> Vec<Error> {
    let has_inputs = |r: &GeneratedResponse| match scorer.kind {
        ScorerKind::ExternalLoss => r.ext_loss_vs_nh.is_some() && r.ext_loss_vs_h.is_some(),
        ScorerKind::Bleu | ScorerKind::SurrogateNgramCe => r.english_translation.is_some(),
    };
    responses
        .iter()
        .filter(|r| !has_inputs(r))
        .map(|r| Error::MissingScoreInput {
            query_id: r.query_id.clone(),
            language: r.language.code().to_string(),
            index: r.index,
        })
        .collect()
}

/// Writes `scores.jsonl`. Responses lacking scorer inputs are listed in
/// `score_errors.txt` and fail the stage.
pub fn score(cfg: &RunConfig) -> Result<ScoreSummary> {
    cfg.validate()?;
    let queries = load_queries(&cfg.out(QUERIES))?;
    let responses = load_responses(&cfg.out(RESPONSES), cfg.n)?;
    let missing = missing_score_inputs(&responses, &cfg.scorer);
    let errors_path = cfg.out("score_errors.txt");
    if !missing.is_empty() {
        let text: String = missing.iter().map(|e| format!("{e}\n")).collect();
        std::fs::write(&errors_path, text).map_err(|e| Error::io(&errors_path, e))?;
        return Err(Error::Validation(format!(
            "{} of {} responses lack inputs for the {} scorer (see score_errors.txt)",
            missing.len(),
            responses.len(),
            cfg.scorer.scorer_id()
        )));
    }
    if errors_path.exists() {
        std::fs::remove_file(&errors_path).map_err(|e| Error::io(&errors_path, e))?;
    }
    let scored = score_all(&responses, &queries, &cfg.scorer)?;
    let records: Vec<ScoreRecord> = scored.iter().map(ScoreRecord::from).collect();
    jsonl::write(&cfg.out(SCORES), &records)?;
    let count = records.len().max(1) as f64;
    let summary = ScoreSummary {
        records: records.len(),
        scorer_id: cfg.scorer.scorer_id(),
        mean_d_nh: records.iter().map(|r| r.d_nh).sum::<f64>() / count,
        mean_d_h: records.iter().map(|r| r.d_h).sum::<f64>() / count,
    };
    finish(cfg, "score", &[cfg.out(QUERIES), cfg.out(RESPONSES)], &[cfg.out(SCORES)], &summary)?;
    Ok(summary)
}

/// Joins score rows back onto their responses.
pub fn join_scores(responses: Vec<GeneratedResponse>, scores: Vec<ScoreRecord>) -> Result<Vec<ScoredResponse>> {
    let mut by_key: BTreeMap<(String, Language, u32), ScoreRecord> = BTreeMap::new();
    for s in scores {
        let key = (s.query_id.clone(), s.language, s.index);
        if by_key.insert(key, s).is_some() {
            return Err(Error::Validation("scores file has duplicate rows".into()));
        }
    }
    let mut joined = Vec::with_capacity(responses.len());
    for r in responses {
        let s = by_key
            .remove(&(r.query_id.clone(), r.language, r.index))
            .ok_or_else(|| Error::MissingScoreInput {
                query_id: r.query_id.clone(),
                language: r.language.code().to_string(),
                index: r.index,
            })?;
        joined.push(ScoredResponse {
            response: r,
            d_nh: s.d_nh,
            d_h: s.d_h,
            scorer_id: s.scorer_id,
        });
    }
    if let Some(((q, l, i), _)) = by_key.into_iter().next() {
        return Err(Error::DanglingReference(format!("score row ({q}, {l}, {i}) has no response")));
    }
    Ok(joined)
}

/// Writes `pairs.jsonl` with explicit, implicit and ingested translated
/// pairs.
pub fn build_pairs(cfg: &RunConfig) -> Result<BuildSummary> {
    cfg.validate()?;
    let queries = load_queries(&cfg.out(QUERIES))?;
    let responses = load_responses(&cfg.out(RESPONSES), cfg.n)?;
    let scores: Vec<ScoreRecord> = jsonl::read(&cfg.out(SCORES))?;
    let scored = join_scores(responses, scores)?;
    let mut inputs = vec![cfg.out(QUERIES), cfg.out(RESPONSES), cfg.out(SCORES)];
    let mut translated = Vec::new();
    for (lang, path) in &cfg.paths.translated {
        translated.extend(ingest_translated(path, *lang)?);
        inputs.push(path.clone());
    }
    let (pairs, summary) = build_all(&scored, &queries, translated, &cfg.pair_config())?;
    jsonl::write(&cfg.out(PAIRS), &pairs)?;
    finish(cfg, "build_pairs", &inputs, &[cfg.out(PAIRS)], &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixSummary {
    pub draws: usize,
    pub pool: usize,
    pub by_source: BTreeMap<String, usize>,
    pub by_tier: BTreeMap<String, usize>,
}

/// Writes `mixed.jsonl`: a bounded seeded draw from `pairs.jsonl`.
pub fn mix(cfg: &RunConfig) -> Result<MixSummary> {
    cfg.validate()?;
    let pairs = load_pairs(&cfg.out(PAIRS))?;
    let registry = cfg.registry();
    let mut mixer = Mixer::from_pairs(&pairs, &cfg.mix_config(), &registry)?;
    let drawn = mixer.take_owned(cfg.mix_count());
    jsonl::write(&cfg.out(MIXED), &drawn)?;
    let mut by_source = BTreeMap::new();
    let mut by_tier = BTreeMap::new();
    for p in &drawn {
        *by_source.entry(p.source.as_str().to_string()).or_insert(0) += 1;
        let tier = match registry.tier(p.language) {
            Tier::HighResource => "high",
            Tier::LowResource => "low",
        };
        *by_tier.entry(tier.to_string()).or_insert(0) += 1;
    }
    let summary = MixSummary {
        draws: drawn.len(),
        pool: pairs.len(),
        by_source,
        by_tier,
    };
    finish(cfg, "mix", &[cfg.out(PAIRS)], &[cfg.out(MIXED)], &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub pairs: usize,
    pub vocab: usize,
    pub sft_steps: usize,
    pub steps_run: usize,
    pub exhausted: bool,
    pub beta: f64,
    pub initial_loss: f64,
    pub initial_margin: f64,
    /// Mean loss and margin of the final policy over all training pairs.
    pub final_loss: f64,
    pub final_margin: f64,
}

/// Policy over the whitespace vocabulary of `pairs`, supervised on the
/// positive responses for `sft_steps` steps.
pub fn sft_policy(pairs: &[PreferencePair], policy_cfg: &PolicyConfig, hash_seed: u64) -> Result<ToyPolicy> {
    let contexts: Vec<String> = pairs.iter().map(PreferencePair::policy_context).collect();
    let texts = contexts
        .iter()
        .map(String::as_str)
        .chain(pairs.iter().flat_map(|p| [p.y_pos.as_str(), p.y_neg.as_str()]));
    let vocab = build_vocab(texts);
    let mut policy = ToyPolicy::new(vocab, policy_cfg.buckets, policy_cfg.context_window, hash_seed)?;
    let steps = if pairs.is_empty() { 0 } else { policy_cfg.sft_steps };
    for step in 0..steps {
        let i = step % pairs.len();
        policy = sft_step(&policy, &contexts[i], &tokenize(&pairs[i].y_pos), policy_cfg.sft_learning_rate)?;
    }
    Ok(policy)
}

/// Supervised warm-up, then DPO against the frozen warm-up policy. Writes
/// `policy.json`, `reference.json` and `history.csv`.
pub fn train(cfg: &RunConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let pairs = load_pairs(&cfg.out(MIXED))?;
    if pairs.is_empty() {
        return Err(Error::EmptyPool);
    }
    let dpo_cfg = cfg.dpo_config();
    let reference = sft_policy(&pairs, &cfg.policy, seeds::derive(cfg.seed, &["policy-hash"]))?;
    let initial = dpo_batch_loss(&reference, &reference, &pairs, dpo_cfg.beta)?;
    let outcome = train_dpo(reference.clone(), &reference, pairs.iter().cloned(), &dpo_cfg)?;
    let fin = dpo_batch_loss(&outcome.policy, &reference, &pairs, dpo_cfg.beta)?;
    outcome.policy.save(&cfg.out(POLICY))?;
    reference.save(&cfg.out(REFERENCE))?;
    dpo::write_history_csv(&cfg.out(HISTORY), &outcome.history)?;
    let summary = TrainSummary {
        pairs: pairs.len(),
        vocab: reference.vocab().len(),
        sft_steps: cfg.policy.sft_steps,
        steps_run: outcome.steps_run,
        exhausted: outcome.exhausted,
        beta: dpo_cfg.beta,
        initial_loss: initial.loss,
        initial_margin: initial.margin,
        final_loss: fin.loss,
        final_margin: fin.margin,
    };
    finish(
        cfg,
        "train",
        &[cfg.out(MIXED)],
        &[cfg.out(POLICY), cfg.out(REFERENCE), cfg.out(HISTORY)],
        &summary,
    )?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Pope,
    Mme,
    Amber,
}

impl Benchmark {
    pub fn as_str(self) -> &'static str {
        match self {
            Benchmark::Pope => "pope",
            Benchmark::Mme => "mme",
            Benchmark::Amber => "amber",
        }
    }
}

impl std::str::FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pope" => Ok(Benchmark::Pope),
            "mme" => Ok(Benchmark::Mme),
            "amber" => Ok(Benchmark::Amber),
            other => Err(Error::Config(format!("unknown benchmark {other:?}; expected pope, mme or amber"))),
        }
    }
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf> {
    p.as_ref()
        .ok_or_else(|| Error::Config(format!("paths.{what} is required for this benchmark")))
}

/// Scores one benchmark and writes `eval_<name>.json`, `.txt` and,
/// when enabled, `.csv`.
pub fn evaluate(cfg: &RunConfig, benchmark: Benchmark) -> Result<EvalReport> {
    cfg.validate()?;
    ensure_out_dir(cfg)?;
    let polarity = match &cfg.eval.polarity_lexicon {
        Some(p) => PolarityLexicon::load(p)?,
        None => PolarityLexicon::default(),
    };
    let mut inputs = Vec::new();
    let report = match benchmark {
        Benchmark::Pope => {
            let path = required(&cfg.paths.pope, "pope")?;
            inputs.push(path.clone());
            let items: Vec<PopeItem> = jsonl::read(path)?;
            pope_metrics(&items, &polarity, cfg.eval.invalid_mode)?
        }
        Benchmark::Mme => {
            let path = required(&cfg.paths.mme, "mme")?;
            inputs.push(path.clone());
            let items: Vec<MmeItem> = jsonl::read(path)?;
            mme_scores(&items, &polarity, cfg.eval.mme_subtasks.as_deref())?
        }
        Benchmark::Amber => {
            let rpath = required(&cfg.paths.amber_responses, "amber_responses")?;
            let apath = required(&cfg.paths.amber_annotations, "amber_annotations")?;
            inputs.extend([rpath.clone(), apath.clone()]);
            let responses: Vec<AmberResponse> = jsonl::read(rpath)?;
            let annotations: Vec<AmberAnnotation> = jsonl::read(apath)?;
            let lexicon = match &cfg.eval.object_lexicon {
                Some(p) => ObjectLexicon::load(p)?,
                None => ObjectLexicon::default(),
            };
            let detector = LanguageDetector::new(cfg.eval.langid.clone());
            amber_metrics(&responses, &annotations, &lexicon, &detector)?
        }
    };
    let name = benchmark.as_str();
    let json = cfg.out(&format!("eval_{name}.json"));
    let table = cfg.out(&format!("eval_{name}.txt"));
    report.write_json(&json)?;
    std::fs::write(&table, report.to_table()).map_err(|e| Error::io(&table, e))?;
    let mut outputs = vec![json, table];
    if cfg.eval.csv {
        let csv = cfg.out(&format!("eval_{name}.csv"));
        std::fs::write(&csv, report.to_csv()?).map_err(|e| Error::io(&csv, e))?;
        outputs.push(csv);
    }
    let summary = BTreeMap::from([("rows".to_string(), report.rows.len())]);
    finish(cfg, &format!("eval_{name}"), &inputs, &outputs, &summary)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    /// Stage name to its summary, for every stage that has run.
    pub stages: BTreeMap<String, serde_json::Value>,
    /// Output digests by stage.
    pub outputs: BTreeMap<String, Vec<FileDigest>>,
    pub evals: BTreeMap<String, EvalReport>,
}

const STAGES: [&str; 5] = ["generate", "score", "build_pairs", "mix", "train"];

/// Collects the summaries, manifests and eval reports of the run
/// directory into `report.json` and `report.txt`.
pub fn report(cfg: &RunConfig) -> Result<RunReport> {
    let mut out = RunReport {
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        stages: BTreeMap::new(),
        outputs: BTreeMap::new(),
        evals: BTreeMap::new(),
    };
    let evals = [Benchmark::Pope, Benchmark::Mme, Benchmark::Amber].map(|b| format!("eval_{}", b.as_str()));
    for stage in STAGES.iter().map(|s| s.to_string()).chain(evals) {
        let manifest_path = cfg.out(&format!("{stage}.manifest.json"));
        if !manifest_path.exists() {
            continue;
        }
        let manifest: Manifest = read_json(&manifest_path)?;
        out.outputs.insert(stage.clone(), manifest.outputs);
        if let Some(bench) = stage.strip_prefix("eval_") {
            let r: EvalReport = read_json(&cfg.out(&format!("{stage}.json")))?;
            out.evals.insert(bench.to_string(), r);
        } else {
            let s: serde_json::Value = read_json(&cfg.out(&format!("{stage}_summary.json")))?;
            out.stages.insert(stage, s);
        }
    }
    if out.stages.is_empty() && out.evals.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no stage outputs found in {}",
            cfg.paths.out_dir.display()
        )));
    }
    write_json(&cfg.out("report.json"), &out)?;
    let text = render_report(&out);
    let path = cfg.out("report.txt");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(out)
}

pub fn render_report(r: &RunReport) -> String {
    let mut text = format!("halluc {}  config {}  seed {}\n", r.tool_version, &r.config_hash[..12], r.seed);
    for (stage, summary) in &r.stages {
        text.push_str(&format!("\n[{stage}]\n"));
        if let Some(map) = summary.as_object() {
            for (k, v) in map {
                text.push_str(&format!("  {k}: {v}\n"));
            }
        }
    }
    for report in r.evals.values() {
        text.push('\n');
        text.push_str(&report.to_table());
    }
    text
}
