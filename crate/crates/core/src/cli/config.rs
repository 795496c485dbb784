use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus_io::{OnError, Partition};
use crate::dedup::{DedupConfig, Normalization};
use crate::hash::ManifestHasher;
use crate::packing::PackConfig;
use crate::quality::{Granularity, PartitionPolicy, RatioFilterConfig};
use crate::tokenizer::{FertilityMode, TokenizerTrainConfig};

use super::Flags;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Dedup,
    Filter,
    Stats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    #[default]
    Skip,
    Abort,
}

impl From<ErrorMode> for OnError {
    fn from(m: ErrorMode) -> Self {
        match m {
            ErrorMode::Skip => OnError::Skip,
            ErrorMode::Abort => OnError::Abort,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupSection {
    pub min_words: usize,
    pub bloom_n: u64,
    pub bloom_fp: f64,
    pub seed: u64,
    pub lowercase: bool,
    pub emit_emptied: bool,
    pub save_filter: bool,
}

impl Default for DedupSection {
    fn default() -> Self {
        let d = DedupConfig::default();
        Self {
            min_words: d.min_words,
            bloom_n: d.n_expected,
            bloom_fp: d.p_target,
            seed: d.seed,
            lowercase: d.normalize.lowercase,
            emit_emptied: d.emit_emptied,
            save_filter: false,
        }
    }
}

impl DedupSection {
    pub fn to_config(&self) -> DedupConfig {
        DedupConfig {
            min_words: self.min_words,
            normalize: Normalization { trim: true, lowercase: self.lowercase },
            n_expected: self.bloom_n,
            p_target: self.bloom_fp,
            seed: self.seed,
            emit_emptied: self.emit_emptied,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub ratio_threshold: f64,
    pub granularity: Granularity,
    pub keep_partitions: String,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self { ratio_threshold: 8.0, granularity: Granularity::Paragraph, keep_partitions: "head,middle".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerSection {
    /// `whitespace`, `chars` or a directory with `vocab.json` and `merges.txt`.
    pub models: Vec<String>,
    pub vocab_size: usize,
    pub specials: Vec<String>,
    pub max_corpus_bytes: Option<u64>,
}

impl Default for TokenizerSection {
    fn default() -> Self {
        let t = TokenizerTrainConfig::default();
        Self { models: Vec::new(), vocab_size: t.vocab_size, specials: t.specials, max_corpus_bytes: t.max_corpus_bytes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PackSection {
    pub seq_len: usize,
    pub separator: u32,
    pub seed: Option<u64>,
}

impl Default for PackSection {
    fn default() -> Self {
        let p = PackConfig::default();
        Self { seq_len: p.seq_len, separator: p.separator, seed: p.shuffle_seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub top_k_domains: usize,
    pub top_k_tokens: usize,
    pub recompute_uniqueness: bool,
    pub fertility_mode: FertilityMode,
    pub sample_id: Option<String>,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            top_k_domains: 20,
            top_k_tokens: 100,
            recompute_uniqueness: false,
            fertility_mode: FertilityMode::CorpusRatio,
            sample_id: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CkptSection {
    pub window: usize,
    pub weights: Option<Vec<f64>>,
}

impl Default for CkptSection {
    fn default() -> Self {
        Self { window: 5, weights: None }
    }
}

/// Everything a run needs. Loaded from JSON, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Vec<String>,
    /// Output directory. Not part of the recorded config.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    pub deterministic: bool,
    pub partition: Option<Partition>,
    pub on_error: ErrorMode,
    pub stages: Vec<Stage>,
    pub dedup: DedupSection,
    pub filter: FilterSection,
    pub tokenizer: TokenizerSection,
    pub pack: PackSection,
    pub report: ReportSection,
    pub ckpt: CkptSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: Vec::new(),
            out: None,
            threads: None,
            deterministic: false,
            partition: None,
            on_error: ErrorMode::Skip,
            stages: vec![Stage::Dedup, Stage::Filter, Stage::Stats],
            dedup: DedupSection::default(),
            filter: FilterSection::default(),
            tokenizer: TokenizerSection::default(),
            pack: PackSection::default(),
            report: ReportSection::default(),
            ckpt: CkptSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    /// Applies command-line overrides. `--seed` sets the seed of the command at hand.
    pub fn apply_flags(&mut self, f: &Flags, seed_target: SeedTarget) {
        if !f.input.is_empty() {
            self.input = f.input.clone();
        }
        if let Some(v) = &f.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = f.threads {
            self.threads = Some(v);
        }
        if f.deterministic {
            self.deterministic = true;
        }
        if let Some(v) = f.partition {
            self.partition = Some(v);
        }
        if let Some(v) = f.on_error {
            self.on_error = v;
        }
        if let Some(v) = &f.stages {
            self.stages = v.clone();
        }
        if let Some(v) = f.min_words {
            self.dedup.min_words = v;
        }
        if let Some(v) = f.bloom_n {
            self.dedup.bloom_n = v;
        }
        if let Some(v) = f.bloom_fp {
            self.dedup.bloom_fp = v;
        }
        if f.lowercase {
            self.dedup.lowercase = true;
        }
        if f.drop_emptied {
            self.dedup.emit_emptied = false;
        }
        if f.save_filter {
            self.dedup.save_filter = true;
        }
        if let Some(v) = f.ratio_threshold {
            self.filter.ratio_threshold = v;
        }
        if let Some(v) = f.granularity {
            self.filter.granularity = v;
        }
        if let Some(v) = &f.keep_partitions {
            self.filter.keep_partitions = v.clone();
        }
        if !f.tokenizer.is_empty() {
            self.tokenizer.models = f.tokenizer.clone();
        }
        if let Some(v) = f.vocab_size {
            self.tokenizer.vocab_size = v;
        }
        if let Some(v) = f.max_corpus_bytes {
            self.tokenizer.max_corpus_bytes = Some(v);
        }
        if let Some(v) = f.seq_len {
            self.pack.seq_len = v;
        }
        if let Some(v) = f.separator {
            self.pack.separator = v;
        }
        if let Some(v) = f.top_k {
            self.report.top_k_domains = v;
            self.report.top_k_tokens = v;
        }
        if f.recompute_uniqueness {
            self.report.recompute_uniqueness = true;
        }
        if f.document_mean {
            self.report.fertility_mode = FertilityMode::DocumentMean;
        }
        if let Some(v) = &f.sample_id {
            self.report.sample_id = Some(v.clone());
        }
        if let Some(v) = f.window {
            self.ckpt.window = v;
        }
        if let Some(v) = &f.weights {
            self.ckpt.weights = Some(v.clone());
        }
        if let Some(seed) = f.seed {
            match seed_target {
                SeedTarget::Dedup => self.dedup.seed = seed,
                SeedTarget::Pack => self.pack.seed = Some(seed),
                SeedTarget::None => {}
            }
        }
    }

    pub fn ratio_config(&self) -> anyhow::Result<RatioFilterConfig> {
        let mut cfg = RatioFilterConfig::new(self.filter.ratio_threshold)?;
        cfg.granularity = self.filter.granularity;
        Ok(cfg)
    }

    pub fn partition_policy(&self) -> anyhow::Result<PartitionPolicy> {
        PartitionPolicy::parse(&self.filter.keep_partitions).map_err(|e| anyhow::anyhow!("--keep-partitions: {e}"))
    }

    pub fn train_config(&self) -> TokenizerTrainConfig {
        TokenizerTrainConfig {
            vocab_size: self.tokenizer.vocab_size,
            specials: self.tokenizer.specials.clone(),
            max_corpus_bytes: self.tokenizer.max_corpus_bytes,
        }
    }

    pub fn pack_config(&self) -> PackConfig {
        PackConfig { seq_len: self.pack.seq_len, separator: self.pack.separator, shuffle_seed: self.pack.seed }
    }

    /// Range checks shared by all commands.
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.out.is_some(), "--out is required");
        anyhow::ensure!(self.threads != Some(0), "--threads must be at least 1");
        anyhow::ensure!(self.dedup.bloom_n >= 1, "--bloom-n must be at least 1");
        anyhow::ensure!(
            self.dedup.bloom_fp > 0.0 && self.dedup.bloom_fp < 1.0,
            "--bloom-fp must lie in (0, 1), got {}",
            self.dedup.bloom_fp
        );
        self.ratio_config()?;
        self.partition_policy()?;
        self.train_config().merge_budget()?;
        anyhow::ensure!(self.pack.seq_len >= 2, "--seq-len must be at least 2");
        anyhow::ensure!(self.ckpt.window >= 1, "--window must be at least 1");
        anyhow::ensure!(!self.stages.is_empty(), "pipeline needs at least one stage");
        Ok(())
    }

    /// Hash of the recorded configuration (output dir and thread count excluded).
    pub fn hash(&self) -> String {
        let mut h = ManifestHasher::new();
        h.field(&serde_json::to_vec(self).expect("config serializes"));
        h.finish_hex()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedTarget {
    Dedup,
    Pack,
    None,
}
