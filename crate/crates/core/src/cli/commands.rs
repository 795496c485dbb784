use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use flate2::write::GzEncoder;
use flate2::Compression;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{PipelineConfig, SeedTarget, Stage};
use super::output::{describe_input, InputRecord, RunManifest, Staging, MANIFEST_FILE};
use super::{Command, Failure, RunOutcome};
use crate::audit::AuditRecord;
use crate::ckpt::{self, AvgConfig, WeightContainer};
use crate::corpus_io::{discover_shards, open_shard, split_paragraphs, Document, ShardRef};
use crate::dedup::{dedup_document, BloomFilter, DedupConfig, DedupReport};
use crate::packing::pack;
use crate::progress::ScoreTable;
use crate::quality::{apply_ratio_filter, PartitionPolicy, PerplexityAccumulator, RatioFilterConfig, RatioReport};
use crate::stats::{CorpusStats, DomainCount, UniquenessTracker};
use crate::tokenizer::{
    fertility, token_frequency, train_bpe, ByteBpeModel, CharTokenizer, Encoder, FertilityReport, TokenCounter,
    WhitespaceTokenizer,
};

pub(super) fn seed_target(cmd: Command) -> SeedTarget {
    match cmd {
        Command::Dedup | Command::Pipeline => SeedTarget::Dedup,
        Command::Pack => SeedTarget::Pack,
        _ => SeedTarget::None,
    }
}

pub(super) fn dispatch(cmd: Command, cfg: &PipelineConfig) -> Result<RunOutcome, Failure> {
    let threads = if cfg.deterministic { Some(1) } else { cfg.threads };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::Runtime(e.into()))?;
    pool.install(|| match cmd {
        Command::Stats => corpus_command(cmd, cfg, &[Stage::Stats]),
        Command::Dedup => corpus_command(cmd, cfg, &[Stage::Dedup]),
        Command::Filter => corpus_command(cmd, cfg, &[Stage::Filter]),
        Command::Pipeline => corpus_command(cmd, cfg, &cfg.stages),
        Command::TrainTokenizer => train_tokenizer(cfg),
        Command::Fertility => fertility_command(cfg),
        Command::TokenFreq => token_freq(cfg),
        Command::Pack => pack_command(cfg),
        Command::Progress => progress(cfg),
        Command::AvgCkpt => avg_ckpt(cfg),
    })
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn runtime_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

/// Tokenizer selected by name (`whitespace`, `chars`) or by directory.
pub enum AnyTokenizer {
    Whitespace,
    Chars,
    Bpe(Box<ByteBpeModel>),
}

impl AnyTokenizer {
    pub fn load(name: &str) -> anyhow::Result<Self> {
        match name {
            "whitespace" => Ok(Self::Whitespace),
            "chars" => Ok(Self::Chars),
            dir => Ok(Self::Bpe(Box::new(
                ByteBpeModel::load(Path::new(dir)).with_context(|| format!("loading tokenizer {dir}"))?,
            ))),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Self::Whitespace => "whitespace".into(),
            Self::Chars => CharTokenizer.tokenizer_id(),
            Self::Bpe(m) => m.tokenizer_id(),
        }
    }

    pub fn encoder(&self) -> Option<&(dyn Encoder + Sync)> {
        match self {
            Self::Whitespace => None,
            Self::Chars => Some(&CharTokenizer),
            Self::Bpe(m) => Some(m.as_ref()),
        }
    }
}

impl TokenCounter for AnyTokenizer {
    fn count_tokens(&self, text: &str) -> usize {
        match self {
            Self::Whitespace => WhitespaceTokenizer.count_tokens(text),
            Self::Chars => CharTokenizer.count_tokens(text),
            Self::Bpe(m) => m.count_tokens(text),
        }
    }
}

fn load_tokenizers(cfg: &PipelineConfig) -> Result<Vec<AnyTokenizer>, Failure> {
    cfg.tokenizer.models.iter().map(|s| AnyTokenizer::load(s).map_err(config_err)).collect()
}

fn first_tokenizer(cfg: &PipelineConfig, what: &str) -> Result<AnyTokenizer, Failure> {
    load_tokenizers(cfg)?
        .into_iter()
        .next()
        .ok_or_else(|| config_err(anyhow!("{what} needs --tokenizer")))
}

fn first_encoder<'t>(tok: &'t AnyTokenizer, what: &str) -> Result<&'t (dyn Encoder + Sync), Failure> {
    tok.encoder()
        .ok_or_else(|| config_err(anyhow!("{what} needs a tokenizer that produces ids (chars or a trained model)")))
}

fn resolve_shards(cfg: &PipelineConfig) -> Result<(Vec<ShardRef>, Vec<InputRecord>), Failure> {
    if cfg.input.is_empty() {
        return Err(config_err(anyhow!("--input is required")));
    }
    let shards = discover_shards(&cfg.input, cfg.partition).map_err(config_err)?;
    let records = shards.iter().map(|s| describe_input(&s.path)).collect::<anyhow::Result<Vec<_>>>();
    Ok((shards, records.map_err(runtime_err)?))
}

fn read_all(cfg: &PipelineConfig, shards: &[ShardRef]) -> anyhow::Result<(Vec<Document>, ReadCounters)> {
    let mut docs = Vec::new();
    let mut counters = ReadCounters::default();
    for shard in shards {
        let mut reader = open_shard(shard, cfg.on_error.into())?;
        for doc in reader.by_ref() {
            docs.push(doc.with_context(|| format!("reading {}", shard.path.display()))?);
        }
        counters.shards += 1;
        counters.lines_skipped += reader.errors().len() as u64;
        counters.utf8_repairs += reader.utf8_repairs() as u64;
    }
    counters.documents_read = docs.len() as u64;
    Ok((docs, counters))
}

fn finish<C: Serialize>(
    mut staging: Staging,
    command: &str,
    cfg: &PipelineConfig,
    inputs: Vec<InputRecord>,
    counters: C,
) -> Result<RunOutcome, Failure> {
    let counters = serde_json::to_value(counters).map_err(runtime_err)?;
    let manifest = RunManifest {
        tool: "curate",
        version: env!("CARGO_PKG_VERSION"),
        command,
        inputs,
        config: cfg,
        config_hash: cfg.hash(),
        counters: &counters,
        outputs: staging.outputs(),
    };
    staging.write_json(MANIFEST_FILE, &manifest).map_err(runtime_err)?;
    let out_dir = cfg.out.clone().expect("validated");
    let outputs = staging.commit().map_err(runtime_err)?;
    Ok(RunOutcome { out_dir, outputs, counters })
}

fn staging(cfg: &PipelineConfig) -> Result<Staging, Failure> {
    Staging::new(cfg.out.as_deref().expect("validated")).map_err(runtime_err)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ReadCounters {
    pub shards: u64,
    pub documents_read: u64,
    pub lines_skipped: u64,
    pub utf8_repairs: u64,
}

impl ReadCounters {
    fn merge(&mut self, o: &ReadCounters) {
        self.shards += o.shards;
        self.documents_read += o.documents_read;
        self.lines_skipped += o.lines_skipped;
        self.utf8_repairs += o.utf8_repairs;
    }
}

/// Documents and paragraphs entering and leaving one stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StageCounters {
    pub documents_in: u64,
    pub documents_out: u64,
    pub documents_removed: u64,
    pub paragraphs_in: u64,
    pub paragraphs_out: u64,
    pub paragraphs_removed: u64,
}

impl StageCounters {
    fn merge(&mut self, o: &StageCounters) {
        self.documents_in += o.documents_in;
        self.documents_out += o.documents_out;
        self.documents_removed += o.documents_removed;
        self.paragraphs_in += o.paragraphs_in;
        self.paragraphs_out += o.paragraphs_out;
        self.paragraphs_removed += o.paragraphs_removed;
    }

    /// True when `in = out + removed` for documents and paragraphs.
    pub fn reconciles(&self) -> bool {
        self.documents_in == self.documents_out + self.documents_removed
            && self.paragraphs_in == self.paragraphs_out + self.paragraphs_removed
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PartitionFilterCounters {
    pub documents_removed: u64,
}

/// Per-shard state of a corpus run.
#[derive(Default)]
struct ShardState {
    read: ReadCounters,
    stages: BTreeMap<Stage, StageCounters>,
    dedup: DedupReport,
    ratio: RatioReport,
    partition: PartitionFilterCounters,
    perplexity: PerplexityAccumulator,
    stats: CorpusStats,
    audits: Vec<AuditRecord>,
}

impl ShardState {
    fn merge(&mut self, o: ShardState) {
        self.read.merge(&o.read);
        for (k, v) in &o.stages {
            self.stages.entry(*k).or_default().merge(v);
        }
        self.dedup.merge(&o.dedup);
        self.ratio.merge(&o.ratio);
        self.partition.documents_removed += o.partition.documents_removed;
        self.perplexity.merge(o.perplexity);
        self.stats.merge(&o.stats);
        self.audits.extend(o.audits);
    }
}

struct CorpusRun<'a> {
    stages: &'a [Stage],
    dedup_cfg: DedupConfig,
    filter: Option<BloomFilter>,
    ratio_cfg: RatioFilterConfig,
    policy: PartitionPolicy,
    tok: Option<AnyTokenizer>,
    stats_tok: AnyTokenizer,
}

impl CorpusRun<'_> {
    /// Runs one document through every stage in order.
    fn step(
        &self,
        mut doc: Document,
        st: &mut ShardState,
        uniq: &std::sync::Mutex<UniquenessTracker>,
    ) -> Option<Document> {
        for stage in self.stages {
            let paragraphs_in = split_paragraphs(&doc.raw_content).len() as u64;
            let c = st.stages.entry(*stage).or_default();
            c.documents_in += 1;
            c.paragraphs_in += paragraphs_in;
            let out = match stage {
                Stage::Dedup => {
                    let filter = self.filter.as_ref().expect("dedup stage has a filter");
                    dedup_document(doc, &self.dedup_cfg, filter, &mut st.dedup, &mut st.audits)
                }
                Stage::Filter => {
                    st.perplexity.observe(&doc);
                    if !self.policy.keeps(doc.partition) {
                        st.partition.documents_removed += 1;
                        st.audits.push(AuditRecord::partition(&doc.doc_id, &doc.raw_content));
                        None
                    } else {
                        let tok = self.tok.as_ref().expect("filter stage has a tokenizer");
                        let outcome = apply_ratio_filter(doc, &self.ratio_cfg, tok, &mut st.ratio);
                        st.audits.extend(outcome.audits);
                        outcome.doc
                    }
                }
                Stage::Stats => {
                    let u = uniq.lock().expect("uniqueness tracker").classify(&doc);
                    st.stats.observe(&doc, u, self.stats_tok.count_tokens(&doc.raw_content) as u64);
                    Some(doc)
                }
            };
            let c = st.stages.get_mut(stage).expect("inserted above");
            match out {
                Some(d) => {
                    let paragraphs_out = split_paragraphs(&d.raw_content).len() as u64;
                    c.documents_out += 1;
                    c.paragraphs_out += paragraphs_out;
                    c.paragraphs_removed += paragraphs_in - paragraphs_out;
                    doc = d;
                }
                None => {
                    c.documents_removed += 1;
                    c.paragraphs_removed += paragraphs_in;
                    return None;
                }
            }
        }
        Some(doc)
    }
}

fn doc_output_name(i: usize, shard: &ShardRef) -> String {
    let name = shard.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let name = if name.ends_with(".gz") { name } else { format!("{name}.gz") };
    format!("docs/{i:05}-{name}")
}

fn run_shard(
    cfg: &PipelineConfig,
    run: &CorpusRun<'_>,
    shard: &ShardRef,
    target: Option<&PathBuf>,
    uniq: &std::sync::Mutex<UniquenessTracker>,
) -> anyhow::Result<ShardState> {
    let mut st = ShardState::default();
    let mut reader = open_shard(shard, cfg.on_error.into())?;
    let mut writer = match target {
        Some(p) => Some(GzEncoder::new(BufWriter::new(File::create(p)?), Compression::default())),
        None => None,
    };
    for doc in reader.by_ref() {
        let doc = doc.with_context(|| format!("reading {}", shard.path.display()))?;
        st.read.documents_read += 1;
        if let Some(out) = run.step(doc, &mut st, uniq) {
            if let Some(w) = writer.as_mut() {
                serde_json::to_writer(&mut *w, &out)?;
                w.write_all(b"\n")?;
            }
        }
    }
    for e in reader.errors() {
        log::warn!("{}: line {} skipped: {}", shard.path.display(), e.line, e.message);
    }
    st.read.shards = 1;
    st.read.lines_skipped = reader.errors().len() as u64;
    st.read.utf8_repairs = reader.utf8_repairs() as u64;
    if let Some(w) = writer {
        w.finish()?.flush()?;
    }
    Ok(st)
}

#[derive(Serialize)]
struct CorpusCounters<'a> {
    read: ReadCounters,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    stages: BTreeMap<Stage, StageCounters>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dedup: Option<&'a DedupReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<&'a RatioReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    partition: Option<&'a PartitionFilterCounters>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats_documents: Option<u64>,
}

fn corpus_command(cmd: Command, cfg: &PipelineConfig, stages: &[Stage]) -> Result<RunOutcome, Failure> {
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = stages.iter().find(|s| !seen.insert(**s)) {
        return Err(config_err(anyhow!("stage {dup:?} listed twice")));
    }
    let has = |s: Stage| stages.contains(&s);
    let dedup_cfg = cfg.dedup.to_config();
    let filter = if has(Stage::Dedup) { Some(dedup_cfg.build_filter().map_err(config_err)?) } else { None };
    let tok = if has(Stage::Filter) { Some(first_tokenizer(cfg, "filter")?) } else { None };
    let stats_tok = match load_tokenizers(cfg)?.into_iter().next() {
        Some(t) => t,
        None => AnyTokenizer::Whitespace,
    };
    let run = CorpusRun {
        stages,
        dedup_cfg,
        filter,
        ratio_cfg: cfg.ratio_config().map_err(config_err)?,
        policy: cfg.partition_policy().map_err(config_err)?,
        tok,
        stats_tok,
    };
    let (shards, inputs) = resolve_shards(cfg)?;
    let mut staging = staging(cfg)?;
    let emit_docs = has(Stage::Dedup) || has(Stage::Filter);
    let targets: Vec<Option<PathBuf>> = shards
        .iter()
        .enumerate()
        .map(|(i, s)| emit_docs.then(|| staging.path(&doc_output_name(i, s))).transpose())
        .collect::<anyhow::Result<_>>()
        .map_err(runtime_err)?;

    let recompute = cfg.report.recompute_uniqueness && has(Stage::Stats);
    let uniq = std::sync::Mutex::new(UniquenessTracker::new(recompute));
    let sequential = cfg.deterministic || recompute;
    let jobs: Vec<(&ShardRef, Option<&PathBuf>)> = shards.iter().zip(targets.iter().map(Option::as_ref)).collect();
    let per_shard: Vec<ShardState> = if sequential {
        jobs.iter().map(|(s, t)| run_shard(cfg, &run, s, *t, &uniq)).collect::<anyhow::Result<_>>()
    } else {
        jobs.par_iter().map(|(s, t)| run_shard(cfg, &run, s, *t, &uniq)).collect::<anyhow::Result<_>>()
    }
    .map_err(runtime_err)?;
    let mut total = ShardState::default();
    for st in per_shard {
        total.merge(st);
    }

    let write = |staging: &mut Staging| -> anyhow::Result<()> {
        if emit_docs {
            let mut w = staging.create("audit.jsonl")?;
            for a in &total.audits {
                serde_json::to_writer(&mut w, a)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        if has(Stage::Dedup) {
            staging.write_json("dedup_report.json", &total.dedup)?;
            if cfg.dedup.save_filter {
                let mut w = staging.create("filter.llbf")?;
                run.filter.as_ref().expect("dedup filter").write_to(&mut w)?;
                w.flush()?;
            }
        }
        if has(Stage::Filter) {
            #[derive(Serialize)]
            struct FilterReport<'a> {
                ratio: &'a RatioReport,
                partition: &'a PartitionFilterCounters,
                kept_partitions: Vec<String>,
                perplexity: crate::quality::PerplexitySummary,
            }
            staging.write_json(
                "filter_report.json",
                &FilterReport {
                    ratio: &total.ratio,
                    partition: &total.partition,
                    kept_partitions: run.policy.partitions().map(|p| p.to_string()).collect(),
                    perplexity: total.perplexity.summary(),
                },
            )?;
        }
        if has(Stage::Stats) {
            write_stats(staging, &total.stats, cfg.report.top_k_domains)?;
        }
        if cmd == Command::Pipeline {
            staging.write_json("pipeline_report.json", &total.stages)?;
        }
        Ok(())
    };
    write(&mut staging).map_err(runtime_err)?;

    let counters = CorpusCounters {
        read: total.read,
        stages: if cmd == Command::Pipeline { total.stages.clone() } else { BTreeMap::new() },
        dedup: has(Stage::Dedup).then_some(&total.dedup),
        ratio: has(Stage::Filter).then_some(&total.ratio),
        partition: has(Stage::Filter).then_some(&total.partition),
        stats_documents: has(Stage::Stats).then(|| total.stats.documents()),
    };
    finish(staging, cmd.name(), cfg, inputs, counters)
}

fn write_stats(staging: &mut Staging, stats: &CorpusStats, top_k: usize) -> anyhow::Result<()> {
    let report = stats.report(top_k);
    staging.write_json("stats.json", &report)?;
    for h in &report.histograms {
        let w = staging.create(&format!("histograms/{}_{}.csv", h.partition, h.uniqueness.as_str()))?;
        h.write_csv(w)?;
    }
    DomainCount::write_csv(&report.top_domains, staging.create("domains.csv")?)?;
    Ok(())
}

fn train_tokenizer(cfg: &PipelineConfig) -> Result<RunOutcome, Failure> {
    let (shards, inputs) = resolve_shards(cfg)?;
    let (docs, read) = read_all(cfg, &shards).map_err(runtime_err)?;
    let bytes: u64 = docs.iter().map(|d| d.raw_content.len() as u64).sum();
    let model = train_bpe(docs, &cfg.train_config()).map_err(runtime_err)?;
    let mut staging = staging(cfg)?;
    let write = |s: &mut Staging| -> anyhow::Result<()> {
        s.write_bytes("tokenizer/vocab.json", model.vocab_json().as_bytes())?;
        s.write_bytes("tokenizer/merges.txt", model.merges_text().as_bytes())?;
        Ok(())
    };
    write(&mut staging).map_err(runtime_err)?;
    #[derive(Serialize)]
    struct Counters {
        read: ReadCounters,
        corpus_bytes: u64,
        vocab_size: usize,
        merges: usize,
    }
    let counters = Counters { read, corpus_bytes: bytes, vocab_size: model.vocab_size(), merges: model.num_merges() };
    finish(staging, "train-tokenizer", cfg, inputs, counters)
}

fn fertility_command(cfg: &PipelineConfig) -> Result<RunOutcome, Failure> {
    let toks = load_tokenizers(cfg)?;
    if toks.is_empty() {
        return Err(config_err(anyhow!("fertility needs at least one --tokenizer")));
    }
    let (shards, inputs) = resolve_shards(cfg)?;
    let (docs, read) = read_all(cfg, &shards).map_err(runtime_err)?;
    let sample = cfg.report.sample_id.clone().unwrap_or_else(|| "sample".into());
    let reports: Vec<FertilityReport> = toks
        .iter()
        .map(|t| fertility(t, docs.iter().cloned(), &t.id(), &sample, cfg.report.fertility_mode))
        .collect::<Result<_, _>>()
        .map_err(runtime_err)?;
    let mut staging = staging(cfg)?;
    let write = |s: &mut Staging| -> anyhow::Result<()> {
        s.write_json("fertility.json", &reports)?;
        FertilityReport::write_csv(&reports, s.create("fertility.csv")?)?;
        Ok(())
    };
    write(&mut staging).map_err(runtime_err)?;
    finish(staging, "fertility", cfg, inputs, read)
}

fn token_freq(cfg: &PipelineConfig) -> Result<RunOutcome, Failure> {
    let tok = first_tokenizer(cfg, "token-freq")?;
    let enc = first_encoder(&tok, "token-freq")?;
    let (shards, inputs) = resolve_shards(cfg)?;
    let (docs, read) = read_all(cfg, &shards).map_err(runtime_err)?;
    let report = token_frequency(enc, docs, cfg.report.top_k_tokens);
    let mut staging = staging(cfg)?;
    let write = |s: &mut Staging| -> anyhow::Result<()> {
        s.write_json("token_freq.json", &report)?;
        report.write_csv(s.create("token_freq.csv")?)?;
        Ok(())
    };
    write(&mut staging).map_err(runtime_err)?;
    finish(staging, "token-freq", cfg, inputs, read)
}

fn pack_command(cfg: &PipelineConfig) -> Result<RunOutcome, Failure> {
    let tok = first_tokenizer(cfg, "pack")?;
    let enc = first_encoder(&tok, "pack")?;
    let pack_cfg = cfg.pack_config();
    if pack_cfg.separator as usize >= enc.vocab_size() {
        return Err(config_err(anyhow!(
            "separator id {} outside vocab of size {}",
            pack_cfg.separator,
            enc.vocab_size()
        )));
    }
    let (shards, inputs) = resolve_shards(cfg)?;
    let (docs, read) = read_all(cfg, &shards).map_err(runtime_err)?;
    let out = pack(&docs, enc, &pack_cfg).map_err(runtime_err)?;
    let mut staging = staging(cfg)?;
    let write = |s: &mut Staging| -> anyhow::Result<()> {
        for shard in &out.shards {
            let mut w = s.create(&format!("shards/shard_{:05}.llpk", shard.ordinal))?;
            shard.write_to(&mut w)?;
        }
        let mut w = s.create("data_order.jsonl")?;
        out.log.write_jsonl(&mut w)?;
        w.flush()?;
        s.write_json("pack_report.json", &out.log.header)?;
        Ok(())
    };
    write(&mut staging).map_err(runtime_err)?;
    #[derive(Serialize)]
    struct Counters {
        read: ReadCounters,
        rows: u64,
        shards: usize,
        total_tokens: u64,
        dropped_tokens: u64,
    }
    let counters = Counters {
        read,
        rows: out.log.header.rows,
        shards: out.shards.len(),
        total_tokens: out.log.header.total_tokens,
        dropped_tokens: out.log.header.dropped_tokens,
    };
    finish(staging, "pack", cfg, inputs, counters)
}

/// Expands plain paths and glob patterns, keeping the given order.
fn expand_paths(patterns: &[String]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in patterns {
        if Path::new(p).exists() {
            out.push(PathBuf::from(p));
            continue;
        }
        let mut matched: Vec<PathBuf> = glob::glob(p)?.flatten().collect();
        if matched.is_empty() {
            bail!("{p}: no such file or directory");
        }
        matched.sort();
        out.extend(matched);
    }
    Ok(out)
}

fn progress(cfg: &PipelineConfig) -> Result<RunOutcome, Failure> {
    if cfg.input.is_empty() {
        return Err(config_err(anyhow!("--input is required")));
    }
    let paths = expand_paths(&cfg.input).map_err(config_err)?;
    let inputs = paths.iter().map(|p| describe_input(p)).collect::<anyhow::Result<Vec<_>>>().map_err(runtime_err)?;
    let mut staging = staging(cfg)?;
    #[derive(Serialize, Default)]
    struct Counters {
        tables: usize,
        tasks: usize,
        comparisons: usize,
        significant_comparisons: usize,
    }
    let mut counters = Counters::default();
    for path in &paths {
        let table = File::open(path)
            .map_err(anyhow::Error::from)
            .and_then(|f| ScoreTable::read_csv(f).map_err(anyhow::Error::from))
            .with_context(|| format!("reading {}", path.display()))
            .map_err(runtime_err)?;
        let report = table.analyze();
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "table".into());
        counters.tables += 1;
        counters.tasks += table.tasks.len();
        counters.comparisons += report.pairwise.len();
        counters.significant_comparisons += report.pairwise.iter().filter(|c| c.stars.significant()).count();
        let write = |s: &mut Staging| -> anyhow::Result<()> {
            s.write_json(&format!("{stem}.progress.json"), &report)?;
            report.write_stars_csv(s.create(&format!("{stem}.stars.csv"))?)?;
            Ok(())
        };
        write(&mut staging).map_err(runtime_err)?;
    }
    finish(staging, "progress", cfg, inputs, counters)
}

fn load_container(path: &Path) -> anyhow::Result<WeightContainer> {
    if path.is_dir() {
        Ok(ckpt::from_raw_dir(path)?)
    } else {
        Ok(WeightContainer::load(path)?)
    }
}

fn avg_ckpt(cfg: &PipelineConfig) -> Result<RunOutcome, Failure> {
    if cfg.input.is_empty() {
        return Err(config_err(anyhow!("--input is required")));
    }
    let paths = expand_paths(&cfg.input).map_err(config_err)?;
    let avg_cfg = AvgConfig { window: cfg.ckpt.window, weights: cfg.ckpt.weights.clone() };
    if let Some(w) = &avg_cfg.weights {
        if w.len() != paths.len() {
            return Err(config_err(anyhow!("{} weights given for {} checkpoints", w.len(), paths.len())));
        }
    }
    let selected = avg_cfg.select(&paths);
    let inputs = selected
        .iter()
        .map(|p| describe_input(&if p.is_dir() { p.join(ckpt::RAW_MANIFEST) } else { p.clone() }))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(runtime_err)?;
    let containers = selected
        .iter()
        .map(|p| load_container(p).with_context(|| format!("loading {}", p.display())))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(runtime_err)?;
    let window = AvgConfig { window: containers.len(), weights: avg_cfg.weights.as_ref().map(|w| avg_cfg.select(w).to_vec()) };
    let avg = ckpt::average_with(&containers, &window).map_err(runtime_err)?;
    let mut staging = staging(cfg)?;
    let write = |s: &mut Staging| -> anyhow::Result<()> {
        let mut w = s.create("averaged.llwc")?;
        avg.write_to(&mut w)?;
        Ok(())
    };
    write(&mut staging).map_err(runtime_err)?;
    #[derive(Serialize)]
    struct Counters {
        checkpoints: usize,
        tensors: usize,
        elements: u64,
    }
    let counters = Counters {
        checkpoints: containers.len(),
        tensors: avg.len(),
        elements: avg.iter().map(|(_, t)| t.numel()).sum(),
    };
    finish(staging, "avg-ckpt", cfg, inputs, counters)
}
