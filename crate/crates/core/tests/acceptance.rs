//! Acceptance suite. Runs every criterion, prints one PASS/FAIL/SKIP line
//! each and exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use common::*;
use corpus_curate::ckpt::{average, WeightContainer};
use corpus_curate::cli::{run, Cli};
use corpus_curate::corpus_io::{word_count, Document, Partition};
use corpus_curate::dedup::{dedup_stream, BloomFilter, DedupConfig};
use corpus_curate::packing::{pack, rechunk, replay, PackConfig};
use corpus_curate::progress::{anova, find_plateau, pooled_ttest, spearman_xy, PValueMethod, ScoreTable, Stars};
use corpus_curate::quality::{apply_ratio_filter, RatioFilterConfig, RatioReport};
use corpus_curate::stats::{collect_stats, CorpusStats, Uniqueness};
use corpus_curate::tokenizer::{
    fertility, train_bpe_texts, ByteBpeModel, CharTokenizer, Encoder, FertilityMode, TokenizerTrainConfig,
    WhitespaceTokenizer,
};
use rand::RngExt;

enum Outcome {
    Pass(String),
    Skip(String),
}

type Check = fn() -> Result<Outcome, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn c01_ratio_fixed_points() -> Result<Outcome, String> {
    let start = Instant::now();
    // token counts of the reference German tokenizer for the two strings
    let tok = |t: &str| match t {
        "Der Himmel ist blau" => 4,
        "/de/c/trebic-unesco" => 11,
        other => word_count(other),
    };
    let cfg = RatioFilterConfig::new(8.0).map_err(|e| e.to_string())?;
    let mut report = RatioReport::default();
    let doc = Document::new("d", "Der Himmel ist blau\n/de/c/trebic-unesco", Partition::Head);
    let out = apply_ratio_filter(doc, &cfg, &tok, &mut report);
    let kept = out.doc.ok_or("document dropped")?;
    ensure(kept.raw_content == "Der Himmel ist blau", || format!("kept {:?}", kept.raw_content))?;
    ensure(out.audits.len() == 1 && out.audits[0].ratio == Some(11.0), || format!("audits {:?}", out.audits))?;
    let mut r2 = RatioReport::default();
    let sky = apply_ratio_filter(Document::new("s", "Der Himmel ist blau", Partition::Head), &cfg, &tok, &mut r2);
    ensure(sky.audits.is_empty() && r2.paragraphs_removed == 0, || "sky sentence removed".into())?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(Outcome::Pass("ratio 1.0 kept, ratio 11 removed at threshold 8".into()))
}

fn dedup_corpus() -> Vec<Document> {
    let mut r = rng(2);
    let shared_long: Vec<String> = (0..300).map(|i| format!("{} gemeinsamer block {i}", random_sentence(&mut r, 6))).collect();
    let shared_short: Vec<String> = (0..25).map(|i| format!("kurz{i} text")).collect();
    (0..10_000)
        .map(|i| {
            let mut paras: Vec<String> = (0..3).map(|j| format!("{} doc{i} para{j}", random_sentence(&mut r, 4))).collect();
            if i < 2000 {
                let pos = r.random_range(0..=paras.len());
                paras.insert(pos, shared_long[r.random_range(0..shared_long.len())].clone());
            } else if i < 2500 {
                let pos = r.random_range(0..=paras.len());
                paras.insert(pos, shared_short[r.random_range(0..shared_short.len())].clone());
            }
            Document::new(format!("d{i}"), paras.join("\n"), Partition::Head)
        })
        .collect()
}

fn c02_dedup_matches_exact_set() -> Result<Outcome, String> {
    let docs = dedup_corpus();
    let expected = exact_dedup(&docs, 3);
    let start = Instant::now();
    let cfg = DedupConfig { n_expected: 50_000, p_target: 1e-9, ..DedupConfig::default() };
    let mut runs = Vec::new();
    for _ in 0..3 {
        let filter = cfg.build_filter().map_err(|e| e.to_string())?;
        let out: Vec<Document> = dedup_stream(docs.clone(), cfg, &filter).collect();
        runs.push(out);
    }
    let elapsed = start.elapsed();
    ensure(runs[0] == runs[1] && runs[1] == runs[2], || "sequential runs differ".into())?;
    let got: Vec<Vec<String>> = runs[0].iter().map(|d| d.paragraphs().iter().map(|p| p.text.to_string()).collect()).collect();
    ensure(got.len() == expected.len(), || "document count differs".into())?;
    let mismatch = got.iter().zip(&expected).position(|(a, b)| a != b);
    ensure(mismatch.is_none(), || format!("first mismatch in document {mismatch:?}"))?;
    let short_in = docs.iter().flat_map(|d| d.raw_content.split('\n')).filter(|p| p.starts_with("kurz")).count();
    let short_out = got.iter().flatten().filter(|p| p.starts_with("kurz")).count();
    ensure(short_in == 500 && short_out == 500, || format!("short paragraphs {short_in} in, {short_out} out"))?;
    let removed: usize = docs.iter().map(|d| d.paragraphs().len()).sum::<usize>() - got.iter().map(Vec::len).sum::<usize>();
    within(elapsed, Duration::from_secs(10))?;
    Ok(Outcome::Pass(format!("10k docs, {removed} paragraphs removed, identical to exact set, 3 runs equal, {elapsed:.2?}")))
}

fn c03_bloom_false_positive_bound() -> Result<Outcome, String> {
    let filter = BloomFilter::new(100_000, 1e-3).map_err(|e| e.to_string())?;
    for i in 0..100_000u32 {
        filter.test_and_insert(format!("inserted key {i}").as_bytes());
    }
    let negatives = (0..100_000u32).filter(|i| !filter.contains(format!("inserted key {i}").as_bytes())).count();
    ensure(negatives == 0, || format!("{negatives} false negatives"))?;
    let fp = (0..1_000_000u32).filter(|i| filter.contains(format!("absent key {i}").as_bytes())).count();
    let rate = fp as f64 / 1e6;
    ensure(rate <= 2e-3, || format!("false-positive rate {rate}"))?;
    Ok(Outcome::Pass(format!("FP rate {rate:.2e} over 1e6 absent keys, 0 false negatives")))
}

fn c04_bpe_matches_naive_recount() -> Result<Outcome, String> {
    let start = Instant::now();
    let mut total_merges = 0;
    for seed in 0..24u64 {
        let texts = fuzz_corpus(seed, 4096);
        let budget = 20 + (seed as usize * 7) % 81;
        let cfg = TokenizerTrainConfig { vocab_size: 3 + 256 + budget, ..TokenizerTrainConfig::default() };
        let model = train_bpe_texts(texts.iter().map(String::as_str), &cfg).map_err(|e| e.to_string())?;
        let got: Vec<(String, String)> = model.merges().map(|(l, r)| (l.to_string(), r.to_string())).collect();
        let want = naive_bpe(&texts, budget);
        ensure(got == want, || {
            let at = got.iter().zip(&want).position(|(a, b)| a != b);
            format!("seed {seed}: {} vs {} merges, first difference at {at:?}", got.len(), want.len())
        })?;
        ensure(model.merges_text().as_bytes() == naive_merges_text(&want).as_bytes(), || format!("seed {seed}: merges file differs"))?;
        total_merges += got.len();
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(Outcome::Pass(format!("24 corpora, {total_merges} merges identical to naive recount, {:.2?}", start.elapsed())))
}

fn naive_merges_text(merges: &[(String, String)]) -> String {
    merges.iter().map(|(l, r)| format!("{l} {r}\n")).collect()
}

fn trained_model() -> Result<ByteBpeModel, String> {
    let texts: Vec<String> = (0..40).flat_map(|s| fuzz_corpus(100 + s, 4096)).collect();
    let cfg = TokenizerTrainConfig { vocab_size: 1200, ..TokenizerTrainConfig::default() };
    train_bpe_texts(texts.iter().map(String::as_str), &cfg).map_err(|e| e.to_string())
}

fn c05_round_trip() -> Result<Outcome, String> {
    let model = trained_model()?;
    let mut r = rng(5);
    let words: Vec<&[u8]> = vec![b"der ", "Straße".as_bytes(), b"\n\n", b"  ", "über".as_bytes(), b"---"];
    let mut failures = 0;
    for _ in 0..100_000 {
        let len = r.random_range(0..48);
        let mut x = Vec::with_capacity(len);
        while x.len() < len {
            if r.random_bool(0.5) {
                x.push(r.random::<u8>());
            } else {
                x.extend_from_slice(words[r.random_range(0..words.len())]);
            }
        }
        let ids = model.encode_bytes(&x);
        if model.decode(&ids).map_err(|e| e.to_string())? != x {
            failures += 1;
        }
    }
    ensure(failures == 0, || format!("{failures} round-trip failures"))?;
    Ok(Outcome::Pass(format!("1e5 fuzzed byte strings round-trip (vocab {})", model.vocab_size())))
}

fn c06_fertility() -> Result<Outcome, String> {
    let docs: Vec<Document> = {
        let mut r = rng(6);
        (0..1000)
            .map(|i| {
                let n = r.random_range(0..30);
                Document::new(format!("f{i}"), random_sentence(&mut r, n), Partition::Head)
            })
            .collect()
    };
    let ws = fertility(&WhitespaceTokenizer, docs.clone(), "ws", "s", FertilityMode::CorpusRatio).map_err(|e| e.to_string())?;
    ensure(ws.fertility == 1.0, || format!("whitespace fertility {}", ws.fertility))?;
    let one = vec![Document::new("a", "abc de", Partition::Head)];
    let chars = fertility(&CharTokenizer, one, "chars", "s", FertilityMode::CorpusRatio).map_err(|e| e.to_string())?;
    ensure(chars.fertility == 2.5, || format!("char fertility {}", chars.fertility))?;
    let model = trained_model()?;
    let got = fertility(&model, docs.clone(), "bpe", "s", FertilityMode::CorpusRatio).map_err(|e| e.to_string())?;
    let tokens: usize = docs.iter().map(|d| model.encode(&d.raw_content).len()).sum();
    let words: usize = docs.iter().map(|d| d.raw_content.split_whitespace().count()).sum();
    let want = tokens as f64 / words as f64;
    ensure((got.fertility - want).abs() <= 1e-12, || format!("{} vs recount {want}", got.fertility))?;
    Ok(Outcome::Pass(format!("whitespace 1.0, chars 2.5, BPE corpus fertility {want:.6} matches recount")))
}

fn c07_stats_conservation() -> Result<Outcome, String> {
    let docs = stats_corpus(7, 1000);
    let stats = collect_stats(docs.clone(), &WhitespaceTokenizer, false);
    let mass: u64 = stats.histograms().iter().map(|h| h.total()).sum();
    ensure(mass == 1000, || format!("histogram mass {mass}"))?;

    let want = histogram_by_recount(&docs, |t| t.split_whitespace().count() as u64);
    let mut got = BTreeMap::new();
    for h in stats.histograms() {
        for (&bin, &count) in &h.bins {
            got.insert((h.partition.as_str().to_string(), h.uniqueness == Uniqueness::Duplicate, bin), count);
        }
    }
    ensure(got == want, || "histogram bins differ from recount".into())?;

    for p in Partition::ALL {
        let s = stats.partition(p);
        let unique = docs.iter().filter(|d| d.partition == p && !d.dup_flag).count() as u64;
        let dup = docs.iter().filter(|d| d.partition == p && d.dup_flag).count() as u64;
        ensure(s.unique_docs == unique && s.duplicate_docs == dup, || format!("{p}: unique/duplicate split differs"))?;
    }

    let mut domains: BTreeMap<String, [u64; 3]> = BTreeMap::new();
    for d in &docs {
        let host = d.url.as_deref().and_then(reference_host).unwrap_or_else(|| "(unknown)".into());
        let idx = Partition::ALL.iter().position(|p| *p == d.partition).unwrap();
        domains.entry(host).or_default()[idx] += 1;
    }
    let mut ranked: Vec<(String, [u64; 3])> = domains.into_iter().collect();
    ranked.sort_by(|a, b| b.1.iter().sum::<u64>().cmp(&a.1.iter().sum::<u64>()).then_with(|| a.0.cmp(&b.0)));
    let top = stats.top_domains(4);
    ensure(top.len() == 4, || "top-k length".into())?;
    for (row, (host, c)) in top.iter().zip(&ranked) {
        ensure(
            row.domain == *host && [row.head, row.middle, row.tail] == *c && row.total == c.iter().sum::<u64>(),
            || format!("domain row {row:?} vs {host} {c:?}"),
        )?;
    }
    let all_domains: u64 = stats.top_domains(usize::MAX).iter().map(|d| d.total).sum();
    ensure(all_domains == 1000, || format!("domain totals {all_domains}"))?;

    let mut merged = CorpusStats::default();
    for chunk in docs.chunks(137) {
        merged.merge(&collect_stats(chunk.to_vec(), &WhitespaceTokenizer, false));
    }
    ensure(merged == stats, || "shard-merged stats differ from single pass".into())?;
    Ok(Outcome::Pass("histograms, unique/duplicate split and top-k domains match recounts; merge equals single pass".into()))
}

fn c08_packing() -> Result<Outcome, String> {
    let mut r = rng(8);
    let mut dropped_total = 0;
    for corpus in 0..100 {
        let n = r.random_range(0..30);
        let docs: Vec<Document> = (0..n)
            .map(|i| {
                let len = r.random_range(0..300);
                let text: String = (0..len).map(|_| char::from(b'a' + r.random_range(0..26u8))).collect();
                Document::new(format!("c{corpus}d{i}"), text, Partition::Head)
            })
            .collect();
        let seq_len = r.random_range(2..200);
        let cfg = PackConfig { seq_len, separator: 0, shuffle_seed: r.random_bool(0.5).then(|| r.random()) };
        let out = pack(&docs, &CharTokenizer, &cfg).map_err(|e| e.to_string())?;
        let stream = replay(&out.log, &docs, &CharTokenizer).map_err(|e| e.to_string())?;
        ensure(rechunk(&stream, seq_len).into_iter().eq(out.rows()), || format!("corpus {corpus}: replay differs"))?;
        let total: u64 = docs.iter().map(|d| d.raw_content.len() as u64 + 1).sum();
        let h = &out.log.header;
        ensure(h.total_tokens == total, || format!("corpus {corpus}: total tokens"))?;
        ensure(h.dropped_tokens == total % seq_len as u64, || format!("corpus {corpus}: dropped {}", h.dropped_tokens))?;
        ensure(h.rows * seq_len as u64 + h.dropped_tokens == total, || format!("corpus {corpus}: accounting"))?;
        dropped_total += h.dropped_tokens;
    }
    let long = vec![Document::new("long", "x".repeat(4095), Partition::Head)];
    let out = pack(&long, &CharTokenizer, &PackConfig { seq_len: 2048, separator: 0, shuffle_seed: None }).map_err(|e| e.to_string())?;
    ensure(out.log.header.rows == 2 && out.log.header.dropped_tokens == 0, || "4095-token document".into())?;
    Ok(Outcome::Pass(format!("100 corpora replay bit-exact, {dropped_total} dropped tokens accounted, 4095 tokens -> 2 rows")))
}

fn c09_statistics_kernel() -> Result<Outcome, String> {
    let mut r = rng(9);
    let mut cases = 0;
    for n in 3..=7usize {
        for trial in 0..12 {
            let x: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
            // some trials draw from a tiny range to force ties
            let hi = if trial % 3 == 0 { 3 } else { 1000 };
            let y: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..hi))).collect();
            if y.iter().all(|v| *v == y[0]) {
                continue;
            }
            let got = spearman_xy(&x, &y).map_err(|e| e.to_string())?;
            let (rho, hits, total) = spearman_by_enumeration(&x, &y);
            ensure((got.r - rho).abs() <= 1e-12, || format!("n={n}: r {} vs {rho}", got.r))?;
            ensure(got.method == PValueMethod::ExactPermutation, || "not exact".into())?;
            ensure(got.p == hits as f64 / total as f64, || format!("n={n} y={y:?}: p {} vs {hits}/{total}", got.p))?;
            cases += 1;
        }
    }
    let five = spearman_xy(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.1, 0.3, 0.2, 0.5, 0.4]).map_err(|e| e.to_string())?;
    let (rho5, h5, t5) = spearman_by_enumeration(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.1, 0.3, 0.2, 0.5, 0.4]);
    ensure((five.r - rho5).abs() <= 1e-12 && five.p == h5 as f64 / t5 as f64, || "5-point example".into())?;

    let mut worst_p = 0.0f64;
    for _ in 0..10 {
        let groups: Vec<Vec<f64>> = (0..3).map(|_| (0..5).map(|_| r.random::<f64>()).collect()).collect();
        let a = anova(&groups).map_err(|e| e.to_string())?;
        let f = anova_f(&groups);
        ensure((a.f - f).abs() <= 1e-12 * f.max(1.0), || format!("F {} vs {f}", a.f))?;
        let p = f_upper_tail_by_quadrature(a.f, 2, 12);
        worst_p = worst_p.max((a.p - p).abs());
    }
    ensure(worst_p <= 1e-6, || format!("ANOVA p off by {worst_p:e}"))?;

    let mut worst_ft = 0.0f64;
    for _ in 0..20 {
        let na = r.random_range(2..9);
        let nb = r.random_range(2..9);
        let a: Vec<f64> = (0..na).map(|_| r.random::<f64>()).collect();
        let b: Vec<f64> = (0..nb).map(|_| r.random::<f64>() + 0.2).collect();
        let f = anova(&[a.clone(), b.clone()]).map_err(|e| e.to_string())?.f;
        let t = pooled_ttest(&a, &b).map_err(|e| e.to_string())?.t;
        worst_ft = worst_ft.max((f - t * t).abs() / f.max(1.0));
    }
    ensure(worst_ft <= 1e-9, || format!("F vs t^2 off by {worst_ft:e}"))?;

    let stars = [
        (0.05, Stars::One),
        (0.0500001, Stars::Ns),
        (0.01, Stars::Two),
        (0.0100001, Stars::One),
        (0.001, Stars::Three),
        (0.0010001, Stars::Two),
        (0.0001, Stars::Four),
        (0.0001001, Stars::Three),
    ];
    for (p, want) in stars {
        ensure(Stars::from_p(p) == want, || format!("stars for p = {p}"))?;
    }
    Ok(Outcome::Pass(format!(
        "{cases} Spearman cases exact; ANOVA p within {worst_p:.1e} of quadrature; F = t^2 within {worst_ft:.1e}; star thresholds exact"
    )))
}

fn container(seed: u64) -> WeightContainer {
    let mut r = rng(seed);
    let mut c = WeightContainer::new();
    c.insert("a", vec![7, 3], (0..21).map(|_| (r.random::<f32>() - 0.5) * 100.0).collect()).unwrap();
    c.insert("b", vec![5], (0..5).map(|_| r.random::<f32>() * 1e-3).collect()).unwrap();
    c
}

fn c10_checkpoint_averaging() -> Result<Outcome, String> {
    let w = container(1);
    let single = average(std::slice::from_ref(&w)).map_err(|e| e.to_string())?;
    let bits = |c: &WeightContainer| -> Vec<u32> { c.iter().flat_map(|(_, t)| t.data.iter().map(|v| v.to_bits())).collect() };
    ensure(bits(&single) == bits(&w), || "singleton average differs".into())?;
    let zero = average(&[w.clone(), w.map(|v| -v)]).map_err(|e| e.to_string())?;
    ensure(bits(&zero).iter().all(|b| *b == 0), || "W and -W do not cancel to +0".into())?;
    let (a, b, c) = (container(2), container(3), container(4));
    let avg = average(&[a.clone(), b.clone(), c.clone()]).map_err(|e| e.to_string())?;
    for (name, t) in avg.iter() {
        let (ta, tb, tc) = (a.get(name).unwrap(), b.get(name).unwrap(), c.get(name).unwrap());
        for i in 0..t.data.len() {
            let want = ((f64::from(ta.data[i]) + f64::from(tb.data[i]) + f64::from(tc.data[i])) / 3.0) as f32;
            ensure(t.data[i].to_bits() == want.to_bits(), || format!("{name}[{i}]"))?;
        }
    }
    Ok(Outcome::Pass("singleton, {W, -W} and 3-way mean bit-exact".into()))
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .flatten()
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().into_owned();
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn cli(args: &[&str]) -> Result<(), String> {
    let parsed = Cli::try_parse_from(std::iter::once("curate").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    run(&parsed).map(|_| ()).map_err(|f| format!("{:#}", f.error()))
}

fn c11_pipeline_determinism() -> Result<Outcome, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = fixtures().join("corpus");
    let corpus = corpus.to_str().unwrap();
    let tok_dir = tmp.path().join("tok");
    cli(&["train-tokenizer", "--input", corpus, "--out", tok_dir.to_str().unwrap(), "--vocab-size", "400"])?;
    let tokenizer = tok_dir.join("tokenizer");
    let mut trees = Vec::new();
    for i in 0..2 {
        let out = tmp.path().join(format!("run{i}"));
        cli(&[
            "pipeline",
            "--input",
            corpus,
            "--out",
            out.to_str().unwrap(),
            "--tokenizer",
            tokenizer.to_str().unwrap(),
            "--deterministic",
        ])?;
        trees.push(read_tree(&out));
    }
    ensure(trees[0].contains_key("manifest.json"), || "no manifest".into())?;
    ensure(trees[0] == trees[1], || {
        let diff: Vec<_> = trees[0].iter().filter(|(k, v)| trees[1].get(*k) != Some(v)).map(|(k, _)| k.clone()).collect();
        format!("outputs differ: {diff:?}")
    })?;
    Ok(Outcome::Pass(format!("{} output files byte-identical across two runs", trees[0].len())))
}

const RELEASED_ENV: &str = "CURATE_RELEASED_SCORES";

/// Reference values for the released score tables: a 120M table and a 1B table
/// with tasks as rows and checkpoint steps as columns.
fn conditional_reproduction() -> Result<Outcome, String> {
    let dir = match std::env::var_os(RELEASED_ENV) {
        Some(d) => PathBuf::from(d),
        None => fixtures().join("released"),
    };
    let (small, large) = (dir.join("120m.csv"), dir.join("1b.csv"));
    if !small.exists() || !large.exists() {
        return Ok(Outcome::Skip(format!("released score tables not found (set {RELEASED_ENV} or add fixtures/released/)")));
    }
    let load = |p: &Path| -> Result<ScoreTable, String> {
        ScoreTable::read_csv(std::fs::File::open(p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
    };
    let t120 = load(&small)?;
    let t1b = load(&large)?;
    let trend = |t: &ScoreTable, task: &str| -> Result<f64, String> {
        let i = t.tasks.iter().position(|n| n.eq_ignore_ascii_case(task)).ok_or(format!("task {task} missing"))?;
        let s = t.series(i).map_err(|e| e.to_string())?;
        Ok(corpus_curate::progress::spearman(&s).map_err(|e| e.to_string())?.r)
    };
    let nli = trend(&t120, "NLI")?;
    let aspect = trend(&t120, "DB Aspect")?;
    ensure((nli - 0.947).abs() <= 0.001, || format!("NLI r = {nli}"))?;
    ensure((aspect - 0.909).abs() <= 0.001, || format!("DB Aspect r = {aspect}"))?;
    let plateau = |t: &ScoreTable| -> Result<u64, String> {
        let steps = t.steps().ok_or("columns are not steps")?;
        let m: Vec<_> = steps.iter().enumerate().map(|(j, &s)| (s, t.column(j))).collect();
        Ok(find_plateau(&m).map_err(|e| e.to_string())?.plateau_step)
    };
    let (p120, p1b) = (plateau(&t120)?, plateau(&t1b)?);
    ensure(p120 == 300_000 && p1b == 500_000, || format!("plateaus at {p120} and {p1b}"))?;
    Ok(Outcome::Pass(format!("NLI r = {nli:.3}, DB Aspect r = {aspect:.3}, plateaus {p120} / {p1b}")))
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 12] = [
        ("criterion 1 (ratio filter fixed points)", c01_ratio_fixed_points),
        ("criterion 2 (dedup vs exact set)", c02_dedup_matches_exact_set),
        ("criterion 3 (bloom FP bound)", c03_bloom_false_positive_bound),
        ("criterion 4 (BPE vs naive recount)", c04_bpe_matches_naive_recount),
        ("criterion 5 (encode/decode round trip)", c05_round_trip),
        ("criterion 6 (fertility)", c06_fertility),
        ("criterion 7 (stats conservation)", c07_stats_conservation),
        ("criterion 8 (packing round trip)", c08_packing),
        ("criterion 9 (statistics kernel)", c09_statistics_kernel),
        ("criterion 10 (checkpoint averaging)", c10_checkpoint_averaging),
        ("criterion 11 (pipeline determinism)", c11_pipeline_determinism),
        ("conditional (released score tables)", conditional_reproduction),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let t = start.elapsed();
        match result {
            Ok(Outcome::Pass(detail)) => println!("PASS {name}: {detail} [{t:.2?}]"),
            Ok(Outcome::Skip(reason)) => println!("SKIP {name}: {reason}"),
            Err(e) => {
                failed += 1;
                println!("FAIL {name}: {e} [{t:.2?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    }
}
