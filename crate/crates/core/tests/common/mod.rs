//! Independent reference implementations and corpus generators shared by the
//! integration tests. Nothing here calls into the code under test except for
//! plain data types.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use corpus_curate::corpus_io::{Document, Partition};
use corpus_curate::tokenizer::{bytes_to_marker, pretokenize};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const SYLLABLES: &[&str] = &[
    "ber", "lin", "ham", "burg", "stadt", "haus", "gar", "ten", "sch", "mi", "dt", "wa", "sser", "ü", "ö", "ä",
    "ß", "ein", "der", "die", "und", "ist", "nicht", "ver", "ge", "ung", "keit", "lich",
];

pub fn random_word<R: Rng>(r: &mut R) -> String {
    let n = r.random_range(1..=3);
    (0..n).map(|_| SYLLABLES[r.random_range(0..SYLLABLES.len())]).collect()
}

pub fn random_sentence<R: Rng>(r: &mut R, words: usize) -> String {
    (0..words).map(|_| random_word(r)).collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------------------
// Paragraph dedup reference: an exact set of trimmed paragraph strings.

pub fn exact_dedup(docs: &[Document], min_words: usize) -> Vec<Vec<String>> {
    let mut seen: HashSet<String> = HashSet::new();
    docs.iter()
        .map(|d| {
            d.raw_content
                .split('\n')
                .filter(|p| !p.is_empty())
                .filter(|p| {
                    if p.split_whitespace().count() < min_words {
                        return true;
                    }
                    seen.insert(p.trim().to_string())
                })
                .map(str::to_string)
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// BPE reference: recount every adjacent pair from scratch after each merge.

pub fn naive_bpe(texts: &[String], budget: usize) -> Vec<(String, String)> {
    let mut freq: HashMap<Vec<u8>, u64> = HashMap::new();
    for t in texts {
        for w in pretokenize(t.as_bytes()) {
            *freq.entry(w.to_vec()).or_default() += 1;
        }
    }
    let mut words: Vec<(Vec<Vec<u8>>, u64)> =
        freq.into_iter().map(|(w, c)| (w.iter().map(|&b| vec![b]).collect(), c)).collect();
    let mut vocab: HashSet<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let mut merges = Vec::new();
    while merges.len() < budget {
        let mut counts: HashMap<(Vec<u8>, Vec<u8>), u64> = HashMap::new();
        for (syms, c) in &words {
            for p in syms.windows(2) {
                *counts.entry((p[0].clone(), p[1].clone())).or_default() += c;
            }
        }
        let best = counts
            .into_iter()
            .filter(|((l, r), _)| !vocab.contains(&[l.as_slice(), r.as_slice()].concat()))
            .map(|((l, r), c)| (c, bytes_to_marker(&l), bytes_to_marker(&r), l, r))
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| (&b.1, &b.2).cmp(&(&a.1, &a.2))));
        let Some((count, lm, rm, l, r)) = best else { break };
        if count < 2 {
            break;
        }
        let joined = [l.as_slice(), r.as_slice()].concat();
        for (syms, _) in words.iter_mut() {
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == l && syms[i + 1] == r {
                    out.push(joined.clone());
                    i += 2;
                } else {
                    out.push(syms[i].clone());
                    i += 1;
                }
            }
            *syms = out;
        }
        vocab.insert(joined);
        merges.push((lm, rm));
    }
    merges
}

/// Random UTF-8 text of at most `max_bytes` bytes.
pub fn fuzz_corpus(seed: u64, max_bytes: usize) -> Vec<String> {
    let mut r = rng(seed);
    let alphabet: Vec<char> = "aabbcdeeefghinnorsstu äöüß.,-\n\t".chars().collect();
    let mut texts = Vec::new();
    let mut total = 0;
    loop {
        let len = r.random_range(1..200);
        let mut s = String::new();
        for _ in 0..len {
            if r.random_bool(0.15) {
                s.push_str(SYLLABLES[r.random_range(0..SYLLABLES.len())]);
            } else {
                s.push(alphabet[r.random_range(0..alphabet.len())]);
            }
        }
        if total + s.len() > max_bytes {
            break;
        }
        total += s.len();
        texts.push(s);
    }
    texts
}

// ---------------------------------------------------------------------------
// Statistics references.

/// Pearson correlation of two equally long samples.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Ranks by counting: rank = 1 + #smaller + (#equal - 1) / 2.
pub fn count_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|a| {
            let less = v.iter().filter(|b| *b < a).count() as f64;
            let eq = v.iter().filter(|b| *b == a).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect()
}

fn permutations(items: &[f64]) -> Vec<Vec<f64>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Spearman rho and its two-sided permutation p-value as `(hits, n!)`.
pub fn spearman_by_enumeration(x: &[f64], y: &[f64]) -> (f64, u64, u64) {
    let rx = count_ranks(x);
    let ry = count_ranks(y);
    let rho = pearson(&rx, &ry);
    let perms = permutations(&ry);
    let hits = perms.iter().filter(|p| pearson(&rx, p).abs() >= rho.abs() - 1e-12).count();
    (rho, hits as u64, perms.len() as u64)
}

/// Γ(k/2) for a positive integer `k`, from factorials.
pub fn gamma_half(k: u32) -> f64 {
    if k.is_multiple_of(2) {
        (1..k / 2).map(f64::from).product()
    } else {
        // Γ(n + 1/2) = (2n)! / (4^n n!) · sqrt(pi)
        let n = (k - 1) / 2;
        let mut g = std::f64::consts::PI.sqrt();
        for i in 0..n {
            g *= f64::from(i) + 0.5;
        }
        g
    }
}

/// Density of the F(d1, d2) distribution.
pub fn f_pdf(x: f64, d1: u32, d2: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let (a, b) = (f64::from(d1), f64::from(d2));
    let beta = gamma_half(d1) * gamma_half(d2) / gamma_half(d1 + d2);
    ((a * x).powf(a) * b.powf(b) / (a * x + b).powf(a + b)).sqrt() / (x * beta)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// `P(F > f)` by integrating the density over `[f, inf)` after mapping it to `[0, 1)`.
pub fn f_upper_tail_by_quadrature(f: f64, d1: u32, d2: u32) -> f64 {
    let g = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let x = f + s / (1.0 - s);
        f_pdf(x, d1, d2) / (1.0 - s).powi(2)
    };
    let (a, b) = (0.0, 1.0 - 1e-12);
    let (fa, fm, fb) = (g(a), g(0.5 * (a + b)), g(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&g, a, b, fa, fm, fb, whole, 1e-12, 50)
}

/// One-way ANOVA F from explicit sums of squares.
pub fn anova_f(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = all.iter().sum::<f64>() / all.len() as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand) * (m - grand);
        for v in g {
            ssw += (v - m) * (v - m);
        }
    }
    (ssb / (groups.len() - 1) as f64) / (ssw / (all.len() - groups.len()) as f64)
}

// ---------------------------------------------------------------------------
// Corpus statistics references.

/// Host of a URL: scheme, userinfo, path and port removed, lowercased.
pub fn reference_host(url: &str) -> Option<String> {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    let authority = rest.split(['/', '?', '#']).next()?;
    let authority = authority.rsplit('@').next()?;
    let host = authority.split(':').next()?;
    (!host.is_empty()).then(|| host.to_lowercase())
}

const HOSTS: &[&str] = &["de.wikipedia.org", "WWW.Welt.de", "blog.example.org", "forum.example.net", "shop.beispiel.de"];

/// Synthetic corpus with urls (some missing), partitions and duplicate flags.
pub fn stats_corpus(seed: u64, n: usize) -> Vec<Document> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let partition = Partition::ALL[r.random_range(0..3)];
            let words = r.random_range(0..40);
            let mut d = Document::new(format!("doc-{i}"), random_sentence(&mut r, words), partition);
            d.dup_flag = r.random_bool(0.3);
            if !r.random_bool(0.1) {
                let host = HOSTS[r.random_range(0..HOSTS.len())];
                let port = if r.random_bool(0.2) { ":8080" } else { "" };
                d.url = Some(format!("https://{host}{port}/page/{i}"));
            }
            d
        })
        .collect()
}

pub fn histogram_by_recount(docs: &[Document], tokens: impl Fn(&str) -> u64) -> BTreeMap<(String, bool, u64), u64> {
    let mut out = BTreeMap::new();
    for d in docs {
        *out.entry((d.partition.as_str().to_string(), d.dup_flag, tokens(&d.raw_content))).or_default() += 1;
    }
    out
}
