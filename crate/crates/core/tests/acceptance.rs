//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use copyguard::dpo::{dpo_grad, dpo_loss, EncodedPair, TrainedPair};
use copyguard::eval::SystemPromptChoice;
use copyguard::index::CorpusIndex;
use copyguard::lm::{RowKey, TabularLm};
use copyguard::metrics::{lcs_len, rouge_l_tokens};
use copyguard::pipeline::{detect_memorized, PairMode};
use copyguard::report::{Manifest, Report};
use copyguard::toy::{pretrain, run_from_pretrained, run_toy, ToyConfig, ToyCorpus, ToyReport};
use copyguard::vocab::RESERVED;
use copyguard::{TokenSeq, VocabId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// Criterion 1: metric oracles.

const MAX_LEN: usize = 8;

/// Every sequence over {0, 1, 2} of length 0..=MAX_LEN.
fn all_sequences() -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..MAX_LEN {
        let mut next = Vec::new();
        for s in &frontier {
            for sym in 0..3u8 {
                let mut t: Vec<u8> = s.clone();
                t.push(sym);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Injective code for sequences of length <= 8: base-4 digits 1..=3.
fn code(seq: impl Iterator<Item = u8>) -> usize {
    seq.fold(0, |acc, s| acc * 4 + s as usize + 1)
}

fn subsequence_codes(s: &[u8]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0u32..1 << s.len()).map(move |mask| {
        let picked = (0..s.len()).filter(|i| mask >> i & 1 == 1);
        let len = mask.count_ones() as usize;
        (len, code(picked.map(|i| s[i])))
    })
}

const CODE_SPACE: usize = 1 << (2 * MAX_LEN);

/// Exhaustive LCS: the longest subsequence of `a` that is also a
/// subsequence of `b`, found by enumerating subsequences of both.
fn criterion_1_lcs() -> (bool, String) {
    let seqs = all_sequences();
    let by_len: Vec<Vec<Vec<usize>>> = seqs
        .iter()
        .map(|s| {
            let mut groups = vec![BTreeSet::new(); s.len() + 1];
            for (len, c) in subsequence_codes(s) {
                groups[len].insert(c);
            }
            groups.into_iter().map(|g| g.into_iter().collect()).collect()
        })
        .collect();
    let mut in_b = vec![false; CODE_SPACE];
    let mut pairs = 0u64;
    let mut mismatches = 0u64;
    for b in &seqs {
        let codes: Vec<usize> = subsequence_codes(b).map(|(_, c)| c).collect();
        for &c in &codes {
            in_b[c] = true;
        }
        for (a, groups) in seqs.iter().zip(&by_len) {
            let top = a.len().min(b.len());
            let oracle = (0..=top).rev().find(|&l| groups[l].iter().any(|&c| in_b[c])).unwrap_or(0);
            let dp = lcs_len(a, b);
            pairs += 1;
            if dp != oracle {
                mismatches += 1;
                continue;
            }
            let score = rouge_l_tokens(a, b);
            let p = if a.is_empty() { 0.0 } else { oracle as f64 / a.len() as f64 };
            let r = if b.is_empty() { 0.0 } else { oracle as f64 / b.len() as f64 };
            if score.precision != p || score.recall != r || score.f != (p * r).sqrt() {
                mismatches += 1;
            }
        }
        for &c in &codes {
            in_b[c] = false;
        }
    }
    (mismatches == 0, format!("{pairs} pairs, {mismatches} mismatches"))
}

fn criterion_1_suffix_array() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut queries = 0usize;
    let mut mismatches = 0usize;
    let mut max_tokens = 0usize;
    for _ in 0..200 {
        let total = rng.random_range(1..=10_000usize);
        let alphabet = rng.random_range(2..=8u32);
        let mut docs: Vec<Vec<u32>> = Vec::new();
        let mut left = total;
        while left > 0 {
            let len = rng.random_range(1..=left.min(2_000));
            docs.push((0..len).map(|_| rng.random_range(0..alphabet)).collect());
            left -= len;
        }
        max_tokens = max_tokens.max(total);
        let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
        let index = CorpusIndex::from_raw(VocabId::new("acc", alphabet), &refs).unwrap();
        for q in 0..40 {
            let n = rng.random_range(1..=6usize);
            let gram: Vec<u32> = if q % 2 == 0 {
                let d = &docs[rng.random_range(0..docs.len())];
                if d.len() < n {
                    continue;
                }
                let start = rng.random_range(0..=d.len() - n);
                d[start..start + n].to_vec()
            } else {
                (0..n).map(|_| rng.random_range(0..alphabet)).collect()
            };
            let naive: usize = docs
                .iter()
                .map(|d| d.windows(n).filter(|w| *w == gram.as_slice()).count())
                .sum();
            queries += 1;
            if index.count_tokens(&gram) != naive {
                mismatches += 1;
            }
        }
    }
    (
        mismatches == 0,
        format!("200 corpora up to {max_tokens} tokens, {queries} queries, {mismatches} mismatches"),
    )
}

fn criterion_1() -> Outcome {
    let (lcs_ok, lcs) = criterion_1_lcs();
    let (sa_ok, sa) = criterion_1_suffix_array();
    outcome(lcs_ok && sa_ok, format!("ROUGE-L vs exhaustive LCS: {lcs}; suffix array vs naive scan: {sa}"))
}

// Criterion 2: preference loss and its gradient.

fn random_seq(rng: &mut ChaCha8Rng, vocab: &VocabId, len: usize) -> TokenSeq {
    let toks = (0..len).map(|_| rng.random_range(RESERVED..vocab.size)).collect();
    TokenSeq::new(toks, vocab.clone()).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng, i: usize) -> (TrainedPair, EncodedPair, f64) {
    let vocab = VocabId::new("acc", rng.random_range(RESERVED + 3..=RESERVED + 10));
    let order = rng.random_range(1..=3);
    let reference = TabularLm::new(vocab.clone(), order, i as u64, rng.random_range(0.1..1.5));
    let mut policy = reference.clone();
    let ctx_len = rng.random_range(0..=4);
    let context = random_seq(rng, &vocab, ctx_len);
    let (chosen, rejected) = loop {
        let c_len = rng.random_range(1..=5);
        let r_len = rng.random_range(1..=5);
        let c = random_seq(rng, &vocab, c_len);
        let r = random_seq(rng, &vocab, r_len);
        if c != r {
            break (c, r);
        }
    };
    // Odd instances move the policy away from the reference.
    if i % 2 == 1 {
        let keys: Vec<RowKey> = [&chosen, &rejected]
            .iter()
            .flat_map(|t| {
                let all: Vec<u32> = context.tokens().iter().chain(t.tokens()).copied().collect();
                (ctx_len..all.len()).map(|p| policy.key_for(None, &all[..p])).collect::<Vec<_>>()
            })
            .collect();
        for k in keys {
            for x in policy.row_mut(&k).iter_mut() {
                *x += rng.random_range(-0.5..0.5);
            }
        }
    }
    let tp = TrainedPair::new(policy, reference).unwrap();
    let beta = rng.random_range(0.05..2.0);
    (tp, EncodedPair { context, chosen, rejected }, beta)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ln2 = 0.0f64;
    for i in 0..20 {
        let (tp, pair, beta) = random_instance(&mut rng, 2 * i);
        let loss = dpo_loss(&tp, &pair, beta).unwrap();
        worst_ln2 = worst_ln2.max((loss - std::f64::consts::LN_2).abs());
    }
    let h = 1e-5;
    let mut worst_rel = 0.0f64;
    for i in 0..100 {
        let (mut tp, pair, beta) = random_instance(&mut rng, i);
        let grad = dpo_grad(&tp, &pair, beta).unwrap();
        let (mut diff2, mut norm2) = (0.0, 0.0);
        for (key, row) in grad.iter() {
            let key = key.clone();
            for (j, &g) in row.iter().enumerate() {
                let orig = tp.policy.row_mut(&key)[j];
                tp.policy.row_mut(&key)[j] = orig + h;
                let up = dpo_loss(&tp, &pair, beta).unwrap();
                tp.policy.row_mut(&key)[j] = orig - h;
                let down = dpo_loss(&tp, &pair, beta).unwrap();
                tp.policy.row_mut(&key)[j] = orig;
                let fd = (up - down) / (2.0 * h);
                diff2 += (g - fd).powi(2);
                norm2 += g.powi(2).max(fd.powi(2));
            }
        }
        worst_rel = worst_rel.max(if norm2 > 0.0 { (diff2 / norm2).sqrt() } else { f64::INFINITY });
    }
    outcome(
        worst_ln2 <= 1e-12 && worst_rel <= 1e-4,
        format!("|loss - ln 2| max {worst_ln2:.2e} (tol 1e-12); gradient vs central differences, worst relative error {worst_rel:.2e} over 100 instances (tol 1e-4)"),
    )
}

// Criteria 3-5 and 7: the toy experiment.

struct ToyResults {
    plain: ToyReport,
    plain_exact_memorized: usize,
    sys: ToyReport,
    sweep: Vec<ToyReport>,
    secs: f64,
}

const FRACTIONS: [f64; 3] = [1.0, 0.9, 0.5];

fn run_all_toys() -> ToyResults {
    let start = Instant::now();
    let cfg = ToyConfig::default();
    let run = run_toy(&cfg).expect("plain toy run");
    let docs: Vec<(u64, TokenSeq)> = run
        .corpus
        .docs
        .iter()
        .enumerate()
        .map(|(i, d)| (i as u64, run.corpus.encode(d)))
        .collect();
    let detection = detect_memorized(&run.pretrained, &docs, &cfg.detect).expect("detection");
    let exact: BTreeSet<u64> = detection
        .segments
        .iter()
        .filter(|s| s.rouge_f == 1.0)
        .map(|s| s.doc_id)
        .collect();
    let plain_exact_memorized = (0..cfg.num_memorized as u64).filter(|d| exact.contains(d)).count();

    let sys_cfg = ToyConfig {
        mode: PairMode::SystemPrompt,
        ..cfg.clone()
    };
    let sys = run_from_pretrained(&sys_cfg, run.corpus.clone(), run.pretrained.clone())
        .expect("sys toy run")
        .report;

    let corpus = ToyCorpus::generate(&cfg).expect("corpus");
    let pretrained = pretrain(&corpus, &cfg).expect("pretraining");
    let sweep = FRACTIONS
        .iter()
        .map(|&f| {
            let c = ToyConfig {
                paraphrase_fraction: f,
                ..cfg.clone()
            };
            run_from_pretrained(&c, corpus.clone(), pretrained.clone())
                .expect("mixture run")
                .report
        })
        .collect();
    ToyResults {
        plain: run.report,
        plain_exact_memorized,
        sys,
        sweep,
        secs: start.elapsed().as_secs_f64(),
    }
}

fn criterion_3(t: &ToyResults) -> Outcome {
    let r = &t.plain;
    let n = r.config.num_memorized;
    let detected = t.plain_exact_memorized == n;
    let nll = r.nll_delta_memorized > r.nll_delta_held_out;
    let drop = r.extraction_after <= 0.5 * r.extraction_before && r.extraction_before > 0.0;
    let margins = r.epoch_margins.first() < r.epoch_margins.last();
    outcome(
        detected && nll && drop && margins && t.secs < 300.0,
        format!(
            "{}/{n} memorized docs detected at rouge_f 1.0; NLL delta memorized {:.3} vs held-out {:.3}; extraction {:.3} -> {:.3} (relative drop {:.1}%, need >= 50%); margin epoch 1 {:.3} -> epoch {} {:.3}; all toy runs {:.1}s",
            t.plain_exact_memorized,
            r.nll_delta_memorized,
            r.nll_delta_held_out,
            r.extraction_before,
            r.extraction_after,
            100.0 * r.extraction_relative_drop,
            r.epoch_margins.first().copied().unwrap_or(f64::NAN),
            r.epoch_margins.len(),
            r.epoch_margins.last().copied().unwrap_or(f64::NAN),
            t.secs,
        ),
    )
}

fn criterion_4(t: &ToyResults) -> Outcome {
    let by = &t.sys.extraction_after_by_prompt;
    let yes = by[&SystemPromptChoice::CopyYes];
    let no = by[&SystemPromptChoice::CopyNo];
    outcome(
        no < yes,
        format!(
            "extraction with Copying: No {no:.3} < Copying: Yes {yes:.3} (no prompt {:.3}, before training {:.3})",
            by[&SystemPromptChoice::None],
            t.sys.extraction_before
        ),
    )
}

fn criterion_5(t: &ToyResults) -> Outcome {
    let reductions: Vec<f64> = t.sweep.iter().map(|r| r.extraction_before - r.extraction_after).collect();
    // FRACTIONS is descending, so reductions must be non-increasing along it.
    let monotone = reductions.windows(2).all(|w| w[0] >= w[1]);
    let cells: Vec<String> = FRACTIONS
        .iter()
        .zip(&t.sweep)
        .zip(&reductions)
        .map(|((f, r), red)| {
            format!(
                "f={f}: {} pairs + {} generic, reduction {red:.3}, memorized NLL delta {:.1}",
                r.pairs, r.generic_pairs, r.nll_delta_memorized
            )
        })
        .collect();
    outcome(monotone, format!("{} (non-decreasing in f, ties allowed)", cells.join("; ")))
}

// Criterion 6: creativity index on a hand-built fixture.

fn criterion_6() -> Outcome {
    let vocab = VocabId::new("ci", 40);
    let text: Vec<u32> = (10..22).collect();
    // Four documents holding the first four 5-grams of the text, none of its
    // 6-grams. Of the 8 five-gram positions 4 hit; every longer order misses.
    let docs: Vec<&[u32]> = (0..4).map(|i| &text[i..i + 5]).collect();
    let index = CorpusIndex::from_raw(vocab.clone(), &docs).unwrap();
    let seq = |t: &[u32]| TokenSeq::new(t.to_vec(), vocab.clone()).unwrap();
    let fixture = index.creativity_index(&seq(&text), 5, 11).unwrap();
    let expected = ((1.0 - 0.5) + 6.0 * 1.0) / 7.0;
    let per_n_ok = fixture.per_n == (5..=11).map(|n| (n, if n == 5 { 0.5 } else { 0.0 })).collect::<BTreeMap<_, _>>();

    let long: Vec<u32> = (4..20).collect();
    let contained_index = CorpusIndex::from_raw(vocab.clone(), &[&long, &[30, 31, 32]]).unwrap();
    let contained = contained_index.creativity_index(&seq(&long[2..15]), 5, 11).unwrap().ci;
    let disjoint = contained_index.creativity_index(&seq(&[33, 34, 35, 36, 37, 38, 39, 33, 34, 35, 36, 37]), 5, 11).unwrap().ci;
    outcome(
        fixture.ci == expected && per_n_ok && contained == 0.0 && disjoint == 1.0,
        format!("fixture CI {} (expected 6.5/7 = {expected}); contained text {contained}; disjoint text {disjoint}", fixture.ci),
    )
}

fn report_bytes(t: &ToyResults) -> Vec<String> {
    let mut reports = vec![("plain", &t.plain), ("sys", &t.sys)];
    reports.extend(["f1.0", "f0.9", "f0.5"].into_iter().zip(&t.sweep));
    reports
        .into_iter()
        .map(|(name, r)| {
            let manifest = Manifest {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                command: format!("acceptance-{name}"),
                invocation: Vec::new(),
                seeds: BTreeMap::from([("toy".to_string(), r.config.seed)]),
                config: serde_json::to_value(&r.config).unwrap(),
                inputs: Vec::new(),
            };
            Report::new(manifest, serde_json::to_value(r).unwrap()).to_json()
        })
        .collect()
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let t0 = Instant::now();
    let c1 = criterion_1();
    results.push((1, "metric oracles", outcome(c1.pass && t0.elapsed().as_secs() < 60, format!("{} [{:.1}s, limit 60s]", c1.detail, t0.elapsed().as_secs_f64()))));
    results.push((2, "preference loss and gradient", criterion_2()));
    let first = run_all_toys();
    results.push((3, "toy replication", criterion_3(&first)));
    results.push((4, "system-prompt control", criterion_4(&first)));
    results.push((5, "mixture trade-off", criterion_5(&first)));
    results.push((6, "creativity index", criterion_6()));
    let second = run_all_toys();
    let (a, b) = (report_bytes(&first), report_bytes(&second));
    let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    results.push((
        7,
        "determinism",
        outcome(
            same == a.len(),
            format!("{same}/{} toy reports byte-identical on rerun ({} bytes total)", a.len(), a.iter().map(String::len).sum::<usize>()),
        ),
    ));

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {n} ({name}): {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
