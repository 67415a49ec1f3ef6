use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process;

use copyguard::dpo::{
    encode_pair, mean_delta, nll_shift_report, rejected_increases, train_dpo, write_nll_csv, DpoConfig, NllShift,
    TrainedPair,
};
use copyguard::eval::{
    eval_creativity, eval_extraction, eval_quote, ExtractionSpec, QuoteItem, BASELINE_SYSTEM_PROMPT,
};
use copyguard::index::{load_corpus, read_index_file, write_index_file, CorpusFormat, CorpusIndex, IndexFile};
use copyguard::lm::{write_checkpoint, Checkpoint, GenerationConfig, MleConfig, TabularLm};
use copyguard::metrics::WordTokenizer;
use copyguard::pipeline::jsonl::{read_jsonl, write_jsonl};
use copyguard::pipeline::{
    build_pairs, compose_mixture, detect_memorized, generic_pairs, paraphrase_all, DetectConfig, MixtureSpec,
    PairSource, Paraphrase, PipelineError, PreferencePair, SegmentRecord, StubParaphraser, COPY_NO, COPY_YES,
};
use copyguard::report::{consolidate, sha256_file, Report, SUMMARY_STEM};
use copyguard::toy::{pretrain, run_from_pretrained, run_toy, ToyConfig, ToyCorpus, ToyReport, ToyRun};
use copyguard::vocab::UNK;
use copyguard::{TokenSeq, Vocab};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::args::*;
use crate::failure::{Context, Failure};
use crate::model::{client, load_checkpoint, LoadedModel};
use crate::output::{Output, TOOL_VERSION};

const STORY_PROMPTS: &str = include_str!("../prompts/story.txt");
const POEM_PROMPTS: &str = include_str!("../prompts/poem.txt");
const SPEECH_PROMPTS: &str = include_str!("../prompts/speech.txt");

fn texts(path: &Path) -> Result<Vec<String>, Failure> {
    load_corpus(path, CorpusFormat::from_path(path)).ctx(format!("reading {}", path.display()))
}

fn jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    let file = File::open(path).ctx(format!("opening {}", path.display()))?;
    read_jsonl(BufReader::new(file)).ctx(format!("reading {}", path.display()))
}

fn nonempty<T>(items: Vec<T>, path: &Path, what: &str) -> Result<Vec<T>, Failure> {
    if items.is_empty() {
        return Err(Failure::data(format!("{} contains no {what}", path.display())));
    }
    Ok(items)
}

fn corpus_vocab(name: &str, texts: &[String]) -> Vocab {
    Vocab::build(name, &WordTokenizer::default(), texts.iter().map(String::as_str), &[])
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn index_build(a: &IndexBuildArgs, inv: &[String]) -> Result<(), Failure> {
    let out = Output::new(&a.out, "index", "index-build", inv);
    let mut docs = Vec::new();
    for path in &a.corpus {
        docs.extend(texts(path)?);
    }
    if docs.is_empty() {
        return Err(Failure::data("corpus contains no documents"));
    }
    let tok = WordTokenizer::default();
    let vocab = corpus_vocab("corpus", &docs);
    let seqs: Vec<TokenSeq> = docs.iter().map(|d| vocab.encode(&tok, d)).collect();
    let index = CorpusIndex::build(vocab.id(), &seqs)?;
    let results = json!({
        "index": "index.cgix",
        "documents": index.num_docs(),
        "tokens": seqs.iter().map(TokenSeq::len).sum::<usize>(),
        "vocab_size": vocab.len(),
    });
    out.create("index.cgix")?;
    write_index_file(&out.path("index.cgix"), &IndexFile { index, vocab: Some(vocab) })?;
    let inputs: Vec<&Path> = a.corpus.iter().map(PathBuf::as_path).collect();
    out.report(a, &[], &inputs, &results)?;
    Ok(())
}

pub fn pretrain_cmd(a: &PretrainArgs, inv: &[String]) -> Result<(), Failure> {
    if a.order == 0 {
        return Err(Failure::usage("--order must be at least 1"));
    }
    let out = Output::new(&a.out, "pretrain", "pretrain", inv);
    let docs = nonempty(texts(&a.corpus)?, &a.corpus, "documents")?;
    let mut all = docs.clone();
    for p in &a.vocab_extra {
        all.extend(texts(p)?);
    }
    let tok = WordTokenizer::default();
    let vocab = Vocab::build(
        "model",
        &tok,
        all.iter().map(String::as_str),
        &[COPY_YES, COPY_NO, BASELINE_SYSTEM_PROMPT],
    );
    let seqs: Vec<TokenSeq> = docs.iter().map(|d| vocab.encode(&tok, d)).collect();
    let mut model = TabularLm::new(vocab.id(), a.order, a.seed, a.init_scale);
    let epoch_nll = model.fit_sequences(
        &seqs,
        &MleConfig {
            epochs: a.epochs,
            learning_rate: a.lr,
        },
    )?;
    let results = json!({
        "checkpoint": "model.ckpt",
        "documents": docs.len(),
        "vocab_size": vocab.len(),
        "rows": model.rows().len(),
        "epoch_nll": epoch_nll,
    });
    out.create("model.ckpt")?;
    write_checkpoint(&out.path("model.ckpt"), &Checkpoint { model, vocab: Some(vocab) })?;
    let mut inputs = vec![a.corpus.as_path()];
    inputs.extend(a.vocab_extra.iter().map(PathBuf::as_path));
    out.report(a, &[("init", a.seed)], &inputs, &results)?;
    Ok(())
}

pub fn detect(a: &DetectArgs, inv: &[String]) -> Result<(), Failure> {
    let out = Output::new(&a.out, "detect", "detect", inv);
    let docs = nonempty(texts(&a.corpus)?, &a.corpus, "documents")?;
    let model = LoadedModel::load(&a.model, || corpus_vocab("corpus", &docs))?;
    let tok = WordTokenizer::default();
    let vocab = model.vocab();
    let encoded: Vec<(u64, TokenSeq)> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (i as u64, vocab.encode(&tok, d)))
        .collect();
    let cfg = DetectConfig {
        prefix_len: a.prefix_len,
        cont_len: a.cont_len,
        top_k: a.top_k,
        min_rouge: (!a.no_min_rouge).then_some(a.min_rouge),
    };
    let det = detect_memorized(model.lm(), &encoded, &cfg)?;
    let records: Vec<SegmentRecord> = det.segments.iter().map(|s| s.to_record(vocab)).collect();
    out.write_with("segments.jsonl", |w| {
        write_jsonl(w, &records).map_err(std::io::Error::other)
    })?;
    let results = json!({
        "segments_file": "segments.jsonl",
        "documents": docs.len(),
        "detected": records.len(),
        "exact": records.iter().filter(|r| r.rouge_f == 1.0).count(),
        "mean_rouge_f": mean(records.iter().map(|r| r.rouge_f)),
        "skipped_short": det.skipped_short,
        "failures": det.failures.iter().map(|f| json!({"doc_id": f.doc_id, "message": f.message})).collect::<Vec<_>>(),
    });
    out.report(a, &[], &[&a.corpus], &results)?;
    Ok(())
}

pub fn build_dataset(a: &BuildDatasetArgs, inv: &[String]) -> Result<(), Failure> {
    let out = Output::new(&a.out, "dataset", "build-dataset", inv);
    let records: Vec<SegmentRecord> = nonempty(jsonl(&a.segments)?, &a.segments, "segments")?;
    let segments: Vec<String> = records.iter().map(|r| r.text.clone()).collect();
    let mut inputs = vec![a.segments.as_path()];
    let gen = GenerationConfig::paraphrasing(0, a.seed);
    let gen = GenerationConfig {
        temperature: a.temperature.unwrap_or(gen.temperature),
        top_p: a.top_p.unwrap_or(gen.top_p),
        ..gen
    };
    let collect = |rs: Vec<Result<Paraphrase, PipelineError>>| -> Result<Vec<Paraphrase>, Failure> {
        rs.into_iter()
            .enumerate()
            .map(|(i, r)| r.ctx(format!("paraphrasing segment {i}")))
            .collect()
    };
    let (paraphrases, source) = if let Some(path) = &a.paraphrases {
        inputs.push(path);
        let lines = texts(path)?;
        (lines, "file")
    } else if a.remote.endpoint.is_some() {
        let ps = collect(paraphrase_all(&client(&a.remote)?, &segments, &gen))?;
        (ps.into_iter().map(|p| p.text).collect(), "endpoint")
    } else {
        let stub = match &a.synonyms {
            Some(path) => {
                inputs.push(path);
                let raw = fs::read_to_string(path).ctx(format!("reading {}", path.display()))?;
                StubParaphraser::new(serde_json::from_str(&raw).ctx(format!("parsing {}", path.display()))?)
            }
            None => StubParaphraser::english(),
        };
        let ps = collect(paraphrase_all(&stub, &segments, &gen))?;
        (ps.into_iter().map(|p| p.text).collect(), "stub")
    };
    let identical = paraphrases
        .iter()
        .zip(&segments)
        .filter(|(p, s)| p.trim() == s.trim())
        .count();
    let pairs = build_pairs(&records, &paraphrases, a.mode.into(), a.seed)?;
    let generic = match &a.generic {
        Some(path) => {
            inputs.push(path);
            let file = File::open(path).ctx(format!("opening {}", path.display()))?;
            generic_pairs(BufReader::new(file)).ctx(format!("reading {}", path.display()))?
        }
        None => Vec::new(),
    };
    let dataset = compose_mixture(
        &pairs,
        &generic,
        &MixtureSpec {
            paraphrase_fraction: a.mix_fraction,
            seed: a.seed,
        },
    )?;
    out.write_with("pairs.jsonl", |w| write_jsonl(w, &dataset).map_err(std::io::Error::other))?;
    let count = |s: PairSource| dataset.iter().filter(|p| p.source == s).count();
    let results = json!({
        "pairs_file": "pairs.jsonl",
        "segments": records.len(),
        "paraphrase_source": source,
        "identical_paraphrases": identical,
        "paraphrase_pairs": count(PairSource::ParaphrasePair),
        "generic_pairs": count(PairSource::GenericPreference),
    });
    out.report(a, &[("pairs", a.seed), ("paraphrase", a.seed)], &inputs, &results)?;
    Ok(())
}

pub fn train(a: &TrainArgs, inv: &[String]) -> Result<(), Failure> {
    let out = Output::new(&a.out, "train", "train", inv);
    let (model, vocab) = load_checkpoint(&a.model)?;
    let pairs: Vec<PreferencePair> = nonempty(jsonl(&a.pairs)?, &a.pairs, "pairs")?;
    let tok = WordTokenizer::default();
    let encoded: Vec<_> = pairs.iter().map(|p| encode_pair(p, &vocab, &tok)).collect();
    let unknown: usize = encoded
        .iter()
        .flat_map(|e| e.chosen.tokens().iter().chain(e.rejected.tokens()))
        .filter(|&&t| t == UNK)
        .count();
    if unknown > 0 {
        log::warn!("{unknown} pair tokens are outside the model vocabulary");
    }
    let cfg = DpoConfig {
        beta: a.beta,
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
    };
    let mut tp = TrainedPair::from_model(model);
    let log = train_dpo(&mut tp, &encoded, &cfg)?;
    let increases = rejected_increases(&tp, &encoded)?;
    out.write_with("train_log.csv", |w| log.write_csv(w))?;
    out.create("model.ckpt")?;
    write_checkpoint(
        &out.path("model.ckpt"),
        &Checkpoint {
            model: tp.policy,
            vocab: Some(vocab),
        },
    )?;
    let results = json!({
        "checkpoint": "model.ckpt",
        "log": "train_log.csv",
        "pairs": encoded.len(),
        "steps": log.steps.len(),
        "unknown_tokens": unknown,
        "epoch_losses": log.epoch_losses(),
        "epoch_margins": log.epoch_margins(),
        "rejected_increases": increases,
    });
    out.report(a, &[("shuffle", a.seed)], &[&a.model, &a.pairs], &results)?;
    Ok(())
}

pub fn eval_extraction_cmd(a: &EvalExtractionArgs, inv: &[String]) -> Result<(), Failure> {
    let out = Output::new(&a.out, "extraction", "eval-extraction", inv);
    let snippets = nonempty(texts(&a.corpus)?, &a.corpus, "snippets")?;
    let base = ExtractionSpec::from(a.preset);
    let spec = ExtractionSpec {
        prefix_len: a.prefix_len.unwrap_or(base.prefix_len),
        cont_len: a.cont_len.unwrap_or(base.cont_len),
    };
    let model = LoadedModel::load(&a.model, || corpus_vocab("snippets", &snippets))?;
    let tok = WordTokenizer::default();
    let words: Vec<_> = snippets.iter().map(|s| tok.tokenize(s)).collect();
    let cfg = a.generation.resolve(GenerationConfig::greedy(spec.cont_len));
    let report = eval_extraction(&model, &words, spec, a.system_prompt.into(), &cfg)?;
    out.report(a, &[("generation", cfg.seed)], &[&a.corpus], &report)?;
    Ok(())
}

pub fn eval_creativity_cmd(a: &EvalCreativityArgs, inv: &[String]) -> Result<(), Failure> {
    let out = Output::new(&a.out, "creativity", "eval-creativity", inv);
    let file = read_index_file(&a.index).ctx(format!("reading index {}", a.index.display()))?;
    let vocab = file
        .vocab
        .ok_or_else(|| Failure::data(format!("index {} carries no word table", a.index.display())))?;
    let mut inputs = vec![a.index.as_path()];
    let prompts: Vec<String> = match &a.prompts {
        Some(path) => {
            inputs.push(path);
            nonempty(texts(path)?, path, "prompts")?
        }
        None => match a.task {
            Task::Story => STORY_PROMPTS,
            Task::Poem => POEM_PROMPTS,
            Task::Speech => SPEECH_PROMPTS,
        }
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect(),
    };
    let model = LoadedModel::load(&a.model, || vocab.clone())?;
    let cfg = a.generation.resolve(GenerationConfig::creative(100, 0));
    let report = eval_creativity(
        &model,
        &prompts,
        &file.index,
        &vocab,
        &WordTokenizer::default(),
        a.system_prompt.into(),
        &cfg,
    )?;
    out.report(a, &[("generation", cfg.seed)], &inputs, &report)?;
    Ok(())
}

pub fn eval_quote_cmd(a: &EvalQuoteArgs, inv: &[String]) -> Result<(), Failure> {
    let out = Output::new(&a.out, "quote", "eval-quote", inv);
    let items: Vec<QuoteItem> = nonempty(jsonl(&a.corpus)?, &a.corpus, "items")?;
    let tok = WordTokenizer::default();
    let model = LoadedModel::load(&a.model, || {
        let texts: Vec<String> = items.iter().map(|i| i.text.clone()).collect();
        corpus_vocab("quotes", &texts)
    })?;
    let cfg = a.generation.resolve(GenerationConfig::greedy(100));
    let report = eval_quote(&model, &items, a.template.into(), &tok, a.system_prompt.into(), &cfg)?;
    out.report(a, &[("generation", cfg.seed)], &[&a.corpus], &report)?;
    Ok(())
}

pub fn nll_shift(a: &NllShiftArgs, inv: &[String]) -> Result<(), Failure> {
    let out = Output::new(&a.out, "nll_shift", "nll-shift", inv);
    let (before, vocab) = load_checkpoint(&a.before)?;
    let (after, after_vocab) = load_checkpoint(&a.after)?;
    if after_vocab.id() != vocab.id() {
        return Err(Failure::data("checkpoints use different vocabularies"));
    }
    let tok = WordTokenizer::default();
    let encode = |path: &Path| -> Result<Vec<TokenSeq>, Failure> {
        let seqs: Vec<TokenSeq> = nonempty(texts(path)?, path, "snippets")?
            .iter()
            .map(|t| {
                let s = vocab.encode(&tok, t);
                match a.window {
                    Some(n) if n < s.len() => s.slice(0..n),
                    _ => s,
                }
            })
            .filter(|s| !s.is_empty())
            .collect();
        Ok(seqs)
    };
    let mut groups: Vec<(&str, Vec<NllShift>)> = vec![("memorized", nll_shift_report(&before, &after, &encode(&a.corpus)?)?)];
    let mut inputs = vec![a.before.as_path(), a.after.as_path(), a.corpus.as_path()];
    if let Some(path) = &a.held_out {
        groups.push(("held_out", nll_shift_report(&before, &after, &encode(path)?)?));
        inputs.push(path);
    }
    let borrowed: Vec<(&str, &[NllShift])> = groups.iter().map(|(g, r)| (*g, r.as_slice())).collect();
    out.write_with("nll_shift.csv", |w| write_nll_csv(w, &borrowed))?;
    let summary: BTreeMap<&str, serde_json::Value> = groups
        .iter()
        .map(|(g, r)| (*g, json!({"snippets": r.len(), "mean_delta": mean_delta(r)})))
        .collect();
    out.report(a, &[], &inputs, &json!({"csv": "nll_shift.csv", "groups": summary}))?;
    Ok(())
}

fn toy_config(a: &ToyArgs) -> Result<ToyConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => {
            let raw = fs::read_to_string(path).ctx(format!("reading {}", path.display()))?;
            serde_json::from_str(&raw).ctx(format!("parsing {}", path.display()))?
        }
        None => ToyConfig::default(),
    };
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.mode {
        cfg.mode = v.into();
    }
    if let Some(v) = a.mix_fraction {
        cfg.paraphrase_fraction = v;
    }
    if let Some(v) = a.beta {
        cfg.dpo.beta = v;
    }
    if let Some(v) = a.epochs {
        cfg.dpo.epochs = v;
    }
    if let Some(v) = a.lr {
        cfg.dpo.learning_rate = v;
    }
    if let Some(v) = a.prefix_len {
        cfg.detect.prefix_len = v;
    }
    if let Some(v) = a.cont_len {
        cfg.detect.cont_len = v;
    }
    if let Some(v) = a.top_k {
        cfg.detect.top_k = v;
    }
    Ok(cfg)
}

fn write_lines(out: &Output, name: &str, lines: &[String]) -> Result<(), Failure> {
    out.write_with(name, |w| lines.iter().try_for_each(|l| writeln!(w, "{l}")))
}

fn write_toy_artifacts(out: &Output, run: &ToyRun) -> Result<(), Failure> {
    let c = &run.corpus;
    write_lines(out, "corpus.txt", &c.docs)?;
    write_lines(out, "memorized.txt", c.memorized())?;
    write_lines(out, "held_out.txt", c.held_out())?;
    out.write_with("synonyms.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &c.synonyms)?;
        writeln!(w)
    })?;
    let generic: Vec<_> = c
        .generic
        .iter()
        .map(|p| json!({"chosen": p.chosen, "rejected": p.rejected}))
        .collect();
    out.write_with("generic.jsonl", |w| write_jsonl(w, &generic).map_err(std::io::Error::other))?;
    out.write_with("pairs.jsonl", |w| write_jsonl(w, &run.dataset).map_err(std::io::Error::other))?;
    out.write_with("train_log.csv", |w| run.log.write_csv(w))?;
    out.write_with("nll_shift.csv", |w| {
        write_nll_csv(w, &[("memorized", &run.nll_memorized), ("held_out", &run.nll_held_out)])
    })?;
    for (name, model) in [("pretrained.ckpt", &run.pretrained), ("tuned.ckpt", &run.tuned)] {
        write_checkpoint(
            &out.path(name),
            &Checkpoint {
                model: model.clone(),
                vocab: Some(c.vocab.clone()),
            },
        )
        .ctx(format!("writing {name}"))?;
    }
    Ok(())
}

fn tradeoff_csv(out: &Output, reports: &[ToyReport]) -> Result<(), Failure> {
    out.write_with("tradeoff.csv", |w| {
        writeln!(
            w,
            "paraphrase_fraction,pairs,generic_pairs,extraction_before,extraction_after,reduction,nll_delta_memorized,nll_delta_held_out"
        )?;
        for r in reports {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.config.paraphrase_fraction,
                r.pairs,
                r.generic_pairs,
                r.extraction_before,
                r.extraction_after,
                r.extraction_before - r.extraction_after,
                r.nll_delta_memorized,
                r.nll_delta_held_out
            )?;
        }
        Ok(())
    })
}

pub fn toy(a: &ToyArgs, inv: &[String]) -> Result<(), Failure> {
    let out = Output::new(&a.out, "toy", "toy", inv);
    let cfg = toy_config(a)?;
    let inputs: Vec<&Path> = a.config.iter().map(PathBuf::as_path).collect();
    let seeds = [("toy", cfg.seed), ("shuffle", cfg.dpo.seed)];
    if a.sweep.is_empty() {
        let run = run_toy(&cfg)?;
        write_toy_artifacts(&out, &run)?;
        out.report(&cfg, &seeds, &inputs, &run.report)?;
        return Ok(());
    }
    let corpus = ToyCorpus::generate(&cfg)?;
    let pretrained = pretrain(&corpus, &cfg)?;
    let mut reports = Vec::with_capacity(a.sweep.len());
    for &f in &a.sweep {
        let variant = ToyConfig {
            paraphrase_fraction: f,
            ..cfg.clone()
        };
        reports.push(run_from_pretrained(&variant, corpus.clone(), pretrained.clone())?.report);
    }
    tradeoff_csv(&out, &reports)?;
    let config = json!({"base": cfg, "sweep": a.sweep});
    out.report(&config, &seeds, &inputs, &json!({"tradeoff": "tradeoff.csv", "runs": reports}))?;
    Ok(())
}

pub fn report(a: &ReportArgs) -> Result<(), Failure> {
    let summary = consolidate(&a.out, TOOL_VERSION).ctx(format!("reading reports in {}", a.out.display()))?;
    if summary.results.as_object().is_none_or(|m| m.is_empty()) {
        return Err(Failure::data(format!("no reports found in {}", a.out.display())));
    }
    summary.write(&a.out, SUMMARY_STEM)?;
    println!("wrote {}", a.out.join(format!("{SUMMARY_STEM}.json")).display());
    Ok(())
}

/// Reruns the recorded invocation into a fresh directory, then compares
/// every regenerated file with its namesake next to the original report.
pub fn replay(a: &ReplayArgs) -> Result<(), Failure> {
    let raw = fs::read_to_string(&a.report).ctx(format!("reading {}", a.report.display()))?;
    let report = Report::from_json(&raw).ctx(format!("parsing {}", a.report.display()))?;
    let m = &report.manifest;
    if m.invocation.is_empty() {
        return Err(Failure::data("the report records no invocation to replay"));
    }
    for input in &m.inputs {
        let now = sha256_file(Path::new(&input.path)).ctx(format!("hashing {}", input.path))?;
        if now != input.sha256 {
            return Err(Failure::data(format!("input {} changed since the report was written", input.path)));
        }
    }
    let (dir, _guard) = match &a.out {
        Some(d) => (d.clone(), None),
        None => {
            let t = tempfile::tempdir().ctx("creating a temporary directory")?;
            (t.path().to_path_buf(), Some(t))
        }
    };
    let exe = std::env::current_exe().ctx("locating the executable")?;
    let status = process::Command::new(exe)
        .args(&m.invocation)
        .arg("--out")
        .arg(&dir)
        .stdout(process::Stdio::null())
        .status()
        .ctx("running the recorded invocation")?;
    if !status.success() {
        return Err(Failure::data(format!("replayed command failed with {status}")));
    }
    let original_dir = a.report.parent().unwrap_or(Path::new("."));
    let mut compared = 0;
    let mut differing = Vec::new();
    let mut names: Vec<_> = fs::read_dir(&dir)?
        .map(|e| e.map(|e| e.file_name()))
        .collect::<Result<_, _>>()?;
    names.sort();
    for name in names {
        let original = original_dir.join(&name);
        if !original.is_file() {
            continue;
        }
        compared += 1;
        if fs::read(&original)? != fs::read(dir.join(&name))? {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    if !differing.is_empty() {
        return Err(Failure::data(format!("replay differs in: {}", differing.join(", "))));
    }
    println!("replay identical: {compared} files compared");
    Ok(())
}
