use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Deserialize;

use super::config::{ConfigFile, Overrides, RunConfig};
use super::*;
use crate::cohesion::{register_utilities, ContentWordFilter, SynonymLexicon};
use crate::decoding::{
    select, synth_pool, NoiseModel, SamplerConfig, SelectionRecord, UtilityContext, UtilityFunction,
};
use crate::error::Error;
use crate::evaluation::{
    edit_rate_analysis, evaluate_system, human_overlap, join_texts, preference_summary, to_canonical_json,
    EvalReport,
};
use crate::model::{
    load_alignments, load_annotations, load_candidate_pools, load_corpus, load_jsonl, to_jsonl_string,
    validate_experiment, Document, SentenceKey,
};
use crate::scorer::{cached_utility, MockBehavior, MockScorer, ScoreCache, ScorerClient};
use crate::tagger::{load_tags, tag_corpus, Lexicon, LexiconSet, TaggerOptions};

pub(super) fn dispatch(command: Command, file: ConfigFile) -> Result<()> {
    match command {
        Command::Tag(a) => tag(a, file),
        Command::Decode(a) => decode(a, file),
        Command::Evaluate(a) => evaluate(a, file),
        Command::EditRate(a) => edit_rate(a, file),
        Command::Overlap(a) => overlap(a, file),
        Command::Preferences(a) => preferences(a),
        Command::Synth(a) => synth(a, file),
        Command::Report(a) => report(a),
        Command::Validate(a) => validate(a),
        Command::MockScorer(a) => mock_scorer(a),
    }
}

fn write_output(out: &OutArg, content: &str) -> Result<()> {
    match &out.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(path, content).map_err(|e| Error::io(path, e))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}

/// Any JSONL record with `doc_id`, `index` and `text` (selection files
/// qualify); other fields are ignored.
#[derive(Deserialize)]
struct TextRecord {
    doc_id: String,
    index: usize,
    text: String,
}

fn load_texts(path: &Path) -> Result<BTreeMap<SentenceKey, String>> {
    let mut map = BTreeMap::new();
    for (line, r) in load_jsonl::<TextRecord>(path)? {
        let key = SentenceKey::new(r.doc_id, r.index);
        if map.contains_key(&key) {
            return Err(Error::Parse { path: path.to_path_buf(), line, message: format!("duplicate text for {key}") });
        }
        map.insert(key, r.text);
    }
    Ok(map)
}

/// Texts in corpus order; every corpus sentence needs exactly one text.
fn corpus_ordered<'a>(corpus: &[Document], texts: &'a BTreeMap<SentenceKey, String>, what: &str) -> Result<Vec<&'a str>> {
    let keys: Vec<SentenceKey> = corpus.iter().flat_map(|d| d.keys()).collect();
    let known: BTreeSet<&SentenceKey> = keys.iter().collect();
    if let Some(extra) = texts.keys().find(|k| !known.contains(k)) {
        return Err(Error::Validation(format!("{what} contain {extra}, which is not in the corpus")));
    }
    keys.iter()
        .map(|k| texts.get(k).map(String::as_str).ok_or_else(|| Error::Validation(format!("{what} lack {k}"))))
        .collect()
}

fn tag(a: TagArgs, file: ConfigFile) -> Result<()> {
    let cfg = RunConfig::resolve(file, Overrides { repetition_threshold: a.threshold, ..Default::default() })?;
    let corpus = load_corpus(&a.corpus)?;
    let lexicons = match &a.lexicon {
        Some(path) => LexiconSet::Single(Lexicon::load(path)?),
        None => LexiconSet::builtin_for(&corpus)?,
    };
    let alignments = a.alignments.as_deref().map(load_alignments).transpose()?;
    let texts = match (a.side, &a.hypotheses) {
        (Side::Hypothesis, None) => {
            return Err(Error::InvalidArgument("--side hypothesis needs --hypotheses".into()))
        }
        (Side::Reference, Some(_)) => {
            return Err(Error::InvalidArgument("--hypotheses only applies to --side hypothesis".into()))
        }
        (Side::Hypothesis, Some(path)) => {
            let texts = load_texts(path)?;
            corpus_ordered(&corpus, &texts, "hypotheses")?;
            Some(texts.into_iter().collect::<HashMap<_, _>>())
        }
        (Side::Reference, None) => None,
    };
    let options = TaggerOptions { threshold: cfg.repetition_threshold };
    let tagged = tag_corpus(&corpus, a.side, texts.as_ref(), &lexicons, alignments.as_deref(), &options)?;
    write_output(&a.out, &to_jsonl_string(&tagged)?)
}

fn content_filter(stopwords: Option<&str>) -> Result<ContentWordFilter> {
    match stopwords {
        None => Ok(ContentWordFilter::empty()),
        Some(s) => match ContentWordFilter::builtin(s) {
            Some(f) if !Path::new(s).exists() => Ok(f),
            _ => ContentWordFilter::load(Path::new(s)),
        },
    }
}

fn decode(a: DecodeArgs, file: ConfigFile) -> Result<()> {
    let cfg = RunConfig::resolve(
        file,
        Overrides {
            utility: a.utility.clone(),
            include_self: a.include_self,
            context_window: a.context_window,
            scorer_cache: a.scorer_cache.clone(),
            ..Default::default()
        },
    )?;
    let pools = load_candidate_pools(&a.pools)?;
    let corpus = a.corpus.as_deref().map(load_corpus).transpose()?;

    let utility: Option<UtilityFunction> = if a.method == Method::Mbr {
        let filter = content_filter(a.stopwords.as_deref())?;
        let synonyms = a.synonyms.as_deref().map(SynonymLexicon::load).transpose()?;
        let mut externals = Vec::new();
        if cfg.utility.starts_with("external:") {
            let cache = Arc::new(match &cfg.scorer_cache {
                Some(path) => ScoreCache::open(path),
                None => ScoreCache::in_memory(),
            });
            for endpoint in &cfg.scorers {
                let client = Arc::new(ScorerClient::new(endpoint.clone())?);
                externals.push((endpoint.name.clone(), cached_utility(client, cache.clone())));
            }
        }
        let registry = register_utilities(&cfg.metrics, filter, synonyms, externals)?;
        Some(registry.get(&cfg.utility)?)
    } else {
        None
    };

    // source sentence and preceding sources for every corpus sentence
    let mut sources: HashMap<SentenceKey, (String, Vec<String>)> = HashMap::new();
    for doc in corpus.iter().flatten() {
        for (k, pair) in doc.pairs.iter().enumerate() {
            let start = k.saturating_sub(cfg.context_window);
            let context = doc.pairs[start..k].iter().map(|p| p.source.clone()).collect();
            sources.insert(doc.key(pair.index), (pair.source.clone(), context));
        }
    }
    if corpus.is_some() {
        if let Some(pool) = pools.iter().find(|p| !sources.contains_key(&p.key())) {
            return Err(Error::Validation(format!("pool {} has no corpus sentence", pool.key())));
        }
    }

    let records: Vec<SelectionRecord> = pools
        .par_iter()
        .map(|pool| {
            let side = sources.get(&pool.key());
            let ctx = UtilityContext {
                source: side.map(|s| s.0.as_str()),
                context: side.map(|s| s.1.as_slice()),
            };
            let result = select(pool, a.method, utility.as_deref(), cfg.include_self, &ctx)
                .map_err(|e| with_key(&pool.key(), e))?;
            Ok(SelectionRecord::new(pool, &result))
        })
        .collect::<Result<_>>()?;
    write_output(&a.out, &to_jsonl_string(&records)?)
}

fn with_key(key: &SentenceKey, e: Error) -> Error {
    match e {
        Error::Validation(m) => Error::Validation(format!("{key}: {m}")),
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{key}: {m}")),
        other => other,
    }
}

fn evaluate(a: EvaluateArgs, file: ConfigFile) -> Result<()> {
    let cfg = RunConfig::resolve(
        file,
        Overrides { aggregation: a.aggregation, include_ambiguous: a.include_ambiguous, ..Default::default() },
    )?;
    let corpus = load_corpus(&a.corpus)?;
    let hyp_texts = load_texts(&a.hypotheses)?;
    let hypotheses = corpus_ordered(&corpus, &hyp_texts, "hypotheses")?;
    let ref_tags = load_tags(&a.ref_tags)?;
    let hyp_tags = load_tags(&a.hyp_tags)?;
    let system = a.system.clone().unwrap_or_else(|| {
        a.hypotheses.file_stem().map_or_else(|| "system".to_string(), |s| s.to_string_lossy().into_owned())
    });
    let mut report =
        evaluate_system(&system, &corpus, &hypotheses, &ref_tags, &hyp_tags, &cfg.metrics, cfg.include_ambiguous)?;
    report.meta.context_window = Some(cfg.context_window);
    if let Some(path) = &a.baseline {
        let baseline = load_texts(path)?;
        corpus_ordered(&corpus, &baseline, "baseline outputs")?;
        let pairs = join_texts(&baseline, &hyp_texts)?;
        report.edit_rate = Some(edit_rate_analysis(
            &pairs,
            &ref_tags,
            &BTreeSet::new(),
            cfg.aggregation,
            cfg.include_ambiguous,
            &cfg.metrics,
        )?);
    }
    if let Some(md) = &a.markdown {
        write_output(&OutArg { out: Some(md.clone()) }, &report.to_markdown())?;
    }
    write_output(&a.out, &report.to_canonical_json()?)
}

fn edit_rate(a: EditRateArgs, file: ConfigFile) -> Result<()> {
    let cfg = RunConfig::resolve(
        file,
        Overrides { aggregation: a.aggregation, include_ambiguous: a.include_ambiguous, ..Default::default() },
    )?;
    let baseline = load_texts(&a.baseline)?;
    let system = load_texts(&a.system)?;
    let pairs = join_texts(&baseline, &system)?;
    let tags = load_tags(&a.ref_tags)?;
    let filter: BTreeSet<_> = a.phenomena.iter().copied().collect();
    let summary = edit_rate_analysis(&pairs, &tags, &filter, cfg.aggregation, cfg.include_ambiguous, &cfg.metrics)?;
    write_output(&a.out, &to_canonical_json(&summary)?)
}

fn overlap(a: OverlapArgs, file: ConfigFile) -> Result<()> {
    let cfg = RunConfig::resolve(file, Overrides { include_ambiguous: a.include_ambiguous, ..Default::default() })?;
    let tags = load_tags(&a.tags)?;
    let annotations = load_annotations(&a.annotations)?;
    let report = human_overlap(&tags, &annotations, cfg.include_ambiguous);
    if report.unjoined > 0 {
        log::warn!("{} annotations have no tagged sentence", report.unjoined);
    }
    let text = if a.markdown { report.to_markdown() } else { to_canonical_json(&report)? };
    write_output(&a.out, &text)
}

fn preferences(a: PreferencesArgs) -> Result<()> {
    let summary = preference_summary(&load_annotations(&a.annotations)?)?;
    let text = if a.markdown { summary.to_markdown() } else { to_canonical_json(&summary)? };
    write_output(&a.out, &text)
}

fn synth(a: SynthArgs, file: ConfigFile) -> Result<()> {
    let cfg = RunConfig::resolve(
        file,
        Overrides { num_samples: a.num_samples, nucleus_p: a.nucleus_p, seed: a.seed, ..Default::default() },
    )?;
    let sampler = SamplerConfig { num_samples: cfg.num_samples, nucleus_p: cfg.nucleus_p, seed: cfg.seed };
    sampler.validate()?;
    let noise = match &a.noise {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            NoiseModel::from_toml(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?
        }
        None => NoiseModel::builtin_default(),
    };
    let corpus = load_corpus(&a.corpus)?;
    let sentences: Vec<(SentenceKey, &str)> = corpus
        .iter()
        .flat_map(|d| d.pairs.iter().map(move |p| (d.key(p.index), p.reference.as_str())))
        .collect();
    let pools: Vec<_> = sentences
        .par_iter()
        .map(|(key, reference)| synth_pool(key, reference, &sampler, &noise))
        .collect::<Result<_>>()?;
    let records: Vec<crate::model::PoolRecord> = pools.iter().map(Into::into).collect();
    write_output(&a.out, &to_jsonl_string(&records)?)
}

fn report(a: ReportArgs) -> Result<()> {
    let mut reports = Vec::new();
    for path in &a.reports {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: EvalReport = serde_json::from_str(&text)
            .map_err(|e| Error::Parse { path: path.clone(), line: e.line(), message: e.to_string() })?;
        reports.push(r);
    }
    let text = if a.markdown { markdown_table(&reports) } else { to_canonical_json(&reports)? };
    write_output(&a.out, &text)
}

/// One row per system: corpus BLEU and chrF, then F1 per phenomenon.
pub(crate) fn markdown_table(reports: &[EvalReport]) -> String {
    let phenomena: Vec<_> = crate::model::Phenomenon::ALL.to_vec();
    let mut s = String::from("| system | BLEU | chrF |");
    for p in &phenomena {
        let _ = write!(s, " {p} F1 |");
    }
    s.push_str("\n|---|---:|---:|");
    s.push_str(&"---:|".repeat(phenomena.len()));
    s.push('\n');
    for r in reports {
        let _ = write!(s, "| {} | {:.2} | {:.2} |", r.system, r.translation.bleu, r.translation.chrf);
        for p in &phenomena {
            match r.phenomena.iter().find(|x| x.phenomenon == *p) {
                Some(x) if x.vacuous => s.push_str(" – |"),
                Some(x) => {
                    let _ = write!(s, " {:.4} |", x.f1);
                }
                None => s.push_str(" |"),
            }
        }
        s.push('\n');
    }
    s
}

fn validate(a: ValidateArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let pools = a.pools.as_deref().map(load_candidate_pools).transpose()?.unwrap_or_default();
    let alignments = a.alignments.as_deref().map(load_alignments).transpose()?;
    if let Some(path) = &a.annotations {
        load_annotations(path)?;
    }
    let report = validate_experiment(&corpus, &pools, alignments.as_deref());
    write_output(&a.out, &to_canonical_json(&report)?)?;
    if report.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{} problems found", report.findings.len())))
    }
}

fn mock_scorer(a: MockScorerArgs) -> Result<()> {
    let behavior = match a.fixed {
        Some(v) if v.is_finite() => MockBehavior::Fixed(v),
        Some(v) => return Err(Error::InvalidArgument(format!("--fixed {v} is not finite"))),
        None => MockBehavior::Hash,
    };
    let server = MockScorer::bind(&a.addr, behavior)?;
    println!("mock scorer listening on {}", server.url());
    server.wait();
    Ok(())
}

