use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use thinktank_core::aggregation::forecast as leader_forecast;
use thinktank_core::dataset::{
    generate_synthetic_corpus, ingest_path, prepare_dataset, write_events, CandidatePools, DatasetError,
    EntityRegistry, EventStore, SourceFormat,
};
use thinktank_core::evaluation::{
    k_sweep, mean_curve, mean_sweep_csv, report_csv, run_strategy_eval, sweep_csv, EvaluationReport, KSweepCurve,
};
use thinktank_core::experts::{draw_key_for, ExpertContext, ExpertPanel, PanelConfig};
use thinktank_core::parallel::default_parallelism;
use thinktank_core::router::{
    build_supervision, make_untrained_router, train_router, FeatureConfig, RouterModel, SupervisionSet,
};
use thinktank_core::{EventQuad, ForecastQuery, InnerStrategy, StrategyConfig};

use crate::config::{require, PanelSpec, RunConfig};
use crate::error::CliError;
use crate::io::{ensure_dir, read_json, read_jsonl, to_json, write_json, write_jsonl, write_text};

/// Command-line overrides of config values.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub strategy: Option<String>,
    pub k: Option<usize>,
    pub inner: Option<InnerStrategy>,
    pub seeds: Option<Vec<u64>>,
    pub parallelism: Option<usize>,
    pub format: Option<SourceFormat>,
    pub cutoff: Option<chrono::NaiveDate>,
}

pub struct Run {
    pub config: RunConfig,
    pub overrides: Overrides,
}

fn print_json<T: Serialize>(value: &T) {
    print!("{}", to_json(value));
}

impl Run {
    fn format(&self) -> SourceFormat {
        self.overrides.format.unwrap_or(self.config.format)
    }

    fn parallelism(&self) -> usize {
        self.overrides.parallelism.or(self.config.parallelism).unwrap_or_else(default_parallelism).max(1)
    }

    fn eval_seeds(&self) -> Result<Vec<u64>, CliError> {
        match &self.overrides.seeds {
            Some(seeds) if !seeds.is_empty() => Ok(seeds.clone()),
            _ => Ok(vec![require(self.config.seeds.eval, "eval")?]),
        }
    }

    fn strategy(&self) -> Result<StrategyConfig, CliError> {
        let o = &self.overrides;
        let Some(name) = &o.strategy else {
            return self.config.strategy.ok_or_else(|| {
                CliError::Config("no strategy: pass --strategy or set \"strategy\" in the config".into())
            });
        };
        if name != "elite" && (o.k.is_some() || o.inner.is_some()) {
            return Err(CliError::Config("--k and --inner apply only to --strategy elite".into()));
        }
        let k = match (o.k, &self.config.strategy) {
            (Some(k), _) => Some(k),
            (None, Some(StrategyConfig::Elite { k, .. })) => Some(*k),
            _ => None,
        };
        StrategyConfig::parse(name, k, o.inner).map_err(|e| CliError::Config(e.to_string()))
    }

    fn read_store(&self) -> Result<EventStore, CliError> {
        let path = self.config.events_path()?;
        ingest_path(path, self.format()).map_err(|e| match e {
            DatasetError::SourceUnreadable { .. } => CliError::Config(e.to_string()),
            other => other.into(),
        })
    }

    fn panel(&self) -> Result<ExpertPanel, CliError> {
        let config: PanelConfig = read_json(&self.config.panel_path(), "panel file")?;
        Ok(ExpertPanel::from_config(&config)?)
    }

    fn context(&self) -> Result<ExpertContext, CliError> {
        let pools: CandidatePools = read_json(&self.config.out("candidates.json"), "candidate pools")?;
        let registry: EntityRegistry = read_json(&self.config.out("registry.json"), "entity registry")?;
        Ok(ExpertContext { pools, registry, template: Default::default() })
    }

    fn router(&self, path: &Path, panel: &ExpertPanel) -> Result<RouterModel, CliError> {
        if !path.exists() {
            return Err(CliError::Config(format!("router model {} not found; run train-router first", path.display())));
        }
        Ok(RouterModel::load_for_panel(path, &panel.expert_ids())?)
    }
}

pub fn gen_corpus(run: &Run) -> Result<(), CliError> {
    let spec =
        run.config.corpus.as_ref().ok_or_else(|| CliError::Config("config has no \"corpus\" generator spec".into()))?;
    let seed = require(run.config.seeds.corpus, "corpus")?;
    let store = generate_synthetic_corpus(spec, seed)?;
    let path = run.config.events_path()?;
    let mut buf = Vec::new();
    write_events(&store.events, &store.entity_registry, run.format(), &mut buf)?;
    write_text(path, &String::from_utf8(buf).expect("utf-8 events"))?;
    print_json(&json!({
        "events": store.events.len(),
        "countries": spec.countries,
        "path": path.display().to_string(),
    }));
    Ok(())
}

fn events_jsonl(events: &[EventQuad], registry: &EntityRegistry) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_events(events, registry, SourceFormat::Jsonl, &mut buf)?;
    Ok(String::from_utf8(buf).expect("utf-8 events"))
}

pub fn ingest(run: &Run) -> Result<(), CliError> {
    let store = run.read_store()?;
    ensure_dir(&run.config.output_dir)?;
    write_text(&run.config.out("events.jsonl"), &events_jsonl(&store.events, &store.entity_registry)?)?;
    write_jsonl(&run.config.out("rejects.jsonl"), &store.rejects)?;
    write_json(&run.config.out("registry.json"), &store.entity_registry)?;
    let mut by_reason: BTreeMap<String, usize> = BTreeMap::new();
    for r in &store.rejects {
        *by_reason.entry(r.reason.to_string()).or_default() += 1;
    }
    let summary = json!({
        "events": store.events.len(),
        "rejected": store.rejects.len(),
        "rejected_by_reason": by_reason,
        "entities": store.entity_registry.len(),
    });
    write_json(&run.config.out("ingest_summary.json"), &summary)?;
    print_json(&summary);
    Ok(())
}

pub fn prepare(run: &Run) -> Result<(), CliError> {
    let store = run.read_store()?;
    let cutoff = run.overrides.cutoff.unwrap_or(run.config.cutoff);
    let data =
        prepare_dataset(&store, &run.config.countries(), cutoff, run.config.window_days, run.config.history_limit);
    let c = &run.config;
    ensure_dir(&c.output_dir)?;
    write_text(&c.out("train.jsonl"), &events_jsonl(&data.train_events, &data.registry)?)?;
    write_text(&c.out("test.jsonl"), &events_jsonl(&data.test_events, &data.registry)?)?;
    write_jsonl(&c.out("train_queries.jsonl"), &data.train)?;
    write_jsonl(&c.out("test_queries.jsonl"), &data.test)?;
    write_json(&c.out("candidates.json"), &data.pools)?;
    write_json(&c.out("registry.json"), &data.registry)?;
    write_json(&c.out("prepare_summary.json"), &data.summary)?;
    print_json(&data.summary);
    Ok(())
}

pub fn gen_panel(run: &Run) -> Result<(), CliError> {
    let spec = run.config.panel_spec.as_ref().ok_or_else(|| CliError::Config("config has no \"panel_spec\"".into()))?;
    let seed = require(run.config.seeds.panel, "panel")?;
    let mut panel = match spec {
        PanelSpec::Specialists { p_home, p_away } => {
            PanelConfig::specialists(&run.config.countries(), *p_home, *p_away, seed)
        }
        PanelSpec::Generalist { p } => PanelConfig::generalist(*p, seed),
    };
    if let Some(fanout) = run.config.fanout {
        panel.fanout = fanout;
    }
    // Validate before writing.
    ExpertPanel::from_config(&panel)?;
    let path = run.config.panel_path();
    write_json(&path, &panel)?;
    print_json(&json!({
        "experts": panel.experts.iter().map(|e| e.expert_id.as_str()).collect::<Vec<_>>(),
        "path": path.display().to_string(),
    }));
    Ok(())
}

pub fn gen_supervision(run: &Run) -> Result<(), CliError> {
    let seed = require(run.config.seeds.supervision, "supervision")?;
    let panel = run.panel()?;
    let ctx = run.context()?;
    let train: Vec<ForecastQuery> = read_jsonl(&run.config.out("train_queries.jsonl"), "query")?;
    let hp = run.config.router;
    let features = FeatureConfig { dim: hp.dim, horizon: hp.horizon };
    let set = build_supervision(&train, &panel, &ctx, features, seed, run.parallelism())?;
    write_json(&run.config.out("supervision.json"), &set)?;
    print_json(&json!({
        "queries": train.len(),
        "examples": set.examples.len(),
        "skipped": set.skipped,
        "expert_failures": set.expert_failures,
    }));
    Ok(())
}

pub fn train(run: &Run, untrained: bool) -> Result<(), CliError> {
    let seed = require(run.config.seeds.router, "router")?;
    let panel = run.panel()?;
    let ids = panel.expert_ids();
    let hp = run.config.router;
    let (model, path, examples) = if untrained {
        (make_untrained_router(&ids, hp, seed)?, run.config.untrained_router_path(), 0)
    } else {
        let set: SupervisionSet = read_json(&run.config.out("supervision.json"), "supervision set")?;
        let model = train_router(&set.examples, &ids, hp, seed)?;
        (model, run.config.router_path(), set.examples.len())
    };
    ensure_dir(&run.config.output_dir)?;
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    model.save(&path).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    print_json(&json!({
        "kind": model.kind,
        "experts": ids,
        "examples": examples,
        "loss_history": model.loss_history,
        "path": path.display().to_string(),
    }));
    Ok(())
}

pub fn forecast(run: &Run, query_id: Option<&str>, query_file: Option<&Path>) -> Result<(), CliError> {
    let query: ForecastQuery = match (query_id, query_file) {
        (_, Some(path)) => read_json(path, "query")?,
        (Some(id), None) => {
            let mut found = None;
            for name in ["test_queries.jsonl", "train_queries.jsonl"] {
                let queries: Vec<ForecastQuery> = read_jsonl(&run.config.out(name), "query")?;
                if let Some(q) = queries.into_iter().find(|q| q.query_id == id) {
                    found = Some(q);
                    break;
                }
            }
            found.ok_or_else(|| CliError::Data(format!("no prepared query with id {id:?}")))?
        }
        (None, None) => return Err(CliError::Config("forecast needs --query-id or --query".into())),
    };
    let strategy = run.strategy()?;
    let seed = run.eval_seeds()?[0];
    let panel = run.panel()?;
    let ctx = run.context()?;
    let model = if strategy.needs_router() { Some(run.router(&run.config.router_path(), &panel)?) } else { None };
    let f = leader_forecast(strategy, model.as_ref(), &panel, &query, &ctx, draw_key_for(seed, &query))?;
    print_json(&f);
    Ok(())
}

fn report_stem(report: &EvaluationReport) -> String {
    let kind = match report.router_kind {
        Some(thinktank_core::router::RouterKind::Untrained) => "_untrained",
        _ => "",
    };
    format!("report_{}{kind}_seed{}", report.strategy.label(), report.seed)
}

pub fn evaluate(run: &Run, untrained: bool) -> Result<(), CliError> {
    let strategy = run.strategy()?;
    let seeds = run.eval_seeds()?;
    let panel = run.panel()?;
    let model = if strategy.needs_router() {
        let path = if untrained { run.config.untrained_router_path() } else { run.config.router_path() };
        Some(run.router(&path, &panel)?)
    } else {
        None
    };
    let ctx = run.context()?;
    let test: Vec<ForecastQuery> = read_jsonl(&run.config.out("test_queries.jsonl"), "query")?;
    let mut all_failed = None;
    for seed in seeds {
        let out = run_strategy_eval(&panel, model.as_ref(), strategy, &ctx, &test, seed, run.parallelism())?;
        let r = &out.report;
        let stem = report_stem(r);
        write_json(&run.config.out(&format!("{stem}.json")), r)?;
        write_text(&run.config.out(&format!("{stem}.csv")), &report_csv(r)?)?;
        write_jsonl(&run.config.out(&format!("forecasts_{}.jsonl", &stem["report_".len()..])), &out.forecasts)?;
        println!(
            "{} seed {}: micro {:.4} macro {:.4} ({} queries, {} failed)",
            r.strategy,
            r.seed,
            r.scores.micro,
            r.scores.macro_,
            r.query_count,
            r.failed_queries.len()
        );
        if r.failed_queries.len() == r.query_count {
            all_failed = Some(r.failed_queries[0].error.clone());
        }
    }
    match all_failed {
        Some(e) => Err(CliError::Backend(format!("every query failed, e.g. {e}"))),
        None => Ok(()),
    }
}

pub fn sweep(run: &Run) -> Result<(), CliError> {
    let inner = run.overrides.inner.unwrap_or(match run.config.strategy {
        Some(StrategyConfig::Elite { inner, .. }) => inner,
        _ => InnerStrategy::WeightedBestOfN,
    });
    let seeds = run.eval_seeds()?;
    let panel = run.panel()?;
    let mut models = vec![run.router(&run.config.router_path(), &panel)?];
    let untrained = run.config.untrained_router_path();
    if untrained.exists() {
        models.push(run.router(&untrained, &panel)?);
    }
    let ctx = run.context()?;
    let test: Vec<ForecastQuery> = read_jsonl(&run.config.out("test_queries.jsonl"), "query")?;

    let mut curves: Vec<KSweepCurve> = Vec::new();
    let mut mean = String::new();
    for model in &models {
        let kind = model.kind.as_str();
        let mut per_kind = Vec::new();
        for &seed in &seeds {
            let curve = k_sweep(&panel, model, inner, &ctx, &test, seed, run.parallelism())?;
            write_text(&run.config.out(&format!("sweep_{kind}_seed{seed}.csv")), &sweep_csv(&curve)?)?;
            per_kind.push(curve);
        }
        let m = mean_curve(&per_kind);
        let csv = mean_sweep_csv(&m, kind, seeds.len())?;
        // One header for the combined mean file.
        mean.push_str(if mean.is_empty() { &csv } else { csv.split_once('\n').map_or("", |x| x.1) });
        for p in &m {
            println!("{kind} k={}: micro {:.4} ± {:.4}", p.k, p.micro_mean, p.micro_std);
        }
        curves.extend(per_kind);
    }
    write_text(&run.config.out("sweep_mean.csv"), &mean)?;
    write_json(&run.config.out("sweep.json"), &json!({ "inner": inner, "seeds": seeds, "curves": curves }))?;
    Ok(())
}

pub fn report(run: &Run, inputs: &[PathBuf]) -> Result<(), CliError> {
    let paths: Vec<PathBuf> = if inputs.is_empty() {
        let dir = &run.config.output_dir;
        let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| CliError::Config(format!("cannot list {}: {e}", dir.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("report_"))
            })
            .collect();
        found.sort();
        found
    } else {
        inputs.to_vec()
    };
    if paths.is_empty() {
        return Err(CliError::Config("no stored reports found; run evaluate first".into()));
    }
    let mut summary = String::from("report,strategy,router_kind,seed,queries,failed,micro,macro\n");
    for path in &paths {
        let r: EvaluationReport = read_json(path, "report")?;
        write_text(&path.with_extension("csv"), &report_csv(&r)?)?;
        summary.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{:.6}\n",
            path.file_stem().and_then(|s| s.to_str()).unwrap_or(""),
            r.strategy.label(),
            r.router_kind.map_or("none", |k| k.as_str()),
            r.seed,
            r.query_count,
            r.failed_queries.len(),
            r.scores.micro,
            r.scores.macro_
        ));
    }
    write_text(&run.config.out("report_summary.csv"), &summary)?;
    print!("{summary}");
    Ok(())
}
