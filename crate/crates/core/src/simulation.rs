//! End-to-end desk experiments on synthetic corpora with mock specialists.
//!
//! A run generates a corpus, builds train/test queries around the cutoff,
//! collects router supervision from a panel of per-country specialists,
//! trains a router and evaluates every leader strategy plus the k-sweeps.
//! Everything derives from one seed.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{InnerStrategy, StrategyConfig};
use crate::dataset::{
    generate_synthetic_corpus, prepare_dataset, DatasetError, GeneratorSpec, PreparedData, DEFAULT_WINDOW_DAYS,
};
use crate::evaluation::{k_sweep, run_strategy_eval, EvaluationError, EvaluationReport, KSweepCurve};
use crate::experts::{ExpertContext, ExpertError, ExpertPanel, PanelConfig};
use crate::hashing::mix;
use crate::model::CountryCode;
use crate::router::{
    build_supervision, make_untrained_router, train_router, Hyperparameters, RouterError, RouterModel,
};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Expert(#[from] ExpertError),
    #[error(transparent)]
    Router(#[from] RouterError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error("{0}")]
    Empty(&'static str),
}

/// The expert context for prepared data: its candidate pools and registry
/// with the default prompt template.
pub fn expert_context(data: &PreparedData) -> ExpertContext {
    ExpertContext { pools: data.pools.clone(), registry: data.registry.clone(), template: Default::default() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskConfig {
    pub corpus: GeneratorSpec,
    pub cutoff: NaiveDate,
    pub window_days: u32,
    pub history_limit: usize,
    pub p_home: f64,
    pub p_away: f64,
    pub hyperparameters: Hyperparameters,
    pub parallelism: usize,
}

impl DeskConfig {
    /// Eight countries, eight specialists, 18 months of events split at the
    /// end of 2023.
    pub fn standard() -> Self {
        let countries = ["ISR", "EGY", "IRN", "TUR", "USA", "CHN", "IND", "BRA"]
            .iter()
            .map(|c| CountryCode::new(c).expect("valid code"))
            .collect();
        DeskConfig {
            corpus: GeneratorSpec {
                countries,
                entities_per_country: 25,
                relations_per_country: 10,
                events_per_country: 1000,
                start_date: NaiveDate::from_ymd_opt(2023, 1, 1).expect("valid date"),
                end_date: NaiveDate::from_ymd_opt(2024, 6, 30).expect("valid date"),
                separability: 0.6,
                contexts_per_country: 20,
                object_skew: 1.0,
            },
            cutoff: NaiveDate::from_ymd_opt(2023, 12, 31).expect("valid date"),
            window_days: DEFAULT_WINDOW_DAYS,
            history_limit: 30,
            p_home: 0.7,
            p_away: 0.1,
            hyperparameters: Hyperparameters::default(),
            parallelism: crate::parallel::default_parallelism(),
        }
    }
}

/// The seeds of one run, each derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub corpus: u64,
    pub panel: u64,
    pub router: u64,
    pub eval: u64,
}

impl RunSeeds {
    pub fn derive(seed: u64) -> Self {
        RunSeeds { corpus: mix(seed, 1), panel: mix(seed, 2), router: mix(seed, 3), eval: mix(seed, 4) }
    }
}

/// Data, panel and both routers of one run, ready for evaluation.
#[derive(Debug)]
pub struct DeskSetup {
    pub seeds: RunSeeds,
    pub data: PreparedData,
    pub ctx: ExpertContext,
    pub panel: ExpertPanel,
    pub trained: RouterModel,
    pub untrained: RouterModel,
}

pub fn setup_desk(config: &DeskConfig, seed: u64) -> Result<DeskSetup, SimulationError> {
    let seeds = RunSeeds::derive(seed);
    let store = generate_synthetic_corpus(&config.corpus, seeds.corpus)?;
    let data =
        prepare_dataset(&store, &config.corpus.countries, config.cutoff, config.window_days, config.history_limit);
    let ctx = expert_context(&data);
    if data.train.is_empty() || data.test.is_empty() {
        return Err(SimulationError::Empty("corpus yields an empty train or test split"));
    }
    let panel = ExpertPanel::from_config(&PanelConfig::specialists(
        &data.summary.countries,
        config.p_home,
        config.p_away,
        seeds.panel,
    ))?;
    let hp = config.hyperparameters;
    let features = crate::router::FeatureConfig { dim: hp.dim, horizon: hp.horizon };
    let supervision = build_supervision(&data.train, &panel, &ctx, features, seeds.eval, config.parallelism)?;
    let ids = panel.expert_ids();
    let trained = train_router(&supervision.examples, &ids, hp, seeds.router)?;
    let untrained = make_untrained_router(&ids, hp, seeds.router)?;
    Ok(DeskSetup { seeds, data, ctx, panel, trained, untrained })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskOutcome {
    pub seed: u64,
    pub routing: EvaluationReport,
    pub majority: EvaluationReport,
    pub vanilla_bon: EvaluationReport,
    pub weighted_bon: EvaluationReport,
    pub sweep_trained: KSweepCurve,
    pub sweep_untrained: KSweepCurve,
}

impl DeskSetup {
    pub fn evaluate(&self, strategy: StrategyConfig, parallelism: usize) -> Result<EvaluationReport, SimulationError> {
        let model = if strategy.needs_router() { Some(&self.trained) } else { None };
        let run =
            run_strategy_eval(&self.panel, model, strategy, &self.ctx, &self.data.test, self.seeds.eval, parallelism)?;
        Ok(run.report)
    }

    pub fn sweep(
        &self,
        model: &RouterModel,
        inner: InnerStrategy,
        parallelism: usize,
    ) -> Result<KSweepCurve, SimulationError> {
        Ok(k_sweep(&self.panel, model, inner, &self.ctx, &self.data.test, self.seeds.eval, parallelism)?)
    }
}

/// Sets up one run and evaluates routing, the three wisdom strategies and
/// trained/untrained weighted Elite sweeps.
pub fn run_desk(config: &DeskConfig, seed: u64) -> Result<DeskOutcome, SimulationError> {
    let setup = setup_desk(config, seed)?;
    let par = config.parallelism;
    Ok(DeskOutcome {
        seed,
        routing: setup.evaluate(StrategyConfig::Routing, par)?,
        majority: setup.evaluate(StrategyConfig::MajorityVote, par)?,
        vanilla_bon: setup.evaluate(StrategyConfig::VanillaBestOfN, par)?,
        weighted_bon: setup.evaluate(StrategyConfig::WeightedBestOfN, par)?,
        sweep_trained: setup.sweep(&setup.trained, InnerStrategy::WeightedBestOfN, par)?,
        sweep_untrained: setup.sweep(&setup.untrained, InnerStrategy::WeightedBestOfN, par)?,
    })
}
