//! Multi-expert event forecasting.
//!
//! A panel of country-specialist experts answers `(subject, relation, ?,
//! time)` queries about international events. A leader either routes each
//! query to one predicted-best expert, aggregates the whole panel (majority
//! vote, vanilla or weighted Best-of-N), or aggregates only the router's
//! top-k experts (Elite Ensemble).
//!
//! ```
//! use thinktank_core::aggregation::weighted_best_of_n;
//! use thinktank_core::{EntityId, ExpertPrediction};
//!
//! let p = |e: &str, o: &str, c| ExpertPrediction::new(e, EntityId::from_normalized(o), c).unwrap();
//! let f = weighted_best_of_n(&[p("a", "x", 0.6), p("b", "y", 0.5), p("c", "y", 0.3)]).unwrap();
//! assert_eq!(f.object.as_str(), "y");
//! ```

pub mod aggregation;
pub mod dataset;
pub mod evaluation;
pub mod experts;
pub mod hashing;
pub mod model;
pub mod parallel;
pub mod router;
pub mod simulation;

pub use aggregation::{InnerStrategy, StrategyConfig};
pub use model::{
    make_query, normalize_entity, AggregatedForecast, CountryCode, EntityId, EventHistory, EventQuad, ExpertPrediction,
    ForecastQuery, ModelError, UNPARSEABLE,
};
