//! Inference path planning for coordinated DNN services at the edge.
//!
//! A local service split into blocks can send part of every batch around
//! its own middle blocks, either through a segment of a host service
//! (cross-connection) or through a local link (skip-connection). This
//! crate enumerates those paths, computes their steady-state throughput,
//! scores them with a throughput-times-accuracy reward, and searches for
//! the best one while calling the (expensive) accuracy oracle as rarely as
//! possible. A discrete-event simulator checks the throughput model.
//!
//! ```
//! use pathplan_core::{
//!     code_search, RewardConfig, Scenario, SearchConfig, ServiceProfile, SyntheticOracle,
//! };
//!
//! let local = ServiceProfile::from_costs("local", &[(0.0, 1e-3), (0.0, 4e-3), (0.0, 1e-3)], 8, 0.9);
//! let scenario = Scenario::new("demo", local, None, 2);
//! let oracle = SyntheticOracle::new(0.88, 0.2, 0.0, 0.0, 7).unwrap();
//! let cfg = SearchConfig::new(RewardConfig::new(100.0, 0.85).unwrap(), 0.01, 3);
//! let result = code_search(&scenario, &oracle, &cfg).unwrap();
//! assert!(result.best.reward > 0.0);
//! ```

pub mod dessim;
pub mod model;
pub mod oracle;
pub mod predictor;
pub mod reward;
pub mod search;
pub mod throughput;

pub use dessim::{simulate, SimConfig, SimError, SimReport};
pub use model::{
    enumerate_paths, path_distance, BlockProfile, ConnectionKind, LinkPlacement, LinkProfile,
    ModelError, PathSpec, Route, Scenario, ServiceProfile, SkipLinkOverride, DEFAULT_N_F,
};
pub use oracle::{
    AccuracyOracle, CostHint, ExternalOracle, FixtureEntry, OracleError, SyntheticOracle,
    TableFixture, TableOracle,
};
pub use predictor::{
    average_accuracy, inverse_distance_mean, predict_accuracy, predict_average_accuracy,
    EvaluatedSet, PredictError,
};
pub use reward::{
    accuracy_reward, reward, throughput_reward, PathMetrics, RewardConfig, RewardError,
    DEFAULT_SLOPE,
};
pub use search::{
    best_of, brute_force, code_search, Bootstrap, SearchConfig, SearchError, SearchResult,
    StageRecord, Termination,
};
pub use throughput::{
    admissible_paths, baseline_throughput, is_admissible, path_throughput, BaselineMetrics,
    Bottleneck, PathThroughput, ThroughputError,
};
