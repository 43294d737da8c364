//! Offspring laws, models, scenarios and structural checks.

pub mod brw;
pub mod config;
pub mod dist;
pub mod graph;
pub mod law;
pub mod scenario;
pub mod serialize;

pub use brw::{AssumptionReport, BrwModel, InvarianceReport, Labeling, ModelMeta, Projection};
pub use config::OffspringConfig;
pub use dist::IntDistribution;
pub use graph::ClassStructure;
pub use law::OffspringLaw;
pub use scenario::{build_scenario, list_scenarios, parse_params, Params, ScenarioInfo};
