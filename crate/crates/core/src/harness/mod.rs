//! Monte Carlo driver: scenario sampling, rendering, the onboard pipeline,
//! ground-truth classification and aggregate statistics.

pub mod campaign;
pub mod classify;
pub mod config;
pub mod scenario;
pub mod sky;

pub use campaign::{run_campaign, Campaign, CampaignOptions, SigmaReport};
pub use classify::{classify_outcome, Label, PlanetOutcome, ScenarioOutcome};
pub use config::{Config, ConfigError};
pub use scenario::{sample_scenarios, ScenarioSpec};
pub use sky::synthetic_sky;
