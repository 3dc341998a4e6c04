//! Run configuration echoed into every report, and budget loading.

use anyhow::{Context, Result};
use schur_radii::registry::Budgets;
use serde::Serialize;

/// Environment variable holding a JSON object that overrides default budgets.
pub const BUDGETS_ENV: &str = "SCHUR_RADII_BUDGETS";

/// Set to `1` to expose the chains under the `test/` prefix.
pub const TEST_CHAINS_ENV: &str = "SCHUR_RADII_TEST_CHAINS";

#[derive(Debug, Clone, Serialize)]
pub struct BudgetEcho {
    /// `default` or the name of the environment variable that was applied.
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub override_json: Option<String>,
    pub values: Budgets,
}

pub fn load_budgets() -> Result<BudgetEcho> {
    match std::env::var(BUDGETS_ENV) {
        Ok(raw) if !raw.trim().is_empty() => {
            let values: Budgets = serde_json::from_str(&raw)
                .with_context(|| format!("{BUDGETS_ENV} is not a valid budgets object"))?;
            Ok(BudgetEcho {
                source: BUDGETS_ENV.to_string(),
                override_json: Some(raw),
                values,
            })
        }
        _ => Ok(BudgetEcho {
            source: "default".into(),
            override_json: None,
            values: Budgets::default(),
        }),
    }
}

/// Every command-line parameter of a run, recorded verbatim.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub args: serde_json::Value,
    pub budgets: BudgetEcho,
}
