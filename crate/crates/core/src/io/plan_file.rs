//! Plan files: canonical JSON with sorted keys.

use std::path::Path;

use crate::io::{canonical_json, read_text, write_text, FileError};
use crate::planner::EvacuationPlan;

pub fn plan_to_string(plan: &EvacuationPlan) -> String {
    canonical_json(plan)
}

pub fn parse_plan(text: &str) -> Result<EvacuationPlan, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn read_plan(path: &Path) -> Result<EvacuationPlan, FileError> {
    let text = read_text(path)?;
    parse_plan(&text).map_err(|source| FileError::Json { path: path.to_path_buf(), source })
}

pub fn write_plan(path: &Path, plan: &EvacuationPlan) -> Result<(), FileError> {
    write_text(path, &plan_to_string(plan))
}
