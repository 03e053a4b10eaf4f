//! Mapping user-facing target locators onto CFG blocks.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::cfg::{BlockId, CfgSet};
use crate::frontend::ast::StmtKind;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TargetLocator {
    Line { line: u32, polarity: bool },
    Marker { text: String },
}

impl fmt::Display for TargetLocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetLocator::Line { line, polarity } => write!(f, "line:{line}:{polarity}"),
            TargetLocator::Marker { text } => write!(f, "marker:{text}"),
        }
    }
}

impl FromStr for TargetLocator {
    type Err = String;

    /// `line:<n>[:true|false]` or `marker:<text>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(text) = s.strip_prefix("marker:") {
            if text.is_empty() {
                return Err("empty marker text".into());
            }
            return Ok(TargetLocator::Marker { text: text.to_string() });
        }
        if let Some(rest) = s.strip_prefix("line:") {
            let mut parts = rest.splitn(2, ':');
            let line =
                parts.next().unwrap_or_default().parse::<u32>().map_err(|_| format!("invalid line number in `{s}`"))?;
            let polarity = match parts.next() {
                None | Some("true") => true,
                Some("false") => false,
                Some(other) => return Err(format!("invalid polarity `{other}` (expected true or false)")),
            };
            return Ok(TargetLocator::Line { line, polarity });
        }
        Err(format!("invalid target `{s}` (expected line:<n>[:true|false] or marker:<text>)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchTarget {
    pub block: BlockId,
    pub label: String,
    pub process: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TargetError {
    #[error("no branch at line {0}")]
    NoBranch(u32),
    #[error("no block displays \"{0}\"")]
    NoMarker(String),
    #[error("marker \"{text}\" is ambiguous; candidates: {}", candidates.join(", "))]
    Ambiguous { text: String, candidates: Vec<String> },
}

/// Finds the block a locator names. A line holding an `if` selects the
/// block of the requested outcome; a line holding an assignment or display
/// selects the block that contains it.
pub fn resolve_target(cs: &CfgSet, locator: &TargetLocator) -> Result<BranchTarget, TargetError> {
    let block = match locator {
        TargetLocator::Line { line, polarity } => {
            if let Some(site) = cs.branches.iter().find(|s| s.line == *line) {
                if *polarity {
                    site.then_block
                } else {
                    site.else_block
                }
            } else {
                cs.blocks
                    .iter()
                    .find(|b| b.statements.iter().any(|s| s.span.line == *line))
                    .map(|b| b.id)
                    .ok_or(TargetError::NoBranch(*line))?
            }
        }
        TargetLocator::Marker { text } => {
            let hits: Vec<BlockId> = cs
                .blocks
                .iter()
                .filter(|b| b.statements.iter().any(|s| matches!(&s.kind, StmtKind::Display(t) if t == text)))
                .map(|b| b.id)
                .collect();
            match hits.as_slice() {
                [] => return Err(TargetError::NoMarker(text.clone())),
                [one] => *one,
                many => {
                    return Err(TargetError::Ambiguous { text: text.clone(), candidates: cs.labels(many) });
                }
            }
        }
    };
    let b = cs.block(block);
    Ok(BranchTarget { block, label: b.label.clone(), process: b.process })
}
