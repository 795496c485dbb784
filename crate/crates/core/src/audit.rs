//! Removal audit records, written one JSON object per line.

use serde::{Deserialize, Serialize};

const PREFIX_CHARS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditReason {
    Duplicate,
    Ratio,
    Partition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub doc_id: String,
    /// Absent for whole-document removals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paragraph_index: Option<usize>,
    pub reason: AuditReason,
    /// Token-to-word ratio; present iff `reason` is `ratio`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// First 80 characters of the removed text.
    pub text: String,
}

impl AuditRecord {
    pub fn duplicate(doc_id: &str, paragraph_index: usize, text: &str) -> Self {
        Self {
            doc_id: doc_id.to_string(),
            paragraph_index: Some(paragraph_index),
            reason: AuditReason::Duplicate,
            ratio: None,
            text: prefix(text),
        }
    }

    pub fn ratio(doc_id: &str, paragraph_index: Option<usize>, ratio: f64, text: &str) -> Self {
        Self {
            doc_id: doc_id.to_string(),
            paragraph_index,
            reason: AuditReason::Ratio,
            ratio: Some(ratio),
            text: prefix(text),
        }
    }

    pub fn partition(doc_id: &str, text: &str) -> Self {
        Self {
            doc_id: doc_id.to_string(),
            paragraph_index: None,
            reason: AuditReason::Partition,
            ratio: None,
            text: prefix(text),
        }
    }
}

fn prefix(text: &str) -> String {
    text.chars().take(PREFIX_CHARS).collect()
}
