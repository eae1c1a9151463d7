//! Query category taxonomy and rater labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A rater's category for one query. Debugging is split by whether the
/// query states the error, the desired outcome, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "debugging:error_only")]
    DebuggingErrorOnly,
    #[serde(rename = "debugging:outcome_only")]
    DebuggingOutcomeOnly,
    #[serde(rename = "debugging:error_and_outcome")]
    DebuggingErrorAndOutcome,
    #[serde(rename = "implementation")]
    Implementation,
    #[serde(rename = "understanding")]
    Understanding,
    #[serde(rename = "nothing")]
    Nothing,
    #[serde(rename = "off_topic")]
    OffTopic,
}

/// Categories with debugging subcategories collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopLevel {
    Debugging,
    Implementation,
    Understanding,
    Nothing,
    OffTopic,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::DebuggingErrorOnly,
        Category::DebuggingOutcomeOnly,
        Category::DebuggingErrorAndOutcome,
        Category::Implementation,
        Category::Understanding,
        Category::Nothing,
        Category::OffTopic,
    ];

    pub const DEBUGGING: [Category; 3] = [
        Category::DebuggingErrorOnly,
        Category::DebuggingOutcomeOnly,
        Category::DebuggingErrorAndOutcome,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::DebuggingErrorOnly => "debugging:error_only",
            Category::DebuggingOutcomeOnly => "debugging:outcome_only",
            Category::DebuggingErrorAndOutcome => "debugging:error_and_outcome",
            Category::Implementation => "implementation",
            Category::Understanding => "understanding",
            Category::Nothing => "nothing",
            Category::OffTopic => "off_topic",
        }
    }

    pub fn top_level(self) -> TopLevel {
        match self {
            Category::DebuggingErrorOnly
            | Category::DebuggingOutcomeOnly
            | Category::DebuggingErrorAndOutcome => TopLevel::Debugging,
            Category::Implementation => TopLevel::Implementation,
            Category::Understanding => TopLevel::Understanding,
            Category::Nothing => TopLevel::Nothing,
            Category::OffTopic => TopLevel::OffTopic,
        }
    }

    pub fn valid_names() -> Vec<&'static str> {
        Self::ALL.iter().map(|c| c.as_str()).collect()
    }
}

impl TopLevel {
    /// The four categories reported in the category table.
    pub const REPORTED: [TopLevel; 4] = [
        TopLevel::Debugging,
        TopLevel::Implementation,
        TopLevel::Understanding,
        TopLevel::Nothing,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            TopLevel::Debugging => "Debugging (all)",
            TopLevel::Implementation => "Implementation",
            TopLevel::Understanding => "Understanding",
            TopLevel::Nothing => "Nothing",
            TopLevel::OffTopic => "Off-topic",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown category {given:?}; valid categories are: {}", Category::valid_names().join(", "))]
pub struct UnknownCategory {
    pub given: String,
}

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownCategory { given: s.to_owned() })
    }
}

/// One rater's category for one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLabel {
    pub query_id: String,
    pub rater_id: String,
    pub category: Category,
}
