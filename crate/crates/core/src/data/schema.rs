use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DroError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Numeric,
    Categorical,
    Label,
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Missing categorical values become a category of their own. Rows with a
    /// missing numeric value or label are still dropped.
    #[default]
    NewCategory,
    DropRow,
}

/// Which label value maps to `+1`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositiveClass {
    /// Most frequent class versus the rest; ties go to the lexicographically
    /// smallest class name.
    #[default]
    Majority,
    Value(String),
}

/// Column roles and preprocessing rules for CSV ingestion.
///
/// Stored as TOML:
///
/// ```toml
/// label = "class"
/// positive = "majority"          # or { value = "won" }
/// missing = "new-category"       # or "drop-row"
/// missing_token = "?"
/// default_role = "categorical"   # role of columns not listed below
/// numeric = ["age"]
/// categorical = ["color"]
/// ignored = ["id"]
/// standardize = false
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub label: String,
    #[serde(default)]
    pub positive: PositiveClass,
    #[serde(default)]
    pub missing: MissingPolicy,
    #[serde(default = "default_missing_token")]
    pub missing_token: String,
    #[serde(default = "default_role")]
    pub default_role: Role,
    #[serde(default)]
    pub numeric: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub ignored: Vec<String>,
    /// z-score numeric features using statistics of the training split only.
    #[serde(default)]
    pub standardize: bool,
}

fn default_missing_token() -> String {
    "?".into()
}

fn default_role() -> Role {
    Role::Ignored
}

impl DatasetSchema {
    pub fn new(label: impl Into<String>) -> Self {
        DatasetSchema {
            label: label.into(),
            positive: PositiveClass::Majority,
            missing: MissingPolicy::NewCategory,
            missing_token: default_missing_token(),
            default_role: Role::Ignored,
            numeric: Vec::new(),
            categorical: Vec::new(),
            ignored: Vec::new(),
            standardize: false,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: DatasetSchema =
            toml::from_str(text).map_err(|e| DroError::Config(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| DroError::io(&path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen: BTreeMap<&str, Role> = BTreeMap::new();
        let listed = self
            .numeric
            .iter()
            .map(|c| (c, Role::Numeric))
            .chain(self.categorical.iter().map(|c| (c, Role::Categorical)))
            .chain(self.ignored.iter().map(|c| (c, Role::Ignored)))
            .chain(std::iter::once((&self.label, Role::Label)));
        for (col, role) in listed {
            if let Some(prev) = seen.insert(col.as_str(), role) {
                return Err(DroError::Config(format!(
                    "column `{col}` listed as both {prev:?} and {role:?}"
                )));
            }
        }
        if self.default_role == Role::Label {
            return Err(DroError::Config(
                "default_role cannot be `label`: exactly one label column".into(),
            ));
        }
        Ok(())
    }

    /// Role of a header column.
    pub fn role_of(&self, column: &str) -> Role {
        if column == self.label {
            Role::Label
        } else if self.numeric.iter().any(|c| c == column) {
            Role::Numeric
        } else if self.categorical.iter().any(|c| c == column) {
            Role::Categorical
        } else if self.ignored.iter().any(|c| c == column) {
            Role::Ignored
        } else {
            self.default_role
        }
    }

    /// Every explicitly named column.
    pub fn named_columns(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.label.as_str())
            .chain(self.numeric.iter().map(String::as_str))
            .chain(self.categorical.iter().map(String::as_str))
            .chain(self.ignored.iter().map(String::as_str))
    }
}
