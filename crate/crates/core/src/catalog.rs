//! Library catalog: loading, validation and lookup of [`Resource`]s.
//!
//! The on-disk format is UTF-8 JSON Lines, one object per record:
//!
//! ```text
//! {"id":"r1","title":"Citizens","authors":["Simon Schama"],"year":1989,"type":"book"}
//! ```
//!
//! Recognised keys are `id`, `title`, `authors`, `year`, `type`,
//! `description` and `cover_ref`; anything else is ignored. Blank lines are
//! skipped and do not count as records.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_YEAR: i32 = 1000;
pub const MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceType {
    Book,
    Dvd,
    Audiobook,
    Magazine,
    Music,
    Other,
}

impl ResourceType {
    pub const ALL: [ResourceType; 6] = [
        ResourceType::Book,
        ResourceType::Dvd,
        ResourceType::Audiobook,
        ResourceType::Magazine,
        ResourceType::Music,
        ResourceType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResourceType::Book => "book",
            ResourceType::Dvd => "dvd",
            ResourceType::Audiobook => "audiobook",
            ResourceType::Magazine => "magazine",
            ResourceType::Music => "music",
            ResourceType::Other => "other",
        }
    }
}

impl fmt::Display for ResourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResourceType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ResourceType::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown resource type {s:?}"))
    }
}

/// One catalog item, the unit of saving.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    pub resource_id: String,
    pub title: String,
    pub authors: Vec<String>,
    pub year: Option<i32>,
    pub resource_type: ResourceType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover_ref: Option<String>,
}

impl Resource {
    /// Text that feeds the full-text index: title, authors, then description.
    pub fn indexed_text(&self) -> String {
        let mut text = self.title.clone();
        for author in &self.authors {
            text.push(' ');
            text.push_str(author);
        }
        if let Some(description) = &self.description {
            text.push(' ');
            text.push_str(description);
        }
        text
    }
}

/// Wire shape of a catalog line. Every field is optional here so that
/// validation can name what is missing instead of failing in serde.
#[derive(Debug, Default, Serialize, Deserialize)]
struct CatalogRecord {
    id: Option<String>,
    title: Option<String>,
    authors: Option<Vec<String>>,
    year: Option<i64>,
    #[serde(rename = "type")]
    resource_type: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cover_ref: Option<String>,
}

impl CatalogRecord {
    fn validate(self) -> Result<Resource, String> {
        let resource_id = match self.id {
            Some(id) if !id.trim().is_empty() => id,
            _ => return Err("missing id".into()),
        };
        let title = match self.title {
            Some(t) if !t.trim().is_empty() => t,
            _ => return Err("missing title".into()),
        };
        let year = match self.year {
            None => None,
            Some(y) if (i64::from(MIN_YEAR)..=i64::from(MAX_YEAR)).contains(&y) => Some(y as i32),
            Some(y) => return Err(format!("year {y} out of range [{MIN_YEAR}, {MAX_YEAR}]")),
        };
        let resource_type = match self.resource_type {
            None => return Err("missing type".into()),
            Some(t) => t.parse::<ResourceType>()?,
        };
        Ok(Resource {
            resource_id,
            title,
            authors: self.authors.unwrap_or_default(),
            year,
            resource_type,
            description: self.description,
            cover_ref: self.cover_ref,
        })
    }
}

impl From<&Resource> for CatalogRecord {
    fn from(r: &Resource) -> Self {
        CatalogRecord {
            id: Some(r.resource_id.clone()),
            title: Some(r.title.clone()),
            authors: Some(r.authors.clone()),
            year: r.year.map(i64::from),
            resource_type: Some(r.resource_type.as_str().to_string()),
            description: r.description.clone(),
            cover_ref: r.cover_ref.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogStats {
    pub records_read: usize,
    pub records_accepted: usize,
    pub records_rejected: usize,
    pub reject_reasons: Vec<RejectedRecord>,
}

impl CatalogStats {
    fn reject(&mut self, line: usize, reason: String) {
        self.records_rejected += 1;
        self.reject_reasons.push(RejectedRecord { line, reason });
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("failed to read catalog: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Rejected { line: usize, reason: String },
}

/// An immutable-after-load set of resources keyed by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    resources: BTreeMap<String, Resource>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub const fn empty() -> Self {
        Catalog { resources: BTreeMap::new() }
    }

    /// Read line-delimited catalog records.
    ///
    /// In strict mode the first invalid or duplicate record aborts with
    /// [`CatalogError::Rejected`] and nothing is kept. Otherwise invalid
    /// records are skipped and reported in the returned stats, and for a
    /// duplicate id the first record wins.
    pub fn ingest<R: BufRead>(source: R, strict: bool) -> Result<(Catalog, CatalogStats), CatalogError> {
        let mut catalog = Catalog::new();
        let mut stats = CatalogStats::default();

        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            stats.records_read += 1;

            let outcome = serde_json::from_str::<CatalogRecord>(&line)
                .map_err(|e| format!("malformed record: {e}"))
                .and_then(CatalogRecord::validate);
            let resource = match outcome {
                Ok(r) => r,
                Err(reason) if strict => return Err(CatalogError::Rejected { line: line_no, reason }),
                Err(reason) => {
                    stats.reject(line_no, reason);
                    continue;
                }
            };

            match catalog.resources.entry(resource.resource_id.clone()) {
                Entry::Occupied(_) => {
                    let reason = format!("duplicate id {:?}", resource.resource_id);
                    if strict {
                        return Err(CatalogError::Rejected { line: line_no, reason });
                    }
                    stats.reject(line_no, reason);
                }
                Entry::Vacant(slot) => {
                    slot.insert(resource);
                    stats.records_accepted += 1;
                }
            }
        }

        Ok((catalog, stats))
    }

    pub fn from_resources<I: IntoIterator<Item = Resource>>(resources: I) -> Self {
        let mut catalog = Catalog::new();
        for r in resources {
            catalog.resources.entry(r.resource_id.clone()).or_insert(r);
        }
        catalog
    }

    pub fn get(&self, resource_id: &str) -> Option<&Resource> {
        self.resources.get(resource_id)
    }

    pub fn contains(&self, resource_id: &str) -> bool {
        self.resources.contains_key(resource_id)
    }

    pub fn len(&self) -> usize {
        self.resources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resources.is_empty()
    }

    /// Resources in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &Resource> {
        self.resources.values()
    }

    /// Write the catalog back out in its line format, sorted by id.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in self.iter() {
            serde_json::to_writer(&mut out, &CatalogRecord::from(r))?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}
