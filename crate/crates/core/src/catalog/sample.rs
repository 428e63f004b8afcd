use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{CatalogError, DatasetRecord};

/// Slots in a full sample.
pub const SAMPLE_SIZE: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Ckan,
    DcatJsonld,
    ManualImport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortCapability {
    RelevanceAndModified,
    ModifiedOnly,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortKey {
    Relevance,
    Modified,
    Default,
}

impl SortKey {
    pub fn as_str(self) -> &'static str {
        match self {
            SortKey::Relevance => "relevance",
            SortKey::Modified => "modified",
            SortKey::Default => "default",
        }
    }
}

impl fmt::Display for SortKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The two ends of one ordering of the catalog.
///
/// `head` holds positions `0..head.len()` and `tail` the last `tail.len()`
/// positions of a list of `total_count` datasets. A listing whose head covers
/// the whole catalog has an empty tail.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Listing {
    pub total_count: usize,
    pub head: Vec<DatasetRecord>,
    #[serde(default)]
    pub tail: Vec<DatasetRecord>,
}

impl Listing {
    pub fn full(records: Vec<DatasetRecord>) -> Self {
        Listing { total_count: records.len(), head: records, tail: Vec::new() }
    }

    pub fn is_complete(&self) -> bool {
        self.head.len() >= self.total_count
    }

    pub fn first(&self, n: usize) -> Option<&[DatasetRecord]> {
        (n <= self.head.len() && n <= self.total_count).then(|| &self.head[..n])
    }

    pub fn last(&self, n: usize) -> Option<&[DatasetRecord]> {
        if n > self.total_count {
            return None;
        }
        if n <= self.tail.len() {
            return Some(&self.tail[self.tail.len() - n..]);
        }
        self.is_complete().then(|| &self.head[self.total_count - n..self.total_count])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogSnapshot {
    pub portal_id: String,
    pub harvested_at: DateTime<Utc>,
    pub platform: Platform,
    pub sort_capability: SortCapability,
    pub listings: BTreeMap<SortKey, Listing>,
    pub total_dataset_count: usize,
    /// Fewer datasets than a full sample needs.
    #[serde(default)]
    pub insufficient: bool,
}

impl CatalogSnapshot {
    pub fn listing(&self, key: SortKey) -> Option<&Listing> {
        self.listings.get(&key)
    }

    /// Every record held by the snapshot; a dataset listed under several
    /// orderings is yielded once per listing.
    pub fn records(&self) -> impl Iterator<Item = &DatasetRecord> + '_ {
        self.listings.values().flat_map(|l| l.head.iter().chain(l.tail.iter()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotOrigin {
    FirstRelevance,
    LastRelevance,
    FirstModified,
    LastModified,
    FirstDefault,
    LastDefault,
}

impl SlotOrigin {
    pub const ALL: [SlotOrigin; 6] = [
        SlotOrigin::FirstRelevance,
        SlotOrigin::LastRelevance,
        SlotOrigin::FirstModified,
        SlotOrigin::LastModified,
        SlotOrigin::FirstDefault,
        SlotOrigin::LastDefault,
    ];

    fn first(key: SortKey) -> Self {
        match key {
            SortKey::Relevance => SlotOrigin::FirstRelevance,
            SortKey::Modified => SlotOrigin::FirstModified,
            SortKey::Default => SlotOrigin::FirstDefault,
        }
    }

    fn last(key: SortKey) -> Self {
        match key {
            SortKey::Relevance => SlotOrigin::LastRelevance,
            SortKey::Modified => SlotOrigin::LastModified,
            SortKey::Default => SlotOrigin::LastDefault,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SlotOrigin::FirstRelevance => "first_relevance",
            SlotOrigin::LastRelevance => "last_relevance",
            SlotOrigin::FirstModified => "first_modified",
            SlotOrigin::LastModified => "last_modified",
            SlotOrigin::FirstDefault => "first_default",
            SlotOrigin::LastDefault => "last_default",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSlot {
    pub dataset: DatasetRecord,
    pub origin: SlotOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub portal_id: String,
    pub slots: Vec<SampleSlot>,
}

impl Sample {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn origin_count(&self, origin: SlotOrigin) -> usize {
        self.slots.iter().filter(|s| s.origin == origin).count()
    }
}

/// Draws the dataset sample.
///
/// * relevance and modification sorts: first 4 + last 3 under each key (14 slots;
///   a dataset appearing in both halves occupies two slots)
/// * modification sort only: first 8 + last 6 of that ordering
/// * no sort: first 8 + last 6 of the default ordering
/// * fewer than 14 datasets: every dataset once, in listing order
pub fn draw_sample(snapshot: &CatalogSnapshot) -> Result<Sample, CatalogError> {
    let total = snapshot.total_dataset_count;
    if total == 0 {
        return Err(CatalogError::EmptyCatalog);
    }

    let plan: &[(SortKey, usize, usize)] = match snapshot.sort_capability {
        SortCapability::RelevanceAndModified => &[(SortKey::Relevance, 4, 3), (SortKey::Modified, 4, 3)],
        SortCapability::ModifiedOnly => &[(SortKey::Modified, 8, 6)],
        SortCapability::None => &[(SortKey::Default, 8, 6)],
    };

    let mut slots = Vec::with_capacity(SAMPLE_SIZE);
    if total < SAMPLE_SIZE {
        let key = plan.last().map(|p| p.0).expect("non-empty plan");
        let listing = snapshot.listing(key).ok_or(CatalogError::MissingListing(key))?;
        let all = listing.first(total).ok_or(CatalogError::MissingListing(key))?;
        slots.extend(all.iter().map(|d| SampleSlot { dataset: d.clone(), origin: SlotOrigin::first(key) }));
    } else {
        for &(key, first, last) in plan {
            let listing = snapshot.listing(key).ok_or(CatalogError::MissingListing(key))?;
            let head = listing.first(first).ok_or(CatalogError::MissingListing(key))?;
            let tail = listing.last(last).ok_or(CatalogError::MissingListing(key))?;
            slots.extend(head.iter().map(|d| SampleSlot { dataset: d.clone(), origin: SlotOrigin::first(key) }));
            slots.extend(tail.iter().map(|d| SampleSlot { dataset: d.clone(), origin: SlotOrigin::last(key) }));
        }
    }
    Ok(Sample { portal_id: snapshot.portal_id.clone(), slots })
}
