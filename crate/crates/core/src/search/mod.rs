//! Embedded full-text index with Okapi BM25 ranking.
//!
//! ```text
//! score(D, Q) = Σ_{t ∈ Q} idf(t) · tf(t, D) · (k1 + 1) / (tf(t, D) + k1 · (1 − b + b · |D| / avgdl))
//! idf(t)      = ln((N − df(t) + 0.5) / (df(t) + 0.5) + 1)
//! ```
//!
//! Query terms are deduplicated before scoring, and hits are ordered by score
//! descending with ties broken by ascending resource id.

mod tokenize;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Catalog;

pub use tokenize::tokenize;

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;
pub const MAX_PAGE_SIZE: usize = 100;
pub const DEFAULT_PAGE_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub resource_id: String,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedCatalog {
    pub postings: BTreeMap<String, Vec<Posting>>,
    pub doc_lengths: BTreeMap<String, u32>,
    pub doc_count: usize,
    pub avg_doc_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub resource_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchPage {
    pub query_text: String,
    pub hits: Vec<Hit>,
    pub page: usize,
    pub page_size: usize,
    pub total_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("page must be >= 1")]
    InvalidPage,
    #[error("page_size must be in 1..={MAX_PAGE_SIZE}, got {0}")]
    InvalidPageSize(usize),
}

pub fn check_paging(page: usize, page_size: usize) -> Result<(), SearchError> {
    if page == 0 {
        return Err(SearchError::InvalidPage);
    }
    if page_size == 0 || page_size > MAX_PAGE_SIZE {
        return Err(SearchError::InvalidPageSize(page_size));
    }
    Ok(())
}

/// Hit ordering shared by ranking and its checks: score descending, then id.
pub fn rank_order(a: &Hit, b: &Hit) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.resource_id.cmp(&b.resource_id))
}

impl IndexedCatalog {
    pub fn build(catalog: &Catalog) -> Self {
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = BTreeMap::new();
        let mut total_len: u64 = 0;

        // Catalog iterates in ascending id order, so every postings list is
        // appended to in sorted order.
        for resource in catalog.iter() {
            let tokens = tokenize(&resource.indexed_text());
            let len = tokens.len() as u32;
            total_len += u64::from(len);
            doc_lengths.insert(resource.resource_id.clone(), len);

            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for token in tokens {
                *tf.entry(token).or_default() += 1;
            }
            for (term, count) in tf {
                postings
                    .entry(term)
                    .or_default()
                    .push(Posting { resource_id: resource.resource_id.clone(), tf: count });
            }
        }

        let doc_count = doc_lengths.len();
        let avg_doc_length = if doc_count == 0 { 0.0 } else { total_len as f64 / doc_count as f64 };
        IndexedCatalog { postings, doc_lengths, doc_count, avg_doc_length }
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// Verify structural invariants; used when loading a persisted index.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.doc_count != self.doc_lengths.len() {
            return Err(format!("doc_count {} does not match {} doc lengths", self.doc_count, self.doc_lengths.len()));
        }
        let expected_avg = if self.doc_count == 0 {
            0.0
        } else {
            self.doc_lengths.values().map(|&l| f64::from(l)).sum::<f64>() / self.doc_count as f64
        };
        if (expected_avg - self.avg_doc_length).abs() > 1e-9 * expected_avg.abs().max(1.0) {
            return Err(format!("avg_doc_length {} differs from mean {expected_avg}", self.avg_doc_length));
        }
        for (term, list) in &self.postings {
            if list.windows(2).any(|w| w[0].resource_id >= w[1].resource_id) {
                return Err(format!("postings for {term:?} are not strictly sorted by resource id"));
            }
            if let Some(p) = list.iter().find(|p| !self.doc_lengths.contains_key(&p.resource_id)) {
                return Err(format!("posting for {term:?} references unknown document {:?}", p.resource_id));
            }
        }
        Ok(())
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.doc_count as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Score every document that contains at least one query term, fully ordered.
    pub fn rank(&self, query_text: &str) -> Vec<Hit> {
        let terms: BTreeSet<String> = tokenize(query_text).into_iter().collect();
        let mut scores: HashMap<&str, f64> = HashMap::new();

        for term in &terms {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = self.idf(list.len());
            for posting in list {
                let doc_len = f64::from(self.doc_lengths[&posting.resource_id]);
                let tf = f64::from(posting.tf);
                let norm = 1.0 - BM25_B + BM25_B * doc_len / self.avg_doc_length;
                let contribution = idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * norm);
                *scores.entry(posting.resource_id.as_str()).or_insert(0.0) += contribution;
            }
        }

        let mut hits: Vec<Hit> =
            scores.into_iter().map(|(id, score)| Hit { resource_id: id.to_string(), score }).collect();
        hits.sort_by(rank_order);
        hits
    }

    pub fn search(&self, query_text: &str, page: usize, page_size: usize) -> Result<SearchPage, SearchError> {
        check_paging(page, page_size)?;
        let ranked = self.rank(query_text);
        let total_hits = ranked.len();
        let hits = ranked.into_iter().skip((page - 1).saturating_mul(page_size)).take(page_size).collect();
        Ok(SearchPage { query_text: query_text.to_string(), hits, page, page_size, total_hits })
    }
}
