//! Test-only oracles, generators and invariant checks.
//!
//! Everything here is deliberately written without calling into the code it
//! checks: the BM25 oracle scans raw text with its own tokenizer, and the
//! timeline checks recompute expectations straight from the event list.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::time::Duration;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use timelines_core::activity::{ActivityEvent, Command, EventId, EventKind, TopicId, UserActivity, UserId};
use timelines_core::catalog::{Catalog, Resource, ResourceType};
use timelines_core::timeline::{TimelineDetail, TimelineView};
use timelines_core::Timestamp;

pub const SAMPLE_CATALOG: &str = include_str!("../../../data/catalog.sample.jsonl");

pub fn sample_catalog() -> Catalog {
    Catalog::ingest(SAMPLE_CATALOG.as_bytes(), true).expect("sample catalog is valid").0
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// BM25 brute-force oracle
// ---------------------------------------------------------------------------

/// Lowercased alphanumeric runs, scanned character by character.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn oracle_doc_text(r: &Resource) -> String {
    let mut parts = vec![r.title.clone()];
    parts.extend(r.authors.iter().cloned());
    parts.extend(r.description.iter().cloned());
    parts.join(" ")
}

/// Exhaustive BM25 scorer over pre-tokenized documents. Shares nothing with
/// the inverted index: every query scans every document.
pub struct Bm25Oracle {
    docs: Vec<(String, Vec<String>)>,
    avgdl: f64,
}

impl Bm25Oracle {
    pub fn new(resources: &[Resource]) -> Self {
        let docs: Vec<(String, Vec<String>)> =
            resources.iter().map(|r| (r.resource_id.clone(), oracle_tokens(&oracle_doc_text(r)))).collect();
        let total_len: u64 = docs.iter().map(|(_, t)| t.len() as u64).sum();
        let avgdl = if docs.is_empty() { 0.0 } else { total_len as f64 / docs.len() as f64 };
        Bm25Oracle { docs, avgdl }
    }

    /// Matches ordered by score descending, then resource id ascending.
    pub fn rank(&self, query: &str) -> Vec<(String, f64)> {
        const K1: f64 = 1.2;
        const B: f64 = 0.75;

        let n = self.docs.len() as f64;
        let terms: BTreeSet<String> = oracle_tokens(query).into_iter().collect();
        let idf: Vec<(String, f64)> = terms
            .into_iter()
            .map(|term| {
                let df = self.docs.iter().filter(|(_, t)| t.contains(&term)).count() as f64;
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                (term, idf)
            })
            .collect();

        let mut scored = Vec::new();
        for (id, tokens) in &self.docs {
            let mut score = 0.0;
            let mut matched = false;
            for (term, idf) in &idf {
                let tf = tokens.iter().filter(|t| *t == term).count();
                if tf == 0 {
                    continue;
                }
                matched = true;
                let tf = tf as f64;
                let norm = 1.0 - B + B * tokens.len() as f64 / self.avgdl;
                score += idf * tf * (K1 + 1.0) / (tf + K1 * norm);
            }
            if matched {
                scored.push((id.clone(), score));
            }
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored
    }
}

/// One-shot form of [`Bm25Oracle::rank`].
pub fn bm25_oracle(resources: &[Resource], query: &str) -> Vec<(String, f64)> {
    Bm25Oracle::new(resources).rank(query)
}

/// Document frequency of every term, by linear scan.
pub fn naive_document_frequencies(resources: &[Resource]) -> BTreeMap<String, usize> {
    let mut df = BTreeMap::new();
    for r in resources {
        let distinct: BTreeSet<String> = oracle_tokens(&oracle_doc_text(r)).into_iter().collect();
        for t in distinct {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    df
}

pub const VOCABULARY: &[&str] = &[
    "indigenous",
    "people",
    "french",
    "revolution",
    "first",
    "nations",
    "history",
    "treaty",
    "bastille",
    "monarchy",
    "terror",
    "culture",
    "land",
    "rights",
    "canada",
    "france",
    "paris",
    "prairie",
    "river",
    "children",
    "school",
    "war",
    "peace",
    "bread",
    "crisis",
    "queen",
    "king",
    "empire",
    "story",
    "songs",
    "atlas",
    "north",
    "south",
    "reconciliation",
    "language",
    "art",
    "music",
    "film",
    "novel",
    "letters",
];

fn random_words(rng: &mut impl Rng, min: usize, max: usize) -> String {
    let n = rng.random_range(min..=max);
    (0..n).map(|_| *VOCABULARY.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// A random corpus of `n` documents with ids `d000`, `d001`, ...
pub fn synthetic_corpus(rng: &mut impl Rng, n: usize) -> Vec<Resource> {
    (0..n)
        .map(|i| Resource {
            resource_id: format!("d{i:03}"),
            title: random_words(rng, 1, 8),
            authors: (0..rng.random_range(0..=2)).map(|_| random_words(rng, 1, 2)).collect(),
            year: Some(rng.random_range(1900..=2024)),
            resource_type: *ResourceType::ALL.choose(rng).unwrap(),
            description: rng.random_bool(0.5).then(|| random_words(rng, 3, 20)),
            cover_ref: None,
        })
        .collect()
}

/// 1–3 vocabulary words, occasionally one that appears nowhere.
pub fn random_query(rng: &mut impl Rng) -> String {
    let mut q = random_words(rng, 1, 3);
    if rng.random_bool(0.1) {
        q.push_str(" zyzzyva");
    }
    q
}

// ---------------------------------------------------------------------------
// Session counting oracle
// ---------------------------------------------------------------------------

/// Number of sessions implied by sorted timestamps: one plus the number of
/// neighbouring gaps that exceed the idle gap.
pub fn count_sessions_oracle(sorted_millis: &[i64], idle_gap: Duration) -> usize {
    if sorted_millis.is_empty() {
        return 0;
    }
    let gap = idle_gap.as_millis() as i64;
    1 + sorted_millis.windows(2).filter(|w| w[1] - w[0] > gap).count()
}

// ---------------------------------------------------------------------------
// Random activity scenarios
// ---------------------------------------------------------------------------

pub const ALL_EVENT_KINDS: [&str; 5] =
    ["query_issued", "result_saved", "result_removed", "topic_renamed", "topic_resumed"];

#[derive(Debug, Clone)]
pub struct Scenario {
    pub user_id: UserId,
    pub live: UserActivity,
    /// Accepted events in append order: exactly what a user log holds.
    pub log: Vec<ActivityEvent>,
    pub rejected_commands: usize,
}

impl Scenario {
    pub fn kinds_seen(&self) -> BTreeSet<&'static str> {
        self.log.iter().map(|e| e.kind.name()).collect()
    }
}

fn advance(rng: &mut impl Rng, now: &mut i64) {
    const SEC: i64 = 1000;
    const MIN: i64 = 60 * SEC;
    let step = match rng.random_range(0..100) {
        0..=64 => rng.random_range(2 * SEC..=120 * SEC),
        65..=86 => rng.random_range(2 * MIN..=28 * MIN),
        87..=95 => rng.random_range(31 * MIN..=240 * MIN),
        _ => rng.random_range(7 * 24 * 60 * MIN..=8 * 24 * 60 * MIN),
    };
    *now += step;
}

/// Drive a fresh user through random commands until at least `min_events`
/// events were accepted and every event kind occurred. Some commands are
/// expected to fail (duplicate saves, reissue into a non-ongoing topic, ...);
/// failures must leave state untouched, which the caller can verify by
/// replaying `log`.
pub fn random_scenario(seed: u64, min_events: usize, catalog: &Catalog) -> Scenario {
    let mut rng = rng(seed);
    let user_id = UserId::new(format!("user{seed}"));
    let mut live = UserActivity::new(user_id.clone());
    let mut log = Vec::new();
    let mut rejected = 0;
    let mut now: i64 = 1_700_000_000_000 + rng.random_range(0..1_000_000_000);
    let resource_ids: Vec<String> = catalog.iter().map(|r| r.resource_id.clone()).collect();

    let mut steps = 0;
    loop {
        steps += 1;
        let kinds: BTreeSet<&str> = log.iter().map(|e: &ActivityEvent| e.kind.name()).collect();
        if log.len() >= min_events && kinds.len() == ALL_EVENT_KINDS.len() {
            break;
        }
        assert!(steps < min_events * 50 + 10_000, "scenario generator is not making progress");

        advance(&mut rng, &mut now);
        // Occasional client clock running slightly behind.
        let at = Timestamp::from_millis(now - if rng.random_bool(0.05) { rng.random_range(0..3_000) } else { 0 });

        let topics: Vec<TopicId> = live.topics().map(|t| t.topic.topic_id.clone()).collect();
        let ongoing = live.ongoing_topic_id().cloned();
        let queries_of = |topic: &TopicId| -> Vec<EventId> {
            live.topic(topic)
                .map(|t| {
                    t.events()
                        .iter()
                        .filter(|e| matches!(e.kind, EventKind::QueryIssued { .. }))
                        .map(|e| e.event_id)
                        .collect()
                })
                .unwrap_or_default()
        };

        let roll = rng.random_range(0..100);
        let command = match roll {
            0..=21 => Command::IssueQuery { query_text: random_words(&mut rng, 1, 3) },
            22..=25 => Command::StartTopic { query_text: random_words(&mut rng, 1, 3) },
            26..=57 => {
                let Some(topic_id) =
                    (if rng.random_bool(0.9) { ongoing.clone() } else { topics.choose(&mut rng).cloned() })
                else {
                    continue;
                };
                let queries = queries_of(&topic_id);
                let Some(&query_event_id) = queries.choose(&mut rng) else { continue };
                let resource_id = if rng.random_bool(0.03) {
                    "no-such-resource".to_string()
                } else {
                    resource_ids.choose(&mut rng).cloned().unwrap_or_default()
                };
                Command::SaveResult { topic_id, query_event_id, resource_id }
            }
            58..=71 => {
                let Some(topic_id) = topics.choose(&mut rng).cloned() else { continue };
                let active: Vec<String> = live
                    .topic(&topic_id)
                    .map(|t| t.active_resources().map(str::to_string).collect())
                    .unwrap_or_default();
                let resource_id = match active.choose(&mut rng) {
                    Some(r) if rng.random_bool(0.95) => r.clone(),
                    _ => resource_ids.choose(&mut rng).cloned().unwrap_or_default(),
                };
                Command::RemoveResult { topic_id, resource_id }
            }
            72..=83 => {
                let Some(topic_id) =
                    (if rng.random_bool(0.85) { ongoing.clone() } else { topics.choose(&mut rng).cloned() })
                else {
                    continue;
                };
                let queries = queries_of(&topic_id);
                let Some(&query_event_id) = queries.choose(&mut rng) else { continue };
                Command::ReissueQuery { topic_id, query_event_id }
            }
            84..=90 => {
                let Some(topic_id) = topics.choose(&mut rng).cloned() else { continue };
                let new_title = if rng.random_bool(0.05) { "  ".to_string() } else { random_words(&mut rng, 1, 4) };
                Command::RenameTopic { topic_id, new_title }
            }
            _ => {
                let Some(topic_id) = topics.choose(&mut rng).cloned() else { continue };
                Command::ResumeTopic { topic_id }
            }
        };

        match live.execute(&command, at, catalog) {
            Ok(event) => log.push(event),
            Err(_) => rejected += 1,
        }
    }

    Scenario { user_id, live, log, rejected_commands: rejected }
}

// ---------------------------------------------------------------------------
// Timeline invariants
// ---------------------------------------------------------------------------

/// Check a timeline against the raw events of its topic. Returns the first
/// violated property.
pub fn check_timeline(view: &TimelineView, topic_events: &[ActivityEvent], catalog: &Catalog) -> Result<(), String> {
    // Sessions newest first, and every (session, query) pair strictly
    // descending in (time, id).
    for pair in view.sessions.windows(2) {
        if !(pair[0].start_at > pair[1].end_at && pair[0].session_id > pair[1].session_id) {
            return Err(format!("sessions {} and {} are not newest-first", pair[0].session_id, pair[1].session_id));
        }
    }
    let flat: Vec<(Timestamp, EventId)> = view.query_groups().map(|q| (q.issued_at, q.query_event_id)).collect();
    if flat.windows(2).any(|w| w[0] <= w[1]) {
        return Err("query groups are not strictly newest-first".into());
    }
    for s in &view.sessions {
        if s.query_groups.is_empty() {
            return Err(format!("session {} rendered without queries", s.session_id));
        }
        for q in &s.query_groups {
            if q.issued_at < s.start_at || q.issued_at > s.end_at {
                return Err(format!("query {} lies outside its session span", q.query_event_id));
            }
        }
    }

    let queries: HashMap<EventId, &ActivityEvent> = topic_events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::QueryIssued { .. }))
        .map(|e| (e.event_id, e))
        .collect();
    let saves: HashMap<EventId, &ActivityEvent> = topic_events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::ResultSaved { .. }))
        .map(|e| (e.event_id, e))
        .collect();
    let removals: HashMap<EventId, Timestamp> = topic_events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::ResultRemoved { save_event_id } => Some((save_event_id, e.at)),
            _ => None,
        })
        .collect();

    // Every query present, including zero-save ones.
    let rendered_queries: HashSet<EventId> = view.query_groups().map(|q| q.query_event_id).collect();
    if rendered_queries.len() != queries.len() || queries.keys().any(|id| !rendered_queries.contains(id)) {
        return Err(format!("{} queries logged but {} rendered", queries.len(), rendered_queries.len()));
    }

    let mut entries = 0;
    for q in view.query_groups() {
        let source = queries[&q.query_event_id];
        if let EventKind::QueryIssued { query_text, .. } = &source.kind {
            if query_text != &q.query_text || source.at != q.issued_at {
                return Err(format!("query group {} does not match its event", q.query_event_id));
            }
        }
        let order: Vec<(Timestamp, EventId)> = q.saves.iter().map(|s| (s.saved_at, s.save_event_id)).collect();
        if order.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("saves under {} are not ascending", q.query_event_id));
        }
        for entry in &q.saves {
            entries += 1;
            let Some(save) = saves.get(&entry.save_event_id) else {
                return Err(format!("entry {} has no ResultSaved event", entry.save_event_id));
            };
            let EventKind::ResultSaved { query_event_id, resource_id } = &save.kind else { unreachable!() };
            if *query_event_id != q.query_event_id || entry.query_event_id != q.query_event_id {
                return Err(format!("entry {} is not linked to its source query", entry.save_event_id));
            }
            if resource_id != &entry.resource_id || save.at != entry.saved_at {
                return Err(format!("entry {} does not match its event", entry.save_event_id));
            }
            let removed = removals.get(&entry.save_event_id).copied();
            if entry.removed != removed.is_some() || entry.removed_at != removed {
                return Err(format!("entry {} has wrong removal flag", entry.save_event_id));
            }
            let resource = catalog.get(resource_id);
            if let Some(r) = resource {
                if entry.title != r.title || entry.resource_type != r.resource_type {
                    return Err(format!("entry {} title/icon do not match the catalog", entry.save_event_id));
                }
            }
            match view.detail {
                TimelineDetail::Overview if entry.card.is_some() => {
                    return Err(format!("overview entry {} carries a full card", entry.save_event_id));
                }
                TimelineDetail::Detailed if entry.card.as_ref() != resource => {
                    return Err(format!("detailed entry {} lacks its card", entry.save_event_id));
                }
                _ => {}
            }
        }
    }
    if entries != saves.len() {
        return Err(format!("{} ResultSaved events but {entries} entries", saves.len()));
    }
    Ok(())
}

/// Events of one topic, in log order.
pub fn topic_events(log: &[ActivityEvent], topic_id: &TopicId) -> Vec<ActivityEvent> {
    log.iter().filter(|e| &e.topic_id == topic_id).cloned().collect()
}

/// Serialize every timeline of a user at both detail levels.
pub fn serialized_timelines(user: &UserActivity, catalog: &Catalog, idle_gap: Duration) -> String {
    let mut out = String::new();
    for topic in user.topics() {
        for detail in [TimelineDetail::Overview, TimelineDetail::Detailed] {
            let view = user.timeline(&topic.topic.topic_id, detail, catalog, idle_gap).expect("topic exists");
            out.push_str(&serde_json::to_string(&view).expect("timeline serializes"));
            out.push('\n');
        }
    }
    out.push_str(&format!("ongoing={:?}\n", user.ongoing_topic_id()));
    out
}
