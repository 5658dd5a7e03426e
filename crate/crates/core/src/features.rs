//! URL base vector and binary access-pattern extraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, Write};

use thiserror::Error;

use crate::ingest::{AccessEvent, Session};

/// Default minimum per-session request count for a pattern bit to be set.
pub const DEFAULT_FREQ_THRESHOLD: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("cannot build a base vector from an empty corpus")]
    EmptyCorpus,
    #[error("video `{0}` is not part of the base vector")]
    UnknownVideo(String),
    #[error("frequency threshold must be at least 1")]
    ZeroThreshold,
}

/// Ordered universe of video ids; position `i` is pattern bit `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseVector {
    urls: Vec<String>,
    index_of: HashMap<String, usize>,
}

impl BaseVector {
    /// Sorted distinct video ids observed in `events`.
    pub fn build(events: &[AccessEvent]) -> Result<Self, FeatureError> {
        let ids: BTreeSet<&str> = events.iter().map(|e| e.video_id.as_str()).collect();
        if ids.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        Ok(Self::from_sorted(ids.into_iter().map(str::to_owned).collect()))
    }

    /// Builds from an explicit id list, dropping duplicates and sorting.
    pub fn from_ids<I, S>(ids: I) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let ids: BTreeSet<String> = ids.into_iter().map(Into::into).collect();
        if ids.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        Ok(Self::from_sorted(ids.into_iter().collect()))
    }

    fn from_sorted(urls: Vec<String>) -> Self {
        let index_of = urls.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
        BaseVector { urls, index_of }
    }

    /// Appends videos not yet in the base, in lexicographic order among
    /// themselves. Existing indices never move. Returns how many were added.
    pub fn extend(&mut self, events: &[AccessEvent]) -> usize {
        let fresh: BTreeSet<&str> = events
            .iter()
            .map(|e| e.video_id.as_str())
            .filter(|v| !self.index_of.contains_key(*v))
            .collect();
        for v in &fresh {
            self.index_of.insert((*v).to_owned(), self.urls.len());
            self.urls.push((*v).to_owned());
        }
        fresh.len()
    }

    pub fn len(&self) -> usize {
        self.urls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.urls.is_empty()
    }

    pub fn urls(&self) -> &[String] {
        &self.urls
    }

    pub fn url(&self, idx: usize) -> Option<&str> {
        self.urls.get(idx).map(String::as_str)
    }

    pub fn index_of(&self, video: &str) -> Option<usize> {
        self.index_of.get(video).copied()
    }
}

/// Binary request pattern of one client over one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternVector {
    pub client_id: String,
    /// Index of the originating session in the caller's session list.
    pub session_ref: usize,
    pub bits: Vec<u8>,
}

impl PatternVector {
    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Zero-pads to `len` after the base vector grew.
    pub fn pad_to(&mut self, len: usize) {
        if self.bits.len() < len {
            self.bits.resize(len, 0);
        }
    }
}

/// Bit `i` is 1 iff `base[i]` was requested at least `freq_threshold`
/// times in the session.
pub fn extract_pattern(
    session: &Session,
    session_ref: usize,
    base: &BaseVector,
    freq_threshold: u32,
) -> Result<PatternVector, FeatureError> {
    let bits = pattern_bits(&session.events, base, freq_threshold)?;
    Ok(PatternVector {
        client_id: session.client_id.clone(),
        session_ref,
        bits,
    })
}

/// Frequency-threshold bits over an arbitrary event slice, for callers that
/// count over a window other than a single session.
pub fn pattern_bits(events: &[AccessEvent], base: &BaseVector, freq_threshold: u32) -> Result<Vec<u8>, FeatureError> {
    if freq_threshold == 0 {
        return Err(FeatureError::ZeroThreshold);
    }
    let mut counts = vec![0u32; base.len()];
    for e in events {
        let idx = base
            .index_of(&e.video_id)
            .ok_or_else(|| FeatureError::UnknownVideo(e.video_id.clone()))?;
        counts[idx] += 1;
    }
    Ok(counts.into_iter().map(|c| u8::from(c >= freq_threshold)).collect())
}

/// Per-video request counts of a session, keyed by video id.
pub fn session_counts(session: &Session) -> BTreeMap<&str, u32> {
    let mut counts = BTreeMap::new();
    for e in &session.events {
        *counts.entry(e.video_id.as_str()).or_insert(0) += 1;
    }
    counts
}

/// Writes the pattern matrix as comma-separated text: a header of
/// `client,session` followed by the base URLs, then one row per pattern.
pub fn write_pattern_matrix<W: Write>(mut out: W, base: &BaseVector, patterns: &[PatternVector]) -> io::Result<()> {
    write!(out, "client,session")?;
    for u in base.urls() {
        write!(out, ",{u}")?;
    }
    writeln!(out)?;
    for p in patterns {
        write!(out, "{},{}", p.client_id, p.session_ref)?;
        for i in 0..base.len() {
            write!(out, ",{}", p.bits.get(i).copied().unwrap_or(0))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::segment_sessions;

    fn events(client: &str, videos: &[&str]) -> Vec<AccessEvent> {
        videos
            .iter()
            .enumerate()
            .map(|(i, v)| AccessEvent::new(client, i as i64, v).unwrap())
            .collect()
    }

    fn one_session(client: &str, videos: &[&str]) -> Session {
        segment_sessions(&events(client, videos), 1800).remove(0)
    }

    #[test]
    fn base_is_sorted_distinct() {
        let base = BaseVector::build(&events("c", &["v2", "v1", "v2"])).unwrap();
        assert_eq!(base.urls(), ["v1", "v2"]);
        assert_eq!(base.index_of("v2"), Some(1));
        assert_eq!(BaseVector::build(&[]), Err(FeatureError::EmptyCorpus));
    }

    #[test]
    fn two_hundred_videos() {
        let ids: Vec<String> = (1..=200).map(|i| format!("v{i:03}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let base = BaseVector::build(&events("c", &refs)).unwrap();
        assert_eq!(base.len(), 200);
    }

    #[test]
    fn base_is_order_independent() {
        let mut evs = events("c", &["v3", "v1", "v9", "v2", "v1"]);
        let a = BaseVector::build(&evs).unwrap();
        evs.reverse();
        let b = BaseVector::build(&evs).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn extend_appends_without_moving() {
        let mut base = BaseVector::build(&events("c", &["v5", "v7"])).unwrap();
        let added = base.extend(&events("c", &["v7", "v6", "v1"]));
        assert_eq!(added, 2);
        assert_eq!(base.urls(), ["v5", "v7", "v1", "v6"]);
        assert_eq!(base.extend(&events("c", &["v1"])), 0);
    }

    #[test]
    fn threshold_two() {
        let base = BaseVector::from_ids(["v1", "v2"]).unwrap();
        let s = one_session("c1", &["v1", "v2", "v1", "v1"]);
        let p = extract_pattern(&s, 0, &base, DEFAULT_FREQ_THRESHOLD).unwrap();
        assert_eq!(p.bits, [1, 0]);
        assert_eq!(p.client_id, "c1");
    }

    #[test]
    fn threshold_one_marks_every_request() {
        let base = BaseVector::from_ids(["v1", "v2", "v3"]).unwrap();
        let s = one_session("c1", &["v3", "v1"]);
        assert_eq!(extract_pattern(&s, 0, &base, 1).unwrap().bits, [1, 0, 1]);
        assert_eq!(extract_pattern(&s, 0, &base, 0), Err(FeatureError::ZeroThreshold));
    }

    #[test]
    fn unknown_video_named() {
        let base = BaseVector::from_ids(["v1"]).unwrap();
        let s = one_session("c1", &["v1", "zz"]);
        assert_eq!(
            extract_pattern(&s, 0, &base, 2),
            Err(FeatureError::UnknownVideo("zz".into()))
        );
    }

    #[test]
    fn pad_to_grows_with_zeros() {
        let mut p = PatternVector {
            client_id: "c".into(),
            session_ref: 0,
            bits: vec![1, 0],
        };
        p.pad_to(4);
        assert_eq!(p.bits, [1, 0, 0, 0]);
        assert_eq!(p.ones(), 1);
    }

    #[test]
    fn matrix_dump() {
        let base = BaseVector::from_ids(["a", "b"]).unwrap();
        let p = PatternVector {
            client_id: "c1".into(),
            session_ref: 3,
            bits: vec![0, 1],
        };
        let mut buf = Vec::new();
        write_pattern_matrix(&mut buf, &base, &[p]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "client,session,a,b\nc1,3,0,1\n");
    }
}
