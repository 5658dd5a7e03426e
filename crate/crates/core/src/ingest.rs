//! Request-log ingestion: parsing raw lines, reducing them to
//! `<client, date, video>` access events, and splitting each client's
//! stream into idle-bounded sessions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;

use chrono::{DateTime, NaiveDate};
use thiserror::Error;

/// Default idle cutoff between two requests of the same session (30 min).
pub const DEFAULT_MAX_IDLE_SECS: i64 = 1800;

/// Status code accepted by [`preprocess`] when no filter is supplied.
pub const DEFAULT_STATUS: u16 = 200;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("line {line}: expected at least 6 fields, found {found}")]
    TooFewFields { line: usize, found: usize },
    #[error("line {line}: field `{field}` is not a valid number: {value:?}")]
    BadNumber {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: field `{field}` must not be empty")]
    EmptyField { line: usize, field: &'static str },
    #[error("line {line}: timestamp {value} is before the epoch")]
    NegativeTimestamp { line: usize, value: i64 },
    #[error("timestamp {0} is outside the representable calendar range")]
    TimestampOutOfRange(i64),
    #[error("i/o error while reading log: {0}")]
    Io(String),
}

/// Field separator of an input log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogFormat {
    #[default]
    Whitespace,
    Comma,
}

/// One raw line of a multimedia server log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    pub client_id: String,
    /// Parsed and carried, but every downstream stage keys on `client_id`.
    pub user_id: String,
    pub timestamp: i64,
    pub video_id: String,
    pub status_code: u16,
    pub bytes_sent: u64,
}

impl LogRecord {
    /// Renders the record in the whitespace log format accepted by [`parse_log_line`].
    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {} {} {}",
            self.client_id, self.user_id, self.timestamp, self.video_id, self.status_code, self.bytes_sent
        )
    }
}

/// A preprocessed request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessEvent {
    pub client_id: String,
    /// UTC calendar date of `timestamp`.
    pub date: NaiveDate,
    pub timestamp: i64,
    pub video_id: String,
}

impl AccessEvent {
    pub fn new(client_id: &str, timestamp: i64, video_id: &str) -> Result<Self, IngestError> {
        Ok(AccessEvent {
            client_id: client_id.to_owned(),
            date: utc_date(timestamp)?,
            timestamp,
            video_id: video_id.to_owned(),
        })
    }
}

/// A maximal burst of one client's requests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub client_id: String,
    pub start: i64,
    pub end: i64,
    pub events: Vec<AccessEvent>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Distinct videos requested in this session.
    pub fn videos(&self) -> BTreeSet<&str> {
        self.events.iter().map(|e| e.video_id.as_str()).collect()
    }
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}@[{}, {}] ({} events)",
            self.client_id,
            self.start,
            self.end,
            self.events.len()
        )
    }
}

pub fn utc_date(timestamp: i64) -> Result<NaiveDate, IngestError> {
    DateTime::from_timestamp(timestamp, 0)
        .map(|dt| dt.date_naive())
        .ok_or(IngestError::TimestampOutOfRange(timestamp))
}

/// Parses one whitespace-separated log line. `line_no` is reported in errors.
pub fn parse_log_line(line: &str, line_no: usize) -> Result<LogRecord, IngestError> {
    parse_fields(line.split_whitespace().collect(), line_no)
}

/// Parses one line in the given format.
pub fn parse_line_with(line: &str, line_no: usize, format: LogFormat) -> Result<LogRecord, IngestError> {
    match format {
        LogFormat::Whitespace => parse_log_line(line, line_no),
        LogFormat::Comma => parse_fields(line.split(',').map(str::trim).collect(), line_no),
    }
}

fn parse_fields(fields: Vec<&str>, line: usize) -> Result<LogRecord, IngestError> {
    if fields.len() < 6 {
        return Err(IngestError::TooFewFields {
            line,
            found: fields.len(),
        });
    }
    let text = |idx: usize, field: &'static str| -> Result<String, IngestError> {
        if fields[idx].is_empty() {
            Err(IngestError::EmptyField { line, field })
        } else {
            Ok(fields[idx].to_owned())
        }
    };
    let bad = |field: &'static str, value: &str| IngestError::BadNumber {
        line,
        field,
        value: value.to_owned(),
    };

    let client_id = text(0, "client_id")?;
    let user_id = fields[1].to_owned();
    let timestamp: i64 = fields[2].parse().map_err(|_| bad("timestamp", fields[2]))?;
    if timestamp < 0 {
        return Err(IngestError::NegativeTimestamp { line, value: timestamp });
    }
    let video_id = text(3, "video_id")?;
    let status_code: u16 = fields[4].parse().map_err(|_| bad("status_code", fields[4]))?;
    let bytes_sent: u64 = fields[5].parse().map_err(|_| bad("bytes_sent", fields[5]))?;

    Ok(LogRecord {
        client_id,
        user_id,
        timestamp,
        video_id,
        status_code,
        bytes_sent,
    })
}

/// Parses a whole log. Blank lines and lines starting with `#` are skipped;
/// line numbers in errors are 1-based.
pub fn parse_log<R: BufRead>(reader: R, format: LogFormat) -> Result<Vec<LogRecord>, IngestError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| IngestError::Io(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        records.push(parse_line_with(trimmed, idx + 1, format)?);
    }
    Ok(records)
}

/// Keeps records whose status is in `status_filter` and reduces them to
/// access events, preserving input order.
pub fn preprocess(records: &[LogRecord], status_filter: &BTreeSet<u16>) -> Result<Vec<AccessEvent>, IngestError> {
    records
        .iter()
        .filter(|r| status_filter.contains(&r.status_code))
        .map(|r| AccessEvent::new(&r.client_id, r.timestamp, &r.video_id))
        .collect()
}

pub fn default_status_filter() -> BTreeSet<u16> {
    BTreeSet::from([DEFAULT_STATUS])
}

/// Splits events into per-client sessions. A gap strictly larger than
/// `max_idle` closes the current session. Events with equal timestamps keep
/// their input order. Sessions come back ordered by `(start, client_id)`.
pub fn segment_sessions(events: &[AccessEvent], max_idle: i64) -> Vec<Session> {
    assert!(max_idle > 0, "maximum idle time must be positive");

    let mut per_client: BTreeMap<&str, Vec<&AccessEvent>> = BTreeMap::new();
    for ev in events {
        per_client.entry(ev.client_id.as_str()).or_default().push(ev);
    }

    let mut sessions = Vec::new();
    for (client, mut evs) in per_client {
        // stable: equal timestamps stay in input order
        evs.sort_by_key(|e| e.timestamp);
        let mut current: Vec<AccessEvent> = Vec::new();
        for ev in evs {
            if let Some(last) = current.last() {
                if ev.timestamp - last.timestamp > max_idle {
                    sessions.push(close_session(client, std::mem::take(&mut current)));
                }
            }
            current.push(ev.clone());
        }
        if !current.is_empty() {
            sessions.push(close_session(client, current));
        }
    }
    sessions.sort_by(|a, b| (a.start, &a.client_id).cmp(&(b.start, &b.client_id)));
    sessions
}

fn close_session(client: &str, events: Vec<AccessEvent>) -> Session {
    Session {
        client_id: client.to_owned(),
        start: events[0].timestamp,
        end: events[events.len() - 1].timestamp,
        events,
    }
}

/// How sessions are grouped into the windows that drive re-clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowRule {
    /// A new window opens whenever the server as a whole sits idle for more
    /// than the given number of seconds.
    GlobalIdle(i64),
    /// Fixed-length windows of the given number of seconds, aligned to the
    /// first session start.
    Fixed(i64),
}

/// Groups sessions into consecutive windows by session start time. Empty
/// fixed windows between busy ones are kept so indices reflect elapsed time.
pub fn group_windows(sessions: &[Session], rule: WindowRule) -> Vec<Vec<Session>> {
    let mut ordered: Vec<&Session> = sessions.iter().collect();
    ordered.sort_by(|a, b| (a.start, &a.client_id).cmp(&(b.start, &b.client_id)));
    let Some(first) = ordered.first() else {
        return Vec::new();
    };

    match rule {
        WindowRule::Fixed(len) => {
            assert!(len > 0, "window length must be positive");
            let origin = first.start;
            let mut windows: Vec<Vec<Session>> = Vec::new();
            for s in ordered {
                let idx = ((s.start - origin) / len) as usize;
                if windows.len() <= idx {
                    windows.resize_with(idx + 1, Vec::new);
                }
                windows[idx].push(s.clone());
            }
            windows
        }
        WindowRule::GlobalIdle(idle) => {
            assert!(idle > 0, "window idle time must be positive");
            let mut windows: Vec<Vec<Session>> = vec![Vec::new()];
            let mut horizon = first.end;
            for s in ordered {
                if s.start - horizon > idle {
                    windows.push(Vec::new());
                }
                horizon = horizon.max(s.end);
                windows.last_mut().unwrap().push(s.clone());
            }
            windows
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(client: &str, t: i64, v: &str) -> AccessEvent {
        AccessEvent::new(client, t, v).unwrap()
    }

    #[test]
    fn parses_six_fields() {
        let rec = parse_log_line("c1 u1 1000 v42 200 512", 1).unwrap();
        assert_eq!(
            rec,
            LogRecord {
                client_id: "c1".into(),
                user_id: "u1".into(),
                timestamp: 1000,
                video_id: "v42".into(),
                status_code: 200,
                bytes_sent: 512,
            }
        );
    }

    #[test]
    fn trailing_fields_ignored() {
        let rec = parse_log_line("c1 u1 1000 v42 200 512 extra junk", 3).unwrap();
        assert_eq!(rec.bytes_sent, 512);
    }

    #[test]
    fn too_few_fields() {
        assert_eq!(
            parse_log_line("c1 u1", 7),
            Err(IngestError::TooFewFields { line: 7, found: 2 })
        );
    }

    #[test]
    fn non_numeric_fields_rejected() {
        for line in ["c1 u1 abc v1 200 1", "c1 u1 10 v1 ok 1", "c1 u1 10 v1 200 -4"] {
            assert!(matches!(
                parse_log_line(line, 2),
                Err(IngestError::BadNumber { line: 2, .. })
            ));
        }
        assert!(matches!(
            parse_log_line("c1 u1 -10 v1 200 4", 2),
            Err(IngestError::NegativeTimestamp { .. })
        ));
    }

    #[test]
    fn comma_format() {
        let rec = parse_line_with("c1, u1, 1000, v42, 200, 512", 1, LogFormat::Comma).unwrap();
        assert_eq!(rec.video_id, "v42");
        assert!(matches!(
            parse_line_with(",u1,1000,v42,200,512", 1, LogFormat::Comma),
            Err(IngestError::EmptyField { field: "client_id", .. })
        ));
    }

    #[test]
    fn parse_log_skips_comments_and_reports_line_numbers() {
        let text = "# header\nc1 u1 1 v1 200 1\n\nc2 u2 x v1 200 1\n";
        let err = parse_log(text.as_bytes(), LogFormat::Whitespace).unwrap_err();
        assert!(matches!(err, IngestError::BadNumber { line: 4, .. }));
        let ok = parse_log("# only\nc1 u1 1 v1 200 1\n".as_bytes(), LogFormat::Whitespace).unwrap();
        assert_eq!(ok.len(), 1);
    }

    #[test]
    fn preprocess_filters_by_status() {
        let filter = default_status_filter();
        assert!(preprocess(&[], &filter).unwrap().is_empty());

        let r404 = parse_log_line("c1 u1 10 v1 404 0", 1).unwrap();
        assert!(preprocess(&[r404], &filter).unwrap().is_empty());

        let recs: Vec<_> = ["c1 u1 10 v1 200 5", "c1 u1 11 v2 200 5", "c1 u1 12 v3 500 5"]
            .iter()
            .map(|l| parse_log_line(l, 1).unwrap())
            .collect();
        let events = preprocess(&recs, &filter).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[1].video_id, "v2");
    }

    #[test]
    fn date_is_utc() {
        let rec = parse_log_line("c7 u7 1696118400 v3 200 2048", 1).unwrap();
        let events = preprocess(&[rec], &default_status_filter()).unwrap();
        assert_eq!(events[0].date, NaiveDate::from_ymd_opt(2023, 10, 1).unwrap());
        // one second earlier is still September
        assert_eq!(
            utc_date(1696118399).unwrap(),
            NaiveDate::from_ymd_opt(2023, 9, 30).unwrap()
        );
    }

    #[test]
    fn idle_gap_splits_session() {
        let events = vec![ev("c1", 0, "a"), ev("c1", 100, "b"), ev("c1", 2000, "c")];
        let sessions = segment_sessions(&events, 900);
        assert_eq!(sessions.len(), 2);
        assert_eq!((sessions[0].start, sessions[0].end), (0, 100));
        assert_eq!((sessions[1].start, sessions[1].end), (2000, 2000));
    }

    #[test]
    fn gap_equal_to_idle_stays_in_session() {
        let events = vec![ev("c1", 0, "a"), ev("c1", 900, "b")];
        assert_eq!(segment_sessions(&events, 900).len(), 1);
        let events = vec![ev("c1", 0, "a"), ev("c1", 901, "b")];
        assert_eq!(segment_sessions(&events, 900).len(), 2);
    }

    #[test]
    fn equal_timestamps_keep_input_order() {
        let events = vec![ev("c1", 5, "z"), ev("c1", 5, "a"), ev("c1", 1, "m")];
        let s = &segment_sessions(&events, 10)[0];
        let order: Vec<_> = s.events.iter().map(|e| e.video_id.as_str()).collect();
        assert_eq!(order, ["m", "z", "a"]);
    }

    #[test]
    fn windows_by_global_idle() {
        let events = vec![
            ev("a", 0, "v"),
            ev("b", 500, "v"),
            ev("a", 10_000, "v"),
            ev("b", 10_100, "v"),
        ];
        let sessions = segment_sessions(&events, 1800);
        let windows = group_windows(&sessions, WindowRule::GlobalIdle(1800));
        assert_eq!(windows.len(), 2);
        assert_eq!(windows[0].len(), 2);
        assert_eq!(windows[1].len(), 2);
    }

    #[test]
    fn fixed_windows_keep_empty_slots() {
        let events = vec![ev("a", 0, "v"), ev("a", 25_000, "v")];
        let sessions = segment_sessions(&events, 1800);
        let windows = group_windows(&sessions, WindowRule::Fixed(10_000));
        assert_eq!(windows.iter().map(Vec::len).collect::<Vec<_>>(), [1, 0, 1]);
        assert!(group_windows(&[], WindowRule::Fixed(10)).is_empty());
    }
}
