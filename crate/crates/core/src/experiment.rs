//! End-to-end experiment runs: trace acquisition, sliding-window
//! prefetch evaluation, vigilance sweeps, and output files.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::art1::{Art1Error, Art1Network};
use crate::config::{ExperimentConfig, Source};
use crate::features::{extract_pattern, write_pattern_matrix, BaseVector, PatternVector};
use crate::ingest::{group_windows, parse_log, preprocess, segment_sessions, LogRecord, Session};
use crate::prefetch::{cluster_patterns, sliding_run, write_metrics_csv, ClusterParams, SlidingRun};
use crate::snapshot;
use crate::workload::{generate, GroundTruth};
use crate::Error;

pub const METRICS_FILE: &str = "metrics.csv";
pub const CLUSTERS_FILE: &str = "clusters.csv";
pub const SNAPSHOT_FILE: &str = "network.snap";
pub const PATTERNS_FILE: &str = "patterns.csv";

pub struct Trace {
    pub records: Vec<LogRecord>,
    /// Planted groups, for generated traces only.
    pub truth: Option<GroundTruth>,
}

pub fn load_trace(cfg: &ExperimentConfig) -> Result<Trace, Error> {
    match cfg.source() {
        Source::Generated => {
            let (records, truth) = generate(&cfg.workload)?;
            Ok(Trace {
                records,
                truth: Some(truth),
            })
        }
        Source::LogFile(path) => {
            let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
            let records = parse_log(BufReader::new(file), cfg.experiment.log_format.into())?;
            Ok(Trace { records, truth: None })
        }
    }
}

/// Sessions grouped into windows, plus the number of distinct clients.
pub struct Prepared {
    pub windows: Vec<Vec<Session>>,
    pub clients: usize,
}

pub fn prepare(cfg: &ExperimentConfig, records: &[LogRecord]) -> Result<Prepared, Error> {
    let events = preprocess(records, &cfg.status_filter())?;
    if events.is_empty() {
        return Err(Error::NoData("no request passed the status filter".into()));
    }
    let clients = events
        .iter()
        .map(|e| e.client_id.as_str())
        .collect::<BTreeSet<_>>()
        .len();
    let sessions = segment_sessions(&events, cfg.experiment.maximum_idle_time);
    let windows = group_windows(&sessions, cfg.window_rule()?);
    Ok(Prepared { windows, clients })
}

/// Base vector and non-zero patterns of a single window.
pub fn window_patterns(window: &[Session], freq_threshold: u32) -> Result<(BaseVector, Vec<PatternVector>), Error> {
    let events: Vec<_> = window.iter().flat_map(|s| s.events.iter().cloned()).collect();
    let base = BaseVector::build(&events)?;
    let mut patterns = Vec::with_capacity(window.len());
    for (i, s) in window.iter().enumerate() {
        let p = extract_pattern(s, i, &base, freq_threshold)?;
        if !p.is_zero() {
            patterns.push(p);
        }
    }
    Ok((base, patterns))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub vigilance: f64,
    pub clusters: Result<usize, Art1Error>,
}

/// Trains one independent network per vigilance value over the same
/// patterns in the same order. A failing point does not stop the others.
pub fn sweep_vigilance(
    patterns: &[Vec<u8>],
    input_dim: usize,
    grid: &[f64],
    params: &ClusterParams,
) -> Vec<SweepPoint> {
    grid.par_iter()
        .map(|&vigilance| {
            let p = ClusterParams {
                vigilance,
                ..params.clone()
            };
            let clusters = match cluster_patterns(&p, input_dim, patterns) {
                Ok((net, _)) => Ok(net.active_clusters()),
                Err(Error::Art1(e)) => Err(e),
                Err(other) => unreachable!("clustering only fails with ART1 errors: {other}"),
            };
            SweepPoint { vigilance, clusters }
        })
        .collect()
}

pub fn write_cluster_counts<W: Write>(mut w: W, points: &[SweepPoint]) -> std::io::Result<()> {
    writeln!(w, "vigilance,clusters")?;
    for p in points {
        if let Ok(n) = p.clusters {
            writeln!(w, "{},{}", p.vigilance, n)?;
        }
    }
    Ok(())
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub metrics: PathBuf,
    pub clusters: PathBuf,
    pub snapshot: PathBuf,
    pub patterns: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub windows: usize,
    pub sliding: SlidingRun,
    pub sweep: Vec<SweepPoint>,
    pub network: Option<Art1Network>,
    pub outputs: Outputs,
}

impl RunSummary {
    pub fn failed_sweep_points(&self) -> impl Iterator<Item = &SweepPoint> {
        self.sweep.iter().filter(|p| p.clusters.is_err())
    }
}

/// Runs the sliding evaluation and the vigilance sweep, then writes the
/// metrics CSV, the cluster-count CSV and the final network snapshot into
/// the output directory. The sweep uses the first window's patterns.
pub fn run(cfg: &ExperimentConfig, dump_patterns: bool) -> Result<RunSummary, Error> {
    cfg.validate()?;
    let trace = load_trace(cfg)?;
    let prepared = prepare(cfg, &trace.records)?;
    let windows = &prepared.windows;
    let params = cfg.cluster_params(prepared.clients);

    let sliding = sliding_run(windows, &cfg.sliding_config(prepared.clients))?;

    let (base, first_patterns) = window_patterns(&windows[0], cfg.experiment.freq_threshold)?;
    let bits: Vec<Vec<u8>> = first_patterns.iter().map(|p| p.bits.clone()).collect();
    let sweep = sweep_vigilance(&bits, base.len(), &cfg.experiment.sweep, &params);
    for p in &sweep {
        if let Err(e) = &p.clusters {
            log::warn!("sweep point {}: {e}", p.vigilance);
        }
    }

    // with a single window there is nothing to evaluate; keep its network anyway
    let network = match &sliding.final_network {
        Some(net) => Some(net.clone()),
        None if !bits.is_empty() => Some(cluster_patterns(&params, base.len(), &bits)?.0),
        None => None,
    };

    let dir = &cfg.experiment.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let outputs = Outputs {
        metrics: dir.join(METRICS_FILE),
        clusters: dir.join(CLUSTERS_FILE),
        snapshot: dir.join(SNAPSHOT_FILE),
        patterns: dump_patterns.then(|| dir.join(PATTERNS_FILE)),
    };

    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, &sliding).map_err(|e| Error::io(&outputs.metrics, e))?;
    write_atomic(&outputs.metrics, &buf)?;

    let mut buf = Vec::new();
    write_cluster_counts(&mut buf, &sweep).map_err(|e| Error::io(&outputs.clusters, e))?;
    write_atomic(&outputs.clusters, &buf)?;

    let snap = match &network {
        Some(net) => snapshot::to_string(net),
        None => snapshot::to_string(&Art1Network::new(params.art1_config(base.len()))?),
    };
    write_atomic(&outputs.snapshot, snap.as_bytes())?;

    if let Some(path) = &outputs.patterns {
        let mut buf = Vec::new();
        write_pattern_matrix(&mut buf, &base, &first_patterns).map_err(|e| Error::io(path, e))?;
        write_atomic(path, &buf)?;
    }

    Ok(RunSummary {
        windows: windows.len(),
        sliding,
        sweep,
        network,
        outputs,
    })
}

/// Writes a generated trace and its ground truth.
pub fn write_generated(cfg: &ExperimentConfig, log_path: &Path, truth_path: &Path) -> Result<usize, Error> {
    cfg.workload.validate()?;
    let (records, truth) = generate(&cfg.workload)?;
    let mut buf = Vec::new();
    crate::workload::write_log(&mut buf, &records).map_err(|e| Error::io(log_path, e))?;
    write_atomic(log_path, &buf)?;
    let mut buf = Vec::new();
    truth.write_csv(&mut buf).map_err(|e| Error::io(truth_path, e))?;
    write_atomic(truth_path, &buf)?;
    Ok(records.len())
}

/// Ground-truth check helper: do the clusters of `assignment` coincide with
/// the planted groups of the pattern owners?
pub fn recovers_partition(truth: &GroundTruth, clients: &[String], clusters: &[usize]) -> bool {
    use std::collections::BTreeMap;
    let mut cluster_to_group: BTreeMap<usize, usize> = BTreeMap::new();
    let mut group_to_cluster: BTreeMap<usize, usize> = BTreeMap::new();
    for (client, &c) in clients.iter().zip(clusters) {
        let Some(&g) = truth.client_group.get(client) else {
            return false;
        };
        if *cluster_to_group.entry(c).or_insert(g) != g || *group_to_cluster.entry(g).or_insert(c) != c {
            return false;
        }
    }
    true
}
