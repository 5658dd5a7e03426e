//! Prototype-driven prefetch plans, their evaluation against the next
//! window's demand, and the sliding re-clustering loop.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use thiserror::Error;

use crate::art1::{report_clusters, Art1Config, Art1Network, Assignment, CapacityPolicy, ClusterReport};
use crate::features::{extract_pattern, BaseVector, PatternVector};
use crate::ingest::Session;
use crate::Error as PipelineError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrefetchError {
    #[error("prototype of cluster {cluster} has length {found}, base vector has {expected}")]
    LengthMismatch {
        cluster: usize,
        expected: usize,
        found: usize,
    },
}

/// Videos to prefetch for one cluster, in base-vector order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPlan {
    pub cluster_index: usize,
    pub urls: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrefetchPlan {
    /// Window whose clustering produced this plan.
    pub origin: usize,
    pub clusters: Vec<ClusterPlan>,
}

impl PrefetchPlan {
    pub fn for_cluster(&self, cluster: usize) -> Option<&ClusterPlan> {
        self.clusters.iter().find(|c| c.cluster_index == cluster)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheMetrics {
    pub cluster_index: usize,
    pub member_count: usize,
    pub prefetched_count: usize,
    pub hits: usize,
    /// `hits / prefetched_count`, or 0 for an empty plan.
    pub accuracy: f64,
}

/// Demand from clients that had no cluster at planning time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Unclustered {
    pub clients: BTreeSet<String>,
    pub distinct_videos: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub metrics: Vec<CacheMetrics>,
    pub unclustered: Unclustered,
}

/// Lists the URLs at every set bit of each cluster prototype.
pub fn build_plan(reports: &[ClusterReport], base: &BaseVector, origin: usize) -> Result<PrefetchPlan, PrefetchError> {
    let clusters = reports
        .iter()
        .map(|r| {
            if r.prototype.len() != base.len() {
                return Err(PrefetchError::LengthMismatch {
                    cluster: r.cluster_index,
                    expected: base.len(),
                    found: r.prototype.len(),
                });
            }
            let urls = r
                .prototype
                .iter()
                .enumerate()
                .filter(|(_, &bit)| bit == 1)
                .map(|(j, _)| base.urls()[j].clone())
                .collect();
            Ok(ClusterPlan {
                cluster_index: r.cluster_index,
                urls,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(PrefetchPlan { origin, clusters })
}

/// Counts, per cluster, the distinct prefetched videos that any member
/// requested at least once in `next_sessions`.
pub fn evaluate_plan(
    plan: &PrefetchPlan,
    next_sessions: &[Session],
    membership: &BTreeMap<String, usize>,
) -> Evaluation {
    let mut demand: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    let mut unclustered = Unclustered::default();
    let mut stray_videos: BTreeSet<&str> = BTreeSet::new();
    for s in next_sessions {
        match membership.get(&s.client_id) {
            Some(&c) => demand.entry(c).or_default().extend(s.videos()),
            None => {
                unclustered.clients.insert(s.client_id.clone());
                stray_videos.extend(s.videos());
            }
        }
    }
    unclustered.distinct_videos = stray_videos.len();

    let mut members: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in membership.values() {
        *members.entry(c).or_default() += 1;
    }

    let metrics = plan
        .clusters
        .iter()
        .map(|cp| {
            let requested = demand.get(&cp.cluster_index);
            let hits = cp
                .urls
                .iter()
                .filter(|u| requested.is_some_and(|r| r.contains(u.as_str())))
                .count();
            let prefetched = cp.urls.len();
            CacheMetrics {
                cluster_index: cp.cluster_index,
                member_count: members.get(&cp.cluster_index).copied().unwrap_or(0),
                prefetched_count: prefetched,
                hits,
                accuracy: if prefetched == 0 {
                    0.0
                } else {
                    hits as f64 / prefetched as f64
                },
            }
        })
        .collect();

    Evaluation { metrics, unclustered }
}

/// ART1 settings shared by every clustering step of an experiment; the
/// input dimension is filled in from the base vector at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    pub vigilance: f64,
    pub max_clusters: usize,
    pub max_epochs: usize,
    pub on_capacity: CapacityPolicy,
    /// Present the patterns exactly once instead of iterating to stability.
    pub single_pass: bool,
}

impl ClusterParams {
    pub fn art1_config(&self, input_dim: usize) -> Art1Config {
        Art1Config {
            vigilance: self.vigilance,
            max_clusters: self.max_clusters,
            input_dim,
            max_epochs: self.max_epochs,
            on_capacity: self.on_capacity,
        }
    }
}

/// Trains a fresh network over `patterns`.
pub fn cluster_patterns(
    params: &ClusterParams,
    input_dim: usize,
    patterns: &[Vec<u8>],
) -> Result<(Art1Network, Assignment), PipelineError> {
    let mut net = Art1Network::new(params.art1_config(input_dim))?;
    let assignment = if params.single_pass {
        net.train_single_pass(patterns)?
    } else {
        net.train(patterns)?
    };
    Ok((net, assignment))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingConfig {
    pub cluster: ClusterParams,
    pub freq_threshold: u32,
    /// Train on the most recent `k` windows only; `None` keeps all history.
    pub history: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowMetrics {
    /// Window whose history was clustered; demand comes from `window + 1`.
    pub window: usize,
    pub metrics: Vec<CacheMetrics>,
    pub unclustered: Unclustered,
    pub patterns_trained: usize,
    /// Sessions in `window` whose pattern had no set bit.
    pub zero_patterns: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SlidingRun {
    pub windows: Vec<WindowMetrics>,
    /// Network trained at the last planning window, if any patterns existed.
    pub final_network: Option<Art1Network>,
    pub base: Option<BaseVector>,
}

impl SlidingRun {
    pub fn rows(&self) -> impl Iterator<Item = (usize, &CacheMetrics)> {
        self.windows
            .iter()
            .flat_map(|w| w.metrics.iter().map(move |m| (w.window, m)))
    }

    /// Mean accuracy weighted by each cluster's member count.
    pub fn member_weighted_accuracy(&self) -> Option<f64> {
        member_weighted_accuracy(self.rows().map(|(_, m)| m))
    }
}

pub fn member_weighted_accuracy<'a>(metrics: impl IntoIterator<Item = &'a CacheMetrics>) -> Option<f64> {
    let (num, den) = metrics.into_iter().fold((0.0, 0usize), |(n, d), m| {
        (n + m.accuracy * m.member_count as f64, d + m.member_count)
    });
    (den > 0).then(|| num / den as f64)
}

/// For each window `w` that has a successor: cluster the patterns of the
/// history up to `w`, plan from the prototypes, and score the plan against
/// window `w + 1`. Nothing from windows after `w` influences the plan.
pub fn sliding_run(windows: &[Vec<Session>], cfg: &SlidingConfig) -> Result<SlidingRun, PipelineError> {
    let mut base: Option<BaseVector> = None;
    let mut history: Vec<(usize, PatternVector)> = Vec::new();
    let mut out = Vec::new();
    let mut final_network = None;
    let mut session_counter = 0usize;

    for w in 0..windows.len().saturating_sub(1) {
        let events: Vec<_> = windows[w].iter().flat_map(|s| s.events.iter().cloned()).collect();
        match base.as_mut() {
            Some(b) => {
                b.extend(&events);
            }
            None if !events.is_empty() => base = Some(BaseVector::build(&events)?),
            None => {}
        }

        let mut zero_patterns = 0;
        if let Some(b) = base.as_ref() {
            for s in &windows[w] {
                let p = extract_pattern(s, session_counter, b, cfg.freq_threshold)?;
                session_counter += 1;
                if p.is_zero() {
                    log::debug!("window {w}: dropping all-zero pattern of session {s}");
                    zero_patterns += 1;
                } else {
                    history.push((w, p));
                }
            }
        }

        let oldest = match cfg.history {
            Some(k) => (w + 1).saturating_sub(k.max(1)),
            None => 0,
        };
        let training: Vec<&PatternVector> = history.iter().filter(|(hw, _)| *hw >= oldest).map(|(_, p)| p).collect();

        let Some(b) = base.as_ref().filter(|_| !training.is_empty()) else {
            out.push(WindowMetrics {
                window: w,
                metrics: Vec::new(),
                unclustered: Unclustered::default(),
                patterns_trained: 0,
                zero_patterns,
                converged: true,
            });
            continue;
        };

        let n = b.len();
        let patterns: Vec<Vec<u8>> = training
            .iter()
            .map(|p| {
                let mut bits = p.bits.clone();
                bits.resize(n, 0);
                bits
            })
            .collect();
        let clients: Vec<String> = training.iter().map(|p| p.client_id.clone()).collect();

        let (net, assignment) = cluster_patterns(&cfg.cluster, n, &patterns)?;
        let reports = report_clusters(&net, &assignment, &clients);
        // the latest pattern of each client decides its membership
        let membership: BTreeMap<String, usize> = clients
            .iter()
            .cloned()
            .zip(assignment.clusters.iter().copied())
            .collect();
        let plan = build_plan(&reports, b, w)?;
        let eval = evaluate_plan(&plan, &windows[w + 1], &membership);

        out.push(WindowMetrics {
            window: w,
            metrics: eval.metrics,
            unclustered: eval.unclustered,
            patterns_trained: patterns.len(),
            zero_patterns,
            converged: assignment.converged || cfg.cluster.single_pass,
        });
        final_network = Some(net);
    }

    Ok(SlidingRun {
        windows: out,
        final_network,
        base,
    })
}

pub const METRICS_HEADER: &str = "window,cluster,members,prefetched,hits,accuracy";

pub fn write_metrics_csv<W: Write>(mut w: W, run: &SlidingRun) -> io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for (window, m) in run.rows() {
        writeln!(
            w,
            "{},{},{},{},{},{:.4}",
            window, m.cluster_index, m.member_count, m.prefetched_count, m.hits, m.accuracy
        )?;
    }
    Ok(())
}
