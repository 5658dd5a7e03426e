//! Binary ART1 clustering with fast learning.
//!
//! Clusters are committed on demand: only committed nodes take part in the
//! winner search, and a new node is initialised straight from the input when
//! no committed node passes the vigilance test. For a committed node `j`
//! with binary prototype `t_j`, the bottom-up row is always
//! `b_ij = t_ij / (0.5 + |t_j|)`.

use std::collections::BTreeSet;

use thiserror::Error;

/// Passes over the pattern set before training gives up on stabilising.
pub const DEFAULT_MAX_EPOCHS: usize = 10;

/// Offset in the denominator of the fast-learning bottom-up update.
const BOTTOM_UP_OFFSET: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Art1Error {
    #[error("vigilance must lie in [0, 1], got {0}")]
    InvalidVigilance(f64),
    #[error("maximum number of clusters must be at least 1")]
    ZeroMaxClusters,
    #[error("input dimension must be at least 1")]
    ZeroInputDim,
    #[error("maximum number of epochs must be at least 1")]
    ZeroEpochs,
    #[error("expected a vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("element {index} is {value}, expected 0 or 1")]
    NonBinary { index: usize, value: u8 },
    #[error("all-zero input has no defined similarity")]
    ZeroPattern,
    #[error("pattern {index}: {source}")]
    InvalidPattern {
        index: usize,
        #[source]
        source: Box<Art1Error>,
    },
    #[error(
        "all {max_clusters} clusters are in use and none passes vigilance \
         (best similarity {best_similarity} at cluster {best_cluster})"
    )]
    Capacity {
        max_clusters: usize,
        best_similarity: f64,
        best_cluster: usize,
    },
    #[error("bottom-up weight {value} of cluster {cluster} is outside [0, 1]")]
    WeightOutOfRange { cluster: usize, value: f64 },
}

/// What to do when every cluster slot is taken and none passes vigilance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapacityPolicy {
    /// Fail with [`Art1Error::Capacity`].
    #[default]
    Error,
    /// Commit the pattern to the most similar cluster anyway.
    ForceBest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Art1Config {
    pub vigilance: f64,
    pub max_clusters: usize,
    pub input_dim: usize,
    pub max_epochs: usize,
    pub on_capacity: CapacityPolicy,
}

impl Art1Config {
    pub fn new(input_dim: usize, vigilance: f64, max_clusters: usize) -> Self {
        Art1Config {
            vigilance,
            max_clusters,
            input_dim,
            max_epochs: DEFAULT_MAX_EPOCHS,
            on_capacity: CapacityPolicy::Error,
        }
    }

    pub fn validate(&self) -> Result<(), Art1Error> {
        if !(0.0..=1.0).contains(&self.vigilance) {
            return Err(Art1Error::InvalidVigilance(self.vigilance));
        }
        if self.max_clusters == 0 {
            return Err(Art1Error::ZeroMaxClusters);
        }
        if self.input_dim == 0 {
            return Err(Art1Error::ZeroInputDim);
        }
        if self.max_epochs == 0 {
            return Err(Art1Error::ZeroEpochs);
        }
        Ok(())
    }
}

/// How a presented pattern was placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Passed vigilance at an existing cluster.
    Joined,
    /// No existing cluster passed; a new one was created from the input.
    Created,
    /// Capacity was exhausted and [`CapacityPolicy::ForceBest`] applied.
    Forced,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    pub cluster: usize,
    /// Clusters that won the match but failed vigilance, in the order tried.
    pub rejected: Vec<usize>,
    pub outcome: Outcome,
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    /// `clusters[p]` is the cluster of pattern `p` in the final epoch.
    pub clusters: Vec<usize>,
    /// Vigilance failures per pattern in the final epoch.
    pub rejected: Vec<Vec<usize>>,
    pub epochs: usize,
    /// Two consecutive epochs produced the same assignment.
    pub converged: bool,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterReport {
    pub cluster_index: usize,
    /// Distinct member clients in first-seen order.
    pub members: Vec<String>,
    pub pattern_indices: Vec<usize>,
    pub prototype: Vec<u8>,
    pub member_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Art1Network {
    config: Art1Config,
    bottom_up: Vec<Vec<f64>>,
    top_down: Vec<Vec<u8>>,
}

impl Art1Network {
    pub fn new(config: Art1Config) -> Result<Self, Art1Error> {
        config.validate()?;
        Ok(Art1Network {
            config,
            bottom_up: Vec::new(),
            top_down: Vec::new(),
        })
    }

    /// Rebuilds a network from stored weights, checking every invariant
    /// except the bottom-up/top-down relation, which is kept as stored.
    pub fn from_parts(config: Art1Config, top_down: Vec<Vec<u8>>, bottom_up: Vec<Vec<f64>>) -> Result<Self, Art1Error> {
        config.validate()?;
        let n = config.input_dim;
        if top_down.len() != bottom_up.len() {
            return Err(Art1Error::DimensionMismatch {
                expected: top_down.len(),
                found: bottom_up.len(),
            });
        }
        if top_down.len() > config.max_clusters {
            return Err(Art1Error::DimensionMismatch {
                expected: config.max_clusters,
                found: top_down.len(),
            });
        }
        for (j, (t, b)) in top_down.iter().zip(&bottom_up).enumerate() {
            check_binary(t, n)?;
            check_len(b.len(), n)?;
            if let Some(&value) = b.iter().find(|w| !(0.0..=1.0).contains(*w)) {
                return Err(Art1Error::WeightOutOfRange { cluster: j, value });
            }
        }
        Ok(Art1Network {
            config,
            bottom_up,
            top_down,
        })
    }

    pub fn config(&self) -> &Art1Config {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn active_clusters(&self) -> usize {
        self.top_down.len()
    }

    /// Bottom-up weight of a node that has not been committed: `1 / (1 + N)`.
    pub fn uncommitted_bottom_up(&self) -> f64 {
        1.0 / (1.0 + self.config.input_dim as f64)
    }

    /// Top-down weight of a node that has not been committed.
    pub fn uncommitted_top_down(&self) -> u8 {
        1
    }

    pub fn prototype(&self, cluster: usize) -> Option<&[u8]> {
        self.top_down.get(cluster).map(Vec::as_slice)
    }

    pub fn bottom_up(&self, cluster: usize) -> Option<&[f64]> {
        self.bottom_up.get(cluster).map(Vec::as_slice)
    }

    pub fn prototypes(&self) -> &[Vec<u8>] {
        &self.top_down
    }

    pub fn bottom_up_rows(&self) -> &[Vec<f64>] {
        &self.bottom_up
    }

    /// `net_j = sum_i x_i * b_ij` for every committed cluster.
    pub fn match_values(&self, x: &[u8]) -> Result<Vec<f64>, Art1Error> {
        check_binary(x, self.config.input_dim)?;
        Ok(self.bottom_up.iter().map(|row| dot(x, row)).collect())
    }

    /// Presents one pattern: search winners in decreasing match order,
    /// commit to the first that passes vigilance, otherwise create a node.
    pub fn present(&mut self, x: &[u8]) -> Result<Presentation, Art1Error> {
        check_binary(x, self.config.input_dim)?;
        if x.iter().all(|&b| b == 0) {
            return Err(Art1Error::ZeroPattern);
        }

        let nets: Vec<f64> = self.bottom_up.iter().map(|row| dot(x, row)).collect();
        let mut excluded = vec![false; nets.len()];
        let mut rejected = Vec::new();

        while let Some(j) = winner(&nets, &excluded) {
            if overlap_ratio(x, &self.top_down[j]) >= self.config.vigilance {
                self.commit(j, x);
                return Ok(Presentation {
                    cluster: j,
                    rejected,
                    outcome: Outcome::Joined,
                });
            }
            excluded[j] = true;
            rejected.push(j);
        }

        if self.active_clusters() < self.config.max_clusters {
            let k = ones(x);
            self.top_down.push(x.to_vec());
            self.bottom_up.push(x.iter().map(|&b| fast_weight(b, k)).collect());
            return Ok(Presentation {
                cluster: self.active_clusters() - 1,
                rejected,
                outcome: Outcome::Created,
            });
        }

        let (best_cluster, best_similarity) = self.top_down.iter().map(|t| overlap_ratio(x, t)).enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (j, v)| if v > best.1 { (j, v) } else { best },
        );
        match self.config.on_capacity {
            CapacityPolicy::Error => Err(Art1Error::Capacity {
                max_clusters: self.config.max_clusters,
                best_similarity,
                best_cluster,
            }),
            CapacityPolicy::ForceBest => {
                self.commit(best_cluster, x);
                Ok(Presentation {
                    cluster: best_cluster,
                    rejected,
                    outcome: Outcome::Forced,
                })
            }
        }
    }

    /// Fast learning: `t_j <- t_j AND x`, `b_j <- t_j / (0.5 + |t_j|)`.
    fn commit(&mut self, j: usize, x: &[u8]) {
        let t = &mut self.top_down[j];
        for (ti, &xi) in t.iter_mut().zip(x) {
            *ti &= xi;
        }
        let k = ones(t);
        for (bi, &ti) in self.bottom_up[j].iter_mut().zip(t.iter()) {
            *bi = fast_weight(ti, k);
        }
    }

    /// Presents every pattern once, in order.
    pub fn train_single_pass(&mut self, patterns: &[Vec<u8>]) -> Result<Assignment, Art1Error> {
        self.validate_patterns(patterns)?;
        let (clusters, rejected) = self.epoch(patterns)?;
        Ok(Assignment {
            clusters,
            rejected,
            epochs: 1,
            converged: false,
        })
    }

    /// Repeats full passes until two consecutive epochs assign every pattern
    /// identically, or `max_epochs` passes have run.
    pub fn train(&mut self, patterns: &[Vec<u8>]) -> Result<Assignment, Art1Error> {
        self.validate_patterns(patterns)?;
        let mut previous: Option<Vec<usize>> = None;
        let mut epochs = 0;
        loop {
            let (clusters, rejected) = self.epoch(patterns)?;
            epochs += 1;
            let converged = previous.as_ref() == Some(&clusters);
            if converged || epochs >= self.config.max_epochs {
                return Ok(Assignment {
                    clusters,
                    rejected,
                    epochs,
                    converged,
                });
            }
            previous = Some(clusters);
        }
    }

    fn epoch(&mut self, patterns: &[Vec<u8>]) -> Result<(Vec<usize>, Vec<Vec<usize>>), Art1Error> {
        let mut clusters = Vec::with_capacity(patterns.len());
        let mut rejected = Vec::with_capacity(patterns.len());
        for x in patterns {
            let p = self.present(x)?;
            clusters.push(p.cluster);
            rejected.push(p.rejected);
        }
        Ok((clusters, rejected))
    }

    fn validate_patterns(&self, patterns: &[Vec<u8>]) -> Result<(), Art1Error> {
        for (index, x) in patterns.iter().enumerate() {
            let res = check_binary(x, self.config.input_dim).and_then(|_| {
                if x.iter().all(|&b| b == 0) {
                    Err(Art1Error::ZeroPattern)
                } else {
                    Ok(())
                }
            });
            res.map_err(|e| Art1Error::InvalidPattern {
                index,
                source: Box::new(e),
            })?;
        }
        Ok(())
    }
}

/// Index of the largest value among non-excluded entries; the lowest index
/// wins ties.
pub fn select_winner(nets: &[f64], excluded: &BTreeSet<usize>) -> Option<usize> {
    let mask: Vec<bool> = (0..nets.len()).map(|j| excluded.contains(&j)).collect();
    winner(nets, &mask)
}

fn winner(nets: &[f64], excluded: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, &v) in nets.iter().enumerate() {
        if excluded[j] {
            continue;
        }
        match best {
            Some(b) if nets[b] >= v => {}
            _ => best = Some(j),
        }
    }
    best
}

/// `|x AND prototype| / |x|`.
pub fn similarity(x: &[u8], prototype: &[u8]) -> Result<f64, Art1Error> {
    check_binary(x, x.len())?;
    check_binary(prototype, x.len())?;
    if x.iter().all(|&b| b == 0) {
        return Err(Art1Error::ZeroPattern);
    }
    Ok(overlap_ratio(x, prototype))
}

fn overlap_ratio(x: &[u8], t: &[u8]) -> f64 {
    let common = x.iter().zip(t).filter(|(&a, &b)| a & b == 1).count();
    common as f64 / ones(x) as f64
}

fn dot(x: &[u8], row: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&xi, &b) in x.iter().zip(row) {
        if xi == 1 {
            acc += b;
        }
    }
    acc
}

fn fast_weight(bit: u8, ones: usize) -> f64 {
    f64::from(bit) / (BOTTOM_UP_OFFSET + ones as f64)
}

fn ones(x: &[u8]) -> usize {
    x.iter().filter(|&&b| b == 1).count()
}

fn check_len(found: usize, expected: usize) -> Result<(), Art1Error> {
    if found != expected {
        return Err(Art1Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_binary(x: &[u8], expected: usize) -> Result<(), Art1Error> {
    check_len(x.len(), expected)?;
    match x.iter().position(|&b| b > 1) {
        Some(index) => Err(Art1Error::NonBinary { index, value: x[index] }),
        None => Ok(()),
    }
}

/// One report per cluster that received at least one pattern, in cluster
/// order. `client_ids[p]` names the owner of pattern `p`.
pub fn report_clusters(net: &Art1Network, assignment: &Assignment, client_ids: &[String]) -> Vec<ClusterReport> {
    let mut reports: Vec<Option<ClusterReport>> = vec![None; net.active_clusters()];
    for (p, &c) in assignment.clusters.iter().enumerate() {
        let Some(slot) = reports.get_mut(c) else { continue };
        let report = slot.get_or_insert_with(|| ClusterReport {
            cluster_index: c,
            members: Vec::new(),
            pattern_indices: Vec::new(),
            prototype: net.top_down[c].clone(),
            member_count: 0,
        });
        report.pattern_indices.push(p);
        if let Some(client) = client_ids.get(p) {
            if !report.members.contains(client) {
                report.members.push(client.clone());
            }
        }
    }
    reports
        .into_iter()
        .flatten()
        .map(|mut r| {
            r.member_count = r.members.len();
            r
        })
        .collect()
}
