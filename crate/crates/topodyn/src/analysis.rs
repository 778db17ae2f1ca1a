//! Cluster extraction and state classification.
//!
//! Clusters are defined by equal opinions; simulated terminal states only
//! reach equality asymptotically, so grouping takes a tolerance: single
//! linkage on the sorted opinions, which is unambiguous on a line. Exact
//! states use eps = 0.

use crate::dynamics::rhs;
use crate::error::{Error, Result};
use crate::topology::OpinionState;

/// A grouping of agents into (approximately) equal-opinion clusters,
/// ordered by opinion value. Within a cluster consecutive sorted opinions
/// differ by at most `eps`; across adjacent clusters the gap exceeds `eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterPartition {
    clusters: Vec<Cluster>,
    eps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Mean opinion of the members.
    pub value: f64,
    /// Member agent indices, ascending.
    pub members: Vec<usize>,
}

impl ClusterPartition {
    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.members.len()).collect()
    }

    /// Every cluster has at least k+1 members.
    pub fn is_clusterization(&self, k: usize) -> bool {
        self.clusters.iter().all(|c| c.members.len() >= k + 1)
    }

    /// Smallest gap between adjacent cluster values, infinite for a single
    /// cluster.
    pub fn min_gap(&self) -> f64 {
        self.clusters
            .windows(2)
            .map(|w| w[1].value - w[0].value)
            .fold(f64::INFINITY, f64::min)
    }

    /// Membership as a canonical list of index sets, for comparing the
    /// grouping structure of two partitions independently of values.
    pub fn membership(&self) -> Vec<Vec<usize>> {
        let mut m: Vec<Vec<usize>> = self.clusters.iter().map(|c| c.members.clone()).collect();
        m.sort();
        m
    }

    /// Cluster index of an agent.
    pub fn cluster_of(&self, agent: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.members.contains(&agent))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Consensus,
    Clusterization,
    EquilibriumNonClusterization,
    NonEquilibrium,
}

impl StateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StateKind::Consensus => "consensus",
            StateKind::Clusterization => "clusterization",
            StateKind::EquilibriumNonClusterization => "equilibrium_non_clusterization",
            StateKind::NonEquilibrium => "non_equilibrium",
        }
    }

    /// Consensus is a clusterization with a single cluster.
    pub fn is_clusterization(&self) -> bool {
        matches!(self, StateKind::Consensus | StateKind::Clusterization)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateClass {
    pub kind: StateKind,
    pub partition: ClusterPartition,
}

/// Single-linkage grouping on the sorted opinions: consecutive sorted
/// opinions within `eps` join the same cluster.
pub fn find_clusters(state: &OpinionState, eps: f64) -> ClusterPartition {
    assert!(eps >= 0.0, "cluster tolerance must be non-negative");
    let x = state.opinions();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap().then(a.cmp(&b)));

    let mut clusters = Vec::new();
    let mut members: Vec<usize> = vec![order[0]];
    for w in order.windows(2) {
        if x[w[1]] - x[w[0]] > eps {
            clusters.push(close_cluster(x, members));
            members = Vec::new();
        }
        members.push(w[1]);
    }
    clusters.push(close_cluster(x, members));
    ClusterPartition { clusters, eps }
}

fn close_cluster(x: &[f64], mut members: Vec<usize>) -> Cluster {
    members.sort_unstable();
    let value = members.iter().map(|&i| x[i]).sum::<f64>() / members.len() as f64;
    Cluster { value, members }
}

/// True iff the sup-norm of the field is at most `tol`.
pub fn is_equilibrium(state: &OpinionState, tol: f64) -> bool {
    assert!(tol >= 0.0, "equilibrium tolerance must be non-negative");
    rhs(state).sup_norm() <= tol
}

/// Classify a state: consensus if one cluster; clusterization if every
/// cluster has at least k+1 members; equilibrium_non_clusterization if the
/// field vanishes but some cluster is small; non_equilibrium otherwise.
pub fn classify_state(state: &OpinionState, eps: f64, tol: f64) -> StateClass {
    let partition = find_clusters(state, eps);
    let kind = if partition.len() == 1 {
        StateKind::Consensus
    } else if partition.is_clusterization(state.k()) {
        StateKind::Clusterization
    } else if is_equilibrium(state, tol) {
        StateKind::EquilibriumNonClusterization
    } else {
        StateKind::NonEquilibrium
    };
    StateClass { kind, partition }
}

fn require_clusterization(p: &ClusterPartition, k: usize) -> Result<()> {
    for c in p.clusters() {
        if c.members.len() < k + 1 {
            return Err(Error::ClusterTooSmall { size: c.members.len(), min: k + 1 });
        }
    }
    Ok(())
}

/// A clusterization survives small opinion perturbations with its grouping
/// intact iff every cluster has at most 2k+1 members: larger clusters can be
/// split into two clusters of at least k+1 members each.
pub fn is_structurally_stable(p: &ClusterPartition, k: usize) -> Result<bool> {
    require_clusterization(p, k)?;
    Ok(p.clusters().iter().all(|c| c.members.len() <= 2 * k + 1))
}

/// A clusterization survives the removal of any one agent iff every cluster
/// has at least k+2 members.
pub fn is_removal_stable(p: &ClusterPartition, k: usize) -> Result<bool> {
    require_clusterization(p, k)?;
    Ok(p.clusters().iter().all(|c| c.members.len() >= k + 2))
}

/// max x - min x.
pub fn diameter(state: &OpinionState) -> f64 {
    let x = state.opinions();
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}
