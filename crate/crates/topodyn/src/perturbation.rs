//! Robustness experiments: opinion perturbations, agent addition and
//! removal, and the contrast with the metric bounded-confidence baseline.
//!
//! Newcomers are always appended as index n+1. The tie-break rule is
//! index-sensitive, so appending gives newcomers the lowest priority in
//! ties, the least intrusive convention; reports record it implicitly by
//! keeping original agents at their original indices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{classify_state, ClusterPartition, StateClass};
use crate::dynamics::{integrate_model, Model, SimConfig, Status, Trajectory, Velocity};
use crate::error::{Error, Result};
use crate::topology::OpinionState;

/// Interaction radius of the metric bounded-confidence model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub d: f64,
}

impl MetricParams {
    pub fn new(d: f64) -> Result<Self> {
        if d > 0.0 && d.is_finite() {
            Ok(Self { d })
        } else {
            Err(Error::InvalidConfig(format!("interaction radius d={d} must be positive")))
        }
    }
}

/// Metric bounded-confidence field: v_i sums the signed distances to all
/// agents strictly within radius d.
pub fn metric_rhs(state: &OpinionState, mp: MetricParams) -> Velocity {
    let lists = Model::Metric { d: mp.d }.interaction_lists(state);
    let x = state.opinions();
    Velocity::from_components(
        lists
            .iter()
            .enumerate()
            .map(|(i, js)| js.iter().map(|&j| x[j] - x[i]).sum())
            .collect(),
    )
}

/// Add independent uniform noise in [-magnitude, magnitude] to every
/// opinion. Deterministic given the seed.
pub fn perturb(state: &OpinionState, magnitude: f64, seed: u64) -> OpinionState {
    assert!(magnitude >= 0.0, "perturbation magnitude must be non-negative");
    if magnitude == 0.0 {
        return state.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = state
        .opinions()
        .iter()
        .map(|v| v + rng.gen_range(-magnitude..=magnitude))
        .collect();
    OpinionState::new(x, state.k()).expect("perturbed state stays finite")
}

/// The splitting construction: move the ceil(m/2) lowest-index members of an
/// equal-opinion cluster by -eps and the rest by +eps, leaving two halves of
/// at least k+1 members each. Requires at least 2k+2 members.
pub fn split_perturbation(state: &OpinionState, cluster: &[usize], eps: f64) -> Result<OpinionState> {
    let k = state.k();
    if cluster.len() < 2 * k + 2 {
        return Err(Error::SplitTooSmall { size: cluster.len(), min: 2 * k + 2 });
    }
    let x = state.opinions();
    for &i in cluster {
        if i >= x.len() {
            return Err(Error::IndexOutOfRange { index: i, n: x.len() });
        }
        if x[i] != x[cluster[0]] {
            return Err(Error::InvalidSplit(format!(
                "agents {} and {} do not share an opinion",
                cluster[0] + 1,
                i + 1
            )));
        }
    }
    let mut sorted = cluster.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != cluster.len() {
        return Err(Error::InvalidSplit("duplicate member index".into()));
    }
    let half = cluster.len().div_ceil(2);
    let mut x = x.to_vec();
    for (rank, &i) in sorted.iter().enumerate() {
        x[i] += if rank < half { -eps } else { eps };
    }
    OpinionState::new(x, k)
}

/// Append a newcomer with the given opinion as index n+1; k is unchanged.
pub fn add_agent(state: &OpinionState, opinion: f64) -> Result<OpinionState> {
    let mut x = state.opinions().to_vec();
    x.push(opinion);
    OpinionState::new(x, state.k())
}

/// Remove one agent, re-indexing the rest in order. Rejected when the
/// remaining population would violate k < n.
pub fn remove_agent(state: &OpinionState, agent: usize) -> Result<OpinionState> {
    if agent >= state.n() {
        return Err(Error::IndexOutOfRange { index: agent, n: state.n() });
    }
    if state.n() - 1 <= state.k() {
        return Err(Error::RemovalInvalid { agent, k: state.k() });
    }
    let mut x = state.opinions().to_vec();
    x.remove(agent);
    OpinionState::new(x, state.k())
}

/// Which model(s) an experiment runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioModel {
    Topological,
    Metric { d: f64 },
    /// Run the same disruption under both models.
    Contrast { d: f64 },
}

/// The disruption applied to the initial state. Agent indices are 1-based,
/// matching all external formats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Perturb { magnitude: f64, seed: u64 },
    Split { cluster: Vec<usize>, eps: f64 },
    Add { opinion: f64 },
    Remove { agent: usize },
}

impl Action {
    fn descriptor(&self) -> &'static str {
        match self {
            Action::Perturb { .. } => "perturb",
            Action::Split { .. } => "split",
            Action::Add { .. } => "add",
            Action::Remove { .. } => "remove",
        }
    }
}

fn default_eps_cluster() -> f64 {
    1e-6
}

/// A serializable experiment descriptor, consumed by the CLI.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub model: ScenarioModel,
    pub k: usize,
    pub initial: Vec<f64>,
    pub action: Action,
    #[serde(default = "default_eps_cluster")]
    pub eps_cluster: f64,
    #[serde(default)]
    pub sim: Option<SimConfig>,
    /// Keep the per-model trajectories in the report artifacts.
    #[serde(default)]
    pub emit_trajectories: bool,
}

/// Outcome of running one model on a scenario.
#[derive(Clone, Debug)]
pub struct ModelRun {
    pub model: Model,
    pub initial_class: StateClass,
    pub final_class: StateClass,
    /// Max absolute opinion change among the agents that existed before the
    /// disruption, measured against the pre-disruption state.
    pub original_agents_moved: f64,
    /// Whether the grouping of pre-existing agents is unchanged.
    pub partition_preserved: bool,
    pub event_count: usize,
    pub status: Status,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub scenario: String,
    pub runs: Vec<ModelRun>,
}

/// Restrict a partition's membership to surviving original agents.
///
/// `keep[i]` maps a current index back to the original one; current indices
/// absent from `keep` (the newcomer) are dropped.
fn project_membership(p: &ClusterPartition, keep: &[Option<usize>]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = p
        .clusters()
        .iter()
        .map(|c| c.members.iter().filter_map(|&m| keep[m]).collect())
        .filter(|g: &Vec<usize>| !g.is_empty())
        .collect();
    groups.sort();
    groups
}

/// Build the disrupted state, integrate both (or one) model, and report how
/// the pre-existing agents fared.
pub fn run_experiment(scenario: &Scenario, cfg: &SimConfig) -> Result<ExperimentReport> {
    let cfg = scenario.sim.unwrap_or(*cfg);
    let initial = OpinionState::new(scenario.initial.clone(), scenario.k)?;

    let models: Vec<Model> = match scenario.model {
        ScenarioModel::Topological => vec![Model::Topological],
        ScenarioModel::Metric { d } => vec![Model::Metric { d: MetricParams::new(d)?.d }],
        ScenarioModel::Contrast { d } => {
            vec![Model::Topological, Model::Metric { d: MetricParams::new(d)?.d }]
        }
    };

    // external indices are 1-based
    let disrupted = match &scenario.action {
        Action::Perturb { magnitude, seed } => {
            if *magnitude < 0.0 {
                return Err(Error::InvalidScenario("perturbation magnitude is negative".into()));
            }
            perturb(&initial, *magnitude, *seed)
        }
        Action::Split { cluster, eps } => {
            let zero_based: Vec<usize> = cluster
                .iter()
                .map(|&i| {
                    i.checked_sub(1)
                        .ok_or_else(|| Error::InvalidScenario("agent indices are 1-based".into()))
                })
                .collect::<Result<_>>()?;
            split_perturbation(&initial, &zero_based, *eps)?
        }
        Action::Add { opinion } => add_agent(&initial, *opinion)?,
        Action::Remove { agent } => {
            let idx = agent
                .checked_sub(1)
                .ok_or_else(|| Error::InvalidScenario("agent indices are 1-based".into()))?;
            remove_agent(&initial, idx)?
        }
    };

    // current index -> original index, for displacement and partition
    // comparison over the agents that existed before the disruption
    let keep: Vec<Option<usize>> = match &scenario.action {
        Action::Add { .. } => {
            let mut k: Vec<Option<usize>> = (0..initial.n()).map(Some).collect();
            k.push(None);
            k
        }
        Action::Remove { agent } => {
            (0..initial.n()).filter(|&i| i != agent - 1).map(Some).collect()
        }
        _ => (0..initial.n()).map(Some).collect(),
    };

    let eps = scenario.eps_cluster;
    let initial_class = classify_state(&initial, eps, cfg.conv_tol);
    let initial_membership = {
        let survivors: Vec<Vec<usize>> = initial_class
            .partition
            .clusters()
            .iter()
            .map(|c| {
                c.members
                    .iter()
                    .filter(|&&m| keep.iter().flatten().any(|&orig| orig == m))
                    .copied()
                    .collect()
            })
            .filter(|g: &Vec<usize>| !g.is_empty())
            .collect();
        let mut s = survivors;
        s.sort();
        s
    };

    let mut runs = Vec::new();
    for model in models {
        let trajectory = integrate_model(&disrupted, model, &cfg)?;
        let final_state = trajectory.final_state().clone();
        let final_class = classify_state(&final_state, eps, cfg.conv_tol);

        let x0 = initial.opinions();
        let xf = final_state.opinions();
        let moved = keep
            .iter()
            .enumerate()
            .filter_map(|(cur, orig)| orig.map(|o| (xf[cur] - x0[o]).abs()))
            .fold(0.0f64, f64::max);

        let partition_preserved =
            project_membership(&final_class.partition, &keep) == initial_membership;

        runs.push(ModelRun {
            model,
            initial_class: initial_class.clone(),
            final_class,
            original_agents_moved: moved,
            partition_preserved,
            event_count: trajectory.events.len(),
            status: trajectory.status,
            trajectory,
        });
    }

    let scenario_name = scenario
        .name
        .clone()
        .unwrap_or_else(|| scenario.action.descriptor().to_string());
    Ok(ExperimentReport { scenario: scenario_name, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::StateKind;
    use crate::dynamics::rhs;

    fn state(x: &[f64], k: usize) -> OpinionState {
        OpinionState::new(x.to_vec(), k).unwrap()
    }

    #[test]
    fn zero_magnitude_perturbation_is_identity() {
        let st = state(&[0.0, 1.0, 2.0], 1);
        assert_eq!(perturb(&st, 0.0, 42), st);
    }

    #[test]
    fn perturbation_is_deterministic_and_bounded() {
        let st = state(&[0.0, 1.0, 2.0, 3.0], 2);
        let a = perturb(&st, 0.1, 7);
        let b = perturb(&st, 0.1, 7);
        assert_eq!(a, b);
        for (orig, new) in st.opinions().iter().zip(a.opinions()) {
            assert!((new - orig).abs() <= 0.1);
        }
        let c = perturb(&st, 0.1, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn split_moves_halves_apart() {
        let k = 2;
        let st = state(&vec![0.0; 2 * k + 2], k);
        let split = split_perturbation(&st, &[0, 1, 2, 3, 4, 5], 0.01).unwrap();
        assert_eq!(split.opinions(), &[-0.01, -0.01, -0.01, 0.01, 0.01, 0.01]);
    }

    #[test]
    fn split_with_zero_eps_is_identity() {
        let st = state(&vec![0.0; 6], 2);
        let split = split_perturbation(&st, &[0, 1, 2, 3, 4, 5], 0.0).unwrap();
        assert_eq!(split.opinions(), st.opinions());
    }

    #[test]
    fn split_rejects_small_clusters() {
        let st = state(&vec![0.0; 5], 2);
        assert!(matches!(
            split_perturbation(&st, &[0, 1, 2, 3, 4], 0.01),
            Err(Error::SplitTooSmall { size: 5, min: 6 })
        ));
    }

    #[test]
    fn split_state_contracts_to_two_clusters() {
        let k = 2;
        let st = state(&vec![0.0; 2 * k + 2], k);
        let split = split_perturbation(&st, &[0, 1, 2, 3, 4, 5], 0.01).unwrap();
        // each half's k neighbors lie within the half, so the split state is
        // itself an equilibrium with two clusters
        assert_eq!(rhs(&split).sup_norm(), 0.0);
        let cfg = SimConfig { t_max: 10.0, ..SimConfig::default() };
        let traj = integrate_model(&split, Model::Topological, &cfg).unwrap();
        let class = classify_state(traj.final_state(), 1e-6, cfg.conv_tol);
        assert_eq!(class.kind, StateKind::Clusterization);
        assert_eq!(class.partition.len(), 2);
    }

    #[test]
    fn newcomer_at_cluster_value_has_zero_velocity() {
        let st = state(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2);
        let with_new = add_agent(&st, 0.0).unwrap();
        assert_eq!(with_new.n(), 7);
        assert_eq!(rhs(&with_new).components()[6], 0.0);
    }

    #[test]
    fn removal_respects_parameter_bound() {
        let st = state(&[0.0, 1.0, 2.0], 2);
        assert!(matches!(remove_agent(&st, 0), Err(Error::RemovalInvalid { .. })));
        let st = state(&[0.0, 1.0, 2.0], 1);
        let removed = remove_agent(&st, 1).unwrap();
        assert_eq!(removed.opinions(), &[0.0, 2.0]);
    }

    #[test]
    fn removal_from_large_cluster_stays_at_equilibrium() {
        // clusters of k+2 = 3: still a clusterization after one removal
        let st = state(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 1);
        let removed = remove_agent(&st, 0).unwrap();
        assert_eq!(rhs(&removed).sup_norm(), 0.0);
    }

    #[test]
    fn removal_from_minimal_cluster_breaks_equilibrium() {
        // clusters of exactly k+1 = 2: removing one member leaves its
        // partner pulled toward the other cluster
        let st = state(&[0.0, 0.0, 1.0, 1.0], 1);
        let removed = remove_agent(&st, 0).unwrap();
        assert!(rhs(&removed).sup_norm() > 0.0);
    }

    #[test]
    fn metric_rhs_examples() {
        let mp = MetricParams::new(1.0).unwrap();
        // all opinions at least d apart
        let st = state(&[0.0, 1.0, 2.5], 1);
        assert_eq!(metric_rhs(&st, mp).components(), &[0.0, 0.0, 0.0]);
        // neighbor sets {2}, {1}, {}
        let st = state(&[0.0, 0.5, 2.0], 1);
        assert_eq!(metric_rhs(&st, mp).components(), &[0.5, -0.5, 0.0]);
    }

    #[test]
    fn metric_params_validation() {
        assert!(MetricParams::new(0.0).is_err());
        assert!(MetricParams::new(-1.0).is_err());
        assert!(MetricParams::new(f64::NAN).is_err());
    }

    fn quick_cfg() -> SimConfig {
        SimConfig { t_max: 30.0, ..SimConfig::default() }
    }

    #[test]
    fn add_experiment_preserves_topological_clusterization() {
        let scenario = Scenario {
            name: None,
            model: ScenarioModel::Topological,
            k: 2,
            initial: vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            action: Action::Add { opinion: 0.5 },
            eps_cluster: 1e-6,
            sim: None,
            emit_trajectories: false,
        };
        let report = run_experiment(&scenario, &quick_cfg()).unwrap();
        let run = &report.runs[0];
        assert!(run.partition_preserved);
        assert!(run.original_agents_moved < 1e-9);
        assert_eq!(run.status, Status::Converged);
    }

    #[test]
    fn contrast_experiment_merges_metric_clusters() {
        // clusters 1.5 d apart, newcomer midway: metric merges, topological
        // does not move the original agents
        let scenario = Scenario {
            name: Some("contrast".into()),
            model: ScenarioModel::Contrast { d: 1.0 },
            k: 2,
            initial: vec![0.0, 0.0, 0.0, 1.5, 1.5, 1.5],
            action: Action::Add { opinion: 0.75 },
            eps_cluster: 1e-6,
            sim: None,
            emit_trajectories: false,
        };
        let report = run_experiment(&scenario, &quick_cfg()).unwrap();
        assert_eq!(report.runs.len(), 2);
        let topo = &report.runs[0];
        let metric = &report.runs[1];
        assert!(topo.partition_preserved);
        assert!(topo.original_agents_moved < 1e-8);
        assert!(!metric.partition_preserved);
        assert!(metric.final_class.partition.len() < metric.initial_class.partition.len());
        assert_eq!(metric.final_class.partition.len(), 1);
        assert!(metric.original_agents_moved > 0.1);
    }

    #[test]
    fn zero_perturbation_report_matches_plain_integration() {
        let scenario = Scenario {
            name: None,
            model: ScenarioModel::Topological,
            k: 1,
            initial: vec![0.0, 0.0, 1.0, 1.0],
            action: Action::Perturb { magnitude: 0.0, seed: 0 },
            eps_cluster: 1e-6,
            sim: None,
            emit_trajectories: false,
        };
        let report = run_experiment(&scenario, &quick_cfg()).unwrap();
        let run = &report.runs[0];
        assert_eq!(run.original_agents_moved, 0.0);
        assert!(run.partition_preserved);
        assert_eq!(run.event_count, 0);
    }

    #[test]
    fn remove_experiment_reindexes_partition() {
        let scenario = Scenario {
            name: None,
            model: ScenarioModel::Topological,
            k: 1,
            initial: vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            action: Action::Remove { agent: 1 },
            eps_cluster: 1e-6,
            sim: None,
            emit_trajectories: false,
        };
        let report = run_experiment(&scenario, &quick_cfg()).unwrap();
        let run = &report.runs[0];
        assert!(run.partition_preserved);
        assert_eq!(run.original_agents_moved, 0.0);
    }
}
