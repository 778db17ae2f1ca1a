//! The vector field and its integration.
//!
//! Within a fixed interaction map the field is affine, so a classical RK4
//! step with the map frozen at the step's start is highly accurate on smooth
//! segments and realizes the right-derivative (semi-classical) semantics at
//! switching instants. When the map changes across a step, the step is
//! retried with h halved down to a floor of h/2^10; below the floor the
//! switch is accepted at the step boundary and logged as an event.
//!
//! Order preservation is a theorem of the model, so an inversion of a
//! previously strict ordering beyond 1e-12 is treated as integration error:
//! the step is rejected and retried at smaller h, and at the floor it is
//! reported as a failure rather than silently accepted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{compute_neighbors, OpinionState};

/// Inversion tolerance for the order-violation guard.
pub const ORDER_GUARD_TOL: f64 = 1e-12;
/// Number of halvings allowed when localizing a switch: h_min = h / 2^10.
const H_MIN_SHIFTS: i32 = 10;

/// Opinion rates, one per agent.
#[derive(Clone, Debug, PartialEq)]
pub struct Velocity {
    v: Vec<f64>,
}

impl Velocity {
    pub(crate) fn from_components(v: Vec<f64>) -> Self {
        Self { v }
    }

    pub fn components(&self) -> &[f64] {
        &self.v
    }

    pub fn sup_norm(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Which interaction rule drives the dynamics.
///
/// The radius variant is the metric bounded-confidence baseline; it reuses
/// the same stepper and switch refinement so any contrast between the two
/// models is attributable to the interaction rule, not the integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    /// k nearest neighbors with the lower-index tie-break.
    Topological,
    /// All agents strictly within radius `d`.
    Metric { d: f64 },
}

impl Model {
    /// Per-agent interaction lists for the current state. Topological lists
    /// are ordered by (distance, index); metric lists by index.
    pub fn interaction_lists(&self, state: &OpinionState) -> Vec<Vec<usize>> {
        match *self {
            Model::Topological => compute_neighbors(state).lists().to_vec(),
            Model::Metric { d } => {
                let x = state.opinions();
                (0..x.len())
                    .map(|i| {
                        (0..x.len())
                            .filter(|&j| j != i && (x[j] - x[i]).abs() < d)
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

/// Simulation controls. `conv_tol` bounds the sup-norm of the field and
/// `stall_window` is the trailing time span that must be both switch-free
/// and below `conv_tol` before convergence is declared: a small field alone
/// can occur transiently near unstable non-clusterization equilibria.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub step: f64,
    pub t_max: f64,
    pub conv_tol: f64,
    pub stall_window: f64,
    pub record_every: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            t_max: 100.0,
            conv_tol: 1e-9,
            stall_window: 1.0,
            record_every: 0.1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step > 0.0
            && self.t_max > 0.0
            && self.conv_tol > 0.0
            && self.stall_window >= 0.0
            && self.record_every > 0.0
            && [self.step, self.t_max, self.conv_tol, self.stall_window, self.record_every]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// One agent's interaction list changed at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchEvent {
    pub t: f64,
    pub agent: usize,
    pub before: Vec<usize>,
    pub after: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    HorizonReached,
}

/// A computed trajectory: time-ordered samples (first at t=0), the switch
/// events encountered, and how the run ended.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<(f64, OpinionState)>,
    pub events: Vec<SwitchEvent>,
    pub status: Status,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.samples.last().expect("trajectory has samples").0
    }

    pub fn final_state(&self) -> &OpinionState {
        &self.samples.last().expect("trajectory has samples").1
    }
}

fn rhs_into(x: &[f64], lists: &[Vec<usize>], out: &mut [f64]) {
    for (i, js) in lists.iter().enumerate() {
        out[i] = js.iter().map(|&j| x[j] - x[i]).sum();
    }
}

fn rhs_from_lists(x: &[f64], lists: &[Vec<usize>]) -> Vec<f64> {
    lists
        .iter()
        .enumerate()
        .map(|(i, js)| js.iter().map(|&j| x[j] - x[i]).sum())
        .collect()
}

/// Evaluate the vector field: v_i is the sum of the k signed distances from
/// agent i to its current neighbors.
pub fn rhs(state: &OpinionState) -> Velocity {
    let lists = Model::Topological.interaction_lists(state);
    Velocity { v: rhs_from_lists(state.opinions(), &lists) }
}

/// One RK4 step with the interaction lists frozen: all four stages reuse the
/// map supplied by the caller.
fn rk4(x: &[f64], lists: &[Vec<usize>], h: f64) -> Vec<f64> {
    let n = x.len();
    let at = |base: &[f64], slope: &[f64], c: f64| -> Vec<f64> {
        (0..n).map(|i| base[i] + c * slope[i]).collect()
    };
    let k1 = rhs_from_lists(x, lists);
    let k2 = rhs_from_lists(&at(x, &k1, h / 2.0), lists);
    let k3 = rhs_from_lists(&at(x, &k2, h / 2.0), lists);
    let k4 = rhs_from_lists(&at(x, &k3, h), lists);
    (0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Indices sorted by (opinion, index); adjacent entries are the pairs the
/// order guard checks.
fn sorted_order(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap().then(a.cmp(&b)));
    order
}

/// Reusable buffers for the integration hot path. The switch-refinement loop
/// re-evaluates the step and the interaction map up to eleven times per
/// accepted step, and chattering near distance-tie surfaces can shrink the
/// accepted step far below nominal, so nothing here may allocate per
/// evaluation.
struct Scratch {
    pairs: Vec<(f64, usize)>,
    cord: Vec<usize>,
    rank: Vec<usize>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
    cand: Vec<f64>,
    lists_new: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            pairs: Vec::with_capacity(n),
            cord: (0..n).collect(),
            rank: vec![0; n],
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            stage: vec![0.0; n],
            cand: vec![0.0; n],
            lists_new: vec![Vec::new(); n],
            order: (0..n).collect(),
        }
    }
}

/// Compute interaction lists into reused buffers, producing exactly the
/// lists of [`Model::interaction_lists`].
///
/// The topological arm sorts agents by (opinion, index) once per call into
/// `ord` (near-linear when `ord` still holds the previous order, which the
/// order-preservation guard keeps nearly valid) and then walks outward from
/// each agent's rank with two pointers. Runs of candidates at exactly the
/// same distance are gathered from both sides and tie-broken by index, which
/// reproduces the lexicographic (distance, index) selection.
fn lists_into(
    model: Model,
    k: usize,
    x: &[f64],
    out: &mut [Vec<usize>],
    pairs: &mut Vec<(f64, usize)>,
    ord: &mut Vec<usize>,
    rank: &mut Vec<usize>,
) {
    let n = x.len();
    match model {
        Model::Topological => {
            if ord.len() != n {
                ord.clear();
                ord.extend(0..n);
                rank.resize(n, 0);
            }
            ord.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap().then(a.cmp(&b)));
            for (p, &a) in ord.iter().enumerate() {
                rank[a] = p;
            }
            for i in 0..n {
                let xi = x[i];
                let mut l = rank[i];
                let mut r = rank[i];
                out[i].clear();
                while out[i].len() < k {
                    let dl = if l > 0 { xi - x[ord[l - 1]] } else { f64::INFINITY };
                    let dr = if r + 1 < n { x[ord[r + 1]] - xi } else { f64::INFINITY };
                    let d = dl.min(dr);
                    // Exhaust the equal-distance run on both sides; equal
                    // distances on one side are exactly equal opinions, so
                    // the runs are contiguous in `ord`.
                    pairs.clear();
                    while l > 0 && xi - x[ord[l - 1]] == d {
                        pairs.push((d, ord[l - 1]));
                        l -= 1;
                    }
                    while r + 1 < n && x[ord[r + 1]] - xi == d {
                        pairs.push((d, ord[r + 1]));
                        r += 1;
                    }
                    if pairs.len() == 1 {
                        out[i].push(pairs[0].1);
                    } else {
                        pairs.sort_unstable_by_key(|&(_, j)| j);
                        let need = k - out[i].len();
                        out[i].extend(pairs.iter().take(need).map(|&(_, j)| j));
                    }
                }
            }
        }
        Model::Metric { d } => {
            for i in 0..n {
                out[i].clear();
                out[i].extend((0..n).filter(|&j| j != i && (x[j] - x[i]).abs() < d));
            }
        }
    }
}

/// RK4 step into `s.cand` with the interaction lists frozen, using only the
/// scratch stage buffers.
fn rk4_into(x: &[f64], lists: &[Vec<usize>], h: f64, s: &mut Scratch) {
    let n = x.len();
    rhs_into(x, lists, &mut s.k1);
    for i in 0..n {
        s.stage[i] = x[i] + h / 2.0 * s.k1[i];
    }
    rhs_into(&s.stage, lists, &mut s.k2);
    for i in 0..n {
        s.stage[i] = x[i] + h / 2.0 * s.k2[i];
    }
    rhs_into(&s.stage, lists, &mut s.k3);
    for i in 0..n {
        s.stage[i] = x[i] + h * s.k3[i];
    }
    rhs_into(&s.stage, lists, &mut s.k4);
    for i in 0..n {
        s.cand[i] = x[i] + h / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
}

/// True if a pair that was strictly ordered in `x` inverts by more than
/// ORDER_GUARD_TOL in `cand`, or if `cand` left the finite range.
fn order_violated(x: &[f64], order: &[usize], cand: &[f64]) -> bool {
    if cand.iter().any(|v| !v.is_finite()) {
        return true;
    }
    order.windows(2).any(|w| {
        let (a, b) = (w[0], w[1]);
        x[a] < x[b] && cand[a] - cand[b] > ORDER_GUARD_TOL
    })
}

/// Advance the topological dynamics by a single step of size `h`, with the
/// neighbor map frozen at the step's start.
pub fn step(state: &OpinionState, h: f64) -> Result<OpinionState> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("step size h={h} must be positive")));
    }
    let lists = Model::Topological.interaction_lists(state);
    let x = state.opinions();
    let cand = rk4(x, &lists, h);
    let order = sorted_order(x);
    if order_violated(x, &order, &cand) {
        return Err(Error::StepRejected {
            t: 0.0,
            h,
            reason: "sorted order inverted beyond tolerance".into(),
        });
    }
    Ok(state.with_opinions(cand))
}

/// Integrate the topological dynamics from `state0`.
pub fn integrate(state0: &OpinionState, cfg: &SimConfig) -> Result<Trajectory> {
    integrate_model(state0, Model::Topological, cfg)
}

/// Integrate either interaction model from `state0`.
///
/// A [`SwitchEvent`] is logged for every agent whose interaction list differs
/// across an accepted step. The run converges once the sup-norm of the field
/// has stayed below `conv_tol` and no switch has occurred throughout the
/// trailing `stall_window`; otherwise it stops at `t_max`.
pub fn integrate_model(state0: &OpinionState, model: Model, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let h_min = cfg.step / f64::powi(2.0, H_MIN_SHIFTS);

    let mut t = 0.0;
    let mut x = state0.opinions().to_vec();
    let mut lists = model.interaction_lists(state0);
    let mut samples = vec![(0.0, state0.clone())];
    let mut events: Vec<SwitchEvent> = Vec::new();
    let mut status = Status::HorizonReached;
    let mut next_record = cfg.record_every;
    let k = state0.k();
    let mut s = Scratch::new(x.len());

    let sup = |x: &[f64], lists: &[Vec<usize>], buf: &mut [f64]| -> f64 {
        rhs_into(x, lists, buf);
        buf.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    // Time since which the field has stayed below conv_tol with no switch.
    let mut calm_since =
        if sup(&x, &lists, &mut s.stage) < cfg.conv_tol { Some(0.0) } else { None };

    while t < cfg.t_max - 1e-12 {
        if let Some(since) = calm_since {
            if t - since >= cfg.stall_window {
                status = Status::Converged;
                break;
            }
        }

        let mut h = cfg.step.min(cfg.t_max - t);
        s.order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap().then(a.cmp(&b)));
        let mut switched;
        loop {
            rk4_into(&x, &lists, h, &mut s);
            if order_violated(&x, &s.order, &s.cand) {
                if h <= h_min {
                    return Err(Error::StepRejected {
                        t,
                        h,
                        reason: "sorted order inverted beyond tolerance at minimum step size"
                            .into(),
                    });
                }
                h *= 0.5;
                continue;
            }
            lists_into(model, k, &s.cand, &mut s.lists_new, &mut s.pairs, &mut s.cord, &mut s.rank);
            switched = s.lists_new != lists;
            if switched && h > h_min {
                h *= 0.5;
                continue;
            }
            break;
        }

        t += h;
        if switched {
            for (agent, (before, after)) in lists.iter().zip(&s.lists_new).enumerate() {
                if before != after {
                    events.push(SwitchEvent {
                        t,
                        agent,
                        before: before.clone(),
                        after: after.clone(),
                    });
                }
            }
            calm_since = None;
        }
        std::mem::swap(&mut x, &mut s.cand);
        std::mem::swap(&mut lists, &mut s.lists_new);

        if sup(&x, &lists, &mut s.stage) < cfg.conv_tol {
            calm_since.get_or_insert(t);
        } else {
            calm_since = None;
        }

        if t >= next_record - 1e-12 {
            samples.push((t, state0.with_opinions(x.clone())));
            while next_record <= t + 1e-12 {
                next_record += cfg.record_every;
            }
        }
    }

    if samples.last().map(|(st, _)| *st) != Some(t) {
        samples.push((t, state0.with_opinions(x)));
    }
    Ok(Trajectory { samples, events, status })
}

/// The pairwise derivative identity: d/dt (x_i - x_j) expressed through the
/// symmetric difference of the two neighbor sets. Equals rhs_i - rhs_j up to
/// arithmetic rounding.
pub fn pairwise_derivative(state: &OpinionState, i: usize, j: usize) -> f64 {
    assert_ne!(i, j, "pairwise_derivative requires distinct agents");
    let nm = compute_neighbors(state);
    let x = state.opinions();
    let ni = nm.neighbors(i);
    let nj = nm.neighbors(j);
    let only_i: f64 = ni.iter().filter(|l| !nj.contains(l)).map(|&l| x[l] - x[i]).sum();
    let only_j: f64 = nj.iter().filter(|m| !ni.contains(m)).map(|&m| x[m] - x[j]).sum();
    let common = ni.iter().filter(|l| nj.contains(l)).count();
    only_i - only_j - common as f64 * (x[i] - x[j])
}

/// Relabel agents in ascending opinion order.
///
/// Returns the sorted state and the permutation `sigma`, where `sigma[i]` is
/// agent i's new position: `sigma[i] < sigma[j]` whenever `x_i < x_j`, or
/// `x_i == x_j` and `i < j` (stable sort). Relabeling commutes with the
/// dynamics, so integrating then permuting equals permuting then integrating.
pub fn canonicalize(state: &OpinionState) -> (OpinionState, Vec<usize>) {
    let x = state.opinions();
    let order = sorted_order(x);
    let mut sigma = vec![0usize; x.len()];
    for (pos, &old) in order.iter().enumerate() {
        sigma[old] = pos;
    }
    let sorted = order.iter().map(|&old| x[old]).collect();
    (state.with_opinions(sorted), sigma)
}
