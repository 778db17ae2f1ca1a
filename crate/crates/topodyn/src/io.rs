//! Run configuration, artifact persistence, and plot emission.
//!
//! Trajectories are plain-text delimited tables with header `t,x_1,...,x_n`.
//! Floats are serialized with Rust's shortest round-trip formatting, so a
//! written table re-read is bit-identical. Summaries and reports are JSON
//! documents with a `schema_version` field; agent indices in all external
//! formats are 1-based. Plots are self-contained SVG files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{classify_state, is_removal_stable, is_structurally_stable, StateClass};
use crate::dynamics::{integrate_model, Model, SimConfig, Status, SwitchEvent, Trajectory};
use crate::error::{Error, Result};
use crate::perturbation::{run_experiment, ExperimentReport, Scenario};
use crate::topology::OpinionState;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TOPODYN_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Topological,
    Metric { d: f64 },
}

impl ModelChoice {
    pub fn to_model(self) -> Model {
        match self {
            ModelChoice::Topological => Model::Topological,
            ModelChoice::Metric { d } => Model::Metric { d },
        }
    }

    pub fn label(&self) -> String {
        match self {
            ModelChoice::Topological => "topological".into(),
            ModelChoice::Metric { d } => format!("metric(d={d})"),
        }
    }
}

/// Initial condition source: an explicit opinion list, or `count` opinions
/// drawn uniformly from [0, 1) by a seeded ChaCha8 generator (reproducible
/// across platforms).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSpec {
    Explicit(Vec<f64>),
    Random { count: usize, seed: u64 },
}

fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::Trajectory, OutputKind::Events, OutputKind::Summary]
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Trajectory,
    Events,
    Summary,
    Plot,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub model: ModelChoice,
    pub k: usize,
    pub init: InitSpec,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        // serde_json reports line and column on failure
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.sim.validate()?;
        Ok(cfg)
    }

    /// Construct the initial state, optionally overriding the config seed.
    pub fn initial_state(&self, seed_override: Option<u64>) -> Result<OpinionState> {
        match &self.init {
            InitSpec::Explicit(x) => OpinionState::new(x.clone(), self.k),
            InitSpec::Random { count, seed } => {
                let seed = seed_override.unwrap_or(*seed);
                OpinionState::new(random_opinions(*count, seed), self.k)
            }
        }
    }
}

/// `count` opinions uniform on [0, 1) from ChaCha8 seeded with `seed`.
pub fn random_opinions(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen::<f64>()).collect()
}

/// A state file for `analyze`: `{"k": 2, "opinions": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub k: usize,
    pub opinions: Vec<f64>,
}

impl StateFile {
    pub fn from_file(path: &Path) -> Result<OpinionState> {
        let text = fs::read_to_string(path)?;
        let sf: StateFile = serde_json::from_str(&text)?;
        OpinionState::new(sf.opinions, sf.k)
    }
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let n = traj.final_state().n();
    write!(out, "t")?;
    for i in 1..=n {
        write!(out, ",x_{i}")?;
    }
    writeln!(out)?;
    for (t, state) in &traj.samples {
        write!(out, "{t}")?;
        for v in state.opinions() {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Parse a trajectory table back into times and per-agent series.
pub fn read_trajectory(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::BadTrajectory("empty file".into()))?;
    let cols = header.split(',').count();
    if cols < 2 || !header.starts_with("t,") {
        return Err(Error::BadTrajectory(format!("unexpected header: {header}")));
    }
    let n = cols - 1;
    let mut times = Vec::new();
    let mut series = vec![Vec::new(); n];
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::BadTrajectory(format!(
                "line {}: expected {cols} fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::BadTrajectory(format!("line {}: {e}", lineno + 2)))
        };
        times.push(parse(fields[0])?);
        for (i, f) in fields[1..].iter().enumerate() {
            series[i].push(parse(f)?);
        }
    }
    Ok((times, series))
}

/// One JSON object per line: time, 1-based agent, neighbor lists before and
/// after the switch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub agent: usize,
    pub before: Vec<usize>,
    pub after: Vec<usize>,
}

impl EventRecord {
    fn from_event(e: &SwitchEvent) -> Self {
        Self {
            t: e.t,
            agent: e.agent + 1,
            before: e.before.iter().map(|&j| j + 1).collect(),
            after: e.after.iter().map(|&j| j + 1).collect(),
        }
    }
}

pub fn write_events(path: &Path, events: &[SwitchEvent]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for e in events {
        serde_json::to_writer(&mut out, &EventRecord::from_event(e))?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_events(path: &Path) -> Result<Vec<EventRecord>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterDoc {
    pub value: f64,
    pub size: usize,
    pub members: Vec<usize>,
}

/// Serializable view of a classification, with 1-based member indices and
/// the stability predicates (present only for clusterizations).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassDoc {
    pub kind: String,
    pub clusters: Vec<ClusterDoc>,
    pub structurally_stable: Option<bool>,
    pub removal_stable: Option<bool>,
}

impl ClassDoc {
    pub fn new(class: &StateClass, k: usize) -> Self {
        let clusters = class
            .partition
            .clusters()
            .iter()
            .map(|c| ClusterDoc {
                value: c.value,
                size: c.members.len(),
                members: c.members.iter().map(|&m| m + 1).collect(),
            })
            .collect();
        let (structural, removal) = if class.kind.is_clusterization() {
            (
                is_structurally_stable(&class.partition, k).ok(),
                is_removal_stable(&class.partition, k).ok(),
            )
        } else {
            (None, None)
        };
        Self {
            kind: class.kind.as_str().to_string(),
            clusters,
            structurally_stable: structural,
            removal_stable: removal,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub schema_version: u32,
    pub model: String,
    pub n: usize,
    pub k: usize,
    pub status: Status,
    pub t_final: f64,
    /// Equal to `t_final` when the run converged.
    pub convergence_time: Option<f64>,
    pub event_count: usize,
    #[serde(flatten)]
    pub class: ClassDoc,
    pub final_opinions: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReportDoc {
    pub model: String,
    pub status: Status,
    pub t_final: f64,
    pub event_count: usize,
    pub original_agents_moved: f64,
    pub partition_preserved: bool,
    pub initial: ClassDoc,
    pub r#final: ClassDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentDoc {
    pub schema_version: u32,
    pub scenario: String,
    pub runs: Vec<RunReportDoc>,
}

pub fn experiment_doc(report: &ExperimentReport, k: usize) -> ExperimentDoc {
    ExperimentDoc {
        schema_version: SCHEMA_VERSION,
        scenario: report.scenario.clone(),
        runs: report
            .runs
            .iter()
            .map(|r| RunReportDoc {
                model: match r.model {
                    Model::Topological => "topological".into(),
                    Model::Metric { d } => format!("metric(d={d})"),
                },
                status: r.status,
                t_final: r.trajectory.final_time(),
                event_count: r.event_count,
                original_agents_moved: r.original_agents_moved,
                partition_preserved: r.partition_preserved,
                initial: ClassDoc::new(&r.initial_class, k),
                r#final: ClassDoc::new(&r.final_class, k),
            })
            .collect(),
    }
}

pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, doc)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Artifacts produced by a simulate run.
pub struct SimulateOutcome {
    pub status: Status,
    pub summary: SummaryDoc,
    pub paths: Vec<PathBuf>,
}

/// Run a configured simulation and write the requested artifacts into
/// `out_dir`.
pub fn cmd_simulate(
    config_path: &Path,
    seed_override: Option<u64>,
    out_dir: &Path,
) -> Result<SimulateOutcome> {
    let cfg = RunConfig::from_file(config_path)?;
    let state0 = cfg.initial_state(seed_override)?;
    let traj = integrate_model(&state0, cfg.model.to_model(), &cfg.sim)?;

    let final_state = traj.final_state();
    let class = classify_state(final_state, 1e-6, cfg.sim.conv_tol);
    let summary = SummaryDoc {
        schema_version: SCHEMA_VERSION,
        model: cfg.model.label(),
        n: state0.n(),
        k: cfg.k,
        status: traj.status,
        t_final: traj.final_time(),
        convergence_time: (traj.status == Status::Converged).then(|| traj.final_time()),
        event_count: traj.events.len(),
        class: ClassDoc::new(&class, cfg.k),
        final_opinions: final_state.opinions().to_vec(),
    };

    fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    for kind in &cfg.outputs {
        let path = match kind {
            OutputKind::Trajectory => {
                let p = out_dir.join("trajectory.csv");
                write_trajectory(&p, &traj)?;
                p
            }
            OutputKind::Events => {
                let p = out_dir.join("events.jsonl");
                write_events(&p, &traj.events)?;
                p
            }
            OutputKind::Summary => {
                let p = out_dir.join("summary.json");
                write_json(&p, &summary)?;
                p
            }
            OutputKind::Plot => {
                let p = out_dir.join("plot.svg");
                let (times, series) = trajectory_series(&traj);
                let marks: Vec<(f64, usize)> =
                    traj.events.iter().map(|e| (e.t, e.agent)).collect();
                fs::write(&p, render_svg(&times, &series, &marks)?)?;
                p
            }
        };
        paths.push(path);
    }
    Ok(SimulateOutcome { status: traj.status, summary, paths })
}

/// Classify a state file and report the stability predicates.
pub fn cmd_analyze(state_path: &Path, eps: f64, tol: f64) -> Result<ClassDoc> {
    let state = StateFile::from_file(state_path)?;
    let class = classify_state(&state, eps, tol);
    Ok(ClassDoc::new(&class, state.k()))
}

/// Run a scenario file and write `report.json` (plus per-model trajectories
/// when the scenario requests them).
pub fn cmd_experiment(scenario_path: &Path, out_dir: &Path) -> Result<(ExperimentDoc, Vec<PathBuf>)> {
    let text = fs::read_to_string(scenario_path)?;
    let scenario: Scenario = serde_json::from_str(&text)?;
    let report = run_experiment(&scenario, &SimConfig::default())?;
    let doc = experiment_doc(&report, scenario.k);

    fs::create_dir_all(out_dir)?;
    let report_path = out_dir.join("report.json");
    write_json(&report_path, &doc)?;
    let mut paths = vec![report_path];
    if scenario.emit_trajectories {
        for (idx, run) in report.runs.iter().enumerate() {
            let p = out_dir.join(format!("trajectory_{idx}.csv"));
            write_trajectory(&p, &run.trajectory)?;
            paths.push(p);
        }
    }
    Ok((doc, paths))
}

/// Render a trajectory file (and optional event log) to an SVG plot.
pub fn cmd_plot(trajectory_path: &Path, events_path: Option<&Path>, out: &Path) -> Result<()> {
    let (times, series) = read_trajectory(trajectory_path)?;
    let marks: Vec<(f64, usize)> = match events_path {
        Some(p) => read_events(p)?.iter().map(|e| (e.t, e.agent - 1)).collect(),
        None => Vec::new(),
    };
    fs::write(out, render_svg(&times, &series, &marks)?)?;
    Ok(())
}

fn trajectory_series(traj: &Trajectory) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = traj.final_state().n();
    let times: Vec<f64> = traj.samples.iter().map(|(t, _)| *t).collect();
    let series: Vec<Vec<f64>> = (0..n)
        .map(|i| traj.samples.iter().map(|(_, s)| s.opinions()[i]).collect())
        .collect();
    (times, series)
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Opinion-vs-time polylines, one per agent, with optional switch-event
/// markers. Pure function of its inputs, so identical trajectories render to
/// identical files.
pub fn render_svg(times: &[f64], series: &[Vec<f64>], marks: &[(f64, usize)]) -> Result<String> {
    if times.len() < 2 || series.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    for s in series {
        if s.len() != times.len() {
            return Err(Error::BadTrajectory("ragged series".into()));
        }
    }

    let (width, height) = (800.0, 500.0);
    let (left, right, top, bottom) = (60.0, 20.0, 20.0, 40.0);
    let t0 = times[0];
    let t1 = *times.last().unwrap();
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &v in s {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if y_max - y_min < 1e-12 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let pad = 0.05 * (y_max - y_min);
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let sx = |t: f64| left + (t - t0) / (t1 - t0) * (width - left - right);
    let sy = |v: f64| height - bottom - (v - y_min) / (y_max - y_min) * (height - top - bottom);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));

    // axes and tick labels
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        height - bottom,
        width - right
    ));
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>\n",
        height - bottom
    ));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let t = t0 + f * (t1 - t0);
        let v = y_min + f * (y_max - y_min);
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{:.3}</text>\n",
            sx(t),
            height - bottom + 16.0,
            t
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{:.3}</text>\n",
            left - 6.0,
            sy(v) + 4.0,
            v
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">t</text>\n",
        (left + width - right) / 2.0,
        height - 6.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">x</text>\n",
        (top + height - bottom) / 2.0
    ));

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = times
            .iter()
            .zip(s)
            .map(|(&t, &v)| format!("{:.2},{:.2}", sx(t), sy(v)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
            points.join(" ")
        ));
    }

    for &(t, agent) in marks {
        if agent >= series.len() || t < t0 || t > t1 {
            continue;
        }
        // mark at the nearest recorded sample of the switching agent
        let idx = times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"black\" fill-opacity=\"0.5\"/>\n",
            sx(t),
            sy(series[agent][idx])
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate;
    use proptest::prelude::*;
    use tempfile::tempdir;

    #[test]
    fn random_opinions_are_seeded_and_in_range() {
        let a = random_opinions(20, 5);
        let b = random_opinions(20, 5);
        assert_eq!(a, b);
        assert!(a.iter().all(|v| (0.0..1.0).contains(v)));
        assert_ne!(a, random_opinions(20, 6));
    }

    #[test]
    fn trajectory_round_trip_is_bit_identical() {
        let st = OpinionState::new(vec![0.0, 1.0], 1).unwrap();
        let cfg = SimConfig { t_max: 5.0, ..SimConfig::default() };
        let traj = integrate(&st, &cfg).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        write_trajectory(&path, &traj).unwrap();
        let (times, series) = read_trajectory(&path).unwrap();
        assert_eq!(times.len(), traj.samples.len());
        for (i, (t, s)) in traj.samples.iter().enumerate() {
            assert_eq!(times[i].to_bits(), t.to_bits());
            for a in 0..2 {
                assert_eq!(series[a][i].to_bits(), s.opinions()[a].to_bits());
            }
        }
    }

    #[test]
    fn config_parsing_defaults_and_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(
            &path,
            r#"{"model": "topological", "k": 3, "init": {"random": {"count": 7, "seed": 1}}}"#,
        )
        .unwrap();
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.schema_version, SCHEMA_VERSION);
        assert_eq!(cfg.sim.step, 1e-3);
        assert_eq!(cfg.initial_state(None).unwrap().n(), 7);
        // seed override changes the draw
        assert_ne!(
            cfg.initial_state(Some(2)).unwrap().opinions(),
            cfg.initial_state(None).unwrap().opinions()
        );

        fs::write(&path, r#"{"model": "topological", "k": 3"#).unwrap();
        let err = RunConfig::from_file(&path).unwrap_err();
        // parse errors carry line/column context
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn simulate_writes_requested_artifacts() {
        let dir = tempdir().unwrap();
        let cfg_path = dir.path().join("cfg.json");
        fs::write(
            &cfg_path,
            r#"{
                "model": "topological",
                "k": 1,
                "init": {"explicit": [0.0, 1.0]},
                "sim": {"t_max": 15.0},
                "outputs": ["trajectory", "events", "summary", "plot"]
            }"#,
        )
        .unwrap();
        let out = cmd_simulate(&cfg_path, None, dir.path()).unwrap();
        assert_eq!(out.status, Status::Converged);
        assert_eq!(out.summary.class.kind, "consensus");
        for p in &out.paths {
            assert!(p.exists(), "missing artifact {p:?}");
        }
        let svg = fs::read_to_string(dir.path().join("plot.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn simulate_is_deterministic() {
        let dir = tempdir().unwrap();
        let cfg_path = dir.path().join("cfg.json");
        fs::write(
            &cfg_path,
            r#"{
                "model": "topological",
                "k": 3,
                "init": {"random": {"count": 7, "seed": 11}},
                "sim": {"t_max": 30.0}
            }"#,
        )
        .unwrap();
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        cmd_simulate(&cfg_path, None, &out_a).unwrap();
        cmd_simulate(&cfg_path, None, &out_b).unwrap();
        for name in ["trajectory.csv", "events.jsonl", "summary.json"] {
            let a = fs::read(out_a.join(name)).unwrap();
            let b = fs::read(out_b.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn analyze_reports_stability_predicates() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("state.json");
        fs::write(&path, r#"{"k": 2, "opinions": [0, 0, 0, 1, 1, 1]}"#).unwrap();
        let doc = cmd_analyze(&path, 0.0, 0.0).unwrap();
        assert_eq!(doc.kind, "clusterization");
        assert_eq!(doc.structurally_stable, Some(true));
        assert_eq!(doc.removal_stable, Some(false));
        assert_eq!(doc.clusters[0].members, vec![1, 2, 3]);
    }

    #[test]
    fn analyze_classifies_k4_n14_state() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("state.json");
        fs::write(
            &path,
            r#"{"k": 4, "opinions": [0, 0, 0, 0, 0, 2, 2, 3, 3, 5, 5, 5, 5, 5]}"#,
        )
        .unwrap();
        let doc = cmd_analyze(&path, 0.0, 0.0).unwrap();
        assert_eq!(doc.kind, "equilibrium_non_clusterization");
        assert_eq!(doc.structurally_stable, None);
    }

    #[test]
    fn plot_needs_two_samples() {
        assert!(matches!(
            render_svg(&[0.0], &[vec![1.0]], &[]),
            Err(Error::EmptyTrajectory)
        ));
    }

    #[test]
    fn experiment_command_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        fs::write(
            &path,
            r#"{
                "name": "add-demo",
                "model": "topological",
                "k": 2,
                "initial": [0, 0, 0, 1, 1, 1],
                "action": {"add": {"opinion": 0.5}},
                "sim": {"t_max": 30.0},
                "emit_trajectories": true
            }"#,
        )
        .unwrap();
        let (doc, paths) = cmd_experiment(&path, dir.path()).unwrap();
        assert_eq!(doc.scenario, "add-demo");
        assert!(doc.runs[0].partition_preserved);
        assert!(paths.iter().all(|p| p.exists()));
        assert!(dir.path().join("trajectory_0.csv").exists());
    }

    proptest! {
        /// Floats written to the trajectory table re-read to the same bits.
        #[test]
        fn float_serialization_round_trips(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let text = format!("{v}");
            prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
