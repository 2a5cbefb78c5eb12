//! Config-driven experiment runs and the three-curve figure datasets.
//!
//! Every CSV produced here starts with [`CSV_HEADER`]. Column `iteration`
//! is the row's position on the shared iteration axis, so in a hybrid run
//! the first world row sits at the switch iteration.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::thread;

use crate::config::{ExperimentConfig, Mode};
use crate::engine::{IterationHistory, LearningProblem, Phase};
use crate::error::{IlcError, Result};
use crate::laws::{stability_metrics, LawKind, StabilityMetrics};
use crate::plot::{LineChart, Marker, Series};
use crate::switch::{to_db, SwitchReport};

pub const CSV_HEADER: &str = "iteration,phase,rms,rms_db,hardware_iterations_consumed";

/// World iterations drawn after the switch point in figure datasets.
pub const FIGURE_WORLD_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub mode: Mode,
    pub law: LawKind,
    pub deleted_rows: usize,
    pub final_model_rms: Option<f64>,
    pub final_world_rms: Option<f64>,
    pub hardware_runs: usize,
    pub model_stability: StabilityMetrics,
    pub world_stability: StabilityMetrics,
    pub switch_reports: Vec<SwitchReport>,
    pub warnings: Vec<String>,
}

fn db_cell(rms: Option<f64>) -> String {
    match rms {
        Some(r) => match to_db(r) {
            Ok(db) => format!("{r:.6e} ({db:.3} dB)"),
            Err(_) => format!("{r:.6e}"),
        },
        None => "-".to_string(),
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode            {}", self.mode.as_str())?;
        writeln!(f, "law             {}", self.law)?;
        writeln!(f, "deleted rows    {}", self.deleted_rows)?;
        writeln!(f, "final model RMS {}", db_cell(self.final_model_rms))?;
        writeln!(f, "final world RMS {}", db_cell(self.final_world_rms))?;
        writeln!(f, "hardware runs   {}", self.hardware_runs)?;
        for (name, m) in [("model", &self.model_stability), ("world", &self.world_stability)] {
            writeln!(
                f,
                "{name} I-PL     spectral radius {:.6}, max singular value {:.6}",
                m.spectral_radius, m.max_singular_value
            )?;
        }
        if !self.switch_reports.is_empty() {
            writeln!(f, "{}", SwitchReport::CSV_HEADER)?;
            for r in &self.switch_reports {
                writeln!(f, "{}", r.csv_row())?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub history: IterationHistory,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub csv_path: PathBuf,
    pub summary: RunSummary,
    pub plot_paths: Vec<PathBuf>,
}

fn stability_warnings(phase: &str, m: &StabilityMetrics, warnings: &mut Vec<String>) {
    if !m.asymptotic() {
        warnings.push(format!(
            "{phase} iteration matrix has spectral radius {:.6} >= 1: learning does not converge",
            m.spectral_radius
        ));
    }
    if !m.monotone() {
        warnings.push(format!(
            "{phase} iteration matrix has max singular value {:.6} >= 1: error norm may grow between iterations",
            m.max_singular_value
        ));
    }
}

/// Runs the configured experiment in memory.
pub fn simulate_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    let mut warnings = config.warnings()?;
    let problem = config.build_problem()?;
    let u0 = config.initial_input_trajectory()?;

    let model_stability = stability_metrics(&problem.gain().iteration_matrix(problem.model())?)?;
    let world_stability = stability_metrics(&problem.gain().iteration_matrix(problem.world())?)?;
    stability_warnings("model", &model_stability, &mut warnings);
    stability_warnings("world", &world_stability, &mut warnings);

    let history = match config.mode {
        Mode::Model => problem.run_iterations(&u0, config.model_count, Phase::Model)?,
        Mode::World => problem.run_iterations(&u0, config.world_count, Phase::World)?,
        Mode::Hybrid => problem.run_hybrid(&u0, config.model_count, config.world_count)?,
    };
    let switch_reports = config
        .switch_candidates
        .iter()
        .map(|&n| problem.evaluate_switch(&u0, n, config.slope_factor))
        .collect::<Result<Vec<_>>>()?;

    let final_rms = |phase| history.phase_records(phase).last().map(|r| r.rms);
    let summary = RunSummary {
        mode: config.mode,
        law: config.law_kind,
        deleted_rows: problem.model().deleted_rows(),
        final_model_rms: final_rms(Phase::Model),
        final_world_rms: final_rms(Phase::World),
        hardware_runs: history.last().hardware_runs,
        model_stability,
        world_stability,
        switch_reports,
        warnings,
    };
    Ok(ExperimentRun { history, summary })
}

/// Renders a history in the canonical CSV layout.
pub fn history_csv(history: &IterationHistory) -> String {
    let mut out = String::with_capacity(64 * (history.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (row, record) in history.records.iter().enumerate() {
        let db = record.rms_db.map(|v| format!("{v:.9}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{row},{},{:.12e},{db},{}",
            record.phase, record.rms, record.hardware_runs
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| IlcError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| IlcError::Io(format!("{}: {e}", path.display())))
}

fn db_points(history: &IterationHistory) -> Vec<(f64, Option<f64>)> {
    history
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (i as f64, r.rms_db))
        .collect()
}

/// Runs the experiment and writes its CSV (and plot, if configured).
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let run = simulate_experiment(config)?;
    write_file(&config.output_csv, &history_csv(&run.history))?;
    let mut plot_paths = Vec::new();
    if let Some(plot) = &config.output_plot {
        let chart = LineChart {
            title: format!("{} run, {} law", config.mode.as_str(), config.law_kind),
            x_label: "iteration".into(),
            y_label: "RMS error (dB)".into(),
            series: vec![Series {
                label: config.mode.as_str().into(),
                color: "black".into(),
                points: db_points(&run.history),
            }],
            markers: Vec::new(),
        };
        write_file(plot, &chart.to_svg())?;
        plot_paths.push(plot.clone());
    }
    Ok(RunArtifacts {
        csv_path: config.output_csv.clone(),
        summary: run.summary,
        plot_paths,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl FigureId {
    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
        }
    }

    /// Bundled preset the figure is built from.
    pub fn preset(self) -> &'static str {
        match self {
            FigureId::Fig2 | FigureId::Fig3 => "second_order_fig3",
            FigureId::Fig4 | FigureId::Fig5 => "third_order_fig5",
        }
    }
}

impl FromStr for FigureId {
    type Err = IlcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(FigureId::Fig2),
            "fig3" => Ok(FigureId::Fig3),
            "fig4" => Ok(FigureId::Fig4),
            "fig5" => Ok(FigureId::Fig5),
            other => Err(IlcError::config(
                "figure",
                format!("unknown figure `{other}` (expected fig2, fig3, fig4 or fig5)"),
            )),
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Model-only, world-only and hybrid curves on a shared iteration axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub figure: FigureId,
    pub law: LawKind,
    pub switch_n: usize,
    pub model: IterationHistory,
    pub world: IterationHistory,
    pub hybrid: IterationHistory,
    pub report: SwitchReport,
}

pub fn figure_config(figure: FigureId, law: LawKind) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::preset(figure.preset())?;
    config.law_kind = law;
    Ok(config)
}

/// Computes the three curves concurrently, one thread per curve.
pub fn figure_data(figure: FigureId, law: LawKind, switch_n: usize) -> Result<FigureData> {
    if switch_n == 0 {
        return Err(IlcError::config("switch", "switch iteration must be at least 1"));
    }
    let config = figure_config(figure, law)?;
    let problem = config.build_problem()?;
    let u0 = config.initial_input_trajectory()?;
    let total = switch_n + FIGURE_WORLD_ITERATIONS;
    // build the shared decomposition once before the threads fan out
    problem.fast_forwarder()?;

    let (model, world, hybrid) = thread::scope(|s| {
        let p: &LearningProblem = &problem;
        let u0 = &u0;
        let model = s.spawn(move || p.run_iterations(u0, total, Phase::Model));
        let world = s.spawn(move || p.run_iterations(u0, total, Phase::World));
        let hybrid = s.spawn(move || p.run_hybrid(u0, switch_n, FIGURE_WORLD_ITERATIONS));
        (
            model.join().expect("model curve thread panicked"),
            world.join().expect("world curve thread panicked"),
            hybrid.join().expect("hybrid curve thread panicked"),
        )
    });
    let report = problem.evaluate_switch(&u0, switch_n, config.slope_factor)?;
    Ok(FigureData {
        figure,
        law,
        switch_n,
        model: model?,
        world: world?,
        hybrid: hybrid?,
        report,
    })
}

impl FigureData {
    fn stem(&self) -> String {
        format!("{}_{}_n{}", self.figure, self.law, self.switch_n)
    }

    /// A1/A2 (model at n, n+1) and B1/B2 (world at n, n+1) as a small CSV.
    pub fn markers_csv(&self) -> String {
        let r = &self.report;
        let n = r.candidate_n;
        let mut out = String::from("marker,iteration,rms,rms_db\n");
        for (name, x, v) in [
            ("A1", n, r.r_model_n),
            ("A2", n + 1, r.r_model_n1),
            ("B1", n, r.r_world_n),
            ("B2", n + 1, r.r_world_n1),
        ] {
            let db = to_db(v).map(|d| format!("{d:.9}")).unwrap_or_default();
            let _ = writeln!(out, "{name},{x},{v:.12e},{db}");
        }
        out
    }

    pub fn chart(&self) -> LineChart {
        let r = &self.report;
        let n = r.candidate_n as f64;
        let markers = [
            ("A1", n, r.r_model_n),
            ("A2", n + 1.0, r.r_model_n1),
            ("B1", n, r.r_world_n),
            ("B2", n + 1.0, r.r_world_n1),
        ]
        .into_iter()
        .filter_map(|(label, x, v)| to_db(v).ok().map(|y| Marker { label: label.into(), x, y }))
        .collect();
        LineChart {
            title: format!("{} {} law, switch at {}", self.figure, self.law, self.switch_n),
            x_label: "iteration".into(),
            y_label: "RMS error (dB)".into(),
            series: vec![
                Series { label: "model".into(), color: "black".into(), points: db_points(&self.model) },
                Series { label: "world".into(), color: "blue".into(), points: db_points(&self.world) },
                Series { label: "model then world".into(), color: "red".into(), points: db_points(&self.hybrid) },
            ],
            markers,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureArtifacts {
    pub data: FigureData,
    /// Model, world and hybrid CSVs, in that order.
    pub csv_paths: [PathBuf; 3],
    pub markers_path: PathBuf,
    pub plot_path: Option<PathBuf>,
}

/// Computes a figure and writes its CSVs (and an SVG when `plot` is set) into `out_dir`.
pub fn reproduce_figure(
    figure: FigureId,
    law: LawKind,
    switch_n: usize,
    out_dir: &Path,
    plot: bool,
) -> Result<FigureArtifacts> {
    let data = figure_data(figure, law, switch_n)?;
    let stem = data.stem();
    let csv_paths = ["model", "world", "hybrid"].map(|c| out_dir.join(format!("{stem}_{c}.csv")));
    for (path, history) in csv_paths.iter().zip([&data.model, &data.world, &data.hybrid]) {
        write_file(path, &history_csv(history))?;
    }
    let markers_path = out_dir.join(format!("{stem}_switch.csv"));
    write_file(&markers_path, &data.markers_csv())?;
    let plot_path = if plot {
        let path = out_dir.join(format!("{stem}.svg"));
        write_file(&path, &data.chart().to_svg())?;
        Some(path)
    } else {
        None
    };
    Ok(FigureArtifacts {
        data,
        csv_paths,
        markers_path,
        plot_path,
    })
}

/// Switch reports for the config's problem at each candidate.
pub fn advise_switch(config: &ExperimentConfig, candidates: &[usize]) -> Result<Vec<SwitchReport>> {
    let problem = config.build_problem()?;
    let u0 = config.initial_input_trajectory()?;
    candidates
        .iter()
        .map(|&n| problem.evaluate_switch(&u0, n, config.slope_factor))
        .collect()
}
