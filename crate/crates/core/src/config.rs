//! Experiment configuration: a flat `key = value` text format with dotted
//! section names, `#` comments and strict key checking.
//!
//! Every key, its unit and its default is listed in the README. Values are
//! written back with the shortest representation that parses to the same
//! `f64`, so a config survives a write/load round trip unchanged.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;

use crate::engine::LearningProblem;
use crate::error::{IlcError, Result};
use crate::laws::{LawKind, LearningLaw};
use crate::lifted::{LiftedSystem, Trajectory};
use crate::lti::{
    discretize_zoh, make_second_order, make_third_order, sampled_zeros, ContinuousStateSpace,
    DiscreteStateSpace,
};

/// Bundled presets as `(file name, contents)`.
pub const PRESETS: [(&str, &str); 2] = [
    (
        "second_order_fig3.cfg",
        include_str!("../presets/second_order_fig3.cfg"),
    ),
    (
        "third_order_fig5.cfg",
        include_str!("../presets/third_order_fig5.cfg"),
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    SecondOrder,
    ThirdOrder,
}

impl SystemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemKind::SecondOrder => "second_order",
            SystemKind::ThirdOrder => "third_order",
        }
    }
}

impl FromStr for SystemKind {
    type Err = IlcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "second_order" => Ok(SystemKind::SecondOrder),
            "third_order" => Ok(SystemKind::ThirdOrder),
            other => Err(IlcError::config(
                "system.kind",
                format!("unknown system `{other}` (expected second_order or third_order)"),
            )),
        }
    }
}

/// Parameters of one plant. `real_pole` is present exactly for third-order systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    pub damping_ratio: f64,
    pub natural_frequency: f64,
    pub real_pole: Option<f64>,
}

impl PlantParams {
    pub fn continuous(&self) -> Result<ContinuousStateSpace> {
        match self.real_pole {
            None => make_second_order(self.damping_ratio, self.natural_frequency),
            Some(a) => make_third_order(a, self.damping_ratio, self.natural_frequency),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeletedRows {
    /// One row per sampled model zero outside the unit circle.
    Auto,
    Fixed(usize),
}

/// `y*(t) = (A pi) (1 - cos(w pi t))^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub amplitude_coefficient: f64,
    pub angular_frequency_coefficient: f64,
    pub exponent: f64,
}

impl TrajectorySpec {
    pub fn value(&self, t: f64) -> f64 {
        let base = 1.0 - (self.angular_frequency_coefficient * PI * t).cos();
        self.amplitude_coefficient * PI * base.powf(self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialInput {
    DesiredOutput,
    Zero,
    /// Whitespace- or comma-separated values, one per input step.
    File(PathBuf),
}

impl fmt::Display for InitialInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialInput::DesiredOutput => f.write_str("desired_output"),
            InitialInput::Zero => f.write_str("zero"),
            InitialInput::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Model,
    World,
    Hybrid,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Model => "model",
            Mode::World => "world",
            Mode::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system_kind: SystemKind,
    pub model: PlantParams,
    pub world: PlantParams,
    pub sample_period: f64,
    pub horizon: usize,
    pub deleted_rows: DeletedRows,
    pub trajectory: TrajectorySpec,
    pub law_kind: LawKind,
    pub gain: f64,
    pub initial_input: InitialInput,
    /// `None` means the zero state.
    pub initial_state: Option<Vec<f64>>,
    pub mode: Mode,
    pub model_count: usize,
    pub world_count: usize,
    pub switch_candidates: Vec<usize>,
    pub slope_factor: f64,
    pub output_csv: PathBuf,
    pub output_plot: Option<PathBuf>,
}

const PLANT_KEYS: [&str; 3] = ["damping_ratio", "natural_frequency", "real_pole"];

const GLOBAL_KEYS: [&str; 18] = [
    "system.kind",
    "sample_period",
    "horizon",
    "deleted_rows",
    "trajectory.amplitude_coefficient",
    "trajectory.angular_frequency_coefficient",
    "trajectory.exponent",
    "law.kind",
    "law.gain",
    "initial_input",
    "initial_state",
    "mode",
    "iterations.model_count",
    "iterations.world_count",
    "switch.candidates",
    "switch.slope_factor",
    "output.csv",
    "output.plot",
];

fn known_key(key: &str) -> bool {
    if GLOBAL_KEYS.contains(&key) {
        return true;
    }
    match key.split_once('.') {
        Some(("model" | "world", field)) => PLANT_KEYS.contains(&field),
        _ => false,
    }
}

struct Entries {
    values: BTreeMap<String, String>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                IlcError::config(
                    format!("line {}", index + 1),
                    format!("expected `key = value`, found `{line}`"),
                )
            })?;
            let key = key.trim();
            if !known_key(key) {
                return Err(IlcError::config(key, "unknown key"));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(IlcError::config(key, "key given more than once"));
            }
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| IlcError::config(key, "missing required key"))
    }

    fn parse_value<T: FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| IlcError::config(key, format!("expected {what}, found `{value}`")))
    }

    fn real(&self, key: &str) -> Result<f64> {
        Self::parse_value(key, self.required(key)?, "a real number")
    }

    fn real_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            Some(v) => Self::parse_value(key, v, "a real number"),
            None => Ok(default),
        }
    }

    fn count(&self, key: &str) -> Result<usize> {
        Self::parse_value(key, self.required(key)?, "a non-negative integer")
    }

    fn count_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            Some(v) => Self::parse_value(key, v, "a non-negative integer"),
            None => Ok(default),
        }
    }

    fn list<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<Vec<T>>> {
        let Some(raw) = self.raw(key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(|item| Self::parse_value(key, item.trim(), what))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn plant(&self, section: &str, kind: SystemKind) -> Result<PlantParams> {
        let key = |field: &str| format!("{section}.{field}");
        let real_pole = match (kind, self.raw(&key("real_pole"))) {
            (SystemKind::ThirdOrder, _) => Some(self.real(&key("real_pole"))?),
            (SystemKind::SecondOrder, None) => None,
            (SystemKind::SecondOrder, Some(_)) => {
                return Err(IlcError::config(
                    key("real_pole"),
                    "only valid for third_order systems",
                ))
            }
        };
        Ok(PlantParams {
            damping_ratio: self.real(&key("damping_ratio"))?,
            natural_frequency: self.real(&key("natural_frequency"))?,
            real_pole,
        })
    }
}

impl ExperimentConfig {
    /// Parses and validates config text.
    pub fn parse(text: &str) -> Result<Self> {
        let entries = Entries::parse(text)?;
        let system_kind: SystemKind = entries.required("system.kind")?.parse()?;
        let deleted_rows = match entries.raw("deleted_rows") {
            None | Some("auto") => DeletedRows::Auto,
            Some(v) => DeletedRows::Fixed(Entries::parse_value(
                "deleted_rows",
                v,
                "`auto` or a non-negative integer",
            )?),
        };
        let initial_input = match entries.raw("initial_input") {
            None | Some("desired_output") => InitialInput::DesiredOutput,
            Some("zero") => InitialInput::Zero,
            Some(v) => match v.strip_prefix("file:") {
                Some(path) if !path.trim().is_empty() => {
                    InitialInput::File(PathBuf::from(path.trim()))
                }
                _ => {
                    return Err(IlcError::config(
                        "initial_input",
                        format!("expected desired_output, zero or file:<path>, found `{v}`"),
                    ))
                }
            },
        };
        let mode = match entries.raw("mode").unwrap_or("hybrid") {
            "model" => Mode::Model,
            "world" => Mode::World,
            "hybrid" => Mode::Hybrid,
            other => {
                return Err(IlcError::config(
                    "mode",
                    format!("expected model, world or hybrid, found `{other}`"),
                ))
            }
        };
        let config = Self {
            system_kind,
            model: entries.plant("model", system_kind)?,
            world: entries.plant("world", system_kind)?,
            sample_period: entries.real("sample_period")?,
            horizon: entries.count("horizon")?,
            deleted_rows,
            trajectory: TrajectorySpec {
                amplitude_coefficient: entries.real_or("trajectory.amplitude_coefficient", 1.0)?,
                angular_frequency_coefficient: entries
                    .real("trajectory.angular_frequency_coefficient")?,
                exponent: entries.real_or("trajectory.exponent", 2.0)?,
            },
            law_kind: entries.raw("law.kind").unwrap_or("p_transpose").parse()?,
            gain: entries.real_or("law.gain", 1.0)?,
            initial_input,
            initial_state: entries.list("initial_state", "a real number")?,
            mode,
            model_count: entries.count_or("iterations.model_count", 0)?,
            world_count: entries.count_or("iterations.world_count", 0)?,
            switch_candidates: entries
                .list("switch.candidates", "a positive integer")?
                .unwrap_or_default(),
            slope_factor: entries.real_or("switch.slope_factor", 1.0)?,
            output_csv: PathBuf::from(entries.raw("output.csv").unwrap_or("ilc_run.csv")),
            output_plot: entries.raw("output.plot").map(PathBuf::from),
        };
        config.validate()?;
        Ok(config)
    }

    /// Loads one of the bundled presets by file name (with or without `.cfg`).
    pub fn preset(name: &str) -> Result<Self> {
        let file = if name.ends_with(".cfg") {
            name.to_string()
        } else {
            format!("{name}.cfg")
        };
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == file)
            .ok_or_else(|| IlcError::config("preset", format!("no bundled preset `{name}`")))?;
        Self::parse(text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(IlcError::config(key, format!("must be positive and finite, found {v}")))
            }
        };
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(IlcError::config(key, format!("must be finite, found {v}")))
            }
        };
        for (section, plant) in [("model", &self.model), ("world", &self.world)] {
            positive(&format!("{section}.damping_ratio"), plant.damping_ratio)?;
            positive(&format!("{section}.natural_frequency"), plant.natural_frequency)?;
            match (self.system_kind, plant.real_pole) {
                (SystemKind::ThirdOrder, Some(a)) => positive(&format!("{section}.real_pole"), a)?,
                (SystemKind::SecondOrder, None) => {}
                _ => {
                    return Err(IlcError::config(
                        format!("{section}.real_pole"),
                        "required for third_order and rejected for second_order",
                    ))
                }
            }
        }
        positive("sample_period", self.sample_period)?;
        if self.horizon == 0 {
            return Err(IlcError::config("horizon", "must be at least 1"));
        }
        if let DeletedRows::Fixed(d) = self.deleted_rows {
            if d >= self.horizon {
                return Err(IlcError::config(
                    "deleted_rows",
                    format!("must be less than the horizon ({})", self.horizon),
                ));
            }
        }
        finite("trajectory.amplitude_coefficient", self.trajectory.amplitude_coefficient)?;
        finite(
            "trajectory.angular_frequency_coefficient",
            self.trajectory.angular_frequency_coefficient,
        )?;
        positive("trajectory.exponent", self.trajectory.exponent)?;
        positive("law.gain", self.gain)?;
        if let Some(x0) = &self.initial_state {
            let order = match self.system_kind {
                SystemKind::SecondOrder => 2,
                SystemKind::ThirdOrder => 3,
            };
            if x0.len() != order {
                return Err(IlcError::config(
                    "initial_state",
                    format!("expected {order} values, found {}", x0.len()),
                ));
            }
            for &v in x0 {
                finite("initial_state", v)?;
            }
        }
        if self.switch_candidates.contains(&0) {
            return Err(IlcError::config("switch.candidates", "candidates must be at least 1"));
        }
        finite("switch.slope_factor", self.slope_factor)?;
        if self.output_csv.as_os_str().is_empty() {
            return Err(IlcError::config("output.csv", "empty path"));
        }
        Ok(())
    }

    /// Serializes every field, defaults included.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut line = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        line("system.kind", self.system_kind.as_str().to_string());
        for (section, plant) in [("model", &self.model), ("world", &self.world)] {
            if let Some(a) = plant.real_pole {
                line(&format!("{section}.real_pole"), a.to_string());
            }
            line(&format!("{section}.damping_ratio"), plant.damping_ratio.to_string());
            line(
                &format!("{section}.natural_frequency"),
                plant.natural_frequency.to_string(),
            );
        }
        line("sample_period", self.sample_period.to_string());
        line("horizon", self.horizon.to_string());
        line(
            "deleted_rows",
            match self.deleted_rows {
                DeletedRows::Auto => "auto".to_string(),
                DeletedRows::Fixed(d) => d.to_string(),
            },
        );
        line(
            "trajectory.amplitude_coefficient",
            self.trajectory.amplitude_coefficient.to_string(),
        );
        line(
            "trajectory.angular_frequency_coefficient",
            self.trajectory.angular_frequency_coefficient.to_string(),
        );
        line("trajectory.exponent", self.trajectory.exponent.to_string());
        line("law.kind", self.law_kind.as_str().to_string());
        line("law.gain", self.gain.to_string());
        line("initial_input", self.initial_input.to_string());
        if let Some(x0) = &self.initial_state {
            line("initial_state", join(x0));
        }
        line("mode", self.mode.as_str().to_string());
        line("iterations.model_count", self.model_count.to_string());
        line("iterations.world_count", self.world_count.to_string());
        if !self.switch_candidates.is_empty() {
            line("switch.candidates", join(&self.switch_candidates));
        }
        line("switch.slope_factor", self.slope_factor.to_string());
        line("output.csv", self.output_csv.display().to_string());
        if let Some(plot) = &self.output_plot {
            line("output.plot", plot.display().to_string());
        }
        out
    }

    pub fn model_discrete(&self) -> Result<DiscreteStateSpace> {
        discretize_zoh(&self.model.continuous()?, self.sample_period)
    }

    pub fn world_discrete(&self) -> Result<DiscreteStateSpace> {
        discretize_zoh(&self.world.continuous()?, self.sample_period)
    }

    /// Row deletion in effect, resolving `auto` from the model's sampled zeros.
    pub fn resolved_deleted_rows(&self) -> Result<usize> {
        match self.deleted_rows {
            DeletedRows::Fixed(d) => Ok(d),
            DeletedRows::Auto => {
                let d = unstable_zero_count(&self.model_discrete()?)?;
                if d >= self.horizon {
                    return Err(IlcError::config(
                        "deleted_rows",
                        format!("auto deletion of {d} rows leaves nothing of horizon {}", self.horizon),
                    ));
                }
                Ok(d)
            }
        }
    }

    /// Warnings about the configured plants that do not prevent a run.
    pub fn warnings(&self) -> Result<Vec<String>> {
        let d = self.resolved_deleted_rows()?;
        let mut warnings = Vec::new();
        for (name, dss) in [("model", self.model_discrete()?), ("world", self.world_discrete()?)] {
            let outside = unstable_zero_count(&dss)?;
            if outside > d {
                warnings.push(format!(
                    "non-minimum-phase {name} plant: {outside} sampled zero(s) outside the unit circle \
                     but only {d} error row(s) deleted; the inverse input will grow geometrically"
                ));
            }
        }
        Ok(warnings)
    }

    /// Initial state vector, zero when not configured.
    pub fn initial_state_vector(&self) -> DVector<f64> {
        match &self.initial_state {
            Some(x0) => DVector::from_column_slice(x0),
            None => DVector::zeros(match self.system_kind {
                SystemKind::SecondOrder => 2,
                SystemKind::ThirdOrder => 3,
            }),
        }
    }

    pub fn build_problem(&self) -> Result<LearningProblem> {
        let d = self.resolved_deleted_rows()?;
        let model = LiftedSystem::build(&self.model_discrete()?, self.horizon)?.delete_rows(d)?;
        let world = LiftedSystem::build(&self.world_discrete()?, self.horizon)?.delete_rows(d)?;
        LearningProblem::new(
            world,
            model,
            LearningLaw::new(self.law_kind, self.gain)?,
            build_desired_trajectory(self)?,
            self.initial_state_vector(),
        )
    }

    /// First input history `u_0` over steps `0..N`.
    ///
    /// `desired_output` places `y*(kT)`, `k = 1..N`, in input slot `k - 1`.
    /// Relative file paths are resolved against the working directory.
    pub fn initial_input_trajectory(&self) -> Result<Trajectory> {
        let n = self.horizon;
        let values = match &self.initial_input {
            InitialInput::Zero => DVector::zeros(n),
            InitialInput::DesiredOutput => DVector::from_iterator(
                n,
                (1..=n).map(|k| self.trajectory.value(k as f64 * self.sample_period)),
            ),
            InitialInput::File(path) => read_input_file(path, n)?,
        };
        Ok(Trajectory::input(values, self.sample_period))
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn unstable_zero_count(dss: &DiscreteStateSpace) -> Result<usize> {
    Ok(sampled_zeros(dss)?.iter().filter(|z| z.norm() > 1.0).count())
}

fn read_input_file(path: &Path, expected: usize) -> Result<DVector<f64>> {
    let key = "initial_input";
    let text = std::fs::read_to_string(path)
        .map_err(|e| IlcError::config(key, format!("cannot read {}: {e}", path.display())))?;
    let values = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IlcError::config(key, format!("bad value `{t}` in {}", path.display())))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != expected {
        return Err(IlcError::config(
            key,
            format!("{} holds {} values, horizon needs {expected}", path.display(), values.len()),
        ));
    }
    Ok(DVector::from_vec(values))
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| IlcError::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

pub fn write_config(config: &ExperimentConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, config.to_config_string())
        .map_err(|e| IlcError::Io(format!("{}: {e}", path.display())))
}

/// `y*(kT)` for the tracked steps `k = 1 + d ..= N`.
pub fn build_desired_trajectory(config: &ExperimentConfig) -> Result<Trajectory> {
    let d = config.resolved_deleted_rows()?;
    let start = 1 + d;
    let values = DVector::from_iterator(
        config.horizon - d,
        (start..=config.horizon).map(|k| config.trajectory.value(k as f64 * config.sample_period)),
    );
    Ok(Trajectory::new(values, start, config.sample_period))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn second_order_preset() {
        let c = ExperimentConfig::preset("second_order_fig3").unwrap();
        assert_eq!(c.system_kind, SystemKind::SecondOrder);
        assert_eq!(c.model.damping_ratio, 0.5);
        assert_eq!(c.model.natural_frequency, 37.0);
        assert_eq!(c.world.damping_ratio, 0.3);
        assert_eq!(c.world.natural_frequency, 37.0);
        assert_eq!(c.sample_period, 0.01);
        assert_eq!(c.horizon, 100);
        assert_eq!(c.trajectory.exponent, 2.0);
        assert_eq!(c.trajectory.amplitude_coefficient, 1.0);
        assert_eq!(c.trajectory.angular_frequency_coefficient, 20.0);
        assert_eq!(c.gain, 1.0);
        assert_eq!(c.resolved_deleted_rows().unwrap(), 0);
        assert!(c.warnings().unwrap().is_empty());
    }

    #[test]
    fn third_order_preset() {
        let c = ExperimentConfig::preset("third_order_fig5.cfg").unwrap();
        assert_eq!(c.model.real_pole, Some(8.8));
        assert_eq!(c.world.real_pole, Some(8.8));
        assert_eq!(c.world.natural_frequency, 44.4);
        assert_eq!(c.deleted_rows, DeletedRows::Fixed(1));
        let y = build_desired_trajectory(&c).unwrap();
        assert_eq!(y.start_step(), 2);
        assert_eq!(y.len(), 99);
        assert_eq!(y.final_step(), Some(100));
    }

    #[test]
    fn desired_trajectory_samples() {
        let c = ExperimentConfig::preset("second_order_fig3").unwrap();
        let y = build_desired_trajectory(&c).unwrap();
        assert_eq!(y.start_step(), 1);
        // k = 50: cos(10 pi) = 1
        assert!(y.values()[49].abs() < 1e-12);
        // k = 25: cos(5 pi) = -1
        assert_relative_eq!(y.values()[24], 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn auto_deletion_for_third_order() {
        let mut c = ExperimentConfig::preset("third_order_fig5").unwrap();
        c.deleted_rows = DeletedRows::Auto;
        assert_eq!(c.resolved_deleted_rows().unwrap(), 1);
        c.deleted_rows = DeletedRows::Fixed(0);
        let warnings = c.warnings().unwrap();
        assert_eq!(warnings.len(), 2);
        assert!(warnings[0].contains("non-minimum-phase"));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = PRESETS[0].1;
        let err = ExperimentConfig::parse(&base.replace(
            "model.natural_frequency = 37",
            "model.natural_frequency = 0",
        ))
        .unwrap_err();
        assert!(matches!(&err, IlcError::Config { key, .. } if key == "model.natural_frequency"));

        let err = ExperimentConfig::parse(&format!("{base}\nlaw.gian = 1\n")).unwrap_err();
        assert!(matches!(&err, IlcError::Config { key, message } if key == "law.gian" && message == "unknown key"));

        let err = ExperimentConfig::parse(&base.replace("horizon = 100", "")).unwrap_err();
        assert!(matches!(&err, IlcError::Config { key, .. } if key == "horizon"));

        let err = ExperimentConfig::parse(&base.replace("horizon = 100", "horizon = many")).unwrap_err();
        assert!(err.to_string().contains("horizon"));

        let err = ExperimentConfig::parse(&format!("{base}\nmodel.real_pole = 3\n")).unwrap_err();
        assert!(matches!(&err, IlcError::Config { key, .. } if key == "model.real_pole"));

        assert!(ExperimentConfig::parse(&format!("{base}\nhorizon = 10\n")).is_err());
        assert!(ExperimentConfig::parse("system.kind second_order").is_err());
        assert!(ExperimentConfig::preset("fig9").is_err());
    }

    #[test]
    fn defaults_applied() {
        let text = "system.kind = second_order\nmodel.damping_ratio = 0.5\nmodel.natural_frequency = 37\n\
                    world.damping_ratio = 0.3\nworld.natural_frequency = 37\nsample_period = 0.01\n\
                    horizon = 20\ntrajectory.angular_frequency_coefficient = 20\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.deleted_rows, DeletedRows::Auto);
        assert_eq!(c.initial_input, InitialInput::DesiredOutput);
        assert_eq!(c.initial_state, None);
        assert_eq!(c.initial_state_vector(), DVector::zeros(2));
        assert_eq!(c.slope_factor, 1.0);
        assert_eq!(c.mode, Mode::Hybrid);
        assert_eq!(c.law_kind, LawKind::PTranspose);
    }

    #[test]
    fn round_trip_of_presets() {
        for (_, text) in PRESETS {
            let c = ExperimentConfig::parse(text).unwrap();
            assert_eq!(ExperimentConfig::parse(&c.to_config_string()).unwrap(), c);
        }
    }
}
