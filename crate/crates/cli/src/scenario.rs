//! Scenario files: TOML with exact rational literals.
//!
//! ```toml
//! name = "gbit-three-vertices"
//! task = "broadcast"          # distinguish | clone | broadcast | analyze | sweep
//! composite = "max"           # min | max | custom
//!
//! [space]
//! builtin = "square"          # or: unit = [...] with vertices = [[...]] or inequalities = [...]
//!
//! [states]
//! vertices = [0, 1, 2]        # indices into the space's sorted vertex list
//! vectors = [["1/2", "0", "1"]]
//! ```
//!
//! Rationals are strings of the form `"n"` or `"n/d"`, or TOML integers.
//! Floating-point literals are rejected.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use gptcast::composite::{custom_tensor, tensor, CompositeSpace, TensorVariant};
use gptcast::polytope::{HRep, Halfspace, Hyperplane};
use gptcast::scalar::{parse_scalar, Scalar, Vector};
use gptcast::space::{builtin, StateSpace};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn field_error(field: impl Into<String>, message: impl fmt::Display) -> ScenarioError {
    ScenarioError::Field { field: field.into(), message: message.to_string() }
}

/// A rational literal as written in TOML.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Int(i64),
    Text(String),
    Float(f64),
}

fn rational(lit: &Literal, field: &str) -> Result<Scalar, ScenarioError> {
    match lit {
        Literal::Int(n) => Ok(Scalar::from_integer((*n).into())),
        Literal::Text(s) => parse_scalar(s).map_err(|e| field_error(field, format!("malformed rational \"{s}\": {e}"))),
        Literal::Float(x) => Err(field_error(field, format!("floating-point literal {x} is not exact; write it as \"n/d\""))),
    }
}

fn rational_vector(lits: &[Literal], field: &str) -> Result<Vector, ScenarioError> {
    lits.iter().enumerate().map(|(i, l)| rational(l, &format!("{field}[{i}]"))).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    description: Option<String>,
    task: String,
    composite: Option<String>,
    space: Option<RawSpace>,
    states: Option<RawStates>,
    custom_composite: Option<RawHRep>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    builtin: Option<String>,
    param: Option<usize>,
    name: Option<String>,
    unit: Option<Vec<Literal>>,
    vertices: Option<Vec<Vec<Literal>>>,
    inequalities: Option<Vec<RawRow>>,
    #[serde(default)]
    equalities: Vec<RawRow>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    normal: Vec<Literal>,
    offset: Literal,
}

/// An inequality system `normal . x <= offset` plus equalities.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHRep {
    #[serde(default)]
    inequalities: Vec<RawRow>,
    #[serde(default)]
    equalities: Vec<RawRow>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStates {
    #[serde(default)]
    all_vertices: bool,
    #[serde(default)]
    vertices: Vec<usize>,
    #[serde(default)]
    vectors: Vec<Vec<Literal>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    spaces: Option<Vec<String>>,
    sizes: Option<Vec<usize>>,
    trials: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioTask {
    Distinguish,
    Clone,
    Broadcast,
    Analyze,
    Sweep,
}

impl ScenarioTask {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "distinguish" => ScenarioTask::Distinguish,
            "clone" => ScenarioTask::Clone,
            "broadcast" => ScenarioTask::Broadcast,
            "analyze" => ScenarioTask::Analyze,
            "sweep" => ScenarioTask::Sweep,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioTask::Distinguish => "distinguish",
            ScenarioTask::Clone => "clone",
            ScenarioTask::Broadcast => "broadcast",
            ScenarioTask::Analyze => "analyze",
            ScenarioTask::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompositeChoice {
    Min,
    Max,
    Custom(HRep),
}

impl CompositeChoice {
    pub fn variant(&self) -> TensorVariant {
        match self {
            CompositeChoice::Min => TensorVariant::Min,
            CompositeChoice::Max => TensorVariant::Max,
            CompositeChoice::Custom(_) => TensorVariant::Custom,
        }
    }

    /// `min`, `max`, or `custom:<path>` naming a TOML file with
    /// `inequalities` and `equalities` tables.
    pub fn from_flag(flag: &str) -> Result<Self, ScenarioError> {
        match flag {
            "min" => Ok(CompositeChoice::Min),
            "max" => Ok(CompositeChoice::Max),
            other => match other.strip_prefix("custom:") {
                Some(path) => {
                    let text = read(Path::new(path))?;
                    let raw: RawHRep = toml::from_str(&text)?;
                    Ok(CompositeChoice::Custom(hrep(&raw, "custom composite")?))
                }
                None => Err(field_error("--composite", format!("expected min, max or custom:<path>, got \"{other}\""))),
            },
        }
    }

    pub fn build(&self, space: &Arc<StateSpace>) -> Result<CompositeSpace, ScenarioError> {
        match self {
            CompositeChoice::Min => Ok(tensor(space, space, TensorVariant::Min)),
            CompositeChoice::Max => Ok(tensor(space, space, TensorVariant::Max)),
            CompositeChoice::Custom(h) => custom_tensor(space, space, h).map_err(|e| field_error("custom_composite", e)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepConfig {
    /// Space names accepted by [`parse_space_name`].
    pub spaces: Vec<String>,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            spaces: vec!["square".into(), "classical:4".into(), "pentagon".into()],
            sizes: vec![1, 2, 3],
            trials: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    pub task: ScenarioTask,
    pub composite: CompositeChoice,
    /// Absent only for sweeps.
    pub space: Option<Arc<StateSpace>>,
    pub states: Vec<Vector>,
    pub sweep: Option<SweepConfig>,
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })
}

fn row(raw: &RawRow, field: &str) -> Result<(Vector, Scalar), ScenarioError> {
    Ok((rational_vector(&raw.normal, &format!("{field}.normal"))?, rational(&raw.offset, &format!("{field}.offset"))?))
}

fn hrep(raw: &RawHRep, field: &str) -> Result<HRep, ScenarioError> {
    let mut h = HRep::default();
    for (i, r) in raw.inequalities.iter().enumerate() {
        let (n, o) = row(r, &format!("{field}.inequalities[{i}]"))?;
        h.inequalities.push(Halfspace::new(n, o));
    }
    for (i, r) in raw.equalities.iter().enumerate() {
        let (n, o) = row(r, &format!("{field}.equalities[{i}]"))?;
        h.equalities.push(Hyperplane::new(n, o));
    }
    Ok(h)
}

/// `name` or `name:param`, e.g. `square`, `classical:4`, `polygon:7`.
pub fn parse_space_name(spec: &str) -> Result<StateSpace, ScenarioError> {
    let (name, param) = match spec.split_once(':') {
        Some((n, p)) => {
            let p = p.parse::<usize>().map_err(|_| field_error("space", format!("bad parameter in \"{spec}\"")))?;
            (n, Some(p))
        }
        None => (spec, None),
    };
    match builtin(name, param) {
        Some(r) => r.map_err(|e| field_error("space", e)),
        None => Err(field_error("space", format!("unknown builtin space \"{name}\""))),
    }
}

fn space(raw: &RawSpace) -> Result<StateSpace, ScenarioError> {
    if let Some(name) = &raw.builtin {
        if raw.unit.is_some() || raw.vertices.is_some() || raw.inequalities.is_some() {
            return Err(field_error("space", "builtin spaces take no unit, vertices or inequalities"));
        }
        let result = builtin(name, raw.param).ok_or_else(|| field_error("space.builtin", format!("unknown builtin space \"{name}\"")))?;
        return result.map_err(|e| field_error("space.builtin", e));
    }
    let unit = raw.unit.as_ref().ok_or_else(|| field_error("space", "either builtin or unit is required"))?;
    let unit = rational_vector(unit, "space.unit")?;
    let name = raw.name.clone().unwrap_or_else(|| "custom".into());
    match (&raw.vertices, &raw.inequalities) {
        (Some(vs), None) => {
            let vertices =
                vs.iter().enumerate().map(|(i, v)| rational_vector(v, &format!("space.vertices[{i}]"))).collect::<Result<Vec<_>, _>>()?;
            StateSpace::from_vertices(name, unit, vertices).map_err(|e| field_error("space.vertices", e))
        }
        (None, Some(ineqs)) => {
            let raw_h = RawHRep { inequalities: ineqs.clone(), equalities: raw.equalities.clone() };
            let h = hrep(&raw_h, "space")?;
            StateSpace::from_hrep(name, unit, &h).map_err(|e| field_error("space.inequalities", e))
        }
        _ => Err(field_error("space", "give exactly one of vertices or inequalities")),
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawScenario = toml::from_str(text)?;
        let task = ScenarioTask::parse(&raw.task)
            .ok_or_else(|| field_error("task", format!("unknown task \"{}\"", raw.task)))?;
        let composite = match raw.composite.as_deref().unwrap_or("max") {
            "min" => CompositeChoice::Min,
            "max" => CompositeChoice::Max,
            "custom" => {
                let h = raw.custom_composite.as_ref().ok_or_else(|| field_error("custom_composite", "required when composite = \"custom\""))?;
                CompositeChoice::Custom(hrep(h, "custom_composite")?)
            }
            other => return Err(field_error("composite", format!("expected min, max or custom, got \"{other}\""))),
        };
        if task == ScenarioTask::Sweep {
            let mut cfg = SweepConfig::default();
            if let Some(s) = &raw.sweep {
                cfg.spaces = s.spaces.clone().unwrap_or(cfg.spaces);
                cfg.sizes = s.sizes.clone().unwrap_or(cfg.sizes);
                cfg.trials = s.trials.unwrap_or(cfg.trials);
                cfg.seed = s.seed.unwrap_or(cfg.seed);
            }
            for (i, name) in cfg.spaces.iter().enumerate() {
                parse_space_name(name).map_err(|e| field_error(format!("sweep.spaces[{i}]"), e))?;
            }
            return Ok(Scenario {
                name: raw.name.unwrap_or_else(|| "sweep".into()),
                description: raw.description,
                task,
                composite,
                space: None,
                states: Vec::new(),
                sweep: Some(cfg),
            });
        }
        let raw_space = raw.space.as_ref().ok_or_else(|| field_error("space", "missing [space] table"))?;
        let space = Arc::new(space(raw_space)?);
        let raw_states = raw.states.clone().unwrap_or_default();
        let mut states = Vec::new();
        if raw_states.all_vertices {
            states.extend(space.vertices().iter().cloned());
        }
        for (i, &k) in raw_states.vertices.iter().enumerate() {
            let v = space.vertices().get(k).ok_or_else(|| {
                field_error(format!("states.vertices[{i}]"), format!("vertex index {k} out of range (space has {})", space.vertices().len()))
            })?;
            states.push(v.clone());
        }
        for (i, v) in raw_states.vectors.iter().enumerate() {
            states.push(rational_vector(v, &format!("states.vectors[{i}]"))?);
        }
        Ok(Scenario {
            name: raw.name.unwrap_or_else(|| "scenario".into()),
            description: raw.description,
            task,
            composite,
            space: Some(space),
            states,
            sweep: None,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_toml(&read(path)?)
    }
}
