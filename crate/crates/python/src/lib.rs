//! Python bindings for sokoshape.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use sokoshape::game::{self, encode, Action, EnvConfig, Encoding, Pos};
use sokoshape::level_io::{self, parse_xsb, serialize_xsb, GenerateSpec, LevelSet};
use sokoshape::planner::{self, plan_string, solve_astar, DistanceCache, HeuristicMode};
use sokoshape::shaping::{self, shaped_step, ShapingConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn heuristic(name: &str) -> PyResult<HeuristicMode> {
    name.parse().map_err(value_err)
}

fn encoding(name: &str) -> PyResult<Encoding> {
    match name {
        "symbolic" => Ok(Encoding::Symbolic),
        "pixel" => Ok(Encoding::Pixel),
        other => Err(PyValueError::new_err(format!("unknown observation encoding {other:?}"))),
    }
}

fn action(index: usize) -> PyResult<Action> {
    Action::from_index(index).ok_or_else(|| PyValueError::new_err(format!("action must be in 0..5, got {index}")))
}

fn pos(p: Pos) -> (usize, usize) {
    (p.row, p.col)
}

#[pyclass(name = "Level", module = "pysokoshape", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLevel {
    inner: game::Level,
}

#[pymethods]
impl PyLevel {
    /// Parses a single level in XSB notation.
    #[staticmethod]
    #[pyo3(signature = (text, id = None))]
    fn parse(text: &str, id: Option<String>) -> PyResult<Self> {
        let mut level = parse_xsb(text).map_err(value_err)?;
        if let Some(id) = id {
            level = level.with_id(id);
        }
        Ok(Self { inner: level })
    }

    #[staticmethod]
    #[pyo3(signature = (seed, n_boxes = 1, height = 7, width = 7, max_pulls = 20))]
    fn generate(seed: u64, n_boxes: usize, height: usize, width: usize, max_pulls: usize) -> PyResult<Self> {
        let inner = level_io::generate(seed, n_boxes, height, width, max_pulls).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn to_xsb(&self) -> String {
        serialize_xsb(&self.inner)
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id().to_string()
    }

    #[getter]
    fn n_boxes(&self) -> usize {
        self.inner.n_boxes()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.height(), self.inner.width())
    }

    #[getter]
    fn targets(&self) -> Vec<(usize, usize)> {
        self.inner.targets().iter().copied().map(pos).collect()
    }

    fn initial_state(&self) -> PyState {
        PyState { inner: self.inner.initial_state() }
    }

    fn __repr__(&self) -> String {
        format!("Level(id={:?}, shape={:?}, n_boxes={})", self.inner.id(), self.shape(), self.inner.n_boxes())
    }
}

#[pyclass(name = "State", module = "pysokoshape", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: game::State,
}

#[pymethods]
impl PyState {
    #[new]
    #[pyo3(signature = (player, boxes, steps_taken = 0))]
    fn new(player: (usize, usize), boxes: Vec<(usize, usize)>, steps_taken: u32) -> Self {
        let mut inner = game::State::new(Pos::new(player.0, player.1), boxes.into_iter().map(|(r, c)| Pos::new(r, c)).collect());
        inner.steps_taken = steps_taken;
        Self { inner }
    }

    #[getter]
    fn player(&self) -> (usize, usize) {
        pos(self.inner.player)
    }

    #[getter]
    fn boxes(&self) -> Vec<(usize, usize)> {
        self.inner.boxes.iter().copied().map(pos).collect()
    }

    #[getter]
    fn steps_taken(&self) -> u32 {
        self.inner.steps_taken
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("State(player={:?}, boxes={:?}, steps_taken={})", self.player(), self.boxes(), self.inner.steps_taken)
    }
}

/// Single-level environment with optional distance-based shaping.
#[pyclass(name = "Env", module = "pysokoshape")]
struct PyEnv {
    level: game::Level,
    state: game::State,
    env: EnvConfig,
    shaping: ShapingConfig,
    encoding: Encoding,
    cache: DistanceCache,
}

#[pymethods]
impl PyEnv {
    #[new]
    #[pyo3(signature = (level, shaping = true, heuristic = "all-pairs", step_cap = 120, observation = "symbolic"))]
    fn new(level: &PyLevel, shaping: bool, heuristic: &str, step_cap: u32, observation: &str) -> PyResult<Self> {
        let mode = self::heuristic(heuristic)?;
        let shaping = ShapingConfig { enabled: shaping, heuristic_mode: mode, ..ShapingConfig::default() };
        Ok(Self {
            state: level.inner.initial_state(),
            level: level.inner.clone(),
            env: EnvConfig { step_cap, ..EnvConfig::default() },
            shaping,
            encoding: encoding(observation)?,
            cache: DistanceCache::new(mode, Some(200_000)),
        })
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = self.level.initial_state();
        self.observation()
    }

    /// Flat observation in channel-major order; see `observation_shape`.
    fn observation(&self) -> Vec<f64> {
        encode(&self.level, &self.state, self.encoding).data
    }

    #[getter]
    fn observation_shape(&self) -> (usize, usize, usize) {
        self.encoding.shape(self.level.height(), self.level.width())
    }

    #[getter]
    fn state(&self) -> PyState {
        PyState { inner: self.state.clone() }
    }

    /// Returns `(observation, reward, done, info)`; `reward` includes the
    /// shaping bonus, `info` holds the raw reward and the bonus separately.
    fn step<'py>(&mut self, py: Python<'py>, action: usize) -> PyResult<(Vec<f64>, f64, bool, Bound<'py, pyo3::types::PyDict>)> {
        let a = self::action(action)?;
        let out = shaped_step(&self.level, &self.state, a, &self.env, &self.shaping, &self.cache).map_err(value_err)?;
        let info = pyo3::types::PyDict::new(py);
        info.set_item("raw_reward", out.inner.reward)?;
        info.set_item("bonus", out.potential_bonus)?;
        info.set_item("solved", out.inner.solved)?;
        info.set_item("truncated", out.inner.truncated)?;
        let done = out.inner.done();
        self.state = out.inner.next_state;
        Ok((self.observation(), out.shaped_reward, done, info))
    }
}

/// A* plan from the level's start (or `state`). Returns `(plan, nodes)` where
/// `plan` is a string over `UDLR`, or `None` when unsolvable.
#[pyfunction]
#[pyo3(signature = (level, state = None, heuristic = "min-matching", budget = None))]
fn solve(level: &PyLevel, state: Option<&PyState>, heuristic: &str, budget: Option<usize>) -> PyResult<(Option<String>, usize)> {
    let start = state.map(|s| s.inner.clone()).unwrap_or_else(|| level.inner.initial_state());
    let r = solve_astar(&level.inner, &start, self::heuristic(heuristic)?, budget);
    if let planner::PlanStatus::Budget = r.status {
        return Err(PyRuntimeError::new_err(format!("node budget exhausted after {} expansions", r.nodes_expanded)));
    }
    Ok((r.plan().map(plan_string), r.nodes_expanded))
}

/// Planner distance `d(s)`, or `None` for an unsolvable state.
#[pyfunction]
#[pyo3(signature = (level, state = None, heuristic = "all-pairs"))]
fn distance(level: &PyLevel, state: Option<&PyState>, heuristic: &str) -> PyResult<Option<u32>> {
    let start = state.map(|s| s.inner.clone()).unwrap_or_else(|| level.inner.initial_state());
    let cache = DistanceCache::new(self::heuristic(heuristic)?, None);
    Ok(planner::distance(&level.inner, &start, &cache).steps())
}

#[pyfunction]
fn shaping_bonus(s_solvable: bool, d_s: u32, s_prime_solvable: bool, d_s_prime: u32) -> f64 {
    shaping::shaping_bonus(s_solvable, d_s, s_prime_solvable, d_s_prime)
}

#[pyfunction]
#[pyo3(signature = (seed, count = 20, n_boxes = 1, height = 7, width = 7, max_pulls = 20))]
fn generate_levels(seed: u64, count: usize, n_boxes: usize, height: usize, width: usize, max_pulls: usize) -> PyResult<Vec<PyLevel>> {
    let spec = GenerateSpec { count, n_boxes, height, width, max_pulls };
    let set = LevelSet::generate(seed, spec).map_err(value_err)?;
    Ok(set.levels.into_iter().map(|inner| PyLevel { inner }).collect())
}

/// Loads a level manifest or a single `.xsb` file.
#[pyfunction]
fn load_levels(path: PathBuf) -> PyResult<Vec<PyLevel>> {
    let set = LevelSet::load(&path).map_err(value_err)?;
    Ok(set.levels.into_iter().map(|inner| PyLevel { inner }).collect())
}

/// Runs the command-line tool in-process. Returns `(exit_code, stdout)`.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> (i32, String) {
    py.detach(|| {
        let mut out = Vec::new();
        let argv = std::iter::once("sokoshape".to_string()).chain(args);
        let code = match sokoshape::cli::run(argv, &mut out) {
            Ok(()) => 0,
            Err(e) => {
                out.extend_from_slice(format!("error: {e}\n").as_bytes());
                e.exit_code()
            }
        };
        (code, String::from_utf8_lossy(&out).into_owned())
    })
}

#[pymodule]
pub fn pysokoshape(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("ACTIONS", ["noop", "up", "down", "left", "right"])?;
    m.add_class::<PyLevel>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyEnv>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(shaping_bonus, m)?)?;
    m.add_function(wrap_pyfunction!(generate_levels, m)?)?;
    m.add_function(wrap_pyfunction!(load_levels, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
