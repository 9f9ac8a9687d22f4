use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tailmut::cfg::{all_distances, build_cfg};
use tailmut::harness::{
    analyze_defect, budget_grid, defect_dirs, effectiveness_curve, train_model, Corpus,
    CurveSubject, Defect, ScopeLevel, Settings, Subject,
};
use tailmut::lm::{self, WindowBound};
use tailmut::minilang::{execute, TypedProgram, Value, DEFAULT_STEP_LIMIT};
use tailmut::mutators::{apply_mutant, MutantId, OperatorSet};
use tailmut::selection::{self, LocationRanker, NaturalnessRanker, OracleRanker, Policy};

fn err(e: tailmut::Error) -> PyErr {
    match e {
        tailmut::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = tailmut::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn corpus_of(sources: Vec<String>) -> PyResult<Corpus> {
    Corpus::from_sources(sources.iter().map(String::as_str)).map_err(err)
}

fn to_value(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    // bool first: Python bools are ints too
    if let Ok(b) = obj.cast::<pyo3::types::PyBool>() {
        return Ok(Value::Bool(b.is_true()));
    }
    if let Ok(i) = obj.extract::<i64>() {
        return Ok(Value::Int(i));
    }
    if let Ok(f) = obj.extract::<f64>() {
        return Ok(Value::Float(f));
    }
    if let Ok(s) = obj.extract::<String>() {
        return Ok(Value::String(s));
    }
    Err(PyValueError::new_err("arguments must be int, float, bool or str"))
}

fn from_value(py: Python<'_>, v: Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Int(i) => i.into_pyobject(py)?.into_any().unbind(),
        Value::Float(f) => f.into_pyobject(py)?.into_any().unbind(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Void => py.None(),
    })
}

/// A type-checked MiniLang program.
#[pyclass(frozen, module = "tailmut")]
pub struct Program {
    inner: TypedProgram,
}

#[pymethods]
impl Program {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        Ok(Program {
            inner: TypedProgram::compile(source).map_err(err)?,
        })
    }

    #[getter]
    fn source(&self) -> &str {
        &self.inner.source
    }

    #[getter]
    fn functions(&self) -> Vec<String> {
        self.inner.functions.iter().map(|f| f.name.clone()).collect()
    }

    #[getter]
    fn tokens(&self) -> Vec<String> {
        self.inner.tokens.lexemes()
    }

    /// Calls `function` with Python values; runtime errors raise RuntimeError.
    #[pyo3(signature = (function, *args, step_limit = DEFAULT_STEP_LIMIT))]
    fn call(
        &self,
        py: Python<'_>,
        function: &str,
        args: Vec<Bound<'_, PyAny>>,
        step_limit: u64,
    ) -> PyResult<Py<PyAny>> {
        let values = args.iter().map(to_value).collect::<PyResult<Vec<_>>>()?;
        match execute(&self.inner, function, values, step_limit) {
            Ok(v) => from_value(py, v),
            Err(e) => Err(pyo3::exceptions::PyRuntimeError::new_err(format!("{e:?}"))),
        }
    }

    /// Graphviz text of every control-flow graph, keyed by owner.
    fn cfg_dot(&self) -> BTreeMap<String, String> {
        build_cfg(&self.inner)
            .iter()
            .map(|g| (g.owner.clone(), g.to_dot(&self.inner)))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Program(functions={:?})", self.functions())
    }
}

/// One rewrite of a program.
#[pyclass(frozen, skip_from_py_object, module = "tailmut")]
#[derive(Clone)]
pub struct Mutant {
    inner: tailmut::mutators::Mutant,
}

#[pymethods]
impl Mutant {
    #[getter]
    fn id(&self) -> String {
        self.inner.id.to_string()
    }
    #[getter]
    fn operator(&self) -> &'static str {
        self.inner.operator.name()
    }
    #[getter]
    fn kind_class(&self) -> &'static str {
        self.inner.kind_class.as_str()
    }
    #[getter]
    fn line(&self) -> usize {
        self.inner.line
    }
    #[getter]
    fn col(&self) -> usize {
        self.inner.col
    }
    #[getter]
    fn original(&self) -> &str {
        &self.inner.original
    }
    #[getter]
    fn replacement(&self) -> &str {
        &self.inner.replacement
    }
    #[getter]
    fn token_index(&self) -> usize {
        self.inner.token_index
    }
    /// `(owner, node)` of the CFG node holding the mutant.
    #[getter]
    fn location(&self) -> (String, usize) {
        (self.inner.cfg_owner.clone(), self.inner.cfg_node)
    }

    /// Source text of the mutated program.
    fn apply(&self, program: &Program) -> PyResult<String> {
        apply_mutant(&program.inner.source, &self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Mutant({} {}:{} {:?} -> {:?})",
            self.inner.id, self.inner.line, self.inner.col, self.inner.original, self.inner.replacement
        )
    }
}

#[pyclass(frozen, module = "tailmut")]
pub struct MutantPool {
    inner: tailmut::mutators::MutantPool,
}

#[pymethods]
impl MutantPool {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __getitem__(&self, i: isize) -> PyResult<Mutant> {
        let n = self.inner.len() as isize;
        let j = if i < 0 { i + n } else { i };
        if j < 0 || j >= n {
            return Err(PyIndexError::new_err("mutant index out of range"));
        }
        Ok(Mutant {
            inner: self.inner.mutants()[j as usize].clone(),
        })
    }

    fn mutants(&self) -> Vec<Mutant> {
        self.inner.iter().map(|m| Mutant { inner: m.clone() }).collect()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.iter().map(|m| m.id.to_string()).collect()
    }

    fn get(&self, id: &str) -> PyResult<Option<Mutant>> {
        let id: MutantId = parse(id)?;
        Ok(self.inner.get(&id).map(|m| Mutant { inner: m.clone() }))
    }

    fn operator_counts(&self) -> BTreeMap<&'static str, usize> {
        self.inner
            .operator_counts()
            .into_iter()
            .map(|(op, n)| (op.name(), n))
            .collect()
    }

    fn to_json_lines(&self) -> PyResult<String> {
        self.inner.to_json_lines().map_err(err)
    }

    #[staticmethod]
    fn from_json_lines(text: &str) -> PyResult<Self> {
        Ok(MutantPool {
            inner: tailmut::mutators::MutantPool::from_json_lines(text).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("MutantPool({} mutants)", self.inner.len())
    }
}

/// Interpolated n-gram model over token lexemes.
#[pyclass(frozen, module = "tailmut")]
pub struct NgramModel {
    inner: lm::NgramModel,
}

#[pymethods]
impl NgramModel {
    /// Trains on MiniLang sources.
    #[staticmethod]
    #[pyo3(signature = (sources, order = lm::DEFAULT_ORDER))]
    fn train(sources: Vec<String>, order: usize) -> PyResult<Self> {
        let corpus = corpus_of(sources)?;
        let streams: Vec<_> = corpus.streams.iter().collect();
        Ok(NgramModel {
            inner: lm::NgramModel::train(&streams, order).map_err(err)?,
        })
    }

    /// Trains on pre-split token sequences.
    #[staticmethod]
    #[pyo3(signature = (sequences, order = lm::DEFAULT_ORDER))]
    fn train_lexemes(sequences: Vec<Vec<String>>, order: usize) -> PyResult<Self> {
        Ok(NgramModel {
            inner: lm::NgramModel::train_lexemes(&sequences, order).map_err(err)?,
        })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    fn prob(&self, token: &str, context: Vec<String>) -> f64 {
        let ctx: Vec<&str> = context.iter().map(String::as_str).collect();
        self.inner.prob(token, &ctx)
    }

    fn sequence_log_prob(&self, tokens: Vec<String>) -> f64 {
        let toks: Vec<&str> = tokens.iter().map(String::as_str).collect();
        self.inner.sequence_log_prob(&toks)
    }

    /// Naturalness of replacing token `index` of `tokens` with `replacement`; zero for the
    /// original token, negative when the replacement is less likely.
    #[pyo3(signature = (tokens, index, replacement, window = "inclusive"))]
    fn score(&self, tokens: Vec<String>, index: usize, replacement: &str, window: &str) -> PyResult<f64> {
        if index >= tokens.len() {
            return Err(PyIndexError::new_err("token index out of range"));
        }
        let window: WindowBound = parse(window)?;
        let toks: Vec<&str> = tokens.iter().map(String::as_str).collect();
        Ok(lm::score_mutant_with(&self.inner, &toks, index, replacement, window))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(NgramModel {
            inner: lm::NgramModel::from_json(text).map_err(err)?,
        })
    }
}

#[pyfunction]
fn compile(source: &str) -> PyResult<Program> {
    Program::new(source)
}

/// Mutant pool of `program`; `corpus` holds extra sources for NLR candidates.
#[pyfunction]
#[pyo3(signature = (program, operators = "all", corpus = Vec::new()))]
fn mutate(program: &Program, operators: &str, corpus: Vec<String>) -> PyResult<MutantPool> {
    let set: OperatorSet = parse(operators)?;
    let corpus = corpus_of(corpus)?;
    Ok(MutantPool {
        inner: Subject::build(&program.inner, &corpus, set).pool,
    })
}

/// Mutant ids chosen by `policy` for a budget of `budget` mutants.
#[pyfunction]
#[pyo3(signature = (program, pool, policy = "min-dist-nat", budget = 1, seed = 0, coupled = None, corpus = Vec::new(), lm_order = lm::DEFAULT_ORDER))]
#[allow(clippy::too_many_arguments)]
fn select(
    program: &Program,
    pool: &MutantPool,
    policy: &str,
    budget: usize,
    seed: u64,
    coupled: Option<Vec<String>>,
    corpus: Vec<String>,
    lm_order: usize,
) -> PyResult<Vec<String>> {
    let policy: Policy = parse(policy)?;
    let cfgs = build_cfg(&program.inner);
    let dt = all_distances(&cfgs);
    let coupled: BTreeSet<MutantId> = match (policy, coupled) {
        (Policy::MinDistOracle, None) => {
            return Err(PyValueError::new_err("min-dist-oracle needs the coupled mutant ids"))
        }
        (_, ids) => ids
            .unwrap_or_default()
            .iter()
            .map(|s| parse(s))
            .collect::<PyResult<_>>()?,
    };
    let settings = Settings {
        lm_order,
        ..Settings::default()
    };
    let model = match policy {
        Policy::MinDistNaturalness => Some(train_model(&program.inner, &corpus_of(corpus)?, &settings).map_err(err)?),
        _ => None,
    };
    let natural = model.as_ref().map(|m| {
        NaturalnessRanker::new(m, program.inner.tokens.tokens.iter().map(|t| t.lexeme.as_str()).collect())
    });
    let oracle = OracleRanker { coupled: &coupled };
    let ranker: Option<&dyn LocationRanker> = match policy {
        Policy::MinDistNaturalness => natural.as_ref().map(|n| n as &dyn LocationRanker),
        Policy::MinDistOracle => Some(&oracle),
        _ => None,
    };
    let plan = selection::select(policy, &pool.inner, &cfgs, &dt, budget, ranker, seed, 0).map_err(err)?;
    Ok(plan.mutant_ids.iter().map(|id| id.to_string()).collect())
}

fn load_defects(paths: Vec<PathBuf>) -> PyResult<Vec<Defect>> {
    let mut dirs = Vec::new();
    for p in paths {
        if p.join("program.mini").is_file() {
            dirs.push(p);
        } else {
            dirs.extend(defect_dirs(&p).map_err(err)?);
        }
    }
    dirs.iter().map(|d| Defect::load(d).map_err(err)).collect()
}

/// Mutation analysis of one defect bundle: pool sizes and coupled ids per scope.
#[pyfunction]
#[pyo3(signature = (bundle, operators = "all", corpus = Vec::new(), step_limit = DEFAULT_STEP_LIMIT))]
fn analyze<'py>(
    py: Python<'py>,
    bundle: PathBuf,
    operators: &str,
    corpus: Vec<String>,
    step_limit: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let defect = Defect::load(&bundle).map_err(err)?;
    let settings = Settings {
        operators: parse(operators)?,
        step_limit,
        ..Settings::default()
    };
    let corpus = corpus_of(corpus)?;
    let a = py
        .detach(|| analyze_defect(defect, &corpus, &settings))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("defect", &a.defect.name)?;
    let mutants = PyDict::new(py);
    let coupled = PyDict::new(py);
    for l in ScopeLevel::ALL {
        mutants.set_item(l.as_str(), a.pool(l).len())?;
        let ids: Vec<String> = a.coupled_in(l).iter().map(|id| id.to_string()).collect();
        coupled.set_item(l.as_str(), ids)?;
    }
    out.set_item("mutants", mutants)?;
    out.set_item("coupled", coupled)?;
    let excluded: Vec<String> = a.matrix.excluded.iter().map(|(id, _)| id.to_string()).collect();
    out.set_item("excluded", excluded)?;
    Ok(out)
}

/// Effectiveness curve of `policy` over defect bundles: a list of
/// `(budget, mean, stddev, analytic_random)` tuples.
#[pyfunction]
#[pyo3(signature = (bundles, policy = "random", steps = 100, trials = 1000, seed = 0, scope = "class", operators = "all"))]
#[allow(clippy::too_many_arguments)]
fn curve(
    py: Python<'_>,
    bundles: Vec<PathBuf>,
    policy: &str,
    steps: usize,
    trials: usize,
    seed: u64,
    scope: &str,
    operators: &str,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let policy: Policy = parse(policy)?;
    let scope: ScopeLevel = parse(scope)?;
    let settings = Settings {
        operators: parse(operators)?,
        ..Settings::default()
    };
    if steps == 0 {
        return Err(PyValueError::new_err("steps must be at least 1"));
    }
    let defects = load_defects(bundles)?;
    py.detach(|| {
        let analyzed = defects
            .into_iter()
            .map(|d| analyze_defect(d, &Corpus::default(), &settings))
            .collect::<tailmut::Result<Vec<_>>>()?;
        let subjects = analyzed
            .iter()
            .map(|a| CurveSubject::new(a, scope, settings.lm_window))
            .collect::<tailmut::Result<Vec<_>>>()?;
        let c = effectiveness_curve(&subjects, policy, &budget_grid(steps), trials, seed)?;
        Ok(c.points
            .iter()
            .map(|p| (p.budget, p.mean, p.stddev, p.analytic_random))
            .collect())
    })
    .map_err(err)
}

#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[pymodule]
#[pyo3(name = "tailmut")]
fn tailmut_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Program>()?;
    m.add_class::<Mutant>()?;
    m.add_class::<MutantPool>()?;
    m.add_class::<NgramModel>()?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(mutate, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(curve, m)?)?;
    m.add_function(wrap_pyfunction!(version, m)?)?;
    Ok(())
}
