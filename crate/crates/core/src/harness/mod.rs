//! Mutation analysis against defect bundles, coupling, scopes and effectiveness curves.

mod curve;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfg::{all_distances, build_cfg, Cfg, DistanceTable};
use crate::error::{Error, Result};
use crate::lm::{NgramModel, WindowBound, DEFAULT_ORDER};
use crate::minilang::testcase::load_suite;
use crate::minilang::{run_test, tokenize, TestCase, TokenStream, TypedProgram, Verdict};
use crate::mutators::{compile_mutant, generate_pool, MutantId, MutantPool, OperatorSet, TrigramIndex};

pub use curve::{
    analytic_random_effectiveness, budget_grid, effectiveness_curve, first_hits, kappa_for,
    CurvePoint, CurveSubject, PolicyCurve,
};
pub use report::{
    config_hash, curve_csv, operator_report, operators_csv, CouplingReport, DefectCoupling,
    OperatorRow, Provenance, ScopeStats, TOOL_VERSION,
};

/// The footprint of a fix: touched functions and touched source lines.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeSpec {
    pub functions: Vec<String>,
    pub lines: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeLevel {
    Class,
    Method,
    Line,
}

impl ScopeLevel {
    pub const ALL: [ScopeLevel; 3] = [ScopeLevel::Class, ScopeLevel::Method, ScopeLevel::Line];

    pub fn as_str(self) -> &'static str {
        match self {
            ScopeLevel::Class => "class",
            ScopeLevel::Method => "method",
            ScopeLevel::Line => "line",
        }
    }
}

impl fmt::Display for ScopeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScopeLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScopeLevel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scope `{s}`")))
    }
}

/// A fixed program, the tests of its fix and the fix's footprint.
#[derive(Debug, Clone)]
pub struct Defect {
    pub name: String,
    pub program: TypedProgram,
    pub tests: Vec<TestCase>,
    pub scope: ScopeSpec,
}

impl Defect {
    /// Checks the tests against the program signatures, that some test is triggering and that
    /// the scope names existing functions and lines inside them.
    pub fn new(name: &str, source: &str, tests: Vec<TestCase>, scope: ScopeSpec) -> Result<Self> {
        let program = TypedProgram::compile(source)?;
        for t in &tests {
            t.validate(&program)?;
        }
        if !tests.iter().any(|t| t.triggering) {
            return Err(Error::Scope(format!("defect `{name}` has no triggering test")));
        }
        let defect = Defect {
            name: name.to_string(),
            program,
            tests,
            scope,
        };
        defect.check_scope()?;
        Ok(defect)
    }

    fn check_scope(&self) -> Result<()> {
        let mut line_ranges = Vec::new();
        for f in &self.scope.functions {
            let (_, info) = self
                .program
                .function(f)
                .ok_or_else(|| Error::Scope(format!("unknown function `{f}` in scope")))?;
            let tokens = &self.program.tokens.tokens;
            line_ranges.push((tokens[info.span.first].line, tokens[info.span.last].line));
        }
        for &l in &self.scope.lines {
            if !line_ranges.iter().any(|&(a, b)| a <= l && l <= b) {
                return Err(Error::Scope(format!(
                    "line {l} lies outside the touched functions"
                )));
            }
        }
        Ok(())
    }

    /// Reads `program.mini`, `tests.json` and `scope.json` from a bundle directory; the bundle's
    /// name is the directory name.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        let program_path = dir.join("program.mini");
        let source = std::fs::read_to_string(&program_path).map_err(|e| Error::io(&program_path, e))?;
        let tests = load_suite(dir.join("tests.json"))?;
        let scope_path = dir.join("scope.json");
        let scope_text = std::fs::read_to_string(&scope_path).map_err(|e| Error::io(&scope_path, e))?;
        let scope: ScopeSpec = serde_json::from_str(&scope_text)?;
        Defect::new(&name, &source, tests, scope)
    }

    /// Every test must pass on the unmutated program.
    pub fn check_baseline(&self, step_limit: u64) -> Result<()> {
        for t in &self.tests {
            let v = run_test(&self.program, t, step_limit);
            if v != Verdict::Pass {
                return Err(Error::BaselineFailure {
                    test: t.name.clone(),
                    outcome: v.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Bundle directories below `root`, sorted by name.
pub fn defect_dirs(root: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let root = root.as_ref();
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("program.mini").is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Extra `.mini` sources for the trigram index and the language model.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub streams: Vec<TokenStream>,
}

impl Corpus {
    pub fn from_sources<'a>(sources: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let streams = sources.into_iter().map(tokenize).collect::<Result<_>>()?;
        Ok(Corpus { streams })
    }

    /// Loads files, or every `.mini` file (sorted) of a directory.
    pub fn load(paths: &[PathBuf]) -> Result<Self> {
        let mut files = Vec::new();
        for p in paths {
            if p.is_dir() {
                let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                    .map_err(|e| Error::io(p, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|f| f.extension().is_some_and(|x| x == "mini"))
                    .collect();
                inner.sort();
                files.extend(inner);
            } else {
                files.push(p.clone());
            }
        }
        let mut corpus = Corpus::default();
        for f in files {
            let text = std::fs::read_to_string(&f).map_err(|e| Error::io(&f, e))?;
            corpus.streams.push(tokenize(&text)?);
        }
        Ok(corpus)
    }
}

/// Knobs shared by analysis, selection and curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub operators: OperatorSet,
    pub lm_order: usize,
    pub lm_weights: Option<Vec<f64>>,
    pub lm_exclude_self: bool,
    pub lm_window: WindowBound,
    pub step_limit: u64,
    pub jobs: Option<usize>,
    pub seed: u64,
    pub trials: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            operators: OperatorSet::All,
            lm_order: DEFAULT_ORDER,
            lm_weights: None,
            lm_exclude_self: false,
            lm_window: WindowBound::Inclusive,
            step_limit: crate::minilang::DEFAULT_STEP_LIMIT,
            jobs: None,
            seed: 0,
            trials: 1000,
        }
    }
}

/// Runs `f` on a pool of at most `jobs` workers, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Graphs, distances and the mutant pool of a program.
#[derive(Debug, Clone)]
pub struct Subject {
    pub cfgs: Vec<Cfg>,
    pub distances: DistanceTable,
    pub pool: MutantPool,
}

impl Subject {
    pub fn build(program: &TypedProgram, corpus: &Corpus, operators: OperatorSet) -> Subject {
        let cfgs = build_cfg(program);
        let distances = all_distances(&cfgs);
        let index = TrigramIndex::for_program(program, &corpus.streams);
        let pool = generate_pool(program, &cfgs, &index, operators);
        Subject {
            cfgs,
            distances,
            pool,
        }
    }
}

/// Trains the ranking model on the program (unless excluded) and the corpus.
pub fn train_model(program: &TypedProgram, corpus: &Corpus, settings: &Settings) -> Result<NgramModel> {
    let mut streams: Vec<&TokenStream> = Vec::new();
    if !settings.lm_exclude_self {
        streams.push(&program.tokens);
    }
    streams.extend(&corpus.streams);
    let model = NgramModel::train(&streams, settings.lm_order)?;
    match &settings.lm_weights {
        Some(w) => model.with_weights(w.clone()),
        None => Ok(model),
    }
}

/// Verdicts of every (mutant, test) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillMatrix {
    pub tests: Vec<String>,
    pub triggering: Vec<bool>,
    pub mutants: Vec<MutantId>,
    /// `verdicts[m][t]`.
    pub verdicts: Vec<Vec<Verdict>>,
    /// Mutants left out because the mutated program did not compile, with the diagnostic.
    pub excluded: Vec<(MutantId, String)>,
}

impl KillMatrix {
    fn killed_by(&self, row: usize, triggering: bool) -> bool {
        self.verdicts[row]
            .iter()
            .zip(&self.triggering)
            .any(|(v, &t)| t == triggering && *v != Verdict::Pass)
    }

    pub fn killed_by_triggering(&self, row: usize) -> bool {
        self.killed_by(row, true)
    }

    pub fn killed_by_non_triggering(&self, row: usize) -> bool {
        self.killed_by(row, false)
    }

    pub fn row(&self, id: &MutantId) -> Option<usize> {
        self.mutants.iter().position(|m| m == id)
    }

    /// Mutants killed by at least one non-triggering test.
    pub fn killed_by_non_triggering_set(&self) -> BTreeSet<MutantId> {
        (0..self.mutants.len())
            .filter(|&r| self.killed_by_non_triggering(r))
            .map(|r| self.mutants[r].clone())
            .collect()
    }

    pub fn restrict(&self, keep: &BTreeSet<MutantId>) -> KillMatrix {
        let rows: Vec<usize> = (0..self.mutants.len())
            .filter(|&r| keep.contains(&self.mutants[r]))
            .collect();
        KillMatrix {
            tests: self.tests.clone(),
            triggering: self.triggering.clone(),
            mutants: rows.iter().map(|&r| self.mutants[r].clone()).collect(),
            verdicts: rows.iter().map(|&r| self.verdicts[r].clone()).collect(),
            excluded: self
                .excluded
                .iter()
                .filter(|(id, _)| keep.contains(id))
                .cloned()
                .collect(),
        }
    }
}

/// Runs every test against every mutant after checking the unmutated baseline.
pub fn mutation_analysis(defect: &Defect, pool: &MutantPool, step_limit: u64) -> Result<KillMatrix> {
    defect.check_baseline(step_limit)?;
    let rows: Vec<(MutantId, std::result::Result<Vec<Verdict>, String>)> = pool
        .mutants()
        .par_iter()
        .map(|m| {
            let row = compile_mutant(&defect.program, m)
                .map(|p| {
                    defect
                        .tests
                        .iter()
                        .map(|t| run_test(&p, t, step_limit))
                        .collect()
                })
                .map_err(|e| e.to_string());
            (m.id.clone(), row)
        })
        .collect();
    let mut matrix = KillMatrix {
        tests: defect.tests.iter().map(|t| t.name.clone()).collect(),
        triggering: defect.tests.iter().map(|t| t.triggering).collect(),
        mutants: Vec::new(),
        verdicts: Vec::new(),
        excluded: Vec::new(),
    };
    for (id, row) in rows {
        match row {
            Ok(v) => {
                matrix.mutants.push(id);
                matrix.verdicts.push(v);
            }
            Err(e) => matrix.excluded.push((id, e)),
        }
    }
    Ok(matrix)
}

/// Killed by some triggering test and by no non-triggering test.
pub fn coupled_mutants(matrix: &KillMatrix) -> BTreeSet<MutantId> {
    (0..matrix.mutants.len())
        .filter(|&r| matrix.killed_by_triggering(r) && !matrix.killed_by_non_triggering(r))
        .map(|r| matrix.mutants[r].clone())
        .collect()
}

/// Mutants of `pool` inside the defect's footprint at `level`.
pub fn scope_filter(pool: &MutantPool, defect: &Defect, level: ScopeLevel) -> Result<MutantPool> {
    defect.check_scope()?;
    Ok(match level {
        ScopeLevel::Class => pool.clone(),
        ScopeLevel::Method => pool.filter(|m| defect.scope.functions.contains(&m.cfg_owner)),
        ScopeLevel::Line => pool.filter(|m| {
            defect.scope.functions.contains(&m.cfg_owner) && defect.scope.lines.contains(&m.line)
        }),
    })
}

/// Everything known about one defect after analysis.
#[derive(Debug, Clone)]
pub struct AnalyzedDefect {
    pub defect: Defect,
    pub subject: Subject,
    pub matrix: KillMatrix,
    pub coupled: BTreeSet<MutantId>,
    pub model: NgramModel,
    pub scoped: BTreeMap<ScopeLevel, MutantPool>,
}

impl AnalyzedDefect {
    pub fn coupled_in(&self, level: ScopeLevel) -> BTreeSet<MutantId> {
        self.scoped[&level]
            .iter()
            .filter(|m| self.coupled.contains(&m.id))
            .map(|m| m.id.clone())
            .collect()
    }

    pub fn pool(&self, level: ScopeLevel) -> &MutantPool {
        &self.scoped[&level]
    }
}

/// Generates the pool, runs the analysis and trains the ranking model for one defect.
pub fn analyze_defect(defect: Defect, corpus: &Corpus, settings: &Settings) -> Result<AnalyzedDefect> {
    let subject = Subject::build(&defect.program, corpus, settings.operators);
    analyze_subject(defect, subject, corpus, settings)
}

/// Like [`analyze_defect`] but with a pool chosen by the caller, for instance a selection plan.
pub fn analyze_subject(
    defect: Defect,
    subject: Subject,
    corpus: &Corpus,
    settings: &Settings,
) -> Result<AnalyzedDefect> {
    let matrix = with_jobs(settings.jobs, || {
        mutation_analysis(&defect, &subject.pool, settings.step_limit)
    })??;
    let coupled = coupled_mutants(&matrix);
    let model = train_model(&defect.program, corpus, settings)?;
    let scoped = ScopeLevel::ALL
        .into_iter()
        .map(|l| Ok((l, scope_filter(&subject.pool, &defect, l)?)))
        .collect::<Result<_>>()?;
    Ok(AnalyzedDefect {
        defect,
        subject,
        matrix,
        coupled,
        model,
        scoped,
    })
}
