use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use tailmut::cfg::{all_distances, build_cfg};
use tailmut::harness::{
    analyze_defect, analyze_subject, budget_grid, curve_csv, defect_dirs, effectiveness_curve,
    operators_csv, with_jobs, AnalyzedDefect, Corpus, CouplingReport, CurveSubject, Defect,
    KillMatrix, Provenance, ScopeLevel, Settings, Subject,
};
use tailmut::lm::WindowBound;
use tailmut::minilang::TypedProgram;
use tailmut::mutators::{apply_mutant, MutantId, MutantPool, OperatorSet};
use tailmut::selection::{
    select, LocationRanker, NaturalnessRanker, OracleRanker, Policy, SelectionPlan,
};

use crate::config::{load_config, Budget, Resolver};
use crate::{
    AnalyzeArgs, CfgDumpArgs, Cli, CliError, Command, CorpusArgs, CurveArgs, LmArgs, MutateArgs,
    SelectArgs,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => load_config(p)?,
        None => BTreeMap::new(),
    };
    let mut r = Resolver::new(file);
    let jobs: Option<usize> = r.optional("jobs", cli.jobs.clone())?;
    // worker count never changes results, so it stays out of the config hash
    r.effective.remove("jobs");
    if jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let out = cli.out;
    match cli.command {
        Command::Mutate(a) => mutate(a, &mut r, &out),
        Command::Select(a) => select_cmd(a, &mut r, &out),
        Command::Analyze(a) => with_jobs(jobs, || analyze(a, &mut r, &out))?,
        Command::Curve(a) => with_jobs(jobs, || curve(a, &mut r, &out))?,
        Command::CfgDump(a) => cfg_dump(a, &mut r, &out),
    }
}

fn existing(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{}: no such file or directory", path.display())))
    }
}

fn read(path: &Path) -> Result<String> {
    existing(path)?;
    std::fs::read_to_string(path).map_err(|e| tailmut::Error::io(path, e).into())
}

fn write(out: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out).map_err(|e| tailmut::Error::io(out, e))?;
    let path = out.join(name);
    std::fs::write(&path, text).map_err(|e| tailmut::Error::io(&path, e))?;
    Ok(path)
}

fn corpus(r: &mut Resolver, args: CorpusArgs) -> Result<Corpus> {
    let flags = args.corpus.iter().map(|p| p.display().to_string()).collect();
    let paths: Vec<PathBuf> = r.list("corpus", flags, &[]).into_iter().map(PathBuf::from).collect();
    for p in &paths {
        existing(p)?;
    }
    Ok(Corpus::load(&paths)?)
}

fn settings(r: &mut Resolver, lm: LmArgs) -> Result<Settings> {
    // jobs stay unset: the caller already runs inside the --jobs worker pool
    let s = Settings {
        lm_order: r.get("lm-order", lm.lm_order, "3")?,
        lm_exclude_self: r.switch("lm-exclude-self", lm.lm_exclude_self)?,
        lm_window: r.get::<WindowBound>("lm-window", lm.lm_window, "inclusive")?,
        ..Settings::default()
    };
    if s.lm_order == 0 {
        return Err(CliError::Usage("--lm-order must be at least 1".into()));
    }
    Ok(s)
}

fn compile(path: &Path) -> Result<TypedProgram> {
    let text = read(path)?;
    Ok(TypedProgram::compile(&text)?)
}

fn load_pool(path: &Path, program: &TypedProgram) -> Result<MutantPool> {
    let pool = MutantPool::from_json_lines(&read(path)?)?;
    for m in &pool {
        apply_mutant(&program.source, m)?;
    }
    Ok(pool)
}

/// Bundle directories named directly, or found one level below a named directory.
fn bundles(r: &mut Resolver, paths: &[PathBuf]) -> Result<Vec<Defect>> {
    let mut dirs = Vec::new();
    for p in paths {
        existing(p)?;
        if p.join("program.mini").is_file() {
            dirs.push(p.clone());
        } else {
            dirs.extend(defect_dirs(p)?);
        }
    }
    if dirs.is_empty() {
        return Err(tailmut::Error::NoDefects.into());
    }
    r.note("defects", dirs.iter().map(|d| d.display().to_string()).collect::<Vec<_>>().join(","));
    Ok(dirs.iter().map(Defect::load).collect::<tailmut::Result<_>>()?)
}

fn mutate(a: MutateArgs, r: &mut Resolver, out: &Path) -> Result<()> {
    r.note("command", "mutate");
    r.note("program", a.program.display().to_string());
    let program = compile(&a.program)?;
    let operators: OperatorSet = r.get("operators", a.operators, "all")?;
    let seed: u64 = r.get("seed", a.seed, "0")?;
    let corpus = corpus(r, a.corpus)?;
    let subject = Subject::build(&program, &corpus, operators);
    let prov = Provenance::new(&r.effective, seed);
    let header = json!({
        "kind": "header",
        "provenance": prov,
        "subject": a.program.display().to_string(),
        "operators": operators.as_str(),
        "mutants": subject.pool.len(),
    });
    let text = format!("{header}\n{}", subject.pool.to_json_lines()?);
    let path = write(out, "pool.jsonl", &text)?;
    for (op, n) in subject.pool.operator_counts() {
        println!("{op}\t{n}");
    }
    println!("total\t{}", subject.pool.len());
    println!("wrote {}", path.display());
    Ok(())
}

/// Coupled ids from a `coupling.json` (every defect, class scope) or from a list of ids.
fn coupling_ids(path: &Path) -> Result<BTreeSet<MutantId>> {
    let text = read(path)?;
    if let Ok(report) = serde_json::from_str::<CouplingReport>(&text) {
        return Ok(report
            .defects
            .into_iter()
            .flat_map(|d| d.coupled.into_values().flatten())
            .collect());
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse().map_err(CliError::from))
        .collect()
}

#[derive(Serialize)]
struct PlanFile<'a> {
    provenance: &'a Provenance,
    subject: String,
    pool_size: usize,
    #[serde(flatten)]
    plan: &'a SelectionPlan,
}

fn select_cmd(a: SelectArgs, r: &mut Resolver, out: &Path) -> Result<()> {
    r.note("command", "select");
    r.note("program", a.program.display().to_string());
    r.note("pool", a.pool.display().to_string());
    let program = compile(&a.program)?;
    let pool = load_pool(&a.pool, &program)?;
    let policy: Policy = r.get("policy", a.policy, "min-dist-nat")?;
    let budget: Budget = r.get("budget", a.budget, "0.1")?;
    let seed: u64 = r.get("seed", a.seed, "0")?;
    let coupling: Option<PathBuf> = r.optional("coupling", a.coupling.map(|p| p.display().to_string()))?;
    let corpus = corpus(r, a.corpus)?;
    let settings = settings(r, a.lm)?;
    if pool.is_empty() {
        return Err(tailmut::Error::EmptyPool.into());
    }
    let kappa = budget.kappa(pool.len());
    let cfgs = build_cfg(&program);
    let dt = all_distances(&cfgs);

    let coupled = match (policy, coupling) {
        (Policy::MinDistOracle, None) => {
            return Err(CliError::Usage("policy min-dist-oracle needs --coupling".into()))
        }
        (_, Some(p)) => coupling_ids(&p)?,
        (_, None) => BTreeSet::new(),
    };
    let model = match policy {
        Policy::MinDistNaturalness => Some(tailmut::harness::train_model(&program, &corpus, &settings)?),
        _ => None,
    };
    let natural = model.as_ref().map(|m| {
        let tokens = program.tokens.tokens.iter().map(|t| t.lexeme.as_str()).collect();
        let mut n = NaturalnessRanker::new(m, tokens);
        n.window = settings.lm_window;
        n
    });
    let oracle = OracleRanker { coupled: &coupled };
    let ranker: Option<&dyn LocationRanker> = match policy {
        Policy::MinDistNaturalness => natural.as_ref().map(|n| n as &dyn LocationRanker),
        Policy::MinDistOracle => Some(&oracle),
        _ => None,
    };
    let plan = select(policy, &pool, &cfgs, &dt, kappa, ranker, seed, 0)?;
    let prov = Provenance::new(&r.effective, seed);
    let file = PlanFile {
        provenance: &prov,
        subject: a.program.display().to_string(),
        pool_size: pool.len(),
        plan: &plan,
    };
    let text = serde_json::to_string_pretty(&file).map_err(tailmut::Error::from)? + "\n";
    let path = write(out, "plan.json", &text)?;
    println!("{} selected {} of {} mutants", policy.short_name(), plan.mutant_ids.len(), pool.len());
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct MatrixEntry<'a> {
    defect: &'a str,
    matrix: &'a KillMatrix,
}

fn analyze(a: AnalyzeArgs, r: &mut Resolver, out: &Path) -> Result<()> {
    r.note("command", "analyze");
    let defects = bundles(r, &a.defects)?;
    let scope: Option<ScopeLevel> = r.optional("scope", a.scope)?;
    let operators: OperatorSet = r.get("operators", a.operators, "all")?;
    let step_limit: u64 = r.get("step-limit", a.step_limit, &tailmut::minilang::DEFAULT_STEP_LIMIT.to_string())?;
    let seed: u64 = r.get("seed", a.seed, "0")?;
    let corpus = corpus(r, a.corpus)?;
    let mut settings = settings(r, a.lm)?;
    settings.operators = operators;
    settings.step_limit = step_limit;
    if a.pool.is_some() && defects.len() != 1 {
        return Err(CliError::Usage("--pool analyzes exactly one defect".into()));
    }
    if let Some(p) = &a.pool {
        r.note("pool", p.display().to_string());
    }
    if let Some(p) = &a.plan {
        r.note("plan", p.display().to_string());
    }

    let mut analyzed: Vec<AnalyzedDefect> = Vec::new();
    for d in defects {
        let a_d = match &a.pool {
            None => analyze_defect(d, &corpus, &settings)?,
            Some(pool_path) => {
                let mut pool = load_pool(pool_path, &d.program)?;
                if let Some(plan_path) = &a.plan {
                    existing(plan_path)?;
                    let plan = SelectionPlan::load(plan_path)?;
                    let keep: BTreeSet<&MutantId> = plan.mutant_ids.iter().collect();
                    if let Some(missing) = keep.iter().find(|id| pool.get(id).is_none()) {
                        return Err(CliError::Usage(format!("plan mutant {missing} is not in the pool")));
                    }
                    pool = pool.filter(|m| keep.contains(&m.id));
                }
                let cfgs = build_cfg(&d.program);
                let distances = all_distances(&cfgs);
                let subject = Subject { cfgs, distances, pool };
                analyze_subject(d, subject, &corpus, &settings)?
            }
        };
        analyzed.push(a_d);
    }

    let prov = Provenance::new(&r.effective, seed);
    let mut report = CouplingReport::new(prov.clone(), &analyzed);
    let levels: Vec<ScopeLevel> = match scope {
        Some(l) => {
            report.restrict_to(l);
            vec![l]
        }
        None => ScopeLevel::ALL.to_vec(),
    };
    write(out, "coupling.json", &report.to_json())?;
    write(out, "operators.csv", &operators_csv(&prov, &report.operators, &levels))?;
    let matrices: Vec<MatrixEntry> = analyzed
        .iter()
        .map(|d| MatrixEntry {
            defect: &d.defect.name,
            matrix: &d.matrix,
        })
        .collect();
    let km = json!({ "provenance": prov, "defects": matrices });
    write(out, "kill_matrix.json", &(serde_json::to_string_pretty(&km).map_err(tailmut::Error::from)? + "\n"))?;

    for d in &report.defects {
        let counts: Vec<String> = levels
            .iter()
            .map(|l| format!("{l} {}/{}", d.coupled[l].len(), d.mutants[l]))
            .collect();
        println!("{}\t{}", d.defect, counts.join("\t"));
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn curve(a: CurveArgs, r: &mut Resolver, out: &Path) -> Result<()> {
    r.note("command", "curve");
    let defects = bundles(r, &a.defects)?;
    let policies = r
        .list("policy", a.policy, &["random", "min-dist-nat"])
        .iter()
        .map(|p| p.parse::<Policy>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let sets = r
        .list("operators", a.operators, &["all"])
        .iter()
        .map(|s| s.parse::<OperatorSet>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let scope: ScopeLevel = r.get("scope", a.scope, "class")?;
    let trials: usize = r.get("trials", a.trials, "1000")?;
    let seed: u64 = r.get("seed", a.seed, "0")?;
    let steps: usize = r.get("budget-steps", a.budget_steps, "100")?;
    let step_limit: u64 = r.get("step-limit", a.step_limit, &tailmut::minilang::DEFAULT_STEP_LIMIT.to_string())?;
    let corpus = corpus(r, a.corpus)?;
    let mut settings = settings(r, a.lm)?;
    settings.step_limit = step_limit;
    settings.seed = seed;
    settings.trials = trials;
    if trials == 0 || steps == 0 {
        return Err(CliError::Usage("--trials and --budget-steps must be at least 1".into()));
    }
    let grid = budget_grid(steps);
    let prov = Provenance::new(&r.effective, seed);

    let mut rows = Vec::new();
    for set in sets {
        settings.operators = set;
        let analyzed: Vec<AnalyzedDefect> = defects
            .iter()
            .map(|d| analyze_defect(d.clone(), &corpus, &settings))
            .collect::<tailmut::Result<_>>()?;
        let subjects: Vec<CurveSubject> = analyzed
            .iter()
            .map(|d| CurveSubject::new(d, scope, settings.lm_window))
            .collect::<tailmut::Result<_>>()?;
        for &policy in &policies {
            let c = effectiveness_curve(&subjects, policy, &grid, trials, seed)?;
            println!(
                "{}\t{}\tmax {:.4}\tbudget-to-max {:.4}",
                set.as_str(),
                policy.short_name(),
                c.max_attainable,
                c.budget_to_max
            );
            rows.extend(c.points.into_iter().map(|p| (set.as_str().to_string(), p)));
        }
    }
    let path = write(out, "curve.csv", &curve_csv(&prov, trials, &rows))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cfg_dump(a: CfgDumpArgs, r: &mut Resolver, out: &Path) -> Result<()> {
    r.note("command", "cfg-dump");
    let program = compile(&a.program)?;
    let cfgs = build_cfg(&program);
    let prov = Provenance::new(&r.effective, 0);
    for g in &cfgs {
        let name: String = g
            .owner
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
            .collect();
        let text = format!("// {}\n{}", prov.comment_line().trim_start_matches("# "), g.to_dot(&program));
        write(out, &format!("{name}.dot"), &text)?;
        println!("{}\t{} nodes\t{} edges", g.owner, g.nodes.len(), g.edges.len());
    }
    println!("wrote {}", out.display());
    Ok(())
}
