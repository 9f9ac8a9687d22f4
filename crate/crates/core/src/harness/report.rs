use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::mutators::{KindClass, MutantId, Operator};

use super::{AnalyzedDefect, CurvePoint, ScopeLevel};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stamped into every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config: &BTreeMap<String, String>, seed: u64) -> Self {
        Provenance {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: config_hash(config),
            seed,
        }
    }

    /// `# tailmut <version> config=<hash> seed=<seed>`
    pub fn comment_line(&self) -> String {
        format!(
            "# tailmut {} config={} seed={}",
            self.tool_version, self.config_hash, self.seed
        )
    }
}

/// First 16 hex digits of the SHA-256 of the sorted `key=value` lines.
pub fn config_hash(config: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    for (k, v) in config {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScopeStats {
    /// Defects where the operator produced at least one mutant in scope.
    pub defects: usize,
    pub avg_mutants: f64,
    /// Percent of those mutants killed by some non-triggering test, averaged over `defects`.
    pub avg_nontrig_kill_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorRow {
    pub operator: Operator,
    pub class: KindClass,
    /// Defects with a coupled mutant of this operator at line scope.
    pub coupled: usize,
    /// Defects where this is the only operator with a coupled mutant at line scope.
    pub uniquely_coupled: usize,
    pub scopes: BTreeMap<ScopeLevel, ScopeStats>,
}

/// One row per operator, in declaration order.
pub fn operator_report(defects: &[AnalyzedDefect]) -> Vec<OperatorRow> {
    let coupled_ops: Vec<BTreeSet<Operator>> = defects
        .iter()
        .map(|a| {
            a.pool(ScopeLevel::Line)
                .iter()
                .filter(|m| a.coupled.contains(&m.id))
                .map(|m| m.operator)
                .collect()
        })
        .collect();
    Operator::ALL
        .into_iter()
        .map(|op| {
            let coupled = coupled_ops.iter().filter(|s| s.contains(&op)).count();
            let uniquely_coupled = coupled_ops
                .iter()
                .filter(|s| s.len() == 1 && s.contains(&op))
                .count();
            let scopes = ScopeLevel::ALL
                .into_iter()
                .map(|level| (level, scope_stats(defects, op, level)))
                .collect();
            OperatorRow {
                operator: op,
                class: op.class(),
                coupled,
                uniquely_coupled,
                scopes,
            }
        })
        .collect()
}

fn scope_stats(defects: &[AnalyzedDefect], op: Operator, level: ScopeLevel) -> ScopeStats {
    let mut stats = ScopeStats::default();
    let (mut mutants, mut rate) = (0usize, 0.0);
    for a in defects {
        let rows: Vec<usize> = a
            .pool(level)
            .with_operator(op)
            .into_iter()
            .filter_map(|m| a.matrix.row(&m.id))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let killed = rows.iter().filter(|&&r| a.matrix.killed_by_non_triggering(r)).count();
        stats.defects += 1;
        mutants += rows.len();
        rate += 100.0 * killed as f64 / rows.len() as f64;
    }
    if stats.defects > 0 {
        stats.avg_mutants = mutants as f64 / stats.defects as f64;
        stats.avg_nontrig_kill_rate = rate / stats.defects as f64;
    }
    stats
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectCoupling {
    pub defect: String,
    pub mutants: BTreeMap<ScopeLevel, usize>,
    pub coupled: BTreeMap<ScopeLevel, Vec<MutantId>>,
    pub excluded: Vec<MutantId>,
}

/// Contents of `coupling.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub provenance: Provenance,
    pub defects: Vec<DefectCoupling>,
    pub operators: Vec<OperatorRow>,
}

impl CouplingReport {
    pub fn new(provenance: Provenance, defects: &[AnalyzedDefect]) -> Self {
        let per_defect = defects
            .iter()
            .map(|a| DefectCoupling {
                defect: a.defect.name.clone(),
                mutants: ScopeLevel::ALL.into_iter().map(|l| (l, a.pool(l).len())).collect(),
                coupled: ScopeLevel::ALL
                    .into_iter()
                    .map(|l| (l, a.coupled_in(l).into_iter().collect()))
                    .collect(),
                excluded: a.matrix.excluded.iter().map(|(id, _)| id.clone()).collect(),
            })
            .collect();
        CouplingReport {
            provenance,
            defects: per_defect,
            operators: operator_report(defects),
        }
    }

    /// Drops every scope other than `level`.
    pub fn restrict_to(&mut self, level: ScopeLevel) {
        for d in &mut self.defects {
            d.mutants.retain(|l, _| *l == level);
            d.coupled.retain(|l, _| *l == level);
        }
        for r in &mut self.operators {
            r.scopes.retain(|l, _| *l == level);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Table-style CSV: counts, then for each of `levels` the defect count, mean mutants and mean
/// non-triggering kill rate.
pub fn operators_csv(provenance: &Provenance, rows: &[OperatorRow], levels: &[ScopeLevel]) -> String {
    let mut out = provenance.comment_line();
    out.push_str("\noperator,class,coupled,uniquely_coupled");
    for &l in levels {
        let l = l.as_str();
        write!(out, ",{l}_defects,{l}_avg_mutants,{l}_nontrig_kill_pct").unwrap();
    }
    out.push('\n');
    for r in rows {
        write!(
            out,
            "{},{},{},{}",
            r.operator.name(),
            r.class.as_str(),
            r.coupled,
            r.uniquely_coupled
        )
        .unwrap();
        for l in levels {
            let s = r.scopes.get(l).copied().unwrap_or_default();
            write!(out, ",{},{:.2},{:.2}", s.defects, s.avg_mutants, s.avg_nontrig_kill_rate).unwrap();
        }
        out.push('\n');
    }
    out
}

/// `budget,operators,policy,mean,stddev,analytic_random`, one row per point.
pub fn curve_csv(provenance: &Provenance, trials: usize, rows: &[(String, CurvePoint)]) -> String {
    let mut out = provenance.comment_line();
    writeln!(out, " trials={trials}").unwrap();
    out.push_str("budget,operators,policy,mean,stddev,analytic_random\n");
    for (operators, p) in rows {
        writeln!(
            out,
            "{:.4},{},{},{:.6},{:.6},{:.6}",
            p.budget,
            operators,
            p.policy.short_name(),
            p.mean,
            p.stddev,
            p.analytic_random
        )
        .unwrap();
    }
    out
}
