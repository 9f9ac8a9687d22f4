use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::lm::WindowBound;
use crate::mutators::{MutantId, MutantPool};
use crate::selection::{
    select_fully_random, select_random_location_first, stream_rng, trial_stream, LocationRanker,
    MinDistPlanner, NaturalnessRanker, OracleRanker, Policy, RandomRanker,
};

use super::{AnalyzedDefect, ScopeLevel};

/// Probability that `kappa` mutants drawn without replacement from `m`, of which `lambda` are
/// coupled, include a coupled one.
pub fn analytic_random_effectiveness(kappa: usize, lambda: usize, m: usize) -> Result<f64> {
    if lambda > m || kappa == 0 || kappa > m {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= lambda <= M and 1 <= kappa <= M, got kappa={kappa} lambda={lambda} M={m}"
        )));
    }
    if lambda == 0 {
        return Ok(0.0);
    }
    if m - kappa < lambda {
        return Ok(1.0);
    }
    let ln_miss = ln_factorial((m - kappa) as u64) + ln_factorial((m - lambda) as u64)
        - ln_factorial(m as u64)
        - ln_factorial((m - kappa - lambda) as u64);
    Ok(1.0 - ln_miss.exp())
}

/// Budget fractions `1/steps, 2/steps, ..., 1`.
pub fn budget_grid(steps: usize) -> Vec<f64> {
    (1..=steps).map(|i| i as f64 / steps as f64).collect()
}

/// Mutants a defect gets at budget fraction `b`: `max(1, round(b * M))`, capped at `M`.
pub fn kappa_for(b: f64, m: usize) -> usize {
    if m == 0 {
        0
    } else {
        ((b * m as f64).round() as usize).clamp(1, m)
    }
}

/// One defect as seen by the selection policies.
pub struct CurveSubject<'a> {
    pub name: String,
    pub pool: &'a MutantPool,
    pub coupled: BTreeSet<MutantId>,
    planner: Option<MinDistPlanner>,
    naturalness: Option<NaturalnessRanker<'a>>,
}

impl<'a> CurveSubject<'a> {
    /// The defect's pool at `level` with its greedy location order and naturalness ranker.
    pub fn new(a: &'a AnalyzedDefect, level: ScopeLevel, window: WindowBound) -> Result<Self> {
        let pool = a.pool(level);
        let planner = if pool.is_empty() {
            None
        } else {
            Some(MinDistPlanner::new(pool, &a.subject.cfgs, &a.subject.distances)?)
        };
        let tokens = a.defect.program.tokens.tokens.iter().map(|t| t.lexeme.as_str()).collect();
        let mut ranker = NaturalnessRanker::new(&a.model, tokens);
        ranker.window = window;
        Ok(CurveSubject {
            name: a.defect.name.clone(),
            pool,
            coupled: a.coupled_in(level),
            planner,
            naturalness: Some(ranker),
        })
    }

    /// A subject without naturalness ranking (`min-dist+naturalness` is then unavailable).
    pub fn from_parts(
        name: &str,
        pool: &'a MutantPool,
        coupled: BTreeSet<MutantId>,
        planner: Option<MinDistPlanner>,
    ) -> Self {
        CurveSubject {
            name: name.to_string(),
            pool,
            coupled,
            planner,
            naturalness: None,
        }
    }

    /// 1-based position of the first coupled mutant in the full-budget plan of trial `stream`.
    fn first_hit(&self, policy: Policy, seed: u64, stream: u64) -> Result<Option<usize>> {
        if self.pool.is_empty() || self.coupled.is_empty() {
            return Ok(None);
        }
        let mut rng = stream_rng(seed, stream);
        let all = self.pool.len();
        let plan = match policy {
            Policy::FullyRandom => select_fully_random(self.pool, all, &mut rng)?,
            Policy::RandomLocationFirst => select_random_location_first(self.pool, all, &mut rng)?,
            _ => {
                let planner = self.planner.as_ref().ok_or(Error::EmptyPool)?;
                let oracle = OracleRanker {
                    coupled: &self.coupled,
                };
                let ranker: &dyn LocationRanker = match policy {
                    Policy::MinDistRandom => &RandomRanker,
                    Policy::MinDistOracle => &oracle,
                    _ => self.naturalness.as_ref().ok_or_else(|| {
                        Error::InvalidParameter(format!("{} has no language model", self.name))
                    })?,
                };
                planner.plan(self.pool, all, ranker, &mut rng)?
            }
        };
        Ok(plan.iter().position(|id| self.coupled.contains(id)).map(|p| p + 1))
    }
}

/// `hits[trial][defect]`: first-hit positions over `trials` runs (one run for deterministic
/// policies). Trial `t` of defect `d` uses stream `trial_stream(d, t)` of `seed`.
pub fn first_hits(
    subjects: &[CurveSubject<'_>],
    policy: Policy,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<Option<usize>>>> {
    if subjects.is_empty() {
        return Err(Error::NoDefects);
    }
    let runs = if policy.is_stochastic() { trials.max(1) } else { 1 };
    (0..runs)
        .into_par_iter()
        .map(|t| {
            subjects
                .iter()
                .enumerate()
                .map(|(d, s)| s.first_hit(policy, seed, trial_stream(d, t)))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget: f64,
    pub policy: Policy,
    pub mean: f64,
    pub stddev: f64,
    pub analytic_random: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCurve {
    pub policy: Policy,
    pub trials: usize,
    pub points: Vec<CurvePoint>,
    /// Fraction of defects for which some coupled mutant exists.
    pub max_attainable: f64,
    /// Mean over trials of the smallest budget on the grid at which the trial reaches
    /// `max_attainable`.
    pub budget_to_max: f64,
}

/// Effectiveness (fraction of defects whose selection holds a coupled mutant) at every budget
/// fraction, averaged over trials, with the analytic fully-random value alongside.
pub fn effectiveness_curve(
    subjects: &[CurveSubject<'_>],
    policy: Policy,
    budgets: &[f64],
    trials: usize,
    seed: u64,
) -> Result<PolicyCurve> {
    if budgets.is_empty() || budgets.iter().any(|&b| !(b > 0.0 && b <= 1.0)) {
        return Err(Error::InvalidParameter("budgets must lie in (0, 1]".into()));
    }
    let hits = first_hits(subjects, policy, trials, seed)?;
    let n = subjects.len() as f64;
    let sizes: Vec<usize> = subjects.iter().map(|s| s.pool.len()).collect();
    let effectiveness = |trial: &[Option<usize>], b: f64| -> f64 {
        trial
            .iter()
            .zip(&sizes)
            .filter(|(h, &m)| h.is_some_and(|h| h <= kappa_for(b, m)))
            .count() as f64
            / n
    };
    let mut points = Vec::with_capacity(budgets.len());
    for &b in budgets {
        let per_trial: Vec<f64> = hits.iter().map(|t| effectiveness(t, b)).collect();
        let mean = per_trial.iter().sum::<f64>() / per_trial.len() as f64;
        let stddev = if per_trial.len() > 1 {
            let var = per_trial.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
                / (per_trial.len() - 1) as f64;
            var.sqrt()
        } else {
            0.0
        };
        let mut analytic = 0.0;
        for s in subjects {
            let m = s.pool.len();
            if m > 0 {
                analytic += analytic_random_effectiveness(kappa_for(b, m), s.coupled.len(), m)?;
            }
        }
        points.push(CurvePoint {
            budget: b,
            policy,
            mean,
            stddev,
            analytic_random: analytic / n,
        });
    }
    let max_attainable = subjects.iter().filter(|s| !s.coupled.is_empty()).count() as f64 / n;
    let last = *budgets.last().expect("non-empty");
    let budget_to_max = hits
        .iter()
        .map(|t| {
            budgets
                .iter()
                .copied()
                .find(|&b| effectiveness(t, b) >= max_attainable)
                .unwrap_or(last)
        })
        .sum::<f64>()
        / hits.len() as f64;
    Ok(PolicyCurve {
        policy,
        trials: hits.len(),
        points,
        max_attainable,
        budget_to_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::Span;
    use crate::mutators::{Mutant, Operator};

    #[test]
    fn analytic_examples() {
        assert!((analytic_random_effectiveness(2, 1, 4).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(analytic_random_effectiveness(4, 1, 4).unwrap(), 1.0);
        assert_eq!(analytic_random_effectiveness(3, 0, 4).unwrap(), 0.0);
        assert_eq!(analytic_random_effectiveness(4, 0, 4).unwrap(), 0.0);
        assert!(analytic_random_effectiveness(0, 1, 4).is_err());
        assert!(analytic_random_effectiveness(5, 1, 4).is_err());
        assert!(analytic_random_effectiveness(1, 5, 4).is_err());
        let p = analytic_random_effectiveness(1000, 10, 1_000_000).unwrap();
        assert!(p > 0.0 && p < 0.02, "{p}");
    }

    #[test]
    fn analytic_matches_subset_enumeration() {
        // M = 6 with coupled {0, 1}: count kappa-subsets that touch {0, 1}
        for kappa in 1..=6usize {
            let (mut hit, mut all) = (0, 0);
            for mask in 0u32..64 {
                if mask.count_ones() as usize == kappa {
                    all += 1;
                    if mask & 0b11 != 0 {
                        hit += 1;
                    }
                }
            }
            let p = analytic_random_effectiveness(kappa, 2, 6).unwrap();
            assert!((p - hit as f64 / all as f64).abs() < 1e-12, "kappa={kappa}");
        }
    }

    #[test]
    fn kappa_rounding() {
        assert_eq!(kappa_for(0.01, 10), 1);
        assert_eq!(kappa_for(0.25, 10), 3);
        assert_eq!(kappa_for(1.0, 10), 10);
        assert_eq!(kappa_for(0.5, 0), 0);
        assert_eq!(budget_grid(4), [0.25, 0.5, 0.75, 1.0]);
    }

    fn pool(n: usize) -> MutantPool {
        MutantPool::new((0..n).map(|i| {
            let op = Operator::ROR;
            Mutant {
                id: MutantId::new(op, i, "<"),
                operator: op,
                kind_class: op.class(),
                cfg_owner: "f".into(),
                cfg_node: 2 + i % 3,
                token_index: i,
                span: Span::single(i),
                original: ">".into(),
                replacement: "<".into(),
                line: 1,
                col: 1,
            }
        }))
    }

    #[test]
    fn full_budget_reaches_fraction_with_coupling() {
        let a = pool(10);
        let b = pool(5);
        let coupled_a: BTreeSet<_> = [a.mutants()[7].id.clone()].into();
        let subjects = [
            CurveSubject::from_parts("a", &a, coupled_a, None),
            CurveSubject::from_parts("b", &b, BTreeSet::new(), None),
        ];
        for policy in [Policy::FullyRandom, Policy::RandomLocationFirst] {
            let c = effectiveness_curve(&subjects, policy, &budget_grid(10), 200, 3).unwrap();
            let last = c.points.last().unwrap();
            assert_eq!(last.mean, 0.5);
            assert_eq!(last.analytic_random, 0.5);
            assert_eq!(c.max_attainable, 0.5);
            assert_eq!(c.trials, 200);
            for w in c.points.windows(2) {
                assert!(w[0].mean <= w[1].mean);
            }
        }
        assert!(matches!(
            effectiveness_curve(&[], Policy::FullyRandom, &[1.0], 1, 0),
            Err(Error::NoDefects)
        ));
        assert!(effectiveness_curve(&subjects, Policy::FullyRandom, &[0.0], 1, 0).is_err());
    }

    #[test]
    fn random_curve_tracks_formula() {
        let a = pool(20);
        let coupled: BTreeSet<_> = a.mutants()[..3].iter().map(|m| m.id.clone()).collect();
        let subjects = [CurveSubject::from_parts("a", &a, coupled, None)];
        let c = effectiveness_curve(&subjects, Policy::FullyRandom, &budget_grid(20), 20_000, 11).unwrap();
        for p in &c.points {
            assert!((p.mean - p.analytic_random).abs() < 0.02, "{p:?}");
        }
    }
}
