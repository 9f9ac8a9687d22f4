//! Mutant selection policies.

mod objective;
mod rank;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cfg::{Cfg, DistanceTable, NodeRef};
use crate::error::{Error, Result};
use crate::mutators::{Location, MutantId, MutantPool};

pub use objective::{
    all_nodes, greedy_min_distance, objective, verify_submodularity, Gain, GreedyTrajectory,
    ObjectiveValue, SubmodularityReport, Violation, EXHAUSTIVE_LIMIT,
};
pub use rank::{
    oracle_rank_at_location, rank_at_location, LocationRanker, NaturalnessRanker, OracleRanker,
    RandomRanker,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "fully-random")]
    FullyRandom,
    #[serde(rename = "random-location-first")]
    RandomLocationFirst,
    #[serde(rename = "min-dist+random")]
    MinDistRandom,
    #[serde(rename = "min-dist+naturalness")]
    MinDistNaturalness,
    #[serde(rename = "min-dist+oracle")]
    MinDistOracle,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::FullyRandom,
        Policy::RandomLocationFirst,
        Policy::MinDistRandom,
        Policy::MinDistNaturalness,
        Policy::MinDistOracle,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Policy::FullyRandom => "fully-random",
            Policy::RandomLocationFirst => "random-location-first",
            Policy::MinDistRandom => "min-dist+random",
            Policy::MinDistNaturalness => "min-dist+naturalness",
            Policy::MinDistOracle => "min-dist+oracle",
        }
    }

    /// Short name used on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            Policy::FullyRandom => "random",
            Policy::RandomLocationFirst => "rand-loc",
            Policy::MinDistRandom => "min-dist",
            Policy::MinDistNaturalness => "min-dist-nat",
            Policy::MinDistOracle => "min-dist-oracle",
        }
    }

    /// Whether two runs with different seeds can differ.
    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            Policy::FullyRandom | Policy::RandomLocationFirst | Policy::MinDistRandom
        )
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.tag() == s || p.short_name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown policy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionPlan {
    pub policy: Policy,
    pub seed: u64,
    pub budget: usize,
    pub mutant_ids: Vec<MutantId>,
}

impl SelectionPlan {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SelectionPlan> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Seeded generator for `(master seed, stream)`; distinct streams never overlap.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id of trial `trial` on defect `defect`.
pub fn trial_stream(defect: usize, trial: usize) -> u64 {
    ((defect as u64) << 32) | trial as u64
}

fn check(pool: &MutantPool, kappa: usize) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if kappa == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    Ok(())
}

/// Uniform sample without replacement. The plan for a smaller budget under the same generator
/// state is a prefix of the plan for a larger one.
pub fn select_fully_random(
    pool: &MutantPool,
    kappa: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<Vec<MutantId>> {
    check(pool, kappa)?;
    let mut ids: Vec<&MutantId> = pool.iter().map(|m| &m.id).collect();
    let take = kappa.min(ids.len());
    for i in 0..take {
        let j = rng.gen_range(i..ids.len());
        ids.swap(i, j);
    }
    Ok(ids[..take].iter().map(|&id| id.clone()).collect())
}

/// Picks a uniformly random location that still has mutants, then a uniformly random mutant
/// there, until the budget is spent.
pub fn select_random_location_first(
    pool: &MutantPool,
    kappa: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<Vec<MutantId>> {
    check(pool, kappa)?;
    let mut buckets: Vec<Vec<&MutantId>> = pool
        .locations()
        .map(|l| pool.at_location(l).into_iter().map(|m| &m.id).collect())
        .collect();
    let mut plan = Vec::new();
    while plan.len() < kappa && !buckets.is_empty() {
        let b = rng.gen_range(0..buckets.len());
        let j = rng.gen_range(0..buckets[b].len());
        plan.push(buckets[b].swap_remove(j).clone());
        if buckets[b].is_empty() {
            buckets.remove(b);
        }
    }
    Ok(plan)
}

/// Maps the pool's locations to graph nodes.
pub fn location_nodes(pool: &MutantPool, cfgs: &[Cfg]) -> Result<BTreeMap<NodeRef, Location>> {
    let by_owner: BTreeMap<&str, usize> = cfgs
        .iter()
        .enumerate()
        .map(|(i, g)| (g.owner.as_str(), i))
        .collect();
    pool.locations()
        .map(|l| {
            let cfg = *by_owner
                .get(l.owner.as_str())
                .ok_or_else(|| Error::UnknownNode(l.to_string()))?;
            if l.node >= cfgs[cfg].nodes.len() {
                return Err(Error::UnknownNode(l.to_string()));
            }
            Ok((NodeRef::new(cfg, l.node), l.clone()))
        })
        .collect()
}

/// The greedy location order of a pool, reusable across many plans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinDistPlanner {
    order: Vec<Location>,
    trajectory: GreedyTrajectory,
}

impl MinDistPlanner {
    pub fn new(pool: &MutantPool, cfgs: &[Cfg], dt: &DistanceTable) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        let locations = location_nodes(pool, cfgs)?;
        let candidates: Vec<NodeRef> = locations.keys().copied().collect();
        let nodes = all_nodes(cfgs);
        let trajectory = greedy_min_distance(dt, cfgs, &nodes, &candidates, candidates.len());
        let order = trajectory
            .locations
            .iter()
            .map(|n| locations[n].clone())
            .collect();
        Ok(MinDistPlanner { order, trajectory })
    }

    pub fn location_order(&self) -> &[Location] {
        &self.order
    }

    pub fn trajectory(&self) -> &GreedyTrajectory {
        &self.trajectory
    }

    /// One ranked mutant per location in greedy order, then round-robin over the same order
    /// until the budget is spent. Every location is ranked up front, so the plan for a smaller
    /// budget is a prefix of the plan for a larger one.
    pub fn plan(
        &self,
        pool: &MutantPool,
        kappa: usize,
        ranker: &dyn LocationRanker,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<MutantId>> {
        check(pool, kappa)?;
        let ranked: Vec<Vec<MutantId>> = self
            .order
            .iter()
            .map(|l| ranker.rank(&pool.at_location(l), rng))
            .collect();
        let total: usize = ranked.iter().map(Vec::len).sum();
        let mut plan = Vec::new();
        let mut round = 0;
        while plan.len() < kappa.min(total) {
            for r in &ranked {
                if let Some(id) = r.get(round) {
                    plan.push(id.clone());
                    if plan.len() == kappa {
                        break;
                    }
                }
            }
            round += 1;
        }
        Ok(plan)
    }
}

/// Greedy min-distance location order with `ranker` choosing within each location.
pub fn select_min_distance(
    pool: &MutantPool,
    cfgs: &[Cfg],
    dt: &DistanceTable,
    kappa: usize,
    ranker: &dyn LocationRanker,
    rng: &mut dyn RngCore,
) -> Result<Vec<MutantId>> {
    check(pool, kappa)?;
    MinDistPlanner::new(pool, cfgs, dt)?.plan(pool, kappa, ranker, rng)
}

/// Runs `policy` with its default ranker. `ranker` is consulted only by the min-distance
/// policies other than `min-dist+random`.
#[allow(clippy::too_many_arguments)]
pub fn select(
    policy: Policy,
    pool: &MutantPool,
    cfgs: &[Cfg],
    dt: &DistanceTable,
    kappa: usize,
    ranker: Option<&dyn LocationRanker>,
    seed: u64,
    stream: u64,
) -> Result<SelectionPlan> {
    let mut rng = stream_rng(seed, stream);
    let ids = match policy {
        Policy::FullyRandom => select_fully_random(pool, kappa, &mut rng)?,
        Policy::RandomLocationFirst => select_random_location_first(pool, kappa, &mut rng)?,
        Policy::MinDistRandom => select_min_distance(pool, cfgs, dt, kappa, &RandomRanker, &mut rng)?,
        Policy::MinDistNaturalness | Policy::MinDistOracle => {
            let ranker = ranker.ok_or_else(|| {
                Error::InvalidParameter(format!("policy {policy} needs a ranker"))
            })?;
            select_min_distance(pool, cfgs, dt, kappa, ranker, &mut rng)?
        }
    };
    Ok(SelectionPlan {
        policy,
        seed,
        budget: kappa,
        mutant_ids: ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeSet, HashSet};

    use crate::cfg::{all_distances, build_cfg};
    use crate::minilang::{Span, TypedProgram};
    use crate::mutators::{generate_pool, KindClass, Mutant, Operator, OperatorSet, TrigramIndex};

    fn fake(op: Operator, token: usize, node: usize, replacement: &str) -> Mutant {
        Mutant {
            id: MutantId::new(op, token, replacement),
            operator: op,
            kind_class: op.class(),
            cfg_owner: "f".into(),
            cfg_node: node,
            token_index: token,
            span: Span::single(token),
            original: "x".into(),
            replacement: replacement.into(),
            line: 1,
            col: 1,
        }
    }

    fn subject() -> (TypedProgram, Vec<Cfg>, DistanceTable, MutantPool) {
        let p = TypedProgram::compile(
            "fn max(a: int, b: int) -> int { if (a > b) { return a; } else { return b; } }\nfn min(a: int, b: int) -> int { if (a < b) { return a; } return b; }",
        )
        .unwrap();
        let cfgs = build_cfg(&p);
        let dt = all_distances(&cfgs);
        let index = TrigramIndex::for_program(&p, &[]);
        let pool = generate_pool(&p, &cfgs, &index, OperatorSet::All);
        (p, cfgs, dt, pool)
    }

    #[test]
    fn policy_names_roundtrip() {
        for p in Policy::ALL {
            assert_eq!(p.tag().parse::<Policy>().unwrap(), p);
            assert_eq!(p.short_name().parse::<Policy>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.tag()));
        }
        assert!("best".parse::<Policy>().is_err());
    }

    #[test]
    fn naturalness_rank_puts_traditional_first() {
        let t1 = fake(Operator::ROR, 5, 2, "<=");
        let t2 = fake(Operator::AOR, 3, 2, "-");
        let a = fake(Operator::VAR, 4, 2, "y");
        let b = fake(Operator::NLR, 6, 2, "0");
        let scores = [(a.id.clone(), -0.2), (b.id.clone(), -3.1)];
        let ranked = rank_at_location(&[&t1, &a, &t2, &b], |m| {
            scores.iter().find(|(id, _)| id == &m.id).unwrap().1
        });
        assert_eq!(ranked, [t1.id.clone(), t2.id.clone(), b.id.clone(), a.id.clone()]);
        assert_eq!(rank_at_location(&[&t2, &t1], |_| 0.0), [t2.id.clone(), t1.id.clone()]);
        let tie = rank_at_location(&[&b, &a], |_| 1.0);
        let mut ids = vec![a.id.clone(), b.id.clone()];
        ids.sort();
        assert_eq!(tie, ids);
        assert_eq!(a.kind_class, KindClass::Tailored);
    }

    #[test]
    fn oracle_rank_examples() {
        let m3 = fake(Operator::ROR, 3, 2, "<");
        let m7 = fake(Operator::ROR, 7, 2, "<");
        let m9 = fake(Operator::ROR, 9, 2, "<");
        let all = [&m9, &m7, &m3];
        let coupled = BTreeSet::from([m7.id.clone()]);
        assert_eq!(oracle_rank_at_location(&all, &coupled), [m7.id.clone(), m3.id.clone(), m9.id.clone()]);
        let ids = [m3.id.clone(), m7.id.clone(), m9.id.clone()];
        assert_eq!(oracle_rank_at_location(&all, &BTreeSet::new()), ids);
        assert_eq!(oracle_rank_at_location(&all, &ids.iter().cloned().collect()), ids);
    }

    #[test]
    fn plans_are_deterministic_unique_and_sized() {
        let (_, cfgs, dt, pool) = subject();
        for policy in [Policy::FullyRandom, Policy::RandomLocationFirst, Policy::MinDistRandom] {
            for kappa in [1, 3, pool.len(), pool.len() + 5] {
                let a = select(policy, &pool, &cfgs, &dt, kappa, None, 42, 0).unwrap();
                let b = select(policy, &pool, &cfgs, &dt, kappa, None, 42, 0).unwrap();
                assert_eq!(a, b);
                assert_eq!(a.mutant_ids.len(), kappa.min(pool.len()));
                let unique: HashSet<_> = a.mutant_ids.iter().collect();
                assert_eq!(unique.len(), a.mutant_ids.len());
            }
        }
    }

    #[test]
    fn smaller_budgets_are_prefixes() {
        let (_, cfgs, dt, pool) = subject();
        for policy in [Policy::FullyRandom, Policy::MinDistRandom] {
            let full = select(policy, &pool, &cfgs, &dt, pool.len(), None, 9, 3).unwrap();
            for kappa in 1..pool.len() {
                let part = select(policy, &pool, &cfgs, &dt, kappa, None, 9, 3).unwrap();
                assert_eq!(part.mutant_ids[..], full.mutant_ids[..kappa], "{policy} {kappa}");
            }
        }
    }

    #[test]
    fn empty_pool_and_zero_budget_rejected() {
        let (_, cfgs, dt, pool) = subject();
        let empty = MutantPool::default();
        assert!(matches!(
            select(Policy::FullyRandom, &empty, &cfgs, &dt, 1, None, 0, 0),
            Err(Error::EmptyPool)
        ));
        assert!(select(Policy::FullyRandom, &pool, &cfgs, &dt, 0, None, 0, 0).is_err());
        assert!(select(Policy::MinDistNaturalness, &pool, &cfgs, &dt, 1, None, 0, 0).is_err());
    }

    #[test]
    fn min_distance_starts_with_branch_conditions() {
        let (_, cfgs, dt, pool) = subject();
        let coupled = BTreeSet::new();
        let oracle = OracleRanker { coupled: &coupled };
        let mut rng = stream_rng(0, 0);
        let plan = select_min_distance(&pool, &cfgs, &dt, 2, &oracle, &mut rng).unwrap();
        let first: Vec<_> = plan.iter().map(|id| pool.get(id).unwrap().location()).collect();
        // each function's condition node is its node 2, and the two graphs are far apart
        let owners: BTreeSet<_> = first.iter().map(|l| l.owner.as_str()).collect();
        assert_eq!(owners.len(), 2);
        assert!(first.iter().all(|l| l.node == 2));
    }

    #[test]
    fn round_robin_covers_pool() {
        let (_, cfgs, dt, pool) = subject();
        let mut rng = stream_rng(1, 1);
        let plan = select_min_distance(&pool, &cfgs, &dt, usize::MAX, &RandomRanker, &mut rng).unwrap();
        assert_eq!(plan.len(), pool.len());
        let locations = pool.locations().count();
        let firsts: HashSet<_> = plan[..locations]
            .iter()
            .map(|id| pool.get(id).unwrap().location())
            .collect();
        assert_eq!(firsts.len(), locations);
    }

    #[test]
    fn oracle_puts_coupled_first() {
        let (_, cfgs, dt, pool) = subject();
        let locations: Vec<_> = pool.locations().cloned().collect();
        let coupled: BTreeSet<MutantId> = locations
            .iter()
            .map(|l| pool.at_location(l).last().unwrap().id.clone())
            .collect();
        let oracle = OracleRanker { coupled: &coupled };
        let mut rng = stream_rng(0, 0);
        let plan = select_min_distance(&pool, &cfgs, &dt, locations.len(), &oracle, &mut rng).unwrap();
        assert!(plan.iter().all(|id| coupled.contains(id)));
    }

    #[test]
    fn plan_json_shape() {
        let plan = SelectionPlan {
            policy: Policy::MinDistNaturalness,
            seed: 7,
            budget: 2,
            mutant_ids: vec![MutantId::new(Operator::VAR, 4, "y")],
        };
        let v: serde_json::Value = serde_json::from_str(&plan.to_json().unwrap()).unwrap();
        assert_eq!(v["policy"], "min-dist+naturalness");
        assert_eq!(v["budget"], 2);
        assert_eq!(v["mutant_ids"][0], plan.mutant_ids[0].to_string());
    }
}
