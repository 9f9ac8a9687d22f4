mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tailmut::cfg::{all_distances, build_cfg};
use tailmut::harness::{
    analytic_random_effectiveness, budget_grid, effectiveness_curve, kappa_for, scope_filter,
    CurveSubject, Defect, ScopeLevel, ScopeSpec,
};
use tailmut::minilang::{detokenize, tokenize, TypedProgram};
use tailmut::mutators::{apply_mutant, generate_pool, MutantPool, OperatorSet, TrigramIndex};
use tailmut::selection::{
    all_nodes, greedy_min_distance, location_nodes, select, stream_rng, MinDistPlanner, Policy,
    RandomRanker,
};

fn program(seed: u64) -> TypedProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = support::random_program(&mut rng);
    TypedProgram::compile(&src).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

fn pool_of(p: &TypedProgram) -> MutantPool {
    let cfgs = build_cfg(p);
    let index = TrigramIndex::for_program(p, &[]);
    generate_pool(p, &cfgs, &index, OperatorSet::All)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detokenize_restores_generated_source(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = support::random_program(&mut rng);
        let stream = tokenize(&src).unwrap();
        prop_assert_eq!(detokenize(&stream), src);
    }

    #[test]
    fn detokenize_restores_any_lexable_text(src in "[a-z0-9 \\n+\\-*/<>=!&|^%(){};:,.\"]{0,60}") {
        if let Ok(stream) = tokenize(&src) {
            prop_assert_eq!(detokenize(&stream), src);
            for w in stream.tokens.windows(2) {
                prop_assert_eq!(w[0].index + 1, w[1].index);
                prop_assert!(w[0].end() <= w[1].offset);
            }
        }
    }

    #[test]
    fn pool_generation_is_deterministic(seed in any::<u64>()) {
        let p = program(seed);
        let a = pool_of(&p);
        let b = pool_of(&p);
        prop_assert_eq!(a.to_json_lines().unwrap(), b.to_json_lines().unwrap());
        let ids: BTreeSet<_> = a.iter().map(|m| m.id.clone()).collect();
        prop_assert_eq!(ids.len(), a.len());
        let round = MutantPool::from_json_lines(&a.to_json_lines().unwrap()).unwrap();
        prop_assert_eq!(round, a);
    }

    #[test]
    fn every_mutant_changes_the_source(seed in any::<u64>()) {
        let p = program(seed);
        for m in &pool_of(&p) {
            let text = apply_mutant(&p.source, m).unwrap();
            prop_assert_ne!(&text, &p.source);
        }
    }

    #[test]
    fn plans_are_prefix_closed(seed in any::<u64>(), master in any::<u64>(), stream in 0u64..1000) {
        let p = program(seed);
        let pool = pool_of(&p);
        prop_assume!(!pool.is_empty());
        let cfgs = build_cfg(&p);
        let dt = all_distances(&cfgs);
        for policy in [Policy::FullyRandom, Policy::RandomLocationFirst, Policy::MinDistRandom] {
            let full = select(policy, &pool, &cfgs, &dt, pool.len(), None, master, stream).unwrap();
            let ids: BTreeSet<_> = full.mutant_ids.iter().collect();
            prop_assert_eq!(ids.len(), pool.len());
            if policy != Policy::RandomLocationFirst {
                for k in [1, pool.len() / 3 + 1, pool.len() / 2 + 1] {
                    let part = select(policy, &pool, &cfgs, &dt, k, None, master, stream).unwrap();
                    prop_assert_eq!(&part.mutant_ids[..], &full.mutant_ids[..k]);
                }
            }
            let again = select(policy, &pool, &cfgs, &dt, pool.len(), None, master, stream).unwrap();
            prop_assert_eq!(again, full);
        }
    }

    #[test]
    fn min_distance_plan_covers_locations_before_repeating(seed in any::<u64>()) {
        let p = program(seed);
        let pool = pool_of(&p);
        prop_assume!(!pool.is_empty());
        let cfgs = build_cfg(&p);
        let dt = all_distances(&cfgs);
        let planner = MinDistPlanner::new(&pool, &cfgs, &dt).unwrap();
        let nloc = planner.location_order().len();
        let plan = planner.plan(&pool, nloc, &RandomRanker, &mut stream_rng(1, 2)).unwrap();
        let locs: Vec<_> = plan.iter().map(|id| pool.get(id).unwrap().location()).collect();
        prop_assert_eq!(&locs[..], planner.location_order());
    }

    #[test]
    fn greedy_objective_never_increases(seed in any::<u64>()) {
        let p = program(seed);
        let pool = pool_of(&p);
        prop_assume!(!pool.is_empty());
        let cfgs = build_cfg(&p);
        let dt = all_distances(&cfgs);
        let candidates: Vec<_> = location_nodes(&pool, &cfgs).unwrap().into_keys().collect();
        let t = greedy_min_distance(&dt, &cfgs, &all_nodes(&cfgs), &candidates, candidates.len());
        for w in t.objectives.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn scopes_nest(seed in any::<u64>(), pick in any::<prop::sample::Index>(), lines in prop::collection::vec(any::<prop::sample::Index>(), 0..4)) {
        let p = program(seed);
        let pool = pool_of(&p);
        let f = &p.functions[pick.index(p.functions.len())];
        let toks = &p.tokens.tokens;
        let (first, last) = (toks[f.span.first].line, toks[f.span.last].line);
        let span = last - first + 1;
        let scope = ScopeSpec {
            functions: vec![f.name.clone()],
            lines: lines.iter().map(|i| first + i.index(span)).collect(),
        };
        let defect = Defect { name: "d".into(), program: p.clone(), tests: Vec::new(), scope };
        let ids = |l| -> BTreeSet<_> {
            scope_filter(&pool, &defect, l).unwrap().iter().map(|m| m.id.clone()).collect()
        };
        let (class, method, line) = (ids(ScopeLevel::Class), ids(ScopeLevel::Method), ids(ScopeLevel::Line));
        prop_assert!(line.is_subset(&method));
        prop_assert!(method.is_subset(&class));
        prop_assert_eq!(class.len(), pool.len());
    }

    #[test]
    fn analytic_effectiveness_is_monotone(m in 1usize..60, k in 1usize..60, l in 0usize..60) {
        prop_assume!(k <= m && l <= m);
        let p = analytic_random_effectiveness(k, l, m).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        if k < m {
            prop_assert!(analytic_random_effectiveness(k + 1, l, m).unwrap() >= p - 1e-12);
        }
        if l < m {
            prop_assert!(analytic_random_effectiveness(k, l + 1, m).unwrap() >= p - 1e-12);
        }
    }

    #[test]
    fn kappa_is_monotone_in_budget(m in 1usize..500, a in 1u32..=100, b in 1u32..=100) {
        let (lo, hi) = (a.min(b) as f64 / 100.0, a.max(b) as f64 / 100.0);
        prop_assert!(kappa_for(lo, m) <= kappa_for(hi, m));
        prop_assert_eq!(kappa_for(1.0, m), m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn curves_are_monotone_in_budget(seeds in prop::collection::vec(any::<u64>(), 1..4), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..4), master in any::<u64>()) {
        let programs: Vec<TypedProgram> = seeds.iter().map(|&s| program(s)).collect();
        let pools: Vec<MutantPool> = programs.iter().map(pool_of).collect();
        let mut subjects = Vec::new();
        for (i, (p, pool)) in programs.iter().zip(&pools).enumerate() {
            if pool.is_empty() {
                continue;
            }
            let coupled = picks
                .iter()
                .map(|ix| pool.mutants()[ix.index(pool.len())].id.clone())
                .collect();
            let cfgs = build_cfg(p);
            let planner = MinDistPlanner::new(pool, &cfgs, &all_distances(&cfgs)).unwrap();
            subjects.push(CurveSubject::from_parts(&format!("s{i}"), pool, coupled, Some(planner)));
        }
        prop_assume!(!subjects.is_empty());
        let grid = budget_grid(20);
        for policy in [Policy::FullyRandom, Policy::MinDistRandom, Policy::MinDistOracle] {
            let c = effectiveness_curve(&subjects, policy, &grid, 20, master).unwrap();
            for w in c.points.windows(2) {
                prop_assert!(w[1].mean >= w[0].mean - 1e-12);
                prop_assert!(w[1].analytic_random >= w[0].analytic_random - 1e-12);
            }
            let last = c.points.last().unwrap();
            prop_assert!((last.mean - 1.0).abs() < 1e-12);
            prop_assert!((last.analytic_random - 1.0).abs() < 1e-12);
        }
    }
}
