use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::RngCore;

use crate::lm::{score_mutant_with, NgramModel, WindowBound};
use crate::mutators::{Mutant, MutantId};

/// Orders the mutants of one location; the first one is tried first.
pub trait LocationRanker: Sync {
    fn rank(&self, mutants: &[&Mutant], rng: &mut dyn RngCore) -> Vec<MutantId>;
}

/// Traditional mutants first in their original order, then tailored mutants from least to most
/// natural.
pub struct NaturalnessRanker<'a> {
    pub model: &'a NgramModel,
    pub tokens: Vec<&'a str>,
    pub window: WindowBound,
}

impl<'a> NaturalnessRanker<'a> {
    pub fn new(model: &'a NgramModel, tokens: Vec<&'a str>) -> Self {
        NaturalnessRanker {
            model,
            tokens,
            window: WindowBound::default(),
        }
    }

    pub fn score(&self, m: &Mutant) -> f64 {
        score_mutant_with(
            self.model,
            &self.tokens,
            m.token_index,
            m.replacement.trim(),
            self.window,
        )
    }
}

impl LocationRanker for NaturalnessRanker<'_> {
    fn rank(&self, mutants: &[&Mutant], _: &mut dyn RngCore) -> Vec<MutantId> {
        rank_at_location(mutants, |m| self.score(m))
    }
}

/// Traditional mutants in input order, then tailored ones ascending by `score`, ties by id.
pub fn rank_at_location(mutants: &[&Mutant], mut score: impl FnMut(&Mutant) -> f64) -> Vec<MutantId> {
    let mut tailored: Vec<(f64, &MutantId)> = mutants
        .iter()
        .filter(|m| !m.is_traditional())
        .map(|m| (score(m), &m.id))
        .collect();
    tailored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    mutants
        .iter()
        .filter(|m| m.is_traditional())
        .map(|m| m.id.clone())
        .chain(tailored.into_iter().map(|(_, id)| id.clone()))
        .collect()
}

/// Uniformly random order.
pub struct RandomRanker;

impl LocationRanker for RandomRanker {
    fn rank(&self, mutants: &[&Mutant], rng: &mut dyn RngCore) -> Vec<MutantId> {
        let mut ids: Vec<MutantId> = mutants.iter().map(|m| m.id.clone()).collect();
        ids.shuffle(rng);
        ids
    }
}

/// Coupled mutants first; an upper bound no real ranker can beat.
pub struct OracleRanker<'a> {
    pub coupled: &'a BTreeSet<MutantId>,
}

impl LocationRanker for OracleRanker<'_> {
    fn rank(&self, mutants: &[&Mutant], _: &mut dyn RngCore) -> Vec<MutantId> {
        oracle_rank_at_location(mutants, self.coupled)
    }
}

pub fn oracle_rank_at_location(mutants: &[&Mutant], coupled: &BTreeSet<MutantId>) -> Vec<MutantId> {
    let mut ids: Vec<MutantId> = mutants.iter().map(|m| m.id.clone()).collect();
    ids.sort_by(|a, b| {
        coupled
            .contains(b)
            .cmp(&coupled.contains(a))
            .then_with(|| a.cmp(b))
    });
    ids
}
