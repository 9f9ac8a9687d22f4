use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cfg::{Cfg, Distance, DistanceTable, NodeRef};

/// `O(L)` as `(nodes with no finite distance to L, sum of the finite minima)`, ordered
/// lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub infinite_count: u64,
    pub finite_sum: u64,
}

/// Componentwise difference of two objective values, ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gain {
    pub infinite: i64,
    pub finite: i64,
}

impl ObjectiveValue {
    /// `self - after`: how much `after` improves on `self`.
    pub fn gain_to(self, after: ObjectiveValue) -> Gain {
        Gain {
            infinite: self.infinite_count as i64 - after.infinite_count as i64,
            finite: self.finite_sum as i64 - after.finite_sum as i64,
        }
    }

    /// Single number preserving the lexicographic order when `big` exceeds every finite sum.
    pub fn scalar(self, big: u64) -> u64 {
        self.infinite_count * big + self.finite_sum
    }
}

impl fmt::Display for ObjectiveValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.infinite_count, self.finite_sum)
    }
}

/// Every statement and branch-condition node of every graph.
pub fn all_nodes(cfgs: &[Cfg]) -> Vec<NodeRef> {
    cfgs.iter()
        .enumerate()
        .flat_map(|(ci, g)| g.executable_nodes().map(move |n| NodeRef::new(ci, n.id)))
        .collect()
}

fn distance(dt: &DistanceTable, a: NodeRef, b: NodeRef) -> Distance {
    if a.cfg == b.cfg {
        dt.get(a.cfg, a.node, b.node)
    } else {
        Distance::Infinite
    }
}

fn aggregate(best: impl Iterator<Item = Distance>) -> ObjectiveValue {
    let mut v = ObjectiveValue {
        infinite_count: 0,
        finite_sum: 0,
    };
    for d in best {
        match d {
            Distance::Finite(d) => v.finite_sum += u64::from(d),
            Distance::Infinite => v.infinite_count += 1,
        }
    }
    v
}

/// `O(L)` over `nodes`; the empty set scores `(|nodes|, 0)`.
pub fn objective(dt: &DistanceTable, nodes: &[NodeRef], locations: &[NodeRef]) -> ObjectiveValue {
    aggregate(nodes.iter().map(|&n| {
        locations
            .iter()
            .map(|&l| distance(dt, n, l))
            .min()
            .unwrap_or(Distance::Infinite)
    }))
}

/// Locations chosen by the greedy and the objective after each step (`objectives[0]` is
/// `O(∅)`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyTrajectory {
    pub locations: Vec<NodeRef>,
    pub objectives: Vec<ObjectiveValue>,
}

impl GreedyTrajectory {
    pub fn final_objective(&self) -> ObjectiveValue {
        *self.objectives.last().expect("trajectory starts at O(∅)")
    }

    /// Improvement made by each step.
    pub fn gains(&self) -> Vec<Gain> {
        self.objectives.windows(2).map(|w| w[0].gain_to(w[1])).collect()
    }
}

/// Adds, `kappa` times, the candidate that minimizes `O(L ∪ {l})`. Ties go to the smallest
/// `(owner, node id)`.
pub fn greedy_min_distance(
    dt: &DistanceTable,
    cfgs: &[Cfg],
    nodes: &[NodeRef],
    candidates: &[NodeRef],
    kappa: usize,
) -> GreedyTrajectory {
    let mut remaining: Vec<NodeRef> = candidates.to_vec();
    remaining.sort_by(|a, b| (&cfgs[a.cfg].owner, a.node).cmp(&(&cfgs[b.cfg].owner, b.node)));
    remaining.dedup();
    let mut best = vec![Distance::Infinite; nodes.len()];
    let mut trajectory = GreedyTrajectory {
        locations: Vec::new(),
        objectives: vec![aggregate(best.iter().copied())],
    };
    while trajectory.locations.len() < kappa && !remaining.is_empty() {
        let mut winner: Option<(ObjectiveValue, usize)> = None;
        for (i, &l) in remaining.iter().enumerate() {
            let v = aggregate(
                nodes
                    .iter()
                    .zip(&best)
                    .map(|(&n, &b)| b.min(distance(dt, n, l))),
            );
            if winner.is_none_or(|(w, _)| v < w) {
                winner = Some((v, i));
            }
        }
        let (v, i) = winner.expect("remaining is non-empty");
        let l = remaining.remove(i);
        for (b, &n) in best.iter_mut().zip(nodes) {
            *b = (*b).min(distance(dt, n, l));
        }
        trajectory.locations.push(l);
        trajectory.objectives.push(v);
    }
    trajectory
}

/// A triple `(L, L', x)` with `L ⊆ L'`, `x ∉ L'` where adding `x` to `L` gains less than adding
/// it to `L'`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub smaller: Vec<NodeRef>,
    pub larger: Vec<NodeRef>,
    pub added: NodeRef,
    pub smaller_gain: Gain,
    pub larger_gain: Gain,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmodularityReport {
    pub exhaustive: bool,
    pub checked: u64,
    pub violations: Vec<Violation>,
}

/// Largest ground set checked exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Checks diminishing returns of `-O` over subsets of `ground`: exhaustively when the ground set
/// is small, otherwise on `trials` random triples.
pub fn verify_submodularity(
    dt: &DistanceTable,
    nodes: &[NodeRef],
    ground: &[NodeRef],
    trials: usize,
    rng: &mut (impl Rng + ?Sized),
) -> SubmodularityReport {
    let k = ground.len();
    let pick = |mask: u64| -> Vec<NodeRef> {
        (0..k).filter(|i| mask >> i & 1 == 1).map(|i| ground[i]).collect()
    };
    let mut report = SubmodularityReport {
        exhaustive: k <= EXHAUSTIVE_LIMIT,
        ..Default::default()
    };
    let mut check = |small: u64, large: u64, x: usize, o: &dyn Fn(u64) -> ObjectiveValue| {
        let bit = 1u64 << x;
        let g_small = o(small).gain_to(o(small | bit));
        let g_large = o(large).gain_to(o(large | bit));
        report.checked += 1;
        if g_small < g_large {
            report.violations.push(Violation {
                smaller: pick(small),
                larger: pick(large),
                added: ground[x],
                smaller_gain: g_small,
                larger_gain: g_large,
            });
        }
    };
    if k <= EXHAUSTIVE_LIMIT {
        let table: Vec<ObjectiveValue> = (0..1u64 << k)
            .map(|mask| objective(dt, nodes, &pick(mask)))
            .collect();
        let o = |mask: u64| table[mask as usize];
        for large in 0..1u64 << k {
            let mut small = large;
            loop {
                for x in (0..k).filter(|x| large >> x & 1 == 0) {
                    check(small, large, x, &o);
                }
                if small == 0 {
                    break;
                }
                small = (small - 1) & large;
            }
        }
    } else {
        let o = |mask: u64| objective(dt, nodes, &pick(mask));
        let k = k.min(64);
        for _ in 0..trials {
            let x = rng.gen_range(0..k);
            let large = rng.gen::<u64>() & !(1u64 << x) & mask_of(k);
            let small = large & rng.gen::<u64>();
            check(small, large, x, &o);
        }
    }
    report
}

fn mask_of(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}
