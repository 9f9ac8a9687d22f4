//! Statement-level control flow graphs and the symmetric-min node distance.
//!
//! Every function gets one graph; globals with initializers share one extra graph named
//! [`INIT_OWNER`] that chains them in declaration order. Nodes are single statements or branch
//! conditions. Synthetic entry/exit nodes keep the graphs well formed but never host mutants
//! and are left out of the selection objective.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minilang::check::{TStmt, TStmtKind, TypedProgram};
use crate::minilang::Span;

pub const INIT_OWNER: &str = "<init>";
pub const ENTRY: usize = 0;
pub const EXIT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Entry,
    Exit,
    Statement,
    BranchCondition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfgNode {
    pub id: usize,
    pub kind: NodeKind,
    /// `None` for entry and exit.
    pub span: Option<Span>,
    pub line: usize,
}

impl CfgNode {
    pub fn is_executable(&self) -> bool {
        matches!(self.kind, NodeKind::Statement | NodeKind::BranchCondition)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cfg {
    pub owner: String,
    pub nodes: Vec<CfgNode>,
    pub edges: Vec<(usize, usize)>,
}

impl Cfg {
    fn new(owner: &str) -> Self {
        Cfg {
            owner: owner.to_string(),
            nodes: vec![
                CfgNode {
                    id: ENTRY,
                    kind: NodeKind::Entry,
                    span: None,
                    line: 0,
                },
                CfgNode {
                    id: EXIT,
                    kind: NodeKind::Exit,
                    span: None,
                    line: 0,
                },
            ],
            edges: Vec::new(),
        }
    }

    /// Builds a graph from explicit nodes and edges; `executable` nodes get ids `2..`.
    pub fn from_edges(owner: &str, executable: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Cfg::new(owner);
        for i in 0..executable {
            g.nodes.push(CfgNode {
                id: i + 2,
                kind: NodeKind::Statement,
                span: None,
                line: 0,
            });
        }
        g.edges = edges.to_vec();
        g
    }

    pub fn successors(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == id).map(|e| e.1)
    }

    pub fn executable_nodes(&self) -> impl Iterator<Item = &CfgNode> {
        self.nodes.iter().filter(|n| n.is_executable())
    }

    fn add_node(&mut self, kind: NodeKind, span: Span, program: &TypedProgram) -> usize {
        let id = self.nodes.len();
        self.nodes.push(CfgNode {
            id,
            kind,
            span: Some(span),
            line: program.tokens.tokens[span.first].line,
        });
        id
    }

    fn link(&mut self, preds: &[usize], to: usize) {
        for &p in preds {
            if !self.edges.contains(&(p, to)) {
                self.edges.push((p, to));
            }
        }
    }

    fn lower_block(&mut self, stmts: &[TStmt], preds: Vec<usize>, p: &TypedProgram) -> Vec<usize> {
        stmts
            .iter()
            .fold(preds, |preds, s| self.lower_stmt(s, preds, p))
    }

    /// Adds the nodes of `stmt` and returns the nodes that fall through to what follows.
    fn lower_stmt(&mut self, stmt: &TStmt, preds: Vec<usize>, p: &TypedProgram) -> Vec<usize> {
        match &stmt.kind {
            TStmtKind::Decl { .. } | TStmtKind::Assign { .. } | TStmtKind::Expr(_) => {
                let n = self.add_node(NodeKind::Statement, stmt.span, p);
                self.link(&preds, n);
                vec![n]
            }
            TStmtKind::Return(_) => {
                let n = self.add_node(NodeKind::Statement, stmt.span, p);
                self.link(&preds, n);
                self.link(&[n], EXIT);
                Vec::new()
            }
            TStmtKind::If { cond, then, els } => {
                let c = self.add_node(NodeKind::BranchCondition, cond.span, p);
                self.link(&preds, c);
                let mut out = self.lower_block(then, vec![c], p);
                let else_out = match els {
                    Some(els) => self.lower_block(els, vec![c], p),
                    None => vec![c],
                };
                for n in else_out {
                    if !out.contains(&n) {
                        out.push(n);
                    }
                }
                out
            }
            TStmtKind::While { cond, body } => {
                let c = self.add_node(NodeKind::BranchCondition, cond.span, p);
                self.link(&preds, c);
                let body_out = self.lower_block(body, vec![c], p);
                self.link(&body_out, c);
                vec![c]
            }
            TStmtKind::Block(b) => self.lower_block(b, preds, p),
        }
    }

    /// Graphviz rendering; node labels carry the id and the source excerpt.
    pub fn to_dot(&self, program: &TypedProgram) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape_dot(&self.owner));
        for n in &self.nodes {
            let label = match (n.kind, n.span) {
                (NodeKind::Entry, _) => "entry".to_string(),
                (NodeKind::Exit, _) => "exit".to_string(),
                (_, Some(s)) => {
                    let text = program.tokens.text(&program.source, s.first, s.last);
                    format!("{}: {}", n.id, text.split_whitespace().collect::<Vec<_>>().join(" "))
                }
                (_, None) => n.id.to_string(),
            };
            let shape = match n.kind {
                NodeKind::BranchCondition => "diamond",
                NodeKind::Entry | NodeKind::Exit => "ellipse",
                NodeKind::Statement => "box",
            };
            let _ = writeln!(
                out,
                "  n{} [label=\"{}\", shape={}];",
                n.id,
                escape_dot(&label),
                shape
            );
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  n{a} -> n{b};");
        }
        out.push_str("}\n");
        out
    }
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// One graph per function, plus [`INIT_OWNER`] when some global has an initializer.
pub fn build_cfg(program: &TypedProgram) -> Vec<Cfg> {
    let mut cfgs = Vec::with_capacity(program.functions.len() + 1);
    for f in &program.functions {
        let mut g = Cfg::new(&f.name);
        let out = g.lower_block(&f.body, vec![ENTRY], program);
        g.link(&out, EXIT);
        cfgs.push(g);
    }
    if program.globals.iter().any(|g| g.init.is_some()) {
        let mut g = Cfg::new(INIT_OWNER);
        let mut preds = vec![ENTRY];
        for global in program.globals.iter().filter(|g| g.init.is_some()) {
            let n = g.add_node(NodeKind::Statement, global.span, program);
            g.link(&preds, n);
            preds = vec![n];
        }
        g.link(&preds, EXIT);
        cfgs.push(g);
    }
    cfgs
}

/// Identifies a node across all graphs of a program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRef {
    pub cfg: usize,
    pub node: usize,
}

impl NodeRef {
    pub fn new(cfg: usize, node: usize) -> Self {
        NodeRef { cfg, node }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.cfg, self.node)
    }
}

/// Path length in edges, or no path at all. `Finite(_) < Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Distance {
    Finite(u32),
    Infinite,
}

impl Distance {
    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => f.write_str("inf"),
        }
    }
}

/// All-pairs symmetric-min distances, one square matrix per graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTable {
    matrices: Vec<Vec<Vec<Distance>>>,
}

impl DistanceTable {
    pub fn cfg_count(&self) -> usize {
        self.matrices.len()
    }

    pub fn node_count(&self, cfg: usize) -> usize {
        self.matrices.get(cfg).map_or(0, |m| m.len())
    }

    /// `min(shortest s->t, shortest t->s)`; infinite across graphs.
    pub fn node_distance(&self, s: NodeRef, t: NodeRef) -> Result<Distance> {
        for r in [s, t] {
            if r.node >= self.node_count(r.cfg) {
                return Err(Error::UnknownNode(r.to_string()));
            }
        }
        if s.cfg != t.cfg {
            return Ok(Distance::Infinite);
        }
        Ok(self.matrices[s.cfg][s.node][t.node])
    }

    /// Unchecked lookup within one graph.
    pub fn get(&self, cfg: usize, s: usize, t: usize) -> Distance {
        self.matrices[cfg][s][t]
    }
}

fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<Distance> {
    let mut dist = vec![Distance::Infinite; adj.len()];
    dist[source] = Distance::Finite(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let Distance::Finite(du) = dist[u] else {
            unreachable!()
        };
        for &v in &adj[u] {
            if dist[v] == Distance::Infinite {
                dist[v] = Distance::Finite(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Breadth-first search from every node over the graph and its reverse, then pointwise min.
pub fn all_distances(cfgs: &[Cfg]) -> DistanceTable {
    let matrices = cfgs
        .iter()
        .map(|g| {
            let n = g.nodes.len();
            let mut fwd = vec![Vec::new(); n];
            let mut rev = vec![Vec::new(); n];
            for &(a, b) in &g.edges {
                fwd[a].push(b);
                rev[b].push(a);
            }
            (0..n)
                .map(|s| {
                    let out = bfs(&fwd, s);
                    let back = bfs(&rev, s);
                    out.into_iter().zip(back).map(|(a, b)| a.min(b)).collect()
                })
                .collect()
        })
        .collect();
    DistanceTable { matrices }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Distance::*;

    fn build(src: &str) -> (TypedProgram, Vec<Cfg>) {
        let p = TypedProgram::compile(src).unwrap();
        let cfgs = build_cfg(&p);
        (p, cfgs)
    }

    fn node_text(p: &TypedProgram, g: &Cfg, id: usize) -> String {
        let s = g.nodes[id].span.unwrap();
        p.tokens.text(&p.source, s.first, s.last)
    }

    #[test]
    fn straight_line() {
        let (_, cfgs) = build("fn f() -> int { return 1; }");
        assert_eq!(cfgs.len(), 1);
        assert_eq!(cfgs[0].nodes.len(), 3);
        assert_eq!(cfgs[0].edges, vec![(ENTRY, 2), (2, EXIT)]);
    }

    const DIAMOND: &str =
        "fn f(x: int) -> int { var y: int = 0; if (x > 0) { y = 2 * x; } else { x = -x / 2; } return x; }";

    #[test]
    fn diamond_shape() {
        let (p, cfgs) = build("fn f(x: int) -> int { if (x > 0) { x = 2 * x; } else { x = -x / 2; } return x; }");
        let g = &cfgs[0];
        let texts: Vec<String> = (2..g.nodes.len()).map(|i| node_text(&p, g, i)).collect();
        assert_eq!(texts, ["x > 0", "x = 2 * x;", "x = -x / 2;", "return x;"]);
        assert_eq!(g.nodes[2].kind, NodeKind::BranchCondition);
        assert_eq!(g.successors(2).count(), 2);
        let mut edges = g.edges.clone();
        edges.sort();
        assert_eq!(edges, vec![(0, 2), (2, 3), (2, 4), (3, 5), (4, 5), (5, 1)]);
    }

    #[test]
    fn while_has_back_edge() {
        let (_, cfgs) = build("fn f(n: int) -> int { var i: int = 0; while (i < n) { i = i + 1; } return i; }");
        let g = &cfgs[0];
        // decl=2, cond=3, body=4, return=5
        assert!(g.edges.contains(&(4, 3)));
        assert_eq!(g.successors(3).collect::<Vec<_>>(), vec![4, 5]);
    }

    #[test]
    fn init_graph_chains_initialized_globals() {
        let (_, cfgs) = build("var a: int = 1;\nvar b: int;\nvar c: int = a + 1;\nfn f() {}");
        assert_eq!(cfgs.len(), 2);
        let init = &cfgs[1];
        assert_eq!(init.owner, INIT_OWNER);
        assert_eq!(init.executable_nodes().count(), 2);
        assert_eq!(init.edges, vec![(ENTRY, 2), (2, 3), (3, EXIT)]);
        let (_, none) = build("var a: int;\nfn f() {}");
        assert_eq!(none.len(), 1);
    }

    #[test]
    fn every_node_reachable_from_entry() {
        let (_, cfgs) = build(DIAMOND);
        let dt = all_distances(&cfgs);
        let g = &cfgs[0];
        for n in &g.nodes {
            if n.id != ENTRY {
                let fwd = bfs(
                    &{
                        let mut adj = vec![Vec::new(); g.nodes.len()];
                        for &(a, b) in &g.edges {
                            adj[a].push(b);
                        }
                        adj
                    },
                    ENTRY,
                );
                assert!(fwd[n.id].is_finite(), "node {} unreachable", n.id);
            }
        }
        assert_eq!(dt.get(0, 0, 0), Finite(0));
    }

    #[test]
    fn distances_on_diamond() {
        let (_, cfgs) = build("fn f(x: int) -> int { if (x > 0) { x = 2 * x; } else { x = -x / 2; } return x; }");
        let dt = all_distances(&cfgs);
        let d = |a, b| dt.node_distance(NodeRef::new(0, a), NodeRef::new(0, b)).unwrap();
        assert_eq!(d(3, 3), Finite(0));
        assert_eq!(d(3, 4), Infinite);
        assert_eq!(d(2, 3), Finite(1));
        assert_eq!(d(2, 4), Finite(1));
        assert_eq!(d(2, 5), Finite(2));
        assert_eq!(d(5, 2), Finite(2));
        assert_eq!(d(3, 5), Finite(1));
    }

    #[test]
    fn chain_distance() {
        let g = Cfg::from_edges("c", 3, &[(0, 2), (2, 3), (3, 4), (4, 1)]);
        let dt = all_distances(&[g]);
        assert_eq!(dt.get(0, 2, 4), Finite(2));
        assert_eq!(dt.get(0, 4, 2), Finite(2));
    }

    #[test]
    fn cross_graph_is_infinite_and_unknown_nodes_error() {
        let (_, cfgs) = build("fn f() -> int { return 1; }\nfn g() -> int { return 2; }");
        let dt = all_distances(&cfgs);
        assert_eq!(
            dt.node_distance(NodeRef::new(0, 2), NodeRef::new(1, 2)).unwrap(),
            Infinite
        );
        assert!(dt.node_distance(NodeRef::new(0, 9), NodeRef::new(0, 2)).is_err());
        assert!(dt.node_distance(NodeRef::new(5, 0), NodeRef::new(0, 2)).is_err());
    }

    #[test]
    fn single_node_table() {
        let g = Cfg::from_edges("one", 1, &[(0, 2), (2, 1)]);
        let dt = all_distances(&[g]);
        assert_eq!(dt.get(0, 2, 2), Finite(0));
    }

    #[test]
    fn dot_dump_mentions_every_node() {
        let (p, cfgs) = build(DIAMOND);
        let dot = cfgs[0].to_dot(&p);
        assert!(dot.starts_with("digraph \"f\""));
        assert!(dot.contains("x > 0"));
        assert_eq!(dot.matches("->").count(), cfgs[0].edges.len());
    }
}
