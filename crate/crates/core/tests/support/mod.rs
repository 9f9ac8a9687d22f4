//! Random well-typed MiniLang programs and fixture paths shared by the integration tests.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn corpus_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixtures().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "mini"))
        .collect();
    files.sort();
    files
}

pub fn cfg_fixtures() -> Vec<(String, String)> {
    ["chain3", "chain5", "diamond", "loop", "nested_if", "two_functions"]
        .iter()
        .map(|n| {
            let path = fixtures().join("cfgs").join(format!("{n}.mini"));
            (n.to_string(), std::fs::read_to_string(path).unwrap())
        })
        .collect()
}

/// Every `.mini` file under the fixture tree.
pub fn all_fixture_sources() -> Vec<(PathBuf, String)> {
    fn walk(dir: PathBuf, out: &mut Vec<(PathBuf, String)>) {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(p, out);
            } else if p.extension().is_some_and(|e| e == "mini") {
                let text = std::fs::read_to_string(&p).unwrap();
                out.push((p, text));
            }
        }
    }
    let mut out = Vec::new();
    walk(fixtures(), &mut out);
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Ty {
    Int,
    Float,
    Bool,
    Str,
}

const TYPES: [Ty; 4] = [Ty::Int, Ty::Float, Ty::Bool, Ty::Str];

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Int => "int",
            Ty::Float => "float",
            Ty::Bool => "bool",
            Ty::Str => "string",
        }
    }
}

struct Func {
    name: String,
    params: Vec<Ty>,
    ret: Option<Ty>,
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    next: usize,
    funcs: Vec<Func>,
    /// Visible variables, innermost scope last.
    scopes: Vec<Vec<(String, Ty)>>,
    /// Return type of the function being generated.
    current_ret: Option<Ty>,
    out: String,
}

impl<R: Rng> Gen<'_, R> {
    fn fresh(&mut self, prefix: &str) -> String {
        self.next += 1;
        format!("{prefix}{}", self.next)
    }

    fn vars_of(&self, ty: Ty) -> Vec<String> {
        self.scopes
            .iter()
            .flatten()
            .filter(|(_, t)| *t == ty)
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn literal(&mut self, ty: Ty) -> String {
        match ty {
            Ty::Int => self.rng.gen_range(0..20).to_string(),
            Ty::Float => format!("{}.{}", self.rng.gen_range(0..10), self.rng.gen_range(0..10)),
            Ty::Bool => ["true", "false"].choose(self.rng).unwrap().to_string(),
            Ty::Str => ["\"\"", "\"a\"", "\"xy\"", "\"[\""].choose(self.rng).unwrap().to_string(),
        }
    }

    fn expr(&mut self, ty: Ty, depth: usize) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.3);
        if leaf {
            let vars = self.vars_of(ty);
            if !vars.is_empty() && self.rng.gen_bool(0.6) {
                return vars.choose(self.rng).unwrap().clone();
            }
            return self.literal(ty);
        }
        let d = depth - 1;
        let callable: Vec<usize> = (0..self.funcs.len()).filter(|&i| self.funcs[i].ret == Some(ty)).collect();
        if !callable.is_empty() && self.rng.gen_bool(0.15) {
            let f = *callable.choose(self.rng).unwrap();
            return self.call(f, d);
        }
        match ty {
            Ty::Int => match self.rng.gen_range(0..4) {
                0 => format!("-({})", self.expr(ty, d)),
                1 => format!("({})", self.expr(ty, d)),
                _ => {
                    let op = ["+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>"].choose(self.rng).unwrap();
                    format!("({} {op} {})", self.expr(ty, d), self.expr(ty, d))
                }
            },
            Ty::Float => match self.rng.gen_range(0..4) {
                0 => format!("-({})", self.expr(ty, d)),
                1 => format!("({})", self.expr(ty, d)),
                _ => {
                    let op = ["+", "-", "*", "/", "%"].choose(self.rng).unwrap();
                    format!("({} {op} {})", self.expr(ty, d), self.expr(ty, d))
                }
            },
            Ty::Bool => match self.rng.gen_range(0..5) {
                0 => format!("!({})", self.expr(ty, d)),
                1 => {
                    let op = ["&&", "||", "==", "!=", "^"].choose(self.rng).unwrap();
                    format!("({}) {op} ({})", self.expr(ty, d), self.expr(ty, d))
                }
                2 => format!("({} == {})", self.expr(Ty::Str, d), self.expr(Ty::Str, d)),
                _ => {
                    let t = *[Ty::Int, Ty::Float].choose(self.rng).unwrap();
                    let op = ["<", "<=", ">", ">=", "==", "!="].choose(self.rng).unwrap();
                    format!("({} {op} {})", self.expr(t, d), self.expr(t, d))
                }
            },
            Ty::Str => format!("({} + {})", self.expr(ty, d), self.expr(ty, d)),
        }
    }

    fn call(&mut self, f: usize, depth: usize) -> String {
        let params = self.funcs[f].params.clone();
        let args: Vec<String> = params.iter().map(|&t| self.expr(t, depth)).collect();
        format!("{}({})", self.funcs[f].name, args.join(", "))
    }

    fn line(&mut self, indent: usize, text: &str) {
        writeln!(self.out, "{}{text}", "  ".repeat(indent)).unwrap();
    }

    /// A nested block. An early return is allowed only where it cannot make the statements
    /// after the enclosing `if` unreachable.
    fn block(&mut self, indent: usize, depth: usize, may_return: bool) {
        self.scopes.push(Vec::new());
        let n = self.rng.gen_range(1..4);
        for _ in 0..n {
            self.stmt(indent, depth);
        }
        if let (Some(t), true) = (self.current_ret, may_return) {
            if self.rng.gen_bool(0.2) {
                let e = self.expr(t, 2);
                self.line(indent, &format!("return {e};"));
            }
        }
        self.scopes.pop();
    }

    fn stmt(&mut self, indent: usize, depth: usize) {
        match self.rng.gen_range(0..6) {
            0 | 1 => {
                let t = *TYPES.choose(self.rng).unwrap();
                let e = self.expr(t, 2);
                let name = self.fresh("v");
                self.line(indent, &format!("var {name}: {} = {e};", t.name()));
                self.scopes.last_mut().unwrap().push((name, t));
            }
            2 => {
                let t = *TYPES.choose(self.rng).unwrap();
                let vars = self.vars_of(t);
                if let Some(v) = vars.choose(self.rng).cloned() {
                    let e = self.expr(t, 2);
                    self.line(indent, &format!("{v} = {e};"));
                }
            }
            3 if depth > 0 => {
                let c = self.expr(Ty::Bool, 2);
                self.line(indent, &format!("if ({c}) {{"));
                self.block(indent + 1, depth - 1, true);
                if self.rng.gen_bool(0.5) {
                    self.line(indent, "} else {");
                    self.block(indent + 1, depth - 1, false);
                }
                self.line(indent, "}");
            }
            4 if depth > 0 => {
                let c = self.expr(Ty::Bool, 1);
                self.line(indent, &format!("while ({c}) {{"));
                self.block(indent + 1, depth - 1, true);
                self.line(indent, "}");
            }
            _ => {
                if !self.funcs.is_empty() {
                    let f = self.rng.gen_range(0..self.funcs.len());
                    let c = self.call(f, 1);
                    self.line(indent, &format!("{c};"));
                }
            }
        }
    }
}

/// A random program that type-checks: globals, then functions that call only earlier ones.
/// Every name is fresh, so nothing shadows.
pub fn random_program(rng: &mut impl Rng) -> String {
    let mut g = Gen {
        rng,
        next: 0,
        funcs: Vec::new(),
        scopes: vec![Vec::new()],
        out: String::new(),
        current_ret: None,
    };
    for _ in 0..g.rng.gen_range(0..3) {
        let t = *TYPES.choose(g.rng).unwrap();
        let e = g.expr(t, 1);
        let name = g.fresh("g");
        g.line(0, &format!("var {name}: {} = {e};", t.name()));
        g.scopes[0].push((name, t));
    }
    let nfuncs = g.rng.gen_range(1..5);
    for i in 0..nfuncs {
        // repeat the previous signature now and then so MCR has something to swap
        let (params, ret) = match g.funcs.last() {
            Some(f) if g.rng.gen_bool(0.4) => (f.params.clone(), f.ret),
            _ => {
                let params: Vec<Ty> = (0..g.rng.gen_range(0..4)).map(|_| *TYPES.choose(g.rng).unwrap()).collect();
                let ret = if g.rng.gen_bool(0.85) { Some(*TYPES.choose(g.rng).unwrap()) } else { None };
                (params, ret)
            }
        };
        let name = format!("f{i}");
        let named: Vec<(String, Ty)> = params.iter().map(|&t| (g.fresh("p"), t)).collect();
        let sig: Vec<String> = named.iter().map(|(n, t)| format!("{n}: {}", t.name())).collect();
        let arrow = ret.map(|t| format!(" -> {}", t.name())).unwrap_or_default();
        g.line(0, &format!("fn {name}({}){arrow} {{", sig.join(", ")));
        g.scopes.push(named);
        g.current_ret = ret;
        g.scopes.push(Vec::new());
        for _ in 0..g.rng.gen_range(1..5) {
            g.stmt(1, 2);
        }
        if let Some(t) = ret {
            let e = g.expr(t, 2);
            g.line(1, &format!("return {e};"));
        }
        g.scopes.pop();
        g.scopes.pop();
        g.current_ret = None;
        g.line(0, "}");
        g.funcs.push(Func { name, params, ret });
    }
    g.out
}
