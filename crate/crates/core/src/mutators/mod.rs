//! Mutant generation.
//!
//! Traditional operators (ROR, COR, AOR, ORU, LOR, SOR, STD, LVR) and the tailored ones
//! (VAR identifier replacement, MCR same-signature call replacement, NLR corpus-mined literal
//! replacement). Every mutant is a single rewrite of a token span and is anchored to the CFG
//! node whose span contains its anchor token.

mod nlr;
mod sites;
mod tailored;
mod traditional;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cfg::Cfg;
use crate::error::{Error, Result};
use crate::minilang::{tokenize, Span, TypedProgram};

pub use nlr::{build_trigram_index, canonicalize_numeric_literal, generate_nlr, CanonicalNumber, TrigramIndex};
pub use sites::GenContext;
pub use tailored::{generate_mcr, generate_var};
pub use traditional::generate_traditional;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operator {
    ROR,
    COR,
    AOR,
    ORU,
    LOR,
    SOR,
    STD,
    LVR,
    VAR,
    MCR,
    NLR,
}

impl Operator {
    pub const ALL: [Operator; 11] = [
        Operator::ROR,
        Operator::COR,
        Operator::AOR,
        Operator::ORU,
        Operator::LOR,
        Operator::SOR,
        Operator::STD,
        Operator::LVR,
        Operator::VAR,
        Operator::MCR,
        Operator::NLR,
    ];

    pub fn class(self) -> KindClass {
        match self {
            Operator::VAR | Operator::MCR | Operator::NLR => KindClass::Tailored,
            _ => KindClass::Traditional,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Operator::ROR => "ROR",
            Operator::COR => "COR",
            Operator::AOR => "AOR",
            Operator::ORU => "ORU",
            Operator::LOR => "LOR",
            Operator::SOR => "SOR",
            Operator::STD => "STD",
            Operator::LVR => "LVR",
            Operator::VAR => "VAR",
            Operator::MCR => "MCR",
            Operator::NLR => "NLR",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Operator::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown operator `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindClass {
    Traditional,
    Tailored,
}

impl KindClass {
    pub fn as_str(self) -> &'static str {
        match self {
            KindClass::Traditional => "traditional",
            KindClass::Tailored => "tailored",
        }
    }
}

/// Which operator families to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorSet {
    Traditional,
    Tailored,
    All,
}

impl OperatorSet {
    pub fn includes(self, class: KindClass) -> bool {
        match self {
            OperatorSet::All => true,
            OperatorSet::Traditional => class == KindClass::Traditional,
            OperatorSet::Tailored => class == KindClass::Tailored,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorSet::Traditional => "traditional",
            OperatorSet::Tailored => "tailored",
            OperatorSet::All => "all",
        }
    }
}

impl FromStr for OperatorSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "traditional" | "trad" => Ok(OperatorSet::Traditional),
            "tailored" => Ok(OperatorSet::Tailored),
            "all" => Ok(OperatorSet::All),
            _ => Err(Error::InvalidParameter(format!("unknown operator set `{s}`"))),
        }
    }
}

/// Stable mutant identifier `<operator>:<token-index>:<replacement-hash>`.
///
/// Ordering is structural: operator, then anchor token, then hash.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct MutantId {
    pub operator: Operator,
    pub token: usize,
    pub hash: String,
}

impl MutantId {
    pub fn new(operator: Operator, token: usize, replacement: &str) -> Self {
        let digest = Sha256::digest(replacement.as_bytes());
        let hash = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
        MutantId {
            operator,
            token,
            hash,
        }
    }
}

impl fmt::Display for MutantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.operator, self.token, self.hash)
    }
}

impl FromStr for MutantId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("malformed mutant id `{s}`"));
        let mut parts = s.splitn(3, ':');
        let operator = parts.next().ok_or_else(bad)?.parse()?;
        let token = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let hash = parts.next().ok_or_else(bad)?.to_string();
        Ok(MutantId {
            operator,
            token,
            hash,
        })
    }
}

impl From<MutantId> for String {
    fn from(id: MutantId) -> String {
        id.to_string()
    }
}

impl TryFrom<String> for MutantId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A CFG node identified by owner name; ordered by `(owner, node)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub owner: String,
    pub node: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.owner, self.node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    pub id: MutantId,
    pub operator: Operator,
    pub kind_class: KindClass,
    pub cfg_owner: String,
    pub cfg_node: usize,
    /// Anchor token of the rewrite.
    pub token_index: usize,
    /// Tokens replaced by `replacement`.
    pub span: Span,
    pub original: String,
    pub replacement: String,
    pub line: usize,
    pub col: usize,
}

impl Mutant {
    pub fn location(&self) -> Location {
        Location {
            owner: self.cfg_owner.clone(),
            node: self.cfg_node,
        }
    }

    pub fn is_traditional(&self) -> bool {
        self.kind_class == KindClass::Traditional
    }
}

/// All mutants of a program (or a scope of it) with lookup indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MutantPool {
    mutants: Vec<Mutant>,
    by_location: BTreeMap<Location, Vec<usize>>,
    by_operator: BTreeMap<Operator, Vec<usize>>,
}

impl MutantPool {
    /// Builds a pool, dropping later mutants that rewrite the same span to the same text.
    pub fn new(mutants: impl IntoIterator<Item = Mutant>) -> Self {
        let mut seen = HashSet::new();
        let mut pool = MutantPool::default();
        for m in mutants {
            if !seen.insert((m.span, m.replacement.clone())) {
                continue;
            }
            let i = pool.mutants.len();
            pool.by_location.entry(m.location()).or_default().push(i);
            pool.by_operator.entry(m.operator).or_default().push(i);
            pool.mutants.push(m);
        }
        pool
    }

    pub fn len(&self) -> usize {
        self.mutants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mutants.is_empty()
    }

    pub fn mutants(&self) -> &[Mutant] {
        &self.mutants
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Mutant> {
        self.mutants.iter()
    }

    pub fn get(&self, id: &MutantId) -> Option<&Mutant> {
        self.mutants.iter().find(|m| &m.id == id)
    }

    pub fn locations(&self) -> impl Iterator<Item = &Location> {
        self.by_location.keys()
    }

    pub fn at_location(&self, loc: &Location) -> Vec<&Mutant> {
        self.by_location
            .get(loc)
            .map(|ix| ix.iter().map(|&i| &self.mutants[i]).collect())
            .unwrap_or_default()
    }

    pub fn with_operator(&self, op: Operator) -> Vec<&Mutant> {
        self.by_operator
            .get(&op)
            .map(|ix| ix.iter().map(|&i| &self.mutants[i]).collect())
            .unwrap_or_default()
    }

    pub fn filter(&self, mut keep: impl FnMut(&Mutant) -> bool) -> MutantPool {
        MutantPool::new(self.mutants.iter().filter(|m| keep(m)).cloned())
    }

    /// Counts per operator, in [`Operator::ALL`] order.
    pub fn operator_counts(&self) -> Vec<(Operator, usize)> {
        Operator::ALL
            .iter()
            .map(|&op| (op, self.by_operator.get(&op).map_or(0, |v| v.len())))
            .collect()
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for m in &self.mutants {
            out.push_str(&serde_json::to_string(m)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses JSON lines; lines that are not mutant records (such as a metadata header with a
    /// `"kind"` field) are skipped.
    pub fn from_json_lines(text: &str) -> Result<MutantPool> {
        let mut mutants = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let value: serde_json::Value = serde_json::from_str(line)?;
            if value.get("kind").is_some() {
                continue;
            }
            mutants.push(serde_json::from_value(value)?);
        }
        Ok(MutantPool::new(mutants))
    }
}

impl<'a> IntoIterator for &'a MutantPool {
    type Item = &'a Mutant;
    type IntoIter = std::slice::Iter<'a, Mutant>;

    fn into_iter(self) -> Self::IntoIter {
        self.mutants.iter()
    }
}

/// Splices the mutant into `source`. Fails when the source no longer has the mutant's
/// original text at its span.
pub fn apply_mutant(source: &str, mutant: &Mutant) -> Result<String> {
    let tokens = tokenize(source)?;
    let stale = |found: String| Error::StaleMutant {
        id: mutant.id.to_string(),
        token: mutant.span.first,
        expected: mutant.original.clone(),
        found,
    };
    if mutant.span.last >= tokens.len() || mutant.span.first > mutant.span.last {
        return Err(stale("<out of range>".into()));
    }
    let start = tokens.tokens[mutant.span.first].offset;
    let end = tokens.tokens[mutant.span.last].end();
    if source[start..end] != mutant.original {
        return Err(stale(source[start..end].to_string()));
    }
    let mut out = String::with_capacity(source.len() + mutant.replacement.len());
    out.push_str(&source[..start]);
    out.push_str(&mutant.replacement);
    out.push_str(&source[end..]);
    Ok(out)
}

/// Applies and re-checks a mutant.
pub fn compile_mutant(program: &TypedProgram, mutant: &Mutant) -> Result<TypedProgram> {
    TypedProgram::compile(&apply_mutant(&program.source, mutant)?)
}

/// Runs the generators selected by `set` and assembles the pool (traditional mutants first).
pub fn generate_pool(
    program: &TypedProgram,
    cfgs: &[Cfg],
    index: &TrigramIndex,
    set: OperatorSet,
) -> MutantPool {
    let ctx = GenContext::new(program, cfgs);
    let mut all = Vec::new();
    if set.includes(KindClass::Traditional) {
        all.extend(generate_traditional(&ctx));
    }
    if set.includes(KindClass::Tailored) {
        all.extend(generate_var(&ctx));
        all.extend(generate_mcr(&ctx));
        all.extend(generate_nlr(&ctx, index));
    }
    MutantPool::new(all)
}
