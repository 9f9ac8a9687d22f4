//! Interpolated n-gram model over token lexemes and the naturalness score of a replacement.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minilang::TokenStream;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";
pub const DEFAULT_ORDER: usize = 3;
const FORMAT: &str = "tailmut-ngram";
const FORMAT_VERSION: u32 = 1;

/// Upper end of the scoring window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowBound {
    /// Positions `l..=l+n`.
    #[default]
    Inclusive,
    /// Positions `l..=l+n-1`, the last ones whose context can contain `l`.
    Conventional,
}

impl FromStr for WindowBound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inclusive" => Ok(WindowBound::Inclusive),
            "conventional" => Ok(WindowBound::Conventional),
            _ => Err(Error::InvalidParameter(format!("unknown window bound `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct ContextCounts {
    total: u64,
    next: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    /// `weights[0]` is the uniform floor, `weights[k]` the order-k component.
    weights: Vec<f64>,
    vocab: BTreeSet<String>,
    /// `tables[k - 1]` maps a `(k-1)`-token context to continuation counts.
    tables: Vec<BTreeMap<Vec<String>, ContextCounts>>,
}

/// A context and its continuation counts, as stored on disk.
type ContextRow = (Vec<String>, Vec<(String, u64)>);

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    order: usize,
    weights: Vec<f64>,
    vocab: Vec<String>,
    tables: Vec<Vec<ContextRow>>,
}

/// Weights for orders `n..1` of 0.5, 0.3, 0.15 then halving, plus a 0.05 floor, normalized.
/// Returned floor first, then orders 1..n.
pub fn default_weights(n: usize) -> Vec<f64> {
    let mut by_order_desc = Vec::with_capacity(n);
    let mut w = 0.5;
    for k in 0..n {
        by_order_desc.push(w);
        w = match k {
            0 => 0.3,
            1 => 0.15,
            _ => w / 2.0,
        };
    }
    let mut weights = vec![0.05];
    weights.extend(by_order_desc.into_iter().rev());
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n + 1 {
        return Err(Error::InvalidParameter(format!(
            "order {n} needs {} interpolation weights, got {}",
            n + 1,
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights[0] <= 0.0 {
        return Err(Error::InvalidParameter(
            "weights must be non-negative with a positive floor".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

impl NgramModel {
    pub fn train(streams: &[&TokenStream], n: usize) -> Result<Self> {
        let lexemes: Vec<Vec<String>> = streams.iter().map(|s| s.lexemes()).collect();
        Self::train_lexemes(&lexemes, n)
    }

    /// Trains on raw lexeme sequences. Each stream is padded with `n - 1` start symbols and
    /// closed by one end symbol.
    pub fn train_lexemes(streams: &[Vec<String>], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("model order must be at least 1".into()));
        }
        if streams.iter().all(|s| s.is_empty()) {
            return Err(Error::EmptyCorpus);
        }
        let mut model = NgramModel {
            order: n,
            weights: default_weights(n),
            vocab: BTreeSet::from([EOS.to_string()]),
            tables: vec![BTreeMap::new(); n],
        };
        for stream in streams.iter().filter(|s| !s.is_empty()) {
            let padded = model.pad(stream.iter().map(String::as_str));
            for i in n - 1..padded.len() {
                model.observe(&padded[..i], padded[i]);
            }
        }
        Ok(model)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, self.order)?;
        self.weights = weights;
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of predictable symbols: corpus lexemes, the end symbol and UNK.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len() + 1
    }

    /// Every predictable symbol, UNK included.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str).chain(std::iter::once(UNK))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.contains(token)
    }

    fn pad<'a>(&self, tokens: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
        let mut padded = vec![BOS; self.order - 1];
        padded.extend(tokens);
        padded.push(EOS);
        padded
    }

    fn known<'a>(&self, token: &'a str) -> &'a str {
        if token == BOS || self.vocab.contains(token) {
            token
        } else {
            UNK
        }
    }

    /// Counts one more occurrence of `token` after `context` at every order.
    pub fn observe(&mut self, context: &[&str], token: &str) {
        self.vocab.insert(token.to_string());
        for k in 1..=self.order {
            let ctx = self.context_key(context, k - 1, |t| t);
            let c = self.tables[k - 1].entry(ctx).or_default();
            c.total += 1;
            *c.next.entry(token.to_string()).or_default() += 1;
        }
    }

    /// The last `len` tokens of `context`, left-padded with start symbols.
    fn context_key(&self, context: &[&str], len: usize, map: impl Fn(&str) -> &str) -> Vec<String> {
        let take = len.min(context.len());
        let mut key: Vec<String> = vec![BOS.to_string(); len - take];
        key.extend(context[context.len() - take..].iter().map(|t| map(t).to_string()));
        key
    }

    /// Interpolated `P(token | context)`; only the last `n - 1` context tokens matter and
    /// unknown lexemes map to UNK.
    pub fn prob(&self, token: &str, context: &[&str]) -> f64 {
        let token = self.known(token);
        let uniform = 1.0 / self.vocab_size() as f64;
        let mut p = self.weights[0] * uniform;
        for k in 1..=self.order {
            let key = self.context_key(context, k - 1, |t| self.known(t));
            let w = self.weights[k];
            match self.tables[k - 1].get(&key) {
                Some(c) if c.total > 0 => {
                    let hits = c.next.get(token).copied().unwrap_or(0);
                    p += w * hits as f64 / c.total as f64;
                }
                _ => p += w * uniform,
            }
        }
        p
    }

    /// `log10 P` of a whole sequence, end symbol included.
    pub fn sequence_log_prob(&self, tokens: &[&str]) -> f64 {
        let padded = self.pad(tokens.iter().copied());
        (self.order - 1..padded.len())
            .map(|i| self.prob(padded[i], &padded[..i]).log10())
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            order: self.order,
            weights: self.weights.clone(),
            vocab: self.vocab.iter().cloned().collect(),
            tables: self
                .tables
                .iter()
                .map(|t| {
                    t.iter()
                        .map(|(ctx, c)| {
                            (ctx.clone(), c.next.iter().map(|(k, v)| (k.clone(), *v)).collect())
                        })
                        .collect()
                })
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != FORMAT || file.version != FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        if file.order == 0 || file.tables.len() != file.order {
            return Err(Error::InvalidParameter("model file order mismatch".into()));
        }
        check_weights(&file.weights, file.order)?;
        let tables = file
            .tables
            .into_iter()
            .map(|t| {
                t.into_iter()
                    .map(|(ctx, next)| {
                        let next: BTreeMap<String, u64> = next.into_iter().collect();
                        let total = next.values().sum();
                        (ctx, ContextCounts { total, next })
                    })
                    .collect()
            })
            .collect();
        Ok(NgramModel {
            order: file.order,
            weights: file.weights,
            vocab: file.vocab.into_iter().collect(),
            tables,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// `S(t, l)`: log10 ratio of the mutated to the original probability over the positions whose
/// prediction can change, clamped at the end symbol.
pub fn score_mutant(model: &NgramModel, tokens: &[&str], l: usize, t: &str) -> f64 {
    score_mutant_with(model, tokens, l, t, WindowBound::Inclusive)
}

pub fn score_mutant_with(
    model: &NgramModel,
    tokens: &[&str],
    l: usize,
    t: &str,
    bound: WindowBound,
) -> f64 {
    assert!(l < tokens.len(), "location {l} outside a stream of {} tokens", tokens.len());
    let original = model.pad(tokens.iter().copied());
    let mut mutated = original.clone();
    let pad = model.order - 1;
    mutated[pad + l] = t;
    let span = match bound {
        WindowBound::Inclusive => model.order,
        WindowBound::Conventional => model.order - 1,
    };
    let last = (pad + l + span).min(original.len() - 1);
    (pad + l..=last)
        .map(|i| {
            model.prob(mutated[i], &mutated[..i]).log10() - model.prob(original[i], &original[..i]).log10()
        })
        .sum()
}
