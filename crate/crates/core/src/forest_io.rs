//! Plain-text forest snapshots.
//!
//! Each snapshot is a header record, one record per node, and an `end` line:
//!
//! ```text
//! forest chain=0 iteration=12 model=gaussian trees=2 features=3 sigma_mu=... split_probs=a;b;c nuisance=sigma:1.1
//! node tree=0 path=. kind=branch feature=x2 cutpoint=...
//! node tree=0 path=L kind=leaf value=...
//! ...
//! end
//! ```
//!
//! Records are whitespace-separated `key=value` fields; floats carry 17
//! significant digits so a round trip is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::data::fmt_f64;
use crate::error::{Error, Result};
use crate::family::LikelihoodFamily;
use crate::tree::{DecisionTree, Forest, Node, NodePath, SplitRule};
use crate::zoo::ModelSpec;

/// One saved posterior draw.
#[derive(Clone, Debug, PartialEq)]
pub struct ForestDraw {
    pub model: ModelSpec,
    pub chain: usize,
    pub iteration: usize,
    pub forest: Forest,
    pub nuisance: Vec<(String, f64)>,
}

impl ForestDraw {
    pub fn new(model: ModelSpec, chain: usize, iteration: usize, forest: Forest, family: &dyn LikelihoodFamily) -> Self {
        ForestDraw {
            model,
            chain,
            iteration,
            forest,
            nuisance: family.nuisance().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    /// The family of this draw, at its saved nuisance values.
    pub fn family(&self, fd_delta: f64) -> Result<Box<dyn LikelihoodFamily>> {
        let mut f = self.model.build(fd_delta);
        for (k, v) in &self.nuisance {
            f.set_nuisance(k, *v)?;
        }
        Ok(f)
    }
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(";")
}

pub fn write_forests<W: Write>(mut out: W, draws: &[ForestDraw]) -> Result<()> {
    for d in draws {
        let mut header = format!(
            "forest chain={} iteration={} model={}",
            d.chain,
            d.iteration,
            d.model.name()
        );
        for (k, v) in d.model.options() {
            let _ = write!(header, " {k}={v}");
        }
        let _ = write!(
            header,
            " trees={} features={} sigma_mu={} split_probs={}",
            d.forest.trees.len(),
            d.forest.num_features(),
            fmt_f64(d.forest.sigma_mu),
            join_f64(&d.forest.split_probs)
        );
        let nuisance: Vec<String> = d.nuisance.iter().map(|(k, v)| format!("{k}:{}", fmt_f64(*v))).collect();
        let _ = write!(header, " nuisance={}", nuisance.join(";"));
        writeln!(out, "{header}")?;
        for (t, tree) in d.forest.trees.iter().enumerate() {
            for (path, node) in tree.nodes() {
                match node {
                    Node::Branch(rule) => writeln!(
                        out,
                        "node tree={t} path={path} kind=branch feature=x{} cutpoint={}",
                        rule.feature + 1,
                        fmt_f64(rule.cutpoint)
                    )?,
                    Node::Leaf(v) => writeln!(out, "node tree={t} path={path} kind=leaf value={}", fmt_f64(*v))?,
                }
            }
        }
        writeln!(out, "end")?;
    }
    Ok(())
}

pub fn save_forests(path: &Path, draws: &[ForestDraw]) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_forests(file, draws)
}

pub fn load_forests(path: &Path) -> Result<Vec<ForestDraw>> {
    read_forests(&std::fs::read_to_string(path)?)
}

struct Fields<'a> {
    line: usize,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn parse(line: usize, tokens: impl Iterator<Item = &'a str>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for tok in tokens {
            let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected key=value, found '{tok}'"),
            })?;
            map.insert(k, v);
        }
        Ok(Fields { line, map })
    }

    fn err(&self, message: String) -> Error {
        Error::Parse { line: self.line, message }
    }

    fn get(&self, key: &str) -> Result<&'a str> {
        self.map.get(key).copied().ok_or_else(|| self.err(format!("missing field '{key}'")))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| self.err(format!("field '{key}' has invalid value '{raw}'")))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(';')
            .map(|v| v.parse().map_err(|_| self.err(format!("field '{key}' has invalid number '{v}'"))))
            .collect()
    }
}

struct Pending {
    draw: ForestDraw,
    nodes: Vec<BTreeMap<NodePath, Node>>,
}

/// Parses snapshots written by [`write_forests`].
pub fn read_forests(text: &str) -> Result<Vec<ForestDraw>> {
    let mut out = Vec::new();
    let mut pending: Option<Pending> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut tokens = raw.split_whitespace();
        let Some(kind) = tokens.next() else { continue };
        match kind {
            "forest" => {
                if pending.is_some() {
                    return Err(Error::Parse {
                        line,
                        message: "new forest before 'end'".into(),
                    });
                }
                let f = Fields::parse(line, tokens)?;
                let mut model: ModelSpec = f.get("model")?.parse().map_err(|e: Error| f.err(e.to_string()))?;
                for (key, _) in model.options() {
                    if let Ok(v) = f.get(key) {
                        model.set_option(key, v).map_err(|e| f.err(e.to_string()))?;
                    }
                }
                let trees: usize = f.num("trees")?;
                let features: usize = f.num("features")?;
                let split_probs = f.list("split_probs")?;
                if split_probs.len() != features {
                    return Err(f.err(format!("{} split probabilities for {features} features", split_probs.len())));
                }
                let mut nuisance = Vec::new();
                let raw_n = f.get("nuisance")?;
                for item in raw_n.split(';').filter(|s| !s.is_empty()) {
                    let (name, v) = item
                        .split_once(':')
                        .ok_or_else(|| f.err(format!("bad nuisance entry '{item}'")))?;
                    let v: f64 = v.parse().map_err(|_| f.err(format!("bad nuisance value '{v}'")))?;
                    nuisance.push((name.to_string(), v));
                }
                pending = Some(Pending {
                    draw: ForestDraw {
                        model,
                        chain: f.num("chain")?,
                        iteration: f.num("iteration")?,
                        forest: Forest {
                            trees: Vec::new(),
                            sigma_mu: f.num("sigma_mu")?,
                            split_probs,
                        },
                        nuisance,
                    },
                    nodes: vec![BTreeMap::new(); trees],
                });
            }
            "node" => {
                let p = pending.as_mut().ok_or_else(|| Error::Parse {
                    line,
                    message: "node record outside a forest".into(),
                })?;
                let f = Fields::parse(line, tokens)?;
                let t: usize = f.num("tree")?;
                let features = p.draw.forest.split_probs.len();
                let slot = p
                    .nodes
                    .get_mut(t)
                    .ok_or_else(|| f.err(format!("tree index {t} out of range")))?;
                let path: NodePath = f.get("path")?.parse().map_err(|e: Error| f.err(e.to_string()))?;
                let node = match f.get("kind")? {
                    "leaf" => Node::Leaf(f.num("value")?),
                    "branch" => {
                        let raw = f.get("feature")?;
                        let j = raw
                            .strip_prefix('x')
                            .and_then(|s| s.parse::<usize>().ok())
                            .filter(|&j| j >= 1 && j <= features)
                            .ok_or_else(|| f.err(format!("invalid feature '{raw}'")))?;
                        Node::Branch(SplitRule::new(j - 1, f.num("cutpoint")?))
                    }
                    other => return Err(f.err(format!("unknown node kind '{other}'"))),
                };
                if slot.insert(path, node).is_some() {
                    return Err(f.err(format!("duplicate node {path} in tree {t}")));
                }
            }
            "end" => {
                let p = pending.take().ok_or_else(|| Error::Parse {
                    line,
                    message: "'end' without a forest".into(),
                })?;
                let mut draw = p.draw;
                for (t, nodes) in p.nodes.into_iter().enumerate() {
                    let tree = DecisionTree::from_nodes(nodes).map_err(|e| Error::Parse {
                        line,
                        message: format!("tree {t}: {e}"),
                    })?;
                    draw.forest.trees.push(tree);
                }
                out.push(draw);
            }
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown record '{other}'"),
                })
            }
        }
    }
    if pending.is_some() {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: "file ends inside a forest".into(),
        });
    }
    Ok(out)
}

/// Checks that every draw was fit with `model`.
pub fn check_model(draws: &[ForestDraw], model: &ModelSpec) -> Result<()> {
    match draws.iter().find(|d| d.model != *model) {
        Some(d) => Err(Error::Validation(format!(
            "forest file was fit with model {}, expected {}",
            d.model.name(),
            model.name()
        ))),
        None => Ok(()),
    }
}
