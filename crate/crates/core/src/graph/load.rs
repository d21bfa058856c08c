use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::Deserialize;

use super::{Edge, PlainGraph, Split};
use crate::error::{Error, Result};

/// On-disk graph layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    /// Directory with `edges.txt` (`src dst [weight]`), `features.csv`
    /// (one row per node) and `labels.csv` (`class[,split]`).
    EdgeList,
    /// One JSON object with `num_nodes`, `edges`, `features`, `labels` and
    /// optional `split` / `num_classes`.
    Json,
    /// Citation-dataset layout: `<name>.content` (`id feat… label`) and
    /// `<name>.cites` (`cited citing`).
    Citation,
}

impl GraphFormat {
    pub fn detect(path: &Path) -> Result<GraphFormat> {
        if path.is_dir() {
            if path.join("edges.txt").exists() {
                return Ok(GraphFormat::EdgeList);
            }
            if citation_stem(path).is_some() {
                return Ok(GraphFormat::Citation);
            }
            return Err(Error::Parameter(format!(
                "{} holds neither edges.txt nor a *.content/*.cites pair",
                path.display()
            )));
        }
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(GraphFormat::Json),
            _ => Err(Error::Parameter(format!("cannot infer the graph format of {}", path.display()))),
        }
    }
}

/// Loads and validates a graph.
pub fn load_graph(path: &Path, format: GraphFormat) -> Result<PlainGraph> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| Error::Parameter(format!("cannot read {}: {e}", p.display())))
    };
    match format {
        GraphFormat::EdgeList => {
            let labels = path.join("labels.csv");
            let labels = if labels.exists() { Some(read(&labels)?) } else { None };
            parse_edge_list(&read(&path.join("edges.txt"))?, &read(&path.join("features.csv"))?, labels.as_deref())
        }
        GraphFormat::Json => parse_json(&read(path)?).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse { file: path.display().to_string(), line, msg },
            e => e,
        }),
        GraphFormat::Citation => load_citation(path),
    }
}

fn perr(file: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { file: file.into(), line, msg: msg.into() }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty())
}

/// Parses the three text files of the edge-list layout. The node count is
/// the number of feature rows. Without a labels file every node gets class 0
/// in the training split.
pub fn parse_edge_list(edges: &str, features: &str, labels: Option<&str>) -> Result<PlainGraph> {
    let mut feats = Vec::new();
    let mut dim = None;
    let mut n = 0;
    for (i, line) in features.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = fields(line)
            .map(|s| s.parse::<f64>().map_err(|e| perr("features.csv", i + 1, format!("{s:?}: {e}"))))
            .collect::<Result<_>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(perr("features.csv", i + 1, format!("row has {} values, expected {d}", row.len())))
            }
            _ => {}
        }
        feats.extend(row);
        n += 1;
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (ln, line) in data_lines(edges) {
        let f: Vec<&str> = fields(line).collect();
        if !(2..=3).contains(&f.len()) {
            return Err(perr("edges.txt", ln, "expected `src dst [weight]`"));
        }
        let id = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| perr("edges.txt", ln, format!("malformed node id {s:?}")))?;
            if v >= n {
                return Err(perr("edges.txt", ln, format!("node id {v} ≥ N = {n}")));
            }
            Ok(v)
        };
        let (src, dst) = (id(f[0])?, id(f[1])?);
        let weight = match f.get(2) {
            Some(w) => w.parse::<f64>().map_err(|e| perr("edges.txt", ln, format!("weight {w:?}: {e}")))?,
            None => 1.0,
        };
        if src == dst {
            return Err(perr("edges.txt", ln, format!("self-loop on node {src}")));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(perr("edges.txt", ln, format!("edge weight {weight} must be positive")));
        }
        if !seen.insert((src.min(dst), src.max(dst))) {
            return Err(perr("edges.txt", ln, format!("duplicate edge ({src}, {dst})")));
        }
        out.push(Edge { src, dst, weight });
    }
    let (lab, split) = match labels {
        Some(text) => {
            let mut lab = Vec::with_capacity(n);
            let mut split = Vec::with_capacity(n);
            for (ln, line) in data_lines(text) {
                let f: Vec<&str> = fields(line).collect();
                if f.is_empty() || f.len() > 2 {
                    return Err(perr("labels.csv", ln, "expected `class[,split]`"));
                }
                lab.push(
                    f[0].parse::<usize>().map_err(|_| perr("labels.csv", ln, format!("malformed class {:?}", f[0])))?,
                );
                split.push(match f.get(1) {
                    Some(s) => s.parse::<Split>().map_err(|e| perr("labels.csv", ln, e))?,
                    None => Split::Train,
                });
            }
            if lab.len() != n {
                return Err(perr("labels.csv", text.lines().count(), format!("{} labels for {n} nodes", lab.len())));
            }
            (lab, split)
        }
        None => (vec![0; n], vec![Split::Train; n]),
    };
    let g = PlainGraph {
        num_nodes: n,
        edges: out,
        feature_dim: dim.unwrap_or(0),
        features: feats,
        num_classes: lab.iter().max().map_or(1, |m| m + 1),
        labels: lab,
        split,
    };
    g.validate()?;
    Ok(g)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Bundle {
    num_nodes: usize,
    edges: Vec<Vec<f64>>,
    features: Vec<Vec<f64>>,
    #[serde(default)]
    labels: Option<Vec<usize>>,
    #[serde(default)]
    split: Option<Vec<Split>>,
    #[serde(default)]
    num_classes: Option<usize>,
}

/// Parses the JSON bundle layout. Validation errors report the 1-based
/// index of the offending edge or node as the line.
pub fn parse_json(text: &str) -> Result<PlainGraph> {
    let b: Bundle = serde_json::from_str(text).map_err(|e| perr("bundle", e.line(), e.to_string()))?;
    let n = b.num_nodes;
    let mut edges = Vec::with_capacity(b.edges.len());
    for (i, e) in b.edges.iter().enumerate() {
        let as_id = |v: f64| -> Result<usize> {
            if v.fract() != 0.0 || v < 0.0 {
                return Err(perr("bundle", i + 1, format!("edge #{}: malformed node id {v}", i + 1)));
            }
            Ok(v as usize)
        };
        match e.as_slice() {
            [s, d] => edges.push(Edge { src: as_id(*s)?, dst: as_id(*d)?, weight: 1.0 }),
            [s, d, w] => edges.push(Edge { src: as_id(*s)?, dst: as_id(*d)?, weight: *w }),
            _ => {
                return Err(perr("bundle", i + 1, format!("edge #{} must be [src, dst] or [src, dst, weight]", i + 1)))
            }
        }
    }
    if b.features.len() != n {
        return Err(Error::Shape(format!("{} feature rows for {n} nodes", b.features.len())));
    }
    let dim = b.features.first().map_or(0, Vec::len);
    if let Some(v) = b.features.iter().position(|r| r.len() != dim) {
        return Err(perr(
            "bundle",
            v + 1,
            format!("feature row {v} has {} values, expected {dim}", b.features[v].len()),
        ));
    }
    let labels = b.labels.unwrap_or_else(|| vec![0; n]);
    let num_classes = b.num_classes.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    let g = PlainGraph {
        num_nodes: n,
        edges,
        feature_dim: dim,
        features: b.features.concat(),
        split: b.split.unwrap_or_else(|| vec![Split::Train; n]),
        labels,
        num_classes,
    };
    g.validate()?;
    Ok(g)
}

fn citation_stem(dir: &Path) -> Option<String> {
    std::fs::read_dir(dir).ok()?.flatten().find_map(|e| {
        let p = e.path();
        (p.extension()? == "content")
            .then(|| p.file_stem()?.to_str().map(String::from))
            .flatten()
            .filter(|s| dir.join(format!("{s}.cites")).exists())
    })
}

/// Loads the citation-dataset layout. Citations to unknown papers, self
/// citations and reversed duplicates are dropped; every node is a training
/// node.
pub fn load_citation(dir: &Path) -> Result<PlainGraph> {
    let stem = citation_stem(dir)
        .ok_or_else(|| Error::Parameter(format!("no *.content/*.cites pair in {}", dir.display())))?;
    let content_name = format!("{stem}.content");
    let cites_name = format!("{stem}.cites");
    let content = std::fs::read_to_string(dir.join(&content_name))?;
    let cites = std::fs::read_to_string(dir.join(&cites_name))?;
    let mut index = HashMap::new();
    let mut classes = BTreeMap::new();
    let mut feats = Vec::new();
    let mut raw_labels = Vec::new();
    let mut dim = None;
    for (ln, line) in data_lines(&content) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 2 {
            return Err(perr(&content_name, ln, "expected `id features… label`"));
        }
        let row: Vec<f64> = f[1..f.len() - 1]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| perr(&content_name, ln, format!("{s:?}: {e}"))))
            .collect::<Result<_>>()?;
        if *dim.get_or_insert(row.len()) != row.len() {
            return Err(perr(&content_name, ln, "feature dimension changes"));
        }
        if index.insert(f[0].to_string(), index.len()).is_some() {
            return Err(perr(&content_name, ln, format!("duplicate paper id {}", f[0])));
        }
        feats.extend(row);
        let next = classes.len();
        raw_labels.push(*classes.entry(f[f.len() - 1].to_string()).or_insert(next));
    }
    let n = index.len();
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for (ln, line) in data_lines(&cites) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 {
            return Err(perr(&cites_name, ln, "expected `cited citing`"));
        }
        let (Some(&a), Some(&b)) = (index.get(f[0]), index.get(f[1])) else { continue };
        if a != b && seen.insert((a.min(b), a.max(b))) {
            edges.push(Edge { src: a, dst: b, weight: 1.0 });
        }
    }
    let g = PlainGraph {
        num_nodes: n,
        edges,
        feature_dim: dim.unwrap_or(0),
        features: feats,
        labels: raw_labels,
        split: vec![Split::Train; n],
        num_classes: classes.len().max(1),
    };
    g.validate()?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip() {
        let g = parse_edge_list("# c\n0 1\n1 2 0.5\n", "1,0\n0,1\n1,1\n", Some("0\n1,test\n1,val\n")).unwrap();
        assert_eq!(g.num_nodes, 3);
        assert_eq!(g.edges[1], Edge { src: 1, dst: 2, weight: 0.5 });
        assert_eq!(g.split, vec![Split::Train, Split::Test, Split::Val]);
        assert_eq!(g.num_classes, 2);
    }

    #[test]
    fn edge_list_errors_carry_lines() {
        let e = parse_edge_list("0 1\n\n1 3\n", "1\n1\n1\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_edge_list("0 0\n", "1\n1\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_edge_list("0 x\n", "1\n1\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_edge_list("", "1,2\n1\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_edge_list("0 1\n1 0\n", "1\n1\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn json_bundle() {
        let g = parse_json(r#"{"num_nodes":2,"edges":[[0,1,2.0]],"features":[[1],[2]],"labels":[1,0]}"#).unwrap();
        assert_eq!(g.edges[0].weight, 2.0);
        assert_eq!(g.num_classes, 2);
        let e = parse_json(r#"{"num_nodes":2,"edges":[[0,1],[0,2]],"features":[[1],[2]]}"#).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_json("{\n\"num_nodes\": 2,\n\"edges\": [[0,1]],\n\"features\": oops}").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }), "{e}");
    }
}
