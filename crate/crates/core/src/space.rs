//! The knowledge-space graph: a complete weighted graph over fields with
//! kd edge weights, its minimum-spanning-tree backbone, and augmentation
//! with the next-smallest edges until the graph reaches a target average
//! degree. Exports to edge CSV, GraphML, DOT, and JSON.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FieldId};
use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceNode {
    pub field: FieldId,
    pub name: String,
    /// Top-field key, used as the color class; the field itself when it
    /// is a top field.
    pub top: FieldId,
    /// Number of papers the field contains (up to the graph's year).
    pub paper_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceEdge<T> {
    /// Node indexes with `a < b`; node order follows the matrix field
    /// order, ascending by field id.
    pub a: usize,
    pub b: usize,
    pub weight: T,
    pub in_mst: bool,
    pub in_augmented: bool,
}

/// Weighted field graph with MST and augmentation flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGraph<T: Real = f64> {
    year: i32,
    nodes: Vec<SpaceNode>,
    edges: Vec<SpaceEdge<T>>,
}

impl<T: Real> SpaceGraph<T> {
    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn nodes(&self) -> &[SpaceNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[SpaceEdge<T>] {
        &self.edges
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn mst_edges(&self) -> impl Iterator<Item = &SpaceEdge<T>> {
        self.edges.iter().filter(|e| e.in_mst)
    }

    pub fn augmented_edges(&self) -> impl Iterator<Item = &SpaceEdge<T>> {
        self.edges.iter().filter(|e| e.in_augmented)
    }

    /// 2|E|/|V| over the augmented edge set.
    pub fn augmented_avg_degree(&self) -> f64 {
        2.0 * self.augmented_edges().count() as f64 / self.nodes.len() as f64
    }
}

/// Builds the complete weighted graph from a distance matrix. Unit-weight
/// edges (kd = 1) are retained, so the graph is always connected; pass
/// `drop_unit_edges` to explore without them.
pub fn build_space_graph<T: Real>(
    matrix: &DistanceMatrix<T>,
    corpus: &Corpus,
    drop_unit_edges: bool,
) -> Result<SpaceGraph<T>> {
    let fields = matrix.fields();
    if fields.len() < 2 {
        return Err(Error::InvalidInput(
            "a space graph needs at least 2 fields".into(),
        ));
    }
    let counts = corpus.field_paper_counts(fields, matrix.year())?;
    let ontology = corpus.ontology();
    let nodes = fields
        .iter()
        .zip(&counts)
        .map(|(&f, &paper_count)| {
            let node = ontology.get(f).expect("matrix fields exist in ontology");
            SpaceNode {
                field: f,
                name: node.name.clone(),
                top: ontology.top_of(f).unwrap(),
                paper_count,
            }
        })
        .collect();
    let mut graph = graph_from_matrix(matrix);
    if drop_unit_edges {
        graph.edges.retain(|e| e.weight < T::one());
    }
    graph.nodes = nodes;
    Ok(graph)
}

/// The bare weighted graph of a matrix, without corpus attributes (names
/// default to the field ids, sizes to zero). Useful when only the MST or
/// threshold structure matters.
pub fn graph_from_matrix<T: Real>(matrix: &DistanceMatrix<T>) -> SpaceGraph<T> {
    let fields = matrix.fields();
    let nodes = fields
        .iter()
        .map(|&f| SpaceNode {
            field: f,
            name: f.to_string(),
            top: f,
            paper_count: 0,
        })
        .collect();
    let n = fields.len();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push(SpaceEdge {
                a: i,
                b: j,
                weight: matrix.kd(i, j),
                in_mst: false,
                in_augmented: false,
            });
        }
    }
    SpaceGraph {
        year: matrix.year(),
        nodes,
        edges,
    }
}

/// Disjoint-set forest with path halving and union by rank.
pub(crate) struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grandparent = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grandparent;
            x = grandparent;
        }
        x
    }

    /// Returns false if the two were already connected.
    pub(crate) fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra as usize] >= self.rank[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo as usize] = hi;
        if self.rank[hi as usize] == self.rank[lo as usize] {
            self.rank[hi as usize] += 1;
        }
        true
    }
}

/// Deterministic edge order for Kruskal and augmentation: weight first,
/// ties by the `(a, b)` node pair (equivalently by field-id pair, since
/// nodes are in ascending field order).
fn edge_order<T: Real>(edges: &[SpaceEdge<T>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&x, &y| {
        let (ex, ey) = (&edges[x], &edges[y]);
        ex.weight
            .partial_cmp(&ey.weight)
            .expect("edge weights are never NaN")
            .then(ex.a.cmp(&ey.a))
            .then(ex.b.cmp(&ey.b))
    });
    order
}

/// Kruskal's algorithm with union-find. Returns the selected edge indexes
/// in ascending index order; on a disconnected graph this is a spanning
/// forest.
pub fn kruskal_mst<T: Real>(graph: &SpaceGraph<T>) -> Vec<usize> {
    let mut uf = UnionFind::new(graph.nodes.len());
    let mut mst = Vec::with_capacity(graph.nodes.len().saturating_sub(1));
    for idx in edge_order(&graph.edges) {
        let e = &graph.edges[idx];
        if uf.union(e.a as u32, e.b as u32) {
            mst.push(idx);
            if mst.len() + 1 == graph.nodes.len() {
                break;
            }
        }
    }
    mst.sort_unstable();
    mst
}

/// Starting from the MST, adds the remaining edges in ascending
/// (weight, pair) order until the average degree 2|E|/|V| reaches
/// `target_avg_degree` or the edges run out. Flags both edge sets on the
/// returned graph.
pub fn augment_to_degree<T: Real>(
    graph: &SpaceGraph<T>,
    mst: &[usize],
    target_avg_degree: f64,
) -> SpaceGraph<T> {
    let mut out = graph.clone();
    for &idx in mst {
        out.edges[idx].in_mst = true;
        out.edges[idx].in_augmented = true;
    }
    let n = out.nodes.len() as f64;
    let mut selected = mst.len();
    if 2.0 * selected as f64 / n < target_avg_degree {
        for idx in edge_order(&out.edges) {
            if out.edges[idx].in_augmented {
                continue;
            }
            out.edges[idx].in_augmented = true;
            selected += 1;
            if 2.0 * selected as f64 / n >= target_avg_degree {
                break;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeCsv,
    GraphMl,
    Dot,
    Json,
}

impl GraphFormat {
    pub fn parse(s: &str) -> Result<GraphFormat> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "edge-csv" | "csv" => GraphFormat::EdgeCsv,
            "graphml" => GraphFormat::GraphMl,
            "dot" => GraphFormat::Dot,
            "json" => GraphFormat::Json,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown graph format {other:?} (expected edge-csv, graphml, dot, or json)"
                )))
            }
        })
    }

    pub fn extension(self) -> &'static str {
        match self {
            GraphFormat::EdgeCsv => "csv",
            GraphFormat::GraphMl => "graphml",
            GraphFormat::Dot => "dot",
            GraphFormat::Json => "json",
        }
    }
}

/// Serializes the graph losslessly (nodes with id, name, top key, size;
/// edges with weight and both flags) in a stable order.
pub fn export_graph<T: Real, W: Write>(
    graph: &SpaceGraph<T>,
    format: GraphFormat,
    w: W,
) -> Result<()> {
    match format {
        GraphFormat::EdgeCsv => export_edge_csv(graph, w),
        GraphFormat::GraphMl => export_graphml(graph, w),
        GraphFormat::Dot => export_dot(graph, w),
        GraphFormat::Json => export_json(graph, w),
    }
}

fn io_err(source: std::io::Error) -> Error {
    Error::Io {
        path: "<graph export>".into(),
        source,
    }
}

fn export_edge_csv<T: Real, W: Write>(graph: &SpaceGraph<T>, mut w: W) -> Result<()> {
    writeln!(w, "field_a,field_b,weight,in_mst,in_augmented").map_err(io_err)?;
    for e in &graph.edges {
        writeln!(
            w,
            "{},{},{},{},{}",
            graph.nodes[e.a].field, graph.nodes[e.b].field, e.weight, e.in_mst, e.in_augmented
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn export_graphml<T: Real, W: Write>(graph: &SpaceGraph<T>, mut w: W) -> Result<()> {
    (|| -> std::io::Result<()> {
        writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
        writeln!(
            w,
            r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">"#
        )?;
        writeln!(
            w,
            r#"  <key id="d0" for="node" attr.name="name" attr.type="string"/>"#
        )?;
        writeln!(
            w,
            r#"  <key id="d1" for="node" attr.name="top" attr.type="long"/>"#
        )?;
        writeln!(
            w,
            r#"  <key id="d2" for="node" attr.name="size" attr.type="long"/>"#
        )?;
        writeln!(
            w,
            r#"  <key id="d3" for="edge" attr.name="weight" attr.type="double"/>"#
        )?;
        writeln!(
            w,
            r#"  <key id="d4" for="edge" attr.name="mst" attr.type="boolean"/>"#
        )?;
        writeln!(
            w,
            r#"  <key id="d5" for="edge" attr.name="augmented" attr.type="boolean"/>"#
        )?;
        writeln!(w, r#"  <graph id="knowledge-space" edgedefault="undirected">"#)?;
        for node in &graph.nodes {
            writeln!(w, r#"    <node id="f{}">"#, node.field)?;
            writeln!(w, r#"      <data key="d0">{}</data>"#, xml_escape(&node.name))?;
            writeln!(w, r#"      <data key="d1">{}</data>"#, node.top)?;
            writeln!(w, r#"      <data key="d2">{}</data>"#, node.paper_count)?;
            writeln!(w, r#"    </node>"#)?;
        }
        for (i, e) in graph.edges.iter().enumerate() {
            writeln!(
                w,
                r#"    <edge id="e{}" source="f{}" target="f{}">"#,
                i, graph.nodes[e.a].field, graph.nodes[e.b].field
            )?;
            writeln!(w, r#"      <data key="d3">{}</data>"#, e.weight)?;
            writeln!(w, r#"      <data key="d4">{}</data>"#, e.in_mst)?;
            writeln!(w, r#"      <data key="d5">{}</data>"#, e.in_augmented)?;
            writeln!(w, r#"    </edge>"#)?;
        }
        writeln!(w, "  </graph>")?;
        writeln!(w, "</graphml>")
    })()
    .map_err(io_err)
}

fn dot_quote(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn export_dot<T: Real, W: Write>(graph: &SpaceGraph<T>, mut w: W) -> Result<()> {
    // Stable palette index per top field for direct rendering.
    let mut tops: Vec<FieldId> = graph.nodes.iter().map(|n| n.top).collect();
    tops.sort_unstable();
    tops.dedup();
    let color_of = |top: FieldId| {
        let pos = tops.binary_search(&top).unwrap();
        format!("/paired12/{}", 1 + pos % 12)
    };
    (|| -> std::io::Result<()> {
        writeln!(w, "graph knowledge_space {{")?;
        writeln!(w, "  node [style=filled];")?;
        for node in &graph.nodes {
            writeln!(
                w,
                "  f{} [label=\"{}\", top={}, size={}, fillcolor=\"{}\"];",
                node.field,
                dot_quote(&node.name),
                node.top,
                node.paper_count,
                color_of(node.top)
            )?;
        }
        for e in &graph.edges {
            writeln!(
                w,
                "  f{} -- f{} [kd={}, mst={}, augmented={}];",
                graph.nodes[e.a].field,
                graph.nodes[e.b].field,
                e.weight,
                e.in_mst,
                e.in_augmented
            )?;
        }
        writeln!(w, "}}")
    })()
    .map_err(io_err)
}

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    year: i32,
    nodes: Vec<SpaceNode>,
    edges: Vec<JsonEdge>,
}

#[derive(Serialize, Deserialize)]
struct JsonEdge {
    a: FieldId,
    b: FieldId,
    weight: f64,
    in_mst: bool,
    in_augmented: bool,
}

fn export_json<T: Real, W: Write>(graph: &SpaceGraph<T>, w: W) -> Result<()> {
    let bridge = JsonGraph {
        year: graph.year,
        nodes: graph.nodes.clone(),
        edges: graph
            .edges
            .iter()
            .map(|e| JsonEdge {
                a: graph.nodes[e.a].field,
                b: graph.nodes[e.b].field,
                weight: e.weight.to_f64().unwrap(),
                in_mst: e.in_mst,
                in_augmented: e.in_augmented,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(w, &bridge)
        .map_err(|e| Error::InvalidInput(format!("graph JSON write failed: {e}")))
}

/// Parses a JSON export back; inverse of the JSON branch of
/// [`export_graph`].
pub fn parse_graph_json<T: Real, R: std::io::Read>(r: R) -> Result<SpaceGraph<T>> {
    let bridge: JsonGraph = serde_json::from_reader(r)
        .map_err(|e| Error::InvalidInput(format!("graph JSON parse failed: {e}")))?;
    let pos = |f: FieldId| -> Result<usize> {
        bridge
            .nodes
            .iter()
            .position(|n| n.field == f)
            .ok_or_else(|| Error::UnknownField(f.0))
    };
    let mut edges = Vec::with_capacity(bridge.edges.len());
    for e in &bridge.edges {
        edges.push(SpaceEdge {
            a: pos(e.a)?,
            b: pos(e.b)?,
            weight: T::from_f64(e.weight).unwrap(),
            in_mst: e.in_mst,
            in_augmented: e.in_augmented,
        });
    }
    Ok(SpaceGraph {
        year: bridge.year,
        nodes: bridge.nodes,
        edges,
    })
}
