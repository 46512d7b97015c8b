//! Immutable undirected simple graphs in compressed sparse row form.
//!
//! Node ids are dense (`0..n`). When a graph is ingested from an edge list
//! with arbitrary ids, the original id of every dense node is kept so results
//! can be reported in the caller's id space.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub type NodeId = usize;

const CACHE_MAGIC: &[u8; 8] = b"TKWGRPH1";

/// An undirected graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    degrees: Vec<u32>,
    original_ids: Vec<u64>,
    m_edges: usize,
}

/// A node together with its degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DegreeRecord {
    pub node: NodeId,
    pub degree: usize,
}

/// How [`Graph::exact_top_k_with`] finds the largest degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TopKMethod {
    /// Bounded heap of size `k`, `O(n log k)`.
    #[default]
    Select,
    /// Sort every node, `O(n log n)`. Kept for benchmark comparisons.
    FullSort,
}

/// Ranking key shared by every top-k structure: larger degree first, then
/// lower id. Comparing keys with `>` means "ranks higher".
#[inline]
pub(crate) fn rank_key(degree: u32, node: NodeId) -> (u32, Reverse<NodeId>) {
    (degree, Reverse(node))
}

impl Graph {
    /// Builds a graph on nodes `0..n` from undirected edges. Self-loops are
    /// dropped and repeated edges collapsed.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("{n} nodes exceed the u32 id space")));
        }
        let mut arcs = Vec::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::NodeOutOfRange { node: x, n });
                }
            }
            if u != v {
                arcs.push((u as u32, v as u32));
                arcs.push((v as u32, u as u32));
            }
        }
        Ok(Self::from_arcs(n, arcs, (0..n as u64).collect()))
    }

    /// `arcs` must already contain both orientations of every edge.
    fn from_arcs(n: usize, mut arcs: Vec<(u32, u32)>, original_ids: Vec<u64>) -> Self {
        arcs.sort_unstable();
        arcs.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in &arcs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let degrees = offsets.windows(2).map(|w| (w[1] - w[0]) as u32).collect();
        let neighbors: Vec<u32> = arcs.into_iter().map(|(_, v)| v).collect();
        let m_edges = neighbors.len() / 2;
        Graph { offsets, neighbors, degrees, original_ids, m_edges }
    }

    /// Reads a whitespace-separated edge list, one `u v` pair per line.
    /// Lines starting with `#` and blank lines are ignored. Ids are remapped
    /// densely in ascending order of the original ids.
    ///
    /// Every line is treated as an undirected edge. With `symmetrize` set the
    /// lines are read as directed arcs and their reverses are added, which
    /// yields the same undirected graph; the flag exists so that directed
    /// inputs can be declared as such.
    pub fn ingest_edge_list<R: BufRead>(reader: R, symmetrize: bool) -> Result<Self> {
        let _ = symmetrize;
        let mut raw: Vec<(u64, u64)> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<u64> {
                let tok = tok.ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: "expected two node ids".into(),
                })?;
                tok.parse::<u64>().map_err(|e| Error::Parse {
                    line: line_no,
                    msg: format!("bad node id {tok:?}: {e}"),
                })
            };
            let u = parse(tokens.next())?;
            let v = parse(tokens.next())?;
            if tokens.next().is_some() {
                return Err(Error::Parse { line: line_no, msg: "more than two fields".into() });
            }
            raw.push((u, v));
        }
        if raw.is_empty() {
            return Err(Error::EmptyInput);
        }

        let mut ids: Vec<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter("too many distinct node ids".into()));
        }
        let dense = |x: u64| ids.binary_search(&x).expect("id collected above") as u32;
        let mut arcs = Vec::with_capacity(raw.len() * 2);
        for (u, v) in raw {
            if u != v {
                let (du, dv) = (dense(u), dense(v));
                arcs.push((du, dv));
                arcs.push((dv, du));
            }
        }
        let n = ids.len();
        Ok(Self::from_arcs(n, arcs, ids))
    }

    pub fn ingest_str(text: &str, symmetrize: bool) -> Result<Self> {
        Self::ingest_edge_list(text.as_bytes(), symmetrize)
    }

    /// Loads a graph from disk, accepting either the binary cache format or an
    /// edge list.
    pub fn load(path: impl AsRef<Path>, symmetrize: bool) -> Result<Self> {
        let mut reader = BufReader::new(File::open(path)?);
        let head = reader.fill_buf()?;
        if head.starts_with(CACHE_MAGIC) {
            Self::read_binary(reader)
        } else {
            Self::ingest_edge_list(reader, symmetrize)
        }
    }

    /// Writes every edge once as `u v` using original ids. Isolated nodes are
    /// written as `u u` so that re-ingesting keeps them.
    pub fn write_edge_list<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        for u in 0..self.n() {
            if self.degrees[u] == 0 {
                writeln!(w, "{0} {0}", self.original_ids[u])?;
            }
            for &v in self.neighbors(u) {
                if (v as usize) > u {
                    writeln!(w, "{} {}", self.original_ids[u], self.original_ids[v as usize])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_edge_list_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("edge list is ASCII")
    }

    /// Binary cache: magic, `n`, neighbor count, original ids, offsets and
    /// neighbors, all little endian.
    pub fn write_binary<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&(self.neighbors.len() as u64).to_le_bytes())?;
        for &id in &self.original_ids {
            w.write_all(&id.to_le_bytes())?;
        }
        for &o in &self.offsets {
            w.write_all(&(o as u64).to_le_bytes())?;
        }
        for &v in &self.neighbors {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self> {
        let bad = |msg: &str| Error::BadCache(msg.to_string());
        let mut magic = [0u8; 8];
        reader.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(bad("wrong magic"));
        }
        let read_u64 = |r: &mut R| -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let n = read_u64(&mut reader)? as usize;
        let len = read_u64(&mut reader)? as usize;
        if n > u32::MAX as usize || !len.is_multiple_of(2) {
            return Err(bad("inconsistent header"));
        }
        let original_ids = (0..n).map(|_| read_u64(&mut reader)).collect::<Result<Vec<_>>>()?;
        let offsets = (0..=n)
            .map(|_| read_u64(&mut reader).map(|x| x as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut neighbors = Vec::with_capacity(len);
        let mut b = [0u8; 4];
        for _ in 0..len {
            reader.read_exact(&mut b)?;
            neighbors.push(u32::from_le_bytes(b));
        }
        if offsets[0] != 0 || offsets[n] != len || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("offsets are not monotone"));
        }
        let degrees = offsets.windows(2).map(|w| (w[1] - w[0]) as u32).collect();
        let g = Graph { offsets, neighbors, degrees, original_ids, m_edges: len / 2 };
        g.check_invariants().map_err(Error::BadCache)?;
        Ok(g)
    }

    /// Verifies sortedness, absence of self-loops, symmetry and the handshake
    /// identity.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.n();
        let mut degree_sum = 0usize;
        for u in 0..n {
            let adj = self.neighbors(u);
            degree_sum += adj.len();
            if adj.len() != self.degrees[u] as usize {
                return Err(format!("degree of {u} disagrees with offsets"));
            }
            for w in adj.windows(2) {
                if w[0] >= w[1] {
                    return Err(format!("adjacency of {u} not strictly increasing"));
                }
            }
            for &v in adj {
                let v = v as usize;
                if v >= n {
                    return Err(format!("neighbor {v} of {u} out of range"));
                }
                if v == u {
                    return Err(format!("self-loop at {u}"));
                }
                if self.neighbors(v).binary_search(&(u as u32)).is_err() {
                    return Err(format!("edge {u}-{v} is not symmetric"));
                }
            }
        }
        if degree_sum != 2 * self.m_edges {
            return Err("degree sum differs from 2|E|".into());
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Number of undirected edges, `|E|`.
    #[inline]
    pub fn m_edges(&self) -> usize {
        self.m_edges
    }

    pub fn average_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            2.0 * self.m_edges as f64 / self.n() as f64
        }
    }

    pub fn degree(&self, node: NodeId) -> Result<usize> {
        self.degrees
            .get(node)
            .map(|&d| d as usize)
            .ok_or(Error::NodeOutOfRange { node, n: self.n() })
    }

    #[inline]
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Sorted neighbors of `node`. Panics if `node` is out of range.
    #[inline]
    pub fn neighbors(&self, node: NodeId) -> &[u32] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    #[inline]
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.n() && v < self.n() && self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn original_id(&self, node: NodeId) -> u64 {
        self.original_ids[node]
    }

    pub fn original_ids(&self) -> &[u64] {
        &self.original_ids
    }

    /// Dense id of an original id, if present.
    pub fn dense_id(&self, original: u64) -> Option<NodeId> {
        // Ids from ingestion are sorted; generated graphs use the identity map.
        self.original_ids.binary_search(&original).ok()
    }

    /// Highest-degree node under the (-degree, id) order.
    pub fn max_degree_node(&self) -> Option<DegreeRecord> {
        self.exact_top_k(1).ok().and_then(|v| v.into_iter().next())
    }

    /// The `k` largest-degree nodes, ordered by decreasing degree with ties
    /// broken by ascending id.
    pub fn exact_top_k(&self, k: usize) -> Result<Vec<DegreeRecord>> {
        self.exact_top_k_with(k, TopKMethod::Select)
    }

    pub fn exact_top_k_with(&self, k: usize, method: TopKMethod) -> Result<Vec<DegreeRecord>> {
        let n = self.n();
        if k == 0 || k > n {
            return Err(Error::InvalidK { k, n });
        }
        let mut nodes: Vec<NodeId> = match method {
            TopKMethod::FullSort => {
                let mut all: Vec<NodeId> = (0..n).collect();
                all.sort_unstable_by_key(|&i| Reverse(rank_key(self.degrees[i], i)));
                all.truncate(k);
                all
            }
            TopKMethod::Select => {
                // Min-heap on rank: the root is the worst of the current k.
                let mut heap = BinaryHeap::with_capacity(k + 1);
                for i in 0..n {
                    let key = rank_key(self.degrees[i], i);
                    if heap.len() < k {
                        heap.push(Reverse(key));
                    } else if key > heap.peek().expect("heap is full").0 {
                        heap.pop();
                        heap.push(Reverse(key));
                    }
                }
                heap.into_iter().map(|Reverse((_, Reverse(i)))| i).collect()
            }
        };
        nodes.sort_unstable_by_key(|&i| Reverse(rank_key(self.degrees[i], i)));
        Ok(nodes
            .into_iter()
            .map(|node| DegreeRecord { node, degree: self.degrees[node] as usize })
            .collect())
    }

    /// Nodes reachable from `source` along graph edges (jumps excluded).
    pub fn component_of(&self, source: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        let mut stack = vec![source];
        seen[source] = true;
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                let v = v as usize;
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.n() == 0 || self.component_of(0).into_iter().all(|s| s)
    }
}
