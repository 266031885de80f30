//! Pairwise audience overlap.
//!
//! The overlap of two sites is the largest product of edge weights over any
//! path joining them in the symmetrized network. Every weight lies in (0, 1],
//! so extending a path never increases its product and a best-first search
//! (Dijkstra under `-ln w`) is exact. The search never revisits a node, so
//! reported paths are simple.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::WebsiteNetwork;

/// Undirected view of a network: `w(i, j) = max(alpha(i->j), alpha(j->i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl SymmetricGraph {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Neighbours of node `i` with their weights, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Weight of the undirected edge `{i, j}`, if any.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.adjacency[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .ok()
            .map(|pos| self.adjacency[i][pos].1)
    }

    fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::UnknownNode(id.to_string()))
    }
}

/// Collapses directed edges into undirected ones, keeping the larger weight
/// of the two directions.
///
/// # Panics
///
/// If an edge weight lies outside (0, 1]. Networks built through
/// [`WebsiteNetwork::new`] or the file parser never contain one.
pub fn symmetrize(net: &WebsiteNetwork) -> SymmetricGraph {
    let ids: Vec<String> = net.nodes().iter().map(|n| n.id.clone()).collect();
    let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    let mut weights: HashMap<(usize, usize), f64> = HashMap::new();
    for edge in net.edges() {
        assert!(
            edge.alpha > 0.0 && edge.alpha <= 1.0,
            "edge {}->{} has weight {} outside (0, 1]",
            edge.src,
            edge.dst,
            edge.alpha
        );
        let (Some(&a), Some(&b)) = (index.get(&edge.src), index.get(&edge.dst)) else {
            continue;
        };
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        let w = weights.entry(key).or_insert(0.0);
        *w = w.max(edge.alpha);
    }
    let mut adjacency = vec![Vec::new(); ids.len()];
    for (&(a, b), &w) in &weights {
        adjacency[a].push((b, w));
        adjacency[b].push((a, w));
    }
    for list in &mut adjacency {
        list.sort_by_key(|&(k, _)| k);
    }
    SymmetricGraph {
        ids,
        index,
        adjacency,
    }
}

/// Best overlap between two sites and one path attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub overlap: f64,
    pub path: Vec<String>,
}

#[derive(Debug, Clone)]
struct Label {
    product: f64,
    path: Vec<usize>,
}

impl Label {
    // Higher product first, then fewer hops, then the smaller id sequence.
    // Node indices follow id order, so comparing indices compares ids.
    fn better_than(&self, other: &Label) -> bool {
        match self.product.total_cmp(&other.product) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => (self.path.len(), &self.path) < (other.path.len(), &other.path),
        }
    }
}

/// Maximum-product path between `from` and `to`.
///
/// `from == to` gives overlap 1 with the one-node path; disconnected sites
/// give overlap 0 and an empty path. Ties between equally good paths go to
/// the one with fewer hops, then to the smaller id sequence.
pub fn max_product_path(g: &SymmetricGraph, from: &str, to: &str) -> Result<PathResult> {
    let source = g.require(from)?;
    let target = g.require(to)?;
    let n = g.len();
    let mut labels: Vec<Option<Label>> = vec![None; n];
    let mut done = vec![false; n];
    labels[source] = Some(Label {
        product: 1.0,
        path: vec![source],
    });

    loop {
        let mut best: Option<usize> = None;
        for v in 0..n {
            if done[v] {
                continue;
            }
            if let Some(label) = &labels[v] {
                if best.is_none_or(|b| label.better_than(labels[b].as_ref().unwrap())) {
                    best = Some(v);
                }
            }
        }
        let Some(u) = best else {
            return Ok(PathResult {
                overlap: 0.0,
                path: Vec::new(),
            });
        };
        done[u] = true;
        let current = labels[u].clone().unwrap();
        if u == target {
            return Ok(PathResult {
                overlap: current.product,
                path: current.path.iter().map(|&k| g.ids[k].clone()).collect(),
            });
        }
        for &(v, w) in g.neighbors(u) {
            if done[v] {
                continue;
            }
            let mut path = current.path.clone();
            path.push(v);
            let candidate = Label {
                product: current.product * w,
                path,
            };
            if labels[v].as_ref().is_none_or(|l| candidate.better_than(l)) {
                labels[v] = Some(candidate);
            }
        }
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Best overlap from `source` to every node, by index.
pub fn single_source(g: &SymmetricGraph, source: usize) -> Vec<f64> {
    let mut best = vec![0.0; g.len()];
    let mut done = vec![false; g.len()];
    best[source] = 1.0;
    let mut heap = BinaryHeap::from([Entry(1.0, source)]);
    while let Some(Entry(product, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in g.neighbors(u) {
            let candidate = product * w;
            if !done[v] && candidate > best[v] {
                best[v] = candidate;
                heap.push(Entry(candidate, v));
            }
        }
    }
    best
}

/// Symmetric all-pairs overlap matrix with unit diagonal, indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<f64>,
    network_hash: String,
}

impl OverlapMatrix {
    fn from_values(ids: Vec<String>, values: Vec<f64>, network_hash: String) -> Self {
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        OverlapMatrix {
            ids,
            index,
            values,
            network_hash,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Content hash of the network this matrix was computed from.
    pub fn network_hash(&self) -> &str {
        &self.network_hash
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    pub fn between(&self, a: &str, b: &str) -> Result<f64> {
        let i = self.index_of(a).ok_or_else(|| Error::UnknownNode(a.to_string()))?;
        let j = self.index_of(b).ok_or_else(|| Error::UnknownNode(b.to_string()))?;
        Ok(self.get(i, j))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.ids.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Serializes the matrix with its node order and source network hash.
    pub fn to_cache_json(&self) -> Vec<u8> {
        let file = CacheFile {
            network_hash: self.network_hash.clone(),
            ids: self.ids.clone(),
            values: self.values.clone(),
        };
        let mut out = serde_json::to_vec(&file).expect("matrix serializes");
        out.push(b'\n');
        out
    }

    /// Loads a cache file, refusing it unless it was computed from `net`.
    pub fn from_cache_json(bytes: &[u8], net: &WebsiteNetwork) -> Result<Self> {
        let file: CacheFile = serde_json::from_slice(bytes).map_err(|e| Error::from_json(e, bytes))?;
        let actual = net.content_hash();
        if file.network_hash != actual {
            return Err(Error::CacheMismatch {
                cached: file.network_hash,
                actual,
            });
        }
        let n = file.ids.len();
        let ids_match = file.ids.iter().map(String::as_str).eq(net.nodes().iter().map(|n| n.id.as_str()));
        if !ids_match || file.values.len() != n * n {
            return Err(Error::InvalidArgument("overlap cache has the wrong shape".into()));
        }
        Ok(Self::from_values(file.ids, file.values, file.network_hash))
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    network_hash: String,
    ids: Vec<String>,
    values: Vec<f64>,
}

/// All-pairs overlap: one best-first search per node.
///
/// Entry `(i, j)` with `i < j` comes from the search rooted at `i` and is
/// mirrored, so the matrix is exactly symmetric.
pub fn overlap_matrix(net: &WebsiteNetwork) -> OverlapMatrix {
    let g = symmetrize(net);
    let n = g.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        let best = single_source(&g, i);
        values[i * n + i] = 1.0;
        for j in i + 1..n {
            values[i * n + j] = best[j];
            values[j * n + i] = best[j];
        }
    }
    OverlapMatrix::from_values(g.ids.clone(), values, net.content_hash())
}
