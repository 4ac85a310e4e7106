//! Complete-linkage agglomerative clustering over a distance matrix.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::divergence::DistanceMatrix;
use crate::error::{Error, Result};
use crate::scoring::ScoredType;

/// Reference to a dendrogram node. Serialized SciPy-style as a single integer:
/// `i < n` is leaf `i`, `n + m` is the result of merge `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(usize),
    Merge(usize),
}

impl Node {
    fn encode(self, n_leaves: usize) -> usize {
        match self {
            Node::Leaf(i) => i,
            Node::Merge(m) => n_leaves + m,
        }
    }

    fn decode(id: usize, n_leaves: usize) -> Self {
        if id < n_leaves {
            Node::Leaf(id)
        } else {
            Node::Merge(id - n_leaves)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: Node,
    pub right: Node,
    pub height: f64,
}

/// Binary merge tree: `leaves.len() - 1` merges in the order they happened.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    leaves: Vec<String>,
    merges: Vec<Merge>,
}

#[derive(Serialize, Deserialize)]
struct MergeDoc {
    left: usize,
    right: usize,
    height: f64,
}

#[derive(Serialize, Deserialize)]
struct DendrogramDoc {
    leaves: Vec<String>,
    merges: Vec<MergeDoc>,
}

impl Dendrogram {
    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Root node, or the single leaf when there are no merges.
    pub fn root(&self) -> Option<Node> {
        match (self.leaves.len(), self.merges.len()) {
            (0, _) => None,
            (_, 0) => Some(Node::Leaf(0)),
            (_, m) => Some(Node::Merge(m - 1)),
        }
    }

    pub fn height_of(&self, node: Node) -> f64 {
        match node {
            Node::Leaf(_) => 0.0,
            Node::Merge(m) => self.merges[m].height,
        }
    }

    /// Leaf indices under `node`, left subtree first.
    pub fn members(&self, node: Node) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            match n {
                Node::Leaf(i) => out.push(i),
                Node::Merge(m) => {
                    stack.push(self.merges[m].right);
                    stack.push(self.merges[m].left);
                }
            }
        }
        out
    }

    /// Leaves in drawing order (left-to-right depth-first traversal).
    pub fn leaf_order(&self) -> Vec<usize> {
        self.root().map(|r| self.members(r)).unwrap_or_default()
    }

    pub fn to_json(&self) -> Result<String> {
        let n = self.leaves.len();
        let doc = DendrogramDoc {
            leaves: self.leaves.clone(),
            merges: self
                .merges
                .iter()
                .map(|m| MergeDoc {
                    left: m.left.encode(n),
                    right: m.right.encode(n),
                    height: m.height,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DendrogramDoc = serde_json::from_str(text)?;
        let n = doc.leaves.len();
        let merges: Vec<Merge> = doc
            .merges
            .iter()
            .map(|m| Merge {
                left: Node::decode(m.left, n),
                right: Node::decode(m.right, n),
                height: m.height,
            })
            .collect();
        let tree = Dendrogram {
            leaves: doc.leaves,
            merges,
        };
        tree.validate()?;
        Ok(tree)
    }

    /// Structural checks: n-1 merges, each node consumed exactly once and
    /// only after it exists, heights non-decreasing.
    pub fn validate(&self) -> Result<()> {
        let n = self.leaves.len();
        if n > 0 && self.merges.len() != n - 1 {
            return Err(Error::InvalidMatrix(format!(
                "dendrogram with {n} leaves has {} merges",
                self.merges.len()
            )));
        }
        let mut used = vec![false; n + self.merges.len()];
        let mut prev = f64::NEG_INFINITY;
        for (m, merge) in self.merges.iter().enumerate() {
            for child in [merge.left, merge.right] {
                let id = child.encode(n);
                let exists = match child {
                    Node::Leaf(i) => i < n,
                    Node::Merge(c) => c < m,
                };
                if !exists || std::mem::replace(&mut used[id], true) {
                    return Err(Error::InvalidMatrix(format!(
                        "merge {m} references node {id} that is missing or already merged"
                    )));
                }
            }
            if merge.height.is_nan() || merge.height < prev {
                return Err(Error::InvalidMatrix(format!(
                    "merge {m} height {} below previous {prev}",
                    merge.height
                )));
            }
            prev = merge.height;
        }
        Ok(())
    }
}

/// Naive complete-linkage agglomeration.
///
/// Each step merges the pair of active clusters with the smallest
/// complete-linkage distance. Exact ties go to the pair whose
/// (smaller, larger) first-member indices are lexicographically least, where
/// a cluster's first member is its lowest original row index.
pub fn agglomerate(matrix: &DistanceMatrix) -> Result<Dendrogram> {
    matrix.validate()?;
    let n = matrix.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }

    // Cluster-to-cluster distances, indexed by slot. Slot i starts as leaf i;
    // a merge reuses the slot with the smaller first member.
    let mut dist: Vec<f64> = (0..n).flat_map(|i| matrix.row(i).to_vec()).collect();
    let mut active: Vec<bool> = vec![true; n];
    let first: Vec<usize> = (0..n).collect();
    let mut node: Vec<Node> = (0..n).map(Node::Leaf).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for m in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for i in (0..n).filter(|&i| active[i]) {
            for j in ((i + 1)..n).filter(|&j| active[j]) {
                let d = dist[i * n + j];
                let key = (first[i].min(first[j]), first[i].max(first[j]));
                let better = match best {
                    None => true,
                    Some((bd, bkey, _, _)) => d < bd || (d == bd && key < bkey),
                };
                if better {
                    best = Some((d, key, i, j));
                }
            }
        }
        let (height, _, i, j) = best.expect("at least two active clusters");
        let (keep, drop) = if first[i] <= first[j] { (i, j) } else { (j, i) };

        merges.push(Merge {
            left: node[keep],
            right: node[drop],
            height,
        });
        for k in (0..n).filter(|&k| active[k] && k != keep && k != drop) {
            let d = dist[keep * n + k].max(dist[drop * n + k]);
            dist[keep * n + k] = d;
            dist[k * n + keep] = d;
        }
        active[drop] = false;
        node[keep] = Node::Merge(m);
    }

    Ok(Dendrogram {
        leaves: matrix.labels().to_vec(),
        merges,
    })
}

/// Unlabeled `k`-way partition; groups ordered by their lowest leaf index,
/// members in leaf-index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub k: usize,
    pub groups: Vec<Vec<String>>,
}

/// Partition produced by undoing the last `k - 1` merges.
pub fn cut(tree: &Dendrogram, k: usize) -> Result<Cut> {
    let groups = cut_indices(tree, k)?
        .into_iter()
        .map(|g| g.into_iter().map(|i| tree.leaves[i].clone()).collect())
        .collect();
    Ok(Cut { k, groups })
}

pub(crate) fn cut_indices(tree: &Dendrogram, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = tree.leaves.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    // union-find over the first n - k merges
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut rep: Vec<usize> = Vec::with_capacity(tree.merges.len());
    let leaf_rep = |node: Node, rep: &[usize]| match node {
        Node::Leaf(i) => i,
        Node::Merge(m) => rep[m],
    };
    for merge in &tree.merges[..n - k] {
        let a = find(&mut parent, leaf_rep(merge.left, &rep));
        let b = find(&mut parent, leaf_rep(merge.right, &rep));
        let (lo, hi) = (a.min(b), a.max(b));
        parent[hi] = lo;
        rep.push(lo);
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let g = *slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGroup {
    pub label: String,
    pub members: Vec<String>,
    pub mean_scaled_score: f64,
    /// Share of the grand total volume (0 to 1), when totals were available.
    pub business_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub k: usize,
    pub groups: Vec<ClusterGroup>,
}

impl ClusterAssignment {
    pub fn label_of(&self, type_id: &str) -> Option<&str> {
        self.groups
            .iter()
            .find(|g| g.members.iter().any(|m| m == type_id))
            .map(|g| g.label.as_str())
    }
}

/// Spreadsheet-style labels: A..Z, AA, AB, ...
pub fn cluster_label(mut index: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ASCII letters")
}

/// Orders groups by mean scaled score, highest first, and labels them A, B, ….
/// Ties keep the cut's group order.
pub fn label_clusters(
    groups: &Cut,
    scores: &[ScoredType],
    business: Option<&HashMap<String, f64>>,
) -> Result<ClusterAssignment> {
    let score_of: HashMap<&str, f64> = scores
        .iter()
        .map(|s| (s.type_id.as_str(), s.scaled_score))
        .collect();
    let mut rows = groups
        .groups
        .iter()
        .map(|members| {
            let mut sum = 0.0;
            for m in members {
                sum += score_of.get(m.as_str()).ok_or_else(|| {
                    Error::InconsistentInput(format!("cluster member `{m}` has no score"))
                })?;
            }
            let business_fraction = business.map(|b| {
                members
                    .iter()
                    .map(|m| b.get(m).copied().unwrap_or(0.0))
                    .sum::<f64>()
            });
            Ok((
                members.clone(),
                sum / members.len() as f64,
                business_fraction,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|x, y| y.1.total_cmp(&x.1));
    Ok(ClusterAssignment {
        k: groups.k,
        groups: rows
            .into_iter()
            .enumerate()
            .map(|(i, (members, mean, business_fraction))| ClusterGroup {
                label: cluster_label(i),
                members,
                mean_scaled_score: mean,
                business_fraction,
            })
            .collect(),
    })
}
