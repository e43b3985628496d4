//! Smallest set of smallest rings.
//!
//! Candidate cycles are generated Horton-style (one shortest-path tree per
//! vertex, closed by every edge), ordered by length and then by sorted atom
//! indices, and accepted greedily while they stay independent in the cycle
//! space over GF(2).

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingInfo {
    /// Each ring is an ordered cycle of atom indices.
    pub rings: Vec<Vec<usize>>,
    pub ring_count: usize,
    pub max_ring_size: usize,
}

impl RingInfo {
    pub(crate) fn from_rings(rings: Vec<Vec<usize>>) -> Self {
        let max_ring_size = rings.iter().map(Vec::len).max().unwrap_or(0);
        RingInfo {
            ring_count: rings.len(),
            max_ring_size,
            rings,
        }
    }
}

/// `adj[v]` holds `(neighbor, edge index)`; `edges` the endpoint pairs.
pub(crate) fn sssr(n_atoms: usize, edges: &[(usize, usize)], adj: &[Vec<(usize, usize)>]) -> Vec<Vec<usize>> {
    let components = count_components(n_atoms, adj);
    let cyclomatic = edges.len() + components - n_atoms;
    if cyclomatic == 0 {
        return Vec::new();
    }

    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut candidates: Vec<(Vec<usize>, Vec<usize>, Vec<u64>)> = Vec::new();
    let words = edges.len().div_ceil(64);

    for root in 0..n_atoms {
        let (dist, parent) = bfs_tree(root, n_atoms, adj);
        for (e, &(x, y)) in edges.iter().enumerate() {
            if dist[x] == usize::MAX || dist[y] == usize::MAX {
                continue;
            }
            // Skip tree edges; they close no cycle.
            if parent[y] == Some((x, e)) || parent[x] == Some((y, e)) {
                continue;
            }
            let px = path_to_root(x, &parent);
            let py = path_to_root(y, &parent);
            let sx: HashSet<usize> = px.iter().copied().collect();
            if py.iter().filter(|a| sx.contains(a)).count() != 1 {
                continue;
            }
            // cycle: root .. x (reversed px), then y .. root
            let mut cycle: Vec<usize> = px.iter().rev().copied().collect();
            cycle.extend(py.iter().copied().take(py.len() - 1));
            let mut bits = vec![0u64; words];
            for i in 0..cycle.len() {
                let a = cycle[i];
                let b = cycle[(i + 1) % cycle.len()];
                let edge = adj[a].iter().find(|&&(nb, _)| nb == b).map(|&(_, ei)| ei).expect("cycle edge");
                bits[edge / 64] |= 1 << (edge % 64);
            }
            if seen.insert(bits.clone()) {
                let mut key = cycle.clone();
                key.sort_unstable();
                candidates.push((key, cycle, bits));
            }
        }
    }

    candidates.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| a.0.cmp(&b.0)));

    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut rings = Vec::new();
    for (_, cycle, bits) in candidates {
        if rings.len() == cyclomatic {
            break;
        }
        let mut v = bits;
        for (pivot, row) in &basis {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (w, r) in v.iter_mut().zip(row) {
                    *w ^= r;
                }
            }
        }
        if let Some(pivot) = lowest_bit(&v) {
            // keep basis rows reduced on their pivot
            for (_, row) in basis.iter_mut() {
                if row[pivot / 64] >> (pivot % 64) & 1 == 1 {
                    for (w, r) in row.iter_mut().zip(&v) {
                        *w ^= r;
                    }
                }
            }
            basis.push((pivot, v));
            rings.push(normalize_cycle(cycle));
        }
    }
    rings
}

fn lowest_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Rotate so the smallest index comes first, then pick the direction whose
/// second element is smaller.
fn normalize_cycle(mut cycle: Vec<usize>) -> Vec<usize> {
    let pos = cycle
        .iter()
        .enumerate()
        .min_by_key(|(_, &a)| a)
        .map(|(i, _)| i)
        .unwrap_or(0);
    cycle.rotate_left(pos);
    if cycle.len() > 2 && cycle[cycle.len() - 1] < cycle[1] {
        cycle[1..].reverse();
    }
    cycle
}

fn bfs_tree(
    root: usize,
    n: usize,
    adj: &[Vec<(usize, usize)>],
) -> (Vec<usize>, Vec<Option<(usize, usize)>>) {
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![None; n];
    let mut queue = VecDeque::new();
    dist[root] = 0;
    queue.push_back(root);
    while let Some(v) = queue.pop_front() {
        for &(nb, e) in &adj[v] {
            if dist[nb] == usize::MAX {
                dist[nb] = dist[v] + 1;
                parent[nb] = Some((v, e));
                queue.push_back(nb);
            }
        }
    }
    (dist, parent)
}

/// Atoms from `v` back to the BFS root, inclusive on both ends.
fn path_to_root(mut v: usize, parent: &[Option<(usize, usize)>]) -> Vec<usize> {
    let mut path = vec![v];
    while let Some((p, _)) = parent[v] {
        path.push(p);
        v = p;
    }
    path
}

pub(crate) fn count_components(n: usize, adj: &[Vec<(usize, usize)>]) -> usize {
    component_labels(n, adj).1
}

pub(crate) fn component_labels(n: usize, adj: &[Vec<(usize, usize)>]) -> (Vec<usize>, usize) {
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = count;
        while let Some(v) = stack.pop() {
            for &(nb, _) in &adj[v] {
                if label[nb] == usize::MAX {
                    label[nb] = count;
                    stack.push(nb);
                }
            }
        }
        count += 1;
    }
    (label, count)
}
