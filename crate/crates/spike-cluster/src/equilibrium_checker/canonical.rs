use serde::{Deserialize, Serialize};

/// Isomorphism-invariant label of a small graph: the degree sequence plus the
/// largest upper-triangle adjacency bitstring over degree-respecting relabelings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalGraph {
    pub vertices: usize,
    pub degrees: Vec<usize>,
    pub bits: u64,
}

impl CanonicalGraph {
    pub fn id(&self) -> String {
        let edges = self.degrees.iter().sum::<usize>() / 2;
        format!("l{}e{}-{:x}", self.vertices, edges, self.bits)
    }

    /// Edges of the canonical relabeling.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.vertices;
        if n < 2 {
            return Vec::new();
        }
        let total = n * (n - 1) / 2;
        let mut out = Vec::new();
        let mut k = 0;
        for a in 0..n {
            for b in a + 1..n {
                if self.bits >> (total - 1 - k) & 1 == 1 {
                    out.push((a, b));
                }
                k += 1;
            }
        }
        out
    }
}

/// Canonical form by exhaustive relabeling. Intended for `n ≤ 8`; only
/// orderings with non-increasing degree are visited.
pub fn canonical_form(n: usize, edges: &[(usize, usize)]) -> CanonicalGraph {
    assert!(n <= 11, "pair bitstring must fit in 64 bits");
    let mut adj = vec![vec![false; n]; n];
    let mut deg = vec![0usize; n];
    for &(i, j) in edges {
        if i != j && !adj[i][j] {
            adj[i][j] = true;
            adj[j][i] = true;
            deg[i] += 1;
            deg[j] += 1;
        }
    }
    let mut degrees = deg.clone();
    degrees.sort_unstable_by(|a, b| b.cmp(a));

    let mut best = 0u64;
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    extend(&adj, &deg, &degrees, &mut perm, &mut used, &mut best);
    CanonicalGraph { vertices: n, degrees, bits: best }
}

fn extend(adj: &[Vec<bool>], deg: &[usize], target: &[usize], perm: &mut Vec<usize>, used: &mut [bool], best: &mut u64) {
    let n = adj.len();
    if perm.len() == n {
        let mut bits = 0u64;
        for a in 0..n {
            for b in a + 1..n {
                bits = bits << 1 | u64::from(adj[perm[a]][perm[b]]);
            }
        }
        *best = (*best).max(bits);
        return;
    }
    let want = target[perm.len()];
    for v in 0..n {
        if !used[v] && deg[v] == want {
            used[v] = true;
            perm.push(v);
            extend(adj, deg, target, perm, used, best);
            perm.pop();
            used[v] = false;
        }
    }
}
