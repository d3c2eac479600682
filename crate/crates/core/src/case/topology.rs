//! Connected components over positional node indices.

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Components of the subgraph induced by `active` nodes, joined by `edges`
/// whose endpoints are both active.
///
/// Each component is sorted ascending and components are ordered by their
/// smallest member, so the output depends only on the graph.
pub fn components(
    active: &[bool],
    edges: impl IntoIterator<Item = (usize, usize)>,
) -> Vec<Vec<usize>> {
    let n = active.len();
    let mut uf = UnionFind::new(n);
    for (a, b) in edges {
        if active[a] && active[b] {
            uf.union(a, b);
        }
    }
    let mut by_root: Vec<Option<usize>> = vec![None; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for node in 0..n {
        if !active[node] {
            continue;
        }
        let root = uf.find(node);
        match by_root[root] {
            Some(slot) => out[slot].push(node),
            None => {
                by_root[root] = Some(out.len());
                out.push(vec![node]);
            }
        }
    }
    // nodes are visited in ascending order, so each component is already
    // sorted and components appear in order of their smallest node
    out
}
