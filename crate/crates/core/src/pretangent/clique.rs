//! Maximal clique enumeration: Bron–Kerbosch with pivoting, outer loop in
//! degeneracy order.

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }

    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }

    fn and_not(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & !b).collect())
    }

    fn count_and(&self, o: &Bits) -> u32 {
        self.0.iter().zip(&o.0).map(|(a, b)| (a & b).count_ones()).sum()
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &bits)| {
            let mut b = bits;
            std::iter::from_fn(move || {
                if b == 0 {
                    return None;
                }
                let t = b.trailing_zeros() as usize;
                b &= b - 1;
                Some(w * 64 + t)
            })
        })
    }
}

/// Vertices in degeneracy order (repeatedly remove a minimum-degree vertex).
fn degeneracy_order(adj: &[Vec<bool>]) -> Vec<usize> {
    let n = adj.len();
    let mut deg: Vec<usize> = adj.iter().map(|r| r.iter().filter(|&&b| b).count()).collect();
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n).filter(|&v| !removed[v]).min_by_key(|&v| (deg[v], v)).unwrap();
        removed[v] = true;
        order.push(v);
        for u in 0..n {
            if adj[v][u] && !removed[u] {
                deg[u] -= 1;
            }
        }
    }
    order
}

fn expand(r: &mut Vec<usize>, mut p: Bits, mut x: Bits, nbr: &[Bits], out: &mut Vec<Vec<usize>>) {
    if p.is_empty() {
        if x.is_empty() {
            let mut c = r.clone();
            c.sort_unstable();
            out.push(c);
        }
        return;
    }
    // pivot maximizing |P ∩ N(u)| over u in P ∪ X
    let pivot = p.iter().chain(x.iter()).max_by_key(|&u| (p.count_and(&nbr[u]), std::cmp::Reverse(u))).unwrap();
    let candidates: Vec<usize> = p.and_not(&nbr[pivot]).iter().collect();
    for v in candidates {
        r.push(v);
        expand(r, p.and(&nbr[v]), x.and(&nbr[v]), nbr, out);
        r.pop();
        p.clear(v);
        x.set(v);
    }
}

/// All maximal cliques of the graph with the given symmetric adjacency
/// matrix (diagonal ignored), each sorted, in lexicographic order.
pub fn maximal_cliques_of(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    if n == 0 {
        return vec![];
    }
    let nbr: Vec<Bits> = (0..n)
        .map(|v| {
            let mut b = Bits::empty(n);
            for u in 0..n {
                if u != v && adj[v][u] {
                    b.set(u);
                }
            }
            b
        })
        .collect();
    let order = degeneracy_order(adj);
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut out = Vec::new();
    for &v in &order {
        let mut p = Bits::empty(n);
        let mut x = Bits::empty(n);
        for u in nbr[v].iter() {
            if pos[u] > pos[v] {
                p.set(u);
            } else {
                x.set(u);
            }
        }
        expand(&mut vec![v], p, x, &nbr, &mut out);
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut a = vec![vec![false; n]; n];
        for &(u, v) in edges {
            a[u][v] = true;
            a[v][u] = true;
        }
        a
    }

    #[test]
    fn path_has_two_cliques() {
        // u - a0 - v with a0 = 0
        let g = graph(3, &[(0, 1), (0, 2)]);
        assert_eq!(maximal_cliques_of(&g), vec![vec![0, 1], vec![0, 2]]);
    }

    #[test]
    fn complete_graph_one_clique() {
        let e: Vec<(usize, usize)> = (0..5).flat_map(|u| (u + 1..5).map(move |v| (u, v))).collect();
        assert_eq!(maximal_cliques_of(&graph(5, &e)), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn isolated_vertices() {
        assert_eq!(maximal_cliques_of(&graph(1, &[])), vec![vec![0]]);
        assert_eq!(maximal_cliques_of(&graph(3, &[(0, 1)])), vec![vec![0, 1], vec![2]]);
        assert!(maximal_cliques_of(&[]).is_empty());
    }

    #[test]
    fn wide_graph_crosses_word_boundary() {
        let n = 130;
        let e: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let c = maximal_cliques_of(&graph(n, &e));
        assert_eq!(c.len(), n - 1);
        assert!(c.iter().all(|k| k.len() == 2));
    }
}
