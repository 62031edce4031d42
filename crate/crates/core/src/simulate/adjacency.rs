use crate::error::{Error, Result};

/// Symmetric binary adjacency matrix with zero diagonal, stored as packed bit rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64);
        Self { n, words, bits: vec![0; n * words] }
    }

    /// Builds from zero-based undirected edges. Repeated edges are merged.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj = Self::empty(n);
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::EdgeOutOfRange { i: i + 1, j: j + 1, n });
            }
            if i == j {
                return Err(Error::SelfLoop { node: i + 1 });
            }
            adj.set(i, j);
            adj.set(j, i);
        }
        Ok(adj)
    }

    /// Builds from a dense 0/1 matrix, validating shape, symmetry and the diagonal.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut adj = Self::empty(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { what: "adjacency row length", expected: n, found: row.len() });
            }
            for (j, &value) in row.iter().enumerate() {
                match value {
                    0 => {}
                    1 if i == j => return Err(Error::SelfLoop { node: i + 1 }),
                    1 => adj.set(i, j),
                    other => {
                        return Err(Error::NonBinary { row: i + 1, col: j + 1, value: other.to_string() })
                    }
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if adj.get(i, j) != adj.get(j, i) {
                    return Err(Error::Asymmetric { row: i + 1, col: j + 1 });
                }
            }
        }
        Ok(adj)
    }

    /// Assembles from rows holding only their upper-triangle bits (`j > i`), mirroring them.
    pub(crate) fn from_upper_rows(n: usize, upper: Vec<Vec<u64>>) -> Self {
        let words = n.div_ceil(64);
        let mut adj = Self { n, words, bits: upper.concat() };
        for i in 0..n {
            for j in adj.neighbors(i).filter(|&j| j > i).collect::<Vec<_>>() {
                adj.set(j, i);
            }
        }
        adj
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Packed bits of row `i`; bit `j % 64` of word `j / 64` is `D_ij`.
    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_words(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    /// Fraction of linked unordered pairs.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.edge_count() as f64 / (self.n * (self.n - 1) / 2) as f64
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(i).iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + bit)
            })
        })
    }

    /// Zero-based edges `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| self.neighbors(i).filter(move |&j| j > i).map(move |j| (i, j)))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) as u8).collect()).collect()
    }

    /// Relabels agents: node `perm[i]` of the result is node `i` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let edges = self.edges().into_iter().map(|(i, j)| (perm[i], perm[j]));
        Self::from_edges(self.n, edges).expect("permutation preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_from_edges() {
        let adj = AdjacencyMatrix::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(adj.to_dense(), vec![vec![0, 1, 0], vec![1, 0, 1], vec![0, 1, 0]]);
        assert_eq!(adj.degree(1), 2);
        assert_eq!(adj.edge_count(), 2);
        assert_eq!(adj.edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        assert!(matches!(AdjacencyMatrix::from_edges(3, [(1, 1)]), Err(Error::SelfLoop { node: 2 })));
        assert!(matches!(AdjacencyMatrix::from_edges(3, [(0, 3)]), Err(Error::EdgeOutOfRange { .. })));
    }

    #[test]
    fn dense_validation() {
        assert!(matches!(
            AdjacencyMatrix::from_dense(&[vec![0, 1], vec![0, 0]]),
            Err(Error::Asymmetric { row: 1, col: 2 })
        ));
        assert!(matches!(
            AdjacencyMatrix::from_dense(&[vec![1, 0], vec![0, 0]]),
            Err(Error::SelfLoop { node: 1 })
        ));
        assert!(matches!(
            AdjacencyMatrix::from_dense(&[vec![0, 2], vec![2, 0]]),
            Err(Error::NonBinary { .. })
        ));
        assert!(AdjacencyMatrix::from_dense(&[vec![0, 1], vec![1, 0]]).is_ok());
    }

    #[test]
    fn wide_rows_cross_word_boundaries() {
        let n = 130;
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).chain([(0, 129), (63, 64)]).collect();
        let adj = AdjacencyMatrix::from_edges(n, edges).unwrap();
        assert!(adj.get(129, 0) && adj.get(64, 63));
        assert_eq!(adj.neighbors(0).collect::<Vec<_>>(), vec![1, 129]);
        assert_eq!(adj.edge_count(), n);
    }

    #[test]
    fn permutation_relabels() {
        let adj = AdjacencyMatrix::from_edges(3, [(0, 1)]).unwrap();
        let p = adj.permuted(&[2, 0, 1]);
        assert!(p.get(2, 0) && !p.get(0, 1));
    }
}
