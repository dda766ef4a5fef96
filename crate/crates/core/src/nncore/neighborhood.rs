use super::NnError;

/// Compressed neighbour lists used by sparse aggregation.
///
/// With `directed == false` the neighbourhood of `v` is the union of its in-
/// and out-neighbours. With `directed == true` it is the set of nodes `v`
/// points to. Lists are sorted and free of duplicates; a self-loop makes a
/// node its own neighbour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Neighborhood {
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self, NnError> {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for &(s, d) in edges {
            if s >= num_nodes || d >= num_nodes {
                return Err(NnError::InvalidEdge {
                    src: s,
                    dst: d,
                    nodes: num_nodes,
                });
            }
            lists[s].push(d);
            if !directed {
                lists[d].push(s);
            }
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            neighbors.extend(l);
            offsets.push(neighbors.len());
        }
        Ok(Self { offsets, neighbors })
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn of(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undirected_union_is_deduplicated() {
        let n = Neighborhood::from_edges(3, &[(0, 1), (1, 0), (2, 1)], false).unwrap();
        assert_eq!(n.of(0), &[1]);
        assert_eq!(n.of(1), &[0, 2]);
        assert_eq!(n.of(2), &[1]);
    }

    #[test]
    fn directed_uses_successors() {
        let n = Neighborhood::from_edges(3, &[(0, 1), (2, 1)], true).unwrap();
        assert_eq!(n.of(0), &[1]);
        assert!(n.of(1).is_empty());
    }

    #[test]
    fn rejects_dangling_edges() {
        assert!(Neighborhood::from_edges(2, &[(0, 2)], false).is_err());
    }
}
