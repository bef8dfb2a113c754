//! Directed communication topology, Laplacian and pinning algebra, and the
//! graph-based consensus error.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Directed communication graph over the followers, plus leader pinning gains.
///
/// Row `i` of the adjacency matrix lists who follower `i` receives information
/// from: `a[i][j] = 1` means `i` hears `j`. A follower with `pinning[i] > 0`
/// additionally receives the leader reference. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n: usize,
    adjacency: DMatrix<f64>,
    pinning: DVector<f64>,
    in_degree: DVector<f64>,
    laplacian: DMatrix<f64>,
    neighbors: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds a topology from a 0/1 adjacency matrix and non-negative pinning
    /// gains. Every follower must have `in_degree + pinning > 0`: later control
    /// laws divide by that coupling.
    pub fn new(adjacency: &[Vec<u8>], pinning: &[f64]) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 {
            return Err(Error::EmptyTopology);
        }
        for (row, entries) in adjacency.iter().enumerate() {
            if entries.len() != n {
                return Err(Error::AdjacencyShape {
                    row,
                    len: entries.len(),
                    n,
                });
            }
        }
        for (i, row) in adjacency.iter().enumerate() {
            for (j, &value) in row.iter().enumerate() {
                if value > 1 {
                    return Err(Error::AdjacencyEntry { i, j, value });
                }
                if i == j && value != 0 {
                    return Err(Error::SelfLoop(i));
                }
            }
        }
        if pinning.len() != n {
            return Err(Error::PinningLength {
                len: pinning.len(),
                n,
            });
        }
        for (i, &b) in pinning.iter().enumerate() {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::InvalidPinning(i));
            }
        }

        let adj = DMatrix::from_fn(n, n, |i, j| f64::from(adjacency[i][j]));
        let in_degree = DVector::from_iterator(n, adj.row_iter().map(|r| r.sum()));
        for i in 0..n {
            if in_degree[i] == 0.0 && pinning[i] == 0.0 {
                return Err(Error::IsolatedFollower(i));
            }
        }
        let laplacian = DMatrix::from_diagonal(&in_degree) - &adj;
        let neighbors = adjacency
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &a)| a == 1)
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();

        Ok(Self {
            n,
            adjacency: adj,
            pinning: DVector::from_column_slice(pinning),
            in_degree,
            laplacian,
            neighbors,
        })
    }

    pub fn n_followers(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn pinning(&self) -> &DVector<f64> {
        &self.pinning
    }

    pub fn in_degree(&self) -> &DVector<f64> {
        &self.in_degree
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// In-neighbors of follower `i`, in ascending agent order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// The coupling `d_i + b_i`, strictly positive by construction.
    pub fn coupling(&self, i: usize) -> f64 {
        self.in_degree[i] + self.pinning[i]
    }

    /// Graph-based consensus error of follower `i`:
    /// `sum_j a_ij (y_i - y_j) + b_i (y_i - y_r)`.
    pub fn consensus_error(&self, outputs: &[f64], reference: f64, i: usize) -> Result<f64> {
        if outputs.len() != self.n {
            return Err(Error::Length {
                context: "consensus error outputs",
                expected: self.n,
                actual: outputs.len(),
            });
        }
        if i >= self.n {
            return Err(Error::FollowerIndex { index: i, n: self.n });
        }
        let yi = outputs[i];
        let neighbor_sum: f64 = self.neighbors[i].iter().map(|&j| yi - outputs[j]).sum();
        Ok(neighbor_sum + self.pinning[i] * (yi - reference))
    }

    /// Consensus errors of all followers at once.
    pub fn consensus_errors(&self, outputs: &[f64], reference: f64) -> Result<Vec<f64>> {
        (0..self.n)
            .map(|i| self.consensus_error(outputs, reference, i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn benchmark_adjacency() -> Vec<Vec<u8>> {
        vec![
            vec![0, 1, 0, 0],
            vec![0, 0, 0, 0],
            vec![0, 1, 0, 0],
            vec![1, 0, 0, 0],
        ]
    }

    fn benchmark_topology() -> Topology {
        Topology::new(&benchmark_adjacency(), &[0.0, 1.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn benchmark_laplacian_and_in_degree() {
        let topo = benchmark_topology();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, -1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, -1.0, 1.0, 0.0, //
                -1.0, 0.0, 0.0, 1.0,
            ],
        );
        assert_eq!(topo.laplacian(), &expected);
        assert_eq!(topo.in_degree().as_slice(), &[1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_edge_set_gives_zero_laplacian() {
        let adjacency = vec![vec![0u8; 4]; 4];
        let topo = Topology::new(&adjacency, &[1.0; 4]).unwrap();
        assert!(topo.laplacian().iter().all(|&v| v == 0.0));
        assert!(topo.in_degree().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn consensus_error_on_benchmark_initial_outputs() {
        let topo = benchmark_topology();
        let outputs = [0.2, -0.2, 0.1, -0.3];
        let z = topo.consensus_errors(&outputs, 0.0).unwrap();
        let expected = [0.4, -0.2, 0.3, -0.5];
        for (got, want) in z.iter().zip(expected) {
            assert_relative_eq!(got, &want, max_relative = 1e-15);
        }
    }

    #[test]
    fn consensus_error_single_pinned_follower() {
        let topo = Topology::new(&[vec![0]], &[2.0]).unwrap();
        assert_eq!(topo.consensus_error(&[1.0], 0.0, 0).unwrap(), 2.0);
    }

    #[test]
    fn consensus_error_zero_at_consensus() {
        let topo = benchmark_topology();
        let outputs = [0.7; 4];
        for z in topo.consensus_errors(&outputs, 0.7).unwrap() {
            assert_eq!(z, 0.0);
        }
    }

    #[test]
    fn construction_errors_are_distinct() {
        let bad_shape = vec![vec![0, 1], vec![0]];
        assert!(matches!(
            Topology::new(&bad_shape, &[1.0, 1.0]),
            Err(Error::AdjacencyShape { row: 1, .. })
        ));

        let self_loop = vec![vec![1u8, 0], vec![0, 0]];
        assert!(matches!(
            Topology::new(&self_loop, &[1.0, 1.0]),
            Err(Error::SelfLoop(0))
        ));

        let bad_entry = vec![vec![0u8, 2], vec![0, 0]];
        assert!(matches!(
            Topology::new(&bad_entry, &[1.0, 1.0]),
            Err(Error::AdjacencyEntry { value: 2, .. })
        ));

        let adjacency = vec![vec![0u8, 1], vec![0, 0]];
        assert!(matches!(
            Topology::new(&adjacency, &[1.0]),
            Err(Error::PinningLength { len: 1, n: 2 })
        ));

        // Follower 1 has no in-edges and no pinning.
        assert!(matches!(
            Topology::new(&adjacency, &[0.0, 0.0]),
            Err(Error::IsolatedFollower(1))
        ));

        assert!(matches!(
            Topology::new(&adjacency, &[1.0, -0.5]),
            Err(Error::InvalidPinning(1))
        ));
    }

    #[test]
    fn consensus_error_rejects_bad_index() {
        let topo = benchmark_topology();
        assert!(matches!(
            topo.consensus_error(&[0.0; 4], 0.0, 4),
            Err(Error::FollowerIndex { index: 4, n: 4 })
        ));
    }

    proptest! {
        #[test]
        fn laplacian_rows_sum_to_zero(rows in proptest::collection::vec(
            proptest::collection::vec(0u8..=1, 5), 5)) {
            let mut adjacency = rows;
            for (i, row) in adjacency.iter_mut().enumerate() {
                row[i] = 0;
            }
            let topo = Topology::new(&adjacency, &[1.0; 5]).unwrap();
            for i in 0..5 {
                let sum: f64 = topo.laplacian().row(i).sum();
                prop_assert!(sum.abs() < 1e-12);
            }
        }

        #[test]
        fn consensus_error_is_linear_in_deviations(
            deviations in proptest::collection::vec(-10.0f64..10.0, 4),
            reference in -5.0f64..5.0,
        ) {
            let topo = benchmark_topology();
            let outputs: Vec<f64> = deviations.iter().map(|d| reference + d).collect();
            let doubled: Vec<f64> = deviations.iter().map(|d| reference + 2.0 * d).collect();
            let z = topo.consensus_errors(&outputs, reference).unwrap();
            let z2 = topo.consensus_errors(&doubled, reference).unwrap();
            for (a, b) in z.iter().zip(&z2) {
                prop_assert!((2.0 * a - b).abs() < 1e-9 * (1.0 + b.abs()));
            }
        }
    }
}
