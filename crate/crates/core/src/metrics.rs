//! Coherence formulas and the resistance, first-passage and distance
//! quantities that share the same spectral sum `S`.
//!
//! The brute-force routines here never touch eigenvalues, so they serve as
//! oracles for the spectral identities `R = 2NS`, `F = 2MS/(N-1)` and, on
//! trees, `W = NS`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{bfs_from, Graph};

fn check_coherence_args(sum: f64, beta: f64, n: usize) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if n < 2 {
        return Err(Error::TooFewNodes { min: 2, got: n });
    }
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue sum must be positive, got {sum}"
        )));
    }
    Ok(())
}

/// First-order coherence `S / (2 beta N)`.
pub fn h_fo(s: f64, beta: f64, n: usize) -> Result<f64> {
    check_coherence_args(s, beta, n)?;
    Ok(s / (2.0 * beta * n as f64))
}

/// Second-order coherence `S2 / (2 beta^2 N)`.
pub fn h_so(s2: f64, beta: f64, n: usize) -> Result<f64> {
    check_coherence_args(s2, beta, n)?;
    Ok(s2 / (2.0 * beta * beta * n as f64))
}

fn require_connected(g: &Graph) -> Result<()> {
    if g.num_nodes() < 2 {
        return Err(Error::TooFewNodes {
            min: 2,
            got: g.num_nodes(),
        });
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(())
}

/// Moore-Penrose pseudo-inverse of the Laplacian of a connected graph.
///
/// The null space is exactly the constant vector, so
/// `L+ = (L + 11^T/N)^-1 - 11^T/N` and no singular-value threshold is
/// needed.
pub fn laplacian_pseudo_inverse(g: &Graph) -> Result<DMatrix<f64>> {
    require_connected(g)?;
    let n = g.num_nodes();
    let shift = 1.0 / n as f64;
    let mut m = g.laplacian().into_matrix();
    m.add_scalar_mut(shift);
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Invariant("shifted Laplacian is not positive definite".into()))?;
    let mut inv = chol.inverse();
    inv.add_scalar_mut(-shift);
    Ok(inv)
}

/// Pairwise resistance distances `r_ij = L+_ii + L+_jj - 2 L+_ij`.
pub fn resistance_matrix(g: &Graph) -> Result<DMatrix<f64>> {
    let p = laplacian_pseudo_inverse(g)?;
    let n = p.nrows();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            p[(i, i)] + p[(j, j)] - 2.0 * p[(i, j)]
        }
    }))
}

/// Kirchhoff index summed over ordered pairs.
pub fn effective_resistance_total(g: &Graph) -> Result<f64> {
    Ok(resistance_matrix(g)?.sum())
}

/// Expected hitting times `f[(i, j)]` of the simple random walk from `i` to
/// `j`.
///
/// Column `j` solves the grounded system `L_j f = d_j`: the Laplacian with
/// row and column `j` removed against the degree vector without entry `j`.
/// That is the first-step equation `f_ij = 1 + (1/d_i) sum_{k~i} f_kj`
/// multiplied through by `d_i`.
pub fn hitting_time_matrix(g: &Graph) -> Result<DMatrix<f64>> {
    require_connected(g)?;
    let n = g.num_nodes();
    let lap = g.laplacian().into_matrix();
    let deg: Vec<f64> = g.degrees().into_iter().map(|d| d as f64).collect();

    let columns: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let grounded = lap.clone().remove_row(j).remove_column(j);
            let rhs = DVector::from_iterator(
                n - 1,
                deg.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &d)| d),
            );
            let sol = grounded
                .cholesky()
                .ok_or_else(|| {
                    Error::Invariant(format!("grounded Laplacian for target {j} is singular"))
                })?
                .solve(&rhs);
            let mut col = Vec::with_capacity(n);
            col.extend(sol.iter().take(j));
            col.push(0.0);
            col.extend(sol.iter().skip(j));
            Ok(col)
        })
        .collect();

    let mut f = DMatrix::zeros(n, n);
    for (j, col) in columns.into_iter().enumerate() {
        f.set_column(j, &DVector::from_vec(col?));
    }
    Ok(f)
}

/// Average of `f_ij` over ordered pairs `i != j`.
pub fn mean_hitting_time(f: &DMatrix<f64>) -> f64 {
    let n = f.nrows();
    f.sum() / (n * (n - 1)) as f64
}

/// Global mean first passage time from the spectral sum, `2MS/(N-1)`.
pub fn gmfpt(g: &Graph, s: f64) -> Result<f64> {
    let n = g.num_nodes();
    if n < 2 {
        return Err(Error::TooFewNodes { min: 2, got: n });
    }
    Ok(2.0 * g.num_edges() as f64 * s / (n - 1) as f64)
}

/// Sum of shortest-path lengths over unordered pairs.
pub fn wiener_index(g: &Graph) -> Result<u64> {
    require_connected(g)?;
    let adj = g.adjacency_lists();
    let total: u64 = (0..g.num_nodes())
        .into_par_iter()
        .map(|s| {
            bfs_from(&adj, s)
                .iter()
                .map(|d| d.unwrap_or_default() as u64)
                .sum::<u64>()
        })
        .sum();
    Ok(total / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{path, ring, tree_like, vicsek, Caps};
    use crate::spectral::SpectrumSummary;
    use proptest::prelude::*;

    fn star(leaves: usize) -> Graph {
        Graph::new(leaves + 1, (1..=leaves).map(|i| (0, i))).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn s_of(g: &Graph) -> f64 {
        SpectrumSummary::of_graph(g, &Caps::default()).unwrap().s
    }

    #[test]
    fn coherence_formulas() {
        assert_eq!(h_fo(0.5, 1.0, 2).unwrap(), 0.125);
        assert!(rel(h_fo(3.2, 1.0, 5).unwrap(), 0.32) < 1e-15);
        assert_eq!(h_fo(0.5, 2.0, 2).unwrap(), 0.0625);
        assert_eq!(h_so(0.25, 1.0, 2).unwrap(), 0.0625);
        assert!(rel(h_so(3.04, 1.0, 5).unwrap(), 0.304) < 1e-15);
        assert_eq!(h_so(0.25, 2.0, 2).unwrap(), 0.0625 / 4.0);
        assert!(h_fo(0.5, 0.0, 2).is_err());
        assert!(h_so(0.5, 1.0, 1).is_err());
    }

    #[test]
    fn resistance_examples() {
        assert!(rel(effective_resistance_total(&star(3)).unwrap(), 18.0) < 1e-12);
        assert!(rel(effective_resistance_total(&ring(3).unwrap()).unwrap(), 4.0) < 1e-12);
        assert!(rel(effective_resistance_total(&path(2).unwrap()).unwrap(), 2.0) < 1e-12);
        let r = resistance_matrix(&ring(3).unwrap()).unwrap();
        assert!(rel(r[(0, 1)], 2.0 / 3.0) < 1e-12);
    }

    #[test]
    fn hitting_time_examples() {
        let f = hitting_time_matrix(&path(2).unwrap()).unwrap();
        assert!(rel(f[(0, 1)], 1.0) < 1e-12 && rel(f[(1, 0)], 1.0) < 1e-12);

        let f = hitting_time_matrix(&ring(3).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 2.0 };
                assert!((f[(i, j)] - want).abs() < 1e-12);
            }
        }

        let k13 = star(3);
        let f = hitting_time_matrix(&k13).unwrap();
        assert!(rel(f[(0, 1)] + f[(1, 0)], 6.0) < 1e-12);
        assert!(rel(mean_hitting_time(&f), 4.5) < 1e-12);
        assert!(rel(gmfpt(&k13, 2.25).unwrap(), 4.5) < 1e-15);
        assert!(rel(gmfpt(&ring(3).unwrap(), 2.0 / 3.0).unwrap(), 2.0) < 1e-15);
    }

    #[test]
    fn wiener_examples() {
        assert_eq!(wiener_index(&path(2).unwrap()).unwrap(), 1);
        assert_eq!(wiener_index(&star(3)).unwrap(), 9);
        assert_eq!(wiener_index(&path(3).unwrap()).unwrap(), 4);
    }

    #[test]
    fn disconnected_inputs_fail() {
        let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(effective_resistance_total(&g), Err(Error::Disconnected)));
        assert!(matches!(hitting_time_matrix(&g), Err(Error::Disconnected)));
        assert!(matches!(wiener_index(&g), Err(Error::Disconnected)));
    }

    #[test]
    fn identities_on_fractals() {
        for g in [
            tree_like(1, 2).unwrap(),
            tree_like(2, 2).unwrap(),
            tree_like(3, 2).unwrap(),
            vicsek(3, 2).unwrap(),
            vicsek(4, 2).unwrap(),
        ] {
            let s = s_of(&g);
            let n = g.num_nodes() as f64;
            assert!(rel(effective_resistance_total(&g).unwrap(), 2.0 * n * s) < 1e-9);
            let f = hitting_time_matrix(&g).unwrap();
            assert!(rel(mean_hitting_time(&f), gmfpt(&g, s).unwrap()) < 1e-9);
            assert!(rel(gmfpt(&g, s).unwrap(), 2.0 * s) < 1e-12);
            assert!(rel(wiener_index(&g).unwrap() as f64, n * s) < 1e-9);
        }
    }

    fn connected_graph() -> impl Strategy<Value = Graph> {
        (3usize..16).prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            let extras = prop::collection::vec((0..n, 0..n), 0..n);
            (Just(n), parents, extras).prop_map(|(n, parents, extras)| {
                let mut edges: std::collections::BTreeSet<(usize, usize)> = parents
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| (p, i + 1))
                    .collect();
                edges.extend(extras.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))));
                Graph::new(n, edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn coherence_is_relabeling_invariant(
            g in connected_graph(),
            perm_seed in prop::collection::vec(any::<u32>(), 16),
        ) {
            let n = g.num_nodes();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.sort_by_key(|&i| perm_seed[i]);
            let h = g.relabeled(&perm).unwrap();
            let (a, b) = (s_of(&g), s_of(&h));
            prop_assert!(rel(h_fo(a, 1.0, n).unwrap(), h_fo(b, 1.0, n).unwrap()) < 1e-12);
            let sa = SpectrumSummary::of_graph(&g, &Caps::default()).unwrap().s2;
            let sb = SpectrumSummary::of_graph(&h, &Caps::default()).unwrap().s2;
            prop_assert!(rel(h_so(sa, 1.0, n).unwrap(), h_so(sb, 1.0, n).unwrap()) < 1e-12);
            prop_assert_eq!(wiener_index(&g).unwrap(), wiener_index(&h).unwrap());
        }

        #[test]
        fn resistance_and_hitting_identities(g in connected_graph()) {
            let s = s_of(&g);
            let n = g.num_nodes() as f64;
            prop_assert!(rel(effective_resistance_total(&g).unwrap(), 2.0 * n * s) < 1e-9);
            let f = hitting_time_matrix(&g).unwrap();
            prop_assert!(rel(mean_hitting_time(&f), gmfpt(&g, s).unwrap()) < 1e-9);
            let r = resistance_matrix(&g).unwrap();
            let m2 = 2.0 * g.num_edges() as f64;
            for i in 0..g.num_nodes() {
                for j in 0..i {
                    prop_assert!((f[(i, j)] + f[(j, i)] - m2 * r[(i, j)]).abs() <= 1e-9 * m2 * r[(i, j)]);
                }
            }
        }
    }
}
