use crate::error::{Error, Result};
use crate::linalg::{self, SparseMatrix};
use crate::problem::{BlackBoxObjective, ConstrainedProblem, GroupL2Norm, L1Norm, PenaltyBlock};

use super::{least_squares_oracle, GraphMatrix};

/// `−I` on rows `offset..offset+size` of a `rows × size` block.
fn negative_selector(rows: usize, offset: usize, size: usize) -> SparseMatrix {
    let triplets: Vec<_> = (0..size).map(|k| (offset + k, k, -1.0)).collect();
    SparseMatrix::from_triplets(rows, size, &triplets)
}

/// `f(x) + τ₁‖x‖₁ + τ₂‖Ĝx‖₁` split as `y₁ = x`, `y₂ = Ĝx`:
/// `A = [I; Ĝ]`, `B₁ = [−I; 0]`, `B₂ = [0; −I]`, `c = 0`.
/// A graph without edges yields a single-block problem.
pub fn build_fused_lasso_problem(
    oracle: BlackBoxObjective,
    lipschitz: f64,
    graph: &GraphMatrix,
    tau1: f64,
    tau2: f64,
) -> Result<ConstrainedProblem> {
    let d = oracle.dim();
    if graph.dim() != d {
        return Err(Error::DimensionMismatch {
            block: None,
            detail: format!("graph over {} features, oracle over {d}", graph.dim()),
        });
    }
    let e = graph.num_edges();
    let rows = d + e;
    let a = SparseMatrix::vstack(&[&SparseMatrix::identity(d), &graph.matrix]);
    let mut blocks = vec![PenaltyBlock::new(negative_selector(rows, 0, d), L1Norm { weight: tau1 })];
    if e > 0 {
        blocks.push(PenaltyBlock::new(negative_selector(rows, d, e), L1Norm { weight: tau2 }));
    }
    Ok(ConstrainedProblem::new(oracle, a, blocks, vec![0.0; rows], lipschitz))
}

/// The unsplit fused lasso objective at `x`.
pub fn fused_lasso_objective(
    oracle: &BlackBoxObjective,
    graph: &GraphMatrix,
    tau1: f64,
    tau2: f64,
    x: &[f64],
) -> Result<f64> {
    Ok(oracle.mean_value(x)?
        + tau1 * linalg::norm_l1(x)
        + tau2 * linalg::norm_l1(&graph.matrix.matvec(x)))
}

/// One block per group: `S_g x − y_g = 0` with `ψ_g = τ‖·‖₂`. Groups may
/// overlap but must cover every coordinate, otherwise `A` loses rank.
pub fn build_group_split_problem(
    oracle: BlackBoxObjective,
    lipschitz: f64,
    groups: &[Vec<usize>],
    tau: f64,
) -> Result<ConstrainedProblem> {
    let d = oracle.dim();
    if let Some((g, _)) = groups.iter().enumerate().find(|(_, g)| g.is_empty()) {
        return Err(Error::DimensionMismatch {
            block: Some(g),
            detail: "empty group".into(),
        });
    }
    let mut covered = vec![false; d];
    for (g, group) in groups.iter().enumerate() {
        for &i in group {
            if i >= d {
                return Err(Error::DimensionMismatch {
                    block: Some(g),
                    detail: format!("coordinate {i} outside 0..{d}"),
                });
            }
            covered[i] = true;
        }
    }
    let missing: Vec<usize> = (0..d).filter(|&i| !covered[i]).collect();
    if !missing.is_empty() {
        return Err(Error::CoverageError { missing });
    }

    let rows: usize = groups.iter().map(Vec::len).sum();
    let mut triplets = Vec::with_capacity(rows);
    let mut blocks = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for group in groups {
        for (k, &i) in group.iter().enumerate() {
            triplets.push((offset + k, i, 1.0));
        }
        blocks.push(PenaltyBlock::new(
            negative_selector(rows, offset, group.len()),
            GroupL2Norm { weight: tau },
        ));
        offset += group.len();
    }
    let a = SparseMatrix::from_triplets(rows, d, &triplets);
    Ok(ConstrainedProblem::new(oracle, a, blocks, vec![0.0; rows], lipschitz))
}

/// Convex surrogate `(1/n)Σ½(aᵢᵀx − bᵢ)² + τ‖y‖₁` with `x − y = 0`.
pub fn build_lasso_problem(features: SparseMatrix, targets: Vec<f64>, tau: f64) -> Result<ConstrainedProblem> {
    let d = features.cols();
    let (oracle, lipschitz) = least_squares_oracle(features, targets)?;
    Ok(ConstrainedProblem::new(
        oracle,
        SparseMatrix::identity(d),
        vec![PenaltyBlock::new(negative_selector(d, 0, d), L1Norm { weight: tau })],
        vec![0.0; d],
        lipschitz,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{correntropy_oracle, synth_dataset};
    use crate::problem::validate_problem;

    fn oracle(d: usize) -> (BlackBoxObjective, f64) {
        let (ds, _) = synth_dataset(20, d, 1.0, 0.1, 5).unwrap();
        correntropy_oracle(&ds, 1.0).unwrap()
    }

    #[test]
    fn fused_lasso_layout() {
        let (o, l) = oracle(4);
        let graph = GraphMatrix::from_edges(4, vec![(0, 1), (2, 3)]).unwrap();
        let p = build_fused_lasso_problem(o, l, &graph, 1e-5, 1e-5).unwrap();
        assert_eq!(p.constraint_rows(), 6);
        assert_eq!(p.num_blocks(), 2);
        let report = validate_problem(&p).unwrap();
        assert!(report.sigma_a_min >= 1.0 - 1e-12);

        let x = vec![0.5, -1.0, 2.0, 0.25];
        let y = vec![x.clone(), graph.matrix.matvec(&x)];
        assert!(linalg::norm(&p.residual(&x, &y)) == 0.0);
    }

    #[test]
    fn edgeless_graph_drops_second_block() {
        let (o, l) = oracle(3);
        let graph = GraphMatrix::from_edges(3, vec![]).unwrap();
        let p = build_fused_lasso_problem(o, l, &graph, 1e-5, 1e-5).unwrap();
        assert_eq!(p.num_blocks(), 1);
        validate_problem(&p).unwrap();
    }

    #[test]
    fn fused_lasso_rejects_wrong_graph() {
        let (o, l) = oracle(3);
        let graph = GraphMatrix::from_edges(4, vec![(0, 1)]).unwrap();
        assert!(matches!(
            build_fused_lasso_problem(o, l, &graph, 1.0, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn singleton_groups_give_identity() {
        let (o, l) = oracle(3);
        let p = build_group_split_problem(o, l, &[vec![0], vec![1], vec![2]], 0.1).unwrap();
        assert_eq!(p.a.to_dense(), nalgebra::DMatrix::identity(3, 3));
        assert_eq!(p.num_blocks(), 3);
        validate_problem(&p).unwrap();
    }

    #[test]
    fn overlapping_groups_are_full_rank() {
        let (o, l) = oracle(3);
        let p = build_group_split_problem(o, l, &[vec![0, 1], vec![1, 2]], 0.1).unwrap();
        assert_eq!((p.a.rows(), p.a.cols()), (4, 3));
        assert!(validate_problem(&p).unwrap().sigma_a_min > 0.5);
    }

    #[test]
    fn uncovered_coordinates_are_rejected() {
        let (o, l) = oracle(2);
        match build_group_split_problem(o, l, &[vec![0]], 0.1) {
            Err(Error::CoverageError { missing }) => assert_eq!(missing, vec![1]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
