//! Greedy block matching pursuit with per-subcarrier least-squares refits.

use super::{
    residual_norm, support_least_squares, GroupSparseProblem, SolverReport, SolverStatus,
};
use crate::signal::BlockVec;
use crate::Complex;

/// Block orthogonal matching pursuit.
///
/// Each round selects the block maximizing the normalized correlation
/// `||H_i^H r|| / ||H_i||_F`, refits least squares on the enlarged support
/// (decoupled per subcarrier), and updates the residual. Stops once
/// `||r|| <= epsilon` or `max_blocks` blocks are selected.
///
/// Rank-deficient per-subcarrier refits fall back to the minimum-norm
/// solution and are flagged in the report.
pub fn block_omp(problem: &GroupSparseProblem<'_>, max_blocks: usize) -> SolverReport {
    let channel = problem.channel();
    let y = problem.y();
    let epsilon = problem.epsilon();
    let n_users = channel.n_users();
    assert!(
        max_blocks <= n_users,
        "max_blocks {max_blocks} exceeds user count {n_users}"
    );

    // Frobenius norms of the column blocks, for score normalization.
    let col_norms: Vec<f64> = (0..n_users)
        .map(|i| {
            super::column_gram_diag(channel, i)
                .iter()
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    let mut support: Vec<usize> = Vec::new();
    let mut x = BlockVec::zeros(channel.n_subcarriers(), n_users);
    let mut residual: Vec<Complex> = y.to_vec();
    let mut resid_norm = crate::norm(y);
    let mut rank_deficient = false;
    let mut iterations = 0usize;

    while resid_norm > epsilon && support.len() < max_blocks {
        iterations += 1;
        let corr = channel.apply_adjoint(&residual);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n_users {
            if support.contains(&i) || col_norms[i] == 0.0 {
                continue;
            }
            let score = corr.block_norm(i) / col_norms[i];
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let Some((pick, _)) = best else { break };
        support.push(pick);
        support.sort_unstable();

        let (sol, r, deficient) = support_least_squares(channel, y, &support);
        rank_deficient |= deficient;
        x = sol;
        resid_norm = r;
        let hx = channel.apply(&x);
        for (ri, (yi, hi)) in residual.iter_mut().zip(y.iter().zip(&hx)) {
            *ri = yi - hi;
        }
    }

    let recomputed = residual_norm(channel, y, &x);
    SolverReport {
        solution: x,
        residual_norm: recomputed,
        iterations,
        lambda_final: None,
        status: if recomputed <= epsilon {
            SolverStatus::Converged
        } else {
            SolverStatus::MaxIter
        },
        rank_deficient,
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::random_channel;
    use super::*;
    use crate::channel::draw_cn_vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn support_of(x: &BlockVec) -> Vec<usize> {
        (0..x.n_blocks()).filter(|&i| x.block_norm(i) > 1e-9).collect()
    }

    #[test]
    fn zero_data_gives_empty_support() {
        let ch = random_channel(2, 4, 4, 50);
        let y = vec![Complex::new(0.0, 0.0); ch.output_len()];
        let p = GroupSparseProblem::new(&ch, &y, 0.0);
        let report = block_omp(&p, 4);
        assert!(support_of(&report.solution).is_empty());
        assert_eq!(report.status, SolverStatus::Converged);
    }

    #[test]
    fn single_active_block_selected_first() {
        for seed in 0..20u64 {
            let ch = random_channel(2, 4, 4, 600 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(700 + seed);
            let mut x = BlockVec::zeros(4, 4);
            let active = (seed % 4) as usize;
            x.block_mut(active)
                .copy_from_slice(&draw_cn_vector(4, 1.0, &mut rng));
            let y = ch.apply(&x);
            let p = GroupSparseProblem::new(&ch, &y, 1e-8);
            let report = block_omp(&p, 4);
            assert_eq!(report.iterations, 1, "seed {seed}");
            assert_eq!(support_of(&report.solution), vec![active], "seed {seed}");
            assert!(report.residual_norm <= 1e-8);
        }
    }

    #[test]
    fn support_capped_at_max_blocks() {
        let ch = random_channel(2, 6, 4, 51);
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let y = draw_cn_vector(ch.output_len(), 1.0, &mut rng);
        let p = GroupSparseProblem::new(&ch, &y, 0.0);
        let report = block_omp(&p, 2);
        assert!(support_of(&report.solution).len() <= 2);
    }

    #[test]
    fn residual_within_epsilon_on_success() {
        let ch = random_channel(3, 4, 4, 53);
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let mut x = BlockVec::zeros(4, 4);
        x.block_mut(0).copy_from_slice(&draw_cn_vector(4, 1.0, &mut rng));
        x.block_mut(2).copy_from_slice(&draw_cn_vector(4, 1.0, &mut rng));
        let mut y = ch.apply(&x);
        for (yi, n) in y.iter_mut().zip(draw_cn_vector(ch.output_len(), 0.01, &mut rng)) {
            *yi += n;
        }
        let eps = 0.5;
        let p = GroupSparseProblem::new(&ch, &y, eps);
        let report = block_omp(&p, 4);
        if report.status == SolverStatus::Converged {
            assert!(report.residual_norm <= eps);
        }
    }
}
