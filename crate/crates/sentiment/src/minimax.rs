//! Small zero-sum matrix game solver.
//!
//! Solves `max over mixed strategies x` of `min over columns j` of
//! `sum_i x_i * payoffs[i][j]` for the row player. Used by arbitrage
//! detection, where rows are sentiments and columns are grid outcomes.
//!
//! The row count is tiny (a handful of sentiments) while the column count
//! can be ~1000 grid points, so we run simplex on the packing dual — its
//! basis has only `rows` entries — and read the row strategy off the slack
//! reduced costs.

#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    /// Game value for the row player under optimal play.
    pub value: f64,
    /// Optimal row mixed strategy (non-negative, sums to 1).
    pub strategy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GameError {
    #[error("payoff matrix must be non-empty and rectangular")]
    BadMatrix,
    #[error("simplex did not converge")]
    NoConvergence,
}

const EPS: f64 = 1e-12;

/// Solve the zero-sum game for the row (maximizing) player.
pub fn solve_zero_sum(payoffs: &[Vec<f64>]) -> Result<GameSolution, GameError> {
    let rows = payoffs.len();
    if rows == 0 || payoffs[0].is_empty() {
        return Err(GameError::BadMatrix);
    }
    let cols = payoffs[0].len();
    if payoffs.iter().any(|r| r.len() != cols) {
        return Err(GameError::BadMatrix);
    }

    if rows == 1 {
        let value = payoffs[0].iter().cloned().fold(f64::INFINITY, f64::min);
        return Ok(GameSolution {
            value,
            strategy: vec![1.0],
        });
    }

    // Shift payoffs positive so the reciprocal transformation is valid:
    // with P' = P + shift > 0 and v' = v + shift, the column player's
    // packing LP  max 1'u  s.t.  P'u <= 1, u >= 0  has optimum 1/v', and
    // the row strategy is the normalized dual of its row constraints.
    let min_entry = payoffs
        .iter()
        .flatten()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min_entry.min(0.0);

    // Tableau over columns: cols structural vars + rows slacks + rhs.
    let width = cols + rows + 1;
    let mut tableau: Vec<Vec<f64>> = (0..rows)
        .map(|i| {
            let mut row = Vec::with_capacity(width);
            for j in 0..cols {
                row.push(payoffs[i][j] + shift);
            }
            for k in 0..rows {
                row.push(if k == i { 1.0 } else { 0.0 });
            }
            row.push(1.0);
            row
        })
        .collect();
    // Objective coefficients: 1 for structural columns, 0 for slacks.
    let cost = |j: usize| if j < cols { 1.0 } else { 0.0 };
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    let max_iterations = 50 * (rows + cols);
    for iteration in 0..max_iterations {
        // Reduced costs: c_j - c_B . B^-1 A_j (the tableau holds B^-1 A).
        let reduced = |j: usize, tableau: &Vec<Vec<f64>>, basis: &Vec<usize>| {
            let mut z = 0.0;
            for (r, &b) in basis.iter().enumerate() {
                z += cost(b) * tableau[r][j];
            }
            cost(j) - z
        };

        // Entering column: Dantzig normally, Bland past a burn-in to rule
        // out cycling on degenerate tableaus.
        let use_bland = iteration > 10 * (rows + cols);
        let mut entering = None;
        let mut best = EPS;
        for j in 0..cols + rows {
            if basis.contains(&j) {
                continue;
            }
            let rc = reduced(j, &tableau, &basis);
            if rc > EPS {
                if use_bland {
                    entering = Some(j);
                    break;
                }
                if rc > best {
                    best = rc;
                    entering = Some(j);
                }
            }
        }
        let entering = match entering {
            Some(j) => j,
            None => {
                // Optimal: recover strategy and value.
                let mut objective = 0.0;
                for (r, &b) in basis.iter().enumerate() {
                    objective += cost(b) * tableau[r][width - 1];
                }
                if objective <= 0.0 {
                    return Err(GameError::NoConvergence);
                }
                // Dual value on row i = reduced cost of slack i, negated.
                let mut duals = Vec::with_capacity(rows);
                for i in 0..rows {
                    let mut z = 0.0;
                    for (r, &b) in basis.iter().enumerate() {
                        z += cost(b) * tableau[r][cols + i];
                    }
                    duals.push(z.max(0.0));
                }
                let total: f64 = duals.iter().sum();
                if total <= 0.0 {
                    return Err(GameError::NoConvergence);
                }
                let strategy: Vec<f64> = duals.iter().map(|d| d / total).collect();
                let value = 1.0 / objective - shift;
                return Ok(GameSolution { value, strategy });
            }
        };

        // Ratio test.
        let mut leaving = None;
        let mut best_ratio = f64::INFINITY;
        for r in 0..rows {
            let coeff = tableau[r][entering];
            if coeff > EPS {
                let ratio = tableau[r][width - 1] / coeff;
                if ratio < best_ratio - EPS
                    || (use_bland && (ratio - best_ratio).abs() <= EPS && leaving.is_none())
                {
                    best_ratio = ratio;
                    leaving = Some(r);
                }
            }
        }
        let leaving = leaving.ok_or(GameError::NoConvergence)?;

        // Pivot.
        let pivot = tableau[leaving][entering];
        for v in tableau[leaving].iter_mut() {
            *v /= pivot;
        }
        for r in 0..rows {
            if r != leaving {
                let factor = tableau[r][entering];
                if factor != 0.0 {
                    for j in 0..width {
                        tableau[r][j] -= factor * tableau[leaving][j];
                    }
                }
            }
        }
        basis[leaving] = entering;
    }

    Err(GameError::NoConvergence)
}

/// Independent check: evaluate `min over columns` of a given row mix.
pub fn guaranteed_value(payoffs: &[Vec<f64>], strategy: &[f64]) -> f64 {
    let cols = payoffs[0].len();
    (0..cols)
        .map(|j| {
            strategy
                .iter()
                .zip(payoffs)
                .map(|(w, row)| w * row[j])
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} != {b} (tol {tol})");
    }

    #[test]
    fn matching_pennies_is_even() {
        let payoffs = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        let solution = solve_zero_sum(&payoffs).unwrap();
        assert_close(solution.value, 0.0, 1e-9);
        assert_close(solution.strategy[0], 0.5, 1e-9);
        assert_close(solution.strategy[1], 0.5, 1e-9);
    }

    #[test]
    fn rock_paper_scissors_is_uniform() {
        let payoffs = vec![
            vec![0.0, -1.0, 1.0],
            vec![1.0, 0.0, -1.0],
            vec![-1.0, 1.0, 0.0],
        ];
        let solution = solve_zero_sum(&payoffs).unwrap();
        assert_close(solution.value, 0.0, 1e-9);
        for w in &solution.strategy {
            assert_close(*w, 1.0 / 3.0, 1e-9);
        }
    }

    #[test]
    fn dominant_row_takes_all() {
        let payoffs = vec![vec![3.0, 2.0], vec![1.0, 1.0]];
        let solution = solve_zero_sum(&payoffs).unwrap();
        assert_close(solution.value, 2.0, 1e-9);
        assert_close(solution.strategy[0], 1.0, 1e-9);
    }

    #[test]
    fn known_2x2_mixed_game() {
        // Value of [[4, 1], [2, 3]] is (4*3 - 1*2) / (4+3-1-2) = 10/4 = 2.5,
        // with row strategy (1/4, 3/4).
        let payoffs = vec![vec![4.0, 1.0], vec![2.0, 3.0]];
        let solution = solve_zero_sum(&payoffs).unwrap();
        assert_close(solution.value, 2.5, 1e-9);
        assert_close(solution.strategy[0], 0.25, 1e-9);
        assert_close(solution.strategy[1], 0.75, 1e-9);
        assert_close(
            guaranteed_value(&payoffs, &solution.strategy),
            solution.value,
            1e-9,
        );
    }

    #[test]
    fn single_row_takes_column_minimum() {
        let payoffs = vec![vec![0.4, 0.1, 0.9]];
        let solution = solve_zero_sum(&payoffs).unwrap();
        assert_close(solution.value, 0.1, 1e-12);
        assert_eq!(solution.strategy, vec![1.0]);
    }

    #[test]
    fn strategies_match_brute_force_grid() {
        // Brute force over a 1e-3 lambda grid as an independent oracle.
        let payoffs = vec![vec![0.1, 0.0], vec![0.0, 0.1]];
        let solution = solve_zero_sum(&payoffs).unwrap();
        let mut best = f64::NEG_INFINITY;
        for step in 0..=1000 {
            let lambda = step as f64 / 1000.0;
            let value = guaranteed_value(&payoffs, &[lambda, 1.0 - lambda]);
            best = best.max(value);
        }
        assert_close(solution.value, best, 1e-9);
        assert_close(solution.value, 0.05, 1e-12);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(solve_zero_sum(&[]).is_err());
        assert!(solve_zero_sum(&[vec![]]).is_err());
        assert!(solve_zero_sum(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn negative_only_games() {
        let payoffs = vec![vec![-0.3, -0.5], vec![-0.4, -0.2]];
        let solution = solve_zero_sum(&payoffs).unwrap();
        // Value solves the 2x2 closed form: (ad - bc) / (a + d - b - c).
        let expected = (-0.3f64 * -0.2 - -0.5 * -0.4) / (-0.3 + -0.2 - -0.5 - -0.4);
        assert_close(solution.value, expected, 1e-9);
        assert!(solution.value < 0.0);
    }
}
