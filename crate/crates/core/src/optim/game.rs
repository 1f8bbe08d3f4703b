//! Value and optimal strategies of a finite zero-sum matrix game.

use crate::error::{Error, Result};
use crate::optim::simplex::{lp_solve, LpProblem, LpStatus, Sense};

const AGREE_TOL: f64 = 1e-8;

/// Solution of a matrix game where the row player minimizes `x' A z` and the
/// column player maximizes it.
#[derive(Debug, Clone)]
pub struct GameSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
}

/// Solves the zero-sum game with payoff matrix `a` (row minimizer, column
/// maximizer) by a pair of linear programs, one per player. The two optimal
/// values must agree to within 1e-8 or the solve is rejected.
pub fn matrix_game(a: &[Vec<f64>]) -> Result<GameSolution> {
    let m = a.len();
    if m == 0 {
        return Err(Error::BadInput("matrix game needs at least one row".into()));
    }
    let n = a[0].len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(Error::BadInput("matrix game rows must be nonempty and equal length".into()));
    }

    // Row player: min t  s.t.  sum_i x_i a_ij <= t for all j,  x in simplex.
    // Variables (x_1..x_m, t), with t free via bounds.
    let mut c = vec![0.0; m + 1];
    c[m] = 1.0;
    let mut a_ub = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = vec![0.0; m + 1];
        for i in 0..m {
            row[i] = a[i][j];
        }
        row[m] = -1.0;
        a_ub.push(row);
    }
    let mut a_eq_row = vec![1.0; m + 1];
    a_eq_row[m] = 0.0;
    let mut bounds = vec![(0.0, f64::INFINITY); m + 1];
    bounds[m] = (f64::NEG_INFINITY, f64::INFINITY);
    let prob = LpProblem {
        sense: Sense::Min,
        c,
        a_ub,
        b_ub: vec![0.0; n],
        a_eq: vec![a_eq_row],
        b_eq: vec![1.0],
        bounds,
    };
    let row_sol = lp_solve(&prob)?;
    if row_sol.status != LpStatus::Optimal {
        return Err(Error::SolverFailure("row-player LP did not reach optimality".into()));
    }
    let row_strategy: Vec<f64> = row_sol.x[..m].iter().map(|v| v.max(0.0)).collect();

    // Column player: max t  s.t.  sum_j a_ij z_j >= t for all i,  z in simplex.
    let mut c2 = vec![0.0; n + 1];
    c2[n] = 1.0;
    let mut a_ub2 = Vec::with_capacity(m);
    for i in 0..m {
        // t - sum_j a_ij z_j <= 0
        let mut row = vec![0.0; n + 1];
        for j in 0..n {
            row[j] = -a[i][j];
        }
        row[n] = 1.0;
        a_ub2.push(row);
    }
    let mut a_eq_row2 = vec![1.0; n + 1];
    a_eq_row2[n] = 0.0;
    let mut bounds2 = vec![(0.0, f64::INFINITY); n + 1];
    bounds2[n] = (f64::NEG_INFINITY, f64::INFINITY);
    let prob2 = LpProblem {
        sense: Sense::Max,
        c: c2,
        a_ub: a_ub2,
        b_ub: vec![0.0; m],
        a_eq: vec![a_eq_row2],
        b_eq: vec![1.0],
        bounds: bounds2,
    };
    let col_sol = lp_solve(&prob2)?;
    if col_sol.status != LpStatus::Optimal {
        return Err(Error::SolverFailure("column-player LP did not reach optimality".into()));
    }
    let col_strategy: Vec<f64> = col_sol.x[..n].iter().map(|v| v.max(0.0)).collect();

    let scale = 1.0 + row_sol.value.abs().max(col_sol.value.abs());
    if (row_sol.value - col_sol.value).abs() > AGREE_TOL * scale {
        return Err(Error::SolverFailure(format!(
            "matrix game LP values disagree: {} vs {}",
            row_sol.value, col_sol.value
        )));
    }

    Ok(GameSolution {
        value: 0.5 * (row_sol.value + col_sol.value),
        row_strategy: normalize(row_strategy),
        col_strategy: normalize(col_strategy),
    })
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in &mut v {
            *x /= s;
        }
    }
    v
}
