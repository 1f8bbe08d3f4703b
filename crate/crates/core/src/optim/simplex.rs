//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Sized for the LPs that arise here (game values over subsets, relaxed-code
//! polytopes, cutting-plane masters): at most a few hundred rows. Every
//! optimal solve is validated for primal feasibility, weak duality, and
//! complementary slackness before being returned.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;
const DUALITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    pub sense: Sense,
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    /// Per-variable (lower, upper); may be infinite. Empty means all (0, +inf).
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    pub fn new(sense: Sense, c: Vec<f64>) -> Self {
        LpProblem { sense, c, a_ub: vec![], b_ub: vec![], a_eq: vec![], b_eq: vec![], bounds: vec![] }
    }

    pub fn ub(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
        self
    }

    pub fn eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
    /// One multiplier per a_ub row; for Min problems ≤ 0, for Max ≥ 0,
    /// normalized so that value = duals_ub·b_ub + duals_eq·b_eq.
    pub duals_ub: Vec<f64>,
    pub duals_eq: Vec<f64>,
}

/// Internal standard form: min c·x, A x = b, x >= 0.
struct Standard {
    c: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    // provenance of each standard variable: (original var index, scale, shift)
    // meaning original_x[j] += scale * std_x[col] and fixed shift added separately
    var_map: Vec<(usize, f64)>,
    shifts: Vec<f64>,
    // row i sign flip applied to make b >= 0 happens later, inside the solver
    n_eq_rows: usize,
}

fn build_standard(p: &LpProblem) -> Result<Standard> {
    let n = p.c.len();
    for (row, label) in p.a_ub.iter().map(|r| (r, "a_ub")).chain(p.a_eq.iter().map(|r| (r, "a_eq"))) {
        if row.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{label} row has {} entries, expected {}",
                row.len(),
                n
            )));
        }
    }
    if p.a_ub.len() != p.b_ub.len() || p.a_eq.len() != p.b_eq.len() {
        return Err(Error::DimensionMismatch("constraint matrix/rhs length mismatch".into()));
    }
    let bounds: Vec<(f64, f64)> = if p.bounds.is_empty() {
        vec![(0.0, f64::INFINITY); n]
    } else if p.bounds.len() == n {
        p.bounds.clone()
    } else {
        return Err(Error::DimensionMismatch("bounds length mismatch".into()));
    };
    for &(l, u) in &bounds {
        if l > u {
            return Err(Error::BadInput(format!("bound lower {l} above upper {u}")));
        }
    }

    // map each original variable to standard column(s)
    let sign = match p.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut var_map: Vec<(usize, f64)> = Vec::new();
    let mut shifts: Vec<f64> = vec![0.0; n];
    let mut extra_ub: Vec<(usize, f64)> = Vec::new(); // (std col, rhs) for u-l rows
    for (j, &(l, u)) in bounds.iter().enumerate() {
        if l.is_finite() {
            shifts[j] = l;
            var_map.push((j, 1.0));
            if u.is_finite() {
                extra_ub.push((var_map.len() - 1, u - l));
            }
        } else if u.is_finite() {
            shifts[j] = u;
            var_map.push((j, -1.0));
        } else {
            var_map.push((j, 1.0));
            var_map.push((j, -1.0));
        }
    }
    let n_std = var_map.len();
    let col_of = |k: usize| -> (usize, f64, f64) {
        let (j, s) = var_map[k];
        (j, s, shifts[j])
    };

    let mut c_std = vec![0.0; n_std];
    for k in 0..n_std {
        let (j, s, _) = col_of(k);
        c_std[k] = sign * p.c[j] * s;
    }

    // rows: equalities, then original ub rows (with slack), then bound rows
    let n_ub_rows = p.a_ub.len() + extra_ub.len();
    let total_cols = n_std + n_ub_rows; // slacks for every ub row
    let mut a = Vec::with_capacity(p.a_eq.len() + n_ub_rows);
    let mut b = Vec::with_capacity(p.a_eq.len() + n_ub_rows);

    let expand_row = |row: &[f64]| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; total_cols];
        for k in 0..n_std {
            let (j, s, _) = col_of(k);
            out[k] = row[j] * s;
        }
        // the fixed shift of every original variable moves to the rhs
        let shift_sum: f64 = row.iter().zip(&shifts).map(|(r, sh)| r * sh).sum();
        (out, shift_sum)
    };

    for (row, &rhs) in p.a_eq.iter().zip(&p.b_eq) {
        let (r, sh) = expand_row(row);
        a.push(r);
        b.push(rhs - sh);
    }
    for (i, (row, &rhs)) in p.a_ub.iter().zip(&p.b_ub).enumerate() {
        let (mut r, sh) = expand_row(row);
        r[n_std + i] = 1.0;
        a.push(r);
        b.push(rhs - sh);
    }
    for (i, &(col, rhs)) in extra_ub.iter().enumerate() {
        let mut r = vec![0.0; total_cols];
        r[col] = 1.0;
        r[n_std + p.a_ub.len() + i] = 1.0;
        a.push(r);
        b.push(rhs);
    }
    c_std.resize(total_cols, 0.0);

    Ok(Standard {
        c: c_std,
        a,
        b,
        var_map,
        shifts,
        n_eq_rows: p.a_eq.len(),
    })
}

pub fn lp_solve(p: &LpProblem) -> Result<LpSolution> {
    let std_form = build_standard(p)?;
    let m = std_form.a.len();
    let n = if m > 0 { std_form.a[0].len() } else { std_form.c.len() };

    // tableau columns: standard vars | artificials | rhs
    let width = n + m + 1;
    let mut t = vec![vec![0.0f64; width]; m];
    let mut row_sign = vec![1.0f64; m];
    for i in 0..m {
        let flip = std_form.b[i] < 0.0;
        row_sign[i] = if flip { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = row_sign[i] * std_form.a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = row_sign[i] * std_form.b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // phase 1: minimize sum of artificials
    let mut cost1 = vec![0.0f64; width];
    for j in n..n + m {
        cost1[j] = 1.0;
    }
    reduce_cost_row(&mut cost1, &t, &basis);
    run_simplex(&mut t, &mut basis, &mut cost1, n + m, |_| true)?;
    let phase1_obj = -cost1[width - 1];
    if phase1_obj > FEAS_TOL {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: vec![],
            value: f64::NAN,
            duals_ub: vec![],
            duals_eq: vec![],
        });
    }

    // drive remaining artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > PIVOT_TOL) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }

    // phase 2: original costs; artificials may not enter
    let mut cost2 = vec![0.0f64; width];
    cost2[..n].copy_from_slice(&std_form.c);
    reduce_cost_row(&mut cost2, &t, &basis);
    let unbounded = run_simplex(&mut t, &mut basis, &mut cost2, n + m, |j| j < n)?;
    if unbounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![],
            value: f64::NAN,
            duals_ub: vec![],
            duals_eq: vec![],
        });
    }

    // recover standard-variable values
    let mut x_std = vec![0.0f64; n];
    for i in 0..m {
        if basis[i] < n {
            x_std[basis[i]] = t[i][width - 1];
        }
    }
    // map back to original variables
    let mut x = std_form.shifts.clone();
    for (k, &(j, s)) in std_form.var_map.iter().enumerate() {
        x[j] += s * x_std[k];
    }
    let sense_sign = match p.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let value: f64 = p.c.iter().zip(&x).map(|(c, v)| c * v).sum();

    // duals of standard rows from artificial reduced costs: y_i = -rc(artificial_i),
    // undone for the b >= 0 row flips
    let mut y = vec![0.0f64; m];
    for i in 0..m {
        y[i] = -cost2[n + i] * row_sign[i];
    }
    // standard row layout: [eq | original ub | internal bound rows]
    let n_eq = std_form.n_eq_rows;
    let duals_eq: Vec<f64> = y[..n_eq].iter().map(|v| sense_sign * v).collect();
    let duals_ub: Vec<f64> =
        y[n_eq..n_eq + p.a_ub.len()].iter().map(|v| sense_sign * v).collect();

    let sol = LpSolution { status: LpStatus::Optimal, x, value, duals_ub, duals_eq };
    validate(&std_form, &x_std, &y)?;
    Ok(sol)
}

/// Subtract basis rows from the cost row so basic columns read zero.
fn reduce_cost_row(cost: &mut [f64], t: &[Vec<f64>], basis: &[usize]) {
    for (i, &bj) in basis.iter().enumerate() {
        let f = cost[bj];
        if f != 0.0 {
            for j in 0..cost.len() {
                cost[j] -= f * t[i][j];
            }
        }
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let piv = t[row][col];
    for v in t[row].iter_mut() {
        *v /= piv;
    }
    for i in 0..t.len() {
        if i != row {
            let f = t[i][col];
            if f != 0.0 {
                for j in 0..t[i].len() {
                    t[i][j] -= f * t[row][j];
                }
            }
        }
    }
    basis[row] = col;
}

/// Bland's rule; returns Ok(true) if unbounded.
fn run_simplex(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &mut Vec<f64>,
    n_cols: usize,
    allowed: impl Fn(usize) -> bool,
) -> Result<bool> {
    let m = t.len();
    let width = cost.len();
    let max_iters = 50_000 + 200 * (m + n_cols);
    for _ in 0..max_iters {
        let entering = (0..n_cols).find(|&j| allowed(j) && cost[j] < -PIVOT_TOL);
        let Some(je) = entering else { return Ok(false) };
        // ratio test, Bland tie-break on smallest basis variable index
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..m {
            if t[i][je] > PIVOT_TOL {
                let ratio = t[i][width - 1] / t[i][je];
                match best {
                    None => best = Some((ratio, basis[i], i)),
                    Some((r, bv, _)) => {
                        if ratio < r - 1e-12 || (ratio < r + 1e-12 && basis[i] < bv) {
                            best = Some((ratio, basis[i], i));
                        }
                    }
                }
            }
        }
        let Some((_, _, ir)) = best else { return Ok(true) };
        pivot(t, basis, ir, je);
        // eliminate the entering column from the cost row
        let f = cost[je];
        if f != 0.0 {
            for j in 0..width {
                cost[j] -= f * t[ir][j];
            }
        }
    }
    Err(Error::SolverFailure("simplex iteration cap hit".into()))
}

/// Feasibility, weak duality, and complementary slackness on the standard form.
fn validate(s: &Standard, x_std: &[f64], y: &[f64]) -> Result<()> {
    let m = s.a.len();
    let mut max_resid = 0.0f64;
    for i in 0..m {
        // slack variables are part of x_std, so every standard row is an equality
        let lhs: f64 = s.a[i].iter().zip(x_std).map(|(a, x)| a * x).sum();
        max_resid = max_resid.max((lhs - s.b[i]).abs() / (1.0 + s.b[i].abs()));
    }
    if x_std.iter().any(|&v| v < -FEAS_TOL) {
        return Err(Error::SolverFailure("negative standard variable".into()));
    }
    if max_resid > FEAS_TOL {
        return Err(Error::SolverFailure(format!(
            "primal residual {max_resid:.3e} above tolerance"
        )));
    }
    // weak duality on the standard form: c·x == y·b
    let primal: f64 = s.c.iter().zip(x_std).map(|(c, v)| c * v).sum();
    let dual: f64 = y.iter().zip(&s.b).map(|(y, b)| y * b).sum();
    let scale = 1.0 + primal.abs().max(dual.abs());
    if (primal - dual).abs() / scale > DUALITY_TOL {
        return Err(Error::SolverFailure(format!(
            "duality gap {:.3e} above tolerance",
            (primal - dual).abs()
        )));
    }
    // complementary slackness: positive vars have ~zero reduced cost
    for (j, &v) in x_std.iter().enumerate() {
        if v > 1e-7 {
            let rc = s.c[j] - y.iter().zip(s.a.iter().map(|r| r[j])).map(|(y, a)| y * a).sum::<f64>();
            if rc.abs() > DUALITY_TOL * scale {
                return Err(Error::SolverFailure(format!(
                    "complementary slackness violated at variable {j}: rc={rc:.3e}"
                )));
            }
        }
    }
    Ok(())
}
