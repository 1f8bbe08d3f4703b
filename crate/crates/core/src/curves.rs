//! The limiting game values as functions of rate: subset families picked by
//! capacity comparisons, the jammer's rate games L(R) and U(R), their common
//! step structure, the compound channel's eps-capacity read off the steps,
//! and the encoder's optimal subset mixture.

use serde::Serialize;

use crate::capacity::{compound_capacity, MAX_STATES};
use crate::channel::ChannelFamily;
use crate::error::{Error, Result};
use crate::optim::game::matrix_game;
use crate::optim::simplex::{lp_solve, LpProblem, LpStatus, Sense};

/// Game values agree with the step readoff to this absolute tolerance.
const VALUE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// Piecewise-constant, non-decreasing function of rate with values in [0,1].
/// `values` has one entry per interval (one more than `breakpoints`); the
/// per-breakpoint continuity side says which neighboring interval's value
/// the function takes exactly at the breakpoint.
#[derive(Debug, Clone, Serialize)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    continuity: Vec<Side>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, continuity: Vec<Side>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 || continuity.len() != breakpoints.len() {
            return Err(Error::DimensionMismatch(
                "step function needs one value per interval and one side per breakpoint".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadInput("breakpoints must be strictly ascending".into()));
        }
        if values.windows(2).any(|w| w[0] > w[1] + 1e-9) {
            return Err(Error::BadInput("step values must be non-decreasing".into()));
        }
        if values.iter().any(|&v| !(-1e-9..=1.0 + 1e-9).contains(&v)) {
            return Err(Error::BadInput("step values must lie in [0, 1]".into()));
        }
        let values = values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(StepFunction { breakpoints, values, continuity })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, r: f64) -> f64 {
        // index of the first breakpoint >= r
        let mut i = self.breakpoints.partition_point(|&b| b < r);
        if i < self.breakpoints.len() && self.breakpoints[i] == r {
            // exactly on a breakpoint: the continuity side picks the interval
            i = match self.continuity[i] {
                Side::Left => i,
                Side::Right => i + 1,
            };
        }
        self.values[i]
    }

    /// Breakpoints where the value actually changes.
    pub fn jumps(&self) -> Vec<f64> {
        self.breakpoints
            .iter()
            .enumerate()
            .filter(|&(i, _)| (self.values[i + 1] - self.values[i]).abs() > 1e-9)
            .map(|(_, &b)| b)
            .collect()
    }
}

/// One constant piece of the curve pair, with the optimal strategies that
/// realize its value: the jammer's state mixture and the encoder's mixture
/// over decodable subsets.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalReport {
    pub r_left: f64,
    /// `None` for the unbounded last interval.
    pub r_right: Option<f64>,
    pub l_value: f64,
    pub u_value: f64,
    pub jammer_q: Vec<f64>,
    /// Support of the encoder's subset mixture; empty above the last capacity.
    pub pv: Vec<(Vec<usize>, f64)>,
}

/// L(R) and U(R) for one channel family, plus everything needed to audit
/// them: every subset capacity, the shared breakpoints, actual jump
/// locations, and per-interval optimal strategies.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePair {
    pub lower: StepFunction,
    pub upper: StepFunction,
    pub state_labels: Vec<String>,
    /// (ascending state indices, capacity in bits), ordered by subset mask.
    pub capacities: Vec<(Vec<usize>, f64)>,
    pub discontinuities: Vec<f64>,
    pub intervals: Vec<IntervalReport>,
    pub tol: f64,
}

/// All 2^m - 1 nonempty-subset compound capacities of a family.
#[derive(Debug, Clone)]
pub struct SubsetCapacities {
    num_states: usize,
    /// capacity of subset `mask` at index `mask - 1`
    caps: Vec<f64>,
    tol: f64,
}

pub fn all_subset_capacities(family: &ChannelFamily, tol: f64) -> Result<SubsetCapacities> {
    let m = family.num_states();
    if m > MAX_STATES {
        return Err(Error::cap("state subsets", 1u64 << m, 1u64 << MAX_STATES));
    }
    let full = (1u32 << m) - 1;
    let mut caps = Vec::with_capacity(full as usize);
    for mask in 1..=full {
        let states = mask_to_states(mask, m);
        caps.push(compound_capacity(family, &states, tol)?.value);
    }
    Ok(SubsetCapacities { num_states: m, caps, tol })
}

fn mask_to_states(mask: u32, m: usize) -> Vec<usize> {
    (0..m).filter(|&t| mask & (1 << t) != 0).collect()
}

/// Optimal jammer mixture and value of max_q min_{S in family} (1 - q(S)).
#[derive(Debug, Clone)]
pub struct GameValue {
    pub value: f64,
    pub jammer_q: Vec<f64>,
}

impl SubsetCapacities {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn get(&self, states: &[usize]) -> Result<f64> {
        let mask = self.states_to_mask(states)?;
        Ok(self.caps[mask as usize - 1])
    }

    fn states_to_mask(&self, states: &[usize]) -> Result<u32> {
        if states.is_empty() {
            return Err(Error::BadInput("subset must be nonempty".into()));
        }
        let mut mask = 0u32;
        for &s in states {
            if s >= self.num_states {
                return Err(Error::BadInput(format!("state index {s} out of range")));
            }
            mask |= 1 << s;
        }
        Ok(mask)
    }

    /// Compound capacity of the full family.
    pub fn c_lower(&self) -> f64 {
        self.caps[self.caps.len() - 1]
    }

    /// Smallest single-state capacity.
    pub fn c_upper(&self) -> f64 {
        (0..self.num_states)
            .map(|t| self.caps[(1usize << t) - 1])
            .fold(f64::INFINITY, f64::min)
    }

    /// Comparison slack: solver error must not silently flip a subset's
    /// membership, so rate comparisons get a band of twice the capacity tol.
    fn slack(&self) -> f64 {
        2.0 * self.tol
    }

    /// True when `r` sits within the unreliable band around some subset
    /// capacity, where strict/non-strict classification is solver-dependent.
    pub fn near_breakpoint(&self, r: f64) -> bool {
        self.caps.iter().any(|&c| (r - c).abs() <= self.slack())
    }

    fn masks_at_rate(&self, r: f64, strict: bool) -> Vec<u32> {
        let slack = self.slack();
        (1..=self.caps.len() as u32)
            .filter(|&mask| {
                let c = self.caps[mask as usize - 1];
                if strict {
                    r < c - slack
                } else {
                    r <= c + slack
                }
            })
            .collect()
    }

    /// Subsets whose compound capacity supports rate `r`: non-strict gives
    /// {S : r <= C(S)}, strict gives {S : r < C(S)}, both with the slack band.
    pub fn subsets_at_rate(&self, r: f64, strict: bool) -> Vec<Vec<usize>> {
        self.masks_at_rate(r, strict)
            .into_iter()
            .map(|mask| mask_to_states(mask, self.num_states))
            .collect()
    }

    /// Right-continuous game value: the family is the strict one.
    pub fn u_of_r(&self, r: f64) -> Result<GameValue> {
        self.family_game(&self.masks_at_rate(r, true))
    }

    /// Left-continuous game value: the family is the non-strict one.
    pub fn l_of_r(&self, r: f64) -> Result<GameValue> {
        self.family_game(&self.masks_at_rate(r, false))
    }

    /// max_q min_{S in masks} (1 - q(S)) over jammer mixtures q. Only
    /// inclusion-maximal subsets constrain the minimum, so the LP is pruned
    /// to those. An empty family leaves the jammer unopposed: value 1.
    fn family_game(&self, masks: &[u32]) -> Result<GameValue> {
        let m = self.num_states;
        if masks.is_empty() {
            return Ok(GameValue { value: 1.0, jammer_q: vec![1.0 / m as f64; m] });
        }
        let maximal = prune_to_maximal(masks);
        // variables (q_1..q_m, t): max t  s.t.  q(S) + t <= 1, q on simplex
        let mut c = vec![0.0; m + 1];
        c[m] = 1.0;
        let mut a_ub = Vec::with_capacity(maximal.len());
        for &mask in &maximal {
            let mut row = vec![0.0; m + 1];
            for t in 0..m {
                if mask & (1 << t) != 0 {
                    row[t] = 1.0;
                }
            }
            row[m] = 1.0;
            a_ub.push(row);
        }
        let mut eq = vec![1.0; m + 1];
        eq[m] = 0.0;
        let mut bounds = vec![(0.0, f64::INFINITY); m + 1];
        bounds[m] = (f64::NEG_INFINITY, f64::INFINITY);
        let prob = LpProblem {
            sense: Sense::Max,
            c,
            a_ub,
            b_ub: vec![1.0; maximal.len()],
            a_eq: vec![eq],
            b_eq: vec![1.0],
            bounds,
        };
        let sol = lp_solve(&prob)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::SolverFailure("rate-game LP failed".into()));
        }
        let mut q: Vec<f64> = sol.x[..m].iter().map(|v| v.max(0.0)).collect();
        let z: f64 = q.iter().sum();
        for qi in &mut q {
            *qi /= z;
        }
        Ok(GameValue { value: sol.value.clamp(0.0, 1.0), jammer_q: q })
    }
}

/// Keep only masks not contained in another mask of the list.
fn prune_to_maximal(masks: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    for &mask in masks {
        if masks.iter().any(|&other| other != mask && other & mask == mask) {
            continue;
        }
        out.push(mask);
    }
    out
}

/// Encoder-side game at rate `r`: the mixture P_V over decodable subsets
/// minimizing the worst-state miss probability. Its value is U(r) by
/// minimax duality, which is asserted. Errors when no subset supports `r`.
pub fn optimal_pv(caps: &SubsetCapacities, r: f64) -> Result<(Vec<(Vec<usize>, f64)>, f64)> {
    let masks = caps.masks_at_rate(r, true);
    if masks.is_empty() {
        return Err(Error::BadInput(format!(
            "rate {r} exceeds every subset capacity; no decodable subset"
        )));
    }
    let maximal = prune_to_maximal(&masks);
    let m = caps.num_states();
    // rows: encoder's subsets (minimizer); cols: jammer states (maximizer)
    let a: Vec<Vec<f64>> = maximal
        .iter()
        .map(|&v| (0..m).map(|t| if v & (1 << t) == 0 { 1.0 } else { 0.0 }).collect())
        .collect();
    let game = matrix_game(&a)?;
    let u = caps.u_of_r(r)?;
    if (game.value - u.value).abs() > VALUE_TOL {
        return Err(Error::SolverFailure(format!(
            "subset game value {} disagrees with U(R) = {}",
            game.value, u.value
        )));
    }
    let pv = maximal
        .iter()
        .zip(&game.row_strategy)
        .filter(|&(_, &p)| p > 1e-12)
        .map(|(&mask, &p)| (mask_to_states(mask, m), p))
        .collect();
    Ok((pv, game.value))
}

/// Builds the full L/U step pair for a family: every subset capacity, merged
/// breakpoints, interval values by direct LP evaluation, and per-interval
/// optimal strategies. Validates the step structure it claims.
pub fn build_curves(family: &ChannelFamily, tol: f64) -> Result<CurvePair> {
    let caps = all_subset_capacities(family, tol)?;
    build_curves_from(family, &caps)
}

/// Same as `build_curves` but reuses precomputed subset capacities.
pub fn build_curves_from(family: &ChannelFamily, caps: &SubsetCapacities) -> Result<CurvePair> {
    let m = caps.num_states();
    let tol = caps.tol();
    // merged breakpoints: capacities closer than 4 tol are one breakpoint
    let mut sorted: Vec<f64> = caps.caps.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut breakpoints: Vec<f64> = Vec::new();
    let mut cluster: Vec<f64> = vec![sorted[0]];
    for &c in &sorted[1..] {
        if c - cluster.last().unwrap() <= 4.0 * tol {
            cluster.push(c);
        } else {
            breakpoints.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
            cluster = vec![c];
        }
    }
    breakpoints.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
    // a zero-capacity cluster is not a usable breakpoint: no rates below it
    let degenerate_origin = breakpoints[0] <= 4.0 * tol;
    if degenerate_origin {
        breakpoints.remove(0);
    }
    if breakpoints.is_empty() {
        return Err(Error::SolverFailure("all subset capacities are zero".into()));
    }

    // one value per interval, from the game LP at interval midpoints
    let n = breakpoints.len();
    let mut values = Vec::with_capacity(n + 1);
    let mut intervals = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let (left, right) = interval_bounds(&breakpoints, i);
        let mid = match right {
            Some(rgt) => 0.5 * (left + rgt),
            None => left + 1.0,
        };
        let (l_value, u_value, jammer_q, pv) = if i == 0 && degenerate_origin {
            // below every positive rate; the full family pins the value at 0
            (0.0, 0.0, uniform(m), vec![(mask_to_states((1u32 << m) - 1, m), 1.0)])
        } else {
            let l = caps.l_of_r(mid)?;
            let u = caps.u_of_r(mid)?;
            if (l.value - u.value).abs() > VALUE_TOL {
                return Err(Error::SolverFailure(format!(
                    "L and U disagree at interior rate {mid}: {} vs {}",
                    l.value, u.value
                )));
            }
            let pv = if u.value < 1.0 - 1e-12 {
                optimal_pv(caps, mid)?.0
            } else {
                Vec::new()
            };
            (l.value, u.value, u.jammer_q, pv)
        };
        values.push(0.5 * (l_value + u_value));
        intervals.push(IntervalReport { r_left: left, r_right: right, l_value, u_value, jammer_q, pv });
    }
    // the game value is monotone in rate up to LP noise; snap tiny wiggles
    for i in 1..values.len() {
        if values[i] < values[i - 1] {
            if values[i - 1] - values[i] > VALUE_TOL {
                return Err(Error::SolverFailure("interval values decreased with rate".into()));
            }
            values[i] = values[i - 1];
        }
    }

    // breakpoint-side checks: L takes its left interval value, U its right
    for (i, &bp) in breakpoints.iter().enumerate() {
        let l = caps.l_of_r(bp)?.value;
        let u = caps.u_of_r(bp)?.value;
        if (l - values[i]).abs() > VALUE_TOL || (u - values[i + 1]).abs() > VALUE_TOL {
            return Err(Error::SolverFailure(format!(
                "continuity sides violated at breakpoint {bp}: L={l} U={u}"
            )));
        }
    }

    let lower = StepFunction::new(breakpoints.clone(), values.clone(), vec![Side::Left; n])?;
    let upper = StepFunction::new(breakpoints.clone(), values.clone(), vec![Side::Right; n])?;
    let discontinuities = lower.jumps();

    // the lower curve never exceeds the upper one
    let grid_hi = breakpoints[n - 1] * 1.2 + 0.1;
    for i in 0..200 {
        let r = grid_hi * i as f64 / 199.0;
        if lower.eval(r) > upper.eval(r) + 1e-12 {
            return Err(Error::SolverFailure(format!("L({r}) exceeds U({r})")));
        }
    }

    let capacities = (1..=caps.caps.len() as u32)
        .map(|mask| (mask_to_states(mask, m), caps.caps[mask as usize - 1]))
        .collect();
    Ok(CurvePair {
        lower,
        upper,
        state_labels: (0..m).map(|t| family.label(t).to_string()).collect(),
        capacities,
        discontinuities,
        intervals,
        tol,
    })
}

fn interval_bounds(breakpoints: &[f64], i: usize) -> (f64, Option<f64>) {
    let left = if i == 0 { 0.0 } else { breakpoints[i - 1] };
    let right = breakpoints.get(i).copied();
    (left, right)
}

fn uniform(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

/// Largest rate at which the limiting error stays within eps: the readoff
/// sup{R : L(R) <= eps}, cross-checked against the same readoff on U.
pub fn eps_capacity_compound(pair: &CurvePair, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::BadInput("eps must lie in [0, 1)".into()));
    }
    let from_l = readoff(&pair.lower, eps)?;
    let from_u = readoff(&pair.upper, eps)?;
    if (from_l - from_u).abs() > 1e-12 {
        return Err(Error::SolverFailure(format!(
            "eps-capacity readoffs disagree: {from_l} vs {from_u}"
        )));
    }
    Ok(from_l)
}

fn readoff(f: &StepFunction, eps: f64) -> Result<f64> {
    let vals = f.values();
    let j = vals
        .iter()
        .rposition(|&v| v <= eps + 1e-12)
        .ok_or_else(|| Error::BadInput("no interval value within eps".into()))?;
    if j == vals.len() - 1 {
        return Err(Error::BadInput("eps admits arbitrarily large rates".into()));
    }
    Ok(f.breakpoints()[j])
}

impl CurvePair {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R_left,R_right,L,U,is_breakpoint\n");
        let bps = self.lower.breakpoints();
        let vals = self.lower.values();
        for (i, iv) in self.intervals.iter().enumerate() {
            let right = iv.r_right.map_or("inf".to_string(), |r| format!("{r}"));
            out.push_str(&format!(
                "{},{},{},{},false\n",
                iv.r_left, right, iv.l_value, iv.u_value
            ));
            if i < bps.len() {
                out.push_str(&format!(
                    "{},{},{},{},true\n",
                    bps[i],
                    bps[i],
                    vals[i],     // L is left-continuous
                    vals[i + 1], // U is right-continuous
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
