//! Mutual information and capacities: single channels by Blahut–Arimoto,
//! compound families by concave max-min over the input simplex, and the
//! mixed channel's eps-capacity by subset enumeration.
//!
//! All public values are in bits; internal iteration runs in nats.

use crate::channel::{ChannelFamily, Dmc};
use crate::error::{Error, Result};
use crate::optim::concave_maximin;
use crate::prob::Prob;
use crate::LN2;

const BA_ITER_CAP: usize = 200_000;
const MAXIMIN_ITER_CAP: usize = 4000;
/// At most 2^16 - 1 subset subproblems in the eps-capacity enumeration.
pub const MAX_STATES: usize = 16;

/// Capacity estimate with its convergence certificate. `value` is the
/// midpoint of the final bracket, so it is within `achieved_gap / 2` of the
/// true optimum; `optimal_input` achieves at least `value - achieved_gap`.
#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// Bits per channel use.
    pub value: f64,
    pub optimal_input: Prob,
    /// Width of the certified upper/lower bracket, in bits.
    pub achieved_gap: f64,
    pub iterations: usize,
}

/// I(P; W) in nats, with the usual 0 log 0 = 0 conventions.
pub(crate) fn mi_nats(px: &[f64], ch: &Dmc) -> f64 {
    let py = output_dist(px, ch);
    let mut total = 0.0;
    for (a, &pa) in px.iter().enumerate() {
        if pa <= 0.0 {
            continue;
        }
        let row = ch.row(a);
        let mut d = 0.0;
        for (b, &w) in row.iter().enumerate() {
            if w > 0.0 {
                d += w * (w / py[b]).ln();
            }
        }
        total += pa * d;
    }
    total
}

/// Gradient of I(P; W) in nats: dI/dP(a) = D(W_a || PY) - 1.
pub(crate) fn mi_grad_nats(px: &[f64], ch: &Dmc) -> Vec<f64> {
    let py = output_dist(px, ch);
    (0..ch.input_size())
        .map(|a| {
            let mut d = 0.0;
            for (b, &w) in ch.row(a).iter().enumerate() {
                if w > 0.0 {
                    d += w * (w / py[b]).ln();
                }
            }
            d - 1.0
        })
        .collect()
}

fn output_dist(px: &[f64], ch: &Dmc) -> Vec<f64> {
    let mut py = vec![0.0; ch.output_size()];
    for (a, &pa) in px.iter().enumerate() {
        if pa > 0.0 {
            for (b, &w) in ch.row(a).iter().enumerate() {
                py[b] += pa * w;
            }
        }
    }
    py
}

/// Mutual information in bits for a fixed input distribution.
pub fn mutual_information(px: &Prob, ch: &Dmc) -> Result<f64> {
    if px.dim() != ch.input_size() {
        return Err(Error::DimensionMismatch(format!(
            "input distribution has {} entries, channel expects {}",
            px.dim(),
            ch.input_size()
        )));
    }
    Ok(mi_nats(px.weights(), ch) / LN2)
}

/// Capacity of a single DMC by Blahut–Arimoto with the standard
/// upper/lower bracket; stops when the bracket is narrower than `tol` bits.
pub fn channel_capacity(ch: &Dmc, tol: f64) -> Result<CapacityResult> {
    if tol <= 0.0 {
        return Err(Error::BadInput("capacity tol must be positive".into()));
    }
    let k = ch.input_size();
    let mut r = vec![1.0 / k as f64; k];
    let tol_nats = tol * LN2;
    for it in 1..=BA_ITER_CAP {
        let py = output_dist(&r, ch);
        // d[a] = D(W_a || PY); I(r) = sum_a r_a d_a, capacity <= max_a d_a
        let mut d = vec![0.0; k];
        for a in 0..k {
            for (b, &w) in ch.row(a).iter().enumerate() {
                if w > 0.0 {
                    d[a] += w * (w / py[b]).ln();
                }
            }
        }
        let lower: f64 = r.iter().zip(&d).map(|(ra, da)| ra * da).sum();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower <= tol_nats {
            return Ok(CapacityResult {
                value: 0.5 * (upper + lower) / LN2,
                optimal_input: Prob::new(r)?,
                achieved_gap: (upper - lower) / LN2,
                iterations: it,
            });
        }
        let mut z = 0.0;
        for (ra, da) in r.iter_mut().zip(&d) {
            *ra = (*ra * da.exp()).max(1e-300);
            z += *ra;
        }
        for ra in &mut r {
            *ra /= z;
        }
    }
    Err(Error::NonConvergence(format!(
        "Blahut-Arimoto bracket wider than {tol} bits after {BA_ITER_CAP} iterations"
    )))
}

/// Compound capacity max_P min_{theta in subset} I(P; W_theta), in bits,
/// certified to within `tol` by the cutting-plane gap.
pub fn compound_capacity(family: &ChannelFamily, subset: &[usize], tol: f64) -> Result<CapacityResult> {
    if subset.is_empty() {
        return Err(Error::BadInput("compound capacity needs a nonempty state subset".into()));
    }
    let mut states: Vec<usize> = subset.to_vec();
    states.sort_unstable();
    states.dedup();
    for &s in &states {
        if s >= family.num_states() {
            return Err(Error::BadInput(format!("state index {s} out of range")));
        }
    }
    if states.len() == 1 {
        return channel_capacity(family.channel(states[0]), tol);
    }
    let dim = family.input_size();
    let chans: Vec<&Dmc> = states.iter().map(|&s| family.channel(s)).collect();
    let res = concave_maximin(
        dim,
        chans.len(),
        |k, x| mi_nats(x, chans[k]),
        |k, x| mi_grad_nats(x, chans[k]),
        tol * LN2,
        MAXIMIN_ITER_CAP,
    )?;
    Ok(CapacityResult {
        value: 0.5 * (res.value + res.upper) / LN2,
        optimal_input: Prob::new(res.x)?,
        achieved_gap: (res.upper - res.value) / LN2,
        iterations: res.iterations,
    })
}

/// Eps-capacity of the channel mixed by jammer prior `q`: the best compound
/// capacity over state subsets whose dropped q-mass stays within `eps`.
/// Only inclusion-minimal feasible subsets are solved, since capacity can
/// only shrink as the subset grows.
pub fn mixed_eps_capacity(family: &ChannelFamily, q: &Prob, eps: f64, tol: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::BadInput("eps must lie in [0, 1)".into()));
    }
    let m = family.num_states();
    if q.dim() != m {
        return Err(Error::DimensionMismatch(format!(
            "prior has {} entries, family has {} states",
            q.dim(),
            m
        )));
    }
    if m > MAX_STATES {
        return Err(Error::cap("state subsets", 1u64 << m, 1u64 << MAX_STATES));
    }
    let full = (1u32 << m) - 1;
    let dropped_mass = |mask: u32| -> f64 {
        (0..m).filter(|&t| mask & (1 << t) == 0).map(|t| q.get(t)).sum()
    };
    let mut feasible: Vec<u32> = (1..=full)
        .filter(|&mask| dropped_mass(mask) <= eps + 1e-12)
        .collect();
    // keep inclusion-minimal masks only
    feasible.sort_by_key(|m| m.count_ones());
    let mut minimal: Vec<u32> = Vec::new();
    'outer: for mask in feasible {
        for &kept in &minimal {
            if kept & mask == kept {
                continue 'outer;
            }
        }
        minimal.push(mask);
    }
    let mut best = f64::NEG_INFINITY;
    for mask in minimal {
        let states: Vec<usize> = (0..m).filter(|&t| mask & (1 << t) != 0).collect();
        let c = compound_capacity(family, &states, tol)?;
        best = best.max(c.value);
    }
    if best == f64::NEG_INFINITY {
        // eps < total mass of every complement never happens since the full
        // set drops nothing, but keep the guard explicit
        return Err(Error::SolverFailure("no feasible subset in eps-capacity".into()));
    }
    Ok(best)
}
