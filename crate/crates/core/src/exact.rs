//! Ground truth at tiny blocklengths: brute-force lower and upper game
//! values over enumerated deterministic codes, the linear-programming
//! relaxation of the min-max problem over lifted codes, and verification of
//! the closed-form dual multipliers behind the converse bound.
//!
//! Everything here is exact (up to LP tolerances) and exists to anchor the
//! asymptotic machinery: the large-n bounds must respect these values on
//! every instance small enough to enumerate.

use crate::channel::ChannelFamily;
use crate::codes::{unpack_word, DeterministicCode};
use crate::error::{Error, Result};
use crate::optim::game::matrix_game;
use crate::optim::simplex::{lp_solve, LpProblem, LpSolution, LpStatus, Sense};
use crate::prob::Prob;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Cap on encoder x decoder pairs for full enumeration.
const ENUM_CAP: u128 = 10_000_000;
/// Cap on lifted-variable count in the relaxation.
const LP_VAR_CAP: u128 = 1_000_000;
/// Error vectors closer than this are treated as identical when pruning.
const DEDUP_TOL: f64 = 1e-9;

/// Per-state word transition probabilities and alphabet bookkeeping shared
/// by every routine in this module.
struct WordTable {
    /// pw[theta][x][y]
    pw: Vec<Vec<Vec<f64>>>,
    x_words: usize,
    y_words: usize,
    k: usize,
}

fn word_table(family: &ChannelFamily, n: usize, m: usize) -> Result<WordTable> {
    if n == 0 || m == 0 {
        return Err(Error::BadInput("need n >= 1 and M >= 1".into()));
    }
    let x_words = (family.input_size() as u128).pow(n as u32);
    let y_words = (family.output_size() as u128).pow(n as u32);
    let k = family.num_states() as u128;
    if x_words * y_words * k > ENUM_CAP {
        return Err(Error::cap(
            "word transition table",
            (x_words * y_words * k).min(u64::MAX as u128) as u64,
            ENUM_CAP as u64,
        ));
    }
    let (x_words, y_words) = (x_words as usize, y_words as usize);
    let mut pw = vec![vec![vec![0.0f64; y_words]; x_words]; family.num_states()];
    for (theta, px_tab) in pw.iter_mut().enumerate() {
        let ch = family.channel(theta);
        for (xi, row) in px_tab.iter_mut().enumerate() {
            let x = unpack_word(xi, family.input_size(), n);
            for (yi, slot) in row.iter_mut().enumerate() {
                let y = unpack_word(yi, family.output_size(), n);
                *slot = x.iter().zip(&y).fold(1.0, |p, (&a, &b)| p * ch.prob(b, a));
            }
        }
    }
    Ok(WordTable { pw, x_words, y_words, k: family.num_states() })
}

fn check_enum_cap(tab: &WordTable, m: usize) -> Result<u128> {
    let encoders = (tab.x_words as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    let decoders = (m as u128).checked_pow(tab.y_words as u32).unwrap_or(u128::MAX);
    let total = encoders.saturating_mul(decoders);
    if total > ENUM_CAP {
        return Err(Error::cap(
            "code enumeration",
            total.min(u64::MAX as u128) as u64,
            ENUM_CAP as u64,
        ));
    }
    Ok(total)
}

/// Visits every (encoder, decoder) pair in lexicographic order and hands the
/// per-state average error vector to `visit`. The encoder is a tuple of
/// codeword indices (repeats allowed), the decoder a total map from output
/// words to messages.
fn for_each_code<F: FnMut(&[usize], &[usize], &[f64])>(
    tab: &WordTable,
    m: usize,
    mut visit: F,
) {
    let mut enc = vec![0usize; m];
    // g[theta][s][y] and per-output totals, refreshed per encoder
    let mut err = vec![0.0f64; tab.k];
    loop {
        let mut dec = vec![0usize; tab.y_words];
        loop {
            for (theta, e) in err.iter_mut().enumerate() {
                let mut sum = 0.0;
                for (s, &xs) in enc.iter().enumerate() {
                    let row = &tab.pw[theta][xs];
                    for (yi, &w) in row.iter().enumerate() {
                        if dec[yi] != s {
                            sum += w;
                        }
                    }
                }
                *e = sum / m as f64;
            }
            visit(&enc, &dec, &err);
            // next decoder in mixed radix over messages
            let mut done = true;
            for d in dec.iter_mut().rev() {
                *d += 1;
                if *d < m {
                    done = false;
                    break;
                }
                *d = 0;
            }
            if done {
                break;
            }
        }
        let mut done = true;
        for e in enc.iter_mut().rev() {
            *e += 1;
            if *e < tab.x_words {
                done = false;
                break;
            }
            *e = 0;
        }
        if done {
            return;
        }
    }
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| x <= y + 1e-15)
}

/// Deduplicated, Pareto-minimal set of per-state error vectors over all
/// deterministic codes. Dominated vectors never bind in the jammer's LP.
fn minimal_error_vectors(tab: &WordTable, m: usize) -> (Vec<Vec<f64>>, u64) {
    let mut seen = std::collections::HashSet::new();
    let mut vecs: Vec<Vec<f64>> = Vec::new();
    let mut count = 0u64;
    for_each_code(tab, m, |_, _, err| {
        count += 1;
        let key: Vec<i64> = err.iter().map(|&e| (e / DEDUP_TOL).round() as i64).collect();
        if seen.insert(key) {
            vecs.push(err.to_vec());
        }
    });
    let mut keep = vec![true; vecs.len()];
    for i in 0..vecs.len() {
        if !keep[i] {
            continue;
        }
        for j in 0..vecs.len() {
            if i != j && keep[j] && keep[i] && dominates(&vecs[j], &vecs[i]) {
                // ties keep the earlier vector
                if dominates(&vecs[i], &vecs[j]) && i < j {
                    keep[j] = false;
                } else {
                    keep[i] = false;
                }
            }
        }
    }
    let pruned: Vec<Vec<f64>> =
        vecs.into_iter().zip(keep).filter_map(|(v, k)| k.then_some(v)).collect();
    (pruned, count)
}

/// Jammer-optimal mixture against the full deterministic code population.
#[derive(Debug, Clone, Serialize)]
pub struct BruteLower {
    pub value: f64,
    pub optimal_q: Vec<f64>,
    pub codes_enumerated: u64,
    pub active_error_vectors: usize,
}

/// Max over jammer mixtures of the min over deterministic codes of the
/// mixed average error, solved as a matrix game on the Pareto-minimal error
/// vectors. The inner minimum over stochastic codes is attained at these
/// vertices because the objective at fixed q is bilinear.
pub fn brute_lower_value(family: &ChannelFamily, n: usize, m: usize) -> Result<BruteLower> {
    let tab = word_table(family, n, m)?;
    check_enum_cap(&tab, m)?;
    let (vecs, count) = minimal_error_vectors(&tab, m);
    // rows = codes (minimizer), columns = states (maximizer)
    let sol = matrix_game(&vecs)?;
    Ok(BruteLower {
        value: sol.value,
        optimal_q: sol.col_strategy,
        codes_enumerated: count,
        active_error_vectors: vecs.len(),
    })
}

/// Best worst-state deterministic code found by full enumeration.
#[derive(Debug, Clone, Serialize)]
pub struct BruteUpper {
    pub value: f64,
    pub best_code: DeterministicCode,
}

/// Min over deterministic codes of the worst-state average error; ties
/// resolve to the lexicographically first code.
pub fn brute_det_upper_value(family: &ChannelFamily, n: usize, m: usize) -> Result<BruteUpper> {
    let tab = word_table(family, n, m)?;
    check_enum_cap(&tab, m)?;
    let mut best = f64::INFINITY;
    let mut best_enc: Vec<usize> = Vec::new();
    let mut best_dec: Vec<usize> = Vec::new();
    for_each_code(&tab, m, |enc, dec, err| {
        let worst = err.iter().cloned().fold(0.0, f64::max);
        if worst < best - 1e-15 {
            best = worst;
            best_enc = enc.to_vec();
            best_dec = dec.to_vec();
        }
    });
    let codewords: Vec<Vec<usize>> = best_enc
        .iter()
        .map(|&xi| unpack_word(xi, family.input_size(), n))
        .collect();
    let code = DeterministicCode::new(
        n,
        family.input_size(),
        family.output_size(),
        codewords,
        best_dec,
    )?;
    Ok(BruteUpper { value: best, best_code: code })
}

// ---------------------------------------------------------------------------
// alternating heuristic for the stochastic upper value

fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            let raw: Vec<f64> = (0..cols).map(|_| -(rng.gen::<f64>().ln())).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|&v| v / s).collect()
        })
        .collect()
}

fn worst_state_error(
    tab: &WordTable,
    m: usize,
    q_enc: &[Vec<f64>],
    q_dec: &[Vec<f64>],
) -> f64 {
    let mut worst = 0.0f64;
    for theta in 0..tab.k {
        let mut err = 0.0;
        for (s, enc_row) in q_enc.iter().enumerate() {
            for (xi, &qe) in enc_row.iter().enumerate() {
                if qe == 0.0 {
                    continue;
                }
                for (yi, &w) in tab.pw[theta][xi].iter().enumerate() {
                    err += qe * w * (1.0 - q_dec[yi][s]);
                }
            }
        }
        worst = worst.max(err / m as f64);
    }
    worst
}

fn solve_or_fail(p: &LpProblem, what: &str) -> Result<LpSolution> {
    let sol = lp_solve(p)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::SolverFailure(format!("{what} LP ended {:?}", sol.status)));
    }
    Ok(sol)
}

/// Best stochastic-code worst-state error found by alternating LP descent
/// from multiple starts (the deterministic optimum plus seeded random
/// stochastic codes). A heuristic bracket: the true min-max over stochastic
/// codes is nonconvex and this value is only an upper bound on it.
pub fn heuristic_stochastic_upper(
    family: &ChannelFamily,
    n: usize,
    m: usize,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    let tab = word_table(family, n, m)?;
    check_enum_cap(&tab, m)?;
    let det = brute_det_upper_value(family, n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = det.value;
    for start in 0..restarts.max(1) {
        let (mut q_enc, mut q_dec) = if start == 0 {
            // start from the deterministic optimum
            let mut qe = vec![vec![0.0; tab.x_words]; m];
            for (s, w) in det.best_code.codewords.iter().enumerate() {
                qe[s][crate::codes::pack_word(w, family.input_size())] = 1.0;
            }
            let mut qd = vec![vec![0.0; m]; tab.y_words];
            for (yi, &s) in det.best_code.decoder.iter().enumerate() {
                qd[yi][s] = 1.0;
            }
            (qe, qd)
        } else {
            (
                random_stochastic(&mut rng, m, tab.x_words),
                random_stochastic(&mut rng, tab.y_words, m),
            )
        };
        let mut current = worst_state_error(&tab, m, &q_enc, &q_dec);
        for _ in 0..60 {
            // decoder half-step: min t s.t. per-state error <= t
            let nd = tab.y_words * m;
            let mut c = vec![0.0; nd + 1];
            c[nd] = 1.0;
            let mut prob = LpProblem::new(Sense::Min, c);
            for theta in 0..tab.k {
                // err_theta = 1 - (1/M) sum_{y,s} g[s][y] Q_dec(s|y)
                let mut row = vec![0.0; nd + 1];
                for (s, enc_row) in q_enc.iter().enumerate() {
                    for (xi, &qe) in enc_row.iter().enumerate() {
                        if qe == 0.0 {
                            continue;
                        }
                        for (yi, &w) in tab.pw[theta][xi].iter().enumerate() {
                            row[yi * m + s] -= qe * w / m as f64;
                        }
                    }
                }
                row[nd] = -1.0;
                prob.ub(row, -1.0);
            }
            for yi in 0..tab.y_words {
                let mut row = vec![0.0; nd + 1];
                for s in 0..m {
                    row[yi * m + s] = 1.0;
                }
                prob.eq(row, 1.0);
            }
            let sol = solve_or_fail(&prob, "decoder half-step")?;
            for (yi, qd_row) in q_dec.iter_mut().enumerate() {
                for (s, slot) in qd_row.iter_mut().enumerate() {
                    *slot = sol.x[yi * m + s].max(0.0);
                }
            }

            // encoder half-step
            let ne = m * tab.x_words;
            let mut c = vec![0.0; ne + 1];
            c[ne] = 1.0;
            let mut prob = LpProblem::new(Sense::Min, c);
            for theta in 0..tab.k {
                let mut row = vec![0.0; ne + 1];
                for s in 0..m {
                    for xi in 0..tab.x_words {
                        let mut cost = 0.0;
                        for (yi, &w) in tab.pw[theta][xi].iter().enumerate() {
                            cost += w * (1.0 - q_dec[yi][s]);
                        }
                        row[s * tab.x_words + xi] = cost / m as f64;
                    }
                }
                row[ne] = -1.0;
                prob.ub(row, 0.0);
            }
            for s in 0..m {
                let mut row = vec![0.0; ne + 1];
                for xi in 0..tab.x_words {
                    row[s * tab.x_words + xi] = 1.0;
                }
                prob.eq(row, 1.0);
            }
            let sol = solve_or_fail(&prob, "encoder half-step")?;
            for (s, qe_row) in q_enc.iter_mut().enumerate() {
                for (xi, slot) in qe_row.iter_mut().enumerate() {
                    *slot = sol.x[s * tab.x_words + xi].max(0.0);
                }
            }

            let next = worst_state_error(&tab, m, &q_enc, &q_dec);
            if current - next < 1e-12 {
                current = current.min(next);
                break;
            }
            current = next;
        }
        best = best.min(current);
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// LP relaxation

/// A point of the lifted code polytope: stochastic encoder and decoder plus
/// the joint tensor replacing their products.
#[derive(Debug, Clone, Serialize)]
pub struct RelaxedCode {
    pub m: usize,
    pub x_words: usize,
    pub y_words: usize,
    pub q_enc: Vec<Vec<f64>>,
    pub q_dec: Vec<Vec<f64>>,
    /// Flattened over (s, x, y, s_hat), s outermost.
    pub w: Vec<f64>,
}

impl RelaxedCode {
    fn idx(&self, s: usize, x: usize, y: usize, sh: usize) -> usize {
        ((s * self.x_words + x) * self.y_words + y) * self.m + sh
    }

    /// Checks the lifted marginal identities within LP tolerance.
    pub fn validate(&self) -> Result<()> {
        for s in 0..self.m {
            for y in 0..self.y_words {
                for sh in 0..self.m {
                    let sum: f64 =
                        (0..self.x_words).map(|x| self.w[self.idx(s, x, y, sh)]).sum();
                    if (sum - self.q_dec[y][sh]).abs() > 1e-7 {
                        return Err(Error::SolverFailure(format!(
                            "lifted tensor x-marginal off by {:.2e}",
                            (sum - self.q_dec[y][sh]).abs()
                        )));
                    }
                }
            }
            for x in 0..self.x_words {
                for y in 0..self.y_words {
                    let sum: f64 = (0..self.m).map(|sh| self.w[self.idx(s, x, y, sh)]).sum();
                    if (sum - self.q_enc[s][x]).abs() > 1e-7 {
                        return Err(Error::SolverFailure(format!(
                            "lifted tensor s-marginal off by {:.2e}",
                            (sum - self.q_enc[s][x]).abs()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LpRelax {
    pub value: f64,
    pub optimal_q: Vec<f64>,
    pub relaxed: RelaxedCode,
    /// Value recovered from the jammer side by cutting planes; must agree
    /// with `value` within 1e-6.
    pub dual_route_value: f64,
}

struct LpShape {
    m: usize,
    x_words: usize,
    y_words: usize,
    nw: usize,
    ne: usize,
    nv: usize,
}

impl LpShape {
    fn widx(&self, s: usize, x: usize, y: usize, sh: usize) -> usize {
        ((s * self.x_words + x) * self.y_words + y) * self.m + sh
    }

    fn eidx(&self, s: usize, x: usize) -> usize {
        self.nw + s * self.x_words + x
    }

    fn didx(&self, y: usize, sh: usize) -> usize {
        self.nw + self.ne + y * self.m + sh
    }
}

fn lp_shape(tab: &WordTable, m: usize) -> Result<LpShape> {
    let nw = m as u128 * tab.x_words as u128 * tab.y_words as u128 * m as u128;
    if nw > LP_VAR_CAP {
        return Err(Error::cap(
            "lifted LP variables",
            nw.min(u64::MAX as u128) as u64,
            LP_VAR_CAP as u64,
        ));
    }
    let nw = nw as usize;
    let ne = m * tab.x_words;
    let nd = tab.y_words * m;
    Ok(LpShape { m, x_words: tab.x_words, y_words: tab.y_words, nw, ne, nv: nw + ne + nd })
}

/// Adds the relaxed-code polytope constraints over variables
/// [w..., q_enc..., q_dec...] (plus `extra` trailing variables).
fn add_polytope(prob: &mut LpProblem, sh: &LpShape, extra: usize) {
    let nv = sh.nv + extra;
    for s in 0..sh.m {
        for y in 0..sh.y_words {
            for shat in 0..sh.m {
                let mut row = vec![0.0; nv];
                for x in 0..sh.x_words {
                    row[sh.widx(s, x, y, shat)] = 1.0;
                }
                row[sh.didx(y, shat)] = -1.0;
                prob.eq(row, 0.0);
            }
        }
        for x in 0..sh.x_words {
            for y in 0..sh.y_words {
                let mut row = vec![0.0; nv];
                for shat in 0..sh.m {
                    row[sh.widx(s, x, y, shat)] = 1.0;
                }
                row[sh.eidx(s, x)] = -1.0;
                prob.eq(row, 0.0);
            }
        }
        let mut row = vec![0.0; nv];
        for x in 0..sh.x_words {
            row[sh.eidx(s, x)] = 1.0;
        }
        prob.eq(row, 1.0);
    }
    for y in 0..sh.y_words {
        let mut row = vec![0.0; nv];
        for shat in 0..sh.m {
            row[sh.didx(y, shat)] = 1.0;
        }
        prob.eq(row, 1.0);
    }
}

/// Objective weight of w(s,x,y,sh) under state theta: the misdecoding mass.
fn err_weight(tab: &WordTable, m: usize, theta: usize, s: usize, x: usize, y: usize, sh: usize) -> f64 {
    if s == sh {
        0.0
    } else {
        tab.pw[theta][x][y] / m as f64
    }
}

/// Inner LP at fixed q: min over relaxed codes of the q-mixed error.
fn inner_lp(tab: &WordTable, sh: &LpShape, q: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut c = vec![0.0; sh.nv];
    for s in 0..sh.m {
        for x in 0..sh.x_words {
            for y in 0..sh.y_words {
                for shat in 0..sh.m {
                    let lam: f64 = (0..tab.k)
                        .map(|t| q[t] * err_weight(tab, sh.m, t, s, x, y, shat))
                        .sum();
                    c[sh.widx(s, x, y, shat)] = lam;
                }
            }
        }
    }
    let mut prob = LpProblem::new(Sense::Min, c);
    add_polytope(&mut prob, sh, 0);
    let sol = solve_or_fail(&prob, "inner relaxed-code")?;
    Ok((sol.value, sol.x))
}

/// Per-state error vector of a lifted tensor.
fn relaxed_err_vec(tab: &WordTable, sh: &LpShape, x: &[f64]) -> Vec<f64> {
    (0..tab.k)
        .map(|theta| {
            let mut e = 0.0;
            for s in 0..sh.m {
                for xi in 0..sh.x_words {
                    for y in 0..sh.y_words {
                        for shat in 0..sh.m {
                            if s != shat {
                                e += x[sh.widx(s, xi, y, shat)]
                                    * err_weight(tab, sh.m, theta, s, xi, y, shat);
                            }
                        }
                    }
                }
            }
            e
        })
        .collect()
}

/// Solves the lifted relaxation of the min-max error game two ways — the
/// direct epigraph LP over relaxed codes, and the jammer-side maximum of
/// inner LPs by cutting planes — and requires the values to agree within
/// 1e-6 (the minimax interchange).
pub fn lp_relax_value(family: &ChannelFamily, n: usize, m: usize) -> Result<LpRelax> {
    let tab = word_table(family, n, m)?;
    let sh = lp_shape(&tab, m)?;

    // direct route: epigraph over states (the jammer's best response is a
    // vertex because the error is linear in q)
    let nv = sh.nv + 1;
    let mut c = vec![0.0; nv];
    c[sh.nv] = 1.0;
    let mut prob = LpProblem::new(Sense::Min, c);
    for theta in 0..tab.k {
        let mut row = vec![0.0; nv];
        for s in 0..sh.m {
            for x in 0..sh.x_words {
                for y in 0..sh.y_words {
                    for shat in 0..sh.m {
                        row[sh.widx(s, x, y, shat)] = err_weight(&tab, m, theta, s, x, y, shat);
                    }
                }
            }
        }
        row[sh.nv] = -1.0;
        prob.ub(row, 0.0);
    }
    add_polytope(&mut prob, &sh, 1);
    let direct = solve_or_fail(&prob, "lifted epigraph")?;

    // jammer route: max_q of the concave inner value, by cutting planes
    let mut cuts: Vec<Vec<f64>> = Vec::new();
    let mut q = vec![1.0 / tab.k as f64; tab.k];
    let mut best_inner = f64::NEG_INFINITY;
    let mut best_q = q.clone();
    for _ in 0..100 {
        let (g, x) = inner_lp(&tab, &sh, &q)?;
        if g > best_inner {
            best_inner = g;
            best_q = q.clone();
        }
        cuts.push(relaxed_err_vec(&tab, &sh, &x));
        // master: max t s.t. t <= q . cut for every cut, q in the simplex
        let mut c = vec![0.0; tab.k + 1];
        c[tab.k] = 1.0;
        let mut master = LpProblem::new(Sense::Max, c);
        for cut in &cuts {
            let mut row = vec![0.0; tab.k + 1];
            for (slot, &e) in row.iter_mut().zip(cut.iter()) {
                *slot = -e;
            }
            row[tab.k] = 1.0;
            master.ub(row, 0.0);
        }
        let mut simplex_row = vec![1.0; tab.k + 1];
        simplex_row[tab.k] = 0.0;
        master.eq(simplex_row, 1.0);
        let msol = solve_or_fail(&master, "cutting-plane master")?;
        q = msol.x[..tab.k].iter().map(|&v| v.max(0.0)).collect();
        if msol.value - best_inner <= 1e-9 {
            break;
        }
    }

    if (direct.value - best_inner).abs() > 1e-6 {
        return Err(Error::SolverFailure(format!(
            "relaxation routes disagree: direct {:.9} vs jammer-side {:.9}",
            direct.value, best_inner
        )));
    }

    let relaxed = RelaxedCode {
        m,
        x_words: sh.x_words,
        y_words: sh.y_words,
        q_enc: (0..m)
            .map(|s| (0..sh.x_words).map(|x| direct.x[sh.eidx(s, x)].max(0.0)).collect())
            .collect(),
        q_dec: (0..sh.y_words)
            .map(|y| (0..m).map(|shat| direct.x[sh.didx(y, shat)].max(0.0)).collect())
            .collect(),
        w: direct.x[..sh.nw].to_vec(),
    };
    relaxed.validate()?;
    Ok(LpRelax {
        value: direct.value,
        optimal_q: best_q,
        relaxed,
        dual_route_value: best_inner,
    })
}

// ---------------------------------------------------------------------------
// dual certificate

/// Materialized multipliers of the jammer-side dual at a fixed mixture,
/// following the converse bound's closed form.
#[derive(Debug, Clone, Serialize)]
pub struct DualCertificate {
    /// lambda_c[s][x][y] (identical across s by construction).
    pub lambda_c: Vec<Vec<Vec<f64>>>,
    /// lambda_s[s][s_hat][y].
    pub lambda_s: Vec<Vec<Vec<f64>>>,
    pub gamma_a: Vec<f64>,
    pub gamma_b: Vec<f64>,
    pub q: Vec<f64>,
    pub gamma: f64,
}

/// Builds the closed-form dual multipliers at (q, gamma, reference), checks
/// feasibility pointwise over every coordinate (a construction bug is a hard
/// failure), and returns the dual objective together with the certificate.
/// The objective is guaranteed to lower-bound the inner relaxed-code LP at
/// this q, and that inequality is verified numerically.
pub fn verify_dual_certificate(
    family: &ChannelFamily,
    q: &Prob,
    gamma: f64,
    reference: &[Vec<f64>],
    n: usize,
    m: usize,
) -> Result<(f64, DualCertificate)> {
    if q.dim() != family.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "q has {} entries, family has {} states",
            q.dim(),
            family.num_states()
        )));
    }
    if !gamma.is_finite() {
        return Err(Error::BadInput("gamma must be finite".into()));
    }
    if reference.len() != family.num_states()
        || reference.iter().any(|r| r.len() != family.output_size())
    {
        return Err(Error::DimensionMismatch(
            "reference needs one single-letter output distribution per state".into(),
        ));
    }
    for r in reference {
        let s: f64 = r.iter().sum();
        if r.iter().any(|&v| v < 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProbability(
                "reference rows must be probability vectors".into(),
            ));
        }
    }
    let tab = word_table(family, n, m)?;
    let mf = m as f64;
    let neg_gamma_exp = (-gamma).exp();

    // product reference over output words, per state
    let mut pbar = vec![vec![0.0f64; tab.y_words]; tab.k];
    for (theta, row) in pbar.iter_mut().enumerate() {
        for (yi, slot) in row.iter_mut().enumerate() {
            let y = unpack_word(yi, family.output_size(), n);
            *slot = y.iter().fold(1.0, |p, &b| p * reference[theta][b]);
        }
    }

    // lambda_c(s,x,y) = sum_theta q/M min{P(y|x,theta), M pbar e^{-gamma}}
    let mut lam_c_xy = vec![vec![0.0f64; tab.y_words]; tab.x_words];
    for (xi, row) in lam_c_xy.iter_mut().enumerate() {
        for (yi, slot) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for theta in 0..tab.k {
                let cap = mf * pbar[theta][yi] * neg_gamma_exp;
                acc += q.get(theta) / mf * tab.pw[theta][xi][yi].min(cap);
            }
            *slot = acc;
        }
    }
    // lambda_s(s,shat,y) = -e^{-gamma} I{s=shat} sum_theta q pbar
    let mut lam_s_diag = vec![0.0f64; tab.y_words];
    for (yi, slot) in lam_s_diag.iter_mut().enumerate() {
        let mix: f64 = (0..tab.k).map(|t| q.get(t) * pbar[t][yi]).sum();
        *slot = -neg_gamma_exp * mix;
    }

    // feasibility, pointwise over every (s, x, y, shat)
    let mut worst_violation = 0.0f64;
    for s in 0..m {
        for xi in 0..tab.x_words {
            for yi in 0..tab.y_words {
                for shat in 0..m {
                    let lam_s = if s == shat { lam_s_diag[yi] } else { 0.0 };
                    let big_lam: f64 = if s == shat {
                        0.0
                    } else {
                        (0..tab.k).map(|t| q.get(t) * tab.pw[t][xi][yi]).sum::<f64>() / mf
                    };
                    let slack = lam_s + lam_c_xy[xi][yi] - big_lam;
                    worst_violation = worst_violation.max(slack);
                }
            }
        }
    }
    if worst_violation > 1e-10 {
        return Err(Error::SolverFailure(format!(
            "dual multipliers violate feasibility by {worst_violation:.3e}"
        )));
    }

    // optimal support values for the free multipliers
    let gamma_a_val = lam_c_xy
        .iter()
        .map(|row| row.iter().sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let gamma_a = vec![gamma_a_val; m];
    // sum_s lambda_s(s, shat, y) hits the diagonal exactly once per shat
    let gamma_b: Vec<f64> = lam_s_diag.clone();
    let dual_value = gamma_a.iter().sum::<f64>() + gamma_b.iter().sum::<f64>();

    // weak duality against the inner LP at this q
    let sh = lp_shape(&tab, m)?;
    let (inner, _) = inner_lp(&tab, &sh, q.weights())?;
    if dual_value > inner + 1e-8 {
        return Err(Error::SolverFailure(format!(
            "dual objective {dual_value:.9} exceeds the inner LP value {inner:.9}"
        )));
    }

    let lambda_c = vec![lam_c_xy.clone(); m];
    let mut lambda_s = vec![vec![vec![0.0f64; tab.y_words]; m]; m];
    for (s, per_s) in lambda_s.iter_mut().enumerate() {
        per_s[s] = lam_s_diag.clone();
    }
    Ok((
        dual_value,
        DualCertificate {
            lambda_c,
            lambda_s,
            gamma_a,
            gamma_b,
            q: q.weights().to_vec(),
            gamma,
        },
    ))
}

// ---------------------------------------------------------------------------
// assembled report

/// The full sandwich at one enumerable instance.
#[derive(Debug, Clone, Serialize)]
pub struct GameValues {
    pub n: usize,
    pub m: usize,
    pub lp_lower: f64,
    pub exact_lower: f64,
    pub det_upper: f64,
    pub heuristic_upper: f64,
    pub optimal_q: Vec<f64>,
    pub codes_enumerated: u64,
    pub active_error_vectors: usize,
    pub lp_agreement_gap: f64,
}

/// Computes all four values and enforces the ordering
/// lp_lower <= exact_lower <= det_upper and heuristic <= det_upper.
pub fn game_values(
    family: &ChannelFamily,
    n: usize,
    m: usize,
    restarts: usize,
    seed: u64,
) -> Result<GameValues> {
    let lower = brute_lower_value(family, n, m)?;
    let upper = brute_det_upper_value(family, n, m)?;
    let relax = lp_relax_value(family, n, m)?;
    let heuristic = heuristic_stochastic_upper(family, n, m, restarts, seed)?;
    let v = GameValues {
        n,
        m,
        lp_lower: relax.value,
        exact_lower: lower.value,
        det_upper: upper.value,
        heuristic_upper: heuristic,
        optimal_q: lower.optimal_q,
        codes_enumerated: lower.codes_enumerated,
        active_error_vectors: lower.active_error_vectors,
        lp_agreement_gap: (relax.value - relax.dual_route_value).abs(),
    };
    if v.lp_lower > v.exact_lower + 1e-8
        || v.exact_lower > v.det_upper + 1e-8
        || v.heuristic_upper > v.det_upper + 1e-8
    {
        return Err(Error::SolverFailure(format!(
            "value sandwich violated: lp {:.9}, exact {:.9}, det {:.9}, heuristic {:.9}",
            v.lp_lower, v.exact_lower, v.det_upper, v.heuristic_upper
        )));
    }
    Ok(v)
}
