//! Finite-blocklength achievability and converse bounds.
//!
//! Everything here works in nats internally; rates cross the public boundary
//! in bits per channel use. Message counts enter as `ln_m` (natural log of M)
//! so that blocklengths in the thousands cannot overflow: terms like
//! M e^{-alpha} are assembled in log space.

use crate::capacity::{self, channel_capacity, compound_capacity};
use crate::channel::{info_density_spectrum, letter_density_spectrum, ChannelFamily, Dmc};
use crate::curves;
use crate::error::{Error, Result};
use crate::prob::{KahanSum, Prob};
use crate::spectrum::{compositions_count, mc_tail, Spectrum, CONV_CAP, VALUE_MERGE_TOL};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::LN_2;

/// Cap on enumerated type classes.
pub const TYPE_CAP: u64 = 10_000_000;
/// Cap on (x, y) word pairs in the exact converse enumeration.
const EXACT_PAIR_CAP: u64 = 10_000_000;
/// Cap on types x q-grid points in the converse scan.
const SCAN_BUDGET: u128 = 2_000_000_000;

fn clip01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// splitmix-style stir so per-(type, state) Monte Carlo streams decorrelate
fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// type classes

/// Empirical type of a length-n word: letter counts summing to n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeClass {
    pub counts: Vec<u64>,
    pub n: u64,
}

impl TypeClass {
    pub fn fractions(&self) -> Vec<f64> {
        let nf = self.n as f64;
        self.counts.iter().map(|&c| c as f64 / nf).collect()
    }
}

/// Number of types of length-n words over an alphabet: C(n+|A|-1, |A|-1).
pub fn count_types(alphabet: usize, n: u64) -> u128 {
    compositions_count(n, alphabet as u64)
}

/// ln of the type count, exact via log-gamma (safe when the count overflows).
fn ln_num_types(alphabet: usize, n: u64) -> f64 {
    let k = alphabet as f64;
    let nf = n as f64;
    ln_gamma(nf + k) - ln_gamma(nf + 1.0) - ln_gamma(k)
}

fn for_each_type_rec<F: FnMut(&[u64])>(counts: &mut [u64], pos: usize, left: u64, f: &mut F) {
    if pos + 1 == counts.len() {
        counts[pos] = left;
        f(counts);
        return;
    }
    for v in 0..=left {
        counts[pos] = v;
        for_each_type_rec(counts, pos + 1, left - v, f);
    }
}

/// Visits every type in a fixed lexicographic order without materializing
/// the list.
pub(crate) fn for_each_type<F: FnMut(&[u64])>(alphabet: usize, n: u64, mut f: F) {
    let mut counts = vec![0u64; alphabet];
    for_each_type_rec(&mut counts, 0, n, &mut f);
}

/// All types of length-n words, lexicographic by counts.
pub fn enumerate_types(alphabet: usize, n: u64) -> Result<Vec<TypeClass>> {
    if alphabet == 0 || n == 0 {
        return Err(Error::BadInput("types need alphabet >= 1 and n >= 1".into()));
    }
    let total = count_types(alphabet, n);
    if total > TYPE_CAP as u128 {
        return Err(Error::cap(
            "type enumeration",
            total.min(u64::MAX as u128) as u64,
            TYPE_CAP,
        ));
    }
    let mut out = Vec::with_capacity(total as usize);
    for_each_type(alphabet, n, |c| {
        out.push(TypeClass { counts: c.to_vec(), n });
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// parameters

/// Which reference output distribution the info-density is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceChoice {
    /// Per-state output distribution induced by the chosen product input.
    ProductWithPx,
    /// Mixture over type-conditional product outputs, handled through the
    /// ln|types| penalty against per-type product references.
    TypeMixture,
}

/// Knobs shared by the bound evaluators. All exponents are in nats. Absent
/// values fall back to documented per-bound defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundParams {
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub xi: Option<f64>,
    pub big_delta: Option<f64>,
    pub beta: Option<f64>,
    pub reference: ReferenceChoice,
    pub seed: u64,
    pub mc_samples: u64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            alpha: None,
            delta: None,
            gamma: None,
            xi: None,
            big_delta: None,
            beta: None,
            reference: ReferenceChoice::ProductWithPx,
            seed: 7,
            mc_samples: 400_000,
        }
    }
}

fn require_pos(name: &str, v: f64) -> Result<f64> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::BadInput(format!("{name} must be a positive real, got {v}")));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// tail engine

/// P[Binomial(n, p) <= k] through the regularized incomplete beta function.
pub(crate) fn binom_cdf(n: u64, p: f64, k: u64) -> f64 {
    if k >= n {
        return 1.0;
    }
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    beta_reg((n - k) as f64, (k + 1) as f64, 1.0 - p)
}

/// P[d * Binomial(m, p) <= t] for d > 0; t is pre-guarded by the caller.
fn scaled_binom_cdf(m: u64, p: f64, d: f64, t: f64) -> f64 {
    let k = (t / d).floor();
    if k < 0.0 {
        0.0
    } else if k >= m as f64 {
        1.0
    } else {
        binom_cdf(m, p, k as u64)
    }
}

/// P[d1 K1 + d2 K2 <= t] for independent binomials, iterating the smaller one.
fn two_binom_tail(b1: (u64, f64, f64), b2: (u64, f64, f64), t: f64) -> f64 {
    let (small, big) = if b1.0 <= b2.0 { (b1, b2) } else { (b2, b1) };
    let (m, p, d) = small;
    if p <= 0.0 {
        return scaled_binom_cdf(big.0, big.1, big.2, t);
    }
    if p >= 1.0 {
        return scaled_binom_cdf(big.0, big.1, big.2, t - m as f64 * d);
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let ln_fact_m = ln_gamma(m as f64 + 1.0);
    let mut acc = KahanSum::default();
    for k in 0..=m {
        let kf = k as f64;
        let ln_pmf = ln_fact_m - ln_gamma(kf + 1.0) - ln_gamma((m - k) as f64 + 1.0)
            + kf * ln_p
            + (m - k) as f64 * ln_q;
        acc.add(ln_pmf.exp() * scaled_binom_cdf(big.0, big.1, big.2, t - kf * d));
    }
    acc.value().min(1.0)
}

/// Accumulates the distribution of a sum of independent letter densities and
/// evaluates its lower tail. Degenerate letters collapse to a shift,
/// two-valued letters to binomials with beta-function tails; anything richer
/// goes through exact convolution, with seeded Monte Carlo as the last
/// resort once the convolution cap is hit.
#[derive(Default)]
struct TailParts {
    shift: f64,
    /// (count, mass of high atom, value gap)
    binoms: Vec<(u64, f64, f64)>,
    heavy: Vec<(Spectrum, u64)>,
}

impl TailParts {
    fn clear(&mut self) {
        self.shift = 0.0;
        self.binoms.clear();
        self.heavy.clear();
    }

    /// Adds `count` i.i.d. copies of the letter with the given atoms
    /// (value, mass); atoms get sorted and merged in place.
    fn add_letter(&mut self, atoms: &mut Vec<(f64, f64)>, count: u64) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        if atoms.is_empty() {
            return Err(Error::InvalidProbability("letter with no positive mass".into()));
        }
        atoms.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("density values are finite"));
        let mut last = 0;
        for i in 1..atoms.len() {
            if atoms[i].0 - atoms[last].0 <= VALUE_MERGE_TOL {
                atoms[last].1 += atoms[i].1;
            } else {
                last += 1;
                atoms[last] = atoms[i];
            }
        }
        atoms.truncate(last + 1);
        match atoms.len() {
            1 => self.shift += atoms[0].0 * count as f64,
            2 => {
                self.shift += atoms[0].0 * count as f64;
                let p_high = atoms[1].1 / (atoms[0].1 + atoms[1].1);
                self.binoms.push((count, p_high, atoms[1].0 - atoms[0].0));
            }
            _ => self.heavy.push((Spectrum::from_atoms(atoms.clone())?, count)),
        }
        Ok(())
    }

    /// P[sum <= thresh] and a Monte Carlo half-width when sampling was used.
    /// Ties at the threshold count as inside (the bounds use non-strict
    /// tails), with a small value-scale guard absorbing float noise.
    fn eval(&self, thresh: f64, seed: u64, mc_samples: u64) -> Result<(f64, Option<f64>)> {
        let t = thresh - self.shift;
        let eps = 1e-9 * (1.0 + thresh.abs() + self.shift.abs());
        if self.heavy.is_empty() {
            match self.binoms.len() {
                0 => return Ok((if t + eps >= 0.0 { 1.0 } else { 0.0 }, None)),
                1 => {
                    let (m, p, d) = self.binoms[0];
                    return Ok((scaled_binom_cdf(m, p, d, t + eps), None));
                }
                2 => {
                    return Ok((two_binom_tail(self.binoms[0], self.binoms[1], t + eps), None))
                }
                _ => {}
            }
        }
        match self.exact_tail(t + eps) {
            Ok(v) => Ok((v, None)),
            Err(Error::CapExceeded { .. }) => self.mc(t, seed, mc_samples).map(|(v, h)| (v, Some(h))),
            Err(e) => Err(e),
        }
    }

    fn binom_spectra(&self) -> Result<Vec<Spectrum>> {
        self.binoms
            .iter()
            .map(|&(_, p, d)| Spectrum::from_atoms(vec![(0.0, 1.0 - p), (d, p)]))
            .collect()
    }

    fn exact_tail(&self, t: f64) -> Result<f64> {
        let mut acc: Option<Spectrum> = None;
        let fold = |group: Spectrum, acc: &mut Option<Spectrum>| -> Result<()> {
            *acc = Some(match acc.take() {
                None => group,
                Some(a) => a.convolve(&group, CONV_CAP)?,
            });
            Ok(())
        };
        for (sp, &(m, _, _)) in self.binom_spectra()?.into_iter().zip(&self.binoms) {
            fold(sp.convolve_n(m, CONV_CAP)?, &mut acc)?;
        }
        for (sp, m) in &self.heavy {
            fold(sp.convolve_n(*m, CONV_CAP)?, &mut acc)?;
        }
        Ok(match acc {
            Some(s) => s.tail_prob(t, false),
            None => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }

    fn mc(&self, t: f64, seed: u64, samples: u64) -> Result<(f64, f64)> {
        let binom_specs = self.binom_spectra()?;
        let mut groups: Vec<(&Spectrum, u64)> = Vec::new();
        for (sp, &(m, _, _)) in binom_specs.iter().zip(&self.binoms) {
            groups.push((sp, m));
        }
        for (sp, m) in &self.heavy {
            groups.push((sp, *m));
        }
        Ok(mc_tail(&groups, t, samples.max(1), seed))
    }
}

/// P[sum over groups of i.i.d. density draws <= thresh] for spectra given as
/// (spectrum, count). Exact whenever the letters are degenerate/binomial or
/// the full convolution fits its cap; otherwise seeded Monte Carlo, with the
/// 95% half-width reported.
pub(crate) fn sum_tail(
    groups: &[(&Spectrum, u64)],
    thresh: f64,
    seed: u64,
    mc_samples: u64,
) -> Result<(f64, Option<f64>)> {
    let mut parts = TailParts::default();
    let mut atoms = Vec::new();
    for &(sp, m) in groups {
        if m == 0 {
            continue;
        }
        atoms.clear();
        atoms.extend_from_slice(sp.atoms());
        parts.add_letter(&mut atoms, m)?;
    }
    parts.eval(thresh, seed, mc_samples)
}

// ---------------------------------------------------------------------------
// achievability

/// Itemized upper bound on the min-max error at blocklength n with e^{ln_m}
/// messages: worst-state tail + e^{-delta} + M|states|^2 e^{-alpha}.
#[derive(Debug, Clone, Serialize)]
pub struct AchievabilityReport {
    pub n: u64,
    pub ln_m: f64,
    pub alpha: f64,
    pub delta: f64,
    pub per_state_tail: Vec<f64>,
    pub tail_term: f64,
    pub miss_term: f64,
    pub mass_term: f64,
    /// Sum of the three terms, clipped to 1.
    pub total: f64,
    pub mc_halfwidth: Option<f64>,
}

fn resolve_alpha_delta(n: u64, ln_m: f64, params: &BoundParams) -> Result<(f64, f64)> {
    let specialized = params
        .big_delta
        .map(|dd| {
            require_pos("big_delta", dd)?;
            Ok::<_, Error>((ln_m + n as f64 * dd / 2.0, n as f64 * dd / 2.0))
        })
        .transpose()?;
    let alpha = params
        .alpha
        .or(specialized.map(|s| s.0))
        .ok_or_else(|| Error::BadInput("need alpha and delta, or big_delta".into()))?;
    let delta = params
        .delta
        .or(specialized.map(|s| s.1))
        .ok_or_else(|| Error::BadInput("need alpha and delta, or big_delta".into()))?;
    require_pos("alpha", alpha)?;
    require_pos("delta", delta)?;
    Ok((alpha, delta))
}

/// Random-coding upper bound for a product input Px^n, each state's density
/// measured against that state's own output distribution under Px.
pub fn achievability_bound(
    family: &ChannelFamily,
    px: &Prob,
    n: u64,
    ln_m: f64,
    params: &BoundParams,
) -> Result<AchievabilityReport> {
    if n == 0 {
        return Err(Error::BadInput("blocklength must be >= 1".into()));
    }
    if !ln_m.is_finite() || ln_m < 0.0 {
        return Err(Error::BadInput(format!("ln_m must be finite and >= 0, got {ln_m}")));
    }
    let (alpha, delta) = resolve_alpha_delta(n, ln_m, params)?;
    let thresh = alpha + delta;
    let k = family.num_states();
    let mut per_state = Vec::with_capacity(k);
    let mut halfwidth: Option<f64> = None;
    for theta in 0..k {
        let ch = family.channel(theta);
        let reference = ch.output_dist(px)?;
        let spec = info_density_spectrum(ch, px, &reference)?;
        let (tail, half) =
            sum_tail(&[(&spec, n)], thresh, mix_seed(params.seed, theta as u64, 0x41), params.mc_samples)?;
        if let Some(h) = half {
            halfwidth = Some(halfwidth.map_or(h, |old: f64| old.max(h)));
        }
        per_state.push(tail);
    }
    let tail_term = per_state.iter().cloned().fold(0.0, f64::max);
    let miss_term = (-delta).exp();
    let mass_term = (ln_m + 2.0 * (k as f64).ln() - alpha).exp();
    Ok(AchievabilityReport {
        n,
        ln_m,
        alpha,
        delta,
        per_state_tail: per_state,
        tail_term,
        miss_term,
        mass_term,
        total: (tail_term + miss_term + mass_term).min(1.0),
        mc_halfwidth: halfwidth,
    })
}

// ---------------------------------------------------------------------------
// converse: dual evaluation and its info-spectrum weakening

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConverseMode {
    /// Full enumeration of min_x sum_y sum_theta q min{P, M Pbar e^{-gamma}}.
    Exact,
    /// Per-type tail weakening: min over types of the q-mixed probability
    /// that the density against the product reference falls below
    /// ln M - gamma. Always <= the exact dual value.
    InfoSpectrum,
}

fn validate_reference(family: &ChannelFamily, reference: &[Vec<f64>]) -> Result<()> {
    if reference.len() != family.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "reference has {} rows, family has {} states",
            reference.len(),
            family.num_states()
        )));
    }
    for (theta, row) in reference.iter().enumerate() {
        if row.len() != family.output_size() {
            return Err(Error::DimensionMismatch(format!(
                "reference row {theta} has {} entries, expected {}",
                row.len(),
                family.output_size()
            )));
        }
        let mut sum = KahanSum::default();
        for &v in row {
            if !(0.0..=1.0 + 1e-9).contains(&v) {
                return Err(Error::InvalidProbability(format!(
                    "reference row {theta} has entry {v}"
                )));
            }
            sum.add(v);
        }
        if (sum.value() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProbability(format!(
                "reference row {theta} sums to {}",
                sum.value()
            )));
        }
    }
    Ok(())
}

fn next_word(w: &mut [usize], base: usize) -> bool {
    for d in w.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Lower bound on the max-min error against the jammer mixture q, from the
/// dual feasible point built on a per-letter product reference. `gamma` may
/// be any finite real; the bound is clipped to [0, 1].
pub fn dual_converse(
    family: &ChannelFamily,
    q: &Prob,
    n: u64,
    ln_m: f64,
    gamma: f64,
    reference: &[Vec<f64>],
    mode: ConverseMode,
    params: &BoundParams,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::BadInput("blocklength must be >= 1".into()));
    }
    if q.dim() != family.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "q has {} entries, family has {} states",
            q.dim(),
            family.num_states()
        )));
    }
    if !gamma.is_finite() || !ln_m.is_finite() {
        return Err(Error::BadInput("gamma and ln_m must be finite".into()));
    }
    validate_reference(family, reference)?;
    let k = family.num_states();
    match mode {
        ConverseMode::Exact => {
            let a = family.input_size();
            let b = family.output_size();
            let pairs = (a as u128)
                .pow(n as u32)
                .saturating_mul((b as u128).pow(n as u32));
            if pairs > EXACT_PAIR_CAP as u128 {
                return Err(Error::cap(
                    "exact converse enumeration",
                    pairs.min(u64::MAX as u128) as u64,
                    EXACT_PAIR_CAP,
                ));
            }
            let factor = if ln_m - gamma > 700.0 {
                f64::INFINITY
            } else {
                (ln_m - gamma).exp()
            };
            let mut best = f64::INFINITY;
            let mut x = vec![0usize; n as usize];
            loop {
                let mut sum = KahanSum::default();
                let mut y = vec![0usize; n as usize];
                loop {
                    for theta in 0..k {
                        let ch = family.channel(theta);
                        let mut pxy = 1.0;
                        let mut pbar = 1.0;
                        for (xi, yi) in x.iter().zip(&y) {
                            pxy *= ch.prob(*yi, *xi);
                            pbar *= reference[theta][*yi];
                        }
                        let capped = if pbar == 0.0 { 0.0 } else { pbar * factor };
                        sum.add(q.get(theta) * pxy.min(capped));
                    }
                    if !next_word(&mut y, b) {
                        break;
                    }
                }
                best = best.min(sum.value());
                if !next_word(&mut x, a) {
                    break;
                }
            }
            Ok(clip01(best - (-gamma).exp()))
        }
        ConverseMode::InfoSpectrum => {
            let total = count_types(family.input_size(), n);
            if total > TYPE_CAP as u128 {
                return Err(Error::cap(
                    "type enumeration",
                    total.min(u64::MAX as u128) as u64,
                    TYPE_CAP,
                ));
            }
            let thresh = ln_m - gamma;
            let mut specs: Vec<Vec<Spectrum>> = Vec::with_capacity(k);
            for theta in 0..k {
                let ch = family.channel(theta);
                let row: Result<Vec<Spectrum>> = (0..family.input_size())
                    .map(|a| letter_density_spectrum(ch, a, &reference[theta]))
                    .collect();
                specs.push(row?);
            }
            let mut best = f64::INFINITY;
            let mut err: Option<Error> = None;
            let mut idx: u64 = 0;
            for_each_type(family.input_size(), n, |counts| {
                if err.is_some() {
                    return;
                }
                let mut obj = 0.0;
                for theta in 0..k {
                    let groups: Vec<(&Spectrum, u64)> = counts
                        .iter()
                        .enumerate()
                        .filter(|&(_, &c)| c > 0)
                        .map(|(a, &c)| (&specs[theta][a], c))
                        .collect();
                    match sum_tail(
                        &groups,
                        thresh,
                        mix_seed(params.seed, idx, theta as u64),
                        params.mc_samples,
                    ) {
                        Ok((tail, _)) => obj += q.get(theta) * tail,
                        Err(e) => {
                            err = Some(e);
                            return;
                        }
                    }
                }
                best = best.min(obj);
                idx += 1;
            });
            if let Some(e) = err {
                return Err(e);
            }
            Ok(clip01(best - (-gamma).exp()))
        }
    }
}

// ---------------------------------------------------------------------------
// Chebyshev surrogates

/// Chebyshev surrogates for the residual constants in the converse and
/// achievability tail lemmas: A(x) = F(x) = V_max / x^2, with V_max the
/// per-letter density variance maximized over an input-simplex grid refined
/// to 1% stability (tight to the grid, not inflated).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChebyshevConstants {
    pub a_of_xi: f64,
    pub f_of_beta: f64,
    pub variance_bound: f64,
}

/// Per-letter density variance at one input type: the worst state's
/// P-weighted average, over used letters a, of the variance of
/// ln(W(b|a)/py(b)) with only the output b ~ W(.|a) random. The input word
/// is fixed in the concentration argument, so the letter identity carries
/// no variance (a noiseless channel scores exactly zero).
fn letter_variance(family: &ChannelFamily, p: &[f64]) -> f64 {
    let bsz = family.output_size();
    let mut worst = 0.0f64;
    for theta in 0..family.num_states() {
        let ch = family.channel(theta);
        let mut py = vec![0.0; bsz];
        for (a, &pa) in p.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for (b, v) in py.iter_mut().enumerate() {
                *v += pa * ch.prob(b, a);
            }
        }
        let mut total = KahanSum::default();
        for (a, &pa) in p.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let mut mean = KahanSum::default();
            let mut second = KahanSum::default();
            for b in 0..bsz {
                let w = ch.prob(b, a);
                if w == 0.0 {
                    continue;
                }
                let d = (w / py[b]).ln();
                mean.add(w * d);
                second.add(w * d * d);
            }
            total.add(pa * (second.value() - mean.value() * mean.value()));
        }
        worst = worst.max(total.value());
    }
    worst
}

fn max_letter_variance(family: &ChannelFamily) -> f64 {
    let a = family.input_size();
    let mut prev = -1.0f64;
    let mut resolution: u64 = 4;
    loop {
        let mut vmax = 0.0f64;
        let mut frac = vec![0.0; a];
        for_each_type(a, resolution, |counts| {
            for (f, &c) in frac.iter_mut().zip(counts) {
                *f = c as f64 / resolution as f64;
            }
            vmax = vmax.max(letter_variance(family, &frac));
        });
        let stable = prev >= 0.0 && (vmax - prev).abs() <= 0.01 * vmax.max(1e-12);
        let points = count_types(a, resolution * 2);
        if stable || resolution >= 512 || points > 200_000 {
            return vmax;
        }
        prev = vmax;
        resolution *= 2;
    }
}

/// A(x) and F(x) at the given argument for this family.
pub fn chebyshev_constants(family: &ChannelFamily, xi_or_beta: f64) -> Result<ChebyshevConstants> {
    require_pos("xi_or_beta", xi_or_beta)?;
    let v = max_letter_variance(family);
    let scaled = v / (xi_or_beta * xi_or_beta);
    Ok(ChebyshevConstants { a_of_xi: scaled, f_of_beta: scaled, variance_bound: v })
}

// ---------------------------------------------------------------------------
// type-based converse

struct TypeScanHit {
    obj: f64,
    counts: Vec<u64>,
}

/// Tail of the density sum for one type against its own product output.
#[allow(clippy::too_many_arguments)]
fn type_tail(
    ch: &Dmc,
    counts: &[u64],
    n: u64,
    thresh: f64,
    py: &mut [f64],
    parts: &mut TailParts,
    atoms: &mut Vec<(f64, f64)>,
    seed: u64,
    mc_samples: u64,
) -> Result<f64> {
    let nf = n as f64;
    py.iter_mut().for_each(|v| *v = 0.0);
    for (a, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let w = c as f64 / nf;
        for (b, v) in py.iter_mut().enumerate() {
            *v += w * ch.prob(b, a);
        }
    }
    parts.clear();
    for (a, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        atoms.clear();
        for (b, &pyb) in py.iter().enumerate() {
            let w = ch.prob(b, a);
            if w == 0.0 {
                continue;
            }
            // pyb >= (c/n) w > 0 whenever letter a is used
            atoms.push(((w / pyb).ln(), w));
        }
        parts.add_letter(atoms, c)?;
    }
    parts.eval(thresh, seed, mc_samples).map(|(v, _)| v)
}

/// For each weight vector over states, the minimum over all n-types of the
/// weighted per-state tails, with the argmin type. One streaming pass.
fn scan_types(
    family: &ChannelFamily,
    n: u64,
    grid: &[Vec<f64>],
    tail_thresh: f64,
    seed: u64,
    mc_samples: u64,
) -> Result<Vec<TypeScanHit>> {
    let a = family.input_size();
    let k = family.num_states();
    let total = count_types(a, n);
    if total > TYPE_CAP as u128 {
        return Err(Error::cap(
            "type enumeration",
            total.min(u64::MAX as u128) as u64,
            TYPE_CAP,
        ));
    }
    let mut hits: Vec<TypeScanHit> = grid
        .iter()
        .map(|_| TypeScanHit { obj: f64::INFINITY, counts: Vec::new() })
        .collect();
    let mut tails = vec![0.0; k];
    let mut py = vec![0.0; family.output_size()];
    let mut parts = TailParts::default();
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut err: Option<Error> = None;
    let mut idx: u64 = 0;
    for_each_type(a, n, |counts| {
        if err.is_some() {
            return;
        }
        for (theta, tail) in tails.iter_mut().enumerate() {
            match type_tail(
                family.channel(theta),
                counts,
                n,
                tail_thresh,
                &mut py,
                &mut parts,
                &mut atoms,
                mix_seed(seed, idx, theta as u64),
                mc_samples,
            ) {
                Ok(v) => *tail = v,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            }
        }
        for (g, hit) in grid.iter().zip(hits.iter_mut()) {
            let mut obj = 0.0;
            for (gt, t) in g.iter().zip(&tails) {
                obj += gt * t;
            }
            // strict improvement keeps the first (lexicographically
            // smallest) minimizing type, making reruns bit-stable
            if obj < hit.obj - 1e-15 {
                hit.obj = obj;
                hit.counts = counts.to_vec();
            }
        }
        idx += 1;
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(hits)
}

fn type_tail_thresh(family: &ChannelFamily, n: u64, r_bits: f64, xi: f64) -> f64 {
    n as f64 * (r_bits * LN_2 - xi) - ln_num_types(family.input_size(), n)
}

fn type_indicator_thresh(family: &ChannelFamily, n: u64, r_bits: f64, xi: f64) -> f64 {
    r_bits * LN_2 - 2.0 * xi - ln_num_types(family.input_size(), n) / n as f64
}

fn assemble_type_value(
    family: &ChannelFamily,
    hit: &TypeScanHit,
    q: &[f64],
    n: u64,
    r_bits: f64,
    xi: f64,
    consts: &ChebyshevConstants,
) -> f64 {
    let it = type_indicator_thresh(family, n, r_bits, xi);
    let fracs: Vec<f64> = hit.counts.iter().map(|&c| c as f64 / n as f64).collect();
    let mut ind = 0.0;
    for (theta, &qt) in q.iter().enumerate() {
        if capacity::mi_nats(&fracs, family.channel(theta)) <= it + 1e-12 {
            ind += qt;
        }
    }
    clip01(ind - consts.a_of_xi / n as f64 - (-(n as f64) * xi).exp())
}

const TYPE_SEED: u64 = 0x7c63;
const TYPE_MC: u64 = 200_000;

/// Lower bound on the max-min error for a fixed jammer mixture q: the
/// q-weighted capacity indicator at the tail-minimizing type, minus the
/// Chebyshev and exponential residuals, clipped to [0, 1].
pub fn type_converse(
    family: &ChannelFamily,
    q: &Prob,
    n: u64,
    r_bits: f64,
    xi: f64,
    consts: &ChebyshevConstants,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::BadInput("blocklength must be >= 1".into()));
    }
    if q.dim() != family.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "q has {} entries, family has {} states",
            q.dim(),
            family.num_states()
        )));
    }
    if r_bits < 0.0 {
        return Err(Error::BadInput("rate must be >= 0".into()));
    }
    require_pos("xi", xi)?;
    let grid = vec![q.weights().to_vec()];
    let hits = scan_types(
        family,
        n,
        &grid,
        type_tail_thresh(family, n, r_bits, xi),
        TYPE_SEED,
        TYPE_MC,
    )?;
    Ok(assemble_type_value(family, &hits[0], q.weights(), n, r_bits, xi, consts))
}

fn simplex_points(dim: usize, step: f64) -> Vec<Vec<f64>> {
    let resolution = (1.0 / step).round().max(1.0) as u64;
    let mut out = Vec::new();
    for_each_type(dim, resolution, |counts| {
        out.push(counts.iter().map(|&c| c as f64 / resolution as f64).collect());
    });
    out
}

/// Maximizes the type converse over jammer mixtures on a simplex grid
/// (coarsened automatically to fit the scan budget) followed by one local
/// refinement pass at a fifth of the step. Returns the best mixture and its
/// bound value.
pub fn type_converse_max_q(
    family: &ChannelFamily,
    n: u64,
    r_bits: f64,
    xi: f64,
    consts: &ChebyshevConstants,
    grid_step: f64,
) -> Result<(Prob, f64)> {
    if n == 0 {
        return Err(Error::BadInput("blocklength must be >= 1".into()));
    }
    if r_bits < 0.0 {
        return Err(Error::BadInput("rate must be >= 0".into()));
    }
    require_pos("xi", xi)?;
    require_pos("grid_step", grid_step)?;
    let k = family.num_states();
    let total = count_types(family.input_size(), n);
    if total > TYPE_CAP as u128 {
        return Err(Error::cap(
            "type enumeration",
            total.min(u64::MAX as u128) as u64,
            TYPE_CAP,
        ));
    }
    let mut step = grid_step.clamp(1e-3, 0.5);
    let mut points = simplex_points(k, step);
    while total.saturating_mul(points.len() as u128) > SCAN_BUDGET && step < 0.5 {
        step = (step * 2.0).min(0.5);
        points = simplex_points(k, step);
    }
    let tt = type_tail_thresh(family, n, r_bits, xi);
    let hits = scan_types(family, n, &points, tt, TYPE_SEED, TYPE_MC)?;
    let mut best_q: Option<Vec<f64>> = None;
    let mut best_v = f64::NEG_INFINITY;
    for (g, hit) in points.iter().zip(&hits) {
        let v = assemble_type_value(family, hit, g, n, r_bits, xi, consts);
        if v > best_v + 1e-15 {
            best_v = v;
            best_q = Some(g.clone());
        }
    }
    let coarse_best = best_q.clone().expect("grid is nonempty");
    let fine: Vec<Vec<f64>> = simplex_points(k, step / 5.0)
        .into_iter()
        .filter(|p| {
            p.iter()
                .zip(&coarse_best)
                .all(|(a, b)| (a - b).abs() <= step + 1e-12)
        })
        .collect();
    if !fine.is_empty() && total.saturating_mul(fine.len() as u128) <= SCAN_BUDGET {
        let hits = scan_types(family, n, &fine, tt, TYPE_SEED, TYPE_MC)?;
        for (g, hit) in fine.iter().zip(&hits) {
            let v = assemble_type_value(family, hit, g, n, r_bits, xi, consts);
            if v > best_v + 1e-15 {
                best_v = v;
                best_q = Some(g.clone());
            }
        }
    }
    Ok((Prob::new(best_q.expect("grid is nonempty"))?, best_v))
}

// ---------------------------------------------------------------------------
// assembled two-sided report

/// Two-sided finite-n report: achievability over candidate product inputs
/// against the max-over-q type converse, with every additive term surfaced.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub r_bits: f64,
    pub achievability_upper: f64,
    pub converse_lower: f64,
    pub gap: f64,
    pub gap_below_threshold: Option<bool>,
    pub achievability: AchievabilityReport,
    pub achievability_px: Vec<f64>,
    pub converse_q: Vec<f64>,
    pub xi: f64,
    pub a_of_xi: f64,
    pub variance_bound: f64,
    pub exp_nxi_term: f64,
    pub params: BoundParams,
}

/// Builds the achievability/converse pair at one (n, R). Defaults: the
/// specialized alpha/delta split with big_delta = (Cbar - R)/4 in nats (R/4
/// when R >= Cbar), the input optimized for the worst-case family plus the
/// uniform input as candidates, and xi at 40% of the converse margin.
pub fn gap_report(
    family: &ChannelFamily,
    n: u64,
    r_bits: f64,
    params: &BoundParams,
    gap_threshold: Option<f64>,
) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::BadInput("blocklength must be >= 1".into()));
    }
    if r_bits < 0.0 {
        return Err(Error::BadInput("rate must be >= 0".into()));
    }
    let tol = 1e-7;
    let k = family.num_states();
    let r_nats = r_bits * LN_2;
    let ln_m = n as f64 * r_nats;
    let full: Vec<usize> = (0..k).collect();
    let compound = compound_capacity(family, &full, tol)?;
    let c_lower_nats = compound.value * LN_2;
    let mut c_upper_bits = f64::INFINITY;
    for theta in 0..k {
        c_upper_bits = c_upper_bits.min(channel_capacity(family.channel(theta), tol)?.value);
    }
    let c_upper_nats = c_upper_bits * LN_2;

    let mut eff = params.clone();
    if eff.alpha.is_none() && eff.delta.is_none() && eff.big_delta.is_none() {
        let dd = if c_upper_nats > r_nats {
            (c_upper_nats - r_nats) / 4.0
        } else {
            r_nats / 4.0
        };
        eff.big_delta = Some(if dd > 1e-9 { dd } else { 0.1 });
    }

    let uniform = Prob::uniform(family.input_size());
    let mut best: Option<(AchievabilityReport, Vec<f64>)> = None;
    for cand in [&compound.optimal_input, &uniform] {
        let rep = achievability_bound(family, cand, n, ln_m, &eff)?;
        if best.as_ref().map_or(true, |(b, _)| rep.total < b.total) {
            best = Some((rep, cand.weights().to_vec()));
        }
    }
    let (ach, ach_px) = best.expect("two candidates evaluated");

    let ln_t = ln_num_types(family.input_size(), n);
    let xi = match eff.xi {
        Some(x) => require_pos("xi", x)?,
        None => {
            let margin = r_nats - c_lower_nats - ln_t / n as f64;
            if margin > 1e-9 {
                (0.4 * margin).clamp(1e-4, 5.0)
            } else {
                0.05
            }
        }
    };
    let consts = chebyshev_constants(family, xi)?;
    let grid_step = if k <= 3 { 0.01 } else { 0.05 };
    let (q, conv) = type_converse_max_q(family, n, r_bits, xi, &consts, grid_step)?;

    let gap = ach.total - conv;
    Ok(BoundReport {
        n,
        r_bits,
        achievability_upper: ach.total,
        converse_lower: conv,
        gap,
        gap_below_threshold: gap_threshold.map(|t| gap <= t),
        achievability: ach,
        achievability_px: ach_px,
        converse_q: q.weights().to_vec(),
        xi,
        a_of_xi: consts.a_of_xi,
        variance_bound: consts.variance_bound,
        exp_nxi_term: (-(n as f64) * xi).exp(),
        params: eff,
    })
}

// ---------------------------------------------------------------------------
// split-scheme upper bound

/// Itemized upper bound for the two-phase scheme: a short prefix that
/// commits to a decodable subset drawn from the subset game's optimal
/// mixture, then a payload code for that subset. The total is U(R) plus
/// twice the worst phase error.
#[derive(Debug, Clone, Serialize)]
pub struct SplitBoundReport {
    pub n: u64,
    pub n1: u64,
    pub r_bits: f64,
    pub u_value: f64,
    pub v_support: Vec<Vec<usize>>,
    pub p_v: Vec<f64>,
    pub prefix_px: Vec<f64>,
    pub payload_px: Vec<Vec<f64>>,
    pub delta_hat: f64,
    pub delta_tilde: Vec<f64>,
    pub err_v_tail: f64,
    pub err_v_mass: f64,
    pub err_v_miss: f64,
    pub err_v: f64,
    pub err_s: Vec<f64>,
    pub lambda: f64,
    pub upper: f64,
    pub mc_halfwidth: Option<f64>,
}

/// Evaluates the split-scheme error bound at rate `r_bits` with prefix
/// length n1. Both phase constants default to half the respective rate
/// margin; `params.big_delta` overrides both when set. Errors when the
/// prefix cannot carry the subset index or the payload rate exceeds some
/// supported subset's capacity.
pub fn split_error_bound(
    family: &ChannelFamily,
    n: u64,
    n1: u64,
    r_bits: f64,
    params: &BoundParams,
    tol: f64,
) -> Result<SplitBoundReport> {
    if n1 == 0 || n1 >= n {
        return Err(Error::BadInput(format!("need 0 < n1 < n, got n1={n1}, n={n}")));
    }
    if r_bits < 0.0 {
        return Err(Error::BadInput("rate must be >= 0".into()));
    }
    let caps = curves::all_subset_capacities(family, tol)?;
    let (pv, u_value) = curves::optimal_pv(&caps, r_bits)?;
    let v_support: Vec<Vec<usize>> = pv.iter().map(|(v, _)| v.clone()).collect();
    let p_v: Vec<f64> = pv.iter().map(|&(_, p)| p).collect();
    let big_v = v_support.len() as f64;

    let k = family.num_states();
    let full: Vec<usize> = (0..k).collect();
    let compound = compound_capacity(family, &full, tol)?;
    let c_lower_nats = compound.value * LN_2;
    let prefix_px = compound.optimal_input.clone();

    let n1f = n1 as f64;
    let n2 = n - n1;
    let n2f = n2 as f64;
    let r_nats = r_bits * LN_2;
    let ln_m = n as f64 * r_nats;

    let hat_margin = c_lower_nats - big_v.ln() / n1f;
    if params.big_delta.is_none() && hat_margin <= 0.0 {
        return Err(Error::BadInput(format!(
            "prefix of {n1} letters cannot carry {} subset indices below the worst-case capacity",
            v_support.len()
        )));
    }
    let delta_hat = match params.big_delta {
        Some(d) => require_pos("big_delta", d)?,
        None => hat_margin / 2.0,
    };
    let alpha_hat = big_v.ln() + n1f * delta_hat / 2.0;
    let thresh_hat = alpha_hat + n1f * delta_hat / 2.0;

    let mut halfwidth: Option<f64> = None;
    let track_half = |h: Option<f64>, halfwidth: &mut Option<f64>| {
        if let Some(hv) = h {
            *halfwidth = Some(halfwidth.map_or(hv, |old| old.max(hv)));
        }
    };

    let mut err_v_tail = 0.0f64;
    for theta in 0..k {
        let ch = family.channel(theta);
        let reference = ch.output_dist(&prefix_px)?;
        let spec = info_density_spectrum(ch, &prefix_px, &reference)?;
        let (tail, half) = sum_tail(
            &[(&spec, n1)],
            thresh_hat,
            mix_seed(params.seed, theta as u64, 0x11),
            params.mc_samples,
        )?;
        track_half(half, &mut halfwidth);
        err_v_tail = err_v_tail.max(tail);
    }
    let err_v_mass = (big_v.ln() + 2.0 * (k as f64).ln() - alpha_hat).exp();
    let err_v_miss = (-n1f * delta_hat / 2.0).exp();
    let err_v = (err_v_tail + err_v_mass + err_v_miss).min(1.0);

    let mut err_s = Vec::with_capacity(v_support.len());
    let mut payload_px = Vec::with_capacity(v_support.len());
    let mut delta_tilde = Vec::with_capacity(v_support.len());
    for v in &v_support {
        let sub = compound_capacity(family, v, tol)?;
        let c_v_nats = sub.value * LN_2;
        let payload_rate = ln_m / n2f;
        let margin = c_v_nats - payload_rate;
        if params.big_delta.is_none() && margin <= 0.0 {
            return Err(Error::BadInput(format!(
                "prefix length {n1} leaves payload rate {:.6} above the capacity {:.6} of subset {:?} (nats/use)",
                payload_rate, c_v_nats, v
            )));
        }
        let dt = match params.big_delta {
            Some(d) => d,
            None => margin / 2.0,
        };
        // alpha~ = ln M + n2 dt / 2, so M e^{-alpha~} collapses without
        // ever materializing M
        let thresh_tilde = ln_m + n2f * dt;
        let mut tail_worst = 0.0f64;
        for &theta in v {
            let ch = family.channel(theta);
            let reference = ch.output_dist(&sub.optimal_input)?;
            let spec = info_density_spectrum(ch, &sub.optimal_input, &reference)?;
            let (tail, half) = sum_tail(
                &[(&spec, n2)],
                thresh_tilde,
                mix_seed(params.seed, theta as u64, 0x22),
                params.mc_samples,
            )?;
            track_half(half, &mut halfwidth);
            tail_worst = tail_worst.max(tail);
        }
        let vf = v.len() as f64;
        let mass = (2.0 * vf.ln() - n2f * dt / 2.0).exp();
        let miss = (-n2f * dt / 2.0).exp();
        err_s.push((tail_worst + mass + miss).min(1.0));
        payload_px.push(sub.optimal_input.weights().to_vec());
        delta_tilde.push(dt);
    }

    let lambda = err_s.iter().cloned().fold(err_v, f64::max);
    Ok(SplitBoundReport {
        n,
        n1,
        r_bits,
        u_value,
        v_support,
        p_v,
        prefix_px: prefix_px.weights().to_vec(),
        payload_px,
        delta_hat,
        delta_tilde,
        err_v_tail,
        err_v_mass,
        err_v_miss,
        err_v,
        err_s,
        lambda,
        upper: (u_value + 2.0 * lambda).min(1.0),
        mc_halfwidth: halfwidth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelFamily;
    use proptest::prelude::*;

    fn single(ch: Dmc) -> ChannelFamily {
        ChannelFamily::from_channels(vec![ch]).unwrap()
    }

    fn id_flip() -> ChannelFamily {
        ChannelFamily::from_channels(vec![
            Dmc::identity(2),
            Dmc::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        ])
        .unwrap()
    }

    /// Two states sharing clean letter 0, each with a private clean letter
    /// the other state garbles: identical capacities 1 bit but a strictly
    /// smaller worst-case capacity, so the interval (C_low, C_high) is wide.
    fn wide_gap_pair() -> ChannelFamily {
        ChannelFamily::from_channels(vec![
            Dmc::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap(),
            Dmc::new(vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn type_count_examples() {
        let t = enumerate_types(2, 2).unwrap();
        assert_eq!(t.len(), 3);
        let counts: Vec<Vec<u64>> = t.iter().map(|x| x.counts.clone()).collect();
        assert!(counts.contains(&vec![2, 0]));
        assert!(counts.contains(&vec![1, 1]));
        assert!(counts.contains(&vec![0, 2]));
        assert_eq!(enumerate_types(3, 4).unwrap().len(), 15);
        let solo = enumerate_types(1, 7).unwrap();
        assert_eq!(solo.len(), 1);
        assert_eq!(solo[0].counts, vec![7]);
    }

    #[test]
    fn type_enumeration_capped() {
        match enumerate_types(6, 200) {
            Err(Error::CapExceeded { .. }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn binomial_cdf_matches_direct_sum() {
        let n = 11u64;
        let p = 0.37f64;
        let mut acc = 0.0;
        for k in 0..n {
            let ln_pmf = ln_gamma(n as f64 + 1.0)
                - ln_gamma(k as f64 + 1.0)
                - ln_gamma((n - k) as f64 + 1.0)
                + k as f64 * p.ln()
                + (n - k) as f64 * (1.0 - p).ln();
            acc += ln_pmf.exp();
            assert!((binom_cdf(n, p, k) - acc).abs() < 1e-12, "k={k}");
        }
        assert_eq!(binom_cdf(n, p, n), 1.0);
        assert_eq!(binom_cdf(n, 0.0, 0), 1.0);
        assert_eq!(binom_cdf(n, 1.0, n - 1), 0.0);
    }

    /// Independent oracle: enumerate every (x, y) pair of a 3-letter block.
    fn brute_tail_bsc(p: f64, px0: f64, thresh: f64) -> f64 {
        let ch = Dmc::bsc(p);
        let px = [px0, 1.0 - px0];
        let py = [
            px0 * (1.0 - p) + (1.0 - px0) * p,
            px0 * p + (1.0 - px0) * (1.0 - p),
        ];
        let mut acc = 0.0;
        let eps = 1e-9 * (1.0 + thresh.abs());
        for x in 0..8usize {
            for y in 0..8usize {
                let mut mass = 1.0;
                let mut dens = 0.0;
                for i in 0..3 {
                    let xi = (x >> i) & 1;
                    let yi = (y >> i) & 1;
                    let w = ch.prob(yi, xi);
                    mass *= px[xi] * w;
                    dens += (w / py[yi]).ln();
                }
                if dens <= thresh + eps {
                    acc += mass;
                }
            }
        }
        acc
    }

    #[test]
    fn tail_engine_matches_brute_force_for_three_letters() {
        let fam = single(Dmc::bsc(0.2));
        let px = Prob::new(vec![0.6, 0.4]).unwrap();
        let ch = fam.channel(0);
        let reference = ch.output_dist(&px).unwrap();
        let spec = info_density_spectrum(ch, &px, &reference).unwrap();
        for thresh in [-2.0, 0.3, 0.75, 1.2, 5.0] {
            let (tail, half) = sum_tail(&[(&spec, 3)], thresh, 1, 1000).unwrap();
            assert!(half.is_none());
            let brute = brute_tail_bsc(0.2, 0.6, thresh);
            assert!(
                (tail - brute).abs() < 1e-12,
                "thresh {thresh}: {tail} vs {brute}"
            );
        }
    }

    #[test]
    fn two_binomial_fast_path_matches_direct_sum() {
        let s1 = Spectrum::from_atoms(vec![(0.0, 0.5), (LN_2, 0.5)]).unwrap();
        let s2 = Spectrum::from_atoms(vec![(0.1, 0.3), (0.9, 0.7)]).unwrap();
        let thresh = 2.8;
        let (tail, half) = sum_tail(&[(&s1, 5), (&s2, 4)], thresh, 1, 1000).unwrap();
        assert!(half.is_none());
        let mut direct = 0.0;
        let eps = 1e-9 * (1.0 + thresh.abs());
        for k1 in 0..=5u64 {
            for k2 in 0..=4u64 {
                let v = k1 as f64 * LN_2 + 0.1 * 4.0 + k2 as f64 * 0.8;
                if v <= thresh + eps {
                    let c1 = (ln_gamma(6.0) - ln_gamma(k1 as f64 + 1.0)
                        - ln_gamma(6.0 - k1 as f64))
                        .exp();
                    let c2 = (ln_gamma(5.0) - ln_gamma(k2 as f64 + 1.0)
                        - ln_gamma(5.0 - k2 as f64))
                        .exp();
                    direct += c1 * 0.5f64.powi(5) * c2 * 0.7f64.powi(k2 as i32)
                        * 0.3f64.powi(4 - k2 as i32);
                }
            }
        }
        assert!((tail - direct).abs() < 1e-12, "{tail} vs {direct}");
    }

    #[test]
    fn achievability_noiseless_terms() {
        let fam = single(Dmc::identity(2));
        let px = Prob::uniform(2);
        let params = BoundParams {
            alpha: Some(LN_2 + 0.5),
            delta: Some(0.5),
            ..BoundParams::default()
        };
        let rep = achievability_bound(&fam, &px, 4, 2.0f64.ln(), &params).unwrap();
        // density is constant 4 ln 2 > alpha + delta, so the tail vanishes
        assert_eq!(rep.per_state_tail, vec![0.0]);
        assert!((rep.miss_term - (-0.5f64).exp()).abs() < 1e-15);
        assert!((rep.mass_term - (-0.5f64).exp()).abs() < 1e-15);
        // 2 e^{-0.5} > 1, so the reported total clips
        assert_eq!(rep.total, 1.0);
        assert!(rep.mc_halfwidth.is_none());
    }

    #[test]
    fn achievability_mass_term_is_log_linear_and_clips() {
        let fam = single(Dmc::bsc(0.3));
        let px = Prob::uniform(2);
        let mk = |alpha: f64| BoundParams {
            alpha: Some(alpha),
            delta: Some(0.2),
            ..BoundParams::default()
        };
        let r1 = achievability_bound(&fam, &px, 2, 4.0f64.ln(), &mk(1.0)).unwrap();
        let r2 = achievability_bound(&fam, &px, 2, 4.0f64.ln(), &mk(2.0)).unwrap();
        assert!((r1.mass_term / r2.mass_term - 1.0f64.exp()).abs() < 1e-12);
        // saturated tail: raising alpha only shrinks the mass term
        assert!(r2.total <= r1.total + 1e-12);
        let huge = achievability_bound(&fam, &px, 2, 50.0, &mk(1.0)).unwrap();
        assert_eq!(huge.total, 1.0);
    }

    #[test]
    fn achievability_tail_matches_brute_force() {
        let fam = single(Dmc::bsc(0.2));
        let px = Prob::new(vec![0.6, 0.4]).unwrap();
        let params = BoundParams {
            alpha: Some(0.4),
            delta: Some(0.35),
            ..BoundParams::default()
        };
        let rep = achievability_bound(&fam, &px, 3, 2.0f64.ln(), &params).unwrap();
        let brute = brute_tail_bsc(0.2, 0.6, 0.75);
        assert!((rep.per_state_tail[0] - brute).abs() < 1e-12);
    }

    #[test]
    fn dual_converse_identity_matches_exhaustive() {
        let fam = single(Dmc::identity(2));
        let q = Prob::new(vec![1.0]).unwrap();
        let reference = vec![vec![0.5, 0.5]];
        let gamma = LN_2;
        let v = dual_converse(
            &fam,
            &q,
            1,
            2.0f64.ln(),
            gamma,
            &reference,
            ConverseMode::Exact,
            &BoundParams::default(),
        )
        .unwrap();
        // independent exhaustive evaluation over both inputs
        let factor = (2.0f64.ln() - gamma).exp();
        let mut best = f64::INFINITY;
        for x in 0..2usize {
            let mut sum = 0.0;
            for y in 0..2usize {
                let p: f64 = if x == y { 1.0 } else { 0.0 };
                sum += p.min(0.5 * factor);
            }
            best = best.min(sum);
        }
        let expect = (best - (-gamma).exp()).clamp(0.0, 1.0);
        assert!((v - expect).abs() < 1e-12);
        assert!(v.abs() < 1e-12); // rate sits exactly at capacity
    }

    #[test]
    fn dual_converse_tight_on_single_bsc() {
        // BSC(0.1), one message pair, uniform reference, gamma = ln 2:
        // min_x [min(0.9, 1/2) + min(0.1, 1/2)] - 1/2 = 0.1, exactly the
        // maximum-likelihood error of the best two-codeword code
        let fam = single(Dmc::bsc(0.1));
        let q = Prob::new(vec![1.0]).unwrap();
        let reference = vec![vec![0.5, 0.5]];
        let v = dual_converse(
            &fam,
            &q,
            1,
            2.0f64.ln(),
            LN_2,
            &reference,
            ConverseMode::Exact,
            &BoundParams::default(),
        )
        .unwrap();
        assert!((v - 0.1).abs() < 1e-12, "{v}");
        // the per-type tail weakening can only lose value
        let weak = dual_converse(
            &fam,
            &q,
            1,
            2.0f64.ln(),
            LN_2,
            &reference,
            ConverseMode::InfoSpectrum,
            &BoundParams::default(),
        )
        .unwrap();
        assert!(weak <= v + 1e-12);
    }

    #[test]
    fn dual_converse_two_state_stays_below_game_value() {
        // the true min-max error of {identity, flip} with two messages at
        // one channel use is 1/2; the certificate must stay below it for
        // every gamma and reference (at this tiny size it collapses to 0:
        // min(1,u)+min(1,v) <= u+v caps the x-minimum by e^{-gamma})
        let fam = id_flip();
        let q = Prob::uniform(2);
        for reference in [
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        ] {
            for gamma in [0.1, 0.5, LN_2, 2.0 * LN_2, 3.0] {
                let v = dual_converse(
                    &fam,
                    &q,
                    1,
                    2.0f64.ln(),
                    gamma,
                    &reference,
                    ConverseMode::Exact,
                    &BoundParams::default(),
                )
                .unwrap();
                assert!((0.0..=0.5).contains(&v), "gamma {gamma}: {v}");
                assert!(v <= 1e-12, "n=1 certificate should collapse, got {v}");
            }
        }
    }

    #[test]
    fn dual_converse_vacuous_for_large_gamma() {
        let fam = id_flip();
        let q = Prob::uniform(2);
        let reference = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        for mode in [ConverseMode::Exact, ConverseMode::InfoSpectrum] {
            let v = dual_converse(
                &fam,
                &q,
                2,
                4.0f64.ln(),
                50.0,
                &reference,
                mode,
                &BoundParams::default(),
            )
            .unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn dual_converse_exact_mode_capped() {
        let fam = single(Dmc::bsc(0.1));
        let q = Prob::new(vec![1.0]).unwrap();
        let reference = vec![vec![0.5, 0.5]];
        match dual_converse(
            &fam,
            &q,
            12,
            8.0f64.ln(),
            0.5,
            &reference,
            ConverseMode::Exact,
            &BoundParams::default(),
        ) {
            Err(Error::CapExceeded { .. }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn type_converse_zero_rate_clips_to_zero() {
        let fam = single(Dmc::bsc(0.1));
        let q = Prob::new(vec![1.0]).unwrap();
        let consts = chebyshev_constants(&fam, 0.05).unwrap();
        let v = type_converse(&fam, &q, 16, 0.0, 0.05, &consts).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn type_converse_above_capacity_hits_residual_formula() {
        let fam = single(Dmc::bsc(0.1));
        let q = Prob::new(vec![1.0]).unwrap();
        let xi = 0.05;
        let consts = chebyshev_constants(&fam, xi).unwrap();
        let n = 512u64;
        let v = type_converse(&fam, &q, n, 0.8, xi, &consts).unwrap();
        let expect = (1.0 - consts.a_of_xi / n as f64 - (-(n as f64) * xi).exp())
            .clamp(0.0, 1.0);
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        assert!(v > 0.6 && v < 0.75, "{v}");
    }

    #[test]
    fn type_converse_point_mass_invariant() {
        // rate above the single state's capacity + slack: the bound keeps
        // everything but the residuals
        let fam = single(Dmc::bsc(0.1));
        let q = Prob::new(vec![1.0]).unwrap();
        let xi = 0.04;
        let consts = chebyshev_constants(&fam, xi).unwrap();
        let n = 256u64;
        let v = type_converse(&fam, &q, n, 0.9, xi, &consts).unwrap();
        let floor = 1.0 - consts.a_of_xi / n as f64 - (-(n as f64) * xi).exp();
        assert!(v >= floor.clamp(0.0, 1.0) - 1e-12);
    }

    #[test]
    fn chebyshev_noiseless_family_has_zero_variance() {
        let fam = single(Dmc::identity(3));
        let c = chebyshev_constants(&fam, 0.2).unwrap();
        assert_eq!(c.variance_bound, 0.0);
        assert_eq!(c.a_of_xi, 0.0);
        assert_eq!(c.f_of_beta, 0.0);
    }

    #[test]
    fn chebyshev_quarter_scaling() {
        let fam = single(Dmc::bsc(0.1));
        let c1 = chebyshev_constants(&fam, 0.1).unwrap();
        let c2 = chebyshev_constants(&fam, 0.05).unwrap();
        assert!((c2.a_of_xi - 4.0 * c1.a_of_xi).abs() < 1e-9 * c2.a_of_xi.max(1.0));
        assert_eq!(c1.variance_bound, c2.variance_bound);
    }

    #[test]
    fn chebyshev_variance_dominates_fine_scan() {
        let fam = single(Dmc::bsc(0.1));
        let v = chebyshev_constants(&fam, 1.0).unwrap().variance_bound;
        let mut scan_max = 0.0f64;
        for i in 0..=1000 {
            let p0 = i as f64 / 1000.0;
            scan_max = scan_max.max(letter_variance(&fam, &[p0, 1.0 - p0]));
        }
        assert!(v >= letter_variance(&fam, &[0.5, 0.5]) - 1e-9);
        assert!(v <= scan_max * 1.01 + 1e-9, "{v} vs scan {scan_max}");
        assert!(v >= scan_max * 0.99 - 1e-9, "{v} vs scan {scan_max}");
    }

    #[test]
    fn max_q_midband_approaches_half() {
        let fam = wide_gap_pair();
        let full = compound_capacity(&fam, &[0, 1], 1e-9).unwrap().value;
        let c_high = channel_capacity(fam.channel(0), 1e-9).unwrap().value;
        assert!(full < c_high - 0.1, "gap family sanity: {full} vs {c_high}");
        let r = (full + c_high) / 2.0;
        let n = 1024u64;
        let ln_t = ln_num_types(3, n);
        let margin = r * LN_2 - full * LN_2 - ln_t / n as f64;
        let xi = 0.4 * margin;
        let consts = chebyshev_constants(&fam, xi).unwrap();
        let (q, v) = type_converse_max_q(&fam, n, r, xi, &consts, 0.01).unwrap();
        assert!(v >= 0.15 && v <= 0.55, "midband converse {v}");
        assert!((q.get(0) - 0.5).abs() <= 0.1, "q near even split: {:?}", q.weights());
    }

    #[test]
    fn split_bound_midband_is_tight_and_deterministic() {
        let fam = wide_gap_pair();
        let full = compound_capacity(&fam, &[0, 1], 1e-9).unwrap().value;
        let c_high = channel_capacity(fam.channel(0), 1e-9).unwrap().value;
        let r = (full + c_high) / 2.0;
        let rep = split_error_bound(&fam, 1024, 96, r, &BoundParams::default(), 1e-9).unwrap();
        assert!((rep.u_value - 0.5).abs() < 1e-7);
        assert!((rep.upper - 0.5).abs() < 0.02, "upper {}", rep.upper);
        assert!(rep.mc_halfwidth.is_none(), "all tails should be exact");
        assert_eq!(rep.v_support.len(), 2);
        assert!((rep.p_v[0] - 0.5).abs() < 1e-9);
        let rep2 = split_error_bound(&fam, 1024, 96, r, &BoundParams::default(), 1e-9).unwrap();
        assert_eq!(rep.upper.to_bits(), rep2.upper.to_bits());
        assert_eq!(rep.lambda.to_bits(), rep2.lambda.to_bits());
    }

    #[test]
    fn split_bound_rejects_overlong_prefix() {
        let fam = wide_gap_pair();
        let full = compound_capacity(&fam, &[0, 1], 1e-9).unwrap().value;
        let c_high = channel_capacity(fam.channel(0), 1e-9).unwrap().value;
        let r = (full + c_high) / 2.0;
        match split_error_bound(&fam, 1024, 512, r, &BoundParams::default(), 1e-9) {
            Err(Error::BadInput(msg)) => assert!(msg.contains("payload rate")),
            other => panic!("expected payload-rate error, got {other:?}"),
        }
    }

    #[test]
    fn gap_report_is_internally_consistent() {
        let fam = id_flip();
        let rep = gap_report(&fam, 4, 0.5, &BoundParams::default(), Some(0.5)).unwrap();
        assert!(rep.achievability_upper >= rep.converse_lower - 1e-9);
        assert!((0.0..=1.0).contains(&rep.achievability_upper));
        assert!((0.0..=1.0).contains(&rep.converse_lower));
        assert_eq!(rep.gap_below_threshold, Some(rep.gap <= 0.5));
        let text = serde_json::to_string(&rep).unwrap();
        assert!(text.contains("achievability_upper"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn types_partition_and_count(alphabet in 1usize..=4, n in 1u64..=10) {
            let types = enumerate_types(alphabet, n).unwrap();
            prop_assert_eq!(types.len() as u128, count_types(alphabet, n));
            for t in &types {
                prop_assert_eq!(t.counts.iter().sum::<u64>(), n);
            }
        }

        #[test]
        fn tail_is_monotone_in_threshold(
            p in 0.05f64..0.95,
            px0 in 0.05f64..0.95,
            t1 in -1.0f64..2.0,
            dt in 0.0f64..1.0,
        ) {
            let fam = single(Dmc::bsc(p));
            let px = Prob::new(vec![px0, 1.0 - px0]).unwrap();
            let ch = fam.channel(0);
            let reference = ch.output_dist(&px).unwrap();
            let spec = info_density_spectrum(ch, &px, &reference).unwrap();
            let (lo, _) = sum_tail(&[(&spec, 4)], t1, 3, 1000).unwrap();
            let (hi, _) = sum_tail(&[(&spec, 4)], t1 + dt, 3, 1000).unwrap();
            prop_assert!(lo <= hi + 1e-12);
        }
    }
}
