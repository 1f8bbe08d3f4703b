use crate::error::{Error, Result};
use crate::prob::KahanSum;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Merge tolerance on density values: atoms closer than this collapse.
pub const VALUE_MERGE_TOL: f64 = 1e-12;

/// Default cap on materialized atoms/terms in exact convolutions.
pub const CONV_CAP: u64 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    Nats,
    Bits,
}

/// Discrete distribution of an information-density value.
///
/// Atoms are sorted by value, values closer than 1e-12 merged, zero-mass atoms
/// dropped, and the total mass renormalized to 1 (validated to 1e-10 first).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    atoms: Vec<(f64, f64)>,
    unit: Unit,
}

impl Spectrum {
    pub fn from_atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::from_atoms_in(atoms, Unit::Nats)
    }

    pub fn from_atoms_in(mut atoms: Vec<(f64, f64)>, unit: Unit) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidProbability("spectrum with no atoms".into()));
        }
        if atoms.iter().any(|&(v, p)| !v.is_finite() || !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidProbability(
                "spectrum atom with non-finite value or negative mass".into(),
            ));
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            if p == 0.0 {
                continue;
            }
            match merged.last_mut() {
                Some(last) if v - last.0 <= VALUE_MERGE_TOL => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        if merged.is_empty() {
            return Err(Error::InvalidProbability("spectrum has zero total mass".into()));
        }
        let mut k = KahanSum::default();
        for &(_, p) in &merged {
            k.add(p);
        }
        let total = k.value();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidProbability(format!(
                "spectrum mass {total} is not 1"
            )));
        }
        for a in &mut merged {
            a.1 /= total;
        }
        Ok(Spectrum { atoms: merged, unit })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn to_bits(&self) -> Spectrum {
        match self.unit {
            Unit::Bits => self.clone(),
            Unit::Nats => Spectrum {
                atoms: self.atoms.iter().map(|&(v, p)| (v / crate::LN2, p)).collect(),
                unit: Unit::Bits,
            },
        }
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|&(v, p)| p * (v - m) * (v - m)).sum()
    }

    /// P[value <= threshold], or strict <. Exact over the stored atoms.
    pub fn tail_prob(&self, threshold: f64, strict: bool) -> f64 {
        let mut k = KahanSum::default();
        for &(v, p) in &self.atoms {
            let inside = if strict { v < threshold } else { v <= threshold };
            if !inside {
                break;
            }
            k.add(p);
        }
        k.value().min(1.0)
    }

    /// Exact convolution of two independent spectra.
    pub fn convolve(&self, other: &Spectrum, cap: u64) -> Result<Spectrum> {
        if self.unit != other.unit {
            return Err(Error::BadInput("convolving spectra with different units".into()));
        }
        let terms = self.atoms.len() as u64 * other.atoms.len() as u64;
        if terms > cap {
            return Err(Error::cap("spectrum convolution", terms, cap));
        }
        let mut atoms = Vec::with_capacity(terms as usize);
        for &(va, pa) in &self.atoms {
            for &(vb, pb) in &other.atoms {
                atoms.push((va + vb, pa * pb));
            }
        }
        Spectrum::from_atoms_in(atoms, self.unit)
    }

    /// Distribution of the sum of n independent copies. Exact.
    ///
    /// Spectra whose values lie on a common arithmetic lattice convolve by
    /// dense integer-offset squaring; otherwise all weak compositions of n
    /// over the atoms are enumerated (multinomial weights in log space).
    /// Exceeding `cap` on either route is an explicit error.
    pub fn convolve_n(&self, n: u64, cap: u64) -> Result<Spectrum> {
        if n == 0 {
            return Err(Error::BadInput("n-fold convolution needs n >= 1".into()));
        }
        if n == 1 || self.atoms.len() == 1 {
            let atoms =
                self.atoms.iter().map(|&(v, p)| (v * n as f64, p)).collect::<Vec<_>>();
            // single-atom case: value scales; multi-atom n=1: unchanged
            let atoms = if n == 1 { self.atoms.clone() } else { atoms };
            return Spectrum::from_atoms_in(atoms, self.unit);
        }
        if let Some(lat) = self.lattice_form() {
            return self.convolve_n_lattice(&lat, n, cap);
        }
        let k = self.atoms.len() as u64;
        let count = compositions_count(n, k);
        if count > cap as u128 {
            return Err(Error::cap(
                "composition enumeration",
                count.min(u64::MAX as u128) as u64,
                cap,
            ));
        }
        self.convolve_n_compositions(n, count as usize)
    }

    /// (base value, step, integer offsets) if all values sit on one lattice.
    fn lattice_form(&self) -> Option<(f64, f64, Vec<u64>)> {
        if self.atoms.len() < 2 {
            return None;
        }
        let v0 = self.atoms[0].0;
        let mut step = f64::INFINITY;
        for w in self.atoms.windows(2) {
            step = step.min(w[1].0 - w[0].0);
        }
        if !(step > 0.0) || !step.is_finite() {
            return None;
        }
        let mut offsets = Vec::with_capacity(self.atoms.len());
        for &(v, _) in &self.atoms {
            let r = (v - v0) / step;
            let k = r.round();
            if (r - k).abs() > 1e-9 || k < 0.0 || k > 1e12 {
                return None;
            }
            offsets.push(k as u64);
        }
        Some((v0, step, offsets))
    }

    fn convolve_n_lattice(&self, lat: &(f64, f64, Vec<u64>), n: u64, cap: u64) -> Result<Spectrum> {
        let (v0, step, offsets) = lat;
        let span = *offsets.last().expect("sorted atoms");
        let final_len = span
            .checked_mul(n)
            .and_then(|x| x.checked_add(1))
            .ok_or_else(|| Error::cap("lattice convolution span", u64::MAX, cap))?;
        if final_len > cap {
            return Err(Error::cap("lattice convolution", final_len, cap));
        }
        let mut base = vec![0.0f64; (span + 1) as usize];
        for (&(_, p), &off) in self.atoms.iter().zip(offsets) {
            base[off as usize] += p;
        }
        // binary exponentiation over dense coefficient vectors
        let mut result: Option<Vec<f64>> = None;
        let mut sq = base;
        let mut m = n;
        loop {
            if m & 1 == 1 {
                result = Some(match result {
                    None => sq.clone(),
                    Some(r) => dense_mul(&r, &sq),
                });
            }
            m >>= 1;
            if m == 0 {
                break;
            }
            sq = dense_mul(&sq, &sq);
        }
        let coeffs = result.expect("n >= 1");
        let atoms = coeffs
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
            .map(|(i, p)| (n as f64 * v0 + step * i as f64, p))
            .collect();
        Spectrum::from_atoms_in(atoms, self.unit)
    }

    fn convolve_n_compositions(&self, n: u64, count_hint: usize) -> Result<Spectrum> {
        let k = self.atoms.len();
        let ln_n_fact = ln_gamma(n as f64 + 1.0);
        let ln_p: Vec<f64> = self.atoms.iter().map(|&(_, p)| p.ln()).collect();
        let vals: Vec<f64> = self.atoms.iter().map(|&(v, _)| v).collect();
        let mut out = Vec::with_capacity(count_hint);
        let mut counts = vec![0u64; k];
        compose(n, 0, &mut counts, &mut |c: &[u64]| {
            let mut lnp = ln_n_fact;
            let mut v = 0.0;
            for i in 0..k {
                let ci = c[i] as f64;
                lnp += ci * ln_p[i] - ln_gamma(ci + 1.0);
                v += ci * vals[i];
            }
            out.push((v, lnp.exp()));
        });
        Spectrum::from_atoms_in(out, self.unit)
    }
}

fn dense_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0f64; a.len() + b.len() - 1];
    for (i, &pa) in a.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (j, &pb) in b.iter().enumerate() {
            out[i + j] += pa * pb;
        }
    }
    out
}

/// Number of weak compositions of n into k parts, saturating.
pub fn compositions_count(n: u64, k: u64) -> u128 {
    // C(n + k - 1, k - 1)
    let mut num = 1u128;
    for i in 0..(k - 1).min(n) {
        num = num.saturating_mul((n + k - 1 - i) as u128) / (i as u128 + 1);
        if num > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    num
}

fn compose(rem: u64, idx: usize, counts: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
    if idx == counts.len() - 1 {
        counts[idx] = rem;
        f(counts);
        return;
    }
    for c in 0..=rem {
        counts[idx] = c;
        compose(rem - c, idx + 1, counts, f);
    }
}

/// P[A + B <= c] without materializing the joint support.
pub fn tail_of_sum(a: &Spectrum, b: &Spectrum, c: f64) -> f64 {
    let mut k = KahanSum::default();
    for &(va, pa) in a.atoms() {
        k.add(pa * b.tail_prob(c - va, false));
    }
    k.value().min(1.0)
}

/// Monte Carlo estimate of P[sum of groups <= threshold] with 95% half-width.
///
/// Each group contributes `count` i.i.d. draws from its spectrum. Seeded and
/// reproducible; the fallback when exact convolution exceeds its cap.
pub fn mc_tail(
    groups: &[(&Spectrum, u64)],
    threshold: f64,
    samples: u64,
    seed: u64,
) -> (f64, f64) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cum: Vec<Vec<(f64, f64)>> = groups
        .iter()
        .map(|(s, _)| {
            let mut acc = 0.0;
            s.atoms()
                .iter()
                .map(|&(v, p)| {
                    acc += p;
                    (acc, v)
                })
                .collect()
        })
        .collect();
    let mut hits = 0u64;
    for _ in 0..samples {
        let mut sum = 0.0;
        for ((_, count), table) in groups.iter().zip(&cum) {
            for _ in 0..*count {
                let u: f64 = rng.gen();
                let idx = table.partition_point(|&(c, _)| c < u);
                sum += table[idx.min(table.len() - 1)].1;
            }
        }
        if sum <= threshold {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let half = 1.96 * (p * (1.0 - p) / samples as f64).sqrt();
    (p, half)
}
