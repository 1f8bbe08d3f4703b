use crate::error::{Error, Result};
use crate::prob::Prob;
use crate::spectrum::Spectrum;
use serde::{Deserialize, Serialize};

/// Single-letter discrete memoryless channel: row-stochastic |A| x |B| matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc {
    rows: Vec<Vec<f64>>,
    input_size: usize,
    output_size: usize,
}

impl Dmc {
    /// Rows must be stochastic to 1e-9; they are renormalized on ingest.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::BadInput("channel matrix must be nonempty".into()));
        }
        let output_size = rows[0].len();
        let mut norm = Vec::with_capacity(rows.len());
        for (a, row) in rows.iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::DimensionMismatch(format!(
                    "row {a} has {} entries, expected {output_size}",
                    row.len()
                )));
            }
            if row.iter().any(|&x| !x.is_finite() || x < 0.0) {
                return Err(Error::InvalidProbability(format!(
                    "row {a} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidProbability(format!(
                    "row {a} sums to {s}, not 1"
                )));
            }
            norm.push(row.iter().map(|x| x / s).collect());
        }
        Ok(Dmc { input_size: norm.len(), output_size, rows: norm })
    }

    pub fn identity(k: usize) -> Self {
        let rows = (0..k)
            .map(|a| (0..k).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
            .collect();
        Dmc { rows, input_size: k, output_size: k }
    }

    /// Binary symmetric channel with crossover p.
    pub fn bsc(p: f64) -> Self {
        Dmc { rows: vec![vec![1.0 - p, p], vec![p, 1.0 - p]], input_size: 2, output_size: 2 }
    }

    /// Binary erasure channel; output 2 is the erasure symbol.
    pub fn bec(eps: f64) -> Self {
        Dmc {
            rows: vec![vec![1.0 - eps, 0.0, eps], vec![0.0, 1.0 - eps, eps]],
            input_size: 2,
            output_size: 3,
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn prob(&self, b: usize, a: usize) -> f64 {
        self.rows[a][b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.rows[a]
    }

    /// Output distribution induced by an input distribution.
    pub fn output_dist(&self, px: &Prob) -> Result<Vec<f64>> {
        if px.dim() != self.input_size {
            return Err(Error::DimensionMismatch(format!(
                "input distribution has {} letters, channel expects {}",
                px.dim(),
                self.input_size
            )));
        }
        let mut py = vec![0.0; self.output_size];
        for a in 0..self.input_size {
            let pa = px.get(a);
            if pa == 0.0 {
                continue;
            }
            for b in 0..self.output_size {
                py[b] += pa * self.rows[a][b];
            }
        }
        Ok(py)
    }
}

/// A finite family of channels sharing alphabets, indexed by the jammer state.
#[derive(Debug, Clone)]
pub struct ChannelFamily {
    labels: Vec<String>,
    channels: Vec<Dmc>,
}

#[derive(Serialize, Deserialize)]
struct FamilyFile {
    input_alphabet: usize,
    output_alphabet: usize,
    states: Vec<StateEntry>,
}

#[derive(Serialize, Deserialize)]
struct StateEntry {
    label: String,
    matrix: Vec<Vec<f64>>,
}

impl ChannelFamily {
    pub fn new(labels: Vec<String>, channels: Vec<Dmc>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::BadInput("family needs at least one state".into()));
        }
        if labels.len() != channels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} channels",
                labels.len(),
                channels.len()
            )));
        }
        let (na, nb) = (channels[0].input_size(), channels[0].output_size());
        for (i, ch) in channels.iter().enumerate() {
            if ch.input_size() != na || ch.output_size() != nb {
                return Err(Error::DimensionMismatch(format!(
                    "state {} has alphabets {}x{}, expected {}x{}",
                    labels[i],
                    ch.input_size(),
                    ch.output_size(),
                    na,
                    nb
                )));
            }
        }
        Ok(ChannelFamily { labels, channels })
    }

    pub fn from_channels(channels: Vec<Dmc>) -> Result<Self> {
        let labels = (0..channels.len()).map(|i| format!("{}", i + 1)).collect();
        ChannelFamily::new(labels, channels)
    }

    pub fn num_states(&self) -> usize {
        self.channels.len()
    }

    pub fn input_size(&self) -> usize {
        self.channels[0].input_size()
    }

    pub fn output_size(&self) -> usize {
        self.channels[0].output_size()
    }

    pub fn channel(&self, theta: usize) -> &Dmc {
        &self.channels[theta]
    }

    pub fn channels(&self) -> &[Dmc] {
        &self.channels
    }

    pub fn label(&self, theta: usize) -> &str {
        &self.labels[theta]
    }

    /// Restriction to the given state indices, preserving order.
    pub fn subfamily(&self, states: &[usize]) -> Result<ChannelFamily> {
        if states.is_empty() {
            return Err(Error::BadInput("empty state subset".into()));
        }
        let mut labels = Vec::new();
        let mut channels = Vec::new();
        for &i in states {
            if i >= self.channels.len() {
                return Err(Error::BadInput(format!("state index {i} out of range")));
            }
            labels.push(self.labels[i].clone());
            channels.push(self.channels[i].clone());
        }
        ChannelFamily::new(labels, channels)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FamilyFile = serde_json::from_str(text)?;
        let mut labels = Vec::new();
        let mut channels = Vec::new();
        for st in file.states {
            let ch = Dmc::new(st.matrix)?;
            if ch.input_size() != file.input_alphabet || ch.output_size() != file.output_alphabet {
                return Err(Error::DimensionMismatch(format!(
                    "state {} matrix is {}x{}, header says {}x{}",
                    st.label,
                    ch.input_size(),
                    ch.output_size(),
                    file.input_alphabet,
                    file.output_alphabet
                )));
            }
            labels.push(st.label);
            channels.push(ch);
        }
        ChannelFamily::new(labels, channels)
    }

    pub fn to_json(&self) -> String {
        let file = FamilyFile {
            input_alphabet: self.input_size(),
            output_alphabet: self.output_size(),
            states: self
                .labels
                .iter()
                .zip(&self.channels)
                .map(|(label, ch)| StateEntry {
                    label: label.clone(),
                    matrix: (0..ch.input_size()).map(|a| ch.row(a).to_vec()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("family serialization")
    }
}

/// log of the n-letter product probability of y given x under one channel.
/// Returns -inf when some letter has zero probability.
pub fn ln_product_prob(channel: &Dmc, x: &[usize], y: &[usize]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "input block length {} vs output block length {}",
            x.len(),
            y.len()
        )));
    }
    let mut s = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        if a >= channel.input_size() || b >= channel.output_size() {
            return Err(Error::BadInput(format!("symbol ({a},{b}) outside alphabets")));
        }
        let p = channel.prob(b, a);
        if p == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        s += p.ln();
    }
    Ok(s)
}

pub fn product_prob(channel: &Dmc, x: &[usize], y: &[usize]) -> Result<f64> {
    Ok(ln_product_prob(channel, x, y)?.exp())
}

/// The q-mixture of the family's n-letter product channels.
///
/// Not memoryless for n > 1: the state is drawn once and held for the block.
pub struct MixedChannel<'a> {
    family: &'a ChannelFamily,
    q: Prob,
}

impl<'a> MixedChannel<'a> {
    pub fn new(family: &'a ChannelFamily, q: Prob) -> Result<Self> {
        if q.dim() != family.num_states() {
            return Err(Error::DimensionMismatch(format!(
                "q has {} entries for {} states",
                q.dim(),
                family.num_states()
            )));
        }
        Ok(MixedChannel { family, q })
    }

    pub fn eval(&self, x: &[usize], y: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for theta in 0..self.family.num_states() {
            let w = self.q.get(theta);
            if w == 0.0 {
                continue;
            }
            total += w * product_prob(self.family.channel(theta), x, y)?;
        }
        Ok(total)
    }

    /// Materialized single-letter matrix (the n = 1 mixture is itself a Dmc).
    pub fn single_letter(&self) -> Dmc {
        let na = self.family.input_size();
        let nb = self.family.output_size();
        let mut rows = vec![vec![0.0; nb]; na];
        for theta in 0..self.family.num_states() {
            let w = self.q.get(theta);
            for a in 0..na {
                for b in 0..nb {
                    rows[a][b] += w * self.family.channel(theta).prob(b, a);
                }
            }
        }
        Dmc::new(rows).expect("mixture of stochastic rows is stochastic")
    }
}

/// Distribution of the per-letter information density log(P(b|a)/reference(b))
/// under (a,b) ~ Px x channel. Values in nats.
pub fn info_density_spectrum(channel: &Dmc, px: &Prob, reference: &[f64]) -> Result<Spectrum> {
    if px.dim() != channel.input_size() {
        return Err(Error::DimensionMismatch(format!(
            "input distribution has {} letters, channel expects {}",
            px.dim(),
            channel.input_size()
        )));
    }
    if reference.len() != channel.output_size() {
        return Err(Error::DimensionMismatch(format!(
            "reference has {} letters, channel outputs {}",
            reference.len(),
            channel.output_size()
        )));
    }
    let mut atoms = Vec::new();
    for a in 0..channel.input_size() {
        let pa = px.get(a);
        if pa == 0.0 {
            continue;
        }
        for b in 0..channel.output_size() {
            let joint = pa * channel.prob(b, a);
            if joint == 0.0 {
                continue;
            }
            if reference[b] <= 0.0 {
                return Err(Error::InvalidProbability(format!(
                    "reference is zero at output {b} where joint mass is positive"
                )));
            }
            atoms.push(((channel.prob(b, a) / reference[b]).ln(), joint));
        }
    }
    Spectrum::from_atoms(atoms)
}

/// Spectrum of a single input letter a: density of log(P(b|a)/reference(b)), b ~ row a.
pub fn letter_density_spectrum(channel: &Dmc, a: usize, reference: &[f64]) -> Result<Spectrum> {
    let mut atoms = Vec::new();
    for b in 0..channel.output_size() {
        let p = channel.prob(b, a);
        if p == 0.0 {
            continue;
        }
        if reference[b] <= 0.0 {
            return Err(Error::InvalidProbability(format!(
                "reference is zero at output {b} where row {a} is positive"
            )));
        }
        atoms.push(((p / reference[b]).ln(), p));
    }
    Spectrum::from_atoms(atoms)
}
