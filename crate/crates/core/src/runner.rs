//! Run engine behind the CLI: resolves a full configuration (defaults and
//! seeds included), loads the channel family, dispatches to the requested
//! analysis, and renders JSON or CSV with the resolved config echoed into
//! the output so any run can be reproduced byte-for-byte.

use crate::bounds::{gap_report, BoundParams, BoundReport};
use crate::capacity::compound_capacity;
use crate::channel::ChannelFamily;
use crate::codes::{
    evaluate_code, evaluate_split, feinstein_build, split_build, split_certified_upper,
    CodeErrorReport, FeinsteinBuild, SplitBuild,
};
use crate::curves::{self, CurvePair};
use crate::error::{Error, Result};
use crate::exact::{game_values, GameValues};
use crate::prob::Prob;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Capacity,
    Curve,
    Bounds,
    Exact,
    Codes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeScheme {
    Feinstein,
    Split,
}

fn default_tol() -> f64 {
    1e-9
}

fn default_seed() -> u64 {
    7
}

fn default_restarts() -> usize {
    4
}

fn default_format() -> OutputFormat {
    OutputFormat::Json
}

/// Fully resolved run request. Everything that influences numbers lives
/// here; the rendered output embeds it verbatim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Path of the family JSON; echoed for provenance only.
    pub family: String,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
    #[serde(default)]
    pub subsets: bool,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub r: Option<f64>,
    /// "start:end:steps" inclusive grid of rates in bits.
    #[serde(default)]
    pub r_grid: Option<String>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub n1: Option<u64>,
    #[serde(default)]
    pub scheme: Option<CodeScheme>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub gap_threshold: Option<f64>,
}

impl RunConfig {
    pub fn new(command: CommandKind, family: impl Into<String>) -> Self {
        RunConfig {
            command,
            family: family.into(),
            format: OutputFormat::Json,
            subsets: false,
            n: None,
            r: None,
            r_grid: None,
            eps: Vec::new(),
            tol: default_tol(),
            seed: default_seed(),
            n1: None,
            scheme: None,
            m: None,
            q: None,
            gamma: None,
            xi: None,
            alpha: None,
            delta: None,
            restarts: default_restarts(),
            gap_threshold: None,
        }
    }

    fn bound_params(&self) -> BoundParams {
        BoundParams {
            alpha: self.alpha,
            delta: self.delta,
            gamma: self.gamma,
            xi: self.xi,
            seed: self.seed,
            ..Default::default()
        }
    }
}

// ---------------------------------------------------------------------------
// per-command reports

#[derive(Debug, Clone, Serialize)]
pub struct SubsetCapacityRow {
    pub states: Vec<usize>,
    pub labels: Vec<String>,
    pub capacity_bits: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityReport {
    pub per_state: Vec<SubsetCapacityRow>,
    pub c_lower_bits: f64,
    pub c_upper_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsets: Option<Vec<SubsetCapacityRow>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsCapacityRow {
    pub eps: f64,
    pub capacity_bits: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveReport {
    pub curve: CurvePair,
    pub eps_capacities: Vec<EpsCapacityRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    /// Rates actually evaluated (midpoint defaults when none requested).
    pub r_values: Vec<f64>,
    /// Subset-capacity breakpoints, reported separately so default grids
    /// can avoid them.
    pub breakpoints: Vec<f64>,
    pub reports: Vec<BoundReport>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum CodesReport {
    Feinstein {
        build: FeinsteinBuild,
        evaluation: CodeErrorReport,
    },
    Split {
        build: SplitBuild,
        certified_upper: f64,
        evaluation: CodeErrorReport,
    },
}

/// One rendered run: the resolved config plus the command's result.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutput<T: Serialize> {
    pub config: RunConfig,
    pub result: T,
}

// ---------------------------------------------------------------------------
// engines

fn load_family(config: &RunConfig) -> Result<ChannelFamily> {
    let text = std::fs::read_to_string(&config.family).map_err(|e| {
        Error::BadInput(format!("cannot read family file {}: {e}", config.family))
    })?;
    ChannelFamily::from_json(&text)
}

fn subset_row(
    family: &ChannelFamily,
    states: Vec<usize>,
    capacity_bits: f64,
) -> SubsetCapacityRow {
    let labels = states.iter().map(|&t| family.label(t).to_string()).collect();
    SubsetCapacityRow { states, labels, capacity_bits }
}

pub fn cmd_capacity(config: &RunConfig) -> Result<CapacityReport> {
    let family = load_family(config)?;
    let caps = curves::all_subset_capacities(&family, config.tol)?;
    let per_state = (0..family.num_states())
        .map(|t| {
            let c = caps.get(&[t])?;
            Ok(subset_row(&family, vec![t], c))
        })
        .collect::<Result<Vec<_>>>()?;
    let subsets = if config.subsets {
        let mut rows = Vec::new();
        for mask in 1u32..(1 << family.num_states()) {
            let states: Vec<usize> =
                (0..family.num_states()).filter(|&t| mask & (1 << t) != 0).collect();
            let c = caps.get(&states)?;
            rows.push(subset_row(&family, states, c));
        }
        Some(rows)
    } else {
        None
    };
    Ok(CapacityReport {
        per_state,
        c_lower_bits: caps.c_lower(),
        c_upper_bits: caps.c_upper(),
        subsets,
    })
}

pub fn cmd_curve(config: &RunConfig) -> Result<CurveReport> {
    let family = load_family(config)?;
    let curve = curves::build_curves(&family, config.tol)?;
    let mut eps_capacities = Vec::with_capacity(config.eps.len());
    for &eps in &config.eps {
        eps_capacities.push(EpsCapacityRow {
            eps,
            capacity_bits: curves::eps_capacity_compound(&curve, eps)?,
        });
    }
    Ok(CurveReport { curve, eps_capacities })
}

fn parse_r_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::BadInput(format!(
            "rate grid must be start:end:steps, got {text}"
        )));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| Error::BadInput(format!("bad grid start {}", parts[0])))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| Error::BadInput(format!("bad grid end {}", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| Error::BadInput(format!("bad grid step count {}", parts[2])))?;
    if steps == 0 || !a.is_finite() || !b.is_finite() || a < 0.0 || b < a {
        return Err(Error::BadInput(format!("invalid rate grid {text}")));
    }
    if steps == 1 {
        return Ok(vec![a]);
    }
    Ok((0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64).collect())
}

/// Rates to evaluate: explicit value, explicit grid, or interval midpoints
/// between consecutive subset-capacity breakpoints (breakpoints themselves
/// are avoided — the step functions jump there).
fn resolve_rates(config: &RunConfig, breakpoints: &[f64]) -> Result<Vec<f64>> {
    if let Some(r) = config.r {
        if r < 0.0 {
            return Err(Error::BadInput("rate must be >= 0".into()));
        }
        return Ok(vec![r]);
    }
    if let Some(grid) = &config.r_grid {
        return parse_r_grid(grid);
    }
    let mut rates = Vec::new();
    let mut left = 0.0;
    for &bp in breakpoints {
        if bp > left + 1e-12 {
            rates.push(0.5 * (left + bp));
        }
        left = bp;
    }
    rates.push(left + 0.25);
    Ok(rates)
}

pub fn cmd_bounds(config: &RunConfig) -> Result<BoundsReport> {
    let family = load_family(config)?;
    let n = config
        .n
        .ok_or_else(|| Error::BadInput("bounds need a blocklength (--n)".into()))?;
    let caps = curves::all_subset_capacities(&family, config.tol.max(1e-7))?;
    let mut breakpoints: Vec<f64> = Vec::new();
    for mask in 1u32..(1 << family.num_states()) {
        let states: Vec<usize> =
            (0..family.num_states()).filter(|&t| mask & (1 << t) != 0).collect();
        let c = caps.get(&states)?;
        if !breakpoints.iter().any(|&b| (b - c).abs() < 1e-9) {
            breakpoints.push(c);
        }
    }
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let r_values = resolve_rates(config, &breakpoints)?;
    let params = config.bound_params();
    let mut reports = Vec::with_capacity(r_values.len());
    for &r in &r_values {
        reports.push(gap_report(&family, n, r, &params, config.gap_threshold)?);
    }
    Ok(BoundsReport { r_values, breakpoints, reports })
}

pub fn cmd_exact(config: &RunConfig) -> Result<GameValues> {
    let family = load_family(config)?;
    let n = config.n.unwrap_or(1);
    let m = config.m.unwrap_or(2);
    game_values(&family, n as usize, m, config.restarts, config.seed)
}

pub fn cmd_codes(config: &RunConfig) -> Result<CodesReport> {
    let family = load_family(config)?;
    let scheme = config
        .scheme
        .ok_or_else(|| Error::BadInput("codes need --scheme feinstein|split".into()))?;
    let n = config
        .n
        .ok_or_else(|| Error::BadInput("codes need a blocklength (--n)".into()))? as usize;
    let q = match &config.q {
        Some(w) => Some(Prob::new(w.clone())?),
        None => None,
    };
    match scheme {
        CodeScheme::Feinstein => {
            let m = match (config.m, config.r) {
                (Some(m), _) => m,
                (None, Some(r)) => ((n as f64 * r).exp2().ceil() as usize).max(1),
                (None, None) => {
                    return Err(Error::BadInput(
                        "feinstein scheme needs --M or a rate".into(),
                    ))
                }
            };
            let alpha = config
                .alpha
                .unwrap_or_else(|| (m as f64).ln().max(1e-12) + 0.1 * n as f64);
            let full: Vec<usize> = (0..family.num_states()).collect();
            let compound = compound_capacity(&family, &full, config.tol)?;
            let build = feinstein_build(&family, n, m, alpha, &compound.optimal_input)?;
            let evaluation = evaluate_code(&build.code, &family, q.as_ref())?;
            Ok(CodesReport::Feinstein { build, evaluation })
        }
        CodeScheme::Split => {
            let r = config
                .r
                .ok_or_else(|| Error::BadInput("split scheme needs a rate (--R)".into()))?;
            let n1 = config
                .n1
                .unwrap_or_else(|| (n as f64).sqrt().ceil() as u64)
                as usize;
            let build = split_build(&family, n, n1, r, config.tol)?;
            let evaluation = evaluate_split(&build.code, &family, q.as_ref())?;
            let certified_upper = split_certified_upper(&build);
            Ok(CodesReport::Split { build, certified_upper, evaluation })
        }
    }
}

// ---------------------------------------------------------------------------
// rendering

fn json_envelope<T: Serialize>(config: &RunConfig, result: T) -> Result<String> {
    let out = RunOutput { config: config.clone(), result };
    Ok(serde_json::to_string_pretty(&out)? + "\n")
}

fn csv_header(schema: &str, config: &RunConfig) -> Result<String> {
    Ok(format!(
        "# schema={schema}\n# config={}\n",
        serde_json::to_string(config)?
    ))
}

fn render_capacity_csv(config: &RunConfig, rep: &CapacityReport) -> Result<String> {
    let mut out = csv_header("capacity/v1", config)?;
    out.push_str("kind,states,capacity_bits\n");
    for row in &rep.per_state {
        out.push_str(&format!("state,{},{}\n", row.states[0], row.capacity_bits));
    }
    out.push_str(&format!("c-lower,all,{}\n", rep.c_lower_bits));
    out.push_str(&format!("c-upper,best-single,{}\n", rep.c_upper_bits));
    if let Some(subsets) = &rep.subsets {
        for row in subsets {
            let states: Vec<String> = row.states.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!("subset,{},{}\n", states.join("+"), row.capacity_bits));
        }
    }
    Ok(out)
}

fn render_curve_csv(config: &RunConfig, rep: &CurveReport) -> Result<String> {
    let mut out = csv_header("curve/v1", config)?;
    out.push_str(&rep.curve.to_csv());
    if !rep.eps_capacities.is_empty() {
        out.push_str("eps,eps_capacity_bits\n");
        for row in &rep.eps_capacities {
            out.push_str(&format!("{},{}\n", row.eps, row.capacity_bits));
        }
    }
    Ok(out)
}

fn render_bounds_csv(config: &RunConfig, rep: &BoundsReport) -> Result<String> {
    let mut out = csv_header("bounds/v1", config)?;
    out.push_str("n,r_bits,achievability_upper,converse_lower,gap,xi,a_of_xi,variance_bound\n");
    for r in &rep.reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            r.r_bits,
            r.achievability_upper,
            r.converse_lower,
            r.gap,
            r.xi,
            r.a_of_xi,
            r.variance_bound
        ));
    }
    Ok(out)
}

fn render_exact_csv(config: &RunConfig, v: &GameValues) -> Result<String> {
    let mut out = csv_header("exact/v1", config)?;
    out.push_str("n,m,lp_lower,exact_lower,det_upper,heuristic_upper,codes_enumerated\n");
    out.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        v.n, v.m, v.lp_lower, v.exact_lower, v.det_upper, v.heuristic_upper, v.codes_enumerated
    ));
    Ok(out)
}

fn render_codes_csv(config: &RunConfig, rep: &CodesReport) -> Result<String> {
    let mut out = csv_header("codes/v1", config)?;
    let evaluation = match rep {
        CodesReport::Feinstein { evaluation, .. } => evaluation,
        CodesReport::Split { evaluation, .. } => evaluation,
    };
    out.push_str(&evaluation.to_csv());
    Ok(out)
}

/// Executes the configured command and renders its output in the requested
/// format. Identical configs produce identical bytes.
pub fn run(config: &RunConfig) -> Result<String> {
    match (config.command, config.format) {
        (CommandKind::Capacity, OutputFormat::Json) => {
            json_envelope(config, cmd_capacity(config)?)
        }
        (CommandKind::Capacity, OutputFormat::Csv) => {
            render_capacity_csv(config, &cmd_capacity(config)?)
        }
        (CommandKind::Curve, OutputFormat::Json) => json_envelope(config, cmd_curve(config)?),
        (CommandKind::Curve, OutputFormat::Csv) => render_curve_csv(config, &cmd_curve(config)?),
        (CommandKind::Bounds, OutputFormat::Json) => json_envelope(config, cmd_bounds(config)?),
        (CommandKind::Bounds, OutputFormat::Csv) => {
            render_bounds_csv(config, &cmd_bounds(config)?)
        }
        (CommandKind::Exact, OutputFormat::Json) => json_envelope(config, cmd_exact(config)?),
        (CommandKind::Exact, OutputFormat::Csv) => render_exact_csv(config, &cmd_exact(config)?),
        (CommandKind::Codes, OutputFormat::Json) => json_envelope(config, cmd_codes(config)?),
        (CommandKind::Codes, OutputFormat::Csv) => render_codes_csv(config, &cmd_codes(config)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Dmc;
    use std::io::Write;

    fn write_family(channels: Vec<Dmc>) -> tempfile::NamedTempFile {
        let fam = ChannelFamily::from_channels(channels).unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(fam.to_json().as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn z_pair_file() -> tempfile::NamedTempFile {
        write_family(vec![
            Dmc::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap(),
            Dmc::new(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap(),
        ])
    }

    #[test]
    fn capacity_command_reports_all_levels() {
        let f = write_family(vec![Dmc::bsc(0.1), Dmc::bsc(0.2)]);
        let mut config =
            RunConfig::new(CommandKind::Capacity, f.path().to_str().unwrap());
        config.subsets = true;
        config.tol = 1e-9;
        let rep = cmd_capacity(&config).unwrap();
        assert_eq!(rep.per_state.len(), 2);
        assert_eq!(rep.subsets.as_ref().unwrap().len(), 3);
        // both BSCs share the uniform optimum, so the compound capacity is
        // the worse single-state capacity
        let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        assert!((rep.c_lower_bits - (1.0 - h(0.2))).abs() < 1e-6);
        assert!((rep.c_upper_bits - (1.0 - h(0.2))).abs() < 1e-6);
        let text = run(&config).unwrap();
        assert!(text.contains("c_lower_bits"));
    }

    #[test]
    fn curve_command_emits_eps_table() {
        let f = z_pair_file();
        let mut config = RunConfig::new(CommandKind::Curve, f.path().to_str().unwrap());
        config.eps = vec![0.1, 0.4, 0.5, 0.9];
        let rep = cmd_curve(&config).unwrap();
        let caps = &rep.curve.capacities;
        let c_low = caps.iter().map(|&(_, c)| c).fold(f64::INFINITY, f64::min);
        // the midband's right edge: worst single-state capacity
        let c_high = caps
            .iter()
            .filter(|(states, _)| states.len() == 1)
            .map(|&(_, c)| c)
            .fold(f64::INFINITY, f64::min);
        assert!((rep.eps_capacities[0].capacity_bits - c_low).abs() < 1e-9);
        assert!((rep.eps_capacities[1].capacity_bits - c_low).abs() < 1e-9);
        assert!((rep.eps_capacities[2].capacity_bits - c_high).abs() < 1e-9);
        assert!((rep.eps_capacities[3].capacity_bits - c_high).abs() < 1e-9);
    }

    #[test]
    fn bounds_default_grid_avoids_breakpoints() {
        let f = z_pair_file();
        let mut config = RunConfig::new(CommandKind::Bounds, f.path().to_str().unwrap());
        config.n = Some(8);
        config.format = OutputFormat::Csv;
        let rep = cmd_bounds(&config).unwrap();
        assert_eq!(rep.reports.len(), rep.r_values.len());
        for r in &rep.r_values {
            for bp in &rep.breakpoints {
                assert!((r - bp).abs() > 1e-6, "rate {r} sits on breakpoint {bp}");
            }
        }
        let text = run(&config).unwrap();
        assert!(text.starts_with("# schema=bounds/v1\n# config="));
        let text2 = run(&config).unwrap();
        assert_eq!(text, text2, "reruns must be byte-identical");
    }

    #[test]
    fn exact_command_runs_the_conflict_instance() {
        let f = write_family(vec![
            Dmc::identity(2),
            Dmc::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        ]);
        let mut config = RunConfig::new(CommandKind::Exact, f.path().to_str().unwrap());
        config.n = Some(1);
        config.m = Some(2);
        let v = cmd_exact(&config).unwrap();
        assert!((v.exact_lower - 0.5).abs() < 1e-8);
        assert!((v.det_upper - 0.5).abs() < 1e-8);
        assert!(v.lp_lower <= 0.5 + 1e-8);
    }

    #[test]
    fn codes_command_builds_and_evaluates_both_schemes() {
        let f = write_family(vec![Dmc::identity(2)]);
        let mut config = RunConfig::new(CommandKind::Codes, f.path().to_str().unwrap());
        config.scheme = Some(CodeScheme::Feinstein);
        config.n = Some(2);
        config.m = Some(2);
        match cmd_codes(&config).unwrap() {
            CodesReport::Feinstein { evaluation, .. } => {
                assert_eq!(evaluation.worst_state_avg, 0.0);
            }
            other => panic!("wrong scheme: {other:?}"),
        }

        let f2 = z_pair_file();
        let mut config = RunConfig::new(CommandKind::Codes, f2.path().to_str().unwrap());
        config.scheme = Some(CodeScheme::Split);
        config.n = Some(8);
        config.n1 = Some(2);
        config.r = Some(0.3166);
        config.q = Some(vec![0.5, 0.5]);
        match cmd_codes(&config).unwrap() {
            CodesReport::Split { build, certified_upper, evaluation } => {
                assert_eq!(build.code.v_support.len(), 2);
                assert!(evaluation.worst_state_avg <= certified_upper + 1e-9);
                assert!(evaluation.avg_under_q.is_some());
            }
            other => panic!("wrong scheme: {other:?}"),
        }
    }

    #[test]
    fn rate_grid_parsing_is_strict() {
        assert_eq!(parse_r_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_r_grid("0.25:0.5:1").unwrap(), vec![0.25]);
        assert!(parse_r_grid("1:0:5").is_err());
        assert!(parse_r_grid("a:b:c").is_err());
        assert!(parse_r_grid("0:1").is_err());
    }
}
