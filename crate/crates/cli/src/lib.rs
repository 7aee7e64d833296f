//! Parameter sweeps over rate and block length, written as CSV plus a JSON
//! sidecar describing the conventions used.

use std::cmp::Ordering;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use gecodes::bounds::{gallager_bound, rare_bound, BoundResult, CodeParams, RhoMode};
use gecodes::exact::{bsc_exact, ge_exact, DecoderSpec, DecodingRule, TiePolicy};
use gecodes::markov::{occupancy_pmf, stationary, ChannelParams, State};
use gecodes::montecarlo::{estimate, InitialState, SimConfig};
use rayon::prelude::*;
use serde_json::json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Quantity {
    BoundGallager,
    BoundRare,
    Bsc,
    ExactMd,
    ExactMl,
    Occupancy,
    Simulate,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Quantity::BoundGallager => "bound_gallager",
            Quantity::BoundRare => "bound_rare",
            Quantity::Bsc => "bsc",
            Quantity::ExactMd => "exact_md",
            Quantity::ExactMl => "exact_ml",
            Quantity::Occupancy => "occupancy",
            Quantity::Simulate => "simulate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig2,
    Fig3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RateUnit {
    Nats,
    Bits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DecoderArg {
    Md,
    Ml,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TiesArg {
    Error,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Averaging {
    Stationary,
    PerTransition,
}

#[derive(Parser, Debug)]
#[command(name = "gecodes", version, about = "Decoding-failure sweeps for Gilbert-Elliott channels")]
pub struct Args {
    /// Fill unset options with the parameters of a published figure.
    pub preset: Option<Preset>,
    #[arg(long, value_delimiter = ',')]
    pub quantity: Vec<Quantity>,
    #[arg(long, value_delimiter = ',')]
    pub rates: Vec<f64>,
    #[arg(long = "N", value_delimiter = ',')]
    pub blocklengths: Vec<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// `N α`, held fixed as N varies.
    #[arg(long)]
    pub n_alpha: Option<f64>,
    #[arg(long)]
    pub n_beta: Option<f64>,
    #[arg(long)]
    pub eps_g: Option<f64>,
    #[arg(long)]
    pub eps_b: Option<f64>,
    #[arg(long, value_enum)]
    pub rate_unit: Option<RateUnit>,
    /// Decoder for `simulate`; the exact quantities name their own.
    #[arg(long, value_enum)]
    pub decoder: Option<DecoderArg>,
    #[arg(long, value_enum)]
    pub ties: Option<TiesArg>,
    #[arg(long, value_enum)]
    pub averaging: Option<Averaging>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// BSC crossover for `bsc`.
    #[arg(long)]
    pub p: Option<f64>,
    /// Exact codebook size, overriding `e^{N R}`.
    #[arg(long = "M")]
    pub m_codewords: Option<u64>,
    /// CSV destination; stdout when absent. The sidecar goes to `<out>.meta.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] gecodes::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use gecodes::Error as E;
        match self {
            CliError::Lib(e) => match e {
                E::InvalidParameter { .. } => "invalid_parameter",
                E::ProbabilityAboveOne { .. } => "probability_above_one",
                E::NonFiniteObjective { .. } => "non_finite_objective",
                E::TooManyPaths { .. } => "too_many_paths",
                E::BudgetExceeded { .. } => "budget_exceeded",
                E::NotErgodic => "not_ergodic",
            },
            CliError::Usage(_) => "usage",
            CliError::Io(_) | CliError::Csv(_) => "io",
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// How α and β are obtained for each block length.
#[derive(Clone, Copy, Debug)]
enum Scaling {
    Fixed { alpha: f64, beta: f64 },
    Rare { n_alpha: f64, n_beta: f64 },
}

impl Scaling {
    fn at(self, n: usize) -> (f64, f64) {
        match self {
            Scaling::Fixed { alpha, beta } => (alpha, beta),
            Scaling::Rare { n_alpha, n_beta } => (n_alpha / n as f64, n_beta / n as f64),
        }
    }

    /// Constants `(α_c, β_c)` of the rare-transition limit at length `n`.
    fn rare_constants(self, n: usize) -> (f64, f64) {
        match self {
            Scaling::Fixed { alpha, beta } => (alpha * n as f64, beta * n as f64),
            Scaling::Rare { n_alpha, n_beta } => (n_alpha, n_beta),
        }
    }
}

/// Fully resolved sweep.
#[derive(Clone, Debug)]
struct Sweep {
    quantities: Vec<Quantity>,
    rates: Vec<f64>,
    blocklengths: Vec<usize>,
    scaling: Option<Scaling>,
    eps: Option<(f64, f64)>,
    rate_unit: RateUnit,
    decoder: DecoderArg,
    ties: TiesArg,
    averaging: Averaging,
    trials: u64,
    seed: u64,
    p: Option<f64>,
    m_codewords: Option<u64>,
}

fn resolve(args: &Args) -> Result<Sweep, CliError> {
    let mut quantities = args.quantity.clone();
    let mut rates = args.rates.clone();
    let mut blocklengths = args.blocklengths.clone();
    let (mut alpha, mut beta) = (args.alpha, args.beta);
    let (mut n_alpha, mut n_beta) = (args.n_alpha, args.n_beta);
    let (mut eps_g, mut eps_b) = (args.eps_g, args.eps_b);
    let mut rate_unit = args.rate_unit;
    let mut averaging = args.averaging;
    let mut ties = args.ties;

    if let Some(preset) = args.preset {
        let fixed_given = alpha.is_some() || beta.is_some();
        let rare_given = n_alpha.is_some() || n_beta.is_some();
        if rates.is_empty() {
            rates = (0..11).map(|i| (25 + 5 * i) as f64 / 100.0).collect();
        }
        rate_unit.get_or_insert(RateUnit::Bits);
        eps_g.get_or_insert(0.01);
        eps_b.get_or_insert(0.1);
        match preset {
            Preset::Fig2 => {
                if quantities.is_empty() {
                    quantities = vec![Quantity::BoundGallager, Quantity::BoundRare];
                }
                if blocklengths.is_empty() {
                    blocklengths = vec![50, 75, 100];
                }
                if !fixed_given {
                    n_alpha.get_or_insert(4.0);
                    n_beta.get_or_insert(6.0);
                }
                averaging.get_or_insert(Averaging::PerTransition);
            }
            Preset::Fig3 => {
                if quantities.is_empty() {
                    quantities = vec![Quantity::ExactMl, Quantity::ExactMd];
                }
                if blocklengths.is_empty() {
                    blocklengths = vec![50, 75];
                }
                if !rare_given {
                    alpha.get_or_insert(0.0533);
                    beta.get_or_insert(0.08);
                }
                ties.get_or_insert(TiesArg::Error);
            }
        }
    }

    if quantities.is_empty() {
        return Err(usage("--quantity is required"));
    }
    if blocklengths.is_empty() {
        return Err(usage("--N needs at least one block length"));
    }
    if let Some(&n) = blocklengths.iter().find(|&&n| n == 0) {
        return Err(usage(format!("block length must be >= 1, got {n}")));
    }
    let needs_rate = quantities.iter().any(|&q| q != Quantity::Occupancy);
    if needs_rate && rates.is_empty() && args.m_codewords.is_none() {
        return Err(usage("--rates needs at least one rate"));
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(usage(format!("rates must be finite and > 0, got {r}")));
    }

    let scaling = match (alpha, beta, n_alpha, n_beta) {
        (None, None, None, None) => None,
        (Some(alpha), Some(beta), None, None) => Some(Scaling::Fixed { alpha, beta }),
        (None, None, Some(n_alpha), Some(n_beta)) => Some(Scaling::Rare { n_alpha, n_beta }),
        _ => return Err(usage("give either --alpha and --beta or --n-alpha and --n-beta")),
    };
    let eps = match (eps_g, eps_b) {
        (Some(g), Some(b)) => Some((g, b)),
        (None, None) => None,
        _ => return Err(usage("--eps-g and --eps-b go together")),
    };
    let channel_needed = quantities.iter().any(|&q| q != Quantity::Bsc);
    if channel_needed && scaling.is_none() {
        return Err(usage("channel quantities need --alpha/--beta or --n-alpha/--n-beta"));
    }
    if channel_needed && eps.is_none() {
        return Err(usage("channel quantities need --eps-g and --eps-b"));
    }
    if quantities.contains(&Quantity::Bsc) && args.p.is_none() {
        return Err(usage("bsc needs --p"));
    }

    quantities.sort();
    quantities.dedup();
    Ok(Sweep {
        quantities,
        rates,
        blocklengths,
        scaling,
        eps,
        rate_unit: rate_unit.unwrap_or(RateUnit::Nats),
        decoder: args.decoder.unwrap_or(DecoderArg::Md),
        ties: ties.unwrap_or(TiesArg::Error),
        averaging: averaging.unwrap_or(Averaging::PerTransition),
        trials: args.trials,
        seed: args.seed,
        p: args.p,
        m_codewords: args.m_codewords,
    })
}

#[derive(Clone, Debug, Default)]
struct Row {
    quantity: &'static str,
    n: usize,
    rate_nats: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    eps_g: Option<f64>,
    eps_b: Option<f64>,
    rho_star: Option<f64>,
    value: Option<f64>,
    table: Option<[[f64; 2]; 2]>,
    ties: Option<&'static str>,
    decoder: Option<&'static str>,
    seed: Option<u64>,
    m: Option<usize>,
}

const HEADER: [&str; 17] = [
    "quantity", "N", "rate_nats", "alpha", "beta", "eps_g", "eps_b", "rho_star", "value", "value_gg",
    "value_gb", "value_bg", "value_bb", "ties", "decoder", "seed", "m",
];

fn fmt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.8e}")).unwrap_or_default()
}

impl Row {
    fn record(&self) -> Vec<String> {
        let cell = |c: usize, d: usize| fmt(self.table.map(|t| t[c][d]));
        vec![
            self.quantity.to_string(),
            self.n.to_string(),
            fmt(self.rate_nats),
            fmt(self.alpha),
            fmt(self.beta),
            fmt(self.eps_g),
            fmt(self.eps_b),
            fmt(self.rho_star),
            fmt(self.value),
            cell(0, 0),
            cell(0, 1),
            cell(1, 0),
            cell(1, 1),
            self.ties.unwrap_or_default().to_string(),
            self.decoder.unwrap_or_default().to_string(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.m.map(|m| m.to_string()).unwrap_or_default(),
        ]
    }

    fn sort_key(&self, other: &Row) -> Ordering {
        let rate = |r: &Row| r.rate_nats.unwrap_or(f64::NEG_INFINITY);
        self.quantity
            .cmp(other.quantity)
            .then(self.n.cmp(&other.n))
            .then(rate(self).total_cmp(&rate(other)))
            .then(self.m.cmp(&other.m))
    }
}

fn ties_policy(t: TiesArg) -> TiePolicy {
    match t {
        TiesArg::Error => TiePolicy::Error,
        TiesArg::Random => TiePolicy::RandomAmongBest,
    }
}

fn ties_name(t: TiesArg) -> &'static str {
    match t {
        TiesArg::Error => "error",
        TiesArg::Random => "random",
    }
}

fn decoder_name(d: DecodingRule) -> &'static str {
    match d {
        DecodingRule::MinimumDistance => "md",
        DecodingRule::MaximumLikelihood => "ml",
    }
}

impl Sweep {
    fn code(&self, n: usize, rate: f64) -> Result<CodeParams, CliError> {
        if let Some(m) = self.m_codewords {
            return Ok(CodeParams::with_codewords(n, m)?);
        }
        Ok(match self.rate_unit {
            RateUnit::Nats => CodeParams::new(n, rate)?,
            RateUnit::Bits => CodeParams::from_bits(n, rate)?,
        })
    }

    fn rate_nats(&self, rate: f64) -> f64 {
        match self.rate_unit {
            RateUnit::Nats => rate,
            RateUnit::Bits => rate * std::f64::consts::LN_2,
        }
    }

    fn channel(&self, n: usize) -> Result<ChannelParams, CliError> {
        let (alpha, beta) = self.scaling.expect("checked in resolve").at(n);
        let (eps_g, eps_b) = self.eps.expect("checked in resolve");
        Ok(ChannelParams::new(alpha, beta, eps_g, eps_b)?)
    }

    fn rho_mode(&self) -> RhoMode {
        match self.averaging {
            Averaging::Stationary => RhoMode::Averaged,
            Averaging::PerTransition => RhoMode::PerTransition,
        }
    }

    fn jobs(&self) -> Vec<(Quantity, usize, Option<f64>)> {
        let mut jobs = Vec::new();
        for &q in &self.quantities {
            for &n in &self.blocklengths {
                if q == Quantity::Occupancy {
                    jobs.push((q, n, None));
                } else if self.rates.is_empty() {
                    // Only reachable with --M; the rate is then ln(M)/N.
                    jobs.push((q, n, Some(f64::NAN)));
                } else {
                    jobs.extend(self.rates.iter().map(|&r| (q, n, Some(r))));
                }
            }
        }
        jobs
    }

    fn eval(&self, q: Quantity, n: usize, rate: Option<f64>) -> Result<Vec<Row>, CliError> {
        let quantity = q.name();
        if q == Quantity::Occupancy {
            return self.occupancy(n);
        }
        let rate = rate.expect("rated quantity");
        let code = if rate.is_nan() {
            self.code(n, 1.0)?
        } else {
            self.code(n, rate)?
        };
        let rate_nats = if rate.is_nan() { code.rate } else { self.rate_nats(rate) };
        let mut row = Row {
            quantity,
            n,
            rate_nats: Some(rate_nats),
            ..Row::default()
        };
        if q != Quantity::Bsc {
            let params = self.channel(n)?;
            row.alpha = Some(params.alpha);
            row.beta = Some(params.beta);
            row.eps_g = Some(params.eps_g);
            row.eps_b = Some(params.eps_b);
        }
        match q {
            Quantity::BoundGallager | Quantity::BoundRare => {
                let (res, weights) = if q == Quantity::BoundGallager {
                    let params = self.channel(n)?;
                    (gallager_bound(&params, &code, self.rho_mode())?, stationary(&params)?)
                } else {
                    let (ac, bc) = self.scaling.expect("checked in resolve").rare_constants(n);
                    let (eg, eb) = self.eps.expect("checked in resolve");
                    let res = rare_bound(ac, bc, eg, eb, &code, self.rho_mode())?;
                    (res, (bc / (ac + bc), ac / (ac + bc)))
                };
                fill_bound(&mut row, &res, weights);
            }
            Quantity::ExactMd | Quantity::ExactMl => {
                let rule = if q == Quantity::ExactMd {
                    DecodingRule::MinimumDistance
                } else {
                    DecodingRule::MaximumLikelihood
                };
                let decoder = DecoderSpec::new(rule, ties_policy(self.ties));
                let res = ge_exact(&self.channel(n)?, &code, decoder)?;
                row.value = Some(res.averaged);
                row.table = Some(res.per_transition);
                row.ties = Some(ties_name(self.ties));
                row.decoder = Some(decoder_name(rule));
            }
            Quantity::Bsc => {
                let p = self.p.expect("checked in resolve");
                let m = match self.m_codewords {
                    Some(m) => m,
                    None => rounded_codewords(&code)?,
                };
                row.value = Some(bsc_exact(n, p, m, ties_policy(self.ties))?);
                row.eps_g = Some(p);
                row.eps_b = Some(p);
                row.ties = Some(ties_name(self.ties));
                row.decoder = Some("md");
            }
            Quantity::Simulate => {
                let rule = match self.decoder {
                    DecoderArg::Md => DecodingRule::MinimumDistance,
                    DecoderArg::Ml => DecodingRule::MaximumLikelihood,
                };
                let decoder = DecoderSpec::new(rule, ties_policy(self.ties));
                let m = rounded_codewords(&code)?;
                let config = SimConfig {
                    params: self.channel(n)?,
                    n,
                    m_codewords: usize::try_from(m).map_err(|_| usage("codebook too large"))?,
                    decoder,
                    trials: self.trials,
                    seed: self.seed,
                    initial_state: InitialState::Stationary,
                };
                let res = estimate(&config)?;
                let mut table = [[0.0; 2]; 2];
                for (c, row_counts) in res.per_transition.iter().enumerate() {
                    let from_c: u64 = row_counts.iter().map(|t| t.trials).sum();
                    for (d, t) in row_counts.iter().enumerate() {
                        table[c][d] = if from_c == 0 {
                            f64::NAN
                        } else {
                            t.failures as f64 / from_c as f64
                        };
                    }
                }
                row.value = Some(res.p_hat);
                row.table = Some(table);
                row.ties = Some(ties_name(self.ties));
                row.decoder = Some(decoder_name(rule));
                row.seed = Some(self.seed);
            }
            Quantity::Occupancy => unreachable!(),
        }
        Ok(vec![row])
    }

    fn occupancy(&self, n: usize) -> Result<Vec<Row>, CliError> {
        let params = self.channel(n)?;
        let table = occupancy_pmf(&params, n)?;
        let (pg, pb) = stationary(&params)?;
        let rows = (0..=n)
            .map(|m| {
                let mut t = [[0.0; 2]; 2];
                for s0 in State::ALL {
                    for sn in State::ALL {
                        t[s0.index()][sn.index()] = table.get(m, s0, sn);
                    }
                }
                let value = pg * (t[0][0] + t[0][1]) + pb * (t[1][0] + t[1][1]);
                Row {
                    quantity: Quantity::Occupancy.name(),
                    n,
                    alpha: Some(params.alpha),
                    beta: Some(params.beta),
                    eps_g: Some(params.eps_g),
                    eps_b: Some(params.eps_b),
                    value: Some(value),
                    table: Some(t),
                    m: Some(m),
                    ..Row::default()
                }
            })
            .collect();
        Ok(rows)
    }

    fn meta(&self, rows: usize) -> serde_json::Value {
        let scaling = match self.scaling {
            Some(Scaling::Fixed { alpha, beta }) => json!({"kind": "fixed", "alpha": alpha, "beta": beta}),
            Some(Scaling::Rare { n_alpha, n_beta }) => {
                json!({"kind": "rare", "n_alpha": n_alpha, "n_beta": n_beta})
            }
            None => serde_json::Value::Null,
        };
        let averaging = match self.averaging {
            Averaging::PerTransition => {
                "rho minimized separately for each (s0, sN) entry, then entries weighted by the stationary law"
            }
            Averaging::Stationary => "one rho minimizing the stationary-weighted sum of entries",
        };
        json!({
            "blocklengths": self.blocklengths,
            "columns": HEADER,
            "conventions": {
                "averaging": averaging,
                "codebook_size": match self.m_codewords {
                    Some(_) => "fixed by --M; rate_nats echoes the requested rate",
                    None => "M = exp(N * rate_nats); 2^(N * rate) exactly when rates are in bits",
                },
                "emission": "symbol n is emitted from s_(n-1); n_g counts good states among s_0..s_(N-1)",
                "m_rounding": "bounds and exact values with ties=error use the real M; ties=random and bsc use max(round(M), 2); simulate uses round(M)",
                "ml_rule": "score = ceil(gamma * e_g) + e_b with gamma = ln((1-eps_g)/eps_g) / ln((1-eps_b)/eps_b)",
                "rate_column_unit": "nats",
                "rho_star": "rho of the entry carrying the largest share of the averaged value",
                "simulate_per_transition": "P(failure, sN = d | s0 = c) estimated from trials started in c",
                "tie_policy": ties_name(self.ties),
                "value_columns": "value_cd is indexed by (s0 = c, sN = d) and holds the joint with sN given s0",
            },
            "decoder": match self.decoder { DecoderArg::Md => "md", DecoderArg::Ml => "ml" },
            "eps_b": self.eps.map(|e| e.1),
            "eps_g": self.eps.map(|e| e.0),
            "m_codewords": self.m_codewords,
            "p": self.p,
            "quantities": self.quantities.iter().map(|q| q.name()).collect::<Vec<_>>(),
            "rate_unit": match self.rate_unit { RateUnit::Nats => "nats", RateUnit::Bits => "bits" },
            "rates": self.rates,
            "rows": rows,
            "scaling": scaling,
            "seed": self.seed,
            "trials": self.trials,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

fn fill_bound(row: &mut Row, res: &BoundResult, weights: (f64, f64)) {
    row.value = Some(res.averaged);
    row.table = Some(res.per_transition);
    row.rho_star = Some(res.dominant_rho(weights));
}

fn rounded_codewords(code: &CodeParams) -> Result<u64, CliError> {
    let m = code.m_codewords.round().max(2.0);
    if m >= u64::MAX as f64 {
        return Err(usage(format!("codebook size {m:e} does not fit in 64 bits; pass --M")));
    }
    Ok(m as u64)
}

fn render(rows: &[Row]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_outputs(out: &Path, csv: &[u8], meta: &serde_json::Value) -> Result<(), CliError> {
    fs::write(out, csv)?;
    let mut text = serde_json::to_string_pretty(meta).expect("json value serializes");
    text.push('\n');
    fs::write(sidecar_path(out), text)?;
    Ok(())
}

fn execute(args: &Args) -> Result<(), CliError> {
    let sweep = resolve(args)?;
    let results: Vec<Vec<Row>> = sweep
        .jobs()
        .into_par_iter()
        .map(|(q, n, r)| sweep.eval(q, n, r))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<Row> = results.into_iter().flatten().collect();
    rows.sort_by(Row::sort_key);
    let csv = render(&rows)?;
    match &args.out {
        Some(out) => {
            let meta = sweep.meta(rows.len());
            if let Err(e) = write_outputs(out, &csv, &meta) {
                let _ = fs::remove_file(out);
                let _ = fs::remove_file(sidecar_path(out));
                return Err(e);
            }
        }
        None => std::io::stdout().lock().write_all(&csv)?,
    }
    Ok(())
}

/// One-line, machine-parseable error report.
pub fn error_line(kind: &str, message: &str) -> String {
    let quoted = serde_json::to_string(message).expect("string serializes");
    format!("error: kind={kind} message={quoted}")
}

/// Parses `args` (including the program name), runs the sweep and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", error_line("usage", first));
            return 2;
        }
    };
    match execute(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(v: &[&str]) -> Args {
        Args::try_parse_from(std::iter::once("gecodes").chain(v.iter().copied())).unwrap()
    }

    #[test]
    fn fig2_preset_fills_rare_scaling() {
        let s = resolve(&parse(&["fig2"])).unwrap();
        assert_eq!(s.quantities, vec![Quantity::BoundGallager, Quantity::BoundRare]);
        assert_eq!(s.blocklengths, vec![50, 75, 100]);
        assert_eq!(s.rates.len(), 11);
        assert_eq!(s.rates[10], 0.75);
        assert_eq!(s.rate_unit, RateUnit::Bits);
        assert!(matches!(s.scaling, Some(Scaling::Rare { n_alpha, n_beta }) if n_alpha == 4.0 && n_beta == 6.0));
        assert_eq!(s.jobs().len(), 66);
    }

    #[test]
    fn explicit_flags_override_preset() {
        let s = resolve(&parse(&["fig3", "--N", "20", "--ties", "random"])).unwrap();
        assert_eq!(s.blocklengths, vec![20]);
        assert_eq!(s.ties, TiesArg::Random);
        assert!(matches!(s.scaling, Some(Scaling::Fixed { .. })));
    }

    #[test]
    fn mixed_scalings_rejected() {
        let e = resolve(&parse(&[
            "--quantity", "exact_md", "--rates", "0.1", "--N", "10", "--alpha", "0.1", "--n-beta", "2",
            "--eps-g", "0.01", "--eps-b", "0.1",
        ]))
        .unwrap_err();
        assert_eq!(e.kind(), "usage");
    }

    #[test]
    fn bsc_needs_no_channel() {
        let s = resolve(&parse(&["--quantity", "bsc", "--rates", "0.25", "--N", "50", "--p", "0.1"])).unwrap();
        assert!(s.scaling.is_none());
    }

    #[test]
    fn nine_significant_digits_half_even() {
        assert_eq!(fmt(Some(0.000624627)), "6.24627000e-4");
        assert_eq!(fmt(Some(1_000_000_005.0)), "1.00000000e9");
        assert_eq!(fmt(Some(1_000_000_015.0)), "1.00000002e9");
        assert_eq!(fmt(None), "");
    }

    #[test]
    fn error_line_is_one_line() {
        let l = error_line("usage", "a \"b\"\nc");
        assert_eq!(l, r#"error: kind=usage message="a \"b\"\nc""#);
    }

    #[test]
    fn rows_sort_by_quantity_then_n_then_rate() {
        let r = |q, n, rate| Row { quantity: q, n, rate_nats: Some(rate), ..Row::default() };
        let mut rows = vec![r("exact_ml", 50, 0.3), r("exact_md", 75, 0.1), r("exact_md", 50, 0.2), r("exact_md", 50, 0.1)];
        rows.sort_by(Row::sort_key);
        let keys: Vec<_> = rows.iter().map(|r| (r.quantity, r.n, r.rate_nats.unwrap())).collect();
        assert_eq!(keys, vec![("exact_md", 50, 0.1), ("exact_md", 50, 0.2), ("exact_md", 75, 0.1), ("exact_ml", 50, 0.3)]);
    }
}
