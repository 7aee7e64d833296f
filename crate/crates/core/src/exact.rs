//! Exact random-coding failure probabilities.
//!
//! The ensemble draws `M` codewords uniformly from `{0,1}^N`. Given the
//! transmitted word's decoding score `C`, each competitor independently lands
//! at a score below, equal to or above `C`, so the failure probability only
//! needs three competitor counts per score value:
//!
//! * `le(C)`: competitors scoring `<= C`,
//! * `eq(C)`: competitors scoring exactly `C`,
//! * `gt(C)`: competitors scoring `> C`,
//!
//! each a count of binary words, kept in log domain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::bounds::CodeParams;
use crate::error::{invalid, Result};
use crate::markov::{occupancy_pmf, stationary, ChannelParams, StateTable};
use crate::specialfn::{
    ln_one_minus_exp, log_binomial, log_binomial_pmf, prob_at_least_one, LogReal, LogSum,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecodingRule {
    MinimumDistance,
    MaximumLikelihood,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TiePolicy {
    /// Any competitor scoring as well as the transmitted word is a failure.
    Error,
    /// Ties are broken uniformly among the best-scoring words.
    RandomAmongBest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecoderSpec {
    pub rule: DecodingRule,
    pub ties: TiePolicy,
}

impl DecoderSpec {
    pub fn new(rule: DecodingRule, ties: TiePolicy) -> Self {
        DecoderSpec { rule, ties }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub per_transition: StateTable,
    pub averaged: f64,
    /// `P(failure | n_g = m)` for `m = 0..=N`.
    pub per_type: Vec<f64>,
    /// Upper bound on the probability mass skipped by truncated inner sums.
    pub truncated_mass: f64,
}

/// Ratio of bad-state to good-state error cost,
/// `(ln ε_g - ln(1-ε_g)) / (ln ε_b - ln(1-ε_b))`.
pub fn ml_gamma(eps_g: f64, eps_b: f64) -> Result<f64> {
    for (name, eps) in [("eps_g", eps_g), ("eps_b", eps_b)] {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(invalid(
                name,
                format!("maximum-likelihood decoding needs a crossover in (0, 0.5), got {eps}"),
            ));
        }
    }
    let num = eps_g.ln() - (-eps_g).ln_1p();
    let den = eps_b.ln() - (-eps_b).ln_1p();
    Ok(num / den)
}

/// `⌈x⌉`, except that values within 1e-12 of an integer snap to it.
pub fn ceil_tol(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() < 1e-12 {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// Competitor score counts for a fixed slot split.
///
/// Indexed by score `C`; each entry is `(ln le, ln eq, ln gt)` where the
/// counts are numbers of words in `{0,1}^N`.
#[derive(Clone, Debug)]
pub struct ScoreTable {
    pub n: usize,
    le: Vec<f64>,
    eq: Vec<f64>,
    gt: Vec<f64>,
}

impl ScoreTable {
    fn from_eq(n: usize, eq: Vec<f64>) -> Self {
        let len = eq.len();
        let mut le = vec![f64::NEG_INFINITY; len];
        let mut gt = vec![f64::NEG_INFINITY; len];
        let mut acc = LogSum::new();
        for c in 0..len {
            acc.add(LogReal::from_ln(eq[c]));
            le[c] = acc.total().ln();
        }
        let mut acc = LogSum::new();
        for c in (0..len).rev() {
            gt[c] = acc.total().ln();
            acc.add(LogReal::from_ln(eq[c]));
        }
        ScoreTable { n, le, eq, gt }
    }

    /// Hamming-distance table: scores are distances `0..=N`.
    pub fn hamming(n: usize) -> Self {
        let eq = (0..=n as u64).map(|j| log_binomial(n as u64, j).ln()).collect();
        Self::from_eq(n, eq)
    }

    /// Weighted table for `n_g` good and `n_b` bad slots with score
    /// `⌈γ d_g⌉ + d_b`.
    pub fn weighted(n_g: usize, n_b: usize, gamma: f64) -> Self {
        let max_score = ceil_tol(gamma * n_g as f64) as usize + n_b;
        let mut acc = vec![LogSum::new(); max_score + 1];
        for dg in 0..=n_g {
            let cg = ceil_tol(gamma * dg as f64) as usize;
            let wg = log_binomial(n_g as u64, dg as u64);
            for db in 0..=n_b {
                acc[cg + db].add(wg * log_binomial(n_b as u64, db as u64));
            }
        }
        let eq = acc.iter().map(|a| a.total().ln()).collect();
        Self::from_eq(n_g + n_b, eq)
    }

    pub fn max_score(&self) -> usize {
        self.eq.len() - 1
    }

    /// `ln le(C)`, saturating at the whole space for `C` past the end.
    pub fn ln_le(&self, c: usize) -> LogReal {
        LogReal::from_ln(self.le[c.min(self.max_score())])
    }

    pub fn ln_eq(&self, c: usize) -> LogReal {
        self.eq.get(c).map_or(LogReal::ZERO, |&v| LogReal::from_ln(v))
    }

    pub fn ln_gt(&self, c: usize) -> LogReal {
        self.gt.get(c).map_or(LogReal::ZERO, |&v| LogReal::from_ln(v))
    }

    /// Failure probability when the transmitted word scores `c` and there are
    /// `m` codewords in total.
    fn failure(&self, c: usize, m: f64, ties: TiePolicy) -> Result<f64> {
        let ln_space = self.n as f64 * LN_2;
        match ties {
            TiePolicy::Error => {
                let ln_q = (self.ln_le(c).ln() - ln_space).min(0.0);
                prob_at_least_one(LogReal::from_ln(ln_q), m - 1.0)
            }
            TiePolicy::RandomAmongBest => {
                let ln_eq = self.ln_eq(c).ln();
                // ln S from its complement: M can be ~2^N, so the absolute error
                // of ln S gets multiplied by M.
                let ln_not_better = if c == 0 {
                    0.0
                } else {
                    let ln_better = (self.ln_le(c - 1).ln() - ln_space).min(0.0);
                    if ln_better == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        ln_one_minus_exp(ln_better)
                    }
                };
                Ok(tie_broken_failure(ln_eq - ln_space, ln_not_better, m))
            }
        }
    }
}

/// `1 - Σ_l C(M-1,l) A^l (S-A)^{M-1-l} / (l+1)` in closed form,
/// `1 - S^{M-1} (1 - (1-r)^M) / (M r)` with `r = A/S`.
fn tie_broken_failure(ln_a: f64, ln_s: f64, m: f64) -> f64 {
    if m <= 1.0 {
        return 0.0;
    }
    let ln_s = ln_s.min(0.0);
    let ln_r = (ln_a - ln_s).min(0.0);
    let r = ln_r.exp();
    let ln_g = if r == 0.0 {
        0.0
    } else {
        (-(m * (-r).ln_1p()).exp_m1()).ln() - m.ln() - ln_r
    };
    let ln_correct = (m - 1.0) * ln_s + ln_g.min(0.0);
    -ln_correct.exp_m1()
}

/// Binary symmetric channel, `M` random codewords, minimum-distance decoding.
pub fn bsc_exact(n: usize, p: f64, m_codewords: u64, ties: TiePolicy) -> Result<f64> {
    if !(0.0..=0.5).contains(&p) {
        return Err(invalid("p", format!("crossover must lie in [0, 0.5], got {p}")));
    }
    if m_codewords == 0 {
        return Err(invalid("m_codewords", "need at least one codeword"));
    }
    if n == 0 {
        return Err(invalid("n", "block length must be >= 1"));
    }
    let table = ScoreTable::hamming(n);
    let mut total = 0.0;
    for tau in 0..=n {
        let w = log_binomial_pmf(n as u64, tau as u64, p).exp();
        if w > 0.0 {
            total += w * table.failure(tau, m_codewords as f64, ties)?;
        }
    }
    Ok(total)
}

/// `ln Σ_{j <= radius} C(N, j)`.
pub fn ball_size_md(n: usize, radius: usize) -> LogReal {
    if radius >= n {
        return LogReal::from_ln(n as f64 * LN_2);
    }
    ScoreTable::hamming(n).ln_le(radius)
}

/// `ln Σ_{⌈γ e_g⌉ + e_b <= C} C(n_g, e_g) C(n_b, e_b)`.
pub fn ball_size_ml(n_g: usize, n_b: usize, gamma: f64, c_threshold: usize) -> LogReal {
    ScoreTable::weighted(n_g, n_b, gamma).ln_le(c_threshold)
}

/// Weights below this fraction of the largest one are skipped.
const TRUNCATION: f64 = 1e-20;

/// Distribution of the transmitted word's score, `⌈γ e_g⌉ + e_b`, as a
/// vector over scores, plus the mass dropped by truncation.
fn true_score_pmf(n_g: usize, n_b: usize, eps_g: f64, eps_b: f64, gamma: Option<f64>) -> (Vec<f64>, f64) {
    let pg: Vec<f64> = (0..=n_g).map(|e| log_binomial_pmf(n_g as u64, e as u64, eps_g).exp()).collect();
    let pb: Vec<f64> = (0..=n_b).map(|e| log_binomial_pmf(n_b as u64, e as u64, eps_b).exp()).collect();
    let score_g = |e: usize| match gamma {
        Some(g) => ceil_tol(g * e as f64) as usize,
        None => e,
    };
    let max_score = score_g(n_g) + n_b;
    let mut out = vec![0.0; max_score + 1];
    let mut dropped = 0.0;
    let pg_max = pg.iter().cloned().fold(0.0, f64::max);
    let pb_max = pb.iter().cloned().fold(0.0, f64::max);
    for (eg, &wg) in pg.iter().enumerate() {
        if wg < TRUNCATION * pg_max {
            dropped += wg;
            continue;
        }
        let sg = score_g(eg);
        for (eb, &wb) in pb.iter().enumerate() {
            if wb < TRUNCATION * pb_max {
                dropped += wg * wb;
                continue;
            }
            out[sg + eb] += wg * wb;
        }
    }
    (out, dropped)
}

/// Resolved decoder: `None` is minimum distance, `Some(γ)` weighted.
pub(crate) fn resolve_gamma(params: &ChannelParams, rule: DecodingRule) -> Result<Option<f64>> {
    match rule {
        DecodingRule::MinimumDistance => Ok(None),
        DecodingRule::MaximumLikelihood if params.eps_g == params.eps_b => Ok(None),
        DecodingRule::MaximumLikelihood => ml_gamma(params.eps_g, params.eps_b).map(Some),
    }
}

/// `(P(failure | n_g), truncated mass)` with a real codebook size `m`.
fn cond_error(
    n_g: usize,
    n: usize,
    params: &ChannelParams,
    m: f64,
    ties: TiePolicy,
    gamma: Option<f64>,
    hamming: Option<&ScoreTable>,
) -> Result<(f64, f64)> {
    if m <= 1.0 {
        return Ok((0.0, 0.0));
    }
    let n_b = n - n_g;
    let (pmf, dropped) = true_score_pmf(n_g, n_b, params.eps_g, params.eps_b, gamma);
    let owned;
    let table = match (gamma, hamming) {
        (None, Some(t)) => t,
        (None, None) => {
            owned = ScoreTable::hamming(n);
            &owned
        }
        (Some(g), _) => {
            owned = ScoreTable::weighted(n_g, n_b, g);
            &owned
        }
    };
    let mut total = 0.0;
    for (c, &w) in pmf.iter().enumerate() {
        if w > 0.0 {
            total += w * table.failure(c, m, ties)?;
        }
    }
    Ok((total.min(1.0), dropped))
}

/// `P(failure | n_g)` for a Gilbert-Elliott block with `n_g` good slots and
/// the state sequence known to the receiver.
pub fn ge_cond_error(
    n_g: usize,
    n: usize,
    params: &ChannelParams,
    m_codewords: u64,
    decoder: DecoderSpec,
) -> Result<f64> {
    if n_g > n {
        return Err(invalid("n_g", format!("{n_g} exceeds block length {n}")));
    }
    if m_codewords == 0 {
        return Err(invalid("m_codewords", "need at least one codeword"));
    }
    let gamma = resolve_gamma(params, decoder.rule)?;
    Ok(cond_error(n_g, n, params, m_codewords as f64, decoder.ties, gamma, None)?.0)
}

/// Codebook size used by the combinatorial formulas: the real `e^{NR}` when
/// ties count as errors, `max(round(e^{NR}), 2)` when they are broken.
pub fn effective_codewords(code: &CodeParams, ties: TiePolicy) -> f64 {
    match ties {
        TiePolicy::Error => code.m_codewords,
        TiePolicy::RandomAmongBest => code.m_codewords.round().max(2.0),
    }
}

/// Failure probability averaged over occupancy types with the joint
/// occupancy / final-state law.
pub fn ge_exact(params: &ChannelParams, code: &CodeParams, decoder: DecoderSpec) -> Result<ExactResult> {
    let n = code.n;
    let gamma = resolve_gamma(params, decoder.rule)?;
    let m = effective_codewords(code, decoder.ties);
    let weights = stationary(params)?;
    let occupancy = occupancy_pmf(params, n)?;
    let hamming = gamma.is_none().then(|| ScoreTable::hamming(n));

    let per_m: Vec<(f64, f64)> = (0..=n)
        .into_par_iter()
        .map(|n_g| cond_error(n_g, n, params, m, decoder.ties, gamma, hamming.as_ref()))
        .collect::<Result<_>>()?;

    let mut per_transition = [[0.0; 2]; 2];
    let mut truncated_mass: f64 = 0.0;
    for (n_g, &(p, dropped)) in per_m.iter().enumerate() {
        truncated_mass = truncated_mass.max(dropped);
        for c in 0..2 {
            for d in 0..2 {
                per_transition[c][d] += p * occupancy.p[n_g][c][d];
            }
        }
    }
    debug_assert!(truncated_mass < 1e-12, "truncated mass {truncated_mass}");
    let averaged = weights.0 * (per_transition[0][0] + per_transition[0][1])
        + weights.1 * (per_transition[1][0] + per_transition[1][1]);
    Ok(ExactResult {
        per_transition,
        averaged,
        per_type: per_m.into_iter().map(|(p, _)| p).collect(),
        truncated_mass,
    })
}
