//! Gallager-type upper bounds on the random-coding failure probability over
//! the Gilbert-Elliott channel with uniform binary input.
//!
//! All tables are indexed `[s0][sN]` and bound
//! `Pr(decoding failure, S_N = sN | S_0 = s0)`. Internally every bound is
//! assembled as a logarithm and exponentiated once.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::markov::{
    mgf_matrix_scaled, occupancy_pmf, stationary, ChannelParams, OccupancyTable, StateTable,
};
use crate::specialfn::{LogReal, LogSum};

/// Block length, rate and codebook size `M = e^{N R}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    /// Nats per channel use.
    pub rate: f64,
    pub m_codewords: f64,
}

impl CodeParams {
    pub fn new(n: usize, rate_nats: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "block length must be >= 1"));
        }
        if !(rate_nats > 0.0 && rate_nats.is_finite()) {
            return Err(invalid("rate", format!("must be finite and > 0, got {rate_nats}")));
        }
        Ok(CodeParams {
            n,
            rate: rate_nats,
            m_codewords: (n as f64 * rate_nats).exp(),
        })
    }

    /// Rate given in bits per channel use, so that `M = 2^{N R}`.
    pub fn from_bits(n: usize, rate_bits: f64) -> Result<Self> {
        let mut code = Self::new(n, rate_bits * std::f64::consts::LN_2)?;
        let m = (n as f64 * rate_bits).exp2();
        if m.is_finite() {
            code.m_codewords = m;
        }
        Ok(code)
    }

    /// Codebook of exactly `m` words; the rate is `ln(m) / N`.
    pub fn with_codewords(n: usize, m: u64) -> Result<Self> {
        if m < 2 {
            return Err(invalid("m_codewords", format!("need at least 2 codewords, got {m}")));
        }
        let mut code = Self::new(n, (m as f64).ln() / n as f64)?;
        code.m_codewords = m as f64;
        Ok(code)
    }

    /// `ln M = N R`.
    pub fn ln_m(&self) -> f64 {
        self.n as f64 * self.rate
    }
}

/// `G_s(ρ) = 2^{-ρ} (ε^{1/(1+ρ)} + (1-ε)^{1/(1+ρ)})^{1+ρ}`.
pub fn gallager_g(eps: f64, rho: f64) -> f64 {
    ln_gallager_g(eps, rho).exp()
}

pub fn ln_gallager_g(eps: f64, rho: f64) -> f64 {
    let s = 1.0 + rho;
    let inner = eps.powf(1.0 / s) + (1.0 - eps).powf(1.0 / s);
    -rho * std::f64::consts::LN_2 + s * inner.ln()
}

/// Per-type exponent `-(ln G_b(ρ) + η_g ln(G_g(ρ)/G_b(ρ)))`.
pub fn e0_type(rho: f64, eta_g: f64, params: &ChannelParams) -> f64 {
    let lg = ln_gallager_g(params.eps_g, rho);
    let lb = ln_gallager_g(params.eps_b, rho);
    -(lb + eta_g * (lg - lb))
}

type LnTable = [[f64; 2]; 2];

fn exp_table(t: LnTable) -> StateTable {
    t.map(|row| row.map(f64::exp))
}

fn ln_typesum(table: &OccupancyTable, params: &ChannelParams, code: &CodeParams, rho: f64) -> LnTable {
    let n = code.n;
    let lg = ln_gallager_g(params.eps_g, rho);
    let lb = ln_gallager_g(params.eps_b, rho);
    let shift = rho * code.ln_m();
    let mut out = [[f64::NEG_INFINITY; 2]; 2];
    for (c, row) in out.iter_mut().enumerate() {
        for (d, cell) in row.iter_mut().enumerate() {
            let mut acc = LogSum::new();
            for (m, t) in table.p.iter().enumerate() {
                let pm = t[c][d];
                if pm > 0.0 {
                    acc.add(LogReal::from_ln(m as f64 * lg + (n - m) as f64 * lb + pm.ln()));
                }
            }
            *cell = acc.total().ln() + shift;
        }
    }
    out
}

/// Sum over occupancy types of `G_g^m G_b^{N-m} e^{ρNR} Pr(n_g = m, sN | s0)`.
pub fn bound_typesum(params: &ChannelParams, code: &CodeParams, rho: f64) -> Result<StateTable> {
    let table = occupancy_pmf(params, code.n)?;
    Ok(bound_typesum_with(&table, params, code, rho))
}

/// [`bound_typesum`] with a precomputed occupancy table.
pub fn bound_typesum_with(
    table: &OccupancyTable,
    params: &ChannelParams,
    code: &CodeParams,
    rho: f64,
) -> StateTable {
    exp_table(ln_typesum(table, params, code, rho))
}

/// `A^N` for nonnegative `A`, as `(ln scale, matrix with max entry 1)`.
fn scaled_power(a: StateTable, mut n: usize) -> (f64, StateTable) {
    fn normalize(ln: &mut f64, m: &mut StateTable) {
        let max = m.iter().flatten().cloned().fold(0.0, f64::max);
        if max > 0.0 {
            m.iter_mut().flatten().for_each(|v| *v /= max);
            *ln += max.ln();
        }
    }
    let mut base_ln = 0.0;
    let mut base = a;
    normalize(&mut base_ln, &mut base);
    let mut acc_ln = 0.0;
    let mut acc = [[1.0, 0.0], [0.0, 1.0]];
    while n > 0 {
        if n & 1 == 1 {
            acc = crate::markov::mat_mul(&acc, &base);
            acc_ln += base_ln;
            normalize(&mut acc_ln, &mut acc);
        }
        n >>= 1;
        if n > 0 {
            base = crate::markov::mat_mul(&base, &base);
            base_ln *= 2.0;
            normalize(&mut base_ln, &mut base);
        }
    }
    (acc_ln, acc)
}

fn ln_matrixpower(params: &ChannelParams, code: &CodeParams, rho: f64) -> LnTable {
    let gg = gallager_g(params.eps_g, rho);
    let gb = gallager_g(params.eps_b, rho);
    let a = [
        [(1.0 - params.alpha) * gg, params.alpha * gg],
        [params.beta * gb, (1.0 - params.beta) * gb],
    ];
    let (ln_scale, m) = scaled_power(a, code.n);
    let shift = ln_scale + rho * code.ln_m();
    m.map(|row| row.map(|v| v.ln() + shift))
}

/// `e(s0)ᵀ A^N e(sN) e^{ρNR}` with `A = [[(1-α)G_g, αG_g], [βG_b, (1-β)G_b]]`.
pub fn bound_matrixpower(params: &ChannelParams, code: &CodeParams, rho: f64) -> StateTable {
    exp_table(ln_matrixpower(params, code, rho))
}

fn ln_rare(alpha_c: f64, beta_c: f64, eps_g: f64, eps_b: f64, code: &CodeParams, rho: f64) -> LnTable {
    let n = code.n as f64;
    let lg = ln_gallager_g(eps_g, rho);
    let lb = ln_gallager_g(eps_b, rho);
    let y = n * (lg - lb);
    let mgf = mgf_matrix_scaled(alpha_c, beta_c, y);
    let shift = n * lb + rho * code.ln_m();
    let mut out = [[0.0; 2]; 2];
    for (c, row) in out.iter_mut().enumerate() {
        for (d, cell) in row.iter_mut().enumerate() {
            *cell = mgf.ln_entry(c, d) + shift;
        }
    }
    out
}

/// Rare-transition bound `e^{N(ln G_b + ρR)} 𝐆(N ln(G_g/G_b))`, where 𝐆 is
/// the matrix generating function of the limiting occupancy law with
/// constants `alpha_c = Nα`, `beta_c = Nβ`.
pub fn bound_rare(
    alpha_c: f64,
    beta_c: f64,
    eps_g: f64,
    eps_b: f64,
    code: &CodeParams,
    rho: f64,
) -> StateTable {
    exp_table(ln_rare(alpha_c, beta_c, eps_g, eps_b, code, rho))
}

const RHO_GRID: usize = 201;
const GOLDEN_WIDTH: f64 = 1e-6;

fn minimize_impl<F: Fn(f64) -> f64>(objective: F, allow_neg_inf: bool) -> Result<(f64, f64)> {
    let eval = |rho: f64| -> Result<f64> {
        let v = objective(rho);
        if v.is_nan() || v == f64::INFINITY || (!allow_neg_inf && v == f64::NEG_INFINITY) {
            return Err(Error::NonFiniteObjective { rho });
        }
        Ok(v)
    };
    let step = 1.0 / (RHO_GRID - 1) as f64;
    let mut best = (0.0, eval(0.0)?);
    let mut best_i = 0;
    for i in 1..RHO_GRID {
        let rho = i as f64 * step;
        let v = eval(rho)?;
        if v < best.1 {
            best = (rho, v);
            best_i = i;
        }
    }
    let mut lo = best_i.saturating_sub(1) as f64 * step;
    let mut hi = ((best_i + 1).min(RHO_GRID - 1)) as f64 * step;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while hi - lo > GOLDEN_WIDTH {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2)?;
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f < best.1 {
                best = (x, f);
            }
        }
    }
    Ok(best)
}

/// Minimizes `objective` over `ρ ∈ [0, 1]`: a 201-point grid, then golden
/// section around the best grid point. Returns the smallest value seen.
pub fn minimize_rho<F: Fn(f64) -> f64>(objective: F) -> Result<(f64, f64)> {
    minimize_impl(objective, false)
}

/// Where the minimization over ρ happens.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RhoMode {
    /// Each `(s0, sN)` entry gets its own ρ; the averaged value combines the
    /// minimized entries.
    PerTransition,
    /// One ρ minimizing the stationary-averaged scalar.
    Averaged,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub per_transition: StateTable,
    pub rho_star: StateTable,
    /// `Σ_{s0} π_{s0} Σ_{sN} per_transition[s0][sN]`, not clamped.
    pub averaged: f64,
    pub mode: RhoMode,
}

impl BoundResult {
    /// The ρ attached to the entry carrying the largest share of `averaged`.
    pub fn dominant_rho(&self, weights: (f64, f64)) -> f64 {
        let w = [weights.0, weights.1];
        let mut best = (f64::NEG_INFINITY, self.rho_star[0][0]);
        for c in 0..2 {
            for d in 0..2 {
                let share = w[c] * self.per_transition[c][d];
                if share > best.0 {
                    best = (share, self.rho_star[c][d]);
                }
            }
        }
        best.1
    }
}

fn weighted_ln(t: &LnTable, weights: (f64, f64)) -> f64 {
    let w = [weights.0, weights.1];
    let mut acc = LogSum::new();
    for c in 0..2 {
        if w[c] > 0.0 {
            for d in 0..2 {
                acc.add(LogReal::from_ln(w[c].ln() + t[c][d]));
            }
        }
    }
    acc.total().ln()
}

fn optimize<F: Fn(f64) -> LnTable>(ln_bound: F, weights: (f64, f64), mode: RhoMode) -> Result<BoundResult> {
    let (per_transition, rho_star) = match mode {
        RhoMode::PerTransition => {
            let mut values = [[0.0; 2]; 2];
            let mut rhos = [[0.0; 2]; 2];
            for c in 0..2 {
                for d in 0..2 {
                    let (rho, v) = minimize_impl(|r| ln_bound(r)[c][d], true)?;
                    values[c][d] = v.exp();
                    rhos[c][d] = rho;
                }
            }
            (values, rhos)
        }
        RhoMode::Averaged => {
            let (rho, _) = minimize_impl(|r| weighted_ln(&ln_bound(r), weights), true)?;
            (exp_table(ln_bound(rho)), [[rho; 2]; 2])
        }
    };
    let averaged = weights.0 * (per_transition[0][0] + per_transition[0][1])
        + weights.1 * (per_transition[1][0] + per_transition[1][1]);
    Ok(BoundResult {
        per_transition,
        rho_star,
        averaged,
        mode,
    })
}

/// Min-ρ matrix-power bound, averaged with the stationary law of `params`.
pub fn gallager_bound(params: &ChannelParams, code: &CodeParams, mode: RhoMode) -> Result<BoundResult> {
    let weights = stationary(params)?;
    optimize(|rho| ln_matrixpower(params, code, rho), weights, mode)
}

/// Min-ρ rare-transition bound, averaged with the stationary law
/// `(β_c, α_c) / (α_c + β_c)`.
pub fn rare_bound(
    alpha_c: f64,
    beta_c: f64,
    eps_g: f64,
    eps_b: f64,
    code: &CodeParams,
    mode: RhoMode,
) -> Result<BoundResult> {
    if !(alpha_c >= 0.0 && beta_c >= 0.0 && alpha_c.is_finite() && beta_c.is_finite()) {
        return Err(invalid("alpha_c/beta_c", "rare-transition constants must be finite and >= 0"));
    }
    if alpha_c + beta_c <= 0.0 {
        return Err(Error::NotErgodic);
    }
    let pi_g = beta_c / (alpha_c + beta_c);
    optimize(
        |rho| ln_rare(alpha_c, beta_c, eps_g, eps_b, code, rho),
        (pi_g, 1.0 - pi_g),
        mode,
    )
}
