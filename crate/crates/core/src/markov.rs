//! Two-state Markov chain machinery for the Gilbert-Elliott channel.
//!
//! Occupancy convention: `n_g` counts the good states among `s_0 .. s_{N-1}`,
//! i.e. the states governing the `N` symbol slots. The symbol sent in slot `n`
//! sees the crossover probability of `s_{n-1}` (1-based), and `s_N` is the
//! state the chain is left in after the block.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature;
use crate::specialfn::{bessel_i, bessel_i1_over_half_z, log_binomial_series, LogReal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum State {
    Good,
    Bad,
}

impl State {
    pub const ALL: [State; 2] = [State::Good, State::Bad];

    pub fn index(self) -> usize {
        match self {
            State::Good => 0,
            State::Bad => 1,
        }
    }

    pub fn from_index(i: usize) -> State {
        if i == 0 {
            State::Good
        } else {
            State::Bad
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            State::Good => "g",
            State::Bad => "b",
        }
    }
}

/// 2×2 table indexed `[s0][sN]` with `Good = 0`, `Bad = 1`.
pub type StateTable = [[f64; 2]; 2];

/// Gilbert-Elliott channel parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Good to bad transition probability.
    pub alpha: f64,
    /// Bad to good transition probability.
    pub beta: f64,
    pub eps_g: f64,
    pub eps_b: f64,
}

fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(name, format!("must lie in [0, 1], got {x}")));
    }
    Ok(())
}

fn check_crossover(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..0.5).contains(&x) {
        return Err(invalid(name, format!("must lie in [0, 0.5), got {x}")));
    }
    Ok(())
}

impl ChannelParams {
    pub fn new(alpha: f64, beta: f64, eps_g: f64, eps_b: f64) -> Result<Self> {
        check_unit("alpha", alpha)?;
        check_unit("beta", beta)?;
        check_crossover("eps_g", eps_g)?;
        check_crossover("eps_b", eps_b)?;
        if eps_g > eps_b {
            return Err(invalid(
                "eps_g",
                format!("good state must be the cleaner one: eps_g = {eps_g} > eps_b = {eps_b}"),
            ));
        }
        Ok(ChannelParams {
            alpha,
            beta,
            eps_g,
            eps_b,
        })
    }

    /// `αβ / ((1-α)(1-β))`; infinite when either probability is one.
    pub fn lambda(&self) -> f64 {
        self.alpha * self.beta / ((1.0 - self.alpha) * (1.0 - self.beta))
    }

    pub fn transition_matrix(&self) -> StateTable {
        [
            [1.0 - self.alpha, self.alpha],
            [self.beta, 1.0 - self.beta],
        ]
    }

    pub fn crossover(&self, s: State) -> f64 {
        match s {
            State::Good => self.eps_g,
            State::Bad => self.eps_b,
        }
    }

    fn is_interior(&self) -> bool {
        self.alpha > 0.0 && self.alpha < 1.0 && self.beta > 0.0 && self.beta < 1.0
    }
}

/// Stationary law `(π_g, π_b)`.
pub fn stationary(params: &ChannelParams) -> Result<(f64, f64)> {
    let total = params.alpha + params.beta;
    if total <= 0.0 {
        return Err(Error::NotErgodic);
    }
    let pi_g = params.beta / total;
    Ok((pi_g, 1.0 - pi_g))
}

/// Joint law `Pr(n_g = m, s_N = d | s_0 = c)`, stored as `p[m][c][d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyTable {
    pub n: usize,
    pub p: Vec<StateTable>,
}

impl OccupancyTable {
    fn zeros(n: usize) -> Self {
        OccupancyTable {
            n,
            p: vec![[[0.0; 2]; 2]; n + 1],
        }
    }

    pub fn get(&self, m: usize, s0: State, s_n: State) -> f64 {
        self.p[m][s0.index()][s_n.index()]
    }

    /// Total probability mass conditioned on `s0`.
    pub fn row_mass(&self, s0: State) -> f64 {
        let c = s0.index();
        self.p.iter().map(|t| t[c][0] + t[c][1]).sum()
    }

    /// `Pr(s_N = d | s_0 = c)`, i.e. the `N`-step transition matrix.
    pub fn final_state_marginal(&self) -> StateTable {
        let mut out = [[0.0; 2]; 2];
        for t in &self.p {
            for c in 0..2 {
                for d in 0..2 {
                    out[c][d] += t[c][d];
                }
            }
        }
        out
    }

    /// `Pr(n_g = m | s_0)` over `m = 0..=N`.
    pub fn occupancy_marginal(&self, s0: State) -> Vec<f64> {
        let c = s0.index();
        self.p.iter().map(|t| t[c][0] + t[c][1]).collect()
    }

    pub fn max_abs_diff(&self, other: &OccupancyTable) -> f64 {
        assert_eq!(self.n, other.n, "tables of different block length");
        self.p
            .iter()
            .zip(&other.p)
            .flat_map(|(a, b)| (0..4).map(move |i| (a[i / 2][i % 2] - b[i / 2][i % 2]).abs()))
            .fold(0.0, f64::max)
    }
}

/// Which printed form of `Pr(n_g = m, s_N = b | s_0 = g)` to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GoodToBadForm {
    /// `(1-α)^{m-1} (1-β)^{N-m} α F(-(m-1), -(N-m); 1; λ)`.
    Theorem,
    /// The shifted variant `(1-α)^m (1-β)^{N-m} α/(1-β) F(-(N-m-1), -m; 1; λ)`.
    /// It does not agree with path enumeration and is kept only to document
    /// the discrepancy.
    Appendix,
}

/// Joint occupancy / final-state law.
///
/// Uses the hypergeometric closed forms in the interior of the parameter
/// space and the generating-matrix recursion when α or β is 0 or 1.
pub fn occupancy_pmf(params: &ChannelParams, n: usize) -> Result<OccupancyTable> {
    if params.is_interior() {
        occupancy_pmf_closed_form(params, n, GoodToBadForm::Theorem)
    } else {
        occupancy_pmf_genmatrix(params, n)
    }
}

pub fn occupancy_pmf_closed_form(
    params: &ChannelParams,
    n: usize,
    form: GoodToBadForm,
) -> Result<OccupancyTable> {
    if n == 0 {
        return Err(invalid("n", "block length must be >= 1"));
    }
    if !params.is_interior() {
        return Err(invalid(
            "alpha/beta",
            "closed form needs 0 < alpha, beta < 1; use the generating-matrix method",
        ));
    }
    let ln_stay_g = (-params.alpha).ln_1p();
    let ln_stay_b = (-params.beta).ln_1p();
    let ln_alpha = params.alpha.ln();
    let ln_beta = params.beta.ln();
    let lambda = params.lambda();
    let nn = n as u64;

    let mut table = OccupancyTable::zeros(n);
    for m in 0..=n {
        let mu = m as u64;
        let rest = nn - mu;
        let base = mu as f64 * ln_stay_g + rest as f64 * ln_stay_b;
        let cell = &mut table.p[m];

        // g -> g
        cell[0][0] = if m == n {
            (nn as f64 * ln_stay_g).exp()
        } else if m == 0 {
            0.0
        } else {
            (LogReal::from_ln(base) * log_binomial_series(mu, rest - 1, 1, lambda)).exp()
        };

        // g -> b
        cell[0][1] = if m == 0 {
            0.0
        } else {
            match form {
                GoodToBadForm::Theorem => {
                    let ln_pre = base - ln_stay_g + ln_alpha;
                    (LogReal::from_ln(ln_pre) * log_binomial_series(mu - 1, rest, 0, lambda)).exp()
                }
                GoodToBadForm::Appendix => {
                    if m == n {
                        ((nn - 1) as f64 * ln_stay_g + ln_alpha).exp()
                    } else {
                        let ln_pre = base + ln_alpha - ln_stay_b;
                        (LogReal::from_ln(ln_pre) * log_binomial_series(rest - 1, mu, 0, lambda)).exp()
                    }
                }
            }
        };

        // b -> g
        cell[1][0] = if m == n {
            0.0
        } else {
            let ln_pre = base - ln_stay_b + ln_beta;
            (LogReal::from_ln(ln_pre) * log_binomial_series(rest - 1, mu, 0, lambda)).exp()
        };

        // b -> b
        cell[1][1] = if m == 0 {
            (nn as f64 * ln_stay_b).exp()
        } else if m == n {
            0.0
        } else {
            (LogReal::from_ln(base) * log_binomial_series(rest, mu - 1, 1, lambda)).exp()
        };
    }
    Ok(table)
}

/// Coefficient extraction from the `N`-th power of
/// `[[(1-α)x, αx], [β, 1-β]]`, by repeated polynomial convolution.
pub fn occupancy_pmf_genmatrix(params: &ChannelParams, n: usize) -> Result<OccupancyTable> {
    if n == 0 {
        return Err(invalid("n", "block length must be >= 1"));
    }
    let t = params.transition_matrix();
    let mut table = OccupancyTable::zeros(n);
    for c in 0..2 {
        // cur[d][m]: probability of being in d after the steps so far with m good slots.
        let mut cur = [vec![0.0; n + 1], vec![0.0; n + 1]];
        cur[c][0] = 1.0;
        for step in 0..n {
            let mut next = [vec![0.0; n + 1], vec![0.0; n + 1]];
            for m in 0..=step {
                let g = cur[0][m];
                let b = cur[1][m];
                if g != 0.0 {
                    next[0][m + 1] += g * t[0][0];
                    next[1][m + 1] += g * t[0][1];
                }
                if b != 0.0 {
                    next[0][m] += b * t[1][0];
                    next[1][m] += b * t[1][1];
                }
            }
            cur = next;
        }
        for m in 0..=n {
            table.p[m][c][0] = cur[0][m];
            table.p[m][c][1] = cur[1][m];
        }
    }
    Ok(table)
}

pub const ENUMERATION_LIMIT: usize = 20;

/// Brute-force sum over all `2^N` continuations of each initial state.
pub fn enumerate_paths_oracle(params: &ChannelParams, n: usize) -> Result<OccupancyTable> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooManyPaths {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    if n == 0 {
        return Err(invalid("n", "block length must be >= 1"));
    }
    let t = params.transition_matrix();
    let mut table = OccupancyTable::zeros(n);
    for c in 0..2 {
        // bit i of `path` is the state s_{i+1} (1 = bad).
        for path in 0u32..(1u32 << n) {
            let mut prob = 1.0;
            let mut state = c;
            let mut n_g = 0;
            for i in 0..n {
                if state == 0 {
                    n_g += 1;
                }
                let next = ((path >> i) & 1) as usize;
                prob *= t[state][next];
                state = next;
            }
            table.p[n_g][c][state] += prob;
        }
    }
    Ok(table)
}

/// Limiting law of the fractional good-state occupancy `X` when the
/// transition probabilities scale as `α/N`, `β/N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyDensity {
    pub alpha: f64,
    pub beta: f64,
    /// Mass of the point `X = 1` jointly with `s_N = g`, given `s_0 = g`.
    pub atom_at_1: f64,
    /// Mass of the point `X = 0` jointly with `s_N = b`, given `s_0 = b`.
    pub atom_at_0: f64,
}

pub fn occupancy_density_ctmc(alpha: f64, beta: f64) -> Result<OccupancyDensity> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("rate must be > 0, got {alpha}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("rate must be > 0, got {beta}")));
    }
    Ok(OccupancyDensity {
        alpha,
        beta,
        atom_at_1: (-alpha).exp(),
        atom_at_0: (-beta).exp(),
    })
}

const DENSITY_TOL: f64 = 1e-9;

impl OccupancyDensity {
    /// Continuous part of `f(x, s_N | s_0)` for `x` in `(0, 1)`.
    pub fn density(&self, s0: State, s_n: State, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let (a, b) = (self.alpha, self.beta);
        let e = (-a * x - b * (1.0 - x)).exp();
        let z = 2.0 * (a * b * x * (1.0 - x)).sqrt();
        match (s0, s_n) {
            (State::Good, State::Good) => e * a * b * x * bessel_i1_over_half_z(z),
            (State::Bad, State::Bad) => e * a * b * (1.0 - x) * bessel_i1_over_half_z(z),
            (State::Good, State::Bad) => a * e * bessel_i(0, z).expect("z >= 0"),
            (State::Bad, State::Good) => b * e * bessel_i(0, z).expect("z >= 0"),
        }
    }

    /// Point mass `(location, weight)` of the `(s0, sN)` component, if any.
    pub fn atom(&self, s0: State, s_n: State) -> Option<(f64, f64)> {
        match (s0, s_n) {
            (State::Good, State::Good) => Some((1.0, self.atom_at_1)),
            (State::Bad, State::Bad) => Some((0.0, self.atom_at_0)),
            _ => None,
        }
    }

    /// `Pr(X <= x, s_N = d | s_0 = c)`.
    pub fn joint_cdf(&self, s0: State, s_n: State, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        let upper = x.min(1.0);
        let mut total =
            quadrature::integrate(|u| self.density(s0, s_n, u), 0.0, upper, DENSITY_TOL)?;
        if let Some((loc, w)) = self.atom(s0, s_n) {
            if loc <= x {
                total += w;
            }
        }
        Ok(total)
    }

    /// `Pr(X <= x | s_0)`, summed over the final state.
    pub fn cdf(&self, s0: State, x: f64) -> Result<f64> {
        Ok(self.joint_cdf(s0, State::Good, x)? + self.joint_cdf(s0, State::Bad, x)?)
    }

    /// `E[e^{yX} 1{s_N = d} | s_0 = c]` by quadrature plus the atoms.
    pub fn mgf_by_quadrature(&self, y: f64) -> Result<StateTable> {
        let mut out = [[0.0; 2]; 2];
        for s0 in State::ALL {
            for s_n in State::ALL {
                let mut v = quadrature::integrate(
                    |u| (y * u).exp() * self.density(s0, s_n, u),
                    0.0,
                    1.0,
                    1e-13,
                )?;
                if let Some((loc, w)) = self.atom(s0, s_n) {
                    v += w * (y * loc).exp();
                }
                out[s0.index()][s_n.index()] = v;
            }
        }
        Ok(out)
    }
}

/// A 2×2 matrix carried as `exp(ln_scale) * m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledMatrix {
    pub ln_scale: f64,
    pub m: StateTable,
}

impl ScaledMatrix {
    pub fn to_plain(&self) -> StateTable {
        let s = self.ln_scale.exp();
        let mut out = self.m;
        out.iter_mut().flatten().for_each(|v| *v *= s);
        out
    }

    /// `ln` of each entry, `-inf` for zeros.
    pub fn ln_entry(&self, c: usize, d: usize) -> f64 {
        self.ln_scale + self.m[c][d].ln()
    }
}

/// `exp([[y - α, α], [β, -β]])` with the largest eigenvalue factored out.
pub fn mgf_matrix_scaled(alpha: f64, beta: f64, y: f64) -> ScaledMatrix {
    let a = y - alpha;
    let d = -beta;
    let half_trace = 0.5 * (a + d);
    let delta = 0.5 * (a - d);
    let off = alpha * beta;
    let s = (delta * delta + off).sqrt();
    let lambda1 = half_trace + s;
    let lambda2 = half_trace - s;

    let m = if 2.0 * s < 1e-9 * lambda1.abs().max(lambda2.abs()).max(1.0) {
        // Nearly coincident eigenvalues: e^{-s}[cosh(s) I + sinh(s)/s (M - τ/2 I)].
        let s2 = s * s;
        let cosh_e = (1.0 + (-2.0 * s).exp()) * 0.5;
        let sinhc_e = 1.0 - s + 2.0 * s2 / 3.0;
        [
            [cosh_e + sinhc_e * delta, sinhc_e * alpha],
            [sinhc_e * beta, cosh_e - sinhc_e * delta],
        ]
    } else {
        let two_s = 2.0 * s;
        let w = (-two_s).exp();
        let big = s + delta.abs();
        let small = off / big;
        let (p, q) = if delta >= 0.0 { (big, small) } else { (small, big) };
        let spread = -(-two_s).exp_m1() / two_s;
        [
            [(p + w * q) / two_s, alpha * spread],
            [beta * spread, (q + w * p) / two_s],
        ]
    };
    ScaledMatrix {
        ln_scale: lambda1,
        m,
    }
}

/// `exp([[y - α, α], [β, -β]])`, whose `(c, d)` entry is the matrix
/// generating function `E[e^{yX} 1{s_N = d} | s_0 = c]`.
pub fn mgf_matrix(alpha: f64, beta: f64, y: f64) -> StateTable {
    mgf_matrix_scaled(alpha, beta, y).to_plain()
}

/// Plain 2×2 product.
pub fn mat_mul(a: &StateTable, b: &StateTable) -> StateTable {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `P^n` by repeated squaring.
pub fn mat_pow(p: &StateTable, mut n: usize) -> StateTable {
    let mut result = [[1.0, 0.0], [0.0, 1.0]];
    let mut base = *p;
    while n > 0 {
        if n & 1 == 1 {
            result = mat_mul(&result, &base);
        }
        base = mat_mul(&base, &base);
        n >>= 1;
    }
    result
}
