//! Monte Carlo simulation of the random-coding ensemble on the
//! Gilbert-Elliott channel with the state sequence known at the receiver.
//!
//! Trial `i` draws everything from `ChaCha8Rng::seed_from_u64(seed)` with
//! stream `i`, and the aggregation only adds integer counts, so results do
//! not depend on thread count or scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::{ceil_tol, resolve_gamma, DecoderSpec, TiePolicy};
use crate::markov::{stationary, ChannelParams, State};

/// Largest allowed `n * m_codewords` per trial.
pub const BUDGET: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialState {
    Good,
    Bad,
    Stationary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ChannelParams,
    pub n: usize,
    pub m_codewords: usize,
    pub decoder: DecoderSpec,
    pub trials: u64,
    pub seed: u64,
    pub initial_state: InitialState,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "block length must be >= 1"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "need at least one trial"));
        }
        if self.m_codewords < 2 {
            return Err(invalid("m_codewords", format!("need at least 2, got {}", self.m_codewords)));
        }
        let cost = (self.n as u64).saturating_mul(self.m_codewords as u64);
        if cost > BUDGET {
            return Err(Error::BudgetExceeded { cost, limit: BUDGET });
        }
        if self.initial_state == InitialState::Stationary {
            stationary(&self.params)?;
        }
        resolve_gamma(&self.params, self.decoder.rule)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCount {
    pub failures: u64,
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub p_hat: f64,
    pub std_err: f64,
    pub trials: u64,
    pub failures: u64,
    /// Counts conditioned on the observed `(s0, sN)`, indexed `[s0][sN]`.
    pub per_transition: [[TransitionCount; 2]; 2],
    /// Number of trials with `n_g = m`, `m = 0..=N`.
    pub occupancy_hist: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub failed: bool,
    pub s0: State,
    pub s_n: State,
    pub n_g: usize,
}

/// RNG for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn step(params: &ChannelParams, s: State, rng: &mut impl Rng) -> State {
    let u: f64 = rng.random();
    match s {
        State::Good if u < params.alpha => State::Bad,
        State::Bad if u < params.beta => State::Good,
        other => other,
    }
}

/// Slot states `s_0 .. s_{N-1}` and the final state `s_N`.
pub fn simulate_states(
    params: &ChannelParams,
    n: usize,
    initial: InitialState,
    rng: &mut impl Rng,
) -> Result<(Vec<State>, State)> {
    let s0 = match initial {
        InitialState::Good => State::Good,
        InitialState::Bad => State::Bad,
        InitialState::Stationary => {
            let (pi_g, _) = stationary(params)?;
            if rng.random::<f64>() < pi_g {
                State::Good
            } else {
                State::Bad
            }
        }
    };
    let mut slots = Vec::with_capacity(n);
    let mut s = s0;
    for _ in 0..n {
        slots.push(s);
        s = step(params, s, rng);
    }
    Ok((slots, s))
}

/// Bit-packed binary words of a fixed length.
struct Words {
    chunks: usize,
    last_mask: u64,
}

impl Words {
    fn new(n: usize) -> Self {
        let chunks = n.div_ceil(64);
        let tail = n - 64 * (chunks - 1);
        let last_mask = if tail == 64 { u64::MAX } else { (1u64 << tail) - 1 };
        Words { chunks, last_mask }
    }

    fn random(&self, rng: &mut impl Rng) -> Vec<u64> {
        let mut w: Vec<u64> = (0..self.chunks).map(|_| rng.random()).collect();
        w[self.chunks - 1] &= self.last_mask;
        w
    }
}

/// Codebook, noise and slot masks of one trial, shared by paired decoders.
struct Realization {
    outcome: TrialOutcome,
    good_mask: Vec<u64>,
    /// `codeword_j XOR received` for every codeword; entry 0 is the noise.
    diffs: Vec<Vec<u64>>,
}

fn realize(config: &SimConfig, rng: &mut impl Rng) -> Result<Realization> {
    let n = config.n;
    let words = Words::new(n);
    let (slots, s_n) = simulate_states(&config.params, n, config.initial_state, rng)?;
    let mut good_mask = vec![0u64; words.chunks];
    let mut noise = vec![0u64; words.chunks];
    for (i, &s) in slots.iter().enumerate() {
        if s == State::Good {
            good_mask[i / 64] |= 1 << (i % 64);
        }
        if rng.random::<f64>() < config.params.crossover(s) {
            noise[i / 64] |= 1 << (i % 64);
        }
    }
    let codebook: Vec<Vec<u64>> = (0..config.m_codewords).map(|_| words.random(rng)).collect();
    let received: Vec<u64> = codebook[0].iter().zip(&noise).map(|(c, e)| c ^ e).collect();
    let diffs = codebook
        .iter()
        .map(|cw| cw.iter().zip(&received).map(|(c, r)| c ^ r).collect())
        .collect();
    let n_g = slots.iter().filter(|&&s| s == State::Good).count();
    Ok(Realization {
        outcome: TrialOutcome {
            failed: false,
            s0: slots[0],
            s_n,
            n_g,
        },
        good_mask,
        diffs,
    })
}

fn score(diff: &[u64], good_mask: &[u64], gamma: Option<f64>) -> u64 {
    match gamma {
        None => diff.iter().map(|d| d.count_ones() as u64).sum(),
        Some(g) => {
            let (mut eg, mut eb) = (0u64, 0u64);
            for (d, m) in diff.iter().zip(good_mask) {
                eg += (d & m).count_ones() as u64;
                eb += (d & !m).count_ones() as u64;
            }
            ceil_tol(g * eg as f64) + eb
        }
    }
}

fn decode_fails(r: &Realization, gamma: Option<f64>, ties: TiePolicy, rng: &mut impl Rng) -> bool {
    let scores: Vec<u64> = r.diffs.iter().map(|d| score(d, &r.good_mask, gamma)).collect();
    let own = scores[0];
    match ties {
        TiePolicy::Error => scores[1..].iter().any(|&s| s <= own),
        TiePolicy::RandomAmongBest => {
            let best = *scores.iter().min().expect("non-empty codebook");
            if own > best {
                return true;
            }
            let tied = scores.iter().filter(|&&s| s == best).count();
            tied > 1 && rng.random_range(0..tied) != 0
        }
    }
}

/// One draw of states, noise and codebook; codeword 0 is transmitted.
pub fn run_trial(config: &SimConfig, rng: &mut impl Rng) -> Result<TrialOutcome> {
    let gamma = resolve_gamma(&config.params, config.decoder.rule)?;
    let r = realize(config, rng)?;
    let failed = decode_fails(&r, gamma, config.decoder.ties, rng);
    Ok(TrialOutcome { failed, ..r.outcome })
}

/// Decodes the same realization with `config.decoder` and `other`.
pub fn run_trial_paired(
    config: &SimConfig,
    other: DecoderSpec,
    rng: &mut impl Rng,
) -> Result<(TrialOutcome, TrialOutcome)> {
    let g1 = resolve_gamma(&config.params, config.decoder.rule)?;
    let g2 = resolve_gamma(&config.params, other.rule)?;
    let r = realize(config, rng)?;
    let f1 = decode_fails(&r, g1, config.decoder.ties, rng);
    let f2 = decode_fails(&r, g2, other.ties, rng);
    Ok((
        TrialOutcome { failed: f1, ..r.outcome },
        TrialOutcome { failed: f2, ..r.outcome },
    ))
}

#[derive(Clone, Debug)]
struct Tally {
    failures: u64,
    per_transition: [[TransitionCount; 2]; 2],
    hist: Vec<u64>,
}

impl Tally {
    fn new(n: usize) -> Self {
        Tally {
            failures: 0,
            per_transition: Default::default(),
            hist: vec![0; n + 1],
        }
    }

    fn add(&mut self, o: &TrialOutcome) {
        let cell = &mut self.per_transition[o.s0.index()][o.s_n.index()];
        cell.trials += 1;
        if o.failed {
            cell.failures += 1;
            self.failures += 1;
        }
        self.hist[o.n_g] += 1;
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.failures += other.failures;
        for c in 0..2 {
            for d in 0..2 {
                self.per_transition[c][d].failures += other.per_transition[c][d].failures;
                self.per_transition[c][d].trials += other.per_transition[c][d].trials;
            }
        }
        self.hist.iter_mut().zip(other.hist).for_each(|(a, b)| *a += b);
        self
    }

    fn finish(self, trials: u64) -> SimResult {
        let p_hat = self.failures as f64 / trials as f64;
        SimResult {
            p_hat,
            std_err: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
            trials,
            failures: self.failures,
            per_transition: self.per_transition,
            occupancy_hist: self.hist,
        }
    }
}

/// Runs `config.trials` independent trials in parallel.
pub fn estimate(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let n = config.n;
    let tally = (0..config.trials)
        .into_par_iter()
        .try_fold(
            || Tally::new(n),
            |mut acc, i| {
                let mut rng = trial_rng(config.seed, i);
                acc.add(&run_trial(config, &mut rng)?);
                Ok::<_, Error>(acc)
            },
        )
        .try_reduce(|| Tally::new(n), |a, b| Ok(a.merge(b)))?;
    Ok(tally.finish(config.trials))
}

/// Like [`estimate`], decoding every realization with both `config.decoder`
/// and `other` (common random numbers).
pub fn estimate_paired(config: &SimConfig, other: DecoderSpec) -> Result<(SimResult, SimResult)> {
    config.validate()?;
    resolve_gamma(&config.params, other.rule)?;
    let n = config.n;
    let (a, b) = (0..config.trials)
        .into_par_iter()
        .try_fold(
            || (Tally::new(n), Tally::new(n)),
            |(mut a, mut b), i| {
                let mut rng = trial_rng(config.seed, i);
                let (oa, ob) = run_trial_paired(config, other, &mut rng)?;
                a.add(&oa);
                b.add(&ob);
                Ok::<_, Error>((a, b))
            },
        )
        .try_reduce(
            || (Tally::new(n), Tally::new(n)),
            |(a1, b1), (a2, b2)| Ok((a1.merge(a2), b1.merge(b2))),
        )?;
    Ok((a.finish(config.trials), b.finish(config.trials)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::DecodingRule;

    fn config(params: ChannelParams, n: usize, m: usize, rule: DecodingRule, trials: u64) -> SimConfig {
        SimConfig {
            params,
            n,
            m_codewords: m,
            decoder: DecoderSpec::new(rule, TiePolicy::Error),
            trials,
            seed: 7,
            initial_state: InitialState::Stationary,
        }
    }

    #[test]
    fn frozen_and_flipping_chains() {
        let mut rng = trial_rng(1, 0);
        let frozen = ChannelParams::new(0.0, 0.0, 0.0, 0.1).unwrap();
        let (slots, last) = simulate_states(&frozen, 50, InitialState::Good, &mut rng).unwrap();
        assert!(slots.iter().all(|&s| s == State::Good) && last == State::Good);

        let flip = ChannelParams::new(1.0, 1.0, 0.0, 0.1).unwrap();
        let (slots, last) = simulate_states(&flip, 5, InitialState::Good, &mut rng).unwrap();
        use State::*;
        assert_eq!(slots, vec![Good, Bad, Good, Bad, Good]);
        assert_eq!(last, Bad);

        assert!(simulate_states(&frozen, 5, InitialState::Stationary, &mut rng).is_err());
    }

    #[test]
    fn stationary_fraction() {
        let p = ChannelParams::new(0.1, 0.3, 0.0, 0.1).unwrap();
        let n = 1_000_000;
        let mut rng = trial_rng(99, 0);
        let (slots, _) = simulate_states(&p, n, InitialState::Stationary, &mut rng).unwrap();
        let frac = slots.iter().filter(|&&s| s == State::Good).count() as f64 / n as f64;
        // Asymptotic variance of a two-state chain's occupancy fraction.
        let (pg, pb) = stationary(&p).unwrap();
        let l2 = 1.0 - p.alpha - p.beta;
        let sigma = (pg * pb * (1.0 + l2) / (1.0 - l2) / n as f64).sqrt();
        assert!((frac - pg).abs() < 3.0 * sigma, "{frac} vs {pg} (sigma {sigma})");
    }

    #[test]
    fn noiseless_never_fails() {
        let p = ChannelParams::new(0.2, 0.2, 0.0, 0.0).unwrap();
        let res = estimate(&config(p, 128, 8, DecodingRule::MinimumDistance, 2000)).unwrap();
        assert_eq!(res.failures, 0);
    }

    #[test]
    fn single_slot_two_codewords() {
        // One symbol, ties are errors: failure is certain after a flip and
        // happens with probability 1/2 otherwise, so P = (1 + ε)/2 with
        // ε = π_g ε_g + π_b ε_b.
        let p = ChannelParams::new(0.2, 0.3, 0.1, 0.3).unwrap();
        let (pg, pb) = stationary(&p).unwrap();
        let want = 0.5 * (1.0 + pg * 0.1 + pb * 0.3);
        for rule in [DecodingRule::MinimumDistance, DecodingRule::MaximumLikelihood] {
            let res = estimate(&config(p, 1, 2, rule, 50_000)).unwrap();
            assert!((res.p_hat - want).abs() < 3.0 * res.std_err, "{} vs {want}", res.p_hat);
        }
    }

    #[test]
    fn counts_are_consistent() {
        let p = ChannelParams::new(0.1, 0.2, 0.05, 0.2).unwrap();
        let res = estimate(&config(p, 16, 4, DecodingRule::MaximumLikelihood, 1)).unwrap();
        assert_eq!(res.trials, 1);
        assert!(res.std_err == 0.0);
        let total: u64 = res.per_transition.iter().flatten().map(|c| c.trials).sum();
        assert_eq!(total, 1);
        assert_eq!(res.occupancy_hist.iter().sum::<u64>(), 1);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let p = ChannelParams::new(0.1, 0.2, 0.05, 0.2).unwrap();
        let cfg = config(p, 24, 8, DecodingRule::MaximumLikelihood, 5000);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate(&cfg).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(4));
        assert_eq!(a, estimate(&cfg).unwrap());
    }

    #[test]
    fn budget_guard() {
        let p = ChannelParams::new(0.1, 0.2, 0.05, 0.2).unwrap();
        let cfg = config(p, 1 << 12, 1 << 11, DecodingRule::MinimumDistance, 1);
        assert!(matches!(estimate(&cfg), Err(Error::BudgetExceeded { .. })));
        let cfg = config(p, 16, 1, DecodingRule::MinimumDistance, 1);
        assert!(estimate(&cfg).is_err());
    }

    #[test]
    fn paired_ml_not_worse() {
        let p = ChannelParams::new(0.1, 0.2, 0.01, 0.2).unwrap();
        let cfg = config(p, 32, 64, DecodingRule::MaximumLikelihood, 20_000);
        let md = DecoderSpec::new(DecodingRule::MinimumDistance, TiePolicy::Error);
        let (ml, md) = estimate_paired(&cfg, md).unwrap();
        assert!(ml.failures <= md.failures, "{} > {}", ml.failures, md.failures);
        assert_eq!(ml.occupancy_hist, md.occupancy_hist);
    }

    #[test]
    fn wide_blocks_use_several_chunks() {
        let words = Words::new(130);
        assert_eq!(words.chunks, 3);
        assert_eq!(words.last_mask, 0b11);
        assert_eq!(Words::new(64).last_mask, u64::MAX);
    }
}
