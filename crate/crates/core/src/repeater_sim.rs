//! Clocked Monte Carlo of the two-segment multiplexed repeater.
//!
//! Each clock lasts L/c. Free independent modes on either segment herald with the
//! per-mode probability for the current number of free modes; stored pairs expire
//! once older than floor(τ·c/L) clocks; live pairs are swapped first-in first-out,
//! one from each side, and each attempt consumes both pairs whatever its outcome.
//!
//! The simulation runs in steady state. After a burn-in of a few successes, the
//! reported samples are the clock counts between consecutive successful swaps.
//! Runs of clocks with no possible event are skipped with a geometric draw.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::relay_chain::trial_rng;
use crate::repeater_rates::{p_allocated, tau_clocks, RepeaterParams};

pub const DEFAULT_STREAMS: usize = 64;
pub const DEFAULT_BURN_IN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: RepeaterParams,
    pub trials: usize,
    pub seed: u64,
    /// Longest allowed wait, in clocks, between consecutive successes.
    pub max_clocks_per_trial: u64,
    /// Independent RNG streams; trials are split evenly between them.
    pub streams: usize,
    /// Successes discarded per stream before sampling starts.
    pub burn_in: usize,
    pub keep_samples: bool,
}

impl SimConfig {
    pub fn new(params: RepeaterParams, trials: usize, seed: u64) -> Self {
        Self {
            params,
            trials,
            seed,
            max_clocks_per_trial: 1 << 40,
            streams: DEFAULT_STREAMS,
            burn_in: DEFAULT_BURN_IN,
            keep_samples: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        ensure(self.trials >= 1, || "trials must be at least 1".into())?;
        ensure(self.max_clocks_per_trial >= 1, || "max_clocks_per_trial must be at least 1".into())?;
        ensure(self.streams >= 1, || "streams must be at least 1".into())
    }

    fn stream_count(&self) -> usize {
        self.streams.min(self.trials)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mean_time_s: f64,
    /// Standard error from the spread of per-stream means.
    pub std_err_s: f64,
    pub clock_s: f64,
    pub trial_times_s: Option<Vec<f64>>,
    pub success_count: usize,
    pub expiry_events: u64,
    pub swap_attempts: u64,
    pub clocks_simulated: u64,
}

#[derive(Debug, Default)]
struct StreamOut {
    intervals: Vec<u64>,
    expiry_events: u64,
    swap_attempts: u64,
    clocks: u64,
}

struct Engine<'a> {
    n: usize,
    p_free: &'a [f64],
    p1: f64,
    tau_c: u64,
    max_clocks: u64,
}

fn binomial(rng: &mut ChaCha8Rng, k: usize, p: f64) -> usize {
    if k == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return k;
    }
    if k as f64 * p > 8.0 {
        return (0..k).filter(|_| rng.gen::<f64>() < p).count();
    }
    // inverse CDF from zero; cheap when successes are rare
    let u: f64 = rng.gen();
    let ratio = p / (1.0 - p);
    let mut pmf = (k as f64 * (-p).ln_1p()).exp();
    let mut cdf = pmf;
    let mut j = 0;
    while u > cdf && j < k {
        pmf *= (k - j) as f64 / (j + 1) as f64 * ratio;
        j += 1;
        cdf += pmf;
    }
    j
}

impl Engine<'_> {
    fn expire(&self, side: &mut VecDeque<u64>, clk: u64, out: &mut StreamOut) {
        while let Some(&created) = side.front() {
            if clk - created > self.tau_c {
                side.pop_front();
                out.expiry_events += 1;
            } else {
                break;
            }
        }
    }

    fn next_expiry(&self, a: &VecDeque<u64>, b: &VecDeque<u64>) -> u64 {
        let due = |s: &VecDeque<u64>| {
            s.front()
                .map_or(u64::MAX, |c| c.saturating_add(self.tau_c).saturating_add(1))
        };
        due(a).min(due(b))
    }

    fn run(
        &self,
        rng: &mut ChaCha8Rng,
        target: usize,
        burn_in: usize,
        first_trial: usize,
    ) -> Result<StreamOut> {
        let mut out = StreamOut {
            intervals: Vec::with_capacity(target),
            ..Default::default()
        };
        let mut a: VecDeque<u64> = VecDeque::with_capacity(self.n);
        let mut b: VecDeque<u64> = VecDeque::with_capacity(self.n);
        let mut clk = 0u64;
        let mut mark = 0u64;
        let mut burn_left = burn_in;

        while out.intervals.len() < target {
            let fa = self.n - a.len();
            let fb = self.n - b.len();
            let (pa, pb) = (self.p_free[fa], self.p_free[fb]);
            let quiet = (1.0 - pa).powi(fa as i32) * (1.0 - pb).powi(fb as i32);
            let gap = if quiet <= 0.0 {
                0
            } else if quiet >= 1.0 {
                u64::MAX
            } else {
                let u = 1.0 - rng.gen::<f64>();
                let g = (u.ln() / quiet.ln()).floor();
                if g < 1e18 {
                    g as u64
                } else {
                    u64::MAX
                }
            };
            let event_clk = clk.saturating_add(gap).saturating_add(1);
            let expiry_clk = self.next_expiry(&a, &b);
            let step_clk = event_clk.min(expiry_clk);
            if step_clk == u64::MAX || step_clk - mark > self.max_clocks {
                return Err(Error::TrialTimeout {
                    trial: first_trial + out.intervals.len(),
                    clocks: self.max_clocks,
                });
            }
            clk = step_clk;

            let (na, nb) = if expiry_clk <= event_clk {
                self.expire(&mut a, clk, &mut out);
                self.expire(&mut b, clk, &mut out);
                let (fa, fb) = (self.n - a.len(), self.n - b.len());
                (
                    binomial(rng, fa, self.p_free[fa]),
                    binomial(rng, fb, self.p_free[fb]),
                )
            } else {
                self.births_given_any(rng, fa, pa, fb, pb, 1.0 - quiet)
            };
            a.extend(std::iter::repeat(clk).take(na));
            b.extend(std::iter::repeat(clk).take(nb));

            let swaps = a.len().min(b.len());
            for _ in 0..swaps {
                a.pop_front();
                b.pop_front();
                out.swap_attempts += 1;
                if rng.gen::<f64>() < self.p1 {
                    if burn_left > 0 {
                        burn_left -= 1;
                    } else if out.intervals.len() < target {
                        out.intervals.push(clk - mark);
                    }
                    mark = clk;
                }
            }
        }
        out.clocks = clk;
        Ok(out)
    }

    /// Heralds on each side, conditioned on at least one among the free modes.
    fn births_given_any(
        &self,
        rng: &mut ChaCha8Rng,
        fa: usize,
        pa: f64,
        fb: usize,
        pb: f64,
        any: f64,
    ) -> (usize, usize) {
        let total = fa + fb;
        let target = rng.gen::<f64>() * any;
        let mut survive = 1.0;
        let mut acc = 0.0;
        let mut first = total - 1;
        for idx in 0..total {
            let p = if idx < fa { pa } else { pb };
            acc += survive * p;
            if acc >= target {
                first = idx;
                break;
            }
            survive *= 1.0 - p;
        }
        if first < fa {
            (1 + binomial(rng, fa - first - 1, pa), binomial(rng, fb, pb))
        } else {
            (0, 1 + binomial(rng, total - first - 1, pb))
        }
    }
}

/// Per-mode heralding probability indexed by the number of free modes.
pub fn heralding_table(params: &RepeaterParams) -> Vec<f64> {
    (0..=params.independent_modes)
        .map(|k| if k == 0 { 0.0 } else { p_allocated(params, k) })
        .collect()
}

/// Expiry threshold in clocks; `u64::MAX` for unlimited storage.
pub fn expiry_clocks(params: &RepeaterParams) -> u64 {
    if params.memory_time_s.is_infinite() {
        u64::MAX
    } else {
        tau_clocks(params.memory_time_s, params.light_time_s())
    }
}

pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let table = heralding_table(&config.params);
    simulate_with_table(config, &table)
}

/// Run with an explicit per-free-count heralding table of length n + 1.
pub fn simulate_with_table(config: &SimConfig, p_free: &[f64]) -> Result<SimResult> {
    config.validate()?;
    let n = config.params.independent_modes;
    ensure(p_free.len() == n + 1, || {
        format!("heralding table needs {} entries, got {}", n + 1, p_free.len())
    })?;
    ensure(p_free.iter().all(|p| (0.0..=1.0).contains(p)), || {
        "heralding probabilities must lie in [0, 1]".into()
    })?;
    let engine = Engine {
        n,
        p_free,
        p1: config.params.p1(),
        tau_c: expiry_clocks(&config.params),
        max_clocks: config.max_clocks_per_trial,
    };
    let streams = config.stream_count();
    let base = config.trials / streams;
    let extra = config.trials % streams;
    let plan: Vec<(usize, usize)> = (0..streams)
        .scan(0usize, |offset, s| {
            let count = base + usize::from(s < extra);
            let start = *offset;
            *offset += count;
            Some((start, count))
        })
        .collect();

    let outs: Vec<StreamOut> = plan
        .par_iter()
        .enumerate()
        .map(|(s, &(start, count))| {
            let mut rng = trial_rng(config.seed, s as u64);
            engine.run(&mut rng, count, config.burn_in, start)
        })
        .collect::<Result<_>>()?;

    let clock = config.params.light_time_s();
    let total: u64 = outs.iter().flat_map(|o| o.intervals.iter()).sum();
    let count: usize = outs.iter().map(|o| o.intervals.len()).sum();
    let mean = total as f64 / count as f64;

    let std_err = if streams >= 2 {
        let means: Vec<f64> = outs
            .iter()
            .map(|o| o.intervals.iter().sum::<u64>() as f64 / o.intervals.len() as f64)
            .collect();
        let mu = means.iter().sum::<f64>() / streams as f64;
        let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (streams - 1) as f64;
        (var / streams as f64).sqrt()
    } else if count >= 2 {
        let xs = &outs[0].intervals;
        let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    } else {
        f64::NAN
    };

    Ok(SimResult {
        mean_time_s: mean * clock,
        std_err_s: std_err * clock,
        clock_s: clock,
        trial_times_s: config.keep_samples.then(|| {
            outs.iter()
                .flat_map(|o| o.intervals.iter().map(|&c| c as f64 * clock))
                .collect()
        }),
        success_count: count,
        expiry_events: outs.iter().map(|o| o.expiry_events).sum(),
        swap_attempts: outs.iter().map(|o| o.swap_attempts).sum(),
        clocks_simulated: outs.iter().map(|o| o.clocks).sum(),
    })
}
