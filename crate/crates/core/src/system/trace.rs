use std::io::{self, Write};

use rand::distr::{Bernoulli, Distribution};

use super::RatePoint;
use crate::error::{check_range, Error, Result};
use crate::rng;

/// A seeded i.i.d. Bernoulli(q) channel state sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    pub q: f64,
    pub seed: u64,
    pub states: Vec<u8>,
}

/// Draws `horizon` channel states, each 1 with probability `q`.
pub fn generate_trace(q: f64, horizon: usize, seed: u64) -> Result<ChannelTrace> {
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    if horizon == 0 {
        return Err(Error::OutOfRange {
            name: "horizon",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let coin = Bernoulli::new(q).map_err(|_| Error::OutOfRange {
        name: "q",
        value: q,
        range: "[0, 1]",
    })?;
    let mut rng = rng::stream(seed);
    let states = (0..horizon).map(|_| coin.sample(&mut rng) as u8).collect();
    Ok(ChannelTrace { q, seed, states })
}

impl ChannelTrace {
    /// A trace with explicit states, used for relabeling and replay.
    pub fn from_states(q: f64, seed: u64, states: Vec<u8>) -> Result<Self> {
        check_range("q", q, 0.0, 1.0, "[0, 1]")?;
        if states.is_empty() || states.iter().any(|&s| s > 1) {
            return Err(Error::Config("states must be a nonempty 0/1 sequence".into()));
        }
        Ok(Self { q, seed, states })
    }

    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    pub fn ones(&self) -> usize {
        self.states.iter().filter(|&&s| s == 1).count()
    }

    /// Writes `t,s` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,s")?;
        for (t, s) in self.states.iter().enumerate() {
            writeln!(w, "{t},{s}")?;
        }
        Ok(())
    }
}

/// Trajectory of one policy on one trace.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub trace: ChannelTrace,
    pub decisions: Vec<RatePoint<f64>>,
    pub running_average: RatePoint<f64>,
    /// Counterfactual `r` queried before each slot was advanced.
    pub z_series: Vec<f64>,
    /// Implied estimates of `q` for slots `t >= 1`.
    pub theta_series: Vec<f64>,
}

impl RunRecord {
    /// Feasibility of every decision and consistency of the running average.
    pub fn check(&self) -> Result<()> {
        if self.decisions.len() != self.trace.horizon() {
            return Err(Error::Config("decision count differs from horizon".into()));
        }
        let mut sum = RatePoint::new_unchecked(0.0, 0.0);
        for (t, (x, &s)) in self.decisions.iter().zip(&self.trace.states).enumerate() {
            let ok = if s == 0 {
                x.x1 == 1.0 && x.x2 == 0.0
            } else {
                (0.0..=1.0).contains(&x.x1) && (x.x2 - (1.0 - x.x1 * x.x1)).abs() <= 1e-12
            };
            if !ok {
                return Err(Error::Config(format!("decision {t} = {x:?} is outside D({s})")));
            }
            sum = sum + *x;
        }
        let mean = sum * (1.0 / self.decisions.len() as f64);
        if (mean.x1 - self.running_average.x1).abs() > 1e-12 || (mean.x2 - self.running_average.x2).abs() > 1e-12 {
            return Err(Error::Config("running average differs from the mean of decisions".into()));
        }
        Ok(())
    }
}
