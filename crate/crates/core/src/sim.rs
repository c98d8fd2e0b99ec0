//! Generator of the stationary M/G/1 marked departure process.
//!
//! The simulator never tracks the continuous-time queue. It runs the
//! embedded chain of system sizes left behind at departure epochs:
//!
//! ```text
//! n' = n + A - 1          t' = t + S        if n > 0
//! n' = A                  t' = t + I + S    if n = 0
//! ```
//!
//! where `S ~ G`, `A | S ~ Poisson(lambda S)` and the idle remainder
//! `I ~ Exp(lambda)`. Each of the three sources draws from its own ChaCha
//! stream derived from the single path seed.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::error::{Error, Result};
use crate::service::ServiceDist;

pub const DEFAULT_WARMUP: usize = 1_000;

const SERVICE_STREAM: u64 = 0;
const ARRIVAL_STREAM: u64 = 1;
const IDLE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub lambda: f64,
    pub service: ServiceDist,
    /// Departures to record.
    pub n: usize,
    /// Departures discarded before recording starts.
    pub warmup: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(lambda: f64, service: ServiceDist, n: usize, seed: u64) -> Self {
        Self { lambda, service, n, warmup: DEFAULT_WARMUP, seed }
    }

    pub fn with_warmup(mut self, warmup: usize) -> Self {
        self.warmup = warmup;
        self
    }

    /// Traffic intensity `rho = lambda E[S]`.
    pub fn rho(&self) -> f64 {
        self.lambda * self.service.mean()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("arrival rate must be positive, got {}", self.lambda)));
        }
        self.service.validate()?;
        if self.n == 0 {
            return Err(Error::InvalidParameter("number of departures must be at least 1".into()));
        }
        let rho = self.rho();
        if rho >= 1.0 {
            return Err(Error::Unstable { rho });
        }
        Ok(())
    }
}

/// One observation: departure epoch and the system size left behind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkedDeparture {
    pub t: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeparturePath {
    pub records: Vec<MarkedDeparture>,
    pub config_echo: SimConfig,
}

impl DeparturePath {
    pub fn marks(&self) -> Vec<u64> {
        marks_of(&self.records)
    }

    pub fn interdeparture_times(&self) -> Vec<f64> {
        interdeparture_times(&self.records)
    }

    pub fn to_csv(&self) -> String {
        departures_to_csv(&self.records)
    }
}

pub fn marks_of(records: &[MarkedDeparture]) -> Vec<u64> {
    records.iter().map(|r| r.n).collect()
}

pub fn interdeparture_times(records: &[MarkedDeparture]) -> Vec<f64> {
    records.windows(2).map(|w| w[1].t - w[0].t).collect()
}

/// Independent random sources of one path.
#[derive(Debug, Clone)]
pub struct SimStreams {
    service: ChaCha8Rng,
    arrivals: ChaCha8Rng,
    idle: ChaCha8Rng,
}

impl SimStreams {
    pub fn from_seed(seed: u64) -> Self {
        let stream = |id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self { service: stream(SERVICE_STREAM), arrivals: stream(ARRIVAL_STREAM), idle: stream(IDLE_STREAM) }
    }
}

/// State of the embedded chain at a departure epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainState {
    pub n: u64,
    pub t: f64,
}

/// Draws the number of arrivals `A_S` during a service of length `service_time`.
pub fn sample_arrivals_during_service<R: rand::Rng + ?Sized>(service_time: f64, lambda: f64, rng: &mut R) -> u64 {
    let mean = lambda * service_time;
    if !(mean > 0.0) {
        return 0;
    }
    // Poisson::new rejects means that are not finite and positive; both are
    // guaranteed by the validated configuration.
    Poisson::new(mean).expect("positive finite Poisson mean").sample(rng) as u64
}

/// Applies the embedded-chain recursion for given draws. `idle` is only
/// consumed when the departing customer left the system empty.
pub fn embedded_transition(state: ChainState, service_time: f64, arrivals: u64, idle: f64) -> ChainState {
    if state.n == 0 {
        ChainState { n: arrivals, t: state.t + idle + service_time }
    } else {
        ChainState { n: state.n + arrivals - 1, t: state.t + service_time }
    }
}

/// Advances the embedded chain by one departure.
pub fn embedded_step(state: ChainState, lambda: f64, service: &ServiceDist, streams: &mut SimStreams) -> ChainState {
    let s = service.sample(&mut streams.service);
    let a = sample_arrivals_during_service(s, lambda, &mut streams.arrivals);
    let idle =
        if state.n == 0 { Exp::new(lambda).expect("validated arrival rate").sample(&mut streams.idle) } else { 0.0 };
    embedded_transition(state, s, a, idle)
}

/// Simulates `config.n` recorded departures after discarding `config.warmup`,
/// starting from an empty system at time zero.
pub fn simulate_path(config: &SimConfig) -> Result<DeparturePath> {
    config.validate()?;
    let mut streams = SimStreams::from_seed(config.seed);
    let mut state = ChainState { n: 0, t: 0.0 };
    for _ in 0..config.warmup {
        state = embedded_step(state, config.lambda, &config.service, &mut streams);
    }
    let mut records = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        state = embedded_step(state, config.lambda, &config.service, &mut streams);
        records.push(MarkedDeparture { t: state.t, n: state.n });
    }
    Ok(DeparturePath { records, config_echo: config.clone() })
}

/// Renders the departure file: header `t,n` then one `t,n` line per record.
/// `f64` Display is the shortest representation that round-trips.
pub fn departures_to_csv(records: &[MarkedDeparture]) -> String {
    let mut out = String::with_capacity(24 * records.len() + 4);
    out.push_str("t,n\n");
    for r in records {
        let _ = writeln!(out, "{},{}", r.t, r.n);
    }
    out
}

/// Parses and validates a departure file. An empty file or a bare header
/// yields no records.
pub fn parse_departures(text: &str) -> Result<Vec<MarkedDeparture>> {
    let mut lines = text.lines().enumerate();
    let mut records: Vec<MarkedDeparture> = Vec::new();
    match lines.next() {
        None => return Ok(records),
        Some((_, header)) if header.trim() == "t,n" => {}
        Some((_, header)) => {
            return Err(Error::Parse { line: 1, message: format!("expected header \"t,n\", found {header:?}") })
        }
    }
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (t, n) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse { line: line_no, message: format!("expected \"t,n\", found {line:?}") })?;
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line: line_no, message: format!("bad departure time {t:?}") })?;
        let n: u64 =
            n.trim().parse().map_err(|_| Error::Parse { line: line_no, message: format!("bad system size {n:?}") })?;
        if !t.is_finite() {
            return Err(Error::CorruptData(format!("non-finite departure time on line {line_no}")));
        }
        if let Some(prev) = records.last() {
            if t <= prev.t {
                return Err(Error::CorruptData(format!(
                    "departure times not strictly increasing on line {line_no}: {} then {t}",
                    prev.t
                )));
            }
            if prev.n > n + 1 {
                return Err(Error::NotDownSkipFree { position: records.len() - 1, from: prev.n, to: n });
            }
        }
        records.push(MarkedDeparture { t, n });
    }
    Ok(records)
}
