//! Per-slot arrival generation for the Uniform-Uniform, Uniform-Hotspot and
//! Burst-Burst traffic models.
//!
//! `load` is the probability (long-run rate) of one cell per slot at each
//! input TPort. Each arrival is either direct-switched or needs a service
//! chain, with probability `sfc_fraction` for the latter. Flow ids encode
//! `(chain, destination, source)` so the FIB can be built ahead of time; see
//! [`flow_id`].

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::{PortId, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TrafficModel {
    #[serde(rename = "uniform-uniform")]
    UniformUniform,
    #[serde(rename = "uniform-hotspot")]
    UniformHotspot,
    #[serde(rename = "burst-burst")]
    BurstBurst,
}

impl TrafficModel {
    pub const ALL: [TrafficModel; 3] = [
        TrafficModel::UniformUniform,
        TrafficModel::UniformHotspot,
        TrafficModel::BurstBurst,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrafficModel::UniformUniform => "uniform-uniform",
            TrafficModel::UniformHotspot => "uniform-hotspot",
            TrafficModel::BurstBurst => "burst-burst",
        }
    }
}

impl fmt::Display for TrafficModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrafficModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TrafficModel::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| {
                format!(
                    "unknown traffic model `{s}` (expected uniform-uniform, uniform-hotspot or burst-burst)"
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    pub model: TrafficModel,
    pub load: f64,
    pub sfc_fraction: f64,
    /// Mean ON-period length in cells (Burst-Burst only).
    pub burst_mean_on: f64,
    pub seed: u64,
}

impl Default for TrafficSpec {
    fn default() -> Self {
        TrafficSpec {
            model: TrafficModel::UniformUniform,
            load: 0.5,
            sfc_fraction: 0.5,
            burst_mean_on: 16.0,
            seed: 1,
        }
    }
}

impl TrafficSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.load) {
            return Err(ConfigError::invalid(
                "load",
                format!("{} not in [0, 1]", self.load),
            ));
        }
        if !(0.0..=1.0).contains(&self.sfc_fraction) {
            return Err(ConfigError::invalid(
                "sfc_fraction",
                format!("{} not in [0, 1]", self.sfc_fraction),
            ));
        }
        // `!(x > 1)` also rejects NaN.
        if !(self.burst_mean_on > 1.0) || !self.burst_mean_on.is_finite() {
            return Err(ConfigError::invalid(
                "burst_mean_on",
                format!("{} must be a finite value > 1", self.burst_mean_on),
            ));
        }
        Ok(())
    }

    /// Mean OFF-period length that makes the ON/OFF source's long-run rate equal `load`.
    pub fn burst_mean_off(&self) -> Option<f64> {
        (self.load > 0.0).then(|| self.burst_mean_on * (1.0 - self.load) / self.load)
    }
}

/// One cell entering the switch at an input TPort.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub input: PortId,
    pub dest_host: usize,
    pub flow_id: u64,
    pub needs_sfc: bool,
    pub sfc_id: Option<usize>,
}

/// Synthetic flow identifier for `(source, destination, chain)`.
#[inline]
pub fn flow_id(num_tports: usize, src: usize, dest: usize, sfc_id: Option<usize>) -> u64 {
    let h = num_tports as u64;
    let c = sfc_id.map_or(0, |c| c as u64 + 1);
    (c * h + dest as u64) * h + src as u64
}

/// Number of distinct flow ids for a fabric with `num_chains` chains.
pub fn flow_id_space(num_tports: usize, num_chains: usize) -> u64 {
    let h = num_tports as u64;
    (num_chains as u64 + 1) * h * h
}

#[derive(Debug, Clone, Copy)]
struct Burst {
    /// Cells left in the current ON period; 0 while OFF.
    on_left: u64,
    /// Silent slots left before the next burst.
    off_left: u64,
    dest_host: usize,
    sfc_id: Option<usize>,
    started: u64,
}

/// Stateful arrival source for one run.
#[derive(Debug, Clone)]
pub struct TrafficGenerator {
    spec: TrafficSpec,
    num_tports: usize,
    num_chains: usize,
    rng: ChaCha8Rng,
    bursts: Vec<Burst>,
    on_len: Option<Geometric>,
    off_len: Option<Geometric>,
}

/// Stream id of the traffic generator's ChaCha stream.
pub const TRAFFIC_STREAM: u64 = 1;

impl TrafficGenerator {
    pub fn new(
        spec: TrafficSpec,
        num_tports: usize,
        num_chains: usize,
    ) -> Result<Self, ConfigError> {
        spec.validate()?;
        if num_tports == 0 {
            return Err(ConfigError::invalid("num_tports", "must be positive"));
        }
        if num_chains == 0 && spec.sfc_fraction > 0.0 {
            return Err(ConfigError::invalid(
                "sfc_fraction",
                "is positive but no chains are configured",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(TRAFFIC_STREAM);
        let mut gen = TrafficGenerator {
            spec,
            num_tports,
            num_chains,
            rng,
            bursts: Vec::new(),
            on_len: None,
            off_len: None,
        };
        if spec.model == TrafficModel::BurstBurst {
            gen.init_bursts()?;
        }
        Ok(gen)
    }

    pub fn spec(&self) -> &TrafficSpec {
        &self.spec
    }

    fn init_bursts(&mut self) -> Result<(), ConfigError> {
        let Some(mean_off) = self.spec.burst_mean_off() else {
            // load 0: every source stays OFF forever.
            self.bursts = vec![
                Burst {
                    on_left: 0,
                    off_left: u64::MAX,
                    dest_host: 0,
                    sfc_id: None,
                    started: 0,
                };
                self.num_tports
            ];
            return Ok(());
        };
        if !(mean_off >= 0.0) {
            return Err(ConfigError::invalid(
                "load",
                "admits no nonnegative mean OFF period for this burst_mean_on",
            ));
        }
        let bad = |e: rand_distr::GeoError| ConfigError::invalid("burst_mean_on", e.to_string());
        self.on_len = Some(Geometric::new(1.0 / self.spec.burst_mean_on).map_err(bad)?);
        self.off_len = Some(Geometric::new(1.0 / (1.0 + mean_off)).map_err(bad)?);
        let off = self.off_len.unwrap();
        self.bursts = (0..self.num_tports)
            .map(|_| Burst {
                on_left: 0,
                off_left: off.sample(&mut self.rng),
                dest_host: 0,
                sfc_id: None,
                started: 0,
            })
            .collect();
        Ok(())
    }

    /// Number of ON periods started so far at `input`.
    pub fn bursts_started(&self, input: usize) -> u64 {
        self.bursts.get(input).map_or(0, |b| b.started)
    }

    /// Arrivals for `slot`, in input order.
    pub fn generate(&mut self, slot: Slot) -> Vec<Arrival> {
        let mut out = Vec::new();
        self.generate_into(slot, &mut out);
        out
    }

    pub fn generate_into(&mut self, slot: Slot, out: &mut Vec<Arrival>) {
        out.clear();
        match self.spec.model {
            TrafficModel::UniformUniform => self.gen_uniform_uniform(slot, out),
            TrafficModel::UniformHotspot => self.gen_uniform_hotspot(slot, out),
            TrafficModel::BurstBurst => self.gen_burst_burst(slot, out),
        }
    }

    fn draw_sfc(&mut self) -> Option<usize> {
        if self.num_chains > 0 && self.rng.random_bool(self.spec.sfc_fraction) {
            Some(self.rng.random_range(0..self.num_chains))
        } else {
            None
        }
    }

    fn arrival(&self, input: usize, dest_host: usize, sfc_id: Option<usize>) -> Arrival {
        Arrival {
            input: PortId(input),
            dest_host,
            flow_id: flow_id(self.num_tports, input, dest_host, sfc_id),
            needs_sfc: sfc_id.is_some(),
            sfc_id,
        }
    }

    /// Bernoulli arrivals with uniform destinations.
    pub fn gen_uniform_uniform(&mut self, _slot: Slot, out: &mut Vec<Arrival>) {
        let h = self.num_tports;
        for i in 0..h {
            if !self.rng.random_bool(self.spec.load) {
                continue;
            }
            let sfc = self.draw_sfc();
            let dest = self.rng.random_range(0..h);
            out.push(self.arrival(i, dest, sfc));
        }
    }

    /// Bernoulli arrivals; direct flows send half their cells to host `(i + H/2) mod H`.
    pub fn gen_uniform_hotspot(&mut self, _slot: Slot, out: &mut Vec<Arrival>) {
        let h = self.num_tports;
        for i in 0..h {
            if !self.rng.random_bool(self.spec.load) {
                continue;
            }
            let sfc = self.draw_sfc();
            let dest = if sfc.is_some() {
                self.rng.random_range(0..h)
            } else {
                self.hotspot_dest(i)
            };
            out.push(self.arrival(i, dest, sfc));
        }
    }

    fn hotspot_dest(&mut self, input: usize) -> usize {
        let h = self.num_tports;
        let hot = hotspot_host(input, h);
        if h == 1 || self.rng.random_bool(0.5) {
            return hot;
        }
        let r = self.rng.random_range(0..h - 1);
        if r >= hot {
            r + 1
        } else {
            r
        }
    }

    /// ON/OFF sources: one cell per ON slot, all cells of a burst to one destination.
    pub fn gen_burst_burst(&mut self, _slot: Slot, out: &mut Vec<Arrival>) {
        let (Some(on_len), Some(off_len)) = (self.on_len, self.off_len) else {
            return;
        };
        let h = self.num_tports;
        for i in 0..h {
            if self.bursts[i].on_left == 0 {
                if self.bursts[i].off_left > 0 {
                    self.bursts[i].off_left -= 1;
                    continue;
                }
                let len = 1 + on_len.sample(&mut self.rng);
                let sfc_id = self.draw_sfc();
                let dest_host = self.rng.random_range(0..h);
                let b = &mut self.bursts[i];
                b.on_left = len;
                b.dest_host = dest_host;
                b.sfc_id = sfc_id;
                b.started += 1;
            }
            let b = self.bursts[i];
            out.push(self.arrival(i, b.dest_host, b.sfc_id));
            self.bursts[i].on_left -= 1;
            if self.bursts[i].on_left == 0 {
                self.bursts[i].off_left = off_len.sample(&mut self.rng);
            }
        }
    }
}

/// Hotspot destination of input `i` among `h` hosts.
#[inline]
pub fn hotspot_host(i: usize, h: usize) -> usize {
    (i + h / 2) % h
}
