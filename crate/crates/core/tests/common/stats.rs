//! Generator statistics over 10^6 slots.

use rpsa::traffic::{hotspot_host, TrafficGenerator};
use rpsa::{TrafficModel, TrafficSpec};

pub const SLOTS: u64 = 1_000_000;

/// One named check: observed value, target, tolerance.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub target: f64,
    pub tol: f64,
}

impl Check {
    fn new(name: impl Into<String>, observed: f64, target: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            observed,
            target,
            tol,
        }
    }

    pub fn ok(&self) -> bool {
        (self.observed - self.target).abs() <= self.tol
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {:.5} (want {:.5} ± {})",
            self.name, self.observed, self.target, self.tol
        )
    }
}

/// Uniform, load 0.5, 16 inputs: per-input rate and per-destination share.
pub fn uniform() -> Vec<Check> {
    let h = 16;
    let spec = TrafficSpec {
        model: TrafficModel::UniformUniform,
        load: 0.5,
        sfc_fraction: 0.5,
        seed: 101,
        ..TrafficSpec::default()
    };
    let mut gen = TrafficGenerator::new(spec, h, 4).unwrap();
    let mut per_input = vec![0u64; h];
    let mut per_dest = vec![0u64; h];
    let mut sfc = 0u64;
    for slot in 0..SLOTS {
        for a in gen.generate(slot) {
            per_input[a.input.0] += 1;
            per_dest[a.dest_host] += 1;
            sfc += a.needs_sfc as u64;
        }
    }
    let total: u64 = per_input.iter().sum();
    let mut out = Vec::new();
    let worst_rate = per_input
        .iter()
        .map(|&c| c as f64 / SLOTS as f64)
        .max_by(|a, b| (a - 0.5).abs().total_cmp(&(b - 0.5).abs()))
        .unwrap();
    out.push(Check::new(
        "uniform per-input rate (worst input)",
        worst_rate,
        0.5,
        0.005,
    ));
    let worst_dest = per_dest
        .iter()
        .map(|&c| c as f64 / total as f64)
        .max_by(|a, b| (a - 1.0 / 16.0).abs().total_cmp(&(b - 1.0 / 16.0).abs()))
        .unwrap();
    out.push(Check::new(
        "uniform destination share (worst host)",
        worst_dest,
        1.0 / 16.0,
        0.005,
    ));
    out.push(Check::new(
        "uniform SFC share",
        sfc as f64 / total as f64,
        0.5,
        0.01,
    ));
    out
}

/// Hotspot, direct flows only: input 3 sends half its cells to host 11.
pub fn hotspot() -> Vec<Check> {
    let h = 16;
    let spec = TrafficSpec {
        model: TrafficModel::UniformHotspot,
        load: 1.0,
        sfc_fraction: 0.0,
        seed: 202,
        ..TrafficSpec::default()
    };
    let mut gen = TrafficGenerator::new(spec, h, 0).unwrap();
    let mut dest = vec![0u64; h];
    let mut n = 0u64;
    for slot in 0..SLOTS {
        for a in gen.generate(slot).into_iter().filter(|a| a.input.0 == 3) {
            dest[a.dest_host] += 1;
            n += 1;
        }
    }
    let hot = hotspot_host(3, h);
    assert_eq!(hot, 11);
    let share = |c: u64| c as f64 / n as f64;
    let target = 0.5 / 15.0;
    let worst_other = (0..h)
        .filter(|&d| d != hot)
        .map(|d| share(dest[d]))
        .max_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .unwrap();
    vec![
        Check::new("hotspot arrivals at input 3", n as f64, SLOTS as f64, 0.0),
        Check::new("hotspot share to host 11", share(dest[hot]), 0.5, 0.01),
        Check::new(
            "hotspot share to any other host (worst)",
            worst_other,
            target,
            0.005,
        ),
    ]
}

/// Burst, load 0.6, mean ON 16: rate, mean ON length, one destination per burst.
pub fn burst() -> Vec<Check> {
    let h = 16;
    let spec = TrafficSpec {
        model: TrafficModel::BurstBurst,
        load: 0.6,
        burst_mean_on: 16.0,
        sfc_fraction: 0.5,
        seed: 303,
    };
    let mut gen = TrafficGenerator::new(spec, h, 4).unwrap();
    let mut cells = 0u64;
    let mut mixed = 0u64;
    let mut current: Vec<Option<(u64, usize, Option<usize>)>> = vec![None; h];
    for slot in 0..SLOTS {
        for a in gen.generate(slot) {
            cells += 1;
            let i = a.input.0;
            let burst = gen.bursts_started(i);
            match current[i] {
                Some((b, d, s)) if b == burst && (d != a.dest_host || s != a.sfc_id) => mixed += 1,
                _ => {}
            }
            current[i] = Some((burst, a.dest_host, a.sfc_id));
        }
    }
    let bursts: u64 = (0..h).map(|i| gen.bursts_started(i)).sum();
    vec![
        Check::new(
            "burst per-input rate",
            cells as f64 / (SLOTS * h as u64) as f64,
            0.6,
            0.01,
        ),
        Check::new(
            "burst mean ON length",
            cells as f64 / bursts as f64,
            16.0,
            0.5,
        ),
        Check::new(
            "cells leaving their burst's destination",
            mixed as f64,
            0.0,
            0.0,
        ),
    ]
}

pub fn all() -> Vec<Check> {
    let mut v = uniform();
    v.extend(hotspot());
    v.extend(burst());
    v
}
