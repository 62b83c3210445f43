//! Sectioned configuration file (TOML) mirroring [`SimConfig`].
//!
//! ```toml
//! [fabric]
//! num_tports = 16
//! num_fports = 16
//! voq_capacity = 500
//! iterations = 5
//! scheduler = "bsc-firm"
//!
//! [traffic]
//! model = "uniform-uniform"
//! load = 0.9
//! sfc_fraction = 0.5
//! burst_mean_on = 48.0
//!
//! [run]
//! warmup_slots = 20000
//! measure_slots = 200000
//! seed = 1
//!
//! [sweep]            # optional; CLI flags override
//! loads = [0.8, 0.9]
//! schedulers = ["islip", "firm", "bsc-firm"]
//! models = ["uniform-hotspot"]
//! seeds = [1, 2, 3, 4, 5]
//!
//! [[chains]]
//! name = "sfc-0"
//! functions = ["nat-0", "fw-0", "ids-0", "vpn-0"]
//!
//! [[servers]]
//! fport = 16
//! functions = ["nat-0", "fw-0"]
//!
//! [[servers]]
//! fport = 17
//! functions = ["ids-0", "vpn-0"]
//! ```

use serde::{Deserialize, Serialize};

use crate::classifier::{ChainDef, ServerDef};
use crate::engine::SimConfig;
use crate::error::ConfigError;
use crate::sched::SchedulerKind;
use crate::traffic::{TrafficModel, TrafficSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FabricSection {
    pub num_tports: usize,
    pub num_fports: usize,
    pub voq_capacity: usize,
    pub iterations: usize,
    pub scheduler: SchedulerKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    pub model: TrafficModel,
    pub load: f64,
    pub sfc_fraction: f64,
    pub burst_mean_on: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub warmup_slots: u64,
    pub measure_slots: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub loads: Option<Vec<f64>>,
    pub schedulers: Option<Vec<SchedulerKind>>,
    pub models: Option<Vec<TrafficModel>>,
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub fabric: FabricSection,
    pub traffic: TrafficSection,
    pub run: RunSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub chains: Vec<ChainDef>,
    #[serde(default)]
    pub servers: Vec<ServerDef>,
}

/// Functions of the bundled chain, in order.
pub const DEFAULT_CHAIN: [&str; 4] = ["nat", "fw", "ids", "vpn"];

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ConfigFile =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.sim_config().validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// 32-port fabric split 16/16, 500-cell VOQs, 5 iterations, 20k warmup
    /// and 200k measured slots, 48-cell mean bursts.
    ///
    /// Eight copies of the NAT→FW→IDS→VPN chain, each split NAT,FW | IDS,VPN
    /// across a server pair: copy k runs on FPorts 16+2k and 17+2k. With SFC
    /// flows spread evenly over the copies every server sees the same load.
    pub fn default_config() -> Self {
        let mut chains = Vec::new();
        let mut servers = Vec::new();
        let named =
            |k: usize, fs: &[&str]| fs.iter().map(|f| format!("{f}-{k}")).collect::<Vec<_>>();
        for k in 0..8 {
            chains.push(ChainDef {
                name: format!("sfc-{k}"),
                functions: named(k, &DEFAULT_CHAIN),
            });
            servers.push(ServerDef {
                fport: 16 + 2 * k,
                functions: named(k, &DEFAULT_CHAIN[..2]),
            });
            servers.push(ServerDef {
                fport: 17 + 2 * k,
                functions: named(k, &DEFAULT_CHAIN[2..]),
            });
        }
        ConfigFile {
            fabric: FabricSection {
                num_tports: 16,
                num_fports: 16,
                voq_capacity: 500,
                iterations: 5,
                scheduler: SchedulerKind::BscFirm,
            },
            traffic: TrafficSection {
                model: TrafficModel::UniformUniform,
                load: 0.5,
                sfc_fraction: 0.5,
                burst_mean_on: 48.0,
            },
            run: RunSection {
                warmup_slots: 20_000,
                measure_slots: 200_000,
                seed: 1,
            },
            sweep: SweepSection::default(),
            chains,
            servers,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            num_tports: self.fabric.num_tports,
            num_fports: self.fabric.num_fports,
            voq_capacity: self.fabric.voq_capacity,
            iterations: self.fabric.iterations,
            scheduler: self.fabric.scheduler,
            traffic: TrafficSpec {
                model: self.traffic.model,
                load: self.traffic.load,
                sfc_fraction: self.traffic.sfc_fraction,
                burst_mean_on: self.traffic.burst_mean_on,
                seed: self.run.seed,
            },
            chains: self.chains.clone(),
            servers: self.servers.clone(),
            warmup_slots: self.run.warmup_slots,
            measure_slots: self.run.measure_slots,
            seed: self.run.seed,
        }
    }
}
