//! Sweeps over load × scheduler × traffic model × seed, and the CSV they produce.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::engine::{self, SimConfig};
use crate::error::{ConfigError, SimError};
use crate::metrics::{self, MetricsLedger};
use crate::sched::SchedulerKind;
use crate::traffic::TrafficModel;

pub const CSV_HEADER: &str = "model,scheduler,load,seed,sfc_fraction,measured_slots,cells_generated,cells_delivered,cells_dropped,avg_delay_slots,drop_rate,throughput";

/// Loads 0.5, 0.525, …, 1.0.
pub fn default_loads() -> Vec<f64> {
    (0..=20).map(|k| (500 + 25 * k) as f64 / 1000.0).collect()
}

pub fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub base: SimConfig,
    pub loads: Vec<f64>,
    pub schedulers: Vec<SchedulerKind>,
    pub models: Vec<TrafficModel>,
    pub seeds: Vec<u64>,
}

impl SweepPlan {
    pub fn new(base: SimConfig) -> Self {
        SweepPlan {
            loads: default_loads(),
            schedulers: SchedulerKind::ALL.to_vec(),
            models: vec![base.traffic.model],
            seeds: default_seeds(),
            base,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, empty) in [
            ("loads", self.loads.is_empty()),
            ("schedulers", self.schedulers.is_empty()),
            ("models", self.models.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return Err(ConfigError::invalid(key, "sweep list is empty"));
            }
        }
        if let Some(bad) = self.loads.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
            return Err(ConfigError::invalid(
                "loads",
                format!("{bad} not in (0, 1]"),
            ));
        }
        self.base.validate()
    }

    /// One configuration per sweep point, in output order.
    pub fn points(&self) -> Vec<SimConfig> {
        let mut models = self.models.clone();
        models.sort();
        models.dedup();
        let mut schedulers = self.schedulers.clone();
        schedulers.sort();
        schedulers.dedup();
        let mut loads = self.loads.clone();
        loads.sort_by(f64::total_cmp);
        loads.dedup();
        let mut seeds = self.seeds.clone();
        seeds.sort();
        seeds.dedup();

        let mut out = Vec::new();
        for &model in &models {
            for &scheduler in &schedulers {
                for &load in &loads {
                    for &seed in &seeds {
                        let mut c = self.base.clone().with_seed(seed);
                        c.scheduler = scheduler;
                        c.traffic.model = model;
                        c.traffic.load = load;
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

/// One CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: TrafficModel,
    pub scheduler: SchedulerKind,
    pub load: f64,
    pub seed: u64,
    pub sfc_fraction: f64,
    pub ledger: MetricsLedger,
    pub num_tports: usize,
}

impl SweepRow {
    pub fn new(config: &SimConfig, ledger: MetricsLedger) -> Self {
        SweepRow {
            model: config.traffic.model,
            scheduler: config.scheduler,
            load: config.traffic.load,
            seed: config.seed,
            sfc_fraction: config.traffic.sfc_fraction,
            ledger,
            num_tports: config.num_tports,
        }
    }

    pub fn avg_delay(&self) -> Option<f64> {
        metrics::average_delay(&self.ledger).ok()
    }

    pub fn drop_rate(&self) -> Option<f64> {
        metrics::drop_rate(&self.ledger).ok()
    }

    /// Mean cells per slot per egress TPort.
    pub fn throughput(&self) -> f64 {
        metrics::mean_throughput(&self.ledger, (0..self.num_tports).map(crate::model::PortId))
    }

    fn sort_key(&self) -> (TrafficModel, SchedulerKind, f64, u64) {
        (self.model, self.scheduler, self.load, self.seed)
    }

    pub fn write_csv(&self, out: &mut String) {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let l = &self.ledger;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.model,
            self.scheduler,
            self.load,
            self.seed,
            self.sfc_fraction,
            l.measured_slots,
            l.cells_generated,
            l.cells_delivered,
            l.cells_dropped,
            opt(self.avg_delay()),
            opt(self.drop_rate()),
            self.throughput(),
        );
    }
}

/// Run every sweep point on a pool of `jobs` workers (0 = one per core).
pub fn run_sweep(plan: &SweepPlan, jobs: usize) -> Result<Vec<SweepRow>, SimError> {
    plan.validate()?;
    let points = plan.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ConfigError::invalid("jobs", e.to_string()))?;
    let mut rows = pool.install(|| {
        points
            .par_iter()
            .map(|c| engine::run(c.clone()).map(|ledger| SweepRow::new(c, ledger)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    rows.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        (ka.0, ka.1)
            .cmp(&(kb.0, kb.1))
            .then(ka.2.total_cmp(&kb.2))
            .then(ka.3.cmp(&kb.3))
    });
    Ok(rows)
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        r.write_csv(&mut out);
    }
    out
}

/// Run the sweep and render it as CSV. Nothing is produced if any run fails.
pub fn run_experiment(plan: &SweepPlan, jobs: usize) -> Result<String, SimError> {
    run_sweep(plan, jobs).map(|rows| to_csv(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_loads_cover_half_to_full() {
        let l = default_loads();
        assert_eq!(l.len(), 21);
        assert_eq!(l[0], 0.5);
        assert_eq!(l[13], 0.825);
        assert_eq!(l[20], 1.0);
    }

    #[test]
    fn rejects_empty_and_out_of_range() {
        let mut plan = SweepPlan::new(SimConfig::crossbar(4));
        plan.loads = vec![];
        assert!(plan.validate().is_err());
        plan.loads = vec![0.0];
        assert!(plan.validate().unwrap_err().to_string().contains("loads"));
        plan.loads = vec![0.5];
        plan.seeds = vec![];
        assert!(plan.validate().unwrap_err().to_string().contains("seeds"));
    }

    #[test]
    fn points_are_the_cartesian_product() {
        let mut plan = SweepPlan::new(SimConfig::crossbar(4));
        plan.loads = vec![0.6, 0.5];
        plan.seeds = vec![3];
        let pts = plan.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0].traffic.load, 0.5);
        assert_eq!(pts[0].scheduler, SchedulerKind::Islip);
        assert_eq!(pts[5].scheduler, SchedulerKind::BscFirm);
        assert!(pts.iter().all(|p| p.seed == 3 && p.traffic.seed == 3));
    }
}
