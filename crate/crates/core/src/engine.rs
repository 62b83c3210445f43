//! The slot loop.
//!
//! Each slot runs, in order: arrivals → classification → ingress enqueue →
//! one scheduling decision → crossbar transfer → server release into the
//! FPort input-side VOQs → clock advance. Arrivals are enqueued before
//! scheduling, so a cell can cross the fabric in the slot it arrives. Cells
//! finished by a server are re-injected at the boundary into the next slot.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::{
    ChainDef, Classification, Classifier, Fib, FibEntry, NextHop, Placement, ServerDef,
};
use crate::error::{ConfigError, SimError};
use crate::metrics::MetricsLedger;
use crate::model::{Cell, EnqueueOutcome, PortId, PortLayout, Slot, SwitchState};
use crate::nfp::ServerState;
use crate::sched::SchedulerKind;
use crate::traffic::{flow_id, Arrival, TrafficGenerator, TrafficSpec};

const SCHED_STREAM: u64 = 2;
const NFP_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_tports: usize,
    pub num_fports: usize,
    pub voq_capacity: usize,
    pub iterations: usize,
    pub scheduler: SchedulerKind,
    pub traffic: TrafficSpec,
    pub chains: Vec<ChainDef>,
    pub servers: Vec<ServerDef>,
    pub warmup_slots: u64,
    pub measure_slots: u64,
    pub seed: u64,
}

impl SimConfig {
    /// 16 TPorts, 16 FPorts, 500-cell VOQs, 5 iterations and the bundled chain placement.
    pub fn standard() -> Self {
        crate::config::ConfigFile::default_config().sim_config()
    }

    /// Plain crossbar: `ports` TPorts, no servers, no chains.
    pub fn crossbar(ports: usize) -> Self {
        SimConfig {
            num_tports: ports,
            num_fports: 0,
            voq_capacity: 500,
            iterations: 5,
            scheduler: SchedulerKind::Islip,
            traffic: TrafficSpec {
                sfc_fraction: 0.0,
                ..TrafficSpec::default()
            },
            chains: Vec::new(),
            servers: Vec::new(),
            warmup_slots: 0,
            measure_slots: 1_000,
            seed: 1,
        }
    }

    /// Same configuration with every random stream keyed by `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.traffic.seed = seed;
        self
    }

    pub fn layout(&self) -> Result<PortLayout, ConfigError> {
        PortLayout::new(self.num_tports, self.num_fports)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let layout = self.layout()?;
        if self.voq_capacity == 0 {
            return Err(ConfigError::invalid("voq_capacity", "must be positive"));
        }
        if self.iterations == 0 {
            return Err(ConfigError::invalid("iterations", "must be at least 1"));
        }
        self.traffic.validate()?;
        if self.traffic.sfc_fraction > 0.0 && self.chains.is_empty() {
            return Err(ConfigError::invalid(
                "sfc_fraction",
                "is positive but no chains are configured",
            ));
        }
        let placement = Placement::new(&layout, self.servers.clone())?;
        for (c, chain) in self.chains.iter().enumerate() {
            placement.build_hops(chain, &format!("chains[{c}].functions"))?;
        }
        Ok(())
    }

    /// FIB covering every flow the traffic generator can emit: egress is
    /// the flow's destination host, and SFC flows carry their chain index.
    pub fn default_fib(&self) -> Fib {
        let h = self.num_tports;
        let mut fib = Fib::new();
        let chains = std::iter::once(None).chain((0..self.chains.len()).map(Some));
        for sfc_id in chains {
            for dest in 0..h {
                for src in 0..h {
                    fib.insert(
                        flow_id(h, src, dest, sfc_id),
                        FibEntry {
                            sfc_id,
                            next_hop: NextHop::Egress(PortId(dest)),
                        },
                    );
                }
            }
        }
        fib
    }
}

/// Counts for one slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotReport {
    pub slot: Slot,
    pub arrivals: usize,
    pub enqueues: usize,
    pub drops: usize,
    pub matches: usize,
    pub deliveries: usize,
}

/// Observer hook for tracing cells through the fabric.
pub trait Probe {
    fn transfer(&mut self, _slot: Slot, _cell: &Cell, _input: PortId, _output: PortId) {}
    fn delivered(&mut self, _slot: Slot, _cell: &Cell) {}
}

impl Probe for () {}

pub struct Simulation {
    config: SimConfig,
    state: SwitchState,
    servers: Vec<Option<ServerState>>,
    classifier: Classifier,
    traffic: TrafficGenerator,
    sched_rng: ChaCha8Rng,
    nfp_rng: ChaCha8Rng,
    next_cell_id: u64,
    arrivals: Vec<Arrival>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, ConfigError> {
        let fib = config.default_fib();
        Self::with_fib(config, fib)
    }

    pub fn with_fib(config: SimConfig, fib: Fib) -> Result<Self, ConfigError> {
        config.validate()?;
        let layout = config.layout()?;
        let placement = Placement::new(&layout, config.servers.clone())?;
        let classifier = Classifier::new(fib, &config.chains, &placement)?;
        let mut servers = vec![None; layout.num_fports];
        for def in placement.servers() {
            servers[def.fport - layout.num_tports] = Some(ServerState::from_def(def));
        }
        let traffic =
            TrafficGenerator::new(config.traffic, layout.num_tports, config.chains.len())?;
        let mut state = SwitchState::new(layout, config.voq_capacity)?;
        state.ledger.set_counting_from(config.warmup_slots);
        let stream = |id| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(id);
            rng
        };
        Ok(Simulation {
            sched_rng: stream(SCHED_STREAM),
            nfp_rng: stream(NFP_STREAM),
            config,
            state,
            servers,
            classifier,
            traffic,
            next_cell_id: 0,
            arrivals: Vec::new(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &SwitchState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut SwitchState {
        &mut self.state
    }

    pub fn ledger(&self) -> &MetricsLedger {
        &self.state.ledger
    }

    pub fn servers(&self) -> impl Iterator<Item = &ServerState> {
        self.servers.iter().flatten()
    }

    /// Inject one arrival at the current slot, outside the traffic generator.
    pub fn inject(&mut self, arrival: Arrival) -> Result<Option<EnqueueOutcome>, SimError> {
        let mut report = SlotReport::default();
        self.admit(arrival, &mut report)
    }

    pub fn step_slot(&mut self) -> Result<SlotReport, SimError> {
        self.step_slot_with(&mut ())
    }

    pub fn step_slot_with<P: Probe>(&mut self, probe: &mut P) -> Result<SlotReport, SimError> {
        let slot = self.state.clock;
        let mut report = SlotReport {
            slot,
            ..SlotReport::default()
        };

        let mut arrivals = std::mem::take(&mut self.arrivals);
        self.traffic.generate_into(slot, &mut arrivals);
        report.arrivals = arrivals.len();
        for a in arrivals.drain(..) {
            self.admit(a, &mut report)?;
        }
        self.arrivals = arrivals;

        let matching = self.state.schedule(
            self.config.scheduler,
            self.config.iterations,
            &mut self.sched_rng,
        );
        report.matches = matching.len();
        let layout = self.state.layout();
        for &(input, output) in matching.pairs() {
            let voq = self.state.voq(input, output);
            if let Some(cell) = voq.queue.front() {
                probe.transfer(slot, cell, input, output);
            }
        }
        for (cell, output) in self.state.transfer_matched(&matching, slot)? {
            if layout.is_tport(output) {
                if !cell.at_egress_hop() || cell.sfp.egress_tport != output {
                    return Err(SimError::Invariant {
                        slot,
                        what: format!(
                            "cell {} left through TPort {output} before finishing its path",
                            cell.id
                        ),
                        dump: format!("{cell:?}"),
                    });
                }
                probe.delivered(slot, &cell);
                self.state.ledger.record_delivery(&cell, output, slot);
                report.deliveries += 1;
            } else {
                let Some(server) = self.servers[output.0 - layout.num_tports].as_mut() else {
                    return Err(SimError::Invariant {
                        slot,
                        what: format!("cell {} switched to FPort {output} with no server", cell.id),
                        dump: format!("{cell:?}"),
                    });
                };
                server.ingest(cell, slot, &mut self.nfp_rng)?;
            }
        }

        let next = slot + 1;
        for server in self.servers.iter_mut().flatten() {
            for (_, outcome) in server.release_completed(&mut self.state, next)? {
                match outcome {
                    EnqueueOutcome::Accepted => report.enqueues += 1,
                    EnqueueOutcome::Dropped => report.drops += 1,
                }
            }
        }

        if self.state.ledger.in_window(slot) {
            self.state.ledger.measured_slots += 1;
        }
        self.state.clock = next;
        Ok(report)
    }

    fn admit(
        &mut self,
        arrival: Arrival,
        report: &mut SlotReport,
    ) -> Result<Option<EnqueueOutcome>, SimError> {
        let slot = self.state.clock;
        let counted = self.state.ledger.in_window(slot);
        if counted {
            self.state.ledger.cells_generated += 1;
        }
        let tag = match self.classifier.classify(&arrival) {
            Ok(Classification::Forward(tag)) => tag,
            Ok(Classification::Drop) => {
                if counted {
                    self.state.ledger.cells_filtered += 1;
                }
                return Ok(None);
            }
            Err(_) => {
                if counted {
                    self.state.ledger.cells_unclassified += 1;
                }
                return Ok(None);
            }
        };
        let cell = Cell::new(self.next_cell_id, arrival.flow_id, arrival.input, tag, slot);
        self.next_cell_id += 1;
        let output = cell.next_output();
        let outcome = self.state.enqueue_cell(arrival.input, output, cell, slot)?;
        match outcome {
            EnqueueOutcome::Accepted => report.enqueues += 1,
            EnqueueOutcome::Dropped => report.drops += 1,
        }
        Ok(Some(outcome))
    }

    /// Counted cells still inside the switch (VOQs and servers).
    pub fn resident_counted(&self) -> u64 {
        let ledger = &self.state.ledger;
        let queued = self
            .state
            .queued_cells()
            .filter(|c| ledger.counts(c))
            .count();
        let serving: usize = self
            .servers()
            .map(|s| s.in_service().filter(|c| ledger.counts(c)).count())
            .sum();
        (queued + serving) as u64
    }

    /// generated = delivered + dropped + filtered + unclassified + resident.
    pub fn check_conservation(&self) -> Result<(), SimError> {
        let l = &self.state.ledger;
        let resident = self.resident_counted();
        let accounted = l.cells_delivered
            + l.cells_dropped
            + l.cells_filtered
            + l.cells_unclassified
            + resident;
        if l.cells_generated != accounted {
            return Err(SimError::Invariant {
                slot: self.state.clock,
                what: format!(
                    "conservation: generated {} != delivered {} + dropped {} + filtered {} + unclassified {} + resident {}",
                    l.cells_generated,
                    l.cells_delivered,
                    l.cells_dropped,
                    l.cells_filtered,
                    l.cells_unclassified,
                    resident
                ),
                dump: self.state.dump(),
            });
        }
        Ok(())
    }

    /// Warm up, measure, and return the measurement-window ledger.
    pub fn run(mut self) -> Result<MetricsLedger, SimError> {
        let total = self.config.warmup_slots + self.config.measure_slots;
        for _ in 0..total {
            self.step_slot()?;
        }
        self.check_conservation()?;
        Ok(self.state.ledger)
    }
}

/// Build and run one simulation.
pub fn run(config: SimConfig) -> Result<MetricsLedger, SimError> {
    Simulation::new(config)?.run()
}
