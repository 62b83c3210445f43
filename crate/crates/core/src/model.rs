//! Ports, cells, virtual output queues and the switch state advanced once per slot.

use std::collections::VecDeque;
use std::fmt;

use crate::classifier::SfpTag;
use crate::error::{ConfigError, SimError};
use crate::metrics::MetricsLedger;
use crate::sched::{self, Matching, Pointers, ScKey, SchedulerKind, VoqView};

/// Discrete time, counted in cell slots.
pub type Slot = u64;

/// Every cell carries the same payload size.
pub const CELL_SIZE_BYTES: u32 = 64;

/// Largest fabric the bitmask schedulers support.
pub const MAX_PORTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId(pub usize);

impl PortId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortKind {
    /// Attached to a line card; carries user traffic in and out.
    Transport,
    /// Attached to a network-function server.
    Function,
}

/// Index partition of the fabric: transport ports first, then function ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortLayout {
    pub num_tports: usize,
    pub num_fports: usize,
}

impl PortLayout {
    pub fn new(num_tports: usize, num_fports: usize) -> Result<Self, ConfigError> {
        if num_tports == 0 {
            return Err(ConfigError::invalid("num_tports", "must be positive"));
        }
        if num_tports + num_fports > MAX_PORTS {
            return Err(ConfigError::invalid(
                "num_fports",
                format!(
                    "fabric of {} ports exceeds the supported maximum of {MAX_PORTS}",
                    num_tports + num_fports
                ),
            ));
        }
        Ok(PortLayout {
            num_tports,
            num_fports,
        })
    }

    #[inline]
    pub fn ports(&self) -> usize {
        self.num_tports + self.num_fports
    }

    pub fn kind(&self, port: PortId) -> Option<PortKind> {
        match port.0 {
            p if p < self.num_tports => Some(PortKind::Transport),
            p if p < self.ports() => Some(PortKind::Function),
            _ => None,
        }
    }

    #[inline]
    pub fn is_tport(&self, port: PortId) -> bool {
        port.0 < self.num_tports
    }

    #[inline]
    pub fn is_fport(&self, port: PortId) -> bool {
        port.0 >= self.num_tports && port.0 < self.ports()
    }

    pub fn tports(&self) -> impl Iterator<Item = PortId> {
        (0..self.num_tports).map(PortId)
    }

    pub fn fports(&self) -> impl Iterator<Item = PortId> {
        (self.num_tports..self.ports()).map(PortId)
    }

    fn check(&self, port: PortId, key: &str) -> Result<(), ConfigError> {
        if port.0 < self.ports() {
            Ok(())
        } else {
            Err(ConfigError::invalid(
                key,
                format!("port {} outside fabric of {} ports", port, self.ports()),
            ))
        }
    }
}

/// Fixed-size unit switched through the fabric.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: u64,
    pub flow_id: u64,
    pub src_tport: PortId,
    pub sfp: SfpTag,
    /// Index of the next hop to visit; `sfp.hops.len()` means egress is next.
    pub hop_cursor: usize,
    pub created_slot: Slot,
    pub enqueued_slot: Slot,
    /// Total slots spent waiting in VOQs so far.
    pub queued_slots_total: u64,
}

impl Cell {
    pub fn new(id: u64, flow_id: u64, src_tport: PortId, sfp: SfpTag, created_slot: Slot) -> Self {
        Cell {
            id,
            flow_id,
            src_tport,
            sfp,
            hop_cursor: 0,
            created_slot,
            enqueued_slot: created_slot,
            queued_slots_total: 0,
        }
    }

    #[inline]
    pub fn size_bytes(&self) -> u32 {
        CELL_SIZE_BYTES
    }

    /// Fabric output the cell must be switched to next.
    pub fn next_output(&self) -> PortId {
        match self.sfp.hops.get(self.hop_cursor) {
            Some(hop) => hop.fport,
            None => self.sfp.egress_tport,
        }
    }

    #[inline]
    pub fn at_egress_hop(&self) -> bool {
        self.hop_cursor >= self.sfp.hops.len()
    }
}

#[derive(Debug, Clone)]
pub struct VoqState {
    pub input: PortId,
    pub output: PortId,
    pub queue: VecDeque<Cell>,
    /// Slot at which this VOQ last sent a cell; 0 before the first service.
    pub last_scheduled_slot: Slot,
}

impl VoqState {
    #[inline]
    pub fn len(&self) -> usize {
        self.queue.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    Dropped,
}

/// VOQ fabric, arbitration pointers and the run's ledger.
#[derive(Debug, Clone)]
pub struct SwitchState {
    layout: PortLayout,
    capacity: usize,
    pub clock: Slot,
    voqs: Vec<VoqState>,
    /// Bit `j` of entry `i` is set iff VOQ(i, j) is non-empty.
    occupancy: Vec<u64>,
    pub pointers: Pointers,
    pub ledger: MetricsLedger,
}

impl SwitchState {
    pub fn new(layout: PortLayout, capacity: usize) -> Result<Self, ConfigError> {
        if capacity == 0 {
            return Err(ConfigError::invalid("voq_capacity", "must be positive"));
        }
        let n = layout.ports();
        let voqs = (0..n * n)
            .map(|k| VoqState {
                input: PortId(k / n),
                output: PortId(k % n),
                queue: VecDeque::new(),
                last_scheduled_slot: 0,
            })
            .collect();
        Ok(SwitchState {
            layout,
            capacity,
            clock: 0,
            voqs,
            occupancy: vec![0; n],
            pointers: Pointers::new(n),
            ledger: MetricsLedger::new(n),
        })
    }

    #[inline]
    pub fn layout(&self) -> PortLayout {
        self.layout
    }

    #[inline]
    pub fn ports(&self) -> usize {
        self.layout.ports()
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn voq(&self, input: PortId, output: PortId) -> &VoqState {
        &self.voqs[input.0 * self.ports() + output.0]
    }

    pub fn voqs(&self) -> impl Iterator<Item = &VoqState> {
        self.voqs.iter()
    }

    /// Append `cell` to VOQ(input, output), or drop it when the VOQ is full.
    pub fn enqueue_cell(
        &mut self,
        input: PortId,
        output: PortId,
        mut cell: Cell,
        slot: Slot,
    ) -> Result<EnqueueOutcome, ConfigError> {
        self.layout.check(input, "input")?;
        self.layout.check(output, "output")?;
        let n = self.ports();
        let k = input.0 * n + output.0;
        let counted = self.ledger.counts(&cell);
        if self.voqs[k].len() >= self.capacity {
            if counted {
                self.ledger.record_drop(k);
            }
            return Ok(EnqueueOutcome::Dropped);
        }
        cell.enqueued_slot = slot;
        self.voqs[k].queue.push_back(cell);
        self.occupancy[input.0] |= 1 << output.0;
        if counted {
            self.ledger.cells_enqueued += 1;
        }
        Ok(EnqueueOutcome::Accepted)
    }

    /// Move the head cell of every matched VOQ across the crossbar.
    pub fn transfer_matched(
        &mut self,
        matching: &Matching,
        slot: Slot,
    ) -> Result<Vec<(Cell, PortId)>, SimError> {
        let n = self.ports();
        let mut out = Vec::with_capacity(matching.len());
        for &(input, output) in matching.pairs() {
            let k = input.0 * n + output.0;
            let voq = &mut self.voqs[k];
            let Some(mut cell) = voq.queue.pop_front() else {
                return Err(SimError::Invariant {
                    slot,
                    what: format!("scheduler matched empty VOQ({input},{output})"),
                    dump: self.dump(),
                });
            };
            cell.queued_slots_total += slot - cell.enqueued_slot;
            voq.last_scheduled_slot = slot;
            if voq.queue.is_empty() {
                self.occupancy[input.0] &= !(1 << output.0);
            }
            out.push((cell, output));
        }
        Ok(out)
    }

    /// Cells currently queued in the fabric.
    pub fn queued_cells(&self) -> impl Iterator<Item = &Cell> {
        self.voqs.iter().flat_map(|v| v.queue.iter())
    }

    pub fn total_queued(&self) -> usize {
        self.voqs.iter().map(VoqState::len).sum()
    }

    /// Compact summary of the fabric for invariant-violation reports.
    pub fn dump(&self) -> String {
        let mut s = format!(
            "clock={} ports={} rri={:?} rro={:?}\n",
            self.clock,
            self.ports(),
            self.pointers.rri,
            self.pointers.rro
        );
        for v in self.voqs.iter().filter(|v| !v.is_empty()) {
            s.push_str(&format!(
                "  VOQ({},{}) len={} T={}\n",
                v.input,
                v.output,
                v.len(),
                v.last_scheduled_slot
            ));
        }
        s
    }

    /// Run one scheduling decision over the current VOQ contents.
    pub fn schedule<R: rand::Rng + ?Sized>(
        &mut self,
        kind: SchedulerKind,
        max_iterations: usize,
        rng: &mut R,
    ) -> Matching {
        let SwitchState {
            layout,
            voqs,
            occupancy,
            pointers,
            ..
        } = self;
        let view = FabricView {
            n: layout.ports(),
            voqs,
            occupancy,
        };
        sched::schedule(kind, &view, pointers, max_iterations, rng)
    }
}

struct FabricView<'a> {
    n: usize,
    voqs: &'a [VoqState],
    occupancy: &'a [u64],
}

impl VoqView for FabricView<'_> {
    #[inline]
    fn ports(&self) -> usize {
        self.n
    }

    #[inline]
    fn requests(&self, input: usize) -> u64 {
        self.occupancy[input]
    }

    #[inline]
    fn sc_key(&self, input: usize, output: usize) -> ScKey {
        let v = &self.voqs[input * self.n + output];
        ScKey {
            len: v.len(),
            last_scheduled_slot: v.last_scheduled_slot,
        }
    }
}
