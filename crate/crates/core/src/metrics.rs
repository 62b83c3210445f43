//! Run counters and the statistics derived from them.
//!
//! Only cells created inside the measurement window are counted, so the
//! ledger balances on its own: every counted cell is eventually delivered,
//! dropped, or still resident when the run stops. Per-output delivery counts
//! are the exception; they record every cell leaving the switch during the
//! window and feed the throughput figure.

use crate::error::MetricError;
use crate::model::{Cell, PortId, Slot};
use crate::scalar::{ratio, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsLedger {
    pub cells_generated: u64,
    pub cells_enqueued: u64,
    pub cells_delivered: u64,
    pub cells_dropped: u64,
    /// Arrivals whose FIB entry says Drop.
    pub cells_filtered: u64,
    /// Arrivals that matched no FIB entry.
    pub cells_unclassified: u64,
    /// Sum of per-cell VOQ waiting time over delivered cells.
    pub total_queued_slots: u64,
    pub measured_slots: u64,
    /// Cells handed to each output's egress during the window.
    pub output_deliveries: Vec<u64>,
    /// Row-major N×N drop counts.
    pub voq_drops: Vec<u64>,
    counting_from: Slot,
}

impl MetricsLedger {
    pub fn new(ports: usize) -> Self {
        MetricsLedger {
            cells_generated: 0,
            cells_enqueued: 0,
            cells_delivered: 0,
            cells_dropped: 0,
            cells_filtered: 0,
            cells_unclassified: 0,
            total_queued_slots: 0,
            measured_slots: 0,
            output_deliveries: vec![0; ports],
            voq_drops: vec![0; ports * ports],
            counting_from: 0,
        }
    }

    /// Start of the measurement window. Earlier cells are not counted.
    pub fn counting_from(&self) -> Slot {
        self.counting_from
    }

    pub fn set_counting_from(&mut self, slot: Slot) {
        self.counting_from = slot;
    }

    #[inline]
    pub fn counts(&self, cell: &Cell) -> bool {
        cell.created_slot >= self.counting_from
    }

    #[inline]
    pub fn in_window(&self, slot: Slot) -> bool {
        slot >= self.counting_from
    }

    pub(crate) fn record_drop(&mut self, voq: usize) {
        self.cells_dropped += 1;
        self.voq_drops[voq] += 1;
    }

    pub fn record_delivery(&mut self, cell: &Cell, output: PortId, slot: Slot) {
        if self.in_window(slot) {
            self.output_deliveries[output.0] += 1;
        }
        if self.counts(cell) {
            self.cells_delivered += 1;
            self.total_queued_slots += cell.queued_slots_total;
        }
    }

    /// Counted cells neither delivered nor lost.
    pub fn cells_outstanding(&self) -> u64 {
        self.cells_generated
            - self.cells_delivered
            - self.cells_dropped
            - self.cells_filtered
            - self.cells_unclassified
    }

    /// Add another run's counters (replicate aggregation).
    pub fn merge(&mut self, other: &MetricsLedger) {
        assert_eq!(self.output_deliveries.len(), other.output_deliveries.len());
        self.cells_generated += other.cells_generated;
        self.cells_enqueued += other.cells_enqueued;
        self.cells_delivered += other.cells_delivered;
        self.cells_dropped += other.cells_dropped;
        self.cells_filtered += other.cells_filtered;
        self.cells_unclassified += other.cells_unclassified;
        self.total_queued_slots += other.total_queued_slots;
        self.measured_slots += other.measured_slots;
        for (a, b) in self
            .output_deliveries
            .iter_mut()
            .zip(&other.output_deliveries)
        {
            *a += b;
        }
        for (a, b) in self.voq_drops.iter_mut().zip(&other.voq_drops) {
            *a += b;
        }
    }
}

/// Mean VOQ waiting time of delivered cells, in slots.
pub fn average_delay<S: Scalar>(ledger: &MetricsLedger) -> Result<S, MetricError> {
    if ledger.cells_delivered == 0 {
        return Err(MetricError::NoDeliveries);
    }
    Ok(ratio(ledger.total_queued_slots, ledger.cells_delivered))
}

/// Dropped cells over cells sent by hosts.
pub fn drop_rate<S: Scalar>(ledger: &MetricsLedger) -> Result<S, MetricError> {
    if ledger.cells_generated == 0 {
        return Err(MetricError::NoArrivals);
    }
    Ok(ratio(ledger.cells_dropped, ledger.cells_generated))
}

/// Cells per slot leaving `output` during the window; zero for an empty window.
pub fn output_throughput<S: Scalar>(ledger: &MetricsLedger, output: PortId) -> S {
    if ledger.measured_slots == 0 {
        return S::zero();
    }
    ratio(ledger.output_deliveries[output.0], ledger.measured_slots)
}

/// Mean per-output throughput over `outputs`.
pub fn mean_throughput<S: Scalar>(
    ledger: &MetricsLedger,
    outputs: impl IntoIterator<Item = PortId>,
) -> S {
    let (mut cells, mut ports) = (0u64, 0u64);
    for p in outputs {
        cells += ledger.output_deliveries[p.0];
        ports += 1;
    }
    if ledger.measured_slots == 0 || ports == 0 {
        return S::zero();
    }
    ratio(cells, ledger.measured_slots * ports)
}
