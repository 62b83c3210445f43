//! Network-function servers behind FPorts.
//!
//! A cell arriving at a server runs every NFI of its current hop in order;
//! each NFI takes 1 or 2 slots with equal probability. Server buffers are
//! unbounded, so nothing is lost here. Finished cells go back into the fabric
//! through the FPort's input-side VOQs, where the usual capacity applies.

use std::collections::BTreeMap;

use rand::Rng;

use crate::classifier::ServerDef;
use crate::error::SimError;
use crate::model::{Cell, EnqueueOutcome, PortId, Slot, SwitchState};

/// Inclusive range of per-NFI processing delays, in slots.
pub const NFI_DELAY_SLOTS: (u64, u64) = (1, 2);

#[derive(Debug, Clone)]
pub struct ServerState {
    fport: PortId,
    hosted_nfis: Vec<String>,
    /// Keyed by (completion slot, ingest sequence) so release order is deterministic.
    in_service: BTreeMap<(Slot, u64), Cell>,
    seq: u64,
}

impl ServerState {
    pub fn new(fport: PortId, hosted_nfis: Vec<String>) -> Self {
        ServerState {
            fport,
            hosted_nfis,
            in_service: BTreeMap::new(),
            seq: 0,
        }
    }

    pub fn from_def(def: &ServerDef) -> Self {
        Self::new(PortId(def.fport), def.functions.clone())
    }

    pub fn fport(&self) -> PortId {
        self.fport
    }

    pub fn hosted_nfis(&self) -> &[String] {
        &self.hosted_nfis
    }

    pub fn in_service(&self) -> impl Iterator<Item = &Cell> {
        self.in_service.values()
    }

    pub fn len(&self) -> usize {
        self.in_service.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_service.is_empty()
    }

    /// Accept `cell` at `slot` and return its completion slot.
    pub fn ingest<R: Rng + ?Sized>(
        &mut self,
        cell: Cell,
        slot: Slot,
        rng: &mut R,
    ) -> Result<Slot, SimError> {
        let hop = match cell.sfp.hops.get(cell.hop_cursor) {
            Some(hop) if hop.fport == self.fport => hop,
            other => {
                return Err(SimError::Invariant {
                    slot,
                    what: format!(
                        "cell {} delivered to server at FPort {} but its current hop is {:?}",
                        cell.id,
                        self.fport,
                        other.map(|h| h.fport)
                    ),
                    dump: format!("{cell:?}"),
                })
            }
        };
        if let Some(&bad) = hop
            .nfi_indices
            .iter()
            .find(|&&k| k >= self.hosted_nfis.len())
        {
            return Err(SimError::Invariant {
                slot,
                what: format!(
                    "cell {} asks for NFI {bad} but FPort {} hosts {}",
                    cell.id,
                    self.fport,
                    self.hosted_nfis.len()
                ),
                dump: format!("{cell:?}"),
            });
        }
        let service: u64 = hop
            .nfi_indices
            .iter()
            .map(|_| rng.random_range(NFI_DELAY_SLOTS.0..=NFI_DELAY_SLOTS.1))
            .sum();
        let completion = slot + service;
        self.in_service.insert((completion, self.seq), cell);
        self.seq += 1;
        Ok(completion)
    }

    /// Re-inject every cell finished by `slot` into this FPort's input-side VOQs.
    pub fn release_completed(
        &mut self,
        state: &mut SwitchState,
        slot: Slot,
    ) -> Result<Vec<(PortId, EnqueueOutcome)>, SimError> {
        let mut effects = Vec::new();
        while let Some(entry) = self.in_service.first_entry() {
            if entry.key().0 > slot {
                break;
            }
            let mut cell = entry.remove();
            cell.hop_cursor += 1;
            let output = cell.next_output();
            let outcome = state.enqueue_cell(self.fport, output, cell, slot)?;
            effects.push((output, outcome));
        }
        Ok(effects)
    }
}
