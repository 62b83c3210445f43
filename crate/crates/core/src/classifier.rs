//! Ingress classification: flow id → forwarding entry → service function path.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ConfigError;
use crate::model::{PortId, PortLayout};
use crate::traffic::Arrival;

/// One visit to a server: the FPort to cross to, and the NFIs to run there in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SfpHop {
    pub fport: PortId,
    /// Indices into the server's hosted function list.
    pub nfi_indices: Vec<usize>,
}

/// Forwarding tag attached to a cell at ingress.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SfpTag {
    pub hops: Arc<[SfpHop]>,
    pub egress_tport: PortId,
}

impl SfpTag {
    pub fn direct(egress_tport: PortId) -> Self {
        SfpTag {
            hops: Arc::from(Vec::new()),
            egress_tport,
        }
    }

    pub fn is_direct(&self) -> bool {
        self.hops.is_empty()
    }
}

/// An ordered list of network functions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDef {
    pub name: String,
    pub functions: Vec<String>,
}

/// A server behind an FPort and the NFIs it hosts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerDef {
    pub fport: usize,
    pub functions: Vec<String>,
}

/// Static NFI placement: which server hosts each function instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    servers: Vec<ServerDef>,
    /// function name → (server position, NFI index on that server)
    index: HashMap<String, (usize, usize)>,
}

impl Placement {
    pub fn new(layout: &PortLayout, servers: Vec<ServerDef>) -> Result<Self, ConfigError> {
        let mut index = HashMap::new();
        let mut seen_ports = HashMap::new();
        for (s, server) in servers.iter().enumerate() {
            let port = PortId(server.fport);
            if !layout.is_fport(port) {
                return Err(ConfigError::invalid(
                    format!("servers[{s}].fport"),
                    format!(
                        "{} is not an FPort (valid range {}..{})",
                        server.fport,
                        layout.num_tports,
                        layout.ports()
                    ),
                ));
            }
            if let Some(prev) = seen_ports.insert(server.fport, s) {
                return Err(ConfigError::invalid(
                    format!("servers[{s}].fport"),
                    format!("FPort {} already used by servers[{prev}]", server.fport),
                ));
            }
            for (k, f) in server.functions.iter().enumerate() {
                if index.insert(f.clone(), (s, k)).is_some() {
                    return Err(ConfigError::invalid(
                        format!("servers[{s}].functions"),
                        format!("function `{f}` is hosted more than once"),
                    ));
                }
            }
        }
        Ok(Placement { servers, index })
    }

    pub fn servers(&self) -> &[ServerDef] {
        &self.servers
    }

    pub fn locate(&self, function: &str) -> Option<(PortId, usize)> {
        self.index
            .get(function)
            .map(|&(s, k)| (PortId(self.servers[s].fport), k))
    }

    /// Hop list for `chain`: consecutive functions on the same server share one hop.
    pub fn build_hops(&self, chain: &ChainDef, key: &str) -> Result<Vec<SfpHop>, ConfigError> {
        if chain.functions.is_empty() {
            return Err(ConfigError::invalid(key, "chain has no functions"));
        }
        let mut hops: Vec<SfpHop> = Vec::new();
        for f in &chain.functions {
            let (fport, nfi) = self.locate(f).ok_or_else(|| {
                ConfigError::invalid(key, format!("function `{f}` is not hosted on any server"))
            })?;
            match hops.last_mut() {
                Some(last) if last.fport == fport => last.nfi_indices.push(nfi),
                _ => hops.push(SfpHop {
                    fport,
                    nfi_indices: vec![nfi],
                }),
            }
        }
        Ok(hops)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextHop {
    Egress(PortId),
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FibEntry {
    /// Index of the chain the flow needs, or `None` for direct switching.
    pub sfc_id: Option<usize>,
    pub next_hop: NextHop,
}

/// Forwarding information base keyed by flow id, with an optional catch-all.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Fib {
    exact: HashMap<u64, FibEntry>,
    default: Option<FibEntry>,
}

impl Fib {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, flow_id: u64, entry: FibEntry) {
        self.exact.insert(flow_id, entry);
    }

    pub fn set_default(&mut self, entry: FibEntry) {
        self.default = Some(entry);
    }

    pub fn lookup(&self, flow_id: u64) -> Option<FibEntry> {
        self.exact.get(&flow_id).copied().or(self.default)
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty() && self.default.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Forward(SfpTag),
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("flow {0} matches no FIB entry")]
    NoRule(u64),
    #[error("FIB entry for flow {flow_id} names unknown chain {sfc_id}")]
    UnknownChain { flow_id: u64, sfc_id: usize },
}

/// FIB plus the precomputed hop list of every chain.
#[derive(Debug, Clone)]
pub struct Classifier {
    fib: Fib,
    paths: Vec<Arc<[SfpHop]>>,
    direct: Arc<[SfpHop]>,
}

impl Classifier {
    pub fn new(fib: Fib, chains: &[ChainDef], placement: &Placement) -> Result<Self, ConfigError> {
        let paths = chains
            .iter()
            .enumerate()
            .map(|(c, chain)| {
                placement
                    .build_hops(chain, &format!("chains[{c}].functions"))
                    .map(Arc::from)
            })
            .collect::<Result<_, _>>()?;
        Ok(Classifier {
            fib,
            paths,
            direct: Arc::from(Vec::new()),
        })
    }

    pub fn fib(&self) -> &Fib {
        &self.fib
    }

    pub fn path(&self, chain: usize) -> Option<&Arc<[SfpHop]>> {
        self.paths.get(chain)
    }

    pub fn classify(&self, arrival: &Arrival) -> Result<Classification, ClassifyError> {
        let flow_id = arrival.flow_id;
        let entry = self
            .fib
            .lookup(flow_id)
            .ok_or(ClassifyError::NoRule(flow_id))?;
        let egress_tport = match entry.next_hop {
            NextHop::Drop => return Ok(Classification::Drop),
            NextHop::Egress(p) => p,
        };
        let hops = match entry.sfc_id {
            None => self.direct.clone(),
            Some(sfc_id) => self
                .paths
                .get(sfc_id)
                .ok_or(ClassifyError::UnknownChain { flow_id, sfc_id })?
                .clone(),
        };
        Ok(Classification::Forward(SfpTag { hops, egress_tport }))
    }
}
