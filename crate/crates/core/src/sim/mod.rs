//! Discrete-event simulator for a small 5G access network under normal
//! ping traffic and under a volumetric UDP-style flood.
//!
//! A run is a pure function of its [`ScenarioConfig`]: a seeded event loop
//! over a fixed star-of-stars topology (UEs behind a gNodeB, hosts behind a
//! router, joined through a core node) with FIFO drop-tail link queues.
//! Traffic generation stops at `duration_s`; the event loop then drains, so
//! every packet ends the run delivered or dropped.

pub mod engine;
pub mod event;
pub mod topology;
pub mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::run;
pub use topology::{NodeId, NodeKind, Topology};
pub use trace::{PacketOutcome, PacketRecord, RunSummary, TraceLog};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario config: {0}")]
    BadConfig(String),
    #[error("event scheduled in the past: t={scheduled} but simulation time is {now}")]
    PastEvent { scheduled: f64, now: f64 },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Which traffic mix a run generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scenario {
    Normal,
    Ddos,
}

impl Scenario {
    /// Class label attached to every record derived from a run.
    pub fn label(self) -> u8 {
        match self {
            Scenario::Normal => 0,
            Scenario::Ddos => 1,
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scenario::Normal => write!(f, "NORMAL"),
            Scenario::Ddos => write!(f, "DDOS"),
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "NORMAL" => Ok(Scenario::Normal),
            "DDOS" => Ok(Scenario::Ddos),
            other => Err(format!(
                "unknown scenario '{other}', expected NORMAL or DDOS"
            )),
        }
    }
}

/// Bandwidth, one-way propagation delay, and waiting-room size of one link.
/// Queue capacity counts packets waiting behind the one being serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub bandwidth_bps: f64,
    pub prop_delay_s: f64,
    pub queue_capacity_pkts: usize,
}

impl LinkParams {
    fn validate(&self, name: &str) -> Result<(), SimError> {
        if !(self.bandwidth_bps.is_finite() && self.bandwidth_bps > 0.0) {
            return Err(SimError::BadConfig(format!(
                "{name} bandwidth must be positive, got {}",
                self.bandwidth_bps
            )));
        }
        if !(self.prop_delay_s.is_finite() && self.prop_delay_s >= 0.0) {
            return Err(SimError::BadConfig(format!(
                "{name} propagation delay must be non-negative, got {}",
                self.prop_delay_s
            )));
        }
        if self.queue_capacity_pkts == 0 {
            return Err(SimError::BadConfig(format!(
                "{name} queue capacity must be at least 1"
            )));
        }
        Ok(())
    }
}

/// Per-link-class parameters.
///
/// The defaults put the tight constraint on the UE radio links (200 kbps,
/// narrowband-IoT class). The aggregate flood (3 hosts x 8 Mbps) then
/// oversubscribes every gNodeB-to-UE queue — 240 kbps per UE at 100 UEs —
/// while normal ping traffic (~1 kbps per UE) rides far below capacity, so
/// congestion appears exactly and only under attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkConfig {
    pub ue_gnb: LinkParams,
    pub gnb_core: LinkParams,
    pub core_router: LinkParams,
    pub host_router: LinkParams,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            ue_gnb: LinkParams {
                bandwidth_bps: 200_000.0,
                prop_delay_s: 0.005,
                queue_capacity_pkts: 100,
            },
            gnb_core: LinkParams {
                bandwidth_bps: 100_000_000.0,
                prop_delay_s: 0.002,
                queue_capacity_pkts: 100,
            },
            core_router: LinkParams {
                bandwidth_bps: 50_000_000.0,
                prop_delay_s: 0.002,
                queue_capacity_pkts: 100,
            },
            host_router: LinkParams {
                bandwidth_bps: 100_000_000.0,
                prop_delay_s: 0.001,
                queue_capacity_pkts: 100,
            },
        }
    }
}

/// Everything that defines a run. JSON-serializable; every field has a
/// default so config files may specify only what they change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub duration_s: f64,
    pub seed: u64,
    pub n_ue: usize,
    pub n_hosts: usize,
    pub flood_size_bytes: u32,
    pub flood_interval_s: f64,
    pub ping_size_bytes: u32,
    pub ping_interval_s: f64,
    pub links: LinkConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Normal,
            duration_s: 60.0,
            seed: 0,
            n_ue: 100,
            n_hosts: 3,
            flood_size_bytes: 1000,
            flood_interval_s: 0.001,
            ping_size_bytes: 64,
            ping_interval_s: 1.0,
            links: LinkConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_ue < 2 {
            return Err(SimError::BadConfig(format!(
                "need at least 2 UEs so ping has a peer, got {}",
                self.n_ue
            )));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(SimError::BadConfig(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if self.flood_size_bytes == 0 || self.ping_size_bytes == 0 {
            return Err(SimError::BadConfig("packet sizes must be positive".into()));
        }
        if !(self.flood_interval_s.is_finite() && self.flood_interval_s > 0.0)
            || !(self.ping_interval_s.is_finite() && self.ping_interval_s > 0.0)
        {
            return Err(SimError::BadConfig(
                "send intervals must be positive".into(),
            ));
        }
        self.links.ue_gnb.validate("ue_gnb link")?;
        self.links.gnb_core.validate("gnb_core link")?;
        self.links.core_router.validate("core_router link")?;
        self.links.host_router.validate("host_router link")?;
        Ok(())
    }

    /// Offered load of one flooding host, in bits per second.
    pub fn flood_load_bps(&self) -> f64 {
        f64::from(self.flood_size_bytes) * 8.0 / self.flood_interval_s
    }
}

/// What a packet is for. Replies carry the originating request's creation
/// time so round-trip time needs no out-of-band matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PacketKind {
    PingRequest,
    PingReply { request_created_at: f64 },
    Flood,
}

impl PacketKind {
    pub fn tag(&self) -> u8 {
        match self {
            PacketKind::PingRequest => 0,
            PacketKind::PingReply { .. } => 1,
            PacketKind::Flood => 2,
        }
    }
}

/// One datagram in flight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub id: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub size_bytes: u32,
    pub created_at: f64,
    pub kind: PacketKind,
    pub hops: u32,
}
