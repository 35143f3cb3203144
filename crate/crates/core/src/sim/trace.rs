//! Run outcome records: per-packet fates, per-node counters, per-queue
//! occupancy samples, and a content digest for determinism checks.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;

use super::topology::{DirId, NodeId, Topology};
use super::{Packet, PacketKind, Scenario, SimError};

/// Final fate of one packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PacketOutcome {
    /// Still traveling. Must not survive the drain phase.
    Pending,
    Delivered {
        at: f64,
        hops: u32,
    },
    Dropped {
        at: f64,
        at_node: NodeId,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PacketRecord {
    pub id: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: PacketKind,
    pub size_bytes: u32,
    pub sent_at: f64,
    pub outcome: PacketOutcome,
}

/// Packet accounting for one node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCounters {
    /// Packets this node originated.
    pub sent: u64,
    /// Packets delivered to this node as their destination.
    pub received: u64,
    /// Of the packets this node originated: how many reached their
    /// destination / were dropped somewhere en route.
    pub own_delivered: u64,
    pub own_dropped: u64,
    /// Drops that happened at this node's egress queues.
    pub dropped_here: u64,
}

/// Application-level statistics for one UE.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct UeAppStats {
    /// Packets of any kind delivered to this UE.
    pub packets_received: u64,
    pub ping_requests_sent: u64,
    /// Round-trip times of this UE's completed pings, in send order.
    pub rtts: Vec<f64>,
}

impl UeAppStats {
    /// Pings sent whose reply never came back.
    pub fn num_lost(&self) -> u64 {
        self.ping_requests_sent - self.rtts.len() as u64
    }
}

/// Occupancy trace of one link direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueueTrace {
    pub from: NodeId,
    pub to: NodeId,
    /// Packets that completed serialization onto the wire.
    pub forwarded: u64,
    pub dropped: u64,
    /// Waiting-queue length sampled after every enqueue attempt.
    pub samples: Vec<u32>,
}

impl QueueTrace {
    pub fn touched(&self) -> bool {
        self.forwarded > 0 || self.dropped > 0 || !self.samples.is_empty()
    }
}

/// Everything a run leaves behind. Immutable once the run completes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceLog {
    pub scenario: Scenario,
    pub duration_s: f64,
    pub seed: u64,
    pub packets: Vec<PacketRecord>,
    pub node_counters: Vec<NodeCounters>,
    pub ue_apps: Vec<UeAppStats>,
    pub queues: Vec<QueueTrace>,
    /// Simulation time when the last event drained.
    pub drained_at: f64,
}

impl TraceLog {
    pub(crate) fn new(topo: &Topology, scenario: Scenario, duration_s: f64, seed: u64) -> Self {
        let queues = (0..topo.dir_count())
            .map(|dir| {
                let (from, to) = topo.dir_endpoints(dir);
                QueueTrace {
                    from,
                    to,
                    forwarded: 0,
                    dropped: 0,
                    samples: Vec::new(),
                }
            })
            .collect();
        Self {
            scenario,
            duration_s,
            seed,
            packets: Vec::new(),
            node_counters: vec![NodeCounters::default(); topo.node_count()],
            ue_apps: vec![UeAppStats::default(); topo.ues().len()],
            queues,
            drained_at: 0.0,
        }
    }

    pub(crate) fn record_send(&mut self, packet: &Packet) {
        debug_assert_eq!(packet.id as usize, self.packets.len());
        self.packets.push(PacketRecord {
            id: packet.id,
            src: packet.src,
            dst: packet.dst,
            kind: packet.kind,
            size_bytes: packet.size_bytes,
            sent_at: packet.created_at,
            outcome: PacketOutcome::Pending,
        });
        self.node_counters[packet.src.0].sent += 1;
    }

    pub(crate) fn record_delivery(&mut self, packet: &Packet, at: f64) {
        self.packets[packet.id as usize].outcome = PacketOutcome::Delivered {
            at,
            hops: packet.hops,
        };
        self.node_counters[packet.dst.0].received += 1;
        self.node_counters[packet.src.0].own_delivered += 1;
    }

    pub(crate) fn record_drop(&mut self, packet: &Packet, at: f64, at_node: NodeId, dir: DirId) {
        self.packets[packet.id as usize].outcome = PacketOutcome::Dropped { at, at_node };
        self.node_counters[packet.src.0].own_dropped += 1;
        self.node_counters[at_node.0].dropped_here += 1;
        self.queues[dir].dropped += 1;
    }

    pub fn total_sent(&self) -> u64 {
        self.node_counters.iter().map(|c| c.sent).sum()
    }

    pub fn total_delivered(&self) -> u64 {
        self.node_counters.iter().map(|c| c.own_delivered).sum()
    }

    pub fn total_dropped(&self) -> u64 {
        self.node_counters.iter().map(|c| c.own_dropped).sum()
    }

    /// Packets neither delivered nor dropped. Zero after a drained run.
    pub fn in_flight_at_end(&self) -> u64 {
        self.packets
            .iter()
            .filter(|p| p.outcome == PacketOutcome::Pending)
            .count() as u64
    }

    /// Fraction of ping requests that reached their target UE.
    /// `None` when the run sent no pings.
    pub fn ping_delivery_ratio(&self) -> Option<f64> {
        let (mut sent, mut delivered) = (0u64, 0u64);
        for p in &self.packets {
            if matches!(p.kind, PacketKind::PingRequest) {
                sent += 1;
                if matches!(p.outcome, PacketOutcome::Delivered { .. }) {
                    delivered += 1;
                }
            }
        }
        (sent > 0).then(|| delivered as f64 / sent as f64)
    }

    /// Mean round-trip time over all completed pings; `None` when no ping
    /// completed (total congestion collapse).
    pub fn mean_ping_rtt(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for ue in &self.ue_apps {
            sum += ue.rtts.iter().sum::<f64>();
            n += ue.rtts.len();
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// SHA-256 over a canonical binary serialization of every record.
    /// Two runs of the same (config, seed) produce identical digests.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.scenario.label().to_le_bytes());
        h.update(self.duration_s.to_le_bytes());
        h.update(self.seed.to_le_bytes());
        for p in &self.packets {
            h.update(p.id.to_le_bytes());
            h.update((p.src.0 as u64).to_le_bytes());
            h.update((p.dst.0 as u64).to_le_bytes());
            h.update([p.kind.tag()]);
            h.update(p.size_bytes.to_le_bytes());
            h.update(p.sent_at.to_le_bytes());
            match p.outcome {
                PacketOutcome::Pending => h.update([0u8]),
                PacketOutcome::Delivered { at, hops } => {
                    h.update([1u8]);
                    h.update(at.to_le_bytes());
                    h.update(hops.to_le_bytes());
                }
                PacketOutcome::Dropped { at, at_node } => {
                    h.update([2u8]);
                    h.update(at.to_le_bytes());
                    h.update((at_node.0 as u64).to_le_bytes());
                }
            }
        }
        for c in &self.node_counters {
            for v in [
                c.sent,
                c.received,
                c.own_delivered,
                c.own_dropped,
                c.dropped_here,
            ] {
                h.update(v.to_le_bytes());
            }
        }
        for ue in &self.ue_apps {
            h.update(ue.packets_received.to_le_bytes());
            h.update(ue.ping_requests_sent.to_le_bytes());
            h.update((ue.rtts.len() as u64).to_le_bytes());
            for r in &ue.rtts {
                h.update(r.to_le_bytes());
            }
        }
        for q in &self.queues {
            h.update(q.forwarded.to_le_bytes());
            h.update(q.dropped.to_le_bytes());
            h.update((q.samples.len() as u64).to_le_bytes());
            for &s in &q.samples {
                h.update(s.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Debug export: one JSON object per packet record.
    pub fn export_ndjson(&self, path: &std::path::Path) -> Result<(), SimError> {
        let io_err = |source: std::io::Error| SimError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io_err)?;
        let mut w = std::io::BufWriter::new(file);
        for p in &self.packets {
            let line = serde_json::to_string(p).expect("packet records serialize");
            writeln!(w, "{line}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            scenario: self.scenario,
            duration_s: self.duration_s,
            seed: self.seed,
            packets_sent: self.total_sent(),
            packets_delivered: self.total_delivered(),
            packets_dropped: self.total_dropped(),
            in_flight_at_end: self.in_flight_at_end(),
            ping_requests_sent: self
                .packets
                .iter()
                .filter(|p| matches!(p.kind, PacketKind::PingRequest))
                .count() as u64,
            ping_delivery_ratio: self.ping_delivery_ratio(),
            completed_pings: self.ue_apps.iter().map(|u| u.rtts.len() as u64).sum(),
            mean_ping_rtt_s: self.mean_ping_rtt(),
            drained_at: self.drained_at,
            digest: self.digest(),
        }
    }
}

/// Headline numbers of one run, for logs and the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: Scenario,
    pub duration_s: f64,
    pub seed: u64,
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub packets_dropped: u64,
    pub in_flight_at_end: u64,
    pub ping_requests_sent: u64,
    pub ping_delivery_ratio: Option<f64>,
    pub completed_pings: u64,
    pub mean_ping_rtt_s: Option<f64>,
    pub drained_at: f64,
    pub digest: String,
}
