//! The event loop: applications emit packets, link queues serialize and
//! drop them, arrivals forward or deliver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

use super::event::{EventKind, EventQueue};
use super::topology::{DirId, NodeId, Topology};
use super::trace::TraceLog;
use super::{Packet, PacketKind, Scenario, ScenarioConfig, SimError};

/// Run one scenario to completion: generate traffic until `duration_s`,
/// then drain every queue so no packet is left in flight.
pub fn run(config: &ScenarioConfig) -> Result<TraceLog, SimError> {
    let topo = Topology::build(config)?;
    Engine::new(config, topo)?.run_to_drain()
}

/// Sending side of one link direction.
struct DirState {
    to: NodeId,
    /// Node whose egress this queue is; drops are charged to it.
    from: NodeId,
    bandwidth_bps: f64,
    prop_delay_s: f64,
    capacity: usize,
    busy: bool,
    waiting: VecDeque<Packet>,
}

/// Periodic traffic sources.
///
/// Wake-up k happens at `phase + k * interval`, computed by multiplication
/// rather than by accumulating `+= interval`: repeated addition of an
/// inexact step like 0.001 drifts by enough to squeeze a spurious extra
/// send into a long run, while the product rounds once and keeps the send
/// count per unit time exact.
enum App {
    /// A UE pinging a random peer UE every ping interval.
    Ping {
        ue_index: usize,
        node: NodeId,
        phase: f64,
        sends: u64,
    },
    /// A host streaming flood packets round-robin over all UEs.
    Flood {
        node: NodeId,
        next_target: usize,
        sends: u64,
    },
}

struct Engine {
    config: ScenarioConfig,
    topo: Topology,
    queue: EventQueue,
    dirs: Vec<DirState>,
    apps: Vec<App>,
    rng: ChaCha8Rng,
    trace: TraceLog,
    next_packet_id: u64,
}

impl Engine {
    fn new(config: &ScenarioConfig, topo: Topology) -> Result<Self, SimError> {
        let dirs = (0..topo.dir_count())
            .map(|dir| {
                let (from, to) = topo.dir_endpoints(dir);
                let params = topo.dir_params(dir);
                DirState {
                    to,
                    from,
                    bandwidth_bps: params.bandwidth_bps,
                    prop_delay_s: params.prop_delay_s,
                    capacity: params.queue_capacity_pkts,
                    busy: false,
                    waiting: VecDeque::new(),
                }
            })
            .collect();
        let trace = TraceLog::new(&topo, config.scenario, config.duration_s, config.seed);
        let mut engine = Self {
            config: config.clone(),
            topo,
            queue: EventQueue::new(),
            dirs,
            apps: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            trace,
            next_packet_id: 0,
        };
        engine.install_apps()?;
        Ok(engine)
    }

    /// Create the traffic sources and schedule their first wake-ups.
    /// UEs ping in both scenarios; hosts flood only under DDOS.
    fn install_apps(&mut self) -> Result<(), SimError> {
        for i in 0..self.config.n_ue {
            let node = self.topo.ue(i);
            // Desynchronized first send: a seeded phase within one interval.
            let first = self.rng.random_range(0.0..self.config.ping_interval_s);
            self.apps.push(App::Ping {
                ue_index: i,
                node,
                phase: first,
                sends: 0,
            });
            if first < self.config.duration_s {
                let app = self.apps.len() - 1;
                self.queue.schedule(first, EventKind::AppSend { app })?;
            }
        }
        if self.config.scenario == Scenario::Ddos {
            for j in 0..self.config.n_hosts {
                let node = self.topo.host(j);
                self.apps.push(App::Flood {
                    node,
                    next_target: 0,
                    sends: 0,
                });
                let app = self.apps.len() - 1;
                self.queue.schedule(0.0, EventKind::AppSend { app })?;
            }
        }
        Ok(())
    }

    fn run_to_drain(mut self) -> Result<TraceLog, SimError> {
        while let Some((now, kind)) = self.queue.pop() {
            match kind {
                EventKind::AppSend { app } => self.on_app_send(app, now)?,
                EventKind::Arrival { packet, node } => self.on_arrival(packet, node, now)?,
                EventKind::ServiceDone { dir } => self.on_service_done(dir, now)?,
            }
        }
        self.trace.drained_at = self.queue.now();
        debug_assert_eq!(
            self.trace.in_flight_at_end(),
            0,
            "drain left packets in flight"
        );
        Ok(self.trace)
    }

    fn on_app_send(&mut self, app: usize, now: f64) -> Result<(), SimError> {
        let (packet, next_wake) = match &mut self.apps[app] {
            App::Ping {
                ue_index,
                node,
                phase,
                sends,
            } => {
                // Uniform peer among the other UEs.
                let mut peer = self.rng.random_range(0..self.config.n_ue - 1);
                if peer >= *ue_index {
                    peer += 1;
                }
                let packet = Packet {
                    id: 0, // assigned in send_new_packet
                    src: *node,
                    dst: self.topo.ue(peer),
                    size_bytes: self.config.ping_size_bytes,
                    created_at: now,
                    kind: PacketKind::PingRequest,
                    hops: 0,
                };
                self.trace.ue_apps[*ue_index].ping_requests_sent += 1;
                *sends += 1;
                let next = *phase + *sends as f64 * self.config.ping_interval_s;
                (packet, next)
            }
            App::Flood {
                node,
                next_target,
                sends,
            } => {
                let target = self.topo.ue(*next_target % self.config.n_ue);
                *next_target = (*next_target + 1) % self.config.n_ue;
                let packet = Packet {
                    id: 0,
                    src: *node,
                    dst: target,
                    size_bytes: self.config.flood_size_bytes,
                    created_at: now,
                    kind: PacketKind::Flood,
                    hops: 0,
                };
                *sends += 1;
                let next = *sends as f64 * self.config.flood_interval_s;
                (packet, next)
            }
        };
        self.send_new_packet(packet, now)?;
        // Generation stops at the configured duration; the drain phase only
        // carries already-emitted traffic (and ping replies) to rest.
        if next_wake < self.config.duration_s {
            self.queue.schedule(next_wake, EventKind::AppSend { app })?;
        }
        Ok(())
    }

    /// Assign an id, record the send, and put the packet on its first link.
    fn send_new_packet(&mut self, mut packet: Packet, now: f64) -> Result<(), SimError> {
        packet.id = self.next_packet_id;
        self.next_packet_id += 1;
        self.trace.record_send(&packet);
        let (_, dir) = self
            .topo
            .next_hop(packet.src, packet.dst)
            .expect("validated topology is connected");
        self.transmit(dir, packet, now)
    }

    /// FIFO drop-tail: start serializing immediately if idle, wait if there
    /// is room, drop otherwise. Queue occupancy is sampled after every
    /// attempt, so drop-time samples read "capacity".
    fn transmit(&mut self, dir: DirId, packet: Packet, now: f64) -> Result<(), SimError> {
        let d = &mut self.dirs[dir];
        if !d.busy {
            d.busy = true;
            let ser = f64::from(packet.size_bytes) * 8.0 / d.bandwidth_bps;
            let to = d.to;
            let prop = d.prop_delay_s;
            self.trace.queues[dir].forwarded += 1;
            self.trace.queues[dir].samples.push(0);
            self.queue
                .schedule(now + ser, EventKind::ServiceDone { dir })?;
            self.queue
                .schedule(now + ser + prop, EventKind::Arrival { packet, node: to })?;
        } else if d.waiting.len() < d.capacity {
            d.waiting.push_back(packet);
            let occupancy = d.waiting.len() as u32;
            self.trace.queues[dir].samples.push(occupancy);
        } else {
            let from = d.from;
            let capacity = d.capacity as u32;
            self.trace.record_drop(&packet, now, from, dir);
            self.trace.queues[dir].samples.push(capacity);
        }
        Ok(())
    }

    /// The head packet finished serializing; pull the next waiter.
    fn on_service_done(&mut self, dir: DirId, now: f64) -> Result<(), SimError> {
        let d = &mut self.dirs[dir];
        debug_assert!(d.busy, "service completion on an idle link");
        match d.waiting.pop_front() {
            Some(packet) => {
                let ser = f64::from(packet.size_bytes) * 8.0 / d.bandwidth_bps;
                let to = d.to;
                let prop = d.prop_delay_s;
                self.trace.queues[dir].forwarded += 1;
                self.queue
                    .schedule(now + ser, EventKind::ServiceDone { dir })?;
                self.queue
                    .schedule(now + ser + prop, EventKind::Arrival { packet, node: to })?;
            }
            None => d.busy = false,
        }
        Ok(())
    }

    fn on_arrival(&mut self, mut packet: Packet, node: NodeId, now: f64) -> Result<(), SimError> {
        packet.hops += 1;
        if node == packet.dst {
            self.trace.record_delivery(&packet, now);
            self.deliver_to_app(&packet, node, now)?;
        } else {
            let (_, dir) = self
                .topo
                .next_hop(node, packet.dst)
                .expect("validated topology is connected");
            self.transmit(dir, packet, now)?;
        }
        Ok(())
    }

    /// Application hooks at the destination. Ping requests are answered
    /// even after the generation window — replies are reactive traffic.
    fn deliver_to_app(&mut self, packet: &Packet, node: NodeId, now: f64) -> Result<(), SimError> {
        let Some(ue_index) = self.topo.ues().iter().position(|&u| u == node) else {
            return Ok(()); // hosts and infrastructure consume silently
        };
        self.trace.ue_apps[ue_index].packets_received += 1;
        match packet.kind {
            PacketKind::PingRequest => {
                let reply = Packet {
                    id: 0,
                    src: node,
                    dst: packet.src,
                    size_bytes: self.config.ping_size_bytes,
                    created_at: now,
                    kind: PacketKind::PingReply {
                        request_created_at: packet.created_at,
                    },
                    hops: 0,
                };
                self.send_new_packet(reply, now)?;
            }
            PacketKind::PingReply { request_created_at } => {
                self.trace.ue_apps[ue_index]
                    .rtts
                    .push(now - request_created_at);
            }
            PacketKind::Flood => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{LinkConfig, PacketOutcome};

    fn desk(scenario: Scenario, seed: u64, duration_s: f64) -> ScenarioConfig {
        ScenarioConfig {
            scenario,
            seed,
            duration_s,
            n_ue: 20,
            n_hosts: 3,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn normal_run_delivers_every_ping() {
        let trace = run(&desk(Scenario::Normal, 7, 10.0)).unwrap();
        assert_eq!(trace.ping_delivery_ratio(), Some(1.0));
        assert_eq!(trace.total_dropped(), 0);
        assert_eq!(trace.in_flight_at_end(), 0);
        // 20 UEs, one ping per second for 10 s, jittered start within 1 s:
        // exactly 10 requests each.
        assert_eq!(
            trace
                .packets
                .iter()
                .filter(|p| matches!(p.kind, PacketKind::PingRequest))
                .count(),
            200
        );
    }

    #[test]
    fn identical_seeds_give_identical_digests() {
        let a = run(&desk(Scenario::Ddos, 42, 2.0)).unwrap();
        let b = run(&desk(Scenario::Ddos, 42, 2.0)).unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = run(&desk(Scenario::Ddos, 43, 2.0)).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn conservation_holds_globally_and_per_node() {
        for scenario in [Scenario::Normal, Scenario::Ddos] {
            let trace = run(&desk(scenario, 11, 3.0)).unwrap();
            assert_eq!(
                trace.total_sent(),
                trace.total_delivered() + trace.total_dropped() + trace.in_flight_at_end(),
                "{scenario}"
            );
            for (i, c) in trace.node_counters.iter().enumerate() {
                assert_eq!(
                    c.sent,
                    c.own_delivered + c.own_dropped,
                    "node {i} in {scenario}"
                );
            }
        }
    }

    #[test]
    fn ddos_congests_pings_and_drops_packets() {
        let normal = run(&desk(Scenario::Normal, 5, 10.0)).unwrap();
        let ddos = run(&desk(Scenario::Ddos, 5, 10.0)).unwrap();
        assert!(ddos.total_dropped() > 0, "flood must overflow queues");
        assert!(
            ddos.ping_delivery_ratio().unwrap() < normal.ping_delivery_ratio().unwrap(),
            "ddos {:?} vs normal {:?}",
            ddos.ping_delivery_ratio(),
            normal.ping_delivery_ratio()
        );
        let rtt_n = normal.mean_ping_rtt().unwrap();
        // A DDoS run with zero completed pings counts as infinite RTT.
        let rtt_d = ddos.mean_ping_rtt().unwrap_or(f64::INFINITY);
        assert!(rtt_d > rtt_n, "ddos rtt {rtt_d} vs normal {rtt_n}");
    }

    #[test]
    fn flood_send_counts_are_exact() {
        // One second at one packet per millisecond: 1000 sends per host,
        // spread evenly over the UEs by round-robin.
        let config = ScenarioConfig {
            scenario: Scenario::Ddos,
            duration_s: 1.0,
            seed: 1,
            n_ue: 100,
            n_hosts: 3,
            ..ScenarioConfig::default()
        };
        let trace = run(&config).unwrap();
        let per_host: Vec<u64> = trace
            .node_counters
            .iter()
            .zip(0..)
            .filter(|(_, i)| *i >= 104) // hosts come after 100 UEs + 4 infra
            .map(|(c, _)| c.sent)
            .collect();
        assert_eq!(per_host, vec![1000, 1000, 1000]);
        let mut per_ue_targets = vec![0u64; 100];
        for p in &trace.packets {
            if matches!(p.kind, PacketKind::Flood) {
                per_ue_targets[p.dst.0] += 1;
            }
        }
        assert!(
            per_ue_targets.iter().all(|&t| t == 30),
            "round-robin spread"
        );
    }

    #[test]
    fn serialization_delay_arithmetic() {
        // Empty link: arrival = send + size*8/bandwidth + prop_delay.
        // 1000 B at 10 Mbps is 0.8 ms serialization plus 1 ms propagation.
        let links = LinkConfig {
            ue_gnb: crate::sim::LinkParams {
                bandwidth_bps: 10_000_000.0,
                prop_delay_s: 0.001,
                queue_capacity_pkts: 10,
            },
            ..LinkConfig::default()
        };
        let config = ScenarioConfig {
            scenario: Scenario::Normal,
            duration_s: 1.5,
            seed: 3,
            n_ue: 2,
            n_hosts: 0,
            ping_size_bytes: 1000,
            links,
            ..ScenarioConfig::default()
        };
        let trace = run(&config).unwrap();
        let req = trace
            .packets
            .iter()
            .find(|p| matches!(p.kind, PacketKind::PingRequest))
            .unwrap();
        let crate::sim::PacketOutcome::Delivered { at, hops } = req.outcome else {
            panic!("ping must deliver on an idle network");
        };
        assert_eq!(hops, 2);
        // Both hops ride the overridden access link: 0.8 ms serialization
        // plus 1 ms propagation each way through the gNodeB.
        let hop = 1000.0 * 8.0 / 10_000_000.0 + 0.001;
        let expect = req.sent_at + 2.0 * hop;
        assert!(
            (at - expect).abs() < 1e-12,
            "arrival {at} expected {expect}"
        );
    }

    #[test]
    fn queue_occupancy_never_exceeds_capacity() {
        let trace = run(&desk(Scenario::Ddos, 9, 2.0)).unwrap();
        for q in &trace.queues {
            for &s in &q.samples {
                assert!(s <= 100, "sample {s} over capacity");
            }
        }
        // The flood must actually exercise the full queue.
        assert!(trace.queues.iter().any(|q| q.samples.contains(&100)));
    }

    #[test]
    fn decreasing_flood_interval_never_decreases_drops() {
        let mut drops = Vec::new();
        for interval in [0.004, 0.002, 0.001, 0.0005] {
            let config = ScenarioConfig {
                scenario: Scenario::Ddos,
                duration_s: 2.0,
                seed: 21,
                n_ue: 5,
                n_hosts: 2,
                flood_interval_s: interval,
                ..ScenarioConfig::default()
            };
            drops.push(run(&config).unwrap().total_dropped());
        }
        for pair in drops.windows(2) {
            assert!(pair[1] >= pair[0], "drops fell as load rose: {drops:?}");
        }
    }

    #[test]
    fn deliveries_respect_causality() {
        let trace = run(&desk(Scenario::Ddos, 2, 2.0)).unwrap();
        for p in &trace.packets {
            match p.outcome {
                PacketOutcome::Delivered { at, .. } => assert!(at > p.sent_at),
                PacketOutcome::Dropped { at, .. } => assert!(at >= p.sent_at),
                PacketOutcome::Pending => panic!("packet {} still pending", p.id),
            }
        }
    }

    #[test]
    fn ndjson_export_writes_one_line_per_packet() {
        let trace = run(&desk(Scenario::Normal, 4, 2.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.ndjson");
        trace.export_ndjson(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), trace.packets.len());
        let first: crate::sim::PacketRecord =
            serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first.id, trace.packets[0].id);
    }
}
