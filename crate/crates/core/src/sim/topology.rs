//! Node/link layout and static shortest-path routing.
//!
//! The network is a star of stars: every UE hangs off the gNodeB, the
//! gNodeB and the background cell hang off the core, the core connects to
//! the router, and every host hangs off the router. That graph is a tree,
//! so each node pair has exactly one path, which a breadth-first sweep per
//! source precomputes into a next-hop table.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use super::{LinkParams, ScenarioConfig, SimError};

/// Index into [`Topology::nodes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Ue,
    GNodeB,
    BackgroundCell,
    Core,
    Router,
    Host,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Position within its kind (ue[0], ue[1], ..., host[0], ...).
    pub ordinal: usize,
}

/// An undirected link; each direction has its own queue at runtime.
#[derive(Debug, Clone)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub params: LinkParams,
}

/// A link direction: `2*link + 0` carries a->b, `2*link + 1` carries b->a.
pub type DirId = usize;

#[derive(Debug, Clone)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    /// next_hop[src][dst] = (neighbor to forward to, link direction to use).
    next_hop: Vec<Vec<Option<(NodeId, DirId)>>>,
    ue_ids: Vec<NodeId>,
    host_ids: Vec<NodeId>,
    gnb: NodeId,
    background_cell: NodeId,
    core: NodeId,
    router: NodeId,
}

impl Topology {
    /// Lay out nodes and links for a config and precompute routing.
    pub fn build(config: &ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut nodes = Vec::new();
        let add = |kind: NodeKind, ordinal: usize, nodes: &mut Vec<Node>| -> NodeId {
            let id = NodeId(nodes.len());
            nodes.push(Node { id, kind, ordinal });
            id
        };
        let ue_ids: Vec<NodeId> = (0..config.n_ue)
            .map(|i| add(NodeKind::Ue, i, &mut nodes))
            .collect();
        let gnb = add(NodeKind::GNodeB, 0, &mut nodes);
        let background_cell = add(NodeKind::BackgroundCell, 0, &mut nodes);
        let core = add(NodeKind::Core, 0, &mut nodes);
        let router = add(NodeKind::Router, 0, &mut nodes);
        let host_ids: Vec<NodeId> = (0..config.n_hosts)
            .map(|j| add(NodeKind::Host, j, &mut nodes))
            .collect();

        let mut links = Vec::new();
        for &ue in &ue_ids {
            links.push(Link {
                a: ue,
                b: gnb,
                params: config.links.ue_gnb,
            });
        }
        links.push(Link {
            a: gnb,
            b: core,
            params: config.links.gnb_core,
        });
        links.push(Link {
            a: background_cell,
            b: core,
            params: config.links.gnb_core,
        });
        links.push(Link {
            a: core,
            b: router,
            params: config.links.core_router,
        });
        for &host in &host_ids {
            links.push(Link {
                a: host,
                b: router,
                params: config.links.host_router,
            });
        }

        let mut topo = Self {
            nodes,
            links,
            next_hop: Vec::new(),
            ue_ids,
            host_ids,
            gnb,
            background_cell,
            core,
            router,
        };
        topo.compute_routes()?;
        Ok(topo)
    }

    /// BFS from every source over the adjacency; the tree shape makes each
    /// shortest path unique.
    fn compute_routes(&mut self) -> Result<(), SimError> {
        let n = self.nodes.len();
        let mut adjacency: Vec<Vec<(NodeId, DirId)>> = vec![Vec::new(); n];
        for (li, link) in self.links.iter().enumerate() {
            adjacency[link.a.0].push((link.b, 2 * li));
            adjacency[link.b.0].push((link.a, 2 * li + 1));
        }
        let mut table = vec![vec![None; n]; n];
        for src in 0..n {
            // parent[v] = the (node, dir) used to first reach v from src.
            let mut first_step: Vec<Option<(NodeId, DirId)>> = vec![None; n];
            let mut visited = vec![false; n];
            visited[src] = true;
            let mut frontier = VecDeque::new();
            for &(nb, dir) in &adjacency[src] {
                visited[nb.0] = true;
                first_step[nb.0] = Some((nb, dir));
                frontier.push_back(nb);
            }
            while let Some(v) = frontier.pop_front() {
                for &(nb, _) in &adjacency[v.0] {
                    if !visited[nb.0] {
                        visited[nb.0] = true;
                        first_step[nb.0] = first_step[v.0];
                        frontier.push_back(nb);
                    }
                }
            }
            if let Some(unreached) = visited.iter().position(|&v| !v) {
                return Err(SimError::BadConfig(format!(
                    "node {} unreachable from node {src}",
                    unreached
                )));
            }
            table[src] = first_step;
        }
        self.next_hop = table;
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// First hop and link direction on the unique path src -> dst.
    pub fn next_hop(&self, src: NodeId, dst: NodeId) -> Option<(NodeId, DirId)> {
        self.next_hop[src.0][dst.0]
    }

    /// Number of links on the unique path between two nodes.
    pub fn path_len(&self, mut src: NodeId, dst: NodeId) -> usize {
        let mut hops = 0;
        while src != dst {
            let (next, _) = self.next_hop(src, dst).expect("connected topology");
            src = next;
            hops += 1;
        }
        hops
    }

    pub fn ue(&self, i: usize) -> NodeId {
        self.ue_ids[i]
    }

    pub fn ues(&self) -> &[NodeId] {
        &self.ue_ids
    }

    pub fn host(&self, j: usize) -> NodeId {
        self.host_ids[j]
    }

    pub fn hosts(&self) -> &[NodeId] {
        &self.host_ids
    }

    pub fn gnb(&self) -> NodeId {
        self.gnb
    }

    pub fn background_cell(&self) -> NodeId {
        self.background_cell
    }

    pub fn core(&self) -> NodeId {
        self.core
    }

    pub fn router(&self) -> NodeId {
        self.router
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.0].kind
    }

    /// Short display name: "ue[3]", "gnb", "bgcell", "core", "router",
    /// "host[0]".
    pub fn node_name(&self, id: NodeId) -> String {
        let node = &self.nodes[id.0];
        match node.kind {
            NodeKind::Ue => format!("ue[{}]", node.ordinal),
            NodeKind::GNodeB => "gnb".to_string(),
            NodeKind::BackgroundCell => "bgcell".to_string(),
            NodeKind::Core => "core".to_string(),
            NodeKind::Router => "router".to_string(),
            NodeKind::Host => format!("host[{}]", node.ordinal),
        }
    }

    /// The two endpoints of a direction: (from, to).
    pub fn dir_endpoints(&self, dir: DirId) -> (NodeId, NodeId) {
        let link = &self.links[dir / 2];
        if dir.is_multiple_of(2) {
            (link.a, link.b)
        } else {
            (link.b, link.a)
        }
    }

    pub fn dir_params(&self, dir: DirId) -> LinkParams {
        self.links[dir / 2].params
    }

    pub fn dir_count(&self) -> usize {
        self.links.len() * 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ScenarioConfig;

    fn config(n_ue: usize, n_hosts: usize) -> ScenarioConfig {
        ScenarioConfig {
            n_ue,
            n_hosts,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn default_scale_has_107_nodes() {
        let topo = Topology::build(&config(100, 3)).unwrap();
        assert_eq!(topo.node_count(), 107);
        assert_eq!(topo.links.len(), 100 + 1 + 1 + 1 + 3);
    }

    #[test]
    fn minimal_topology_without_hosts() {
        let topo = Topology::build(&config(2, 0)).unwrap();
        assert_eq!(topo.node_count(), 6);
        assert!(topo.hosts().is_empty());
    }

    #[test]
    fn desk_scale_all_pairs_routed() {
        let topo = Topology::build(&config(20, 3)).unwrap();
        assert_eq!(topo.node_count(), 27);
        for a in 0..topo.node_count() {
            for b in 0..topo.node_count() {
                if a != b {
                    assert!(
                        topo.next_hop(NodeId(a), NodeId(b)).is_some(),
                        "no route {a} -> {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn paths_follow_the_tree() {
        let topo = Topology::build(&config(4, 2)).unwrap();
        // UE to UE crosses only the gNodeB.
        assert_eq!(topo.path_len(topo.ue(0), topo.ue(3)), 2);
        let (first, _) = topo.next_hop(topo.ue(0), topo.ue(3)).unwrap();
        assert_eq!(first, topo.gnb());
        // Host to UE: router -> core -> gNodeB -> UE.
        assert_eq!(topo.path_len(topo.host(0), topo.ue(1)), 4);
        // Host to host via the router.
        assert_eq!(topo.path_len(topo.host(0), topo.host(1)), 2);
    }

    #[test]
    fn rejects_single_ue() {
        assert!(Topology::build(&config(1, 3)).is_err());
    }

    #[test]
    fn direction_endpoints_are_consistent() {
        let topo = Topology::build(&config(3, 1)).unwrap();
        for dir in 0..topo.dir_count() {
            let (from, to) = topo.dir_endpoints(dir);
            let (back_from, back_to) = topo.dir_endpoints(dir ^ 1);
            assert_eq!(from, back_to);
            assert_eq!(to, back_from);
        }
    }

    #[test]
    fn node_names_are_stable() {
        let topo = Topology::build(&config(3, 2)).unwrap();
        assert_eq!(topo.node_name(topo.ue(2)), "ue[2]");
        assert_eq!(topo.node_name(topo.gnb()), "gnb");
        assert_eq!(topo.node_name(topo.host(1)), "host[1]");
        assert_eq!(topo.node_name(topo.core()), "core");
        assert_eq!(topo.node_name(topo.router()), "router");
        assert_eq!(topo.node_name(topo.background_cell()), "bgcell");
    }
}
