//! Synchronous round-based random-walk engine.
//!
//! Every node owns a FIFO forward queue. In each round every node with a
//! non-empty queue sends its head-of-line packet to a uniformly chosen
//! neighbor. Sends are decided against the queues as they stood at the start
//! of the round, then delivered in ascending sender order; a packet received in
//! round `r` can leave its new node no earlier than round `r + 1`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::graph::Network;
use crate::rng::{self, Purpose, SimRng};

/// A walking unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    /// Source (or pre-code output) identifier.
    pub source: u32,
    /// Distinguishes copies of one source.
    pub copy: u32,
    /// Transmissions so far, `c(x)`.
    pub hops: u64,
    pub alive: bool,
}

impl Packet {
    pub fn new(source: u32, copy: u32) -> Self {
        Packet {
            source,
            copy,
            hops: 0,
            alive: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimClock {
    pub round: u64,
    pub transmissions: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Send,
    Arrive,
    Retire,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Send => "send",
            TraceKind::Arrive => "arrive",
            TraceKind::Retire => "retire",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub round: u64,
    pub node: u32,
    pub source: u32,
    pub hops: u64,
    pub kind: TraceKind,
}

/// Queues, per-node forwarding streams and accounting for one simulation.
#[derive(Debug, Clone)]
pub struct Walkers {
    queues: Vec<VecDeque<Packet>>,
    rngs: Vec<SimRng>,
    clock: SimClock,
    live: usize,
    retired: Vec<Packet>,
    max_queue: usize,
    trace: Option<Vec<TraceEvent>>,
    in_flight: Vec<(u32, u32, Packet)>,
}

impl Walkers {
    /// Empty queues for `n` nodes. Neighbor choices of node `u` come from the
    /// forwarding stream `u` under `seed`.
    pub fn new(n: usize, seed: u64) -> Self {
        Walkers {
            queues: vec![VecDeque::new(); n],
            rngs: rng::node_streams(seed, Purpose::Forwarding, n),
            clock: SimClock::default(),
            live: 0,
            retired: Vec::new(),
            max_queue: 0,
            trace: None,
            in_flight: Vec::new(),
        }
    }

    /// Records send/arrive/retire events from now on.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.as_mut().map(core::mem::take).unwrap_or_default()
    }

    /// Puts a fresh packet at the back of `node`'s queue without an arrival event.
    pub fn inject(&mut self, node: usize, packet: Packet) {
        self.queues[node].push_back(packet);
        self.live += 1;
        self.max_queue = self.max_queue.max(self.queues[node].len());
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn live(&self) -> usize {
        self.live
    }

    pub fn is_idle(&self) -> bool {
        self.live == 0
    }

    pub fn queue(&self, node: usize) -> &VecDeque<Packet> {
        &self.queues[node]
    }

    pub fn retired(&self) -> &[Packet] {
        &self.retired
    }

    /// Longest queue observed at any round boundary.
    pub fn max_queue_len(&self) -> usize {
        self.max_queue
    }

    /// Live packets in queue order, node by node.
    pub fn live_packets(&self) -> impl Iterator<Item = (usize, &Packet)> + '_ {
        self.queues
            .iter()
            .enumerate()
            .flat_map(|(u, q)| q.iter().map(move |p| (u, p)))
    }

    /// One synchronous round. `on_arrival(node, packet, round)` runs at the
    /// receiver as each packet lands; returning `false` retires the packet.
    pub fn step_round<F>(&mut self, net: &Network, on_arrival: F)
    where
        F: FnMut(usize, &Packet, u64) -> bool,
    {
        self.step_inner(net, 0..net.len(), on_arrival)
    }

    /// Same as [`Walkers::step_round`] but decides sends by visiting nodes in
    /// `order`. The outcome does not depend on the order.
    pub fn step_round_in_order<F>(&mut self, net: &Network, order: &[usize], on_arrival: F)
    where
        F: FnMut(usize, &Packet, u64) -> bool,
    {
        self.step_inner(net, order.iter().copied(), on_arrival)
    }

    fn step_inner<I, F>(&mut self, net: &Network, order: I, mut on_arrival: F)
    where
        I: Iterator<Item = usize>,
        F: FnMut(usize, &Packet, u64) -> bool,
    {
        self.clock.round += 1;
        let round = self.clock.round;
        let mut in_flight = core::mem::take(&mut self.in_flight);
        in_flight.clear();
        for u in order {
            let neighbors = net.neighbors(u);
            if neighbors.is_empty() {
                continue;
            }
            let Some(mut pkt) = self.queues[u].pop_front() else {
                continue;
            };
            let v = neighbors[self.rngs[u].gen_range(0..neighbors.len())];
            pkt.hops += 1;
            self.clock.transmissions += 1;
            if let Some(t) = self.trace.as_mut() {
                t.push(TraceEvent {
                    round,
                    node: u as u32,
                    source: pkt.source,
                    hops: pkt.hops,
                    kind: TraceKind::Send,
                });
            }
            in_flight.push((u as u32, v, pkt));
        }
        in_flight.sort_unstable_by_key(|&(sender, _, _)| sender);
        for &(_, v, mut pkt) in &in_flight {
            let v = v as usize;
            let keep = on_arrival(v, &pkt, round);
            if let Some(t) = self.trace.as_mut() {
                t.push(TraceEvent {
                    round,
                    node: v as u32,
                    source: pkt.source,
                    hops: pkt.hops,
                    kind: if keep { TraceKind::Arrive } else { TraceKind::Retire },
                });
            }
            if keep {
                self.queues[v].push_back(pkt);
                self.max_queue = self.max_queue.max(self.queues[v].len());
            } else {
                pkt.alive = false;
                self.live -= 1;
                self.retired.push(pkt);
            }
        }
        self.in_flight = in_flight;
    }

    /// Steps until no packet is alive or `max_rounds` total rounds have run.
    /// Returns whether the engine went idle.
    pub fn run_until_idle<F>(&mut self, net: &Network, max_rounds: u64, mut on_arrival: F) -> bool
    where
        F: FnMut(usize, &Packet, u64) -> bool,
    {
        while !self.is_idle() {
            if self.clock.round >= max_rounds {
                return false;
            }
            self.step_round(net, &mut on_arrival);
        }
        true
    }
}

/// Runs a single walk for `rounds` steps from `start` and returns, per node,
/// the gaps between consecutive visits. The start counts as a visit at time 0.
pub fn measure_return_times<R: Rng + ?Sized>(
    net: &Network,
    start: usize,
    rounds: u64,
    rng: &mut R,
) -> Vec<Vec<u32>> {
    let n = net.len();
    let mut last = vec![u64::MAX; n];
    let mut gaps = vec![Vec::new(); n];
    let mut at = start;
    last[at] = 0;
    for t in 1..=rounds {
        let nb = net.neighbors(at);
        at = nb[rng.gen_range(0..nb.len())] as usize;
        if last[at] != u64::MAX {
            gaps[at].push((t - last[at]) as u32);
        }
        last[at] = t;
    }
    gaps
}

/// `walkers` independent walks started at uniform nodes, stepping once per
/// round for `rounds` rounds. Returns, per node, the gaps between consecutive
/// visits by any walk. Simultaneous visits produce gaps of zero.
pub fn measure_packet_times<R: Rng + ?Sized>(
    net: &Network,
    walkers: usize,
    rounds: u64,
    rng: &mut R,
) -> Vec<Vec<u32>> {
    let n = net.len();
    let mut positions: Vec<usize> = (0..walkers).map(|_| rng.gen_range(0..n)).collect();
    let mut last = vec![u64::MAX; n];
    let mut gaps = vec![Vec::new(); n];
    for t in 1..=rounds {
        for at in positions.iter_mut() {
            let nb = net.neighbors(*at);
            *at = nb[rng.gen_range(0..nb.len())] as usize;
            let u = *at;
            if last[u] != u64::MAX {
                gaps[u].push((t - last[u]) as u32);
            }
            last[u] = t;
        }
    }
    gaps
}

/// Empirical mean over `trials` walks, each from a uniform start, of the
/// number of steps until every node has been visited.
pub fn measure_cover_time<R: Rng + ?Sized>(net: &Network, trials: usize, rng: &mut R) -> f64 {
    let n = net.len();
    let mut total = 0u64;
    let mut seen = vec![false; n];
    for _ in 0..trials {
        seen.iter_mut().for_each(|s| *s = false);
        let mut at = rng.gen_range(0..n);
        seen[at] = true;
        let mut remaining = n - 1;
        let mut steps = 0u64;
        while remaining > 0 {
            let nb = net.neighbors(at);
            at = nb[rng.gen_range(0..nb.len())] as usize;
            steps += 1;
            if !seen[at] {
                seen[at] = true;
                remaining -= 1;
            }
        }
        total += steps;
    }
    total as f64 / trials as f64
}
