//! Event-driven kernel: multi-class FCFS network with exponential servers,
//! Poisson sources and synchronous hop-to-hop transfers.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand_chacha::ChaCha8Rng;

use super::streams;
use super::SimError;
use crate::netmodel::{NetworkSpec, NodeId};
use crate::scalar::Scalar;

/// Network lowered to dense indices for the hot loop.
pub(crate) struct ResolvedNet<T> {
    pub mu: Vec<T>,
    pub node_keys: Vec<u64>,
    pub class_names: Vec<String>,
    pub class_lambda: Vec<T>,
    pub class_keys: Vec<u64>,
    /// Itineraries as node indices into `mu`.
    pub routes: Vec<Vec<usize>>,
    /// Node index at which waiting x interarrival products are collected.
    pub probe: Option<usize>,
}

impl<T: Scalar> ResolvedNet<T> {
    pub fn new(net: &NetworkSpec<T>, probe: Option<NodeId>) -> Result<Self, SimError> {
        let index: BTreeMap<NodeId, usize> = net
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id(), i))
            .collect();
        let probe = match probe {
            None => None,
            Some(id) => Some(*index.get(&id).ok_or(SimError::UnknownProbeNode(id))?),
        };
        Ok(Self {
            mu: net.nodes().iter().map(|n| n.mu()).collect(),
            node_keys: net.nodes().iter().map(|n| u64::from(n.id().0)).collect(),
            class_names: net.classes().iter().map(|c| c.name().to_owned()).collect(),
            class_lambda: net.classes().iter().map(|c| c.lambda()).collect(),
            class_keys: net
                .classes()
                .iter()
                .map(|c| streams::name_key(c.name()))
                .collect(),
            routes: net
                .classes()
                .iter()
                .map(|c| c.itinerary().iter().map(|id| index[id]).collect())
                .collect(),
            probe,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    /// A fresh packet of the class enters the network.
    Arrival { class: usize },
    /// The packet at the head of the node's queue finishes service.
    Completion { node: usize },
}

#[derive(Debug, Clone, Copy)]
struct Event<T> {
    time: T,
    /// Schedule order; breaks floating-point time ties deterministically.
    seq: u64,
    kind: EventKind,
}

impl<T: Scalar> PartialEq for Event<T> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl<T: Scalar> Eq for Event<T> {}

impl<T: Scalar> PartialOrd for Event<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Event<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .partial_cmp(&other.time)
            .expect("event times are finite")
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct Packet<T> {
    class: usize,
    gen_time: T,
    /// Entry rank within the class; exit must preserve it exactly.
    order: u64,
    /// Position in the class itinerary.
    hop: usize,
    /// Arrival instant at the current node.
    node_arrival: T,
    /// Gap behind the previous same-class arrival at the probe node.
    probe_gap: Option<T>,
}

/// Everything one replication produces. Departure records are
/// `(sojourn, exit time)` per class in exit order, post-warm-up only.
pub(crate) struct RepRun<T> {
    pub departures: Vec<Vec<(T, T)>>,
    pub wa_products: Vec<Vec<T>>,
    pub entered: Vec<u64>,
    pub exited: Vec<u64>,
}

struct Kernel<'a, T: Scalar> {
    net: &'a ResolvedNet<T>,
    heap: BinaryHeap<Reverse<Event<T>>>,
    seq: u64,
    queues: Vec<VecDeque<Packet<T>>>,
    arrival_rngs: Vec<ChaCha8Rng>,
    service_rngs: Vec<ChaCha8Rng>,
    last_probe_arrival: Vec<Option<T>>,
    last_exit_gen: Vec<Option<T>>,
    warmup: T,
    out: RepRun<T>,
}

impl<'a, T: Scalar> Kernel<'a, T> {
    fn schedule(&mut self, time: T, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Reverse(Event { time, seq, kind }));
    }

    fn start_service(&mut self, node: usize, now: T) {
        let head = self.queues[node].front().copied().expect("busy node");
        if self.net.probe == Some(node) && now >= self.warmup {
            if let Some(gap) = head.probe_gap {
                let wait = now - head.node_arrival;
                self.out.wa_products[head.class].push(wait * gap);
            }
        }
        let s = streams::exp_sample(&mut self.service_rngs[node], self.net.mu[node]);
        self.schedule(now + s, EventKind::Completion { node });
    }

    fn enqueue(&mut self, node: usize, mut packet: Packet<T>, now: T) {
        packet.node_arrival = now;
        if self.net.probe == Some(node) {
            packet.probe_gap = self.last_probe_arrival[packet.class].map(|prev| now - prev);
            self.last_probe_arrival[packet.class] = Some(now);
        }
        self.queues[node].push_back(packet);
        if self.queues[node].len() == 1 {
            self.start_service(node, now);
        }
    }

    fn on_arrival(&mut self, class: usize, now: T) {
        let packet = Packet {
            class,
            gen_time: now,
            order: self.out.entered[class],
            hop: 0,
            node_arrival: now,
            probe_gap: None,
        };
        self.out.entered[class] += 1;
        self.enqueue(self.net.routes[class][0], packet, now);
        let next =
            now + streams::exp_sample(&mut self.arrival_rngs[class], self.net.class_lambda[class]);
        self.schedule(next, EventKind::Arrival { class });
    }

    fn on_completion(
        &mut self,
        node: usize,
        now: T,
        on_departure: &mut dyn FnMut(usize, T, T),
    ) -> Result<(), SimError> {
        let mut packet = self.queues[node]
            .pop_front()
            .expect("completion at busy node");
        if !self.queues[node].is_empty() {
            self.start_service(node, now);
        }
        packet.hop += 1;
        let route = &self.net.routes[packet.class];
        if packet.hop < route.len() {
            self.enqueue(route[packet.hop], packet, now);
            return Ok(());
        }
        // FCFS along an overtake-free path must deliver in entry order. The
        // comparison is on exact entry ranks, immune to clock quantization.
        if packet.order != self.out.exited[packet.class] {
            let prev = self.last_exit_gen[packet.class].unwrap_or_else(T::nan);
            return Err(SimError::OvertakingDetected {
                class: self.net.class_names[packet.class].clone(),
                generated: packet.gen_time.to_f64_lossy(),
                previous: prev.to_f64_lossy(),
            });
        }
        self.last_exit_gen[packet.class] = Some(packet.gen_time);
        self.out.exited[packet.class] += 1;
        on_departure(packet.class, packet.gen_time, now);
        if now >= self.warmup {
            self.out.departures[packet.class].push((now - packet.gen_time, now));
        }
        Ok(())
    }
}

/// Runs one replication until the event clock passes `horizon`.
pub(crate) fn run_replication<T: Scalar>(
    net: &ResolvedNet<T>,
    horizon: T,
    warmup_fraction: T,
    master_seed: u64,
    replication: u32,
    on_departure: &mut dyn FnMut(usize, T, T),
) -> Result<RepRun<T>, SimError> {
    let n_nodes = net.mu.len();
    let n_classes = net.class_lambda.len();
    let mut kernel = Kernel {
        net,
        heap: BinaryHeap::new(),
        seq: 0,
        queues: vec![VecDeque::new(); n_nodes],
        arrival_rngs: net
            .class_keys
            .iter()
            .map(|&k| streams::arrival_stream(master_seed, replication, k))
            .collect(),
        service_rngs: net
            .node_keys
            .iter()
            .map(|&k| streams::service_stream(master_seed, replication, k))
            .collect(),
        last_probe_arrival: vec![None; n_classes],
        last_exit_gen: vec![None; n_classes],
        warmup: horizon * warmup_fraction,
        out: RepRun {
            departures: vec![Vec::new(); n_classes],
            wa_products: vec![Vec::new(); n_classes],
            entered: vec![0; n_classes],
            exited: vec![0; n_classes],
        },
    };
    for class in 0..n_classes {
        let t = streams::exp_sample(&mut kernel.arrival_rngs[class], net.class_lambda[class]);
        kernel.schedule(t, EventKind::Arrival { class });
    }
    while let Some(&Reverse(ev)) = kernel.heap.peek() {
        if ev.time > horizon {
            break;
        }
        kernel.heap.pop();
        match ev.kind {
            EventKind::Arrival { class } => kernel.on_arrival(class, ev.time),
            EventKind::Completion { node } => kernel.on_completion(node, ev.time, on_departure)?,
        }
    }
    // Conservation: every packet is either out or still queued somewhere.
    for class in 0..n_classes {
        let queued: u64 = kernel
            .queues
            .iter()
            .map(|q| q.iter().filter(|p| p.class == class).count() as u64)
            .sum();
        if kernel.out.entered[class] != kernel.out.exited[class] + queued {
            return Err(SimError::PacketImbalance {
                class: net.class_names[class].clone(),
                entered: kernel.out.entered[class],
                exited: kernel.out.exited[class],
                queued,
            });
        }
    }
    Ok(kernel.out)
}
