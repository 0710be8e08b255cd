//! The event loop.
//!
//! Synchronous modes schedule every event of a round, then drain the queue in
//! `(time, sequence)` order into the log. The asynchronous mode is driven by
//! the queue: each arriving update is merged and its sender dispatched again.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::data::{generate_data, Dataset, SimData};
use super::events::{EventKind, EventLog, EventQueue};
use super::fedavg::{fedavg_aggregate, Update};
use super::model;
use super::network::{account_message, model_payload_bytes, Direction, Link, TrafficCounters};
use super::rng::{tag, Stream};
use super::{DeploymentOutcome, SimConfig, SimError, SimMetrics, SimOutput};
use crate::math;
use crate::plugins::cluster::{by_group_label, kmeans};
use crate::plugins::compressor;
use crate::plugins::data_handler::balance_local_data;
use crate::plugins::deployment::{capability, match_deployment, ModelCandidate};
use crate::plugins::gossip::{gossip_random_k, gossip_ring};
use crate::plugins::incentive::{participation_prob, IncentiveLedger};
use crate::plugins::multi_task::share_block;
use crate::plugins::registry::{model_hash, ClientMetadata, ClientRegistry, CoVersionRecord, CoVersioningRegistry};
use crate::plugins::secure::secure_sum;
use crate::plugins::selector::{select_clients, Candidate};
use crate::plugins::staleness::async_merge;
use crate::plugins::trigger::{ReplacementTrigger, TriggerDecision};
use crate::plugins::{EdgeAssignment, Grouping, PatternToggles, Topology};

const SERVER: u64 = u64::MAX;

fn edge_actor(e: usize) -> u64 {
    1 << 32 | e as u64
}

fn aggregation_key(round: u64, edge: usize, slot: usize) -> u64 {
    round << 24 | (edge as u64) << 12 | slot as u64
}

#[derive(Debug, Clone)]
struct Device {
    speed: f64,
    bandwidth: f64,
    latency: f64,
    dropout: f64,
    memory_rank: u32,
    os_version: String,
}

fn draw_devices(config: &SimConfig) -> Vec<Device> {
    let net = &config.network;
    let n = config.n_clients;
    let mut order: Vec<usize> = (0..n).collect();
    Stream::new(config.seed, tag::DEVICE, u64::MAX, 0).shuffle(&mut order);
    let n_slow = math::round(net.straggler_fraction * n as f64) as usize;
    let mut slow = vec![false; n];
    for &k in &order[..n_slow] {
        slow[k] = true;
    }
    (0..n)
        .map(|k| {
            let mut s = Stream::new(config.seed, tag::DEVICE, k as u64, 0);
            let mut speed = s.range(net.device_speed.min, net.device_speed.max);
            let mut bandwidth = s.range(net.bandwidth.min, net.bandwidth.max);
            let latency = s.range(net.latency.min, net.latency.max);
            let dropout = s.range(config.dropout_prob.min, config.dropout_prob.max);
            let memory_rank = 1 + s.below(4) as u32;
            let os_version = format!("os-{}", 1 + s.below(3));
            if slow[k] {
                speed /= net.straggler_slowdown;
                bandwidth /= net.straggler_slowdown;
            }
            Device { speed, bandwidth, latency, dropout, memory_rank, os_version }
        })
        .collect()
}

/// A contribution travelling to the server.
#[derive(Debug, Clone)]
struct InFlight {
    unit: usize,
    base_version: u64,
    /// Model per cluster slot.
    models: Vec<(usize, Vec<f64>)>,
    /// `(client, local model hash)` of every update folded in.
    contributors: Vec<(usize, String)>,
}

#[derive(Debug, Clone)]
enum Payload {
    None,
    Retry(usize),
    Update(InFlight),
}

struct Runner<'a> {
    cfg: &'a SimConfig,
    toggles: &'a PatternToggles,
    n_tasks: usize,
    d: usize,
    devices: Vec<Device>,
    data: SimData,
    train: Vec<Vec<Dataset>>,
    eligible: Vec<usize>,
    selected: Option<Vec<usize>>,
    groups: Option<Vec<usize>>,
    slot_of: Vec<usize>,
    slot_weight: Vec<usize>,
    edges: Option<Vec<usize>>,
    n_edges: usize,
    slots: Vec<Vec<f64>>,
    global: Vec<f64>,
    locals: Vec<Vec<f64>>,
    version: u64,
    now: f64,
    queue: EventQueue<Payload>,
    log: EventLog,
    traffic: TrafficCounters,
    participation: Vec<u64>,
    ledger: Option<IncentiveLedger>,
    client_registry: Option<ClientRegistry>,
    co_versioning: Option<CoVersioningRegistry>,
    trigger: Option<ReplacementTrigger>,
    replacement_triggers: usize,
    accuracy_per_round: Vec<f64>,
    round_end_times: Vec<f64>,
    discarded_stale: u64,
    discarded_rounds: u64,
    crashed: bool,
    accuracy_at_crash: Option<f64>,
    target_hit: Option<(usize, f64, u64)>,
}

/// Runs `config`, optionally keeping every processed event.
pub fn simulate(config: &SimConfig, keep_events: bool) -> Result<SimOutput, SimError> {
    config.validate()?;
    let mut runner = Runner::new(config, keep_events)?;
    if config.pattern_toggles.asynchronous_aggregator.is_some() {
        runner.run_async()?;
    } else {
        runner.run_sync()?;
    }
    Ok(runner.finish())
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a SimConfig, keep_events: bool) -> Result<Self, SimError> {
        let toggles = &cfg.pattern_toggles;
        let n = cfg.n_clients;
        let c = cfg.n_classes;
        let mut data = generate_data(cfg);
        let n_tasks = data.test.len();
        let d = model::dim(c, cfg.n_features);
        let devices = draw_devices(cfg);

        let histograms: Vec<Vec<f64>> = data.clients.iter().map(|cl| cl.train[0].label_histogram(c)).collect();
        let balance = toggles.heterogeneous_data_handler.is_some_and(|h| h.oversample_to_balance);
        let train: Vec<Vec<Dataset>> = data
            .clients
            .iter_mut()
            .enumerate()
            .map(|(k, cl)| {
                let sets = core::mem::take(&mut cl.train);
                if !balance {
                    return sets;
                }
                sets.iter()
                    .enumerate()
                    .map(|(t, ds)| balance_local_data(ds, c, &mut Stream::new(cfg.seed, tag::OVERSAMPLE, k as u64, t as u64)))
                    .collect()
            })
            .collect();

        let mut client_registry = toggles.client_registry.map(|r| ClientRegistry::new(r.hash_chained));
        if let Some(reg) = &mut client_registry {
            for (k, dev) in devices.iter().enumerate() {
                reg.register(
                    k,
                    ClientMetadata {
                        os_version: dev.os_version.clone(),
                        memory_rank: dev.memory_rank,
                        device_speed: dev.speed,
                        bandwidth: dev.bandwidth,
                    },
                );
            }
        }

        let selected = match &toggles.client_selector {
            Some(policy) => {
                let candidates: Vec<Candidate> = (0..n)
                    .map(|k| match client_registry.as_ref().and_then(|r| r.metadata(k)) {
                        Some(m) => Candidate { client_id: k, speed: m.device_speed, bandwidth: m.bandwidth },
                        None => Candidate { client_id: k, speed: devices[k].speed, bandwidth: devices[k].bandwidth },
                    })
                    .collect();
                Some(select_clients(&candidates, policy)?)
            }
            None => None,
        };
        let eligible = selected.clone().unwrap_or_else(|| (0..n).collect());

        let groups = toggles.client_cluster.map(|cc| match cc.grouping {
            Grouping::ByLabelDistribution => {
                kmeans(&histograms, cc.n_groups, &mut Stream::new(cfg.seed, tag::KMEANS, 0, 0))
            }
            Grouping::ByGroupLabel => {
                let labels: Vec<usize> = data.clients.iter().map(|cl| cl.group_label.unwrap_or(cl.client_id)).collect();
                by_group_label(&labels, cc.n_groups)
            }
        });
        let n_slots = toggles.client_cluster.map_or(1, |cc| cc.n_groups);
        let slot_of = groups.clone().unwrap_or_else(|| vec![0; n]);
        let mut slot_weight = vec![0; n_slots];
        for k in 0..n {
            slot_weight[slot_of[k]] += train[k][0].len();
        }

        let edges = toggles.hierarchical_aggregator.map(|h| {
            (0..n)
                .map(|k| match h.assignment {
                    EdgeAssignment::ByGroupLabel => data.clients[k].group_label.unwrap_or(k) % h.n_edges,
                    EdgeAssignment::RoundRobin => k % h.n_edges,
                })
                .collect::<Vec<usize>>()
        });
        let n_edges = toggles.hierarchical_aggregator.map_or(0, |h| h.n_edges);

        let zeros = vec![0.0; n_tasks * d];
        Ok(Runner {
            cfg,
            toggles,
            n_tasks,
            d,
            devices,
            data,
            train,
            eligible,
            selected,
            groups,
            slot_of,
            slot_weight,
            edges,
            n_edges,
            slots: vec![zeros.clone(); n_slots],
            global: zeros.clone(),
            locals: if toggles.decentralised_aggregator.is_some() { vec![zeros; n] } else { Vec::new() },
            version: 0,
            now: 0.0,
            queue: EventQueue::new(),
            log: EventLog::new(keep_events),
            traffic: TrafficCounters::default(),
            participation: vec![0; n],
            ledger: toggles.incentive_registry.map(|_| IncentiveLedger::new(n)),
            client_registry,
            co_versioning: toggles.model_co_versioning_registry.map(|c| CoVersioningRegistry::new(c.hash_chained)),
            trigger: toggles.model_replacement_trigger.map(|t| ReplacementTrigger::new(t.window, t.drop_threshold)),
            replacement_triggers: 0,
            accuracy_per_round: Vec::new(),
            round_end_times: Vec::new(),
            discarded_stale: 0,
            discarded_rounds: 0,
            crashed: false,
            accuracy_at_crash: None,
            target_hit: None,
        })
    }

    // ---- wire formats ----

    fn model_bytes(&self) -> u64 {
        let len = self.n_tasks * self.d;
        match self.toggles.message_compressor {
            Some(c) => compressor::payload_bytes(len, c.bits),
            None => model_payload_bytes(len),
        }
    }

    fn masking(&self) -> bool {
        self.toggles.secure_aggregator.is_some_and(|s| s.masking)
    }

    /// Masked uploads are fixed-point vectors and bypass the compressor.
    fn client_uplink_bytes(&self) -> u64 {
        if self.masking() {
            model_payload_bytes(self.n_tasks * self.d)
        } else {
            self.model_bytes()
        }
    }

    fn transmit(&self, w: &[f64]) -> Vec<f64> {
        match self.toggles.message_compressor {
            Some(c) => compressor::round_trip(w, c.bits),
            None => w.to_vec(),
        }
    }

    fn transmit_client_uplink(&self, w: &[f64]) -> Vec<f64> {
        if self.masking() {
            w.to_vec()
        } else {
            self.transmit(w)
        }
    }

    fn send_client(&mut self, direction: Direction, link: Link, bytes: u64, k: usize) -> f64 {
        let (bw, lat) = (self.devices[k].bandwidth, self.devices[k].latency);
        account_message(&mut self.traffic, direction, bytes, link, bw, lat)
    }

    fn send_edge(&mut self, direction: Direction, bytes: u64) -> f64 {
        let link = self.cfg.network.edge_link;
        account_message(&mut self.traffic, direction, bytes, Link::EdgeCentral, link.bandwidth, link.latency)
    }

    // ---- clients ----

    fn participates(&self, k: usize, key: u64) -> bool {
        let u = Stream::new(self.cfg.seed, tag::DROPOUT, k as u64, key).uniform();
        let base = 1.0 - self.devices[k].dropout;
        let p = match (&self.toggles.incentive_registry, &self.ledger) {
            (Some(i), Some(ledger)) => participation_prob(i.p_base.unwrap_or(base), i.p_gain, ledger.rewards[k]),
            _ => base,
        };
        u < p
    }

    fn n_samples(&self, k: usize) -> usize {
        self.train[k][0].len()
    }

    fn nominal_compute(&self, k: usize) -> f64 {
        let samples: usize = self.train[k].iter().map(|t| t.len()).sum();
        self.cfg.local_epochs as f64 * samples as f64 / self.devices[k].speed
    }

    /// Trains every task slice from `start`; returns the model and compute time.
    fn local_update(&self, k: usize, start: &[f64], key: u64) -> Result<(Vec<f64>, f64), SimError> {
        let cfg = self.cfg;
        let mut out = Vec::with_capacity(start.len());
        let mut time = 0.0;
        for t in 0..self.n_tasks {
            let mut shuffle = Stream::new(cfg.seed, tag::SHUFFLE, k as u64, key << 8 | t as u64);
            let o = model::local_train(
                &start[t * self.d..(t + 1) * self.d],
                cfg.n_classes,
                &self.train[k][t],
                cfg.local_epochs,
                cfg.learning_rate,
                cfg.batch_mode,
                self.devices[k].speed,
                &mut shuffle,
            )?;
            out.extend(o.weights);
            time += o.compute_time;
        }
        if let Some(mt) = &self.toggles.multi_task_model_trainer {
            share_block(&mut out, self.n_tasks, cfg.n_classes, cfg.n_features, mt.shared_dims);
        }
        Ok((out, time))
    }

    /// Aggregation of one group of client updates.
    fn combine(&self, updates: &[Update], key: u64) -> Result<Vec<f64>, SimError> {
        match &self.toggles.secure_aggregator {
            Some(s) => secure_sum(updates, s.masking, s.dp_sigma, self.cfg.seed, key),
            None => fedavg_aggregate(updates),
        }
    }

    fn combine_slots(&self) -> Result<Vec<f64>, SimError> {
        if self.slots.len() == 1 {
            return Ok(self.slots[0].clone());
        }
        let parts: Vec<Update> = self
            .slots
            .iter()
            .enumerate()
            .map(|(s, w)| Update { client_id: s, weights: w.clone(), n_samples: self.slot_weight[s] })
            .collect();
        fedavg_aggregate(&parts)
    }

    fn decentral_model(&self) -> Result<Vec<f64>, SimError> {
        let parts: Vec<Update> = self
            .locals
            .iter()
            .enumerate()
            .map(|(k, w)| Update { client_id: k, weights: w.clone(), n_samples: self.n_samples(k) })
            .collect();
        fedavg_aggregate(&parts)
    }

    // ---- evaluation ----

    fn accuracy_on(&self, w: &[f64], sets: &[Dataset]) -> Vec<f64> {
        sets.iter()
            .enumerate()
            .map(|(t, ds)| model::accuracy(&w[t * self.d..(t + 1) * self.d], self.cfg.n_classes, ds))
            .collect()
    }

    fn mean(values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len() as f64
    }

    fn global_accuracy(&self) -> f64 {
        Self::mean(&self.accuracy_on(&self.global, &self.data.test))
    }

    fn client_accuracy(&self, k: usize, w: &[f64]) -> f64 {
        Self::mean(&self.accuracy_on(w, &self.data.clients[k].test))
    }

    fn client_model(&self, k: usize) -> &[f64] {
        if self.locals.is_empty() {
            &self.slots[self.slot_of[k]]
        } else {
            &self.locals[k]
        }
    }

    // ---- bookkeeping ----

    fn drain(&mut self) {
        while let Some(ev) = self.queue.pop() {
            self.log.record(ev.time, ev.kind, ev.actor, ev.bytes);
        }
    }

    fn reset_models(&mut self) {
        let zeros = vec![0.0; self.n_tasks * self.d];
        for s in &mut self.slots {
            s.clone_from(&zeros);
        }
        for l in &mut self.locals {
            l.clone_from(&zeros);
        }
        self.global = zeros;
    }

    /// Credits accepted updates and records the new global version.
    fn accept(&mut self, round: usize, contributors: &[(usize, String)], accuracy: f64) -> Result<(), SimError> {
        let mut sorted = contributors.to_vec();
        sorted.sort();
        for (k, _) in &sorted {
            self.participation[*k] += 1;
            if let Some(reg) = &mut self.client_registry {
                reg.seen(*k, round);
            }
            if let (Some(ledger), Some(inc)) = (&mut self.ledger, &self.toggles.incentive_registry) {
                ledger.credit(round, *k, self.train[*k][0].len(), inc.reward_per_update);
            }
        }
        if let Some(cv) = &mut self.co_versioning {
            cv.record_co_version(CoVersionRecord {
                global_version: self.version,
                round,
                contributors: sorted.iter().map(|(k, _)| *k).collect(),
                local_model_hashes: sorted.into_iter().map(|(_, h)| h).collect(),
                global_model_hash: model_hash(&self.global),
                accuracy,
            })?;
        }
        Ok(())
    }

    /// Label drift and server crash scheduled for the start of `round`.
    fn apply_faults(&mut self, round: usize) {
        let faults = self.cfg.faults;
        if faults.label_drift_round == Some(round) {
            let c = self.cfg.n_classes;
            for sets in &mut self.train {
                sets.iter_mut().for_each(|s| s.shift_labels(c));
            }
            for cl in &mut self.data.clients {
                cl.test.iter_mut().for_each(|s| s.shift_labels(c));
            }
            self.data.test.iter_mut().for_each(|s| s.shift_labels(c));
            self.log.record(self.now, EventKind::LabelDrift, SERVER, 0);
        }
        if faults.server_crash_round == Some(round) && !self.crashed {
            self.crashed = true;
            self.accuracy_at_crash = Some(self.global_accuracy());
            self.log.record(self.now, EventKind::ServerCrash, SERVER, 0);
        }
    }

    /// Records the round's accuracy; returns true once the target is reached.
    fn close_round(&mut self, accuracy: f64) -> bool {
        self.accuracy_per_round.push(accuracy);
        self.round_end_times.push(self.now);
        self.log.record(self.now, EventKind::Evaluate, SERVER, 0);
        self.check_target(accuracy, self.accuracy_per_round.len())
    }

    fn check_target(&mut self, accuracy: f64, rounds: usize) -> bool {
        match self.cfg.target_accuracy {
            Some(target) if self.target_hit.is_none() && accuracy >= target => {
                self.target_hit = Some((rounds, self.now, self.traffic.uplink_messages));
                true
            }
            _ => false,
        }
    }

    fn observe_trigger(&mut self, accuracy: f64) {
        if let Some(trigger) = &mut self.trigger {
            if trigger.observe(accuracy) == TriggerDecision::TriggerRetrain {
                self.replacement_triggers += 1;
                self.reset_models();
                self.log.record(self.now, EventKind::ReplacementTrigger, SERVER, 0);
            }
        }
    }

    // ---- synchronous rounds ----

    fn run_sync(&mut self) -> Result<(), SimError> {
        let decentralised = self.toggles.decentralised_aggregator.is_some();
        for round in 0..self.cfg.rounds {
            self.apply_faults(round);
            if self.crashed && !decentralised {
                let acc = self.global_accuracy();
                self.close_round(acc);
                continue;
            }
            if decentralised {
                self.gossip_round(round)?;
            } else {
                self.server_round(round)?;
            }
            let acc = self.global_accuracy();
            if self.close_round(acc) {
                break;
            }
            self.observe_trigger(acc);
        }
        Ok(())
    }

    fn server_round(&mut self, round: usize) -> Result<(), SimError> {
        let t0 = self.now;
        let key = round as u64;
        let eligible = self.eligible.clone();
        let down_bytes = self.model_bytes();
        let n = self.cfg.n_clients;

        // broadcast
        let mut arrive = vec![0.0; n];
        match self.edges.clone() {
            None => {
                for &k in &eligible {
                    arrive[k] = self.send_client(Direction::Downlink, Link::ClientServer, down_bytes, k);
                }
            }
            Some(assign) => {
                for e in 0..self.n_edges {
                    let members: Vec<usize> = eligible.iter().copied().filter(|&k| assign[k] == e).collect();
                    if members.is_empty() {
                        continue;
                    }
                    let et = self.send_edge(Direction::Downlink, down_bytes);
                    self.queue.schedule(t0 + et, EventKind::DownlinkArrive, edge_actor(e), down_bytes, Payload::None);
                    for k in members {
                        arrive[k] = et + self.send_client(Direction::Downlink, Link::ClientEdge, down_bytes, k);
                    }
                }
            }
        }
        self.queue.schedule(t0, EventKind::Broadcast, SERVER, down_bytes, Payload::None);
        let broadcast_time = eligible.iter().map(|&k| arrive[k]).fold(0.0, f64::max);

        // local training
        let up_link = if self.edges.is_some() { Link::ClientEdge } else { Link::ClientServer };
        let up_bytes = self.client_uplink_bytes();
        let mut finish = vec![0.0; n];
        let mut updates: Vec<(usize, Update, String)> = Vec::new();
        for &k in &eligible {
            self.queue.schedule(t0 + arrive[k], EventKind::DownlinkArrive, k as u64, down_bytes, Payload::None);
            if !self.participates(k, key) {
                self.queue.schedule(t0 + arrive[k], EventKind::Dropout, k as u64, 0, Payload::None);
                continue;
            }
            let start = self.transmit(&self.slots[self.slot_of[k]]);
            let (w, compute) = self.local_update(k, &start, key)?;
            self.queue.schedule(t0 + broadcast_time + compute, EventKind::TrainDone, k as u64, 0, Payload::None);
            let ut = self.send_client(Direction::Uplink, up_link, up_bytes, k);
            finish[k] = broadcast_time + compute + ut;
            self.queue.schedule(t0 + finish[k], EventKind::UplinkArrive, k as u64, up_bytes, Payload::None);
            let sent = self.transmit_client_uplink(&w);
            let hash = model_hash(&sent);
            updates.push((k, Update { client_id: k, weights: sent, n_samples: self.n_samples(k) }, hash));
        }

        // aggregation
        let n_slots = self.slots.len();
        let mut t_end = t0 + broadcast_time + updates.iter().map(|(k, _, _)| finish[*k]).fold(0.0, f64::max);
        let mut new_slots: Vec<Option<Vec<f64>>> = vec![None; n_slots];
        let mut accepted: Vec<(usize, String)> = Vec::new();
        match self.edges.clone() {
            None => {
                for (s, slot) in new_slots.iter_mut().enumerate() {
                    let group: Vec<&(usize, Update, String)> = updates.iter().filter(|(k, _, _)| self.slot_of[*k] == s).collect();
                    if group.is_empty() {
                        continue;
                    }
                    let ups: Vec<Update> = group.iter().map(|(_, u, _)| u.clone()).collect();
                    match self.combine(&ups, aggregation_key(key, 0, s)) {
                        Ok(w) => {
                            *slot = Some(w);
                            accepted.extend(group.iter().map(|(k, _, h)| (*k, h.clone())));
                        }
                        Err(SimError::MaskingCardinality(_)) => {
                            self.discarded_rounds += 1;
                            self.queue.schedule(t_end, EventKind::DiscardRound, SERVER, 0, Payload::None);
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            Some(assign) => {
                let edge_bytes = self.model_bytes();
                let mut edge_models: Vec<Vec<Update>> = vec![Vec::new(); n_slots];
                for e in 0..self.n_edges {
                    let members: Vec<&(usize, Update, String)> = updates.iter().filter(|(k, _, _)| assign[*k] == e).collect();
                    if members.is_empty() {
                        continue;
                    }
                    let ready = t0 + members.iter().map(|(k, _, _)| finish[*k]).fold(broadcast_time, f64::max);
                    for (s, models) in edge_models.iter_mut().enumerate() {
                        let group: Vec<&&(usize, Update, String)> =
                            members.iter().filter(|(k, _, _)| self.slot_of[*k] == s).collect();
                        if group.is_empty() {
                            continue;
                        }
                        let ups: Vec<Update> = group.iter().map(|(_, u, _)| u.clone()).collect();
                        match self.combine(&ups, aggregation_key(key, e, s)) {
                            Ok(w) => {
                                let weight = ups.iter().map(|u| u.n_samples).sum();
                                let sent = self.transmit(&w);
                                let et = self.send_edge(Direction::Uplink, edge_bytes);
                                self.queue.schedule(ready, EventKind::EdgeAggregate, edge_actor(e), 0, Payload::None);
                                self.queue.schedule(ready + et, EventKind::UplinkArrive, edge_actor(e), edge_bytes, Payload::None);
                                t_end = t_end.max(ready + et);
                                models.push(Update { client_id: e, weights: sent, n_samples: weight });
                                accepted.extend(group.iter().map(|(k, _, h)| (*k, h.clone())));
                            }
                            Err(SimError::MaskingCardinality(_)) => {
                                self.discarded_rounds += 1;
                                self.queue.schedule(ready, EventKind::DiscardRound, edge_actor(e), 0, Payload::None);
                            }
                            Err(err) => return Err(err),
                        }
                    }
                }
                for (slot, models) in new_slots.iter_mut().zip(&edge_models) {
                    if !models.is_empty() {
                        *slot = Some(fedavg_aggregate(models)?);
                    }
                }
            }
        }

        if new_slots.iter().any(Option::is_some) {
            for (slot, w) in self.slots.iter_mut().zip(new_slots) {
                if let Some(w) = w {
                    *slot = w;
                }
            }
            self.global = self.combine_slots()?;
            self.version += 1;
            self.queue.schedule(t_end, EventKind::Aggregate, SERVER, 0, Payload::None);
            let acc = if self.co_versioning.is_some() { self.global_accuracy() } else { 0.0 };
            self.accept(round, &accepted, acc)?;
        }
        self.drain();
        self.now = t_end;
        Ok(())
    }

    fn gossip_round(&mut self, round: usize) -> Result<(), SimError> {
        let t0 = self.now;
        let key = round as u64;
        let eligible = self.eligible.clone();
        let mut participants = Vec::new();
        let mut max_compute: f64 = 0.0;
        for &k in &eligible {
            if !self.participates(k, key) {
                self.queue.schedule(t0, EventKind::Dropout, k as u64, 0, Payload::None);
                continue;
            }
            let (w, compute) = self.local_update(k, &self.locals[k], key)?;
            self.locals[k] = w;
            self.queue.schedule(t0 + compute, EventKind::TrainDone, k as u64, 0, Payload::None);
            max_compute = max_compute.max(compute);
            participants.push(k);
        }

        // peers exchange what the wire carries
        let mut models: Vec<Vec<f64>> = participants.iter().map(|&k| self.transmit(&self.locals[k])).collect();
        let ring = matches!(self.toggles.decentralised_aggregator.map(|d| d.topology), Some(Topology::Ring));
        let pairs = match self.toggles.decentralised_aggregator.map(|d| d.topology) {
            Some(Topology::RandomK { k }) => {
                gossip_random_k(&mut models, k, &mut Stream::new(self.cfg.seed, tag::GOSSIP, key, 0))
            }
            _ => gossip_ring(&mut models),
        };
        let bytes = self.model_bytes();
        let mut elapsed: f64 = 0.0;
        for (a, b) in pairs {
            let (ka, kb) = (participants[a], participants[b]);
            let ta = self.send_client(Direction::Peer, Link::Peer, bytes, ka);
            let tb = self.send_client(Direction::Peer, Link::Peer, bytes, kb);
            let pair_time = ta.max(tb);
            let at = if ring {
                elapsed += pair_time;
                elapsed
            } else {
                elapsed = elapsed.max(pair_time);
                pair_time
            };
            self.queue.schedule(t0 + max_compute + at, EventKind::Gossip, ka as u64, 2 * bytes, Payload::None);
        }
        let mut contributors = Vec::new();
        for (&k, w) in participants.iter().zip(models) {
            contributors.push((k, model_hash(&w)));
            self.locals[k] = w;
        }
        let t_end = t0 + max_compute + elapsed;
        if !participants.is_empty() {
            self.global = self.decentral_model()?;
            self.version += 1;
            let acc = if self.co_versioning.is_some() { self.global_accuracy() } else { 0.0 };
            self.accept(round, &contributors, acc)?;
        }
        self.drain();
        self.now = t_end;
        Ok(())
    }

    // ---- asynchronous merging ----

    fn run_async(&mut self) -> Result<(), SimError> {
        let params = self.toggles.asynchronous_aggregator.expect("async mode");
        let units: Vec<usize> = match &self.edges {
            Some(assign) => (0..self.n_edges).filter(|e| self.eligible.iter().any(|&k| assign[k] == *e)).collect(),
            None => self.eligible.clone(),
        };
        let n_units = units.len();
        let budget = (self.cfg.rounds * n_units) as u64;
        let max_dispatches = budget * 50;
        let mut cycles = vec![0u64; n_units];
        let mut dispatches = 0u64;
        let mut merges = 0u64;

        self.apply_faults(0);
        if !self.crashed {
            for u in 0..n_units {
                dispatches += 1;
                self.dispatch(&units, u, &mut cycles)?;
            }
        }
        while !self.crashed {
            let Some(ev) = self.queue.pop() else { break };
            self.log.record(ev.time, ev.kind, ev.actor, ev.bytes);
            self.now = ev.time;
            let unit = match ev.payload {
                Payload::None => continue,
                Payload::Retry(unit) => unit,
                Payload::Update(update) => {
                    match &self.edges {
                        Some(_) => {
                            let link = self.cfg.network.edge_link;
                            let _ = account_message(&mut self.traffic, Direction::Uplink, ev.bytes, Link::EdgeCentral, link.bandwidth, link.latency);
                        }
                        None => {
                            let k = units[update.unit];
                            let _ = self.send_client(Direction::Uplink, Link::ClientServer, ev.bytes, k);
                        }
                    }
                    let staleness = self.version - update.base_version;
                    if staleness > params.max_staleness {
                        self.discarded_stale += 1;
                        self.log.record(self.now, EventKind::DiscardStale, ev.actor, 0);
                    } else {
                        for (s, w) in &update.models {
                            self.slots[*s] = async_merge(&self.slots[*s], w, staleness, params.alpha);
                        }
                        self.global = self.combine_slots()?;
                        self.version += 1;
                        merges += 1;
                        self.log.record(self.now, EventKind::Merge, SERVER, 0);
                        let acc = self.global_accuracy();
                        let round = (merges - 1) / n_units as u64;
                        self.accept(round as usize, &update.contributors, acc)?;
                        if merges % n_units as u64 == 0 {
                            self.accuracy_per_round.push(acc);
                            self.round_end_times.push(self.now);
                            self.log.record(self.now, EventKind::Evaluate, SERVER, 0);
                        }
                        if self.check_target(acc, merges.div_ceil(n_units as u64) as usize) || merges >= budget {
                            break;
                        }
                        self.observe_trigger(acc);
                        if merges % n_units as u64 == 0 {
                            self.apply_faults((merges / n_units as u64) as usize);
                            if self.crashed {
                                break;
                            }
                        }
                    }
                    update.unit
                }
            };
            dispatches += 1;
            if dispatches > max_dispatches {
                break;
            }
            self.dispatch(&units, unit, &mut cycles)?;
        }
        if self.crashed {
            let acc = self.global_accuracy();
            while self.accuracy_per_round.len() < self.cfg.rounds {
                self.close_round(acc);
            }
        }
        Ok(())
    }

    /// Sends the current model to `unit` and schedules what comes back.
    fn dispatch(&mut self, units: &[usize], unit: usize, cycles: &mut [u64]) -> Result<(), SimError> {
        let t = self.now;
        let cycle = cycles[unit];
        cycles[unit] += 1;
        let down_bytes = self.model_bytes();
        let base_version = self.version;
        match self.edges.clone() {
            None => {
                let k = units[unit];
                let dt = self.send_client(Direction::Downlink, Link::ClientServer, down_bytes, k);
                self.queue.schedule(t + dt, EventKind::DownlinkArrive, k as u64, down_bytes, Payload::None);
                if !self.participates(k, cycle) {
                    let idle = self.nominal_compute(k);
                    self.queue.schedule(t + dt + idle, EventKind::Dropout, k as u64, 0, Payload::Retry(unit));
                    return Ok(());
                }
                let slot = self.slot_of[k];
                let start = self.transmit(&self.slots[slot]);
                let (w, compute) = self.local_update(k, &start, cycle)?;
                self.queue.schedule(t + dt + compute, EventKind::TrainDone, k as u64, 0, Payload::None);
                let up_bytes = self.client_uplink_bytes();
                let dev = &self.devices[k];
                let ut = dev.latency + up_bytes as f64 / dev.bandwidth;
                let sent = self.transmit_client_uplink(&w);
                let hash = model_hash(&sent);
                let update = InFlight { unit, base_version, models: vec![(slot, sent)], contributors: vec![(k, hash)] };
                self.queue.schedule(t + dt + compute + ut, EventKind::UplinkArrive, k as u64, up_bytes, Payload::Update(update));
            }
            Some(assign) => {
                let e = units[unit];
                let members: Vec<usize> = self.eligible.iter().copied().filter(|&k| assign[k] == e).collect();
                let et = self.send_edge(Direction::Downlink, down_bytes);
                self.queue.schedule(t + et, EventKind::DownlinkArrive, edge_actor(e), down_bytes, Payload::None);
                let mut arrive = Vec::with_capacity(members.len());
                for &k in &members {
                    arrive.push(et + self.send_client(Direction::Downlink, Link::ClientEdge, down_bytes, k));
                }
                let broadcast_time = arrive.iter().copied().fold(0.0, f64::max);
                let up_bytes = self.client_uplink_bytes();
                let mut ready = broadcast_time;
                let mut idle: f64 = 0.0;
                let mut updates: Vec<(usize, Update, String)> = Vec::new();
                for (&k, &at) in members.iter().zip(&arrive) {
                    self.queue.schedule(t + at, EventKind::DownlinkArrive, k as u64, down_bytes, Payload::None);
                    idle = idle.max(self.nominal_compute(k));
                    if !self.participates(k, cycle) {
                        self.queue.schedule(t + at, EventKind::Dropout, k as u64, 0, Payload::None);
                        continue;
                    }
                    let start = self.transmit(&self.slots[self.slot_of[k]]);
                    let (w, compute) = self.local_update(k, &start, cycle)?;
                    self.queue.schedule(t + broadcast_time + compute, EventKind::TrainDone, k as u64, 0, Payload::None);
                    let ut = self.send_client(Direction::Uplink, Link::ClientEdge, up_bytes, k);
                    ready = ready.max(broadcast_time + compute + ut);
                    self.queue.schedule(t + broadcast_time + compute + ut, EventKind::UplinkArrive, k as u64, up_bytes, Payload::None);
                    let sent = self.transmit_client_uplink(&w);
                    let hash = model_hash(&sent);
                    updates.push((k, Update { client_id: k, weights: sent, n_samples: self.n_samples(k) }, hash));
                }
                let mut models = Vec::new();
                let mut contributors = Vec::new();
                for s in 0..self.slots.len() {
                    let group: Vec<&(usize, Update, String)> = updates.iter().filter(|(k, _, _)| self.slot_of[*k] == s).collect();
                    if group.is_empty() {
                        continue;
                    }
                    let ups: Vec<Update> = group.iter().map(|(_, u, _)| u.clone()).collect();
                    match self.combine(&ups, aggregation_key(cycle, e, s)) {
                        Ok(w) => {
                            models.push((s, self.transmit(&w)));
                            contributors.extend(group.iter().map(|(k, _, h)| (*k, h.clone())));
                        }
                        Err(SimError::MaskingCardinality(_)) => {}
                        Err(err) => return Err(err),
                    }
                }
                if models.is_empty() {
                    self.discarded_rounds += 1;
                    let retry_at = t + ready.max(broadcast_time + idle);
                    self.queue.schedule(retry_at, EventKind::DiscardRound, edge_actor(e), 0, Payload::Retry(unit));
                    return Ok(());
                }
                let edge_bytes = self.model_bytes();
                let link = self.cfg.network.edge_link;
                let eut = link.latency + edge_bytes as f64 / link.bandwidth;
                self.queue.schedule(t + ready, EventKind::EdgeAggregate, edge_actor(e), 0, Payload::None);
                let update = InFlight { unit, base_version, models, contributors };
                self.queue.schedule(t + ready + eut, EventKind::UplinkArrive, edge_actor(e), edge_bytes, Payload::Update(update));
            }
        }
        Ok(())
    }

    // ---- results ----

    fn deployment(&self) -> DeploymentOutcome {
        let n = self.cfg.n_clients;
        let max_speed = self.devices.iter().map(|d| d.speed).fold(0.0, f64::max);
        let max_rank = self.devices.iter().map(|d| d.memory_rank).max().unwrap_or(1);
        let capabilities: Vec<f64> =
            self.devices.iter().map(|d| capability(d.speed, max_speed, d.memory_rank, max_rank)).collect();
        let light_bits = self.toggles.deployment_selector.map_or(4, |d| d.light_bits);
        let light = compressor::round_trip(&self.global, light_bits);
        let models = [&self.global, &light];
        let requirements = [self.cfg.device_requirements.full_model, self.cfg.device_requirements.light_model];
        let assignment = match &self.toggles.deployment_selector {
            Some(dc) => {
                let candidates = [
                    ModelCandidate {
                        name: "full".into(),
                        requirement: dc.capability_threshold,
                        accuracy: self.global_accuracy(),
                    },
                    ModelCandidate {
                        name: "light".into(),
                        requirement: 0.0,
                        accuracy: Self::mean(&self.accuracy_on(&light, &self.data.test)),
                    },
                ];
                match_deployment(&candidates, &capabilities)
            }
            None => vec![0; n],
        };
        let on_device_accuracy: Vec<f64> = (0..n)
            .map(|k| {
                let a = assignment[k];
                if capabilities[k] >= requirements[a] {
                    self.client_accuracy(k, models[a])
                } else {
                    0.0
                }
            })
            .collect();
        DeploymentOutcome {
            mean_on_device_accuracy: Self::mean(&on_device_accuracy),
            capabilities,
            assigned_models: assignment.iter().map(|&a| String::from(["full", "light"][a])).collect(),
            on_device_accuracy,
        }
    }

    fn finish(mut self) -> SimOutput {
        self.drain();
        let per_task_accuracy = self.accuracy_on(&self.global, &self.data.test);
        let final_accuracy = Self::mean(&per_task_accuracy);
        let per_client_accuracy: Vec<f64> =
            (0..self.cfg.n_clients).map(|k| self.client_accuracy(k, self.client_model(k))).collect();
        let participation_f: Vec<f64> = self.participation.iter().map(|&p| p as f64).collect();
        let deployment = self.deployment();
        let metrics = SimMetrics {
            accuracy_per_round: self.accuracy_per_round.clone(),
            final_accuracy,
            per_task_accuracy,
            accuracy_variance_across_clients: math::variance(&per_client_accuracy),
            per_client_accuracy,
            traffic: self.traffic,
            simulated_wall_time: self.now,
            round_end_times: self.round_end_times.clone(),
            rounds_completed: self.accuracy_per_round.len(),
            global_version: self.version,
            rounds_to_target: self.target_hit.map(|t| t.0),
            time_to_target: self.target_hit.map(|t| t.1),
            uplink_messages_to_target: self.target_hit.map(|t| t.2),
            mean_participation: Self::mean(&participation_f),
            participation_count: self.participation.clone(),
            selected_clients: self.selected.clone(),
            cluster_groups: self.groups.clone(),
            edge_assignment: self.edges.clone(),
            accuracy_at_crash: self.accuracy_at_crash,
            accuracy_gain_after_crash: self.accuracy_at_crash.map(|a| final_accuracy - a),
            deployment,
            replacement_triggers: self.replacement_triggers,
            incentive_rewards: self.ledger.as_ref().map(|l| l.rewards.clone()),
            client_registry_head: self.client_registry.as_ref().and_then(|r| r.log.head()),
            co_versioning_head: self.co_versioning.as_ref().and_then(|r| r.log.head()),
            co_versioning_entries: self.co_versioning.as_ref().map_or(0, |r| r.len()),
            discarded_stale_updates: self.discarded_stale,
            discarded_rounds: self.discarded_rounds,
            event_count: self.log.count(),
            event_log_digest: self.log.digest_hex(),
        };
        let client_models = (0..self.cfg.n_clients).map(|k| self.client_model(k).to_vec()).collect();
        SimOutput {
            metrics,
            global_model: self.global,
            client_models,
            events: self.log.into_records(),
            client_registry: self.client_registry,
            co_versioning: self.co_versioning,
        }
    }
}
