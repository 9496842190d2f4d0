//! Placement, the degradation ladder, consolidation onto the most sober
//! nodes, the peer-to-peer degraded mode, and an exhaustive oracle for
//! testing.
//!
//! Everything here is a pure function over value snapshots, so what-if
//! evaluation can run in parallel. Every ordering rule carries an explicit
//! id tie-break to keep placements deterministic.

use crate::device::{ComputeResource, NodeKind, NodeSpec};
use crate::ids::{NodeId, ServiceId, TaskId};
use crate::workload::ResourceVec;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Guard against exponential blow-up in the exhaustive oracle.
pub const ORACLE_MAX_TASKS: usize = 10;
pub const ORACLE_MAX_NODES: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum SchedulerError {
    #[error(
        "oracle instance too large: {tasks} tasks x {nodes} nodes (max {max_tasks} x {max_nodes})"
    )]
    InstanceTooLarge {
        tasks: usize,
        nodes: usize,
        max_tasks: usize,
        max_nodes: usize,
    },
}

/// One task to place: a service replica with its demand and eligibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRequest {
    pub task: TaskId,
    pub service: ServiceId,
    pub priority: u32,
    pub demand: ResourceVec,
    pub power_overhead_w: f64,
    pub requires_gpu: bool,
    pub smartphone_eligible: bool,
    pub utility: f64,
}

/// A node's remaining room as the scheduler sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeResources {
    pub node: NodeId,
    pub kind: NodeKind,
    pub capacity: ResourceVec,
    pub idle_power_w: f64,
    pub peak_power_w: f64,
    pub mi_per_joule: f64,
    pub used: ResourceVec,
    pub overhead_w: f64,
}

impl NodeResources {
    pub fn from_spec(spec: &NodeSpec) -> Self {
        let eff = crate::device::efficiency(spec, ComputeResource::Cpu)
            .map(|e| e.mi_per_joule)
            .unwrap_or(0.0);
        Self {
            node: spec.id.clone(),
            kind: spec.kind,
            capacity: ResourceVec::new(
                spec.cpu_mips,
                spec.gpu.map_or(0.0, |g| g.gpu_mflops),
                spec.mem_mb,
                spec.bandwidth_mbit,
            ),
            idle_power_w: spec.idle_power_w,
            peak_power_w: spec.peak_power_w,
            mi_per_joule: eff,
            used: ResourceVec::ZERO,
            overhead_w: 0.0,
        }
    }

    pub fn fits(&self, demand: &ResourceVec) -> bool {
        self.used.add(demand).fits_within(&self.capacity)
    }

    pub fn eligible(&self, task: &TaskRequest) -> bool {
        if task.requires_gpu && self.capacity.gpu_mflops <= 0.0 {
            return false;
        }
        if self.kind == NodeKind::Smartphone && !task.smartphone_eligible {
            return false;
        }
        true
    }

    pub fn assign(&mut self, task: &TaskRequest) {
        self.used = self.used.add(&task.demand);
        self.overhead_w += task.power_overhead_w;
    }

    pub fn unassign(&mut self, task: &TaskRequest) {
        self.used = ResourceVec::new(
            (self.used.cpu_mips - task.demand.cpu_mips).max(0.0),
            (self.used.gpu_mflops - task.demand.gpu_mflops).max(0.0),
            (self.used.mem_mb - task.demand.mem_mb).max(0.0),
            (self.used.bandwidth_mbit - task.demand.bandwidth_mbit).max(0.0),
        );
        self.overhead_w = (self.overhead_w - task.power_overhead_w).max(0.0);
    }

    pub fn cpu_utilization(&self) -> f64 {
        if self.capacity.cpu_mips > 0.0 {
            (self.used.cpu_mips / self.capacity.cpu_mips).min(1.0)
        } else {
            0.0
        }
    }

    /// Linear power model plus the per-task overheads.
    pub fn projected_power_w(&self) -> f64 {
        self.idle_power_w
            + self.cpu_utilization() * (self.peak_power_w - self.idle_power_w)
            + self.overhead_w
    }
}

/// Result of a placement pass.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlacementOutcome {
    pub assignments: BTreeMap<TaskId, NodeId>,
    pub unplaced: Vec<TaskId>,
    /// Node loads after placement, sorted by node id.
    pub nodes: Vec<NodeResources>,
    pub total_power_w: f64,
    pub total_utility: f64,
}

fn total_power(nodes: &[NodeResources]) -> f64 {
    nodes.iter().map(|n| n.projected_power_w()).sum()
}

fn sort_tasks(tasks: &[TaskRequest]) -> Vec<TaskRequest> {
    let mut sorted = tasks.to_vec();
    sorted.sort_by(|a, b| a.priority.cmp(&b.priority).then_with(|| a.task.cmp(&b.task)));
    sorted
}

/// First-fit placement: nodes ranked by MI/J descending (id ascending on
/// ties), tasks by priority then id, respecting resource vectors,
/// eligibility, and the aggregate power bound.
pub fn greedy_place(
    tasks: &[TaskRequest],
    nodes: &[NodeResources],
    power_budget_w: f64,
) -> PlacementOutcome {
    let mut ranked: Vec<NodeResources> = nodes.to_vec();
    ranked.sort_by(|a, b| {
        b.mi_per_joule
            .partial_cmp(&a.mi_per_joule)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.node.cmp(&b.node))
    });
    let mut assignments = BTreeMap::new();
    let mut unplaced = Vec::new();
    let mut power = total_power(&ranked);
    let mut utility = 0.0;

    for task in sort_tasks(tasks) {
        let mut placed = false;
        for node in ranked.iter_mut() {
            if !node.eligible(&task) || !node.fits(&task.demand) {
                continue;
            }
            let before = node.projected_power_w();
            node.assign(&task);
            let delta = node.projected_power_w() - before;
            if power + delta > power_budget_w + 1e-9 {
                node.unassign(&task);
                continue;
            }
            power += delta;
            utility += task.utility;
            assignments.insert(task.task.clone(), node.node.clone());
            placed = true;
            break;
        }
        if !placed {
            unplaced.push(task.task.clone());
        }
    }
    ranked.sort_by(|a, b| a.node.cmp(&b.node));
    PlacementOutcome {
        assignments,
        unplaced,
        total_power_w: power,
        total_utility: utility,
        nodes: ranked,
    }
}

struct Search<'a> {
    tasks: &'a [TaskRequest],
    budget: f64,
    suffix_utility: Vec<f64>,
    best_utility: f64,
    best_power: f64,
    best: Option<Vec<Option<usize>>>,
}

impl Search<'_> {
    fn dfs(
        &mut self,
        depth: usize,
        nodes: &mut [NodeResources],
        choice: &mut Vec<Option<usize>>,
        utility: f64,
    ) {
        let power = total_power(nodes);
        let bound = utility + self.suffix_utility[depth];
        // Prune when even placing every remaining task cannot beat the
        // incumbent; power only grows with further assignments, so a tied
        // utility bound without a power improvement is dead too.
        if self.best.is_some()
            && (bound < self.best_utility - 1e-12
                || (bound <= self.best_utility + 1e-12 && power >= self.best_power - 1e-12))
        {
            return;
        }
        if depth == self.tasks.len() {
            let better = match self.best {
                None => true,
                Some(_) => {
                    utility > self.best_utility + 1e-12
                        || (utility >= self.best_utility - 1e-12
                            && power < self.best_power - 1e-12)
                }
            };
            if better {
                self.best_utility = utility;
                self.best_power = power;
                self.best = Some(choice.clone());
            }
            return;
        }
        let task = &self.tasks[depth];
        for i in 0..nodes.len() {
            if !nodes[i].eligible(task) || !nodes[i].fits(&task.demand) {
                continue;
            }
            nodes[i].assign(task);
            if total_power(nodes) <= self.budget + 1e-9 {
                choice.push(Some(i));
                self.dfs(depth + 1, nodes, choice, utility + task.utility);
                choice.pop();
            }
            nodes[i].unassign(task);
        }
        // Branch where the task stays unplaced.
        choice.push(None);
        self.dfs(depth + 1, nodes, choice, utility);
        choice.pop();
    }
}

/// Exhaustive search maximizing (total utility, then minimal projected
/// power). Meant for tests and feasibility pre-verification; instance size
/// is guarded.
pub fn brute_force_place(
    tasks: &[TaskRequest],
    nodes: &[NodeResources],
    power_budget_w: f64,
) -> Result<PlacementOutcome, SchedulerError> {
    if tasks.len() > ORACLE_MAX_TASKS || nodes.len() > ORACLE_MAX_NODES {
        return Err(SchedulerError::InstanceTooLarge {
            tasks: tasks.len(),
            nodes: nodes.len(),
            max_tasks: ORACLE_MAX_TASKS,
            max_nodes: ORACLE_MAX_NODES,
        });
    }
    let tasks = sort_tasks(tasks);
    let mut work: Vec<NodeResources> = nodes.to_vec();
    work.sort_by(|a, b| a.node.cmp(&b.node));

    let mut suffix_utility = vec![0.0; tasks.len() + 1];
    for i in (0..tasks.len()).rev() {
        suffix_utility[i] = suffix_utility[i + 1] + tasks[i].utility;
    }
    let mut search = Search {
        tasks: &tasks,
        budget: power_budget_w,
        suffix_utility,
        best_utility: f64::NEG_INFINITY,
        best_power: f64::INFINITY,
        best: None,
    };
    let mut choice = Vec::with_capacity(tasks.len());
    search.dfs(0, &mut work, &mut choice, 0.0);

    let choice = search.best.expect("the all-unplaced assignment always exists");
    let mut nodes_out = work;
    let mut assignments = BTreeMap::new();
    let mut unplaced = Vec::new();
    for (task, slot) in tasks.iter().zip(&choice) {
        match slot {
            Some(i) => {
                nodes_out[*i].assign(task);
                assignments.insert(task.task.clone(), nodes_out[*i].node.clone());
            }
            None => unplaced.push(task.task.clone()),
        }
    }
    unplaced.sort();
    Ok(PlacementOutcome {
        assignments,
        unplaced,
        total_power_w: search.best_power,
        total_utility: search.best_utility,
        nodes: nodes_out,
    })
}

/// Full (utility, power) Pareto front over all feasible assignments, for
/// test-scale analysis. Entries come back sorted by descending utility with
/// strictly decreasing power.
pub fn pareto_front(
    tasks: &[TaskRequest],
    nodes: &[NodeResources],
    power_budget_w: f64,
) -> Result<Vec<(f64, f64)>, SchedulerError> {
    if tasks.len() > ORACLE_MAX_TASKS || nodes.len() > ORACLE_MAX_NODES {
        return Err(SchedulerError::InstanceTooLarge {
            tasks: tasks.len(),
            nodes: nodes.len(),
            max_tasks: ORACLE_MAX_TASKS,
            max_nodes: ORACLE_MAX_NODES,
        });
    }
    fn dfs(
        depth: usize,
        tasks: &[TaskRequest],
        nodes: &mut [NodeResources],
        budget: f64,
        utility: f64,
        points: &mut Vec<(f64, f64)>,
    ) {
        if depth == tasks.len() {
            points.push((utility, total_power(nodes)));
            return;
        }
        let task = &tasks[depth];
        for i in 0..nodes.len() {
            if !nodes[i].eligible(task) || !nodes[i].fits(&task.demand) {
                continue;
            }
            nodes[i].assign(task);
            if total_power(nodes) <= budget + 1e-9 {
                dfs(depth + 1, tasks, nodes, budget, utility + task.utility, points);
            }
            nodes[i].unassign(task);
        }
        dfs(depth + 1, tasks, nodes, budget, utility, points);
    }

    let tasks = sort_tasks(tasks);
    let mut work: Vec<NodeResources> = nodes.to_vec();
    work.sort_by(|a, b| a.node.cmp(&b.node));
    let mut points: Vec<(f64, f64)> = Vec::new();
    dfs(0, &tasks, &mut work, power_budget_w, 0.0, &mut points);
    points.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut front: Vec<(f64, f64)> = Vec::new();
    for (u, p) in points {
        if front.last().map_or(true, |&(_, fp)| p < fp - 1e-12) {
            front.push((u, p));
        }
    }
    Ok(front)
}

/// Ladder view of a service for shedding decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderService {
    pub service: ServiceId,
    pub priority: u32,
    pub level: usize,
    pub min_level: usize,
    /// Projected system power per level, index 0 = off.
    pub level_power_w: Vec<f64>,
    pub level_utility: Vec<f64>,
}

/// Sheds load one level at a time until the projected savings cover the
/// deficit or every service sits at its floor.
///
/// Selection per step: the lowest-priority service above its floor (largest
/// priority number), ties broken by the lower utility-per-watt of the next
/// step down, then by id. No service is ever pushed below its `min_level`.
/// Returns the new level per touched service and the uncovered residual
/// deficit in watts.
pub fn degradation_ladder(
    services: &[LadderService],
    deficit_w: f64,
) -> (Vec<(ServiceId, usize)>, f64) {
    let mut levels: BTreeMap<ServiceId, usize> = services
        .iter()
        .map(|s| (s.service.clone(), s.level))
        .collect();
    let by_id: BTreeMap<ServiceId, &LadderService> =
        services.iter().map(|s| (s.service.clone(), s)).collect();
    let mut savings = 0.0;
    let mut touched: BTreeSet<ServiceId> = BTreeSet::new();

    while savings < deficit_w - 1e-9 {
        // Next step down: priority desc, utility-per-watt asc, id asc.
        let mut best: Option<(u32, f64, ServiceId)> = None;
        for (id, s) in &by_id {
            let level = levels[id];
            if level <= s.min_level {
                continue;
            }
            let d_power = (s.level_power_w[level] - s.level_power_w[level - 1]).max(0.0);
            let d_utility = (s.level_utility[level] - s.level_utility[level - 1]).max(0.0);
            let upw = if d_power > 0.0 {
                d_utility / d_power
            } else {
                f64::INFINITY
            };
            let better = match &best {
                None => true,
                Some((bp, bupw, bid)) => {
                    s.priority > *bp
                        || (s.priority == *bp
                            && (upw < *bupw - 1e-12
                                || ((upw - *bupw).abs() <= 1e-12 && id < bid)))
                }
            };
            if better {
                best = Some((s.priority, upw, id.clone()));
            }
        }
        let Some((_, _, id)) = best else { break };
        let s = by_id[&id];
        let level = levels[&id];
        savings += (s.level_power_w[level] - s.level_power_w[level - 1]).max(0.0);
        levels.insert(id.clone(), level - 1);
        touched.insert(id);
    }

    let actions = touched.into_iter().map(|id| {
        let l = levels[&id];
        (id, l)
    });
    (actions.collect(), (deficit_w - savings).max(0.0))
}

/// Raises service levels back toward their maxima while the projected extra
/// power stays within `headroom_w`. Highest-priority services first (lowest
/// priority number), ties by higher utility-per-watt, then id.
pub fn restore_levels(services: &[LadderService], headroom_w: f64) -> Vec<(ServiceId, usize)> {
    let mut levels: BTreeMap<ServiceId, usize> = services
        .iter()
        .map(|s| (s.service.clone(), s.level))
        .collect();
    let by_id: BTreeMap<ServiceId, &LadderService> =
        services.iter().map(|s| (s.service.clone(), s)).collect();
    let mut spent = 0.0;
    let mut touched: BTreeSet<ServiceId> = BTreeSet::new();

    loop {
        let mut best: Option<(u32, f64, ServiceId, f64)> = None;
        for (id, s) in &by_id {
            let level = levels[id];
            if level + 1 >= s.level_power_w.len() {
                continue;
            }
            let d_power = (s.level_power_w[level + 1] - s.level_power_w[level]).max(0.0);
            if spent + d_power > headroom_w + 1e-9 {
                continue;
            }
            let d_utility = (s.level_utility[level + 1] - s.level_utility[level]).max(0.0);
            let upw = if d_power > 0.0 {
                d_utility / d_power
            } else {
                f64::INFINITY
            };
            let better = match &best {
                None => true,
                Some((bp, bupw, bid, _)) => {
                    s.priority < *bp
                        || (s.priority == *bp
                            && (upw > *bupw + 1e-12
                                || ((upw - *bupw).abs() <= 1e-12 && id < bid)))
                }
            };
            if better {
                best = Some((s.priority, upw, id.clone(), d_power));
            }
        }
        let Some((_, _, id, d_power)) = best else { break };
        spent += d_power;
        *levels.get_mut(&id).unwrap() += 1;
        touched.insert(id);
    }

    touched
        .into_iter()
        .map(|id| {
            let l = levels[&id];
            (id, l)
        })
        .collect()
}

/// A proposed migration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Migration {
    pub task: TaskId,
    pub from: NodeId,
    pub to: NodeId,
}

/// Consolidation proposal: migrations plus the nodes left empty to power off.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Consolidation {
    pub migrations: Vec<Migration>,
    pub power_off: Vec<NodeId>,
    pub saved_w: f64,
}

/// Tries to empty the least sober nodes by moving their tasks onto more
/// efficient peers, powering off the emptied donors. Only emits a proposal
/// when it strictly reduces projected total power, so repeated application
/// reaches a fixed point and cannot oscillate.
pub fn consolidate(
    tasks: &BTreeMap<TaskId, TaskRequest>,
    assignments: &BTreeMap<TaskId, NodeId>,
    nodes: &[NodeResources],
) -> Consolidation {
    let mut loads: BTreeMap<NodeId, NodeResources> = nodes
        .iter()
        .map(|n| {
            let mut n = n.clone();
            n.used = ResourceVec::ZERO;
            n.overhead_w = 0.0;
            (n.node.clone(), n)
        })
        .collect();
    let mut placed: BTreeMap<NodeId, Vec<TaskId>> = BTreeMap::new();
    for (task_id, node_id) in assignments {
        let Some(task) = tasks.get(task_id) else { continue };
        let Some(load) = loads.get_mut(node_id) else { continue };
        load.assign(task);
        placed
            .entry(node_id.clone())
            .or_default()
            .push(task_id.clone());
    }

    let mut result = Consolidation::default();
    loop {
        let current_power: f64 = loads.values().map(|n| n.projected_power_w()).sum();
        // Donor candidates: non-empty nodes, least sober first
        // (lowest MI/J, then higher idle power, then id).
        let mut donors: Vec<NodeId> = placed
            .iter()
            .filter(|(id, ts)| !ts.is_empty() && loads.contains_key(*id))
            .map(|(id, _)| id.clone())
            .collect();
        donors.sort_by(|a, b| {
            let (na, nb) = (&loads[a], &loads[b]);
            na.mi_per_joule
                .partial_cmp(&nb.mi_per_joule)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(
                    nb.idle_power_w
                        .partial_cmp(&na.idle_power_w)
                        .unwrap_or(std::cmp::Ordering::Equal),
                )
                .then(a.cmp(b))
        });

        let mut applied = false;
        'donor: for donor in donors {
            let mut trial = loads.clone();
            let donor_tasks = placed[&donor].clone();
            let mut moves = Vec::new();
            for t in &donor_tasks {
                trial.get_mut(&donor).unwrap().unassign(&tasks[t]);
            }
            // Receivers: most sober first, donor excluded.
            let mut receivers: Vec<NodeId> = trial
                .keys()
                .filter(|id| **id != donor)
                .cloned()
                .collect();
            receivers.sort_by(|a, b| {
                let (na, nb) = (&trial[a], &trial[b]);
                nb.mi_per_joule
                    .partial_cmp(&na.mi_per_joule)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(
                        na.idle_power_w
                            .partial_cmp(&nb.idle_power_w)
                            .unwrap_or(std::cmp::Ordering::Equal),
                    )
                    .then(a.cmp(b))
            });
            let mut task_order = donor_tasks.clone();
            task_order.sort();
            for t in &task_order {
                let req = &tasks[t];
                let mut placed_on = None;
                for r in &receivers {
                    let load = trial.get_mut(r).unwrap();
                    if load.eligible(req) && load.fits(&req.demand) {
                        load.assign(req);
                        placed_on = Some(r.clone());
                        break;
                    }
                }
                match placed_on {
                    Some(to) => moves.push(Migration {
                        task: t.clone(),
                        from: donor.clone(),
                        to,
                    }),
                    None => continue 'donor,
                }
            }
            // Power after the move with the emptied donor switched off.
            let new_power: f64 = trial
                .values()
                .filter(|n| n.node != donor)
                .map(|n| n.projected_power_w())
                .sum();
            if new_power < current_power - 1e-9 {
                for m in &moves {
                    placed.entry(m.to.clone()).or_default().push(m.task.clone());
                }
                placed.get_mut(&donor).unwrap().clear();
                loads = trial;
                loads.remove(&donor);
                result.saved_w += current_power - new_power;
                result.migrations.extend(moves);
                result.power_off.push(donor);
                applied = true;
                break;
            }
        }
        if !applied {
            break;
        }
    }
    result.power_off.sort();
    result
}

/// Mesh topology used once every switch is down.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeshTopology {
    /// Undirected peer-to-peer edges between nodes.
    pub edges: Vec<(NodeId, NodeId)>,
}

impl MeshTopology {
    pub fn full_mesh(nodes: &[NodeId]) -> Self {
        let mut edges = Vec::new();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                edges.push((nodes[i].clone(), nodes[j].clone()));
            }
        }
        Self { edges }
    }

    /// Connected components over `alive`, each sorted; isolated alive nodes
    /// form singleton components. Components are ordered by their smallest
    /// member for determinism.
    pub fn components(&self, alive: &BTreeSet<NodeId>) -> Vec<Vec<NodeId>> {
        let mut adjacency: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
        for (a, b) in &self.edges {
            if alive.contains(a) && alive.contains(b) {
                adjacency.entry(a).or_default().push(b);
                adjacency.entry(b).or_default().push(a);
            }
        }
        let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
        let mut components = Vec::new();
        for start in alive {
            if seen.contains(start) {
                continue;
            }
            let mut stack = vec![start];
            let mut component = Vec::new();
            seen.insert(start);
            while let Some(n) = stack.pop() {
                component.push(n.clone());
                for peer in adjacency.get(n).into_iter().flatten() {
                    if seen.insert(peer) {
                        stack.push(peer);
                    }
                }
            }
            component.sort();
            components.push(component);
        }
        components.sort();
        components
    }
}

/// Placement restricted to the mesh: only peer-eligible tasks remain, and
/// all tasks of one service must land inside a single connected component.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AmorphousPlacement {
    pub assignments: BTreeMap<TaskId, NodeId>,
    pub unplaced: Vec<TaskId>,
    /// Services that must stop because they are not peer-eligible.
    pub stopped_services: Vec<ServiceId>,
}

/// Computes the degraded-mode placement. `peer_tasks` carries only replicas
/// of peer-eligible services (already reduced to their floor levels);
/// `stopped` lists everything else.
pub fn amorphous_placement(
    peer_tasks: &[TaskRequest],
    stopped: &[ServiceId],
    nodes: &[NodeResources],
    mesh: &MeshTopology,
    power_budget_w: f64,
) -> AmorphousPlacement {
    let alive: BTreeSet<NodeId> = nodes.iter().map(|n| n.node.clone()).collect();
    let components = mesh.components(&alive);
    // Rank components by total efficiency-weighted CPU capacity, best first.
    let weight = |c: &Vec<NodeId>| -> f64 {
        c.iter()
            .map(|id| {
                nodes
                    .iter()
                    .find(|n| n.node == *id)
                    .map_or(0.0, |n| n.mi_per_joule * n.capacity.cpu_mips)
            })
            .sum()
    };
    let mut ranked: Vec<&Vec<NodeId>> = components.iter().collect();
    ranked.sort_by(|a, b| {
        weight(b)
            .partial_cmp(&weight(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.first().cmp(&b.first()))
    });

    let mut by_service: BTreeMap<ServiceId, Vec<TaskRequest>> = BTreeMap::new();
    for t in peer_tasks {
        by_service
            .entry(t.service.clone())
            .or_default()
            .push(t.clone());
    }

    let mut out = AmorphousPlacement {
        stopped_services: stopped.to_vec(),
        ..Default::default()
    };
    let mut loads: BTreeMap<NodeId, NodeResources> =
        nodes.iter().map(|n| (n.node.clone(), n.clone())).collect();

    for (_, replicas) in by_service {
        let mut fitted = false;
        for component in &ranked {
            let members: Vec<NodeResources> = component
                .iter()
                .filter_map(|id| loads.get(id).cloned())
                .collect();
            if members.is_empty() {
                continue;
            }
            let outcome = greedy_place(&replicas, &members, power_budget_w);
            if outcome.unplaced.is_empty() {
                for n in outcome.nodes {
                    loads.insert(n.node.clone(), n);
                }
                for (t, n) in outcome.assignments {
                    out.assignments.insert(t, n);
                }
                fitted = true;
                break;
            }
        }
        if !fitted {
            let mut ids: Vec<TaskId> = replicas.iter().map(|t| t.task.clone()).collect();
            ids.sort();
            out.unplaced.extend(ids);
        }
    }
    out.stopped_services.sort();
    out
}
