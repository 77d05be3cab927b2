use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::config::PlannerConfig;
use super::samples::SampleSet;
use crate::belief::Belief;
use crate::error::{Error, Result};

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `true` iff every cell meeting the segment `p q` dilated by `radius` is
/// free. Cells beyond the grid count as not free.
pub fn edge_valid(p: [f64; 2], q: [f64; 2], belief: &Belief, radius: f64) -> bool {
    let g = belief.grid();
    let bounds = g.bounds();
    let lo = [p[0].min(q[0]) - radius, p[1].min(q[1]) - radius];
    let hi = [p[0].max(q[0]) + radius, p[1].max(q[1]) + radius];
    if lo[0] < bounds.min[0] || lo[1] < bounds.min[1] || hi[0] > bounds.max[0] || hi[1] > bounds.max[1] {
        return false;
    }
    let (Some((x0, x1)), Some((y0, y1))) = (g.touching_range(0, lo[0], hi[0]), g.touching_range(1, lo[1], hi[1])) else {
        return false;
    };
    for iy in y0..=y1 {
        for ix in x0..=x1 {
            if belief.is_free(g.index(ix, iy)) {
                continue;
            }
            if g.cell_rect(ix, iy).segment_distance(p, q) <= radius {
                return false;
            }
        }
    }
    true
}

/// Neighbor graph over a [`SampleSet`].
#[derive(Debug, Clone)]
pub struct Roadmap {
    points: Vec<[f64; 2]>,
    radius: f64,
    neighbors: Vec<Vec<(u32, f64)>>,
    bucket: f64,
    origin: [f64; 2],
    dims: (usize, usize),
    buckets: Vec<Vec<u32>>,
}

impl Roadmap {
    pub fn new(samples: &SampleSet, config: &PlannerConfig) -> Self {
        let e = samples.room.extent();
        let radius = config.connection_radius(e[0] * e[1], samples.len());
        let bucket = radius;
        let origin = samples.room.min;
        let dims = (
            ((e[0] / bucket).ceil() as usize).max(1),
            ((e[1] / bucket).ceil() as usize).max(1),
        );
        let mut buckets = vec![Vec::new(); dims.0 * dims.1];
        let key = |p: [f64; 2]| {
            let bx = (((p[0] - origin[0]) / bucket).floor().max(0.0) as usize).min(dims.0 - 1);
            let by = (((p[1] - origin[1]) / bucket).floor().max(0.0) as usize).min(dims.1 - 1);
            by * dims.0 + bx
        };
        for (i, p) in samples.points.iter().enumerate() {
            buckets[key(*p)].push(i as u32);
        }
        let mut map = Self {
            points: samples.points.clone(),
            radius,
            neighbors: Vec::new(),
            bucket,
            origin,
            dims,
            buckets,
        };
        map.neighbors = (0..map.points.len())
            .map(|i| {
                map.near(map.points[i], radius)
                    .into_iter()
                    .filter(|&(j, _)| j as usize != i)
                    .collect()
            })
            .collect();
        map
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        self.points[i]
    }

    pub fn neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.neighbors[i]
    }

    /// Samples within `r` of `p`, by increasing index.
    pub fn near(&self, p: [f64; 2], r: f64) -> Vec<(u32, f64)> {
        let span = (r / self.bucket).ceil() as i64;
        let bx = ((p[0] - self.origin[0]) / self.bucket).floor() as i64;
        let by = ((p[1] - self.origin[1]) / self.bucket).floor() as i64;
        let mut out = Vec::new();
        for y in (by - span).max(0)..=(by + span).min(self.dims.1 as i64 - 1) {
            for x in (bx - span).max(0)..=(bx + span).min(self.dims.0 as i64 - 1) {
                for &j in &self.buckets[y as usize * self.dims.0 + x as usize] {
                    let d = dist(p, self.points[j as usize]);
                    if d <= r {
                        out.push((j, d));
                    }
                }
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }
}

fn relax(cost: &mut [f64], parent: &mut [u32], heap: &mut BinaryHeap<Entry>, u: u32, v: u32, nc: f64) {
    if nc < cost[v as usize] {
        cost[v as usize] = nc;
        parent[v as usize] = u;
        heap.push(Entry { cost: nc, node: v });
    }
}

/// Whether a planned path ends at the goal region or at a frontier sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Goal,
    Intermediate,
}

/// Piecewise-linear path with arrival times at constant maximum speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub waypoints: Vec<[f64; 2]>,
    pub times: Vec<f64>,
    pub target: [f64; 2],
    pub kind: TargetKind,
    /// Roadmap sample at the end of the plan, if any.
    pub target_node: Option<usize>,
    pub feasible: bool,
    /// Cost of the graph path before shortcutting, meters.
    pub graph_cost: f64,
    /// Length of the executed (shortcut) path, meters.
    pub length: f64,
}

impl Plan {
    pub fn infeasible(target: [f64; 2]) -> Self {
        Self {
            waypoints: Vec::new(),
            times: Vec::new(),
            target,
            kind: TargetKind::Goal,
            target_node: None,
            feasible: false,
            graph_cost: f64::INFINITY,
            length: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    node: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of a shortest-path expansion from the robot.
#[derive(Debug, Clone)]
pub struct SearchTree {
    /// Cost-to-come per node; samples first, then the start, then the goal
    /// point.
    pub cost: Vec<f64>,
    parent: Vec<u32>,
    pub reached: Option<u32>,
    start: [f64; 2],
    goal: [f64; 2],
}

impl SearchTree {
    fn position(&self, map: &Roadmap, node: u32) -> [f64; 2] {
        let n = map.len() as u32;
        match node {
            x if x < n => map.point(x as usize),
            x if x == n => self.start,
            _ => self.goal,
        }
    }

    /// Node positions from the start to `node`.
    pub fn path_to(&self, map: &Roadmap, node: u32) -> Vec<[f64; 2]> {
        let mut out = vec![self.position(map, node)];
        let mut cur = node;
        while self.parent[cur as usize] != u32::MAX {
            cur = self.parent[cur as usize];
            out.push(self.position(map, cur));
        }
        out.reverse();
        out
    }
}

/// Edge and node validity remembered across replans. Free space only grows
/// during an episode, so anything found valid stays valid.
#[derive(Debug, Clone)]
pub struct SearchCache {
    node_ok: Vec<bool>,
    edge_ok: Vec<Vec<bool>>,
}

impl SearchCache {
    pub fn new(map: &Roadmap) -> Self {
        Self {
            node_ok: vec![false; map.len()],
            edge_ok: (0..map.len()).map(|i| vec![false; map.neighbors(i).len()]).collect(),
        }
    }
}

/// Graph search and plan extraction over a roadmap.
pub struct Searcher<'a> {
    pub map: &'a Roadmap,
    pub config: &'a PlannerConfig,
    pub cache: SearchCache,
}

impl<'a> Searcher<'a> {
    pub fn new(map: &'a Roadmap, config: &'a PlannerConfig) -> Self {
        Self {
            map,
            config,
            cache: SearchCache::new(map),
        }
    }

    fn node_valid(&mut self, belief: &Belief, i: usize) -> bool {
        if !self.cache.node_ok[i] {
            let p = self.map.point(i);
            self.cache.node_ok[i] = edge_valid(p, p, belief, self.config.plan_radius());
        }
        self.cache.node_ok[i]
    }

    /// Dijkstra from `start`. Goal nodes are the goal point and the samples
    /// within `goal_tol` of it; with `stop_at_goal` the expansion ends at the
    /// first goal node popped.
    pub fn expand(&mut self, belief: &Belief, start: [f64; 2], goal: [f64; 2], goal_tol: f64, stop_at_goal: bool) -> SearchTree {
        let n = self.map.len();
        let (s, gpt) = (n as u32, n as u32 + 1);
        let r = self.config.plan_radius();
        // the robot itself is only guaranteed envelope clearance
        let r_start = self.config.envelope_radius();
        let link = 2.0 * self.map.radius();
        // wider fan from the robot so narrow openings next to it still connect
        let start_link = 2.0 * link;
        let mut cost = vec![f64::INFINITY; n + 2];
        let mut parent = vec![u32::MAX; n + 2];
        let mut done = vec![false; n + 2];
        let mut heap = BinaryHeap::new();
        cost[s as usize] = 0.0;
        heap.push(Entry { cost: 0.0, node: s });
        let goal_ok = edge_valid(goal, goal, belief, r);
        let mut reached = None;

        while let Some(Entry { cost: c, node: u }) = heap.pop() {
            if done[u as usize] {
                continue;
            }
            done[u as usize] = true;
            let is_goal = u == gpt || (u < s && dist(self.map.point(u as usize), goal) <= goal_tol);
            if is_goal && reached.is_none() {
                reached = Some(u);
                if stop_at_goal {
                    break;
                }
            }
            if u == gpt {
                continue;
            }
            let here = if u == s { start } else { self.map.point(u as usize) };
            if u == s {
                for (v, w) in self.map.near(start, start_link) {
                    if !done[v as usize] && self.node_valid(belief, v as usize) && edge_valid(start, self.map.point(v as usize), belief, r_start) {
                        relax(&mut cost, &mut parent, &mut heap, u, v, c + w);
                    }
                }
            } else {
                let ui = u as usize;
                for k in 0..self.map.neighbors(ui).len() {
                    let (v, w) = self.map.neighbors(ui)[k];
                    if done[v as usize] || c + w >= cost[v as usize] || !self.node_valid(belief, v as usize) {
                        continue;
                    }
                    if !self.cache.edge_ok[ui][k] {
                        if !edge_valid(here, self.map.point(v as usize), belief, r) {
                            continue;
                        }
                        self.cache.edge_ok[ui][k] = true;
                    }
                    relax(&mut cost, &mut parent, &mut heap, u, v, c + w);
                }
            }
            let dg = dist(here, goal);
            let r_edge = if u == s { r_start } else { r };
            if goal_ok && !done[gpt as usize] && dg <= link && edge_valid(here, goal, belief, r_edge) {
                relax(&mut cost, &mut parent, &mut heap, u, gpt, c + dg);
            }
        }
        SearchTree {
            cost,
            parent,
            reached,
            start,
            goal,
        }
    }

    /// Samples whose dilated footprint reaches within `frontier_margin` of a
    /// frontier cell: never observed, not free, with a free 4-neighbor.
    fn is_frontier(&self, belief: &Belief, p: [f64; 2]) -> bool {
        let g = belief.grid();
        let reach = self.config.robot_radius + self.config.frontier_margin;
        let (Some((x0, x1)), Some((y0, y1))) = (g.touching_range(0, p[0] - reach, p[0] + reach), g.touching_range(1, p[1] - reach, p[1] + reach)) else {
            return false;
        };
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                let i = g.index(ix, iy);
                if belief.observed(i) || belief.is_free(i) || g.cell_rect(ix, iy).distance_to_point(&p) > reach {
                    continue;
                }
                let free_at = |jx: usize, jy: usize| belief.is_free(g.index(jx, jy));
                let touches_free = (ix > 0 && free_at(ix - 1, iy))
                    || (ix + 1 < g.nx && free_at(ix + 1, iy))
                    || (iy > 0 && free_at(ix, iy - 1))
                    || (iy + 1 < g.ny && free_at(ix, iy + 1));
                if touches_free {
                    return true;
                }
            }
        }
        false
    }

    /// Reachable frontier sample minimizing travel cost plus straight-line
    /// distance to `goal`. The travel cost is the straight distance from the
    /// robot when that segment is free (shortcutting will take it) and the
    /// cost-to-come otherwise. Candidates closer than the minimum progress and
    /// those flagged in `exclude` are skipped; ties go to the lower index.
    pub fn best_frontier(&self, belief: &Belief, tree: &SearchTree, goal: [f64; 2], exclude: &[bool]) -> Option<u32> {
        let start = tree.start;
        // straight distance through the candidate bounds its score from below
        let mut order: Vec<(f64, u32)> = (0..self.map.len())
            .filter(|&i| {
                let c = tree.cost[i];
                c.is_finite() && c >= self.config.min_frontier_progress && !exclude.get(i).copied().unwrap_or(false)
            })
            .map(|i| {
                let p = self.map.point(i);
                (dist(start, p) + dist(p, goal), i as u32)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut best: Option<(f64, u32)> = None;
        for (bound, i) in order {
            if best.is_some_and(|(b, _)| bound > b) {
                break;
            }
            let p = self.map.point(i as usize);
            if !self.is_frontier(belief, p) {
                continue;
            }
            let c = tree.cost[i as usize];
            let travel = if edge_valid(start, p, belief, self.config.envelope_radius()) {
                dist(start, p).min(c)
            } else {
                c
            };
            let score = travel + dist(p, goal);
            if best.is_none_or(|(b, j)| score < b || (score == b && i < j)) {
                best = Some((score, i));
            }
        }
        best.map(|b| b.1)
    }

    /// Greedy shortcutting: from each kept waypoint jump to the farthest
    /// later one reachable by a valid straight edge.
    pub fn shortcut(&self, belief: &Belief, path: &[[f64; 2]]) -> Vec<[f64; 2]> {
        if path.len() <= 2 {
            return path.to_vec();
        }
        let mut out = vec![path[0]];
        let mut i = 0;
        while i + 1 < path.len() {
            let mut j = path.len() - 1;
            let r = if i == 0 { self.config.envelope_radius() } else { self.config.plan_radius() };
            while j > i + 1 && !edge_valid(path[i], path[j], belief, r) {
                j -= 1;
            }
            out.push(path[j]);
            i = j;
        }
        out
    }

    fn make_plan(&self, belief: &Belief, tree: &SearchTree, node: u32, kind: TargetKind) -> Plan {
        let raw = tree.path_to(self.map, node);
        let waypoints = self.shortcut(belief, &raw);
        let mut times = vec![0.0];
        let mut length = 0.0;
        for w in waypoints.windows(2) {
            length += dist(w[0], w[1]);
            times.push(length / self.config.max_speed);
        }
        Plan {
            target: *waypoints.last().expect("path has a node"),
            waypoints,
            times,
            kind,
            target_node: ((node as usize) < self.map.len()).then_some(node as usize),
            feasible: true,
            graph_cost: tree.cost[node as usize],
            length,
        }
    }

    /// Shortest path to the goal region if reachable, else to the frontier
    /// sample `keep` while it is still a reachable frontier, else to the best
    /// frontier sample not in `exclude`, else an infeasible plan.
    pub fn plan(
        &mut self,
        belief: &Belief,
        start: [f64; 2],
        goal: [f64; 2],
        goal_radius: f64,
        keep: Option<usize>,
        exclude: &[bool],
    ) -> Result<Plan> {
        if !edge_valid(start, start, belief, self.config.robot_radius) {
            return Err(Error::StartNotFree { x: start[0], y: start[1] });
        }
        let tol = self.config.goal_fraction * goal_radius;
        if dist(start, goal) <= tol {
            return Ok(self.finished(start));
        }
        let tree = self.expand(belief, start, goal, tol, false);
        if let Some(g) = tree.reached {
            return Ok(self.make_plan(belief, &tree, g, TargetKind::Goal));
        }
        if let Some(k) = keep.filter(|&k| tree.cost[k].is_finite() && self.is_frontier(belief, self.map.point(k))) {
            return Ok(self.make_plan(belief, &tree, k as u32, TargetKind::Intermediate));
        }
        match self.best_frontier(belief, &tree, goal, exclude) {
            Some(f) => Ok(self.make_plan(belief, &tree, f, TargetKind::Intermediate)),
            None => Ok(Plan::infeasible(goal)),
        }
    }

    /// Shortest path to the goal region only.
    pub fn plan_to_goal(&mut self, belief: &Belief, start: [f64; 2], goal: [f64; 2], goal_tol: f64) -> Result<Plan> {
        if !edge_valid(start, start, belief, self.config.robot_radius) {
            return Err(Error::StartNotFree { x: start[0], y: start[1] });
        }
        if dist(start, goal) <= goal_tol {
            return Ok(self.finished(start));
        }
        let tree = self.expand(belief, start, goal, goal_tol, true);
        Ok(match tree.reached {
            Some(g) => self.make_plan(belief, &tree, g, TargetKind::Goal),
            None => Plan::infeasible(goal),
        })
    }

    fn finished(&self, at: [f64; 2]) -> Plan {
        Plan {
            waypoints: vec![at],
            times: vec![0.0],
            target: at,
            kind: TargetKind::Goal,
            target_node: None,
            feasible: true,
            graph_cost: 0.0,
            length: 0.0,
        }
    }
}

/// Shortest path over the roadmap from `start` to the goal point `target`
/// (exactly), without frontier fallback.
pub fn plan(start: [f64; 2], target: [f64; 2], belief: &Belief, map: &Roadmap, config: &PlannerConfig) -> Result<Plan> {
    Searcher::new(map, config).plan_to_goal(belief, start, target, 0.0)
}

/// The goal itself when reachable, else the best frontier configuration;
/// `None` when no frontier candidate exists.
pub fn select_intermediate_goal(
    belief: &Belief,
    start: [f64; 2],
    goal: [f64; 2],
    goal_radius: f64,
    map: &Roadmap,
    config: &PlannerConfig,
) -> Option<[f64; 2]> {
    let mut s = Searcher::new(map, config);
    let tree = s.expand(belief, start, goal, config.goal_fraction * goal_radius, false);
    if tree.reached.is_some() {
        return Some(goal);
    }
    s.best_frontier(belief, &tree, goal, &[]).map(|i| map.point(i as usize))
}
