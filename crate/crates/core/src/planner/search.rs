use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::duplicate::DuplicateIndex;
use super::generate::{generate_configuration, order_candidates, Candidate, SearchContext};
use crate::Point3;

/// Lazily expanded low-level constraint: `(agent, candidate index)` bindings
/// for a prefix of the node's agent order.
type Constraint = Vec<(u32, u8)>;

#[derive(Debug)]
struct Node {
    config: u32,
    parent: u32,
    depth: u32,
    /// Last step at which each agent moved.
    moved_at: Vec<u32>,
    order: Vec<u32>,
    cands: Vec<Vec<Candidate>>,
    queue: VecDeque<Constraint>,
    lower_bound: u64,
}

pub(crate) enum Step {
    Working,
    /// Steps of a goal node beating the incumbent.
    Found(Vec<Vec<Point3>>),
    Exhausted,
}

/// Depth-first search over joint configurations with lazy successor
/// generation and branch-and-bound pruning against `incumbent`.
pub(crate) struct Search<'c, 'a> {
    ctx: &'c SearchContext<'a>,
    nodes: Vec<Node>,
    open: Vec<u32>,
    index: DuplicateIndex,
    rng: ChaCha8Rng,
    /// Scale factors applied to the ordering keys (Monte-Carlo restarts).
    jitter: bool,
    /// Duplicate keys carry the step index (needed when fixed paths move).
    timed: bool,
    /// Ordering key and unordered candidates per agent and exact position.
    moves: HashMap<(u32, [u64; 3]), (f64, Vec<Candidate>)>,
    pub incumbent: Option<u64>,
    pub expansions: u64,
    pub max_depth: usize,
    pub root_bound: u64,
}

impl<'c, 'a> Search<'c, 'a> {
    pub fn new(
        ctx: &'c SearchContext<'a>,
        eps_dup: f64,
        rng: ChaCha8Rng,
        jitter: bool,
        timed: bool,
        incumbent: Option<u64>,
    ) -> Self {
        let mut s = Self {
            ctx,
            nodes: Vec::new(),
            open: Vec::new(),
            index: DuplicateIndex::new(eps_dup, ctx.len()),
            rng,
            jitter,
            timed,
            moves: HashMap::new(),
            incumbent,
            expansions: 0,
            max_depth: 0,
            root_bound: 0,
        };
        let starts = ctx.starts.clone();
        let id = s.index.insert(&starts, 0);
        let moved_at = vec![0; ctx.len()];
        let node = s.make_node(id as u32, u32::MAX, 0, moved_at);
        s.root_bound = node.lower_bound;
        s.nodes.push(node);
        s.open.push(0);
        s
    }

    fn tag(&self, depth: usize) -> u32 {
        if self.timed {
            depth.min(self.ctx.fixed_horizon()) as u32
        } else {
            0
        }
    }

    fn make_node(&mut self, config: u32, parent: u32, depth: u32, moved_at: Vec<u32>) -> Node {
        let ctx = self.ctx;
        let q = self.index.get(config as usize).to_vec();
        let n = q.len();
        let mut lower_bound = 0u64;
        let mut keys = Vec::with_capacity(n);
        let mut cands = Vec::with_capacity(n);
        for (i, p) in q.iter().enumerate() {
            let at_goal = ctx.at_goal(i, p);
            lower_bound += if at_goal {
                moved_at[i] as u64
            } else {
                let gap = ((p - ctx.goals[i]).norm() - ctx.r_target) / ctx.d_travel;
                depth as u64 + (gap - 1e-9).ceil().max(1.0) as u64
            };
            let slot = (i as u32, [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]);
            let (cost, moves) = self
                .moves
                .entry(slot)
                .or_insert_with(|| (ctx.rms[i].estimate_cost(p), ctx.scored_moves(i, p)));
            let mut key = *cost;
            let mut c = moves.clone();
            if self.jitter {
                key *= self.rng.random_range(0.5..1.5);
            }
            keys.push((at_goal, key));
            order_candidates(&mut c, &mut self.rng);
            cands.push(c);
        }
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| {
            let (ga, ka) = keys[a as usize];
            let (gb, kb) = keys[b as usize];
            ga.cmp(&gb).then(kb.total_cmp(&ka))
        });
        Node {
            config,
            parent,
            depth,
            moved_at,
            order,
            cands,
            queue: VecDeque::from([Vec::new()]),
            lower_bound,
        }
    }

    fn is_goal(&self, node: &Node) -> bool {
        let ctx = self.ctx;
        let q = self.index.get(node.config as usize);
        if !q.iter().enumerate().all(|(i, p)| ctx.at_goal(i, p)) {
            return false;
        }
        // Parked agents must stay clear of fixed paths that are still moving.
        let horizon = ctx.fixed_horizon();
        (node.depth as usize..horizon).all(|k| q.iter().all(|p| ctx.clear_of_fixed(p, p, k)))
    }

    fn release(&mut self, id: u32) {
        let node = &mut self.nodes[id as usize];
        node.cands = Vec::new();
        node.queue = VecDeque::new();
        node.order = Vec::new();
    }

    fn path(&self, mut id: u32) -> Vec<Vec<Point3>> {
        let mut out = Vec::new();
        while id != u32::MAX {
            let node = &self.nodes[id as usize];
            out.push(self.index.get(node.config as usize).to_vec());
            id = node.parent;
        }
        out.reverse();
        out
    }

    /// Runs until one constraint has been expanded, a better goal is
    /// reached, or the open stack empties.
    pub fn step(&mut self) -> Step {
        loop {
            let Some(&top) = self.open.last() else {
                return Step::Exhausted;
            };
            let node = &self.nodes[top as usize];
            if self.incumbent.is_some_and(|b| node.lower_bound >= b) {
                self.open.pop();
                self.release(top);
                continue;
            }
            if self.is_goal(node) {
                self.open.pop();
                let flowtime = node.moved_at.iter().map(|&m| m as u64).sum();
                self.release(top);
                if self.incumbent.is_none_or(|b| flowtime < b) {
                    self.incumbent = Some(flowtime);
                    return Step::Found(self.path(top));
                }
                continue;
            }
            let Some(constraint) = self.nodes[top as usize].queue.pop_front() else {
                self.open.pop();
                self.release(top);
                continue;
            };
            self.expansions += 1;
            return self.expand(top, constraint);
        }
    }

    fn expand(&mut self, top: u32, constraint: Constraint) -> Step {
        let node = &self.nodes[top as usize];
        let n = node.order.len();
        if constraint.len() < n {
            let agent = node.order[constraint.len()];
            let mut ks: Vec<u8> = (0..node.cands[agent as usize].len() as u8).collect();
            ks.shuffle(&mut self.rng);
            let node = &mut self.nodes[top as usize];
            for k in ks {
                let mut child = constraint.clone();
                child.push((agent, k));
                node.queue.push_back(child);
            }
        }
        let node = &self.nodes[top as usize];
        let current = self.index.get(node.config as usize);
        let depth = node.depth as usize;
        let Ok(next) =
            generate_configuration(self.ctx, current, &node.cands, &node.order, &constraint, depth)
        else {
            return Step::Working;
        };
        let tag = self.tag(depth + 1);
        if self.index.find(&next, tag).is_some() {
            return Step::Working;
        }
        let mut moved_at = node.moved_at.clone();
        for (i, (a, b)) in current.iter().zip(&next).enumerate() {
            if a != b {
                moved_at[i] = depth as u32 + 1;
            }
        }
        let id = self.index.insert(&next, tag);
        let child = self.make_node(id as u32, top, depth as u32 + 1, moved_at);
        if self.incumbent.is_some_and(|b| child.lower_bound >= b) {
            return Step::Working;
        }
        self.max_depth = self.max_depth.max(depth + 1);
        self.open.push(self.nodes.len() as u32);
        self.nodes.push(child);
        Step::Working
    }
}
