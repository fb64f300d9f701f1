use rand::seq::SliceRandom;
use rand::Rng;

use super::{successor_set, ProblemQuery};
use crate::roadmap::Roadmap;
use crate::workspace::{pair_min_distance, Workspace};
use crate::Point3;

/// Joint-move construction failed under the given constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stuck;

/// A statically feasible move for one agent and its greedy score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub pos: Point3,
    pub score: f64,
}

/// Everything the search needs about one (sub)problem.
#[derive(Debug, Clone)]
pub struct SearchContext<'a> {
    pub ws: &'a Workspace,
    pub rms: Vec<&'a Roadmap>,
    pub starts: Vec<Point3>,
    pub goals: Vec<Point3>,
    pub r_agent: f64,
    pub r_target: f64,
    pub d_travel: f64,
    pub time: f64,
    /// Paths of agents outside the problem, treated as moving obstacles
    /// (position at step `k` is `path[min(k, len - 1)]`).
    pub fixed: Vec<Vec<Point3>>,
}

impl<'a> SearchContext<'a> {
    pub fn new(query: &ProblemQuery, ws: &'a Workspace, rms: &'a [Roadmap]) -> Self {
        Self {
            ws,
            rms: rms.iter().collect(),
            starts: query.starts.clone(),
            goals: query.goals.clone(),
            r_agent: query.r_agent,
            r_target: query.r_target,
            d_travel: query.d_travel,
            time: query.time,
            fixed: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn at_goal(&self, i: usize, p: &Point3) -> bool {
        (p - self.goals[i]).norm() <= self.r_target
    }

    /// Longest fixed path horizon.
    pub fn fixed_horizon(&self) -> usize {
        self.fixed.iter().map(|f| f.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Statically feasible candidates for agent `i` at `p`, best first.
    /// Equal scores are ordered by `rng`.
    pub fn candidates<R: Rng>(&self, i: usize, p: &Point3, rng: &mut R) -> Vec<Candidate> {
        let mut out = self.scored_moves(i, p);
        order_candidates(&mut out, rng);
        out
    }

    /// Statically feasible candidates for agent `i` at `p` in generation order.
    pub(crate) fn scored_moves(&self, i: usize, p: &Point3) -> Vec<Candidate> {
        let rm = self.rms[i];
        let goal = self.goals[i];
        let mut moves = successor_set(p, rm, self.d_travel, self.ws.plane_z);
        let stay = moves.pop().expect("stay primitive");
        let to_goal = (goal - p).norm();
        if to_goal > self.r_target && to_goal <= self.d_travel {
            moves.push(goal);
        }
        let mut out = Vec::with_capacity(moves.len() + 1);
        out.extend(
            moves
                .into_iter()
                .filter(|c| self.ws.segment_free(p, c, self.r_agent, self.time))
                .map(|pos| Candidate {
                    pos,
                    score: rm.estimate_cost(&pos),
                }),
        );
        if self.ws.point_free(p, self.r_agent, self.time) {
            let score = if to_goal <= self.r_target {
                0.0
            } else {
                rm.estimate_cost(p) + 0.5 * self.d_travel
            };
            out.push(Candidate { pos: stay, score });
        }
        out
    }

    fn pair_ok(&self, a0: &Point3, a1: &Point3, b0: &Point3, b1: &Point3) -> bool {
        let reach = 2.0 * (self.r_agent + self.d_travel) + 1e-9;
        (a0 - b0).norm() > reach || pair_min_distance(a0, a1, b0, b1) >= 2.0 * self.r_agent + 1e-9
    }

    /// The move `from → to` of one agent during transition `depth → depth + 1`
    /// keeps clear of every fixed path.
    pub fn clear_of_fixed(&self, from: &Point3, to: &Point3, depth: usize) -> bool {
        self.fixed.iter().all(|f| {
            let last = f.len() - 1;
            let (b0, b1) = (f[depth.min(last)], f[(depth + 1).min(last)]);
            self.pair_ok(from, to, &b0, &b1)
        })
    }
}

/// Best first, equal scores in `rng` order.
pub(crate) fn order_candidates<R: Rng>(cands: &mut [Candidate], rng: &mut R) {
    cands.shuffle(rng);
    cands.sort_by(|a, b| a.score.total_cmp(&b.score));
}

/// Assigns every agent one move out of `current`.
///
/// Agents bound by `constraint` take their forced candidate index; the rest go
/// in `order`, each picking its best candidate compatible with every agent
/// already assigned. An agent with no compatible candidate may displace a
/// single unconstrained blocker once, which must then re-choose.
pub fn generate_configuration(
    ctx: &SearchContext,
    current: &[Point3],
    cands: &[Vec<Candidate>],
    order: &[u32],
    constraint: &[(u32, u8)],
    depth: usize,
) -> Result<Vec<Point3>, Stuck> {
    let n = current.len();
    let mut next: Vec<Option<Point3>> = vec![None; n];
    let mut forced = vec![false; n];

    let compatible = |next: &[Option<Point3>], i: usize, to: &Point3| -> Option<usize> {
        // Returns the first conflicting assigned agent, if any.
        next.iter().enumerate().find_map(|(j, nj)| match nj {
            Some(bj) if j != i && !ctx.pair_ok(&current[i], to, &current[j], bj) => Some(j),
            _ => None,
        })
    };

    for &(agent, k) in constraint {
        let i = agent as usize;
        let c = cands[i].get(k as usize).ok_or(Stuck)?;
        if compatible(&next, i, &c.pos).is_some() || !ctx.clear_of_fixed(&current[i], &c.pos, depth) {
            return Err(Stuck);
        }
        next[i] = Some(c.pos);
        forced[i] = true;
    }

    let pick = |next: &[Option<Point3>], i: usize| -> Option<Point3> {
        cands[i]
            .iter()
            .find(|c| {
                compatible(next, i, &c.pos).is_none()
                    && ctx.clear_of_fixed(&current[i], &c.pos, depth)
            })
            .map(|c| c.pos)
    };

    for &agent in order {
        let i = agent as usize;
        if forced[i] {
            continue;
        }
        if let Some(p) = pick(&next, i) {
            next[i] = Some(p);
            continue;
        }
        let mut resolved = false;
        for c in &cands[i] {
            if !ctx.clear_of_fixed(&current[i], &c.pos, depth) {
                continue;
            }
            let blockers: Vec<usize> = (0..n)
                .filter(|&j| {
                    j != i
                        && next[j].is_some_and(|bj| !ctx.pair_ok(&current[i], &c.pos, &current[j], &bj))
                })
                .collect();
            let [j] = blockers[..] else { continue };
            if forced[j] {
                continue;
            }
            let saved = next[j].take();
            next[i] = Some(c.pos);
            if let Some(pj) = pick(&next, j) {
                next[j] = Some(pj);
                resolved = true;
                break;
            }
            next[i] = None;
            next[j] = saved;
        }
        if !resolved {
            return Err(Stuck);
        }
    }
    Ok(next.into_iter().map(|p| p.expect("every agent assigned")).collect())
}
