//! Primal network simplex for uncapacitated min-cost flow.
//!
//! The tree bookkeeping (parent, thread, successor counts, last successors)
//! and the block-search pivot rule follow the LEMON library. Costs are
//! integers so that reduced costs are exact; flows are `f64`.
//!
//! Arcs `0..node_num` are the artificial arcs joining each node to the root;
//! real arcs are appended after them and may keep being added between calls
//! to [`NetworkSimplex::solve`], which restarts from the current basis.

const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;
const NONE: usize = usize::MAX;
const MIN_BLOCK_SIZE: usize = 10;

pub(crate) struct NetworkSimplex {
    node_num: usize,

    source: Vec<usize>,
    target: Vec<usize>,
    cost: Vec<i64>,
    flow: Vec<f64>,
    state: Vec<i8>,

    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pi: Vec<i64>,
    dirty_revs: Vec<usize>,

    next_arc: usize,
    block_size: usize,

    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,

    pub pivots: u64,
}

impl NetworkSimplex {
    /// `supply[u] > 0` for sources, `< 0` for sinks. `max_cost` bounds every
    /// real arc cost that will ever be added and fixes the artificial cost.
    pub fn new(supply: &[f64], max_cost: i64) -> Self {
        let n = supply.len();
        let root = n;
        let art_cost = (max_cost.max(0) + 1) * (n as i64 + 1);
        let mut s = Self {
            node_num: n,
            source: vec![0; n],
            target: vec![0; n],
            cost: vec![0; n],
            flow: vec![0.0; n],
            state: vec![STATE_TREE; n],
            parent: vec![NONE; n + 1],
            pred: vec![NONE; n + 1],
            pred_dir: vec![0; n + 1],
            thread: vec![0; n + 1],
            rev_thread: vec![0; n + 1],
            succ_num: vec![1; n + 1],
            last_succ: vec![0; n + 1],
            pi: vec![0; n + 1],
            dirty_revs: Vec::new(),
            next_arc: n,
            block_size: MIN_BLOCK_SIZE,
            in_arc: NONE,
            join: NONE,
            u_in: NONE,
            v_in: NONE,
            u_out: NONE,
            delta: 0.0,
            pivots: 0,
        };
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = n + 1;
        s.last_succ[root] = root - 1;
        for (u, &sup) in supply.iter().enumerate() {
            s.parent[u] = root;
            s.pred[u] = u;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.last_succ[u] = u;
            if sup >= 0.0 {
                s.pred_dir[u] = DIR_UP;
                s.source[u] = u;
                s.target[u] = root;
                s.flow[u] = sup;
            } else {
                s.pred_dir[u] = DIR_DOWN;
                s.pi[u] = art_cost;
                s.source[u] = root;
                s.target[u] = u;
                s.flow[u] = -sup;
                s.cost[u] = art_cost;
            }
        }
        s
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cost: i64) {
        self.source.push(from);
        self.target.push(to);
        self.cost.push(cost);
        self.flow.push(0.0);
        self.state.push(STATE_LOWER);
    }

    pub fn real_arcs(&self) -> std::ops::Range<usize> {
        self.node_num..self.source.len()
    }

    pub fn arc(&self, e: usize) -> (usize, usize, f64) {
        (self.source[e], self.target[e], self.flow[e])
    }

    /// Node potentials; reduced costs are `cost + pi[from] - pi[to]`.
    pub fn potential(&self, u: usize) -> i64 {
        self.pi[u]
    }

    /// Total flow left on artificial arcs.
    pub fn artificial_flow(&self) -> f64 {
        self.flow[..self.node_num].iter().sum()
    }

    /// Pivots until no real arc has a negative reduced cost. Returns false if
    /// `max_pivots` is exhausted first.
    pub fn solve(&mut self, max_pivots: u64) -> bool {
        let arcs = self.source.len() - self.node_num;
        self.block_size = ((arcs as f64).sqrt().ceil() as usize).max(MIN_BLOCK_SIZE);
        if self.next_arc < self.node_num || self.next_arc >= self.source.len() {
            self.next_arc = self.node_num;
        }
        let mut budget = max_pivots;
        while self.find_entering_arc() {
            if budget == 0 {
                return false;
            }
            budget -= 1;
            self.find_join_node();
            if !self.find_leaving_arc() {
                // Unbounded: impossible with nonnegative costs.
                return false;
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            self.pivots += 1;
        }
        true
    }

    #[inline]
    fn reduced(&self, e: usize) -> i64 {
        self.state[e] as i64 * (self.cost[e] + self.pi[self.source[e]] - self.pi[self.target[e]])
    }

    fn find_entering_arc(&mut self) -> bool {
        let first = self.node_num;
        let last = self.source.len();
        let total = last - first;
        if total == 0 {
            return false;
        }
        let mut min = 0i64;
        let mut cnt = self.block_size;
        let mut e = self.next_arc;
        for _ in 0..total {
            let c = self.reduced(e);
            if c < min {
                min = c;
                self.in_arc = e;
            }
            e += 1;
            if e == last {
                e = first;
            }
            cnt -= 1;
            if cnt == 0 {
                if min < 0 {
                    self.next_arc = e;
                    return true;
                }
                cnt = self.block_size;
            }
        }
        self.next_arc = e;
        min < 0
    }

    fn find_join_node(&mut self) {
        let mut u = self.source[self.in_arc];
        let mut v = self.target[self.in_arc];
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving_arc(&mut self) -> bool {
        let (first, second) = (self.source[self.in_arc], self.target[self.in_arc]);
        let mut delta = f64::INFINITY;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == DIR_UP {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        u = second;
        while u != self.join {
            if self.pred_dir[u] == DIR_DOWN {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        self.delta = delta;
        result != 0
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        if val > 0.0 {
            self.flow[self.in_arc] += val;
            let mut u = self.source[self.in_arc];
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] -= self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
            u = self.target[self.in_arc];
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out = self.pred[self.u_out];
        self.flow[out] = 0.0;
        self.state[out] = STATE_LOWER;
    }

    fn update_tree_structure(&mut self) {
        let (u_in, v_in, u_out, join) = (self.u_in, self.v_in, self.u_out, self.join);
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.source[self.in_arc] { DIR_UP } else { DIR_DOWN };

            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in { self.thread[old_last_succ] } else { self.thread[v_in] };

            // Re-hang the stem u_in .. u_out, reversing parent links.
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;

            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }

            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }

            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            let mut p = self.parent[u];
            while u != u_in {
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
                p = self.parent[u];
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.source[self.in_arc] { DIR_UP } else { DIR_DOWN };
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }

        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let (u_in, v_in) = (self.u_in, self.v_in);
        let c = self.cost[self.in_arc];
        let sigma = self.pi[v_in] - self.pi[u_in] - if self.pred_dir[u_in] == DIR_UP { c } else { -c };
        let end = self.thread[self.last_succ[u_in]];
        // Potentials matter only up to a constant: shift the smaller side.
        let (mut u, stop, shift) =
            if 2 * self.succ_num[u_in] <= self.node_num + 1 { (u_in, end, sigma) } else { (end, u_in, -sigma) };
        while u != stop {
            self.pi[u] += shift;
            u = self.thread[u];
        }
    }
}
