//! Network simplex for the dense bipartite transportation problem.
//!
//! Sources are nodes `0..m`, targets are nodes `m..m+n`. The basis is a
//! spanning tree of `m + n - 1` arcs. Node potentials satisfy
//! `pot[s] + pot[m + t] = cost(s, t)` on tree arcs; at optimality every
//! reduced cost `cost(s, t) - pot[s] - pot[m + t]` is nonnegative.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct TransportSolution {
    /// Basic arcs with positive flow: `(source, target, amount)`.
    pub flows: Vec<(usize, usize, f64)>,
    /// Source potentials.
    #[allow(dead_code)]
    pub u: Vec<f64>,
    /// Target potentials.
    pub v: Vec<f64>,
    pub cost: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    s: usize,
    t: usize,
    flow: f64,
}

struct Basis<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    queue: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl<'a> Basis<'a> {
    fn new(m: usize, n: usize, cost: &'a [f64], arcs: Vec<Arc>) -> Self {
        let nodes = m + n;
        let mut adj = vec![Vec::new(); nodes];
        for (id, a) in arcs.iter().enumerate() {
            adj[a.s].push(id);
            adj[m + a.t].push(id);
        }
        let mut basis = Self {
            m,
            n,
            cost,
            arcs,
            adj,
            parent: vec![NONE; nodes],
            parent_arc: vec![NONE; nodes],
            depth: vec![0; nodes],
            pot: vec![0.0; nodes],
            queue: Vec::with_capacity(nodes),
        };
        basis.rebuild();
        basis
    }

    #[inline]
    fn c(&self, s: usize, t: usize) -> f64 {
        self.cost[s * self.n + t]
    }

    /// Recomputes parents, depths and potentials by BFS from source 0.
    fn rebuild(&mut self) {
        let m = self.m;
        self.parent.fill(NONE);
        self.queue.clear();
        self.queue.push(0);
        self.parent[0] = 0;
        self.parent_arc[0] = NONE;
        self.depth[0] = 0;
        self.pot[0] = 0.0;
        let mut head = 0;
        while head < self.queue.len() {
            let node = self.queue[head];
            head += 1;
            for k in 0..self.adj[node].len() {
                let id = self.adj[node][k];
                let a = self.arcs[id];
                let other = if node == a.s { m + a.t } else { a.s };
                if self.parent[other] != NONE {
                    continue;
                }
                self.parent[other] = node;
                self.parent_arc[other] = id;
                self.depth[other] = self.depth[node] + 1;
                self.pot[other] = self.cost[a.s * self.n + a.t] - self.pot[node];
                self.queue.push(other);
            }
        }
        debug_assert_eq!(self.queue.len(), m + self.n, "basis is not a spanning tree");
    }

    #[inline]
    fn reduced(&self, cell: usize) -> f64 {
        let s = cell / self.n;
        let t = cell % self.n;
        self.cost[cell] - self.pot[s] - self.pot[self.m + t]
    }

    /// Tree path from target `t` to source `s`, as arc ids in order.
    /// Returns how many leading arcs lie on the target side of the apex.
    fn path(&self, s: usize, t: usize, out: &mut Vec<usize>, tail: &mut Vec<usize>) -> usize {
        out.clear();
        tail.clear();
        let mut a = self.m + t;
        let mut b = s;
        while self.depth[a] > self.depth[b] {
            out.push(self.parent_arc[a]);
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            tail.push(self.parent_arc[b]);
            b = self.parent[b];
        }
        while a != b {
            out.push(self.parent_arc[a]);
            a = self.parent[a];
            tail.push(self.parent_arc[b]);
            b = self.parent[b];
        }
        let split = out.len();
        out.extend(tail.drain(..).rev());
        split
    }

    /// Hangs the subtree containing `node` below `above` through arc `id`,
    /// refreshing parents, depths and potentials inside that subtree only.
    fn reattach(&mut self, node: usize, above: usize, id: usize) {
        let m = self.m;
        self.parent[node] = above;
        self.parent_arc[node] = id;
        self.queue.clear();
        self.queue.push(node);
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            let (p, pa) = (self.parent[v], self.parent_arc[v]);
            let a = self.arcs[pa];
            self.depth[v] = self.depth[p] + 1;
            self.pot[v] = self.cost[a.s * self.n + a.t] - self.pot[p];
            for k in 0..self.adj[v].len() {
                let e = self.adj[v][k];
                if e == pa {
                    continue;
                }
                let a = self.arcs[e];
                let other = if v == a.s { m + a.t } else { a.s };
                self.parent[other] = v;
                self.parent_arc[other] = e;
                self.queue.push(other);
            }
        }
    }

    fn replace(&mut self, leave: usize, entering: Arc) {
        let old = self.arcs[leave];
        let m = self.m;
        self.adj[old.s].retain(|&id| id != leave);
        self.adj[m + old.t].retain(|&id| id != leave);
        self.arcs[leave] = entering;
        self.adj[entering.s].push(leave);
        self.adj[m + entering.t].push(leave);
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// Returns false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Least-cost greedy start, completed to a spanning tree with zero arcs.
fn least_cost_basis(supply: &[f64], demand: &[f64], cost: &[f64], tiny: f64) -> Option<Vec<Arc>> {
    let (m, n) = (supply.len(), demand.len());
    let mut order: Vec<usize> = (0..m * n).collect();
    order.sort_unstable_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));

    let mut rem_s = supply.to_vec();
    let mut rem_t = demand.to_vec();
    let mut uf = UnionFind::new(m + n);
    let mut arcs = Vec::with_capacity(m + n - 1);
    let mut open = m;
    for &cell in &order {
        if open == 0 {
            break;
        }
        let (s, t) = (cell / n, cell % n);
        if rem_s[s] <= tiny || rem_t[t] <= tiny {
            continue;
        }
        if !uf.union(s, m + t) {
            return None;
        }
        let x = rem_s[s].min(rem_t[t]);
        rem_s[s] -= x;
        rem_t[t] -= x;
        if rem_s[s] <= tiny {
            rem_s[s] = 0.0;
            open -= 1;
        }
        if rem_t[t] <= tiny {
            rem_t[t] = 0.0;
        }
        arcs.push(Arc { s, t, flow: x });
    }
    for &cell in &order {
        if arcs.len() == m + n - 1 {
            break;
        }
        let (s, t) = (cell / n, cell % n);
        if uf.union(s, m + t) {
            arcs.push(Arc { s, t, flow: 0.0 });
        }
    }
    Some(arcs)
}

/// Northwest-corner start; always a staircase spanning tree.
fn northwest_basis(supply: &[f64], demand: &[f64]) -> Vec<Arc> {
    let (m, n) = (supply.len(), demand.len());
    let mut rem_s = supply.to_vec();
    let mut rem_t = demand.to_vec();
    let mut arcs = Vec::with_capacity(m + n - 1);
    let (mut s, mut t) = (0, 0);
    loop {
        let x = rem_s[s].min(rem_t[t]).max(0.0);
        arcs.push(Arc { s, t, flow: x });
        rem_s[s] -= x;
        rem_t[t] -= x;
        if s == m - 1 && t == n - 1 {
            break;
        }
        if t == n - 1 || (s < m - 1 && rem_s[s] <= rem_t[t]) {
            s += 1;
        } else {
            t += 1;
        }
    }
    arcs
}

/// Solves `min sum cost[s*n+t] * flow` subject to row sums `supply` and
/// column sums `demand`. Both marginals must be strictly positive and carry
/// the same total mass.
pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let (m, n) = (supply.len(), demand.len());
    assert_eq!(cost.len(), m * n);
    assert!(m > 0 && n > 0);

    let total: f64 = supply.iter().sum();
    let tiny = 1e-15 * total.max(f64::MIN_POSITIVE);
    let arcs = least_cost_basis(supply, demand, cost, tiny).unwrap_or_else(|| northwest_basis(supply, demand));
    let mut basis = Basis::new(m, n, cost, arcs);

    let cmax = cost.iter().cloned().fold(0.0, f64::max);
    let eps = 1e-12 * cmax.max(f64::MIN_POSITIVE);
    let cells = m * n;
    let block = ((cells as f64).sqrt().ceil() as usize).clamp(16, cells.max(16));
    let max_pivots = 50 * cells + 100 * (m + n) + 10_000;
    let degenerate_limit = 2 * (m + n) + 16;

    let mut next = 0usize;
    let mut pivots = 0usize;
    let mut degenerate_run = 0usize;
    let mut path = Vec::with_capacity(m + n);
    let mut tail = Vec::with_capacity(m + n);

    loop {
        let bland = degenerate_run > degenerate_limit;
        let entering = if bland {
            // lowest-index improving cell
            (0..cells).find(|&c| basis.reduced(c) < -eps)
        } else {
            // block search, lowest index wins ties inside a block
            let mut found = None;
            let mut scanned = 0;
            while scanned < cells {
                let mut best = -eps;
                let mut best_cell = None;
                let end = (scanned + block).min(cells);
                for k in scanned..end {
                    let c = (next + k) % cells;
                    let r = basis.reduced(c);
                    if r < best || (r == best && best_cell.is_some_and(|b| c < b)) {
                        best = r;
                        best_cell = Some(c);
                    }
                }
                scanned = end;
                if let Some(c) = best_cell {
                    next = (next + scanned) % cells;
                    found = Some(c);
                    break;
                }
            }
            found
        };
        let Some(cell) = entering else { break };

        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::SolverStalled { pivots, sources: m, targets: n });
        }

        let (s, t) = (cell / n, cell % n);
        let split = basis.path(s, t, &mut path, &mut tail);
        // arcs at even positions lose flow
        let mut theta = f64::INFINITY;
        let mut leave = NONE;
        let mut leave_pos = 0;
        let mut leave_cell = usize::MAX;
        for (k, &id) in path.iter().enumerate() {
            if k % 2 == 0 {
                let a = basis.arcs[id];
                let cell_id = a.s * n + a.t;
                let better = a.flow < theta || (bland && a.flow == theta && cell_id < leave_cell);
                if better {
                    theta = a.flow;
                    leave = id;
                    leave_pos = k;
                    leave_cell = cell_id;
                }
            }
        }
        let theta = theta.max(0.0);
        if theta > tiny {
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }
        for (k, &id) in path.iter().enumerate() {
            let a = &mut basis.arcs[id];
            if k % 2 == 0 {
                a.flow = (a.flow - theta).max(0.0);
            } else {
                a.flow += theta;
            }
        }
        basis.replace(leave, Arc { s, t, flow: theta });
        // the side of the cycle that held the leaving arc is the cut-off subtree
        if leave_pos < split {
            basis.reattach(m + t, s, leave);
        } else {
            basis.reattach(s, m + t, leave);
        }
    }

    let flows: Vec<(usize, usize, f64)> = basis
        .arcs
        .iter()
        .filter(|a| a.flow > 0.0)
        .map(|a| (a.s, a.t, a.flow))
        .collect();
    let total_cost = flows.iter().map(|&(s, t, f)| f * basis.c(s, t)).sum();
    Ok(TransportSolution {
        flows,
        u: basis.pot[..m].to_vec(),
        v: basis.pot[m..].to_vec(),
        cost: total_cost,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_marginals(sol: &TransportSolution, supply: &[f64], demand: &[f64]) {
        let mut rows = vec![0.0; supply.len()];
        let mut cols = vec![0.0; demand.len()];
        for &(s, t, f) in &sol.flows {
            rows[s] += f;
            cols[t] += f;
        }
        for (a, b) in rows.iter().zip(supply) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in cols.iter().zip(demand) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_cell() {
        let sol = solve(&[1.0], &[1.0], &[3.0]).unwrap();
        assert_eq!(sol.cost, 3.0);
        assert_eq!(sol.pivots, 0);
    }

    #[test]
    fn classic_textbook_instance() {
        // 3x4 textbook example, optimum 743
        let supply = [7.0, 9.0, 18.0];
        let demand = [5.0, 8.0, 7.0, 14.0];
        let cost = [19.0, 30.0, 50.0, 10.0, 70.0, 30.0, 40.0, 60.0, 40.0, 8.0, 70.0, 20.0];
        let sol = solve(&supply, &demand, &cost).unwrap();
        check_marginals(&sol, &supply, &demand);
        assert!((sol.cost - 743.0).abs() < 1e-9, "cost {}", sol.cost);
        for s in 0..3 {
            for t in 0..4 {
                assert!(cost[s * 4 + t] - sol.u[s] - sol.v[t] > -1e-9);
            }
        }
    }

    #[test]
    fn northwest_start_is_spanning() {
        let arcs = northwest_basis(&[0.5, 0.5], &[0.25, 0.25, 0.5]);
        assert_eq!(arcs.len(), 4);
        let cost = [1.0; 6];
        let b = Basis::new(2, 3, &cost, arcs);
        assert!(b.parent.iter().all(|&p| p != NONE));
    }

    #[test]
    fn degenerate_uniform_problem() {
        let n = 12;
        let w = vec![1.0 / n as f64; n];
        let cost: Vec<f64> = (0..n * n).map(|c| ((c / n) as f64 - (c % n) as f64).abs()).collect();
        let sol = solve(&w, &w, &cost).unwrap();
        assert!(sol.cost.abs() < 1e-14);
    }
}
