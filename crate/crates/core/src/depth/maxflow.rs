//! Boykov-Kolmogorov augmenting-path max-flow.
//!
//! Two search trees grow from the terminals; when they touch, the path is
//! augmented and the nodes cut off from their tree (orphans) are re-adopted
//! or freed. Parents are chosen with the usual timestamp / distance
//! heuristic so adoption stays close to linear on grid graphs.

use std::collections::VecDeque;

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parent {
    Free,
    Terminal,
    Orphan,
    Arc(u32),
}

#[derive(Debug, Clone)]
struct Node {
    first: u32,
    parent: Parent,
    is_sink: bool,
    active: bool,
    /// Residual terminal capacity: > 0 towards the source, < 0 towards the sink.
    tr_cap: f64,
    ts: u64,
    dist: u32,
}

#[derive(Debug, Clone)]
struct Arc {
    head: u32,
    next: u32,
    r_cap: f64,
}

/// Which side of the minimum cut a node ended up on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Source,
    Sink,
}

#[derive(Debug, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    flow: f64,
    time: u64,
    queue: VecDeque<u32>,
    orphans: VecDeque<u32>,
}

#[inline]
fn sister(a: u32) -> u32 {
    a ^ 1
}

impl Graph {
    pub fn new(nodes: usize, edges_hint: usize) -> Self {
        Self {
            nodes: vec![
                Node {
                    first: NIL,
                    parent: Parent::Free,
                    is_sink: false,
                    active: false,
                    tr_cap: 0.0,
                    ts: 0,
                    dist: 0,
                };
                nodes
            ],
            arcs: Vec::with_capacity(2 * edges_hint),
            flow: 0.0,
            time: 0,
            queue: VecDeque::new(),
            orphans: VecDeque::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Add capacities `source -> i` and `i -> sink`. Repeated calls accumulate.
    pub fn add_terminal_weights(&mut self, i: usize, mut to_source: f64, mut to_sink: f64) {
        debug_assert!(to_source >= 0.0 && to_sink >= 0.0);
        let delta = self.nodes[i].tr_cap;
        if delta > 0.0 {
            to_source += delta;
        } else {
            to_sink -= delta;
        }
        self.flow += to_source.min(to_sink);
        self.nodes[i].tr_cap = to_source - to_sink;
    }

    /// Add the pair of arcs `i -> j` (capacity `cap`) and `j -> i` (`rev_cap`).
    pub fn add_edge(&mut self, i: usize, j: usize, cap: f64, rev_cap: f64) {
        debug_assert!(i != j && cap >= 0.0 && rev_cap >= 0.0);
        let a = self.arcs.len() as u32;
        self.arcs.push(Arc {
            head: j as u32,
            next: self.nodes[i].first,
            r_cap: cap,
        });
        self.arcs.push(Arc {
            head: i as u32,
            next: self.nodes[j].first,
            r_cap: rev_cap,
        });
        self.nodes[i].first = a;
        self.nodes[j].first = a + 1;
    }

    pub fn segment(&self, i: usize) -> Segment {
        let n = &self.nodes[i];
        if n.parent != Parent::Free && n.is_sink {
            Segment::Sink
        } else {
            Segment::Source
        }
    }

    fn set_active(&mut self, i: u32) {
        let n = &mut self.nodes[i as usize];
        if !n.active {
            n.active = true;
            self.queue.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<u32> {
        while let Some(i) = self.queue.pop_front() {
            self.nodes[i as usize].active = false;
            if self.nodes[i as usize].parent != Parent::Free {
                return Some(i);
            }
        }
        None
    }

    fn arcs_of(&self, i: u32) -> ArcIter<'_> {
        ArcIter {
            arcs: &self.arcs,
            cur: self.nodes[i as usize].first,
        }
    }

    fn make_orphan(&mut self, i: u32) {
        self.nodes[i as usize].parent = Parent::Orphan;
        self.orphans.push_back(i);
    }

    /// Run max-flow and return its value (including the flow implied by
    /// terminal weight normalization).
    pub fn maxflow(&mut self) -> f64 {
        self.queue.clear();
        self.orphans.clear();
        for i in 0..self.nodes.len() {
            let n = &mut self.nodes[i];
            n.active = false;
            n.ts = 0;
            if n.tr_cap > 0.0 {
                n.is_sink = false;
                n.parent = Parent::Terminal;
                n.dist = 1;
            } else if n.tr_cap < 0.0 {
                n.is_sink = true;
                n.parent = Parent::Terminal;
                n.dist = 1;
            } else {
                n.parent = Parent::Free;
            }
            if n.parent == Parent::Terminal {
                self.set_active(i as u32);
            }
        }
        self.time = 0;

        let mut current: Option<u32> = None;
        loop {
            let i = match current.take() {
                Some(i) if self.nodes[i as usize].parent != Parent::Free => i,
                _ => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };
            let bridge = self.grow(i);
            self.time += 1;
            if let Some(a) = bridge {
                current = Some(i);
                self.augment(a);
                while let Some(o) = self.orphans.pop_front() {
                    if self.nodes[o as usize].is_sink {
                        self.adopt_sink_orphan(o);
                    } else {
                        self.adopt_source_orphan(o);
                    }
                }
            }
        }
        self.flow
    }

    /// Expand the tree of `i` by one layer. Returns an arc from a source-tree
    /// node to a sink-tree node if the trees meet.
    fn grow(&mut self, i: u32) -> Option<u32> {
        let iu = i as usize;
        let (i_sink, i_ts, i_dist) = {
            let n = &self.nodes[iu];
            (n.is_sink, n.ts, n.dist)
        };
        let mut a = self.nodes[iu].first;
        while a != NIL {
            let next = self.arcs[a as usize].next;
            let j = self.arcs[a as usize].head;
            let ju = j as usize;
            let residual = if i_sink {
                self.arcs[sister(a) as usize].r_cap
            } else {
                self.arcs[a as usize].r_cap
            };
            if residual > 0.0 {
                match self.nodes[ju].parent {
                    Parent::Free => {
                        let n = &mut self.nodes[ju];
                        n.is_sink = i_sink;
                        n.parent = Parent::Arc(sister(a));
                        n.ts = i_ts;
                        n.dist = i_dist + 1;
                        self.set_active(j);
                    }
                    _ if self.nodes[ju].is_sink != i_sink => {
                        return Some(if i_sink { sister(a) } else { a });
                    }
                    _ => {
                        let n = &mut self.nodes[ju];
                        if n.ts <= i_ts && n.dist > i_dist {
                            n.parent = Parent::Arc(sister(a));
                            n.ts = i_ts;
                            n.dist = i_dist + 1;
                        }
                    }
                }
            }
            a = next;
        }
        None
    }

    fn augment(&mut self, middle: u32) {
        let mut bottleneck = self.arcs[middle as usize].r_cap;

        // source side
        let mut i = self.arcs[sister(middle) as usize].head;
        loop {
            match self.nodes[i as usize].parent {
                Parent::Arc(a) => {
                    bottleneck = bottleneck.min(self.arcs[sister(a) as usize].r_cap);
                    i = self.arcs[a as usize].head;
                }
                _ => break,
            }
        }
        bottleneck = bottleneck.min(self.nodes[i as usize].tr_cap);

        // sink side
        let mut i = self.arcs[middle as usize].head;
        loop {
            match self.nodes[i as usize].parent {
                Parent::Arc(a) => {
                    bottleneck = bottleneck.min(self.arcs[a as usize].r_cap);
                    i = self.arcs[a as usize].head;
                }
                _ => break,
            }
        }
        bottleneck = bottleneck.min(-self.nodes[i as usize].tr_cap);

        self.arcs[sister(middle) as usize].r_cap += bottleneck;
        self.arcs[middle as usize].r_cap -= bottleneck;

        let mut i = self.arcs[sister(middle) as usize].head;
        loop {
            match self.nodes[i as usize].parent {
                Parent::Arc(a) => {
                    self.arcs[a as usize].r_cap += bottleneck;
                    self.arcs[sister(a) as usize].r_cap -= bottleneck;
                    if self.arcs[sister(a) as usize].r_cap <= 0.0 {
                        self.arcs[sister(a) as usize].r_cap = 0.0;
                        self.make_orphan(i);
                    }
                    i = self.arcs[a as usize].head;
                }
                _ => break,
            }
        }
        self.nodes[i as usize].tr_cap -= bottleneck;
        if self.nodes[i as usize].tr_cap <= 0.0 {
            self.nodes[i as usize].tr_cap = 0.0;
            self.make_orphan(i);
        }

        let mut i = self.arcs[middle as usize].head;
        loop {
            match self.nodes[i as usize].parent {
                Parent::Arc(a) => {
                    self.arcs[sister(a) as usize].r_cap += bottleneck;
                    self.arcs[a as usize].r_cap -= bottleneck;
                    if self.arcs[a as usize].r_cap <= 0.0 {
                        self.arcs[a as usize].r_cap = 0.0;
                        self.make_orphan(i);
                    }
                    i = self.arcs[a as usize].head;
                }
                _ => break,
            }
        }
        self.nodes[i as usize].tr_cap += bottleneck;
        if self.nodes[i as usize].tr_cap >= 0.0 {
            self.nodes[i as usize].tr_cap = 0.0;
            self.make_orphan(i);
        }

        self.flow += bottleneck;
    }

    /// Distance of `j` to its terminal if its chain of parents is intact.
    fn origin_distance(&mut self, start: u32) -> Option<u32> {
        let mut j = start;
        let mut d: u32 = 0;
        loop {
            let n = &self.nodes[j as usize];
            if n.ts == self.time {
                d += n.dist;
                break;
            }
            d += 1;
            match n.parent {
                Parent::Terminal => {
                    let n = &mut self.nodes[j as usize];
                    n.ts = self.time;
                    n.dist = 1;
                    break;
                }
                Parent::Arc(a) => j = self.arcs[a as usize].head,
                Parent::Orphan | Parent::Free => return None,
            }
        }
        // mark the path so later checks stop early
        let mut j = start;
        let mut dd = d;
        while self.nodes[j as usize].ts != self.time {
            let n = &mut self.nodes[j as usize];
            n.ts = self.time;
            n.dist = dd;
            dd -= 1;
            match n.parent {
                Parent::Arc(a) => j = self.arcs[a as usize].head,
                _ => break,
            }
        }
        Some(d)
    }

    fn adopt_source_orphan(&mut self, i: u32) {
        self.adopt(i, false);
    }

    fn adopt_sink_orphan(&mut self, i: u32) {
        self.adopt(i, true);
    }

    fn adopt(&mut self, i: u32, sink: bool) {
        let mut best: Option<(u32, u32)> = None;
        let arcs: Vec<u32> = self.arcs_of(i).collect();
        for &a0 in &arcs {
            // residual from the candidate parent towards i (source tree) or
            // from i towards the candidate (sink tree)
            let residual = if sink {
                self.arcs[a0 as usize].r_cap
            } else {
                self.arcs[sister(a0) as usize].r_cap
            };
            if residual <= 0.0 {
                continue;
            }
            let j = self.arcs[a0 as usize].head;
            let n = &self.nodes[j as usize];
            if n.is_sink != sink || n.parent == Parent::Free {
                continue;
            }
            if let Some(d) = self.origin_distance(j) {
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((a0, d));
                }
            }
        }
        if let Some((a0, d)) = best {
            let n = &mut self.nodes[i as usize];
            n.parent = Parent::Arc(a0);
            n.ts = self.time;
            n.dist = d + 1;
            return;
        }
        self.nodes[i as usize].parent = Parent::Free;
        for &a0 in &arcs {
            let j = self.arcs[a0 as usize].head;
            let (j_sink, j_parent) = {
                let n = &self.nodes[j as usize];
                (n.is_sink, n.parent)
            };
            if j_sink != sink || j_parent == Parent::Free {
                continue;
            }
            let residual = if sink {
                self.arcs[a0 as usize].r_cap
            } else {
                self.arcs[sister(a0) as usize].r_cap
            };
            if residual > 0.0 {
                self.set_active(j);
            }
            if let Parent::Arc(pa) = j_parent {
                if self.arcs[pa as usize].head == i {
                    self.make_orphan(j);
                }
            }
        }
    }
}

struct ArcIter<'a> {
    arcs: &'a [Arc],
    cur: u32,
}

impl Iterator for ArcIter<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.cur == NIL {
            return None;
        }
        let a = self.cur;
        self.cur = self.arcs[a as usize].next;
        Some(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Edmonds-Karp on a dense capacity matrix with explicit terminals.
    fn reference_maxflow(n: usize, src: &[f64], snk: &[f64], edges: &[(usize, usize, f64, f64)]) -> f64 {
        let s = n;
        let t = n + 1;
        let m = n + 2;
        let mut cap = vec![vec![0.0; m]; m];
        for i in 0..n {
            cap[s][i] += src[i];
            cap[i][t] += snk[i];
        }
        for &(i, j, c, r) in edges {
            cap[i][j] += c;
            cap[j][i] += r;
        }
        let mut flow = 0.0;
        loop {
            let mut prev = vec![usize::MAX; m];
            prev[s] = s;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for v in 0..m {
                    if prev[v] == usize::MAX && cap[u][v] > 1e-12 {
                        prev[v] = u;
                        q.push_back(v);
                    }
                }
            }
            if prev[t] == usize::MAX {
                return flow;
            }
            let mut b = f64::INFINITY;
            let mut v = t;
            while v != s {
                b = b.min(cap[prev[v]][v]);
                v = prev[v];
            }
            let mut v = t;
            while v != s {
                cap[prev[v]][v] -= b;
                cap[v][prev[v]] += b;
                v = prev[v];
            }
            flow += b;
        }
    }

    #[test]
    fn two_node_chain() {
        let mut g = Graph::new(2, 1);
        g.add_terminal_weights(0, 5.0, 0.0);
        g.add_terminal_weights(1, 0.0, 3.0);
        g.add_edge(0, 1, 4.0, 0.0);
        assert_eq!(g.maxflow(), 3.0);
        assert_eq!(g.segment(0), Segment::Source);
        assert_eq!(g.segment(1), Segment::Source);
    }

    #[test]
    fn bottleneck_edge_is_cut() {
        let mut g = Graph::new(2, 1);
        g.add_terminal_weights(0, 5.0, 0.0);
        g.add_terminal_weights(1, 0.0, 9.0);
        g.add_edge(0, 1, 2.0, 0.0);
        assert_eq!(g.maxflow(), 2.0);
        assert_eq!(g.segment(0), Segment::Source);
        assert_eq!(g.segment(1), Segment::Sink);
    }

    #[test]
    fn matches_edmonds_karp_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..300 {
            let (h, w) = (rng.gen_range(1..6), rng.gen_range(1..6));
            let n = h * w;
            let src: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..10.0) } else { 0.0 }).collect();
            let snk: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..10.0) } else { 0.0 }).collect();
            let mut edges = Vec::new();
            for r in 0..h {
                for c in 0..w {
                    let i = r * w + c;
                    if c + 1 < w {
                        edges.push((i, i + 1, rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0)));
                    }
                    if r + 1 < h {
                        edges.push((i, i + w, rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0)));
                    }
                }
            }
            let mut g = Graph::new(n, edges.len());
            for i in 0..n {
                g.add_terminal_weights(i, src[i], snk[i]);
            }
            for &(i, j, c, r) in &edges {
                g.add_edge(i, j, c, r);
            }
            let flow = g.maxflow();
            let expected = reference_maxflow(n, &src, &snk, &edges);
            assert!((flow - expected).abs() < 1e-9, "trial {trial}: {flow} vs {expected}");

            // the reported segmentation is a cut whose value equals the flow
            let side: Vec<Segment> = (0..n).map(|i| g.segment(i)).collect();
            let mut cut = 0.0;
            for i in 0..n {
                match side[i] {
                    Segment::Source => cut += snk[i],
                    Segment::Sink => cut += src[i],
                }
            }
            for &(i, j, c, r) in &edges {
                if side[i] == Segment::Source && side[j] == Segment::Sink {
                    cut += c;
                }
                if side[j] == Segment::Source && side[i] == Segment::Sink {
                    cut += r;
                }
            }
            assert!((cut - flow).abs() < 1e-9, "trial {trial}: cut {cut} vs flow {flow}");
        }
    }
}
