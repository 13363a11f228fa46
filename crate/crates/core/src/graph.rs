//! ε-fattened transition digraphs on box covers and their strongly connected
//! components.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::chains::{ChainWitness, SpaceTag};
use crate::cover::{BoxCover, SampleScheme};
use crate::error::{Error, Result};
use crate::fiber::EpsilonField;
use crate::maps::DiscreteMap;

/// Outer approximation of the ε-chain relation of a map on the boxes of a cover.
///
/// Node `cover.count()` is an absorbing sink collecting samples that leave the
/// region. For every edge the index of the first sample producing it is kept, so
/// chains can be realized through actual sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionGraph {
    cover: BoxCover,
    epsilon: EpsilonField,
    scheme: SampleScheme,
    adjacency: Vec<Vec<usize>>,
    edge_samples: Vec<Vec<u32>>,
}

pub fn build_transition_graph<M: DiscreteMap>(
    cover: &BoxCover,
    map: &M,
    epsilon: EpsilonField,
    scheme: SampleScheme,
) -> Result<TransitionGraph> {
    if scheme.per_box == 0 {
        return Err(Error::InvalidArgument("samples_per_box must be at least 1".into()));
    }
    if map.space() != cover.space() {
        return Err(Error::InvalidArgument("map and cover live on different phase spaces".into()));
    }
    let space = cover.space();
    let sink = cover.count();
    let mut adjacency = Vec::with_capacity(sink + 1);
    let mut edge_samples = Vec::with_capacity(sink + 1);
    let mut pairs: Vec<(usize, u32)> = Vec::new();
    for id in 0..sink {
        pairs.clear();
        for (j, p) in cover.samples(id, &scheme).iter().enumerate() {
            if !space.contains(p) {
                continue;
            }
            match map.apply(p) {
                Some(q) => {
                    let rho = space.epsilon(&epsilon, &q);
                    pairs.extend(cover.boxes_meeting_ball(&q, rho).into_iter().map(|b| (b, j as u32)));
                }
                None => pairs.push((sink, j as u32)),
            }
        }
        pairs.sort_unstable();
        pairs.dedup_by_key(|e| e.0);
        adjacency.push(pairs.iter().map(|e| e.0).collect());
        edge_samples.push(pairs.iter().map(|e| e.1).collect());
    }
    adjacency.push(Vec::new());
    edge_samples.push(Vec::new());
    Ok(TransitionGraph { cover: cover.clone(), epsilon, scheme, adjacency, edge_samples })
}

impl TransitionGraph {
    pub fn cover(&self) -> &BoxCover {
        &self.cover
    }

    pub fn epsilon(&self) -> &EpsilonField {
        &self.epsilon
    }

    pub fn scheme(&self) -> &SampleScheme {
        &self.scheme
    }

    /// Boxes plus the sink.
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn sink(&self) -> usize {
        self.cover.count()
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// All edges in ascending `(src, dst)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, succ)| succ.iter().map(move |&b| (a, b)))
    }

    /// The sample point of `a` whose image produced the edge `a → b`.
    pub fn edge_sample(&self, a: usize, b: usize) -> Option<Vec<f64>> {
        let k = self.adjacency[a].binary_search(&b).ok()?;
        let j = self.edge_samples[a][k] as usize;
        Some(self.cover.samples(a, &self.scheme).swap_remove(j))
    }
}

/// Strongly connected components by an iterative Tarjan search, each sorted, in
/// order of completion.
pub fn strongly_connected_components(adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = adjacency.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(top) = call.last_mut() {
            let v = top.0;
            if let Some(&w) = adjacency[v].get(top.1) {
                top.1 += 1;
                if index[w] == UNVISITED {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack holds the component");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out
}

/// Nontrivial SCCs of a transition graph (those carrying a cycle or self-loop),
/// sorted by smallest member box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainComponents {
    pub components: Vec<Vec<usize>>,
    membership: Vec<Option<usize>>,
}

impl ChainComponents {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component_of(&self, b: usize) -> Option<usize> {
        self.membership.get(b).copied().flatten()
    }

    /// Indicator of the chain-recurrent boxes (the union of all components).
    pub fn recurrent_mask(&self) -> Vec<bool> {
        self.membership.iter().map(Option::is_some).collect()
    }

    pub fn recurrent_boxes(&self) -> Vec<usize> {
        (0..self.membership.len()).filter(|&b| self.membership[b].is_some()).collect()
    }
}

pub fn chain_components(graph: &TransitionGraph) -> ChainComponents {
    let mut components: Vec<Vec<usize>> = strongly_connected_components(&graph.adjacency)
        .into_iter()
        .filter(|c| c.len() > 1 || graph.has_edge(c[0], c[0]))
        .collect();
    components.sort_unstable_by_key(|c| c[0]);
    let mut membership = vec![None; graph.cover.count()];
    for (i, c) in components.iter().enumerate() {
        for &b in c {
            membership[b] = Some(i);
        }
    }
    ChainComponents { components, membership }
}

/// Shortest path `a → … → b` with at least one edge, by BFS in ascending box order.
pub fn box_path(graph: &TransitionGraph, a: usize, b: usize) -> Option<Vec<usize>> {
    let n = graph.node_count();
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &w in graph.successors(a) {
        if !seen[w] {
            seen[w] = true;
            parent[w] = a;
            queue.push_back(w);
        }
    }
    while let Some(v) = queue.pop_front() {
        if v == b {
            let mut path = vec![b];
            let mut cur = b;
            loop {
                cur = parent[cur];
                path.push(cur);
                if cur == a && path.len() >= 2 {
                    break;
                }
            }
            path.reverse();
            return Some(path);
        }
        for &w in graph.successors(v) {
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Breadth-first search from `a` to `b` over edges of the iterates `f^L`,
/// `L ∈ [block, 2·block)`, computed from the samples of each box: `A → B` with sample
/// `p ∈ A` when `f^L(p)` meets the closed `ε`-ball around `B`. Returns chain points
/// and times.
fn iterate_chain<M: DiscreteMap>(
    graph: &TransitionGraph,
    map: &M,
    a: usize,
    b: usize,
    block: usize,
) -> Option<(Vec<Vec<f64>>, Vec<usize>)> {
    let cover = &graph.cover;
    let space = cover.space();
    let n = cover.count();
    let mut parent: Vec<Option<(usize, usize, usize)>> = vec![None; n];
    let mut samples: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n];
    let mut queue = VecDeque::new();
    queue.push_back(a);
    let mut first = true;
    while let Some(v) = queue.pop_front() {
        if v == b && !first {
            break;
        }
        samples[v] = cover.samples(v, &graph.scheme).into_iter().filter(|p| space.contains(p)).collect();
        for (k, p) in samples[v].iter().enumerate() {
            let Some(mut y) = map.iterate(p, block) else { continue };
            for len in block..2 * block {
                if len > block {
                    match map.apply(&y) {
                        Some(next) => y = next,
                        None => break,
                    }
                }
                for m in cover.boxes_meeting_ball(&y, space.epsilon(&graph.epsilon, &y)) {
                    if parent[m].is_none() {
                        parent[m] = Some((v, k, len));
                        queue.push_back(m);
                    }
                }
            }
        }
        first = false;
    }
    parent[b]?;
    let mut points = vec![cover.center(b)];
    let mut times = Vec::new();
    let mut cur = b;
    loop {
        let (v, k, len) = parent[cur].expect("visited boxes have parents");
        points.push(samples[v][k].clone());
        times.push(len);
        cur = v;
        if cur == a {
            break;
        }
    }
    points.reverse();
    times.reverse();
    Some((points, times))
}

/// Realizes a chain from box `a` to box `b` ending at the center of `b`, with every
/// time above `t_min`.
///
/// For `t_min < 1` the chain follows a shortest box path through the edge-producing
/// samples, so each residual stays below `ε(image) + diameter`. Otherwise steps take
/// `L ∈ [⌊t_min⌋ + 1, 2⌊t_min⌋ + 2)` iterates and are searched over the edges of `f^L`,
/// which keeps the same bound. When `b` is reachable in the graph but not through
/// such steps, the box path is cut into blocks of `⌊t_min⌋ + 1` hops (extended by
/// cycles at `b`) and each block starts at the sample whose iterate lands closest to
/// the next chain point; a block missing the bound is then a construction error.
/// `Ok(None)` means `b` is unreachable.
pub fn find_box_chain<M: DiscreteMap>(
    graph: &TransitionGraph,
    map: &M,
    a: usize,
    b: usize,
    t_min: f64,
) -> Result<Option<ChainWitness>> {
    let sink = graph.sink();
    if a >= sink || b >= sink {
        return Err(Error::InvalidArgument(alloc::format!("box ids must be below {sink}")));
    }
    let Some(mut path) = box_path(graph, a, b) else { return Ok(None) };
    let cover = &graph.cover;
    let space = cover.space();
    let inflate = cover.diameter();
    let block = if t_min < 1.0 { 1 } else { libm::floor(t_min) as usize + 1 };

    let (points, sizes) = match (block > 1).then(|| iterate_chain(graph, map, a, b, block)).flatten() {
        Some(found) => found,
        None => {
            if path.len() - 1 < block {
                let Some(cycle) = box_path(graph, b, b) else { return Ok(None) };
                while path.len() - 1 < block {
                    path.extend_from_slice(&cycle[1..]);
                }
            }
            let hops = path.len() - 1;
            let mut sizes = vec![block; hops / block];
            *sizes.last_mut().expect("at least one block") += hops % block;
            let mut points = vec![Vec::new(); sizes.len() + 1];
            points[sizes.len()] = cover.center(b);
            let mut start = hops - sizes[sizes.len() - 1];
            for j in (0..sizes.len()).rev() {
                let from = path[start];
                let mut candidates = vec![graph.edge_sample(from, path[start + 1]).expect("path edges exist")];
                candidates.extend(cover.samples(from, &graph.scheme).into_iter().filter(|p| space.contains(p)));
                let mut best: Option<(f64, Vec<f64>)> = None;
                for c in candidates {
                    let Some(image) = map.iterate(&c, sizes[j]) else { continue };
                    let ratio =
                        space.metric(&points[j + 1], &image) / (space.epsilon(&graph.epsilon, &image) + inflate);
                    if best.as_ref().is_none_or(|(r, _)| ratio < *r) {
                        best = Some((ratio, c));
                    }
                }
                let Some((_, p)) = best else {
                    return Err(Error::Escaped { step: j });
                };
                points[j] = p;
                if j > 0 {
                    start -= sizes[j - 1];
                }
            }
            (points, sizes)
        }
    };
    let witness = ChainWitness::for_map(map, points, &sizes, &graph.epsilon, t_min, inflate)?;
    if let Some(step) = witness.first_violation() {
        return Err(Error::Construction { step, residual: witness.residuals[step], bound: witness.bounds[step] });
    }
    debug_assert_eq!(witness.tag, if space.is_suspension() { SpaceTag::Suspension } else { SpaceTag::Discrete });
    Ok(Some(witness))
}
