//! Implicit Rips persistence for clouds too large to list every triangle.
//!
//! Dimension 0 comes from Kruskal-order union–find. Dimension 1 is computed
//! by reducing edge coboundaries from the latest edge backwards; the
//! spanning-forest edges are cleared up front, and an edge whose earliest
//! coface has the edge's own diameter is paired immediately when that
//! coface is still free. Pairs coincide with those of the explicit
//! reduction, and representative cycles are the edge plus its path in the
//! spanning forest, which is exactly the reduction-matrix column the
//! explicit reduction produces.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::Reverse;

use super::union_find::Components;
use super::{PersistenceDiagram, PersistenceFeature, PointCloud};

/// Triangle in filtration order: diameter bits (monotone for non-negative
/// floats), then the sorted vertex triple.
type Tri = (u64, u32, u32, u32);

#[derive(Clone, Copy)]
struct RipsEdge {
    a: u32,
    b: u32,
    scale: f64,
}

/// Who owns a pivot: a single edge column, or a stored combination.
#[derive(Clone, Copy)]
enum Owner {
    Edge(u32),
    Combo(u32),
}

struct Engine {
    n: usize,
    dist: Vec<f64>,
    edges: Vec<RipsEdge>,
    max_scale: f64,
}

impl Engine {
    #[inline]
    fn d(&self, i: u32, j: u32) -> f64 {
        self.dist[i as usize * self.n + j as usize]
    }

    fn tri(&self, i: u32, j: u32, k: u32, diam: f64) -> Tri {
        let mut v = [i, j, k];
        v.sort_unstable();
        (diam.to_bits(), v[0], v[1], v[2])
    }

    /// Earliest coface when it has the edge's own diameter.
    fn apparent_coface(&self, e: &RipsEdge) -> Option<Tri> {
        (0..self.n as u32)
            .filter(|&k| k != e.a && k != e.b)
            .find(|&k| self.d(e.a, k) <= e.scale && self.d(e.b, k) <= e.scale)
            .map(|k| self.tri(e.a, e.b, k, e.scale))
    }

    fn push_coboundary(&self, e: &RipsEdge, heap: &mut BinaryHeap<Reverse<Tri>>) {
        for k in 0..self.n as u32 {
            if k == e.a || k == e.b {
                continue;
            }
            let diam = e.scale.max(self.d(e.a, k)).max(self.d(e.b, k));
            if diam <= self.max_scale {
                heap.push(Reverse(self.tri(e.a, e.b, k, diam)));
            }
        }
    }
}

/// Earliest triangle with odd multiplicity, left in the heap.
fn pivot(heap: &mut BinaryHeap<Reverse<Tri>>) -> Option<Tri> {
    while let Some(Reverse(top)) = heap.pop() {
        let mut odd = true;
        while heap.peek() == Some(&Reverse(top)) {
            heap.pop();
            odd = !odd;
        }
        if odd {
            heap.push(Reverse(top));
            return Some(top);
        }
    }
    None
}

/// Persistence in dimensions 0 and 1 of the Rips filtration cut at
/// `max_scale`. Output matches [`super::compute_persistence`] on
/// [`super::build_filtration`] exactly, members included.
pub fn rips_persistence(pc: &PointCloud, max_scale: f64) -> PersistenceDiagram {
    let n = pc.len();
    let dist = pc.distance_matrix();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = dist[i * n + j];
            if scale <= max_scale {
                edges.push(RipsEdge {
                    a: i as u32,
                    b: j as u32,
                    scale,
                });
            }
        }
    }
    edges.sort_by(|x, y| {
        x.scale
            .total_cmp(&y.scale)
            .then((x.a, x.b).cmp(&(y.a, y.b)))
    });
    let engine = Engine {
        n,
        dist,
        edges,
        max_scale,
    };

    let mut features = Vec::new();
    let mut components = Components::new(n);
    let mut in_forest = alloc::vec![false; engine.edges.len()];
    let mut forest: Vec<Vec<u32>> = alloc::vec![Vec::new(); n];
    for (idx, e) in engine.edges.iter().enumerate() {
        if let Some(root) = components.union(e.a, e.b) {
            in_forest[idx] = true;
            forest[e.a as usize].push(e.b);
            forest[e.b as usize].push(e.a);
            if e.scale > 0.0 {
                features.push(PersistenceFeature {
                    dimension: 0,
                    birth: 0.0,
                    death: e.scale,
                    members: pc.members_of(components.members(root).iter().copied()),
                });
            }
        }
    }
    for root in components.roots() {
        features.push(PersistenceFeature {
            dimension: 0,
            birth: 0.0,
            death: f64::INFINITY,
            members: pc.members_of(components.members(root).iter().copied()),
        });
    }

    let paths = ForestPaths::new(&forest);
    let mut owners: BTreeMap<Tri, Owner> = BTreeMap::new();
    let mut combos: Vec<Vec<u32>> = Vec::new();
    let mut heap = BinaryHeap::new();

    for idx in (0..engine.edges.len()).rev() {
        if in_forest[idx] {
            continue;
        }
        let e = engine.edges[idx];
        if let Some(t) = engine.apparent_coface(&e) {
            if let alloc::collections::btree_map::Entry::Vacant(slot) = owners.entry(t) {
                slot.insert(Owner::Edge(idx as u32));
                continue;
            }
        }

        heap.clear();
        engine.push_coboundary(&e, &mut heap);
        let mut combination: BTreeSet<u32> = BTreeSet::new();
        combination.insert(idx as u32);
        let death = loop {
            let Some(p) = pivot(&mut heap) else {
                break None;
            };
            match owners.get(&p) {
                None => break Some(p),
                Some(&owner) => {
                    let members: &[u32] = match owner {
                        Owner::Edge(ref x) => core::slice::from_ref(x),
                        Owner::Combo(c) => &combos[c as usize],
                    };
                    for &x in members {
                        if !combination.remove(&x) {
                            combination.insert(x);
                        }
                        engine.push_coboundary(&engine.edges[x as usize], &mut heap);
                    }
                }
            }
        };

        let birth = e.scale;
        match death {
            Some(t) => {
                let owner = if combination.len() == 1 {
                    Owner::Edge(idx as u32)
                } else {
                    combos.push(combination.into_iter().collect());
                    Owner::Combo(combos.len() as u32 - 1)
                };
                owners.insert(t, owner);
                let death_scale = f64::from_bits(t.0);
                if death_scale > birth {
                    features.push(PersistenceFeature {
                        dimension: 1,
                        birth,
                        death: death_scale,
                        members: pc.members_of(paths.cycle(e.a, e.b)),
                    });
                }
            }
            None => features.push(PersistenceFeature {
                dimension: 1,
                birth,
                death: f64::INFINITY,
                members: pc.members_of(paths.cycle(e.a, e.b)),
            }),
        }
    }
    PersistenceDiagram::from_features(features, max_scale, n)
}

/// Rooted spanning forest for path queries.
struct ForestPaths {
    parent: Vec<u32>,
    depth: Vec<u32>,
}

impl ForestPaths {
    fn new(adj: &[Vec<u32>]) -> Self {
        let n = adj.len();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        let mut depth = alloc::vec![0u32; n];
        let mut seen = alloc::vec![false; n];
        let mut queue = VecDeque::new();
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            queue.push_back(root as u32);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v as usize] {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        parent[w as usize] = v;
                        depth[w as usize] = depth[v as usize] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        Self { parent, depth }
    }

    /// Vertices on the forest path between `a` and `b` (both included).
    fn cycle(&self, mut a: u32, mut b: u32) -> Vec<u32> {
        let mut out = alloc::vec![a, b];
        while a != b {
            if self.depth[a as usize] >= self.depth[b as usize] {
                a = self.parent[a as usize];
                out.push(a);
            } else {
                b = self.parent[b as usize];
                out.push(b);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_filtration, compute_persistence};
    use super::*;
    use crate::graph::EdgeId;
    use rand::Rng;

    fn random_cloud(seed: u64, n: usize, dim: usize, grid: bool) -> PointCloud {
        let mut rng = crate::rng::stream(seed, 99);
        PointCloud::new(
            (0..n)
                .map(|i| {
                    let p = (0..dim)
                        .map(|_| {
                            if grid {
                                rng.random_range(0..4) as f64
                            } else {
                                rng.random::<f64>()
                            }
                        })
                        .collect();
                    (EdgeId(i as u32 * 3), p)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn agrees_with_explicit_reduction() {
        for seed in 0..60 {
            let grid = seed % 3 == 0;
            let pc = random_cloud(seed, 5 + (seed as usize % 10), 2 + (seed as usize % 3), grid);
            for scale in [0.3, 0.6, 10.0] {
                let explicit = compute_persistence(&build_filtration(&pc, scale));
                let implicit = rips_persistence(&pc, scale);
                assert_eq!(explicit, implicit, "seed {seed} scale {scale}");
            }
        }
    }

    #[test]
    fn circle_has_long_hole() {
        let n = 24;
        let pc = PointCloud::new(
            (0..n)
                .map(|i| {
                    let t = 2.0 * core::f64::consts::PI * i as f64 / n as f64;
                    (EdgeId(i), alloc::vec![libm::cos(t), libm::sin(t)])
                })
                .collect(),
        )
        .unwrap();
        let d = rips_persistence(&pc, 3.0);
        let holes: Vec<_> = d.in_dimension(1).collect();
        assert_eq!(holes.len(), 1);
        assert!(holes[0].persistence() > 1.0);
        assert_eq!(holes[0].members.len(), n as usize);
    }
}
