//! Explicit Vietoris–Rips filtration and boundary-matrix reduction over Z/2.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::union_find::Components;
use super::{PersistenceDiagram, PersistenceFeature, PointCloud};
use crate::graph::EdgeId;

#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    /// Sorted point indices, 1 to 3 of them.
    pub vertices: Vec<u32>,
    pub scale: f64,
}

impl Simplex {
    pub fn dimension(&self) -> usize {
        self.vertices.len() - 1
    }

    fn filtration_cmp(&self, other: &Self) -> Ordering {
        self.scale
            .total_cmp(&other.scale)
            .then(self.vertices.len().cmp(&other.vertices.len()))
            .then_with(|| self.vertices.cmp(&other.vertices))
    }
}

/// Simplices of the Rips complex up to dimension 2, ordered by
/// `(scale, dimension, vertex tuple)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    ids: Vec<EdgeId>,
    max_scale: f64,
}

impl Filtration {
    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn max_scale(&self) -> f64 {
        self.max_scale
    }

    pub fn point_count(&self) -> usize {
        self.ids.len()
    }

    /// Edge carried by point `v`.
    pub fn point_id(&self, v: u32) -> EdgeId {
        self.ids[v as usize]
    }
}

/// Enumerates every vertex, every pair within `max_scale` and every triangle
/// whose three sides are within `max_scale`. Cost is cubic in the number of
/// points; see [`super::rips_persistence`] for large clouds.
pub fn build_filtration(pc: &PointCloud, max_scale: f64) -> Filtration {
    let n = pc.len();
    let dist = pc.distance_matrix();
    let d = |i: usize, j: usize| dist[i * n + j];
    let mut simplices: Vec<Simplex> = (0..n as u32)
        .map(|v| Simplex {
            vertices: alloc::vec![v],
            scale: 0.0,
        })
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if d(i, j) <= max_scale {
                simplices.push(Simplex {
                    vertices: alloc::vec![i as u32, j as u32],
                    scale: d(i, j),
                });
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if d(i, j) > max_scale {
                continue;
            }
            for k in (j + 1)..n {
                let diam = d(i, j).max(d(i, k)).max(d(j, k));
                if diam <= max_scale {
                    simplices.push(Simplex {
                        vertices: alloc::vec![i as u32, j as u32, k as u32],
                        scale: diam,
                    });
                }
            }
        }
    }
    simplices.sort_by(Simplex::filtration_cmp);
    Filtration {
        simplices,
        ids: pc.ids().to_vec(),
        max_scale,
    }
}

/// Symmetric difference of two sorted index lists.
pub(crate) fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Standard left-to-right column reduction of the full boundary matrix.
///
/// Dimension-0 members are the component formed by the merge; dimension-1
/// members are the vertices of the reduction-matrix column of the birth edge,
/// i.e. the cycle that edge closes. Zero-persistence pairs are dropped.
pub fn compute_persistence(f: &Filtration) -> PersistenceDiagram {
    let simplices = &f.simplices;
    let mut position: BTreeMap<&[u32], usize> = BTreeMap::new();
    for (i, s) in simplices.iter().enumerate() {
        position.insert(&s.vertices, i);
    }

    let mut reduced: Vec<Vec<usize>> = simplices
        .iter()
        .map(|s| {
            let v = &s.vertices;
            let mut col: Vec<usize> = match v.len() {
                1 => Vec::new(),
                2 => alloc::vec![position[&v[..1]], position[&v[1..]]],
                _ => alloc::vec![
                    position[&[v[0], v[1]][..]],
                    position[&[v[0], v[2]][..]],
                    position[&[v[1], v[2]][..]],
                ],
            };
            col.sort_unstable();
            col
        })
        .collect();
    let mut cycle: Vec<Vec<usize>> = (0..simplices.len()).map(|j| alloc::vec![j]).collect();
    let mut owner_of_low: Vec<Option<usize>> = alloc::vec![None; simplices.len()];

    for j in 0..simplices.len() {
        while let Some(&low) = reduced[j].last() {
            match owner_of_low[low] {
                Some(k) => {
                    reduced[j] = xor_sorted(&reduced[j], &reduced[k]);
                    if simplices[j].vertices.len() == 2 {
                        cycle[j] = xor_sorted(&cycle[j], &cycle[k]);
                    }
                }
                None => {
                    owner_of_low[low] = Some(j);
                    break;
                }
            }
        }
    }

    let n = f.point_count();
    let mut components = Components::new(n);
    let mut features = Vec::new();
    let cycle_members = |j: usize| {
        let verts = cycle[j]
            .iter()
            .flat_map(|&e| simplices[e].vertices.iter().copied());
        verts.collect::<Vec<u32>>()
    };
    let ids_of = |verts: Vec<u32>| {
        let mut out: Vec<EdgeId> = verts.into_iter().map(|v| f.ids[v as usize]).collect();
        out.sort_unstable();
        out.dedup();
        out
    };

    for (j, s) in simplices.iter().enumerate() {
        match s.vertices.len() {
            2 if !reduced[j].is_empty() => {
                let root = components
                    .union(s.vertices[0], s.vertices[1])
                    .expect("negative edge joins two components");
                if s.scale > 0.0 {
                    features.push(PersistenceFeature {
                        dimension: 0,
                        birth: 0.0,
                        death: s.scale,
                        members: ids_of(components.members(root).to_vec()),
                    });
                }
            }
            2 if owner_of_low[j].is_none() => {
                features.push(PersistenceFeature {
                    dimension: 1,
                    birth: s.scale,
                    death: f64::INFINITY,
                    members: ids_of(cycle_members(j)),
                });
            }
            3 if !reduced[j].is_empty() => {
                let birth_edge = *reduced[j].last().unwrap();
                let birth = simplices[birth_edge].scale;
                if s.scale > birth {
                    features.push(PersistenceFeature {
                        dimension: 1,
                        birth,
                        death: s.scale,
                        members: ids_of(cycle_members(birth_edge)),
                    });
                }
            }
            _ => {}
        }
    }
    for root in components.roots() {
        features.push(PersistenceFeature {
            dimension: 0,
            birth: 0.0,
            death: f64::INFINITY,
            members: ids_of(components.members(root).to_vec()),
        });
    }
    PersistenceDiagram::from_features(features, f.max_scale, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cloud(points: &[&[f64]]) -> PointCloud {
        PointCloud::new(
            points
                .iter()
                .enumerate()
                .map(|(i, p)| (EdgeId(i as u32), p.to_vec()))
                .collect(),
        )
        .unwrap()
    }

    fn unit_square() -> PointCloud {
        cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]])
    }

    #[test]
    fn two_points_filtration() {
        let f = build_filtration(&cloud(&[&[0.0], &[1.0]]), 2.0);
        let got: Vec<(Vec<u32>, f64)> = f
            .simplices()
            .iter()
            .map(|s| (s.vertices.clone(), s.scale))
            .collect();
        assert_eq!(
            got,
            vec![(vec![0], 0.0), (vec![1], 0.0), (vec![0, 1], 1.0)]
        );
    }

    #[test]
    fn square_filtration() {
        let f = build_filtration(&unit_square(), 2.0);
        let s = f.simplices();
        assert_eq!(s.len(), 14);
        let sides: Vec<_> = s.iter().filter(|x| x.dimension() == 1 && x.scale == 1.0).collect();
        assert_eq!(sides.len(), 4);
        let r2 = libm::sqrt(2.0);
        let diags: Vec<_> = s
            .iter()
            .filter(|x| x.dimension() == 1 && (x.scale - r2).abs() < 1e-15)
            .collect();
        assert_eq!(diags.len(), 2);
        let tris: Vec<_> = s.iter().filter(|x| x.dimension() == 2).collect();
        assert_eq!(tris.len(), 4);
        assert!(tris.iter().all(|t| (t.scale - r2).abs() < 1e-15));
        for w in s.windows(2) {
            assert_ne!(w[0].filtration_cmp(&w[1]), Ordering::Greater);
        }

        let vertices_only = build_filtration(&unit_square(), 0.5);
        assert_eq!(vertices_only.simplices().len(), 4);
    }

    #[test]
    fn two_point_bars() {
        let d = compute_persistence(&build_filtration(&cloud(&[&[0.0], &[2.5]]), 3.0));
        let bars: Vec<(u8, f64, f64)> = d
            .features
            .iter()
            .map(|f| (f.dimension, f.birth, f.death))
            .collect();
        assert_eq!(bars, vec![(0, 0.0, 2.5), (0, 0.0, f64::INFINITY)]);
        assert_eq!(d.features[0].members, vec![EdgeId(0), EdgeId(1)]);
    }

    #[test]
    fn square_has_one_hole() {
        let d = compute_persistence(&build_filtration(&unit_square(), 2.0));
        let holes: Vec<_> = d.in_dimension(1).collect();
        assert_eq!(holes.len(), 1);
        assert_eq!(holes[0].birth, 1.0);
        assert!((holes[0].death - libm::sqrt(2.0)).abs() < 1e-12);
        assert_eq!(holes[0].members.len(), 4);
        assert_eq!(d.in_dimension(0).filter(|f| !f.is_finite()).count(), 1);
        assert_eq!(d.in_dimension(0).filter(|f| f.is_finite()).count(), 3);
    }

    #[test]
    fn isolated_points() {
        let d = compute_persistence(&build_filtration(
            &cloud(&[&[0.0], &[10.0], &[20.0], &[30.0]]),
            1.0,
        ));
        assert_eq!(d.features.len(), 4);
        assert!(d.features.iter().all(|f| f.dimension == 0 && !f.is_finite()));
    }
}
