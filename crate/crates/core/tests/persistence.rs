mod common;

use common::oracle::{naive_bars, same_bars, sort_bars, Bar};
use phogad_core::homology::{build_filtration, compute_persistence, rips_persistence, PersistenceDiagram, PointCloud};
use phogad_core::EdgeId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(points: &[Vec<f64>]) -> PointCloud {
    PointCloud::new(points.iter().enumerate().map(|(i, p)| (EdgeId(i as u32), p.clone())).collect()).unwrap()
}

fn bars(d: &PersistenceDiagram) -> Vec<Bar> {
    let mut out: Vec<Bar> = d.features.iter().map(|f| (f.dimension, f.birth, f.death)).collect();
    sort_bars(&mut out);
    out
}

fn random_points(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rng.random_range(2..=8);
    let dim = rng.random_range(2..=4);
    let grid = rng.random_bool(0.3);
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| if grid { rng.random_range(0..3) as f64 } else { rng.random::<f64>() })
                .collect()
        })
        .collect()
}

#[test]
fn both_engines_match_the_naive_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let points = random_points(&mut rng);
        let pc = cloud(&points);
        for scale in [f64::INFINITY, 0.5, 1.0] {
            let expected = naive_bars(&points, scale);
            let explicit = bars(&compute_persistence(&build_filtration(&pc, scale)));
            let implicit = bars(&rips_persistence(&pc, scale));
            assert!(same_bars(&explicit, &expected, 1e-9), "{points:?} @ {scale}: {explicit:?} vs {expected:?}");
            assert!(same_bars(&implicit, &expected, 1e-9), "{points:?} @ {scale}: {implicit:?} vs {expected:?}");
        }
    }
}

#[test]
fn unit_square_has_one_hole() {
    let square = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
    let diag = compute_persistence(&build_filtration(&cloud(&square), f64::INFINITY));
    let holes: Vec<_> = diag.in_dimension(1).collect();
    assert_eq!(holes.len(), 1);
    assert_eq!(holes[0].birth, 1.0);
    assert!((holes[0].death - 2f64.sqrt()).abs() < 1e-9);
    assert_eq!(holes[0].members.len(), 4);
}

#[test]
fn scaling_the_cloud_scales_the_bars() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let points = random_points(&mut rng);
        let pc = cloud(&points);
        let c = rng.random_range(0.1..10.0);
        let base = rips_persistence(&pc, f64::INFINITY);
        let scaled = rips_persistence(&pc.scaled(c), f64::INFINITY);
        let expected: Vec<Bar> = bars(&base).into_iter().map(|(d, b, e)| (d, b * c, e * c)).collect();
        assert!(same_bars(&bars(&scaled), &expected, 1e-9 * c.max(1.0)));
    }
}

#[test]
fn component_deaths_are_stable_under_perturbation() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let points = random_points(&mut rng);
        let delta = 0.01;
        let moved: Vec<Vec<f64>> = points
            .iter()
            .map(|p| {
                // a random direction of length delta
                let dir: Vec<f64> = p.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                p.iter().zip(&dir).map(|(x, d)| x + delta * d / norm).collect()
            })
            .collect();
        // with exact ties some merges sit at zero and are dropped, so compare
        // the full list of merge scales, zeros included
        let deaths = |pts: &[Vec<f64>]| {
            let d = rips_persistence(&cloud(pts), f64::INFINITY);
            let mut v: Vec<f64> = d.in_dimension(0).filter(|f| f.is_finite()).map(|f| f.death).collect();
            v.resize(pts.len() - 1, 0.0);
            v.sort_by(f64::total_cmp);
            v
        };
        let (a, b) = (deaths(&points), deaths(&moved));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 2.0 * delta + 1e-12, "{x} vs {y}");
        }
    }
}

#[test]
fn members_of_a_feature_are_its_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let points = random_points(&mut rng);
        let diag = rips_persistence(&cloud(&points), f64::INFINITY);
        for f in &diag.features {
            assert!(!f.members.is_empty());
            assert!(f.members.windows(2).all(|w| w[0] < w[1]));
            assert!(f.members.iter().all(|e| e.index() < points.len()));
            if f.dimension == 1 {
                assert!(f.members.len() >= 3);
            }
        }
    }
}
