//! Textbook persistence: every simplex of the Rips complex up to dimension 2,
//! a dense boundary matrix over Z/2 and the standard column reduction.

#![allow(dead_code)]

pub type Bar = (u8, f64, f64);

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Bars of dimension 0 and 1 with positive persistence; unpaired classes die
/// at infinity.
pub fn naive_bars(points: &[Vec<f64>], max_scale: f64) -> Vec<Bar> {
    let n = points.len();
    let d = |i: usize, j: usize| dist(&points[i], &points[j]);
    let mut simplices: Vec<(f64, Vec<usize>)> = (0..n).map(|i| (0.0, vec![i])).collect();
    for i in 0..n {
        for j in i + 1..n {
            if d(i, j) <= max_scale {
                simplices.push((d(i, j), vec![i, j]));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let s = d(i, j).max(d(i, k)).max(d(j, k));
                if s <= max_scale {
                    simplices.push((s, vec![i, j, k]));
                }
            }
        }
    }
    simplices.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.len().cmp(&b.1.len())));

    let m = simplices.len();
    let position = |v: &[usize]| simplices.iter().position(|s| s.1 == v).unwrap();
    let mut columns: Vec<Vec<bool>> = vec![vec![false; m]; m];
    for (c, (_, verts)) in simplices.iter().enumerate() {
        if verts.len() > 1 {
            for skip in 0..verts.len() {
                let face: Vec<usize> = verts.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                columns[c][position(&face)] = true;
            }
        }
    }
    let low = |col: &Vec<bool>| col.iter().rposition(|&x| x);
    let mut pivot_of: Vec<Option<usize>> = vec![None; m];
    let mut paired = vec![false; m];
    let mut bars = Vec::new();
    for c in 0..m {
        while let Some(l) = low(&columns[c]) {
            match pivot_of[l] {
                Some(other) => {
                    let src = columns[other].clone();
                    for (x, y) in columns[c].iter_mut().zip(src) {
                        *x ^= y;
                    }
                }
                None => break,
            }
        }
        if let Some(l) = low(&columns[c]) {
            pivot_of[l] = Some(c);
            paired[l] = true;
            paired[c] = true;
            let (birth, death) = (simplices[l].0, simplices[c].0);
            if death > birth {
                bars.push(((simplices[l].1.len() - 1) as u8, birth, death));
            }
        }
    }
    for (i, (scale, verts)) in simplices.iter().enumerate() {
        if !paired[i] && verts.len() <= 2 {
            bars.push(((verts.len() - 1) as u8, *scale, f64::INFINITY));
        }
    }
    sort_bars(&mut bars);
    bars
}

pub fn sort_bars(bars: &mut [Bar]) {
    bars.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
}

/// Multiset equality with `tol` on finite scales.
pub fn same_bars(a: &[Bar], b: &[Bar], tol: f64) -> bool {
    let close = |x: f64, y: f64| (x.is_infinite() && y.is_infinite() && x == y) || (x - y).abs() <= tol;
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.0 == y.0 && close(x.1, y.1) && close(x.2, y.2))
}
