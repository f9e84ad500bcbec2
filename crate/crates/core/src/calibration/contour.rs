//! Marching-squares iso-lines on a rectilinear grid.

use std::collections::HashMap;

use serde::Serialize;

/// Iso-line at one level, as polylines of (x, y) points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contour {
    pub level: f64,
    pub polylines: Vec<Vec<(f64, f64)>>,
}

impl Contour {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }
}

/// Grid edge carrying a crossing: horizontal edges run along x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    X(usize, usize),
    Y(usize, usize),
}

/// Iso-lines of `values[i][j]` sampled at `(xs[i], ys[j])`.
///
/// Crossings are placed by linear interpolation along cell edges. Cells with
/// alternating corners are resolved by the bilinear value at the cell centre.
pub fn extract_contours(xs: &[f64], ys: &[f64], values: &[Vec<f64>], level: f64) -> Contour {
    let nx = xs.len();
    let ny = ys.len();
    let above = |i: usize, j: usize| values[i][j] >= level;
    let point = |e: Edge| -> (f64, f64) {
        match e {
            Edge::X(i, j) => {
                let (a, b) = (values[i][j], values[i + 1][j]);
                let t = (level - a) / (b - a);
                (xs[i] + t * (xs[i + 1] - xs[i]), ys[j])
            }
            Edge::Y(i, j) => {
                let (a, b) = (values[i][j], values[i][j + 1]);
                let t = (level - a) / (b - a);
                (xs[i], ys[j] + t * (ys[j + 1] - ys[j]))
            }
        }
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..nx.saturating_sub(1) {
        for j in 0..ny.saturating_sub(1) {
            // Corners counter-clockwise from (i, j).
            let c = [above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1)];
            let edges = [Edge::X(i, j), Edge::Y(i + 1, j), Edge::X(i, j + 1), Edge::Y(i, j)];
            let crossed: Vec<Edge> = (0..4).filter(|&k| c[k] != c[(k + 1) % 4]).map(|k| edges[k]).collect();
            match crossed.len() {
                2 => segments.push((crossed[0], crossed[1])),
                4 => {
                    let centre = 0.25 * (values[i][j] + values[i + 1][j] + values[i + 1][j + 1] + values[i][j + 1]);
                    // Edge k joins corners k and k+1. Pair each crossing with
                    // the neighbour that keeps the centre's side connected.
                    if (centre >= level) == c[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut polylines = Vec::new();
    let mut adjacency: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(k);
        adjacency.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    // Open chains start at edges touched by a single segment (grid boundary).
    let mut starts: Vec<usize> = (0..segments.len())
        .filter(|&k| {
            let (a, b) = segments[k];
            adjacency[&a].len() == 1 || adjacency[&b].len() == 1
        })
        .collect();
    starts.extend(0..segments.len());
    for start in starts {
        if used[start] {
            continue;
        }
        let (a, b) = segments[start];
        let (mut head, mut tail) = if adjacency[&a].len() == 1 { (a, b) } else { (b, a) };
        used[start] = true;
        let mut chain = vec![head, tail];
        loop {
            let next = adjacency[&tail].iter().copied().find(|&k| !used[k]);
            let Some(k) = next else { break };
            used[k] = true;
            let (p, q) = segments[k];
            head = tail;
            tail = if p == head { q } else { p };
            chain.push(tail);
        }
        polylines.push(chain.into_iter().map(point).collect());
    }
    Contour { level, polylines }
}
