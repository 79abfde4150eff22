//! Ready-made unit-cell patterns: the cross, rhomb and lightning-bolt cells
//! used throughout the tests and docs, two further cells with the same
//! effective tensor as the cross, and a deterministic random-pattern
//! generator for oracle comparisons.

use crate::cell::{Edge, UnitCellPattern};

fn edge(from: usize, to: usize) -> Edge {
    Edge { from, to, length_override: None }
}

/// Plus-shaped cell: four half-axes meeting at the center, all lengths 1/2.
pub fn plus() -> UnitCellPattern {
    UnitCellPattern::from_parts(
        vec![[0.0, 0.5], [0.5, 0.0], [0.5, 0.5], [1.0, 0.5], [0.5, 1.0]],
        vec![edge(2, 3), edge(2, 4), edge(0, 2), edge(1, 2)],
    )
    .unwrap()
}

/// Rhomb cell: a vertical line plus two lines crossing the center at angle
/// 2*phi, phi in (0, pi/4). Two edges of length 1/2, four of length 1/(2 cos phi).
pub fn rhomb(phi: f64) -> UnitCellPattern {
    assert!(phi > 0.0 && phi < std::f64::consts::FRAC_PI_4, "phi must lie in (0, pi/4)");
    let h = 0.5 * phi.tan();
    UnitCellPattern::from_parts(
        vec![
            [0.0, 0.5 + h], // 1
            [0.0, 0.5 - h], // 2
            [0.5, 0.0],     // 3
            [0.5, 0.5],     // 4
            [0.5, 1.0],     // 5
            [1.0, 0.5 + h], // 6
            [1.0, 0.5 - h], // 7
        ],
        vec![edge(5, 3), edge(6, 3), edge(3, 4), edge(0, 3), edge(1, 3), edge(3, 2)],
    )
    .unwrap()
}

/// Lightning-bolt cell: three segments zig-zagging from the left side over
/// the bottom and top contacts to the right side. The middle segment becomes
/// a loop in the periodic graph.
pub fn bolt() -> UnitCellPattern {
    UnitCellPattern::from_parts(
        vec![[0.0, 0.5], [0.5, 0.0], [0.5, 1.0], [1.0, 0.5]],
        vec![edge(0, 1), edge(1, 2), edge(2, 3)],
    )
    .unwrap()
}

/// Diagonal cross: the two unit-square diagonals. Same effective tensor as
/// [`plus`].
pub fn xcross() -> UnitCellPattern {
    UnitCellPattern::from_parts(
        vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.0, 1.0]],
        vec![edge(2, 4), edge(3, 2), edge(2, 1), edge(0, 2)],
    )
    .unwrap()
}

/// Diamond through the four side midpoints. Same effective tensor as [`plus`].
pub fn diamond() -> UnitCellPattern {
    UnitCellPattern::from_parts(
        vec![[0.0, 0.5], [0.5, 0.0], [0.5, 1.0], [1.0, 0.5]],
        vec![edge(3, 2), edge(2, 0), edge(0, 1), edge(1, 3)],
    )
    .unwrap()
}

/// Tiny deterministic generator (splitmix64), so the random patterns are
/// reproducible without pulling in an RNG dependency.
struct Rand(u64);

impl Rand {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    fn chance(&mut self, p: f64) -> bool {
        (self.next_u64() >> 11) as f64 / ((1u64 << 53) as f64) < p
    }
}

/// Random connected pattern: a handful of vertices on the interior 4x4 grid
/// (i/5, j/5), one or two identified boundary pairs per axis direction, a
/// random spanning tree plus extra edges, random edge orientations.
///
/// The construction guarantees that the pattern passes all validation checks.
pub fn random_pattern(seed: u64) -> UnitCellPattern {
    let mut rng = Rand(seed.wrapping_mul(2654435761).wrapping_add(1));

    // Interior vertices on the 4x4 grid.
    let n_interior = 2 + rng.below(5);
    let mut cells: Vec<(usize, usize)> = Vec::new();
    while cells.len() < n_interior {
        let c = (1 + rng.below(4), 1 + rng.below(4));
        if !cells.contains(&c) {
            cells.push(c);
        }
    }
    let mut vertices: Vec<[f64; 2]> =
        cells.iter().map(|&(i, j)| [i as f64 / 5.0, j as f64 / 5.0]).collect();

    // Identified boundary pairs: (0, y)-(1, y) and (x, 0)-(x, 1).
    let mut rows = vec![1 + rng.below(4)];
    if rng.chance(0.4) {
        let extra = 1 + rng.below(4);
        if !rows.contains(&extra) {
            rows.push(extra);
        }
    }
    let mut columns = vec![1 + rng.below(4)];
    if rng.chance(0.4) {
        let extra = 1 + rng.below(4);
        if !columns.contains(&extra) {
            columns.push(extra);
        }
    }
    let mut boundary = Vec::new();
    for &r in &rows {
        let y = r as f64 / 5.0;
        boundary.push([0.0, y]);
        boundary.push([1.0, y]);
    }
    for &c in &columns {
        let x = c as f64 / 5.0;
        boundary.push([x, 0.0]);
        boundary.push([x, 1.0]);
    }
    vertices.extend_from_slice(&boundary);

    // Spanning tree: interior vertices chain among themselves, boundary
    // vertices hook onto random interior ones. This keeps edges off the
    // boundary sides.
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 1..n_interior {
        edges.push((i, rng.below(i)));
    }
    for b in n_interior..vertices.len() {
        edges.push((b, rng.below(n_interior)));
    }

    // A few extra edges with at least one interior endpoint.
    let extras = rng.below(4);
    for _ in 0..extras {
        let a = rng.below(vertices.len());
        let b = rng.below(n_interior);
        let key = (a.min(b), a.max(b));
        if a != b && !edges.iter().any(|&(x, y)| (x.min(y), x.max(y)) == key) {
            edges.push((a, b));
        }
    }

    let edges = edges
        .into_iter()
        .map(|(a, b)| if rng.chance(0.5) { edge(a, b) } else { edge(b, a) })
        .collect();
    UnitCellPattern::from_parts(vertices, edges).expect("generator produced an invalid pattern")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::{periodic_identification, validate};

    #[test]
    fn random_patterns_always_validate() {
        for seed in 0..100 {
            let p = random_pattern(seed);
            let s = periodic_identification(&p)
                .unwrap_or_else(|e| panic!("seed {seed}: identification failed: {e}"));
            let report = validate(&p, &s);
            assert!(report.ok(), "seed {seed}:\n{report}");
        }
    }

    #[test]
    fn random_patterns_are_reproducible() {
        assert_eq!(random_pattern(17), random_pattern(17));
    }
}
