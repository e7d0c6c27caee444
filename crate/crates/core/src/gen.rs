//! Seeded random instances and planted-partition graphs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hardness::Graph;
use crate::metric::{MetricInstance, Norm};

/// `n + extra` points with i.i.d. uniform coordinates in `[0,1]^dim`; the
/// first `n` are the clients.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
    pub norm: Norm,
    pub clients: Vec<usize>,
}

impl PointCloud {
    pub fn instance(&self) -> Result<MetricInstance> {
        MetricInstance::from_points(&self.points, self.norm, self.clients.clone())
    }
}

pub fn random_points(n: usize, dim: usize, norm: Norm, extra: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidSpec(format!("need n >= 1 and dim >= 1, got n={n} dim={dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n + extra)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    Ok(PointCloud {
        points,
        norm,
        clients: (0..n).collect(),
    })
}

/// Same as [`random_points`] but rounded to a `1/grid` lattice, which makes
/// ties and coincident clients common.
pub fn lattice_points(n: usize, dim: usize, norm: Norm, extra: usize, grid: u32, seed: u64) -> Result<PointCloud> {
    let mut cloud = random_points(n, dim, norm, extra, seed)?;
    let g = f64::from(grid.max(1));
    for p in &mut cloud.points {
        for c in p.iter_mut() {
            *c = (*c * g).round() / g;
        }
    }
    Ok(cloud)
}

/// Euclidean points around `clusters` uniform seeds: each point sits
/// uniformly within `spread` of a randomly chosen seed in every coordinate.
pub fn clustered_points(
    n: usize,
    dim: usize,
    clusters: usize,
    spread: f64,
    extra: usize,
    seed: u64,
) -> Result<PointCloud> {
    if n == 0 || dim == 0 || clusters == 0 {
        return Err(Error::InvalidSpec(format!(
            "need n, dim and clusters >= 1, got n={n} dim={dim} clusters={clusters}"
        )));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(Error::InvalidSpec(format!("spread must be finite and nonnegative, got {spread}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let points = (0..n + extra)
        .map(|_| {
            let c = &centers[rng.gen_range(0..clusters)];
            c.iter().map(|&x| x + rng.gen_range(-spread..=spread)).collect()
        })
        .collect();
    Ok(PointCloud {
        points,
        norm: Norm::L2,
        clients: (0..n).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedGraph {
    pub graph: Graph,
    /// Four independent parts covering every vertex.
    pub parts: Vec<Vec<usize>>,
}

/// Balanced random 4-partition of `n` vertices; each cross-part pair becomes
/// an edge with probability `density`. At least one edge is always present
/// when `n >= 2`.
pub fn planted_four_partite(n: usize, density: f64, seed: u64) -> Result<PlantedGraph> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!("need at least 2 vertices, got {n}")));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidSpec(format!("density {density} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut part_of = vec![0; n];
    let mut parts = vec![Vec::new(); 4];
    for (i, &v) in order.iter().enumerate() {
        part_of[v] = i % 4;
        parts[i % 4].push(v);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if part_of[u] != part_of[v] && rng.gen_bool(density) {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push((parts[0][0], parts[1][0]));
    }
    Ok(PlantedGraph {
        graph: Graph::new(n, edges)?,
        parts,
    })
}

/// Erdős–Rényi graph `G(n, density)`.
pub fn random_graph(n: usize, density: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidSpec(format!("density {density} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges)
}
