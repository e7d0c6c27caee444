//! Rounding of the consolidated representative LP: padding to an integral
//! mass total, pairwise moves to a {½,1}-integral point, and forest rounding
//! to an integral center set.
//!
//! Masses live in [½, 1], where doubles are exactly the multiples of 2^-53.
//! All mass arithmetic is done on those integer units so sums are preserved
//! bit for bit.

use crate::error::{Error, Result};

const UNIT: i64 = 1 << 53;
const HALF: i64 = 1 << 52;

fn to_units(z: f64) -> i64 {
    (z * UNIT as f64) as i64
}

fn from_units(u: i64) -> f64 {
    u as f64 / UNIT as f64
}

/// Representatives with weights, nearest-neighbor links, and masses.
#[derive(Debug, Clone, PartialEq)]
pub struct DlpInput {
    /// Client id of each representative (for reporting only).
    pub reps: Vec<usize>,
    /// Number of clients each representative stands for.
    pub weight: Vec<f64>,
    /// Position (within `reps`) of the nearest other representative; a lone
    /// representative points at itself.
    pub neighbor: Vec<usize>,
    /// Distance to `neighbor`.
    pub dist: Vec<f64>,
    /// Mass kept at the representative; the rest is assigned to `neighbor`.
    pub mass: Vec<f64>,
    pub k: usize,
    pub p: u32,
}

impl DlpInput {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Cost of sending all of rep `j` to its neighbor: `w_j c_j^p`.
    pub fn unit_cost(&self, j: usize) -> f64 {
        self.weight[j] * self.dist[j].powi(self.p as i32)
    }

    /// `Σ w_j (1 − z_j) c_j^p` for the given masses.
    pub fn cost(&self, mass: &[f64]) -> f64 {
        (0..self.len())
            .map(|j| self.unit_cost(j) * (1.0 - mass[j]))
            .sum()
    }

    pub fn mass_sum(&self) -> f64 {
        self.mass.iter().sum()
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.len();
        let ok = self.weight.len() == n
            && self.neighbor.len() == n
            && self.dist.len() == n
            && self.mass.len() == n
            && self.neighbor.iter().all(|&s| s < n);
        if !ok {
            return Err(Error::InvariantBreach("malformed rounding input".into()));
        }
        if let Some(j) = self.mass.iter().position(|&z| !(0.5..=1.0).contains(&z)) {
            return Err(Error::InvariantBreach(format!(
                "mass {} of rep {j} outside [1/2, 1]",
                self.mass[j]
            )));
        }
        Ok(())
    }
}

/// Moves masses so their total is exactly `min(k, |reps|)`.
///
/// Raising goes in increasing rep order. A total above `k` (only possible by
/// LP round-off after the separation check) is trimmed back in decreasing
/// rep order, fractional masses first; masses never leave [½, 1].
pub fn pad(input: &DlpInput) -> Result<DlpInput> {
    input.check_shape()?;
    let mut units: Vec<i64> = input.mass.iter().map(|&z| to_units(z)).collect();
    let target = input.k.min(input.len()) as i64 * UNIT;
    let mut sum: i64 = units.iter().sum();
    for u in units.iter_mut() {
        if sum >= target {
            break;
        }
        let add = (UNIT - *u).min(target - sum);
        *u += add;
        sum += add;
    }
    // Fractional masses absorb the excess first so masses at 1 stay at 1.
    for only_fractional in [true, false] {
        for u in units.iter_mut().rev() {
            if sum <= target {
                break;
            }
            if only_fractional && *u == UNIT {
                continue;
            }
            let cut = (*u - HALF).min(sum - target);
            *u -= cut;
            sum -= cut;
        }
    }
    if sum != target {
        return Err(Error::InvariantBreach(format!(
            "masses cannot total {} (sum {})",
            from_units(target),
            from_units(sum)
        )));
    }
    Ok(DlpInput {
        mass: units.into_iter().map(from_units).collect(),
        ..input.clone()
    })
}

/// Output of the pairwise moves.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfIntegral {
    pub mass: Vec<f64>,
    pub iterations: usize,
    /// Potential before the first move and after each move.
    pub potential: Vec<f64>,
}

/// `Σ max(z − ½, 1 − z)` over reps whose mass is strictly between ½ and 1.
/// Zero exactly at {½,1}-integral points and strictly decreasing under the
/// pairwise moves of [`round_half`].
pub fn potential(mass: &[f64]) -> f64 {
    mass.iter()
        .filter(|&&z| z > 0.5 && z < 1.0)
        .map(|&z| (z - 0.5).max(1.0 - z))
        .sum()
}

fn potential_units(units: &[i64]) -> i64 {
    units
        .iter()
        .filter(|&&u| u > HALF && u < UNIT)
        .map(|&u| (u - HALF).max(UNIT - u))
        .sum()
}

/// Repeatedly takes the two lowest-index fractional reps, lowers the one with
/// the smaller `w c^p` and raises the other by the same amount until one of
/// them hits ½ or 1. Cost never increases, the mass total is preserved exactly
/// and masses equal to 1 are never touched.
pub fn round_half(input: &DlpInput) -> Result<HalfIntegral> {
    input.check_shape()?;
    let mut units: Vec<i64> = input.mass.iter().map(|&z| to_units(z)).collect();
    if units.iter().sum::<i64>() % UNIT != 0 {
        return Err(Error::InvalidSpec(format!(
            "mass total {} is not an integer",
            input.mass_sum()
        )));
    }
    let unit_cost: Vec<f64> = (0..input.len()).map(|j| input.unit_cost(j)).collect();
    let mut psi = potential_units(&units);
    let mut trace = vec![from_units(psi)];
    let mut iterations = 0;
    loop {
        let mut frac = (0..units.len()).filter(|&j| units[j] > HALF && units[j] < UNIT);
        let (Some(a), Some(b)) = (frac.next(), frac.next()) else {
            break;
        };
        let (lo, hi) = if unit_cost[a] <= unit_cost[b] { (a, b) } else { (b, a) };
        let delta = (units[lo] - HALF).min(UNIT - units[hi]);
        units[lo] -= delta;
        units[hi] += delta;
        iterations += 1;
        let next = potential_units(&units);
        if next >= psi {
            return Err(Error::InvariantBreach("potential did not decrease".into()));
        }
        psi = next;
        trace.push(from_units(psi));
    }
    // An integral total leaves either zero or at least two fractional reps.
    if units.iter().any(|&u| u > HALF && u < UNIT) {
        return Err(Error::InvariantBreach("single fractional mass left".into()));
    }
    Ok(HalfIntegral {
        mass: units.into_iter().map(from_units).collect(),
        iterations,
        potential: trace,
    })
}

/// Integral rounding result, indexed by rep position.
#[derive(Debug, Clone, PartialEq)]
pub struct DlpSolution {
    pub open: Vec<bool>,
    /// Each rep is served by itself or by its neighbor.
    pub assign: Vec<usize>,
}

impl DlpSolution {
    pub fn opened(&self) -> Vec<usize> {
        (0..self.open.len()).filter(|&j| self.open[j]).collect()
    }

    /// `Σ w_j d(j,S)^p`, where a closed rep pays its neighbor distance.
    pub fn cost(&self, input: &DlpInput) -> f64 {
        (0..self.open.len())
            .filter(|&j| !self.open[j])
            .map(|j| input.unit_cost(j))
            .sum()
    }
}

/// Opens every mass-1 rep, drops reps whose neighbor is open, and rounds the
/// remaining nearest-neighbor forest by opening alternate levels.
///
/// Each tree defaults to its smaller level class; trees then switch to the
/// cheaper class, largest saving first, while the center budget allows. Either
/// class leaves every rep next to an open rep, so the per-rep cost at most
/// doubles relative to the half-integral point.
pub fn round_forest(input: &DlpInput, half: &[f64]) -> Result<DlpSolution> {
    input.check_shape()?;
    let n = input.len();
    if half.len() != n || half.iter().any(|&z| z != 0.5 && z != 1.0) {
        return Err(Error::InvariantBreach("masses are not {1/2,1}-integral".into()));
    }
    let s = &input.neighbor;
    let mut open: Vec<bool> = half.iter().map(|&z| z == 1.0).collect();
    let in_forest: Vec<bool> = (0..n).map(|j| !open[j] && !open[s[j]]).collect();

    // Components of the functional graph j -> s(j) restricted to the forest.
    let mut comp = vec![usize::MAX; n];
    let mut roots = Vec::new();
    for start in 0..n {
        if !in_forest[start] || comp[start] != usize::MAX {
            continue;
        }
        // Walk forward until hitting a visited vertex; the cycle must be a
        // mutual pair.
        let mut path = vec![start];
        let mut seen_at = std::collections::HashMap::from([(start, 0usize)]);
        let mut cur = start;
        let cycle_root = loop {
            let next = s[cur];
            if comp[next] != usize::MAX {
                break None;
            }
            if let Some(&pos) = seen_at.get(&next) {
                let cycle = &path[pos..];
                if cycle.len() != 2 {
                    return Err(Error::CycleNotPair(input.reps[next]));
                }
                break Some(cycle.to_vec());
            }
            seen_at.insert(next, path.len());
            path.push(next);
            cur = next;
        };
        let id = match cycle_root {
            Some(cycle) => {
                let id = roots.len();
                // Remove the edge leaving the root: root = s(j) for the
                // lower-index member j of the pair.
                let j = cycle[0].min(cycle[1]);
                roots.push(s[j]);
                id
            }
            None => comp[s[*path.last().unwrap()]],
        };
        for &v in &path {
            comp[v] = id;
        }
    }

    // Depth of each forest vertex below its tree root.
    let mut depth = vec![usize::MAX; n];
    for &r in &roots {
        depth[r] = 0;
    }
    for j in 0..n {
        if !in_forest[j] {
            continue;
        }
        let mut chain = Vec::new();
        let mut cur = j;
        while depth[cur] == usize::MAX {
            chain.push(cur);
            cur = s[cur];
        }
        let mut d = depth[cur];
        for &v in chain.iter().rev() {
            d += 1;
            depth[v] = d;
        }
    }

    struct Tree {
        size: [usize; 2],
        cost: [f64; 2],
    }
    let mut trees: Vec<Tree> = roots
        .iter()
        .map(|_| Tree {
            size: [0, 0],
            cost: [0.0, 0.0],
        })
        .collect();
    for j in 0..n {
        if in_forest[j] {
            let t = &mut trees[comp[j]];
            let parity = depth[j] % 2;
            t.size[parity] += 1;
            // Opening the other class leaves j closed, paying its neighbor.
            t.cost[1 - parity] += input.unit_cost(j);
        }
    }

    let mut budget = input.k as i64 - open.iter().filter(|&&o| o).count() as i64;
    let mut choice: Vec<usize> = trees
        .iter()
        .map(|t| {
            if t.size[0] != t.size[1] {
                usize::from(t.size[1] < t.size[0])
            } else {
                usize::from(t.cost[1] < t.cost[0])
            }
        })
        .collect();
    for (t, &c) in trees.iter().zip(&choice) {
        budget -= t.size[c] as i64;
    }
    if budget < 0 {
        return Err(Error::InvariantBreach("forest needs more than k centers".into()));
    }
    let mut upgrades: Vec<(f64, usize)> = trees
        .iter()
        .enumerate()
        .filter(|(i, t)| t.cost[1 - choice[*i]] < t.cost[choice[*i]])
        .map(|(i, t)| (t.cost[choice[i]] - t.cost[1 - choice[i]], i))
        .collect();
    upgrades.sort_by(|a, b| b.0.total_cmp(&a.0).then(roots[a.1].cmp(&roots[b.1])));
    for (_, i) in upgrades {
        let c = choice[i];
        let extra = trees[i].size[1 - c] as i64 - trees[i].size[c] as i64;
        if extra <= budget {
            budget -= extra;
            choice[i] = 1 - c;
        }
    }
    for j in 0..n {
        if in_forest[j] && depth[j] % 2 == choice[comp[j]] {
            open[j] = true;
        }
    }
    let assign = (0..n).map(|j| if open[j] { j } else { s[j] }).collect();
    let sol = DlpSolution { open, assign };
    if let Some(j) = (0..n).find(|&j| !sol.open[j] && !sol.open[s[j]]) {
        return Err(Error::InvariantBreach(format!("rep {j} and its neighbor both closed")));
    }
    Ok(sol)
}

/// Padding, half-integral moves, and forest rounding in sequence.
pub fn round(input: &DlpInput) -> Result<(DlpInput, HalfIntegral, DlpSolution)> {
    let padded = pad(input)?;
    let half = round_half(&padded)?;
    let sol = round_forest(&padded, &half.mass)?;
    Ok((padded, half, sol))
}
