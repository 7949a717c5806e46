//! Exact discrete optimal transport with Euclidean ground cost, by the
//! transportation simplex (MODI pricing on a spanning-tree basis).

use crate::error::{Error, Result};
use crate::exec::Exec;

/// A weighted point.
pub type Atom = ([f64; 3], f64);

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

struct Tree {
    m: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    /// adjacency over nodes `0..m` (rows) and `m..m+n` (columns): (neighbour, cell index)
    adj: Vec<Vec<(usize, usize)>>,
}

impl Tree {
    fn add(&mut self, i: usize, j: usize, f: f64) {
        let id = self.cells.len();
        self.cells.push((i, j));
        self.flow.push(f);
        self.adj[i].push((self.m + j, id));
        self.adj[self.m + j].push((i, id));
    }

    fn remove(&mut self, id: usize) {
        let (i, j) = self.cells[id];
        self.adj[i].retain(|e| e.1 != id);
        self.adj[self.m + j].retain(|e| e.1 != id);
        let last = self.cells.len() - 1;
        if id != last {
            // move the last cell into the freed slot
            let (li, lj) = self.cells[last];
            for e in self.adj[li].iter_mut() {
                if e.1 == last {
                    e.1 = id;
                }
            }
            for e in self.adj[self.m + lj].iter_mut() {
                if e.1 == last {
                    e.1 = id;
                }
            }
            self.cells[id] = self.cells[last];
            self.flow[id] = self.flow[last];
        }
        self.cells.pop();
        self.flow.pop();
    }

    /// Node potentials with `u(root) = 0` and `u_i + v_j = c_ij` on tree cells.
    fn potentials(&self, cost: &dyn Fn(usize, usize) -> f64) -> Vec<f64> {
        let nodes = self.adj.len();
        let mut pot = vec![f64::NAN; nodes];
        let mut stack = vec![0usize];
        pot[0] = 0.0;
        while let Some(a) = stack.pop() {
            for &(b, id) in &self.adj[a] {
                if pot[b].is_nan() {
                    let (i, j) = self.cells[id];
                    pot[b] = cost(i, j) - pot[a];
                    stack.push(b);
                }
            }
        }
        pot
    }

    /// Cell indices along the tree path from node `from` to node `to`.
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let nodes = self.adj.len();
        let mut parent = vec![usize::MAX; nodes];
        let mut via = vec![usize::MAX; nodes];
        parent[from] = from;
        let mut stack = vec![from];
        while let Some(a) = stack.pop() {
            if a == to {
                break;
            }
            for &(b, id) in &self.adj[a] {
                if parent[b] == usize::MAX {
                    parent[b] = a;
                    via[b] = id;
                    stack.push(b);
                }
            }
        }
        let mut out = Vec::new();
        let mut x = to;
        while x != from {
            out.push(via[x]);
            x = parent[x];
        }
        out.reverse();
        out
    }
}

fn find(p: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while p[r] != r {
        r = p[r];
    }
    let mut y = x;
    while p[y] != r {
        let next = p[y];
        p[y] = r;
        y = next;
    }
    r
}

/// `min Σ π_ij |x_i − y_j|` over couplings of the two (equal-mass) atom lists.
pub fn transport_cost(sources: &[Atom], sinks: &[Atom], exec: Exec) -> Result<f64> {
    let (m, n) = (sources.len(), sinks.len());
    if m == 0 || n == 0 {
        return Ok(0.0);
    }
    let total_a: f64 = sources.iter().map(|s| s.1).sum();
    let total_b: f64 = sinks.iter().map(|s| s.1).sum();
    if (total_a - total_b).abs() > 1e-9 * total_a.max(total_b) {
        return Err(Error::usage(format!("transport marginals differ: {total_a} vs {total_b}")));
    }
    let a: Vec<f64> = sources.iter().map(|s| s.1).collect();
    let b: Vec<f64> = sinks.iter().map(|s| s.1 * total_a / total_b).collect();
    let cost = |i: usize, j: usize| dist(sources[i].0, sinks[j].0);

    // least-cost greedy start
    let mut order: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    order.sort_by(|x, y| cost(x.0, x.1).total_cmp(&cost(y.0, y.1)).then(x.cmp(y)));
    let mut ra = a.clone();
    let mut rb = b.clone();
    let mut tree = Tree { m, cells: Vec::new(), flow: Vec::new(), adj: vec![Vec::new(); m + n] };
    let mut uf: Vec<usize> = (0..m + n).collect();
    let eps = 1e-15 * total_a;
    for &(i, j) in &order {
        if ra[i] <= eps || rb[j] <= eps {
            continue;
        }
        let f = ra[i].min(rb[j]);
        ra[i] -= f;
        rb[j] -= f;
        let (x, y) = (find(&mut uf, i), find(&mut uf, m + j));
        if x != y {
            uf[x] = y;
            tree.add(i, j, f);
        } else {
            // would close a cycle; only possible for rounding-level leftovers
            continue;
        }
    }
    // connect the basis into a spanning tree with zero-flow cells
    for &(i, j) in &order {
        if tree.cells.len() == m + n - 1 {
            break;
        }
        let (x, y) = (find(&mut uf, i), find(&mut uf, m + j));
        if x != y {
            uf[x] = y;
            tree.add(i, j, 0.0);
        }
    }

    let max_iter = 50 * (m + n) + 1000;
    let cmax = order.last().map(|&(i, j)| cost(i, j)).unwrap_or(0.0);
    let tol = 1e-12 * cmax.max(1e-300);
    for _ in 0..max_iter {
        let pot = tree.potentials(&cost);
        let best = exec.map(m, |i| {
            let mut bj = usize::MAX;
            let mut bv = -tol;
            for j in 0..n {
                let rc = cost(i, j) - pot[i] - pot[m + j];
                if rc < bv {
                    bv = rc;
                    bj = j;
                }
            }
            (bv, bj)
        });
        let Some((i, (_, j))) = best
            .iter()
            .enumerate()
            .filter(|(_, (_, j))| *j != usize::MAX)
            .min_by(|x, y| x.1 .0.total_cmp(&y.1 .0).then(x.0.cmp(&y.0)))
        else {
            let mut total = 0.0;
            for (id, &(i, j)) in tree.cells.iter().enumerate() {
                total += tree.flow[id] * cost(i, j);
            }
            return Ok(total);
        };
        let j = *j;
        // cycle: entering cell (+), then the tree path from column j back to row i
        let path = tree.path(m + j, i);
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (k, &id) in path.iter().enumerate() {
            if k % 2 == 0 && tree.flow[id] < theta {
                theta = tree.flow[id];
                leave = id;
            }
        }
        for (k, &id) in path.iter().enumerate() {
            if k % 2 == 0 {
                tree.flow[id] -= theta;
            } else {
                tree.flow[id] += theta;
            }
        }
        tree.remove(leave);
        tree.add(i, j, theta);
    }
    Err(Error::NonConvergence { iterations: max_iter, residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_assignment() {
        let s = [([0.0, 0.0, 0.0], 0.5), ([1.0, 0.0, 0.0], 0.5)];
        let t = [([0.0, 1.0, 0.0], 0.5), ([1.0, 1.0, 0.0], 0.5)];
        let c = transport_cost(&s, &t, Exec::Sequential).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        assert_eq!(transport_cost(&s, &s, Exec::Sequential).unwrap(), 0.0);
    }

    #[test]
    fn matches_brute_force_on_small_problems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let pts = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Atom> {
                (0..4).map(|_| ([rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()], 0.25)).collect()
            };
            let s = pts(&mut rng);
            let t = pts(&mut rng);
            // uniform weights: optimum is an assignment
            let mut best = f64::INFINITY;
            let mut perm = [0usize, 1, 2, 3];
            permute(&mut perm, 0, &mut |p| {
                let c: f64 = (0..4).map(|k| 0.25 * dist(s[k].0, t[p[k]].0)).sum();
                best = best.min(c);
            });
            let c = transport_cost(&s, &t, Exec::Sequential).unwrap();
            assert!((c - best).abs() < 1e-12, "{c} vs {best}");
        }
    }

    fn permute(p: &mut [usize; 4], k: usize, f: &mut dyn FnMut(&[usize; 4])) {
        if k == 4 {
            f(p);
            return;
        }
        for i in k..4 {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }
}
