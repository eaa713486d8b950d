//! Random graph colouring problems: one constant per vertex, one
//! disequality per edge.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoringInstance {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("{m} edges requested but a graph on {n} vertices has at most {max}")]
    TooManyEdges { n: usize, m: usize, max: usize },
}

impl ColoringInstance {
    pub fn random(n: usize, m: usize, seed: u64) -> Result<ColoringInstance, GenError> {
        let max = n * n.saturating_sub(1) / 2;
        if m > max {
            return Err(GenError::TooManyEdges { n, m, max });
        }
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, max, m).into_vec();
        idx.sort_unstable();
        Ok(ColoringInstance { n, edges: idx.into_iter().map(|i| pairs[i]).collect(), seed })
    }

    pub fn to_script(&self) -> String {
        let mut s = format!("; colouring n={} m={} seed={}\n(declare-sort S 0)\n", self.n, self.edges.len(), self.seed);
        for v in 0..self.n {
            s.push_str(&format!("(declare-const v{v} S)\n"));
        }
        for &(i, j) in &self.edges {
            s.push_str(&format!("(assert (not (= v{i} v{j})))\n"));
        }
        s.push_str("(check-sat)\n");
        s
    }

    /// Smallest number of colours, by exhaustive backtracking.
    pub fn chromatic_number(&self) -> usize {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        fn colour(v: usize, k: usize, adj: &[Vec<usize>], col: &mut Vec<usize>) -> bool {
            if v == adj.len() {
                return true;
            }
            // Vertex v may open at most one new colour.
            let used = col[..v].iter().copied().max().map_or(0, |m| m + 1);
            for c in 0..k.min(used + 1) {
                if adj[v].iter().all(|&u| u >= v || col[u] != c) {
                    col[v] = c;
                    if colour(v + 1, k, adj, col) {
                        return true;
                    }
                }
            }
            false
        }
        if self.n == 0 {
            return 0;
        }
        let mut col = vec![0; self.n];
        (1..=self.n).find(|&k| colour(0, k, &adj, &mut col)).unwrap()
    }
}

pub fn gen_coloring(n: usize, m: usize, seed: u64) -> Result<String, GenError> {
    ColoringInstance::random(n, m, seed).map(|g| g.to_script())
}
