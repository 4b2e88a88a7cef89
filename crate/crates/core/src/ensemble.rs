//! Path ensembles: many trajectories on one grid, with optional node thinning
//! so that pooled statistics over large runs stay in memory.

use crate::error::Result;
use crate::grid::TimeGrid;
use crate::parallel::par_map_indexed;
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct PathEnsemble {
    grid: TimeGrid,
    /// Node indices retained per path (subset of 0..=n).
    retained: Vec<usize>,
    /// Row-major: values[path * retained.len() + node_slot].
    values: Vec<f64>,
    paths: usize,
}

impl PathEnsemble {
    /// Simulate `paths` trajectories with one stream per path, retaining every
    /// `keep_every`-th node (1 keeps all). The simulator gets the path's own
    /// stream and must return values at all n+1 grid nodes.
    pub fn simulate(
        grid: TimeGrid,
        paths: usize,
        keep_every: usize,
        seed: u64,
        stream_offset: u64,
        simulate: impl Fn(&mut RngStream) -> Result<Vec<f64>> + Sync,
    ) -> Result<Self> {
        let keep = keep_every.max(1);
        let retained: Vec<usize> = (0..=grid.steps()).step_by(keep).collect();
        let rows: Vec<Result<Vec<f64>>> = par_map_indexed(paths, |i| {
            let mut rng = RngStream::new(seed, stream_offset + i as u64);
            let full = simulate(&mut rng)?;
            debug_assert_eq!(full.len(), grid.steps() + 1);
            Ok(retained.iter().map(|&k| full[k]).collect())
        });
        let mut values = Vec::with_capacity(paths * retained.len());
        for row in rows {
            values.extend(row?);
        }
        Ok(PathEnsemble { grid, retained, values, paths })
    }

    pub fn from_rows(grid: TimeGrid, retained: Vec<usize>, rows: Vec<Vec<f64>>) -> Self {
        let paths = rows.len();
        let mut values = Vec::with_capacity(paths * retained.len());
        for r in rows {
            assert_eq!(r.len(), retained.len());
            values.extend(r);
        }
        PathEnsemble { grid, retained, values, paths }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn retained_nodes(&self) -> &[usize] {
        &self.retained
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.retained.len();
        &self.values[i * w..(i + 1) * w]
    }

    /// All retained values of all paths, in deterministic order.
    pub fn pooled_values(&self) -> &[f64] {
        &self.values
    }
}
