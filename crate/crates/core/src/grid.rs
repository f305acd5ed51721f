//! Radial grids and sampled radial fields.

use crate::{Error, Result};
use std::sync::Arc;

/// Nonuniform radial nodes `r_0 = 0 < r_1 < ... < r_N` (the origin node is
/// optional for grids that must exclude a pole).
#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Arc<Vec<f64>>,
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 16 {
            return Err(Error::invalid("radial grid needs at least 16 nodes"));
        }
        if nodes[0] < 0.0 {
            return Err(Error::invalid("radial nodes must be nonnegative"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("radial nodes must be strictly increasing"));
        }
        Ok(RadialGrid {
            nodes: Arc::new(nodes),
        })
    }

    /// Uniform grid on `[0, r_max]` with `n + 1` nodes.
    pub fn uniform(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > 0.0) || n < 16 {
            return Err(Error::invalid("uniform grid needs r_max > 0 and n >= 16"));
        }
        let h = r_max / n as f64;
        Self::from_nodes((0..=n).map(|i| i as f64 * h).collect())
    }

    /// Uniform grid on `[r_min, r_max]` excluding the origin.
    pub fn uniform_from(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > r_min) || n < 16 {
            return Err(Error::invalid("bad uniform_from grid bounds"));
        }
        let h = (r_max - r_min) / n as f64;
        Self::from_nodes((0..=n).map(|i| r_min + i as f64 * h).collect())
    }

    /// Grid with spacing growing geometrically away from the origin:
    /// `h_{i+1} = ratio * h_i`, starting from `h0`, truncated at `r_max`.
    pub fn geometric(h0: f64, ratio: f64, r_max: f64) -> Result<Self> {
        if !(h0 > 0.0 && ratio >= 1.0 && r_max > h0) {
            return Err(Error::invalid("bad geometric grid parameters"));
        }
        let mut nodes = vec![0.0];
        let mut h = h0;
        let mut r = 0.0;
        while r < r_max {
            r += h;
            nodes.push(r.min(r_max));
            h *= ratio;
            if nodes.len() > 4_000_000 {
                return Err(Error::invalid("geometric grid too fine"));
            }
        }
        Self::from_nodes(nodes)
    }

    /// New grid with the given radii inserted as exact nodes (used so that
    /// weight-transition radii are never straddled by the discrete sup).
    pub fn with_nodes_at(&self, radii: &[f64]) -> Result<Self> {
        let mut nodes = self.nodes.as_ref().clone();
        for &r in radii {
            if r < 0.0 {
                continue;
            }
            match nodes.binary_search_by(|v| v.partial_cmp(&r).expect("NaN radius")) {
                Ok(_) => {}
                Err(pos) => nodes.insert(pos, r),
            }
        }
        Self::from_nodes(nodes)
    }

    /// Midpoint-refined copy (doubles the resolution).
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(self.nodes.len() * 2);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(*self.nodes.last().expect("nonempty grid"));
        RadialGrid {
            nodes: Arc::new(nodes),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().expect("nonempty grid")
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn same_nodes(&self, other: &RadialGrid) -> bool {
        Arc::ptr_eq(&self.nodes, &other.nodes) || self.nodes == other.nodes
    }
}

/// Radial samples of a function of `|x|` at a fixed time.
#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    /// Optional radial derivative samples.
    pub derivative: Option<Vec<f64>>,
}

impl FieldSnapshot {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid("snapshot length does not match grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("snapshot contains non-finite values"));
        }
        Ok(FieldSnapshot {
            grid,
            values,
            derivative: None,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &RadialGrid, f: F) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid.clone(), values)
    }

    pub fn with_derivative(mut self, derivative: Vec<f64>) -> Result<Self> {
        if derivative.len() != self.grid.len() {
            return Err(Error::invalid("derivative length does not match grid"));
        }
        self.derivative = Some(derivative);
        Ok(self)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation (clamped at the ends).
    pub fn eval(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let i = match nodes.binary_search_by(|v| v.partial_cmp(&r).expect("NaN radius")) {
            Ok(i) => return self.values[i],
            Err(0) => return self.values[0],
            Err(i) if i >= n => return self.values[n - 1],
            Err(i) => i - 1,
        };
        let t = (r - nodes[i]) / (nodes[i + 1] - nodes[i]);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }
}

/// Samples of a space-time field on the tensor lattice `xs × ts`, row-major
/// in time (row `j` holds all radii at `ts[j]`). Optional gradient samples
/// share the layout.
#[derive(Debug, Clone)]
pub struct SpaceTimeSamples {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
    pub gradient: Option<Vec<f64>>,
}

impl SpaceTimeSamples {
    pub fn from_fn<F: Fn(f64, f64) -> f64>(xs: Vec<f64>, ts: Vec<f64>, f: F) -> Result<Self> {
        if xs.is_empty() || ts.is_empty() {
            return Err(Error::invalid("empty sample lattice"));
        }
        let mut values = Vec::with_capacity(xs.len() * ts.len());
        for &t in &ts {
            for &x in &xs {
                values.push(f(x, t));
            }
        }
        Ok(SpaceTimeSamples {
            xs,
            ts,
            values,
            gradient: None,
        })
    }

    pub fn with_gradient<F: Fn(f64, f64) -> f64>(mut self, g: F) -> Self {
        let mut grad = Vec::with_capacity(self.values.len());
        for &t in &self.ts {
            for &x in &self.xs {
                grad.push(g(x, t));
            }
        }
        self.gradient = Some(grad);
        self
    }

    pub fn value(&self, ix: usize, it: usize) -> f64 {
        self.values[it * self.xs.len() + ix]
    }

    pub fn grad(&self, ix: usize, it: usize) -> Option<f64> {
        self.gradient.as_ref().map(|g| g[it * self.xs.len() + ix])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_increasing_nodes() {
        let mut nodes: Vec<f64> = (0..20).map(|i| i as f64).collect();
        nodes[7] = nodes[8];
        assert!(RadialGrid::from_nodes(nodes).is_err());
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(RadialGrid::from_nodes(vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn with_nodes_at_inserts_exactly() {
        let g = RadialGrid::uniform(1.0, 16).unwrap();
        let g2 = g.with_nodes_at(&[0.33, 0.5]).unwrap();
        assert!(g2.nodes().contains(&0.33));
        // already a node: no duplicate
        assert_eq!(g2.len(), g.len() + 1);
    }

    #[test]
    fn snapshot_interpolation_is_linear() {
        let g = RadialGrid::uniform(1.0, 16).unwrap();
        let s = FieldSnapshot::from_fn(&g, |r| 2.0 * r).unwrap();
        assert!((s.eval(0.4711) - 0.9422).abs() < 1e-14);
    }
}
