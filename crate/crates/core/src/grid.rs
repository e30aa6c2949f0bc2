//! Uniform time grid on `[0, T]`.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("invalid grid: T = {maturity}, n_steps = {n_steps} (need T > 0, n_steps >= 2)")]
    InvalidGrid { maturity: f64, n_steps: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    maturity: f64,
    n_steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(maturity: f64, n_steps: usize) -> Result<Self, GridError> {
        if !(maturity > 0.0 && maturity.is_finite()) || n_steps < 2 {
            return Err(GridError::InvalidGrid { maturity, n_steps });
        }
        Ok(Self { maturity, n_steps, dt: maturity / n_steps as f64 })
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `t_i = i·dt`, with the last node pinned to `T` exactly.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.maturity
        } else {
            i as f64 * self.dt
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n_steps {
            0.5 * self.dt
        } else {
            self.dt
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.weight(i)).collect()
    }

    /// A grid with `factor` times as many steps over the same horizon.
    pub fn refined(&self, factor: usize) -> Result<Self, GridError> {
        Self::new(self.maturity, self.n_steps * factor)
    }
}

pub fn make_grid(maturity: f64, n_steps: usize) -> Result<TimeGrid, GridError> {
    TimeGrid::new(maturity, n_steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_grid() {
        let g = make_grid(1.0, 4).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn two_step_grid() {
        assert_eq!(make_grid(2.0, 2).unwrap().dt(), 1.0);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(make_grid(1.0, 1).is_err());
        assert!(make_grid(0.0, 10).is_err());
        assert!(make_grid(f64::NAN, 10).is_err());
    }

    #[test]
    fn strictly_increasing_and_pinned() {
        let g = make_grid(0.7, 333).unwrap();
        let t = g.times();
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 0.7);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }
}
