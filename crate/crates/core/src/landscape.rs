//! Energy-dissipation-rate landscape of the regularized OND loop.

use crate::controllers::{lyapunov_rate, ErrorState};
use crate::error::{Error, Result};

/// `|dV/dt|` sampled on the tensor grid `e1_axis x e2_axis`.
///
/// Row-major: `values[i * e2_axis.len() + j]` belongs to
/// `(e1_axis[i], e2_axis[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateGrid {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub values: Vec<f64>,
}

impl RateGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.e2.len() + j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Dissipation magnitude `|e2|^3 / (|e1| + mu)` over the grid. The stiffness
/// `k` does not enter the rate; it is validated so callers can pass the
/// loop's gains unchanged.
pub fn energy_rate_grid(k: f64, mu: f64, e1_axis: &[f64], e2_axis: &[f64]) -> Result<RateGrid> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::config(format!("k must be > 0, got {k}")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::config(format!("mu must be > 0, got {mu}")));
    }
    if e1_axis.is_empty() || e2_axis.is_empty() {
        return Err(Error::config("grid axes must be non-empty"));
    }
    if e1_axis.iter().chain(e2_axis).any(|v| !v.is_finite()) {
        return Err(Error::config("grid axes must be finite"));
    }
    let values = e1_axis
        .iter()
        .flat_map(|&e1| {
            e2_axis
                .iter()
                .map(move |&e2| lyapunov_rate(ErrorState::new(e1, e2), mu).abs())
        })
        .collect();
    Ok(RateGrid {
        e1: e1_axis.to_vec(),
        e2: e2_axis.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::linspace;

    #[test]
    fn zero_on_e2_axis_and_cubic_in_e2() {
        let e1 = linspace(-1.0, 1.0, 21);
        let e2 = [0.0, 0.5, 1.0, -2.0];
        let g = energy_rate_grid(100.0, 1e-4, &e1, &e2).unwrap();
        for i in 0..e1.len() {
            assert_eq!(g.at(i, 0), 0.0);
            let base = g.at(i, 1);
            assert!((g.at(i, 2) / base - 8.0).abs() < 1e-12);
            assert!((g.at(i, 3) / base - 64.0).abs() < 1e-12);
        }
    }

    #[test]
    fn peak_on_e1_zero_line() {
        let e1 = linspace(-1.0, 1.0, 11);
        let g = energy_rate_grid(100.0, 1e-4, &e1, &[1.0]).unwrap();
        assert_eq!(g.at(5, 0), g.max());
        assert!((g.max() - 1e4).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(energy_rate_grid(0.0, 1e-4, &[0.0], &[0.0]).is_err());
        assert!(energy_rate_grid(1.0, 0.0, &[0.0], &[0.0]).is_err());
        assert!(energy_rate_grid(1.0, 1e-4, &[], &[0.0]).is_err());
    }
}
