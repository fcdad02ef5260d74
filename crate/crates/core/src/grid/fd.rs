//! Finite-difference `δ_ν` and `Δ_ν` on grids (three-point stencils that
//! handle non-uniform spacing). Used as cross-check oracles and for the
//! short-time part of subordination integrals.

use super::{Axis, AxisMatrix, GridFunction};
use crate::error::{domain, Error, Result};
use crate::heat::NuVector;

/// Three-point weights `[(index, weight)]` for `f'(x_i)`.
fn first_derivative_weights(x: &[f64], i: usize) -> [(usize, f64); 3] {
    let n = x.len();
    if i == 0 {
        let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
        return [
            (0, -(2.0 * h1 + h2) / (h1 * (h1 + h2))),
            (1, (h1 + h2) / (h1 * h2)),
            (2, -h1 / (h2 * (h1 + h2))),
        ];
    }
    if i == n - 1 {
        let (h1, h2) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
        return [
            (n - 3, h2 / (h1 * (h1 + h2))),
            (n - 2, -(h1 + h2) / (h1 * h2)),
            (n - 1, (2.0 * h2 + h1) / (h2 * (h1 + h2))),
        ];
    }
    let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
    [
        (i - 1, -h2 / (h1 * (h1 + h2))),
        (i, (h2 - h1) / (h1 * h2)),
        (i + 1, h1 / (h2 * (h1 + h2))),
    ]
}

fn first_derivative(x: &[f64], f: &[f64], i: usize) -> f64 {
    first_derivative_weights(x, i)
        .iter()
        .map(|&(k, w)| w * f[k])
        .sum()
}

/// Matrix of the finite-difference `δ_ν` on one axis.
pub(crate) fn delta_fd_matrix(axis: &Axis, nu: f64) -> Result<AxisMatrix> {
    let x = &axis.nodes;
    let n = x.len();
    if n < 3 {
        return Err(Error::GridMismatch(format!(
            "axis has {n} nodes; finite differences need at least 3"
        )));
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for (k, w) in first_derivative_weights(x, i) {
            data[i * n + k] += w;
        }
        data[i * n + i] -= (nu + 0.5) / x[i];
    }
    Ok(AxisMatrix { n, data })
}

fn second_derivative(x: &[f64], f: &[f64], i: usize) -> f64 {
    let c = i.clamp(1, x.len() - 2);
    let (h1, h2) = (x[c] - x[c - 1], x[c + 1] - x[c]);
    2.0 * (f[c - 1] / (h1 * (h1 + h2)) - f[c] / (h1 * h2) + f[c + 1] / (h2 * (h1 + h2)))
}

/// Applies a 1-D stencil along `axis` to every line of `f`.
fn along_axis<F>(f: &GridFunction, axis: usize, stencil: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &[f64], usize) -> f64,
{
    let grid = &f.grid;
    if axis >= grid.dim() {
        return Err(domain(format!("axis {axis} out of range")));
    }
    let shape = grid.shape();
    let len = shape[axis];
    if len < 3 {
        return Err(Error::GridMismatch(format!(
            "axis {axis} has {len} nodes; finite differences need at least 3"
        )));
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let x = &grid.axes[axis].nodes;
    let mut out = vec![0.0; f.values.len()];
    let mut line = vec![0.0; len];
    for o in 0..f.values.len() / (len * stride) {
        for inner in 0..stride {
            let idx = |k: usize| o * len * stride + k * stride + inner;
            for (k, v) in line.iter_mut().enumerate() {
                *v = f.values[idx(k)];
            }
            for k in 0..len {
                out[idx(k)] = stencil(x, &line, k);
            }
        }
    }
    Ok(out)
}

/// `δ_{ν_j} f = ∂_j f - (ν_j + 1/2) f / x_j` by central differences.
pub fn apply_delta_fd(nu: &NuVector, axis: usize, f: &GridFunction) -> Result<GridFunction> {
    if nu.dim() != f.grid.dim() {
        return Err(Error::GridMismatch(
            "order vector and grid dimensions differ".into(),
        ));
    }
    let a = nu.as_slice()[axis] + 0.5;
    let x = &f.grid.axes[axis].nodes;
    let d = along_axis(f, axis, first_derivative)?;
    let shape = f.grid.shape();
    let stride: usize = shape[axis + 1..].iter().product();
    let values = d
        .iter()
        .enumerate()
        .map(|(i, dv)| dv - a * f.values[i] / x[(i / stride) % shape[axis]])
        .collect();
    GridFunction::new(f.grid.clone(), values)
}

/// `Δ_ν f = Σ_j [-∂_j² f + (ν_j² - 1/4) f / x_j²]` by finite differences.
pub fn laplacian_fd(nu: &NuVector, f: &GridFunction) -> Result<GridFunction> {
    if nu.dim() != f.grid.dim() {
        return Err(Error::GridMismatch(
            "order vector and grid dimensions differ".into(),
        ));
    }
    let shape = f.grid.shape();
    let mut values = vec![0.0; f.values.len()];
    for axis in 0..f.grid.dim() {
        let v = nu.as_slice()[axis];
        let x = &f.grid.axes[axis].nodes;
        let stride: usize = shape[axis + 1..].iter().product();
        let d2 = along_axis(f, axis, second_derivative)?;
        for (i, out) in values.iter_mut().enumerate() {
            let xi = x[(i / stride) % shape[axis]];
            *out += -d2[i] + (v * v - 0.25) * f.values[i] / (xi * xi);
        }
    }
    GridFunction::new(f.grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Spacing};

    #[test]
    fn annihilates_power() {
        let nu = NuVector::new(vec![0.7, 1.2]).unwrap();
        let g = Grid::cube(Spacing::Logarithmic, 0.5, 4.0, 200, 2).unwrap();
        let f = GridFunction::from_fn(g, |x| x[1].powf(1.7));
        let d = apply_delta_fd(&nu, 1, &f).unwrap();
        let idx = f.grid.flat_index(&[50, 100]);
        assert!(d.values[idx].abs() < 1e-4);
    }

    #[test]
    fn constant_input() {
        let nu = NuVector::scalar(0.3).unwrap();
        let g = Grid::cube(Spacing::Uniform, 1.0, 2.0, 11, 1).unwrap();
        let f = GridFunction::from_fn(g, |_| 1.0);
        let d = apply_delta_fd(&nu, 0, &f).unwrap();
        for (i, v) in d.values.iter().enumerate() {
            let x = f.grid.axes[0].nodes[i];
            assert!((v + 0.8 / x).abs() < 1e-12);
        }
        let coarse = GridFunction::from_fn(
            Grid::cube(Spacing::Uniform, 1.0, 2.0, 2, 1).unwrap(),
            |_| 1.0,
        );
        assert!(apply_delta_fd(&nu, 0, &coarse).is_err());
    }

    #[test]
    fn laplacian_of_eigenfunction() {
        use crate::grid::{eigenfunction, EigenfunctionSpec};
        let nu = NuVector::scalar(1.5).unwrap();
        let spec = EigenfunctionSpec::new(vec![0.9]).unwrap();
        let g = Grid::cube(Spacing::Uniform, 0.5, 10.0, 2001, 1).unwrap();
        let f = GridFunction::from_fn(g, |x| eigenfunction(&nu, &spec, x).unwrap());
        let l = laplacian_fd(&nu, &f).unwrap();
        for i in (10..1990).step_by(97) {
            assert!((l.values[i] - 0.81 * f.values[i]).abs() < 1e-5);
        }
    }
}

#[cfg(test)]
mod matrix_tests {
    use super::*;
    use crate::grid::{apply_axis_operators, Grid};

    #[test]
    fn matrix_agrees_with_stencil() {
        let nu = NuVector::new(vec![0.2, 0.9]).unwrap();
        let g = Grid::new(vec![
            Axis::logarithmic(0.3, 5.0, 17).unwrap(),
            Axis::uniform(0.5, 2.0, 9).unwrap(),
        ])
        .unwrap();
        let f = GridFunction::from_fn(g.clone(), |x| (x[0] * x[1]).sin() + x[0]);
        let m = delta_fd_matrix(&g.axes[1], 0.9).unwrap();
        let via_matrix = apply_axis_operators(&f, &[None, Some(&m)]).unwrap();
        let direct = apply_delta_fd(&nu, 1, &f).unwrap();
        for (a, b) in via_matrix.values.iter().zip(&direct.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
