//! Oscillator eigenfunctions and sampled density-matrix grids.
//!
//! The minimizing states live in the eigenbasis of a symmetric harmonic
//! oscillator with scale `k`. This module evaluates the orthonormal mode
//! functions through the stable three-term recurrence, samples the resulting
//! density matrix on coordinate grids for one and two degrees of freedom, and
//! recovers the spread widths and effective state number by quadrature as an
//! independent check of the analytic shell moments.

use crate::error::{Error, Result};
use crate::kahan_sum;
use crate::spectrum::ModeSpectrum;

/// Default grid resolution: 1201 points over `[-12/k, 12/k]` keeps modes up
/// to index ~40 orthonormal to better than 1e-8 at modest memory.
pub const DEFAULT_GRID_POINTS: usize = 1201;
/// Default half-span of the grid in units of `1/k`.
pub const DEFAULT_GRID_HALF_SPAN: f64 = 12.0;

/// Orthonormal oscillator eigenfunctions at scale `k`, tabulated up to mode
/// index `n_max`.
#[derive(Debug, Clone, Copy)]
pub struct OscillatorBasis {
    k: f64,
    n_max: usize,
}

impl OscillatorBasis {
    pub fn new(k: f64, n_max: usize) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Domain(format!(
                "oscillator scale k must be positive and finite, got {k}"
            )));
        }
        Ok(Self { k, n_max })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Mode function `psi_n(x)`.
    ///
    /// Ground state `psi_0 = sqrt(k) pi^{-1/4} exp(-(kx)^2 / 2)`, then
    /// `psi_n = sqrt(2/n) (kx) psi_{n-1} - sqrt((n-1)/n) psi_{n-2}`.
    pub fn mode_function(&self, n: usize, x: f64) -> Result<f64> {
        if n > self.n_max {
            return Err(Error::ModeOutOfRange {
                index: n,
                max: self.n_max,
            });
        }
        Ok(self.eval_upto(n, x)[n])
    }

    /// All mode values `psi_0(x) ..= psi_{n_max}(x)` in one recurrence pass.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        self.eval_upto(self.n_max, x)
    }

    fn eval_upto(&self, n: usize, x: f64) -> Vec<f64> {
        let z = self.k * x;
        let mut values = Vec::with_capacity(n + 1);
        let psi0 = self.k.sqrt() * std::f64::consts::PI.powf(-0.25) * (-0.5 * z * z).exp();
        values.push(psi0);
        if n >= 1 {
            values.push(std::f64::consts::SQRT_2 * z * psi0);
        }
        for i in 2..=n {
            let fi = i as f64;
            let next = (2.0 / fi).sqrt() * z * values[i - 1]
                - ((fi - 1.0) / fi).sqrt() * values[i - 2];
            values.push(next);
        }
        values
    }
}

/// Uniform coordinate grid on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    min: f64,
    max: f64,
    points: usize,
}

impl UniformGrid {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if points < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::Domain(format!(
                "invalid grid: [{min}, {max}] with {points} points"
            )));
        }
        Ok(Self { min, max, points })
    }

    /// The default grid for an oscillator of scale `k`.
    pub fn default_for_scale(k: f64) -> Self {
        Self {
            min: -DEFAULT_GRID_HALF_SPAN / k,
            max: DEFAULT_GRID_HALF_SPAN / k,
            points: DEFAULT_GRID_POINTS,
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.min + self.step() * i as f64
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.coord(i)).collect()
    }

    /// Trapezoid quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.points];
        w[0] = 0.5 * h;
        w[self.points - 1] = 0.5 * h;
        w
    }
}

/// Density matrix sampled on a coordinate grid.
///
/// For `s = 1` the storage is the matrix `rho(x_i, x_j)`. For `s = 2` it is a
/// flattened four-index array in the order `(x1, x2, x1', x2')`: the product
/// index `I = i1 * n2 + i2` selects the unprimed pair, `J` the primed pair.
#[derive(Debug, Clone)]
pub struct DensityMatrixGrid {
    s: usize,
    axes: Vec<UniformGrid>,
    values: Vec<f64>,
    k: f64,
    shells: u32,
}

impl DensityMatrixGrid {
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn axes(&self) -> &[UniformGrid] {
        &self.axes
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Number of occupied shells of the state sampled here.
    pub fn shells(&self) -> u32 {
        self.shells
    }

    /// Number of product-grid points per argument.
    pub fn product_points(&self) -> usize {
        self.axes.iter().map(|a| a.points()).product()
    }

    /// `rho` at product indices `(i, j)`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.product_points() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest asymmetry `|rho(X, X') - rho(X', X)|` over the grid.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.product_points();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.value(i, j) - self.value(j, i)).abs());
            }
        }
        worst
    }

    /// For `s = 2`: largest change of the kernel under the simultaneous swap
    /// `x1 <-> x2`, `x1' <-> x2'`. Requires both axes to be identical.
    pub fn swap_symmetry_defect(&self) -> Result<f64> {
        if self.s != 2 {
            return Err(Error::Domain(
                "swap symmetry is defined for two degrees of freedom".into(),
            ));
        }
        if self.axes[0] != self.axes[1] {
            return Err(Error::Domain(
                "swap symmetry check requires identical axes".into(),
            ));
        }
        let n = self.axes[0].points();
        let idx = |a: usize, b: usize| a * n + b;
        let mut worst = 0.0f64;
        for i1 in 0..n {
            for i2 in 0..n {
                for j1 in 0..n {
                    for j2 in 0..n {
                        let direct = self.value(idx(i1, i2), idx(j1, j2));
                        let swapped = self.value(idx(i2, i1), idx(j2, j1));
                        worst = worst.max((direct - swapped).abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Write the sampled kernel as CSV. Columns are the unprimed and primed
    /// coordinates followed by the value.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        use crate::numfmt::fmt_sig;
        match self.s {
            1 => writeln!(out, "x,x_prime,rho")?,
            _ => writeln!(out, "x1,x2,x1_prime,x2_prime,rho")?,
        }
        let n = self.product_points();
        for i in 0..n {
            for j in 0..n {
                let mut fields = Vec::with_capacity(2 * self.s + 1);
                fields.extend(self.unravel(i));
                fields.extend(self.unravel(j));
                fields.push(self.value(i, j));
                let line: Vec<String> = fields.into_iter().map(|v| fmt_sig(v, 12)).collect();
                writeln!(out, "{}", line.join(","))?;
            }
        }
        Ok(())
    }

    fn unravel(&self, product_index: usize) -> Vec<f64> {
        match self.s {
            1 => vec![self.axes[0].coord(product_index)],
            _ => {
                let n2 = self.axes[1].points();
                vec![
                    self.axes[0].coord(product_index / n2),
                    self.axes[1].coord(product_index % n2),
                ]
            }
        }
    }
}

/// Enumerate multi-indices of dimension `s` with total below `layers`,
/// together with the shell (total index) of each.
fn occupied_modes(s: usize, layers: u32) -> Vec<(Vec<usize>, usize)> {
    let mut out = Vec::new();
    let mut current = vec![0usize; s];
    fn rec(
        dim: usize,
        s: usize,
        remaining: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, usize)>,
    ) {
        if dim == s {
            let total: usize = current.iter().sum();
            out.push((current.clone(), total));
            return;
        }
        for v in 0..=remaining {
            current[dim] = v;
            rec(dim + 1, s, remaining - v, current, out);
        }
        current[dim] = 0;
    }
    rec(0, s, layers as usize - 1, &mut current, &mut out);
    out
}

/// Sample the minimal-uncertainty density matrix of `spec` on the given axes
/// (one per degree of freedom; `s = 1` or `2`).
///
/// Every axis must span at least `+/- (sqrt(2L + s) + 4) / k` so the tail of
/// the highest occupied mode is negligible on the grid.
pub fn build_density_grid(spec: &ModeSpectrum, axes: &[UniformGrid]) -> Result<DensityMatrixGrid> {
    let s = spec.s() as usize;
    if s > 2 {
        return Err(Error::Domain(format!(
            "coordinate grids support one or two degrees of freedom, got s = {s}"
        )));
    }
    if axes.len() != s {
        return Err(Error::Domain(format!(
            "expected {s} axes, got {}",
            axes.len()
        )));
    }
    let layers = spec.layers();
    let required = ((2.0 * layers as f64 + s as f64).sqrt() + 4.0) / spec.k();
    for (i, axis) in axes.iter().enumerate() {
        if axis.min() > -required || axis.max() < required {
            return Err(Error::GridTooSmall {
                axis: i,
                min: axis.min(),
                max: axis.max(),
                required,
            });
        }
    }

    // Per-axis mode tables: table[axis][n][grid point].
    let basis = OscillatorBasis::new(spec.k(), layers as usize - 1 + 2)?;
    let tables: Vec<Vec<Vec<f64>>> = axes
        .iter()
        .map(|axis| {
            let mut per_mode = vec![Vec::with_capacity(axis.points()); layers as usize];
            for i in 0..axis.points() {
                let values = basis.eval_upto(layers as usize - 1, axis.coord(i));
                for (n, v) in values.into_iter().enumerate() {
                    per_mode[n].push(v);
                }
            }
            per_mode
        })
        .collect();

    let modes = occupied_modes(s, layers);
    let product_points: usize = axes.iter().map(|a| a.points()).product();

    // Product-mode values on the product grid.
    let mut mode_values = vec![vec![0.0f64; product_points]; modes.len()];
    for (mode_idx, (indices, _)) in modes.iter().enumerate() {
        match s {
            1 => {
                mode_values[mode_idx].copy_from_slice(&tables[0][indices[0]]);
            }
            _ => {
                let n2 = axes[1].points();
                for i1 in 0..axes[0].points() {
                    let a = tables[0][indices[0]][i1];
                    for i2 in 0..n2 {
                        mode_values[mode_idx][i1 * n2 + i2] = a * tables[1][indices[1]][i2];
                    }
                }
            }
        }
    }

    let mut values = vec![0.0f64; product_points * product_points];
    for ((_, shell), row) in modes.iter().zip(&mode_values) {
        let weight = spec.shell_weights()[*shell];
        if weight == 0.0 {
            continue;
        }
        for i in 0..product_points {
            let wi = weight * row[i];
            if wi == 0.0 {
                continue;
            }
            let base = i * product_points;
            for j in 0..product_points {
                values[base + j] += wi * row[j];
            }
        }
    }

    Ok(DensityMatrixGrid {
        s,
        axes: axes.to_vec(),
        values,
        k: spec.k(),
        shells: layers,
    })
}

/// Quadrature moments of a sampled density matrix.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureMoments {
    pub delta_x: f64,
    /// Spread of the wave-vector distribution, spectral route (default):
    /// the grid is projected back onto mode functions and contracted with
    /// the per-mode second moments.
    pub delta_q: f64,
    /// Same quantity from the second-difference Laplacian on the diagonal.
    pub delta_q_second_diff: f64,
    pub n_eff: f64,
    pub trace: f64,
    /// False when the second-difference estimate did not stabilize under
    /// step doubling; the grid is then too coarse for that route.
    pub second_diff_converged: bool,
}

/// Compute `(dx, dq, N_eff)` from the sampled kernel by trapezoid
/// quadrature, plus the grid trace and a second-difference cross-estimate of
/// `dq`.
pub fn quadrature_moments(grid: &DensityMatrixGrid) -> QuadratureMoments {
    let n = grid.product_points();
    let weights = product_weights(grid);
    let coords: Vec<Vec<f64>> = (0..n).map(|i| grid.unravel(i)).collect();
    let sf = grid.s as f64;

    let trace = kahan_sum((0..n).map(|i| weights[i] * grid.value(i, i)));
    let mean_x2 = kahan_sum((0..n).map(|i| {
        let x2: f64 = coords[i].iter().map(|x| x * x).sum();
        weights[i] * x2 * grid.value(i, i)
    }));
    let dx2 = mean_x2 / sf;

    let purity = kahan_sum((0..n).flat_map(|i| {
        let wi = weights[i];
        let grid = &grid;
        let weights = &weights;
        (0..n).map(move |j| {
            let v = grid.value(i, j);
            wi * weights[j] * v * v
        })
    }));

    let dq2_spectral = spectral_q2(grid) / sf;
    let (dq2_fd, dq2_fd_coarse) = second_difference_q2(grid, &weights);
    let dq2_fd = dq2_fd / sf;
    let dq2_fd_coarse = dq2_fd_coarse / sf;
    let second_diff_converged =
        (dq2_fd - dq2_fd_coarse).abs() <= 1e-3 * dq2_fd.abs().max(1.0);

    QuadratureMoments {
        delta_x: dx2.sqrt(),
        delta_q: dq2_spectral.sqrt(),
        delta_q_second_diff: dq2_fd.max(0.0).sqrt(),
        n_eff: 1.0 / purity,
        trace,
        second_diff_converged,
    }
}

fn product_weights(grid: &DensityMatrixGrid) -> Vec<f64> {
    let per_axis: Vec<Vec<f64>> = grid.axes.iter().map(|a| a.trapezoid_weights()).collect();
    match grid.s {
        1 => per_axis[0].clone(),
        _ => {
            let mut out = Vec::with_capacity(grid.product_points());
            for w1 in &per_axis[0] {
                for w2 in &per_axis[1] {
                    out.push(w1 * w2);
                }
            }
            out
        }
    }
}

/// `tr(rho P^2)` with `P^2` summed over the degrees of freedom.
///
/// The kernel is projected onto product modes up to per-axis index
/// `shells + 1`, which covers the support of any grid built here plus a
/// margin for leakage, and contracted with the oscillator matrix elements
/// `(P^2)_{nn} = k^2 (n + 1/2)`, `(P^2)_{n, n+2} = -k^2 sqrt((n+1)(n+2))/2`.
fn spectral_q2(grid: &DensityMatrixGrid) -> f64 {
    let n = grid.product_points();
    let n_cut = grid.shells as usize + 1; // highest per-axis mode index
    let basis = OscillatorBasis::new(grid.k, n_cut).expect("k validated at construction");
    let k2 = grid.k * grid.k;

    // Weighted mode tables per axis: U[axis][mode][point] including the
    // quadrature weight.
    let axis_tables: Vec<Vec<Vec<f64>>> = grid
        .axes
        .iter()
        .map(|axis| {
            let w = axis.trapezoid_weights();
            let mut per_mode = vec![Vec::with_capacity(axis.points()); n_cut + 1];
            for i in 0..axis.points() {
                let values = basis.eval_all(axis.coord(i));
                for (m, v) in values.into_iter().enumerate() {
                    per_mode[m].push(v * w[i]);
                }
            }
            per_mode
        })
        .collect();

    // Product modes.
    let product_modes: Vec<Vec<usize>> = match grid.s {
        1 => (0..=n_cut).map(|a| vec![a]).collect(),
        _ => {
            let mut out = Vec::new();
            for a in 0..=n_cut {
                for b in 0..=n_cut {
                    out.push(vec![a, b]);
                }
            }
            out
        }
    };
    let mode_on_grid = |mode: &[usize]| -> Vec<f64> {
        match grid.s {
            1 => axis_tables[0][mode[0]].clone(),
            _ => {
                let n2 = grid.axes[1].points();
                let mut out = vec![0.0; n];
                for i1 in 0..grid.axes[0].points() {
                    let a = axis_tables[0][mode[0]][i1];
                    for i2 in 0..n2 {
                        out[i1 * n2 + i2] = a * axis_tables[1][mode[1]][i2];
                    }
                }
                out
            }
        }
    };

    let vectors: Vec<Vec<f64>> = product_modes.iter().map(|m| mode_on_grid(m)).collect();
    // B[a][b] = u_a . rho . u_b
    let m_count = product_modes.len();
    let mut projected = vec![0.0f64; m_count * m_count];
    for (a, ua) in vectors.iter().enumerate() {
        // v = rho . u_a
        let mut v = vec![0.0f64; n];
        for i in 0..n {
            let base = i * n;
            let mut acc = 0.0;
            for j in 0..n {
                acc += grid.values[base + j] * ua[j];
            }
            v[i] = acc;
        }
        for (b, ub) in vectors.iter().enumerate() {
            projected[a * m_count + b] = ub.iter().zip(&v).map(|(x, y)| x * y).sum();
        }
    }

    // Contract with P^2 along each degree of freedom. Both trace terms of an
    // (a, a+2) pair carry the same matrix element.
    let mut total = 0.0f64;
    for (a_idx, a_mode) in product_modes.iter().enumerate() {
        for dim in 0..grid.s {
            let na = a_mode[dim];
            total += projected[a_idx * m_count + a_idx] * k2 * (na as f64 + 0.5);
            if na + 2 <= n_cut {
                let mut b_mode = a_mode.clone();
                b_mode[dim] = na + 2;
                let b_idx = product_modes.iter().position(|m| *m == b_mode).unwrap();
                let element = -k2 * (((na + 1) * (na + 2)) as f64).sqrt() / 2.0;
                total += (projected[a_idx * m_count + b_idx]
                    + projected[b_idx * m_count + a_idx])
                    * element;
            }
        }
    }
    total
}

/// Second-difference estimates of `-integral of (laplacian rho) at X = X'`,
/// at step `h` and `2h`.
fn second_difference_q2(grid: &DensityMatrixGrid, weights: &[f64]) -> (f64, f64) {
    let n = grid.product_points();
    let mut fine = 0.0f64;
    let mut coarse = 0.0f64;
    match grid.s {
        1 => {
            let h = grid.axes[0].step();
            for i in 1..n - 1 {
                let lap = (grid.value(i + 1, i) - 2.0 * grid.value(i, i) + grid.value(i - 1, i))
                    / (h * h);
                fine -= weights[i] * lap;
            }
            for i in 2..n - 2 {
                let lap = (grid.value(i + 2, i) - 2.0 * grid.value(i, i) + grid.value(i - 2, i))
                    / (4.0 * h * h);
                coarse -= weights[i] * lap;
            }
        }
        _ => {
            let n1 = grid.axes[0].points();
            let n2 = grid.axes[1].points();
            let h1 = grid.axes[0].step();
            let h2 = grid.axes[1].step();
            let idx = |a: usize, b: usize| a * n2 + b;
            for i1 in 0..n1 {
                for i2 in 0..n2 {
                    let diag = idx(i1, i2);
                    let w = weights[diag];
                    let center = grid.value(diag, diag);
                    if i1 >= 1 && i1 + 1 < n1 {
                        let lap1 = (grid.value(idx(i1 + 1, i2), diag) - 2.0 * center
                            + grid.value(idx(i1 - 1, i2), diag))
                            / (h1 * h1);
                        fine -= w * lap1;
                    }
                    if i2 >= 1 && i2 + 1 < n2 {
                        let lap2 = (grid.value(idx(i1, i2 + 1), diag) - 2.0 * center
                            + grid.value(idx(i1, i2 - 1), diag))
                            / (h2 * h2);
                        fine -= w * lap2;
                    }
                    if i1 >= 2 && i1 + 2 < n1 {
                        let lap1 = (grid.value(idx(i1 + 2, i2), diag) - 2.0 * center
                            + grid.value(idx(i1 - 2, i2), diag))
                            / (4.0 * h1 * h1);
                        coarse -= w * lap1;
                    }
                    if i2 >= 2 && i2 + 2 < n2 {
                        let lap2 = (grid.value(idx(i1, i2 + 2), diag) - 2.0 * center
                            + grid.value(idx(i1, i2 - 2), diag))
                            / (4.0 * h2 * h2);
                        coarse -= w * lap2;
                    }
                }
            }
        }
    }
    (fine, coarse)
}

/// Largest deviation from orthonormality among modes `0..=n_modes` under
/// trapezoid quadrature on `grid`.
pub fn orthonormality_defect(
    basis: &OscillatorBasis,
    grid: &UniformGrid,
    n_modes: usize,
) -> Result<f64> {
    if n_modes > basis.n_max() {
        return Err(Error::ModeOutOfRange {
            index: n_modes,
            max: basis.n_max(),
        });
    }
    let w = grid.trapezoid_weights();
    let mut table = vec![Vec::with_capacity(grid.points()); n_modes + 1];
    for i in 0..grid.points() {
        let values = basis.eval_upto(n_modes, grid.coord(i));
        for (m, v) in values.into_iter().enumerate() {
            table[m].push(v);
        }
    }
    let mut worst = 0.0f64;
    for a in 0..=n_modes {
        for b in a..=n_modes {
            let overlap = kahan_sum((0..grid.points()).map(|i| w[i] * table[a][i] * table[b][i]));
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((overlap - target).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{build_spectrum, spectrum_moments};

    #[test]
    fn mode_values_at_the_origin() {
        let basis = OscillatorBasis::new(1.0, 4).unwrap();
        let quarter = std::f64::consts::PI.powf(-0.25);
        assert!((basis.mode_function(0, 0.0).unwrap() - quarter).abs() < 1e-15);
        assert_eq!(basis.mode_function(1, 0.0).unwrap(), 0.0);
        assert!(
            (basis.mode_function(2, 0.0).unwrap() + quarter / std::f64::consts::SQRT_2).abs()
                < 1e-15
        );
        assert!(matches!(
            basis.mode_function(7, 0.0),
            Err(Error::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn modes_are_orthonormal_on_the_default_grid() {
        let basis = OscillatorBasis::new(1.0, 12).unwrap();
        let grid = UniformGrid::default_for_scale(1.0);
        let defect = orthonormality_defect(&basis, &grid, 12).unwrap();
        assert!(defect < 1e-8, "defect {defect:e}");
    }

    #[test]
    fn pure_state_grid_is_a_gaussian_product() {
        let spec = build_spectrum(1, 1.0, 1.0).unwrap();
        let axes = [UniformGrid::default_for_scale(1.0)];
        let grid = build_density_grid(&spec, &axes).unwrap();
        let basis = OscillatorBasis::new(1.0, 0).unwrap();
        for &i in &[0usize, 300, 600, 900] {
            for &j in &[0usize, 450, 1200] {
                let expected = basis.mode_function(0, axes[0].coord(i)).unwrap()
                    * basis.mode_function(0, axes[0].coord(j)).unwrap();
                assert!((grid.value(i, j) - expected).abs() < 1e-14);
            }
        }
        let m = quadrature_moments(&grid);
        assert!((m.trace - 1.0).abs() < 1e-9);
        assert!((m.delta_x - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((m.delta_q - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((m.n_eff - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grid_span_is_enforced() {
        let spec = build_spectrum(1, 2.0, 1.0).unwrap();
        let axes = [UniformGrid::new(-3.0, 3.0, 301).unwrap()];
        match build_density_grid(&spec, &axes) {
            Err(Error::GridTooSmall { required, .. }) => {
                assert!(required > 3.0);
            }
            other => panic!("expected a grid-size error, got {other:?}"),
        }
    }

    #[test]
    fn quadrature_matches_analytic_moments() {
        let spec = build_spectrum(1, 1.5, 1.0).unwrap();
        let axes = [UniformGrid::default_for_scale(1.0)];
        let grid = build_density_grid(&spec, &axes).unwrap();
        let q = quadrature_moments(&grid);
        let a = spectrum_moments(&spec);
        assert!((q.trace - 1.0).abs() < 1e-6);
        assert!((q.delta_x - a.delta_x).abs() < 1e-6);
        assert!((q.delta_q - a.delta_q).abs() < 1e-6);
        assert!((q.n_eff - a.n_eff).abs() / a.n_eff < 1e-5);
        // purity of the two-shell state is 2/3
        assert!((1.0 / q.n_eff - 2.0 / 3.0).abs() < 1e-6);
        assert!(q.second_diff_converged);
        assert!((q.delta_q_second_diff - q.delta_q).abs() < 1e-4);
    }

    #[test]
    fn uniform_two_shell_mixture_by_quadrature() {
        let spec = crate::spectrum::spectrum_for_layers(1, 2.0, 2, 1.0).unwrap();
        let axes = [UniformGrid::default_for_scale(1.0)];
        let grid = build_density_grid(&spec, &axes).unwrap();
        let q = quadrature_moments(&grid);
        assert!((q.delta_x * q.delta_q - 1.0).abs() < 1e-6);
        assert!((q.n_eff - 2.0).abs() < 1e-6 * 2.0);
    }

    #[test]
    fn two_dimensional_grid_is_swap_symmetric() {
        let spec = build_spectrum(2, 3.0, 1.0).unwrap();
        let axis = UniformGrid::new(-8.0, 8.0, 41).unwrap();
        let grid = build_density_grid(&spec, &[axis, axis]).unwrap();
        let q = quadrature_moments(&grid);
        assert!((q.trace - 1.0).abs() < 1e-6, "trace {:e}", q.trace - 1.0);
        let defect = grid.swap_symmetry_defect().unwrap();
        assert!(defect < 1e-10, "swap defect {defect:e}");
        assert!(grid.symmetry_defect() < 1e-12);
        // quadrature should still see the right mixedness
        assert!((q.n_eff - 3.0).abs() / 3.0 < 1e-4, "n_eff {}", q.n_eff);
    }
}
