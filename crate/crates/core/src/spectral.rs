//! FFT-diagonal operators: `(-Δ)^{s/2}`, `(-Δ)^s` and the shifted resolvent.
//!
//! Every operator here is a Fourier multiplier on the periodic box. Forward
//! transforms are unnormalized; the inverse divides by `M^N`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{check_finite, Field};
use crate::grid::{FractionalOrder, Grid, Power};

/// Relative bound on the imaginary residue left after an inverse transform.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Transforms a real field into its (unnormalized) spectrum.
pub fn forward(u: &Field) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(u.grid(), &mut buf, true);
    buf
}

/// Inverse transform, keeping the real part after checking the imaginary
/// residue against `SYMMETRY_TOLERANCE * reference_norm`.
pub fn inverse_real(grid: &Grid, mut spectrum: Vec<Complex64>, reference_norm: f64) -> Result<Field> {
    transform(grid, &mut spectrum, false);
    let scale = 1.0 / grid.node_count() as f64;
    let w = grid.cell_volume();
    let mut imag_sq = 0.0;
    let values: Vec<f64> = spectrum
        .iter()
        .map(|z| {
            imag_sq += (z.im * scale).powi(2);
            z.re * scale
        })
        .collect();
    let residue = (w * imag_sq).sqrt();
    let bound = SYMMETRY_TOLERANCE * reference_norm;
    if residue > bound && residue > f64::MIN_POSITIVE {
        return Err(Error::Symmetry { residue, bound });
    }
    check_finite(&values, "inverse transform")?;
    Ok(Field::from_raw(grid, values))
}

/// Multiplies the spectrum of `u` by `symbol(|k|)` and transforms back.
pub fn apply_radial_multiplier(u: &Field, symbol: impl Fn(f64) -> f64) -> Result<Field> {
    check_finite(u.values(), "multiplier input")?;
    let grid = u.grid();
    let mut spec = forward(u);
    let mut max_gain = 0.0f64;
    for (z, &k) in spec.iter_mut().zip(grid.k_magnitude()) {
        let m = symbol(k);
        max_gain = max_gain.max(m.abs());
        *z *= m;
    }
    inverse_real(grid, spec, u.norm() * max_gain.max(1.0))
}

/// Symbol of `(-Δ)^{s/2}` (`|k|^s`) or `(-Δ)^s` (`|k|^{2s}`); zero at `k = 0`.
#[inline]
pub fn fractional_symbol(k: f64, s: FractionalOrder, power: Power) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    match power {
        Power::Half => k.powf(s.value()),
        Power::Full => k.powf(2.0 * s.value()),
    }
}

pub fn apply_fractional_power(u: &Field, s: FractionalOrder, power: Power) -> Result<Field> {
    apply_radial_multiplier(u, |k| fractional_symbol(k, s, power))
}

/// `‖(-Δ)^{s/2} u‖₂²` by Parseval.
pub fn gagliardo_seminorm_sq(u: &Field, s: FractionalOrder) -> Result<f64> {
    check_finite(u.values(), "seminorm input")?;
    let spec = forward(u);
    Ok(weighted_spectral_energy(u.grid(), &spec, |k| fractional_symbol(k, s, Power::Full)))
}

/// `h^N / M^N Σ_k weight(|k|) |û(k)|²`, the Parseval image of a quadratic form.
pub fn weighted_spectral_energy(grid: &Grid, spectrum: &[Complex64], weight: impl Fn(f64) -> f64) -> f64 {
    let sum: f64 = spectrum
        .iter()
        .zip(grid.k_magnitude())
        .map(|(z, &k)| weight(k) * z.norm_sqr())
        .sum();
    sum * grid.cell_volume() / grid.node_count() as f64
}

/// Solves `eps2s (-Δ)^s w + c w = u` spectrally.
pub fn solve_shifted(u: &Field, s: FractionalOrder, eps2s: f64, c: f64) -> Result<Field> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "resolvent shift must be positive, got {c}"
        )));
    }
    if !(eps2s > 0.0 && eps2s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "resolvent diffusion weight must be positive, got {eps2s}"
        )));
    }
    apply_radial_multiplier(u, |k| 1.0 / (eps2s * fractional_symbol(k, s, Power::Full) + c))
}

/// Evaluates the trigonometric interpolant of `u` at an arbitrary point.
///
/// Costs `O(M^N)`; meant for a handful of off-grid samples. The Nyquist
/// mode is split symmetrically so real data interpolate to real values.
pub fn trig_interpolate(grid: &Grid, spectrum: &[Complex64], x: &[f64]) -> f64 {
    let m = grid.points();
    let n = grid.dim();
    let l = grid.half_extent();
    let k = grid.wavenumbers();
    // Phases are taken relative to the box origin -L.
    let per_axis: Vec<Vec<Complex64>> = (0..n)
        .map(|d| {
            let y = x[d] + l;
            (0..m)
                .map(|j| {
                    if j == m / 2 {
                        Complex64::new((k[j] * y).cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, k[j] * y)
                    }
                })
                .collect()
        })
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut idx = vec![0usize; n];
    for z in spectrum {
        let mut phase = Complex64::new(1.0, 0.0);
        for d in 0..n {
            phase *= per_axis[d][idx[d]];
        }
        acc += z * phase;
        crate::grid::advance(&mut idx, m);
    }
    acc.re / grid.node_count() as f64
}

/// In-place N-dimensional FFT over the row-major buffer.
pub(crate) fn transform(grid: &Grid, buf: &mut [Complex64], forward: bool) {
    let plan = if forward {
        grid.forward_plan()
    } else {
        grid.inverse_plan()
    };
    let m = grid.points();
    let n = grid.dim();
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    // Last axis is contiguous: rustfft handles consecutive chunks directly.
    plan.process_with_scratch(buf, &mut scratch);
    if n == 1 {
        return;
    }
    let total = buf.len();
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for axis in 0..n - 1 {
        let stride = m.pow((n - 1 - axis) as u32);
        let block = stride * m;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = buf[base + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    buf[base + j * stride] = *v;
                }
            }
        }
    }
}
