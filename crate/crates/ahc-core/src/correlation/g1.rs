//! First-order (singles) intensity at the beam-splitter outputs.

use num_complex::Complex64;

use crate::correlation::czt::dft_uniform;
use crate::error::Result;
use crate::grid::{Axis, CoordinateConvention};
use crate::spectral::JointSpectralAmplitude;
use crate::TWO_PI;

/// Singles intensity G¹(t) at either beam-splitter output, averaged over the
/// two outputs (they are identical: the splitter phases cancel in the
/// single-detector rate).
///
/// For a cw amplitude the singles rate is stationary and the trace is
/// constant. For a pulsed signal/idler amplitude it is the pulse-shaped
/// arrival envelope ½(G¹_s(t) + G¹_i(t)) with
/// G¹_s(t) = Σ_i |Σ_s f(ω_s, ω_i) e^{−iω_s t} h_s/2π|² h_i.
/// The absolute scale is arbitrary; only the time dependence is meaningful.
pub fn g1_output_intensity(jsa: &JointSpectralAmplitude, t_axis: &Axis) -> Result<Vec<f64>> {
    jsa.require_normalized(1e-6)?;
    match (jsa.convention(), jsa.is_cw()) {
        (CoordinateConvention::SumDiff, true) => {
            let h = jsa.grid.second.step() / TWO_PI;
            let level: f64 =
                jsa.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h;
            Ok(vec![level; t_axis.n])
        }
        (CoordinateConvention::SignalIdler, _) => {
            let grid = &jsa.grid;
            let h_s = grid.first.step() / TWO_PI;
            let h_i = grid.second.step() / TWO_PI;
            let mut out = vec![0.0; t_axis.n];
            // Signal arm: transform over ω_s for each ω_i, accumulate power.
            for c in 0..grid.second.n {
                let x: Vec<Complex64> = jsa.values.column(c).iter().copied().collect();
                let z = dft_uniform(&x, grid.first.start(), grid.first.step(), t_axis, 1.0);
                for (o, v) in out.iter_mut().zip(&z) {
                    *o += 0.5 * v.norm_sqr() * h_s * h_s * grid.second.step();
                }
            }
            // Idler arm.
            for r in 0..grid.first.n {
                let x: Vec<Complex64> = jsa.values.row(r).iter().copied().collect();
                let z = dft_uniform(&x, grid.second.start(), grid.second.step(), t_axis, 1.0);
                for (o, v) in out.iter_mut().zip(&z) {
                    *o += 0.5 * v.norm_sqr() * h_i * h_i * grid.first.step();
                }
            }
            Ok(out)
        }
        (CoordinateConvention::SumDiff, false) => Err(crate::error::AhcError::config(
            "singles envelopes of pulsed sources need a signal/idler amplitude",
        )),
    }
}
