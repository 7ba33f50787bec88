//! Exchange-symmetry decomposition of a joint spectral amplitude.

use crate::error::{AhcError, Result};
use crate::spectral::jsa::{JointSpectralAmplitude, JsaMetadata};

/// Symmetric and antisymmetric parts of an amplitude under ω− → −ω−.
#[derive(Debug, Clone)]
pub struct SymmetryParts {
    pub symmetric: JointSpectralAmplitude,
    pub antisymmetric: JointSpectralAmplitude,
    /// Reconstruction rule relating the parts to the input.
    pub sign_convention: &'static str,
}

/// Split a sum/difference amplitude into its exchange-symmetric and
/// antisymmetric parts:
///
/// f_S(ω−) = (f(−ω−) + f(ω−)) / 2,  f_A(ω−) = (f(−ω−) − f(ω−)) / 2,
///
/// so that f = f_S − f_A. The reflection is a pointwise index mirror, which
/// requires the difference axis to be centered on ω− = 0. The parts are not
/// renormalized; their squared norms sum to the input's.
pub fn decompose_symmetry(jsa: &JointSpectralAmplitude) -> Result<SymmetryParts> {
    let grid = &jsa.grid;
    if grid.convention != crate::grid::CoordinateConvention::SumDiff {
        return Err(AhcError::config(
            "symmetry decomposition needs the sum/difference convention",
        ));
    }
    let axis = &grid.second;
    if axis.center != 0.0 {
        return Err(AhcError::config(format!(
            "difference axis must be centered on zero for the mirror, got {}",
            axis.center
        )));
    }
    let mut sym = jsa.values.clone();
    let mut anti = jsa.values.clone();
    for r in 0..jsa.values.nrows() {
        for k in 0..axis.n {
            let a = jsa.values[(r, axis.mirror_index(k))];
            let b = jsa.values[(r, k)];
            sym[(r, k)] = 0.5 * (a + b);
            anti[(r, k)] = 0.5 * (a - b);
        }
    }
    let meta = JsaMetadata {
        normalized: false,
        ..jsa.metadata.clone()
    };
    let mut symmetric = JointSpectralAmplitude::new(grid.clone(), sym)?;
    symmetric.metadata = meta.clone();
    let mut antisymmetric = JointSpectralAmplitude::new(grid.clone(), anti)?;
    antisymmetric.metadata = meta;
    Ok(SymmetryParts {
        symmetric,
        antisymmetric,
        sign_convention: "input = symmetric - antisymmetric",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, FrequencyGrid};
    use ndarray::Array2;
    use num_complex::Complex64;

    fn test_jsa() -> JointSpectralAmplitude {
        let n = 64;
        let axis = Axis::new(0.0, 2e9, n).unwrap();
        let grid = FrequencyGrid::cw(1e15, axis).unwrap();
        let mut values = Array2::from_elem((1, n), Complex64::new(0.0, 0.0));
        for k in 0..n {
            let w = grid.second.value(k) / 1e9;
            values[(0, k)] = Complex64::new((-(w - 0.3).powi(2)).exp(), 0.2 * w);
        }
        let mut jsa = JointSpectralAmplitude::new(grid, values).unwrap();
        jsa.normalize().unwrap();
        jsa
    }

    #[test]
    fn parts_reconstruct_the_input_to_rounding() {
        let jsa = test_jsa();
        let parts = decompose_symmetry(&jsa).unwrap();
        for k in 0..jsa.values.ncols() {
            let rebuilt = parts.symmetric.values[(0, k)] - parts.antisymmetric.values[(0, k)];
            let orig = jsa.values[(0, k)];
            assert!(
                (rebuilt - orig).norm() <= 1e-15 * orig.norm().max(1e-3),
                "k={k}: {rebuilt} vs {orig}"
            );
        }
    }

    #[test]
    fn antisymmetric_part_is_odd_bitwise() {
        let jsa = test_jsa();
        let parts = decompose_symmetry(&jsa).unwrap();
        let axis = &jsa.grid.second;
        for k in 0..axis.n {
            let m = axis.mirror_index(k);
            let a = parts.antisymmetric.values[(0, k)];
            let b = parts.antisymmetric.values[(0, m)];
            assert_eq!(a, -b);
            let s = parts.symmetric.values[(0, k)];
            let t = parts.symmetric.values[(0, m)];
            assert_eq!(s, t);
        }
    }

    #[test]
    fn squared_norms_split_the_total() {
        let jsa = test_jsa();
        let parts = decompose_symmetry(&jsa).unwrap();
        let total = parts.symmetric.l2_norm().powi(2) + parts.antisymmetric.l2_norm().powi(2);
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn off_center_axis_is_rejected() {
        let axis = Axis::new(1e8, 2e9, 16).unwrap();
        let grid = FrequencyGrid::cw(1e15, axis).unwrap();
        let values = Array2::from_elem((1, 16), Complex64::new(1.0, 0.0));
        let jsa = JointSpectralAmplitude::new(grid, values).unwrap();
        assert!(decompose_symmetry(&jsa).is_err());
    }
}
