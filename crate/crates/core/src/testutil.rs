//! Shared fixtures for the crate's unit tests.

use num_complex::Complex;

use crate::clustering::BeamPlan;
use crate::linalg::CMat;

/// Beam plan over synthetic effective channels with an identity combiner
/// (square, one row per beam), so detection-row norms pass through the
/// combiner unchanged. Pair indices are placeholders.
pub(crate) fn plan_from_effective(effective: Vec<[Vec<Complex<f64>>; 2]>) -> BeamPlan<f64> {
    let m = effective.len();
    for pair in &effective {
        for side in pair {
            assert_eq!(side.len(), m, "synthetic effective channels must be M-dim");
        }
    }
    BeamPlan {
        selected_beams: (0..m).collect(),
        combiner: CMat::identity(m),
        pairs: (0..m).map(|j| [2 * j, 2 * j + 1]).collect(),
        effective,
    }
}
