//! Closed-form coincidence traces for the single-pair-line source.

use crate::correlation::g2::ChannelPair;
use crate::grid::Axis;

/// G² of the single-pair-line amplitude g(ω−) ∝ 1/(γ² + (ω−0 − ω−)²),
/// normalized so the splitter-free reference is e^{−γ|t−|} with unit peak:
///
/// CC = DD = e^{−γ|t−|} (1 + cos ω−0 t−) / 4
/// CD      = e^{−γ|t−|} (1 − cos ω−0 t−) / 2
/// AB      = e^{−γ|t−|}
///
/// γ is the intensity FWHM of the underlying cavity mode. The two-detector
/// splitter channels sum to the reference: CC + DD + CD = AB.
pub fn g2_closed_form_cw(gamma: f64, omega_minus0: f64, channel: ChannelPair, t_minus: f64) -> f64 {
    let envelope = (-gamma * t_minus.abs()).exp();
    let c = (omega_minus0 * t_minus).cos();
    match channel {
        ChannelPair::CC | ChannelPair::DD => 0.25 * envelope * (1.0 + c),
        ChannelPair::CD => 0.5 * envelope * (1.0 - c),
        ChannelPair::AB => envelope,
    }
}

/// Tabulate [`g2_closed_form_cw`] on a delay axis.
pub fn g2_closed_form_trace(
    gamma: f64,
    omega_minus0: f64,
    channel: ChannelPair,
    axis: &Axis,
) -> Vec<f64> {
    (0..axis.n)
        .map(|j| g2_closed_form_cw(gamma, omega_minus0, channel, axis.value(j)))
        .collect()
}
