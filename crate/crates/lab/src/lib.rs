//! Experiment suite measuring how matrix models approximate the symbol algebra:
//! each run turns a configuration into [`ReportRow`]s with explicit pass bounds.

pub mod config;
pub mod report;

mod audit;
mod bridge;
mod covering;
mod intertwining;
mod isometry;
mod rate;
mod riesz;
mod sanity;
mod smoothing;

use ftorus_core::ncpoly::{random_poly, NCPoly, TwistMatrix};
use ftorus_core::Result;

pub use config::{ExperimentConfig, ExperimentId, Overrides, PsiChoice, Theta};
pub use report::{kendall_tau, summarize, ReportRow};

pub use bridge::run_bridge_reach;
pub use covering::{run_covering_net, CoveringOutcome};
pub use intertwining::{intertwining_defect, run_intertwining};
pub use isometry::{run_isometry_defect, run_rational_fiber};
pub use rate::{run_rate, run_rate_for, shifted_cosine};
pub use riesz::run_riesz;
pub use audit::run_psd_audit;
pub use sanity::run_model_sanity;
pub use smoothing::{run_multiplier_contraction, run_smoothing_tail};

/// Runs one configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    cfg.validate()?;
    match cfg.id {
        ExperimentId::Intertwining => run_intertwining(cfg),
        ExperimentId::Rate => run_rate(cfg),
        ExperimentId::PsdAudit => run_psd_audit(cfg),
        ExperimentId::Isometry => run_isometry_defect(cfg),
        ExperimentId::RationalFiber => run_rational_fiber(cfg),
        ExperimentId::Riesz => run_riesz(cfg),
        ExperimentId::Multiplier => run_multiplier_contraction(cfg),
        ExperimentId::SmoothingTail => run_smoothing_tail(cfg),
        ExperimentId::CoveringNet => run_covering_net(cfg).map(|o| o.rows),
        ExperimentId::BridgeReach => run_bridge_reach(cfg),
        ExperimentId::ModelSanity => run_model_sanity(cfg),
    }
}

/// Sample `index` of a run: complex Gaussian blocks from stream (seed, index).
pub(crate) fn sample(twist: &TwistMatrix, amp: usize, band: u64, seed: u64, index: u64, sa: bool) -> NCPoly {
    let mut rng = ftorus_core::lip::sample_rng(seed, index);
    random_poly(twist, amp, band, &mut rng, sa)
}

/// f − f̂(0), i.e. the mean-zero part under the canonical trace.
pub(crate) fn mean_zero(f: &NCPoly) -> NCPoly {
    let t = f.twist().clone();
    let zero = NCPoly::block_monomial(&t, &vec![0; t.dim()], f.mean_block());
    f.sub(&zero).expect("same shape")
}
