use ftorus_core::lattice::Modulus;
use ftorus_core::lip::{riesz_check, Evaluand};
use ftorus_core::ncpoly::TwistMatrix;
use ftorus_core::Result;

use crate::{mean_zero, sample, ExperimentConfig, ExperimentId, PsiChoice, ReportRow};

/// ‖A^{1/2}x‖₂ against ‖Γ(x,x)^{1/2}‖₂ on mean-zero samples split evenly over
/// ψ ∈ {heat, word} and d ∈ {1, 2}; the p = 4 ratio is recorded alongside.
pub fn run_riesz(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = ExperimentId::Riesz;
    let combos = [(PsiChoice::Heat, 1usize), (PsiChoice::Heat, 2), (PsiChoice::Word, 1), (PsiChoice::Word, 2)];
    let label = |c: PsiChoice| if c == PsiChoice::Heat { "heat" } else { "word" };
    let mut rows = Vec::new();
    let mut index = 0u64;
    for (c, &(choice, d)) in combos.iter().enumerate() {
        let share = cfg.samples / combos.len() + usize::from(c < cfg.samples % combos.len());
        let psi = choice.length(Modulus::Infinite, d);
        let twist = TwistMatrix::zero(d);
        let (mut gap, mut ratio4): (f64, f64) = (0.0, 0.0);
        for _ in 0..share {
            let amp = cfg.amps[index as usize % cfg.amps.len()];
            let f = mean_zero(&sample(&twist, amp, cfg.band, cfg.seed, index, false));
            index += 1;
            let r2 = riesz_check(Evaluand::Symbol(&f), &psi, 2.0, cfg.grid)?;
            gap = gap.max((r2.lhs - r2.column).abs());
            ratio4 = ratio4.max(riesz_check(Evaluand::Symbol(&f), &psi, 4.0, cfg.grid)?.ratio);
        }
        let name = format!("{}-d{d}", label(choice));
        rows.push(ReportRow::check(id, 0, format!("{name}/p2_identity_gap"), gap, cfg.tol));
        rows.push(ReportRow::info(id, 0, format!("{name}/p4_max_ratio"), ratio4));
    }
    Ok(rows)
}
