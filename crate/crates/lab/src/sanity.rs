use ftorus_core::lattice::window_points;
use ftorus_core::linalg::{cis, ONE};
use ftorus_core::model::{
    clock_shift, fuzzy_generators, higher_dim_generators, matrix_op_norm, MatrixModel, MonomialMatrix,
    DEFAULT_DIMENSION_CAP,
};
use ftorus_core::Result;

use crate::{ExperimentConfig, ExperimentId, ReportRow};

fn orthonormality_defect(model: &MatrixModel) -> Result<f64> {
    let g = model.generators().len();
    let mons: Vec<_> =
        window_points(model.index_modulus(), g, None)?.iter().map(|k| model.monomial(k)).collect();
    let mut worst: f64 = 0.0;
    for (a, wa) in mons.iter().enumerate() {
        for (b, wb) in mons.iter().enumerate() {
            let want = if a == b { ONE } else { 0.0 * ONE };
            worst = worst.max((wa.trace_pair(wb) - want).norm());
        }
    }
    Ok(worst)
}

/// Commutator defect against 2sin(π/n), monomial trace orthonormality and the
/// relations of the higher-dimensional generators.
pub fn run_model_sanity(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = ExperimentId::ModelSanity;
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let m = clock_shift(n)?;
        let u = m.generators()[0].to_dense();
        let v = m.generators()[1].to_dense();
        let defect = matrix_op_norm(&(&u * &v - &v * &u))?;
        let want = 2.0 * (std::f64::consts::PI / n as f64).sin();
        rows.push(ReportRow::check(id, n, "commutator_vs_2sin", (defect - want).abs(), cfg.tol));
    }
    let small: Vec<(String, std::sync::Arc<MatrixModel>)> = vec![
        ("clock-shift-8".into(), clock_shift(8)?),
        ("clock-shift-16".into(), clock_shift(16)?),
        ("fuzzy-1/2-8".into(), fuzzy_generators(1, 2, 8)?),
        ("fuzzy-1/3-9".into(), fuzzy_generators(1, 3, 9)?),
        ("higher-dim-3x2".into(), higher_dim_generators(3, 2, DEFAULT_DIMENSION_CAP)?),
    ];
    for (name, model) in &small {
        let n = model.order();
        rows.push(ReportRow::check(id, n, format!("{name}/trace_orthonormality"), orthonormality_defect(model)?, cfg.tol));
        rows.push(ReportRow::check(id, n, format!("{name}/relation_defect"), model.relation_defect(), cfg.tol));
    }
    let hd = &small[4].1;
    let g = hd.generators();
    for r in 0..g.len() {
        for t in r + 1..g.len() {
            let lhs = g[r].mul(&g[t]);
            let rhs = g[t].mul(&g[r]).scale(cis(1.0 / 3.0));
            rows.push(ReportRow::check(id, 3, format!("higher-dim-3x2/phase_x{}x{}", r + 1, t + 1), lhs.max_diff(&rhs), cfg.tol));
        }
        let order = g[r].pow(3).max_diff(&MonomialMatrix::identity(hd.dim()));
        rows.push(ReportRow::check(id, 3, format!("higher-dim-3x2/order_x{}", r + 1), order, cfg.tol));
    }
    Ok(rows)
}
