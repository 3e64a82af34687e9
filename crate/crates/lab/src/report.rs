use crate::config::ExperimentId;

/// One measured quantity. `pass` is always `value <= bound`, so a NaN value fails
/// and informational rows carry `bound = f64::MAX` (which still rejects ±∞ and NaN).
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub n: u64,
    pub metric: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl ReportRow {
    pub fn check(experiment: ExperimentId, n: u64, metric: impl Into<String>, value: f64, bound: f64) -> Self {
        ReportRow {
            experiment: experiment.name().to_string(),
            n,
            metric: metric.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    /// Recorded value whose only requirement is finiteness.
    pub fn info(experiment: ExperimentId, n: u64, metric: impl Into<String>, value: f64) -> Self {
        Self::check(experiment, n, metric, value, f64::MAX)
    }

    pub fn recomputed_pass(&self) -> bool {
        self.value <= self.bound
    }
}

/// Kendall's τ_a between positions and values; ties count as neither.
pub fn kendall_tau(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match values[j].partial_cmp(&values[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}

/// Overall verdict per experiment, in first-seen order.
pub fn summarize(rows: &[ReportRow]) -> Vec<(String, usize, usize)> {
    let mut out: Vec<(String, usize, usize)> = Vec::new();
    for r in rows {
        let idx = match out.iter().position(|(e, _, _)| *e == r.experiment) {
            Some(i) => i,
            None => {
                out.push((r.experiment.clone(), 0, 0));
                out.len() - 1
            }
        };
        out[idx].1 += 1;
        if r.pass {
            out[idx].2 += 1;
        }
    }
    out
}
