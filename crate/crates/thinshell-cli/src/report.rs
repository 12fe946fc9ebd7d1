//! Machine-readable run reports: one record per executed check, sorted
//! canonically so a report is byte-identical across runs of the same
//! config and seed.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub surface: String,
    /// `-` for checks that do not involve a boundary profile.
    pub profile: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Index into the report's field list, where applicable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<usize>,
    pub point: Vec<f64>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Observed convergence order for order-type checks; absent when
    /// the signal is exact (at the roundoff floor).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
    /// Error message when the check could not be evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub config_hash: String,
    pub surface: String,
    pub fields: Vec<String>,
    pub profiles: Vec<String>,
    pub points: usize,
    pub checks_total: usize,
    pub checks_passed: usize,
    pub checks_failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub meta: ReportMeta,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(
        seed: u64,
        config_hash: String,
        surface: String,
        fields: Vec<String>,
        profiles: Vec<String>,
        points: usize,
        mut checks: Vec<CheckRecord>,
    ) -> Report {
        // canonical order, independent of execution order
        checks.sort_by(|a, b| {
            (&a.check_id, &a.profile, a.alpha.map(f64::to_bits), a.field)
                .partial_cmp(&(&b.check_id, &b.profile, b.alpha.map(f64::to_bits), b.field))
                .unwrap()
                .then_with(|| {
                    a.point
                        .iter()
                        .map(|x| x.to_bits())
                        .cmp(b.point.iter().map(|x| x.to_bits()))
                })
        });
        let passed = checks.iter().filter(|c| c.pass).count();
        let failed = checks.len() - passed;
        Report {
            meta: ReportMeta {
                seed,
                config_hash,
                surface,
                fields,
                profiles,
                points,
                checks_total: checks.len(),
                checks_passed: passed,
                checks_failed: failed,
            },
            checks,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.meta.checks_failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    /// Fixed-column CSV: check_id, surface, profile, alpha, u1..un,
    /// residual, tolerance, pass, order.
    pub fn to_csv(&self, dim: usize) -> String {
        let mut out = String::new();
        out.push_str("check_id,surface,profile,alpha");
        for i in 1..=dim {
            out.push_str(&format!(",u{i}"));
        }
        out.push_str(",residual,tolerance,pass,order\n");
        for check in &self.checks {
            out.push_str(&check.check_id);
            out.push(',');
            out.push_str(&check.surface);
            out.push(',');
            out.push_str(&check.profile);
            out.push(',');
            if let Some(alpha) = check.alpha {
                out.push_str(&format!("{alpha}"));
            }
            for i in 0..dim {
                out.push(',');
                if let Some(x) = check.point.get(i) {
                    out.push_str(&format!("{x}"));
                }
            }
            out.push_str(&format!(
                ",{},{},{}",
                check.residual, check.tolerance, check.pass
            ));
            out.push(',');
            if let Some(order) = check.order {
                out.push_str(&format!("{order}"));
            }
            out.push('\n');
        }
        out
    }
}

/// One row of the operator sweep.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorRow {
    pub operator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub field: usize,
    pub point: Vec<f64>,
    pub components: Vec<f64>,
}

pub fn operator_rows_to_json(surface: &str, rows: &[OperatorRow]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        surface: &'a str,
        rows: &'a [OperatorRow],
    }
    let mut out = serde_json::to_string_pretty(&Doc { surface, rows }).expect("rows serialize");
    out.push('\n');
    out
}

pub fn operator_rows_to_csv(surface: &str, rows: &[OperatorRow], dim: usize) -> String {
    let mut out = String::new();
    out.push_str("surface,operator,alpha,field");
    for i in 1..=dim {
        out.push_str(&format!(",u{i}"));
    }
    for i in 1..=dim {
        out.push_str(&format!(",c{i}"));
    }
    out.push('\n');
    for row in rows {
        out.push_str(surface);
        out.push(',');
        out.push_str(&row.operator);
        out.push(',');
        if let Some(alpha) = row.alpha {
            out.push_str(&format!("{alpha}"));
        }
        out.push_str(&format!(",{}", row.field));
        for i in 0..dim {
            out.push(',');
            out.push_str(&format!("{}", row.point[i]));
        }
        for i in 0..dim {
            out.push(',');
            out.push_str(&format!("{}", row.components[i]));
        }
        out.push('\n');
    }
    out
}

/// One row of the convergence sweeps.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub check: String,
    pub profile: String,
    pub point: Vec<f64>,
    pub step: f64,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
}

pub fn convergence_rows_to_json(surface: &str, rows: &[ConvergenceRow]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        surface: &'a str,
        rows: &'a [ConvergenceRow],
    }
    let mut out = serde_json::to_string_pretty(&Doc { surface, rows }).expect("rows serialize");
    out.push('\n');
    out
}

pub fn convergence_rows_to_csv(surface: &str, rows: &[ConvergenceRow], dim: usize) -> String {
    let mut out = String::new();
    out.push_str("check,surface,profile");
    for i in 1..=dim {
        out.push_str(&format!(",u{i}"));
    }
    out.push_str(",step,residual,order\n");
    for row in rows {
        out.push_str(&row.check);
        out.push(',');
        out.push_str(surface);
        out.push(',');
        out.push_str(&row.profile);
        for i in 0..dim {
            out.push(',');
            out.push_str(&format!("{}", row.point[i]));
        }
        out.push_str(&format!(",{},{}", row.step, row.residual));
        out.push(',');
        if let Some(order) = row.order {
            out.push_str(&format!("{order}"));
        }
        out.push('\n');
    }
    out
}
