//! File outputs: diagnostics time series, curve snapshots, sweep and order
//! tables.
//!
//! Reals are rendered with 17 significant digits, which round-trips every
//! f64 bit-exactly, so identical configurations produce byte-identical files
//! and the series CSV can serve as a regression baseline.

use std::fmt::Write as _;
use std::path::Path;

use imcf_core::{embed_graph, DiagnosticsRecord, GraphState, OrderStudy, RunResult, SweepRow};

use crate::config::CliError;

/// Exact header of the diagnostics series CSV.
pub const SERIES_HEADER: &str = "step,t,s,u_min,u_max,grad_phi_max,k_min,k_max,k_theta_min,\
k_theta_max,length,length_ode_residual,osc_rescaled,env_violation,phidot_violation,\
psi_identity_gap,all_ok";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one row per diagnostics record, in step order.
pub fn write_series_csv(result: &RunResult, path: &Path) -> Result<(), CliError> {
    let mut text = String::with_capacity(64 + 360 * result.series.len());
    text.push_str(SERIES_HEADER);
    text.push('\n');
    for r in &result.series {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            real(r.t),
            real(r.s),
            real(r.u_min),
            real(r.u_max),
            real(r.grad_phi_max),
            real(r.k_min),
            real(r.k_max),
            real(r.k_theta_min),
            real(r.k_theta_max),
            real(r.length),
            real(r.length_ode_residual),
            real(r.osc_rescaled),
            real(r.env_violation),
            real(r.phidot_violation),
            real(r.psi_identity_gap),
            r.all_ok,
        );
    }
    std::fs::write(path, text).map_err(CliError::io(path))
}

/// Parses a file produced by [`write_series_csv`]; the 17-digit rendering
/// makes the round-trip bit-exact.
pub fn parse_series_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut lines = text.lines();
    let bad = |message: &str| CliError::Validation { key: "series", message: message.to_string() };
    if lines.next() != Some(SERIES_HEADER) {
        return Err(bad("unexpected header"));
    }
    let mut out = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 17 {
            return Err(bad("expected 17 fields per row"));
        }
        let f = |i: usize| -> Result<f64, CliError> {
            fields[i].parse().map_err(|_| bad("malformed real"))
        };
        out.push(DiagnosticsRecord {
            step: fields[0].parse().map_err(|_| bad("malformed step"))?,
            t: f(1)?,
            s: f(2)?,
            u_min: f(3)?,
            u_max: f(4)?,
            grad_phi_max: f(5)?,
            k_min: f(6)?,
            k_max: f(7)?,
            k_theta_min: f(8)?,
            k_theta_max: f(9)?,
            length: f(10)?,
            length_ode_residual: f(11)?,
            osc_rescaled: f(12)?,
            env_violation: f(13)?,
            phidot_violation: f(14)?,
            psi_identity_gap: f(15)?,
            all_ok: match fields[16] {
                "true" => true,
                "false" => false,
                _ => return Err(bad("malformed all_ok")),
            },
        });
    }
    Ok(out)
}

/// Writes the embedded curve: `xi,u,x1,x2` per node, directly plottable in
/// the `(x1, x2)` plane.
pub fn write_snapshot(state: &GraphState, path: &Path) -> Result<(), CliError> {
    let points = embed_graph(state);
    let mut text = String::with_capacity(16 + 80 * points.len());
    text.push_str("xi,u,x1,x2\n");
    for (i, p) in points.iter().enumerate() {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            real(state.xi(i)),
            real(state.u()[i]),
            real(p.x1),
            real(p.x2)
        );
    }
    std::fs::write(path, text).map_err(CliError::io(path))
}

/// Writes one sweep row per alpha: the reported limit radius against the
/// radius interval, plus the termination verdict.
pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<(), CliError> {
    let mut text = String::from("alpha,r_infinity,r_lo,r_hi,contained,termination\n");
    for row in rows {
        let r_inf = row
            .result
            .r_infinity
            .map_or_else(|| "".to_string(), real);
        let _ = writeln!(
            text,
            "{},{},{},{},{},{:?}",
            real(row.alpha),
            r_inf,
            real(row.r_lo),
            real(row.r_hi),
            row.contained,
            row.result.termination
        );
    }
    std::fs::write(path, text).map_err(CliError::io(path))
}

/// Writes an order table; exact (round-off) rows carry `exact` in the order
/// column. Spatial studies append the envelope-violation columns.
pub fn write_order_csv(study: &OrderStudy, path: &Path) -> Result<(), CliError> {
    let spatial = !study.envelope_rows.is_empty();
    let mut text = String::from(if spatial {
        "resolution,curvature_gap,curvature_order,env_violation,env_order\n"
    } else {
        "resolution,error,order\n"
    });
    let order_cell = |row: &imcf_core::OrderRow| -> String {
        if row.exact {
            "exact".to_string()
        } else {
            row.order.map_or_else(String::new, |o| format!("{o:.3}"))
        }
    };
    for (i, row) in study.rows.iter().enumerate() {
        if spatial {
            let env = &study.envelope_rows[i];
            let _ = writeln!(
                text,
                "{},{},{},{},{}",
                real(row.resolution),
                real(row.error),
                order_cell(row),
                real(env.error),
                order_cell(env)
            );
        } else {
            let _ = writeln!(text, "{},{},{}", real(row.resolution), real(row.error), order_cell(row));
        }
    }
    std::fs::write(path, text).map_err(CliError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use imcf_core::{run_flow, FlowConfig, Mode};

    #[test]
    fn series_round_trips_bit_exactly() {
        let mut cfg = FlowConfig::new(-1.0, 0.0, 1.0, 32, Mode::Physical);
        cfg.end_time = 0.05;
        cfg.snapshot_stride = 20;
        let u0 = GraphState::constant(0.0, 1.0, 32, 2.0).unwrap();
        let result = run_flow(&u0, &cfg).unwrap();
        assert!(result.series.len() > 2);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        write_series_csv(&result, &path).unwrap();
        let parsed = parse_series_csv(&path).unwrap();
        assert_eq!(parsed, result.series);
    }

    #[test]
    fn empty_series_writes_header_only() {
        let result = RunResult {
            final_state: GraphState::constant(0.0, 1.0, 8, 1.0).unwrap(),
            series: Vec::new(),
            r_infinity: None,
            termination: imcf_core::Termination::GuardViolation,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        write_series_csv(&result, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{SERIES_HEADER}\n"));
        assert!(parse_series_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn snapshot_rows_lie_on_the_embedded_curve() {
        let st = GraphState::constant(0.0, 1.0, 8, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        write_snapshot(&st, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("xi,u,x1,x2"));
        let mut rows = 0;
        for line in lines {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert!((v[2] * v[2] - v[3] * v[3] + 1.0).abs() <= 1e-12);
            rows += 1;
        }
        assert_eq!(rows, 9);
    }
}
