//! Metric rows, markdown tables and CSV files.

use std::fmt::Write as _;

use raas_core::coupling::IterationRecord;
use raas_core::strategy::{Outcome, StrategyKind, SweepParam, SweepRow};
use raas_core::ModeKind;
use serde::Serialize;

/// One strategy's passenger and operator measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub strategy: StrategyKind,
    /// Seconds.
    pub avg_travel: f64,
    pub avg_wait: f64,
    /// Km.
    pub avg_distance: f64,
    /// Seconds; zero when no vehicle is sent.
    pub avg_arrival: f64,
    pub vehicles: usize,
    pub z1: f64,
    pub z2: f64,
    pub total: f64,
    pub stranded: usize,
    pub left: usize,
    pub bridged: usize,
}

impl MetricsRow {
    pub fn from_outcome(o: &Outcome) -> MetricsRow {
        let a = &o.kpi.aggregate;
        let (vehicles, z1, z2, total, avg_arrival) = match &o.plan {
            Some(p) => (
                p.vehicle_count(),
                p.cost_breakdown.z1,
                p.cost_breakdown.z2,
                p.objective,
                p.mean_arrival(),
            ),
            None => (0, 0.0, 0.0, 0.0, 0.0),
        };
        MetricsRow {
            strategy: o.kind,
            avg_travel: a.avg_travel,
            avg_wait: a.avg_wait,
            avg_distance: a.avg_distance,
            avg_arrival,
            vehicles,
            z1,
            z2,
            total,
            stranded: a.stranded,
            left: a.left,
            bridged: a.bridged,
        }
    }
}

pub fn hms(seconds: f64) -> String {
    let s = seconds.max(0.0).round() as u64;
    format!("{}:{:02}:{:02}", s / 3600, s / 60 % 60, s % 60)
}

fn money(x: f64, present: bool) -> String {
    if present {
        format!("{:.2}", x)
    } else {
        "-".into()
    }
}

/// Measures as rows, strategies as columns.
pub fn markdown_table(rows: &[MetricsRow], with_vehicles: bool) -> String {
    let mut out = String::new();
    let _ = write!(out, "| Indicator |");
    for r in rows {
        let _ = write!(out, " {} |", r.strategy.name());
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in rows {
        out.push_str("---:|");
    }
    out.push('\n');
    let mut line = |label: &str, cell: &dyn Fn(&MetricsRow) -> String| {
        let _ = write!(out, "| {} |", label);
        for r in rows {
            let _ = write!(out, " {} |", cell(r));
        }
        out.push('\n');
    };
    line("Average travel duration (h:mm:ss)", &|r| hms(r.avg_travel));
    line("Average wait duration (h:mm:ss)", &|r| hms(r.avg_wait));
    line("Average travel distance (km)", &|r| {
        format!("{:.2}", r.avg_distance)
    });
    if with_vehicles {
        line("Average arrival of replacement vehicles (h:mm:ss)", &|r| {
            hms(r.avg_arrival)
        });
        line("Reallocated vehicles", &|r| r.vehicles.to_string());
    }
    line("Monetary cost Z1 (euro)", &|r| {
        money(r.z1, r.strategy.bridges())
    });
    line("Loyalty cost Z2 (euro)", &|r| {
        money(r.z2, r.strategy != StrategyKind::Normal)
    });
    line("Total cost Z1+Z2 (euro)", &|r| {
        money(r.total, r.strategy != StrategyKind::Normal)
    });
    out
}

/// Normal, do-nothing and RaaS side by side.
pub fn table4(rows: &[MetricsRow]) -> String {
    let pick: Vec<MetricsRow> = [
        StrategyKind::Normal,
        StrategyKind::DoNothing,
        StrategyKind::Raas,
    ]
    .iter()
    .filter_map(|k| rows.iter().find(|r| r.strategy == *k).cloned())
    .collect();
    markdown_table(&pick, false)
}

/// RaaS against the single-mode bridging services.
pub fn table5(rows: &[MetricsRow]) -> String {
    let pick: Vec<MetricsRow> = [
        StrategyKind::Raas,
        StrategyKind::BusBridging,
        StrategyKind::TaxiBridging,
        StrategyKind::VanBridging,
    ]
    .iter()
    .filter_map(|k| rows.iter().find(|r| r.strategy == *k).cloned())
    .collect();
    markdown_table(&pick, true)
}

fn csv_string<F>(header: &[&str], mut fill: F) -> String
where
    F: FnMut(&mut csv::Writer<Vec<u8>>),
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    fill(&mut w);
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    csv_string(
        &[
            "strategy",
            "avg_travel_s",
            "avg_wait_s",
            "avg_distance_km",
            "avg_arrival_s",
            "vehicles",
            "z1",
            "z2",
            "total",
            "stranded",
            "left",
            "bridged",
        ],
        |w| {
            for r in rows {
                w.write_record([
                    r.strategy.name().to_string(),
                    format!("{:.3}", r.avg_travel),
                    format!("{:.3}", r.avg_wait),
                    format!("{:.3}", r.avg_distance),
                    format!("{:.3}", r.avg_arrival),
                    r.vehicles.to_string(),
                    format!("{:.6}", r.z1),
                    format!("{:.6}", r.z2),
                    format!("{:.6}", r.total),
                    r.stranded.to_string(),
                    r.left.to_string(),
                    r.bridged.to_string(),
                ])
                .expect("in-memory write");
            }
        },
    )
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    csv_string(
        &[
            param.name(),
            "strategy",
            "vehicles",
            "z1",
            "z2",
            "z2_leaving",
            "objective",
            "do_nothing",
        ],
        |w| {
            for r in rows {
                w.write_record([
                    format!("{}", r.value),
                    r.strategy.name().to_string(),
                    r.vehicles.to_string(),
                    format!("{:.6}", r.z1),
                    format!("{:.6}", r.z2),
                    format!("{:.6}", r.z2_leaving),
                    format!("{:.6}", r.objective),
                    format!("{:.6}", r.do_nothing),
                ])
                .expect("in-memory write");
            }
        },
    )
}

/// Output files of a sweep: the volume sweep feeds two figures (monetary
/// and loyalty cost), the arrangement-rate sweep one file per volume.
pub fn sweep_file_names(param: SweepParam, volume: f64) -> Vec<String> {
    match param {
        SweepParam::Volume => vec!["fig5a.csv".into(), "fig5b.csv".into()],
        SweepParam::Alpha => vec!["fig6.csv".into()],
        SweepParam::CaRate => vec![format!("fig7_v{}.csv", volume.round() as i64)],
    }
}

pub fn iterations_csv(records: &[IterationRecord]) -> String {
    let modes: Vec<ModeKind> = {
        let mut m: Vec<ModeKind> = records
            .iter()
            .flat_map(|r| r.ta_opt.keys().chain(r.ta_sim.keys()).copied())
            .collect();
        m.sort();
        m.dedup();
        m
    };
    let mut header = vec!["i".to_string()];
    for m in &modes {
        header.push(format!("ta_opt_{}", m.name()));
        header.push(format!("ta_sim_{}", m.name()));
        header.push(format!("factor_{}", m.name()));
    }
    header.extend(["gap".into(), "objective".into(), "converged".into()]);
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_string(&refs, |w| {
        for r in records {
            let mut rec = vec![r.i.to_string()];
            for m in &modes {
                let cell = |x: Option<&f64>| x.map_or(String::new(), |v| format!("{:.6}", v));
                rec.push(cell(r.ta_opt.get(m)));
                rec.push(cell(r.ta_sim.get(m)));
                rec.push(format!(
                    "{:.6}",
                    r.speed_factors.get(m).copied().unwrap_or(1.0)
                ));
            }
            rec.push(format!("{:.9}", r.gap));
            rec.push(format!("{:.6}", r.objective));
            rec.push(r.converged.to_string());
            w.write_record(&rec).expect("in-memory write");
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hms_formats() {
        assert_eq!(hms(0.0), "0:00:00");
        assert_eq!(hms(7348.4), "2:02:28");
        assert_eq!(hms(256.0), "0:04:16");
    }

    #[test]
    fn file_names() {
        assert_eq!(
            sweep_file_names(SweepParam::CaRate, 100.0),
            vec!["fig7_v100.csv"]
        );
        assert_eq!(sweep_file_names(SweepParam::Alpha, 300.0), vec!["fig6.csv"]);
    }
}
