//! Per-tick metrics files.
//!
//! CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `tick` | 0-based index of the simulated tick |
//! | `mean_risk_<kind>` | mean risk of the agents of that kind (`noxious` is the responsive liar) |
//! | `belief_queries`, `report_requests` | requests sent this tick |
//! | `messages` | `belief_queries + report_requests` |
//! | `responses` | belief answers and report answers received this tick |
//! | `mean_domain_size`, `max_domain_size`, `mean_range` | communication-domain statistics |
//! | `mean_alertness_honest` | mean alertness index of honest agents (Low 0, Elevated 1, High 2) |
//! | `mean_kappa` | mean per-agent agreement of this tick's answers |
//! | `queries_near_noxious`, `queries_clear` | mean belief queries of honest agents with a responsive liar in range / with no adversary in range |
//! | `tp_<label>` .. `tn_<label>` | one-vs-rest detection counts for `suspicious`, `malicious`, `noxious` |
//! | `conf_<kind>_<label>` | honest observers' confusion matrix |
//!
//! Missing values are written as empty fields. Floats use the shortest
//! representation that round-trips.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use alert_swarm::sim::{ProfileKind, TickMetrics};
use alert_swarm::ThreatLevel;

use crate::error::{CliError, Result};

fn kind_column(kind: ProfileKind) -> &'static str {
    match kind {
        ProfileKind::ResponsiveLiar => "noxious",
        other => other.name(),
    }
}

/// The fixed CSV header.
pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = vec!["tick".into()];
    for kind in ProfileKind::ALL {
        h.push(format!("mean_risk_{}", kind_column(kind)));
    }
    for name in [
        "belief_queries",
        "report_requests",
        "messages",
        "responses",
        "mean_domain_size",
        "max_domain_size",
        "mean_range",
        "mean_alertness_honest",
        "mean_kappa",
        "queries_near_noxious",
        "queries_clear",
    ] {
        h.push(name.into());
    }
    for kind in ProfileKind::ADVERSARIAL {
        let label = kind.expected_label().name();
        for c in ["tp", "fp", "fn", "tn"] {
            h.push(format!("{c}_{label}"));
        }
    }
    for kind in ProfileKind::ALL {
        for label in ThreatLevel::ALL {
            h.push(format!("conf_{}_{}", kind.name(), label.name()));
        }
    }
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_row(m: &TickMetrics) -> Vec<String> {
    let mut r = vec![m.tick.to_string()];
    r.extend(m.mean_risk.iter().map(|v| opt(*v)));
    r.extend([
        m.belief_queries.to_string(),
        m.report_requests.to_string(),
        m.messages.to_string(),
        m.responses.to_string(),
        m.mean_domain_size.to_string(),
        m.max_domain_size.to_string(),
        m.mean_range.to_string(),
        opt(m.mean_alertness_honest),
        opt(m.mean_kappa),
        opt(m.queries_near_noxious),
        opt(m.queries_clear),
    ]);
    for kind in ProfileKind::ADVERSARIAL {
        let c = m.detection(kind);
        r.extend([c.tp, c.fp, c.fn_, c.tn].map(|x| x.to_string()));
    }
    for row in &m.confusion {
        r.extend(row.iter().map(|x| x.to_string()));
    }
    r
}

pub fn write_csv(path: &Path, series: &[TickMetrics]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let to_err = |e: csv::Error| CliError::io(path, e.into());
    w.write_record(csv_header()).map_err(to_err)?;
    for m in series {
        w.write_record(csv_row(m)).map_err(to_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<TickMetrics>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::metrics(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| CliError::metrics(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != csv_header() {
        return Err(CliError::metrics(path, "unexpected header"));
    }
    let mut out = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| CliError::metrics(path, e))?;
        let fields: Vec<&str> = record.iter().collect();
        let row = parse_row(&fields)
            .map_err(|m| CliError::metrics(path, format!("row {}: {m}", line + 1)))?;
        out.push(row);
    }
    Ok(out)
}

struct Fields<'a> {
    items: std::slice::Iter<'a, &'a str>,
}

impl Fields<'_> {
    fn next_str(&mut self) -> Result<&str, String> {
        self.items
            .next()
            .copied()
            .ok_or_else(|| "too few fields".to_string())
    }

    fn u64(&mut self) -> Result<u64, String> {
        let s = self.next_str()?;
        s.parse().map_err(|_| format!("bad integer {s:?}"))
    }

    fn f64(&mut self) -> Result<f64, String> {
        let s = self.next_str()?;
        s.parse().map_err(|_| format!("bad number {s:?}"))
    }

    fn opt(&mut self) -> Result<Option<f64>, String> {
        let s = self.next_str()?;
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| format!("bad number {s:?}"))
        }
    }
}

fn parse_row(fields: &[&str]) -> Result<TickMetrics, String> {
    let mut f = Fields {
        items: fields.iter(),
    };
    let tick = f.u64()?;
    let mut mean_risk = [None; 4];
    for v in &mut mean_risk {
        *v = f.opt()?;
    }
    let mut m = TickMetrics {
        tick,
        mean_risk,
        belief_queries: f.u64()?,
        report_requests: f.u64()?,
        messages: f.u64()?,
        responses: f.u64()?,
        mean_domain_size: f.f64()?,
        max_domain_size: f.u64()?,
        mean_range: f.f64()?,
        mean_alertness_honest: f.opt()?,
        mean_kappa: f.opt()?,
        queries_near_noxious: f.opt()?,
        queries_clear: f.opt()?,
        confusion: [[0; 4]; 4],
    };
    let mut counts = Vec::new();
    for _ in 0..ProfileKind::ADVERSARIAL.len() * 4 {
        counts.push(f.u64()?);
    }
    for row in &mut m.confusion {
        for cell in row.iter_mut() {
            *cell = f.u64()?;
        }
    }
    if f.items.next().is_some() {
        return Err("too many fields".into());
    }
    if m.messages != m.belief_queries + m.report_requests {
        return Err("messages != belief_queries + report_requests".into());
    }
    for (k, kind) in ProfileKind::ADVERSARIAL.iter().enumerate() {
        let c = m.detection(*kind);
        if counts[k * 4..k * 4 + 4] != [c.tp, c.fp, c.fn_, c.tn] {
            return Err(format!(
                "detection counts for {kind} disagree with the confusion matrix"
            ));
        }
    }
    Ok(m)
}

pub fn write_json(path: &Path, series: &[TickMetrics]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, series).map_err(|e| CliError::io(path, e.into()))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn read_json(path: &Path) -> Result<Vec<TickMetrics>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| CliError::metrics(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alert_swarm::sim::run_experiment;
    use alert_swarm::WorldConfig;

    #[test]
    fn header_is_stable() {
        let h = csv_header();
        assert_eq!(h.len(), 1 + 4 + 11 + 12 + 16);
        assert_eq!(
            &h[..3],
            &["tick", "mean_risk_honest", "mean_risk_silent_truthful"]
        );
        assert_eq!(h[4], "mean_risk_noxious");
        assert!(h.contains(&"tp_noxious".to_string()));
        assert_eq!(h.last().unwrap(), "conf_responsive_liar_noxious");
    }

    #[test]
    fn csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = run_experiment(&WorldConfig {
            n_agents: 15,
            ticks: 25,
            ..Default::default()
        })
        .unwrap();
        let csv_path = dir.path().join("m.csv");
        write_csv(&csv_path, &rec.series).unwrap();
        assert_eq!(read_csv(&csv_path).unwrap(), rec.series);
        let json_path = dir.path().join("m.json");
        write_json(&json_path, &rec.series).unwrap();
        assert_eq!(read_json(&json_path).unwrap(), rec.series);
    }

    #[test]
    fn rejects_inconsistent_rows() {
        let dir = tempfile::tempdir().unwrap();
        let rec = run_experiment(&WorldConfig {
            n_agents: 10,
            ticks: 3,
            ..Default::default()
        })
        .unwrap();
        let path = dir.path().join("m.csv");
        write_csv(&path, &rec.series).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut cols: Vec<String> = lines[1].split(',').map(str::to_string).collect();
        cols[7] = "999999".into(); // messages
        lines[1] = cols.join(",");
        std::fs::write(&path, lines.join("\n")).unwrap();
        assert!(matches!(read_csv(&path), Err(CliError::Metrics { .. })));
    }
}
