//! EIRP distribution, outage and mean rate per policy.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Result, SimError};
use crate::eval::EvalRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct EirpStats {
    /// `(eirp_dbm, fraction of slots at or below it)` at each distinct value.
    pub ecdf: Vec<(f64, f64)>,
    /// `(threshold_dbm, fraction of slots whose required EIRP exceeds it)`.
    pub outage: Vec<(f64, f64)>,
    pub mean_rate_bps: f64,
}

pub fn eirp_stats(records: &[EvalRecord], thresholds: &[f64]) -> Result<EirpStats> {
    if records.is_empty() {
        return Err(SimError::Core(isac_core::Error::EmptyDataset));
    }
    let n = records.len() as f64;
    let mut e: Vec<f64> = records.iter().map(|r| r.eirp_dbm).collect();
    e.sort_by(|a, b| a.total_cmp(b));
    let mut ecdf: Vec<(f64, f64)> = Vec::new();
    for (i, v) in e.iter().enumerate() {
        let y = (i + 1) as f64 / n;
        match ecdf.last_mut() {
            Some(last) if last.0 == *v => last.1 = y,
            _ => ecdf.push((*v, y)),
        }
    }
    let outage = thresholds
        .iter()
        .map(|&t| (t, records.iter().filter(|r| r.required_eirp_dbm > t).count() as f64 / n))
        .collect();
    let mean_rate_bps = records.iter().map(|r| r.rate_bps).sum::<f64>() / n;
    Ok(EirpStats {
        ecdf,
        outage,
        mean_rate_bps,
    })
}

/// Statistics per policy name, sorted by name.
pub fn eirp_stats_by_policy(records: &[EvalRecord], thresholds: &[f64]) -> Result<Vec<(String, EirpStats)>> {
    let mut groups: BTreeMap<&str, Vec<EvalRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.policy.as_str()).or_default().push(r.clone());
    }
    if groups.is_empty() {
        return Err(SimError::Core(isac_core::Error::EmptyDataset));
    }
    groups
        .into_iter()
        .map(|(p, rs)| Ok((p.to_string(), eirp_stats(&rs, thresholds)?)))
        .collect()
}

/// Rows `policy,kind,x,y` with kind `ecdf`, `outage` or `mean_rate`.
pub fn write_stats(path: &Path, stats: &[(String, EirpStats)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["policy", "kind", "x", "y"])?;
    for (p, s) in stats {
        for (x, y) in &s.ecdf {
            w.write_record([p.as_str(), "ecdf", &x.to_string(), &y.to_string()])?;
        }
        for (x, y) in &s.outage {
            w.write_record([p.as_str(), "outage", &x.to_string(), &y.to_string()])?;
        }
        w.write_record([p.as_str(), "mean_rate", "", &s.mean_rate_bps.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(policy: &str, eirp: f64, required: f64, rate: f64) -> EvalRecord {
        EvalRecord {
            trajectory_id: 0,
            slot: 0,
            policy: policy.into(),
            source: "optimizer".into(),
            gbs: 0,
            required_eirp_dbm: required,
            eirp_dbm: eirp,
            sinr_db: 0.0,
            rate_bps: rate,
            beampattern_gain: 0.0,
            total_power_mw: 0.0,
        }
    }

    #[test]
    fn equal_eirp_is_a_unit_step() {
        let r = vec![rec("a", 12.0, 12.0, 1.0); 4];
        let s = eirp_stats(&r, &[10.0, 15.0]).unwrap();
        assert_eq!(s.ecdf, vec![(12.0, 1.0)]);
        assert_eq!(s.outage, vec![(10.0, 1.0), (15.0, 0.0)]);
        assert_eq!(s.mean_rate_bps, 1.0);
    }

    #[test]
    fn ecdf_is_monotone_and_ends_at_one() {
        let r: Vec<_> = [5.0, 3.0, 9.0, 3.0, f64::NEG_INFINITY]
            .iter()
            .map(|&e| rec("a", e, e, 2.0))
            .collect();
        let s = eirp_stats(&r, &[4.0]).unwrap();
        assert_eq!(s.ecdf.len(), 4);
        assert!(s.ecdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        assert_eq!(s.ecdf.last().unwrap().1, 1.0);
        assert!((s.outage[0].1 - 0.4).abs() < 1e-15);
        assert!(eirp_stats(&[], &[1.0]).is_err());
    }

    #[test]
    fn grouped_by_policy() {
        let r = vec![rec("b", 1.0, 1.0, 1.0), rec("a", 2.0, 2.0, 3.0), rec("b", 3.0, 3.0, 5.0)];
        let g = eirp_stats_by_policy(&r, &[2.5]).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].0, "a");
        assert_eq!(g[1].1.mean_rate_bps, 3.0);
        assert_eq!(g[1].1.outage, vec![(2.5, 0.5)]);
    }
}
