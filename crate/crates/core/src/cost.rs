//! Cloud cost estimate from measured traffic and running time:
//! instances·rate·hours + egress_gb·egress_rate + disk_gb·disk_rate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::CommStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Plan {
    /// On-demand pricing.
    A,
    /// One-year commitment pricing.
    B,
}

impl FromStr for Plan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Plan::A),
            "B" => Ok(Plan::B),
            other => Err(Error::Parameter(format!("unknown pricing plan {other:?} (expected A or B)"))),
        }
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Plan::A => "A",
            Plan::B => "B",
        })
    }
}

/// Prices of one provider under one plan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub instance_per_hour: f64,
    pub disk_per_gb_hour: f64,
    pub egress_per_gb: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceEntry {
    pub provider: String,
    pub instance_type: String,
    pub plan: Plan,
    pub rates: Rates,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PricingTable {
    pub entries: Vec<PriceEntry>,
}

impl Default for PricingTable {
    /// GCP n4-standard-4, Azure D4s v4 and AWS m4.xlarge list prices.
    fn default() -> Self {
        let rows = [
            ("gcp", "n4-standard-4", [0.2338, 0.00012, 0.08], [0.1473, 0.00008, 0.08]),
            ("azure", "D4s v4", [0.192, 0.01315, 0.08], [0.134, 0.01315, 0.08]),
            ("aws", "m4.xlarge", [0.25, 0.00013, 0.09], [0.1787, 0.00013, 0.09]),
        ];
        let entries = rows
            .iter()
            .flat_map(|(p, t, a, b)| {
                [(Plan::A, a), (Plan::B, b)].map(|(plan, r)| PriceEntry {
                    provider: p.to_string(),
                    instance_type: t.to_string(),
                    plan,
                    rates: Rates { instance_per_hour: r[0], disk_per_gb_hour: r[1], egress_per_gb: r[2] },
                })
            })
            .collect();
        PricingTable { entries }
    }
}

impl PricingTable {
    /// Parses a JSON table and checks that every rate is nonnegative.
    pub fn from_json(text: &str) -> Result<Self> {
        let t: PricingTable = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            let r = e.rates;
            if [r.instance_per_hour, r.disk_per_gb_hour, r.egress_per_gb].iter().any(|v| !(v.is_finite() && *v >= 0.0))
            {
                return Err(Error::Parameter(format!("negative or invalid rate for {} plan {}", e.provider, e.plan)));
            }
        }
        Ok(())
    }

    pub fn providers(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.entries.iter().map(|e| e.provider.as_str()).collect();
        v.dedup();
        v
    }

    pub fn rates(&self, provider: &str, plan: Plan) -> Result<Rates> {
        self.entries
            .iter()
            .find(|e| e.provider.eq_ignore_ascii_case(provider) && e.plan == plan)
            .map(|e| e.rates)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "no price for provider {provider:?} plan {plan}; known providers: {}",
                    self.providers().join(", ")
                ))
            })
    }
}

/// Resources consumed by a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Usage {
    pub instances: u32,
    pub hours: f64,
    pub egress_gb: f64,
    pub disk_gb: f64,
}

impl Usage {
    /// Four instances; egress is every byte sent by any party (GB = 10^9 bytes).
    pub fn from_run(stats: &CommStats, seconds: f64, disk_gb: f64) -> Self {
        Usage { instances: 4, hours: seconds / 3600.0, egress_gb: stats.total().wire_bytes() as f64 / 1e9, disk_gb }
    }
}

/// Dollar cost of `usage` under the given provider and plan.
pub fn estimate(usage: &Usage, table: &PricingTable, provider: &str, plan: Plan) -> Result<f64> {
    for (name, v) in [("hours", usage.hours), ("egress_gb", usage.egress_gb), ("disk_gb", usage.disk_gb)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Parameter(format!("{name} must be a nonnegative number, got {v}")));
        }
    }
    let r = table.rates(provider, plan)?;
    Ok(usage.instances as f64 * r.instance_per_hour * usage.hours
        + usage.egress_gb * r.egress_per_gb
        + usage.disk_gb * r.disk_per_gb_hour)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_usage_is_free() {
        let u = Usage { instances: 4, hours: 0.0, egress_gb: 0.0, disk_gb: 0.0 };
        assert_eq!(estimate(&u, &PricingTable::default(), "gcp", Plan::A).unwrap(), 0.0);
    }

    #[test]
    fn unknown_provider_and_plan() {
        let u = Usage { instances: 4, hours: 1.0, egress_gb: 0.0, disk_gb: 0.0 };
        assert!(estimate(&u, &PricingTable::default(), "ibm", Plan::A).is_err());
        assert!("C".parse::<Plan>().is_err());
        assert_eq!("b".parse::<Plan>().unwrap(), Plan::B);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let t = PricingTable::default();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(PricingTable::from_json(&s).unwrap(), t);
        let bad = s.replacen("0.2338", "-1.0", 1);
        assert!(PricingTable::from_json(&bad).is_err());
    }
}
