//! Per-use (serverless) and per-resource (provisioned server) monthly cost
//! models, and the sweep that finds where per-use billing overtakes the
//! fixed server bill.
//!
//! Amounts are exact decimals; prices given as `f64` are converted through
//! their shortest decimal representation. Line items keep full precision and
//! `*_cents` accessors round half-up.

use std::str::FromStr;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("`{0}` must be a finite, non-negative number")]
    Negative(&'static str),
    #[error("days_per_month must be within 28..=31, got {0}")]
    MonthLength(u32),
    #[error("step must be positive")]
    ZeroStep,
}

/// Convert through the shortest round-trip decimal text of the float, so
/// `0.09` becomes exactly `0.09`.
pub fn dec(v: f64) -> Decimal {
    Decimal::from_str(&format!("{v}"))
        .or_else(|_| Decimal::from_scientific(&format!("{v:e}")))
        .unwrap_or_default()
}

pub fn round_cents(v: Decimal) -> Decimal {
    v.round_dp_with_strategy(2, RoundingStrategy::MidpointAwayFromZero)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSheet {
    pub write_free_per_day: f64,
    pub write_price_per_100k: f64,
    pub read_free_per_day: f64,
    pub read_price_per_100k: f64,
    pub storage_free_gb: f64,
    pub storage_price_gb_month: f64,
    pub egress_free_gb: f64,
    pub egress_price_gb: f64,
    pub vcpu_price_month: f64,
    pub memory_price_gb_month: f64,
    pub disk_price_gb_month: f64,
    pub server_egress_price_gb: f64,
    pub days_per_month: u32,
}

impl Default for PriceSheet {
    /// Serverless document-store free tier and prices, and a provisioned
    /// 1-vCPU relational server's resource prices, 30-day month.
    fn default() -> Self {
        PriceSheet {
            write_free_per_day: 20_000.0,
            write_price_per_100k: 0.09,
            read_free_per_day: 50_000.0,
            read_price_per_100k: 0.03,
            storage_free_gb: 1.0,
            storage_price_gb_month: 0.15,
            egress_free_gb: 10.0,
            egress_price_gb: 0.12,
            vcpu_price_month: 30.149,
            memory_price_gb_month: 5.11,
            disk_price_gb_month: 0.17,
            server_egress_price_gb: 0.19,
            days_per_month: 30,
        }
    }
}

impl PriceSheet {
    pub fn zero() -> Self {
        PriceSheet {
            write_free_per_day: 0.0,
            write_price_per_100k: 0.0,
            read_free_per_day: 0.0,
            read_price_per_100k: 0.0,
            storage_free_gb: 0.0,
            storage_price_gb_month: 0.0,
            egress_free_gb: 0.0,
            egress_price_gb: 0.0,
            vcpu_price_month: 0.0,
            memory_price_gb_month: 0.0,
            disk_price_gb_month: 0.0,
            server_egress_price_gb: 0.0,
            days_per_month: 30,
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let fields = [
            ("write_free_per_day", self.write_free_per_day),
            ("write_price_per_100k", self.write_price_per_100k),
            ("read_free_per_day", self.read_free_per_day),
            ("read_price_per_100k", self.read_price_per_100k),
            ("storage_free_gb", self.storage_free_gb),
            ("storage_price_gb_month", self.storage_price_gb_month),
            ("egress_free_gb", self.egress_free_gb),
            ("egress_price_gb", self.egress_price_gb),
            ("vcpu_price_month", self.vcpu_price_month),
            ("memory_price_gb_month", self.memory_price_gb_month),
            ("disk_price_gb_month", self.disk_price_gb_month),
            ("server_egress_price_gb", self.server_egress_price_gb),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(CostError::Negative(name));
        }
        if !(28..=31).contains(&self.days_per_month) {
            return Err(CostError::MonthLength(self.days_per_month));
        }
        Ok(())
    }
}

/// What the workload consumes. Operation counts apply on each of
/// `active_days_per_month` days; everything else is per month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageProfile {
    #[serde(default)]
    pub writes_per_day: f64,
    #[serde(default)]
    pub reads_per_day: f64,
    /// Days per month carrying the daily volumes; `None` means every day.
    #[serde(default)]
    pub active_days_per_month: Option<u32>,
    #[serde(default)]
    pub stored_gb: f64,
    #[serde(default)]
    pub egress_gb_per_month: f64,
    #[serde(default = "one")]
    pub months: f64,
    #[serde(default)]
    pub vcpus: f64,
    #[serde(default)]
    pub memory_gb: f64,
    #[serde(default)]
    pub disk_gb: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for UsageProfile {
    fn default() -> Self {
        UsageProfile {
            writes_per_day: 0.0,
            reads_per_day: 0.0,
            active_days_per_month: None,
            stored_gb: 0.0,
            egress_gb_per_month: 0.0,
            months: 1.0,
            vcpus: 0.0,
            memory_gb: 0.0,
            disk_gb: 0.0,
        }
    }
}

impl UsageProfile {
    /// One day creating and reading 10^6 documents, 1.9 GB stored for a month.
    pub fn one_day_burst() -> Self {
        UsageProfile {
            writes_per_day: 1_000_000.0,
            reads_per_day: 1_000_000.0,
            active_days_per_month: Some(1),
            stored_gb: 1.9,
            ..Default::default()
        }
    }

    /// 1 vCPU, 614.4 MB memory, 10 GB disk, 76 MB egress for a month.
    pub fn provisioned_server() -> Self {
        UsageProfile {
            vcpus: 1.0,
            memory_gb: 0.614,
            disk_gb: 10.0,
            egress_gb_per_month: 0.076,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let fields = [
            ("writes_per_day", self.writes_per_day),
            ("reads_per_day", self.reads_per_day),
            ("stored_gb", self.stored_gb),
            ("egress_gb_per_month", self.egress_gb_per_month),
            ("months", self.months),
            ("vcpus", self.vcpus),
            ("memory_gb", self.memory_gb),
            ("disk_gb", self.disk_gb),
        ];
        match fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            Some((name, _)) => Err(CostError::Negative(name)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLine {
    pub item: String,
    /// Quantity billed after the free tier, in the item's unit.
    pub billed: Decimal,
    pub amount: Decimal,
}

impl CostLine {
    pub fn amount_cents(&self) -> Decimal {
        round_cents(self.amount)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub lines: Vec<CostLine>,
    pub total: Decimal,
}

impl CostReport {
    fn from_lines(lines: Vec<CostLine>) -> Self {
        let total = lines.iter().map(|l| l.amount).sum();
        CostReport { lines, total }
    }

    pub fn total_cents(&self) -> Decimal {
        round_cents(self.total)
    }

    pub fn line(&self, item: &str) -> Option<&CostLine> {
        self.lines.iter().find(|l| l.item == item)
    }
}

fn billable(used: Decimal, free: Decimal) -> Decimal {
    (used - free).max(Decimal::ZERO)
}

/// Operations and storage beyond the free tier, summed over the month(s).
pub fn per_use_cost(usage: &UsageProfile, prices: &PriceSheet) -> Result<CostReport, CostError> {
    usage.validate()?;
    prices.validate()?;
    let months = dec(usage.months);
    let days = Decimal::from(usage.active_days_per_month.unwrap_or(prices.days_per_month));
    let hundred_k = Decimal::from(100_000);

    let ops_line = |item: &str, per_day: f64, free: f64, price: f64| {
        let per_day_billed = billable(dec(per_day), dec(free));
        let billed = per_day_billed * days * months;
        CostLine {
            item: item.to_string(),
            billed,
            amount: billed * dec(price) / hundred_k,
        }
    };
    let storage_billed = billable(dec(usage.stored_gb), dec(prices.storage_free_gb));
    let egress_billed = billable(dec(usage.egress_gb_per_month), dec(prices.egress_free_gb)) * months;
    Ok(CostReport::from_lines(vec![
        ops_line("writes", usage.writes_per_day, prices.write_free_per_day, prices.write_price_per_100k),
        ops_line("reads", usage.reads_per_day, prices.read_free_per_day, prices.read_price_per_100k),
        CostLine {
            item: "storage".into(),
            billed: storage_billed,
            amount: storage_billed * dec(prices.storage_price_gb_month) * months,
        },
        CostLine {
            item: "ingress".into(),
            billed: Decimal::ZERO,
            amount: Decimal::ZERO,
        },
        CostLine {
            item: "egress".into(),
            billed: egress_billed,
            amount: egress_billed * dec(prices.egress_price_gb),
        },
    ]))
}

/// Provisioned resources; independent of operation counts.
pub fn per_resource_cost(usage: &UsageProfile, prices: &PriceSheet) -> Result<CostReport, CostError> {
    usage.validate()?;
    prices.validate()?;
    let months = dec(usage.months);
    let line = |item: &str, qty: f64, price: f64| CostLine {
        item: item.to_string(),
        billed: dec(qty),
        amount: dec(qty) * dec(price) * months,
    };
    Ok(CostReport::from_lines(vec![
        line("vcpu", usage.vcpus, prices.vcpu_price_month),
        line("memory", usage.memory_gb, prices.memory_price_gb_month),
        line("storage", usage.disk_gb, prices.disk_price_gb_month),
        CostLine {
            item: "ingress".into(),
            billed: Decimal::ZERO,
            amount: Decimal::ZERO,
        },
        line("egress", usage.egress_gb_per_month, prices.server_egress_price_gb),
    ]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverPoint {
    pub ops_per_day: u64,
    pub per_use: Decimal,
    pub per_resource: Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub curve: Vec<CrossoverPoint>,
    /// First swept volume where per-use billing reaches the server bill.
    pub crossover_ops_per_day: Option<u64>,
}

impl Crossover {
    /// CSV with header `ops_per_day,per_use,per_resource`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ops_per_day,per_use,per_resource\n");
        for p in &self.curve {
            out.push_str(&format!("{},{},{}\n", p.ops_per_day, p.per_use, p.per_resource));
        }
        out
    }
}

/// Sweep reads/day = writes/day = k·step for k = 0..=steps every day of the
/// month over `base` (whose storage and egress stay fixed), against the
/// constant bill for `server`.
pub fn crossover(
    prices: &PriceSheet,
    base: &UsageProfile,
    server: &UsageProfile,
    step: u64,
    steps: u64,
) -> Result<Crossover, CostError> {
    if step == 0 {
        return Err(CostError::ZeroStep);
    }
    let per_resource = per_resource_cost(server, prices)?.total;
    let mut curve = Vec::with_capacity(steps as usize + 1);
    let mut first = None;
    for k in 0..=steps {
        let ops = k * step;
        let usage = UsageProfile {
            writes_per_day: ops as f64,
            reads_per_day: ops as f64,
            active_days_per_month: None,
            ..base.clone()
        };
        let per_use = per_use_cost(&usage, prices)?.total;
        if first.is_none() && per_use >= per_resource {
            first = Some(ops);
        }
        curve.push(CrossoverPoint {
            ops_per_day: ops,
            per_use,
            per_resource,
        });
    }
    Ok(Crossover {
        curve,
        crossover_ops_per_day: first,
    })
}
