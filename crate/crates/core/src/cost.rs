//! Timing model for one tag session and for the reader's serial backhaul.
//!
//! Arithmetic is exact over rationals; values are rounded half-up to two
//! decimals only when formatted.

use std::fmt;

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

type Q = Ratio<u128>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostParams {
    pub hash_cycles_per_block: u64,
    pub tag_clock_hz: u64,
    pub t2r_rate_bps: u64,
    pub r2t_rate_bps: u64,
    pub serial_rate_bps: u64,
    pub lambda_bits: u64,
    pub tag_hash_ops: u64,
    /// Broadcast candidates received by the tag.
    pub candidates: u64,
    /// Defaults to `2λ` (`x^t` and `σ'`).
    pub t2r_bits: Option<u64>,
    /// Defaults to `λ + 2λc` (`x^s` plus one `σ, δ` pair per candidate).
    pub r2t_bits: Option<u64>,
    /// Bits forwarded to the back end per tag. Defaults to `2λ`.
    pub serial_bits_per_tag: Option<u64>,
    /// Tags in one batch for the aggregate backhaul figure.
    pub batch_tags: u64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self::with_lambda(64)
    }
}

impl CostParams {
    pub fn with_lambda(lambda_bits: u64) -> Self {
        Self {
            hash_cycles_per_block: 33,
            tag_clock_hz: 100_000,
            t2r_rate_bps: 640_000,
            r2t_rate_bps: 126_000,
            serial_rate_bps: 20_000,
            lambda_bits,
            tag_hash_ops: 4,
            candidates: 1,
            t2r_bits: None,
            r2t_bits: None,
            serial_bits_per_tag: None,
            batch_tags: 200,
        }
    }

    pub fn t2r_bits(&self) -> u64 {
        self.t2r_bits.unwrap_or(2 * self.lambda_bits)
    }

    pub fn r2t_bits(&self) -> u64 {
        self.r2t_bits
            .unwrap_or(self.lambda_bits + 2 * self.lambda_bits * self.candidates)
    }

    pub fn serial_bits_per_tag(&self) -> u64 {
        self.serial_bits_per_tag.unwrap_or(2 * self.lambda_bits)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hash_cycles_per_block", self.hash_cycles_per_block),
            ("tag_clock_hz", self.tag_clock_hz),
            ("t2r_rate_bps", self.t2r_rate_bps),
            ("r2t_rate_bps", self.r2t_rate_bps),
            ("serial_rate_bps", self.serial_rate_bps),
            ("lambda_bits", self.lambda_bits),
            ("tag_hash_ops", self.tag_hash_ops),
            ("candidates", self.candidates),
            ("t2r_bits", self.t2r_bits()),
            ("r2t_bits", self.r2t_bits()),
            ("serial_bits_per_tag", self.serial_bits_per_tag()),
            ("batch_tags", self.batch_tags),
        ];
        match positive.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(Error::InvalidParameter(format!("{name} must be positive"))),
            None => Ok(()),
        }
    }
}

/// An exact duration, shown rounded to two decimals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Quantity(Q);

impl Quantity {
    pub fn exact(&self) -> Ratio<u128> {
        self.0
    }

    /// Round half-up to `places` decimals.
    pub fn round(&self, places: u32) -> String {
        let scale = 10u128.pow(places);
        let scaled = (self.0 * Q::from_integer(scale) + Q::new(1, 2)).floor().to_integer();
        if places == 0 {
            return scaled.to_string();
        }
        format!(
            "{}.{:0width$}",
            scaled / scale,
            scaled % scale,
            width = places as usize
        )
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.round(2))
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: f64 = self.round(2).parse().expect("decimal string");
        s.serialize_f64(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub hash_time_ms: Quantity,
    pub tag_compute_ms: Quantity,
    pub t2r_ms: Quantity,
    pub r2t_ms: Quantity,
    pub total_ms: Quantity,
    /// `total_ms` to one decimal.
    pub total_approx_ms: String,
    pub single_serial_ms: Quantity,
    pub batch_tags: u64,
    pub batch_serial_s: Quantity,
    pub t2r_bits: u64,
    pub r2t_bits: u64,
    pub serial_bits_per_tag: u64,
}

fn ratio(num: u64, den: u64) -> Q {
    Q::new(num as u128, den as u128)
}

pub fn compute_cost(p: &CostParams) -> Result<CostReport> {
    p.validate()?;
    let ms = Q::from_integer(1000);
    let hash = ratio(p.hash_cycles_per_block, p.tag_clock_hz) * ms;
    let tag_compute = hash * Q::from_integer(p.tag_hash_ops as u128);
    let t2r = ratio(p.t2r_bits(), p.t2r_rate_bps) * ms;
    let r2t = ratio(p.r2t_bits(), p.r2t_rate_bps) * ms;
    let total = tag_compute + t2r + r2t;
    let single_serial = ratio(p.serial_bits_per_tag(), p.serial_rate_bps) * ms;
    let batch = ratio(p.serial_bits_per_tag() * p.batch_tags, p.serial_rate_bps);
    Ok(CostReport {
        hash_time_ms: Quantity(hash),
        tag_compute_ms: Quantity(tag_compute),
        t2r_ms: Quantity(t2r),
        r2t_ms: Quantity(r2t),
        total_ms: Quantity(total),
        total_approx_ms: Quantity(total).round(1),
        single_serial_ms: Quantity(single_serial),
        batch_tags: p.batch_tags,
        batch_serial_s: Quantity(batch),
        t2r_bits: p.t2r_bits(),
        r2t_bits: p.r2t_bits(),
        serial_bits_per_tag: p.serial_bits_per_tag(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BudgetLimits {
    /// Upper end of the time available for one reading/authentication.
    pub window_max_ms: u64,
    /// Lower end of the same window.
    pub window_min_ms: u64,
    pub tags_per_second: u64,
}

impl Default for BudgetLimits {
    fn default() -> Self {
        Self {
            window_max_ms: 10,
            window_min_ms: 5,
            tags_per_second: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub check: &'static str,
    pub value_ms: Quantity,
    pub limit_ms: Quantity,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BudgetVerdict {
    pub pass: bool,
    pub findings: Vec<Finding>,
}

pub fn check_budget(report: &CostReport, limits: &BudgetLimits) -> Result<BudgetVerdict> {
    if limits.tags_per_second == 0 {
        return Err(Error::InvalidParameter("tags_per_second must be positive".into()));
    }
    let total = report.total_ms;
    let finding = |check, limit: Q| Finding {
        check,
        value_ms: total,
        limit_ms: Quantity(limit),
        pass: total.0 <= limit,
    };
    let findings = vec![
        finding("window_max", Q::from_integer(limits.window_max_ms as u128)),
        finding("window_min", Q::from_integer(limits.window_min_ms as u128)),
        finding("reading_speed", ratio(1000, limits.tags_per_second)),
    ];
    Ok(BudgetVerdict {
        pass: findings.iter().all(|f| f.pass),
        findings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(Quantity(Q::new(1, 200)).round(2), "0.01");
        assert_eq!(Quantity(Q::new(1, 201)).round(2), "0.00");
        assert_eq!(Quantity(Q::new(3, 1)).round(2), "3.00");
        assert_eq!(Quantity(Q::new(305, 100)).round(1), "3.1");
        assert_eq!(Quantity(Q::new(7, 2)).round(0), "4");
    }

    #[test]
    fn doubling_bits_doubles_time() {
        let p = CostParams::default();
        let mut q = p.clone();
        q.t2r_bits = Some(2 * p.t2r_bits());
        let a = compute_cost(&p).unwrap();
        let b = compute_cost(&q).unwrap();
        assert_eq!(b.t2r_ms.exact(), a.t2r_ms.exact() * Q::from_integer(2));
    }

    #[test]
    fn total_is_sum_of_parts() {
        for lambda in [16, 64, 128, 256] {
            let r = compute_cost(&CostParams::with_lambda(lambda)).unwrap();
            assert_eq!(
                r.total_ms.exact(),
                r.tag_compute_ms.exact() + r.t2r_ms.exact() + r.r2t_ms.exact()
            );
        }
    }

    #[test]
    fn rejects_zero_rates() {
        let p = CostParams {
            r2t_rate_bps: 0,
            ..CostParams::default()
        };
        assert!(compute_cost(&p).is_err());
    }
}
