//! Action-pool size comparison between the full space and the equipartition pool.

use std::fmt::Write;
use std::ops::RangeInclusive;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::policy::{partition_shape, pool_size_closed_form};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolSizeRow {
    pub users: usize,
    /// `(E+1)^I`: local or any edge server per user.
    pub full_without_cloud: BigUint,
    /// `(E+2)^I`: local, any edge server, or cloud per user.
    pub full_with_cloud: BigUint,
    /// Exact equipartition pool size over edge-only groups.
    pub equipartition: BigUint,
    /// `I! / (floor(I/E)!)^E`, the looser count that ignores the larger groups.
    pub bound: BigUint,
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, k| acc * BigUint::from(k))
}

pub fn pool_size_report(users: RangeInclusive<usize>, servers: usize) -> Result<Vec<PoolSizeRow>> {
    if servers == 0 {
        return Err(Error::invalid("servers", "must be >= 1"));
    }
    if *users.start() < servers {
        return Err(Error::invalid(
            "users",
            format!("range must start at >= servers ({servers}), got {}", users.start()),
        ));
    }
    users
        .map(|i| {
            let shape = partition_shape(i, servers)?;
            Ok(PoolSizeRow {
                users: i,
                full_without_cloud: BigUint::from(servers + 1).pow(i as u32),
                full_with_cloud: BigUint::from(servers + 2).pow(i as u32),
                equipartition: pool_size_closed_form(i, servers)?,
                bound: factorial(i) / factorial(shape.base_size).pow(servers as u32),
            })
        })
        .collect()
}

/// Renders the report as a whitespace-aligned table.
pub fn format_pool_size_table(rows: &[PoolSizeRow]) -> String {
    let header = ["users", "full_no_cloud", "full_with_cloud", "equipartition", "bound"];
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.users.to_string(),
                r.full_without_cloud.to_string(),
                r.full_with_cloud.to_string(),
                r.equipartition.to_string(),
                r.bound.to_string(),
            ]
        })
        .collect();
    let width: Vec<usize> = (0..5)
        .map(|c| cells.iter().map(|row| row[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, row: &[&str]| {
        let parts: Vec<String> = row.iter().zip(&width).map(|(s, w)| format!("{s:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  "));
    };
    line(&mut out, &header);
    for row in &cells {
        line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_rows() {
        let rows = pool_size_report(4..=6, 2).unwrap();
        assert_eq!(rows[0].full_without_cloud, BigUint::from(81u32));
        assert_eq!(rows[0].equipartition, BigUint::from(6u32));
        assert_eq!(rows[2].full_without_cloud, BigUint::from(729u32));
        assert_eq!(rows[2].full_with_cloud, BigUint::from(4096u32));
        assert_eq!(rows[2].equipartition, BigUint::from(20u32));
        assert_eq!(rows[2].bound, BigUint::from(20u32));
        // odd count: 5!/(2!3!) = 10 exact, 5!/(2!2!) = 30 bound
        assert_eq!(rows[1].equipartition, BigUint::from(10u32));
        assert_eq!(rows[1].bound, BigUint::from(30u32));
    }

    #[test]
    fn single_server_column_is_one() {
        for r in pool_size_report(1..=12, 1).unwrap() {
            assert_eq!(r.equipartition, BigUint::from(1u32));
        }
    }

    #[test]
    fn bad_ranges() {
        assert!(pool_size_report(1..=4, 2).is_err());
        assert!(pool_size_report(3..=4, 0).is_err());
    }

    #[test]
    fn table_has_a_row_per_user_count() {
        let text = format_pool_size_table(&pool_size_report(4..=10, 2).unwrap());
        assert_eq!(text.lines().count(), 8);
        assert!(text.lines().next().unwrap().contains("equipartition"));
    }
}
