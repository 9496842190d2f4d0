//! Emissions-trajectory model: a piecewise-linear world pathway, exponential
//! growth of the ICT share, and the budget arithmetic derived from both.
//!
//! The world pathway is configuration data (anchor points in Mt CO2 per
//! year); nothing here is a climate model beyond linear interpolation and
//! the two published linear identities (budget exhaustion, transient warming
//! response).

use serde::{Deserialize, Serialize};
use std::io::Read;
use thiserror::Error;

/// Transient warming response: degrees C per 1000 Gt of cumulative CO2.
pub const WARMING_C_PER_1000_GT: f64 = 0.45;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("pathway needs at least two anchors, got {0}")]
    TooFewAnchors(usize),
    #[error("anchor years must be strictly increasing (violated at index {0})")]
    AnchorsNotIncreasing(usize),
    #[error("emissions must be non-negative, got {value} at index {index}")]
    NegativeEmissions { index: usize, value: f64 },
    #[error("query range {start}..={end} outside anchor range {lo}..={hi}")]
    RangeOutsideAnchors {
        start: i32,
        end: i32,
        lo: i32,
        hi: i32,
    },
    #[error("empty year range {start}..={end}")]
    EmptyRange { start: i32, end: i32 },
    #[error("growth rate {0} is below -1 (more than total collapse)")]
    GrowthBelowCollapse(f64),
    #[error("expected a positive annual value, got {0}")]
    NonPositiveAnnual(f64),
    #[error("expected a non-negative value, got {0}")]
    NegativeInput(f64),
    #[error("series mismatch: {0}")]
    SeriesMismatch(String),
    #[error("pathway file: {0}")]
    BadPathwayFile(String),
}

/// Anchor points of a world emissions pathway, in Mt CO2 per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayAnchors {
    pub name: String,
    /// (year, Mt CO2/yr), strictly increasing years, at least two points.
    pub points: Vec<(i32, f64)>,
}

impl PathwayAnchors {
    pub fn new(name: impl Into<String>, points: Vec<(i32, f64)>) -> Result<Self, TrajectoryError> {
        if points.len() < 2 {
            return Err(TrajectoryError::TooFewAnchors(points.len()));
        }
        for (i, window) in points.windows(2).enumerate() {
            if window[1].0 <= window[0].0 {
                return Err(TrajectoryError::AnchorsNotIncreasing(i + 1));
            }
        }
        for (i, &(_, v)) in points.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(TrajectoryError::NegativeEmissions { index: i, value: v });
            }
        }
        Ok(Self {
            name: name.into(),
            points,
        })
    }

    pub fn first_year(&self) -> i32 {
        self.points[0].0
    }

    pub fn last_year(&self) -> i32 {
        self.points[self.points.len() - 1].0
    }

    /// First anchor year at which the pathway reaches zero, if any.
    pub fn net_zero_year(&self) -> Option<i32> {
        self.points.iter().find(|(_, v)| *v == 0.0).map(|(y, _)| *y)
    }

    /// Reads `year,emissions_mt` rows. Lines starting with `#` are comments.
    pub fn from_csv_reader(name: &str, reader: impl Read) -> Result<Self, TrajectoryError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut points = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record =
                record.map_err(|e| TrajectoryError::BadPathwayFile(format!("row {}: {e}", i + 1)))?;
            if record.len() < 2 {
                return Err(TrajectoryError::BadPathwayFile(format!(
                    "row {}: expected year,emissions_mt",
                    i + 1
                )));
            }
            let year: i32 = record[0].parse().map_err(|e| {
                TrajectoryError::BadPathwayFile(format!("row {}: bad year: {e}", i + 1))
            })?;
            let value: f64 = record[1].parse().map_err(|e| {
                TrajectoryError::BadPathwayFile(format!("row {}: bad emissions: {e}", i + 1))
            })?;
            points.push((year, value));
        }
        Self::new(name, points)
    }
}

/// Annual emissions values, one per year from `start_year`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySeries {
    pub start_year: i32,
    pub values: Vec<f64>,
}

impl TrajectorySeries {
    pub fn year(&self, k: usize) -> i32 {
        self.start_year + k as i32
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Piecewise-linear interpolation of the pathway at integer years.
/// Exact at anchor years.
pub fn interpolate_pathway(
    anchors: &PathwayAnchors,
    start_year: i32,
    end_year: i32,
) -> Result<TrajectorySeries, TrajectoryError> {
    if start_year > end_year {
        return Err(TrajectoryError::EmptyRange {
            start: start_year,
            end: end_year,
        });
    }
    let (lo, hi) = (anchors.first_year(), anchors.last_year());
    if start_year < lo || end_year > hi {
        return Err(TrajectoryError::RangeOutsideAnchors {
            start: start_year,
            end: end_year,
            lo,
            hi,
        });
    }
    let mut values = Vec::with_capacity((end_year - start_year + 1) as usize);
    let mut seg = 0usize;
    for year in start_year..=end_year {
        while anchors.points[seg + 1].0 < year {
            seg += 1;
        }
        let (y0, v0) = anchors.points[seg];
        let (y1, v1) = anchors.points[seg + 1];
        let value = if year == y0 {
            v0
        } else if year == y1 {
            v1
        } else {
            v0 + (v1 - v0) * f64::from(year - y0) / f64::from(y1 - y0)
        };
        values.push(value);
    }
    Ok(TrajectorySeries { start_year, values })
}

/// Exponential projection of ICT emissions: `values[k] = base * (1+rate)^k`
/// for `k` in `0..=n_years`.
pub fn project_ict_emissions(
    base_year: i32,
    base_value: f64,
    growth_rate: f64,
    n_years: usize,
) -> Result<TrajectorySeries, TrajectoryError> {
    if base_value < 0.0 || !base_value.is_finite() {
        return Err(TrajectoryError::NegativeInput(base_value));
    }
    if growth_rate < -1.0 || !growth_rate.is_finite() {
        return Err(TrajectoryError::GrowthBelowCollapse(growth_rate));
    }
    let factor = 1.0 + growth_rate;
    let mut values = Vec::with_capacity(n_years + 1);
    let mut current = base_value;
    for _ in 0..=n_years {
        values.push(current);
        current *= factor;
    }
    Ok(TrajectorySeries {
        start_year: base_year,
        values,
    })
}

/// ICT share of world emissions, in percent per year.
///
/// A year where the world pathway is zero yields `f64::INFINITY`: pathways
/// that reach net zero are expected inputs, so the saturation is data, not
/// an error.
pub fn share_series(
    world: &TrajectorySeries,
    ict: &TrajectorySeries,
) -> Result<Vec<f64>, TrajectoryError> {
    if world.start_year != ict.start_year {
        return Err(TrajectoryError::SeriesMismatch(format!(
            "start years differ: {} vs {}",
            world.start_year, ict.start_year
        )));
    }
    if world.len() != ict.len() {
        return Err(TrajectoryError::SeriesMismatch(format!(
            "lengths differ: {} vs {}",
            world.len(),
            ict.len()
        )));
    }
    Ok(world
        .values
        .iter()
        .zip(&ict.values)
        .map(|(&w, &i)| if w == 0.0 { f64::INFINITY } else { 100.0 * i / w })
        .collect())
}

/// Years until a carbon budget is spent at a constant annual rate.
pub fn budget_exhaustion_years(budget_gt: f64, annual_gt: f64) -> Result<f64, TrajectoryError> {
    if !(annual_gt > 0.0) {
        return Err(TrajectoryError::NonPositiveAnnual(annual_gt));
    }
    if budget_gt < 0.0 || !budget_gt.is_finite() {
        return Err(TrajectoryError::NegativeInput(budget_gt));
    }
    Ok(budget_gt / annual_gt)
}

/// Transient warming from cumulative emissions, 0.45 degrees C per 1000 Gt.
pub fn warming_from_emissions(cumulative_gt: f64) -> Result<f64, TrajectoryError> {
    if cumulative_gt < 0.0 || !cumulative_gt.is_finite() {
        return Err(TrajectoryError::NegativeInput(cumulative_gt));
    }
    Ok(WARMING_C_PER_1000_GT * cumulative_gt / 1000.0)
}

/// One output row of the trajectory table emitted by the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub year: i32,
    pub world_mt: f64,
    pub ict_mt: f64,
    pub share_pct: f64,
}

/// World pathway, ICT projection and share over the full anchor range.
///
/// The ICT projection is anchored at `base_year` with `base_value`; the table
/// starts at `base_year`, which must lie inside the anchor range.
pub fn trajectory_table(
    anchors: &PathwayAnchors,
    growth_rate: f64,
    base_year: i32,
    base_value: f64,
) -> Result<Vec<TrajectoryRow>, TrajectoryError> {
    let end_year = anchors.last_year();
    let world = interpolate_pathway(anchors, base_year, end_year)?;
    let n_years = (end_year - base_year) as usize;
    let ict = project_ict_emissions(base_year, base_value, growth_rate, n_years)?;
    let shares = share_series(&world, &ict)?;
    Ok((0..world.len())
        .map(|k| TrajectoryRow {
            year: world.year(k),
            world_mt: world.values[k],
            ict_mt: ict.values[k],
            share_pct: shares[k],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_anchor() -> PathwayAnchors {
        PathwayAnchors::new("test", vec![(2020, 40000.0), (2030, 20000.0)]).unwrap()
    }

    #[test]
    fn interpolation_linear_midpoint() {
        let series = interpolate_pathway(&two_anchor(), 2025, 2025).unwrap();
        assert_eq!(series.values, vec![30000.0]);
    }

    #[test]
    fn interpolation_exact_at_anchor() {
        let series = interpolate_pathway(&two_anchor(), 2020, 2030).unwrap();
        assert_eq!(series.values[0], 40000.0);
        assert_eq!(series.values[10], 20000.0);
    }

    #[test]
    fn interpolation_second_segment() {
        // Hand interpolation on (2030,20000)..(2050,0): 2040 sits at the midpoint.
        let anchors =
            PathwayAnchors::new("t", vec![(2020, 40000.0), (2030, 20000.0), (2050, 0.0)]).unwrap();
        let series = interpolate_pathway(&anchors, 2040, 2040).unwrap();
        assert_relative_eq!(series.values[0], 10000.0, max_relative = 1e-12);
    }

    #[test]
    fn interpolation_rejects_out_of_range() {
        let err = interpolate_pathway(&two_anchor(), 2019, 2030).unwrap_err();
        assert!(matches!(err, TrajectoryError::RangeOutsideAnchors { .. }));
        let err = interpolate_pathway(&two_anchor(), 2020, 2031).unwrap_err();
        assert!(matches!(err, TrajectoryError::RangeOutsideAnchors { .. }));
    }

    #[test]
    fn anchors_validated() {
        assert!(matches!(
            PathwayAnchors::new("t", vec![(2020, 1.0)]),
            Err(TrajectoryError::TooFewAnchors(1))
        ));
        assert!(matches!(
            PathwayAnchors::new("t", vec![(2020, 1.0), (2020, 2.0)]),
            Err(TrajectoryError::AnchorsNotIncreasing(1))
        ));
        assert!(matches!(
            PathwayAnchors::new("t", vec![(2020, 1.0), (2030, -2.0)]),
            Err(TrajectoryError::NegativeEmissions { .. })
        ));
    }

    #[test]
    fn projection_zero_growth_is_constant() {
        let series = project_ict_emissions(2010, 1000.0, 0.0, 5).unwrap();
        assert_eq!(series.values, vec![1000.0; 6]);
    }

    #[test]
    fn projection_closed_form_final_value() {
        // 1000 * 1.06^12, computed independently.
        let series = project_ict_emissions(2010, 1000.0, 0.06, 12).unwrap();
        assert_eq!(series.values.len(), 13);
        assert_relative_eq!(
            series.values[12],
            2012.1964718355514,
            max_relative = 1e-12
        );
    }

    #[test]
    fn projection_total_collapse() {
        let series = project_ict_emissions(2010, 1000.0, -1.0, 3).unwrap();
        assert_eq!(series.values, vec![1000.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn projection_rejects_rate_below_collapse() {
        assert!(matches!(
            project_ict_emissions(2010, 1000.0, -1.01, 3),
            Err(TrajectoryError::GrowthBelowCollapse(_))
        ));
    }

    #[test]
    fn share_identity_is_100() {
        let s = TrajectorySeries {
            start_year: 2010,
            values: vec![123.0, 45.0, 6.0],
        };
        let shares = share_series(&s, &s).unwrap();
        for v in shares {
            assert_relative_eq!(v, 100.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn share_simple_ratio() {
        let world = TrajectorySeries {
            start_year: 2010,
            values: vec![40000.0; 4],
        };
        let ict = TrajectorySeries {
            start_year: 2010,
            values: vec![1000.0; 4],
        };
        assert_eq!(share_series(&world, &ict).unwrap(), vec![2.5; 4]);
    }

    #[test]
    fn share_zero_world_saturates() {
        let world = TrajectorySeries {
            start_year: 2010,
            values: vec![10.0, 0.0],
        };
        let ict = TrajectorySeries {
            start_year: 2010,
            values: vec![5.0, 5.0],
        };
        let shares = share_series(&world, &ict).unwrap();
        assert_eq!(shares[0], 50.0);
        assert!(shares[1].is_infinite());
    }

    #[test]
    fn share_against_declining_world_strictly_increases() {
        // Brute-force check over the whole series.
        let anchors =
            PathwayAnchors::new("t", vec![(2020, 40000.0), (2030, 20000.0), (2050, 1000.0)])
                .unwrap();
        let world = interpolate_pathway(&anchors, 2020, 2050).unwrap();
        let ict = project_ict_emissions(2020, 800.0, 0.06, 30).unwrap();
        let shares = share_series(&world, &ict).unwrap();
        for pair in shares.windows(2) {
            assert!(pair[1] > pair[0], "shares not increasing: {pair:?}");
        }
    }

    #[test]
    fn budget_paper_constants() {
        // 130 Gt remaining budget at 42 Gt/yr.
        let years = budget_exhaustion_years(130.0, 42.0).unwrap();
        assert_relative_eq!(years, 3.0952380952380953, max_relative = 1e-12);
        assert!((3.0..=3.2).contains(&years));
    }

    #[test]
    fn budget_edge_cases() {
        assert_eq!(budget_exhaustion_years(0.0, 42.0).unwrap(), 0.0);
        assert_eq!(budget_exhaustion_years(84.0, 42.0).unwrap(), 2.0);
        assert!(budget_exhaustion_years(10.0, 0.0).is_err());
        assert!(budget_exhaustion_years(10.0, -1.0).is_err());
        assert!(budget_exhaustion_years(-1.0, 42.0).is_err());
    }

    #[test]
    fn warming_identity() {
        assert_eq!(warming_from_emissions(1000.0).unwrap(), 0.45);
        assert_eq!(warming_from_emissions(0.0).unwrap(), 0.0);
        assert_relative_eq!(warming_from_emissions(500.0).unwrap(), 0.225);
        assert!(warming_from_emissions(-1.0).is_err());
    }

    #[test]
    fn pathway_csv_round_trip() {
        let csv = "# approximate anchors\nyear,emissions_mt\n2010,36000\n2050,0\n";
        let anchors = PathwayAnchors::from_csv_reader("t", csv.as_bytes()).unwrap();
        assert_eq!(anchors.points, vec![(2010, 36000.0), (2050, 0.0)]);
        assert_eq!(anchors.net_zero_year(), Some(2050));
    }

    #[test]
    fn table_covers_anchor_range() {
        let anchors =
            PathwayAnchors::new("t", vec![(2010, 36000.0), (2030, 20000.0), (2050, 0.0)]).unwrap();
        let rows = trajectory_table(&anchors, 0.06, 2010, 730.0).unwrap();
        assert_eq!(rows.len(), 41);
        assert_eq!(rows[0].year, 2010);
        assert_eq!(rows[40].year, 2050);
        assert!(rows[40].share_pct.is_infinite());
    }

    proptest! {
        #[test]
        fn interpolation_monotone_on_monotone_segments(
            v0 in 0.0..50000.0f64,
            v1 in 0.0..50000.0f64,
        ) {
            let anchors = PathwayAnchors::new("t", vec![(2000, v0), (2020, v1)]).unwrap();
            let series = interpolate_pathway(&anchors, 2000, 2020).unwrap();
            for pair in series.values.windows(2) {
                if v1 >= v0 {
                    prop_assert!(pair[1] >= pair[0] - 1e-9);
                } else {
                    prop_assert!(pair[1] <= pair[0] + 1e-9);
                }
            }
        }

        #[test]
        fn projection_positive_rate_strictly_increases(
            base in 1.0..10000.0f64,
            rate in 0.001..0.5f64,
        ) {
            let series = project_ict_emissions(2010, base, rate, 20).unwrap();
            for pair in series.values.windows(2) {
                prop_assert!(pair[1] > pair[0]);
            }
        }

        #[test]
        fn share_of_identical_series_is_100(values in prop::collection::vec(1.0..1e6f64, 1..40)) {
            let s = TrajectorySeries { start_year: 2000, values };
            let shares = share_series(&s, &s).unwrap();
            for v in shares {
                prop_assert!((v - 100.0).abs() < 1e-9);
            }
        }

        #[test]
        fn budget_is_scale_invariant(
            budget in 0.0..1e4f64,
            annual in 0.1..100.0f64,
            k in 0.01..100.0f64,
        ) {
            let a = budget_exhaustion_years(budget, annual).unwrap();
            let b = budget_exhaustion_years(k * budget, k * annual).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
