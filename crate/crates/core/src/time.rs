//! Clock times on the 10-minute arrival grid.
//!
//! All times are stored as integer minutes after 8:00 so that equality and
//! the ±10 / ±20 steps used throughout the analysis are exact.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Minutes after 8:00 of the 9:00 deadline.
pub const NINE_AM: i32 = 60;

/// Grid spacing between consecutive arrival times.
pub const STEP: i32 = 10;

/// Formats minutes after 8:00 as `H:MM`.
pub fn format_clock(minutes_after_8: i32) -> String {
    let total = 8 * 60 + minutes_after_8;
    format!("{}:{:02}", total.div_euclid(60), total.rem_euclid(60))
}

/// Formats fractional minutes after 8:00, rounded to the nearest minute.
pub fn format_clock_f64(minutes_after_8: f64) -> String {
    format_clock(minutes_after_8.round() as i32)
}

/// Parses `H:MM` into minutes after 8:00.
pub fn parse_clock(s: &str) -> Result<i32> {
    let bad = || Error::InvalidTime(s.to_string());
    let (h, m) = s.trim().split_once(':').ok_or_else(bad)?;
    if h.is_empty() || m.len() != 2 {
        return Err(bad());
    }
    let h: i32 = h.parse().map_err(|_| bad())?;
    let m: i32 = m.parse().map_err(|_| bad())?;
    if !(0..24).contains(&h) || !(0..60).contains(&m) {
        return Err(bad());
    }
    Ok(h * 60 + m - 8 * 60)
}

/// An arrival time on the 10-minute grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArrivalTime(i32);

impl ArrivalTime {
    /// 9:00, the earliest time at which the canteen is off limits.
    pub const NINE: ArrivalTime = ArrivalTime(NINE_AM);

    pub fn from_minutes(minutes_after_8: i32) -> Result<Self> {
        if minutes_after_8.rem_euclid(STEP) != 0 {
            return Err(Error::InvalidTime(format_clock(minutes_after_8)));
        }
        Ok(ArrivalTime(minutes_after_8))
    }

    /// Builds a time from an hour and minute, e.g. `hm(8, 40)`.
    ///
    /// Panics if the minute is not on the grid; meant for literals.
    pub fn hm(hour: i32, minute: i32) -> Self {
        Self::from_minutes((hour - 8) * 60 + minute).expect("time on the 10-minute grid")
    }

    pub fn minutes(self) -> i32 {
        self.0
    }

    /// Shifts by a signed number of minutes (must keep the grid).
    pub fn offset(self, minutes: i32) -> Self {
        debug_assert_eq!(minutes.rem_euclid(STEP), 0);
        ArrivalTime(self.0 + minutes)
    }

    pub fn is_before_nine(self) -> bool {
        self.0 < NINE_AM
    }
}

impl fmt::Display for ArrivalTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_clock(self.0))
    }
}

impl FromStr for ArrivalTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_minutes(parse_clock(s)?)
    }
}

impl Serialize for ArrivalTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ArrivalTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A clock time at minute resolution, used for cut-off thresholds that fall
/// between grid points (8:55 and the like).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockTime(i32);

impl ClockTime {
    pub fn from_minutes(minutes_after_8: i32) -> Self {
        ClockTime(minutes_after_8)
    }

    pub fn hm(hour: i32, minute: i32) -> Self {
        ClockTime((hour - 8) * 60 + minute)
    }

    pub fn minutes(self) -> i32 {
        self.0
    }
}

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_clock(self.0))
    }
}

impl FromStr for ClockTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_clock(s).map(ClockTime)
    }
}

/// The configurable window `[tmin, tmax]` of arrival times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeRange {
    tmin: ArrivalTime,
    tmax: ArrivalTime,
}

impl TimeRange {
    /// Validates `tmin <= 8:50`, `tmax >= 9:00`.
    pub fn new(tmin: ArrivalTime, tmax: ArrivalTime) -> Result<Self> {
        if tmin.minutes() > NINE_AM - STEP || tmax.minutes() < NINE_AM {
            return Err(Error::InvalidRange { tmin, tmax });
        }
        Ok(TimeRange { tmin, tmax })
    }

    /// Parses both ends from `H:MM` strings.
    pub fn parse(tmin: &str, tmax: &str) -> Result<Self> {
        Self::new(tmin.parse()?, tmax.parse()?)
    }

    /// `[8:10, 9:10]`, the window used by the formal analysis.
    pub fn analysis() -> Self {
        TimeRange {
            tmin: ArrivalTime::hm(8, 10),
            tmax: ArrivalTime::hm(9, 10),
        }
    }

    /// `[8:00, 9:10]`, the window used in live sessions.
    pub fn live() -> Self {
        TimeRange {
            tmin: ArrivalTime::hm(8, 0),
            tmax: ArrivalTime::hm(9, 10),
        }
    }

    pub fn tmin(&self) -> ArrivalTime {
        self.tmin
    }

    pub fn tmax(&self) -> ArrivalTime {
        self.tmax
    }

    /// Number of grid points, `(tmax - tmin) / 10 + 1`.
    pub fn len(&self) -> usize {
        ((self.tmax.minutes() - self.tmin.minutes()) / STEP) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: ArrivalTime) -> bool {
        self.tmin <= t && t <= self.tmax
    }

    /// Grid times in increasing order.
    pub fn times(
        &self,
    ) -> impl DoubleEndedIterator<Item = ArrivalTime> + ExactSizeIterator + Clone {
        let tmin = self.tmin;
        (0..self.len()).map(move |i| tmin.offset(i as i32 * STEP))
    }

    /// Position of `t` on the grid, if it lies in range.
    pub fn index_of(&self, t: ArrivalTime) -> Option<usize> {
        self.contains(t)
            .then(|| ((t.minutes() - self.tmin.minutes()) / STEP) as usize)
    }
}

impl Default for TimeRange {
    fn default() -> Self {
        Self::live()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_round_trip() {
        for s in ["8:00", "8:40", "9:00", "9:10", "7:50"] {
            let m = parse_clock(s).unwrap();
            assert_eq!(format_clock(m), s);
        }
        assert_eq!(parse_clock("9:00").unwrap(), NINE_AM);
    }

    #[test]
    fn rejects_off_grid_and_garbage() {
        assert!("8:45".parse::<ArrivalTime>().is_err());
        assert!("8:5".parse::<ArrivalTime>().is_err());
        assert!("noon".parse::<ArrivalTime>().is_err());
        assert!("8:60".parse::<ArrivalTime>().is_err());
        assert_eq!("8:55".parse::<ClockTime>().unwrap(), ClockTime::hm(8, 55));
    }

    #[test]
    fn range_validation() {
        assert!(TimeRange::parse("8:50", "9:00").is_ok());
        assert!(matches!(
            TimeRange::parse("9:00", "9:10"),
            Err(Error::InvalidRange { .. })
        ));
        assert!(matches!(
            TimeRange::parse("8:10", "8:50"),
            Err(Error::InvalidRange { .. })
        ));
        let r = TimeRange::analysis();
        assert_eq!(r.len(), 7);
        assert_eq!(r.index_of(ArrivalTime::hm(8, 50)), Some(4));
        assert_eq!(r.index_of(ArrivalTime::hm(8, 0)), None);
    }

    #[test]
    fn times_serialize_as_clock_strings() {
        let t = ArrivalTime::hm(8, 40);
        assert_eq!(serde_json::to_string(&t).unwrap(), "\"8:40\"");
        let back: ArrivalTime = serde_json::from_str("\"9:00\"").unwrap();
        assert_eq!(back, ArrivalTime::NINE);
    }
}
