//! Robot scanning cell: an event-driven simulation of one arm tending its
//! scanners, plus closed-form throughput figures.

mod config;
mod sim;
mod throughput;
mod trace;

pub use config::{
    Attendance, AttendanceWindow, CellConfig, ConfigError, FteShare, HandlingSplit, HandlingTime,
    Staffing, SECONDS_PER_HOUR, SECONDS_PER_WEEK,
};
pub use sim::{simulate, ScanCell, ScannerPhase};
pub use throughput::{
    fraction_of_theoretical, max_daily_excluding_aggregated, observed_vs_theoretical,
    productivity_ratio, theoretical_throughput, DailyCount, HumanParams, ProductivityRatio,
    ReportSource, RoboticParams, ThroughputError, ThroughputMode, ThroughputReport, Utilization,
    AGGREGATION_NOTE,
};
pub use trace::{Entity, SimTrace, TraceRecord, Transition};
