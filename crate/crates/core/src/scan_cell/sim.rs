use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::config::{CellConfig, ConfigError, HandlingTime, SECONDS_PER_WEEK};
use super::throughput::{ReportSource, ThroughputReport};
use super::trace::{Entity, SimTrace, TraceRecord, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScannerPhase {
    IdleAwaitingLoad,
    LoadedAwaitingLid,
    Scanning,
    ScannedAwaitingUnload,
    StalledError,
    HopperEmptyLampOn,
}

fn to_ms(seconds: f64) -> u64 {
    (seconds * 1000.0).round() as u64
}

/// Input stack of prints separated by plates, print on top after loading.
#[derive(Debug, Clone, Copy)]
struct InputStack {
    /// `None` never runs dry.
    prints: Option<u64>,
    top_is_plate: bool,
}

impl InputStack {
    fn loaded(capacity: Option<u32>) -> Self {
        Self {
            prints: capacity.map(u64::from),
            top_is_plate: false,
        }
    }

    fn is_empty(&self) -> bool {
        self.prints == Some(0)
    }

    fn take_print(&mut self) {
        if let Some(p) = self.prints.as_mut() {
            *p -= 1;
        }
        self.top_is_plate = self.prints != Some(0);
    }

    fn take_plate(&mut self) {
        self.top_is_plate = false;
    }
}

#[derive(Debug, Clone)]
struct Scanner {
    phase: ScannerPhase,
    bed_has_print: bool,
    input: InputStack,
    /// Event that last made this scanner ready for the robot.
    ready_event: usize,
    completions: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Robot {
    Idle,
    Busy { at: usize, handling_ms: f64 },
    Stalled { at: usize, handling_ms: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Action {
    Arrive { scanner: usize },
    UnloadDone { scanner: usize },
    Sense { scanner: usize },
    LiftAttempt { scanner: usize, plate: bool, attempt: u32 },
    PlateStacked { scanner: usize },
    PrintPlaced { scanner: usize },
    ScanDone { scanner: usize },
    StallCleared { scanner: usize },
    ReloadDone { scanner: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Pending {
    time_ms: u64,
    seq: u64,
    action: Action,
    cause: usize,
}

/// Event-driven model of one robot arm tending its scanners.
///
/// Every transition is scheduled off a completed event (a successful lift,
/// a finished scan, a lid movement), never off a timer with slack, and the
/// trace records that event as the cause.
pub struct ScanCell {
    config: CellConfig,
    rng: ChaCha8Rng,
    horizon_ms: u64,
    queue: BinaryHeap<Reverse<Pending>>,
    seq: u64,
    trace: Vec<TraceRecord>,
    scanners: Vec<Scanner>,
    robot: Robot,
    last_served: usize,
    lift_failures: u64,
}

impl ScanCell {
    pub fn new(config: CellConfig, seed: u64, horizon_hours: f64) -> Result<Self, ConfigError> {
        config.validate()?;
        if !(horizon_hours.is_finite() && horizon_hours >= 0.0) {
            return Err(ConfigError::Invalid {
                field: "horizon",
                reason: format!("must be a non-negative number of hours, got {horizon_hours}"),
            });
        }
        let n = config.scanners_per_robot;
        let scanners = (0..n)
            .map(|_| Scanner {
                phase: ScannerPhase::IdleAwaitingLoad,
                bed_has_print: false,
                input: InputStack::loaded(config.hopper_capacity),
                ready_event: 0,
                completions: 0,
            })
            .collect();
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            horizon_ms: to_ms(horizon_hours * 3600.0),
            queue: BinaryHeap::new(),
            seq: 0,
            trace: Vec::new(),
            scanners,
            robot: Robot::Idle,
            last_served: n - 1,
            lift_failures: 0,
            config,
        })
    }

    pub fn run(mut self) -> (SimTrace, ThroughputReport) {
        if self.horizon_ms > 0 {
            let start = self.record(0, Entity::Cell, Transition::Start, None);
            self.dispatch_robot(0, start);
            while let Some(Reverse(next)) = self.queue.pop() {
                if next.time_ms > self.horizon_ms {
                    break;
                }
                self.handle(next);
            }
        }
        let trace = SimTrace {
            records: self.trace,
        };
        let phases = self.scanners.iter().map(|s| s.phase).collect();
        let completions = self.scanners.iter().map(|s| s.completions).collect();
        let report = ThroughputReport::from_trace(
            &self.config,
            &trace,
            self.horizon_ms,
            completions,
            phases,
            self.lift_failures,
        );
        (trace, report)
    }

    fn record(
        &mut self,
        time_ms: u64,
        entity: Entity,
        transition: Transition,
        cause: Option<usize>,
    ) -> usize {
        self.trace.push(TraceRecord {
            time_ms,
            entity,
            transition,
            cause,
        });
        self.trace.len() - 1
    }

    fn schedule(&mut self, time_ms: u64, action: Action, cause: usize) {
        self.seq += 1;
        self.queue.push(Reverse(Pending {
            time_ms,
            seq: self.seq,
            action,
            cause,
        }));
    }

    fn sample_handling_ms(&mut self, now_ms: u64) -> f64 {
        let seconds = match self.config.handling_time {
            HandlingTime::Fixed { mean_seconds } => mean_seconds,
            HandlingTime::Uniform {
                mean_seconds,
                half_width_seconds,
            } => {
                if half_width_seconds == 0.0 {
                    mean_seconds
                } else {
                    self.rng.random_range(
                        mean_seconds - half_width_seconds..=mean_seconds + half_width_seconds,
                    )
                }
            }
            HandlingTime::Lognormal {
                mean_seconds,
                sigma,
            } => {
                if sigma == 0.0 {
                    mean_seconds
                } else {
                    let mu = mean_seconds.ln() - sigma * sigma / 2.0;
                    LogNormal::new(mu, sigma)
                        .expect("validated sigma")
                        .sample(&mut self.rng)
                }
            }
        };
        let week = (now_ms as f64 / 1000.0 / SECONDS_PER_WEEK).floor() as i32;
        seconds * 1000.0 / self.config.ramp_multiplier.powi(week)
    }

    fn needs_robot(&self, s: usize) -> bool {
        matches!(
            self.scanners[s].phase,
            ScannerPhase::IdleAwaitingLoad | ScannerPhase::ScannedAwaitingUnload
        )
    }

    /// Sends an idle robot to the next scanner in rotation that needs it.
    fn dispatch_robot(&mut self, now: u64, robot_free_event: usize) {
        if self.robot != Robot::Idle {
            return;
        }
        let n = self.scanners.len();
        let Some(s) = (1..=n)
            .map(|k| (self.last_served + k) % n)
            .find(|&s| self.needs_robot(s))
        else {
            return;
        };
        self.last_served = s;
        // Reserve the arm now; its arrival is caused by whichever of the two
        // enabling events completed last.
        self.robot = Robot::Busy {
            at: s,
            handling_ms: 0.0,
        };
        let cause = robot_free_event.max(self.scanners[s].ready_event);
        self.schedule(now, Action::Arrive { scanner: s }, cause);
    }

    fn handling_ms(&self) -> f64 {
        match self.robot {
            Robot::Busy { handling_ms, .. } | Robot::Stalled { handling_ms, .. } => handling_ms,
            Robot::Idle => 0.0,
        }
    }

    fn leg_ms(&self, fraction: f64) -> u64 {
        (self.handling_ms() * fraction).round() as u64
    }

    fn release_robot(&mut self, now: u64, s: usize, cause: usize) -> usize {
        let id = self.record(now, Entity::Robot { at: s }, Transition::RobotRelease, Some(cause));
        self.robot = Robot::Idle;
        id
    }

    fn handle(&mut self, p: Pending) {
        let now = p.time_ms;
        let split = self.config.handling_split;
        match p.action {
            Action::Arrive { scanner: s } => {
                let handling_ms = self.sample_handling_ms(now);
                self.robot = Robot::Busy { at: s, handling_ms };
                let id = self.record(now, Entity::Robot { at: s }, Transition::RobotArrive, Some(p.cause));
                if self.scanners[s].bed_has_print {
                    let t = now + self.leg_ms(split.unload);
                    self.schedule(t, Action::UnloadDone { scanner: s }, id);
                } else {
                    self.schedule(now, Action::Sense { scanner: s }, id);
                }
            }
            Action::UnloadDone { scanner: s } => {
                let id = self.record(now, Entity::Scanner(s), Transition::PrintUnloaded, Some(p.cause));
                let sc = &mut self.scanners[s];
                sc.bed_has_print = false;
                sc.phase = ScannerPhase::IdleAwaitingLoad;
                self.schedule(now, Action::Sense { scanner: s }, id);
            }
            Action::Sense { scanner: s } => {
                let input = self.scanners[s].input;
                if input.is_empty() {
                    let lamp = self.record(now, Entity::InputHopper(s), Transition::SensedLamp, Some(p.cause));
                    self.scanners[s].phase = ScannerPhase::HopperEmptyLampOn;
                    self.schedule_reload(now, s, lamp);
                    let released = self.release_robot(now, s, lamp);
                    self.dispatch_robot(now, released);
                } else {
                    let (transition, plate) = if input.top_is_plate {
                        (Transition::SensedPlate, true)
                    } else {
                        (Transition::SensedPrint, false)
                    };
                    let id = self.record(now, Entity::InputHopper(s), transition, Some(p.cause));
                    self.schedule(
                        now,
                        Action::LiftAttempt {
                            scanner: s,
                            plate,
                            attempt: 1,
                        },
                        id,
                    );
                }
            }
            Action::LiftAttempt {
                scanner: s,
                plate,
                attempt,
            } => self.lift_attempt(now, s, plate, attempt, p.cause),
            Action::PlateStacked { scanner: s } => {
                let id = self.record(now, Entity::OutputHopper(s), Transition::PlateStacked, Some(p.cause));
                self.schedule(now, Action::Sense { scanner: s }, id);
            }
            Action::PrintPlaced { scanner: s } => {
                let placed = self.record(now, Entity::Scanner(s), Transition::PrintPlaced, Some(p.cause));
                self.scanners[s].bed_has_print = true;
                self.scanners[s].phase = ScannerPhase::LoadedAwaitingLid;
                let released = self.release_robot(now, s, placed);
                let lid = self.record(now, Entity::Scanner(s), Transition::LidLowered, Some(released));
                let started = self.record(now, Entity::Scanner(s), Transition::ScanStarted, Some(lid));
                self.scanners[s].phase = ScannerPhase::Scanning;
                let done = now + to_ms(self.config.scan_seconds);
                self.schedule(done, Action::ScanDone { scanner: s }, started);
                self.dispatch_robot(now, released);
            }
            Action::ScanDone { scanner: s } => {
                let done = self.record(now, Entity::Scanner(s), Transition::ScanCompleted, Some(p.cause));
                let lifted = self.record(now, Entity::Scanner(s), Transition::LidLifted, Some(done));
                let sc = &mut self.scanners[s];
                sc.completions += 1;
                sc.phase = ScannerPhase::ScannedAwaitingUnload;
                sc.ready_event = lifted;
                if let Robot::Idle = self.robot {
                    self.dispatch_robot(now, lifted);
                }
            }
            Action::StallCleared { scanner: s } => {
                let id = self.record(now, Entity::Cell, Transition::StallCleared, Some(p.cause));
                let handling_ms = self.handling_ms();
                self.robot = Robot::Busy { at: s, handling_ms };
                self.scanners[s].phase = ScannerPhase::IdleAwaitingLoad;
                self.schedule(now, Action::Sense { scanner: s }, id);
            }
            Action::ReloadDone { scanner: s } => {
                let id = self.record(now, Entity::InputHopper(s), Transition::HopperReloaded, Some(p.cause));
                let sc = &mut self.scanners[s];
                sc.input = InputStack::loaded(self.config.hopper_capacity);
                sc.phase = ScannerPhase::IdleAwaitingLoad;
                sc.ready_event = id;
                self.dispatch_robot(now, id);
            }
        }
    }

    fn lift_attempt(&mut self, now: u64, s: usize, plate: bool, attempt: u32, cause: usize) {
        let failed = self.config.lift_failure_prob > 0.0
            && self.rng.random::<f64>() < self.config.lift_failure_prob;
        if failed {
            self.lift_failures += 1;
            let transition = if plate {
                Transition::MagnetLiftFailed
            } else {
                Transition::VacuumLiftFailed
            };
            let id = self.record(now, Entity::Robot { at: s }, transition, Some(cause));
            if attempt < self.config.lift_retry_limit {
                // Vacuum retries press down harder before lifting again.
                let t = now + to_ms(self.config.retry_seconds);
                let next = Action::LiftAttempt {
                    scanner: s,
                    plate,
                    attempt: attempt + 1,
                };
                self.schedule(t, next, id);
            } else {
                self.stall(now, s, id);
            }
            return;
        }

        let split = self.config.handling_split;
        if plate {
            let id = self.record(now, Entity::InputHopper(s), Transition::PlateLifted, Some(cause));
            self.scanners[s].input.take_plate();
            let t = now + self.leg_ms(split.plate);
            self.schedule(t, Action::PlateStacked { scanner: s }, id);
        } else {
            let id = self.record(now, Entity::InputHopper(s), Transition::PrintLifted, Some(cause));
            self.scanners[s].input.take_print();
            let t = now + self.leg_ms(split.load);
            self.schedule(t, Action::PrintPlaced { scanner: s }, id);
        }
    }

    /// Retries exhausted: the whole cell waits for a worker.
    fn stall(&mut self, now: u64, s: usize, cause: usize) {
        let id = self.record(now, Entity::Cell, Transition::CellStalled, Some(cause));
        let handling_ms = self.handling_ms();
        self.robot = Robot::Stalled { at: s, handling_ms };
        self.scanners[s].phase = ScannerPhase::StalledError;
        let now_s = now as f64 / 1000.0;
        if let Some(present) = self.config.attendance.next_presence(now_s) {
            let t = to_ms(present + self.config.recovery_seconds).max(now);
            self.schedule(t, Action::StallCleared { scanner: s }, id);
        }
    }

    fn schedule_reload(&mut self, now: u64, s: usize, lamp: usize) {
        if self.config.hopper_capacity.is_none() {
            return;
        }
        let Some(reload_s) = self.config.reload_seconds else {
            return;
        };
        if let Some(present) = self.config.attendance.next_presence(now as f64 / 1000.0) {
            let t = to_ms(present + reload_s).max(now);
            self.schedule(t, Action::ReloadDone { scanner: s }, lamp);
        }
    }
}

/// Runs one cell for `horizon_hours` of simulated time.
pub fn simulate(
    config: &CellConfig,
    seed: u64,
    horizon_hours: f64,
) -> Result<(SimTrace, ThroughputReport), ConfigError> {
    Ok(ScanCell::new(config.clone(), seed, horizon_hours)?.run())
}

impl ThroughputReport {
    fn from_trace(
        config: &CellConfig,
        trace: &SimTrace,
        horizon_ms: u64,
        per_scanner_completions: Vec<u64>,
        final_phases: Vec<ScannerPhase>,
        lift_failures: u64,
    ) -> Self {
        let n = config.scanners_per_robot;
        let mut robot_busy = 0u64;
        let mut robot_since: Option<u64> = None;
        let mut scanning = vec![0u64; n];
        let mut scan_since: Vec<Option<u64>> = vec![None; n];
        let mut stalled = 0u64;
        let mut stall_since: Option<u64> = None;
        for r in &trace.records {
            match (r.transition, r.entity) {
                (Transition::RobotArrive, _) => robot_since = Some(r.time_ms),
                (Transition::RobotRelease, _) => {
                    robot_busy += r.time_ms - robot_since.take().unwrap_or(r.time_ms)
                }
                (Transition::ScanStarted, Entity::Scanner(s)) => scan_since[s] = Some(r.time_ms),
                (Transition::ScanCompleted, Entity::Scanner(s)) => {
                    scanning[s] += r.time_ms - scan_since[s].take().unwrap_or(r.time_ms)
                }
                (Transition::CellStalled, _) => stall_since = Some(r.time_ms),
                (Transition::StallCleared, _) => {
                    stalled += r.time_ms - stall_since.take().unwrap_or(r.time_ms)
                }
                _ => {}
            }
        }
        robot_busy += robot_since.map_or(0, |t| horizon_ms - t);
        for (total, since) in scanning.iter_mut().zip(&scan_since) {
            *total += since.map_or(0, |t| horizon_ms - t);
        }
        stalled += stall_since.map_or(0, |t| horizon_ms - t);
        // Time stalled is not productive robot time.
        let robot_busy = robot_busy.saturating_sub(stalled);

        let hours = horizon_ms as f64 / 3_600_000.0;
        let scans_completed: u64 = per_scanner_completions.iter().sum();
        let per_hour = if hours > 0.0 {
            scans_completed as f64 / hours
        } else {
            0.0
        };
        let fraction = |ms: u64| {
            if horizon_ms > 0 {
                ms as f64 / horizon_ms as f64
            } else {
                0.0
            }
        };
        let per_scanner_hour = per_hour / n as f64;
        let per_scanner_week = per_scanner_hour * 168.0;
        ThroughputReport {
            source: ReportSource::Simulation,
            scanners: n as u32,
            horizon_hours: hours,
            scans_completed,
            per_scanner_completions,
            scans_per_hour: per_hour,
            scans_per_scanner_hour: per_scanner_hour,
            scans_per_scanner_week: per_scanner_week,
            scans_per_worker_week: config.staffing.worker_fte.per_full_time(
                per_scanner_week * config.staffing.scanners_per_worker as f64,
            ),
            scans_per_day: per_hour * 24.0,
            scans_per_week: per_hour * 168.0,
            robot_utilization: Some(fraction(robot_busy)),
            scanner_utilization: scanning.into_iter().map(fraction).collect(),
            stall_seconds: stalled as f64 / 1000.0,
            lift_failures,
            final_phases,
        }
    }
}
