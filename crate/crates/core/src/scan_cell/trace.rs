use std::fmt;
use std::io;

use serde::Serialize;

use super::config::CellConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entity {
    Cell,
    /// The arm, tagged with the scanner it is working on.
    Robot { at: usize },
    Scanner(usize),
    InputHopper(usize),
    OutputHopper(usize),
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Cell => f.write_str("cell"),
            Entity::Robot { at } => write!(f, "robot@scanner{at}"),
            Entity::Scanner(i) => write!(f, "scanner{i}"),
            Entity::InputHopper(i) => write!(f, "input{i}"),
            Entity::OutputHopper(i) => write!(f, "output{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transition {
    Start,
    RobotArrive,
    /// Scanned print moved from the bed to the output hopper.
    PrintUnloaded,
    SensedPrint,
    SensedPlate,
    /// The optical sensor sees the lamp under an empty hopper.
    SensedLamp,
    VacuumLiftFailed,
    MagnetLiftFailed,
    PlateLifted,
    PlateStacked,
    PrintLifted,
    PrintPlaced,
    RobotRelease,
    LidLowered,
    ScanStarted,
    ScanCompleted,
    LidLifted,
    CellStalled,
    StallCleared,
    HopperReloaded,
}

impl Transition {
    pub fn name(self) -> &'static str {
        match self {
            Transition::Start => "start",
            Transition::RobotArrive => "robot_arrive",
            Transition::PrintUnloaded => "print_unloaded",
            Transition::SensedPrint => "sensed_print",
            Transition::SensedPlate => "sensed_plate",
            Transition::SensedLamp => "sensed_lamp",
            Transition::VacuumLiftFailed => "vacuum_lift_failed",
            Transition::MagnetLiftFailed => "magnet_lift_failed",
            Transition::PlateLifted => "plate_lifted",
            Transition::PlateStacked => "plate_stacked",
            Transition::PrintLifted => "print_lifted",
            Transition::PrintPlaced => "print_placed",
            Transition::RobotRelease => "robot_release",
            Transition::LidLowered => "lid_lowered",
            Transition::ScanStarted => "scan_started",
            Transition::ScanCompleted => "scan_completed",
            Transition::LidLifted => "lid_lifted",
            Transition::CellStalled => "cell_stalled",
            Transition::StallCleared => "stall_cleared",
            Transition::HopperReloaded => "hopper_reloaded",
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One state change. Its id is its index in the trace; `cause` is the id of
/// the completed event that triggered it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub time_ms: u64,
    pub entity: Entity,
    pub transition: Transition,
    pub cause: Option<usize>,
}

#[derive(Serialize)]
struct CsvRow {
    time_ms: u64,
    entity: String,
    transition: &'static str,
    cause_event_id: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimTrace {
    pub records: Vec<TraceRecord>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, transition: Transition) -> usize {
        self.records
            .iter()
            .filter(|r| r.transition == transition)
            .count()
    }

    /// CSV with header `time_ms,entity,transition,cause_event_id`; event ids
    /// are zero-based row numbers excluding the header.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        if self.records.is_empty() {
            w.write_record(["time_ms", "entity", "transition", "cause_event_id"])?;
        }
        for r in &self.records {
            w.serialize(CsvRow {
                time_ms: r.time_ms,
                entity: r.entity.to_string(),
                transition: r.transition.name(),
                cause_event_id: r.cause,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Event times never decrease.
    pub fn check_time_order(&self) -> Result<(), String> {
        match self
            .records
            .windows(2)
            .position(|w| w[1].time_ms < w[0].time_ms)
        {
            Some(i) => Err(format!("event {} goes back in time", i + 1)),
            None => Ok(()),
        }
    }

    /// Every event but the first names an earlier, already completed event
    /// as its cause.
    pub fn check_causality(&self) -> Result<(), String> {
        for (id, r) in self.records.iter().enumerate() {
            match (id, r.cause) {
                (0, None) => {}
                (0, Some(_)) => return Err("initial event has a cause".into()),
                (_, None) => return Err(format!("event {id} has no cause")),
                (_, Some(c)) if c >= id => {
                    return Err(format!("event {id} is caused by later event {c}"))
                }
                (_, Some(c)) if self.records[c].time_ms > r.time_ms => {
                    return Err(format!("event {id} precedes its cause {c}"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The robot works on one scanner at a time, scans on one scanner never
    /// overlap, and no scan starts or runs with the lid up.
    pub fn check_mutual_exclusion(&self, scanners: usize) -> Result<(), String> {
        let mut robot_at: Option<usize> = None;
        let mut lid_down = vec![false; scanners];
        let mut scanning = vec![false; scanners];
        for (id, r) in self.records.iter().enumerate() {
            let err = |msg: &str| Err(format!("event {id} ({}): {msg}", r.transition));
            match (r.transition, r.entity) {
                (Transition::RobotArrive, Entity::Robot { at }) => {
                    if let Some(busy) = robot_at {
                        return err(&format!("robot already busy at scanner{busy}"));
                    }
                    robot_at = Some(at);
                }
                (Transition::RobotRelease, Entity::Robot { at }) => {
                    if robot_at != Some(at) {
                        return err("robot released from a scanner it was not working on");
                    }
                    robot_at = None;
                }
                (Transition::LidLowered, Entity::Scanner(s)) => {
                    if lid_down[s] {
                        return err("lid already down");
                    }
                    lid_down[s] = true;
                }
                (Transition::ScanStarted, Entity::Scanner(s)) => {
                    if !lid_down[s] {
                        return err("scan started with the lid open");
                    }
                    if scanning[s] {
                        return err("overlapping scans");
                    }
                    if robot_at == Some(s) {
                        return err("robot still at the scanner");
                    }
                    scanning[s] = true;
                }
                (Transition::ScanCompleted, Entity::Scanner(s)) => {
                    if !scanning[s] {
                        return err("scan completed without starting");
                    }
                    scanning[s] = false;
                }
                (Transition::LidLifted, Entity::Scanner(s)) => {
                    if scanning[s] {
                        return err("lid lifted during a scan");
                    }
                    lid_down[s] = false;
                }
                (Transition::PrintPlaced | Transition::PrintUnloaded, Entity::Scanner(s)) => {
                    if robot_at != Some(s) {
                        return err("bed touched without the robot");
                    }
                    if lid_down[s] {
                        return err("bed touched with the lid down");
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Replays stock movements and checks that input + in-transit + beds +
    /// output equals the initial stock plus reloads, for prints and plates,
    /// after every event.
    pub fn check_conservation(&self, config: &CellConfig) -> Result<(), String> {
        let n = config.scanners_per_robot;
        // An unlimited hopper starts with a stock too large to exhaust.
        let capacity = config.hopper_capacity.map_or(1 << 40, |c| c as i64);
        let plates_per_load = capacity - 1;
        let mut stock = Stock {
            prints_input: capacity * n as i64,
            plates_input: plates_per_load * n as i64,
            ..Default::default()
        };
        let mut added_prints = 0i64;
        let mut added_plates = 0i64;
        let initial_prints = stock.prints_input;
        let initial_plates = stock.plates_input;
        let mut beds = vec![0i64; n];

        for (id, r) in self.records.iter().enumerate() {
            match r.transition {
                Transition::PrintLifted => {
                    stock.prints_input -= 1;
                    stock.prints_transit += 1;
                }
                Transition::PrintPlaced => {
                    stock.prints_transit -= 1;
                    stock.prints_beds += 1;
                    if let Entity::Scanner(s) = r.entity {
                        beds[s] += 1;
                    }
                }
                Transition::PrintUnloaded => {
                    stock.prints_beds -= 1;
                    stock.prints_output += 1;
                    if let Entity::Scanner(s) = r.entity {
                        beds[s] -= 1;
                    }
                }
                Transition::PlateLifted => {
                    stock.plates_input -= 1;
                    stock.plates_transit += 1;
                }
                Transition::PlateStacked => {
                    stock.plates_transit -= 1;
                    stock.plates_output += 1;
                }
                Transition::HopperReloaded => {
                    stock.prints_input += capacity;
                    stock.plates_input += plates_per_load;
                    added_prints += capacity;
                    added_plates += plates_per_load;
                }
                _ => {}
            }
            if !stock.non_negative() || beds.iter().any(|&b| !(0..=1).contains(&b)) {
                return Err(format!("event {id}: negative stock or overfull bed: {stock:?}"));
            }
            if stock.prints() != initial_prints + added_prints {
                return Err(format!("event {id}: print count drifted: {stock:?}"));
            }
            if stock.plates() != initial_plates + added_plates {
                return Err(format!("event {id}: plate count drifted: {stock:?}"));
            }
            if stock.prints_transit + stock.plates_transit > 1 {
                return Err(format!("event {id}: robot holds two items"));
            }
        }
        Ok(())
    }

    pub fn check_all(&self, config: &CellConfig) -> Result<(), String> {
        self.check_time_order()?;
        self.check_causality()?;
        self.check_mutual_exclusion(config.scanners_per_robot)?;
        self.check_conservation(config)
    }
}

#[derive(Debug, Default)]
struct Stock {
    prints_input: i64,
    prints_transit: i64,
    prints_beds: i64,
    prints_output: i64,
    plates_input: i64,
    plates_transit: i64,
    plates_output: i64,
}

impl Stock {
    fn prints(&self) -> i64 {
        self.prints_input + self.prints_transit + self.prints_beds + self.prints_output
    }
    fn plates(&self) -> i64 {
        self.plates_input + self.plates_transit + self.plates_output
    }
    fn non_negative(&self) -> bool {
        [
            self.prints_input,
            self.prints_transit,
            self.prints_beds,
            self.prints_output,
            self.plates_input,
            self.plates_transit,
            self.plates_output,
        ]
        .iter()
        .all(|&v| v >= 0)
    }
}
